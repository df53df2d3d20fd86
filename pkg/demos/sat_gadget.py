"""Gap between satisfiable and unsatisfiable 2-out-of-4-SAT gadgets.

A satisfiable instance attains the gadget bound f(eta, d, p) on a proper
certificate. An unsatisfiable one stays strictly below it.
"""

from mixedschatten.sat import all_patterns_instance, gap_certify, single_clause_instance

for name, inst in (("single clause", single_clause_instance()), ("all sign patterns", all_patterns_instance())):
    for p in (2, "inf"):
        rep = gap_certify(inst, 1.0, p)
        top = rep.get("certificate_value", rep.get("max_proper_value"))
        print(f"{name:18s} p={p:3}: satisfiable={rep['satisfiable']!s:5}  best {top:.6f}  bound {rep['gadget_bound']:.6f}")
