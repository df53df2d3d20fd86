"""Norms of the depolarizing channel computed three ways.

For the completely depolarizing channel on d x d matrices the q->p norm is
d^(1/p - 1/q). The power iteration and the ellipsoid method both return
certified intervals around it.
"""

import math

from mixedschatten import boyd_solve_general, norm_qp_cp
from mixedschatten.channels import depolarizing_channel
from mixedschatten.oracles import brute_norm_qp

for d in (2, 3):
    phi = depolarizing_channel(d)
    for q, p in ((4, 2), (math.inf, 1), (3, 1.5)):
        exact = d ** (1 / p - 1 / q)
        b = boyd_solve_general(phi, q, p, eps=1e-6)
        e = norm_qp_cp(phi, q, p, eps=1e-6)
        o, _ = brute_norm_qp(phi, q, p, restarts=8, steps=300)
        print(f"d={d} q={q} p={p}: exact {exact:.6f}  power iteration [{b.value_lo:.6f}, {b.value_hi:.6f}]"
              f"  ellipsoid [{e.value_lo:.6f}, {e.value_hi:.6f}]  ascent {o:.6f}")
