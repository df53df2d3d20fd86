import io
import itertools
import json
import math
import subprocess
import sys
import time

import jsonschema
import numpy as np
import pytest

from mixedschatten.channels import (
    depolarizing_channel,
    linear_combination,
    random_cptp,
    random_measure_prepare,
    save_map,
    unitary_channel,
)
from mixedschatten.cli import RESULT_SCHEMA, Refusal, SolveRequest, InputError, main, route
from mixedschatten.sat import all_patterns_instance, save_instance, single_clause_instance


def run(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    text = buf.getvalue()
    doc = json.loads(text) if text.lstrip().startswith("{") else None
    if doc is not None:
        jsonschema.validate(doc, RESULT_SCHEMA)
    return code, doc, text


@pytest.fixture
def maps(tmp_path):
    rng = np.random.default_rng(1)
    Z = np.diag([1.0, -1.0])
    paths = {}
    for name, phi in {
        "cptp": random_cptp(2, rng),
        "depol": depolarizing_channel(3),
        "diff": linear_combination([1, -1], [depolarizing_channel(2), unitary_channel(Z)]),
        "mp_diff": linear_combination([1, -1], [random_measure_prepare(2, rng), random_measure_prepare(2, rng)]),
    }.items():
        paths[name] = str(tmp_path / f"{name}.json")
        save_map(phi, paths[name])
    return paths


def test_compute_boyd_route(maps):
    code, doc, _ = run(["compute", "--map", maps["cptp"], "--q", "4", "--p", "2"])
    assert code == 0 and doc["status"] == "ok"
    assert doc["provenance"]["route"] == "boyd"
    r = doc["result"]
    assert r["value_lo"] <= r["value"] <= r["value_hi"]
    code, doc2, _ = run(["compute", "--map", maps["cptp"], "--q", "4", "--p", "2", "--method", "ellipsoid"])
    assert code == 0
    assert max(r["value_lo"], doc2["result"]["value_lo"]) <= min(r["value_hi"], doc2["result"]["value_hi"]) + 1e-9


def test_compute_ellipsoid_and_exact(maps):
    code, doc, _ = run(["compute", "--map", maps["depol"], "--q", "inf", "--p", "3", "--eps", "1e-5"])
    assert code == 0 and doc["provenance"]["route"] == "ellipsoid"
    assert doc["result"]["value"] == pytest.approx(3 ** (1 / 3), rel=1e-4)
    code, doc, _ = run(["compute", "--map", maps["diff"], "--q", "2", "--p", "2"])
    assert code == 0 and doc["provenance"]["route"] == "exact22"
    code, doc, _ = run(["compute", "--map", maps["cptp"], "--q", "4/3", "--p", "1"])
    assert code == 0 and doc["request"]["q"] == "4/3"


def test_refusals_and_oracle_fallback(maps):
    code, doc, _ = run(["compute", "--map", maps["mp_diff"], "--q", "1", "--p", "1", "--mode", "norm_positive"])
    assert code == 2
    assert doc["refusal"]["tag"] == "np-complete:positive-1to1-noncp"
    assert "oracle" in doc["refusal"]["fallback"]
    code, doc, _ = run(["compute", "--map", maps["cptp"], "--q", "1", "--p", "2"])
    assert code == 2 and doc["refusal"]["tag"] == "np-hard:1top-cp"
    code, doc, _ = run(["compute", "--map", maps["cptp"], "--q", "2", "--p", "3"])
    assert code == 2 and doc["refusal"]["tag"] == "np-hard:hypercontractive"
    code, doc, _ = run(["compute", "--map", maps["mp_diff"], "--q", "1", "--p", "1", "--mode", "norm_positive",
                        "--method", "oracle"])
    assert code == 0 and doc["result"]["certified_upper"] is False
    assert doc["result"]["value_hi"] == "inf"


def test_cb_command(maps):
    code, doc, _ = run(["cb", "--map", maps["diff"], "--p", "1", "--eps", "1e-5"])
    assert code == 0 and doc["provenance"]["route"] == "cb_norm_1p"
    # depolarizing minus Z conjugation on a maximally entangled input: I/4 - |psi><psi|, trace norm 3/2
    assert doc["result"]["value"] == pytest.approx(1.5, abs=1e-3)
    code, doc, _ = run(["cb", "--map", maps["cptp"], "--p", "1", "--positive"])
    assert code == 0 and doc["result"]["value"] == pytest.approx(1, abs=1e-3)


def test_input_errors(maps, tmp_path):
    assert run(["compute", "--map", str(tmp_path / "missing.json"), "--q", "2", "--p", "2"])[0] == 4
    assert run(["compute", "--map", maps["cptp"], "--q", "0.5", "--p", "2"])[0] == 4
    assert run(["compute", "--map", maps["cptp"], "--q", "2", "--p", "2", "--eps", "0.9"])[0] == 4
    assert run(["compute", "--map", maps["cptp"], "--q", "3", "--p", "2", "--method", "exact22"])[0] == 4
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["certify", "--instance", str(bad), "--eta", "1", "--p", "2"])[0] == 4
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--q", "2"], out=io.StringIO())
    assert exc.value.code == 4


def test_request_validation():
    with pytest.raises(InputError):
        SolveRequest("m.json", 2, 2, mode="diamond")
    with pytest.raises(InputError):
        SolveRequest("m.json", 2, 2, method="magic")
    assert SolveRequest("m.json", "inf", "4/3").to_dict()["q"] == "inf"


def test_routing_is_total():
    indices = [1, 1.5, 2, 3, math.inf]
    modes = ("norm", "norm_positive", "cb", "cb_positive")
    solvers = {"exact22", "boyd", "ellipsoid", "cb_norm_1p", "cb_norm_qp_cp"}
    for mode, q, p, cp in itertools.product(modes, indices, indices, (True, False)):
        try:
            name = route(mode, q, p, cp)
        except Refusal as exc:
            assert exc.tag and exc.reason
            continue
        assert name in solvers
        if name == "boyd":
            assert cp and p <= 2 <= q
        if name == "ellipsoid":
            assert cp and p <= q


def test_reduce_sat_and_certify(tmp_path):
    sat, unsat = tmp_path / "sat.json", tmp_path / "unsat.json"
    save_instance(single_clause_instance(), sat)
    save_instance(all_patterns_instance(), unsat)
    out = tmp_path / "gadget"
    code, doc, _ = run(["reduce-sat", "--instance", str(sat), "--eta", "1", "--out", str(out)])
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["phi_H.json", "phi_cube.json", "phi_swap.json", "phi_trace.json", "report.json"]
    rep = doc["report"]
    assert rep["satisfiable"] and rep["certificate_value"] == pytest.approx(rep["gadget_bound"], abs=1e-12)
    code, doc, _ = run(["reduce-sat", "--instance", str(sat), "--eta", "16", "--out", str(out)])
    assert doc["report"]["eta_is_d_squared"] and doc["report"]["gadget_bound"] == pytest.approx(1)
    code, doc, _ = run(["certify", "--instance", str(unsat), "--eta", "1", "--p", "2"])
    assert code == 0
    rep = doc["report"]
    assert not rep["satisfiable"] and rep["max_proper_value"] < rep["gadget_bound"]
    assert rep["gadget_bound_at_d_squared"] == pytest.approx(1)
    assert run(["certify", "--instance", str(unsat), "--eta", "100", "--p", "2"])[0] == 4


def test_text_format(maps):
    code, _, text = run(["compute", "--map", maps["cptp"], "--q", "2", "--p", "2", "--format", "text"])
    assert code == 0 and "route: exact22" in text


def test_selftest_quick_is_fast():
    t = time.perf_counter()
    code, doc, _ = run(["selftest", "--format", "json"])
    assert time.perf_counter() - t < 60
    assert {c["number"] for c in doc["criteria"]} == set(range(1, 10))
    assert code == (0 if doc["status"] == "passed" else 1)


def test_module_entry_point(maps):
    proc = subprocess.run([sys.executable, "-m", "mixedschatten", "compute", "--map", maps["depol"],
                           "--q", "2", "--p", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["value"] == pytest.approx(1)
