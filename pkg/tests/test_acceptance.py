"""Acceptance criteria at their stated sample sizes and tolerances.

Each test prints one ``[PASS]`` / ``[FAIL]`` line for its criterion (followed by
the per-check breakdown) directly to the terminal, so the lines show up in
``pytest -v`` output regardless of capture settings.
"""

import pytest

from mixedschatten.acceptance import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("fn", CRITERIA, ids=[f"criterion_{i}" for i in range(1, len(CRITERIA) + 1)])
def test_criterion(fn, capsys):
    result = run_criterion(fn, level="full", seed=0)
    with capsys.disabled():
        print()
        print(result.report())
    failed = [f"{c.name}: {c.detail}" for c in result.checks if not c.passed]
    assert result.passed, "; ".join(failed)
