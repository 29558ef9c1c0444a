"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a one-line verdict; the lines are printed together at the
end of the pytest run, and ``python tests/test_acceptance.py`` prints them
directly.
"""
import sys
import tempfile
from pathlib import Path

import pytest

from heislab.runner import run_config
from heislab.verify.registry import CRITERIA, REGISTRY, default_config, run_experiment

VERDICTS: dict[int, str] = {}

# tolerances written into each criterion; the registry defaults must agree
STATED = {
    "calculus_identities": {"min_slope": 1.7, "identity_tol": 1e-12},
    "fundamental_solution": {"min_order": 1.0, "closed_tol": 1e-10},
    "subsolution": {"tol": 1e-10},
    "constants": {"quad_tol": 0.01},
    "harnack": {"budget": 50.0, "drift": 0.10},
    "boundary_lipschitz": {"min_exponent": 0.9},
    "second_order_expansion": {"dt_abs": 1e-2, "min_r2": 0.9},
    "counterexample": {},
}
STATED_PARAMS = {
    "calculus_identities": {"count": 100},
    "subsolution": {"ratio": 1.3, "matrices": 20, "points": 10_000, "control_shift": 0.1},
    "constants": {"ratios": (1.0, 1.1, 1.3), "radii": (0.25, 0.5, 1.0)},
    "comparison": {"scenarios": 50},
    "eps_critical": {"eps": (0.25, 0.5)},
    "second_order_expansion": {"q": 0.75, "eps": 1.0},
    "counterexample": {"q": 0.05, "alpha": 0.5, "C": 10.0, "control_q": 0.45},
}


def _record(number: int, ok: bool, detail: str):
    VERDICTS[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def _run_criterion(number: int):
    failures, names = [], []
    for name in CRITERIA[number]:
        cfg = default_config(name)
        for key, value in STATED.get(name, {}).items():
            assert cfg.tolerances[key] == value, f"{name}.{key} drifted from the stated tolerance"
        for key, value in STATED_PARAMS.get(name, {}).items():
            assert cfg.params[key] == value, f"{name}.{key} drifted from the stated setting"
        reports = run_experiment(cfg)
        names.append(f"{name}[{REGISTRY[name].anchor}]")
        for rep in reports:
            if not rep.passed:
                bad = [k for k, v in rep.checks.items() if not v] or [rep.status]
                failures.append(f"{rep.name}: {', '.join(bad)}")
    ok = not failures
    _record(number, ok, "; ".join(names) + ("" if ok else "  failed: " + " | ".join(failures)))
    return ok, failures


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, failures = _run_criterion(number)
    assert ok, failures


def test_criterion_10_determinism():
    ok = True
    diffs = []
    for name in ("comparison", "counterexample", "harnack"):
        outputs = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as d:
                cfg = default_config(name)
                cfg.out_dir = d
                res = run_config(cfg)
                outputs.append([p.read_bytes() for p in res.paths])
        if outputs[0] != outputs[1]:
            ok = False
            diffs.append(name)
    _record(10, ok, "byte-identical reruns of comparison, counterexample, harnack"
            + ("" if ok else f"  differ: {', '.join(diffs)}"))
    assert ok, diffs


def main():
    for number in sorted(CRITERIA):
        try:
            _run_criterion(number)
        except AssertionError as exc:
            _record(number, False, str(exc))
    try:
        test_criterion_10_determinism()
    except AssertionError:
        pass
    for number in sorted(VERDICTS):
        print(VERDICTS[number])
    return 0 if all("PASS" in v for v in VERDICTS.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
