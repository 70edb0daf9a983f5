"""Acceptance criteria C0-C11 on the shipped Berger demo configuration.

Thresholds are pinned inside the suite functions of bergerplate.verification;
each criterion line is echoed in the terminal summary.
"""
import pytest

from bergerplate.config import load_config
from bergerplate.verification import SUITES, SUITE_FUNCS, admissibility_results, demo_config_path

ACCEPTANCE_LINES = []


@pytest.fixture(scope="module")
def demo():
    return load_config(demo_config_path())


def _record(results):
    for r in results:
        ACCEPTANCE_LINES.append(r.line())
        print(r.line())
    return results


def test_admissibility(demo):
    results = _record(admissibility_results(demo))
    assert all(r.passed for r in results)


@pytest.mark.parametrize("suite", SUITES)
def test_criterion(demo, suite):
    fn = SUITE_FUNCS[suite]
    if suite == "determinism":
        results = fn(config=demo)
    else:
        results = fn(demo.params, seed=demo.seed)
    results = _record(results)
    assert results
    failed = [r.line() for r in results if not r.passed]
    assert not failed, "\n".join(failed)
