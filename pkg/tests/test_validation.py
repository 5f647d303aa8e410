import numpy as np
import pytest

from hmmimo.validation import Check, dl_checks, random_instance, run_suite, ul_checks


def test_suite_passes_on_small_budget():
    checks = run_suite(seed=1, n_instances=2, n_symbols=50_000, n_blocks=300_000, tol=0.04)
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


def test_discrepancy_lines_are_informational():
    checks = run_suite(seed=2, n_instances=1, n_symbols=20_000, n_blocks=100_000, tol=0.05,
                       paper_mode=True)
    info = [c for c in checks if c.informational]
    assert info and all(c.passed for c in info)
    assert any("paper-mode" in c.name for c in info)


@pytest.mark.parametrize("seed", [0, 1])
def test_local_scattering_terms(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, fading_mode="local_scattering")
    checks = ul_checks(inst, 100_000, rng, tol=0.03) + dl_checks(inst, 400_000, rng, tol=0.03)
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


def test_check_line_format():
    c = Check("x", 1.01, 1.0, 0.02)
    assert c.passed and c.line().startswith("PASS")
    assert not Check("y", 2.0, 1.0, 0.02).passed
