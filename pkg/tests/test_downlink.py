import numpy as np
import pytest

from hmmimo import downlink
from hmmimo.downlink import PowerControl
from hmmimo.estimation import EstimateSet
from hmmimo.propagation import BetaTable, BlockDiag
from hmmimo.validation import make_instance, random_instance, toy_config


def test_cbs_only_hand_example():
    cfg = toy_config(C=1, N_b=2, L_c=0, K_c=1)
    one = np.ones((1, 1, 1, 1))
    pc = PowerControl(D=np.ones((1, 1, 2)), d=np.zeros((1, 1, 0)))
    g = downlink.dl_sinr_analytic(one, BetaTable(one), pc, cfg, 0, 0, "paper")
    assert g == pytest.approx(4 / 3)


@pytest.mark.parametrize("beta, paper, rigorous", [(1.0, 1 / 2, 1 / 2), (2.0, 1 / 3, 1 / 2)])
def test_single_eap_modes(beta, paper, rigorous):
    cfg = toy_config(C=1, N_b=0, L_c=1, N_a=1, K_c=1)
    alpha = np.ones((1, 1, 1, 2))
    b = BetaTable(np.full((1, 1, 1, 2), beta))
    pc = PowerControl(D=np.zeros((1, 1, 0)), d=np.ones((1, 1, 1)))
    assert downlink.dl_sinr_analytic(alpha, b, pc, cfg, 0, 0, "paper") == pytest.approx(paper)
    assert downlink.dl_sinr_analytic(alpha, b, pc, cfg, 0, 0, "rigorous") == pytest.approx(rigorous)


def test_zero_power_gives_zero_sinr():
    inst = random_instance(np.random.default_rng(0))
    cfg = inst.config
    pc = PowerControl(D=np.zeros_like(inst.power.D), d=np.zeros_like(inst.power.d))
    for mode in downlink.MODES:
        assert downlink.dl_sinr_analytic(inst.estimates, inst.beta, pc, cfg, 0, 0, mode) == 0.0


def _site_estimates(alpha_site, n_b, n_a):
    C, K = alpha_site.shape[:2]
    own = alpha_site[np.arange(C)[:, None], np.arange(K)[None, :], np.arange(C)[:, None]]
    cov = BlockDiag.from_site(own, n_b, n_a)
    m = cov.size
    return EstimateSet(hhat=np.zeros((C, K, m), complex), h=np.zeros((C, K, m), complex),
                       alpha=alpha_site, cov_hat=cov, cov_err=BlockDiag.from_site(0 * own, n_b, n_a))


def test_power_control_single_eap():
    cfg = toy_config(C=1, N_b=0, L_c=1, N_a=1, K_c=1)
    pc = downlink.dl_power_control(_site_estimates(np.ones((1, 1, 1, 2)), 0, 1), cfg)
    assert pc.d[0, 0, 0] == pytest.approx(1.0)


def test_power_control_two_users_split_budget():
    cfg = toy_config(C=1, N_b=2, L_c=1, N_a=1, K_c=2)
    est = _site_estimates(np.full((1, 2, 1, 2), 0.7), 2, 1)
    pc = downlink.dl_power_control(est, cfg)
    np.testing.assert_allclose(pc.d[0, :, 0] ** 2 * 0.7, 0.5)
    np.testing.assert_allclose(np.sum(pc.D[0] ** 2 * 0.7, axis=-1), 0.5)


@pytest.mark.parametrize("mode", ["iid", "local_scattering"])
def test_power_constraints_tight(mode):
    rng = np.random.default_rng(1)
    for _ in range(5):
        inst = random_instance(rng, fading_mode=mode)
        p_cbs, p_eap = downlink.site_powers(inst.power, inst.estimates)
        if inst.config.N_b:
            np.testing.assert_allclose(p_cbs, 1.0)
        np.testing.assert_allclose(p_eap, 1.0)


def test_unknown_policy():
    inst = random_instance(np.random.default_rng(2))
    with pytest.raises(ValueError):
        downlink.dl_power_control(inst.estimates, inst.config, policy="max-min")


@pytest.mark.parametrize("gamma, se", [(0.0, 0.0), (1.0, 1.0), (3.0, 2.0)])
def test_dl_se(gamma, se):
    assert downlink.dl_se(gamma) == pytest.approx(se)


def test_vectorized_matches_scalar_loops():
    rng = np.random.default_rng(6)
    for _ in range(6):
        inst = random_instance(rng)
        cfg = inst.config
        for mode in downlink.MODES:
            g = downlink.dl_sinr_all(inst.estimates, inst.channels.cov, inst.power, cfg, mode)
            for c in range(cfg.C):
                for k in range(cfg.K_c):
                    ref = downlink.dl_sinr_analytic(inst.estimates, inst.beta, inst.power, cfg,
                                                    c, k, mode)
                    assert g[c, k] == pytest.approx(ref, rel=1e-10)


def test_mode_ordering():
    inst = random_instance(np.random.default_rng(8))
    args = (inst.estimates, inst.channels.cov, inst.power, inst.config)
    paper, rig, proof = (downlink.dl_sinr_all(*args, m) for m in downlink.MODES)
    assert np.all(rig >= paper) and np.all(paper >= proof * (1 - 1e-12))


def test_empirical_j1_follows_rigorous_mode():
    cfg = toy_config(C=1, N_b=0, L_c=1, N_a=1, K_c=1)
    inst = make_instance(cfg, BetaTable(np.full((1, 1, 1, 2), 2.0)), np.random.default_rng(0))
    ana = downlink.dl_terms_analytic(inst.estimates, inst.channels.cov, inst.power, cfg, 0, 0)
    assert ana["j1_rigorous"] == pytest.approx(4 / 3)
    assert ana["j1_paper"] == pytest.approx(2.0)
    g, dec = downlink.dl_sinr_empirical(inst.channels, inst.estimates, inst.power, cfg, 400_000,
                                        np.random.default_rng(1))
    assert dec.j1 == pytest.approx(ana["j1_rigorous"], rel=0.02)
    assert dec.leak == pytest.approx(ana["leak"], rel=0.02)
    assert dec.residual < 1e-9
    gp = downlink.dl_sinr_all(inst.estimates, inst.channels.cov, inst.power, cfg, "paper")[0, 0]
    assert g == pytest.approx(gp, rel=0.02)


def test_fourth_moment():
    m4, alpha = downlink.scalar_estimate_fourth_moment(1.0, 1.0, 0.5, 1_000_000,
                                                       np.random.default_rng(0))
    assert m4 == pytest.approx(2 * alpha ** 2, rel=0.03)
