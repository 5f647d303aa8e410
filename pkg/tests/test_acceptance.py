"""Acceptance criteria, one test each. Every test records a PASS/FAIL line shown in the summary.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest

import oracles
from hmmimo import downlink, uplink
from hmmimo.campaign import results_csv, run_campaign, run_drop
from hmmimo.cli import main
from hmmimo.config import NetworkConfig, derive_scenario
from hmmimo.estimation import assign_pilots, estimate_channels
from hmmimo.propagation import BetaTable, draw_channels
from hmmimo.validation import (dl_checks, estimator_checks, make_instance, moment_check,
                               random_beta, random_instance, toy_config, ul_checks)

# 4 cells, 16 + 4x4 antennas and 2 UEs per cell: 128 antennas and 8 UEs, half on eAPs
DESK = dict(N_b=16, L_c=4, N_a=4, K_c=2, drops=1000, seed=1)


def _worst(checks):
    worst = max(checks, key=lambda c: c.rel_err / c.tol)
    return f"{len(checks)} checks, worst {worst.name} rel_err={worst.rel_err:.2e} (tol {worst.tol:g})"


def test_desk_scale_ordering(report):
    base = NetworkConfig(**DESK)
    t0 = time.perf_counter()
    p5 = {s: run_campaign(derive_scenario(base, s)).ul.likely95
          for s in ("hmmimo", "cfmmimo", "cmmimo")}
    elapsed = time.perf_counter() - t0
    ordered = p5["cfmmimo"] > p5["hmmimo"] > p5["cmmimo"]
    ratio = p5["hmmimo"] / p5["cmmimo"]
    ok = ordered and ratio >= 1.5 and elapsed <= 300
    report("desk-scale UL 95%-likely ordering cf > hm > cm, hm >= 1.5x cm, <= 5 min", ok,
           f"cf={p5['cfmmimo']:.4f} hm={p5['hmmimo']:.4f} cm={p5['cmmimo']:.4f} "
           f"hm/cm={ratio:.1f} time={elapsed:.1f}s")
    assert ok


def test_uplink_terms_match_closed_form(report):
    rng = np.random.default_rng(2024)
    checks = []
    for i in range(20):
        inst = random_instance(rng)
        checks += ul_checks(inst, 100_000, rng, tol=0.02, label=f"[{i}] ")
    ok = all(c.passed for c in checks)
    report("UL E|I_i|^2 and gamma within 2% on 20 instances at 1e5 symbols", ok, _worst(checks))
    assert ok, [c.line() for c in checks if not c.passed]


def _gap_checks(inst):
    """|paper - rigorous| denominator gap against sum_l N_a d^2 alpha (beta - alpha), per user."""
    cfg, a, b, d = inst.config, inst.estimates.alpha, inst.beta.beta, inst.power.d
    worst = 0.0
    g_p = downlink.dl_sinr_all(inst.estimates, inst.channels.cov, inst.power, cfg, "paper")
    g_r = downlink.dl_sinr_all(inst.estimates, inst.channels.cov, inst.power, cfg, "rigorous")
    for c in range(cfg.C):
        for k in range(cfg.K_c):
            al, be = a[c, k, c, 1:], b[c, k, c, 1:]
            symbolic = np.sum(cfg.N_a * d[c, k] ** 2 * al * (be - al))
            num = downlink.dl_terms_analytic(inst.estimates, inst.channels.cov, inst.power, cfg,
                                             c, k)["desired2"]
            scalar = [downlink.dl_sinr_analytic(inst.estimates, inst.beta, inst.power, cfg, c, k, m)
                      for m in ("paper", "rigorous")]
            for gp, gr in ((g_p[c, k], g_r[c, k]), scalar):
                gap = num / gp - num / gr
                scale = max(abs(symbolic), 1e-300)
                worst = max(worst, abs(gap - symbolic) / scale if symbolic else abs(gap))
    return worst


def test_downlink_moment_and_terms(report):
    rng = np.random.default_rng(7)
    checks = [moment_check(rng, n=1_000_000, tol=0.03)]
    gap = 0.0
    for i in range(20):
        inst = random_instance(rng)
        checks += [c for c in dl_checks(inst, 1_000_000, rng, tol=0.02, label=f"[{i}] ")
                   if "J" in c.name]
        gap = max(gap, _gap_checks(inst))
    ok_terms = all(c.passed for c in checks)
    ok = ok_terms and gap <= 1e-10
    report("DL E|hhat|^4=2a^2 (3%), J1 rigorous/J2/J3 (2%), paper-rigorous gap (1e-10)", ok,
           f"{_worst(checks)}; max gap rel_err={gap:.1e}")
    assert ok_terms, [c.line() for c in checks if not c.passed]
    assert gap <= 1e-10


def test_estimator_contract(report):
    rng = np.random.default_rng(11)
    checks = estimator_checks(rng, n=100_000, tol=0.02)
    ok = all(c.passed for c in checks)
    report("MMSE estimate variance alpha, error variance beta-alpha, cross-corr < 2%", ok,
           "; ".join(f"{c.name}: {c.measured:.4g}" for c in checks))
    assert ok


def _degenerate_errors(inst):
    cfg, est, b = inst.config, inst.estimates, inst.beta.beta
    coef = inst.power.composite(cfg.N_a)
    g_ul = uplink.ul_sinr_all(est, inst.channels.cov, inst.eta, cfg)
    g_dl = {m: downlink.dl_sinr_all(est, inst.channels.cov, inst.power, cfg, m)
            for m in ("paper", "rigorous")}
    errs = []
    for c in range(cfg.C):
        for k in range(cfg.K_c):
            ref_ul = oracles.ul_mrc(est.hhat, est.alpha, b, inst.eta, cfg.noise_w, cfg.p_u,
                                    cfg.N_b, cfg.L_c, cfg.N_a, c, k)
            xi = uplink.build_xi(est, inst.beta, inst.eta, cfg, c, k)
            for got in (g_ul[c, k], uplink.ul_sinr_analytic(est, xi, inst.eta, c, k)):
                errs.append(abs(got - ref_ul) / ref_ul)
            for mode in ("paper", "rigorous"):
                ref = oracles.dl_cbf(coef, est.alpha, b, cfg.noise_w, cfg.p_d, cfg.N_b, cfg.L_c,
                                     cfg.N_a, c, k, own_variance=mode == "rigorous")
                scalar = downlink.dl_sinr_analytic(est, inst.beta, inst.power, cfg, c, k, mode)
                for got in (g_dl[mode][c, k], scalar):
                    errs.append(abs(got - ref) / ref)
    return max(errs)


def test_degenerate_reductions(report):
    rng = np.random.default_rng(3)
    worst = {}
    for name, shape in (("cell-free N_b=0", dict(N_b=0, L_c=3, N_a=2, K_c=2)),
                        ("cellular L_c=0", dict(N_b=4, L_c=0, K_c=2))):
        errs = []
        for _ in range(3):
            cfg = toy_config(**shape)
            errs.append(_degenerate_errors(make_instance(cfg, random_beta(cfg, rng), rng)))
        worst[name] = max(errs)
    ok = all(v <= 1e-10 for v in worst.values())
    report("N_b=0 / L_c=0 reduce to scalar cell-free / cellular MRC+CBF oracles (1e-10)", ok,
           ", ".join(f"{k}: {v:.1e}" for k, v in worst.items()))
    assert ok


def test_determinism(report, tmp_path):
    cfg = NetworkConfig(**{**DESK, "drops": 20, "seed": 5})
    runs = [results_csv({s: run_campaign(derive_scenario(cfg, s)) for s in ("hmmimo", "cmmimo")})
            for _ in range(2)]
    parallel = results_csv({"hmmimo": run_campaign(cfg, workers=2),
                            "cmmimo": run_campaign(derive_scenario(cfg, "cmmimo"), workers=2)})
    cfg_file = tmp_path / "desk.cfg"
    cfg_file.write_text("N_b = 16\nL_c = 4\nN_a = 4\nK_c = 2\n")
    cli = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert main(["run", "--config", str(cfg_file), "--scenario", "all", "--drops", "10",
                     "--seed", "9", "--output", str(out)]) == 0
        cli.append((out / "results.csv").read_bytes())
    ok = runs[0].encode() == runs[1].encode() == parallel.encode() and cli[0] == cli[1]
    report("identical config gives byte-identical CSV (API, 2 workers, CLI)", ok,
           f"{len(runs[0])} bytes, CLI {len(cli[0])} bytes")
    assert ok


def _single_user_gamma(noise_w, perfect_csi, empirical, rng):
    psd = 30 + 10 * np.log10(noise_w)
    cfg = toy_config(C=1, N_b=4, L_c=2, N_a=1, K_c=1, noise_psd_dbm_hz=psd)
    b = BetaTable(np.array([[[[1.0, 0.5, 2.0]]]]))
    ch = draw_channels(b, cfg, np.random.default_rng(0))
    est = estimate_channels(ch, assign_pilots(cfg), cfg, np.random.default_rng(1), beta=b,
                            noise_w=0.0 if perfect_csi else None)
    eta = np.ones((1, 1))
    if empirical:
        return uplink.ul_sinr_empirical(ch, est, eta, cfg, 100_000, rng)[0], est, cfg
    return float(uplink.ul_sinr_all(est, ch.cov, eta, cfg)[0, 0]), est, cfg


def test_prelog_and_noise_limit(report):
    cfg = NetworkConfig(**{**DESK, "tau_p": 8, "tau_c": 8})
    zero_se = all(s.se_ul == 0.0 for s in run_drop(cfg, 0))

    rng = np.random.default_rng(5)
    noise = np.array([1e-2, 1e-3, 1e-4])
    slopes, limit_err = {}, 0.0
    for label, perfect, emp in (("analytic", True, False), ("empirical", True, True)):
        g = []
        for s2 in noise:
            gamma, est, c = _single_user_gamma(s2, perfect, emp, rng)
            g.append(gamma)
            if perfect and not emp:
                limit = c.p_u * np.linalg.norm(est.hhat[0, 0]) ** 2 / c.noise_w
                limit_err = max(limit_err, abs(gamma - limit) / limit)
        slopes[label] = np.polyfit(np.log10(noise), np.log10(g), 1)[0]
    slope_ok = all(abs(s + 1) <= 0.01 for s in slopes.values())
    ok = zero_se and slope_ok and limit_err < 1e-12
    report("tau_p = tau_c gives zero UL SE; gamma ~ p_u|hhat|^2/sigma^2, slope -1 within 1%", ok,
           f"zero_se={zero_se} " + " ".join(f"{k}={v:.4f}" for k, v in slopes.items())
           + f" limit rel_err={limit_err:.1e}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
