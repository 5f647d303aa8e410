"""Small synthetic instances and the analytic-versus-simulated term checks run by ``validate``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import downlink, uplink
from .config import NetworkConfig
from .estimation import EstimateSet, assign_pilots, estimate_channels
from .propagation import BetaTable, ChannelRealization, draw_channels

# noise_psd 30 dBm/Hz over 1 Hz with no noise figure is exactly 1 W
UNIT_NOISE = dict(noise_psd_dbm_hz=30.0, noise_figure_db=0.0, bandwidth_hz=1.0)


@dataclass(frozen=True)
class Instance:
    config: NetworkConfig
    beta: BetaTable
    channels: ChannelRealization
    estimates: EstimateSet
    power: downlink.PowerControl
    eta: np.ndarray


def toy_config(C: int = 2, N_b: int = 2, L_c: int = 2, N_a: int = 1, K_c: int = 2,
               **kw) -> NetworkConfig:
    params = dict(C=C, N_b=N_b, L_c=L_c, N_a=N_a, K_c=K_c, tau_p=max(K_c, 1), p_u=1.0, p_d=1.0,
                  scenario="hmmimo", **UNIT_NOISE)
    params.update(kw)
    return NetworkConfig(**params)


def random_beta(config: NetworkConfig, rng: np.random.Generator) -> BetaTable:
    """Log-uniform gains: [0.3, 3] towards the own cell, [0.05, 1] towards other cells."""
    C, K, L = config.C, config.K_c, config.L_c
    b = np.exp(rng.uniform(np.log(0.05), np.log(1.0), size=(C, K, C, L + 1)))
    for c in range(C):
        b[c, :, c] = np.exp(rng.uniform(np.log(0.3), np.log(3.0), size=(K, L + 1)))
    return BetaTable(b)


def make_instance(config: NetworkConfig, beta: BetaTable, rng: np.random.Generator,
                  eta=None) -> Instance:
    channels = draw_channels(beta, config, rng)
    estimates = estimate_channels(channels, assign_pilots(config), config, rng, beta=beta)
    power = downlink.dl_power_control(estimates, config)
    if eta is None:
        eta = rng.uniform(0.2, 1.0, size=(config.C, config.K_c))
    return Instance(config, beta, channels, estimates, power, np.asarray(eta, dtype=float))


def random_instance(rng: np.random.Generator, C: int = 2, max_m: int = 8, max_k: int = 2,
                    fading_mode: str = "iid") -> Instance:
    """Random small network: C cells, at most ``max_m`` antennas and ``max_k`` users per cell."""
    while True:
        N_a = int(rng.integers(1, 3))
        N_b = int(rng.integers(0, max_m + 1))
        L_c = int(rng.integers(0, (max_m - N_b) // N_a + 1))
        if 0 < N_b + L_c * N_a <= max_m:
            break
    K_c = int(rng.integers(1, max_k + 1))
    config = toy_config(C=C, N_b=N_b, L_c=L_c, N_a=N_a, K_c=K_c, fading_mode=fading_mode)
    return make_instance(config, random_beta(config, rng), rng)


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    expected: float
    tol: float
    informational: bool = False

    @property
    def rel_err(self) -> float:
        if self.expected == 0:
            return abs(self.measured)
        return abs(self.measured - self.expected) / abs(self.expected)

    @property
    def passed(self) -> bool:
        return self.informational or self.rel_err <= self.tol

    def line(self) -> str:
        tag = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return (f"{tag:4s} {self.name:40s} measured={self.measured:.6g} "
                f"expected={self.expected:.6g} rel_err={self.rel_err:.3e} tol={self.tol:g}")


def ul_checks(inst: Instance, n_symbols: int, rng: np.random.Generator, tol: float = 0.02,
              label: str = "", cell: int = 0, user: int = 0) -> list[Check]:
    cfg = inst.config
    terms = uplink.ul_terms_analytic(inst.estimates, inst.beta, inst.eta, cfg, cell, user,
                                     channel_cov=inst.channels.cov)
    xi = uplink.build_xi(inst.estimates, inst.beta, inst.eta, cfg, cell, user,
                         channel_cov=inst.channels.cov)
    gamma = uplink.ul_sinr_analytic(inst.estimates, xi, inst.eta, cell, user)
    g_emp, emp = uplink.ul_sinr_empirical(inst.channels, inst.estimates, inst.eta, cfg, n_symbols,
                                          rng, cell, user)
    out = []
    for name in ("i1", "i2", "i3", "i4"):
        if terms[name] > 0:
            out.append(Check(f"{label}UL E|{name.upper()}|^2", getattr(emp, name), terms[name], tol))
    out.append(Check(f"{label}UL gamma", g_emp, gamma, tol))
    return out


def dl_checks(inst: Instance, n_blocks: int, rng: np.random.Generator, tol: float = 0.02,
              label: str = "", cell: int = 0, user: int = 0, paper_mode: bool = False) -> list[Check]:
    cfg = inst.config
    ana = downlink.dl_terms_analytic(inst.estimates, inst.channels.cov, inst.power, cfg, cell, user)
    g_emp, emp = downlink.dl_sinr_empirical(inst.channels, inst.estimates, inst.power, cfg, n_blocks,
                                            rng, cell, user)
    out = [Check(f"{label}DL |E g|^2", abs(emp.desired) ** 2, ana["desired2"], tol),
           Check(f"{label}DL J1 (rigorous)", emp.j1, ana["j1_rigorous"], tol)]
    for name in ("j2", "j3"):
        if ana[name] > 0:
            out.append(Check(f"{label}DL {name.upper()}", getattr(emp, name), ana[name], tol))
    if ana["leak"] > 0:
        out.append(Check(f"{label}DL error leakage", emp.leak, ana["leak"], tol))
    gamma_paper = downlink.dl_sinr_all(inst.estimates, inst.channels.cov, inst.power, cfg, "paper")
    out.append(Check(f"{label}DL gamma (total, vs paper mode)", g_emp, gamma_paper[cell, user], tol))
    if paper_mode:
        out.append(Check(f"{label}DL J1 vs paper-mode own term", emp.j1, ana["j1_paper"], tol,
                         informational=True))
        out.append(Check(f"{label}DL J1 vs proof second moment", emp.j1, ana["j1_proof"], tol,
                         informational=True))
    return out


def moment_check(rng: np.random.Generator, n: int = 1_000_000, tol: float = 0.03) -> Check:
    m4, alpha = downlink.scalar_estimate_fourth_moment(1.0, 1.0, 0.5, n, rng)
    return Check("E|hhat|^4 = 2 alpha^2", m4, 2 * alpha ** 2, tol)


def estimator_checks(rng: np.random.Generator, n: int = 100_000, tol: float = 0.02,
                     beta: float = 1.0, p_u: float = 1.0, sigma2: float = 0.5) -> list[Check]:
    """Sample statistics of MMSE estimates of n independent CN(0, beta) channels."""
    cfg = toy_config(C=1, N_b=n, L_c=0, K_c=1, p_u=p_u, noise_psd_dbm_hz=30 + 10 * np.log10(sigma2))
    b = BetaTable(np.full((1, 1, 1, 1), beta))
    ch = draw_channels(b, cfg, rng)
    est = estimate_channels(ch, assign_pilots(cfg), cfg, rng, beta=b)
    hh, ht = est.hhat[0, 0], est.htilde[0, 0]
    alpha = p_u * beta ** 2 / (p_u * beta + sigma2)
    cross = abs(np.mean(hh * ht.conj())) / np.sqrt(np.mean(abs(hh) ** 2) * np.mean(abs(ht) ** 2))
    return [Check("var(hhat) = alpha", float(np.mean(abs(hh) ** 2)), alpha, tol),
            Check("var(htilde) = beta - alpha", float(np.mean(abs(ht) ** 2)), beta - alpha, tol),
            Check("corr(hhat, htilde) = 0", float(cross), 0.0, tol)]


def run_suite(seed: int = 0, n_instances: int = 4, n_symbols: int = 100_000,
              n_blocks: int = 1_000_000, tol: float | None = None,
              paper_mode: bool = False) -> list[Check]:
    """Every oracle check on ``n_instances`` random small instances."""
    rng = np.random.default_rng(seed)
    checks = estimator_checks(rng, tol=tol or 0.02)
    checks.append(moment_check(rng, tol=tol or 0.03))
    for i in range(n_instances):
        inst = random_instance(rng)
        label = f"[{i}] "
        checks += ul_checks(inst, n_symbols, rng, tol or 0.02, label)
        checks += dl_checks(inst, n_blocks, rng, tol or 0.02, label, paper_mode=paper_mode)
    return checks
