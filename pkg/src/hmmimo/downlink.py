"""Downlink conjugate beamforming: power control, closed-form SINR and a block-level oracle.

Three closed-form variants share the numerator |E[g]|^2 and the cross-user terms and differ only
in the power attributed to the user's own beamforming gain uncertainty at its eAPs:

``paper``
    The reference closed form, own-eAP term d^2 beta alpha. This is the exact variance of the
    true coefficient d h conj(hhat) for Gaussian estimates.
``rigorous``
    The exact variance of the decomposition's own-eAP term d |hhat|^2, i.e. (d alpha)^2. It omits
    the estimation-error leakage d htilde conj(hhat), whose power d^2 alpha (beta - alpha) is the
    whole gap between the two modes.
``proof``
    Second moment 2 (d alpha)^2 of d |hhat|^2 in place of its variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .estimation import mmse_filter, effective_noise, own_cell
from .propagation import BetaTable, BlockDiag, ChannelRealization, pair_trace
from .uplink import qpsk

MODES = ("paper", "rigorous", "proof")


@dataclass(frozen=True)
class PowerControl:
    D: np.ndarray    # (C, K, N_b) diagonal of each cBS power-control matrix
    d: np.ndarray    # (C, K, L) per-eAP scalar coefficients

    def composite(self, n_a: int) -> np.ndarray:
        """Per-antenna coefficients on the composite layout, (C, K, M)."""
        return np.concatenate([self.D, np.repeat(self.d, n_a, axis=-1)], axis=-1)


def dl_power_control(estimates, config: NetworkConfig, policy: str = "uniform") -> PowerControl:
    """Equal coefficients for all users of a site, scaled so each site's expected power is 1."""
    if policy != "uniform":
        raise ValueError(f"unknown power-control policy {policy!r}")
    C, K = config.C, config.K_c
    if estimates.hhat.shape[1] == 0:
        raise ValueError("no served users: power control is undefined")
    cbs, eap = estimates.cov_hat.blocks()
    tr_cbs = np.real(np.trace(cbs, axis1=-2, axis2=-1))          # (C, K)
    tr_eap = np.real(np.trace(eap, axis1=-2, axis2=-1))          # (C, K, L)
    D = np.zeros((C, K, config.N_b))
    if config.N_b:
        D += (1 / np.sqrt(tr_cbs.sum(axis=1)))[:, None, None]
    d = np.broadcast_to((1 / np.sqrt(tr_eap.sum(axis=1)))[:, None, :], (C, K, config.L_c)).copy()
    return PowerControl(D=D, d=d)


def site_powers(pc: PowerControl, estimates) -> tuple[np.ndarray, np.ndarray]:
    """Expected transmit power per cBS (C,) and per eAP (C, L)."""
    cbs, eap = estimates.cov_hat.blocks()
    p_cbs = np.einsum("ckm,ckmm->c", pc.D ** 2, cbs).real
    p_eap = np.einsum("ckl,cklmm->cl", pc.d ** 2, eap).real
    return p_cbs, p_eap


def _alpha_table(alpha) -> np.ndarray:
    return alpha.alpha if hasattr(alpha, "alpha") else np.asarray(alpha)


def dl_sinr_analytic(alpha, beta: BetaTable, pc: PowerControl, config: NetworkConfig,
                     cell: int, user: int, mode: str = "paper") -> float:
    """Closed-form downlink SINR for uncorrelated fading, written term by term.

    Multi-antenna eAPs contribute ``N_a`` identical per-antenna terms.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    a = _alpha_table(alpha)
    b = beta.beta
    C, K, L, Na = config.C, config.K_c, config.L_c, config.N_a
    c, k = cell, user
    D, d = pc.D, pc.d

    num = a[c, k, c, 0] * D[c, k].sum()
    for l in range(L):
        num += Na * d[c, k, l] * a[c, k, c, l + 1]
    num = abs(num) ** 2

    den = config.noise_w / config.p_d
    for iota in range(C):
        for kappa in range(K):
            den += a[iota, kappa, iota, 0] * b[c, k, iota, 0] * np.sum(D[iota, kappa] ** 2)
            for l in range(L):
                dd, al = d[iota, kappa, l], a[iota, kappa, iota, l + 1]
                if (iota, kappa) == (c, k) and mode == "rigorous":
                    den += Na * (dd * al) ** 2
                elif (iota, kappa) == (c, k) and mode == "proof":
                    den += (Na * Na + Na) * (dd * al) ** 2
                else:
                    den += Na * dd ** 2 * b[c, k, iota, l + 1] * al
    return float(num / den)


def _eap_only(p: np.ndarray, n_b: int) -> np.ndarray:
    q = p.copy()
    q[..., :n_b] = 0.0
    return q


def _cbs_only(p: np.ndarray, n_b: int) -> np.ndarray:
    q = np.zeros_like(p)
    q[..., :n_b] = p[..., :n_b]
    return q


def _second_moment_eap(p: np.ndarray, cov_hat: BlockDiag) -> np.ndarray:
    """sum_l E|hhat_l^H P_l hhat_l|^2 = sum_l tr(P C)^2 + tr(P C P C) over eAP blocks."""
    pe = _eap_only(p, cov_hat.n_b)
    _, eap = cov_hat.blocks()
    _, pl = cov_hat.split(pe)
    tr = np.einsum("...lm,...lmm->...l", pl, eap)
    return np.real(np.sum(np.abs(tr) ** 2, axis=-1)) + pair_trace(pe, cov_hat, cov_hat)


def dl_terms_analytic(estimates, channel_cov: BlockDiag, pc: PowerControl, config: NetworkConfig,
                      cell: int, user: int) -> dict:
    """Closed-form powers of every downlink term for one user (general covariances)."""
    c, k = cell, user
    C, K = config.C, config.K_c
    P = pc.composite(config.N_a)
    chat = estimates.cov_hat
    own = P[c, k]
    r_own = channel_cov[c, k, c]
    desired = np.sum(own * chat[c, k].diag())
    j1_cbs = pair_trace(_cbs_only(own, config.N_b), r_own, chat[c, k])
    j1_eap = pair_trace(_eap_only(own, config.N_b), chat[c, k], chat[c, k])
    leak = pair_trace(_eap_only(own, config.N_b), r_own - chat[c, k], chat[c, k])
    j2 = sum(pair_trace(P[c, kappa], r_own, chat[c, kappa]) for kappa in range(K) if kappa != k)
    j3 = sum(pair_trace(P[iota, kappa], channel_cov[c, k, iota], chat[iota, kappa])
             for iota in range(C) if iota != c for kappa in range(K))
    proof = j1_cbs + _second_moment_eap(own, chat[c, k])
    return {
        "desired2": float(abs(desired) ** 2),
        "j1_rigorous": float(j1_cbs + j1_eap),
        "j1_paper": float(j1_cbs + j1_eap + leak),
        "j1_proof": float(proof),
        "leak": float(leak),
        "j2": float(j2),
        "j3": float(j3),
        "noise": config.noise_w / config.p_d,
    }


def dl_sinr_all(estimates, channel_cov: BlockDiag, pc: PowerControl, config: NetworkConfig,
                mode: str = "paper") -> np.ndarray:
    """Closed-form SINR of every user, shape (C, K), for general block covariances."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    C, K = config.C, config.K_c
    P = pc.composite(config.N_a)                               # (C, K, M)
    chat = estimates.cov_hat                                   # lead (C, K)
    num = np.abs(np.sum(P * chat.diag(), axis=-1)) ** 2
    # tr(P_ik R_{ck}^i P_ik Chat_ik) for target (c, k) and transmitter (i, kappa)
    terms = pair_trace(P[None, None], channel_cov[:, :, :, None], chat[None, None])  # (C,K,C,K)
    den = terms.sum(axis=(2, 3)) + config.noise_w / config.p_d
    if mode != "paper":
        r_own = own_cell(channel_cov, C, K)
        pe = _eap_only(P, config.N_b)
        den -= pair_trace(pe, r_own, chat)
        if mode == "rigorous":
            den += pair_trace(pe, chat, chat)
        else:
            den += _second_moment_eap(P, chat)
    return num / den


def dl_se(gamma):
    """log2(1 + gamma); no pre-log factor."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SINR must be non-negative")
    out = np.log2(1 + gamma)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DlDecomposition:
    desired: complex     # empirical mean of the own beamforming coefficient
    j1: float            # gain uncertainty, own eAP part taken as d |hhat|^2
    leak: float          # d htilde conj(hhat) at the own eAPs, omitted from j1
    j2: float            # same-cell users
    j3: float            # other cells
    noise: float
    total: float         # E|y/sqrt(p_d)|^2 - |E[g]|^2
    max_symbol_xcorr: float
    residual: float
    n_blocks: int

    def as_dict(self) -> dict:
        return {"desired_re": self.desired.real, "desired_im": self.desired.imag,
                "j1": self.j1, "leak": self.leak, "j2": self.j2, "j3": self.j3,
                "noise": self.noise, "total": self.total,
                "max_symbol_xcorr": self.max_symbol_xcorr, "residual": self.residual,
                "n_blocks": self.n_blocks}


def dl_sinr_empirical(channels: ChannelRealization, estimates, pc: PowerControl,
                      config: NetworkConfig, n_blocks: int, rng: np.random.Generator,
                      cell: int = 0, user: int = 0, batch: int | None = None
                      ) -> tuple[float, DlDecomposition]:
    """Use-and-then-forget SINR measured from simulated received samples.

    Every block redraws all channels, pilot noise (hence estimates), data symbols and receiver
    noise; power control stays fixed since it only depends on statistics.
    """
    C, K, M, n_b = config.C, config.K_c, config.M_c, config.N_b
    c, k = cell, user
    cov = channels.cov
    cov_own = own_cell(cov, C, K)
    s = effective_noise(config)
    filt, _ = mmse_filter(cov_own, s)
    target_cov = cov[c, k]                                     # lead (C,): user -> every cell
    P = pc.composite(config.N_a)
    sigma2, p_d = config.noise_w, config.p_d
    eap = np.zeros(M, dtype=bool)
    eap[n_b:] = True
    others = np.ones(C, dtype=bool)
    others[c] = False
    if batch is None:
        batch = max(1, min(n_blocks, 2_000_000 // max(1, C * K * M)))

    acc = dict(g=0j, y2=0.0, j1_mean=0j, j1_sq=0.0, leak=0.0, j2=0.0, j3=0.0, noise=0.0)
    xcorr = np.zeros((C * K, C * K), dtype=complex)
    residual = 0.0
    done = 0
    while done < n_blocks:
        n = min(batch, n_blocks - done)
        done += n
        h_own = cov_own.sample(rng, (n,))                       # (n, C, K, M)
        h_tgt = target_cov.sample(rng, (n,))                    # (n, C, M)
        h_tgt[:, c] = h_own[:, c, k]
        w = np.sqrt(s / 2) * (rng.standard_normal(h_own.shape) + 1j * rng.standard_normal(h_own.shape))
        hhat = filt.matvec(h_own + w)
        u = qpsk(rng, (n, C, K))
        noise = np.sqrt(sigma2 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

        g = np.einsum("nim,ikm,nikm->nik", h_tgt, P, hhat.conj())   # coefficient of u_ik
        y = np.einsum("nik,nik->n", g, u) + noise / np.sqrt(p_d)

        hh, ht = hhat[:, c, k], h_tgt[:, c] - hhat[:, c, k]
        t = (np.sum(h_tgt[:, c, ~eap] * P[c, k, ~eap] * hh[:, ~eap].conj(), axis=-1)
             + np.sum(P[c, k, eap] * np.abs(hh[:, eap]) ** 2, axis=-1))
        lk = np.sum(P[c, k, eap] * ht[:, eap] * hh[:, eap].conj(), axis=-1) * u[:, c, k]
        own = g[:, c].copy()
        own[:, k] = 0.0
        j2 = np.sum(own * u[:, c], axis=-1)
        j3 = np.sum(g[:, others] * u[:, others], axis=(1, 2))
        nz = noise / np.sqrt(p_d)
        residual = max(residual, float(np.max(np.abs(y - (t * u[:, c, k] + lk + j2 + j3 + nz)))))

        acc["g"] += np.sum(y * u[:, c, k].conj())
        acc["y2"] += np.sum(np.abs(y) ** 2)
        acc["j1_mean"] += np.sum(t)
        acc["j1_sq"] += np.sum(np.abs(t) ** 2)
        acc["leak"] += np.sum(np.abs(lk) ** 2)
        acc["j2"] += np.sum(np.abs(j2) ** 2)
        acc["j3"] += np.sum(np.abs(j3) ** 2)
        acc["noise"] += np.sum(np.abs(nz) ** 2)
        uf = u.reshape(n, C * K)
        xcorr += uf.conj().T @ uf

    n = n_blocks
    mean_g = acc["g"] / n
    mean_t = acc["j1_mean"] / n
    total = acc["y2"] / n - abs(mean_g) ** 2
    xc = np.abs(xcorr / n)
    np.fill_diagonal(xc, 0.0)
    dec = DlDecomposition(
        desired=complex(mean_g),
        j1=float(acc["j1_sq"] / n - abs(mean_t) ** 2),
        leak=float(acc["leak"] / n),
        j2=float(acc["j2"] / n),
        j3=float(acc["j3"] / n),
        noise=float(acc["noise"] / n),
        total=float(total),
        max_symbol_xcorr=float(xc.max()) if xc.size > 1 else 0.0,
        residual=residual,
        n_blocks=n_blocks,
    )
    gamma = abs(mean_g) ** 2 / total if total > 0 else math.inf
    return gamma, dec


def scalar_estimate_fourth_moment(beta: float, p_u: float, sigma_n2: float, n: int,
                                  rng: np.random.Generator) -> tuple[float, float]:
    """Empirical E|hhat|^4 of a scalar MMSE estimate and its variance alpha."""
    alpha = p_u * beta ** 2 / (p_u * beta + sigma_n2)
    s = sigma_n2 / p_u
    h = np.sqrt(beta / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    w = np.sqrt(s / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    hhat = alpha / beta * (h + w)
    return float(np.mean(np.abs(hhat) ** 4)), alpha
