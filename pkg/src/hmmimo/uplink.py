"""Uplink MRC detection: closed-form SINR, spectral efficiency and a symbol-level oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .propagation import BetaTable, BlockDiag, ChannelRealization


def qpsk(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-modulus QPSK symbols."""
    bits = rng.integers(0, 2, size=tuple(shape) + (2,))
    return ((2 * bits[..., 0] - 1) + 1j * (2 * bits[..., 1] - 1)) / np.sqrt(2)


def check_eta(eta, shape) -> np.ndarray:
    eta = np.broadcast_to(np.asarray(eta, dtype=float), shape)
    if np.any(eta < 0) or np.any(eta > 1):
        raise ValueError("uplink power coefficients must lie in [0, 1]")
    return eta


def _other_cell_cov(beta: BetaTable, config: NetworkConfig, channel_cov: BlockDiag | None) -> BlockDiag:
    if channel_cov is not None:
        return channel_cov
    return BlockDiag.from_site(beta.beta, config.N_b, config.N_a)


def build_xi(estimates, beta: BetaTable, eta, config: NetworkConfig, cell: int, user: int,
             channel_cov: BlockDiag | None = None) -> np.ndarray:
    """Interference-plus-noise matrix of user ``user`` in cell ``cell`` (size M_c).

    Sum of the other own-cell users' estimate outer products, every own-cell user's error
    covariance, the other cells' channel covariances and (sigma^2/p_u) I.
    """
    C, K, M = config.C, config.K_c, config.M_c
    eta = check_eta(eta, (C, K))
    hhat = estimates.hhat[cell]
    if hhat.shape != (K, M):
        raise ValueError(f"estimate shape {hhat.shape} does not match (K_c, M_c)=({K}, {M})")
    cov = _other_cell_cov(beta, config, channel_cov)
    theta = estimates.cov_err[cell].dense()          # (K, M, M)
    xi = np.zeros((M, M), dtype=complex)
    for kappa in range(K):
        if kappa != user:
            xi += eta[cell, kappa] * np.outer(hhat[kappa], hhat[kappa].conj())
        xi += eta[cell, kappa] * theta[kappa]
    for iota in range(C):
        if iota == cell:
            continue
        for kappa in range(K):
            xi += eta[iota, kappa] * cov[iota, kappa, cell].dense()
    xi += config.noise_w / config.p_u * np.eye(M)
    return xi


def ul_sinr_analytic(estimates, xi: np.ndarray, eta, cell: int, user: int) -> float:
    hhat = estimates.hhat[cell, user]
    e = float(np.asarray(eta)[cell, user]) if np.ndim(eta) else float(eta)
    den = np.real(hhat.conj() @ xi @ hhat)
    if not den > 0:
        raise FloatingPointError("interference-plus-noise matrix is singular")
    return e * np.linalg.norm(hhat) ** 4 / den


def ul_terms_analytic(estimates, beta: BetaTable, eta, config: NetworkConfig, cell: int, user: int,
                      channel_cov: BlockDiag | None = None) -> dict:
    """Closed-form powers of the four interference terms of the MRC soft estimate."""
    C, K = config.C, config.K_c
    eta = check_eta(eta, (C, K))
    cov = _other_cell_cov(beta, config, channel_cov)
    v = estimates.hhat[cell, user]
    own_err = estimates.cov_err[cell]
    i1 = eta[cell, user] * own_err[user].quad(v)
    i2 = 0.0
    for kappa in range(K):
        if kappa != user:
            i2 += eta[cell, kappa] * (abs(np.vdot(v, estimates.hhat[cell, kappa])) ** 2
                                      + own_err[kappa].quad(v))
    i3 = 0.0
    for iota in range(C):
        if iota != cell:
            for kappa in range(K):
                i3 += eta[iota, kappa] * cov[iota, kappa, cell].quad(v)
    i4 = config.noise_w / config.p_u * np.linalg.norm(v) ** 2
    desired = eta[cell, user] * np.linalg.norm(v) ** 4
    return {"desired": float(desired), "i1": float(i1), "i2": float(i2), "i3": float(i3),
            "i4": float(i4)}


def ul_sinr_all(estimates, channel_cov: BlockDiag, eta, config: NetworkConfig) -> np.ndarray:
    """Closed-form SINR of every user, shape (C, K)."""
    C, K = config.C, config.K_c
    eta = check_eta(eta, (C, K))
    s = config.noise_w / config.p_u
    gamma = np.empty((C, K))
    other = np.ones(C, dtype=bool)
    for c in range(C):
        v = estimates.hhat[c]                                     # (K, M)
        norm2 = np.sum(np.abs(v) ** 2, axis=-1)
        gram = np.abs(v.conj() @ v.T) ** 2                        # |hhat_k^H hhat_kappa|^2
        np.fill_diagonal(gram, 0.0)
        intra = gram @ eta[c]
        theta = estimates.cov_err[c][None, :].quad(v[:, None, :]) @ eta[c]
        other[:] = True
        other[c] = False
        r = channel_cov[:, :, c][None].quad(v[:, None, None, :])  # (K, C, K)
        inter = np.einsum("kim,im->k", r[:, other], eta[other])
        gamma[c] = eta[c] * norm2 ** 2 / (intra + theta + inter + s * norm2)
    return gamma


def ul_se(gamma, config: NetworkConfig):
    """(1 - tau_p/tau_c) log2(1 + gamma)."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SINR must be non-negative")
    out = (1 - config.tau_p / config.tau_c) * np.log2(1 + gamma)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DecompositionTerms:
    desired: float       # mean |sqrt(eta) ||hhat||^2 x|^2
    i1: float            # estimation error of the user itself
    i2: float            # other users of the same cell
    i3: float            # users of other cells
    i4: float            # noise
    max_cross: float     # largest |E[I_i I_j^*]| / sqrt(P_i P_j) over i != j
    residual: float      # max |x_hat - (desired + sum I_i)|, bookkeeping check
    n_symbols: int

    @property
    def interference(self) -> float:
        return self.i1 + self.i2 + self.i3 + self.i4

    def as_dict(self) -> dict:
        return {"desired": self.desired, "i1": self.i1, "i2": self.i2, "i3": self.i3,
                "i4": self.i4, "max_cross": self.max_cross, "residual": self.residual,
                "n_symbols": self.n_symbols}


def ul_sinr_empirical(channels: ChannelRealization, estimates, eta, config: NetworkConfig,
                      n_symbols: int, rng: np.random.Generator, cell: int = 0, user: int = 0,
                      batch: int | None = None) -> tuple[float, DecompositionTerms]:
    """Symbol-level MRC simulation conditioned on the serving cell's estimates.

    Per symbol the own-cell estimation errors, the other cells' channels, all data symbols and
    the receiver noise are redrawn; the soft estimate is split into its desired part and the
    four interference terms, whose empirical powers are returned.
    """
    C, K, M = config.C, config.K_c, config.M_c
    eta = check_eta(eta, (C, K))
    sq_eta = np.sqrt(eta)
    sigma2, p_u = config.noise_w, config.p_u
    v = estimates.hhat[cell, user]
    hhat_cell = estimates.hhat[cell]
    err_cov = estimates.cov_err[cell]
    other_cov = channels.cov[:, :, cell]
    if batch is None:
        batch = max(1, min(n_symbols, 4_000_000 // max(1, C * K * M)))

    sums = np.zeros(5)
    cross = np.zeros((5, 5), dtype=complex)
    residual = 0.0
    done = 0
    while done < n_symbols:
        n = min(batch, n_symbols - done)
        done += n
        err = err_cov.sample(rng, (n,))                       # (n, K, M)
        h_other = other_cov.sample(rng, (n,))                 # (n, C, K, M)
        h_all = h_other.copy()
        h_all[:, cell] = hhat_cell[None] + err
        x = qpsk(rng, (n, C, K))
        noise = np.sqrt(sigma2 / 2) * (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M)))
        y = np.sqrt(p_u) * np.einsum("ck,nckm,nck->nm", sq_eta, h_all, x) + noise
        x_hat = y @ v.conj() / np.sqrt(p_u)

        proj = h_all @ v.conj()                               # (n, C, K): hhat^H h
        contrib = sq_eta[None] * proj * x
        desired = sq_eta[cell, user] * np.vdot(v, v) * x[:, cell, user]
        i1 = sq_eta[cell, user] * (err[:, user] @ v.conj()) * x[:, cell, user]
        own = contrib[:, cell].copy()
        own[:, user] = 0.0
        i2 = own.sum(axis=1)
        mask = np.ones(C, dtype=bool)
        mask[cell] = False
        i3 = contrib[:, mask].sum(axis=(1, 2))
        i4 = noise @ v.conj() / np.sqrt(p_u)
        terms = np.stack([desired, i1, i2, i3, i4])
        residual = max(residual, float(np.max(np.abs(x_hat - terms.sum(axis=0)))))
        sums += np.sum(np.abs(terms) ** 2, axis=1)
        cross += terms @ terms.conj().T

    p = sums / n_symbols
    cross /= n_symbols
    norm = np.sqrt(np.outer(p[1:], p[1:]))
    rel = np.abs(cross[1:, 1:]) / np.where(norm > 0, norm, 1.0)
    np.fill_diagonal(rel, 0.0)
    terms = DecompositionTerms(desired=float(p[0]), i1=float(p[1]), i2=float(p[2]), i3=float(p[3]),
                               i4=float(p[4]), max_cross=float(rel.max()), residual=residual,
                               n_symbols=n_symbols)
    gamma = terms.desired / terms.interference if terms.interference > 0 else math.inf
    return gamma, terms
