"""Pilot assignment and MMSE channel estimation for the serving-cell channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, NetworkConfig
from .propagation import BetaTable, BlockDiag, ChannelRealization


@dataclass(frozen=True)
class PilotBook:
    assignment: np.ndarray   # (C, K) pilot index per user


def assign_pilots(config: NetworkConfig, rng: np.random.Generator | None = None) -> PilotBook:
    """User k of every cell gets pilot k; the pattern is reused in all cells."""
    if config.K_c > config.tau_p:
        raise ConfigError(f"K_c={config.K_c} exceeds tau_p={config.tau_p}", key="K_c")
    return PilotBook(np.tile(np.arange(config.K_c), (config.C, 1)))


def mmse_alpha(p_u, beta, sigma_n2):
    """Per-antenna variance of the MMSE estimate, p_u*beta^2 / (p_u*beta + sigma_n2)."""
    p_u, beta, sigma_n2 = (np.asarray(x, dtype=float) for x in (p_u, beta, sigma_n2))
    if np.any(p_u <= 0) or np.any(beta <= 0) or np.any(sigma_n2 <= 0):
        raise ValueError("mmse_alpha needs strictly positive p_u, beta and sigma_n2")
    out = p_u * beta ** 2 / (p_u * beta + sigma_n2)
    return float(out) if out.ndim == 0 else out


def effective_noise(config: NetworkConfig, noise_w: float | None = None) -> float:
    """Variance of the estimation noise referred to the channel, sigma^2 / p_u."""
    sigma2 = config.noise_w if noise_w is None else noise_w
    gain = config.tau_p if config.pilot_gain else 1
    return sigma2 / (gain * config.p_u)


def mmse_filter(cov: BlockDiag, noise_var: float) -> tuple[BlockDiag, BlockDiag]:
    """Estimator R (R + s I)^-1 and estimate covariance R (R + s I)^-1 R for each block."""
    def gain(w):
        den = w + noise_var
        return np.divide(w, den, out=np.zeros_like(w), where=den > 0)

    def var(w):
        den = w + noise_var
        return np.divide(w * w, den, out=np.zeros_like(w), where=den > 0)

    return cov.spectral(gain), cov.spectral(var)


def own_cell(cov: BlockDiag, n_cells: int, n_users: int) -> BlockDiag:
    """Select the (c, k, c) pairs of a (C, K, C)-led statistic."""
    c = np.arange(n_cells)[:, None]
    k = np.arange(n_users)[None, :]
    return cov[c, k, c]


@dataclass(frozen=True)
class EstimateSet:
    hhat: np.ndarray        # (C, K, M) estimates of the own-cell composite channels
    h: np.ndarray           # (C, K, M) the true own-cell channels they estimate
    alpha: np.ndarray       # (C, K, C, 1+L) per-antenna estimate variance, every pair
    cov_hat: BlockDiag      # lead (C, K): covariance of hhat
    cov_err: BlockDiag      # lead (C, K): covariance of htilde

    @property
    def htilde(self) -> np.ndarray:
        return self.h - self.hhat


def estimate_channels(channels: ChannelRealization, pilots: PilotBook, config: NetworkConfig,
                      rng: np.random.Generator, beta: BetaTable | None = None,
                      noise_w: float | None = None) -> EstimateSet:
    """Contamination-free MMSE estimates of every user's channel to its own cell.

    Orthogonal in-cell pilots make the estimate independent of the pilot index, so ``pilots``
    only has to be a valid book.
    """
    C, K = config.C, config.K_c
    if pilots.assignment.shape != (C, K):
        raise ValueError("pilot book does not match config")
    for c in range(C):
        if len(set(pilots.assignment[c].tolist())) != K:
            raise ValueError(f"pilots in cell {c} are not distinct")
    s = effective_noise(config, noise_w)
    cov_own = own_cell(channels.cov, C, K)
    filt, cov_hat = mmse_filter(cov_own, s)
    h_own = channels.h[np.arange(C)[:, None], np.arange(K)[None, :], np.arange(C)[:, None]]
    w = np.sqrt(s / 2) * (rng.standard_normal(h_own.shape) + 1j * rng.standard_normal(h_own.shape))
    hhat = filt.matvec(h_own + w)

    if beta is not None:
        b = beta.beta
    elif channels.cov.scaled_identity:
        b = channels.cov.site
    else:
        b = _site_means(channels.cov)
    gain = config.tau_p if config.pilot_gain else 1
    sigma2 = config.noise_w if noise_w is None else noise_w
    if sigma2 > 0:
        alpha = mmse_alpha(gain * config.p_u, b, sigma2)
    else:
        alpha = np.array(b, dtype=float)
    return EstimateSet(hhat=hhat, h=h_own, alpha=alpha, cov_hat=cov_hat, cov_err=cov_own - cov_hat)


def _site_means(cov: BlockDiag) -> np.ndarray:
    cbs, eap = cov.blocks()
    head = np.real(np.trace(cbs, axis1=-2, axis2=-1))[..., None] / max(cov.n_b, 1)
    tail = np.real(np.trace(eap, axis1=-2, axis2=-1)) / cov.n_a
    return np.concatenate([head, tail], axis=-1)
