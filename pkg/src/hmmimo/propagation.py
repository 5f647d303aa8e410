"""Large-scale fading and small-scale channel draws.

Composite vectors follow the per-cell stacking ``[cBS block (N_b), eAP 1 (N_a), ..., eAP L (N_a)]``.
All per-pair second-order statistics are kept as :class:`BlockDiag` objects over that layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .config import NetworkConfig
from .topology import Topology


@dataclass(frozen=True)
class BlockDiag:
    """Stack of block-diagonal Hermitian matrices on the composite antenna layout.

    Either ``site`` holds one scale per site (blocks are scaled identities), or ``cbs``/``eap``
    hold the full blocks. Leading dimensions broadcast like numpy arrays.
    """

    n_b: int
    n_a: int
    n_eap: int
    site: np.ndarray | None = None   # (..., 1 + L)
    cbs: np.ndarray | None = None    # (..., N_b, N_b)
    eap: np.ndarray | None = None    # (..., L, N_a, N_a)

    @classmethod
    def from_site(cls, site, n_b: int, n_a: int) -> "BlockDiag":
        site = np.asarray(site)
        return cls(n_b, n_a, site.shape[-1] - 1, site=site)

    @classmethod
    def from_blocks(cls, cbs, eap) -> "BlockDiag":
        return cls(cbs.shape[-1], eap.shape[-1], eap.shape[-3], cbs=cbs, eap=eap)

    @property
    def size(self) -> int:
        return self.n_b + self.n_eap * self.n_a

    @property
    def scaled_identity(self) -> bool:
        return self.site is not None

    @property
    def lead(self) -> tuple:
        return self.site.shape[:-1] if self.site is not None else self.cbs.shape[:-2]

    def __getitem__(self, idx) -> "BlockDiag":
        if self.site is not None:
            return BlockDiag(self.n_b, self.n_a, self.n_eap, site=self.site[idx])
        return BlockDiag(self.n_b, self.n_a, self.n_eap, cbs=self.cbs[idx], eap=self.eap[idx])

    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        if self.site is None:
            return self.cbs, self.eap
        cbs = self.site[..., 0, None, None] * np.eye(self.n_b)
        eap = self.site[..., 1:, None, None] * np.eye(self.n_a)
        return cbs, eap

    def as_blocks(self) -> "BlockDiag":
        return BlockDiag.from_blocks(*self.blocks()) if self.site is not None else self

    def diag(self) -> np.ndarray:
        """Per-antenna diagonal, shape (..., M)."""
        if self.site is not None:
            head = np.repeat(self.site[..., :1], self.n_b, axis=-1)
            tail = np.repeat(self.site[..., 1:], self.n_a, axis=-1)
            return np.concatenate([head, tail], axis=-1)
        head = np.diagonal(self.cbs, axis1=-2, axis2=-1)
        tail = np.diagonal(self.eap, axis1=-2, axis2=-1)
        tail = tail.reshape(tail.shape[:-2] + (-1,))
        return np.concatenate([head, tail], axis=-1)

    def dense(self) -> np.ndarray:
        cbs, eap = self.blocks()
        m = self.size
        out = np.zeros(self.lead + (m, m), dtype=np.result_type(cbs, eap))
        out[..., : self.n_b, : self.n_b] = cbs
        for l in range(self.n_eap):
            s = self.n_b + l * self.n_a
            out[..., s: s + self.n_a, s: s + self.n_a] = eap[..., l, :, :]
        return out

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return v[..., : self.n_b], v[..., self.n_b:].reshape(v.shape[:-1] + (self.n_eap, self.n_a))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.site is not None:
            return self.diag() * v
        vb, ve = self.split(v)
        ob = np.einsum("...ij,...j->...i", self.cbs, vb)
        oe = np.einsum("...lij,...lj->...li", self.eap, ve)
        return np.concatenate([ob, oe.reshape(oe.shape[:-2] + (-1,))], axis=-1)

    def quad(self, v: np.ndarray) -> np.ndarray:
        """Real part of v^H A v, broadcast over leading dimensions."""
        if self.site is not None:
            return np.sum(self.diag() * np.abs(v) ** 2, axis=-1)
        vb, ve = self.split(v)
        qb = np.einsum("...i,...ij,...j->...", vb.conj(), self.cbs, vb)
        qe = np.einsum("...li,...lij,...lj->...", ve.conj(), self.eap, ve)
        return np.real(qb + qe)

    def _combine(self, other: "BlockDiag", op) -> "BlockDiag":
        if self.site is not None and other.site is not None:
            return BlockDiag(self.n_b, self.n_a, self.n_eap, site=op(self.site, other.site))
        a, b = self.blocks(), other.blocks()
        return BlockDiag.from_blocks(op(a[0], b[0]), op(a[1], b[1]))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def spectral(self, f) -> "BlockDiag":
        """Apply ``f`` to the eigenvalues of every (Hermitian) block."""
        if self.site is not None:
            return BlockDiag(self.n_b, self.n_a, self.n_eap, site=f(self.site))
        return BlockDiag.from_blocks(_spectral(self.cbs, f), _spectral(self.eap, f))

    def sample(self, rng: np.random.Generator, size: tuple = ()) -> np.ndarray:
        """Draws from CN(0, A) with shape ``size + lead + (M,)``."""
        shape = tuple(size) + self.lead + (self.size,)
        z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        root = self.spectral(lambda w: np.sqrt(np.maximum(w, 0.0)))
        return root.matvec(z)


def _spectral(a: np.ndarray, f) -> np.ndarray:
    if a.shape[-1] == 0 or a.size == 0:
        return a
    w, v = np.linalg.eigh(a)
    return np.einsum("...ij,...j,...kj->...ik", v, f(w), v.conj())


def pair_trace(p: np.ndarray, a: BlockDiag, b: BlockDiag) -> np.ndarray:
    """tr(P A P B) for the diagonal matrix P = diag(p), broadcast over leading dims."""
    if a.site is not None and b.site is not None:
        return np.sum(p ** 2 * a.diag() * b.diag(), axis=-1)
    ab, ae = a.blocks()
    bb, be = b.blocks()
    pb, pe = a.split(p)
    tb = np.einsum("...m,...mn,...n,...nm->...", pb, ab, pb, bb)
    te = np.einsum("...lm,...lmn,...ln,...lnm->...", pe, ae, pe, be)
    return np.real(tb + te)


@dataclass(frozen=True)
class PathLossModel:
    """Three-slope path loss (dB) with log-normal shadowing beyond the far breakpoint."""

    pl_ref_db: float = 140.7
    d0_m: float = 10.0
    d1_m: float = 50.0
    shadow_sigma_db: float = 8.0

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "PathLossModel":
        return cls(config.pl_ref_db, config.pl_d0_m, config.pl_d1_m, config.shadow_sigma_db)

    def path_loss_db(self, d_m) -> np.ndarray:
        d = np.asarray(d_m, dtype=float) / 1000.0
        d0, d1 = self.d0_m / 1000.0, self.d1_m / 1000.0
        d = np.maximum(d, d0)
        near = self.pl_ref_db + 15 * np.log10(d1) + 20 * np.log10(d)
        far = self.pl_ref_db + 35 * np.log10(d)
        return np.where(d > d1, far, near)


@dataclass(frozen=True)
class BetaTable:
    """Large-scale gains ``beta[c, k, iota, l]``: user k of cell c to site l of cell iota (l=0: cBS)."""

    beta: np.ndarray

    @property
    def shape(self):
        return self.beta.shape


def large_scale(topology: Topology, model: PathLossModel, shadow_rng: np.random.Generator) -> BetaTable:
    sites = topology.site_positions()                       # (C, 1+L, 2)
    diff = topology.ue_pos[:, :, None, None, :] - sites[None, None]
    d = np.hypot(diff[..., 0], diff[..., 1])                # (C, K, C, 1+L)
    z = shadow_rng.standard_normal(d.shape) * model.shadow_sigma_db
    z = np.where(d > model.d1_m, z, 0.0)
    return BetaTable(10 ** ((-model.path_loss_db(d) + z) / 10))


def local_scattering_corr(n: int, angle, spread_rad: float, spacing: float = 0.5) -> np.ndarray:
    """Gaussian local-scattering correlation of an ``n``-element ULA, unit diagonal.

    ``angle`` may be an array; the result has shape ``angle.shape + (n, n)``.
    """
    angle = np.asarray(angle, dtype=float)
    if n == 0:
        return np.zeros(angle.shape + (0, 0), dtype=complex)
    lags = np.arange(n)
    if spread_rad == 0:
        col = np.exp(2j * np.pi * spacing * lags * np.sin(angle)[..., None])
    else:
        # deviations truncated at 6 sigma; grid dense enough for the fastest phase rotation
        npts = int(20 * 12 * spread_rad * max(n - 1, 1) * spacing) + 257
        delta = np.linspace(-6 * spread_rad, 6 * spread_rad, npts)
        w = np.exp(-0.5 * (delta / spread_rad) ** 2)
        w /= w.sum()
        flat = angle.reshape(-1)
        col = np.empty((flat.size, n), dtype=complex)
        chunk = max(1, 4_000_000 // (n * npts))
        for s in range(0, flat.size, chunk):
            th = flat[s: s + chunk, None, None] + delta[None, None, :]
            col[s: s + chunk] = np.exp(2j * np.pi * spacing * lags[None, :, None] * np.sin(th)) @ w
        col = col.reshape(angle.shape + (n,))
        col[..., 0] = 1.0
    out = np.empty(angle.shape + (n, n), dtype=complex)
    for idx in np.ndindex(angle.shape):
        out[idx] = toeplitz(col[idx], col[idx].conj())
    return out


@dataclass(frozen=True)
class ChannelRealization:
    """True channels ``h[c, k, iota]``: composite vector from user (c, k) to cell iota's antennas."""

    h: np.ndarray          # (C, K, C, M)
    cov: BlockDiag         # lead (C, K, C)

    def site_vector(self, c: int, k: int, iota: int, l: int) -> np.ndarray:
        n_b, n_a = self.cov.n_b, self.cov.n_a
        if l == 0:
            return self.h[c, k, iota, :n_b]
        s = n_b + (l - 1) * n_a
        return self.h[c, k, iota, s: s + n_a]


def channel_covariance(beta: BetaTable, config: NetworkConfig, rng: np.random.Generator) -> BlockDiag:
    """Per-pair covariance; local scattering draws one nominal angle per (user, site) pair."""
    b = beta.beta
    if b.shape[-1] != config.L_c + 1 or b.shape[:3] != (config.C, config.K_c, config.C):
        raise ValueError(f"beta table shape {b.shape} does not match config")
    if config.fading_mode == "iid":
        return BlockDiag.from_site(b, config.N_b, config.N_a)
    spread = np.deg2rad(config.angular_spread_deg)
    angles = rng.uniform(-np.pi, np.pi, size=b.shape)
    rc = local_scattering_corr(config.N_b, angles[..., 0], spread)
    re = local_scattering_corr(config.N_a, angles[..., 1:], spread)
    return BlockDiag.from_blocks(b[..., 0, None, None] * rc, b[..., 1:, None, None] * re)


def draw_channels(beta: BetaTable, config: NetworkConfig, rng: np.random.Generator,
                  cov: BlockDiag | None = None) -> ChannelRealization:
    if cov is None:
        cov = channel_covariance(beta, config, rng)
    return ChannelRealization(h=cov.sample(rng), cov=cov)
