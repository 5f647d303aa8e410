"""Random drop geometry: cBS, eAP and UE positions for the three deployment scenarios."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig


@dataclass(frozen=True)
class Topology:
    cbs_pos: np.ndarray   # (C, 2)
    eap_pos: np.ndarray   # (C, L_c, 2)
    ue_pos: np.ndarray    # (C, K_c, 2)
    drop_index: int = 0

    @property
    def n_cells(self) -> int:
        return self.cbs_pos.shape[0]

    def site_positions(self) -> np.ndarray:
        """Positions of every site as (C, 1 + L_c, 2); index 0 is the cBS."""
        return np.concatenate([self.cbs_pos[:, None, :], self.eap_pos], axis=1)


def cell_origins(config: NetworkConfig) -> np.ndarray:
    """Lower-left corner of each cell, row-major over the square grid."""
    n = round(config.area_m / config.cell_m)
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    return np.stack([ix.ravel(), iy.ravel()], axis=1) * config.cell_m


def perimeter_points(n: int, side: float, inset: float) -> np.ndarray:
    """``n`` points evenly spaced by arc length on the square of side ``side - 2*inset``.

    Coordinates are relative to the cell's lower-left corner; the first point sits half a
    spacing from the lower-left corner of the inset square, going counter-clockwise.
    """
    inner = side - 2 * inset
    perim = 4 * inner
    s = (np.arange(n) + 0.5) * perim / n
    edge = np.minimum((s // inner).astype(int), 3)
    t = s - edge * inner
    x = np.select([edge == 0, edge == 1, edge == 2, edge == 3], [t, inner, inner - t, 0.0])
    y = np.select([edge == 0, edge == 1, edge == 2, edge == 3], [0.0, t, inner, inner - t])
    return np.stack([x, y], axis=1) + inset


def place_topology(config: NetworkConfig, drop_rng: np.random.Generator, drop_index: int = 0) -> Topology:
    """Draw one drop. Deterministic in the state of ``drop_rng``."""
    config.validate_geometry()
    origins = cell_origins(config)
    cbs = origins + config.cell_m / 2
    if config.scenario == "cfmmimo":
        eap = drop_rng.uniform(0.0, config.area_m, size=(1, config.C * config.L_c, 2))
    elif config.L_c:
        ring = perimeter_points(config.L_c, config.cell_m, config.eap_inset_m)
        eap = origins[:, None, :] + ring[None, :, :]
    else:
        eap = np.zeros((config.C, 0, 2))

    # sites that actually radiate, for the minimum-distance rule
    sites = [eap.reshape(-1, 2)]
    if config.N_b:
        sites.append(cbs)
    sites = np.concatenate(sites, axis=0)

    ue = np.empty((config.C, config.K_c, 2))
    for c in range(config.C):
        for k in range(config.K_c):
            while True:
                p = origins[c] + drop_rng.uniform(0.0, config.cell_m, size=2)
                if sites.size == 0 or np.min(np.hypot(*(sites - p).T)) >= config.min_distance_m:
                    break
            ue[c, k] = p
    return Topology(cbs_pos=cbs, eap_pos=eap, ue_pos=ue, drop_index=drop_index)
