import numpy as np
import pytest
from scipy import stats

from hmmimo.config import NetworkConfig, derive_scenario
from hmmimo.rng import stream
from hmmimo.topology import perimeter_points, place_topology


def _in_cells(cfg, topo):
    n = round(cfg.area_m / cfg.cell_m)
    for c in range(cfg.C):
        lo = np.array([c % n, c // n]) * cfg.cell_m
        assert np.all(topo.ue_pos[c] >= lo) and np.all(topo.ue_pos[c] <= lo + cfg.cell_m)


def test_hmmimo_layout():
    cfg = NetworkConfig()
    topo = place_topology(cfg, stream(0, 0, "topology"))
    assert topo.cbs_pos.shape == (4, 2)
    assert topo.eap_pos.shape == (4, 16, 2)
    np.testing.assert_allclose(sorted(map(tuple, topo.cbs_pos)),
                               [(250, 250), (250, 750), (750, 250), (750, 750)])
    assert np.all((topo.eap_pos >= 0) & (topo.eap_pos <= cfg.area_m))
    _in_cells(cfg, topo)


def test_eaps_on_inset_perimeter():
    pts = perimeter_points(16, 500.0, 10.0)
    on_edge = np.isclose(pts, 10.0) | np.isclose(pts, 490.0)
    assert np.all(on_edge.any(axis=1))
    # equal arc-length spacing: 4 per side, 120 m apart
    side = pts[np.isclose(pts[:, 1], 10.0), 0]
    np.testing.assert_allclose(np.diff(np.sort(side)), 120.0)


def test_cmmimo_has_no_eaps():
    cfg = derive_scenario(NetworkConfig(), "cmmimo")
    topo = place_topology(cfg, stream(0, 0, "topology"))
    assert topo.eap_pos.shape == (4, 0, 2)


def test_cfmmimo_aps_cover_area():
    cfg = derive_scenario(NetworkConfig(), "cfmmimo")
    topo = place_topology(cfg, stream(0, 0, "topology"))
    assert topo.eap_pos.shape == (1, 128, 2)
    assert topo.ue_pos.shape == (1, 32, 2)
    assert np.all((topo.eap_pos >= 0) & (topo.eap_pos <= 1000))


def test_deterministic():
    cfg = NetworkConfig()
    a = place_topology(cfg, stream(3, 7, "topology"))
    b = place_topology(cfg, stream(3, 7, "topology"))
    np.testing.assert_array_equal(a.ue_pos, b.ue_pos)
    np.testing.assert_array_equal(a.eap_pos, b.eap_pos)


def test_minimum_distance_respected():
    cfg = NetworkConfig(min_distance_m=40.0)
    topo = place_topology(cfg, stream(0, 1, "topology"))
    sites = topo.site_positions().reshape(-1, 2)
    d = np.hypot(*(topo.ue_pos.reshape(-1, 1, 2) - sites[None]).transpose(2, 0, 1))
    assert d.min() >= 40.0


def test_users_uniform_in_cell():
    cfg = NetworkConfig(L_c=0, N_b=8, K_c=8, scenario="cmmimo", min_distance_m=0.0)
    xs = np.concatenate([place_topology(cfg, stream(0, i, "topology")).ue_pos[0, :, 0]
                         for i in range(200)])
    assert stats.kstest(xs, "uniform", args=(0, 500)).pvalue > 1e-3
