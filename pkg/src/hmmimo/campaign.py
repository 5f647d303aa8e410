"""Monte Carlo drops, per-user SE samples and their empirical distributions."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import downlink, uplink
from .config import ConfigError, NetworkConfig
from .estimation import EstimateSet, assign_pilots, estimate_channels
from .propagation import BetaTable, ChannelRealization, PathLossModel, draw_channels, large_scale
from .rng import stream
from .topology import Topology, place_topology

CSV_COLUMNS = ("scenario", "drop", "cell", "user", "se_ul", "se_dl", "gamma_ul",
               "gamma_dl_paper", "gamma_dl_rigorous")


@dataclass(frozen=True)
class SeSample:
    drop_index: int
    cell: int
    user: int
    se_ul: float
    se_dl: float
    gamma_ul: float
    gamma_dl_paper: float
    gamma_dl_rigorous: float


@dataclass(frozen=True)
class DropState:
    topology: Topology
    beta: BetaTable
    channels: ChannelRealization
    estimates: EstimateSet
    power: downlink.PowerControl


def simulate_drop(config: NetworkConfig, drop_index: int, topology: Topology | None = None) -> DropState:
    """Geometry, fading, estimates and power control of one drop, each from its own stream."""
    seed = config.seed
    if topology is None:
        topology = place_topology(config, stream(seed, drop_index, "topology"), drop_index)
    beta = large_scale(topology, PathLossModel.from_config(config), stream(seed, drop_index, "shadowing"))
    channels = draw_channels(beta, config, stream(seed, drop_index, "fading"))
    pilots = assign_pilots(config, stream(seed, drop_index, "pilots"))
    estimates = estimate_channels(channels, pilots, config, stream(seed, drop_index, "estimation"),
                                  beta=beta)
    power = downlink.dl_power_control(estimates, config)
    return DropState(topology, beta, channels, estimates, power)


def evaluate_drop(config: NetworkConfig, state: DropState, drop_index: int) -> list[SeSample]:
    eta = np.ones((config.C, config.K_c))
    g_ul = uplink.ul_sinr_all(state.estimates, state.channels.cov, eta, config)
    g_paper = downlink.dl_sinr_all(state.estimates, state.channels.cov, state.power, config, "paper")
    g_rig = downlink.dl_sinr_all(state.estimates, state.channels.cov, state.power, config, "rigorous")
    if config.dl_mode == "paper":
        g_dl = g_paper
    elif config.dl_mode == "rigorous":
        g_dl = g_rig
    else:
        g_dl = downlink.dl_sinr_all(state.estimates, state.channels.cov, state.power, config, "proof")
    se_ul = uplink.ul_se(g_ul, config)
    se_dl = downlink.dl_se(g_dl)
    out = []
    for c in range(config.C):
        for k in range(config.K_c):
            out.append(SeSample(drop_index, c, k, float(se_ul[c, k]), float(se_dl[c, k]),
                                float(g_ul[c, k]), float(g_paper[c, k]), float(g_rig[c, k])))
    return out


def run_drop(config: NetworkConfig, drop_index: int, topology: Topology | None = None) -> list[SeSample]:
    """All C*K_c samples of one drop; a pure function of (config, drop_index)."""
    return evaluate_drop(config, simulate_drop(config, drop_index, topology), drop_index)


@dataclass(frozen=True)
class CdfSummary:
    sorted_se: np.ndarray

    @classmethod
    def from_values(cls, values) -> "CdfSummary":
        arr = np.sort(np.asarray(values, dtype=float))
        arr.setflags(write=False)
        return cls(arr)

    @property
    def n(self) -> int:
        return int(self.sorted_se.size)

    def percentile(self, q: float) -> float:
        return percentile(self, q)

    @property
    def likely95(self) -> float:
        return percentile(self, 0.05)

    def percentile_stderr(self, q: float) -> float:
        """Distribution-free standard error from the binomial order-statistic band."""
        n = self.n
        half = 1.96 * math.sqrt(n * q * (1 - q))
        lo = int(np.clip(math.floor(n * q - half), 0, n - 1))
        hi = int(np.clip(math.ceil(n * q + half), 0, n - 1))
        return float(self.sorted_se[hi] - self.sorted_se[lo]) / (2 * 1.96)


def percentile(summary: CdfSummary, q: float) -> float:
    """Lower empirical quantile: element ceil(q*n) - 1 of the sorted samples, clamped."""
    if summary.n == 0:
        raise ValueError("percentile of an empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    # rounding guards products like 0.07*100 = 7.000000000000001
    idx = math.ceil(round(q * summary.n, 9)) - 1
    return float(summary.sorted_se[min(max(idx, 0), summary.n - 1)])


@dataclass
class CampaignResult:
    config: NetworkConfig
    samples: list[SeSample] = field(default_factory=list)

    @property
    def scenario(self) -> str:
        return self.config.scenario

    @property
    def ul(self) -> CdfSummary:
        return CdfSummary.from_values([s.se_ul for s in self.samples])

    @property
    def dl(self) -> CdfSummary:
        return CdfSummary.from_values([s.se_dl for s in self.samples])

    def summary(self) -> dict:
        ul, dl = self.ul, self.dl
        return {
            "n": ul.n,
            "mean": {"ul": float(np.mean(ul.sorted_se)), "dl": float(np.mean(dl.sorted_se))},
            "median": {"ul": ul.percentile(0.5), "dl": dl.percentile(0.5)},
            "likely95_ul": ul.likely95,
            "likely95_dl": dl.likely95,
            "likely95_ul_stderr": ul.percentile_stderr(0.05),
            "likely95_dl_stderr": dl.percentile_stderr(0.05),
        }


def _drop_job(args):
    config, drop_index = args
    return run_drop(config, drop_index)


def run_campaign(config: NetworkConfig, drops: int | None = None, workers: int = 1,
                 progress=None) -> CampaignResult:
    """Run ``drops`` drops (default ``config.drops``) and keep their samples in drop order."""
    drops = config.drops if drops is None else drops
    if drops < 1:
        raise ConfigError("drops must be >= 1", key="drops")
    result = CampaignResult(config)
    jobs = [(config, i) for i in range(drops)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = pool.map(_drop_job, jobs, chunksize=max(1, drops // (8 * workers)))
            for i, batch in enumerate(batches):
                result.samples.extend(batch)
                if progress:
                    progress(i + 1, drops)
    else:
        for i, job in enumerate(jobs):
            result.samples.extend(_drop_job(job))
            if progress:
                progress(i + 1, drops)
    return result


def check_equal_budget(configs: dict[str, NetworkConfig]) -> None:
    """All scenarios must field the same total antenna count and the same number of UEs."""
    antennas = {s: c.total_antennas for s, c in configs.items()}
    users = {s: c.total_users for s, c in configs.items()}
    if len(set(antennas.values())) > 1:
        raise ConfigError(f"unequal antenna budgets across scenarios: {antennas}", key="N_b")
    if len(set(users.values())) > 1:
        raise ConfigError(f"unequal UE counts across scenarios: {users}", key="K_c")


def run_comparison(configs: dict[str, NetworkConfig], allow_unequal: bool = False,
                   workers: int = 1) -> dict[str, CampaignResult]:
    if not allow_unequal:
        check_equal_budget(configs)
    return {s: run_campaign(c, workers=workers) for s, c in configs.items()}


def _fmt(x: float) -> str:
    return repr(float(x))


def results_csv(results: dict[str, CampaignResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for scenario, res in results.items():
        for s in res.samples:
            w.writerow([scenario, s.drop_index, s.cell, s.user, _fmt(s.se_ul), _fmt(s.se_dl),
                        _fmt(s.gamma_ul), _fmt(s.gamma_dl_paper), _fmt(s.gamma_dl_rigorous)])
    return buf.getvalue()


def summary_json(results: dict[str, CampaignResult]) -> str:
    return json.dumps({s: r.summary() for s, r in results.items()}, indent=2, sort_keys=True) + "\n"
