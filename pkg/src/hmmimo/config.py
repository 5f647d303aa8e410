"""Deployment parameters, config-file parsing and scenario derivation."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, fields
from pathlib import Path

SCENARIOS = ("hmmimo", "cfmmimo", "cmmimo")
FADING_MODES = ("iid", "local_scattering")
DL_MODES = ("paper", "rigorous", "proof")


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending field, ``line`` its line in the file."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 path: str | None = None):
        super().__init__(message)
        self.message = message
        self.key = key
        self.line = line
        self.path = path

    def __str__(self) -> str:
        where = ""
        if self.path is not None:
            where = f"{self.path}:{self.line}: " if self.line is not None else f"{self.path}: "
        elif self.line is not None:
            where = f"line {self.line}: "
        return where + self.message


@dataclass(frozen=True)
class NetworkConfig:
    # geometry and antenna budget
    C: int = 4
    N_b: int = 64
    L_c: int = 16
    N_a: int = 4
    K_c: int = 8
    # TDD block
    tau_c: int = 200
    tau_p: int = 8
    # powers, W (illustrative defaults)
    p_u: float = 0.1
    p_d: float = 1.0
    # thermal noise
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    bandwidth_hz: float = 5e6
    # layout, m
    area_m: float = 1000.0
    cell_m: float = 500.0
    eap_inset_m: float = 10.0
    min_distance_m: float = 5.0
    # Monte Carlo
    drops: int = 1000
    seed: int = 0
    # small-scale fading
    fading_mode: str = "iid"
    angular_spread_deg: float = 15.0
    # three-slope path loss (community-standard constants, 1.9 GHz, 15 m / 1.65 m heights)
    pl_ref_db: float = 140.7
    pl_d0_m: float = 10.0
    pl_d1_m: float = 50.0
    shadow_sigma_db: float = 8.0
    # estimation / downlink reporting
    pilot_gain: bool = False
    dl_mode: str = "paper"
    scenario: str = "hmmimo"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(msg, key):
            raise ConfigError(msg, key=key)

        for name in ("C", "N_b", "L_c", "N_a", "K_c", "tau_c", "tau_p", "drops"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                bad(f"{name} must be an integer, got {v!r}", name)
        for name in ("C", "N_a", "K_c", "tau_c", "tau_p", "drops"):
            if getattr(self, name) < 1:
                bad(f"{name} must be >= 1", name)
        for name in ("N_b", "L_c"):
            if getattr(self, name) < 0:
                bad(f"{name} must be >= 0", name)
        if self.tau_p > self.tau_c:
            bad(f"tau_p={self.tau_p} exceeds tau_c={self.tau_c}", "tau_p")
        if self.K_c > self.tau_p:
            bad(f"K_c={self.K_c} exceeds tau_p={self.tau_p}; in-cell pilots must be orthogonal", "K_c")
        if self.M_c <= 0:
            bad("no service antennas: N_b + L_c*N_a must be positive", "N_b")
        for name in ("p_u", "p_d", "area_m", "cell_m"):
            if not getattr(self, name) > 0:
                bad(f"{name} must be positive", name)
        if self.bandwidth_hz <= 0:
            bad("bandwidth_hz must be positive", "bandwidth_hz")
        if self.eap_inset_m < 0 or 2 * self.eap_inset_m >= self.cell_m:
            bad("eap_inset_m must lie in [0, cell_m/2)", "eap_inset_m")
        if self.min_distance_m < 0:
            bad("min_distance_m must be >= 0", "min_distance_m")
        if self.fading_mode not in FADING_MODES:
            bad(f"fading_mode must be one of {FADING_MODES}", "fading_mode")
        if self.angular_spread_deg < 0:
            bad("angular_spread_deg must be >= 0", "angular_spread_deg")
        if not (self.pl_d0_m > 0 and self.pl_d1_m > self.pl_d0_m):
            bad("path-loss breakpoints need 0 < pl_d0_m < pl_d1_m", "pl_d1_m")
        if self.shadow_sigma_db < 0:
            bad("shadow_sigma_db must be >= 0", "shadow_sigma_db")
        if self.dl_mode not in DL_MODES:
            bad(f"dl_mode must be one of {DL_MODES}", "dl_mode")
        if self.scenario not in SCENARIOS:
            bad(f"scenario must be one of {SCENARIOS}", "scenario")
        if self.scenario == "cmmimo" and self.L_c != 0:
            bad("scenario cmmimo requires L_c = 0", "L_c")
        if self.scenario == "cfmmimo" and (self.N_b != 0 or self.C != 1):
            bad("scenario cfmmimo requires N_b = 0 and C = 1", "N_b")

    def validate_geometry(self) -> None:
        """Square-grid layout checks, needed only when positions are drawn."""
        ratio = self.area_m / self.cell_m
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("area_m must be an integer multiple of cell_m", key="cell_m")
        if self.C != round(ratio) ** 2:
            raise ConfigError(f"C={self.C} inconsistent with (area_m/cell_m)^2={round(ratio) ** 2}",
                              key="C")

    @property
    def M_c(self) -> int:
        """Service antennas per cell."""
        return self.N_b + self.L_c * self.N_a

    @property
    def total_antennas(self) -> int:
        return self.C * self.M_c

    @property
    def total_users(self) -> int:
        return self.C * self.K_c

    @property
    def noise_w(self) -> float:
        return noise_power(self)

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def canonical_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def noise_power(config: NetworkConfig) -> float:
    """Thermal noise power in watts over the configured bandwidth."""
    if not config.bandwidth_hz > 0:
        raise ConfigError("bandwidth_hz must be positive", key="bandwidth_hz")
    dbm = config.noise_psd_dbm_hz + 10 * math.log10(config.bandwidth_hz) + config.noise_figure_db
    return 10 ** ((dbm - 30) / 10)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(raw: str, typ: type, key: str):
    if typ is bool:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean for {key}, got {raw!r}")
    if typ is int:
        try:
            return int(raw)
        except ValueError:
            f = float(raw)
            if f != int(f):
                raise ValueError(f"expected an integer for {key}, got {raw!r}") from None
            return int(f)
    if typ is float:
        return float(raw)
    return raw


_FIELD_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def parse_config(text: str, path: str | None = None, **overrides) -> NetworkConfig:
    """Parse ``key = value`` lines (``#`` starts a comment); unknown keys are rejected."""
    types = {f.name: _FIELD_TYPES[f.type] for f in fields(NetworkConfig)}
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, raw = line.partition("=")
        elif ":" in line:
            key, _, raw = line.partition(":")
        else:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", line=lineno, path=path)
        key, raw = key.strip(), raw.strip()
        if key not in types:
            raise ConfigError(f"unknown key {key!r}", key=key, line=lineno, path=path)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})",
                              key=key, line=lineno, path=path)
        try:
            values[key] = _parse_value(raw, types[key], key)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key, line=lineno, path=path) from None
        lines[key] = lineno
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = NetworkConfig(**values)
        config.validate_geometry()
        return config
    except ConfigError as exc:
        exc.path = path
        exc.line = lines.get(exc.key)
        raise


def load_config(path: str | Path, **overrides) -> NetworkConfig:
    path = Path(path)
    text = path.read_text()
    return parse_config(text, path=str(path), **overrides)


def derive_scenario(config: NetworkConfig, scenario: str) -> NetworkConfig:
    """Re-arrange a heterogeneous deployment into ``scenario`` with the same antenna and UE budget.

    Cellular moves every eAP antenna into the cBS. Cell-free merges all cells into one and
    splits the whole antenna budget into ``N_a``-antenna APs placed at random.
    """
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}", key="scenario")
    if scenario == config.scenario:
        return config
    if config.scenario != "hmmimo":
        raise ConfigError(
            f"can only derive other scenarios from an hmmimo config, not {config.scenario!r}",
            key="scenario")
    if scenario == "cmmimo":
        return config.replace(scenario="cmmimo", N_b=config.M_c, L_c=0)
    total = config.total_antennas
    if total % config.N_a:
        raise ConfigError(f"antenna budget {total} not divisible into {config.N_a}-antenna APs",
                          key="N_a")
    users = config.total_users
    # a single logical cell needs one orthogonal pilot per UE
    return config.replace(scenario="cfmmimo", C=1, N_b=0, L_c=total // config.N_a, K_c=users,
                          cell_m=config.area_m, tau_p=max(config.tau_p, users))


_NOTES = {
    "C": "cells on a square grid; must equal (area_m/cell_m)^2",
    "N_b": "cBS antennas per cell",
    "L_c": "eAPs per cell, evenly spaced on a square inset eap_inset_m from the cell edge",
    "N_a": "antennas per eAP",
    "K_c": "UEs per cell, at most tau_p",
    "tau_c": "coherence block length in channel uses",
    "tau_p": "pilot length; the UL pre-log is 1 - tau_p/tau_c",
    "p_u": "UE transmit power in W; illustrative, not a reference value",
    "p_d": "per-site DL power budget in W; illustrative, not a reference value",
    "pl_ref_db": "three-slope path loss: community-standard constant (1.9 GHz, 15 m / 1.65 m heights)",
    "pl_d0_m": "near breakpoint; community-standard value",
    "pl_d1_m": "far breakpoint; community-standard value",
    "shadow_sigma_db": "log-normal shadowing beyond pl_d1_m; community-standard value",
    "fading_mode": "one of " + ", ".join(FADING_MODES),
    "angular_spread_deg": "Gaussian angular spread for local_scattering",
    "pilot_gain": "true: pilot SNR tau_p*p_u*beta/sigma^2 instead of p_u*beta/sigma^2",
    "dl_mode": "closed form used for se_dl: " + ", ".join(DL_MODES),
    "scenario": "one of " + ", ".join(SCENARIOS),
}


def schema_text() -> str:
    """Every accepted key with its type and default, in config-file syntax."""
    out = ["# hmmimo network configuration: one 'key = value' per line, '#' starts a comment."]
    for f in fields(NetworkConfig):
        note = _NOTES.get(f.name)
        out.append(f"# {f.name} ({f.type})" + (f": {note}" if note else ""))
        out.append(f"{f.name} = {_format_value(f.default)}")
    return "\n".join(out) + "\n"
