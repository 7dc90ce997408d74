"""TOML run configurations: parsing, validation and canonical hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import ConfigError
from .model import Region, SpinorLattice, build_model, lapse_profile

KNOWN_SUITES = ("car", "wick", "coeff", "ps", "factor", "resolvent", "rescale")


@dataclass(frozen=True)
class ModelConfig:
    n_sites: int = 32
    spacing: float = 1.0
    mass: float = 1.0
    lapse: Union[float, Tuple[float, ...], str] = 1.0
    lapse_amplitude: float = 0.2
    lapse_width: float = 0.25
    zero_mode_policy: str = "reject"


@dataclass(frozen=True)
class RegionConfig:
    sites: Tuple[Tuple[int, int], ...] = ()  # half-open [start, stop) ranges
    chi_falloff: int = 0


@dataclass(frozen=True)
class ScanConfig:
    beta_min: float = 0.5
    beta_max: float = 4.0
    n_points: int = 12
    log_spaced: bool = True
    p: Tuple[float, ...] = (0.5, 1.0, 2.0)
    s_power: int = 1


@dataclass(frozen=True)
class CheckConfig:
    suites: Tuple[str, ...] = KNOWN_SUITES
    lambdas: Tuple[float, ...] = (0.5, 2.0, 4.0)
    corrupt_theta: bool = False
    sizes: Tuple[int, ...] = (8, 16, 32, 64)
    rank: int = 4
    decay: float = 1.0
    scale: float = 0.2
    ps_trials: int = 200
    factor_instances: int = 5
    coeff_words: int = 10


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: Tuple[str, ...] = ("csv", "json")
    seed: int = 42


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    check: CheckConfig = field(default_factory=CheckConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source_hash: str = ""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    _require(isinstance(sec, dict), f"[{name}] must be a table")
    return sec


def _take(sec: dict, section: str, key: str, types, default):
    if key not in sec:
        return default
    value = sec.pop(key)
    if not isinstance(value, types):
        raise ConfigError(f"{section}.{key}: expected {types}, got {type(value).__name__}")
    return value


def _no_leftovers(sec: dict, section: str) -> None:
    _require(not sec, f"unknown key(s) in [{section}]: {', '.join(sorted(sec))}")


def _parse_model(raw: dict) -> ModelConfig:
    sec = dict(_section(raw, "model"))
    n_sites = _take(sec, "model", "n_sites", int, 32)
    _require(n_sites >= 2, f"model.n_sites must be >= 2, got {n_sites}")
    spacing = float(_take(sec, "model", "spacing", (int, float), 1.0))
    _require(spacing > 0, f"model.spacing must be positive, got {spacing}")
    mass = float(_take(sec, "model", "mass", (int, float), 1.0))
    _require(mass >= 0, f"model.mass must be nonnegative, got {mass}")
    lapse = _take(sec, "model", "lapse", (int, float, list, str), 1.0)
    if isinstance(lapse, list):
        _require(len(lapse) == n_sites,
                 f"model.lapse: array length {len(lapse)} does not match n_sites {n_sites}")
        _require(all(isinstance(x, (int, float)) for x in lapse),
                 "model.lapse: array entries must be numbers")
        lapse = tuple(float(x) for x in lapse)
    elif isinstance(lapse, (int, float)):
        lapse = float(lapse)
    amplitude = float(_take(sec, "model", "lapse_amplitude", (int, float), 0.2))
    width = float(_take(sec, "model", "lapse_width", (int, float), 0.25))
    policy = _take(sec, "model", "zero_mode_policy", str, "reject")
    _require(policy in ("reject", "positive"),
             f"model.zero_mode_policy must be 'reject' or 'positive', got {policy!r}")
    _no_leftovers(sec, "model")
    return ModelConfig(n_sites=n_sites, spacing=spacing, mass=mass, lapse=lapse,
                       lapse_amplitude=amplitude, lapse_width=width, zero_mode_policy=policy)


def _parse_region(raw: dict, n_sites: int) -> RegionConfig:
    sec = dict(_section(raw, "region"))
    ranges = _take(sec, "region", "sites", list, [[0, n_sites // 2]])
    parsed = []
    for r in ranges:
        ok = isinstance(r, list) and len(r) == 2 and all(isinstance(x, int) for x in r)
        _require(ok, f"region.sites: each entry must be [start, stop], got {r!r}")
        start, stop = r
        _require(0 <= start <= stop <= n_sites,
                 f"region.sites: range [{start}, {stop}) out of bounds for {n_sites} sites")
        parsed.append((start, stop))
    chi_falloff = _take(sec, "region", "chi_falloff", int, 0)
    _require(chi_falloff >= 0, f"region.chi_falloff must be >= 0, got {chi_falloff}")
    _no_leftovers(sec, "region")
    return RegionConfig(sites=tuple(parsed), chi_falloff=chi_falloff)


def _parse_scan(raw: dict) -> ScanConfig:
    sec = dict(_section(raw, "scan"))
    beta_min = float(_take(sec, "scan", "beta_min", (int, float), 0.5))
    beta_max = float(_take(sec, "scan", "beta_max", (int, float), 4.0))
    n_points = _take(sec, "scan", "n_points", int, 12)
    log_spaced = _take(sec, "scan", "log_spaced", bool, True)
    p_list = _take(sec, "scan", "p", list, [0.5, 1.0, 2.0])
    s_power = _take(sec, "scan", "s_power", int, 1)
    _require(beta_min > 0, f"scan.beta_min must be positive, got {beta_min}")
    _require(beta_max > beta_min, "scan.beta_max must exceed scan.beta_min")
    _require(n_points >= 2, f"scan.n_points must be >= 2, got {n_points}")
    _require(all(isinstance(x, (int, float)) and x > 0 for x in p_list),
             "scan.p entries must be positive numbers")
    _require(s_power >= 1, f"scan.s_power must be >= 1, got {s_power}")
    _no_leftovers(sec, "scan")
    return ScanConfig(beta_min=beta_min, beta_max=beta_max, n_points=n_points,
                      log_spaced=log_spaced, p=tuple(float(x) for x in p_list),
                      s_power=s_power)


def _parse_check(raw: dict) -> CheckConfig:
    sec = dict(_section(raw, "check"))
    suites = _take(sec, "check", "suites", list, list(KNOWN_SUITES))
    for s in suites:
        _require(s in KNOWN_SUITES, f"check.suites: unknown suite {s!r}")
    lambdas = _take(sec, "check", "lambdas", list, [0.5, 2.0, 4.0])
    _require(all(isinstance(x, (int, float)) and x > 0 for x in lambdas),
             "check.lambdas entries must be positive numbers")
    sizes = _take(sec, "check", "sizes", list, [8, 16, 32, 64])
    _require(all(isinstance(x, int) and x >= 2 for x in sizes),
             "check.sizes entries must be integers >= 2")
    out = CheckConfig(
        suites=tuple(suites),
        lambdas=tuple(float(x) for x in lambdas),
        corrupt_theta=_take(sec, "check", "corrupt_theta", bool, False),
        sizes=tuple(sizes),
        rank=_take(sec, "check", "rank", int, 4),
        decay=float(_take(sec, "check", "decay", (int, float), 1.0)),
        scale=float(_take(sec, "check", "scale", (int, float), 0.2)),
        ps_trials=_take(sec, "check", "ps_trials", int, 200),
        factor_instances=_take(sec, "check", "factor_instances", int, 5),
        coeff_words=_take(sec, "check", "coeff_words", int, 10),
    )
    _require(out.rank >= 1, "check.rank must be >= 1")
    _require(out.decay > 0, "check.decay must be positive")
    _no_leftovers(sec, "check")
    return out


def _parse_output(raw: dict) -> OutputConfig:
    sec = dict(_section(raw, "output"))
    directory = _take(sec, "output", "directory", str, "out")
    formats = _take(sec, "output", "formats", list, ["csv", "json"])
    for f in formats:
        _require(f in ("csv", "json"), f"output.formats: unknown format {f!r}")
    seed = _take(sec, "output", "seed", int, 42)
    _no_leftovers(sec, "output")
    return OutputConfig(directory=directory, formats=tuple(formats), seed=seed)


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_canonical(x) for x in obj]
    if isinstance(obj, float):
        return repr(obj)
    return obj


def config_hash(raw: dict) -> str:
    """Hash of the parsed configuration; stable under re-serialization."""
    blob = json.dumps(_canonical(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(raw: dict) -> RunConfig:
    _require(isinstance(raw, dict), "configuration root must be a table")
    for key in raw:
        _require(key in ("model", "region", "scan", "check", "output"),
                 f"unknown section [{key}]")
    digest = config_hash(raw)
    model = _parse_model(raw)
    return RunConfig(
        model=model,
        region=_parse_region(raw, model.n_sites),
        scan=_parse_scan(raw),
        check=_parse_check(raw),
        output=_parse_output(raw),
        source_hash=digest,
    )


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")
    return parse_config(raw)


def lattice_from_config(cfg: RunConfig) -> SpinorLattice:
    mc = cfg.model
    if isinstance(mc.lapse, str):
        lapse = lapse_profile(mc.lapse, mc.n_sites, mc.lapse_amplitude, mc.lapse_width)
    elif isinstance(mc.lapse, tuple):
        lapse = np.asarray(mc.lapse)
    else:
        lapse = np.full(mc.n_sites, mc.lapse)
    return SpinorLattice(n_sites=mc.n_sites, spacing=mc.spacing, lapse=lapse)


def model_from_config(cfg: RunConfig):
    return build_model(lattice_from_config(cfg), cfg.model.mass)


def region_from_config(cfg: RunConfig, lattice: SpinorLattice) -> Region:
    sites: List[int] = []
    for start, stop in cfg.region.sites:
        sites.extend(range(start, stop))
    region = Region(lattice, tuple(sites))
    if cfg.region.chi_falloff > 0:
        region = region.with_smooth_chi(cfg.region.chi_falloff)
    return region


def beta_grid_from_config(cfg: RunConfig) -> np.ndarray:
    sc = cfg.scan
    if sc.log_spaced:
        return np.geomspace(sc.beta_min, sc.beta_max, sc.n_points)
    return np.linspace(sc.beta_min, sc.beta_max, sc.n_points)
