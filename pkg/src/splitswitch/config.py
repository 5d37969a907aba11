"""Experiment configuration: TOML file plus command-line overrides."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dsl import format_network, load_network
from .reaction_net import ReactionNetwork
from .splitting import GammaExpr, SplitRateSpec, SplittingKernel

__all__ = ["ConfigError", "SplittingConfig", "ExperimentConfig", "load_config", "apply_overrides"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SplittingConfig:
    kind: str
    gamma_N: str
    epsilon_sq: float = 1.0
    shape: str | None = None

    def build(self) -> tuple[SplittingKernel, SplitRateSpec]:
        kernel = SplittingKernel(self.kind)
        return kernel, SplitRateSpec(GammaExpr.parse(self.gamma_N), self.shape, float(self.epsilon_sq))


@dataclass(frozen=True)
class ExperimentConfig:
    network: str
    splitting: SplittingConfig | None = None
    N: int | None = None
    N_list: tuple[int, ...] = ()
    x0: int | None = None
    x0_frac: float | None = None
    t_max: float | None = None
    seed: int = 0
    replicates: int = 1
    workers: int = 1
    output: str = "out"
    bins: int = 100
    switch: str = "auto"
    c: float = 0.1
    n_snapshots: int = 10_000
    record_events: bool = False
    dt: float = 1e-4
    gamma_tilde: float = 1.0
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        _positive(self, "N", integer=True, optional=True)
        _positive(self, "t_max", optional=True)
        _positive(self, "replicates", integer=True)
        _positive(self, "workers", integer=True)
        _positive(self, "bins", integer=True)
        _positive(self, "c")
        _positive(self, "dt")
        _positive(self, "gamma_tilde")
        if self.n_snapshots < 2:
            raise ConfigError("n_snapshots must be at least 2")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.N_list:
            if any(int(n) != n or n <= 0 for n in self.N_list):
                raise ConfigError("N_list entries must be positive integers")
            if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
                raise ConfigError("N_list must be strictly increasing")
        if self.switch not in ("auto", "slow", "fast", "none"):
            raise ConfigError(f"switch must be auto, slow, fast or none, not {self.switch!r}")
        if self.x0 is not None and self.x0_frac is not None:
            raise ConfigError("give either x0 or x0_frac, not both")
        if self.x0_frac is not None and not 0.0 <= self.x0_frac <= 1.0:
            raise ConfigError("x0_frac must lie in [0, 1]")
        if self.x0 is not None and self.N is not None and not 0 <= self.x0 <= self.N:
            raise ConfigError(f"x0={self.x0} outside [0, N={self.N}]")

    @property
    def network_path(self) -> Path:
        p = Path(self.network)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def load_network(self) -> ReactionNetwork:
        return load_network(self.network_path)

    def build_splitting(self):
        if self.splitting is None:
            return None, None
        try:
            return self.splitting.build()
        except ValueError as exc:
            raise ConfigError(f"splitting: {exc}") from None

    def initial_state(self) -> int:
        if self.N is None:
            raise ConfigError("N is required")
        if self.x0 is not None:
            return int(self.x0)
        if self.x0_frac is not None:
            return int(round(self.x0_frac * self.N))
        raise ConfigError("x0 or x0_frac is required for simulate")

    def ladder(self) -> tuple[int, ...]:
        if self.N_list:
            return tuple(int(n) for n in self.N_list)
        if self.N is None:
            raise ConfigError("N or N_list is required")
        return (self.N, 2 * self.N, 4 * self.N)

    def semantic_dict(self) -> dict:
        """Fields that change results; the network enters by content, not by path."""
        d = asdict(self)
        for k in ("output", "workers", "base_dir", "network"):
            d.pop(k)
        d["network_text"] = format_network(self.load_network())
        d["N_list"] = list(self.N_list)
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _positive(cfg, name, integer=False, optional=False):
    v = getattr(cfg, name)
    if v is None and optional:
        return
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if not v > 0:
        raise ConfigError(f"{name} must be positive, got {v!r}")


_SCALARS = {f.name for f in fields(ExperimentConfig)} - {"splitting", "base_dir"}
_SECTIONS = ("simulate", "analyze", "quasipotential")


def _from_mapping(data: dict, base_dir: str) -> ExperimentConfig:
    data = dict(data)
    flat: dict = {}
    for sec in _SECTIONS:
        sub = data.pop(sec, None)
        if sub is not None:
            if not isinstance(sub, dict):
                raise ConfigError(f"[{sec}] must be a table")
            flat.update(sub)
    split = data.pop("splitting", None)
    flat.update(data)
    unknown = set(flat) - _SCALARS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    if "network" not in flat:
        raise ConfigError("config needs a 'network' file")
    if "N_list" in flat:
        flat["N_list"] = tuple(flat["N_list"])
    sc = None
    if split is not None:
        if not isinstance(split, dict):
            raise ConfigError("splitting must be a table")
        extra = set(split) - {"kind", "gamma_N", "epsilon_sq", "shape"}
        if extra:
            raise ConfigError(f"unknown splitting key(s): {', '.join(sorted(extra))}")
        if "kind" not in split or "gamma_N" not in split:
            raise ConfigError("splitting needs 'kind' and 'gamma_N'")
        sc = SplittingConfig(str(split["kind"]), str(split["gamma_N"]), float(split.get("epsilon_sq", 1.0)), split.get("shape"))
    try:
        return ExperimentConfig(splitting=sc, base_dir=base_dir, **flat)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return _from_mapping(data, str(path.parent))


def _coerce(key: str, text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Replace fields; keys ``splitting.<name>`` address the splitting table.

    String values are parsed as TOML literals when possible (``"3"`` -> 3).
    """
    top = {}
    split = asdict(cfg.splitting) if cfg.splitting is not None else None
    for key, val in overrides.items():
        if val is None:
            continue
        if isinstance(val, str):
            val = _coerce(key, val)
        if key.startswith("splitting."):
            name = key.split(".", 1)[1]
            if split is None:
                split = {"kind": None, "gamma_N": None, "epsilon_sq": 1.0, "shape": None}
            if name not in split:
                raise ConfigError(f"unknown splitting key {name!r}")
            split[name] = val
        elif key in _SCALARS:
            top[key] = tuple(val) if key == "N_list" else val
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if split is not None:
        if split["kind"] is None or split["gamma_N"] is None:
            raise ConfigError("splitting overrides need both kind and gamma_N")
        top["splitting"] = SplittingConfig(str(split["kind"]), str(split["gamma_N"]), float(split["epsilon_sq"]), split["shape"])
    try:
        return replace(cfg, **top)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
