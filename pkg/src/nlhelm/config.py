"""Run configuration: flat ``key = value`` text with ``[section]`` headers.

Example::

    [grid]
    N = 2
    M = 64
    L = 8

    [problem]
    p = 6
    lambdas = 1.5, 2, 4

    [weight]
    preset = two_balls_2d
    minus_radius = 0.4      # overrides the preset

Keys may also be written fully qualified (``grid.M = 64``). ``#`` and ``;``
start comments.
"""
from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from nlhelm.errors import ConfigError, DomainError
from nlhelm.numerics.grid_field import Grid
from nlhelm.variational.mountain_pass import MpOptions
from nlhelm.weights.presets import get_preset
from nlhelm.weights.profiles import WeightSpec

logger = logging.getLogger(__name__)

SECTIONS = ("grid", "problem", "weight", "mp", "output")

ENV_OUTPUT_DIR = "NLHELM_OUTPUT_DIR"
ENV_WORKERS = "NLHELM_WORKERS"
ENV_LOG_LEVEL = "NLHELM_LOG_LEVEL"
DEFAULT_OUTPUT_DIR = "artifacts"

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


# ---------------------------------------------------------------------------
# Value converters
# ---------------------------------------------------------------------------
def _to_int(text: str) -> int:
    return int(text)


def _to_float(text: str) -> float:
    return float(text)


def _to_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _to_floats(text: str) -> tuple[float, ...]:
    items = [item.strip() for item in text.split(",")]
    if not all(items):
        raise ValueError(f"empty entry in list {text!r}")
    return tuple(float(item) for item in items)


def _to_str(text: str) -> str:
    if not text:
        raise ValueError("empty value")
    return text


def _to_optional_float(text: str) -> float | None:
    return None if text.lower() == "auto" else float(text)


_KEYS: dict[str, Callable[[str], Any]] = {
    "grid.N": _to_int,
    "grid.M": _to_int,
    "grid.L": _to_float,
    "problem.p": _to_float,
    "problem.strict": _to_bool,
    "problem.lambdas": _to_floats,
    "problem.lambda_min": _to_float,
    "problem.lambda_max": _to_float,
    "problem.lambda_count": _to_int,
    "problem.wavenumber": _to_float,
    "weight.preset": _to_str,
    "weight.kind": _to_str,
    "weight.center": _to_floats,
    "weight.plus_center": _to_floats,
    "weight.plus_radius": _to_float,
    "weight.plus_amplitude": _to_float,
    "weight.minus_center": _to_floats,
    "weight.minus_radius": _to_float,
    "weight.minus_amplitude": _to_float,
    "weight.ring_inner": _to_float,
    "weight.ring_outer": _to_float,
    "weight.file": _to_str,
    "mp.nodes": _to_int,
    "mp.tol_mp": _to_float,
    "mp.tol_inner": _to_optional_float,
    "mp.max_iters": _to_int,
    "mp.restarts": _to_int,
    "mp.seed": _to_int,
    "mp.seeds": _to_int,
    "mp.descent": _to_str,
    "mp.endpoint": _to_str,
    "mp.warm_start": _to_bool,
    "output.dir": _to_str,
    "output.fields": _to_bool,
}

# Weight keys accepted by each profile kind.
_WEIGHT_KEYS: dict[str, tuple[str, ...]] = {
    "two_balls": ("plus_center", "plus_radius", "plus_amplitude", "minus_center", "minus_radius", "minus_amplitude"),
    "ball_ring": ("center", "minus_radius", "ring_inner", "ring_outer", "plus_amplitude", "minus_amplitude"),
    "from_file": ("file",),
}
_VECTOR_KEYS = ("center", "plus_center", "minus_center")


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RunConfig:
    N: int
    M: int
    L: float
    p: float
    weight: WeightSpec
    lambdas: tuple[float, ...]
    strict: bool = False
    wavenumber: float = 1.0
    mp: MpOptions = field(default_factory=MpOptions)
    seeds: int = 8
    warm_start: bool = True
    output_dir: Path | None = None
    write_fields: bool = True

    @property
    def grid(self) -> Grid:
        return Grid(self.N, self.M, self.L)

    @property
    def seed(self) -> int:
        return self.mp.seed

    def with_overrides(self, *, seed: int | None = None, output_dir: str | Path | None = None) -> "RunConfig":
        """Copy with CLI overrides applied (None keeps the configured value)."""
        updated = self
        if seed is not None:
            updated = replace(updated, mp=replace(updated.mp, seed=seed))
        if output_dir is not None:
            updated = replace(updated, output_dir=Path(output_dir))
        return updated

    def to_dict(self) -> dict:
        return {
            "grid": {"N": self.N, "M": self.M, "L": self.L},
            "problem": {"p": self.p, "strict": self.strict, "lambdas": list(self.lambdas), "wavenumber": self.wavenumber},
            "weight": {"kind": self.weight.kind, **dict(self.weight.parameters)},
            "mp": {**asdict(self.mp), "seeds": self.seeds, "warm_start": self.warm_start},
            "output": {"dir": str(self.output_dir) if self.output_dir else None, "fields": self.write_fields},
        }


def exponent_window(N: int) -> tuple[float, float]:
    """[2(N+1)/(N-1), 2N/(N-2)) for N >= 3."""
    if N < 3:
        raise DomainError(f"the exponent window needs N >= 3, got {N}")
    return 2.0 * (N + 1) / (N - 1), 2.0 * N / (N - 2)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------
def _read_entries(text: str) -> dict[str, tuple[Any, int]]:
    entries: dict[str, tuple[Any, int]] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw
        for marker in ("#", ";"):
            line = line.split(marker, 1)[0]
        line = line.strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]; expected one of {list(SECTIONS)}", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", lineno)
        name = key if "." in key else f"{section}.{key}" if section else key
        converter = _KEYS.get(name)
        if converter is None:
            raise ConfigError(f"unknown key '{name}'", lineno)
        if name in entries:
            raise ConfigError(f"duplicate key '{name}' (first set on line {entries[name][1]})", lineno)
        try:
            entries[name] = (converter(value), lineno)
        except ValueError as exc:
            raise ConfigError(f"invalid value for '{name}': {exc}", lineno) from exc
    return entries


class _Entries:
    def __init__(self, entries: dict[str, tuple[Any, int]]) -> None:
        self._entries = entries

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def get(self, name: str, default: Any = None) -> Any:
        return self._entries[name][0] if name in self._entries else default

    def line(self, name: str) -> int | None:
        return self._entries[name][1] if name in self._entries else None

    def require(self, name: str) -> Any:
        if name not in self._entries:
            raise ConfigError(f"missing required key '{name}'")
        return self._entries[name][0]

    def names(self, prefix: str) -> list[str]:
        return [name for name in self._entries if name.startswith(prefix)]


def _lambdas(entries: _Entries) -> tuple[float, ...]:
    ranged = [name for name in ("problem.lambda_min", "problem.lambda_max", "problem.lambda_count") if name in entries]
    if "problem.lambdas" in entries:
        if ranged:
            raise ConfigError("give either problem.lambdas or lambda_min/lambda_max/lambda_count, not both",
                              entries.line(ranged[0]))
        values = entries.get("problem.lambdas")
        line = entries.line("problem.lambdas")
    elif ranged:
        lo = entries.require("problem.lambda_min")
        hi = entries.require("problem.lambda_max")
        count = entries.require("problem.lambda_count")
        line = entries.line("problem.lambda_min")
        if count < 1:
            raise ConfigError(f"lambda_count must be >= 1, got {count}", entries.line("problem.lambda_count"))
        if not 0 < lo <= hi:
            raise ConfigError(f"need 0 < lambda_min <= lambda_max, got {lo}, {hi}", line)
        values = tuple(float(v) for v in np.geomspace(lo, hi, count)) if count > 1 else (float(lo),)
    else:
        raise ConfigError("missing lambdas: set problem.lambdas or lambda_min/lambda_max/lambda_count")
    if any(not lam > 0 for lam in values):
        raise ConfigError(f"all lambdas must be > 0, got {list(values)}", line)
    return tuple(sorted(values))


def _weight(entries: _Entries, N: int) -> WeightSpec:
    kind: str | None = None
    parameters: dict[str, Any] = {}
    if "weight.preset" in entries:
        line = entries.line("weight.preset")
        try:
            preset = get_preset(entries.get("weight.preset"))
        except DomainError as exc:
            raise ConfigError(str(exc), line) from exc
        if preset["dimension"] != N:
            raise ConfigError(f"preset '{entries.get('weight.preset')}' is for N={preset['dimension']}, grid has N={N}", line)
        kind = preset["kind"]
        parameters.update(preset["parameters"])
    if "weight.kind" in entries:
        explicit = entries.get("weight.kind")
        if kind is not None and explicit != kind:
            parameters = {}
        kind = explicit
    if kind is None:
        raise ConfigError("missing weight: set weight.preset or weight.kind")
    allowed = _WEIGHT_KEYS.get(kind)
    if allowed is None:
        raise ConfigError(f"unknown weight kind '{kind}'; expected one of {list(_WEIGHT_KEYS)}",
                          entries.line("weight.kind"))
    for name in entries.names("weight."):
        key = name.split(".", 1)[1]
        if key in ("preset", "kind"):
            continue
        if key not in allowed:
            raise ConfigError(f"key '{name}' does not apply to weight kind '{kind}'", entries.line(name))
        value = entries.get(name)
        if key in _VECTOR_KEYS and len(value) != N:
            raise ConfigError(f"'{name}' needs {N} entries, got {len(value)}", entries.line(name))
        parameters[key] = value
    try:
        spec = WeightSpec(kind, parameters)
        spec.profile()
    except DomainError as exc:
        raise ConfigError(f"invalid weight: {exc}") from exc
    return spec


def _mp_options(entries: _Entries) -> MpOptions:
    names = ("nodes", "tol_mp", "tol_inner", "max_iters", "restarts", "seed", "descent", "endpoint")
    kwargs = {name: entries.get(f"mp.{name}") for name in names if f"mp.{name}" in entries}
    try:
        return MpOptions(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"invalid [mp] options: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Raises
    ------
    ConfigError
        On syntax errors (with line numbers), unknown keys, or violated invariants.
    """
    entries = _Entries(_read_entries(text))
    N = entries.require("grid.N")
    M = entries.require("grid.M")
    L = entries.require("grid.L")
    try:
        Grid(N, M, L)
    except DomainError as exc:
        raise ConfigError(f"invalid grid: {exc}", entries.line("grid.N")) from exc

    p = entries.require("problem.p")
    if not p > 2:
        raise ConfigError(f"exponent p must be > 2, got {p}", entries.line("problem.p"))
    strict = entries.get("problem.strict", False)
    if strict:
        if N < 3:
            raise ConfigError(f"strict exponent window needs N >= 3, got N={N}", entries.line("problem.strict"))
        lo, hi = exponent_window(N)
        if not lo <= p < hi:
            raise ConfigError(f"strict mode needs p in [{lo:g}, {hi:g}) for N={N}, got p={p:g}",
                              entries.line("problem.p"))

    wavenumber = entries.get("problem.wavenumber", 1.0)
    if not wavenumber > 0:
        raise ConfigError(f"wavenumber must be > 0, got {wavenumber}", entries.line("problem.wavenumber"))
    seeds = entries.get("mp.seeds", 8)
    if seeds < 1:
        raise ConfigError(f"mp.seeds must be >= 1, got {seeds}", entries.line("mp.seeds"))

    output_dir = entries.get("output.dir")
    config = RunConfig(
        N=N,
        M=M,
        L=float(L),
        p=float(p),
        weight=_weight(entries, N),
        lambdas=_lambdas(entries),
        strict=strict,
        wavenumber=float(wavenumber),
        mp=_mp_options(entries),
        seeds=seeds,
        warm_start=entries.get("mp.warm_start", True),
        output_dir=Path(output_dir) if output_dir else None,
        write_fields=entries.get("output.fields", True),
    )
    logger.debug("parsed config: %s", config.to_dict())
    return config


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# Environment defaults
# ---------------------------------------------------------------------------
def default_output_dir() -> Path:
    """``$NLHELM_OUTPUT_DIR`` or ``./artifacts``."""
    return Path(os.getenv(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR)


def default_workers() -> int:
    raw = os.getenv(ENV_WORKERS, "1")
    try:
        workers = int(raw)
    except ValueError:
        logger.warning("%s=%r is not an integer; using 1 worker", ENV_WORKERS, raw)
        return 1
    return max(1, workers)


def default_log_level() -> str:
    return os.getenv(ENV_LOG_LEVEL, "INFO").upper()
