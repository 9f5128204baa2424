"""Experiment configuration: a flat INI file plus flag overrides.

Every field maps to one ``section.key`` pair; parsing and serialization
are inverses, so ``from_ini(cfg.to_ini()) == cfg``.  Values are validated
lazily by the ``build_*`` methods, which construct the module objects and
convert their errors into ConfigError diagnostics naming the field.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields

from .service import ServiceTimeDist
from .sources import (
    Affine,
    AgePenalty,
    BinarySymmetric,
    GaussianAR1,
    MarkovSourceModel,
    NegatedMI,
    PenaltyTable,
    Tabulated,
)

KNOWN_POLICIES = ("optimal", "zero-wait", "uniform")


class ConfigError(Exception):
    """A configuration field failed to parse or validate."""


def round_half_up(x: float) -> int:
    """Round to nearest integer with ties going up (period rounding rule)."""
    return int(math.floor(x + 0.5))


@dataclass
class ExperimentConfig:
    # [source]
    source_kind: str | None = None
    source_q: float | None = None
    source_a: float | None = None
    source_sigma2: float = 1.0
    source_values: tuple[float, ...] | None = None
    # [service]
    service: tuple[tuple[int, float], ...] | None = None
    # [penalty]
    penalty_kind: str = "negated-mi"
    penalty_slope: float | None = None
    penalty_intercept: float = 0.0
    penalty_values: tuple[float, ...] | None = None
    # [solver]
    tol: float = 1e-10
    z_max: int = 10_000
    # [sim]
    horizon: int = 1_000_000
    seeds: tuple[int, ...] = tuple(range(10))
    delta0: int = 1
    # [sweep]
    sweep_variable: str | None = None
    sweep_grid: tuple[float, ...] | None = None
    uniform_period: int | None = None
    policies: tuple[str, ...] = KNOWN_POLICIES
    # [trace]
    trace_policy: str = "threshold"
    forced_services: tuple[int, ...] | None = None
    trace_seed: int | None = None
    trace_horizon: int = 50
    # [curve]
    delta_max: int = 50
    # [oracle]
    oracle_instances: int = 20
    oracle_z_cap: int = 40
    oracle_seed: int = 0
    # [output]
    out_path: str | None = None

    # ------------------------------------------------------------------
    # parsing / serialization

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config syntax error: {exc}") from exc
        cfg = cls()
        seen = set()
        for section in parser.sections():
            for key, raw in parser.items(section):
                spot = (section, key)
                if spot not in _SCHEMA:
                    raise ConfigError(f"unknown config field [{section}] {key}")
                name, decode, _ = _SCHEMA[spot]
                try:
                    setattr(cfg, name, decode(raw.strip()))
                except ConfigError:
                    raise
                except Exception as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from exc
                seen.add(spot)
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_ini(f.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_ini(self) -> str:
        defaults = ExperimentConfig()
        lines: list[str] = []
        current = None
        for (section, key), (name, _, encode) in _SCHEMA.items():
            value = getattr(self, name)
            if value is None or value == getattr(defaults, name):
                continue
            if section != current:
                if lines:
                    lines.append("")
                lines.append(f"[{section}]")
                current = section
            lines.append(f"{key} = {encode(value)}")
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------
    # builders

    def build_source(self) -> MarkovSourceModel:
        kind = self.source_kind
        if kind is None:
            raise ConfigError("[source] kind is required for this command")
        try:
            if kind == "binary":
                if self.source_q is None:
                    raise ConfigError("[source] q is required for kind = binary")
                return BinarySymmetric(q=self.source_q)
            if kind == "gaussian":
                if self.source_a is None:
                    raise ConfigError("[source] a is required for kind = gaussian")
                return GaussianAR1(a=self.source_a, sigma2=self.source_sigma2)
            if kind == "tabulated":
                if self.source_values is None:
                    raise ConfigError("[source] values is required for kind = tabulated")
                return Tabulated(values=self.source_values)
        except ValueError as exc:
            raise ConfigError(f"[source]: {exc}") from exc
        raise ConfigError(f"[source] kind must be binary, gaussian, or tabulated, got {kind!r}")

    def build_service(self) -> ServiceTimeDist:
        if self.service is None:
            raise ConfigError("[service] dist is required for this command")
        try:
            return ServiceTimeDist(dict(self.service))
        except ValueError as exc:
            raise ConfigError(f"[service] dist: {exc}") from exc

    def build_penalty(self) -> AgePenalty:
        kind = self.penalty_kind
        try:
            if kind == "negated-mi":
                return NegatedMI(self.build_source())
            if kind == "affine":
                if self.penalty_slope is None:
                    raise ConfigError("[penalty] slope is required for kind = affine")
                return Affine(slope=self.penalty_slope, intercept=self.penalty_intercept)
            if kind == "table":
                if self.penalty_values is None:
                    raise ConfigError("[penalty] values is required for kind = table")
                return PenaltyTable(values=self.penalty_values)
        except ValueError as exc:
            raise ConfigError(f"[penalty]: {exc}") from exc
        raise ConfigError(f"[penalty] kind must be negated-mi, affine, or table, got {kind!r}")

    def sweep_period(self, dist: ServiceTimeDist) -> int:
        return self.uniform_period if self.uniform_period is not None else round_half_up(dist.mean())

    def validate_sweep(self) -> None:
        if self.sweep_variable not in ("q", "a"):
            raise ConfigError(f"[sweep] variable must be q or a, got {self.sweep_variable!r}")
        if not self.sweep_grid:
            raise ConfigError("[sweep] grid must be non-empty")
        if any(b <= a for a, b in zip(self.sweep_grid, self.sweep_grid[1:])):
            raise ConfigError("[sweep] grid must be strictly increasing")
        for p in self.policies:
            if p not in KNOWN_POLICIES:
                raise ConfigError(f"[sweep] unknown policy {p!r}, expected one of {KNOWN_POLICIES}")


# ----------------------------------------------------------------------
# field codecs

def _float(raw: str) -> float:
    return float(raw)


def _int(raw: str) -> int:
    return int(raw)


def _str(raw: str) -> str:
    return raw


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split(",") if tok.strip())


def _str_list(raw: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in raw.split(",") if tok.strip())


def _seeds(raw: str) -> tuple[int, ...]:
    """A bare count N means seeds 0..N-1; a comma list is explicit."""
    if "," in raw:
        return _int_list(raw)
    return tuple(range(int(raw)))


def _service_pairs(raw: str) -> tuple[tuple[int, float], ...]:
    pairs = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        y, _, p = tok.partition(":")
        if not p:
            raise ValueError(f"expected y:prob pairs, got {tok!r}")
        pairs.append((int(y), float(p)))
    if not pairs:
        raise ValueError("service distribution must list at least one y:prob pair")
    return tuple(pairs)


def _grid(raw: str) -> tuple[float, ...]:
    """Either a comma list or start:stop:step (stop inclusive)."""
    if ":" in raw:
        start_s, stop_s, step_s = raw.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
        if step <= 0:
            raise ValueError(f"grid step must be positive, got {step}")
        count = int(round((stop - start) / step)) + 1
        return tuple(round(start + k * step, 12) for k in range(count))
    return _float_list(raw)


def _enc_float(v: float) -> str:
    return repr(v)


def _enc_int(v: int) -> str:
    return str(v)


def _enc_str(v: str) -> str:
    return v


def _enc_float_list(v: tuple[float, ...]) -> str:
    return ", ".join(repr(x) for x in v)


def _enc_int_list(v: tuple[int, ...]) -> str:
    return ", ".join(str(x) for x in v)


def _enc_str_list(v: tuple[str, ...]) -> str:
    return ", ".join(v)


def _enc_service(v: tuple[tuple[int, float], ...]) -> str:
    return ", ".join(f"{y}:{repr(p)}" for y, p in v)


# (section, key) -> (field name, decode, encode), in canonical output order.
_SCHEMA: dict[tuple[str, str], tuple[str, object, object]] = {
    ("source", "kind"): ("source_kind", _str, _enc_str),
    ("source", "q"): ("source_q", _float, _enc_float),
    ("source", "a"): ("source_a", _float, _enc_float),
    ("source", "sigma2"): ("source_sigma2", _float, _enc_float),
    ("source", "values"): ("source_values", _float_list, _enc_float_list),
    ("service", "dist"): ("service", _service_pairs, _enc_service),
    ("penalty", "kind"): ("penalty_kind", _str, _enc_str),
    ("penalty", "slope"): ("penalty_slope", _float, _enc_float),
    ("penalty", "intercept"): ("penalty_intercept", _float, _enc_float),
    ("penalty", "values"): ("penalty_values", _float_list, _enc_float_list),
    ("solver", "tol"): ("tol", _float, _enc_float),
    ("solver", "z_max"): ("z_max", _int, _enc_int),
    ("sim", "horizon"): ("horizon", _int, _enc_int),
    ("sim", "seeds"): ("seeds", _seeds, _enc_int_list),
    ("sim", "delta0"): ("delta0", _int, _enc_int),
    ("sweep", "variable"): ("sweep_variable", _str, _enc_str),
    ("sweep", "grid"): ("sweep_grid", _grid, _enc_float_list),
    ("sweep", "uniform_period"): ("uniform_period", _int, _enc_int),
    ("sweep", "policies"): ("policies", _str_list, _enc_str_list),
    ("trace", "policy"): ("trace_policy", _str, _enc_str),
    ("trace", "forced_services"): ("forced_services", _int_list, _enc_int_list),
    ("trace", "seed"): ("trace_seed", _int, _enc_int),
    ("trace", "horizon"): ("trace_horizon", _int, _enc_int),
    ("curve", "delta_max"): ("delta_max", _int, _enc_int),
    ("oracle", "instances"): ("oracle_instances", _int, _enc_int),
    ("oracle", "z_cap"): ("oracle_z_cap", _int, _enc_int),
    ("oracle", "seed"): ("oracle_seed", _int, _enc_int),
    ("output", "path"): ("out_path", _str, _enc_str),
}

_FIELD_NAMES = {name for name, _, _ in _SCHEMA.values()}
assert _FIELD_NAMES == {f.name for f in fields(ExperimentConfig)}, "schema out of sync"
