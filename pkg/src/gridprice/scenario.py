"""Scenario construction, the reference population recipe, and JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from .consumer import ConsumerProfile
from .errors import NonzeroNightSolar, SchemaViolation, ScenarioIOError

REFERENCE_SEED = 7
REFERENCE_USERS = 20
REFERENCE_ALPHA = 2.0
REFERENCE_P_B = 1.0
NET_METERING_P_B = 2.0
REFERENCE_PRICE_CAP = 10.0
INELASTIC_DEMAND = (0.16, 0.39, 0.63, 0.51, 0.78, 0.52)
OMEGA_RANGE = (3.0, 7.0)
DEFAULT_SOLAR_PROFILE = (0.0, 0.3, 1.6, 1.8, 0.4, 0.0)
DEFAULT_SOLAR_JITTER = 0.1
SCHEMA_VERSION = 1

_number = {"type": "number"}
_nonneg_series = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}

SCENARIO_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "gridprice scenario",
    "description": (
        "Population of consumers for the retail pricing game. Random draws use "
        "numpy's PCG64 bit generator: willingness parameters come from "
        "Generator(PCG64(seed)).uniform(3, 7, n_users) in user order; solar "
        "jitter comes from a second stream Generator(PCG64([seed, 1])) drawing "
        "uniform(-j, j, (n_users, n_periods)) in user-major order."
    ),
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "label", "seed", "n_users", "n_periods", "p_b", "P_cap", "consumers"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "label": {"type": "string"},
        "seed": {"type": "integer"},
        "n_users": {"type": "integer", "minimum": 1},
        "n_periods": {"type": "integer", "minimum": 1},
        "p_b": {"type": "number", "minimum": 0},
        "P_cap": {"type": "number", "exclusiveMinimum": 0},
        "consumers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["alpha", "omega", "m", "s"],
                "properties": {
                    "alpha": {"type": "number", "exclusiveMinimum": 0},
                    "omega": _nonneg_series,
                    "m": _nonneg_series,
                    "s": _nonneg_series,
                },
            },
        },
    },
}


@dataclass(frozen=True)
class PeriodData:
    """Per-user arrays for one period, plus the retailer-side constants."""

    omega: np.ndarray
    alpha: np.ndarray
    m: np.ndarray
    s: np.ndarray
    p_b: float
    P_cap: float

    @property
    def n_users(self) -> int:
        return self.omega.size

    @property
    def has_solar(self) -> bool:
        return bool(np.any(self.s > 0))


@dataclass(frozen=True)
class Scenario:
    n_users: int
    n_periods: int
    p_b: float
    P_cap: float
    consumers: tuple[ConsumerProfile, ...]
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "consumers", tuple(self.consumers))
        object.__setattr__(self, "p_b", float(self.p_b))
        object.__setattr__(self, "P_cap", float(self.P_cap))
        if len(self.consumers) != self.n_users:
            raise ValueError(f"expected {self.n_users} consumers, got {len(self.consumers)}")
        for c in self.consumers:
            if c.n_periods != self.n_periods:
                raise ValueError("every consumer needs one value per period")
        if self.p_b < 0:
            raise ValueError("base price must be nonnegative")
        if not self.P_cap > self.p_b:
            raise ValueError("price cap must exceed the base price")

    def period(self, k: int) -> PeriodData:
        """Data for period ``k`` (1-based, matching the CLI and reports)."""
        if not 1 <= k <= self.n_periods:
            raise IndexError(f"period {k} outside 1..{self.n_periods}")
        i = k - 1
        cs = self.consumers
        return PeriodData(
            omega=np.array([c.omega[i] for c in cs]),
            alpha=np.array([c.alpha for c in cs]),
            m=np.array([c.m[i] for c in cs]),
            s=np.array([c.s[i] for c in cs]),
            p_b=self.p_b,
            P_cap=self.P_cap,
        )

    @property
    def periods(self) -> range:
        return range(1, self.n_periods + 1)

    def with_base_price(self, p_b: float) -> "Scenario":
        return replace(self, p_b=p_b)


def generate_reference(
    seed: int = REFERENCE_SEED,
    n_users: int = REFERENCE_USERS,
    *,
    p_b: float = REFERENCE_P_B,
    P_cap: float = REFERENCE_PRICE_CAP,
    alpha: float = REFERENCE_ALPHA,
    label: str | None = None,
) -> Scenario:
    """Six four-hour periods; omega_i ~ U[3, 7] scaled to each period's inelastic load."""
    if n_users < 1:
        raise ValueError("n_users must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    base = rng.uniform(*OMEGA_RANGE, n_users)
    m = np.array(INELASTIC_DEMAND)
    consumers = [
        ConsumerProfile(omega=0.75 * w + 0.5 * m, alpha=alpha, m=m, s=np.zeros(m.size)) for w in base
    ]
    return Scenario(
        n_users=n_users,
        n_periods=m.size,
        p_b=p_b,
        P_cap=P_cap,
        consumers=consumers,
        seed=int(seed),
        label=label if label is not None else f"reference-seed{seed}-n{n_users}",
    )


def attach_solar(
    scenario: Scenario,
    profile=DEFAULT_SOLAR_PROFILE,
    scale: float = 1.0,
    *,
    jitter: float = DEFAULT_SOLAR_JITTER,
) -> Scenario:
    """Give every household rooftop generation ``scale * profile[k] * (1 + noise)``."""
    profile = np.asarray(profile, dtype=float)
    if profile.size != scenario.n_periods:
        raise ValueError("solar profile needs one entry per period")
    if profile[0] != 0 or profile[-1] != 0:
        raise NonzeroNightSolar("first and last periods are night and must have zero generation")
    if np.any(profile < 0) or scale < 0 or not 0 <= jitter < 1:
        raise ValueError("profile, scale must be nonnegative and jitter in [0, 1)")
    rng = np.random.Generator(np.random.PCG64([scenario.seed, 1]))
    noise = rng.uniform(-jitter, jitter, (scenario.n_users, scenario.n_periods)) if jitter else 0.0
    s = scale * profile[None, :] * (1.0 + noise)
    s = np.broadcast_to(s, (scenario.n_users, scenario.n_periods))
    consumers = [replace(c, s=tuple(row)) for c, row in zip(scenario.consumers, s)]
    return replace(scenario, consumers=tuple(consumers), label=scenario.label + "+solar" if scale else scenario.label)


def to_dict(scenario: Scenario) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "label": scenario.label,
        "seed": scenario.seed,
        "n_users": scenario.n_users,
        "n_periods": scenario.n_periods,
        "p_b": scenario.p_b,
        "P_cap": scenario.P_cap,
        "consumers": [
            {"alpha": c.alpha, "omega": list(c.omega), "m": list(c.m), "s": list(c.s)}
            for c in scenario.consumers
        ],
    }


def _error_path(err: jsonschema.ValidationError) -> str:
    path = ""
    for part in err.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    if err.validator == "required":
        missing = next((r for r in err.validator_value if r not in err.instance), None)
        if missing is not None:
            path = f"{path}.{missing}" if path else missing
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        if extra:
            path = f"{path}.{extra[0]}" if path else extra[0]
    return path


def from_dict(doc) -> Scenario:
    validator = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise SchemaViolation(err.message, path=_error_path(err))
    if len(doc["consumers"]) != doc["n_users"]:
        raise SchemaViolation(f"expected {doc['n_users']} entries", path="consumers")
    for i, c in enumerate(doc["consumers"]):
        for key in ("omega", "m", "s"):
            if len(c[key]) != doc["n_periods"]:
                raise SchemaViolation(f"expected {doc['n_periods']} values", path=f"consumers[{i}].{key}")
    if not doc["P_cap"] > doc["p_b"]:
        raise SchemaViolation("must exceed p_b", path="P_cap")
    return Scenario(
        n_users=doc["n_users"],
        n_periods=doc["n_periods"],
        p_b=doc["p_b"],
        P_cap=doc["P_cap"],
        consumers=tuple(ConsumerProfile(**c) for c in doc["consumers"]),
        seed=doc["seed"],
        label=doc["label"],
    )


def save(scenario: Scenario, path) -> None:
    try:
        Path(path).write_text(json.dumps(to_dict(scenario), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ScenarioIOError(f"cannot write {path}: {exc}") from exc


def load(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioIOError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}") from exc
    return from_dict(doc)
