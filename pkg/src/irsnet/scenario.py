"""Scenario parameters shared by the analytic and Monte-Carlo engines.

Everything downstream works in strict SI units (meters, m^-2, watts).
Config files use field units (per km^2, dBm); conversion happens only at
this boundary. A `Scenario` is immutable after validation and can be
shared freely across threads/processes.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Union

__all__ = [
    "ConstantLength",
    "UniformLength",
    "LengthDist",
    "LengthMoments",
    "ScenarioParams",
    "Scenario",
    "InvalidScenario",
    "ConfigError",
    "validate",
    "length_moments",
    "default_params",
    "load_config",
    "dbm_to_watts",
    "watts_to_dbm",
]

PER_KM2 = 1e-6  # km^-2 -> m^-2


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w) + 30.0


@dataclass(frozen=True)
class ConstantLength:
    """All blockages share one length (meters)."""

    value: float

    @property
    def lo(self) -> float:
        return self.value

    @property
    def hi(self) -> float:
        return self.value

    def mean(self) -> float:
        return self.value

    def mean_square(self) -> float:
        return self.value * self.value

    def survival(self, t: float) -> float:
        return 1.0 if self.value > t else 0.0

    def partial_mean_above(self, t: float) -> float:
        """E[l * 1{l > t}]."""
        return self.value if self.value > t else 0.0

    def partial_sq_below(self, t: float) -> float:
        """E[l^2 * 1{l <= t}]."""
        return 0.0 if self.value > t else self.value * self.value

    def sample(self, rng, n: int):
        import numpy as np

        return np.full(n, self.value)


@dataclass(frozen=True)
class UniformLength:
    """Blockage length uniform on [lo, hi] (meters)."""

    lo: float
    hi: float

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def mean_square(self) -> float:
        return (self.lo**2 + self.lo * self.hi + self.hi**2) / 3.0

    def survival(self, t: float) -> float:
        if t <= self.lo:
            return 1.0
        if t >= self.hi:
            return 0.0
        return (self.hi - t) / (self.hi - self.lo)

    def partial_mean_above(self, t: float) -> float:
        t = min(max(t, self.lo), self.hi)
        if self.hi == self.lo:
            return self.lo if self.lo > t else 0.0
        return 0.5 * (self.hi**2 - t**2) / (self.hi - self.lo)

    def partial_sq_below(self, t: float) -> float:
        t = min(max(t, self.lo), self.hi)
        if self.hi == self.lo:
            return 0.0
        return (t**3 - self.lo**3) / (3.0 * (self.hi - self.lo))

    def sample(self, rng, n: int):
        return rng.uniform(self.lo, self.hi, n)


LengthDist = Union[ConstantLength, UniformLength]


@dataclass(frozen=True)
class LengthMoments:
    e_l: float  # E[l], m
    e_l2: float  # E[l^2], m^2


def length_moments(dist: LengthDist) -> LengthMoments:
    """Exact first and second moments of the blockage-length distribution."""
    return LengthMoments(dist.mean(), dist.mean_square())


@dataclass(frozen=True)
class ScenarioParams:
    """Raw model parameters in SI units (not yet validated).

    lambda_b     BS density, m^-2
    lambda_o     blockage-midpoint density, m^-2
    mu           fraction of blockages carrying IRSs, in [0, 1]
    length       blockage length distribution, meters
    p_t          transmit power, watts
    k_los/k_nlos additional path-loss constants (linear)
    alpha_*      path-loss exponents
    m_los/m_nlos Nakagami shape parameters
    n_elements   IRS element count
    d_serve      IRS serving distance, m
    v            user displacement per unit time, m
    """

    lambda_b: float
    lambda_o: float
    mu: float
    length: LengthDist
    p_t: float
    k_los: float
    k_nlos: float
    alpha_los: float
    alpha_nlos: float
    m_los: float
    m_nlos: float
    n_elements: int
    d_serve: float
    v: float


class InvalidScenario(ValueError):
    """Raised by validate() with the full list of violated constraints."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid scenario: " + ", ".join(violations))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario(ScenarioParams):
    """Validated scenario with derived quantities.

    lambda_i     IRS-equipped blockage density mu * lambda_o, m^-2
    e_l, e_l2    length moments, m and m^2
    los_rate     2 * lambda_o * E[l] / pi, the per-meter decay rate of the
                 LoS probability exp(-los_rate * d)
    """

    lambda_i: float
    e_l: float
    e_l2: float
    los_rate: float

    def replace(self, **changes) -> "Scenario":
        """Return a new validated scenario with some raw fields changed."""
        raw = ScenarioParams(
            **{f: changes.pop(f, getattr(self, f)) for f in _RAW_FIELDS}
        )
        if changes:
            raise TypeError(f"unknown scenario fields: {sorted(changes)}")
        return validate(raw)


_RAW_FIELDS = [
    "lambda_b",
    "lambda_o",
    "mu",
    "length",
    "p_t",
    "k_los",
    "k_nlos",
    "alpha_los",
    "alpha_nlos",
    "m_los",
    "m_nlos",
    "n_elements",
    "d_serve",
    "v",
]


def validate(params: ScenarioParams) -> Scenario:
    """Check model constraints and compute derived quantities.

    Raises InvalidScenario carrying every violated constraint; violations
    use stable codes so callers/tests can match on them.
    """
    bad: list[str] = []
    if not params.lambda_b > 0 or not math.isfinite(params.lambda_b):
        bad.append("negative_density: lambda_b must be > 0")
    if params.lambda_o < 0 or not math.isfinite(params.lambda_o):
        bad.append("negative_density: lambda_o must be >= 0")
    if not 0.0 <= params.mu <= 1.0:
        bad.append("mu_out_of_range: mu must be in [0, 1]")
    if params.length.hi <= 0:
        bad.append("degenerate_length: blockage length must be > 0")
    if params.length.lo > params.length.hi:
        bad.append("degenerate_length: l_min must be <= l_max")
    if params.length.lo < 0:
        bad.append("degenerate_length: l_min must be >= 0")
    if not params.p_t > 0:
        bad.append("nonpositive_power: p_t must be > 0")
    if not (params.k_los > 0 and params.k_nlos > 0):
        bad.append("nonpositive_power: path-loss constants must be > 0")
    if params.alpha_los < 2.0:
        bad.append("alpha_out_of_range: alpha_los must be >= 2")
    if params.alpha_nlos < 2.0:
        bad.append("alpha_out_of_range: alpha_nlos must be >= 2")
    if not (params.m_los > 0 and params.m_nlos > 0):
        bad.append("nakagami_out_of_range: m parameters must be > 0")
    if params.n_elements < 1:
        bad.append("n_elements_out_of_range: need at least one element")
    if not params.d_serve > 0:
        bad.append("nonpositive_distance: d_serve must be > 0")
    if params.v < 0:
        bad.append("negative_speed: v must be >= 0")
    if bad:
        raise InvalidScenario(bad)

    mom = length_moments(params.length)
    return Scenario(
        **{f: getattr(params, f) for f in _RAW_FIELDS},
        lambda_i=params.mu * params.lambda_o,
        e_l=mom.e_l,
        e_l2=mom.e_l2,
        los_rate=2.0 * params.lambda_o * mom.e_l / math.pi,
    )


def default_params() -> ScenarioParams:
    """Baseline parameter set used throughout the experiments."""
    return ScenarioParams(
        lambda_b=10.0 * PER_KM2,
        lambda_o=500.0 * PER_KM2,
        mu=0.5,
        length=ConstantLength(10.0),
        p_t=dbm_to_watts(24.0),
        k_los=10.0**-10.38,
        k_nlos=10.0**-14.54,
        alpha_los=2.09,
        alpha_nlos=3.75,
        m_los=10.0,
        m_nlos=1.0,
        n_elements=500,
        d_serve=50.0,
        v=20.0,
    )


def default_scenario() -> Scenario:
    return validate(default_params())


# --- config file I/O -------------------------------------------------------

_CONFIG_KEYS = {
    "lambda_b_per_km2",
    "lambda_o_per_km2",
    "mu",
    "block_length_m",
    "block_length_min_m",
    "block_length_max_m",
    "p_t_dbm",
    "k_los",
    "k_nlos",
    "alpha_los",
    "alpha_nlos",
    "m_los",
    "m_nlos",
    "n_elements",
    "d_serve_m",
    "v_m_per_unit",
}


def _load_toml(path: str) -> dict:
    if sys.version_info >= (3, 11):
        import tomllib as toml
    else:
        import tomli as toml
    with open(path, "rb") as fh:
        try:
            return toml.load(fh)
        except toml.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def params_from_dict(doc: dict) -> ScenarioParams:
    """Build params from a flat config mapping. Unknown keys are an error."""
    unknown = sorted(set(doc) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, val in doc.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"config key {key} must be a number, got {val!r}")

    base = default_params()
    if "block_length_m" in doc and (
        "block_length_min_m" in doc or "block_length_max_m" in doc
    ):
        raise ConfigError(
            "block_length_m is mutually exclusive with block_length_min_m/max_m"
        )
    if ("block_length_min_m" in doc) != ("block_length_max_m" in doc):
        raise ConfigError("block_length_min_m and block_length_max_m go together")

    if "block_length_min_m" in doc:
        length: LengthDist = UniformLength(
            float(doc["block_length_min_m"]), float(doc["block_length_max_m"])
        )
    elif "block_length_m" in doc:
        length = ConstantLength(float(doc["block_length_m"]))
    else:
        length = base.length

    def get(key, fallback):
        return float(doc[key]) if key in doc else fallback

    return ScenarioParams(
        lambda_b=get("lambda_b_per_km2", base.lambda_b / PER_KM2) * PER_KM2,
        lambda_o=get("lambda_o_per_km2", base.lambda_o / PER_KM2) * PER_KM2,
        mu=get("mu", base.mu),
        length=length,
        p_t=dbm_to_watts(get("p_t_dbm", watts_to_dbm(base.p_t))),
        k_los=get("k_los", base.k_los),
        k_nlos=get("k_nlos", base.k_nlos),
        alpha_los=get("alpha_los", base.alpha_los),
        alpha_nlos=get("alpha_nlos", base.alpha_nlos),
        m_los=get("m_los", base.m_los),
        m_nlos=get("m_nlos", base.m_nlos),
        n_elements=int(doc.get("n_elements", base.n_elements)),
        d_serve=get("d_serve_m", base.d_serve),
        v=get("v_m_per_unit", base.v),
    )


def load_config(path: str) -> Scenario:
    """Load, convert to SI, and validate a TOML config file."""
    return validate(params_from_dict(_load_toml(path)))


def to_config_dict(sc: ScenarioParams) -> dict:
    """Inverse of params_from_dict (config units)."""
    doc = {
        "lambda_b_per_km2": sc.lambda_b / PER_KM2,
        "lambda_o_per_km2": sc.lambda_o / PER_KM2,
        "mu": sc.mu,
        "p_t_dbm": watts_to_dbm(sc.p_t),
        "k_los": sc.k_los,
        "k_nlos": sc.k_nlos,
        "alpha_los": sc.alpha_los,
        "alpha_nlos": sc.alpha_nlos,
        "m_los": sc.m_los,
        "m_nlos": sc.m_nlos,
        "n_elements": sc.n_elements,
        "d_serve_m": sc.d_serve,
        "v_m_per_unit": sc.v,
    }
    if isinstance(sc.length, ConstantLength):
        doc["block_length_m"] = sc.length.value
    else:
        doc["block_length_min_m"] = sc.length.lo
        doc["block_length_max_m"] = sc.length.hi
    return doc
