"""Parameter sweeps comparing the analytic and Monte-Carlo engines.

A sweep varies one knob (a scenario field in config units, or the link
distance d for the density protocol), runs the requested engines at every
value, and emits one ComparisonRow per (value, metric). Rows carry the
pass/fail verdict |analytic - mc| <= max(mc_ci, abs_gate).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

from .. import association, spatial
from ..handover import ho_probability
from ..mc import sim
from ..scenario import PER_KM2, Scenario
from ..transition import transition_matrix

__all__ = [
    "SweepSpec",
    "ComparisonRow",
    "run_sweep",
    "emit_csv",
    "parse_csv",
    "compare_report",
    "CompareSummary",
]

PROTOCOLS = ("densities", "association", "transition", "handover")
SWEEPABLE = {
    "lambda_b_per_km2",
    "lambda_o_per_km2",
    "mu",
    "n_elements",
    "d_serve_m",
    "v_m_per_unit",
    "block_length_m",
    "d",
}


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    param: str
    values: tuple
    protocol: str = "association"
    engines: str = "both"  # analytic | mc | both
    n_drops: int = 100_000
    seed: int = 0
    out: str | None = None
    n_c: float | None = None  # per-cell IRS element budget: N = n_c*lb/li
    irs_mode: str = "analysis_consistent"
    mode: str = "approx"
    abs_gate: float = 0.02
    n_jobs: int | None = None
    comment: str = ""

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.param!r}; one of {sorted(SWEEPABLE)}")
        if not self.values:
            raise ValueError("value list must be nonempty")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.engines not in ("analytic", "mc", "both"):
            raise ValueError(f"unknown engines {self.engines!r}")


@dataclass(frozen=True)
class ComparisonRow:
    param: str
    value: float
    metric: str
    analytic: float | None
    mc_mean: float | None
    mc_ci: float | None
    gate: float | None = None  # metric-scale override of the sweep gate

    @property
    def abs_diff(self) -> float | None:
        if self.analytic is None or self.mc_mean is None or math.isnan(self.mc_mean):
            return None
        return abs(self.analytic - self.mc_mean)

    def passed(self, abs_gate: float) -> bool | None:
        diff = self.abs_diff
        if diff is None:
            return None
        return diff <= max(self.mc_ci or 0.0,
                           self.gate if self.gate is not None else abs_gate)


def _apply(base: Scenario, param: str, value: float, n_c: float | None) -> Scenario:
    if param == "d":
        return base
    if param == "lambda_b_per_km2":
        sc = base.replace(lambda_b=value * PER_KM2)
    elif param == "lambda_o_per_km2":
        sc = base.replace(lambda_o=value * PER_KM2)
    elif param == "mu":
        sc = base.replace(mu=value)
    elif param == "n_elements":
        sc = base.replace(n_elements=int(round(value)))
    elif param == "d_serve_m":
        sc = base.replace(d_serve=value)
    elif param == "v_m_per_unit":
        sc = base.replace(v=value)
    elif param == "block_length_m":
        from ..scenario import ConstantLength

        sc = base.replace(length=ConstantLength(value))
    else:
        raise ValueError(param)
    if n_c is not None:
        if sc.lambda_i <= 0:
            raise ValueError("per-cell element budget needs mu * lambda_o > 0")
        n = max(1, int(round(n_c * sc.lambda_b / sc.lambda_i)))
        sc = sc.replace(n_elements=n)
    return sc


def _density_rows(spec: SweepSpec, sc: Scenario, d: float) -> list[ComparisonRow]:
    rows = []
    analytic = {}
    if spec.engines in ("analytic", "both"):
        for state in ("los", "nlos", "rlos"):
            analytic[state] = (
                spatial.bs_density(state, d, sc, mode=spec.mode) / PER_KM2
            )
    mc = None
    if spec.engines in ("mc", "both"):
        mc = sim.estimate_density(sc, d, spec.n_drops, spec.seed)
    for state in ("los", "nlos", "rlos"):
        est = mc.state(state) if mc else None
        rows.append(
            ComparisonRow(
                spec.param, d, f"lambda_b_{state}_per_km2",
                analytic.get(state),
                est.mean * sc.lambda_b / PER_KM2 if est else None,
                est.ci_halfwidth * sc.lambda_b / PER_KM2 if est else None,
                # density gates scale with the BS density itself
                gate=spec.abs_gate * sc.lambda_b / PER_KM2,
            )
        )
    return rows


def _association_rows(spec: SweepSpec, sc: Scenario, value: float):
    rows = []
    probs = None
    if spec.engines in ("analytic", "both"):
        probs = association.association_probs(sc)
    mc = None
    if spec.engines in ("mc", "both"):
        mc = sim.estimate(sc, "association", spec.n_drops, spec.seed,
                          spec.irs_mode, n_jobs=spec.n_jobs)
    for state in ("los", "nlos", "rlos"):
        est = mc.estimates()[state] if mc else None
        rows.append(
            ComparisonRow(
                spec.param, value, f"a_{state}",
                probs[state] if probs else None,
                est.mean if est else None,
                est.ci_halfwidth if est else None,
            )
        )
    return rows


def _transition_rows(spec: SweepSpec, sc: Scenario, value: float):
    rows = []
    tm = None
    if spec.engines in ("analytic", "both"):
        tm = transition_matrix(sc)
    mc = None
    if spec.engines in ("mc", "both"):
        mc = sim.estimate(sc, "transition", spec.n_drops, spec.seed,
                          spec.irs_mode, n_jobs=spec.n_jobs)
    for ki, k in enumerate(association.STATES):
        for ji, j in enumerate(association.STATES):
            est = mc.prob(ki, ji) if mc else None
            if est is not None and math.isnan(est.mean):
                est = None
            rows.append(
                ComparisonRow(
                    spec.param, value, f"p_{k}_{j}",
                    float(tm.p[ki, ji]) if tm is not None else None,
                    est.mean if est else None,
                    est.ci_halfwidth if est else None,
                )
            )
    return rows


def _handover_rows(spec: SweepSpec, sc: Scenario, value: float):
    h = None
    if spec.engines in ("analytic", "both"):
        h = ho_probability(sc).h
    est = None
    if spec.engines in ("mc", "both"):
        est = sim.estimate(sc, "handover", spec.n_drops, spec.seed,
                           spec.irs_mode, n_jobs=spec.n_jobs).h
    return [
        ComparisonRow(spec.param, value, "h", h,
                      est.mean if est else None,
                      est.ci_halfwidth if est else None)
    ]


def run_sweep(spec: SweepSpec) -> list[ComparisonRow]:
    """Evaluate the sweep; points are independent and deterministic for a
    fixed seed. Engine errors abort the sweep (partial CSVs are not
    written)."""
    rows: list[ComparisonRow] = []
    for value in spec.values:
        sc = _apply(spec.base, spec.param, float(value), spec.n_c)
        if spec.protocol == "densities":
            d = float(value) if spec.param == "d" else 100.0
            rows.extend(_density_rows(spec, sc, d))
        elif spec.protocol == "association":
            rows.extend(_association_rows(spec, sc, float(value)))
        elif spec.protocol == "transition":
            rows.extend(_transition_rows(spec, sc, float(value)))
        else:
            rows.extend(_handover_rows(spec, sc, float(value)))
    return rows


# --- CSV ---------------------------------------------------------------------

_HEADER = "param,value,metric,analytic,mc_mean,mc_ci,abs_diff,status"


def _fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))  # shortest exact round-trip, locale-free


def emit_csv(rows: list[ComparisonRow], path_or_file, abs_gate: float = 0.02,
             comment: str = "") -> None:
    """Deterministic byte output: '.' decimal point, no locale, fixed
    formatting. Values are probabilities unless the metric name carries a
    unit suffix."""
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, "w", newline="\n") if own else path_or_file
    try:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(_HEADER + "\n")
        for r in rows:
            status = {True: "pass", False: "fail", None: "na"}[r.passed(abs_gate)]
            fh.write(
                ",".join(
                    [
                        r.param,
                        _fmt(r.value),
                        r.metric,
                        _fmt(r.analytic),
                        _fmt(r.mc_mean),
                        _fmt(r.mc_ci),
                        _fmt(r.abs_diff),
                        status,
                    ]
                )
                + "\n"
            )
    finally:
        if own:
            fh.close()


def parse_csv(path_or_file) -> list[ComparisonRow]:
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file) if own else path_or_file
    try:
        rows = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("param,"):
                continue
            parts = line.split(",")
            to_f = lambda s: float(s) if s else None
            rows.append(
                ComparisonRow(parts[0], float(parts[1]), parts[2],
                              to_f(parts[3]), to_f(parts[4]), to_f(parts[5]))
            )
        return rows
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class CompareSummary:
    n_rows: int
    n_compared: int
    n_pass: int
    n_fail: int
    max_abs_diff: float

    @property
    def ok(self) -> bool:
        return self.n_fail == 0


def compare_report(rows: list[ComparisonRow], abs_gate: float = 0.02,
                   out=None) -> CompareSummary:
    """Per-row verdicts plus the aggregate; rows without both engines are
    reported but not gated."""
    n_pass = n_fail = n_cmp = 0
    max_diff = 0.0
    buf = out or io.StringIO()
    for r in rows:
        verdict = r.passed(abs_gate)
        if verdict is None:
            status = "na  "
        elif verdict:
            status = "pass"
            n_pass += 1
        else:
            status = "FAIL"
            n_fail += 1
        if verdict is not None:
            n_cmp += 1
            max_diff = max(max_diff, r.abs_diff)
        buf.write(
            f"{status}  {r.param}={_fmt(r.value):>10} {r.metric:<24} "
            f"analytic={_fmt(r.analytic):>12} mc={_fmt(r.mc_mean):>12} "
            f"ci={_fmt(r.mc_ci):>10}\n"
        )
    summary = CompareSummary(len(rows), n_cmp, n_pass, n_fail, max_diff)
    buf.write(
        f"# compared={summary.n_compared} pass={summary.n_pass} "
        f"fail={summary.n_fail} max|diff|={summary.max_abs_diff:.6g}\n"
    )
    return summary
