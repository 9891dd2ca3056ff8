"""Run records and pass/fail checks for the a-priori estimates.

Every solver run assembles a RunRecord; each check below turns one estimate
(energy monotonicity, the telescoped step-size bound, Hoelder-1/2 continuity,
entropy dissipation, total-variation decay, the metric-speed bound) into a
CheckResult with an explicit margin, so tolerance regressions show up in CI
long before an outright failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, UnknownField


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "margin": float(self.margin),
            "tolerance": float(self.tolerance),
        }


@dataclass
class RunRecord:
    """Time series produced by a solver run.

    ``times`` has one entry per recorded state; per-step series (W2
    increments, residuals) are one shorter.  ``meta`` carries the scalars the
    checks need (grid spacing ``h``, level count ``L``, ``lambda_min``,
    initial energy/entropy) plus solver notes.
    """

    times: np.ndarray
    energy: np.ndarray | None = None
    entropy: np.ndarray | None = None
    w2_increments: np.ndarray | None = None
    grad_norm_sq: np.ndarray | None = None
    residuals: np.ndarray | None = None
    tv: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def taus(self) -> np.ndarray:
        return np.diff(self.times)

    def add_check(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_report(self, **extra) -> dict:
        report = {
            "checks": [c.to_dict() for c in self.checks],
            "meta": {k: v for k, v in self.meta.items() if _jsonable(v)},
        }
        report.update(extra)
        return report

    def to_json(self, **extra) -> str:
        return json.dumps(self.to_report(**extra), indent=2, sort_keys=True)


def _jsonable(v) -> bool:
    return isinstance(v, (str, int, float, bool, type(None)))


def _series_monotone(name: str, series: np.ndarray, tol: float) -> CheckResult:
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        return CheckResult(name, True, float("inf"), tol)
    rises = np.diff(series)
    worst = float(rises.max())
    return CheckResult(name, worst <= tol, tol - worst, tol)


def check_energy_monotone(record: RunRecord, tol_rel: float = 1e-8) -> CheckResult:
    """E(k+1) <= E(k) + tol with tol = tol_rel * |E(0)|."""
    e = np.asarray(record.energy, dtype=float)
    tol = tol_rel * abs(float(e[0]))
    return record.add_check(_series_monotone("energy_monotone", e, tol))


def check_telescoped_w2(record: RunRecord, e0: float | None = None) -> CheckResult:
    """sum_k W2(u^k, u^{k+1})^2 / (2 tau_k) <= E(u^0) + tol."""
    if e0 is None:
        e0 = float(record.energy[0])
    w2 = np.asarray(record.w2_increments, dtype=float)
    taus = record.taus
    lhs = float(np.sum(w2**2 / (2.0 * taus)))
    tol = 1e-8 * max(1.0, abs(e0))
    margin = e0 + tol - lhs
    return record.add_check(CheckResult("telescoped_w2", lhs <= e0 + tol, margin, tol))


def check_hoelder(
    record: RunRecord,
    e0: float | None = None,
    pairwise_w2=None,
    max_pairs: int = 50,
) -> CheckResult:
    """W2(u(s), u(t)) <= sqrt(2 E(u^0)) sqrt(t - s) + tol on sampled pairs.

    ``pairwise_w2(i, j)`` must return the true distance between recorded
    states i < j; a triangle-inequality proxy would be an upper bound on the
    left-hand side and could mask violations, so the true distance is
    recomputed on a deterministic subsample of index pairs.
    """
    if e0 is None:
        e0 = float(record.energy[0])
    if pairwise_w2 is None:
        raise ValueError("check_hoelder needs a pairwise_w2 callback")
    h = float(record.meta.get("h", 0.0))
    levels = record.meta.get("L")
    inv_l = 1.0 / float(levels) if levels else 0.0
    tol = 1e-6 + 2.0 * (h + inv_l)

    m = record.times.size
    n_anchor = max(2, int(np.sqrt(2 * max_pairs)) + 1)
    anchors = np.unique(np.linspace(0, m - 1, n_anchor).astype(int))
    pairs = [(i, j) for ai, i in enumerate(anchors) for j in anchors[ai + 1 :]]
    pairs = pairs[:max_pairs]

    bound_coeff = np.sqrt(2.0 * max(e0, 0.0))
    worst = -np.inf
    for i, j in pairs:
        lhs = float(pairwise_w2(int(i), int(j)))
        rhs = bound_coeff * np.sqrt(record.times[j] - record.times[i]) + tol
        worst = max(worst, lhs - rhs)
    passed = worst <= 0.0
    return record.add_check(CheckResult("hoelder_half", passed, -worst, tol))


def entropy_dissipation_tolerance(record: RunRecord, lambda_min: float, upto: int) -> float:
    """1e-6 |H0| plus first-order slack for the discrete gradient quadrature."""
    h0 = abs(float(record.entropy[0]))
    h = float(record.meta.get("h", 0.0))
    levels = record.meta.get("L")
    inv_l = 1.0 / float(levels) if levels else 0.0
    taus = record.taus
    gsum = float(np.sum(taus[:upto] * np.asarray(record.grad_norm_sq)[1 : upto + 1]))
    return 1e-6 * h0 + 5.0 * (h + inv_l) * (1.0 + lambda_min * gsum)


def check_entropy_dissipation(record: RunRecord, lambda_min: float | None = None) -> CheckResult:
    """H(u^0) >= H(u^k) + lambda_min sum_{l<=k} tau_{l-1} |grad u^l|^2 - tol for all k."""
    if lambda_min is None:
        lambda_min = float(record.meta["lambda_min"])
    ent = np.asarray(record.entropy, dtype=float)
    grads = np.asarray(record.grad_norm_sq, dtype=float)
    taus = record.taus
    dissip = np.concatenate(([0.0], np.cumsum(taus * grads[1:])))
    worst = -np.inf
    worst_tol = 0.0
    for k in range(1, ent.size):
        tol = entropy_dissipation_tolerance(record, lambda_min, k)
        gap = (ent[k] + lambda_min * dissip[k]) - (ent[0] + tol)
        if gap > worst:
            worst = gap
            worst_tol = tol
    if ent.size < 2:
        worst, worst_tol = -np.inf, 0.0
    return record.add_check(
        CheckResult("entropy_dissipation", worst <= 0.0, -worst, worst_tol)
    )


def check_tv_monotone(record: RunRecord, field_name: str, tol_rel: float = 1e-8) -> CheckResult:
    """The named TV series is nonincreasing within tol_rel * TV(0)."""
    if field_name not in record.tv:
        raise UnknownField(field_name)
    series = np.asarray(record.tv[field_name], dtype=float)
    tol = tol_rel * abs(float(series[0])) if series.size else 0.0
    result = _series_monotone(f"tv_monotone[{field_name}]", series, tol)
    return record.add_check(result)


def check_metric_speed(
    record: RunRecord,
    pressure_increments: np.ndarray,
    n_species: int,
    tol: float = 1e-8,
) -> CheckResult:
    """W2(u^k, u^{k+1}) <= sqrt(N) W2(p_k, p_{k+1}) + tol at every step."""
    w2u = np.asarray(record.w2_increments, dtype=float)
    w2p = np.asarray(pressure_increments, dtype=float)
    if w2u.shape != w2p.shape:
        raise DimensionMismatch(f"series lengths differ: {w2u.shape} vs {w2p.shape}")
    excess = w2u - np.sqrt(n_species) * w2p - tol
    worst = float(excess.max()) if excess.size else -np.inf
    return record.add_check(CheckResult("metric_speed", worst <= 0.0, -worst, tol))
