# besselab/services/analysis/sharpness.py
# The sharpness pipeline for H^{-min(s,t)}_{p1,unif} inside M[s, -t]: p1, delta(eps), the
# f_alpha counterexample with alpha = s + t + delta(eps), and its numeric verification.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from besselab.services.analysis.besselnorm import (
    MembershipVerdict,
    SpaceIndex,
    Verdict,
    increments_contract,
    unif_embedding_holds,
    unif_norm_ladder,
)
from besselab.services.analysis.gridfield import GridSpec
from besselab.services.analysis.multiplier import (
    GrowthExperiment,
    MultiplierProblem,
    growth_slope_experiment,
)
from besselab.services.analysis.riesz import RieszParam, SingularCellRule
from besselab.services.parallel import ordered_map

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-12


def compute_p1(prob: MultiplierProblem) -> float:
    if prob.s_max <= 0.0:
        raise ValueError("p1 = n/max(s, t) needs max(s, t) > 0")
    return prob.n / prob.s_max


def _eps_upper(prob: MultiplierProblem) -> float:
    return compute_p1(prob) - 2.0


def delta_of_eps(prob: MultiplierProblem, eps: float) -> float:
    """delta(eps) = s^2 / (2 (n/eps - s)) with s = max(s, t)."""
    upper = _eps_upper(prob)
    if not 0.0 < eps < upper:
        raise ValueError(f"eps must lie in (0, n/max(s,t) - 2) = (0, {upper:g}), got {eps}")
    s = prob.s_max
    return s * s / (2.0 * (prob.n / eps - s))


def _close(a: float, b: float, tol: float = IDENTITY_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


class CounterexampleSpec(BaseModel):
    """f_alpha lies in H^{-min(s,t)}_{p1 - eps, unif} but not in M[s, -t]."""

    model_config = ConfigDict(frozen=True)

    problem: MultiplierProblem
    epsilon: float
    delta: float
    alpha: float
    p1: float
    p_target: float
    t1: float
    s1: float

    @model_validator(mode="after")
    def _invariants(self) -> "CounterexampleSpec":
        prob = self.problem
        n, s, t = prob.n, prob.s, prob.t
        smax, smin = prob.s_max, prob.s_min
        if not prob.in_sharp_regime:
            raise ValueError("counterexample needs 0 < max(s, t) < n/2")
        if not 0.0 < self.epsilon < n / smax - 2.0:
            raise ValueError(f"epsilon={self.epsilon} outside (0, n/max(s,t) - 2)")
        if not _close(self.delta, smax * smax / (2.0 * (n / self.epsilon - smax))):
            raise ValueError("delta does not match s^2 / (2 (n/eps - s))")
        if not 0.0 < self.delta < n / 2.0 - smax:
            raise ValueError(f"delta={self.delta} outside (0, n/2 - max(s,t))")
        if not _close(self.alpha, s + t + self.delta):
            raise ValueError("alpha must equal s + t + delta")
        if not self.alpha < n:
            raise ValueError(f"alpha={self.alpha} must be < n={n} (tempered)")
        if not _close(self.t1, s + t + 2.0 * self.delta - n / 2.0):
            raise ValueError("t1 must equal s + t + 2 delta - n/2")
        if not self.t1 > -n / 2.0 or not self.alpha < self.t1 + n / 2.0:
            raise ValueError("t1 must satisfy t1 > -n/2 and alpha < t1 + n/2")
        if not _close(self.p1, n / smax) or not _close(self.p_target, self.p1 - self.epsilon):
            raise ValueError("p1 = n/max(s,t) and p_target = p1 - eps required")
        if not self.p_target > 2.0:
            raise ValueError(f"p_target={self.p_target} must exceed 2")
        if not _close(self.s1, s + t - n / 2.0):
            raise ValueError("s1 must equal s + t - n/2")
        lhs = -self.t1 - n / 2.0
        rhs = -smin - n / (n / smax - self.epsilon)
        if not _close(lhs, rhs):
            raise ValueError(f"exponent identity fails: {lhs!r} != {rhs!r}")
        return self


def construct_counterexample(prob: MultiplierProblem, eps: float) -> CounterexampleSpec:
    if not prob.in_sharp_regime:
        raise ValueError(
            f"counterexample needs 0 < max(s, t) < n/2, got max(s, t)={prob.s_max:g}, n={prob.n}"
        )
    delta = delta_of_eps(prob, eps)
    p1 = compute_p1(prob)
    return CounterexampleSpec(
        problem=prob,
        epsilon=eps,
        delta=delta,
        alpha=prob.s + prob.t + delta,
        p1=p1,
        p_target=p1 - eps,
        t1=prob.s + prob.t + 2.0 * delta - prob.n / 2.0,
        s1=prob.s + prob.t - prob.n / 2.0,
    )


def classify_multiplier_membership(prob: MultiplierProblem, alpha: float) -> MembershipVerdict:
    """Member for alpha < s + t, NonMember for alpha > s + t, Boundary (open) at equality."""
    if not 0.0 < alpha < prob.n:
        raise ValueError(f"need 0 < alpha < n, got alpha={alpha}, n={prob.n}")
    if not prob.s_max < prob.n / 2.0:
        raise ValueError(f"need max(s, t) < n/2, got {prob.s_max:g}")
    st = prob.s + prob.t
    if alpha < st:
        return MembershipVerdict(Verdict.MEMBER, f"alpha={alpha:g} < s + t={st:g}")
    if alpha > st:
        return MembershipVerdict(Verdict.NON_MEMBER, f"alpha={alpha:g} > s + t={st:g}")
    return MembershipVerdict(Verdict.BOUNDARY, "alpha = s + t is not decided either way")


@dataclass(frozen=True)
class CounterexampleReport:
    spec: CounterexampleSpec
    analytic_ok: bool
    ladder: Tuple[Tuple[int, float], ...]
    ladder_stable: bool
    growth: GrowthExperiment

    @property
    def slope_ok(self) -> bool:
        return self.growth.witnesses_necessity

    @property
    def sharpness_witnessed(self) -> bool:
        return self.analytic_ok and self.ladder_stable and self.slope_ok

    def rows(self) -> List[Dict[str, object]]:
        spec = self.spec
        prob = spec.problem
        out: List[Dict[str, object]] = [
            {"key": "n", "value": prob.n},
            {"key": "s", "value": prob.s},
            {"key": "t", "value": prob.t},
            {"key": "epsilon", "value": spec.epsilon},
            {"key": "delta", "value": spec.delta},
            {"key": "alpha", "value": spec.alpha},
            {"key": "p1", "value": spec.p1},
            {"key": "p_target", "value": spec.p_target},
            {"key": "t1", "value": spec.t1},
            {"key": "s1", "value": spec.s1},
            {"key": "analytic_ok", "value": self.analytic_ok},
        ]
        for N, norm in self.ladder:
            out.append({"key": f"unif_norm_N{N}", "value": norm})
        out.extend(
            [
                {"key": "ladder_stable", "value": self.ladder_stable},
                {"key": "growth_slope", "value": self.growth.fit.slope},
                {"key": "reference_slope", "value": self.growth.reference_fit.slope},
                {"key": "corrected_slope", "value": self.growth.corrected_slope},
                {"key": "growth_r2", "value": self.growth.fit.r2},
                {"key": "expected_slope", "value": self.growth.expected_slope},
                {"key": "slope_ok", "value": self.slope_ok},
                {"key": "sharpness_witnessed", "value": self.sharpness_witnessed},
            ]
        )
        return out


def verify_counterexample(
    spec: CounterexampleSpec,
    grid_ladder: Sequence[GridSpec],
    m_values: Sequence[float],
    rule: SingularCellRule = SingularCellRule(),
) -> CounterexampleReport:
    """
    (a) alpha < t1 + n/2 and alpha < n, with H^{-t1}_{2,unif} inside H^{-min(s,t)}_{p_target,unif};
    (b) unif H^{-t1}_2 norms of f_alpha settle along the grid ladder;
    (c) the growth slope exceeds the m^n reference fit.
    (b) and (c) run concurrently.
    """
    prob = spec.problem
    n = prob.n
    if len(grid_ladder) < 3:
        raise ValueError("grid ladder needs at least 3 grids")
    if any(g.n != n for g in grid_ladder):
        raise ValueError("grid ladder dimension does not match the problem")
    analytic_ok = (
        spec.alpha < spec.t1 + n / 2.0
        and spec.alpha < n
        and unif_embedding_holds(
            SpaceIndex(gamma=-spec.t1, p=2.0),
            SpaceIndex(gamma=-prob.s_min, p=spec.p_target),
            n,
        )
    )
    param = RieszParam(alpha=spec.alpha, n=n)
    jobs: List[Callable[[], Any]] = [
        lambda: unif_norm_ladder(param, -spec.t1, list(grid_ladder), rule),
        lambda: growth_slope_experiment(prob, spec.alpha, list(m_values)),
    ]
    ladder, growth = ordered_map(lambda job: job(), jobs, max_workers=2)
    report = CounterexampleReport(
        spec=spec,
        analytic_ok=bool(analytic_ok),
        ladder=tuple(ladder),
        ladder_stable=increments_contract(ladder),
        growth=growth,
    )
    logger.info(
        "counterexample.verified",
        extra={
            "event": "counterexample.verified",
            "alpha": spec.alpha,
            "slope": growth.corrected_slope,
            "ladder_stable": report.ladder_stable,
            "witnessed": report.sharpness_witnessed,
        },
    )
    return report
