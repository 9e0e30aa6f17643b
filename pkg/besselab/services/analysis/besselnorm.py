# besselab/services/analysis/besselnorm.py
# Bessel operator J_gamma, H^gamma_p norms, the cutoff bump eta, uniformly localized norms
# by translate sweeps, the uniform decay sweep and the unif-membership classifier.

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from besselab.errors import AliasingWarning
from besselab.services.analysis.gridfield import (
    Domain,
    Field,
    GridSpec,
    SlopeFit,
    dft,
    fit_loglog_slope,
    frequency_axis,
    idft,
    lp_norm,
    make_grid,
    outer_shell,
    wavenumber_sq,
)
from besselab.services.analysis.riesz import (
    DEFAULT_NEAR_FIELD,
    RieszParam,
    SingularCellRule,
    ft_oracle_convolution,
    sample_f_alpha,
)
from besselab.services.parallel import ordered_map

logger = logging.getLogger(__name__)

ALIASING_TOL = 1e-6
EMBEDDING_TOL = 1e-12
MIN_UNIF_HALF_EXTENT = 4.0
DEFAULT_RADII = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0)
# refinement ladder base per dimension (N, 2N, 4N are used)
DEFAULT_BASE_N = {1: 2048, 2: 128, 3: 32}
DEFAULT_MEMBERSHIP_L = 8.0


class SpaceIndex(BaseModel):
    """Names the space H^gamma_p."""

    model_config = ConfigDict(frozen=True)

    gamma: float
    p: float

    @field_validator("gamma")
    @classmethod
    def _finite_gamma(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError(f"gamma must be finite, got {v}")
        return v

    @field_validator("p")
    @classmethod
    def _p_above_one(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 1:
            raise ValueError(f"p must lie in (1, inf), got {v}")
        return v


class BumpSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    r_inner: float = 1.0
    r_outer: float = 2.0

    @model_validator(mode="after")
    def _ordered_radii(self) -> "BumpSpec":
        if not (0.0 <= self.r_inner < self.r_outer):
            raise ValueError("bump radii must satisfy 0 <= r_inner < r_outer")
        return self


class Verdict(str, Enum):
    MEMBER = "Member"
    NON_MEMBER = "NonMember"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: Verdict
    rationale: str
    numeric_evidence: Optional[SlopeFit] = None
    ladder: Tuple[Tuple[int, float], ...] = ()
    contracting: Optional[bool] = None


class BesselOutput(NamedTuple):
    field: Field
    aliased: bool


@dataclass(frozen=True)
class UnifSweep:
    sup: float
    argmax_z: Tuple[float, ...]
    table: Tuple[Tuple[Tuple[float, ...], float], ...]


# ---------------------- Bessel operator ----------------------


def phi_weight(gamma: float, xi: Sequence[float]) -> float:
    """(1 + |xi|^2)^(gamma/2)."""
    v = np.asarray(xi, dtype=float).reshape(-1)
    return float((1.0 + float(np.dot(v, v))) ** (gamma / 2.0))


def _phi_grid(grid: GridSpec, gamma: float) -> np.ndarray:
    return (1.0 + wavenumber_sq(grid)) ** (gamma / 2.0)


def aliasing_fraction(weighted: np.ndarray, grid: GridSpec) -> float:
    """Share of sum |w|^2 carried by the outer frequency shell."""
    energy = np.abs(weighted) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    return float(np.sum(energy[outer_shell(grid)])) / total


def _bessel(u: Field, gamma: float) -> Tuple[Field, float]:
    if u.domain is not Domain.PHYSICAL:
        raise ValueError("apply_bessel expects a physical field")
    if gamma == 0.0:
        return u, 0.0
    weighted = _phi_grid(u.grid, gamma) * dft(u).values
    frac = aliasing_fraction(weighted, u.grid)
    return idft(Field(u.grid, Domain.SPECTRAL, weighted)), frac


def bessel_unguarded(u: Field, gamma: float) -> Field:
    """J_gamma without the aliasing check (operator compositions)."""
    return _bessel(u, gamma)[0]


def apply_bessel(u: Field, gamma: float) -> BesselOutput:
    """
    J_gamma u = idft(phi_gamma * dft(u)).

    When the outer frequency shell carries more than ALIASING_TOL of the weighted
    spectral energy, an AliasingWarning is emitted and `aliased` is set.
    """
    out, frac = _bessel(u, gamma)
    aliased = frac > ALIASING_TOL
    if aliased:
        warnings.warn(
            f"J_{gamma:g}: outer shell holds {frac:.3g} of the weighted spectral energy "
            f"(N={u.grid.N}, L={u.grid.L:g}); refine the grid",
            AliasingWarning,
            stacklevel=2,
        )
    return BesselOutput(out, aliased)


def hs_norm(u: Field, idx: SpaceIndex) -> float:
    if idx.gamma == 0.0:
        return lp_norm(u, idx.p)
    return lp_norm(apply_bessel(u, idx.gamma).field, idx.p)


# ---------------------- cutoff bump ----------------------


def _smooth_transition(x: np.ndarray) -> np.ndarray:
    """0 for x <= 0, 1 for x >= 1, C-infinity in between (psi(x) / (psi(x) + psi(1 - x)))."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    return out


def eta_radial(r: np.ndarray, bump: BumpSpec = BumpSpec()) -> np.ndarray:
    """Radial bump profile q(r), vectorized over r."""
    width = bump.r_outer - bump.r_inner
    return _smooth_transition((bump.r_outer - np.asarray(r, dtype=float)) / width)


def bump_eta(x: Sequence[float], bump: BumpSpec = BumpSpec()) -> float:
    v = np.asarray(x, dtype=float).reshape(-1)
    return float(eta_radial(np.array([math.sqrt(float(np.dot(v, v)))]), bump)[0])


def _bump_values(grid: GridSpec, m: float, z: Sequence[float], bump: BumpSpec) -> np.ndarray:
    zc = np.asarray(z, dtype=float).reshape(-1)
    if zc.size != grid.n:
        raise ValueError(f"center has {zc.size} components, expected {grid.n}")
    r2 = sum((c - o) ** 2 for c, o in zip(grid.coords(), zc))
    vals = eta_radial(np.sqrt(r2) / m, bump)
    return np.broadcast_to(vals, grid.shape)


def sample_bump(
    grid: GridSpec, m: float = 1.0, z: Optional[Sequence[float]] = None, bump: BumpSpec = BumpSpec()
) -> Field:
    """eta((x - z)/m) on the grid."""
    if not m > 0:
        raise ValueError(f"bump scale m must be positive, got {m}")
    center = np.zeros(grid.n) if z is None else z
    return Field(grid, Domain.PHYSICAL, _bump_values(grid, m, center, bump))


def eta_l2_scaling(grid: GridSpec, m: float, bump: BumpSpec = BumpSpec()) -> Tuple[float, float]:
    """(||eta_m||^2, ||eta||^2 m^n) on one grid; equal up to quadrature error."""
    scaled = lp_norm(sample_bump(grid, m, bump=bump), 2.0) ** 2
    unit = lp_norm(sample_bump(grid, 1.0, bump=bump), 2.0) ** 2
    return scaled, unit * m**grid.n


# ---------------------- uniformly localized norms ----------------------


def default_directions(n: int) -> int:
    return {1: 2, 2: 8, 3: 26}[n]


def _cube_directions() -> List[np.ndarray]:
    dirs = []
    for v in itertools.product((-1, 0, 1), repeat=3):
        if any(v):
            a = np.asarray(v, dtype=float)
            dirs.append(a / np.linalg.norm(a))
    return dirs


def _fibonacci_directions(count: int) -> List[np.ndarray]:
    golden = math.pi * (3.0 - math.sqrt(5.0))
    out = []
    for i in range(count):
        y = 1.0 - 2.0 * (i + 0.5) / count
        rad = math.sqrt(max(0.0, 1.0 - y * y))
        th = golden * i
        out.append(np.array([math.cos(th) * rad, y, math.sin(th) * rad]))
    return out


def sweep_points(n: int, radii: Sequence[float], directions: int) -> List[Tuple[float, ...]]:
    """Shift vectors z: radius 0 once, otherwise `directions` unit directions per radius."""
    if directions < 1:
        raise ValueError(f"directions_per_radius must be >= 1, got {directions}")
    if n == 1:
        units = [np.array([1.0]), np.array([-1.0])][: max(1, min(2, directions))]
    elif n == 2:
        units = [
            np.array([math.cos(2 * math.pi * k / directions), math.sin(2 * math.pi * k / directions)])
            for k in range(directions)
        ]
    elif n == 3:
        units = _cube_directions() if directions == 26 else _fibonacci_directions(directions)
    else:
        raise ValueError(f"unsupported dimension n={n}")
    points: List[Tuple[float, ...]] = []
    for r in radii:
        if r < 0 or not math.isfinite(r):
            raise ValueError(f"sweep radii must be finite and >= 0, got {r}")
        if r == 0:
            points.append(tuple([0.0] * n))
            continue
        points.extend(tuple(float(c) for c in r * u) for u in units)
    return points


def unif_norm_sweep(
    u_sampler: Callable[[np.ndarray], Field],
    idx: SpaceIndex,
    grid: GridSpec,
    radii: Sequence[float] = DEFAULT_RADII,
    directions_per_radius: Optional[int] = None,
    bump: BumpSpec = BumpSpec(),
) -> UnifSweep:
    """
    max over sweep points z of ||eta * u(. + z)||_{H^gamma_p}.

    The cutoff stays at the origin and the field is recentered, so one grid serves
    every z. The result is a lower bound for the supremum over all shifts.
    """
    if grid.L < max(MIN_UNIF_HALF_EXTENT, bump.r_outer + 2.0):
        raise ValueError(
            f"grid too small for the cutoff support: L={grid.L:g} < "
            f"{max(MIN_UNIF_HALF_EXTENT, bump.r_outer + 2.0):g}"
        )
    dirs = directions_per_radius or default_directions(grid.n)
    zs = sweep_points(grid.n, radii, dirs)
    if not zs:
        raise ValueError("sweep needs at least one radius")
    eta = _bump_values(grid, 1.0, np.zeros(grid.n), bump)

    def _norm_at(z: Tuple[float, ...]) -> float:
        u = u_sampler(np.asarray(z, dtype=float))
        if u.grid != grid:
            raise ValueError("u_sampler returned a field on a different grid")
        return hs_norm(u.with_values(eta * u.values), idx)

    norms = ordered_map(_norm_at, zs)
    best = int(np.argmax(norms))
    logger.info(
        "unif.sweep.done",
        extra={"event": "unif.sweep.done", "points": len(zs), "sup": norms[best], "N": grid.N},
    )
    return UnifSweep(
        sup=float(norms[best]),
        argmax_z=zs[best],
        table=tuple((z, float(v)) for z, v in zip(zs, norms)),
    )


def riesz_sampler(
    param: RieszParam, grid: GridSpec, rule: SingularCellRule = SingularCellRule()
) -> Callable[[np.ndarray], Field]:
    """Recenterable source z -> samples of f_alpha(. + z)."""
    return lambda z: sample_f_alpha(param, grid, rule, z)


def decay_ratio_sweep(
    param: RieszParam,
    z_list: Sequence[Sequence[float]],
    grid: GridSpec,
    rule: SingularCellRule = SingularCellRule(),
    bump: BumpSpec = BumpSpec(),
) -> List[Tuple[Tuple[float, ...], float]]:
    """
    R(z) = max_xi |dft(eta * f_alpha(. + z))(xi)| (1 + |xi|^2)^((n - alpha)/2).

    Uniform boundedness of R over z is the empirical content being checked.
    """
    if not param.tempered:
        raise ValueError(f"decay sweep needs 0 < alpha < n, got alpha={param.alpha}")
    eta = _bump_values(grid, 1.0, np.zeros(grid.n), bump)
    weight = _phi_grid(grid, grid.n - param.alpha)

    def _ratio(z: Tuple[float, ...]) -> float:
        u = sample_f_alpha(param, grid, rule, z)
        spec = dft(u.with_values(eta * u.values)).values
        weighted = spec * weight
        frac = aliasing_fraction(weighted, grid)
        if frac > ALIASING_TOL:
            warnings.warn(
                f"decay sweep z={z}: outer shell holds {frac:.3g} of the weighted spectral energy",
                AliasingWarning,
                stacklevel=2,
            )
        return float(np.max(np.abs(weighted)))

    zs = [tuple(float(c) for c in z) for z in z_list]
    ratios = ordered_map(_ratio, zs)
    logger.info(
        "decay.sweep.done",
        extra={"event": "decay.sweep.done", "points": len(zs), "alpha": param.alpha, "N": grid.N},
    )
    return list(zip(zs, ratios))


def unif_norm_ladder(
    param: RieszParam,
    gamma: float,
    grids: Sequence[GridSpec],
    rule: SingularCellRule = SingularCellRule(),
    radii: Sequence[float] = (0.0,),
) -> List[Tuple[int, float]]:
    """
    Unif H^gamma_2 norm of f_alpha on each grid of a refinement ladder.

    The default sweeps z = 0 only: the cutoff then sits on the singular point, where the
    translates of f_alpha peak. Pass more radii to sweep further shifts per grid.
    """
    idx = SpaceIndex(gamma=gamma, p=2.0)

    def _one(g: GridSpec) -> Tuple[int, float]:
        sweep = unif_norm_sweep(riesz_sampler(param, g, rule), idx, g, radii=radii)
        return g.N, sweep.sup

    return ordered_map(_one, list(grids))


def increments_contract(ladder: Sequence[Tuple[int, float]]) -> bool:
    """True when successive increments of the squared norms shrink along the ladder."""
    if len(ladder) < 3:
        raise ValueError("need at least 3 ladder entries")
    sq = [v * v for _, v in ladder]
    steps = [b - a for a, b in zip(sq, sq[1:])]
    return all(abs(b) < abs(a) for a, b in zip(steps, steps[1:]))


def unif_embedding_holds(src: SpaceIndex, dst: SpaceIndex, n: int) -> bool:
    """
    H^{src}_{unif} embeds continuously into H^{dst}_{unif} when either
    p_src <= p_dst and gamma_src - n/p_src >= gamma_dst - n/p_dst (Sobolev), or
    p_src >= p_dst and gamma_src >= gamma_dst.
    """
    sob = src.p <= dst.p and (
        src.gamma - n / src.p >= dst.gamma - n / dst.p - EMBEDDING_TOL
    )
    loc = src.p >= dst.p and src.gamma >= dst.gamma - EMBEDDING_TOL
    return bool(sob or loc)


def classify_unif_membership(
    param: RieszParam,
    t: float,
    analytic_only: bool = True,
    base_N: Optional[int] = None,
    L: float = DEFAULT_MEMBERSHIP_L,
    rule: SingularCellRule = SingularCellRule(),
) -> MembershipVerdict:
    """
    f_alpha in H^{-t}_{2,unif} iff alpha < min(n, t + n/2).

    With analytic_only=False the verdict carries the unif H^{-t}_2 norms on N, 2N, 4N
    and their log-log fit against N.
    """
    n = param.n
    if not t > -n / 2.0:
        raise ValueError(f"t must exceed -n/2 = {-n / 2.0:g}, got {t}")
    threshold = min(float(n), t + n / 2.0)
    a = param.alpha
    if a < threshold:
        verdict = Verdict.MEMBER
        rationale = f"alpha={a:g} < min(n, t + n/2)={threshold:g}"
    elif a == threshold:
        verdict = Verdict.BOUNDARY
        rationale = f"alpha={a:g} = min(n, t + n/2)"
    else:
        verdict = Verdict.NON_MEMBER
        rationale = f"alpha={a:g} > min(n, t + n/2)={threshold:g}"
    if analytic_only or not param.tempered:
        return MembershipVerdict(verdict=verdict, rationale=rationale)

    base = base_N or DEFAULT_BASE_N[n]
    grids = [make_grid(n, L, base * 2**k) for k in range(3)]
    ladder = unif_norm_ladder(param, -t, grids, rule)
    fit = fit_loglog_slope([(float(N), v) for N, v in ladder])
    contracting = increments_contract(ladder)
    logger.info(
        "membership.ladder.done",
        extra={
            "event": "membership.ladder.done",
            "alpha": a,
            "t": t,
            "slope": fit.slope,
            "contracting": contracting,
        },
    )
    return MembershipVerdict(
        verdict=verdict,
        rationale=rationale,
        numeric_evidence=fit,
        ladder=tuple(ladder),
        contracting=contracting,
    )


@dataclass(frozen=True)
class FtComparison:
    grid: GridSpec
    points: Tuple[Tuple[float, ...], ...]
    direct: Tuple[complex, ...]
    oracle: Tuple[complex, ...]

    @property
    def rel_linf_error(self) -> float:
        """max |direct - oracle| / max |oracle| over the compared lattice points."""
        d = np.asarray(self.direct)
        o = np.asarray(self.oracle)
        return float(np.max(np.abs(d - o)) / np.max(np.abs(o)))


def ft_law_check(
    param: RieszParam,
    grid: GridSpec,
    xi_max: float,
    rule: SingularCellRule = SingularCellRule(),
    near_field: int = DEFAULT_NEAR_FIELD,
    bump: BumpSpec = BumpSpec(),
) -> FtComparison:
    """dft(eta * f_alpha) against the convolution oracle on lattice points with |xi| <= xi_max."""
    eta = sample_bump(grid, 1.0, bump=bump)
    u = sample_f_alpha(param, grid, rule, np.zeros(grid.n))
    direct = dft(u.with_values(eta.values * u.values)).values
    mask = wavenumber_sq(grid) <= xi_max * xi_max
    idx = np.argwhere(mask)
    if idx.size == 0:
        raise ValueError(f"no lattice frequency within xi_max={xi_max:g}")
    xi = frequency_axis(grid)
    points = tuple(tuple(float(xi[i]) for i in row) for row in idx)
    oracle = ft_oracle_convolution(dft(eta), param, points, rule, near_field)
    logger.info(
        "ftcheck.done",
        extra={"event": "ftcheck.done", "alpha": param.alpha, "N": grid.N, "points": len(points)},
    )
    return FtComparison(
        grid=grid,
        points=points,
        direct=tuple(complex(v) for v in direct[mask]),
        oracle=tuple(oracle),
    )
