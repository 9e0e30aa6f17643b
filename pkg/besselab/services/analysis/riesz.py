# besselab/services/analysis/riesz.py
# The Riesz family f_alpha(x) = |x|^(-alpha) (0 at the origin): predicates, exact Fourier
# constants, singularity-aware grid sampling and a convolution-based Fourier oracle.

from __future__ import annotations

import itertools
import logging
import math
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydField, field_validator
from scipy import special

from besselab.services.analysis.gridfield import Domain, Field, GridSpec, outer_shell

logger = logging.getLogger(__name__)

SPECTRAL_DECAY_TOL = 1e-8
DEFAULT_NEAR_FIELD = 2
# narrowest subtraction Gaussian, in lattice steps
SUBTRACTION_MIN_CELLS = 2.0


class RieszParam(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    n: int

    @field_validator("alpha")
    @classmethod
    def _positive_alpha(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"alpha must be positive and finite, got {v}")
        return float(v)

    @field_validator("n")
    @classmethod
    def _positive_dim(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"dimension n must be >= 1, got {v}")
        return v

    @property
    def tempered(self) -> bool:
        return self.alpha < self.n

    def dual(self) -> "RieszParam":
        """Exponent of the Fourier image: f_alpha -> f_(n - alpha)."""
        return RieszParam(alpha=self.n - self.alpha, n=self.n)


class SingularCellRule(BaseModel):
    model_config = ConfigDict(frozen=True)

    subdivision_depth: int = PydField(default=3, ge=1)
    samples_per_axis: int = PydField(default=4, ge=2)


class Integrability(NamedTuple):
    on_unit_ball: bool
    off_unit_ball: bool


def _require_tempered(param: RieszParam) -> None:
    if not param.tempered:
        raise ValueError(
            f"f_alpha is not tempered for alpha={param.alpha} >= n={param.n}"
        )


def _radial_power(alpha: float, r: np.ndarray) -> np.ndarray:
    """r^(-alpha) for r > 0 and exactly 0 at r == 0."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = r[pos] ** (-alpha)
    return out


def f_alpha_eval(param: RieszParam, x: Sequence[float]) -> float:
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != param.n:
        raise ValueError(f"point has {pt.size} components, expected n={param.n}")
    r = float(np.linalg.norm(pt))
    return 0.0 if r == 0.0 else r ** (-param.alpha)


def integrability_check(param: RieszParam) -> Integrability:
    return Integrability(
        on_unit_ball=param.alpha < param.n, off_unit_ball=param.alpha > param.n
    )


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n: 2 pi^(n/2) / Gamma(n/2)."""
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / float(special.gamma(n / 2.0))


def riesz_ft_constant(param: RieszParam) -> float:
    """C(alpha, n) = 2^(n/2 - alpha) Gamma((n - alpha)/2) / Gamma(alpha/2)."""
    _require_tempered(param)
    a, n = param.alpha, param.n
    return (
        2.0 ** (n / 2.0 - a)
        * float(special.gamma((n - a) / 2.0))
        / float(special.gamma(a / 2.0))
    )


# ---------------------- singular cell quadrature ----------------------


@lru_cache(maxsize=16)
def _gauss_rule(samples: int):
    nodes, weights = special.roots_legendre(samples)
    return np.asarray(nodes), np.asarray(weights)


def _box_integral(alpha: float, lo: np.ndarray, hi: np.ndarray, pieces: int, rule) -> float:
    """Composite tensor Gauss-Legendre integral of |y|^(-alpha) over the box [lo, hi]."""
    nodes, weights = rule
    axes = []
    wts = []
    for a, b in zip(lo, hi):
        edges = np.linspace(a, b, pieces + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        axes.append((mid[:, None] + half[:, None] * nodes[None, :]).ravel())
        wts.append((half[:, None] * weights[None, :]).ravel())
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    wgrid = np.meshgrid(*wts, indexing="ij", sparse=True)
    r2 = sum(g * g for g in grids)
    w = wgrid[0]
    for extra in wgrid[1:]:
        w = w * extra
    return float(np.sum(w * _radial_power(alpha, np.sqrt(r2))))


def _corner_box_integral(alpha: float, sides: np.ndarray, rule: SingularCellRule) -> float:
    """
    Integral of |y|^(-alpha) over prod [0, sides_i] (singularity at a corner).

    The corner child of each bisection is a half-size copy of its parent, so the
    depth-d and depth-(d-1) estimates differ by a factor 2^-(n - alpha) in their
    leading error; one Richardson step removes it.
    """
    n = len(sides)
    gauss = _gauss_rule(rule.samples_per_axis)
    depth = rule.subdivision_depth
    shell_sum = 0.0
    estimates = []
    for level in range(depth + 1):
        scale = 0.5**level
        corner = _box_integral(alpha, np.zeros(n), sides * scale, 1, gauss)
        estimates.append(shell_sum + corner)
        if level == depth:
            break
        half = sides * scale * 0.5
        for bits in itertools.product((0, 1), repeat=n):
            if not any(bits):
                continue
            lo = np.asarray(bits, dtype=float) * half
            shell_sum += _box_integral(alpha, lo, lo + half, 1, gauss)
    ratio = 2.0 ** (-(n - alpha))
    return (estimates[-1] - ratio * estimates[-2]) / (1.0 - ratio)


def _cell_integral(alpha: float, center: np.ndarray, width: float, rule: SingularCellRule) -> float:
    lo = center - 0.5 * width
    hi = center + 0.5 * width
    if np.all(lo <= 0.0) and np.all(hi >= 0.0):
        # split at the singularity into corner boxes, |y| is reflection symmetric
        total = 0.0
        for choice in itertools.product((0, 1), repeat=len(center)):
            sides = np.array([hi[i] if c else -lo[i] for i, c in enumerate(choice)])
            if np.any(sides <= 0.0):
                continue
            total += _corner_box_integral(alpha, sides, rule)
        return total
    pieces = 2**rule.subdivision_depth
    return _box_integral(alpha, lo, hi, pieces, _gauss_rule(rule.samples_per_axis))


def singular_cell_average(
    param: RieszParam, center: Sequence[float], width: float, rule: SingularCellRule
) -> float:
    """
    Average of |y|^(-alpha) over the cube of side `width` centered at `center`,
    coordinates measured from the singular point.

    Examples:
      n=1, alpha=0.5, center 0, width 1 -> 2 (1/2)^(1/2) / (1/2) = 2*sqrt(2)
    """
    _require_tempered(param)
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.size != param.n:
        raise ValueError(f"center has {c.size} components, expected n={param.n}")
    if width <= 0:
        raise ValueError(f"cell width must be positive, got {width}")
    return _cell_integral(param.alpha, c, float(width), rule) / width**param.n


def _kernel_samples(
    param: RieszParam,
    grid: GridSpec,
    rule: SingularCellRule,
    offset: np.ndarray,
    near_field: int,
) -> np.ndarray:
    """f_alpha(x_k + offset) with cell averages on cells within `near_field` of the singularity."""
    coords = grid.coords()
    r2 = sum((c + o) ** 2 for c, o in zip(coords, offset))
    values = _radial_power(param.alpha, np.sqrt(r2))
    # cell k covers x_k +- h/2; the singularity sits at x = -offset
    k0 = np.rint((-offset + grid.L) / grid.h).astype(int)
    for step in itertools.product(range(-near_field, near_field + 1), repeat=grid.n):
        k = k0 + np.asarray(step, dtype=int)
        if np.any(k < 0) or np.any(k >= grid.N):
            continue
        center = grid.point(k) + offset
        if near_field == 0 and np.any(np.abs(center) > 0.5 * grid.h):
            continue
        values[tuple(k)] = singular_cell_average(param, center, grid.h, rule)
    return values


def sample_f_alpha(
    param: RieszParam,
    grid: GridSpec,
    rule: SingularCellRule,
    center_offset: Sequence[float],
) -> Field:
    """
    Samples of f_alpha(x + z) on the grid, z = center_offset.

    The one cell containing the singular point x = -z (if any) carries the cell average
    instead of a point value; every other entry is the pointwise value.
    """
    _require_tempered(param)
    if grid.n != param.n:
        raise ValueError(f"grid dimension {grid.n} does not match n={param.n}")
    z = np.asarray(center_offset, dtype=float).reshape(-1)
    if z.size != grid.n:
        raise ValueError(f"center_offset has {z.size} components, expected {grid.n}")
    return Field(grid, Domain.PHYSICAL, _kernel_samples(param, grid, rule, z, near_field=0))


def _check_spectral_decay(psi: Field) -> None:
    mag = np.abs(psi.values)
    peak = float(mag.max())
    edge = float(mag[outer_shell(psi.grid)].max())
    if peak == 0.0 or edge > SPECTRAL_DECAY_TOL * peak:
        raise ValueError(
            f"spectrum does not decay at the frequency boundary (edge/peak={edge / peak if peak else float('inf'):.3g}); "
            "increase L or N"
        )


def _subtraction_width(lattice: GridSpec, pt: np.ndarray) -> Optional[float]:
    """Gaussian width for singularity subtraction at pt, or None off the lattice."""
    idx = (pt + lattice.L) / lattice.h
    if np.any(np.abs(idx - np.rint(idx)) > 1e-9) or np.any(idx < 0) or np.any(idx > lattice.N - 1):
        return None
    # G stays below e^-64 on the lattice boundary
    margin = lattice.L - lattice.h - float(np.max(np.abs(pt)))
    width = margin / 8.0
    if width < SUBTRACTION_MIN_CELLS * lattice.h:
        return None
    return width


def _gaussian_kernel_integral(kernel: RieszParam, width: float) -> float:
    """int exp(-|u|^2 / width^2) |u|^(-beta) du over R^n, beta = kernel.alpha < n."""
    a = kernel.n - kernel.alpha
    return sphere_area(kernel.n) * 0.5 * width**a * special.gamma(a / 2.0)


def ft_oracle_convolution(
    psi_spectral: Field,
    param: RieszParam,
    eval_points: Sequence[Sequence[float]],
    rule: SingularCellRule = SingularCellRule(),
    near_field: int = DEFAULT_NEAR_FIELD,
) -> List[complex]:
    """
    F(psi * f_alpha)(x) = (2pi)^(-n/2) C(alpha, n) (F psi  conv  f_(n - alpha))(x).

    The convolution is a rectangle rule over the spectral lattice; kernel cells within
    `near_field` lattice steps of the singularity use cell averages (product integration).

    At lattice points x the rule is applied to F psi - F psi(x) G(. - x), G a wide
    Gaussian with G(0) = 1, and F psi(x) times the exact integral of G f_(n - alpha) is
    added back. The residual vanishes at the singularity, so the leading O(dxi^alpha)
    lattice error cancels; dxi = pi/L does not shrink with N.
    """
    _require_tempered(param)
    if psi_spectral.domain is not Domain.SPECTRAL:
        raise ValueError("ft_oracle_convolution expects a spectral field")
    grid = psi_spectral.grid
    if grid.n != param.n:
        raise ValueError(f"grid dimension {grid.n} does not match n={param.n}")
    _check_spectral_decay(psi_spectral)

    lattice = grid.dual()
    kernel = param.dual()
    const = (2.0 * math.pi) ** (-grid.n / 2.0) * riesz_ft_constant(param)
    cell = grid.dxi**grid.n
    out: List[complex] = []
    for x in eval_points:
        pt = np.asarray(x, dtype=float).reshape(-1)
        if pt.size != grid.n:
            raise ValueError(f"eval point has {pt.size} components, expected {grid.n}")
        # |x - xi| = |xi + (-x)|
        g = _kernel_samples(kernel, lattice, rule, -pt, near_field)
        values = psi_spectral.values
        total = 0.0 + 0.0j
        width = _subtraction_width(lattice, pt)
        if width is not None:
            k0 = tuple(np.rint((pt + lattice.L) / lattice.h).astype(int))
            center = complex(values[k0])
            r2 = sum((c - p) ** 2 for c, p in zip(lattice.coords(), pt))
            values = values - center * np.exp(-r2 / width**2)
            total = center * _gaussian_kernel_integral(kernel, width)
        out.append(complex(const * (cell * np.sum(values * g) + total)))
    logger.debug(
        "riesz.oracle.done",
        extra={"event": "riesz.oracle.done", "points": len(out), "alpha": param.alpha},
    )
    return out
