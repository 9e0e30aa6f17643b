# besselab/services/analysis/gridfield.py
# Uniform grids on [-L, L)^n, immutable sampled fields, the symmetric-normalized DFT,
# L_p quadrature and log-log slope fitting.

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import fft as sp_fft
from scipy import stats

from besselab.errors import NumericFailure
from besselab.services.parallel import transform_workers

SUPPORTED_DIMS = (1, 2, 3)
MIN_POINTS = 8


class Domain(str, Enum):
    PHYSICAL = "physical"
    SPECTRAL = "spectral"


class GridSpec(BaseModel):
    """Uniform grid: N points per axis, x_k = -L + k*h, h = 2L/N."""

    model_config = ConfigDict(frozen=True)

    n: int
    L: float
    N: int

    @field_validator("n")
    @classmethod
    def _supported_dim(cls, v: int) -> int:
        if v not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension n={v}; expected one of {SUPPORTED_DIMS}")
        return v

    @field_validator("L")
    @classmethod
    def _positive_extent(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"half-extent L must be positive and finite, got {v}")
        return float(v)

    @field_validator("N")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v < MIN_POINTS or v & (v - 1):
            raise ValueError(f"N must be a power of two >= {MIN_POINTS}, got {v}")
        return v

    @property
    def h(self) -> float:
        # N is a power of two, so the division is exact
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    def axis(self) -> np.ndarray:
        return -self.L + np.arange(self.N) * self.h

    def coords(self) -> List[np.ndarray]:
        """Broadcast-ready coordinate arrays (ij indexing), one per axis."""
        return list(np.meshgrid(*([self.axis()] * self.n), indexing="ij", sparse=True))

    def point(self, index: Sequence[int]) -> np.ndarray:
        return -self.L + np.asarray(index, dtype=float) * self.h

    def dual(self) -> "GridSpec":
        """The frequency lattice viewed as a physical grid (spacing pi/L)."""
        return GridSpec(n=self.n, L=math.pi * self.N / (2.0 * self.L), N=self.N)


@dataclass(frozen=True)
class Field:
    grid: GridSpec
    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.complex128, order="C", copy=True)
        if arr.size != self.grid.N**self.grid.n:
            raise ValueError(
                f"values length {arr.size} does not match N^n = {self.grid.N ** self.grid.n}"
            )
        arr = arr.reshape(self.grid.shape)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def flat_values(self) -> np.ndarray:
        """Row-major view of length N^n."""
        return self.values.reshape(-1)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, self.domain, values)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    points: Tuple[Tuple[float, float], ...]


def make_grid(n: int, L: float, N: int) -> GridSpec:
    return GridSpec(n=n, L=L, N=N)


def frequency_axis(grid: GridSpec) -> np.ndarray:
    """xi_j = (pi/L) * j for j in -N/2 .. N/2-1."""
    return grid.dxi * np.arange(-grid.N // 2, grid.N // 2)


def wavenumber_sq(grid: GridSpec) -> np.ndarray:
    """|xi|^2 on the full spectral lattice, shape (N,)*n."""
    xi = frequency_axis(grid)
    axes = np.meshgrid(*([xi] * grid.n), indexing="ij", sparse=True)
    total = np.zeros(grid.shape)
    for a in axes:
        total = total + a * a
    return total


def sample_function(f: Callable[..., object], grid: GridSpec) -> Field:
    """
    Sample `f(*coords)` on the grid; `f` receives one broadcastable array per axis.

    Non-finite samples raise NumericFailure naming the first offending grid point.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        raw = f(*grid.coords())
    vals = np.broadcast_to(np.asarray(raw, dtype=np.complex128), grid.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        x = tuple(float(c) for c in grid.point(idx))
        raise NumericFailure(f"non-finite sample at grid index {idx}, x={x}")
    return Field(grid, Domain.PHYSICAL, vals)


def _require(u: Field, domain: Domain) -> None:
    if u.domain is not domain:
        raise ValueError(f"expected a {domain.value} field, got {u.domain.value}")


def _checkerboard(grid: GridSpec) -> np.ndarray:
    """(-1)^(j_1 + ... + j_n) over the centered frequency indices."""
    j = np.arange(-grid.N // 2, grid.N // 2)
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    out = np.ones(grid.shape)
    for ax in range(grid.n):
        shape = [1] * grid.n
        shape[ax] = grid.N
        out = out * sign.reshape(shape)
    return out


def _scale(grid: GridSpec) -> float:
    return grid.h**grid.n / (2.0 * math.pi) ** (grid.n / 2.0)


def dft(u: Field) -> Field:
    """
    F(xi_j) = (2pi)^(-n/2) h^n sum_k u(x_k) exp(-i <xi_j, x_k>), centered j ordering.

    With x_k = -L + k h the phase splits into (-1)^j times the plain FFT kernel.
    """
    _require(u, Domain.PHYSICAL)
    g = u.grid
    axes = tuple(range(g.n))
    raw = sp_fft.fftn(u.values, axes=axes, workers=transform_workers())
    spec = sp_fft.fftshift(raw, axes=axes) * (_checkerboard(g) * _scale(g))
    return Field(g, Domain.SPECTRAL, spec)


def idft(v: Field) -> Field:
    _require(v, Domain.SPECTRAL)
    g = v.grid
    axes = tuple(range(g.n))
    raw = sp_fft.ifftshift(v.values * (_checkerboard(g) / _scale(g)), axes=axes)
    return Field(g, Domain.PHYSICAL, sp_fft.ifftn(raw, axes=axes, workers=transform_workers()))


def _pairwise_total(terms: np.ndarray) -> float:
    # sorted first so the reduction does not depend on element order
    return float(np.sum(np.sort(np.ravel(terms))))


def lp_norm(u: Field, p: float) -> float:
    """h^(n/p) * (sum |u_k|^p)^(1/p) for 1 < p < inf."""
    if not math.isfinite(p) or p <= 1:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    g = u.grid
    total = _pairwise_total(np.abs(u.values) ** p)
    return g.h ** (g.n / p) * total ** (1.0 / p)


def spectral_l2_norm(v: Field) -> float:
    """((pi/L)^n sum |v_j|^2)^(1/2); equals lp_norm(idft(v), 2)."""
    _require(v, Domain.SPECTRAL)
    g = v.grid
    return math.sqrt(g.dxi**g.n * _pairwise_total(np.abs(v.values) ** 2))


def cyclic_translate(u: Field, shift: Sequence[int]) -> Field:
    g = u.grid
    if len(shift) != g.n:
        raise ValueError(f"shift must have {g.n} components, got {len(shift)}")
    steps = tuple(int(s) % g.N for s in shift)
    return u.with_values(np.roll(u.values, steps, axis=tuple(range(g.n))))


def fit_loglog_slope(points: Sequence[Tuple[float, float]]) -> SlopeFit:
    """
    Least-squares line through (ln m, ln value).

    Rules:
      - at least 3 points, every m and value positive and finite;
      - r2 is computed from the same points (1.0 when the values are constant).

    Examples:
      [(2, 4), (4, 16), (8, 64)] -> slope 2.0, r2 1.0
    """
    pts = [(float(m), float(v)) for m, v in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a slope fit, got {len(pts)}")
    for m, v in pts:
        if not (m > 0 and v > 0 and math.isfinite(m) and math.isfinite(v)):
            raise ValueError(f"slope fit needs positive finite points, got ({m}, {v})")
    lx = np.log([m for m, _ in pts])
    ly = np.log([v for _, v in pts])
    res = stats.linregress(lx, ly)
    resid = ly - (res.intercept + res.slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return SlopeFit(
        slope=float(res.slope),
        intercept=float(res.intercept),
        r2=min(1.0, max(0.0, r2)),
        points=tuple(zip(lx.tolist(), ly.tolist())),
    )


def outer_shell(grid: GridSpec) -> np.ndarray:
    """Boolean mask of lattice entries with index 0 or N-1 on some axis."""
    mask = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.n):
        idx: List[object] = [slice(None)] * grid.n
        idx[ax] = 0
        mask[tuple(idx)] = True
        idx[ax] = grid.N - 1
        mask[tuple(idx)] = True
    return mask
