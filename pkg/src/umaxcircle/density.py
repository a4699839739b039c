"""Probability densities on the circle: evaluation, sampling and overlap integrals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .kernels import TWO_PI, AngleTuple, reduce_angle

NORMALIZATION_TOL = 1e-8
QUADRATURE_NODES = 8192
SAMPLING_TABLE_SIZE = 4096
B3_THRESHOLD = 1e-12
MAX_KAPPA = 20.0


def bessel_i0(x: float) -> float:
    """Modified Bessel function ``I_0`` by its power series (``|x| <= 40``).

    Terms ``(x^2/4)^k / (k!)^2`` are summed until they drop below ``1e-17``
    of the running total.
    """
    q = 0.25 * x * x
    total, term, k = 1.0, 1.0, 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < 1e-17 * total:
            return total


@dataclass(frozen=True)
class DensityTable:
    """Tabulated density on the uniform grid ``x_k = 2*pi*k/N``, k = 0..N.

    The density is linearly interpolated between nodes, so the cumulative
    distribution is piecewise quadratic and is inverted exactly.
    """

    values: np.ndarray
    cumulative: np.ndarray
    sup_bound: float

    @property
    def size(self) -> int:
        return self.values.size - 1

    @classmethod
    def build(cls, density: "DensitySpec", size: int = SAMPLING_TABLE_SIZE) -> "DensityTable":
        x = np.linspace(0.0, TWO_PI, size + 1)
        v = density.pdf(x)
        v[-1] = v[0]
        dx = TWO_PI / size
        cells = 0.5 * dx * (v[:-1] + v[1:])
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        cum /= cum[-1]
        v = v / (cells.sum())
        return cls(values=v, cumulative=cum, sup_bound=float(v.max()))

    def invert(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on [0, 1) to angles by exact inversion of the table CDF."""
        u = np.asarray(u, dtype=float)
        n = self.size
        dx = TWO_PI / n
        k = np.searchsorted(self.cumulative, u, side="right") - 1
        k = np.clip(k, 0, n - 1)
        # skip zero-mass cells so the draw lands where the density is positive
        k = _next_positive_cell(self.cumulative, k)
        a = self.values[k]
        b = self.values[k + 1]
        rem = u - self.cumulative[k]
        slope = (b - a) / dx
        # solve a*s + slope*s^2/2 = rem for s in [0, dx]
        with np.errstate(invalid="ignore", divide="ignore"):
            disc = np.sqrt(np.maximum(a * a + 2.0 * slope * rem, 0.0))
            s_quad = 2.0 * rem / (a + disc)
        s = np.where(a + disc > 0.0, s_quad, 0.0)
        s = np.clip(s, 0.0, dx)
        return reduce_angle(k * dx + s)


def _next_positive_cell(cum, k):
    mass = np.diff(cum)
    if np.all(mass[k] > 0.0):
        return k
    positive = np.flatnonzero(mass > 0.0)
    pos = np.searchsorted(positive, k)
    pos = np.clip(pos, 0, positive.size - 1)
    return np.where(mass[k] > 0.0, k, positive[pos])


class DensitySpec:
    """Base class of circle densities; subclasses implement :meth:`pdf`."""

    family = "abstract"

    def pdf(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def integral(self) -> float:
        x = np.arange(QUADRATURE_NODES) * (TWO_PI / QUADRATURE_NODES)
        return float(np.sum(self.pdf(x)) * (TWO_PI / QUADRATURE_NODES))

    def validate(self) -> None:
        """Check non-negativity and unit mass (B2-type requirements)."""
        x = np.arange(QUADRATURE_NODES) * (TWO_PI / QUADRATURE_NODES)
        v = self.pdf(x)
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"{self.family} density is not finite everywhere")
        if np.any(v < 0.0):
            raise ValidationError(f"{self.family} density takes negative values")
        total = self.integral()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"{self.family} density integrates to {total!r}, not 1")

    @cached_property
    def table(self) -> DensityTable:
        return DensityTable.build(self)


@dataclass(frozen=True)
class Uniform(DensitySpec):
    family = "uniform"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, 1.0 / TWO_PI)
        return float(out) if out.ndim == 0 else out

    def integral(self) -> float:
        return 1.0

    def to_dict(self):
        return {"family": "uniform"}


@dataclass(frozen=True)
class VonMises(DensitySpec):
    """Von Mises density ``exp(kappa cos(x - mu)) / (2 pi I_0(kappa))``."""

    mu: float = 0.0
    kappa: float = 1.0
    family = "von-mises"

    def __post_init__(self):
        if not 0.0 <= self.kappa <= MAX_KAPPA:
            raise ValidationError(f"kappa must lie in [0, {MAX_KAPPA}], got {self.kappa}")

    @cached_property
    def _norm(self) -> float:
        return TWO_PI * bessel_i0(self.kappa)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(self.kappa * np.cos(x - self.mu)) / self._norm
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"family": "von-mises", "mu": self.mu, "kappa": self.kappa}


@dataclass(frozen=True, eq=False)
class Tabulated(DensitySpec):
    """Piecewise-linear periodic density through values at ``2*pi*k/N``, k = 0..N-1."""

    values: tuple
    source: str | None = field(default=None, compare=False)
    family = "tabulated"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 3:
            raise ValidationError("tabulated density needs at least 3 values")
        object.__setattr__(self, "values", vals)
        if min(vals) < 0.0:
            raise ValidationError("tabulated density takes negative values")
        total = self.integral()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"tabulated density integrates to {total!r}, not 1")

    @classmethod
    def from_function(cls, fn, size: int, normalize: bool = True) -> "Tabulated":
        x = np.arange(size) * (TWO_PI / size)
        v = np.asarray(fn(x), dtype=float)
        if normalize:
            v = v / (v.sum() * TWO_PI / size)
        return cls(tuple(v))

    @classmethod
    def from_csv(cls, path, normalize: bool = False) -> "Tabulated":
        """Load a two-column CSV ``angle,value`` (optional header row).

        Angles must form the uniform grid ``2*pi*k/N`` for ``k = 0..N-1``.
        """
        angles, values = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    a, v = float(row[0]), float(row[1])
                except ValueError:
                    if not angles:  # header
                        continue
                    raise ValidationError(f"malformed row in {path}: {row}") from None
                angles.append(a)
                values.append(v)
        n = len(values)
        if n < 3:
            raise ValidationError(f"{path}: need at least 3 rows")
        grid = np.arange(n) * (TWO_PI / n)
        if not np.allclose(angles, grid, atol=1e-9):
            raise ValidationError(f"{path}: angles must be the uniform grid 2*pi*k/{n}")
        v = np.asarray(values)
        if normalize:
            v = v / (v.sum() * TWO_PI / n)
        return cls(tuple(v), source=str(path))

    @cached_property
    def _array(self):
        v = np.asarray(self.values)
        return np.append(v, v[0])

    def pdf(self, x):
        x = reduce_angle(np.asarray(x, dtype=float))
        n = len(self.values)
        grid = np.arange(n + 1) * (TWO_PI / n)
        out = np.interp(x, grid, self._array)
        return float(out) if np.ndim(out) == 0 else out

    def integral(self) -> float:
        # exact for the piecewise-linear periodic interpolant
        return math.fsum(self.values) * TWO_PI / len(self.values)

    def to_dict(self):
        if self.source is not None:
            return {"family": "tabulated", "path": self.source}
        return {"family": "tabulated", "values": list(self.values)}


@dataclass(frozen=True, eq=False)
class Mixture(DensitySpec):
    weights: tuple
    components: tuple
    family = "mixture"

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != len(self.components) or not w:
            raise ValidationError("mixture needs one weight per component")
        if min(w) < 0.0 or abs(math.fsum(w) - 1.0) > NORMALIZATION_TOL:
            raise ValidationError("mixture weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = sum(w * np.asarray(c.pdf(x)) for w, c in zip(self.weights, self.components))
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self):
        return {
            "family": "mixture",
            "weights": list(self.weights),
            "components": [c.to_dict() for c in self.components],
        }


def density_eval(p: DensitySpec, x: float) -> float:
    return float(p.pdf(reduce_angle(float(x))))


def sample_angles(p: DensitySpec, rng: np.random.Generator, size) -> np.ndarray:
    """Draw i.i.d. angles from ``p``: exact for uniform, table inversion otherwise."""
    u = rng.random(size)
    if isinstance(p, Uniform):
        return reduce_angle(TWO_PI * u)
    return p.table.invert(u)


def sample_angle(p: DensitySpec, rng: np.random.Generator) -> float:
    return float(sample_angles(p, rng, 1)[0])


def product_integral(p: DensitySpec, W, nodes: int = QUADRATURE_NODES) -> float:
    """``int_0^{2pi} p(x) prod_l p(x + W_l) dx`` by the periodic trapezoid rule."""
    offsets = W.as_array() if isinstance(W, AngleTuple) else np.asarray(W, dtype=float)
    if isinstance(p, Uniform):
        return float(TWO_PI ** (-offsets.size))
    x = np.arange(nodes) * (TWO_PI / nodes)
    prod = np.asarray(p.pdf(x), dtype=float).copy()
    for w in offsets:
        prod *= p.pdf(reduce_angle(x + w))
    return float(np.sum(prod) * (TWO_PI / nodes))


def regular_offsets(m: int) -> AngleTuple:
    return AngleTuple(tuple(TWO_PI * k / m for k in range(1, m)))


def density_from_dict(cfg: dict, base_dir: Path | None = None) -> DensitySpec:
    fam = cfg.get("family")
    if fam == "uniform":
        return Uniform()
    if fam == "von-mises":
        return VonMises(mu=float(cfg.get("mu", 0.0)), kappa=float(cfg.get("kappa", 1.0)))
    if fam == "tabulated":
        if "path" in cfg:
            path = Path(cfg["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return Tabulated.from_csv(path, normalize=bool(cfg.get("normalize", False)))
        return Tabulated(tuple(cfg["values"]))
    if fam == "mixture":
        comps = tuple(density_from_dict(c, base_dir) for c in cfg["components"])
        return Mixture(tuple(cfg["weights"]), comps)
    raise ValidationError(f"unknown density family {fam!r}")


def orbit_integrals(p: DensitySpec, W: Sequence[float]) -> list[float]:
    """Product integrals for every cyclic relabelling of the configuration ``(0, W)``.

    Choosing a different point of the same configuration as the reference
    rotates the offsets; the integral must not change.
    """
    pts = np.concatenate([[0.0], np.asarray(W, dtype=float)])
    out = []
    for k in range(pts.size):
        rel = reduce_angle(np.delete(pts, k) - pts[k])
        out.append(product_integral(p, rel))
    return out
