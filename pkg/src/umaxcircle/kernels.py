"""Points on the circle, central angles and rotation-invariant kernels.

A kernel of degree ``m`` is evaluated through the central angles
``beta_i = theta_{i+1} - theta_1 (mod 2*pi)`` of its ``m`` arguments.  Two
structured families are built from a one-dimensional generator ``g``:

* gap-sum:       ``h(beta) = sum_i g(beta_(i) - beta_(i-1))`` over the sorted
  angles with ``beta_(0) = 0`` and ``beta_(m) = 2*pi``;
* pairwise-sum:  ``h(beta) = sum_{i<j} g(|beta_j - beta_i|)`` with
  ``beta_0 = 0`` and an even generator ``g(x) = g(2*pi - x)``.

Arbitrary kernels can be supplied as ``custom`` evaluators acting on the raw
point angles; they must pass rotation and permutation invariance probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegreeError, DomainError, FamilyError, ValidationError

TWO_PI = 2.0 * math.pi

GAP_SUM = "gap-sum"
PAIRWISE_SUM = "pairwise-sum"
CUSTOM = "custom"
KERNEL_FAMILIES = (GAP_SUM, PAIRWISE_SUM, CUSTOM)

# generator family -> names of its parameters
GENERATOR_PARAMS = {
    "sin-half": (),
    "half-sin": (),
    "sec-half": (),
    "pow-sin": ("y",),
    "csc-half": (),
    "alexander-stolarsky": ("a", "b", "c"),
    "tabulated": None,  # variable length: values on a uniform grid over [0, 2*pi]
}

FD_STEP_TABULATED = 1e-5
EVEN_PROBE_POINTS = 1024
EVEN_PROBE_TOL = 1e-12
INVARIANCE_PROBES = 100
INVARIANCE_TOL = 1e-10


def reduce_angle(x):
    """Reduce an angle (or array of angles) into ``[0, 2*pi)``."""
    r = np.mod(x, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    r = np.where(r >= TWO_PI, 0.0, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


@dataclass(frozen=True)
class CirclePoint:
    """A point on the unit circle given by its polar angle."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", reduce_angle(float(self.theta)))

    def rotated(self, angle: float) -> "CirclePoint":
        return CirclePoint(self.theta + angle)


@dataclass(frozen=True)
class AngleTuple:
    """Central angles ``(beta_1, ..., beta_{m-1})`` of an ``m``-point configuration."""

    beta: tuple

    def __post_init__(self):
        values = tuple(reduce_angle(float(b)) for b in self.beta)
        if len(values) < 1:
            raise DegreeError("an angle tuple needs at least one component (m >= 2)")
        object.__setattr__(self, "beta", values)

    @property
    def m(self) -> int:
        return len(self.beta) + 1

    def __len__(self):
        return len(self.beta)

    def __iter__(self):
        return iter(self.beta)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)

    def sorted(self) -> "AngleTuple":
        return AngleTuple(tuple(sorted(self.beta)))


def _point_angles(points) -> np.ndarray:
    return np.asarray(
        [p.theta if isinstance(p, CirclePoint) else float(p) for p in points], dtype=float
    )


def central_angles(points: Sequence) -> AngleTuple:
    """Central angles of ``points`` measured counterclockwise from the first one.

    Parameters
    ----------
    points : sequence of CirclePoint or float
        The ``m >= 2`` points (floats are read as polar angles in radians).
    """
    theta = _point_angles(points)
    if theta.size < 2:
        raise DegreeError(f"need at least 2 points, got {theta.size}")
    return AngleTuple(tuple(reduce_angle(theta[1:] - theta[0])))


def central_angles_batch(theta: np.ndarray) -> np.ndarray:
    """Row-wise central angles of an ``(N, m)`` array of point angles."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[1] < 2:
        raise DegreeError("expected an (N, m) array with m >= 2")
    return reduce_angle(theta[:, 1:] - theta[:, :1])


@dataclass(frozen=True)
class GFunction:
    """One-dimensional generator ``g`` on ``[0, 2*pi]``.

    Families
    --------
    ``sin-half``             ``2 sin(x/2)`` (chord length)
    ``half-sin``             ``sin(x)/2`` (triangle area with the centre)
    ``sec-half``             ``1/cos(x/2)`` for ``x < pi``, ``+inf`` otherwise
    ``pow-sin(y)``           ``(2 sin(x/2))**y``
    ``csc-half``             ``1/(2 sin(x/2))`` (inverse chord length)
    ``alexander-stolarsky``  ``r(2 sin(x/2))`` with ``r(s) = exp(-a s) s**b ln(s/2)**c``
    ``tabulated``            cubic spline through values on a uniform grid of ``[0, 2*pi]``
    """

    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in GENERATOR_PARAMS:
            raise ValidationError(f"unknown generator family {self.family!r}")
        params = tuple(float(p) for p in self.params)
        names = GENERATOR_PARAMS[self.family]
        if names is None:
            if len(params) < 4:
                raise ValidationError("tabulated generator needs at least 4 grid values")
            if not all(math.isfinite(v) for v in params):
                raise ValidationError("tabulated generator values must be finite")
        elif len(params) != len(names):
            raise ValidationError(
                f"{self.family} expects parameters {names}, got {len(params)} values"
            )
        if self.family == "alexander-stolarsky":
            c = params[2]
            if c < 0 or c != int(c):
                raise ValidationError("alexander-stolarsky exponent c must be a non-negative integer")
        object.__setattr__(self, "params", params)

    # -- constructors -------------------------------------------------------
    @classmethod
    def sin_half(cls):
        return cls("sin-half")

    @classmethod
    def half_sin(cls):
        return cls("half-sin")

    @classmethod
    def sec_half(cls):
        return cls("sec-half")

    @classmethod
    def pow_sin(cls, y: float):
        return cls("pow-sin", (y,))

    @classmethod
    def csc_half(cls):
        return cls("csc-half")

    @classmethod
    def alexander_stolarsky(cls, a: float, b: float, c: int):
        return cls("alexander-stolarsky", (a, b, c))

    @classmethod
    def tabulated(cls, values: Sequence[float]):
        return cls("tabulated", tuple(values))

    def to_dict(self) -> dict:
        names = GENERATOR_PARAMS[self.family]
        if names is None:
            return {"generator": self.family, "values": list(self.params)}
        return {"generator": self.family, "params": dict(zip(names, self.params))}

    # -- evaluation ---------------------------------------------------------
    @cached_property
    def _spline(self):
        values = np.asarray(self.params)
        grid = np.linspace(0.0, TWO_PI, values.size)
        return CubicSpline(grid, values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam == "sin-half":
                out = 2.0 * np.sin(x / 2.0)
            elif fam == "half-sin":
                out = 0.5 * np.sin(x)
            elif fam == "sec-half":
                out = np.where(x < math.pi, 1.0 / np.cos(np.minimum(x, math.pi) / 2.0), np.inf)
            elif fam == "pow-sin":
                out = np.power(np.abs(2.0 * np.sin(x / 2.0)), self.params[0])
            elif fam == "csc-half":
                s = np.abs(np.sin(x / 2.0))
                out = np.where(s > 0.0, 1.0 / (2.0 * s), np.inf)
            elif fam == "alexander-stolarsky":
                out = self._as_r(np.abs(2.0 * np.sin(x / 2.0)), 0)
            else:
                out = self._spline(x)
        if out.ndim == 0:
            return float(out)
        return out

    def _as_r(self, s, order):
        """``r`` of the Alexander-Stolarsky family and its first two derivatives."""
        a, b, c = self.params
        c = int(c)
        e = np.exp(-a * s)
        p = np.power(s, b)
        lg = np.log(s / 2.0)
        lc = np.power(lg, c) if c else np.ones_like(s)
        if order == 0:
            return e * p * lc
        dp = b * np.power(s, b - 1.0)
        ddp = b * (b - 1.0) * np.power(s, b - 2.0)
        if c == 0:
            dl = np.zeros_like(s)
            ddl = np.zeros_like(s)
        else:
            lc1 = np.power(lg, c - 1)
            lc2 = np.power(lg, c - 2) if c >= 2 else np.zeros_like(s)
            dl = c * lc1 / s
            ddl = (c * (c - 1) * lc2 - c * lc1) / s**2
        de, dde = -a * e, a * a * e
        if order == 1:
            return de * p * lc + e * dp * lc + e * p * dl
        return (
            dde * p * lc + e * ddp * lc + e * p * ddl
            + 2.0 * (de * dp * lc + de * p * dl + e * dp * dl)
        )

    def second_derivative(self, x):
        """Analytic ``g''`` (finite differences for tabulated generators)."""
        x = np.asarray(x, dtype=float)
        fam = self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if fam == "sin-half":
                out = -0.5 * np.sin(x / 2.0)
            elif fam == "half-sin":
                out = -0.5 * np.sin(x)
            elif fam == "sec-half":
                c = np.cos(x / 2.0)
                out = np.where(x < math.pi, (1.0 + np.sin(x / 2.0) ** 2) / (4.0 * c**3), np.nan)
            elif fam == "pow-sin":
                y = self.params[0]
                s = 2.0 * np.sin(x / 2.0)
                out = y * (y - 1.0) * s ** (y - 2.0) * np.cos(x / 2.0) ** 2 - y * s**y / 4.0
            elif fam == "csc-half":
                s = np.sin(x / 2.0)
                out = (2.0 - s**2) / (8.0 * s**3)
            elif fam == "alexander-stolarsky":
                s = 2.0 * np.sin(x / 2.0)
                ds, dds = np.cos(x / 2.0), -0.5 * np.sin(x / 2.0)
                out = self._as_r(s, 2) * ds**2 + self._as_r(s, 1) * dds
            else:
                h = FD_STEP_TABULATED
                out = (self(x + h) - 2.0 * self(x) + self(x - h)) / (h * h)
        if np.ndim(out) == 0:
            return float(out)
        return out

    def is_even(self, tol: float = EVEN_PROBE_TOL) -> bool:
        """Probe ``g(x) = g(2*pi - x)`` on interior grid points."""
        x = (np.arange(EVEN_PROBE_POINTS) + 0.5) * (TWO_PI / EVEN_PROBE_POINTS)
        a, b = self(x), self(TWO_PI - x)
        both_inf = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
        with np.errstate(invalid="ignore"):
            close = np.abs(a - b) <= tol * (1.0 + np.abs(a))
        return bool(np.all(both_inf | close))


def g_second_derivative(g: GFunction, x: float) -> float:
    """``g''(x)`` for ``x`` strictly inside ``(0, 2*pi)``.

    Raises
    ------
    DomainError
        If ``x`` is outside the open interval or ``g`` is not twice
        differentiable (or infinite) there.
    """
    x = float(x)
    if not 0.0 < x < TWO_PI:
        raise DomainError(f"x={x} is not interior to (0, 2*pi)")
    if not math.isfinite(g(x)):
        raise DomainError(f"{g.family} is infinite at x={x}")
    value = g.second_derivative(x)
    if not math.isfinite(value):
        raise DomainError(f"{g.family} has no finite second derivative at x={x}")
    return value


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A rotation-invariant kernel of degree ``m``.

    ``scale`` multiplies the kernel value; ``-1`` turns a minimisation problem
    into a maximisation one (see :meth:`negated`).  Custom kernels take an
    ``evaluator`` mapping an ``(N, m)`` array of point angles to ``N`` values.
    """

    family: str
    m: int
    g: GFunction | None = None
    evaluator: Callable | None = field(default=None, repr=False)
    scale: float = 1.0
    name: str | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise FamilyError(f"unknown kernel family {self.family!r}")
        if int(self.m) != self.m or self.m < 2:
            raise DegreeError(f"kernel degree must be an integer >= 2, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if self.scale not in (1.0, -1.0):
            raise ValidationError("scale must be +1 or -1")
        if self.family == CUSTOM:
            if self.evaluator is None:
                raise ValidationError("custom kernels need an evaluator")
            _probe_invariance(self)
        else:
            if self.g is None:
                raise ValidationError(f"{self.family} kernels need a generator g")
            if self.family == PAIRWISE_SUM and not self.g.is_even():
                raise ValidationError(
                    f"pairwise-sum generator {self.g.family} is not symmetric about pi"
                )

    @classmethod
    def gap_sum(cls, g: GFunction, m: int, **kw):
        return cls(GAP_SUM, m, g=g, **kw)

    @classmethod
    def pairwise_sum(cls, g: GFunction, m: int, **kw):
        return cls(PAIRWISE_SUM, m, g=g, **kw)

    @classmethod
    def custom(cls, evaluator: Callable, m: int, **kw):
        return cls(CUSTOM, m, evaluator=evaluator, **kw)

    def negated(self) -> "KernelSpec":
        """The kernel ``-f``; its maxima are the minima of ``f``."""
        return replace(self, scale=-self.scale)


def _custom_values(spec: KernelSpec, theta: np.ndarray) -> np.ndarray:
    out = np.asarray(spec.evaluator(theta), dtype=float).reshape(theta.shape[0])
    return out


def _probe_invariance(spec: KernelSpec) -> None:
    rng = np.random.default_rng(20240611)
    n, m = INVARIANCE_PROBES, spec.m
    theta = rng.uniform(0.0, TWO_PI, size=(n, m))
    base = _custom_values(spec, theta)
    rotated = reduce_angle(theta + rng.uniform(0.0, TWO_PI, size=(n, 1)))
    perm = np.argsort(rng.random((n, m)), axis=1)
    permuted = np.take_along_axis(theta, perm, axis=1)
    for label, other in (("rotation", rotated), ("permutation", permuted)):
        vals = _custom_values(spec, other)
        same_inf = np.isinf(base) & (base == vals)
        with np.errstate(invalid="ignore"):
            ok = same_inf | (np.abs(vals - base) <= INVARIANCE_TOL * (1.0 + np.abs(base)))
        if not np.all(ok):
            raise ValidationError(f"custom kernel fails the {label} invariance probe")


def eval_kernel_batch(spec: KernelSpec, betas) -> np.ndarray:
    """Evaluate ``h`` on an ``(N, m-1)`` array of central angles."""
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    if betas.shape[1] != spec.m - 1:
        raise DegreeError(f"expected {spec.m - 1} central angles, got {betas.shape[1]}")
    b = reduce_angle(betas)
    zeros = np.zeros((b.shape[0], 1))
    if spec.family == GAP_SUM:
        edges = np.concatenate([zeros, np.sort(b, axis=1), np.full_like(zeros, TWO_PI)], axis=1)
        vals = np.sum(spec.g(np.diff(edges, axis=1)), axis=1)
    elif spec.family == PAIRWISE_SUM:
        full = np.concatenate([zeros, b], axis=1)
        i, j = np.triu_indices(spec.m, 1)
        vals = np.sum(spec.g(np.abs(full[:, j] - full[:, i])), axis=1)
    else:
        vals = _custom_values(spec, np.concatenate([zeros, b], axis=1))
    return spec.scale * vals


def eval_kernel(spec: KernelSpec, beta) -> float:
    """Kernel value at one central-angle tuple; may be ``+inf`` (or ``-inf`` if negated)."""
    arr = beta.as_array() if isinstance(beta, AngleTuple) else np.asarray(beta, dtype=float)
    return float(eval_kernel_batch(spec, arr.reshape(1, -1))[0])


def eval_on_points(spec: KernelSpec, points: Sequence) -> float:
    """``f(U_1, ..., U_m)`` computed through the central angles of the points."""
    theta = _point_angles(points)
    if theta.size != spec.m:
        raise DegreeError(f"kernel of degree {spec.m} got {theta.size} points")
    return eval_kernel(spec, central_angles(theta))


def eval_on_points_batch(spec: KernelSpec, theta: np.ndarray) -> np.ndarray:
    """Kernel values for each row of an ``(N, m)`` array of point angles."""
    return eval_kernel_batch(spec, central_angles_batch(theta))
