"""Weibull-type limit law of the rescaled U-max / U-min statistic.

The law is ``F(t) = 1 - exp(-c t**((m-1)/2))`` for
``T_n = n**(2m/(m-1)) (M - H_n)`` (u-max) or ``n**(2m/(m-1)) (H_n - mu)``
(u-min).  Internally the coefficient is kept in the ordered-maximizer form
``c = K_ordered / m``; the form summing over all ``k = r (m-1)!`` maximizers
uses ``K_total = (m-1)! K_ordered`` and ``c = K_total / m!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import B3_THRESHOLD, DensitySpec, product_integral, regular_offsets
from .errors import B3Violation, ConditionError, ConsistencyError, DegreeError, DomainError, ModeMismatch
from .extremum import MaxAnalysis
from .kernels import TWO_PI, GFunction, g_second_derivative

U_MAX = "u-max"
U_MIN = "u-min"
MODES = (U_MAX, U_MIN)
RESCALE_SLACK = 1e-9


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def scaling_exponent(m: int) -> float:
    if m < 2:
        raise DegreeError("the scaling exponent 2m/(m-1) needs m >= 2")
    return 2.0 * m / (m - 1)


def volume_factor(m: int) -> float:
    """``(2 pi)^((m-1)/2) / Gamma((m+1)/2)``."""
    return TWO_PI ** ((m - 1) / 2.0) / math.gamma((m + 1) / 2.0)


@dataclass(frozen=True)
class LimitLaw:
    m: int
    coefficient: float
    mode: str = U_MAX

    def __post_init__(self):
        if self.m < 2:
            raise DegreeError("limit law needs m >= 2")
        if not (self.coefficient > 0.0 and math.isfinite(self.coefficient)):
            raise ConditionError(f"limit coefficient must be positive, got {self.coefficient}")
        _check_mode(self.mode)

    @classmethod
    def from_k_ordered(cls, m: int, k_ordered: float, mode: str = U_MAX) -> "LimitLaw":
        return cls(m=m, coefficient=k_ordered / m, mode=mode)

    @property
    def scaling_exponent(self) -> float:
        return scaling_exponent(self.m)

    @property
    def shape_exponent(self) -> float:
        return (self.m - 1) / 2.0

    @property
    def k_ordered(self) -> float:
        return self.coefficient * self.m

    @property
    def k_total(self) -> float:
        """Constant of the all-maximizer form, ``c = K_total / m!``."""
        return self.coefficient * math.factorial(self.m)

    def cdf(self, t):
        return limit_cdf(self, t)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "mode": self.mode,
            "c": self.coefficient,
            "K_ordered": self.k_ordered,
            "K_total": self.k_total,
            "scaling_exponent": self.scaling_exponent,
            "shape_exponent": self.shape_exponent,
            "conventions": {
                "K_ordered": "sum over ordered maximizers W_1..W_r; c = K_ordered / m",
                "K_total": "sum over all r*(m-1)! maximizers; c = K_total / m!",
            },
        }


def limit_cdf(law: LimitLaw, t):
    """``1 - exp(-c t^((m-1)/2))`` for ``t >= 0``."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise DomainError("limit law is defined for t >= 0")
    out = -np.expm1(-law.coefficient * arr ** law.shape_exponent)
    return float(out) if out.ndim == 0 else out


def limit_constant_general(analysis: MaxAnalysis, p: DensitySpec) -> float:
    """``K_ordered = V * sum_i int p(x) prod_l p(x + W_i^l) dx / sqrt(det(-G_i))``.

    ``V = (2 pi)^((m-1)/2) / Gamma((m+1)/2)``; the sum runs over the ordered
    maximizers of ``analysis``.
    """
    m = analysis.m
    total, any_mass = 0.0, False
    for W, det in zip(analysis.ordered_maximizers, analysis.det_neg_hessian):
        if not (det > 0.0 and math.isfinite(det)):
            raise ConditionError(f"det(-G) = {det} at {list(W.beta)} is not positive")
        integral = product_integral(p, W)
        if integral >= B3_THRESHOLD:
            any_mass = True
        total += integral / math.sqrt(det)
    if not any_mass:
        raise B3Violation("density product integral vanishes at every maximizer")
    return volume_factor(m) * total


def limit_constant_gapsum(g: GFunction, m: int, p: DensitySpec, mode: str = U_MAX) -> float:
    """Closed-form ``K`` for a gap-sum kernel whose extremum is the regular ``m``-gon.

    ``K = (2 pi)^((m-1)/2) I / ((s g''(2 pi/m))^((m-1)/2) Gamma((m+1)/2) sqrt(m))``
    with ``s = -1`` for u-max, ``+1`` for u-min and ``I`` the density product
    integral at the regular polygon offsets.
    """
    _check_mode(mode)
    g2 = g_second_derivative(g, TWO_PI / m)
    curvature = -g2 if mode == U_MAX else g2
    if curvature <= 0.0:
        raise ModeMismatch(
            f"g''(2*pi/{m}) = {g2:.6g} has the wrong sign for {mode} (regular polygon is not an extremum of that kind)"
        )
    integral = product_integral(p, regular_offsets(m))
    if integral < B3_THRESHOLD:
        raise B3Violation("density product integral vanishes at the regular polygon")
    return volume_factor(m) * integral / (curvature ** ((m - 1) / 2.0) * math.sqrt(m))


def rescale(H_n: float, M: float, n: int, law: LimitLaw) -> float:
    """``T_n = n^(2m/(m-1)) (M - H_n)``, or ``(H_n - mu)`` in u-min mode.

    Raises
    ------
    ConsistencyError
        If ``T_n`` is negative beyond ``1e-9 |M|`` floating slack, i.e. the
        sample beats the supposed extremum.
    """
    if n < law.m:
        raise DegreeError(f"need n >= m = {law.m}")
    diff = (M - H_n) if law.mode == U_MAX else (H_n - M)
    if diff < -RESCALE_SLACK * max(abs(M), 1.0):
        raise ConsistencyError(
            f"sample statistic {H_n!r} is beyond the extremum {M!r}; wrong extremum value?"
        )
    return float(n) ** law.scaling_exponent * diff
