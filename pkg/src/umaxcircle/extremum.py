"""Maximizers of rotation-invariant kernels and Hessians at those maximizers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryMaximum, DegenerateHessian, DegreeError, DomainError, FamilyError
from .kernels import (
    GAP_SUM,
    PAIRWISE_SUM,
    TWO_PI,
    AngleTuple,
    GFunction,
    KernelSpec,
    eval_kernel_batch,
    g_second_derivative,
)

VALUE_CLUSTER_TOL = 1e-6
POSITION_CLUSTER_TOL = 1e-3
BOUNDARY_GAP_TOL = 1e-6
MIN_STEP = 1e-9
FD_STEP = 1e-4
SYMMETRY_TOL = 1e-9
MAX_CANDIDATES = 24
GRID_CHUNK = 200_000


@dataclass(frozen=True)
class HessianReport:
    matrix: np.ndarray
    det_G: float
    det_neg_G: float
    method: str

    @classmethod
    def from_matrix(cls, G, method: str) -> "HessianReport":
        G = np.asarray(G, dtype=float)
        return cls(
            matrix=G,
            det_G=float(np.linalg.det(G)),
            det_neg_G=float(np.linalg.det(-G)),
            method=method,
        )

    @property
    def is_symmetric(self) -> bool:
        scale = 1.0 + np.max(np.abs(self.matrix))
        return bool(np.max(np.abs(self.matrix - self.matrix.T)) <= SYMMETRY_TOL * scale)

    def leading_minors(self, negate: bool = False) -> list[float]:
        G = -self.matrix if negate else self.matrix
        return [float(np.linalg.det(G[:k, :k])) for k in range(1, G.shape[0] + 1)]

    @property
    def is_negative_definite(self) -> bool:
        # -G positive definite <=> every leading minor of -G is positive
        return all(d > 0.0 for d in self.leading_minors(negate=True))

    def is_diagonally_dominant(self) -> bool:
        A = np.abs(self.matrix)
        off = A.sum(axis=1) - np.diag(A)
        return bool(np.all(np.diag(A) > off))


@dataclass(frozen=True)
class MaxAnalysis:
    """Maximum value, its ordered maximizers and curvature data.

    ``M`` refers to the analysed (possibly negated) kernel, so a u-min
    analysis of ``f`` stores ``-mu`` here.
    """

    M: float
    ordered_maximizers: tuple
    m: int
    det_neg_hessian: tuple
    method: str
    hessians: tuple = field(default=(), repr=False)

    @property
    def r(self) -> int:
        return len(self.ordered_maximizers)

    @property
    def orbit_length(self) -> int:
        return math.factorial(self.m - 1)

    @property
    def k(self) -> int:
        """Number of maximizers in the unordered domain ``[0, 2*pi)^{m-1}``."""
        return self.r * self.orbit_length


def tridiagonal_det(n: int) -> int:
    """Determinant of the ``n x n`` matrix with 2 on the diagonal and -1 beside it.

    Uses the three-term continuant recurrence on exact integers.
    """
    if n < 1:
        raise DegreeError("matrix size must be >= 1")
    diag, off = 2, -1
    prev, cur = 1, diag
    for _ in range(n - 1):
        prev, cur = cur, diag * cur - off * off * prev
    return cur


def _gaps(beta: np.ndarray) -> np.ndarray:
    return np.diff(np.concatenate([[0.0], np.sort(beta), [TWO_PI]]))


def min_gap(beta) -> float:
    """Smallest gap between consecutive points of ``(0, beta)`` around the circle."""
    return float(np.min(_gaps(np.asarray(beta, dtype=float))))


def _regular(m: int) -> np.ndarray:
    return TWO_PI * np.arange(1, m) / m


def analytic_hessian(spec: KernelSpec, point) -> HessianReport:
    """Closed-form Hessian of gap-sum and pairwise-sum kernels at ``point``.

    The point must have distinct, sorted components away from 0 and 2*pi.
    """
    beta = np.sort(point.as_array() if isinstance(point, AngleTuple) else np.asarray(point, float))
    d = beta.size
    g = spec.g
    if spec.family == GAP_SUM:
        gaps = _gaps(beta)
        g2 = np.array([g_second_derivative(g, x) for x in gaps])
        G = np.zeros((d, d))
        for i in range(d):
            G[i, i] = g2[i] + g2[i + 1]
            if i + 1 < d:
                G[i, i + 1] = G[i + 1, i] = -g2[i + 1]
        method = "analytic-gapsum"
    elif spec.family == PAIRWISE_SUM:
        full = np.concatenate([[0.0], beta])
        G = np.zeros((d, d))
        for i in range(1, d + 1):
            for j in range(d + 1):
                if i == j:
                    continue
                v = g_second_derivative(g, abs(full[j] - full[i]))
                G[i - 1, i - 1] += v
                if j >= 1:
                    G[i - 1, j - 1] = -v
        method = "analytic-pairwise"
    else:
        raise FamilyError("analytic Hessian needs a gap-sum or pairwise-sum kernel")
    return HessianReport.from_matrix(spec.scale * G, method)


def _fd_matrix(spec: KernelSpec, x0: np.ndarray, h: float) -> np.ndarray:
    d = x0.size
    E = np.eye(d) * h
    rows = [x0]
    for i in range(d):
        rows += [x0 + E[i], x0 - E[i]]
        for j in range(i + 1, d):
            rows += [x0 + E[i] + E[j], x0 + E[i] - E[j], x0 - E[i] + E[j], x0 - E[i] - E[j]]
    vals = eval_kernel_batch(spec, np.array(rows))
    if not np.all(np.isfinite(vals)):
        raise DomainError("finite-difference stencil hits an infinite kernel value")
    f0 = vals[0]
    G = np.empty((d, d))
    pos = 1
    for i in range(d):
        G[i, i] = (vals[pos] - 2.0 * f0 + vals[pos + 1]) / (h * h)
        pos += 2
        for j in range(i + 1, d):
            pp, pm, mp, mm = vals[pos:pos + 4]
            G[i, j] = G[j, i] = (pp - pm - mp + mm) / (4.0 * h * h)
            pos += 4
    return G


def hessian_fd(spec: KernelSpec, point, step: float = FD_STEP, richardson: bool = True) -> HessianReport:
    """Central-difference Hessian of ``h`` at ``point``.

    With ``richardson`` the estimates at ``step`` and ``step/2`` are combined
    as ``(4 H(h/2) - H(h)) / 3``, cancelling the ``O(h^2)`` error term.
    """
    x0 = point.as_array() if isinstance(point, AngleTuple) else np.asarray(point, dtype=float)
    G = _fd_matrix(spec, x0, step)
    if richardson:
        G = (4.0 * _fd_matrix(spec, x0, step / 2.0) - G) / 3.0
    G = 0.5 * (G + G.T)
    return HessianReport.from_matrix(G, "finite-difference")


def det_neg_hessian_gapsum(g: GFunction, m: int) -> float:
    """``det(-G) = m * (-g''(2 pi/m))**(m-1)`` at the regular ``m``-gon."""
    g2 = g_second_derivative(g, TWO_PI / m)
    if g2 == 0.0:
        raise DegenerateHessian(f"g''(2*pi/{m}) = 0: Hessian is singular")
    return m * (-g2) ** (m - 1)


def pairwise_hessian(g: GFunction, m: int) -> HessianReport:
    """Toeplitz Hessian of a pairwise-sum kernel at the regular ``m``-gon.

    Off-diagonal entries are ``-g''(2 pi |i-j| / m)``; each diagonal entry is
    ``sum_{s=1}^{m-1} g''(2 pi s / m)``.
    """
    g2 = [g_second_derivative(g, TWO_PI * s / m) for s in range(1, m)]
    d = m - 1
    G = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            G[i, j] = math.fsum(g2) if i == j else -g2[abs(i - j) - 1]
    rep = HessianReport.from_matrix(G, "analytic-pairwise")
    if rep.det_G == 0.0:
        raise DegenerateHessian(f"pairwise Hessian is singular for m={m}")
    return rep


def regular_polygon_value(spec: KernelSpec) -> float:
    m, g = spec.m, spec.g
    if spec.family == GAP_SUM:
        value = m * g(TWO_PI / m)
    elif spec.family == PAIRWISE_SUM:
        value = 0.5 * math.fsum(m * g(TWO_PI * s / m) for s in range(1, m))
    else:
        raise FamilyError("regular-polygon analysis needs a gap-sum or pairwise-sum kernel")
    return spec.scale * value


def regular_polygon_analysis(spec: KernelSpec) -> MaxAnalysis:
    """Analysis of the regular ``m``-gon candidate; does not certify optimality."""
    M = regular_polygon_value(spec)
    W = AngleTuple(tuple(_regular(spec.m)))
    if spec.family == GAP_SUM:
        det = (spec.scale ** (spec.m - 1)) * det_neg_hessian_gapsum(spec.g, spec.m)
        hess = analytic_hessian(spec, W)
    else:
        hess = pairwise_hessian(spec.g, spec.m)
        hess = HessianReport.from_matrix(spec.scale * hess.matrix, hess.method)
        det = hess.det_neg_G
    return MaxAnalysis(
        M=M, ordered_maximizers=(W,), m=spec.m, det_neg_hessian=(det,),
        method="regular-polygon", hessians=(hess,),
    )


def _ordered_grid(d: int, grid_n: int):
    """Yield chunks of nondecreasing integer tuples ``0 <= k_1 <= ... <= k_d <= grid_n``."""
    offsets = np.arange(d)
    it = itertools.combinations(range(grid_n + d), d)
    while True:
        chunk = np.array(list(itertools.islice(it, GRID_CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            return
        yield chunk.reshape(-1, d) - offsets


def default_grid(m: int) -> int:
    return 120 if m <= 4 else 40


def _pick_candidates(points: np.ndarray, values: np.ndarray, radius: float, limit: int):
    order = np.argsort(-values, kind="stable")
    chosen = []
    for idx in order:
        if not np.isfinite(values[idx]):
            break
        p = points[idx]
        if all(np.max(np.abs(p - points[c])) > radius for c in chosen):
            chosen.append(idx)
            if len(chosen) >= limit:
                break
    return points[chosen]


def _compass_refine(spec, X, step0, rounds):
    """Coordinate search inside the ordered simplex, run on all candidates at once."""
    X = X.copy()
    K, d = X.shape
    F = eval_kernel_batch(spec, X)
    step = step0
    while step >= MIN_STEP:
        for _ in range(rounds):
            improved = False
            for i in range(d):
                lo = X[:, i - 1] if i > 0 else np.zeros(K)
                hi = X[:, i + 1] if i + 1 < d else np.full(K, TWO_PI)
                for sgn in (1.0, -1.0):
                    trial = X.copy()
                    trial[:, i] = np.clip(X[:, i] + sgn * step, lo, hi)
                    ft = eval_kernel_batch(spec, trial)
                    better = ft > F
                    if np.any(better):
                        improved = True
                        X[better] = trial[better]
                        F[better] = ft[better]
            if not improved:
                break
        step *= 0.5
    return X, F


def find_max_oracle(
    spec: KernelSpec,
    grid_n: int | None = None,
    refine_iters: int = 200,
    raise_on_boundary: bool = True,
) -> MaxAnalysis:
    """Brute-force search for the maximizers of ``h`` over the ordered simplex.

    A full grid of resolution ``2*pi/grid_n`` is scanned, a diverse set of the
    best grid points is refined by coordinate search with step halving down to
    ``1e-9``, and refined points within ``1e-6`` of the best value are merged
    into distinct maximizers when more than ``1e-3`` apart (sup-norm).

    Raises
    ------
    BoundaryMaximum
        If a maximizer has two coinciding points (a gap below ``1e-6``) and
        ``raise_on_boundary`` is set.
    """
    m = spec.m
    d = m - 1
    if grid_n is None:
        grid_n = default_grid(m)
    if grid_n < 8 * d:
        raise DegreeError(f"grid_n must be >= {8 * d} for m={m}")
    h = TWO_PI / grid_n
    best_pts, best_vals = [], []
    for chunk in _ordered_grid(d, grid_n):
        X = chunk * h
        v = eval_kernel_batch(spec, X)
        keep = np.argsort(-np.where(np.isfinite(v), v, -np.inf), kind="stable")[: 50 * MAX_CANDIDATES]
        best_pts.append(X[keep])
        best_vals.append(v[keep])
    pts = np.concatenate(best_pts)
    vals = np.concatenate(best_vals)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    cand = _pick_candidates(pts, vals, radius=2.5 * h, limit=MAX_CANDIDATES)
    if cand.size == 0:
        raise DomainError("kernel is not finite anywhere on the search grid")
    X, F = _compass_refine(spec, cand, h, refine_iters)
    M = float(np.max(F))
    order = np.argsort(-F, kind="stable")
    maxima = []
    for idx in order:
        if F[idx] < M - VALUE_CLUSTER_TOL:
            break
        if all(np.max(np.abs(X[idx] - q)) > POSITION_CLUSTER_TOL for q in maxima):
            maxima.append(X[idx])
    maxima.sort(key=tuple)
    for q in maxima:
        if raise_on_boundary and min_gap(q) < BOUNDARY_GAP_TOL:
            raise BoundaryMaximum(
                f"maximum {M:.12g} is attained at {np.round(q, 9).tolist()}, where some of "
                "the points coincide; the Weibull limit law does not apply"
            )
    W = tuple(AngleTuple(tuple(q)) for q in maxima)
    hessians, dets = [], []
    for w in W:
        try:
            rep = hessian_fd(spec, w)
            hessians.append(rep)
            dets.append(rep.det_neg_G)
        except DomainError:
            hessians.append(None)
            dets.append(float("nan"))
    return MaxAnalysis(
        M=M, ordered_maximizers=W, m=m, det_neg_hessian=tuple(dets),
        method="oracle", hessians=tuple(hessians),
    )


@dataclass
class ValidationReport:
    interior: bool
    nondegenerate: bool
    negative_definite: bool
    diagonally_dominant: bool | None
    min_gaps: list
    det_neg_hessian: list
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.interior and self.nondegenerate and self.negative_definite

    def to_dict(self) -> dict:
        return {
            "A4_interior": self.interior,
            "A6_nondegenerate": self.nondegenerate,
            "negative_definite": self.negative_definite,
            "diagonally_dominant": self.diagonally_dominant,
            "min_gaps": list(self.min_gaps),
            "det_neg_hessian": list(self.det_neg_hessian),
            "messages": list(self.messages),
        }


def _best_hessian(spec: KernelSpec, w: AngleTuple) -> HessianReport:
    if spec.family in (GAP_SUM, PAIRWISE_SUM):
        return analytic_hessian(spec, w)
    return hessian_fd(spec, w)


def validate_conditions(spec: KernelSpec, analysis: MaxAnalysis) -> ValidationReport:
    """Check interior maximizers, non-singular and negative definite Hessians.

    For pairwise-sum kernels also reports strict diagonal dominance of the
    Toeplitz Hessian, a sufficient condition for non-singularity.  Never raises.
    """
    gaps = [min_gap(w.as_array()) for w in analysis.ordered_maximizers]
    interior = bool(gaps) and all(gp >= BOUNDARY_GAP_TOL for gp in gaps)
    msgs = []
    if not interior:
        msgs.append("A4: a maximizer lies on the boundary (points coincide)")
    dets, nondeg, negdef = [], True, True
    for w in analysis.ordered_maximizers:
        try:
            rep = _best_hessian(spec, w)
        except (DomainError, FamilyError) as exc:
            msgs.append(f"Hessian unavailable at {list(w.beta)}: {exc}")
            dets.append(float("nan"))
            nondeg = negdef = False
            continue
        dets.append(rep.det_neg_G)
        if not (math.isfinite(rep.det_neg_G) and rep.det_neg_G != 0.0):
            nondeg = False
        if not rep.is_negative_definite:
            negdef = False
    if not nondeg:
        msgs.append("A6: singular Hessian at a maximizer")
    if nondeg and not negdef:
        msgs.append("Hessian is not negative definite at a maximizer")
    dominance = None
    if spec.family == PAIRWISE_SUM:
        try:
            dominance = pairwise_hessian(spec.g, spec.m).is_diagonally_dominant()
        except (DomainError, DegenerateHessian):
            dominance = False
    return ValidationReport(
        interior=interior, nondegenerate=nondeg, negative_definite=negdef,
        diagonally_dominant=dominance, min_gaps=gaps, det_neg_hessian=dets, messages=msgs,
    )
