"""Exact U-max / U-min statistics, replicate simulation and goodness of fit."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .density import DensitySpec, sample_angles
from .errors import DegreeError, FamilyError, ValidationError
from .kernels import (
    CUSTOM,
    GAP_SUM,
    PAIRWISE_SUM,
    CirclePoint,
    KernelSpec,
    eval_on_points_batch,
    reduce_angle,
)
from .limit_law import MODES, U_MAX, U_MIN, LimitLaw, rescale

EVALUATORS = ("brute-force", "gap-dp", "auto")
AUTO_DP_THRESHOLD = 10**6
MAX_SUBSETS = 2**63 - 1
MC_CHUNK = 250_000

# stream tags keep replicate draws and Monte Carlo draws independent
STREAM_REPLICATE = 0
STREAM_TAIL = 1
STREAM_JOINT = 2
STREAM_PROBE = 3


def stream_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the work unit identified by ``key``.

    The stream depends only on ``(master_seed, key)``, never on scheduling.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _angles(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return reduce_angle(points.astype(float, copy=False)).reshape(-1)
    return reduce_angle(np.asarray(
        [p.theta if isinstance(p, CirclePoint) else float(p) for p in points], dtype=float
    ))


def _pair_table(spec: KernelSpec, theta: np.ndarray) -> np.ndarray:
    """``T[i, j] = scale * g((theta_j - theta_i) mod 2 pi)`` on sorted angles."""
    diff = reduce_angle(theta[None, :] - theta[:, None])
    if spec.family == PAIRWISE_SUM:
        diff = np.abs(theta[None, :] - theta[:, None])
    return np.ascontiguousarray(spec.scale * spec.g(diff), dtype=np.float64)


@numba.njit(cache=True, nogil=True)
def _brute_gapsum(T, m):
    n = T.shape[0]
    idx = np.arange(m)
    best = -np.inf
    while True:
        s = T[idx[0], idx[1]]
        for t in range(1, m - 1):
            s += T[idx[t], idx[t + 1]]
        s += T[idx[m - 1], idx[0]]
        if s > best:
            best = s
        i = m - 1
        while i >= 0 and idx[i] == n - m + i:
            i -= 1
        if i < 0:
            return best
        idx[i] += 1
        for j in range(i + 1, m):
            idx[j] = idx[j - 1] + 1


@numba.njit(cache=True, nogil=True)
def _brute_pairwise(T, m):
    n = T.shape[0]
    idx = np.arange(m)
    best = -np.inf
    while True:
        s = 0.0
        for a in range(m - 1):
            for b in range(a + 1, m):
                s += T[idx[a], idx[b]]
        if s > best:
            best = s
        i = m - 1
        while i >= 0 and idx[i] == n - m + i:
            i -= 1
        if i < 0:
            return best
        idx[i] += 1
        for j in range(i + 1, m):
            idx[j] = idx[j - 1] + 1


@numba.njit(cache=True, nogil=True)
def _dp_gapsum(T, m):
    # Anchor a = smallest selected index.  cur[j] holds the best partial sum
    # T[a,i2] + ... + T[i_c, j] over paths a < i2 < ... < j, accumulated left to
    # right exactly as the brute-force loop does, so both agree bitwise.
    n = T.shape[0]
    best = -np.inf
    cur = np.empty(n)
    nxt = np.empty(n)
    for a in range(n - m + 1):
        for j in range(n):
            cur[j] = -np.inf
        for j in range(a + 1, n):
            cur[j] = T[a, j]
        for c in range(2, m):
            for j in range(n):
                nxt[j] = -np.inf
            for j in range(a + c, n):
                v = -np.inf
                for i in range(a + c - 1, j):
                    s = cur[i] + T[i, j]
                    if s > v:
                        v = s
                nxt[j] = v
            for j in range(n):
                cur[j] = nxt[j]
        for j in range(a + m - 1, n):
            s = cur[j] + T[j, a]
            if s > best:
                best = s
    return best


def _check_sizes(n: int, m: int) -> None:
    if n < m:
        raise DegreeError(f"need at least m={m} points, got {n}")
    if math.comb(n, m) > MAX_SUBSETS:
        raise DegreeError(f"C({n},{m}) subsets exceed the 63-bit enumeration limit")


def umax_bruteforce(points, spec: KernelSpec) -> float:
    """Exact ``max`` of the kernel over all ``C(n, m)`` subsets (lexicographic order)."""
    theta = np.sort(_angles(points))
    n, m = theta.size, spec.m
    _check_sizes(n, m)
    if spec.family == GAP_SUM:
        return float(_brute_gapsum(_pair_table(spec, theta), m))
    if spec.family == PAIRWISE_SUM:
        return float(_brute_pairwise(_pair_table(spec, theta), m))
    best = -np.inf
    combos = itertools.combinations(range(n), m)
    while True:
        chunk = np.array(list(itertools.islice(combos, MC_CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            return float(best)
        vals = eval_on_points_batch(spec, theta[chunk])
        best = max(best, float(np.max(vals)))


def umax_gapsum_dp(points, spec: KernelSpec) -> float:
    """Exact U-max of a gap-sum kernel by dynamic programming over sorted points.

    Cost is ``O(n^3 m)`` in the worst case instead of ``C(n, m)``.
    """
    if spec.family != GAP_SUM:
        raise FamilyError("the dynamic programme applies to gap-sum kernels only")
    theta = np.sort(_angles(points))
    _check_sizes(theta.size, spec.m)
    return float(_dp_gapsum(_pair_table(spec, theta), spec.m))


def choose_evaluator(spec: KernelSpec, n: int, evaluator: str = "auto") -> str:
    if evaluator not in EVALUATORS:
        raise ValidationError(f"evaluator must be one of {EVALUATORS}")
    if evaluator == "gap-dp" and spec.family != GAP_SUM:
        raise FamilyError("gap-dp evaluator needs a gap-sum kernel")
    if evaluator == "auto":
        if spec.family == GAP_SUM and math.comb(n, spec.m) > AUTO_DP_THRESHOLD:
            return "gap-dp"
        return "brute-force"
    return evaluator


def u_statistic(points, spec: KernelSpec, mode: str = U_MAX, evaluator: str = "auto") -> float:
    """``H_n``: the maximum (u-max) or minimum (u-min) of the kernel over subsets."""
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}")
    target = spec if mode == U_MAX else spec.negated()
    theta = _angles(points)
    how = choose_evaluator(target, theta.size, evaluator)
    value = umax_gapsum_dp(theta, target) if how == "gap-dp" else umax_bruteforce(theta, target)
    return value if mode == U_MAX else -value


@dataclass(frozen=True)
class EmpiricalCDF:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.sort(np.asarray(self.values, dtype=float)))

    def __len__(self):
        return self.values.size

    def __call__(self, t):
        out = np.searchsorted(self.values, t, side="right") / self.values.size
        return float(out) if np.ndim(out) == 0 else out


def ks_distance(ecdf: EmpiricalCDF, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance, evaluated at every jump of ``ecdf``.

    Values slightly below zero (floating slack from rescaling) are read as 0.
    """
    x = ecdf.values
    n = x.size
    F = np.asarray(cdf(np.maximum(x, 0.0)), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


@dataclass(frozen=True)
class SimulationConfig:
    kernel: KernelSpec
    density: DensitySpec
    n: int
    replicates: int
    master_seed: int
    mode: str = U_MAX
    evaluator: str = "auto"

    def __post_init__(self):
        if self.n < self.kernel.m:
            raise ValidationError(f"n={self.n} must be >= m={self.kernel.m}")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError("master_seed must be an unsigned 64-bit integer")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.evaluator not in EVALUATORS:
            raise ValidationError(f"evaluator must be one of {EVALUATORS}")


@dataclass
class SimulationResult:
    config: SimulationConfig
    ecdf: EmpiricalCDF
    ks_distance: float
    statistics: np.ndarray
    rescaled: np.ndarray
    M: float
    law: LimitLaw
    runtime_seconds: float = field(default=0.0, compare=False)

    @property
    def h_summary(self) -> dict:
        h = self.statistics
        return {"min": float(np.min(h)), "median": float(np.median(h)), "max": float(np.max(h))}


def simulate_statistic(cfg: SimulationConfig, replicate: int) -> float:
    rng = stream_rng(cfg.master_seed, STREAM_REPLICATE, replicate)
    theta = sample_angles(cfg.density, rng, cfg.n)
    return u_statistic(theta, cfg.kernel, cfg.mode, cfg.evaluator)


def run_replicates(cfg: SimulationConfig, law: LimitLaw, M: float, threads: int = 1) -> SimulationResult:
    """Simulate ``H_n`` per replicate, rescale it and compare with the limit law.

    ``M`` is the extremum in the kernel's own units (the minimum ``mu`` in
    u-min mode).  Replicate ``j`` draws from its own counter-based stream, so
    the result does not depend on ``threads``.
    """
    if law.mode != cfg.mode:
        raise ValidationError("limit law and simulation config disagree on the mode")
    start = time.perf_counter()
    reps = range(cfg.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(lambda j: simulate_statistic(cfg, j), reps))
    else:
        stats = [simulate_statistic(cfg, j) for j in reps]
    stats = np.asarray(stats, dtype=float)
    scaled = np.array([rescale(h, M, cfg.n, law) for h in stats])
    ecdf = EmpiricalCDF(scaled)
    return SimulationResult(
        config=cfg,
        ecdf=ecdf,
        ks_distance=ks_distance(ecdf, law.cdf),
        statistics=stats,
        rescaled=scaled,
        M=M,
        law=law,
        runtime_seconds=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    std_err: float
    hits: int
    samples: int


def _exceeds(values: np.ndarray, z: float, mode: str) -> np.ndarray:
    return values > z if mode == U_MAX else values < z


def tail_probability(
    spec: KernelSpec,
    density: DensitySpec,
    z: float,
    mc_samples: int,
    seed: int = 0,
    mode: str = U_MAX,
) -> TailEstimate:
    """Monte Carlo estimate of ``P{f(xi_1..xi_m) > z}`` (``< z`` in u-min mode).

    Samples are drawn in fixed-size chunks from counter-based streams; the
    standard error is ``sqrt(p (1 - p) / N)``.
    """
    if mc_samples < 10_000:
        raise ValidationError("tail_probability needs at least 1e4 samples")
    hits, done, chunk_id = 0, 0, 0
    while done < mc_samples:
        size = min(MC_CHUNK, mc_samples - done)
        rng = stream_rng(seed, STREAM_TAIL, chunk_id)
        theta = sample_angles(density, rng, (size, spec.m))
        hits += int(np.count_nonzero(_exceeds(eval_on_points_batch(spec, theta), z, mode)))
        done += size
        chunk_id += 1
    p = hits / mc_samples
    return TailEstimate(p_hat=p, std_err=math.sqrt(p * (1.0 - p) / mc_samples), hits=hits, samples=mc_samples)
