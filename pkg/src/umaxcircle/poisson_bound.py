"""Poisson approximation error bound for U-max statistics and its diagnostics.

For a threshold ``z`` let ``p = P{f(xi_1..xi_m) > z}``, ``lambda = C(n,m) p`` and
``tau(r) = P{f(xi_1..xi_m) > z, f(xi_{1+m-r}..xi_{2m-r}) > z} / p``.  Then

    |P(H_n <= z) - exp(-lambda)|
        <= (1 - exp(-lambda)) [p (C(n,m) - C(n-m,m)) + sum_r C(m,r) C(n-m,m-r) tau(r)].
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Sequence

import numpy as np

from .density import DensitySpec, sample_angles
from .errors import DegreeError, UndefinedTauError, ValidationError
from .kernels import KernelSpec, eval_on_points_batch
from .limit_law import U_MAX, LimitLaw
from .simulator import (
    MC_CHUNK,
    STREAM_JOINT,
    STREAM_PROBE,
    _exceeds,
    stream_rng,
    tail_probability,
    u_statistic,
)


@dataclass(frozen=True)
class TauEstimate:
    tau: float
    std_err: float
    joint: float
    joint_std_err: float
    p_hat: float
    samples: int


def joint_exceedance(
    spec: KernelSpec,
    density: DensitySpec,
    z: float,
    overlap: int,
    mc_samples: int,
    seed: int = 0,
    mode: str = U_MAX,
):
    """Frequencies of two exceedance events on index blocks sharing ``overlap`` points.

    Each trial draws ``2m - overlap`` fresh points; block one is points
    ``0..m-1`` and block two is ``m-overlap..2m-overlap-1``.  Returns
    ``(joint_hits, marginal_hits, trials)`` where ``marginal_hits`` pools both
    blocks (``2 * trials`` Bernoulli draws).
    """
    m = spec.m
    if not 0 <= overlap <= m - 1:
        raise DegreeError(f"overlap must lie in 0..{m - 1}")
    width = 2 * m - overlap
    joint = marginal = done = chunk_id = 0
    while done < mc_samples:
        size = min(MC_CHUNK, mc_samples - done)
        rng = stream_rng(seed, STREAM_JOINT, overlap, chunk_id)
        theta = sample_angles(density, rng, (size, width))
        e1 = _exceeds(eval_on_points_batch(spec, theta[:, :m]), z, mode)
        e2 = _exceeds(eval_on_points_batch(spec, theta[:, m - overlap:]), z, mode)
        joint += int(np.count_nonzero(e1 & e2))
        marginal += int(np.count_nonzero(e1)) + int(np.count_nonzero(e2))
        done += size
        chunk_id += 1
    return joint, marginal, mc_samples


def estimate_tau(
    spec: KernelSpec,
    density: DensitySpec,
    z: float,
    r: int,
    mc_samples: int,
    seed: int = 0,
    mode: str = U_MAX,
    p_hat: float | None = None,
) -> TauEstimate:
    """Monte Carlo ``tau(r)`` by direct joint sampling of ``2m - r`` points.

    ``p_hat`` defaults to the pooled marginal frequency of the same trials.

    Raises
    ------
    UndefinedTauError
        If the probability estimate is zero.
    """
    if not 1 <= r <= spec.m - 1:
        raise DegreeError(f"r must lie in 1..{spec.m - 1}")
    joint, marginal, n = joint_exceedance(spec, density, z, r, mc_samples, seed, mode)
    p = marginal / (2 * n) if p_hat is None else float(p_hat)
    if p <= 0.0:
        raise UndefinedTauError("p_hat = 0: tau is undefined at this threshold")
    q = joint / n
    q_se = math.sqrt(q * (1.0 - q) / n)
    p_se = math.sqrt(p * (1.0 - p) / (2 * n))
    tau = q / p
    # delta method, treating the two frequencies as independent
    rel = math.hypot(q_se / q, p_se / p) if q > 0.0 else q_se / p
    se = tau * rel if q > 0.0 else rel
    return TauEstimate(tau=tau, std_err=se, joint=q, joint_std_err=q_se, p_hat=p, samples=n)


def _int_times(count: int, x: float) -> float:
    """``count * x`` for a possibly huge exact integer ``count``."""
    try:
        return float(count) * x
    except OverflowError:
        with localcontext() as ctx:
            ctx.prec = 50
            value = Decimal(count) * Decimal(x)
        try:
            return float(value)
        except OverflowError:  # pragma: no cover - beyond double range
            return math.inf


def bound_rhs(n: int, m: int, p_hat: float, tau_hats: Sequence[float]) -> float:
    """Right-hand side of the Poisson approximation bound.

    ``tau_hats[r-1]`` is ``tau(r)`` for ``r = 1..m-1``.  Binomials are exact
    integers; the difference ``C(n,m) - C(n-m,m)`` is formed before it is
    multiplied by ``p`` to avoid cancellation.
    """
    if n < m or m < 1:
        raise DegreeError("need n >= m >= 1")
    taus = [float(t) for t in tau_hats]
    if len(taus) != m - 1:
        raise ValidationError(f"expected {m - 1} tau values, got {len(taus)}")
    if p_hat < 0.0 or any(t < 0.0 for t in taus):
        raise ValidationError("p_hat and tau values must be non-negative")
    lam = _int_times(math.comb(n, m), p_hat)
    first = _int_times(math.comb(n, m) - math.comb(n - m, m), p_hat)
    second = math.fsum(
        _int_times(math.comb(m, r) * math.comb(n - m, m - r), taus[r - 1]) for r in range(1, m)
    )
    return -math.expm1(-lam) * (first + second)


@dataclass
class BoundReport:
    n: int
    m: int
    z: float
    p_hat: float
    p_std_err: float
    tau_hat: list
    tau_std_err: list
    lam: float
    rhs: float
    lhs_probe: float | None = None
    lhs_probe_std_err: float | None = None
    samples: int = 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "z": self.z,
            "p_hat": self.p_hat,
            "p_std_err": self.p_std_err,
            "tau_hat": {str(r + 1): t for r, t in enumerate(self.tau_hat)},
            "tau_std_err": {str(r + 1): t for r, t in enumerate(self.tau_std_err)},
            "lambda": self.lam,
            "rhs": self.rhs,
            "lhs_probe": self.lhs_probe,
            "lhs_probe_std_err": self.lhs_probe_std_err,
            "mc_samples": self.samples,
        }


def bound_report(
    spec: KernelSpec,
    density: DensitySpec,
    n: int,
    z: float,
    mc_samples: int,
    seed: int = 0,
    mode: str = U_MAX,
    probe_trials: int = 0,
) -> BoundReport:
    """Estimate ``p``, ``tau(r)`` and the bound at ``(n, z)``.

    With ``probe_trials > 0`` the left-hand side is probed by simulating
    ``H_n`` that many times and reporting ``|P_hat(H_n <= z) - exp(-lambda)|``
    (``>= z`` for u-min).
    """
    m = spec.m
    tail = tail_probability(spec, density, z, mc_samples, seed, mode)
    taus, ses = [], []
    for r in range(1, m):
        if tail.p_hat > 0.0:
            est = estimate_tau(spec, density, z, r, mc_samples, seed, mode, p_hat=tail.p_hat)
            taus.append(est.tau)
            ses.append(est.std_err)
        else:
            taus.append(math.nan)
            ses.append(math.nan)
    lam = _int_times(math.comb(n, m), tail.p_hat)
    rhs = bound_rhs(n, m, tail.p_hat, [0.0 if math.isnan(t) else t for t in taus])
    report = BoundReport(
        n=n, m=m, z=z, p_hat=tail.p_hat, p_std_err=tail.std_err,
        tau_hat=taus, tau_std_err=ses, lam=lam, rhs=rhs, samples=mc_samples,
    )
    if probe_trials > 0:
        report.lhs_probe, report.lhs_probe_std_err = probe_lhs(
            spec, density, n, z, lam, probe_trials, seed, mode
        )
    return report


def probe_lhs(
    spec: KernelSpec,
    density: DensitySpec,
    n: int,
    z: float,
    lam: float,
    trials: int,
    seed: int = 0,
    mode: str = U_MAX,
    threads: int = 1,
):
    """Monte Carlo ``|P(H_n <= z) - exp(-lam)|`` and the std err of the frequency.

    Trial ``j`` uses its own counter-based stream, so ``threads`` does not
    change the result.
    """

    def below(j):
        theta = sample_angles(density, stream_rng(seed, STREAM_PROBE, j), n)
        h = u_statistic(theta, spec, mode)
        return int(h <= z) if mode == U_MAX else int(h >= z)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(below, range(trials)))
    else:
        hits = sum(below(j) for j in range(trials))
    frac = hits / trials
    return abs(frac - math.exp(-lam)), math.sqrt(frac * (1.0 - frac) / trials)


@dataclass
class DiagnosticRow:
    n: int
    t: float
    z: float
    p_hat: float
    p_std_err: float
    lambda_hat: float
    lambda_std_err: float
    lambda_limit: float
    tau_hat: list
    tau_std_err: list
    scaled_dependence: list
    rhs: float

    def to_dict(self) -> dict:
        out = {
            "n": self.n, "t": self.t, "z": self.z,
            "p_hat": self.p_hat, "p_std_err": self.p_std_err,
            "lambda_hat": self.lambda_hat, "lambda_std_err": self.lambda_std_err,
            "lambda_limit": self.lambda_limit,
        }
        for r, (tau, se, sc) in enumerate(zip(self.tau_hat, self.tau_std_err, self.scaled_dependence), 1):
            out[f"tau_{r}"] = tau
            out[f"tau_{r}_std_err"] = se
            out[f"n_pow_2m_minus_{r}_p_tau_{r}"] = sc
        out["rhs"] = self.rhs
        return out


def threshold(M: float, t: float, n: int, law: LimitLaw) -> float:
    """``z_n(t) = M - t n^(-2m/(m-1))`` (``mu + ...`` for u-min)."""
    step = t * float(n) ** (-law.scaling_exponent)
    return M - step if law.mode == U_MAX else M + step


def silverman_brown_check(
    spec: KernelSpec,
    density: DensitySpec,
    law: LimitLaw,
    M: float,
    t: float,
    n_grid: Sequence[int],
    mc_samples: int,
    seed: int = 0,
) -> list[DiagnosticRow]:
    """Finite-``n`` diagnostics of the two Poisson-limit conditions along ``z_n(t)``.

    ``lambda_hat`` should approach ``c t^((m-1)/2)`` and ``n^(2m-r) p tau(r)``
    should decrease in ``n`` for every ``r``.
    """
    m, mode = spec.m, law.mode
    lam_limit = law.coefficient * t ** law.shape_exponent
    rows = []
    for n in n_grid:
        z = threshold(M, t, n, law)
        tail = tail_probability(spec, density, z, mc_samples, seed, mode)
        binom = math.comb(n, m)
        taus, ses, scaled = [], [], []
        for r in range(1, m):
            if tail.p_hat > 0.0:
                est = estimate_tau(spec, density, z, r, mc_samples, seed, mode, p_hat=tail.p_hat)
                taus.append(est.tau)
                ses.append(est.std_err)
                scaled.append(float(n) ** (2 * m - r) * est.joint)
            else:
                taus.append(math.nan)
                ses.append(math.nan)
                scaled.append(0.0)
        rhs = bound_rhs(n, m, tail.p_hat, [0.0 if math.isnan(x) else x for x in taus])
        rows.append(DiagnosticRow(
            n=n, t=t, z=z, p_hat=tail.p_hat, p_std_err=tail.std_err,
            lambda_hat=_int_times(binom, tail.p_hat),
            lambda_std_err=_int_times(binom, tail.std_err),
            lambda_limit=lam_limit, tau_hat=taus, tau_std_err=ses,
            scaled_dependence=scaled, rhs=rhs,
        ))
    return rows
