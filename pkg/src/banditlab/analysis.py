"""Information-theoretic bounds for the epoch adversary and scaling fits.

KL divergences are in nats. For an epoch of length d in which one arm's
Bernoulli parameter moves from 1/2 to 1/2 + eps, the per-step KL between
the two reward laws is 0.5 * log(1 + 4 eps^2 / (1 - 4 eps^2)) <= 4 eps^2,
the chain rule gives an epoch budget of at most 4 eps^2 d, and Pinsker
turns that into a total-variation bound eps * sqrt(2 d). The exact TV of
the d-step product laws is available by enumeration for small d and
certifies the bound chain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "AnalysisError",
    "kl_bernoulli",
    "per_step_kl",
    "EpochMeasurePair",
    "epoch_bounds",
    "exact_tv_small_epoch",
    "ScalingFit",
    "fit_scaling_exponent",
    "RunSummary",
    "AggregateRow",
    "aggregate_runs",
]

MAX_EXACT_TV_EPOCH = 12


class AnalysisError(ValueError):
    """Invalid analysis input."""


def kl_bernoulli(p: float, q: float) -> float:
    """KL(Bernoulli(p) || Bernoulli(q)) in nats, with 0*log(0) = 0.

    A degenerate q (0 or 1) with mismatched p reports infinity.
    """
    if not 0.0 <= p <= 1.0:
        raise AnalysisError(f"p must be in [0, 1], got {p}")
    if not 0.0 <= q <= 1.0:
        raise AnalysisError(f"q must be in [0, 1], got {q}")
    if q in (0.0, 1.0):
        return 0.0 if p == q else math.inf
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out


def per_step_kl(eps: float) -> float:
    """Per-step KL between the unfavored and favored epoch reward laws.

    Equals 0.5 * log(1 + 4 eps^2 / (1 - 4 eps^2)); bounded by 4 eps^2
    whenever eps <= 1/4 (indeed up to eps = 1/sqrt(8)).
    """
    if not 0.0 <= eps < 0.5:
        raise AnalysisError(f"eps must be in [0, 1/2), got {eps}")
    if eps == 0.0:
        return 0.0
    e2 = 4.0 * eps * eps
    value = 0.5 * math.log1p(e2 / (1.0 - e2))
    if eps <= 0.25:
        assert value <= 4.0 * eps * eps + 1e-15
    return value


@dataclass(frozen=True)
class EpochMeasurePair:
    """Bound bookkeeping for one epoch: per-step KL, chain-rule KL, Pinsker TV."""

    epsilon: float
    epoch_length: int
    per_step_kl: float
    epoch_kl_bound: float
    tv_bound: float


def epoch_bounds(eps: float, d: int) -> EpochMeasurePair:
    """Epoch KL bound 4 eps^2 d and TV bound eps sqrt(2 d), given 8 eps^2 d <= 1."""
    if d < 1:
        raise AnalysisError(f"epoch length must be >= 1, got {d}")
    if 8.0 * eps * eps * d > 1.0 + 1e-12:
        raise AnalysisError(
            f"8*eps^2*d <= 1 violated: 8*{eps}^2*{d} = {8.0 * eps * eps * d}"
        )
    step = per_step_kl(eps)
    return EpochMeasurePair(
        epsilon=eps,
        epoch_length=d,
        per_step_kl=step,
        epoch_kl_bound=4.0 * eps * eps * d,
        tv_bound=eps * math.sqrt(2.0 * d),
    )


def exact_tv_small_epoch(eps: float, d: int) -> float:
    """Exact total variation between d i.i.d. Bernoulli(1/2) and Bernoulli(1/2+eps).

    Enumerates the 2^d outcome strings (grouped by their number of ones):
    TV = 0.5 * sum_s |P1(s) - P2(s)|. Serves as the oracle certifying
    TV <= eps * sqrt(2 d); rejected for d > 12.
    """
    if not 1 <= d <= MAX_EXACT_TV_EPOCH:
        raise AnalysisError(f"d must be in 1..{MAX_EXACT_TV_EPOCH}, got {d}")
    if not 0.0 <= eps <= 0.5:
        raise AnalysisError(f"eps must be in [0, 1/2], got {eps}")
    p_hi, p_lo = 0.5 + eps, 0.5 - eps
    uniform = 0.5**d
    total = 0.0
    for k in range(d + 1):
        total += math.comb(d, k) * abs(uniform - p_hi**k * p_lo ** (d - k))
    return 0.5 * total


class RunSummary(NamedTuple):
    """Final regret of one (horizon, seed) cell."""

    T: int
    seed: int
    final_regret: float


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of log(regret) on log(T)."""

    points: tuple[tuple[int, float], ...]
    alpha: float
    prefactor: float
    r2: float


def fit_scaling_exponent(points, min_T: int = 1024) -> ScalingFit:
    """Fit regret ~ c * T^alpha by OLS on log-log points.

    Points with non-positive regret are dropped with a warning, as are
    burn-in points below ``min_T``; fewer than 3 surviving points is an
    error. Horizons must be strictly increasing.
    """
    pts = [(int(T), float(r)) for T, r in points]
    if len(pts) < 3:
        raise AnalysisError(f"need at least 3 points, got {len(pts)}")
    horizons = [T for T, _ in pts]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise AnalysisError("horizons must be strictly increasing")
    kept = []
    for T, r in pts:
        if r <= 0.0:
            warnings.warn(f"dropping non-positive regret point (T={T}, R={r})")
            continue
        if T < min_T:
            warnings.warn(f"dropping burn-in point T={T} < {min_T}")
            continue
        kept.append((T, r))
    if len(kept) < 3:
        raise AnalysisError(f"only {len(kept)} usable points after filtering; need >= 3")
    x = np.log(np.array([T for T, _ in kept], dtype=float))
    y = np.log(np.array([r for _, r in kept]))
    alpha, intercept = np.polyfit(x, y, 1)
    resid = y - (alpha * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid**2).sum()) / ss_tot
    return ScalingFit(
        points=tuple(kept),
        alpha=float(alpha),
        prefactor=float(math.exp(intercept)),
        r2=r2,
    )


@dataclass(frozen=True)
class AggregateRow:
    """Per-horizon summary across seeds: mean, standard error, 95% band."""

    T: int
    runs: int
    mean: float
    stderr: float
    lo95: float
    hi95: float


def aggregate_runs(summaries: Iterable[RunSummary]) -> list[AggregateRow]:
    """Group run summaries by horizon (each sorted by seed) and summarize.

    Needs at least 2 seeds per horizon. Deterministic given the (T, seed)
    contents regardless of input order.
    """
    by_T: dict[int, list[RunSummary]] = {}
    for s in summaries:
        by_T.setdefault(int(s.T), []).append(s)
    rows = []
    for T in sorted(by_T):
        group = sorted(by_T[T], key=lambda s: s.seed)
        finals = np.array([s.final_regret for s in group])
        n = finals.size
        if n < 2:
            raise AnalysisError(f"need >= 2 seeds per horizon, got {n} at T={T}")
        mean = float(finals.mean())
        stderr = float(finals.std(ddof=1) / math.sqrt(n))
        rows.append(
            AggregateRow(
                T=T,
                runs=n,
                mean=mean,
                stderr=stderr,
                lo95=mean - 1.96 * stderr,
                hi95=mean + 1.96 * stderr,
            )
        )
    return rows
