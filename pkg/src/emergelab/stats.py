"""Statistical primitives backing the proposition harness.

Every primitive here is validated against a brute-force oracle in the test
suite: the Mann-Kendall statistic against the pairwise sign count, the
power-law MLE against the closed form, OLS against exact fits, logistic
IRLS against its monotone log-likelihood invariant, and the break test
against forced-step fixtures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats as spstats

from .errors import SeparationWarning, TooShort


# -- ordinary least squares ----------------------------------------------------

@dataclass(frozen=True)
class OLSFit:
    slope: float
    intercept: float
    stderr: float  # standard error of the slope


def ols_fit(x: Sequence[float], y: Sequence[float]) -> OLSFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise TooShort("OLS needs at least 2 points")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise TooShort("x has no variation")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = max(len(x) - 2, 1)
    stderr = float(np.sqrt((resid @ resid) / dof / sxx))
    return OLSFit(slope=slope, intercept=intercept, stderr=stderr)


# -- permutation tests ----------------------------------------------------------

def permutation_mean_diff(
    a: Sequence[float],
    b: Sequence[float],
    n_perm: int = 10000,
    rng: Optional[np.random.Generator] = None,
    alternative: str = "greater",
) -> tuple[float, float]:
    """Permutation test for mean(a) - mean(b). Returns (observed, p)."""
    rng = np.random.default_rng() if rng is None else rng
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pooled = np.concatenate([a, b])
    observed = a.mean() - b.mean()
    na = len(a)
    idx = np.argsort(rng.random((n_perm, len(pooled))), axis=1)
    shuffled = pooled[idx]
    diffs = shuffled[:, :na].mean(axis=1) - shuffled[:, na:].mean(axis=1)
    if alternative == "greater":
        p = (np.sum(diffs >= observed) + 1) / (n_perm + 1)
    elif alternative == "less":
        p = (np.sum(diffs <= observed) + 1) / (n_perm + 1)
    else:
        p = (np.sum(np.abs(diffs) >= abs(observed)) + 1) / (n_perm + 1)
    return float(observed), float(p)


# -- Mann-Kendall trend test -----------------------------------------------------

@dataclass(frozen=True)
class MKResult:
    s: int
    var_s: float
    z: float
    p: float  # one-sided in the requested direction
    exact: bool


@lru_cache(maxsize=None)
def _kendall_s_distribution(n: int) -> np.ndarray:
    """Counts of permutations of 1..n by number of inversions (Mahonian)."""
    counts = np.array([1], dtype=float)
    for m in range(2, n + 1):
        new = np.convolve(counts, np.ones(m))
        counts = new
    return counts  # index = inversions, 0 .. n(n-1)/2


def mann_kendall(
    x: Sequence[float], alternative: str = "greater"
) -> MKResult:
    """Mann-Kendall trend test with tie-corrected variance.

    For n <= 10 without ties the p-value uses the exact permutation null of
    S (via the Mahonian distribution); the normal approximation with
    continuity correction is used otherwise. z is always reported from the
    normal approximation so it is comparable across series lengths.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 3:
        raise TooShort("Mann-Kendall needs at least 3 points")
    diffs = np.sign(x[None, :] - x[:, None])
    s = int(np.triu(diffs, 1).sum())

    _, tie_counts = np.unique(x, return_counts=True)
    var_s = (
        n * (n - 1) * (2 * n + 5)
        - np.sum(tie_counts * (tie_counts - 1) * (2 * tie_counts + 5))
    ) / 18.0

    if var_s <= 0:  # fully tied series: no evidence either way
        return MKResult(s=s, var_s=0.0, z=0.0, p=0.5, exact=False)

    if s > 0:
        z = (s - 1) / np.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / np.sqrt(var_s)
    else:
        z = 0.0

    has_ties = len(tie_counts) < n
    if n <= 10 and not has_ties:
        dist = _kendall_s_distribution(n)
        total = dist.sum()
        inversions = np.arange(len(dist))
        s_values = n * (n - 1) // 2 - 2 * inversions
        if alternative == "greater":
            p = float(dist[s_values >= s].sum() / total)
        elif alternative == "less":
            p = float(dist[s_values <= s].sum() / total)
        else:
            p = float(min(1.0, 2 * min(dist[s_values >= s].sum(),
                                       dist[s_values <= s].sum()) / total))
        return MKResult(s=s, var_s=float(var_s), z=float(z), p=p, exact=True)

    if alternative == "greater":
        p = float(spstats.norm.sf(z))
    elif alternative == "less":
        p = float(spstats.norm.cdf(z))
    else:
        p = float(2 * spstats.norm.sf(abs(z)))
    return MKResult(s=s, var_s=float(var_s), z=float(z), p=p, exact=False)


# -- discrete power-law fitting ---------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: int
    n_tail: int
    ks: float


def power_law_mle(data: Sequence[float], x_min: int = 1) -> PowerLawFit:
    """Closed-form discrete power-law exponent estimate (Clauset et al.).

    alpha = 1 + m / sum(ln(x_i / (x_min - 0.5))) over the tail x >= x_min,
    with a KS distance against the implied zeta distribution.
    """
    x = np.asarray([v for v in data if v >= x_min], dtype=float)
    if len(x) < 2:
        raise TooShort("need at least 2 tail observations")
    alpha = 1.0 + len(x) / np.sum(np.log(x / (x_min - 0.5)))

    values = np.arange(x_min, int(x.max()) + 1)
    pmf = values.astype(float) ** (-alpha)
    pmf /= special.zeta(alpha, x_min)
    cdf_model = np.cumsum(pmf)
    cdf_model /= cdf_model[-1]  # truncate at observed max for comparison
    counts = np.bincount(x.astype(int), minlength=int(x.max()) + 1)[x_min:]
    cdf_emp = np.cumsum(counts) / len(x)
    ks = float(np.max(np.abs(cdf_emp - cdf_model)))
    return PowerLawFit(alpha=float(alpha), x_min=x_min, n_tail=len(x), ks=ks)


def power_law_sample(
    alpha: float, x_min: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Inverse-CDF sampler for the discrete power law (Clauset approximation)."""
    u = rng.random(size)
    return np.floor((x_min - 0.5) * (1 - u) ** (-1.0 / (alpha - 1.0)) + 0.5).astype(
        np.int64
    )


# -- logistic regression via IRLS --------------------------------------------------

@dataclass(frozen=True)
class LogitFit:
    beta: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    separation: bool
    loglik_path: tuple[float, ...]


def _log_likelihood(X, y, beta, ridge):
    eta = np.clip(X @ beta, -700, 700)
    ll = float(y @ eta - np.logaddexp(0.0, eta).sum())
    return ll - 0.5 * ridge * float(beta @ beta)


def logistic_fit(
    X: np.ndarray,
    y: np.ndarray,
    max_iter: int = 100,
    tol: float = 1e-8,
    ridge: float = 0.0,
) -> LogitFit:
    """Newton/IRLS fit with step-halving, so the log-likelihood never drops.

    Detects (quasi-)separation by runaway coefficients and refits with a
    unit ridge penalty, emitting a SeparationWarning.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])
    ll = _log_likelihood(X, y, beta, ridge)
    path = [ll]
    converged = False
    separated = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = np.clip(X @ beta, -30, 30)
        p = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(p * (1 - p), 1e-10)
        hessian = (X * w[:, None]).T @ X + ridge * np.eye(X.shape[1])
        grad = X.T @ (y - p) - ridge * beta
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hessian, grad, rcond=None)[0]
        factor = 1.0
        new_ll = _log_likelihood(X, y, beta + step, ridge)
        halvings = 0
        while new_ll < ll and halvings < 30:
            factor *= 0.5
            new_ll = _log_likelihood(X, y, beta + factor * step, ridge)
            halvings += 1
        beta = beta + factor * step
        path.append(new_ll)
        if abs(new_ll - ll) < tol:
            ll = new_ll
            converged = True
            break
        ll = new_ll
        if np.max(np.abs(beta)) > 15 and ridge == 0.0:
            separated = True
            break

    if separated:
        warnings.warn(
            "separable data detected; refitting with ridge=1.0", SeparationWarning
        )
        stabilized = logistic_fit(X, y, max_iter=max_iter, tol=tol, ridge=1.0)
        return LogitFit(
            beta=stabilized.beta,
            loglik=stabilized.loglik,
            converged=stabilized.converged,
            iterations=stabilized.iterations,
            separation=True,
            loglik_path=stabilized.loglik_path,
        )
    return LogitFit(
        beta=beta,
        loglik=ll,
        converged=converged,
        iterations=it,
        separation=False,
        loglik_path=tuple(path),
    )


def logistic_lrt(
    X: np.ndarray, y: np.ndarray, column: int, ridge: float = 0.0
) -> float:
    """Likelihood-ratio p-value for one coefficient (chi-square, 1 dof)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SeparationWarning)
        full = logistic_fit(X, y, ridge=ridge)
        reduced = logistic_fit(np.delete(X, column, axis=1), y, ridge=ridge)
    lr = max(0.0, 2 * (full.loglik - reduced.loglik))
    return float(spstats.chi2.sf(lr, df=1))


# -- single structural break --------------------------------------------------------

@dataclass(frozen=True)
class BreakResult:
    index: int  # first index of the right segment
    sup_f: float
    p: float
    left_mean: float
    right_mean: float


def _sup_f(y: np.ndarray, lo: int, hi: int) -> tuple[float, int]:
    """Max F statistic for a mean shift over candidate split points [lo, hi)."""
    n = len(y)
    cs = np.concatenate([[0.0], np.cumsum(y)])
    cs2 = np.concatenate([[0.0], np.cumsum(y**2)])
    k = np.arange(lo, hi)
    left_sse = cs2[k] - cs[k] ** 2 / k
    right_n = n - k
    right_sum = cs[n] - cs[k]
    right_sse = (cs2[n] - cs2[k]) - right_sum**2 / right_n
    sse1 = left_sse + right_sse
    sse0 = cs2[n] - cs[n] ** 2 / n
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (sse0 - sse1) / np.maximum(sse1 / (n - 2), 1e-300)
    best = int(np.argmax(f))
    return float(f[best]), int(k[best])


def single_break_test(
    y: Sequence[float],
    trim: float = 0.1,
    n_perm: int = 5000,
    rng: Optional[np.random.Generator] = None,
) -> BreakResult:
    """Single structural break by SSE minimization, sup-F permutation p-value.

    Candidate breakpoints are trimmed ``trim`` from each end. The null is
    built by shuffling blocks (length ceil(n^(1/3))) of the global-mean
    residuals and recomputing sup-F for each shuffle.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 10:
        raise TooShort("break test needs at least 10 points")
    rng = np.random.default_rng() if rng is None else rng
    lo = max(2, int(np.floor(trim * n)))
    hi = min(n - 1, int(np.ceil((1 - trim) * n)))
    sup_f, k = _sup_f(y, lo, hi)

    resid = y - y.mean()
    block = int(np.ceil(n ** (1.0 / 3.0)))
    n_blocks = int(np.ceil(n / block))
    pad = n_blocks * block - n
    padded = np.concatenate([resid, resid[:pad]]) if pad else resid
    blocks = padded.reshape(n_blocks, block)

    count = 0
    for _ in range(n_perm):
        order = rng.permutation(n_blocks)
        y_null = y.mean() + blocks[order].ravel()[:n]
        f_null, _ = _sup_f(y_null, lo, hi)
        if f_null >= sup_f:
            count += 1
    p = (count + 1) / (n_perm + 1)
    return BreakResult(
        index=k,
        sup_f=sup_f,
        p=float(p),
        left_mean=float(y[:k].mean()),
        right_mean=float(y[k:].mean()),
    )


# -- lagged cross-correlation ---------------------------------------------------------

def best_lead(
    leader: Sequence[float], follower: Sequence[float], max_lag: int = 5
) -> int:
    """Lead (in windows) of ``leader`` over ``follower`` at max cross-correlation.

    Positive values mean the leader's values align best with later follower
    values (the leader precedes); 0 means coincident. Ties within 1e-9 of
    the maximum resolve to the smallest absolute lead.
    """
    a = np.asarray(leader, dtype=float)
    b = np.asarray(follower, dtype=float)
    best = None
    scores = {}
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            x, z = a[: len(a) - lag or None], b[lag:]
        else:
            x, z = a[-lag:], b[: len(b) + lag]
        if len(x) < 3 or np.std(x) == 0 or np.std(z) == 0:
            continue
        scores[lag] = float(np.corrcoef(x, z)[0, 1])
    if not scores:
        return 0
    top = max(scores.values())
    candidates = [lag for lag, v in scores.items() if v >= top - 1e-9]
    return min(candidates, key=abs)
