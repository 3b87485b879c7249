"""Small-sample statistics toolkit: normality, paired tests, effect sizes,
correlation, reliability, 2x2 mixed ANOVA and Bonferroni adjustment.

Wilcoxon p-values are exact (full sign-assignment enumeration) for n <= 14,
and Spearman p-values are exact (full permutation enumeration) for n <= 8;
larger samples use the standard normal/t approximations with mid-ranks and
tie-corrected variances. Exact paths compare integers only (doubled ranks),
so they match brute-force enumeration bit for bit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import f as f_dist
from scipy.stats import norm, rankdata
from scipy.stats import t as t_dist

WILCOXON_EXACT_MAX_N = 14
SPEARMAN_EXACT_MAX_N = 8

TAILS = ("two", "greater", "less")


class DegenerateDataError(ValueError):
    """Raised when a test's input has no usable variation."""


@dataclass
class TestResult:
    statistic: float
    p: float
    tail: str = "two"
    effect: tuple = None  # (kind, value)
    n: int = 0
    extra: dict = field(default_factory=dict)


def _check_tail(tail):
    if tail not in TAILS:
        raise ValueError(f"tail must be one of {TAILS}, got {tail!r}")


# ---------------------------------------------------------------------------
# normality


def shapiro_wilk(x) -> TestResult:
    """Shapiro-Wilk normality test (Royston's AS R94 approximation), n in 3..50."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = len(x)
    if not 3 <= n <= 50:
        raise ValueError(f"shapiro_wilk supports n in [3, 50], got {n}")
    if np.ptp(x) == 0:
        raise DegenerateDataError("constant sample: W is undefined")

    m = norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    mm = float(m @ m)
    ss = float(np.sum((x - x.mean()) ** 2))

    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
        w = float((a @ x) ** 2 / ss)
        p = 6.0 / math.pi * (math.asin(math.sqrt(min(w, 1.0)))
                             - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return TestResult(statistic=w, p=p, tail="two", n=n)

    c = m / math.sqrt(mm)
    u = 1.0 / math.sqrt(n)
    a_n = np.polyval([-2.706056, 4.434685, -2.071190, -0.147981, 0.221157,
                      c[-1]], u)
    if n > 5:
        a_n1 = np.polyval([-3.582633, 5.682633, -1.752461, -0.293762,
                           0.042981, c[-2]], u)
        phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / \
            (1 - 2 * a_n ** 2 - 2 * a_n1 ** 2)
        a = m / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
        a[-2], a[1] = a_n1, -a_n1
    else:
        phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n ** 2)
        a = m / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n

    w = float((a @ x) ** 2 / ss)
    w = min(w, 1.0 - 1e-12)
    if n <= 11:
        g = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n ** 2 - 0.0006714 * n ** 3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n ** 2
                         - 0.0020322 * n ** 3)
        z = (-math.log(g - math.log(1 - w)) - mu) / sigma
    else:
        ln = math.log(n)
        mu = -1.5861 - 0.31082 * ln - 0.083751 * ln ** 2 + 0.0038915 * ln ** 3
        sigma = math.exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln ** 2)
        z = (math.log(1 - w) - mu) / sigma
    return TestResult(statistic=w, p=float(norm.sf(z)), tail="two", n=n)


# ---------------------------------------------------------------------------
# paired tests


def paired_t(x, y, tail="two") -> TestResult:
    """Paired t-test on x - y with Cohen's d = mean(diff) / sd(diff)."""
    _check_tail(tail)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 3:
        raise ValueError("paired_t needs two equal-length samples, n >= 3")
    d = x - y
    n = len(d)
    sd = d.std(ddof=1)
    if sd == 0:
        if np.all(d == 0):
            # identical samples: no evidence either way
            return TestResult(statistic=0.0, p=1.0, tail=tail,
                              effect=("cohen_d", 0.0), n=n)
        raise DegenerateDataError("zero-variance nonzero differences")
    t = d.mean() / (sd / math.sqrt(n))
    if tail == "two":
        p = 2 * t_dist.sf(abs(t), n - 1)
    elif tail == "greater":
        p = t_dist.sf(t, n - 1)
    else:
        p = t_dist.cdf(t, n - 1)
    return TestResult(statistic=float(t), p=float(p), tail=tail,
                      effect=("cohen_d", float(d.mean() / sd)), n=n)


def _signed_midranks2(d):
    """Doubled mid-ranks (exact integers) of |d| and the sign mask."""
    ranks2 = np.rint(2 * rankdata(np.abs(d))).astype(np.int64)
    return ranks2, d > 0


def wilcoxon_signed_rank(x, y, tail="two") -> TestResult:
    """Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped (count reported in ``extra``). For
    n <= 14 the p-value is exact over all 2^n sign assignments; above that a
    normal approximation with tie-corrected variance is used. The statistic
    is W+ (sum of positive-difference ranks); the effect size is the
    matched-pairs rank-biserial correlation (W+ - W-) / (W+ + W-).
    """
    _check_tail(tail)
    d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    n_zero = int(np.sum(d == 0))
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise DegenerateDataError("all differences are zero")
    ranks2, pos = _signed_midranks2(d)
    w_plus2 = int(ranks2[pos].sum())
    total2 = int(ranks2.sum())
    w_plus = w_plus2 / 2.0
    w_minus = (total2 - w_plus2) / 2.0
    r_rb = (w_plus - w_minus) / (w_plus + w_minus)

    if n <= WILCOXON_EXACT_MAX_N:
        sums = np.zeros(1, dtype=np.int64)
        for r in ranks2:
            sums = np.concatenate([sums, sums + r])
        total_assignments = sums.size
        p_ge = int(np.sum(sums >= w_plus2)) / total_assignments
        p_le = int(np.sum(sums <= w_plus2)) / total_assignments
        if tail == "two":
            p = min(1.0, 2 * min(p_ge, p_le))
        elif tail == "greater":
            p = p_ge
        else:
            p = p_le
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, counts = np.unique(ranks2, return_counts=True)
        var -= float(np.sum(counts ** 3 - counts)) / 48.0
        z = (w_plus - mu) / math.sqrt(var)
        if tail == "two":
            p = 2 * norm.sf(abs(z))
        elif tail == "greater":
            p = norm.sf(z)
        else:
            p = norm.cdf(z)
        p = min(p, 1.0)

    return TestResult(statistic=w_plus, p=float(p), tail=tail,
                      effect=("rank_biserial", float(r_rb)), n=n,
                      extra={"n_zero_dropped": n_zero, "w_minus": w_minus})


# ---------------------------------------------------------------------------
# correlation

_PERM_CACHE = {}


def _perm_indices(n):
    """All permutations of range(n) as an (n!, n) index array (cached)."""
    if n not in _PERM_CACHE:
        _PERM_CACHE[n] = np.array(list(itertools.permutations(range(n))),
                                  dtype=np.intp)
    return _PERM_CACHE[n]


def spearman(x, y, tail="two") -> TestResult:
    """Spearman rank correlation on mid-ranks.

    Exact permutation p-value (full n! enumeration, integer comparisons) for
    n <= 8; t approximation above.
    """
    _check_tail(tail)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 4:
        raise ValueError("spearman needs two equal-length samples, n >= 4")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateDataError("constant input has no rank correlation")
    n = len(x)
    rx = rankdata(x)
    ry = rankdata(y)
    rho = float(np.corrcoef(rx, ry)[0, 1])

    if n <= SPEARMAN_EXACT_MAX_N:
        rx2 = np.rint(2 * rx).astype(np.int64)
        ry2 = np.rint(2 * ry).astype(np.int64)
        # |rho| ordering is equivalent to |n*S - T| ordering with
        # S = sum(rx2 * perm(ry2)), T = sum(rx2) * sum(ry2): all integers.
        t_const = int(rx2.sum()) * int(ry2.sum())
        perms = _perm_indices(n)
        s = ry2[perms] @ rx2
        s_obs = int(rx2 @ ry2)
        dev = n * s - t_const
        dev_obs = n * s_obs - t_const
        n_perm = len(perms)
        if tail == "two":
            p = int(np.sum(np.abs(dev) >= abs(dev_obs))) / n_perm
        elif tail == "greater":
            p = int(np.sum(dev >= dev_obs)) / n_perm
        else:
            p = int(np.sum(dev <= dev_obs)) / n_perm
    else:
        if abs(rho) >= 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1 - rho * rho))
            if tail == "two":
                p = 2 * t_dist.sf(abs(t), n - 2)
            elif tail == "greater":
                p = t_dist.sf(t, n - 2)
            else:
                p = t_dist.cdf(t, n - 2)
    return TestResult(statistic=rho, p=float(p), tail=tail, n=n)


# ---------------------------------------------------------------------------
# reliability


def cronbach_alpha(items: np.ndarray) -> float:
    """Cronbach's alpha for an items x observations matrix."""
    items = np.asarray(items, dtype=np.float64)
    if items.ndim != 2 or items.shape[0] < 2 or items.shape[1] < 2:
        raise ValueError("need a (k >= 2 items) x (n >= 2 observations) matrix")
    k = items.shape[0]
    item_vars = items.var(axis=1, ddof=1)
    total_var = items.sum(axis=0).var(ddof=1)
    if total_var == 0:
        raise DegenerateDataError("zero total variance")
    return float(k / (k - 1) * (1 - item_vars.sum() / total_var))


# ---------------------------------------------------------------------------
# mixed ANOVA


def mixed_anova_2x2(cond_a, cond_b, groups) -> TestResult:
    """Interaction test of a 2 (within) x 2 (between) mixed-design ANOVA.

    ``cond_a``/``cond_b`` are the two within-subject condition values;
    ``groups`` labels each subject with one of two groups. The interaction F
    has df (1, N-2) and equals the squared pooled two-sample t on the
    per-subject difference scores. Partial eta squared is reported.
    """
    a = np.asarray(cond_a, dtype=np.float64)
    b = np.asarray(cond_b, dtype=np.float64)
    groups = np.asarray(groups)
    if not (a.shape == b.shape == groups.shape) or a.ndim != 1:
        raise ValueError("conditions and groups must be equal-length vectors")
    labels = np.unique(groups)
    if len(labels) != 2:
        raise ValueError(f"need exactly 2 groups, got {len(labels)}")
    d = b - a
    d1 = d[groups == labels[0]]
    d2 = d[groups == labels[1]]
    if len(d1) < 2 or len(d2) < 2:
        raise ValueError("each group needs at least 2 subjects")
    n = len(d)
    ss_err = float(np.sum((d1 - d1.mean()) ** 2) + np.sum((d2 - d2.mean()) ** 2)) / 2.0
    ss_inter = (d1.mean() - d2.mean()) ** 2 / (2 * (1 / len(d1) + 1 / len(d2)))
    if ss_inter == 0:
        f_stat, p = 0.0, 1.0
    elif ss_err == 0:
        f_stat, p = math.inf, 0.0
    else:
        f_stat = ss_inter / (ss_err / (n - 2))
        p = float(f_dist.sf(f_stat, 1, n - 2))
    eta = ss_inter / (ss_inter + ss_err) if (ss_inter + ss_err) > 0 else 0.0
    return TestResult(statistic=float(f_stat), p=p, tail="two",
                      effect=("partial_eta_sq", float(eta)), n=n,
                      extra={"df": (1, n - 2)})


def bonferroni(pvals) -> np.ndarray:
    """Bonferroni adjustment: p_adj = min(1, m * p)."""
    pvals = np.asarray(pvals, dtype=np.float64)
    return np.minimum(1.0, len(pvals) * pvals)
