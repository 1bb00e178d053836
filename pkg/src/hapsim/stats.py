"""From-scratch statistical battery over scored session records.

Covers the analysis pipeline end to end: exact binomial tails for the
chance-level confidence argument, success-rate summaries, balanced
multi-factor ANOVA with pairwise interactions, and the non-parametric tests
(Shapiro-Wilk normality, Levene homogeneity, Mann-Whitney U with exact
enumeration for small samples).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from statistics import NormalDist

from .special import f_sf, normal_sf


class UnbalancedDesign(ValueError):
    """The factorial layout has unequal cell counts."""


class DegenerateSample(ValueError):
    """The sample carries no usable variation for the requested test."""


class MissingMethodCoverage(ValueError):
    """A comparison needs records from both rendering methods."""


# -- binomial ------------------------------------------------------------


def binom_tail(n: int, k: int, p: float) -> float:
    """Exact upper tail P(X >= k) for X ~ Binomial(n, p).

    Direct summation in log space; stable through n = 10,000.
    """
    if n < 0 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if k == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return _binom_sum(n, range(k, n + 1), p)


def binom_cdf(n: int, k: int, p: float) -> float:
    """Exact lower tail P(X <= k)."""
    if n < 0 or not -1 <= k <= n:
        raise ValueError(f"need -1 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if k < 0:
        return 0.0
    if k == n:
        return 1.0
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    return _binom_sum(n, range(0, k + 1), p)


def _binom_sum(n: int, ks, p: float) -> float:
    log_p = math.log(p)
    log_q = math.log1p(-p)
    logs = [
        math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * log_p + (n - j) * log_q
        for j in ks
    ]
    peak = max(logs)
    return min(1.0, math.exp(peak) * sum(math.exp(v - peak) for v in logs))


# -- summaries -----------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    task: str
    method: int
    n: int
    mean_pct: float
    variance: float
    std: float


def success_summary(records, task: str, method: int) -> SummaryRow:
    """Population-style mean/variance/std of success rates, in percent."""
    rates = [r.success_rate * 100.0 for r in records if r.task == task and r.method == method]
    if not rates:
        raise ValueError(f"no records for task={task!r} method={method}")
    n = len(rates)
    mean = sum(rates) / n
    var = sum((x - mean) ** 2 for x in rates) / n
    return SummaryRow(task=task, method=method, n=n, mean_pct=mean, variance=var, std=math.sqrt(var))


# -- ANOVA ---------------------------------------------------------------


@dataclass(frozen=True)
class AnovaRow:
    source: str
    ss: float
    df: int
    f_stat: float | None
    p_value: float | None


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[AnovaRow, ...]
    residual: AnovaRow
    total_ss: float

    def row(self, source: str) -> AnovaRow:
        for r in self.rows:
            if r.source == source:
                return r
        raise KeyError(source)

    def sources(self) -> list[str]:
        return [r.source for r in self.rows] + [self.residual.source]


def two_way_anova(observations, factors: tuple[str, ...], response: str) -> AnovaTable:
    """Balanced factorial ANOVA: main effects plus pairwise interactions.

    ``observations`` is a sequence of mappings holding the factor levels and
    a numeric response.  Higher-order interactions and replication are
    pooled into the residual, which is how a design analyzed over cell means
    ends up with a single residual degree of freedom.
    """
    obs = list(observations)
    if not obs:
        raise ValueError("no observations")
    if len(factors) < 2:
        raise ValueError("need at least two factors")

    levels = {f: sorted({str(o[f]) for o in obs}) for f in factors}
    cells: dict[tuple, list[float]] = {}
    for o in obs:
        key = tuple(str(o[f]) for f in factors)
        cells.setdefault(key, []).append(float(o[response]))
    expected_cells = 1
    for f in factors:
        expected_cells *= len(levels[f])
    counts = {len(v) for v in cells.values()}
    if len(cells) != expected_cells or len(counts) != 1:
        raise UnbalancedDesign(
            f"expected {expected_cells} equally filled cells, got {len(cells)} with counts {sorted(counts)}"
        )

    values = [float(o[response]) for o in obs]
    n_total = len(values)
    grand = sum(values) / n_total
    total_ss = sum((v - grand) ** 2 for v in values)

    def group_means(group_factors: tuple[str, ...]) -> dict[tuple, tuple[float, int]]:
        acc: dict[tuple, list[float]] = {}
        for o in obs:
            key = tuple(str(o[f]) for f in group_factors)
            acc.setdefault(key, []).append(float(o[response]))
        return {k: (sum(v) / len(v), len(v)) for k, v in acc.items()}

    main_effect: dict[str, dict[tuple, float]] = {}
    rows: list[AnovaRow] = []
    for f in factors:
        means = group_means((f,))
        main_effect[f] = {k: m - grand for k, (m, _) in means.items()}
        ss = sum(cnt * (m - grand) ** 2 for m, cnt in means.values())
        rows.append(AnovaRow(source=f, ss=ss, df=len(levels[f]) - 1, f_stat=None, p_value=None))

    for fa, fb in itertools.combinations(factors, 2):
        means = group_means((fa, fb))
        ss = 0.0
        for (la, lb), (m, cnt) in means.items():
            effect = m - grand - main_effect[fa][(la,)] - main_effect[fb][(lb,)]
            ss += cnt * effect**2
        df = (len(levels[fa]) - 1) * (len(levels[fb]) - 1)
        rows.append(AnovaRow(source=f"{fa}:{fb}", ss=ss, df=df, f_stat=None, p_value=None))

    model_ss = sum(r.ss for r in rows)
    model_df = sum(r.df for r in rows)
    resid_ss = total_ss - model_ss
    resid_df = n_total - 1 - model_df
    if resid_df <= 0:
        raise UnbalancedDesign("no residual degrees of freedom for this layout")
    resid_ms = resid_ss / resid_df

    finished = []
    for r in rows:
        if resid_ms <= 0.0 or r.df == 0:
            f_stat = p = None
        else:
            f_stat = (r.ss / r.df) / resid_ms
            p = f_sf(f_stat, r.df, resid_df)
        finished.append(AnovaRow(r.source, r.ss, r.df, f_stat, p))
    residual = AnovaRow("Residual", resid_ss, resid_df, None, None)
    return AnovaTable(rows=tuple(finished), residual=residual, total_ss=total_ss)


# -- rank tests ----------------------------------------------------------


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n1: int
    n2: int = 0
    tie_corrected: bool = False
    method: str = ""


def _midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


EXACT_MWU_LIMIT = 12


def mann_whitney_u(x, y) -> TestResult:
    """Two-sided Mann-Whitney U test; U is reported for the first sample.

    Midranks handle ties.  For n1 + n2 <= 12 the p-value is computed exactly
    by enumerating every assignment of the pooled ranks; larger samples use
    the tie-corrected normal approximation with continuity correction.
    """
    x = list(x)
    y = list(y)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    ranks = _midranks(x + y)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0

    if n1 + n2 <= EXACT_MWU_LIMIT:
        # permutation null: every choice of which pooled ranks belong to x
        observed = abs(u1 - mu)
        hits = 0
        total = 0
        for combo in itertools.combinations(range(n1 + n2), n1):
            u = sum(ranks[i] for i in combo) - n1 * (n1 + 1) / 2.0
            total += 1
            if abs(u - mu) >= observed - 1e-9:
                hits += 1
        return TestResult(
            statistic=u1,
            p_value=hits / total,
            n1=n1,
            n2=n2,
            tie_corrected=len(set(ranks)) != len(ranks),
            method="exact",
        )

    n = n1 + n2
    tie_counts: dict[float, int] = {}
    for r in ranks:
        tie_counts[r] = tie_counts.get(r, 0) + 1
    tie_term = sum(c**3 - c for c in tie_counts.values())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return TestResult(u1, 1.0, n1, n2, tie_corrected=True, method="normal")
    z = (abs(u1 - mu) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * normal_sf(max(z, 0.0)))
    return TestResult(
        statistic=u1,
        p_value=p,
        n1=n1,
        n2=n2,
        tie_corrected=tie_term > 0,
        method="normal",
    )


# -- normality / homogeneity ----------------------------------------------


def shapiro_wilk(x) -> TestResult:
    """Shapiro-Wilk W and p via Royston's polynomial approximation.

    Weights come from the normalized expected normal order statistics with
    the two end corrections; the p-value uses the log-normalizing transforms
    for 4 <= n <= 11 and n >= 12, and the exact arcsine form for n = 3.
    """
    data = sorted(float(v) for v in x)
    n = len(data)
    if n < 3:
        raise ValueError("need at least 3 observations")
    if n > 5000:
        raise ValueError("sample too large for this approximation (n > 5000)")
    if data[0] == data[-1]:
        raise DegenerateSample("constant sample")

    nd = NormalDist()
    m = [nd.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    msq = sum(v * v for v in m)
    a = [0.0] * n
    if n == 3:
        a[0], a[2] = -math.sqrt(0.5), math.sqrt(0.5)
    else:
        u = 1.0 / math.sqrt(n)
        c_last = m[-1] / math.sqrt(msq)
        an = (((((-2.706056 * u + 4.434685) * u - 2.071190) * u - 0.147981) * u + 0.221157) * u) + c_last
        if n > 5:
            c_last2 = m[-2] / math.sqrt(msq)
            an1 = (((((-3.582633 * u + 5.682633) * u - 1.752461) * u - 0.293762) * u + 0.042981) * u) + c_last2
            phi = (msq - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * an**2 - 2 * an1**2)
            for i in range(2, n - 2):
                a[i] = m[i] / math.sqrt(phi)
            a[-2], a[1] = an1, -an1
        else:
            phi = (msq - 2 * m[-1] ** 2) / (1 - 2 * an**2)
            for i in range(1, n - 1):
                a[i] = m[i] / math.sqrt(phi)
        a[-1], a[0] = an, -an

    mean = sum(data) / n
    ssq = sum((v - mean) ** 2 for v in data)
    if ssq == 0.0:
        raise DegenerateSample("constant sample")
    w = sum(ai * xi for ai, xi in zip(a, data)) ** 2 / ssq
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
    elif n <= 11:
        g = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        if 1.0 - w >= math.exp(g):
            p = 0.0
        else:
            z = (-math.log(g - math.log(1.0 - w)) - mu) / sigma
            p = normal_sf(z)
    else:
        ln_n = math.log(n)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)
        z = (math.log(1.0 - w) - mu) / sigma
        p = normal_sf(z)
    return TestResult(statistic=w, p_value=p, n1=n, method="shapiro-wilk")


def levene(groups, center: str = "mean") -> TestResult:
    """Levene homogeneity-of-variance test on absolute deviations.

    ``center`` picks the per-group reference: "mean" (the original form) or
    "median" (the robust variant).
    """
    groups = [list(map(float, g)) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(len(g) < 2 for g in groups):
        raise DegenerateSample("every group needs at least two observations")
    if center not in ("mean", "median"):
        raise ValueError(f"unknown center {center!r}")

    def middle(g: list[float]) -> float:
        if center == "mean":
            return sum(g) / len(g)
        s = sorted(g)
        h = len(s) // 2
        return s[h] if len(s) % 2 else (s[h - 1] + s[h]) / 2.0

    z = [[abs(v - middle(g)) for v in g] for g in groups]
    n_total = sum(len(g) for g in z)
    k = len(z)
    grand = sum(sum(g) for g in z) / n_total
    group_means = [sum(g) / len(g) for g in z]
    between = sum(len(g) * (m - grand) ** 2 for g, m in zip(z, group_means))
    within = sum(sum((v - m) ** 2 for v in g) for g, m in zip(z, group_means))
    if between == 0.0:
        return TestResult(0.0, 1.0, n1=n_total, n2=k, method=f"levene-{center}")
    if within == 0.0:
        raise DegenerateSample("zero within-group deviation spread")
    stat = (n_total - k) / (k - 1) * between / within
    return TestResult(
        statistic=stat,
        p_value=f_sf(stat, k - 1, n_total - k),
        n1=n_total,
        n2=k,
        method=f"levene-{center}",
    )


# -- pairwise / per-distance reporting ------------------------------------

ALPHA = 0.05
DISTANCE_GROUPS = (1, 2, 3)


@dataclass(frozen=True)
class PairComparison:
    task: str
    key: str  # pair label or "D=n"
    rate_method1: float
    rate_method2: float
    u_statistic: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class PairwiseReport:
    pairs: tuple[PairComparison, ...]
    distances: tuple[PairComparison, ...]


def _per_record_rates(records, task: str, method: int, key_of) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {}
    for r in records:
        if r.task != task or r.method != method:
            continue
        for key, (correct, total) in key_of(r).items():
            if total:
                out.setdefault(str(key), []).append(correct / total)
    return out


def pairwise_report(records) -> PairwiseReport:
    """Per-pair and per-distance success rates with method comparisons.

    Success rates are compared between methods with the Mann-Whitney U test
    for every designated pair and for the distance groups 1-3; differences
    at p < 0.05 are flagged.
    """
    methods = {r.method for r in records}
    if not {1, 2} <= methods:
        raise MissingMethodCoverage(f"need records for methods 1 and 2, have {sorted(methods)}")

    pairs: list[PairComparison] = []
    distances: list[PairComparison] = []
    tasks = sorted({r.task for r in records})
    for task in tasks:
        by_pair_1 = _per_record_rates(records, task, 1, lambda r: r.pair_tallies)
        by_pair_2 = _per_record_rates(records, task, 2, lambda r: r.pair_tallies)
        for key in sorted(set(by_pair_1) | set(by_pair_2)):
            x = by_pair_1.get(key, [])
            y = by_pair_2.get(key, [])
            if not x or not y:
                raise MissingMethodCoverage(f"pair {key} has data for only one method")
            res = mann_whitney_u(x, y)
            pairs.append(
                PairComparison(
                    task=task,
                    key=key,
                    rate_method1=sum(x) / len(x),
                    rate_method2=sum(y) / len(y),
                    u_statistic=res.statistic,
                    p_value=res.p_value,
                    significant=res.p_value < ALPHA,
                )
            )
        by_d_1 = _per_record_rates(records, task, 1, lambda r: r.distance_tallies)
        by_d_2 = _per_record_rates(records, task, 2, lambda r: r.distance_tallies)
        for d in DISTANCE_GROUPS:
            x = by_d_1.get(str(d), [])
            y = by_d_2.get(str(d), [])
            if not x or not y:
                raise MissingMethodCoverage(f"distance {d} has data for only one method")
            res = mann_whitney_u(x, y)
            distances.append(
                PairComparison(
                    task=task,
                    key=f"D={d}",
                    rate_method1=sum(x) / len(x),
                    rate_method2=sum(y) / len(y),
                    u_statistic=res.statistic,
                    p_value=res.p_value,
                    significant=res.p_value < ALPHA,
                )
            )
    return PairwiseReport(pairs=tuple(pairs), distances=tuple(distances))
