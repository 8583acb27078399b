"""Macro indicator ingestion, monthly alignment, and simple OLS with
significance statistics.

The fit is the closed-form simple regression y = alpha + beta x:

    beta  = Sxy / Sxx          alpha = ybar - beta * xbar
    R^2   = 1 - SSR / SST      se_beta = sqrt(SSR / (n-2) / Sxx)

Two-sided p-values come from the Student-t distribution with n-2 degrees of
freedom, evaluated through the regularized incomplete beta function
I_x(a, b) (continued-fraction expansion), so no statistics package is needed
at run time.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MacroSeries:
    indicator: str
    observations: tuple[tuple[date, float], ...]


@dataclass(frozen=True)
class RegressionResult:
    indicator: str
    aspect: str
    lead: int
    n: int
    alpha: float
    beta: float
    se_alpha: float
    se_beta: float
    t_beta: float
    p_beta: float
    r_squared: float


def load_macro_csv(path: str | Path, indicator: str | None = None) -> MacroSeries:
    """CSV with header ``date,value``; ISO dates, finite decimal values.
    Rows are sorted; duplicate dates are fatal."""
    path = Path(path)
    if indicator is None:
        indicator = path.stem
    observations: list[tuple[date, float]] = []
    seen: set[date] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "value"]:
            raise ValueError(f"{path}: expected header 'date,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"{path} line {lineno}: expected 2 fields, got {len(row)}")
            try:
                day = date.fromisoformat(row[0].strip())
                value = float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path} line {lineno}: {exc}") from None
            if not math.isfinite(value):
                raise ValueError(f"{path} line {lineno}: non-finite value {row[1]!r}")
            if day in seen:
                raise ValueError(f"{path}: duplicate date {day.isoformat()}")
            seen.add(day)
            observations.append((day, value))
    observations.sort(key=lambda obs: obs[0])
    return MacroSeries(indicator=indicator, observations=tuple(observations))


def aggregate_monthly(series: MacroSeries) -> MacroSeries:
    """One observation per calendar month: the arithmetic mean of that month's
    values, dated first-of-month."""
    groups: dict[tuple[int, int], list[float]] = {}
    for day, value in series.observations:
        groups.setdefault((day.year, day.month), []).append(value)
    monthly = [
        (date(year, month, 1), sum(values) / len(values))
        for (year, month), values in sorted(groups.items())
    ]
    return MacroSeries(indicator=series.indicator, observations=tuple(monthly))


def _month_index(month: str) -> int:
    year, mon = month.split("-")
    return int(year) * 12 + (int(mon) - 1)


def align(
    sentiment: Sequence[tuple[str, float]],
    macro: Sequence[tuple[str, float]],
    lead: int = 0,
) -> list[tuple[float, float]]:
    """Pair sentiment at month m with the macro value ``lead`` months later.
    Months are YYYY-MM strings; the join is inner and ordered by month."""
    if lead < 0:
        raise ValueError("lead must be >= 0")
    macro_by_index = {_month_index(month): value for month, value in macro}
    pairs = []
    for month, x in sorted(sentiment, key=lambda item: item[0]):
        y = macro_by_index.get(_month_index(month) + lead)
        if y is not None:
            pairs.append((x, y))
    if len(pairs) < 3:
        raise ValueError(
            f"insufficient overlap: {len(pairs)} aligned months, need at least 3"
        )
    return pairs


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only left of the mean.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for T ~ Student-t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if t == 0.0:
        return 1.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def student_t_cdf(t: float, df: int) -> float:
    half_p = 0.5 * student_t_two_sided_p(t, df)
    return 1.0 - half_p if t >= 0 else half_p


def ols_fit(
    pairs: Sequence[tuple[float, float]],
    *,
    indicator: str = "",
    aspect: str = "",
    lead: int = 0,
) -> RegressionResult:
    """Closed-form simple OLS with standard errors and a two-sided t-test on
    the slope. A constant response yields R^2 = 0 with a warning; a constant
    regressor is an error."""
    n = len(pairs)
    if n < 3:
        raise ValueError(f"need at least 3 pairs, got {n}")
    x = np.asarray([p[0] for p in pairs], dtype=np.float64)
    y = np.asarray([p[1] for p in pairs], dtype=np.float64)
    xbar = float(x.mean())
    ybar = float(y.mean())
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("degenerate regressor: x has zero variance")
    sxy = float(((x - xbar) * (y - ybar)).sum())
    beta = sxy / sxx
    alpha = ybar - beta * xbar
    resid = y - (alpha + beta * x)
    ssr = float((resid**2).sum())
    sst = float(((y - ybar) ** 2).sum())
    if sst == 0.0:
        log.warning("degenerate response: y is constant, reporting r_squared = 0")
        r_squared = 0.0
    else:
        r_squared = 1.0 - ssr / sst
    sigma2 = ssr / (n - 2)
    se_beta = math.sqrt(sigma2 / sxx)
    se_alpha = math.sqrt(sigma2 * (1.0 / n + xbar * xbar / sxx))
    if se_beta > 0.0:
        t_beta = beta / se_beta
        p_beta = student_t_two_sided_p(t_beta, n - 2)
    else:
        # Exact fit: the slope test is degenerate.
        t_beta = math.inf if beta != 0.0 else 0.0
        p_beta = 0.0 if beta != 0.0 else 1.0
    return RegressionResult(
        indicator=indicator,
        aspect=aspect,
        lead=lead,
        n=n,
        alpha=alpha,
        beta=beta,
        se_alpha=se_alpha,
        se_beta=se_beta,
        t_beta=t_beta,
        p_beta=p_beta,
        r_squared=max(0.0, min(1.0, r_squared)),
    )


_REPORT_FIELDS = (
    "indicator", "aspect", "lead", "n", "alpha", "beta",
    "se_beta", "t_beta", "p_beta", "r_squared",
)


def report_records(results: Sequence[RegressionResult]) -> list[dict]:
    return [{field: getattr(r, field) for field in _REPORT_FIELDS} for r in results]


def report_json(results: Sequence[RegressionResult]) -> str:
    return json.dumps(report_records(results), indent=2) + "\n"


def format_report_table(results: Sequence[RegressionResult]) -> str:
    """Plain-text OLS summary, one row per (indicator, aspect) fit."""
    header = (
        f"{'indicator':<16} {'aspect':<12} {'lead':>4} {'n':>4} "
        f"{'alpha':>10} {'beta':>10} {'se_beta':>10} {'t':>8} {'p':>10} {'R2':>8}"
    )
    lines = [header, "-" * len(header)]
    for r in results:
        lines.append(
            f"{r.indicator:<16} {r.aspect:<12} {r.lead:>4} {r.n:>4} "
            f"{r.alpha:>10.4f} {r.beta:>10.4f} {r.se_beta:>10.4f} "
            f"{r.t_beta:>8.3f} {r.p_beta:>10.3e} {r.r_squared:>8.4f}"
        )
    return "\n".join(lines) + "\n"


def plot_fit_svg(
    pairs: Sequence[tuple[float, float]], result: RegressionResult, path: str | Path
) -> None:
    """Scatter of the aligned pairs with the fitted line, written as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(x, y, s=18, alpha=0.8)
    xs = np.linspace(min(x), max(x), 50)
    ax.plot(xs, result.alpha + result.beta * xs, color="crimson", linewidth=1.5)
    ax.set_xlabel(f"{result.aspect} sentiment")
    ax.set_ylabel(result.indicator)
    ax.set_title(
        f"{result.indicator} on {result.aspect} tone: "
        f"beta={result.beta:.3f}, R2={result.r_squared:.3f}, p={result.p_beta:.2e}"
    )
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
