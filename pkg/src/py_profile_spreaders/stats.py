"""
Two-group significance testing of the motivational features.

Each feature is compared between fake- and real-news spreaders with Welch's
unequal-variance t-test. The statistic is always fake minus real, and p-values
are two-tailed, evaluated through the regularized incomplete beta function.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import fsspec
import numpy as np

from .corpus import SpreaderClass
from .features import (
    FEATURE_DISPLAY_NAMES,
    FEATURE_NAMES,
    LabeledFeatureRow,
    feature_columns,
)

logger = logging.getLogger(__name__)

STAR_ALPHA = 0.05
DOUBLE_STAR_ALPHA = 0.005

CF_TOLERANCE = 1e-12
CF_MAX_ITERATIONS = 300
_TINY = 1e-300
# Above this argument the Stirling series is exact to double precision.
STIRLING_MIN = 1e3

REPORT_HEADER = ["feature", "t", "df", "p", "marker", "n_fake", "n_real"]


class DegenerateSampleError(ValueError):
    """Raised when a Welch test cannot be computed for the given samples."""


class Marker(str, Enum):
    NONE = "None"
    STAR = "Star"
    DOUBLE_STAR = "DoubleStar"

    @property
    def symbol(self) -> str:
        return {"None": "", "Star": "*", "DoubleStar": "**"}[self.value]

    @classmethod
    def for_p_value(cls, p: float) -> "Marker":
        if p < DOUBLE_STAR_ALPHA:
            return cls.DOUBLE_STAR
        if p < STAR_ALPHA:
            return cls.STAR
        return cls.NONE


@dataclass(frozen=True)
class TTestResult:
    feature_name: str
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    marker: Marker
    n_fake: int
    n_real: int
    mean_fake: float = math.nan
    mean_real: float = math.nan
    testable: bool = True
    reason: str = ""


def _sample_variance(x: np.ndarray) -> float:
    # Constant samples give exactly 0.
    if np.ptp(x) == 0:
        return 0.0
    return float(x.var(ddof=1))


def welch_t(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """
    Welch's t statistic of ``mean(a) - mean(b)`` and its Welch-Satterthwaite
    degrees of freedom. Sample variances use the n-1 denominator.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    n_a, n_b = x.size, y.size
    if n_a < 2 or n_b < 2:
        raise DegenerateSampleError(
            f"Each group needs at least 2 values (got {n_a} and {n_b})"
        )
    se_a = _sample_variance(x) / n_a
    se_b = _sample_variance(y) / n_b
    pooled = se_a + se_b
    if pooled == 0:
        raise DegenerateSampleError("Both groups have zero variance")
    t = float((x.mean() - y.mean()) / math.sqrt(pooled))
    df = float(pooled**2 / (se_a**2 / (n_a - 1) + se_b**2 / (n_b - 1)))
    return t, df


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOLERANCE:
            return h
    logger.warning(
        f"Incomplete beta continued fraction did not converge in "
        f"{CF_MAX_ITERATIONS} iterations (a={a}, b={b}, x={x})."
    )
    return h


def _stirling_correction(z: float) -> float:
    """``lgamma(z)`` minus its Stirling approximation, for z >= STIRLING_MIN."""
    z2 = z * z
    series = 1.0 / 1260.0 - 1.0 / (1680.0 * z2)
    series = 1.0 / 360.0 - series / z2
    return (1.0 / 12.0 - series / z2) / z


def _log_beta(a: float, b: float) -> float:
    small, big = min(a, b), max(a, b)
    if big < STIRLING_MIN or small >= STIRLING_MIN:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(big) - lgamma(big + small) without cancelling two huge terms.
    difference = (
        -(big - 0.5) * math.log1p(small / big)
        - small * math.log(big + small)
        + small
        + _stirling_correction(big)
        - _stirling_correction(big + small)
    )
    return math.lgamma(small) + difference


def regularized_incomplete_beta(
    a: float, b: float, x: float, y: Optional[float] = None
) -> float:
    """
    I_x(a, b) for a, b > 0 and x in [0, 1].

    ``y`` may carry ``1 - x`` computed without rounding when x is close to 1.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    if y is None:
        y = 1.0 - x
    log_x = math.log1p(-y) if x > 0.5 else math.log(x)
    log_y = math.log(y) if x > 0.5 else math.log1p(-x)
    front = math.exp(a * log_x + b * log_y - _log_beta(a, b))
    # The fraction converges fast only on this side of the mean; use symmetry otherwise.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, y) / b


def p_two_tailed(t: float, df: float) -> float:
    """Two-tailed Student-t p-value, ``2 * (1 - CDF(|t|; df))``."""
    if not math.isfinite(t):
        raise ValueError(f"t statistic must be finite, got {t}")
    if not df > 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0:
        return 1.0
    t2 = t * t
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))
    return min(1.0, max(0.0, p))


def _untestable(name: str, n_fake: int, n_real: int, reason: str) -> TTestResult:
    logger.warning(f"Feature '{name}' is untestable: {reason}")
    return TTestResult(
        feature_name=name,
        t_statistic=math.nan,
        degrees_of_freedom=math.nan,
        p_value=math.nan,
        marker=Marker.NONE,
        n_fake=n_fake,
        n_real=n_real,
        testable=False,
        reason=reason,
    )


def significance_table(rows: Sequence[LabeledFeatureRow]) -> List[TTestResult]:
    """
    One Welch test per feature in feature order, fake minus real.

    Masked values are left out per feature; a feature whose groups cannot be
    tested is returned flagged instead of raising.
    """
    results = []
    for index, name in enumerate(FEATURE_NAMES):
        columns = feature_columns(rows, index)
        fake, real = columns[SpreaderClass.FAKE], columns[SpreaderClass.REAL]
        n_fake, n_real = len(fake), len(real)
        if not fake or not real:
            results.append(
                _untestable(name, n_fake, n_real, "a group is empty after masking")
            )
            continue
        try:
            t, df = welch_t(fake, real)
        except DegenerateSampleError as e:
            results.append(_untestable(name, n_fake, n_real, str(e)))
            continue
        p = p_two_tailed(t, df)
        results.append(
            TTestResult(
                feature_name=name,
                t_statistic=t,
                degrees_of_freedom=df,
                p_value=p,
                marker=Marker.for_p_value(p),
                n_fake=n_fake,
                n_real=n_real,
                mean_fake=math.fsum(fake) / n_fake,
                mean_real=math.fsum(real) / n_real,
            )
        )
    return results


def write_report_csv(results: Iterable[TTestResult], uri: str) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in results:
        writer.writerow(
            [
                r.feature_name,
                repr(r.t_statistic),
                repr(r.degrees_of_freedom),
                repr(r.p_value),
                r.marker.value,
                r.n_fake,
                r.n_real,
            ]
        )
    with fsspec.open(uri, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())


def format_report(results: Sequence[TTestResult]) -> str:
    """Aligned plain-text table: one row per feature, t suffixed by its marker."""
    display = dict(zip(FEATURE_NAMES, FEATURE_DISPLAY_NAMES))
    header = [
        "Feature Name",
        "t-statistic",
        "p-value",
        "mean fake",
        "mean real",
        "n fake",
        "n real",
    ]
    body = []
    for r in results:
        if r.testable:
            t_cell = f"{r.t_statistic:.2f}{r.marker.symbol}"
            p_cell = f"{r.p_value:.3g}"
            means = [f"{r.mean_fake:.4g}", f"{r.mean_real:.4g}"]
        else:
            t_cell, p_cell, means = "untestable", r.reason, ["-", "-"]
        body.append(
            [
                display.get(r.feature_name, r.feature_name),
                t_cell,
                p_cell,
                *means,
                str(r.n_fake),
                str(r.n_real),
            ]
        )
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]

    def render(cells: List[str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = [cell.rjust(width) for cell, width in zip(cells[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    rule = "-" * len(render(header))
    lines = [render(header), rule, *(render(row) for row in body), rule]
    lines.append(
        "** p-value < 0.005, * p-value < 0.05 "
        "(two-tailed Welch t-test, fake - real)"
    )
    return "\n".join(lines) + "\n"
