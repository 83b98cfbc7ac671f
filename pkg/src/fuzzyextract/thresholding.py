"""Global automatic thresholding from a 256-bin intensity histogram.

Sixteen classic methods, one per row of the comparison grid:

- Default      tail-trimmed iterative intermeans (bins 0 and 255 zeroed
               before iterating; Ridler & Calvard 1978 variant)
- Huang        fuzzy-measure minimization, Shannon entropy of membership
               (Huang & Wang 1995), exhaustive scan
- Intermodes   smooth the histogram with a 3-point mean until exactly two
               local maxima remain, return their midpoint
               (Prewitt & Mendelsohn 1966)
- IsoData      iterate t <- round((mean_below + mean_above) / 2)
               (Ridler & Calvard 1978)
- Li           minimum cross entropy (Li & Lee 1993), exhaustive scan of the
               criterion on 1-based gray levels
- MaxEntropy   maximize the sum of class Shannon entropies
               (Kapur, Sahoo & Wong 1985), natural log, 0*log0 := 0
- Mean         floor of the mean gray level (Glasbey 1993)
- MinError     minimize the Kittler & Illingworth (1986) criterion J(t) over
               thresholds where both classes are non-empty with positive
               variance
- Minimum      like Intermodes but return the lowest valley bin between the
               two modes
- Moments      Tsai (1985) moment-preserving threshold: closed-form match of
               the first three moments, then the smallest t whose cumulative
               mass reaches the object fraction p0
- Otsu         maximize between-class variance (Otsu 1979)
- Percentile   Doyle (1962) p-tile with p = 0.5: minimize |P(<=t) - 0.5|
- RenyiEntropy Renyi-entropy maximizers at alpha 0.5, 1, 2 combined with the
               weighting rule of Sahoo, Wilkins & Yeager (1997)
- Shanbhag     minimize the absolute difference of Shanbhag's (1994) fuzzy
               information measures of the two classes
- Triangle     Zack's triangle method; the search side is the side of the
               histogram peak holding the greater pixel mass (ties: right)
- Yen          maximize the Yen, Chang & Chang (1995) correlation criterion

Conventions shared by every method: background = intensities <= t,
foreground = intensities > t; criteria are evaluated only where both classes
are non-empty; ties break toward the lowest t (criterion scans return the
first optimum).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from fuzzyextract.imaging import ensure_gray, round_half_up

N_BINS = 256

_LEVELS = np.arange(N_BINS, dtype=np.float64)


class DegenerateHistogramError(ValueError):
    """The histogram cannot support the requested class separation."""


class ThresholdMethod(Enum):
    """The 16 supported methods; values are the serialized row labels."""

    DEFAULT = "Default"
    HUANG = "Huang"
    INTERMODES = "Intermodes"
    ISODATA = "IsoData"
    LI = "Li"
    MAX_ENTROPY = "MaxEntropy"
    MEAN = "Mean"
    MIN_ERROR = "MinError"
    MINIMUM = "Minimum"
    MOMENTS = "Moments"
    OTSU = "Otsu"
    PERCENTILE = "Percentile"
    RENYI_ENTROPY = "RenyiEntropy"
    SHANBHAG = "Shanbhag"
    TRIANGLE = "Triangle"
    YEN = "Yen"

    @classmethod
    def from_name(cls, name: str) -> "ThresholdMethod":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown threshold method {name!r}")


# Methods that need two separable intensity populations; Mean and Percentile
# are defined even on a constant image.
CLASS_SEPARATION_METHODS = frozenset(ThresholdMethod) - {
    ThresholdMethod.MEAN,
    ThresholdMethod.PERCENTILE,
}


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome for one method: the threshold, convergence, or a failure note."""

    method: ThresholdMethod
    t: int | None
    converged: bool = True
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def __post_init__(self) -> None:
        if self.error is None:
            if self.t is None or not 0 <= self.t <= 255:
                raise ValueError(f"threshold {self.t} outside [0, 255]")


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin intensity counts of a gray image, as int64."""
    ensure_gray(img)
    return np.bincount(img.ravel(), minlength=N_BINS).astype(np.int64)


def apply_threshold(img: np.ndarray, t: int) -> np.ndarray:
    """Binarize: pixels strictly above t become 255, the rest 0."""
    ensure_gray(img)
    if not 0 <= int(t) <= 255:
        raise ValueError(f"threshold {t} outside [0, 255]")
    return np.where(img > t, 255, 0).astype(np.uint8)


def _check_histogram(hist: np.ndarray) -> np.ndarray:
    hist = np.asarray(hist)
    if hist.shape != (N_BINS,):
        raise ValueError(f"histogram must have {N_BINS} bins, got shape {hist.shape}")
    if np.any(hist < 0):
        raise ValueError("histogram counts must be non-negative")
    if hist.sum() <= 0:
        raise ValueError("histogram is empty")
    return hist.astype(np.int64)


def _populated(hist: np.ndarray) -> np.ndarray:
    return np.flatnonzero(hist)


def _split_valid(hist: np.ndarray) -> np.ndarray:
    """Boolean mask over t of splits where both classes hold pixels."""
    below = np.cumsum(hist)
    return (below > 0) & (below < hist.sum())


def _class_means(hist: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-threshold class weights and means (nan where a class is empty)."""
    h = hist.astype(np.float64)
    w0 = np.cumsum(h)
    m0 = np.cumsum(h * _LEVELS)
    w1 = w0[-1] - w0
    m1 = m0[-1] - m0
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = m1 / w1
    return w0, w1, mu0, mu1


def _first_argmax(values: np.ndarray, valid: np.ndarray) -> int:
    crit = np.where(valid, values, -np.inf)
    if not np.isfinite(crit).any():
        raise DegenerateHistogramError("no admissible threshold for this criterion")
    return int(np.argmax(crit))


def _first_argmin(values: np.ndarray, valid: np.ndarray) -> int:
    crit = np.where(valid, values, np.inf)
    if not np.isfinite(crit).any():
        raise DegenerateHistogramError("no admissible threshold for this criterion")
    return int(np.argmin(crit))


# ---------------------------------------------------------------------------
# Criterion-scan methods.
# ---------------------------------------------------------------------------


def _otsu(hist: np.ndarray) -> tuple[int, bool]:
    total = float(hist.sum())
    w0, w1, mu0, mu1 = _class_means(hist)
    valid = _split_valid(hist)
    with np.errstate(invalid="ignore"):
        crit = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
    return _first_argmax(crit, valid), True


def otsu_between_class_variance(hist: np.ndarray, t: int) -> float:
    """Otsu's criterion at a single split (exposed for inspection/testing)."""
    hist = _check_histogram(hist)
    total = float(hist.sum())
    w0, w1, mu0, mu1 = _class_means(hist)
    if not _split_valid(hist)[t]:
        raise ValueError(f"split {t} leaves an empty class")
    return float((w0[t] / total) * (w1[t] / total) * (mu0[t] - mu1[t]) ** 2)


def _kapur_criterion(hist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum of class Shannon entropies per threshold and its validity mask."""
    h = hist.astype(np.float64)
    p = h / h.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    p1 = np.cumsum(p)
    p2 = 1.0 - p1
    a = np.cumsum(plogp)
    b = a[-1] - a
    valid = _split_valid(hist)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_bg = np.log(p1) - a / p1
        h_fg = np.log(p2) - b / p2
    return h_bg + h_fg, valid


def _max_entropy(hist: np.ndarray) -> tuple[int, bool]:
    crit, valid = _kapur_criterion(hist)
    return _first_argmax(crit, valid), True


def _li(hist: np.ndarray) -> tuple[int, bool]:
    # Cross entropy evaluated on 1-based gray levels so a populated class
    # always has a strictly positive mean (the log is then defined at every
    # admissible split).
    h = hist.astype(np.float64)
    g = _LEVELS + 1.0
    a0 = np.cumsum(h * g)
    n0 = np.cumsum(h)
    a1 = a0[-1] - a0
    n1 = n0[-1] - n0
    valid = _split_valid(hist)
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = -a0 * np.log(a0 / n0) - a1 * np.log(a1 / n1)
    return _first_argmin(crit, valid), True


def _min_error(hist: np.ndarray) -> tuple[int, bool]:
    h = hist.astype(np.float64)
    total = h.sum()
    w0, w1, mu0, mu1 = _class_means(hist)
    m2 = np.cumsum(h * _LEVELS * _LEVELS)
    with np.errstate(divide="ignore", invalid="ignore"):
        var0 = m2 / w0 - mu0 * mu0
        var1 = (m2[-1] - m2) / w1 - mu1 * mu1
    valid = _split_valid(hist) & (var0 > 0) & (var1 > 0)
    p0 = w0 / total
    p1 = w1 / total
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = 1.0 + 2.0 * (p0 * np.log(np.sqrt(var0)) + p1 * np.log(np.sqrt(var1))) - 2.0 * (
            p0 * np.log(p0) + p1 * np.log(p1)
        )
    return _first_argmin(crit, valid), True


def _huang(hist: np.ndarray) -> tuple[int, bool]:
    populated = _populated(hist)
    spread = float(populated[-1] - populated[0])
    h = hist.astype(np.float64)
    _, _, mu0, mu1 = _class_means(hist)
    valid = _split_valid(hist)
    # Membership of level g under split t: 1 / (1 + |g - class mean| / spread).
    dist = np.where(
        _LEVELS[None, :] <= _LEVELS[:, None],
        np.abs(_LEVELS[None, :] - mu0[:, None]),
        np.abs(_LEVELS[None, :] - mu1[:, None]),
    )
    mu_x = 1.0 / (1.0 + dist / spread)
    with np.errstate(divide="ignore", invalid="ignore"):
        shannon = np.where(
            (mu_x > 0.0) & (mu_x < 1.0),
            -mu_x * np.log(mu_x) - (1.0 - mu_x) * np.log(1.0 - mu_x),
            0.0,
        )
    crit = shannon @ h
    return _first_argmin(crit, valid), True


def _shanbhag(hist: np.ndarray) -> tuple[int, bool]:
    h = hist.astype(np.float64)
    p = h / h.sum()
    p1 = np.cumsum(p)
    p2 = 1.0 - p1
    p1_prev = np.concatenate(([0.0], p1[:-1]))
    valid = _split_valid(hist)
    t_idx = _LEVELS[:, None]
    g_idx = _LEVELS[None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        term_b = 0.5 / p1
        arg_b = 1.0 - term_b[:, None] * p1_prev[None, :]
        mask_b = (g_idx <= t_idx) & valid[:, None]
        ent_b = -term_b * np.where(mask_b, p[None, :] * np.log(np.where(mask_b, arg_b, 1.0)), 0.0).sum(axis=1)

        term_f = 0.5 / p2
        arg_f = 1.0 - term_f[:, None] * p2[None, :]
        mask_f = (g_idx > t_idx) & valid[:, None]
        ent_f = -term_f * np.where(mask_f, p[None, :] * np.log(np.where(mask_f, arg_f, 1.0)), 0.0).sum(axis=1)

    crit = np.abs(ent_b - ent_f)
    return _first_argmin(crit, valid), True


def _yen(hist: np.ndarray) -> tuple[int, bool]:
    h = hist.astype(np.float64)
    p = h / h.sum()
    p1 = np.cumsum(p)
    p2 = 1.0 - p1
    s1 = np.cumsum(p * p)
    s2 = s1[-1] - s1
    valid = _split_valid(hist)
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = -np.log(s1 * s2) + 2.0 * np.log(p1 * p2)
    return _first_argmax(crit, valid), True


def _renyi_stage(hist: np.ndarray, alpha: float) -> int:
    """Lowest maximizer of the Renyi entropy sum of order alpha (1 = Kapur)."""
    if alpha == 1.0:
        crit, valid = _kapur_criterion(hist)
        return _first_argmax(crit, valid)
    h = hist.astype(np.float64)
    p = h / h.sum()
    p1 = np.cumsum(p)
    p2 = 1.0 - p1
    pa = np.cumsum(p**alpha)
    sa_bg = pa
    sa_fg = pa[-1] - pa
    valid = _split_valid(hist)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_bg = np.log(sa_bg / p1**alpha) / (1.0 - alpha)
        h_fg = np.log(sa_fg / p2**alpha) / (1.0 - alpha)
    return _first_argmax(h_bg + h_fg, valid)


def _renyi_combination(t_stars: tuple[int, int, int], p1: np.ndarray) -> int:
    """Weighted blend of the three sorted stage thresholds (Sahoo et al. 1997)."""
    t1, t2, t3 = sorted(t_stars)
    if abs(t1 - t2) <= 5:
        beta = (1, 2, 1) if abs(t2 - t3) <= 5 else (0, 1, 3)
    else:
        beta = (3, 1, 0) if abs(t2 - t3) <= 5 else (1, 2, 1)
    omega = p1[t3] - p1[t1]
    value = (
        t1 * (p1[t1] + 0.25 * omega * beta[0])
        + 0.25 * t2 * omega * beta[1]
        + t3 * ((1.0 - p1[t3]) + 0.25 * omega * beta[2])
    )
    return int(value)


def _renyi_entropy(hist: np.ndarray) -> tuple[int, bool]:
    stages = tuple(_renyi_stage(hist, alpha) for alpha in (0.5, 1.0, 2.0))
    p1 = np.cumsum(hist.astype(np.float64) / hist.sum())
    return _renyi_combination(stages, p1), True


# ---------------------------------------------------------------------------
# Closed-form and shape-based methods.
# ---------------------------------------------------------------------------


def _mean(hist: np.ndarray) -> tuple[int, bool]:
    h = hist.astype(np.float64)
    return int(np.floor((h @ _LEVELS) / h.sum())), True


def _percentile(hist: np.ndarray) -> tuple[int, bool]:
    p1 = np.cumsum(hist.astype(np.float64)) / float(hist.sum())
    return int(np.argmin(np.abs(p1 - 0.5))), True


def _moments(hist: np.ndarray) -> tuple[int, bool]:
    p = hist.astype(np.float64) / hist.sum()
    m1 = p @ _LEVELS
    m2 = p @ _LEVELS**2
    m3 = p @ _LEVELS**3
    cd = m2 - m1 * m1
    if cd <= 0:
        raise DegenerateHistogramError("zero intensity variance")
    c0 = (m1 * m3 - m2 * m2) / cd
    c1 = (m1 * m2 - m3) / cd
    disc = c1 * c1 - 4.0 * c0
    if disc <= 0:
        raise DegenerateHistogramError("moment system has no two-level solution")
    z0 = 0.5 * (-c1 - np.sqrt(disc))
    z1 = 0.5 * (-c1 + np.sqrt(disc))
    p0 = (z1 - m1) / (z1 - z0)
    # Smallest t whose cumulative mass reaches the object fraction p0.
    cum = np.cumsum(p)
    t = int(np.searchsorted(cum, p0, side="left"))
    return min(t, N_BINS - 1), True


def _triangle(hist: np.ndarray) -> tuple[int, bool]:
    populated = _populated(hist)
    first, last = int(populated[0]), int(populated[-1])
    peak = first + int(np.argmax(hist[first : last + 1]))
    mass_left = int(hist[first:peak].sum())
    mass_right = int(hist[peak + 1 : last + 1].sum())
    if mass_right >= mass_left:
        x1, y1 = peak, float(hist[peak])
        x2, y2 = last, float(hist[last])
        lo, hi = peak + 1, last
    else:
        x1, y1 = first, float(hist[first])
        x2, y2 = peak, float(hist[peak])
        lo, hi = first, peak - 1
    if hi < lo:
        raise DegenerateHistogramError("no bins between peak and tail")
    dx, dy = float(x2 - x1), float(y2 - y1)
    norm = float(np.hypot(dx, dy))
    ts = np.arange(lo, hi + 1, dtype=np.float64)
    dist = np.abs(dy * ts - dx * hist[lo : hi + 1].astype(np.float64) + x2 * y1 - y2 * x1) / norm
    return lo + int(np.argmax(dist)), True


# ---------------------------------------------------------------------------
# Iterative methods.
# ---------------------------------------------------------------------------

ISODATA_MAX_ITER = 100
BIMODAL_MAX_ITER = 10000


def _intermeans_iterate(hist: np.ndarray) -> tuple[int, bool]:
    """Fixed-point iteration t <- round((mean_below + mean_above) / 2)."""
    populated = _populated(hist)
    first, last = int(populated[0]), int(populated[-1])
    h = hist.astype(np.float64)
    w0 = np.cumsum(h)
    m0 = np.cumsum(h * _LEVELS)

    def _next(t: int) -> int:
        mu_below = m0[t] / w0[t]
        mu_above = (m0[-1] - m0[t]) / (w0[-1] - w0[t])
        return int(round_half_up((mu_below + mu_above) / 2.0))

    lo, hi = first, last - 1  # both classes non-empty on [first, last-1]
    t = int(np.clip(int(round_half_up(m0[-1] / w0[-1])), lo, hi))
    for _ in range(ISODATA_MAX_ITER):
        t_new = int(np.clip(_next(t), lo, hi))
        if t_new == t:
            return t, True
        t = t_new
    return t, False


def _isodata(hist: np.ndarray) -> tuple[int, bool]:
    return _intermeans_iterate(hist)


def _default(hist: np.ndarray) -> tuple[int, bool]:
    # Tail-trimmed intermeans: the extreme bins are ignored so saturated or
    # blanked-out pixels cannot drag the class means.
    trimmed = hist.copy()
    trimmed[0] = 0
    trimmed[N_BINS - 1] = 0
    if len(_populated(trimmed)) < 2:
        raise DegenerateHistogramError("histogram degenerate after tail trimming")
    return _intermeans_iterate(trimmed)


def _smooth_once(h: np.ndarray) -> np.ndarray:
    """3-point mean with zero padding outside the range."""
    return np.convolve(h, np.full(3, 1.0 / 3.0), mode="same")


def _local_maxima(h: np.ndarray) -> np.ndarray:
    """Indices of local maxima; a flat run counts once, at its left edge."""
    left = np.concatenate(([-np.inf], h[:-1]))
    right = np.concatenate((h[1:], [-np.inf]))
    return np.flatnonzero((h > left) & (h >= right))


def _smooth_to_bimodal(hist: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Smooth until exactly two maxima remain; at the cap keep the two tallest."""
    h = hist.astype(np.float64)
    for _ in range(BIMODAL_MAX_ITER):
        maxima = _local_maxima(h)
        if len(maxima) == 2:
            return h, maxima, True
        if len(maxima) < 2:
            raise DegenerateHistogramError("histogram never becomes bimodal under smoothing")
        h = _smooth_once(h)
    maxima = _local_maxima(h)
    order = np.argsort(-h[maxima], kind="stable")[:2]
    return h, np.sort(maxima[order]), False


def _intermodes(hist: np.ndarray) -> tuple[int, bool]:
    _, modes, converged = _smooth_to_bimodal(hist)
    return int((int(modes[0]) + int(modes[1])) // 2), converged


def _minimum(hist: np.ndarray) -> tuple[int, bool]:
    smoothed, modes, converged = _smooth_to_bimodal(hist)
    lo, hi = int(modes[0]), int(modes[1])
    if hi - lo < 2:
        raise DegenerateHistogramError("no valley between the two modes")
    valley = smoothed[lo + 1 : hi]
    return lo + 1 + int(np.argmin(valley)), converged


_DISPATCH = {
    ThresholdMethod.DEFAULT: _default,
    ThresholdMethod.HUANG: _huang,
    ThresholdMethod.INTERMODES: _intermodes,
    ThresholdMethod.ISODATA: _isodata,
    ThresholdMethod.LI: _li,
    ThresholdMethod.MAX_ENTROPY: _max_entropy,
    ThresholdMethod.MEAN: _mean,
    ThresholdMethod.MIN_ERROR: _min_error,
    ThresholdMethod.MINIMUM: _minimum,
    ThresholdMethod.MOMENTS: _moments,
    ThresholdMethod.OTSU: _otsu,
    ThresholdMethod.PERCENTILE: _percentile,
    ThresholdMethod.RENYI_ENTROPY: _renyi_entropy,
    ThresholdMethod.SHANBHAG: _shanbhag,
    ThresholdMethod.TRIANGLE: _triangle,
    ThresholdMethod.YEN: _yen,
}


def compute_threshold(hist: np.ndarray, method: ThresholdMethod) -> ThresholdResult:
    """Threshold a 256-bin histogram with the requested method.

    Raises :class:`DegenerateHistogramError` when a class-separation method
    is asked to split a histogram with a single populated bin (or no
    admissible split).  Iterative methods that hit their iteration cap return
    ``converged=False`` with the best iterate.
    """
    hist = _check_histogram(hist)
    if method in CLASS_SEPARATION_METHODS and len(_populated(hist)) < 2:
        raise DegenerateHistogramError("degenerate histogram: single populated bin")
    t, converged = _DISPATCH[method](hist)
    return ThresholdResult(method=method, t=int(t), converged=converged)


def threshold_all(img: np.ndarray) -> dict[ThresholdMethod, ThresholdResult]:
    """Run every method on the image histogram.

    Per-method degeneracy never aborts the map: failed entries carry the
    error message with ``t=None``.
    """
    hist = histogram(img)
    results: dict[ThresholdMethod, ThresholdResult] = {}
    for method in ThresholdMethod:
        try:
            results[method] = compute_threshold(hist, method)
        except DegenerateHistogramError as exc:
            results[method] = ThresholdResult(method=method, t=None, converged=False, error=str(exc))
    return results


def thresholds_to_csv(results: dict[ThresholdMethod, ThresholdResult]) -> str:
    """Serialize a threshold map as ``method,t,converged`` rows in enum order."""
    lines = ["method,t,converged"]
    for method in ThresholdMethod:
        res = results[method]
        t = "nan" if res.t is None else str(res.t)
        lines.append(f"{method.value},{t},{'true' if res.converged else 'false'}")
    return "\n".join(lines) + "\n"
