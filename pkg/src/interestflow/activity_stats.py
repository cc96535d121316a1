"""Activity distributions, lifetimes and the fits drawn over them.

Power laws ``f(x) = a * x**b`` are fitted by weighted least squares on the
log-log histogram; lifetime distributions get a skew-normal fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .corpus_ingest import COMMENT, POST, Corpus, UserActivitySeries
from .errors import EmptyInput, InsufficientSupport, NonConvergence

DAY = 86400

MEASURES = (
    "posts_per_author",
    "comments_per_author",
    "subreddits_posted_per_author",
    "subreddits_commented_per_author",
    "posts_per_subreddit",
    "comments_per_subreddit",
)


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    scale: str = "logarithmic"

    def __post_init__(self):
        if len(self.counts) != max(len(self.bin_edges) - 1, 0):
            raise ValueError("counts must have one entry per bin")
        if len(self.bin_edges) > 1 and np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def centers(self) -> np.ndarray:
        lo, hi = self.bin_edges[:-1], self.bin_edges[1:]
        if self.scale == "logarithmic":
            return np.sqrt(lo * hi)
        return (lo + hi) / 2

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def density(self) -> np.ndarray:
        """Counts normalized to unit area."""
        total = self.total
        if total == 0:
            return np.zeros(len(self.counts))
        return self.counts / (total * self.widths)


def log_histogram(values, per_decade: int = 10) -> Histogram:
    """Histogram strictly positive values on logarithmic bins.

    Edges sit at ``10**(k / per_decade)`` for integer ``k``, so powers of ten
    are always edges and each integer value falls in a well-defined bin.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return Histogram(np.empty(0), np.empty(0, dtype=np.int64))
    if np.any(values <= 0):
        raise ValueError("logarithmic histogram needs strictly positive values")
    lo = math.floor(math.log10(values.min()) * per_decade + 1e-9)
    hi = math.floor(math.log10(values.max()) * per_decade + 1e-9) + 1
    edges = np.power(10.0, np.arange(lo, hi + 1) / per_decade)
    while edges[0] > values.min():
        lo -= 1
        edges = np.power(10.0, np.arange(lo, hi + 1) / per_decade)
    while edges[-1] <= values.max():
        hi += 1
        edges = np.power(10.0, np.arange(lo, hi + 1) / per_decade)
    # right-open bins everywhere: np.histogram closes the last bin, but the
    # last edge is above the maximum so it is never hit
    counts, _ = np.histogram(values, bins=edges)
    return Histogram(edges, counts.astype(np.int64), "logarithmic")


def linear_histogram(values, bin_width: float, start: float = 0.0) -> Histogram:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return Histogram(np.empty(0), np.empty(0, dtype=np.int64), "linear")
    n = int(math.floor((values.max() - start) / bin_width)) + 1
    edges = start + bin_width * np.arange(n + 1)
    if values.min() < start:
        raise ValueError("values below histogram start")
    counts, _ = np.histogram(values, bins=edges)
    return Histogram(edges, counts.astype(np.int64), "linear")


# --------------------------------------------------------------------------
# lifetimes


def post_lifetime(timestamps) -> int:
    """Seconds between the first and last comment on a post."""
    ts = np.asarray(timestamps)
    if ts.size == 0:
        raise EmptyInput("post has no comments")
    return int(ts.max() - ts.min())


def user_lifetime(series: UserActivitySeries, subreddit: str | None = None) -> int:
    """Seconds between a user's first and last comment, optionally on one subreddit."""
    scope = series.comments()
    if subreddit is not None:
        scope = scope.in_subreddit(subreddit)
    if len(scope) == 0:
        raise EmptyInput(f"{series.author} has no comments in scope")
    return int(scope.times.max() - scope.times.min())


def user_subreddit_lifetimes(corpus: Corpus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lifetime of every (author, subreddit) pair with at least one comment.

    Returns ``(author_codes, subreddit_codes, seconds)``.
    """
    mask = corpus.is_comment
    a = corpus.author[mask].astype(np.int64)
    s = corpus.subreddit[mask].astype(np.int64)
    t = corpus.time[mask]
    if t.size == 0:
        empty = np.empty(0, np.int64)
        return empty, empty, empty
    key = a * len(corpus.subreddits) + s
    order = np.lexsort((t, key))
    key, t = key[order], t[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    ends = np.r_[starts[1:], len(key)] - 1
    pair = key[starts]
    return pair // len(corpus.subreddits), pair % len(corpus.subreddits), t[ends] - t[starts]


def mean_user_lifetime_per_subreddit(corpus: Corpus) -> dict[str, float]:
    """Average user lifetime on each subreddit, in seconds."""
    _, subs, life = user_subreddit_lifetimes(corpus)
    if life.size == 0:
        return {}
    total = np.bincount(subs, weights=life, minlength=len(corpus.subreddits))
    users = np.bincount(subs, minlength=len(corpus.subreddits))
    return {corpus.subreddits[i]: total[i] / users[i] for i in np.flatnonzero(users)}


def post_lifetimes(corpus: Corpus) -> np.ndarray:
    first, last = corpus.post_index().first_last()
    return last - first


def mean_post_lifetime_per_subreddit(corpus: Corpus) -> dict[str, float]:
    """Average post lifetime on each subreddit, in seconds.

    A post belongs to the subreddit of its comments.
    """
    mask = corpus.is_comment
    post, sub, t = corpus.post[mask], corpus.subreddit[mask], corpus.time[mask]
    if t.size == 0:
        return {}
    n_posts = len(corpus.posts)
    first = np.full(n_posts, np.iinfo(np.int64).max)
    last = np.full(n_posts, np.iinfo(np.int64).min)
    np.minimum.at(first, post, t)
    np.maximum.at(last, post, t)
    post_sub = np.full(n_posts, -1)
    post_sub[post] = sub
    present = post_sub >= 0
    life = (last - first)[present]
    ps = post_sub[present]
    total = np.bincount(ps, weights=life, minlength=len(corpus.subreddits))
    count = np.bincount(ps, minlength=len(corpus.subreddits))
    return {corpus.subreddits[i]: total[i] / count[i] for i in np.flatnonzero(count)}


# --------------------------------------------------------------------------
# activity distributions


def activity_values(corpus: Corpus, measure: str) -> np.ndarray:
    """One positive value per entity that has any activity of the measured kind."""
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    kind = POST if measure.startswith(("posts", "subreddits_posted")) else COMMENT
    mask = corpus.kind == kind
    if measure.endswith("_per_subreddit"):
        counts = np.bincount(corpus.subreddit[mask], minlength=len(corpus.subreddits))
    elif measure.startswith("subreddits_"):
        pairs = np.unique(
            corpus.author[mask].astype(np.int64) * max(len(corpus.subreddits), 1) + corpus.subreddit[mask]
        )
        counts = np.bincount(pairs // max(len(corpus.subreddits), 1), minlength=len(corpus.authors))
    else:
        counts = np.bincount(corpus.author[mask], minlength=len(corpus.authors))
    return counts[counts > 0]


def activity_distribution(corpus: Corpus, measure: str, per_decade: int = 10) -> Histogram:
    return log_histogram(activity_values(corpus, measure), per_decade)


# --------------------------------------------------------------------------
# power-law fits


@dataclass(frozen=True)
class PowerLawFit:
    a: float
    b: float
    residual: float
    breakpoint: float | None = None

    def __call__(self, x):
        return self.a * np.power(x, self.b)


@dataclass(frozen=True)
class DoublePowerLawFit:
    """Two power-law segments joined at ``breakpoint``.

    ``residual`` is the summed weighted squared log residual of both
    segments; ``single_residual`` is that of the best single power law over
    the same points.
    """

    low: PowerLawFit
    high: PowerLawFit
    breakpoint: float
    residual: float
    single_residual: float
    tolerance: float = 0.5

    @property
    def improvement(self) -> float:
        if self.single_residual <= 0:
            return 0.0
        return (self.single_residual - self.residual) / self.single_residual

    @property
    def effectively_single(self) -> bool:
        return self.improvement < self.tolerance

    # mirror PowerLawFit for callers that only want the leading segment
    @property
    def a(self) -> float:
        return self.low.a

    @property
    def b(self) -> float:
        return self.low.b


def _loglog_points(hist: Histogram) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    keep = hist.counts > 0
    x = hist.centers[keep]
    y = hist.density()[keep]
    w = hist.counts[keep].astype(float)
    return x, y, w, np.flatnonzero(keep)


def fit_power_law_xy(x, y, weights=None) -> PowerLawFit:
    """Least-squares line through ``(log x, log y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InsufficientSupport("power-law fit needs strictly positive x and y")
    if x.size < 3:
        raise InsufficientSupport(f"need at least 3 points, got {x.size}")
    lx, ly = np.log(x), np.log(y)
    sw = np.sqrt(w)
    design = np.column_stack([np.ones_like(lx), lx]) * sw[:, None]
    coef, *_ = np.linalg.lstsq(design, ly * sw, rcond=None)
    resid = ly - coef[0] - coef[1] * lx
    return PowerLawFit(float(np.exp(coef[0])), float(coef[1]), float(np.sum(w * resid**2)))


def fit_power_law(hist: Histogram) -> PowerLawFit:
    """Fit the density of a histogram, weighting each bin by its count."""
    x, y, w, _ = _loglog_points(hist)
    if x.size < 3:
        raise InsufficientSupport(f"need at least 3 nonzero bins, got {x.size}")
    return fit_power_law_xy(x, y, w)


def fit_double_power_law_xy(x, y, weights=None, *, edges=None, tolerance: float = 0.5) -> DoublePowerLawFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if x.size < 6:
        raise InsufficientSupport(f"need at least 6 points, got {x.size}")
    order = np.argsort(x)
    x, y, w = x[order], y[order], w[order]
    single = fit_power_law_xy(x, y, w)
    best = None
    # each segment keeps at least 3 points so neither can fit exactly by construction
    for k in range(3, x.size - 2):
        low = fit_power_law_xy(x[:k], y[:k], w[:k])
        high = fit_power_law_xy(x[k:], y[k:], w[k:])
        total = low.residual + high.residual
        if best is None or total < best[0]:
            best = (total, k, low, high)
    total, k, low, high = best
    brk = float(edges[k]) if edges is not None else float(np.sqrt(x[k - 1] * x[k]))
    return DoublePowerLawFit(
        PowerLawFit(low.a, low.b, low.residual, brk),
        PowerLawFit(high.a, high.b, high.residual, brk),
        brk,
        total,
        single.residual,
        tolerance,
    )


def fit_double_power_law(hist: Histogram, tolerance: float = 0.5) -> DoublePowerLawFit:
    """Scan interior bin edges for the break minimizing the summed residual.

    The reported breakpoint is the lower edge of the first bin of the upper
    segment.
    """
    x, y, w, idx = _loglog_points(hist)
    if x.size < 6:
        raise InsufficientSupport(f"need at least 6 nonzero bins, got {x.size}")
    return fit_double_power_law_xy(x, y, w, edges=hist.bin_edges[idx], tolerance=tolerance)


# --------------------------------------------------------------------------
# skew-normal fit


@dataclass(frozen=True)
class SkewGaussianFit:
    """Skew-normal fit; ``shape`` is the density's alpha, ``gamma`` its moment skewness."""

    location: float
    scale: float
    shape: float
    gamma: float
    mode: float
    residual: float = 0.0

    def pdf(self, x):
        return skewnorm_pdf(x, self.location, self.scale, self.shape)


def skewnorm_pdf(x, location, scale, shape):
    z = (np.asarray(x, dtype=float) - location) / scale
    return 2.0 / scale * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * special.ndtr(shape * z)


def skewness_from_shape(shape: float) -> float:
    """Moment skewness of a skew-normal; bounded in magnitude by about 0.9953."""
    delta = shape / math.sqrt(1 + shape * shape)
    m = delta * math.sqrt(2 / math.pi)
    return (4 - math.pi) / 2 * m**3 / (1 - m * m) ** 1.5


def shape_from_skewness(gamma: float) -> float:
    """Inverse of :func:`skewness_from_shape`, clipped to the attainable range."""
    limit = 0.99
    g = float(np.clip(gamma, -limit, limit))
    c = (2 * abs(g) / (4 - math.pi)) ** (2 / 3)
    m = math.sqrt(c / (1 + c))
    delta = math.copysign(min(m / math.sqrt(2 / math.pi), 0.999), g)
    return delta / math.sqrt(1 - delta * delta)


def skewnorm_mode(location: float, scale: float, shape: float) -> float:
    res = optimize.minimize_scalar(
        lambda x: -skewnorm_pdf(x, location, scale, shape),
        bounds=(location - 3 * scale, location + 3 * scale),
        method="bounded",
        options={"xatol": 1e-10 * max(scale, 1e-300)},
    )
    return float(res.x)


def fit_skew_gaussian(hist: Histogram, max_evals: int = 20000) -> SkewGaussianFit:
    """Least-squares skew-normal fit to a histogram's normalized heights.

    Residuals are weighted by the Poisson standard error of each bin, which
    keeps the shape estimate stable when the sample is nearly symmetric.
    """
    keep = hist.counts > 0
    if keep.sum() < 5:
        raise InsufficientSupport(f"need at least 5 nonzero bins, got {int(keep.sum())}")
    x = hist.centers
    y = hist.density()
    w = hist.counts
    sigma = np.sqrt(np.maximum(w, 1)) / (hist.total * hist.widths)
    mean = np.average(x, weights=w)
    sd = math.sqrt(np.average((x - mean) ** 2, weights=w))
    skew = np.average((x - mean) ** 3, weights=w) / sd**3 if sd > 0 else 0.0

    starts = {0.0, shape_from_skewness(skew), 4.0, -4.0}
    best = None
    last_error = None
    for alpha0 in sorted(starts):
        delta = alpha0 / math.sqrt(1 + alpha0**2)
        scale0 = sd / math.sqrt(1 - 2 * delta**2 / math.pi)
        loc0 = mean - scale0 * delta * math.sqrt(2 / math.pi)
        try:
            params, _ = optimize.curve_fit(
                skewnorm_pdf, x, y, p0=(loc0, scale0, alpha0), sigma=sigma, maxfev=max_evals,
                bounds=([-np.inf, 1e-12 * max(sd, 1.0), -50.0], [np.inf, np.inf, 50.0]),
            )
        except RuntimeError as exc:
            last_error = exc
            continue
        resid = float(np.sum((skewnorm_pdf(x, *params) - y) ** 2))
        if best is None or resid < best[0]:
            best = (resid, params)
    if best is None:
        raise NonConvergence(str(last_error))
    resid, (loc, scale, shape) = best
    return SkewGaussianFit(
        float(loc), float(scale), float(shape), skewness_from_shape(shape),
        skewnorm_mode(loc, scale, shape), resid,
    )
