"""Per-user concentration of comments across subreddits.

The Gini index here is the mean-absolute-difference form

    g = sum_i sum_j |v_i - v_j| / (2 * N * I)

evaluated through the sorted-rank identity, so only the nonzero entries of a
(typically very sparse) activity vector are touched.
"""
from __future__ import annotations

import hashlib
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .corpus_ingest import Corpus, SubredditCatalog, UserActivitySeries
from .errors import DegenerateNormalization, ZeroActivity

MODES = ("corrected", "paper_literal")


@dataclass(frozen=True, eq=False)
class ActivityVector:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("activity vector must be 1-D with N >= 1")
        if np.any(counts < 0):
            raise ValueError("activity counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def dimension(self) -> int:
        return int(self.counts.size)

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.counts))


@dataclass(frozen=True)
class GiniResult:
    raw: float
    normalized: float
    g_star: float
    mode: str


def activity_vector(series: UserActivitySeries, catalog: SubredditCatalog) -> ActivityVector:
    """Comments per included subreddit, in catalog order; other subreddits are ignored."""
    axis = catalog.included
    counts = np.zeros(len(axis), dtype=np.int64)
    comments = series.comments()
    codes, n = np.unique(comments.subreddit_codes, return_counts=True)
    for code, count in zip(codes.tolist(), n.tolist()):
        pos = catalog.position(series.vocabulary[code])
        if pos is not None:
            counts[pos] = count
    return ActivityVector(counts)


def _gini_sparse(nonzero: np.ndarray, n: int) -> float:
    # ascending nonzero values occupy ranks N-m+1..N; zeros contribute nothing
    w = np.sort(nonzero)
    m = w.size
    total = int(w.sum())
    if total == 0:
        raise ZeroActivity("activity total is zero")
    k = np.arange(1, m + 1, dtype=np.int64)
    numerator = int(np.dot(n - 2 * m + 2 * k - 1, w))
    return numerator / (n * total)


def gini(v: ActivityVector | Sequence[int]) -> float:
    """Gini index of an activity vector."""
    if not isinstance(v, ActivityVector):
        v = ActivityVector(np.asarray(v))
    counts = v.counts
    return _gini_sparse(counts[counts > 0], counts.size)


def minimum_gini(total: int, n: int) -> float:
    """Smallest Gini index reachable by spreading ``total`` integer counts over ``n`` slots."""
    r = total % n
    return r * (n - r) / (n * total)


def g_star(total: int, n: int, mode: str = "corrected") -> float:
    if mode == "corrected":
        return minimum_gini(total, n)
    if mode == "paper_literal":
        return (n - total) / total if total < n else 0.0
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _normalize(raw: float, total: int, n: int, mode: str) -> GiniResult:
    gs = g_star(total, n, mode)
    if gs >= 1:
        raise DegenerateNormalization(f"g* = {gs:.6g} >= 1 for I={total}, N={n}")
    value = (raw - gs) / (1 - gs)
    if mode == "corrected":
        value = min(max(value, 0.0), 1.0)
    return GiniResult(raw, value, gs, mode)


def normalized_gini(v: ActivityVector | Sequence[int], mode: str = "corrected") -> GiniResult:
    """Gini index rescaled so that sparsity alone does not read as concentration.

    ``corrected`` subtracts the minimum Gini reachable with the user's total;
    ``paper_literal`` uses ``(N - I) / I`` for ``I < N`` and raises
    :class:`DegenerateNormalization` when that reaches 1.
    """
    if not isinstance(v, ActivityVector):
        v = ActivityVector(np.asarray(v))
    if v.total == 0:
        raise ZeroActivity("activity total is zero")
    return _normalize(gini(v), v.total, v.dimension, mode)


def null_model(total: int, n: int, rng: np.random.Generator) -> ActivityVector:
    """Spread ``total`` interactions uniformly at random over ``n`` slots."""
    if total < 1 or n < 1:
        raise ValueError("null model needs total >= 1 and n >= 1")
    return ActivityVector(rng.multinomial(total, np.full(n, 1.0 / n)))


# --------------------------------------------------------------------------
# population curves


@dataclass(frozen=True)
class ActivityBinCurve:
    bin_edges: np.ndarray
    n_users: np.ndarray
    mean_subreddits: np.ndarray
    median_subreddits: np.ndarray
    mean_gini: np.ndarray
    null_mean_gini: np.ndarray

    def rows(self):
        for i in range(len(self.n_users)):
            yield (
                self.bin_edges[i], self.bin_edges[i + 1], self.mean_subreddits[i],
                self.median_subreddits[i], self.mean_gini[i], self.null_mean_gini[i],
            )

    @property
    def occupied(self) -> np.ndarray:
        return self.n_users > 0


@dataclass(frozen=True)
class UserConcentration:
    """Per-user Gini results, aligned arrays keyed by ``authors``."""

    authors: tuple[str, ...]
    totals: np.ndarray
    n_subreddits: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray
    null_normalized: np.ndarray


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    x = x ^ (x >> np.uint64(30))
    x = x * _MIX1
    x = x ^ (x >> np.uint64(27))
    x = x * _MIX2
    return x ^ (x >> np.uint64(31))


def user_keys(seed: int, authors: Sequence[str]) -> np.ndarray:
    """64-bit stream key per author, a function of ``(seed, author)`` only."""
    digests = b"".join(hashlib.blake2b(a.encode("utf-8"), digest_size=8).digest() for a in authors)
    keys = np.frombuffer(digests, dtype="<u8").astype(np.uint64)
    return _mix64(keys ^ _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)))


def null_slots(keys: np.ndarray, totals: np.ndarray, n: int, repetition: int = 0) -> np.ndarray:
    """Slot of every null-model interaction, users laid out back to back.

    User ``u`` places ``totals[u]`` interactions independently and uniformly
    over ``n`` slots, drawn from a splitmix64 stream keyed by ``keys[u]`` and
    ``repetition``.  The draws depend on nothing else, so they are identical
    whatever order or batch the users are processed in.
    """
    totals = np.asarray(totals, dtype=np.int64)
    base = _mix64(keys ^ _mix64(np.full(keys.size, repetition + 1, dtype=np.uint64) * _GOLDEN))
    starts = np.cumsum(totals) - totals
    owner = np.repeat(np.arange(totals.size), totals)
    step = (np.arange(owner.size, dtype=np.int64) - starts[owner] + 1).astype(np.uint64)
    h = _mix64(base[owner] + step * _GOLDEN)
    # multiply-shift maps the high 32 bits onto [0, n)
    return ((h >> np.uint64(32)) * np.uint64(n) >> np.uint64(32)).astype(np.int64)


def _grouped_gini(group: np.ndarray, counts: np.ndarray, n: int):
    """Gini of many sparse vectors given as ``(group, count)`` nonzero entries.

    Returns ``(groups, totals, n_active, raw)`` with one row per group present.
    """
    if counts.size == 0:
        empty = np.empty(0, np.int64)
        return empty, empty, empty, np.empty(0)
    order = np.lexsort((counts, group))
    group, counts = group[order], counts[order].astype(np.int64)
    starts = np.flatnonzero(np.r_[True, group[1:] != group[:-1]])
    m = np.diff(np.r_[starts, counts.size])
    rank = np.arange(counts.size) - np.repeat(starts, m) + 1
    mm = np.repeat(m, m)
    totals = np.add.reduceat(counts, starts)
    numer = np.add.reduceat((n - 2 * mm + 2 * rank - 1) * counts, starts)
    return group[starts], totals, m, numer / (n * totals)


def _normalize_many(raw: np.ndarray, totals: np.ndarray, n: int, mode: str) -> np.ndarray:
    """Vectorized :func:`normalized_gini`; NaN where ``paper_literal`` is undefined."""
    totals = np.asarray(totals, dtype=np.int64)
    if mode == "corrected":
        r = totals % n
        gs = r * (n - r) / (n * totals)
        return np.clip((raw - gs) / (1 - gs), 0.0, 1.0)
    if mode == "paper_literal":
        gs = np.where(totals < n, (n - totals) / totals, 0.0)
        out = np.full(raw.shape, np.nan)
        ok = gs < 1
        out[ok] = (raw[ok] - gs[ok]) / (1 - gs[ok])
        return out
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _concentration(authors, group, counts, n, seed, mode, repetitions) -> UserConcentration:
    """Real and null normalized Gini for users given as sparse ``(group, count)`` entries."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    groups, totals, active, raw = _grouped_gini(group, counts, n)
    names = tuple(authors[g] for g in groups.tolist())
    keys = user_keys(seed, names)
    null = np.zeros(len(names))
    for rep in range(repetitions):
        owner = np.repeat(np.arange(len(names)), totals)
        pairs, c = np.unique(owner * n + null_slots(keys, totals, n, rep), return_counts=True)
        _, _, _, null_raw = _grouped_gini(pairs // n, c, n)
        null += _normalize_many(null_raw, totals, n, mode)
    return UserConcentration(
        names, totals.astype(np.int64), active.astype(np.int64), raw,
        _normalize_many(raw, totals, n, mode), null / repetitions,
    )


def user_concentration(
    users: Mapping[str, ActivityVector] | Sequence[ActivityVector],
    seed: int = 0,
    mode: str = "corrected",
    repetitions: int = 1,
) -> UserConcentration:
    """Real and null-model normalized Gini for every user with activity.

    The null value is the mean over ``repetitions`` null draws keyed by
    ``(seed, author)``; sequence inputs are keyed by position.  Users whose
    normalization is undefined in ``paper_literal`` mode get NaN.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    items = list(users.items()) if isinstance(users, Mapping) else [(str(i), v) for i, v in enumerate(users)]
    dims = {v.dimension for _, v in items}
    if len(dims) > 1:
        raise ValueError("all activity vectors must share one dimension")
    n = dims.pop() if dims else 1
    authors = [a for a, _ in items]
    group, counts = [], []
    for i, (_, v) in enumerate(items):
        nz = v.counts[v.counts > 0]
        group.append(np.full(nz.size, i, dtype=np.int64))
        counts.append(nz)
    group = np.concatenate(group) if group else np.empty(0, np.int64)
    counts = np.concatenate(counts).astype(np.int64) if counts else np.empty(0, np.int64)
    return _concentration(authors, group, counts, n, seed, mode, repetitions)


def corpus_concentration(
    corpus: Corpus, catalog: SubredditCatalog, seed: int = 0, mode: str = "corrected",
    repetitions: int = 1, exclude: frozenset[str] = frozenset(),
) -> UserConcentration:
    """:func:`user_concentration` over every commenter in a corpus, without per-user vectors."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    n = len(catalog.included)
    pos = np.array([-1 if catalog.position(s) is None else catalog.position(s) for s in corpus.subreddits],
                   dtype=np.int64)
    mask = corpus.is_comment
    if exclude:
        dropped = np.array([a in exclude for a in corpus.authors], dtype=bool)
        mask = mask & ~dropped[corpus.author]
    a = corpus.author[mask].astype(np.int64)
    s = pos[corpus.subreddit[mask]] if a.size else np.empty(0, np.int64)
    a, s = a[s >= 0], s[s >= 0]
    pairs, counts = np.unique(a * n + s, return_counts=True)
    return _concentration(corpus.authors, pairs // n, counts, n, seed, mode, repetitions)


def activity_bin_edges(totals: np.ndarray, per_decade: int = 5) -> np.ndarray:
    hi = max(int(totals.max()), 1)
    n_bins = math.floor(math.log10(hi) * per_decade + 1e-9) + 1
    return np.power(10.0, np.arange(n_bins + 1) / per_decade)


def _nanmean(x: np.ndarray) -> float:
    x = x[~np.isnan(x)]
    return float(x.mean()) if x.size else math.nan


def bin_curve(conc: UserConcentration, per_decade: int = 5) -> ActivityBinCurve:
    """Group users in logarithmic bins of total activity."""
    if len(conc.authors) == 0:
        raise ValueError("no users with activity")
    edges = activity_bin_edges(conc.totals, per_decade)
    which = np.searchsorted(edges, conc.totals, side="right") - 1
    k = len(edges) - 1
    n_users = np.bincount(which, minlength=k)
    mean_s, med_s, mean_g, null_g = (np.full(k, math.nan) for _ in range(4))
    for b in np.flatnonzero(n_users):
        sel = which == b
        mean_s[b] = conc.n_subreddits[sel].mean()
        med_s[b] = float(np.median(conc.n_subreddits[sel]))
        mean_g[b] = _nanmean(conc.normalized[sel])
        null_g[b] = _nanmean(conc.null_normalized[sel])
    return ActivityBinCurve(edges, n_users, mean_s, med_s, mean_g, null_g)


def gini_vs_activity(
    users: Mapping[str, ActivityVector] | Sequence[ActivityVector],
    seed: int = 0,
    mode: str = "corrected",
    repetitions: int = 1,
    per_decade: int = 5,
) -> ActivityBinCurve:
    """Mean/median active-subreddit counts and real vs null mean normalized Gini per activity bin."""
    if len(users) == 0:
        raise ValueError("gini_vs_activity needs at least one user")
    return bin_curve(user_concentration(users, seed, mode, repetitions), per_decade)
