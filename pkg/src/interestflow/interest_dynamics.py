"""Interest drift and shift detection from binned comment histories.

A user's comments are cut into consecutive groups of roughly equal size.  Each
group becomes a count vector over the user's subreddits (and, separately,
over topic classes), and the angle between consecutive vectors measures how
much the user's interest moved.  Angles above the threshold become events:
a *shift* when the topic vector moved, otherwise a *drift* when only the
subreddit vector did.
"""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .activity_stats import Histogram
from .corpus_ingest import TOPIC_CLASSES, Corpus, SubredditCatalog, UserActivitySeries
from .errors import MisalignedSequences, TooFewBins, UncatalogedSubreddit, ZeroVector

DEFAULT_BIN_SIZE = 20
DEFAULT_THRESHOLD_DEG = 45.0
DEFAULT_MIN_COMMENTS = 60


@dataclass(frozen=True, eq=False)
class BinVector:
    """Comment counts of one bin along a fixed axis of labels.

    ``first_seen`` holds, per label, the timestamp of its first comment in
    the bin (``None``/absent for labels with no comments).
    """

    counts: np.ndarray
    labels: tuple[str, ...]
    bin_index: int = 0
    span: tuple[int, int] = (0, 0)
    first_seen: tuple[int | None, ...] = field(default=())

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if len(self.labels) != counts.size:
            raise ValueError("one label per count required")
        if counts.sum() <= 0:
            raise ZeroVector("bin vector has no comments")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class AngleSequence:
    angles: np.ndarray
    level: str

    def __len__(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class InterestEvent:
    kind: str
    from_element: str
    to_element: str
    at_bin: int
    angle: float

    @property
    def level(self) -> str:
        return "subreddit" if self.kind == "drift" else "topic"


@dataclass(frozen=True)
class TransitionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray
    level: str

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, pair: tuple[str, str]) -> int:
        i, j = self.labels.index(pair[0]), self.labels.index(pair[1])
        return int(self.counts[i, j])


def select_active_users(
    index: Mapping[str, UserActivitySeries],
    min_comments: int = DEFAULT_MIN_COMMENTS,
    per_subreddit: bool = True,
) -> set[str]:
    """Authors with strictly more than ``min_comments`` comments.

    By default the count must be reached within a single subreddit; with
    ``per_subreddit=False`` the user's total is used instead.
    """
    selected = set()
    for author, series in index.items():
        codes = series.comments().subreddit_codes
        if codes.size <= min_comments:
            continue
        if not per_subreddit or np.bincount(codes).max() > min_comments:
            selected.add(author)
    return selected


def corpus_active_users(
    corpus: Corpus,
    min_comments: int = DEFAULT_MIN_COMMENTS,
    per_subreddit: bool = True,
) -> set[str]:
    """:func:`select_active_users` computed from the corpus columns in one pass."""
    mask = corpus.is_comment
    a = corpus.author[mask].astype(np.int64)
    if a.size == 0:
        return set()
    if per_subreddit:
        n_sub = max(len(corpus.subreddits), 1)
        pairs, counts = np.unique(a * n_sub + corpus.subreddit[mask], return_counts=True)
        best = np.zeros(len(corpus.authors), dtype=np.int64)
        np.maximum.at(best, pairs // n_sub, counts)
    else:
        best = np.bincount(a, minlength=len(corpus.authors))
    return {corpus.authors[i] for i in np.flatnonzero(best > min_comments).tolist()}


def bin_comments(series: UserActivitySeries, target_size: int = DEFAULT_BIN_SIZE) -> list[UserActivitySeries]:
    """Split a user's comments into consecutive groups of ``target_size``.

    A trailing remainder smaller than half the target joins the previous group.
    """
    if target_size < 2:
        raise ValueError("target_size must be at least 2")
    comments = series.comments()
    n = len(comments)
    if n == 0:
        raise ValueError(f"{series.author} has no comments")
    full, rem = divmod(n, target_size)
    if full == 0:
        return [comments]
    bounds = [i * target_size for i in range(full)] + [n]
    if rem and rem * 2 >= target_size:
        bounds.insert(-1, full * target_size)
    return [comments[bounds[i]:bounds[i + 1]] for i in range(len(bounds) - 1)]


def subreddit_axis(series: UserActivitySeries) -> tuple[str, ...]:
    """The user's subreddits in order of first comment."""
    codes = series.comments().subreddit_codes
    _, first = np.unique(codes, return_index=True)
    ordered = codes[np.sort(first)]
    return tuple(series.vocabulary[c] for c in ordered.tolist())


def bin_vector(
    group: UserActivitySeries,
    axis: Sequence[str],
    *,
    catalog: SubredditCatalog | None = None,
    bin_index: int = 0,
) -> BinVector:
    """Count a group's comments along ``axis``.

    When ``catalog`` is given, ``axis`` lists topic classes and each comment
    counts toward its subreddit's topic.
    """
    if len(group) == 0:
        raise ZeroVector("empty comment group")
    axis = tuple(axis)
    position = {label: i for i, label in enumerate(axis)}
    counts = np.zeros(len(axis), dtype=np.int64)
    first: list[int | None] = [None] * len(axis)
    vocab = group.vocabulary
    codes, first_idx, n = np.unique(group.subreddit_codes, return_index=True, return_counts=True)
    times = group.times
    for code, fi, count in zip(codes.tolist(), first_idx.tolist(), n.tolist()):
        name = vocab[code]
        if catalog is not None:
            topic = catalog.topic_of(name)
            if topic is None:
                raise UncatalogedSubreddit(name)
            name = topic
        i = position.get(name)
        if i is None:
            raise ValueError(f"{name!r} is not on the axis")
        counts[i] += count
        t = int(times[fi])
        if first[i] is None or t < first[i]:
            first[i] = t
    span = (int(times[0]), int(times[-1]))
    return BinVector(counts, axis, bin_index, span, tuple(first))


def _as_counts(v) -> np.ndarray:
    return v.counts if isinstance(v, BinVector) else np.asarray(v)


def angle(u: BinVector | Sequence[int], v: BinVector | Sequence[int]) -> float:
    """Angle in degrees between two nonnegative count vectors."""
    if isinstance(u, BinVector) and isinstance(v, BinVector) and u.labels != v.labels:
        raise ValueError("bin vectors are on different axes")
    a, b = _as_counts(u), _as_counts(v)
    if a.shape != b.shape:
        raise ValueError("vectors differ in length")
    if a.dtype.kind in "iub" and b.dtype.kind in "iub":
        # exact integers: |u|^2 |v|^2 - (u.v)^2 = |u x v|^2, and atan2 stays well
        # conditioned near 0 and 90 degrees (exactly 45.0 when sin == cos)
        a, b = [int(x) for x in a.tolist()], [int(x) for x in b.tolist()]
        nu, nv = sum(x * x for x in a), sum(x * x for x in b)
        dot = sum(x * y for x, y in zip(a, b))
        if nu == 0 or nv == 0:
            raise ZeroVector("angle undefined for a zero vector")
        cross2 = nu * nv - dot * dot
        root = math.isqrt(cross2)
        cross = root if root * root == cross2 else math.sqrt(cross2)
        return math.degrees(math.atan2(cross, dot))
    a, b = a.astype(float), b.astype(float)
    nu, nv, dot = float(np.dot(a, a)), float(np.dot(b, b)), float(np.dot(a, b))
    if nu == 0 or nv == 0:
        raise ZeroVector("angle undefined for a zero vector")
    c = dot / math.sqrt(nu * nv)
    return math.degrees(math.acos(min(max(c, -1.0), 1.0)))


def angle_sequence(bins: Sequence[BinVector], level: str = "subreddit") -> AngleSequence:
    if len(bins) < 2:
        raise TooFewBins(f"need at least 2 bins, got {len(bins)}")
    return AngleSequence(np.array([angle(bins[i], bins[i + 1]) for i in range(len(bins) - 1)]), level)


def dominant_element(bin: BinVector) -> str:
    """Label with the largest count; ties go to the label seen first in the bin."""
    counts = bin.counts
    top = np.flatnonzero(counts == counts.max())
    if top.size == 1 or not bin.first_seen:
        return bin.labels[int(top[0])]
    return bin.labels[min(top.tolist(), key=lambda i: (bin.first_seen[i], i))]


def detect_events(
    sub_angles: AngleSequence,
    topic_angles: AngleSequence,
    sub_bins: Sequence[BinVector],
    topic_bins: Sequence[BinVector],
    threshold: float = DEFAULT_THRESHOLD_DEG,
) -> list[InterestEvent]:
    """Turn angle sequences into drift and shift events.

    ``at_bin`` is the index of the later bin of the transition.  A topic
    angle above the threshold yields a shift; otherwise a subreddit angle
    above it yields a drift.
    """
    n = len(sub_angles)
    if not (len(topic_angles) == n and len(sub_bins) == n + 1 and len(topic_bins) == n + 1):
        raise MisalignedSequences(
            f"{len(sub_angles)}/{len(topic_angles)} angles vs {len(sub_bins)}/{len(topic_bins)} bins"
        )
    events = []
    for i in range(n):
        if topic_angles.angles[i] > threshold:
            events.append(InterestEvent(
                "shift", dominant_element(topic_bins[i]), dominant_element(topic_bins[i + 1]),
                i + 1, float(topic_angles.angles[i]),
            ))
        elif sub_angles.angles[i] > threshold:
            events.append(InterestEvent(
                "drift", dominant_element(sub_bins[i]), dominant_element(sub_bins[i + 1]),
                i + 1, float(sub_angles.angles[i]),
            ))
    return events


@dataclass(frozen=True)
class UserDynamics:
    author: str
    sub_bins: list[BinVector]
    topic_bins: list[BinVector]
    sub_angles: AngleSequence
    topic_angles: AngleSequence
    events: list[InterestEvent]


def user_dynamics(
    series: UserActivitySeries,
    catalog: SubredditCatalog,
    bin_size: int = DEFAULT_BIN_SIZE,
    threshold: float = DEFAULT_THRESHOLD_DEG,
) -> UserDynamics:
    """Bin, encode and scan one user.  Users with a single bin have no angles."""
    groups = bin_comments(series, bin_size)
    axis = subreddit_axis(series)
    sub_bins = [bin_vector(g, axis, bin_index=b) for b, g in enumerate(groups)]
    topic_bins = [bin_vector(g, TOPIC_CLASSES, catalog=catalog, bin_index=b) for b, g in enumerate(groups)]
    if len(groups) < 2:
        empty_s, empty_t = AngleSequence(np.empty(0), "subreddit"), AngleSequence(np.empty(0), "topic")
        return UserDynamics(series.author, sub_bins, topic_bins, empty_s, empty_t, [])
    sa = angle_sequence(sub_bins, "subreddit")
    ta = angle_sequence(topic_bins, "topic")
    return UserDynamics(series.author, sub_bins, topic_bins, sa, ta, detect_events(sa, ta, sub_bins, topic_bins, threshold))


def transition_matrix(events: Iterable[InterestEvent], level: str) -> TransitionMatrix:
    """Count ``from -> to`` links of the events at ``level``.

    Labels are ordered by total involvement (row plus column sum), most
    involved first, ties by label.
    """
    kind = {"subreddit": "drift", "topic": "shift"}[level]
    links = Counter((e.from_element, e.to_element) for e in events if e.kind == kind)
    involvement: Counter[str] = Counter()
    for (src, dst), n in links.items():
        involvement[src] += n
        involvement[dst] += n
    labels = tuple(sorted(involvement, key=lambda lab: (-involvement[lab], lab)))
    pos = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for (src, dst), n in links.items():
        counts[pos[src], pos[dst]] += n
    return TransitionMatrix(labels, counts, level)


@dataclass(frozen=True)
class EventCountSummary:
    drifts: Histogram
    shifts: Histogram
    shift_fraction: float
    n_users: int


def _integer_histogram(values: np.ndarray) -> Histogram:
    top = int(values.max()) if values.size else 0
    edges = np.arange(top + 2) - 0.5
    return Histogram(edges, np.bincount(values, minlength=top + 1).astype(np.int64), "linear")


def event_count_distributions(per_user_events: Mapping[str, Sequence[InterestEvent]]) -> EventCountSummary:
    """Per-user drift and shift counts, and the share of users with at least one shift."""
    drifts = np.array([sum(e.kind == "drift" for e in ev) for ev in per_user_events.values()], dtype=np.int64)
    shifts = np.array([sum(e.kind == "shift" for e in ev) for ev in per_user_events.values()], dtype=np.int64)
    n = len(per_user_events)
    frac = float(np.count_nonzero(shifts)) / n if n else math.nan
    return EventCountSummary(_integer_histogram(drifts), _integer_histogram(shifts), frac, n)
