"""Heuristic flagging of automated accounts.

Three independent reasons can flag an author: a comment-length entropy in the
lowest percentile of the population, a commenting rate above 10^4 comments
per 210 days, and a username containing "bot" or "auto".
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .corpus_ingest import Corpus, SubredditCatalog, UserActivitySeries
from .errors import EmptyInput, EmptyPopulation

REFERENCE_COMMENTS = 10_000
REFERENCE_SECONDS = 210 * 86400
DEFAULT_PERCENTILE = 0.5
DEFAULT_MIN_COMMENTS = 10
NAME_MARKERS = ("bot", "auto")
REASONS = ("low_entropy", "high_activity", "name_pattern")


@dataclass(frozen=True)
class EntropyReport:
    author: str
    entropy_bits: float
    n_comments: int
    distinct_lengths: int


@dataclass(frozen=True)
class BotFlag:
    author: str
    reasons: frozenset[str]

    @property
    def flagged(self) -> bool:
        return bool(self.reasons)


def _entropy_from_counts(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    h = float(-np.sum(p * np.log2(p))) + 0.0
    return min(max(h, 0.0), math.log2(counts.size))


def length_entropy(lengths: Iterable[int], author: str = "") -> EntropyReport:
    """Shannon entropy (bits) of the empirical distribution of exact comment lengths."""
    lengths = np.asarray(list(lengths) if not isinstance(lengths, np.ndarray) else lengths)
    if lengths.size == 0:
        raise EmptyInput("no comment lengths")
    _, counts = np.unique(lengths, return_counts=True)
    return EntropyReport(author, _entropy_from_counts(counts), int(lengths.size), int(counts.size))


def name_pattern(author: str) -> bool:
    name = author.lower()
    return any(marker in name for marker in NAME_MARKERS)


def exceeds_rate(n_comments: int, window_seconds: int) -> bool:
    """``n / window > 10^4 / 210 days``, compared exactly in integers."""
    if window_seconds <= 0:
        raise ValueError("observation window must be positive")
    return n_comments * REFERENCE_SECONDS > REFERENCE_COMMENTS * window_seconds


def high_activity(series: UserActivitySeries | int, window_seconds: int) -> bool:
    """Whether a user comments faster than the reference rate over the observation window."""
    n = series if isinstance(series, int) else len(series.comments())
    return exceeds_rate(n, window_seconds)


def flag_automated(
    reports: Iterable[EntropyReport],
    comment_counts: Mapping[str, int] | Mapping[str, UserActivitySeries],
    window_seconds: int,
    percentile: float = DEFAULT_PERCENTILE,
    min_comments: int = DEFAULT_MIN_COMMENTS,
) -> list[BotFlag]:
    """Combine the three heuristics into one flag per reported author.

    The entropy cut is the ``percentile``-th percentile of the entropies of
    authors with at least ``min_comments`` comments; an author is
    ``low_entropy`` when strictly below it.  ``comment_counts`` supplies the
    activity used for the rate check (series or plain counts).
    """
    if not 0 < percentile < 100:
        raise ValueError("percentile must lie in (0, 100)")
    reports = sorted(reports, key=lambda r: r.author)
    cut = entropy_cut(reports, percentile, min_comments)
    flags = []
    for r in reports:
        reasons = set()
        if r.n_comments >= min_comments and r.entropy_bits < cut:
            reasons.add("low_entropy")
        activity = comment_counts.get(r.author, r.n_comments)
        if high_activity(activity if isinstance(activity, UserActivitySeries) else int(activity), window_seconds):
            reasons.add("high_activity")
        if name_pattern(r.author):
            reasons.add("name_pattern")
        flags.append(BotFlag(r.author, frozenset(reasons)))
    return flags


def entropy_cut(reports: Iterable[EntropyReport], percentile: float = DEFAULT_PERCENTILE,
                min_comments: int = DEFAULT_MIN_COMMENTS) -> float:
    population = np.array([r.entropy_bits for r in reports if r.n_comments >= min_comments])
    if population.size == 0:
        raise EmptyPopulation(f"no author has {min_comments}+ comments")
    return float(np.percentile(population, percentile))


def corpus_entropy_reports(corpus: Corpus, catalog: SubredditCatalog | None = None) -> list[EntropyReport]:
    """Length entropy of every commenter, skipping subreddits with exotic commenting rules."""
    mask = corpus.is_comment
    if catalog is not None:
        exotic = np.array([catalog.is_exotic(s) for s in corpus.subreddits], dtype=bool)
        if exotic.any():
            mask &= ~exotic[corpus.subreddit]
    author = corpus.author[mask].astype(np.int64)
    length = corpus.length[mask].astype(np.int64)
    if author.size == 0:
        return []
    # (author, length) pair frequencies, grouped by author
    span = int(length.max()) + 1
    pairs, counts = np.unique(author * span + length, return_counts=True)
    who = pairs // span
    starts = np.flatnonzero(np.r_[True, who[1:] != who[:-1]])
    n = np.add.reduceat(counts, starts)
    distinct = np.diff(np.r_[starts, counts.size])
    p = counts / np.repeat(n, distinct)
    h = -np.add.reduceat(p * np.log2(p), starts) + 0.0
    h = np.minimum(np.maximum(h, 0.0), np.log2(distinct))
    return [
        EntropyReport(corpus.authors[a], float(e), int(k), int(d))
        for a, e, k, d in zip(who[starts].tolist(), h.tolist(), n.tolist(), distinct.tolist())
    ]


@dataclass(frozen=True)
class EntropyProfile:
    """Users per entropy bin, with the share of bot-like names and mean activity."""

    bin_edges: np.ndarray
    n_users: np.ndarray
    name_pattern_fraction: np.ndarray
    mean_comments: np.ndarray


def entropy_profile(reports: Iterable[EntropyReport], bin_width: float = 0.25,
                    min_comments: int = DEFAULT_MIN_COMMENTS) -> EntropyProfile:
    reports = [r for r in reports if r.n_comments >= min_comments]
    if not reports:
        raise EmptyPopulation("no reports to profile")
    h = np.array([r.entropy_bits for r in reports])
    named = np.array([name_pattern(r.author) for r in reports], dtype=float)
    n = np.array([r.n_comments for r in reports], dtype=float)
    k = int(math.floor(h.max() / bin_width)) + 1
    edges = bin_width * np.arange(k + 1)
    which = np.minimum((h / bin_width).astype(int), k - 1)
    users = np.bincount(which, minlength=k)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.bincount(which, weights=named, minlength=k) / users
        mean = np.bincount(which, weights=n, minlength=k) / users
    return EntropyProfile(edges, users, frac, mean)
