import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from interestflow.bot_filter import (
    REFERENCE_SECONDS,
    EntropyReport,
    corpus_entropy_reports,
    entropy_cut,
    entropy_profile,
    exceeds_rate,
    flag_automated,
    high_activity,
    length_entropy,
    name_pattern,
)
from interestflow.corpus_ingest import CommentRecord, Corpus
from interestflow.errors import EmptyInput, EmptyPopulation

DAY = 86400


def shannon(lengths):
    """Entropy in bits from a plain frequency table."""
    freq = {}
    for x in lengths:
        freq[x] = freq.get(x, 0) + 1
    n = len(lengths)
    return -sum(c / n * math.log2(c / n) for c in freq.values())


def test_entropy_examples():
    assert length_entropy([50, 50, 50, 50]).entropy_bits == 0
    assert length_entropy(range(8)).entropy_bits == 3
    r = length_entropy([10, 10, 20, 20, 20, 20])
    assert r.entropy_bits == pytest.approx(0.9182958340544896, abs=1e-12)
    assert (r.n_comments, r.distinct_lengths) == (6, 2)
    with pytest.raises(EmptyInput):
        length_entropy([])


@pytest.mark.parametrize("k", range(0, 11))
def test_uniform_over_power_of_two(k):
    assert length_entropy(np.repeat(np.arange(2**k), 3)).entropy_bits == k


@given(st.lists(st.integers(0, 40), min_size=1, max_size=200), st.randoms())
def test_entropy_properties(lengths, rnd):
    r = length_entropy(lengths)
    assert r.entropy_bits == pytest.approx(shannon(lengths), abs=1e-9)
    assert 0 <= r.entropy_bits <= math.log2(r.distinct_lengths)
    shuffled = list(lengths)
    rnd.shuffle(shuffled)
    assert length_entropy(shuffled).entropy_bits == pytest.approx(r.entropy_bits, abs=1e-12)
    relabeled = [3 * x + 1000 for x in lengths]
    assert length_entropy(relabeled).entropy_bits == pytest.approx(r.entropy_bits, abs=1e-12)


@pytest.mark.parametrize("name,expected", [("AutoModerator", True), ("totallyhuman", False),
                                           ("RoBOT_9000", True), ("newsbot", True), ("robert", False)])
def test_name_pattern(name, expected):
    assert name_pattern(name) is expected


def test_rate_threshold():
    assert exceeds_rate(10_001, 210 * DAY)
    assert not exceeds_rate(10_000, 210 * DAY)
    assert exceeds_rate(5_000, 100 * DAY)
    assert not high_activity(1, REFERENCE_SECONDS)
    with pytest.raises(ValueError):
        exceeds_rate(1, 0)


def _population(n, rng):
    reports = []
    for i in range(n):
        k = int(rng.integers(10, 200))
        reports.append(length_entropy(rng.integers(1, int(rng.integers(2, 400)), size=k), f"user{i}"))
    return reports


def test_percentile_bound_on_1000_users():
    reports = _population(1000, np.random.default_rng(0))
    flags = flag_automated(reports, {}, 210 * DAY, percentile=0.5)
    assert sum("low_entropy" in f.reasons for f in flags) <= 5


def test_percentile_monotonicity():
    reports = _population(2000, np.random.default_rng(1))
    previous = None
    for p in (20.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.1):
        flagged = {f.author for f in flag_automated(reports, {}, 210 * DAY, p) if "low_entropy" in f.reasons}
        if previous is not None:
            assert flagged <= previous
        previous = flagged


def test_planted_bot_and_named_user():
    rng = np.random.default_rng(2)
    reports = _population(300, rng)
    reports.append(length_entropy([100] * 20_000, "fixedposter"))
    reports.append(length_entropy(rng.integers(1, 500, size=80), "newsbot"))
    counts = {"fixedposter": 20_000}
    flags = {f.author: f for f in flag_automated(reports, counts, 210 * DAY)}
    assert {"low_entropy", "high_activity"} <= flags["fixedposter"].reasons
    assert flags["newsbot"].reasons == {"name_pattern"}
    assert flags["newsbot"].flagged
    assert not flags["user0"].flagged


def test_min_comments_floor():
    reports = [EntropyReport("tiny", 0.0, 3, 1)] + [EntropyReport(f"u{i}", 2.0 + i / 100, 50, 8) for i in range(100)]
    flags = {f.author: f for f in flag_automated(reports, {}, 210 * DAY, percentile=50)}
    assert "low_entropy" not in flags["tiny"].reasons
    with pytest.raises(EmptyPopulation):
        flag_automated(reports[:1], {}, 210 * DAY)


def test_percentile_range():
    with pytest.raises(ValueError):
        flag_automated([EntropyReport("a", 1.0, 50, 3)], {}, DAY, percentile=0)


def test_corpus_reports_match_direct_and_skip_exotic(catalog):
    rng = np.random.default_rng(3)
    recs = []
    subs = ["NFL", "news", "AskOuija"]
    for i in range(500):
        recs.append(CommentRecord(f"u{i % 9}", subs[i % 3], i, int(rng.integers(1, 30)), f"c{i}", "p"))
    corpus = Corpus.from_records(recs)
    fast = {r.author: r for r in corpus_entropy_reports(corpus, catalog)}
    for author in fast:
        lengths = [r.body_length for r in recs if r.author == author and r.subreddit != "AskOuija"]
        direct = length_entropy(lengths, author)
        assert fast[author].entropy_bits == pytest.approx(direct.entropy_bits, abs=1e-12)
        assert fast[author].n_comments == direct.n_comments


def test_entropy_profile_reproducible():
    reports = _population(500, np.random.default_rng(4)) + [length_entropy([7] * 30, "autobot")]
    a, b = entropy_profile(reports), entropy_profile(reports)
    assert a.n_users.sum() == 501
    assert np.array_equal(a.n_users, b.n_users)
    assert np.array_equal(a.name_pattern_fraction, b.name_pattern_fraction, equal_nan=True)
    low = [r for r in reports if r.entropy_bits < 0.25]
    assert a.name_pattern_fraction[0] == sum(name_pattern(r.author) for r in low) / len(low)


def test_entropy_cut_matches_numpy():
    reports = _population(200, np.random.default_rng(5))
    values = [r.entropy_bits for r in reports]
    assert entropy_cut(reports, 10) == np.percentile(values, 10)
