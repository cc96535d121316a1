import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interestflow.concentration import (
    ActivityVector,
    activity_vector,
    corpus_concentration,
    gini,
    gini_vs_activity,
    minimum_gini,
    normalized_gini,
    null_model,
    null_slots,
    user_concentration,
    user_keys,
)
from interestflow.corpus_ingest import CommentRecord, Corpus
from interestflow.errors import DegenerateNormalization, ZeroActivity

from conftest import series


def double_sum_gini(v):
    """Mean absolute difference written out as the literal pairwise sum."""
    v = [int(x) for x in v]
    n, total = len(v), sum(v)
    return sum(abs(a - b) for a in v for b in v) / (2 * n * total)


def compositions(total, n):
    """Every allocation of ``total`` indistinguishable units over ``n`` slots."""
    for bars in itertools.combinations(range(total + n - 1), n - 1):
        edges = (-1,) + bars + (total + n - 1,)
        yield [edges[i + 1] - edges[i] - 1 for i in range(n)]


# -- activity vectors


def test_activity_vector_catalog_order(catalog):
    s = series("u", [(1, "NFL"), (2, "NFL"), (3, "FIFA")])
    v = activity_vector(s, catalog)
    assert v.counts.tolist()[:3] == [2, 1, 0]
    assert v.total == 3
    assert v.dimension == len(catalog.included)


def test_activity_vector_ignores_uncataloged_and_excluded(catalog):
    v = activity_vector(series("u", [(1, "elsewhere"), (2, "pics")]), catalog)
    assert v.total == 0


def test_activity_vector_empty(catalog):
    assert activity_vector(series("u", []), catalog).total == 0


# -- gini


def test_gini_examples():
    assert gini([5, 5, 5, 5]) == 0
    assert gini([7, 0, 0, 0, 0]) == 4 / 5
    assert gini([1, 1, 0, 0]) == pytest.approx(double_sum_gini([1, 1, 0, 0]), abs=1e-15)
    assert gini([1, 1, 0, 0]) == 0.5


def test_gini_zero_activity():
    with pytest.raises(ZeroActivity):
        gini([0, 0, 0])


@settings(max_examples=200)
@given(st.lists(st.integers(0, 50), min_size=1, max_size=40).filter(any))
def test_gini_matches_double_sum(v):
    assert gini(v) == pytest.approx(double_sum_gini(v), abs=1e-12)


@given(st.lists(st.integers(0, 50), min_size=1, max_size=40).filter(any), st.integers(1, 20), st.randoms())
def test_gini_invariances(v, c, rnd):
    g = gini(v)
    assert gini([c * x for x in v]) == pytest.approx(g, abs=1e-12)
    shuffled = list(v)
    rnd.shuffle(shuffled)
    assert gini(shuffled) == pytest.approx(g, abs=1e-12)
    assert 0 <= g <= (len(v) - 1) / len(v) + 1e-15


# -- normalization


def test_minimum_gini_matches_enumeration():
    for n in range(1, 7):
        for total in range(1, 7):
            floor = min(double_sum_gini(v) for v in compositions(total, n))
            assert minimum_gini(total, n) == pytest.approx(floor, abs=1e-15)


def test_corrected_maps_minimum_allocation_to_zero():
    for n in range(1, 7):
        for total in range(1, 7):
            values = [normalized_gini(v).normalized for v in compositions(total, n)]
            assert min(values) == 0
            assert all(0 <= x <= 1 for x in values)


def test_corrected_example():
    r = normalized_gini([1, 1, 0, 0])
    assert (r.raw, r.g_star, r.normalized) == (0.5, 0.5, 0.0)


def test_large_total_leaves_gini_unchanged():
    for v in ([10, 3, 3, 0], [4, 4, 4, 4], [9, 1, 0]):
        for mode in ("corrected", "paper_literal"):
            if mode == "corrected" and sum(v) % len(v):
                continue
            r = normalized_gini(v, mode)
            assert r.g_star == 0
            assert r.normalized == r.raw


def test_paper_literal_degenerate():
    with pytest.raises(DegenerateNormalization):
        normalized_gini([1, 1, 0, 0], mode="paper_literal")
    with pytest.raises(DegenerateNormalization):
        normalized_gini([1, 0, 0], mode="paper_literal")


def test_paper_literal_defined_region():
    # N=4, I=3: g* = 1/3
    r = normalized_gini([3, 0, 0, 0], mode="paper_literal")
    assert r.g_star == pytest.approx(1 / 3)
    assert r.normalized == pytest.approx((0.75 - 1 / 3) / (2 / 3))


def test_unknown_mode():
    with pytest.raises(ValueError):
        normalized_gini([1, 2], mode="median")


# -- null model


def test_null_model_unit():
    v = null_model(1, 10, np.random.default_rng(0))
    assert v.total == 1 and v.n_active == 1


@given(st.integers(1, 500), st.integers(1, 300), st.integers(0, 2**32))
def test_null_model_conserves_and_reproduces(total, n, seed):
    a = null_model(total, n, np.random.default_rng(seed))
    b = null_model(total, n, np.random.default_rng(seed))
    assert a.total == total
    assert a.n_active <= min(total, n)
    assert a.counts.tobytes() == b.counts.tobytes()


def test_null_model_matches_independent_simulation():
    n, total, draws = 944, 100, 10_000
    rng = np.random.default_rng(123)
    ours = np.mean([normalized_gini(null_model(total, n, rng)).normalized for _ in range(draws)])

    # independent oracle: each interaction picks a slot with random.Random, gini by double sum over nonzeros
    import random

    gen = random.Random(99)
    floor = (n - total) / n
    acc = 0.0
    for _ in range(draws):
        slots = {}
        for _ in range(total):
            k = gen.randrange(n)
            slots[k] = slots.get(k, 0) + 1
        vals = list(slots.values())
        zeros = n - len(vals)
        pair = sum(abs(a - b) for a in vals for b in vals) + 2 * zeros * total
        g = pair / (2 * n * total)
        acc += (g - floor) / (1 - floor)
    assert ours == pytest.approx(acc / draws, abs=0.01)


def test_user_keys_depend_on_seed_and_author_only():
    a = user_keys(5, ["alice", "bob", "carol"])
    assert user_keys(5, ["carol", "alice"]).tolist() == [a[2], a[0]]
    assert user_keys(6, ["alice"])[0] != a[0]
    assert len(set(a.tolist())) == 3


def test_null_slots_batch_independent():
    keys = user_keys(1, ["u1", "u2", "u3"])
    totals = np.array([5, 40, 7])
    together = null_slots(keys, totals, 50)
    alone = np.concatenate([null_slots(keys[i:i + 1], totals[i:i + 1], 50) for i in range(3)])
    assert together.tolist() == alone.tolist()
    assert together.size == totals.sum()
    assert together.min() >= 0 and together.max() < 50
    assert null_slots(keys, totals, 50, repetition=1).tolist() != together.tolist()


def test_null_slots_uniform():
    # chi-square goodness of fit against the uniform distribution over slots
    n = 20
    slots = null_slots(user_keys(0, [f"u{i}" for i in range(2000)]), np.full(2000, 50), n)
    observed = np.bincount(slots, minlength=n)
    expected = slots.size / n
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    assert chi2 < 43.8  # 0.999 quantile, 19 degrees of freedom


def test_population_null_matches_independent_simulation():
    n, total, users = 944, 100, 10_000
    vectors = {}
    for i in range(users):
        v = np.zeros(n, dtype=int)
        v[0] = total
        vectors[f"u{i}"] = ActivityVector(v)
    ours = float(np.mean(user_concentration(vectors, seed=3).null_normalized))
    rng = np.random.default_rng(77)
    oracle = np.mean([normalized_gini(rng.multinomial(total, np.full(n, 1 / n))).normalized for _ in range(users)])
    assert ours == pytest.approx(oracle, abs=0.01)


# -- population curves


def test_identical_users_mean_equals_median():
    users = {f"u{i}": ActivityVector([3, 2, 0, 1, 0]) for i in range(8)}
    curve = gini_vs_activity(users)
    occ = curve.occupied
    assert np.array_equal(curve.mean_subreddits[occ], curve.median_subreddits[occ])


def test_concentrated_users_reach_extreme():
    n = 10
    users = {}
    for i, total in enumerate([10, 20, 100, 1000]):
        counts = np.zeros(n, dtype=int)
        counts[i % n] = total
        users[f"u{i}"] = ActivityVector(counts)
    curve = gini_vs_activity(users)
    assert np.allclose(curve.mean_gini[curve.occupied], (n - 1) / n)


def test_concentrated_population_beats_null():
    rng = np.random.default_rng(8)
    n = 200
    users = {}
    for i in range(400):
        total = int(rng.integers(2, 3000))
        counts = np.zeros(n, dtype=int)
        home = int(rng.integers(n))
        counts[home] = total - total // 10
        rest = rng.multinomial(total // 10, np.full(n, 1 / n))
        counts += rest
        users[f"u{i}"] = ActivityVector(counts)
    curve = gini_vs_activity(users, seed=1)
    occ = curve.occupied
    assert np.all(curve.mean_gini[occ] > curve.null_mean_gini[occ])


def test_paper_literal_curve_skips_degenerate_users():
    users = {"low": ActivityVector([1, 1, 0, 0]), "high": ActivityVector([8, 0, 0, 0])}
    conc = user_concentration(users, mode="paper_literal")
    assert math.isnan(conc.normalized[conc.authors.index("low")])
    assert conc.normalized[conc.authors.index("high")] == pytest.approx(0.75)


def test_corpus_concentration_matches_per_user(catalog):
    recs = []
    rng = np.random.default_rng(2)
    subs = ["NFL", "FIFA", "news", "politics", "funny", "AskOuija", "pics", "other"]
    for i in range(300):
        recs.append(CommentRecord(f"u{rng.integers(20)}", subs[rng.integers(len(subs))], i, 5, f"c{i}", "p"))
    corpus = Corpus.from_records(recs)
    fast = corpus_concentration(corpus, catalog, seed=4)
    slow_users = {
        a: activity_vector(s, catalog) for a, s in corpus.users().items()
    }
    slow = user_concentration({a: v for a, v in slow_users.items() if v.total}, seed=4)
    assert fast.authors == slow.authors
    assert np.allclose(fast.raw, slow.raw, atol=1e-12)
    assert np.allclose(fast.normalized, slow.normalized, atol=1e-12)
    assert np.array_equal(fast.null_normalized, slow.null_normalized)
