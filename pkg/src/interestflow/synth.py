"""Seeded synthetic corpora with planted interest events and bots.

Background users draw comment totals from a discrete power law and keep at
least ``home_share`` of every bin on one home subreddit, which bounds their
bin-to-bin angles well below 45 degrees (about 26 degrees at the default
share), so they never produce events.  Planted users comment in pure bins: every
comment of a bin goes to the bin's dominant subreddit, and each change of
dominant subreddit is one ledgered drift or shift.
"""
from __future__ import annotations

import csv
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus_ingest import (
    TOPIC_CLASSES,
    CatalogEntry,
    CommentRecord,
    PostRecord,
    SubredditCatalog,
    write_catalog,
)
from .errors import InvalidSpec

JUNE_1_2018 = 1527811200
DEC_31_2018_END = 1546300799


@dataclass(frozen=True)
class PlantedEvent:
    """A planted switch of dominant subreddit at the start of bin ``bin_index``."""

    author: str
    bin_index: int
    kind: str
    from_element: str
    to_element: str


@dataclass(frozen=True)
class PlantedBot:
    author: str
    fixed_length: int
    n_comments: int


@dataclass
class SynthSpec:
    n_users: int = 1000
    n_subreddits: int = 60
    activity_exponent: float = 2.0
    topic_map: SubredditCatalog | None = None
    planted_events: list[PlantedEvent] = field(default_factory=list)
    planted_bots: list[PlantedBot] = field(default_factory=list)
    seed: int = 0
    bin_size: int = 20
    window: tuple[int, int] = (JUNE_1_2018, DEC_31_2018_END)
    max_comments: int = 5000
    home_share: float = 0.75
    post_fraction: float = 0.05
    tail_bins: int = 3


@dataclass(frozen=True)
class ExpectedEvent:
    """What the detector should report: topic labels for shifts, subreddits for drifts."""

    author: str
    bin_index: int
    kind: str
    from_element: str
    to_element: str


@dataclass
class Ledger:
    events: list[ExpectedEvent]
    bots: list[PlantedBot]
    planted_users: list[str]


def user_name(i: int) -> str:
    return f"user{i:06d}"


def default_catalog(n_subreddits: int, exotic: bool = True) -> SubredditCatalog:
    """Subreddits spread round-robin over the 15 topic classes.

    With ``exotic`` and at least 16 subreddits, the last one is flagged as
    having exotic commenting rules.
    """
    entries = []
    per_topic = [0] * len(TOPIC_CLASSES)
    for i in range(n_subreddits):
        t = i % len(TOPIC_CLASSES)
        per_topic[t] += 1
        name = f"{TOPIC_CLASSES[t].lower()}_{per_topic[t]:03d}"
        is_exotic = exotic and n_subreddits > len(TOPIC_CLASSES) and i == n_subreddits - 1
        entries.append((name, CatalogEntry(TOPIC_CLASSES[t], True, is_exotic)))
    return SubredditCatalog(entries)


def random_plants(
    authors: Sequence[str],
    catalog: SubredditCatalog,
    rng: np.random.Generator,
    n_bins: int = 12,
    shift_probability: float = 0.5,
) -> list[PlantedEvent]:
    """Excursions away from a home subreddit and back, for each author.

    The home subreddit holds at least 4 bins so the user passes the default
    activity selection at bin size 20.
    """
    if n_bins < 6:
        raise InvalidSpec("random plants need at least 6 bins")
    subs = [s for s in catalog.included if not catalog.is_exotic(s)]
    by_topic: dict[str, list[str]] = {}
    for s in subs:
        by_topic.setdefault(catalog.topic_of(s), []).append(s)
    drift_topics = [t for t, members in by_topic.items() if len(members) >= 2]
    if not drift_topics or len(by_topic) < 2:
        raise InvalidSpec("catalog needs two topics and a topic with two subreddits")

    def pick_other(current: str, kind: str) -> str:
        topic = catalog.topic_of(current)
        if kind == "drift":
            pool = [s for s in by_topic[topic] if s != current]
        else:
            pool = [s for s in subs if catalog.topic_of(s) != topic]
        return pool[int(rng.integers(len(pool)))]

    plants = []
    for author in authors:
        home = by_topic[drift_topics[int(rng.integers(len(drift_topics)))]]
        home = home[int(rng.integers(len(home)))]
        seq = [home, home]
        while len(seq) < n_bins:
            current = seq[-1]
            kind = "shift" if rng.random() < shift_probability else "drift"
            if current != home and rng.random() < 0.5:
                # return home instead of chaining
                seq.extend([home] * int(rng.integers(1, 3)))
                continue
            seq.extend([pick_other(current, kind)] * int(rng.integers(1, 3)))
        seq = seq[:n_bins]
        while seq.count(home) < 4:
            seq.append(home)
        for b in range(1, len(seq)):
            if seq[b] != seq[b - 1]:
                kind = "drift" if catalog.topic_of(seq[b]) == catalog.topic_of(seq[b - 1]) else "shift"
                plants.append(PlantedEvent(author, b, kind, seq[b - 1], seq[b]))
    return plants


@dataclass
class SyntheticCorpus:
    """Generated records as parallel arrays, in global time order."""

    catalog: SubredditCatalog
    ledger: Ledger
    subreddits: tuple[str, ...]
    authors: tuple[str, ...]
    c_author: np.ndarray
    c_sub: np.ndarray
    c_time: np.ndarray
    c_length: np.ndarray
    c_post: np.ndarray
    p_author: np.ndarray
    p_sub: np.ndarray
    p_time: np.ndarray

    @property
    def n_comments(self) -> int:
        return len(self.c_time)

    def comment_records(self) -> Iterator[CommentRecord]:
        a, s = self.authors, self.subreddits
        for i, (u, sub, t, n, p) in enumerate(zip(
            self.c_author.tolist(), self.c_sub.tolist(), self.c_time.tolist(),
            self.c_length.tolist(), self.c_post.tolist(),
        )):
            yield CommentRecord(a[u], s[sub], t, n, f"c{i:x}", f"p{p:x}")

    def post_records(self) -> Iterator[PostRecord]:
        a, s = self.authors, self.subreddits
        for i, (u, sub, t) in enumerate(zip(self.p_author.tolist(), self.p_sub.tolist(), self.p_time.tolist())):
            yield PostRecord(a[u], s[sub], t, f"p{i:x}")

    def comment_lines(self) -> Iterator[str]:
        a, s = self.authors, self.subreddits
        bodies: dict[int, str] = {}
        for i, (u, sub, t, n, p) in enumerate(zip(
            self.c_author.tolist(), self.c_sub.tolist(), self.c_time.tolist(),
            self.c_length.tolist(), self.c_post.tolist(),
        )):
            body = bodies.get(n)
            if body is None:
                body = bodies[n] = "x" * n
            yield (
                f'{{"author":"{a[u]}","subreddit":"{s[sub]}","created_utc":{t},'
                f'"body":"{body}","id":"c{i:x}","link_id":"t3_p{p:x}"}}\n'
            )

    def post_lines(self) -> Iterator[str]:
        a, s = self.authors, self.subreddits
        for i, (u, sub, t) in enumerate(zip(self.p_author.tolist(), self.p_sub.tolist(), self.p_time.tolist())):
            yield f'{{"author":"{a[u]}","subreddit":"{s[sub]}","created_utc":{t},"id":"p{i:x}"}}\n'


def _validate(spec: SynthSpec, catalog: SubredditCatalog, users: set[str]) -> dict[str, list[PlantedEvent]]:
    if spec.n_users < 1 or spec.n_subreddits < 1:
        raise InvalidSpec("n_users and n_subreddits must be positive")
    if spec.bin_size < 2:
        raise InvalidSpec("bin_size must be at least 2")
    if not 0.5 < spec.home_share <= 1:
        raise InvalidSpec("home_share must lie in (0.5, 1]")
    if spec.activity_exponent <= 1:
        raise InvalidSpec("activity_exponent must exceed 1")
    t0, t1 = spec.window
    if not 0 < t0 < t1:
        raise InvalidSpec("window must satisfy 0 < t0 < t1")
    per_user: dict[str, list[PlantedEvent]] = {}
    for ev in spec.planted_events:
        if ev.author not in users:
            raise InvalidSpec(f"planted event for undeclared user {ev.author!r}")
        for name in (ev.from_element, ev.to_element):
            if not catalog.is_included(name):
                raise InvalidSpec(f"planted event references unknown subreddit {name!r}")
        if ev.from_element == ev.to_element:
            raise InvalidSpec("planted switch must change subreddit")
        same = catalog.topic_of(ev.from_element) == catalog.topic_of(ev.to_element)
        if ev.kind not in ("drift", "shift") or (ev.kind == "drift") != same:
            raise InvalidSpec(f"{ev.kind} from {ev.from_element} to {ev.to_element} contradicts the catalog topics")
        per_user.setdefault(ev.author, []).append(ev)
    for author, events in per_user.items():
        events.sort(key=lambda e: e.bin_index)
        prev_bin, prev_to = 0, None
        for ev in events:
            if ev.bin_index <= prev_bin:
                raise InvalidSpec(f"{author}: planted bins must be increasing and >= 1")
            if prev_to is not None and ev.from_element != prev_to:
                raise InvalidSpec(f"{author}: event at bin {ev.bin_index} does not start from {prev_to}")
            prev_bin, prev_to = ev.bin_index, ev.to_element
    for bot in spec.planted_bots:
        if bot.author in users:
            raise InvalidSpec(f"bot {bot.author!r} collides with a background user")
        if bot.n_comments < 1 or bot.fixed_length < 0:
            raise InvalidSpec(f"bot {bot.author!r} needs positive comments and nonnegative length")
    if len({b.author for b in spec.planted_bots}) != len(spec.planted_bots):
        raise InvalidSpec("duplicate bot author")
    return per_user


def _bin_sizes(n: int, size: int) -> list[int]:
    full, rem = divmod(n, size)
    if full == 0:
        return [n]
    sizes = [size] * full
    if rem * 2 >= size:
        sizes.append(rem)
    elif rem:
        sizes[-1] += rem
    return sizes


def _spread_times(rng: np.random.Generator, n: int, window: tuple[int, int]) -> np.ndarray:
    t0, t1 = window
    a, b = np.sort(rng.integers(t0, t1 + 1, size=2))
    if b - a < n:
        a, b = t0, t1
    if n == 1:
        return np.array([a], dtype=np.int64)
    return a + (np.arange(n, dtype=np.int64) * (b - a)) // (n - 1)


def generate_corpus(spec: SynthSpec) -> SyntheticCorpus:
    """Generate records and the ground-truth ledger; identical for identical specs."""
    catalog = spec.topic_map if spec.topic_map is not None else default_catalog(spec.n_subreddits)
    names = [user_name(i) for i in range(spec.n_users)]
    plants = _validate(spec, catalog, set(names))
    rng = np.random.default_rng(spec.seed)

    subs = tuple(catalog.included)
    sub_code = {s: i for i, s in enumerate(subs)}
    regular = np.array([i for i, s in enumerate(subs) if not catalog.is_exotic(s)])
    exotic = np.array([i for i, s in enumerate(subs) if catalog.is_exotic(s)])
    if regular.size == 0:
        raise InvalidSpec("catalog has no regular included subreddit")
    authors = tuple(names) + tuple(b.author for b in spec.planted_bots)

    cols: dict[str, list[np.ndarray]] = {"a": [], "s": [], "t": [], "n": []}
    expected: list[ExpectedEvent] = []

    def emit(author: int, sub: np.ndarray, lengths: np.ndarray) -> None:
        cols["a"].append(np.full(sub.size, author, dtype=np.int32))
        cols["s"].append(sub.astype(np.int32))
        cols["t"].append(_spread_times(rng, sub.size, spec.window))
        cols["n"].append(lengths.astype(np.int32))

    def human_lengths(n: int) -> np.ndarray:
        return np.maximum(1, rng.lognormal(math.log(60), 0.9, size=n).astype(np.int64))

    for ui, author in enumerate(names):
        if author in plants:
            events = plants[author]
            n_bins = events[-1].bin_index + 1 + spec.tail_bins
            dominant = [events[0].from_element] * n_bins
            for ev in events:
                for b in range(ev.bin_index, n_bins):
                    dominant[b] = ev.to_element
                expected.append(ExpectedEvent(
                    author, ev.bin_index, ev.kind,
                    *(
                        (ev.from_element, ev.to_element) if ev.kind == "drift"
                        else (catalog.topic_of(ev.from_element), catalog.topic_of(ev.to_element))
                    ),
                ))
            sub = np.repeat([sub_code[d] for d in dominant], spec.bin_size)
            emit(ui, sub, human_lengths(sub.size))
            continue

        # background user: discrete power-law total, home-dominated bins
        u = rng.random()
        total = int(min(spec.max_comments, math.floor(u ** (-1.0 / (spec.activity_exponent - 1)))))
        home = int(regular[rng.integers(regular.size)])
        n_extra = int(rng.integers(0, 4))
        pool = np.concatenate([regular, exotic]) if exotic.size else regular
        extras = rng.choice(pool, size=min(n_extra, pool.size), replace=False) if n_extra else np.empty(0, int)
        extras = extras[extras != home]
        parts = []
        for size in _bin_sizes(total, spec.bin_size):
            n_home = math.ceil(spec.home_share * size)
            rest = rng.choice(extras, size=size - n_home) if extras.size else np.full(size - n_home, home)
            parts.append(rng.permutation(np.concatenate([np.full(n_home, home), rest])))
        sub = np.concatenate(parts)
        lengths = human_lengths(sub.size)
        if exotic.size:
            lengths[np.isin(sub, exotic)] = 1
        emit(ui, sub, lengths)

    for k, bot in enumerate(spec.planted_bots):
        home = int(regular[rng.integers(regular.size)])
        emit(len(names) + k, np.full(bot.n_comments, home), np.full(bot.n_comments, bot.fixed_length))

    c_author = np.concatenate(cols["a"])
    c_sub = np.concatenate(cols["s"])
    c_time = np.concatenate(cols["t"])
    c_length = np.concatenate(cols["n"])
    order = np.argsort(c_time, kind="stable")
    c_author, c_sub, c_time, c_length = c_author[order], c_sub[order], c_time[order], c_length[order]

    # posts: a fraction of each user's comments become posts in the same subreddit
    is_post = rng.random(c_time.size) < spec.post_fraction
    p_author, p_sub = c_author[is_post], c_sub[is_post]
    p_time = np.maximum(spec.window[0], c_time[is_post] - rng.integers(0, 3600, size=p_sub.size))
    p_order = np.argsort(p_time, kind="stable")
    p_author, p_sub, p_time = p_author[p_order], p_sub[p_order], p_time[p_order]

    # each comment replies to a random post of its subreddit; subreddits
    # without posts get one placeholder post id past the real ones
    c_post = np.empty(c_time.size, dtype=np.int64)
    post_ids = np.arange(p_sub.size)
    by_sub = np.argsort(p_sub, kind="stable")
    sorted_sub = p_sub[by_sub]
    for s in np.unique(c_sub).tolist():
        lo, hi = np.searchsorted(sorted_sub, [s, s + 1])
        sel = np.flatnonzero(c_sub == s)
        if hi > lo:
            c_post[sel] = post_ids[by_sub[lo:hi]][rng.integers(0, hi - lo, size=sel.size)]
        else:
            c_post[sel] = p_sub.size + s

    ledger = Ledger(
        sorted(expected, key=lambda e: (e.author, e.bin_index)),
        list(spec.planted_bots),
        sorted(plants),
    )
    return SyntheticCorpus(
        catalog, ledger, subs, authors, c_author, c_sub, c_time, c_length, c_post,
        p_author, p_sub, p_time,
    )


def _open_text(path: Path):
    if path.suffix == ".zst":
        import io

        import zstandard

        raw = open(path, "wb")
        stream = zstandard.ZstdCompressor(level=3).stream_writer(raw, closefd=True)
        return io.TextIOWrapper(stream, encoding="utf-8", newline="\n")
    return open(path, "w", encoding="utf-8", newline="\n")


def write_ledger(ledger: Ledger, out_dir: Path) -> None:
    with open(out_dir / "ledger_events.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author", "bin", "kind", "from", "to"])
        for e in ledger.events:
            w.writerow([e.author, e.bin_index, e.kind, e.from_element, e.to_element])
    with open(out_dir / "ledger_bots.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["author", "fixed_length", "n_comments"])
        for b in ledger.bots:
            w.writerow([b.author, b.fixed_length, b.n_comments])


def read_ledger_events(path: str | Path) -> list[ExpectedEvent]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            ExpectedEvent(r["author"], int(r["bin"]), r["kind"], r["from"], r["to"])
            for r in csv.DictReader(fh)
        ]


def write_corpus(corpus: SyntheticCorpus, out_dir: str | Path, compress: bool = False) -> dict[str, Path]:
    """Write comments, posts, catalog and ledger files; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".ndjson.zst" if compress else ".ndjson"
    paths = {
        "comments": out / f"comments{ext}",
        "posts": out / f"posts{ext}",
        "catalog": out / "catalog.csv",
        "ledger_events": out / "ledger_events.csv",
        "ledger_bots": out / "ledger_bots.csv",
    }
    for key, lines in (("comments", corpus.comment_lines()), ("posts", corpus.post_lines())):
        with _open_text(paths[key]) as fh:
            buf = []
            for line in lines:
                buf.append(line)
                if len(buf) >= 65536:
                    fh.write("".join(buf))
                    buf.clear()
            fh.write("".join(buf))
    write_catalog(corpus.catalog, paths["catalog"])
    write_ledger(corpus.ledger, out)
    return paths
