"""Dump parsing, catalog handling and the per-user / per-post indexes.

Records are parsed one line at a time from newline-delimited JSON dumps
(optionally zstd-compressed).  Accepted records are interned into a columnar
:class:`Corpus`, which backs the lazy ``author -> UserActivitySeries`` and
``post -> timestamps`` mappings every downstream module reads from.
"""
from __future__ import annotations

import csv
import io
import re
from array import array
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import orjson

from .errors import DuplicateEntry, MalformedRecord, MissingField, UnknownTopicClass

TOPIC_CLASSES = (
    "Sport",
    "FoodHealth",
    "ComicsGames",
    "NewsPoliticsSociety",
    "ScienceTechnology",
    "LifetipsAdvice",
    "HumorMemes",
    "BooksMoviesMusic",
    "ImagesVideos",
    "FashionLifestyle",
    "StoriesEverydayLife",
    "HowToHobbies",
    "ArtMusicSoftSciences",
    "Places",
    "Others",
)
_TOPIC_KEYS = {re.sub(r"[^a-z]", "", t.lower()): t for t in TOPIC_CLASSES}

DELETED_AUTHORS = frozenset({"[deleted]", "[removed]"})

COMMENT_KEYS = ("author", "subreddit", "created_utc", "body", "id", "link_id")
POST_KEYS = ("author", "subreddit", "created_utc", "id")

COMMENT, POST = 0, 1


class CommentRecord(NamedTuple):
    author: str
    subreddit: str
    created_utc: int
    body_length: int
    comment_id: str
    parent_post_id: str

    kind = "comment"


class PostRecord(NamedTuple):
    author: str
    subreddit: str
    created_utc: int
    post_id: str

    kind = "post"


def canonical_topic(label: str) -> str:
    """Map a topic label to its canonical class name.

    Spacing, punctuation and case are ignored, so ``"News, Politics, Society"``
    and ``"NewsPoliticsSociety"`` are the same class.
    """
    key = re.sub(r"[^a-z]", "", label.lower())
    try:
        return _TOPIC_KEYS[key]
    except KeyError:
        raise UnknownTopicClass(f"unknown topic class {label!r}") from None


def _as_timestamp(value) -> int:
    if isinstance(value, bool):
        raise MalformedRecord(f"bad created_utc {value!r}")
    if isinstance(value, int):
        ts = value
    elif isinstance(value, float) and value.is_integer():
        ts = int(value)
    elif isinstance(value, str) and value.strip().lstrip("-").isdigit():
        ts = int(value)
    else:
        raise MalformedRecord(f"bad created_utc {value!r}")
    if ts <= 0:
        raise MalformedRecord(f"non-positive created_utc {ts}")
    return ts


def _as_name(obj: dict, key: str) -> str:
    value = obj[key]
    if not isinstance(value, str) or not value:
        raise MalformedRecord(f"empty or non-string {key!r}")
    return value


def parse_record(line: str | bytes, kind: str) -> CommentRecord | PostRecord:
    """Parse one dump line into a comment or post record.

    Raises:
        MalformedRecord: the line is not a JSON object, or a field has an
            invalid value.
        MissingField: a required key is absent.
    """
    try:
        obj = orjson.loads(line)
    except orjson.JSONDecodeError as exc:
        raise MalformedRecord(str(exc)) from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object")

    if kind == "comment":
        for key in COMMENT_KEYS:
            if key not in obj:
                raise MissingField(key)
        body = obj["body"]
        if not isinstance(body, str):
            raise MalformedRecord("non-string body")
        if body.endswith("\n"):
            body = body[:-1]
        link = _as_name(obj, "link_id")
        if link.startswith("t3_"):
            link = link[3:]
        return CommentRecord(
            _as_name(obj, "author"),
            _as_name(obj, "subreddit"),
            _as_timestamp(obj["created_utc"]),
            len(body),
            str(obj["id"]),
            link,
        )
    if kind == "post":
        for key in POST_KEYS:
            if key not in obj:
                raise MissingField(key)
        return PostRecord(
            _as_name(obj, "author"),
            _as_name(obj, "subreddit"),
            _as_timestamp(obj["created_utc"]),
            _as_name(obj, "id"),
        )
    raise ValueError(f"kind must be 'comment' or 'post', got {kind!r}")


# --------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class CatalogEntry:
    topic_class: str
    included: bool = True
    exotic_rules: bool = False


class SubredditCatalog(Mapping):
    """Subreddit -> topic class mapping with inclusion flags.

    Iteration order is the catalog's row order; it fixes the subreddit axis of
    activity vectors.  Looking up an uncataloged subreddit with :meth:`get`
    returns ``None``.
    """

    def __init__(self, entries: Mapping[str, CatalogEntry] | Iterable[tuple[str, CatalogEntry]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._entries: dict[str, CatalogEntry] = {}
        for name, entry in items:
            if name in self._entries:
                raise DuplicateEntry(name)
            topic = canonical_topic(entry.topic_class)
            if topic != entry.topic_class:
                entry = CatalogEntry(topic, entry.included, entry.exotic_rules)
            self._entries[name] = entry
        self._included = tuple(n for n, e in self._entries.items() if e.included)
        self._position = {n: i for i, n in enumerate(self._included)}

    def __getitem__(self, name: str) -> CatalogEntry:
        return self._entries[name]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"SubredditCatalog({len(self)} entries, {len(self._included)} included)"

    def topic_of(self, subreddit: str) -> str | None:
        entry = self._entries.get(subreddit)
        return None if entry is None else entry.topic_class

    def is_included(self, subreddit: str) -> bool:
        entry = self._entries.get(subreddit)
        return entry is not None and entry.included

    def is_exotic(self, subreddit: str) -> bool:
        entry = self._entries.get(subreddit)
        return entry is not None and entry.exotic_rules

    @property
    def included(self) -> tuple[str, ...]:
        """Included subreddits in row order; the activity-vector axis."""
        return self._included

    def position(self, subreddit: str) -> int | None:
        return self._position.get(subreddit)


_TRUE = {"1", "true", "t", "yes", "y", "included", "include"}
_FALSE = {"0", "false", "f", "no", "n", "excluded", "exclude", ""}


def _parse_flag(text: str | None, column: str) -> bool:
    key = (text or "").strip().lower()
    if key in _TRUE:
        return True
    if key in _FALSE:
        return False
    raise ValueError(f"cannot read {column}={text!r} as a boolean")


def load_catalog(path: str | Path) -> SubredditCatalog:
    """Read a ``subreddit,topic_class,included,exotic_rules`` table."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"subreddit", "topic_class"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"catalog {path} lacks columns {sorted(missing)}")
        rows = []
        for row in reader:
            name = row["subreddit"].strip()
            if not name:
                continue
            included = _parse_flag(row.get("included", "true") or "true", "included")
            exotic = _parse_flag(row.get("exotic_rules"), "exotic_rules")
            rows.append((name, CatalogEntry(canonical_topic(row["topic_class"]), included, exotic)))
    return SubredditCatalog(rows)


def write_catalog(catalog: SubredditCatalog, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subreddit", "topic_class", "included", "exotic_rules"])
        for name, entry in catalog.items():
            writer.writerow([name, entry.topic_class, str(entry.included).lower(), str(entry.exotic_rules).lower()])


# --------------------------------------------------------------------------
# streaming


@dataclass
class IngestCounters:
    read: int = 0
    malformed: int = 0
    missing_field: int = 0
    deleted_author: int = 0
    filtered_out: int = 0
    accepted: int = 0

    @property
    def skipped(self) -> int:
        return self.malformed + self.missing_field + self.deleted_author + self.filtered_out

    def add(self, other: "IngestCounters") -> None:
        for name in ("read", "malformed", "missing_field", "deleted_author", "filtered_out", "accepted"):
            setattr(self, name, getattr(self, name) + getattr(other, name))


def iter_raw_lines(path: str | Path) -> Iterator[bytes]:
    """Yield the raw lines of a plain or ``.zst`` dump file."""
    path = Path(path)
    with open(path, "rb") as raw:
        if path.suffix == ".zst":
            import zstandard

            stream = zstandard.ZstdDecompressor(max_window_size=2**31).stream_reader(raw)
            yield from io.BufferedReader(stream, buffer_size=1 << 20)
        else:
            yield from raw


def iter_lines(path: str | Path) -> Iterator[str]:
    """Yield the decoded lines of a plain or ``.zst`` dump file."""
    for line in iter_raw_lines(path):
        yield line.decode("utf-8", errors="replace")


def read_records(
    paths: Iterable[str | Path], kind: str, counters: IngestCounters | None = None
) -> Iterator[CommentRecord | PostRecord]:
    """Stream records from dump files, skipping bad lines and deleted authors."""
    if counters is None:
        counters = IngestCounters()
    for path in paths:
        for line in iter_raw_lines(path):
            if not line.strip():
                continue
            counters.read += 1
            try:
                record = parse_record(line, kind)
            except MissingField:
                counters.missing_field += 1
                continue
            except MalformedRecord:
                counters.malformed += 1
                continue
            if record.author in DELETED_AUTHORS:
                counters.deleted_author += 1
                continue
            yield record


def filter_stream(
    records: Iterable,
    catalog: SubredditCatalog,
    window: tuple[int, int] | None = None,
    counters: IngestCounters | None = None,
) -> Iterator:
    """Keep records in included subreddits with ``t0 <= created_utc <= t1``."""
    if window is not None:
        t0, t1 = window
        if not t0 < t1:
            raise ValueError(f"window start {t0} must precede end {t1}")
    else:
        t0, t1 = None, None
    included = set(catalog.included)
    for record in records:
        keep = record.subreddit in included and (
            t0 is None or t0 <= record.created_utc <= t1
        )
        if counters is not None:
            if keep:
                counters.accepted += 1
            else:
                counters.filtered_out += 1
        if keep:
            yield record


# --------------------------------------------------------------------------
# indexes


class ActivityEvent(NamedTuple):
    created_utc: int
    subreddit: str
    body_length: int
    kind: str


_KIND_NAMES = ("comment", "post")


@dataclass(frozen=True, eq=False)
class UserActivitySeries:
    """Time-ordered events of one author, stored as parallel arrays.

    ``subreddit_codes`` index into ``vocabulary``; ``kinds`` holds
    ``COMMENT`` (0) or ``POST`` (1).
    """

    author: str
    times: np.ndarray
    subreddit_codes: np.ndarray
    lengths: np.ndarray
    kinds: np.ndarray
    vocabulary: Sequence[str]

    @classmethod
    def from_events(cls, author: str, events: Iterable) -> "UserActivitySeries":
        """Build a series from ``(created_utc, subreddit, body_length[, kind])`` tuples."""
        rows = []
        for ev in events:
            kind = ev[3] if len(ev) > 3 else "comment"
            rows.append((int(ev[0]), ev[1], int(ev[2]), _KIND_NAMES.index(kind)))
        vocab = sorted({r[1] for r in rows})
        code = {name: i for i, name in enumerate(vocab)}
        times = np.array([r[0] for r in rows], dtype=np.int64)
        order = np.argsort(times, kind="stable")
        return cls(
            author,
            times[order],
            np.array([code[r[1]] for r in rows], dtype=np.int32)[order],
            np.array([r[2] for r in rows], dtype=np.int32)[order],
            np.array([r[3] for r in rows], dtype=np.int8)[order],
            tuple(vocab),
        )

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, item: slice) -> "UserActivitySeries":
        if not isinstance(item, slice):
            raise TypeError("series supports slicing only; use .events for single events")
        return UserActivitySeries(
            self.author,
            self.times[item],
            self.subreddit_codes[item],
            self.lengths[item],
            self.kinds[item],
            self.vocabulary,
        )

    def _masked(self, mask: np.ndarray) -> "UserActivitySeries":
        return UserActivitySeries(
            self.author,
            self.times[mask],
            self.subreddit_codes[mask],
            self.lengths[mask],
            self.kinds[mask],
            self.vocabulary,
        )

    @property
    def subreddits(self) -> list[str]:
        vocab = self.vocabulary
        return [vocab[c] for c in self.subreddit_codes.tolist()]

    @property
    def events(self) -> list[ActivityEvent]:
        return [
            ActivityEvent(t, s, n, _KIND_NAMES[k])
            for t, s, n, k in zip(self.times.tolist(), self.subreddits, self.lengths.tolist(), self.kinds.tolist())
        ]

    def comments(self) -> "UserActivitySeries":
        return self._masked(self.kinds == COMMENT)

    def posts(self) -> "UserActivitySeries":
        return self._masked(self.kinds == POST)

    def in_subreddit(self, subreddit: str) -> "UserActivitySeries":
        try:
            code = list(self.vocabulary).index(subreddit)
        except ValueError:
            return self._masked(np.zeros(len(self), dtype=bool))
        return self._masked(self.subreddit_codes == code)


class CorpusBuilder:
    """Accumulates records into interned columns."""

    def __init__(self):
        self.author_codes: dict[str, int] = {}
        self.subreddit_codes: dict[str, int] = {}
        self.post_codes: dict[str, int] = {}
        self.author = array("i")
        self.subreddit = array("i")
        self.post = array("i")
        self.time = array("q")
        self.length = array("i")
        self.kind = array("b")

    def add(self, record: CommentRecord | PostRecord) -> None:
        a, s, p = self.author_codes, self.subreddit_codes, self.post_codes
        self.author.append(a.setdefault(record.author, len(a)))
        self.subreddit.append(s.setdefault(record.subreddit, len(s)))
        self.time.append(record.created_utc)
        if type(record) is CommentRecord:
            self.post.append(p.setdefault(record.parent_post_id, len(p)))
            self.length.append(record.body_length)
            self.kind.append(COMMENT)
        else:
            self.post.append(p.setdefault(record.post_id, len(p)))
            self.length.append(0)
            self.kind.append(POST)

    def extend(self, records: Iterable) -> "CorpusBuilder":
        add = self.add
        for record in records:
            add(record)
        return self

    def __len__(self) -> int:
        return len(self.time)

    def merge(self, other: "CorpusBuilder") -> "CorpusBuilder":
        """Append ``other``'s rows after this builder's rows."""

        def remap(mine: dict, theirs: dict, column: array) -> np.ndarray:
            table = np.empty(len(theirs), dtype=np.int32)
            for name, code in theirs.items():
                table[code] = mine.setdefault(name, len(mine))
            return table[np.frombuffer(column, dtype=np.int32)] if len(column) else np.empty(0, np.int32)

        self.author.frombytes(remap(self.author_codes, other.author_codes, other.author).tobytes())
        self.subreddit.frombytes(remap(self.subreddit_codes, other.subreddit_codes, other.subreddit).tobytes())
        self.post.frombytes(remap(self.post_codes, other.post_codes, other.post).tobytes())
        self.time.extend(other.time)
        self.length.extend(other.length)
        self.kind.extend(other.kind)
        return self

    def build(self) -> "Corpus":
        return Corpus._from_builder(self)


def _sorted_recode(codes: dict[str, int]) -> tuple[tuple[str, ...], np.ndarray]:
    names = sorted(codes)
    table = np.empty(len(codes), dtype=np.int32)
    for rank, name in enumerate(names):
        table[codes[name]] = rank
    return tuple(names), table


@dataclass(frozen=True, eq=False)
class Corpus:
    """Immutable columnar store of accepted records.

    Rows are sorted by author name, then timestamp, then input order.  Name
    tables are sorted so that codes do not depend on input order.
    """

    authors: tuple[str, ...]
    subreddits: tuple[str, ...]
    posts: tuple[str, ...]
    author: np.ndarray
    subreddit: np.ndarray
    post: np.ndarray
    time: np.ndarray
    length: np.ndarray
    kind: np.ndarray
    offsets: np.ndarray = field(repr=False)

    @classmethod
    def _from_builder(cls, b: CorpusBuilder) -> "Corpus":
        authors, a_map = _sorted_recode(b.author_codes)
        subreddits, s_map = _sorted_recode(b.subreddit_codes)
        posts, p_map = _sorted_recode(b.post_codes)
        author = a_map[np.frombuffer(b.author, dtype=np.int32)] if len(b) else np.empty(0, np.int32)
        time = np.frombuffer(b.time, dtype=np.int64).copy()
        order = np.lexsort((time, author))
        author = author[order]
        offsets = np.searchsorted(author, np.arange(len(authors) + 1))
        cols = {}
        for name, column, table in (
            ("subreddit", b.subreddit, s_map),
            ("post", b.post, p_map),
        ):
            raw = np.frombuffer(column, dtype=np.int32) if len(b) else np.empty(0, np.int32)
            cols[name] = table[raw][order] if len(b) else raw
        corpus = cls(
            authors,
            subreddits,
            posts,
            author,
            cols["subreddit"],
            cols["post"],
            time[order],
            np.frombuffer(b.length, dtype=np.int32)[order] if len(b) else np.empty(0, np.int32),
            np.frombuffer(b.kind, dtype=np.int8)[order] if len(b) else np.empty(0, np.int8),
            offsets,
        )
        for arr in (corpus.author, corpus.subreddit, corpus.post, corpus.time, corpus.length, corpus.kind):
            arr.flags.writeable = False
        return corpus

    @classmethod
    def from_records(cls, records: Iterable) -> "Corpus":
        return CorpusBuilder().extend(records).build()

    def __len__(self) -> int:
        return len(self.time)

    @property
    def is_comment(self) -> np.ndarray:
        return self.kind == COMMENT

    def series(self, author_code: int) -> UserActivitySeries:
        lo, hi = self.offsets[author_code], self.offsets[author_code + 1]
        return UserActivitySeries(
            self.authors[author_code],
            self.time[lo:hi],
            self.subreddit[lo:hi],
            self.length[lo:hi],
            self.kind[lo:hi],
            self.subreddits,
        )

    def users(self) -> "UserIndex":
        return UserIndex(self)

    def post_index(self) -> "PostIndex":
        return PostIndex(self)


class UserIndex(Mapping):
    """``author -> UserActivitySeries`` view over a :class:`Corpus`."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self._codes = {name: i for i, name in enumerate(corpus.authors)}

    def __getitem__(self, author: str) -> UserActivitySeries:
        return self.corpus.series(self._codes[author])

    def __iter__(self):
        return iter(self.corpus.authors)

    def __len__(self) -> int:
        return len(self.corpus.authors)

    def n_events(self) -> int:
        return len(self.corpus)


class PostIndex(Mapping):
    """``post id -> sorted comment timestamps``; posts without comments are absent."""

    def __init__(self, corpus: Corpus):
        mask = corpus.is_comment
        post = corpus.post[mask]
        time = corpus.time[mask]
        order = np.lexsort((time, post))
        self._post = post[order]
        self._time = time[order]
        present, starts = np.unique(self._post, return_index=True)
        bounds = np.append(starts, len(self._post))
        self._names = corpus.posts
        self._slices = {
            corpus.posts[p]: (bounds[i], bounds[i + 1]) for i, p in enumerate(present.tolist())
        }

    def __getitem__(self, post_id: str) -> np.ndarray:
        lo, hi = self._slices[post_id]
        return self._time[lo:hi]

    def __iter__(self):
        return iter(self._slices)

    def __len__(self) -> int:
        return len(self._slices)

    def first_last(self) -> tuple[np.ndarray, np.ndarray]:
        """First and last comment time of every present post, in key order."""
        if not len(self._time):
            return np.empty(0, np.int64), np.empty(0, np.int64)
        starts = np.array([lo for lo, _ in self._slices.values()], dtype=np.int64)
        ends = np.array([hi for _, hi in self._slices.values()], dtype=np.int64)
        return self._time[starts], self._time[ends - 1]


def build_user_index(records: Iterable) -> UserIndex:
    return Corpus.from_records(records).users()


def build_post_index(comments: Iterable) -> PostIndex:
    return Corpus.from_records(r for r in comments if type(r) is CommentRecord).post_index()


# --------------------------------------------------------------------------
# file ingestion


def _fast_fields(line: bytes, kind: str):
    """``(author, subreddit, ts, length, post)`` for a well-formed line, else None.

    Anything unusual goes back through :func:`parse_record`, which owns the
    validation rules; this only skips the record object on the common path.
    """
    try:
        obj = orjson.loads(line)
        author, sub, ts = obj["author"], obj["subreddit"], obj["created_utc"]
        if kind == "comment":
            body, post = obj["body"], obj["link_id"]
            obj["id"]
        else:
            body, post = "", obj["id"]
    except Exception:
        return None
    if (type(author) is not str or not author or type(sub) is not str or not sub or type(ts) is not int
            or ts <= 0 or type(body) is not str or type(post) is not str or not post):
        return None
    if kind == "comment":
        if post.startswith("t3_"):
            post = post[3:]
        return author, sub, ts, len(body) - body.endswith("\n"), post
    return author, sub, ts, 0, post


def _ingest_one(args) -> tuple[CorpusBuilder, IngestCounters]:
    """Read, filter and intern one dump file.

    Equivalent to ``filter_stream(read_records(...))`` fed to a builder, fused
    into a single loop because this is the hot path on large dumps.
    """
    path, kind, catalog, window = args
    if kind not in ("comment", "post"):
        raise ValueError(f"kind must be 'comment' or 'post', got {kind!r}")
    if window is not None and not window[0] < window[1]:
        raise ValueError(f"window start {window[0]} must precede end {window[1]}")
    t0, t1 = window if window is not None else (-(2**63), 2**63 - 1)
    counters = IngestCounters()
    b = CorpusBuilder()
    included = set(catalog.included)
    a_codes, s_codes, p_codes = b.author_codes, b.subreddit_codes, b.post_codes
    add_a, add_s, add_p = b.author.append, b.subreddit.append, b.post.append
    add_t, add_n, add_k = b.time.append, b.length.append, b.kind.append
    flag = COMMENT if kind == "comment" else POST
    read = deleted = filtered = accepted = 0
    for line in iter_raw_lines(path):
        fields = _fast_fields(line, kind)
        if fields is None:
            if not line.strip():
                continue
            try:
                rec = parse_record(line, kind)
            except MissingField:
                read += 1
                counters.missing_field += 1
                continue
            except MalformedRecord:
                read += 1
                counters.malformed += 1
                continue
            fields = (rec.author, rec.subreddit, rec.created_utc,
                      rec.body_length if kind == "comment" else 0,
                      rec.parent_post_id if kind == "comment" else rec.post_id)
        read += 1
        author, sub, ts, length, post = fields
        if author in DELETED_AUTHORS:
            deleted += 1
            continue
        if sub not in included or not t0 <= ts <= t1:
            filtered += 1
            continue
        accepted += 1
        code = a_codes.get(author)
        if code is None:
            code = a_codes[author] = len(a_codes)
        add_a(code)
        code = s_codes.get(sub)
        if code is None:
            code = s_codes[sub] = len(s_codes)
        add_s(code)
        code = p_codes.get(post)
        if code is None:
            code = p_codes[post] = len(p_codes)
        add_p(code)
        add_t(ts)
        add_n(length)
        add_k(flag)
    counters.read += read
    counters.deleted_author += deleted
    counters.filtered_out += filtered
    counters.accepted += accepted
    return b, counters


def ingest_files(
    comment_paths: Sequence[str | Path],
    post_paths: Sequence[str | Path],
    catalog: SubredditCatalog,
    window: tuple[int, int] | None = None,
    threads: int = 1,
) -> tuple[Corpus, IngestCounters]:
    """Parse, filter and index dump files.

    With ``threads > 1`` each file is parsed in its own worker process; the
    partial builders are merged in argument order, so the result does not
    depend on scheduling.
    """
    jobs = [(p, "comment", catalog, window) for p in comment_paths]
    jobs += [(p, "post", catalog, window) for p in post_paths]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_ingest_one, jobs))
    else:
        parts = [_ingest_one(job) for job in jobs]

    counters = IngestCounters()
    builder = CorpusBuilder()
    for i, (part, part_counters) in enumerate(parts):
        counters.add(part_counters)
        if i == 0:
            builder = part
        else:
            builder.merge(part)
    return builder.build(), counters
