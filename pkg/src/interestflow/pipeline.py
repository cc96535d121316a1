"""End-to-end runs: ingest, then stats, gini, interest and bots stages."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
import math
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import activity_stats as stats
from . import bot_filter as bots
from . import concentration as conc
from . import interest_dynamics as dyn
from .corpus_ingest import Corpus, IngestCounters, SubredditCatalog, ingest_files, load_catalog
from .errors import ConfigError, InsufficientSupport, InterestflowError, NonConvergence

log = logging.getLogger(__name__)

STAGES = ("stats", "gini", "interest", "bots")
MANIFEST = "manifest.txt"


@dataclass
class RunConfig:
    comments: list[Path] = field(default_factory=list)
    posts: list[Path] = field(default_factory=list)
    catalog: Path | None = None
    window_from: str | None = None
    window_to: str | None = None
    bin_size: int = dyn.DEFAULT_BIN_SIZE
    threshold_deg: float = dyn.DEFAULT_THRESHOLD_DEG
    min_comments: int = dyn.DEFAULT_MIN_COMMENTS
    per_subreddit: bool = True
    gini_mode: str = "corrected"
    seed: int = 0
    null_repetitions: int = 1
    bot_percentile: float = bots.DEFAULT_PERCENTILE
    min_comments_for_entropy: int = bots.DEFAULT_MIN_COMMENTS
    exclude_bots: bool = False
    output: Path = Path("interestflow-out")
    threads: int = 1
    force: bool = False

    def window(self) -> tuple[int, int] | None:
        if self.window_from is None and self.window_to is None:
            return None
        t0 = parse_time(self.window_from, end_of_day=False) if self.window_from else 1
        t1 = parse_time(self.window_to, end_of_day=True) if self.window_to else 2**62
        if not t0 < t1:
            raise ConfigError(f"window start {self.window_from} is not before end {self.window_to}")
        return t0, t1

    def validate(self) -> None:
        if self.catalog is None:
            raise ConfigError("a catalog path is required")
        if not Path(self.catalog).is_file():
            raise ConfigError(f"catalog not found: {self.catalog}")
        if not self.comments:
            raise ConfigError("at least one comment dump is required")
        for p in [*self.comments, *self.posts]:
            if not Path(p).is_file():
                raise ConfigError(f"input not found: {p}")
        if not 0 < self.threshold_deg < 90:
            raise ConfigError("threshold must lie strictly between 0 and 90 degrees")
        if self.bin_size < 2:
            raise ConfigError("bin size must be at least 2")
        if self.gini_mode not in conc.MODES:
            raise ConfigError(f"gini mode must be one of {conc.MODES}")
        if not 0 < self.bot_percentile < 100:
            raise ConfigError("bot percentile must lie in (0, 100)")
        self.window()


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def parse_time(text: str, end_of_day: bool = False) -> int:
    """ISO date or datetime (UTC) to epoch seconds; a bare date ends at 23:59:59 when ``end_of_day``."""
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"not an ISO date: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    ts = int(dt.timestamp())
    if end_of_day and len(text.strip()) == 10:
        ts += 86399
    return ts


def coerce_field(name: str, value):
    """Convert a text value to the type of RunConfig field ``name``."""
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if name not in fields:
        raise ConfigError(f"unknown config key {name!r}")
    default = fields[name].default
    if name in ("comments", "posts"):
        if isinstance(value, str):
            value = [v for v in (s.strip() for s in value.split(",")) if v]
        return [Path(v) for v in value]
    if name in ("catalog", "output"):
        return None if value in (None, "") else Path(value)
    if name in ("window_from", "window_to"):
        return None if value in (None, "") else str(value)
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        try:
            return _BOOL[str(value).strip().lower()]
        except KeyError:
            raise ConfigError(f"{name} expects a boolean, got {value!r}") from None
    try:
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} expects a number, got {value!r}") from None
    return str(value)


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys map to underscores."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            values[key] = coerce_field(key, value)
    return values


# --------------------------------------------------------------------------
# table writers


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_histogram(path: Path, hist: stats.Histogram) -> None:
    write_table(path, ["value", "count"], zip(hist.centers.tolist(), hist.counts.tolist()))


def write_matrix(path: Path, matrix: dyn.TransitionMatrix) -> None:
    rows = ([label, *row] for label, row in zip(matrix.labels, matrix.counts.tolist()))
    write_table(path, ["from\\to", *matrix.labels], rows)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------
# stages


@dataclass
class RunState:
    config: RunConfig
    catalog: SubredditCatalog
    corpus: Corpus
    counters: IngestCounters
    out: Path
    results: dict = field(default_factory=dict)
    excluded: frozenset[str] = frozenset()


def _fit_rows(name: str, fit) -> list[tuple]:
    if isinstance(fit, stats.DoublePowerLawFit):
        return [
            (name, "a_low", fit.low.a), (name, "b_low", fit.low.b),
            (name, "a_high", fit.high.a), (name, "b_high", fit.high.b),
            (name, "breakpoint", fit.breakpoint), (name, "residual", fit.residual),
            (name, "single_residual", fit.single_residual),
            (name, "effectively_single", fit.effectively_single),
        ]
    if isinstance(fit, stats.SkewGaussianFit):
        return [
            (name, "location", fit.location), (name, "scale", fit.scale), (name, "shape", fit.shape),
            (name, "gamma", fit.gamma), (name, "mode", fit.mode), (name, "residual", fit.residual),
        ]
    return [(name, "a", fit.a), (name, "b", fit.b), (name, "residual", fit.residual)]


def _try_fit(name: str, func, hist) -> list[tuple]:
    try:
        return _fit_rows(name, func(hist))
    except (InsufficientSupport, NonConvergence) as exc:
        return [(name, "error", type(exc).__name__)]


def stage_stats(state: RunState) -> None:
    corpus, out = state.corpus, state.out
    dist_dir = out / "distributions"
    dist_dir.mkdir(exist_ok=True)
    fits: list[tuple] = []
    for measure in stats.MEASURES:
        hist = stats.activity_distribution(corpus, measure)
        write_histogram(dist_dir / f"{measure}.csv", hist)
        fits += _try_fit(measure, stats.fit_power_law, hist)
        if measure.startswith("subreddits_"):
            fits += _try_fit(f"{measure}_double", stats.fit_double_power_law, hist)

    post_life = stats.post_lifetimes(corpus)
    state.results["posts_zero_lifetime"] = int(np.count_nonzero(post_life == 0))
    positive = post_life[post_life > 0] / stats.DAY
    hist = stats.log_histogram(positive)
    write_histogram(dist_dir / "post_lifetime_days.csv", hist)
    fits += _try_fit("post_lifetime_days", stats.fit_power_law, hist)

    user_life = np.array(sorted(stats.mean_user_lifetime_per_subreddit(corpus).values())) / stats.DAY
    hist = stats.linear_histogram(user_life, bin_width=1.0)
    write_histogram(dist_dir / "user_lifetime_days.csv", hist)
    fits += _try_fit("user_lifetime_days", stats.fit_skew_gaussian, hist)
    write_table(out / "fits.csv", ["fit", "param", "value"], fits)


def stage_gini(state: RunState) -> None:
    cfg = state.config
    uc = conc.corpus_concentration(
        state.corpus, state.catalog, seed=cfg.seed, mode=cfg.gini_mode,
        repetitions=cfg.null_repetitions, exclude=state.excluded,
    )
    state.results["gini_users"] = len(uc.authors)
    if not uc.authors:
        write_table(state.out / "gini_curve.csv", GINI_HEADER, [])
        return
    curve = conc.bin_curve(uc)
    write_table(state.out / "gini_curve.csv", GINI_HEADER, curve.rows())


GINI_HEADER = ["bin_lo", "bin_hi", "mean_subreddits", "median_subreddits", "mean_gini", "null_mean_gini"]


def stage_interest(state: RunState) -> None:
    cfg = state.config
    index = state.corpus.users()
    selected = sorted(
        dyn.corpus_active_users(state.corpus, cfg.min_comments, cfg.per_subreddit) - state.excluded
    )
    per_user: dict[str, list[dyn.InterestEvent]] = {}
    rows = []
    for author in selected:
        d = dyn.user_dynamics(index[author], state.catalog, cfg.bin_size, cfg.threshold_deg)
        per_user[author] = d.events
        rows += [(author, e.at_bin, e.kind, e.from_element, e.to_element, e.angle) for e in d.events]
    write_table(state.out / "events.csv", ["author", "bin", "kind", "from", "to", "angle"], rows)
    all_events = [e for events in per_user.values() for e in events]
    write_matrix(state.out / "transitions_drift.csv", dyn.transition_matrix(all_events, "subreddit"))
    write_matrix(state.out / "transitions_shift.csv", dyn.transition_matrix(all_events, "topic"))
    summary = dyn.event_count_distributions(per_user)
    dist_dir = state.out / "distributions"
    dist_dir.mkdir(exist_ok=True)
    write_histogram(dist_dir / "drift_counts.csv", summary.drifts)
    write_histogram(dist_dir / "shift_counts.csv", summary.shifts)
    state.results["interest_users"] = summary.n_users
    state.results["shift_fraction"] = summary.shift_fraction
    state.results["events"] = len(rows)
    state.results["per_user_events"] = per_user


def _observation_seconds(state: RunState) -> int:
    window = state.config.window()
    if window is not None and window[1] < 2**62:
        return window[1] - window[0] + 1
    t = state.corpus.time
    return int(t.max() - t.min()) + 1 if t.size else 1


def compute_bot_flags(state: RunState) -> list[bots.BotFlag]:
    cfg = state.config
    reports = bots.corpus_entropy_reports(state.corpus, state.catalog)
    comment_counts = np.bincount(state.corpus.author[state.corpus.is_comment], minlength=len(state.corpus.authors))
    counts = {a: int(n) for a, n in zip(state.corpus.authors, comment_counts.tolist())}
    flags = bots.flag_automated(
        reports, counts, _observation_seconds(state), cfg.bot_percentile, cfg.min_comments_for_entropy,
    )
    state.results["bot_reports"] = reports
    state.results["bot_flags"] = flags
    return flags


def stage_bots(state: RunState) -> None:
    flags = state.results.get("bot_flags") or compute_bot_flags(state)
    reports = {r.author: r for r in state.results["bot_reports"]}
    rows = []
    for f in flags:
        r = reports[f.author]
        rows.append((f.author, r.entropy_bits, r.n_comments, f.flagged, ";".join(sorted(f.reasons))))
    write_table(state.out / "bots.csv", ["author", "entropy_bits", "n_comments", "flagged", "reasons"], rows)
    state.results["bots_flagged"] = sum(f.flagged for f in flags)
    try:
        profile = bots.entropy_profile(reports.values(), min_comments=state.config.min_comments_for_entropy)
    except InterestflowError:
        return
    write_table(
        state.out / "entropy_profile.csv",
        ["bin_lo", "bin_hi", "n_users", "name_pattern_fraction", "mean_comments"],
        (
            (profile.bin_edges[i], profile.bin_edges[i + 1], profile.n_users[i],
             profile.name_pattern_fraction[i], profile.mean_comments[i])
            for i in range(len(profile.n_users))
        ),
    )


_STAGE_FUNCS = {"stats": stage_stats, "gini": stage_gini, "interest": stage_interest, "bots": stage_bots}


class StageError(InterestflowError):
    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error


def prepare_output(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigError(f"output directory {out} is not empty; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)


def run_pipeline(config: RunConfig, stages: Sequence[str] = STAGES) -> RunState:
    """Run ingestion plus the requested stages, writing tables and a manifest."""
    config.validate()
    for s in stages:
        if s not in STAGES:
            raise ConfigError(f"unknown stage {s!r}")
    out = Path(config.output)
    prepare_output(out, config.force)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    clock = time.perf_counter()

    try:
        catalog = load_catalog(config.catalog)
    except (InterestflowError, ValueError) as exc:
        raise StageError("corpus_ingest", exc) from exc
    corpus, counters = ingest_files(config.comments, config.posts, catalog, config.window(), config.threads)
    log.info("ingested %d records from %d lines", counters.accepted, counters.read)
    state = RunState(config, catalog, corpus, counters, out)

    if config.exclude_bots and ("gini" in stages or "interest" in stages):
        state.excluded = frozenset(f.author for f in compute_bot_flags(state) if f.flagged)

    for name in STAGES:
        if name not in stages:
            continue
        try:
            _STAGE_FUNCS[name](state)
        except InterestflowError as exc:
            raise StageError(name, exc) from exc
        log.info("stage %s done", name)

    write_manifest(state, stages, started, time.perf_counter() - clock)
    return state


def write_manifest(state: RunState, stages: Sequence[str], started: str, elapsed: float) -> None:
    cfg = state.config
    lines = [f"started_at={started}", f"finished_at={datetime.now(timezone.utc).isoformat(timespec='seconds')}",
             f"elapsed_seconds={elapsed:.3f}", f"stages={','.join(s for s in STAGES if s in stages)}"]
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"config.{f.name}={value}")
    for p in [*cfg.comments, *cfg.posts, cfg.catalog]:
        lines.append(f"input.sha256.{Path(p).name}={_sha256(Path(p))}")
    c = state.counters
    lines += [
        f"counters.records_read={c.read}",
        f"counters.records_accepted={c.accepted}",
        f"counters.records_skipped={c.skipped}",
        f"counters.skipped_malformed={c.malformed}",
        f"counters.skipped_missing_field={c.missing_field}",
        f"counters.skipped_deleted_author={c.deleted_author}",
        f"counters.skipped_filtered_out={c.filtered_out}",
        f"counters.users_indexed={len(state.corpus.authors)}",
        f"counters.subreddits_indexed={len(state.corpus.subreddits)}",
    ]
    for key in ("posts_zero_lifetime", "gini_users", "interest_users", "events", "shift_fraction",
                "bots_flagged", "excluded_bots"):
        if key == "excluded_bots":
            if cfg.exclude_bots:
                lines.append(f"results.excluded_bots={len(state.excluded)}")
            continue
        if key in state.results:
            lines.append(f"results.{key}={_fmt(state.results[key])}")
    (state.out / MANIFEST).write_text("\n".join(lines) + "\n", encoding="utf-8")


TIMESTAMP_KEYS = ("started_at", "finished_at", "elapsed_seconds")
