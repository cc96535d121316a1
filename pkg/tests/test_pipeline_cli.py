import csv

import pytest

from interestflow.cli import main
from interestflow.errors import ConfigError
from interestflow.pipeline import TIMESTAMP_KEYS, RunConfig, parse_time, read_config_file, run_pipeline

TABLES = {
    "fits.csv": ["fit", "param", "value"],
    "gini_curve.csv": ["bin_lo", "bin_hi", "mean_subreddits", "median_subreddits", "mean_gini", "null_mean_gini"],
    "events.csv": ["author", "bin", "kind", "from", "to", "angle"],
    "bots.csv": ["author", "entropy_bits", "n_comments", "flagged", "reasons"],
}
DISTRIBUTIONS = [
    "posts_per_author", "comments_per_author", "subreddits_posted_per_author",
    "subreddits_commented_per_author", "posts_per_subreddit", "comments_per_subreddit",
    "post_lifetime_days", "user_lifetime_days", "drift_counts", "shift_counts",
]


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--n-users", "400", "--planted-users", "30", "--bots", "1",
                 "--bot-comments", "3000", "--seed", "5", "--output", str(out), "--force"]) == 0
    return out


def _inputs(d):
    return ["--comments", str(d / "comments.ndjson"), "--posts", str(d / "posts.ndjson"),
            "--catalog", str(d / "catalog.csv")]


def _manifest(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_schema_valid_tables(corpus_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["run", *_inputs(corpus_dir), "--output", str(out)]) == 0
    for name, header in TABLES.items():
        rows = _rows(out / name)
        assert rows[0] == header
        assert all(len(r) == len(header) for r in rows)
    for name in DISTRIBUTIONS:
        rows = _rows(out / "distributions" / f"{name}.csv")
        assert rows[0] == ["value", "count"]
    for level in ("drift", "shift"):
        rows = _rows(out / f"transitions_{level}.csv")
        assert rows[0][0] == "from\\to"
        assert [r[0] for r in rows[1:]] == rows[0][1:]

    manifest = _manifest(out / "manifest.txt")
    read, accepted, skipped = (int(manifest[f"counters.records_{k}"]) for k in ("read", "accepted", "skipped"))
    assert read == accepted + skipped
    assert int(manifest["counters.users_indexed"]) > 0
    assert "input.sha256.catalog.csv" in manifest

    bots = {r[0]: r for r in _rows(out / "bots.csv")[1:]}
    assert bots["autobot_00"][3] == "true"
    assert float(bots["autobot_00"][1]) == 0


def test_events_match_ledger(corpus_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["interest", *_inputs(corpus_dir), "--output", str(out)]) == 0
    found = {tuple(r[:5]) for r in _rows(out / "events.csv")[1:]}
    planted = {tuple(r) for r in _rows(corpus_dir / "ledger_events.csv")[1:]}
    assert found == planted


def test_rerun_is_deterministic(corpus_dir, tmp_path):
    out = tmp_path / "run"
    args = ["run", *_inputs(corpus_dir), "--output", str(out), "--force", "--seed", "3"]
    assert main(args) == 0
    first = {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
    assert main(args) == 0
    second = {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
    assert first.keys() == second.keys()
    for key in first:
        if key.name == "manifest.txt":
            strip = lambda b: [l for l in b.decode().splitlines() if l.split("=", 1)[0] not in TIMESTAMP_KEYS]
            assert strip(first[key]) == strip(second[key])
        else:
            assert first[key] == second[key], key


def test_nonempty_output_needs_force(corpus_dir, tmp_path, capsys):
    out = tmp_path / "run"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert main(["ingest", *_inputs(corpus_dir), "--output", str(out)]) == 2
    assert "--force" in capsys.readouterr().err
    assert main(["ingest", *_inputs(corpus_dir), "--output", str(out), "--force"]) == 0


def test_missing_catalog_is_config_error(corpus_dir, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--comments", str(corpus_dir / "comments.ndjson"),
                 "--catalog", str(tmp_path / "absent.csv"), "--output", str(out)])
    assert code == 2
    assert "catalog" in capsys.readouterr().err
    assert not out.exists()


def test_config_file_and_flag_override(corpus_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# run settings\n"
        f"comments = {corpus_dir / 'comments.ndjson'}\n"
        f"catalog = {corpus_dir / 'catalog.csv'}\n"
        "bin-size = 25\n"
        "seed = 11\n"
        "exclude_bots = true\n"
    )
    out = tmp_path / "run"
    assert main(["gini", "--config", str(cfg), "--seed", "12", "--output", str(out)]) == 0
    manifest = _manifest(out / "manifest.txt")
    assert manifest["config.bin_size"] == "25"
    assert manifest["config.seed"] == "12"
    assert manifest["config.exclude_bots"] == "True"
    assert int(manifest["results.excluded_bots"]) >= 1
    assert manifest["stages"] == "gini"


def test_paper_literal_mode(corpus_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["gini", *_inputs(corpus_dir), "--mode", "paper-literal", "--output", str(out)]) == 0
    assert _manifest(out / "manifest.txt")["config.gini_mode"] == "paper_literal"


def test_window_filter(corpus_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["ingest", *_inputs(corpus_dir), "--from", "2018-06-01", "--to", "2018-06-30",
                 "--output", str(out)]) == 0
    m = _manifest(out / "manifest.txt")
    assert int(m["counters.skipped_filtered_out"]) > 0
    assert int(m["counters.records_read"]) == int(m["counters.records_accepted"]) + int(m["counters.records_skipped"])


def test_bad_config_values(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bin_size = many\n")
    with pytest.raises(ConfigError):
        read_config_file(cfg)
    cfg.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        read_config_file(cfg)
    with pytest.raises(ConfigError):
        parse_time("June")


def test_run_config_validation(corpus_dir, tmp_path):
    base = dict(comments=[corpus_dir / "comments.ndjson"], catalog=corpus_dir / "catalog.csv", output=tmp_path / "o")
    for bad in (dict(threshold_deg=90.0), dict(bin_size=1), dict(gini_mode="median"), dict(bot_percentile=0.0),
                dict(window_from="2018-07-01", window_to="2018-06-01"), dict(comments=[])):
        with pytest.raises(ConfigError):
            run_pipeline(RunConfig(**{**base, **bad}))


def test_parse_time_end_of_day():
    assert parse_time("2018-06-01") == 1527811200
    assert parse_time("2018-06-01", end_of_day=True) == 1527811200 + 86399
    assert parse_time("2018-06-01T12:00:00") == 1527811200 + 43200
