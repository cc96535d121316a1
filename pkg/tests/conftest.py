import json

import pytest

from interestflow.corpus_ingest import CatalogEntry, SubredditCatalog, UserActivitySeries


def comment_line(author="alice", subreddit="NFL", created_utc=1530000000, body="hello",
                 id="c1", link_id="t3_p1", **extra):
    obj = dict(author=author, subreddit=subreddit, created_utc=created_utc, body=body, id=id, link_id=link_id)
    obj.update(extra)
    return json.dumps(obj)


def series(author, events):
    """Series from ``(t, subreddit)`` or ``(t, subreddit, length[, kind])`` tuples."""
    rows = [(e[0], e[1], e[2] if len(e) > 2 else 10, e[3] if len(e) > 3 else "comment") for e in events]
    return UserActivitySeries.from_events(author, rows)


@pytest.fixture(scope="session")
def catalog():
    return SubredditCatalog([
        ("NFL", CatalogEntry("Sport")),
        ("FIFA", CatalogEntry("Sport")),
        ("news", CatalogEntry("NewsPoliticsSociety")),
        ("politics", CatalogEntry("NewsPoliticsSociety")),
        ("funny", CatalogEntry("HumorMemes")),
        ("pics", CatalogEntry("ImagesVideos", included=False)),
        ("AskOuija", CatalogEntry("Others", exotic_rules=True)),
    ])


_CRITERIA: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _CRITERIA.setdefault(name, status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[2])):
        terminalreporter.write_line(f"{_CRITERIA[name]}  criterion {name.split('_')[2]}: {name}")
