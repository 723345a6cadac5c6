"""Loading, cleaning, and descriptive statistics."""

import json

import pytest

from linkgraph import clean, coverage, load_repository, summarize
from linkgraph.errors import IntegrityError, ParseError, UndefinedValueError
from linkgraph.ingest import project_of

from conftest import issue, link, load_clean, repo_doc, write_repo


def test_load_counts_pass_through(tmp_path, six_issue_doc):
    repo = load_repository(write_repo(tmp_path, six_issue_doc))
    assert len(repo.issues) == 6
    assert len(repo.links) == 4
    assert not repo.cleaned


def test_load_empty_issue_array(tmp_path):
    repo = load_repository(write_repo(tmp_path, repo_doc("empty")))
    assert len(repo.issues) == 0


def test_missing_key_names_record_index(tmp_path):
    doc = repo_doc("bad", [issue("A-1"), {"title": "no key", "created": "2020-01-01"}])
    with pytest.raises(ParseError, match=r"issues\[1\]"):
        load_repository(write_repo(tmp_path, doc))


def test_duplicate_issue_key_is_integrity_error(tmp_path):
    doc = repo_doc("dup", [issue("A-1"), issue("A-1")])
    with pytest.raises(IntegrityError, match="A-1"):
        load_repository(write_repo(tmp_path, doc))


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "x", "issues": [}', encoding="utf-8")
    with pytest.raises(ParseError, match="line"):
        load_repository(path)


def test_project_derived_from_key():
    assert project_of("QTBUG-123") == "QTBUG"
    assert project_of("A-B-77") == "A-B"
    assert project_of("NONUMBER") == "NONUMBER"


def test_project_must_match_key_prefix(tmp_path):
    record = issue("QTBUG-1")
    record["project"] = "OTHER"
    with pytest.raises(IntegrityError, match="OTHER"):
        load_repository(write_repo(tmp_path, repo_doc("bad-project", [record])))


def test_timestamps_parsed_leniently(tmp_path):
    doc = repo_doc("ts", [
        issue("A-1", created="2020-05-06"),
        issue("A-2", created="2021-01-02T03:04:05Z"),
        issue("A-3", created="2021-01-02T03:04:05+02:00"),
    ])
    repo = load_repository(write_repo(tmp_path, doc))
    assert repo.issues["A-1"].created.isoformat() == "2020-05-06T00:00:00+00:00"
    assert repo.issues["A-2"].created.hour == 3


def test_multi_typed_pair_removed_entirely(tmp_path):
    # A pair linked as both Duplicate and Blocks is conflicting: drop both.
    doc = repo_doc("multi", [issue("A-1"), issue("A-2")], [
        link("A-1", "A-2", "Duplicate"),
        link("A-2", "A-1", "Blocks"),
    ])
    repo = load_clean(tmp_path, doc)
    assert len(repo.links) == 0
    assert repo.cleaning_report.multi_typed_pair == 2


def test_self_link_removed(tmp_path):
    doc = repo_doc("self", [issue("A-1")], [link("A-1", "A-1")])
    repo = load_clean(tmp_path, doc)
    assert len(repo.links) == 0
    assert repo.cleaning_report.self_link == 1


def test_undirected_duplicate_collapsed(tmp_path):
    doc = repo_doc("dup-edge", [issue("A-1"), issue("A-2")], [
        link("A-1", "A-2", "Relates"),
        link("A-2", "A-1", "Relates"),
    ])
    repo = load_clean(tmp_path, doc)
    assert len(repo.links) == 1
    assert repo.cleaning_report.duplicate_edge == 1


def test_private_and_missing_endpoints_dropped(tmp_path):
    doc = repo_doc("priv", [issue("A-1"), issue("A-2", is_private=True)], [
        link("A-1", "A-2"),
        link("A-1", "GHOST-9"),
    ])
    repo = load_clean(tmp_path, doc)
    assert len(repo.links) == 0
    assert repo.cleaning_report.private_endpoint == 1
    assert repo.cleaning_report.missing_endpoint == 1


def test_clean_is_idempotent_and_counts_balance(tmp_path, six_issue_doc):
    six_issue_doc["links"].append(link("PROJ-1", "PROJ-1"))
    six_issue_doc["links"].append(link("PROJ-1", "PROJ-2", "Duplicate"))
    repo = load_clean(tmp_path, six_issue_doc)
    raw = len(six_issue_doc["links"])
    assert repo.cleaning_report.total_removed == raw - len(repo.links)
    again = clean(repo)
    assert again.links == repo.links
    assert again.cleaning_report.total_removed == 0
    # every retained unordered pair carries exactly one type
    assert len({l.pair() for l in repo.links}) == len(repo.links)


def test_coverage_direct_count(tmp_path):
    doc = repo_doc("cov", [issue(f"P-{i}") for i in range(10)], [link("P-0", "P-1")])
    repo = load_clean(tmp_path, doc)
    assert coverage(repo) == pytest.approx(0.2)


def test_coverage_full(tmp_path):
    issues = [issue(f"P-{i}") for i in range(4)]
    links = [link(f"P-{i}", f"P-{j}") for i in range(4) for j in range(i + 1, 4)]
    repo = load_clean(tmp_path, repo_doc("full", issues, links))
    assert coverage(repo) == 1.0


def test_coverage_empty_repo_is_undefined(tmp_path):
    repo = load_clean(tmp_path, repo_doc("none"))
    with pytest.raises(UndefinedValueError):
        coverage(repo)


def test_coverage_mindville_shaped(tmp_path):
    # 41 of 1000 issues sit on a path of 40 links: coverage 0.041.
    issues = [issue(f"MV-{i}") for i in range(1000)]
    links = [link(f"MV-{i}", f"MV-{i+1}", "Relates") for i in range(40)]
    repo = load_clean(tmp_path, repo_doc("mindville-shaped", issues, links))
    assert coverage(repo) == pytest.approx(0.041, abs=1e-9)


def test_cross_project_share_direct(tmp_path):
    issues = [issue("A-1"), issue("A-2"), issue("A-3"), issue("B-1")]
    links = [link("A-1", "A-2"), link("A-2", "A-3"), link("A-3", "B-1")]
    repo = load_clean(tmp_path, repo_doc("cross", issues, links))
    assert summarize(repo)["cross_project_share"] == pytest.approx(1 / 3)


def test_cross_project_share_single_project(tmp_path, six_issue_doc):
    repo = load_clean(tmp_path, six_issue_doc)
    assert summarize(repo)["cross_project_share"] == 0.0


def test_cross_project_share_qt_shaped(tmp_path):
    # 199 cross / 2168 total reproduces the 9.2% cross-project ratio.
    issues = [issue(f"A-{i}") for i in range(1971)] + [issue(f"B-{i}") for i in range(199)]
    links = [link(f"A-{i}", f"A-{i+1}") for i in range(1969)]
    links += [link(f"A-{i}", f"B-{i}") for i in range(199)]
    repo = load_clean(tmp_path, repo_doc("qt-shaped", issues, links))
    share = summarize(repo)["cross_project_share"]
    assert share == pytest.approx(0.092, abs=5e-4)


def test_summarize_fields(tmp_path, six_issue_doc):
    repo = load_clean(tmp_path, six_issue_doc)
    stats = summarize(repo)
    assert stats["issues"] == 6
    assert stats["links"] == 4
    assert stats["link_types"] == 4
    assert 0 <= stats["coverage"] <= 1


def test_direction_preserved_but_ignored(tmp_path):
    doc = repo_doc("dir", [issue("A-1"), issue("A-2")],
                   [link("A-1", "A-2", "Blocks", direction="outward")])
    repo = load_clean(tmp_path, doc)
    assert repo.links[0].directed_role == "outward"
    assert repo.links[0].pair() == ("A-1", "A-2")


def test_roundtrip_export(tmp_path, six_issue_doc):
    from linkgraph.ingest import repository_to_dict

    repo = load_clean(tmp_path, six_issue_doc)
    doc = repository_to_dict(repo)
    path = tmp_path / "again.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    again = clean(load_repository(path))
    assert {l.pair() for l in again.links} == {l.pair() for l in repo.links}
    assert set(again.issues) == set(repo.issues)
