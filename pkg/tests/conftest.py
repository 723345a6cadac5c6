"""Shared fixture builders for repository exports."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # expose oracles.py to tests

from linkgraph import clean, load_repository


def issue(key, title="", description="", status="Open", resolution=None,
          is_private=False, issue_type="Bug", created="2020-01-01"):
    return {
        "key": key,
        "project": None,
        "title": title or f"issue {key}",
        "description": description,
        "issue_type": issue_type,
        "status": status,
        "resolution": resolution,
        "created": created,
        "is_private": is_private,
    }


def link(source, target, type_="Relates", direction=None):
    return {"source": source, "target": target, "type": type_, "direction": direction}


def repo_doc(name="test", issues=(), links=()):
    return {"name": name, "issues": list(issues), "links": list(links)}


def write_repo(tmp_path: Path, doc: dict, filename: str = "repo.json") -> Path:
    path = tmp_path / filename
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def load_clean(tmp_path: Path, doc: dict, filename: str = "repo.json"):
    return clean(load_repository(write_repo(tmp_path, doc, filename)))


@pytest.fixture
def six_issue_doc():
    issues = [issue(f"PROJ-{i}") for i in range(1, 7)]
    links = [
        link("PROJ-1", "PROJ-2", "Duplicate"),
        link("PROJ-2", "PROJ-3", "Relates"),
        link("PROJ-4", "PROJ-5", "Blocks"),
        link("PROJ-5", "PROJ-6", "Subtask"),
    ]
    return repo_doc("six", issues, links)
