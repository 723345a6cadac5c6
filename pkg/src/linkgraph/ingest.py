"""Load issue-tracker JSON exports and clean them into an immutable repository.

Cleaning drops links touching private or missing issues, self-links, pairs
that carry more than one distinct link type, and duplicate undirected edges.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import IntegrityError, ParseError, UndefinedValueError

_KEY_RE = re.compile(r"^(.*)-\d+$")


def project_of(key: str) -> str:
    """Project prefix of an issue key: everything before the final '-<number>'."""
    m = _KEY_RE.match(key)
    return m.group(1) if m else key


def parse_timestamp(value: str) -> datetime:
    """Lenient ISO-8601 parse; date-only values become midnight UTC."""
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"unparseable timestamp {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


@dataclass(frozen=True)
class IssueRecord:
    key: str
    project: str
    title: str
    description: str
    issue_type: str
    status: str
    resolution: str | None
    created: datetime
    is_private: bool


@dataclass(frozen=True)
class RawLink:
    source: str
    target: str
    raw_type: str
    directed_role: str | None = None  # kept on read, ignored downstream

    def pair(self) -> tuple[str, str]:
        a, b = sorted((self.source, self.target))
        return a, b


@dataclass(frozen=True)
class CleaningReport:
    private_endpoint: int = 0
    missing_endpoint: int = 0
    self_link: int = 0
    multi_typed_pair: int = 0
    duplicate_edge: int = 0

    @property
    def total_removed(self) -> int:
        return (
            self.private_endpoint
            + self.missing_endpoint
            + self.self_link
            + self.multi_typed_pair
            + self.duplicate_edge
        )

    def to_dict(self) -> dict[str, int]:
        return {
            "private_endpoint": self.private_endpoint,
            "missing_endpoint": self.missing_endpoint,
            "self_link": self.self_link,
            "multi_typed_pair": self.multi_typed_pair,
            "duplicate_edge": self.duplicate_edge,
            "total_removed": self.total_removed,
        }


@dataclass(frozen=True)
class Repository:
    """Issues plus links; immutable and safe to share once cleaned."""

    name: str
    issues: dict[str, IssueRecord]
    links: tuple[RawLink, ...]
    cleaning_report: CleaningReport | None = field(default=None)

    @property
    def cleaned(self) -> bool:
        return self.cleaning_report is not None

    def link_pairs(self) -> set[tuple[str, str]]:
        return {link.pair() for link in self.links}


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise ParseError(f"{where} missing required field {key!r}")
    return record[key]


def load_repository(path: str | Path, name: str | None = None) -> Repository:
    """Parse a JSON export into a Repository. No cleaning is applied."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON at line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top-level value must be an object")

    issues: dict[str, IssueRecord] = {}
    for i, rec in enumerate(doc.get("issues", [])):
        where = f"issues[{i}]"
        if not isinstance(rec, dict):
            raise ParseError(f"{where} is not an object")
        key = _require(rec, "key", where)
        if not isinstance(key, str) or not key:
            raise ParseError(f"{where} has empty or non-string key")
        if key in issues:
            raise IntegrityError(f"duplicate issue key {key!r} at {where}")
        project = rec.get("project") or project_of(key)
        if project != project_of(key):
            raise IntegrityError(
                f"{where}: project {project!r} does not match key prefix of {key!r}"
            )
        issues[key] = IssueRecord(
            key=key,
            project=project,
            title=str(rec.get("title", "")),
            description=str(rec.get("description") or ""),
            issue_type=str(rec.get("issue_type", "")),
            status=str(rec.get("status", "")),
            resolution=rec.get("resolution"),
            created=parse_timestamp(_require(rec, "created", where)),
            is_private=bool(rec.get("is_private", False)),
        )

    links: list[RawLink] = []
    for i, rec in enumerate(doc.get("links", [])):
        where = f"links[{i}]"
        if not isinstance(rec, dict):
            raise ParseError(f"{where} is not an object")
        links.append(
            RawLink(
                source=str(_require(rec, "source", where)),
                target=str(_require(rec, "target", where)),
                raw_type=str(_require(rec, "type", where)),
                directed_role=rec.get("direction"),
            )
        )

    return Repository(
        name=name or str(doc.get("name", path.stem)),
        issues=issues,
        links=tuple(links),
    )


def clean(repo: Repository) -> Repository:
    """Apply the exclusion rules and attach a CleaningReport.

    Each dropped link is counted under exactly one reason, checked in order:
    self-link, missing endpoint, private endpoint, multi-typed pair,
    duplicate edge. Idempotent: cleaning a cleaned repository is a no-op.
    """
    self_link = missing = private = multi = dup = 0
    survivors: list[RawLink] = []
    for link in repo.links:
        if link.source == link.target:
            self_link += 1
            continue
        if link.source not in repo.issues or link.target not in repo.issues:
            missing += 1
            continue
        if repo.issues[link.source].is_private or repo.issues[link.target].is_private:
            private += 1
            continue
        survivors.append(link)

    # Type distinctness is case-insensitive so that pure case noise in an
    # export cannot flip a pair into the multi-typed bucket.
    types_by_pair: dict[tuple[str, str], set[str]] = {}
    for link in survivors:
        types_by_pair.setdefault(link.pair(), set()).add(link.raw_type.casefold())

    retained: list[RawLink] = []
    seen: set[tuple[str, str]] = set()
    for link in survivors:
        pair = link.pair()
        if len(types_by_pair[pair]) > 1:
            multi += 1
            continue
        if pair in seen:
            dup += 1
            continue
        seen.add(pair)
        retained.append(link)

    report = CleaningReport(
        private_endpoint=private,
        missing_endpoint=missing,
        self_link=self_link,
        multi_typed_pair=multi,
        duplicate_edge=dup,
    )
    return replace(repo, links=tuple(retained), cleaning_report=report)


def coverage(repo: Repository) -> float:
    """Share of issues incident to at least one retained link."""
    if not repo.issues:
        raise UndefinedValueError("coverage is undefined for an empty repository")
    linked: set[str] = set()
    for link in repo.links:
        linked.add(link.source)
        linked.add(link.target)
    return len(linked & repo.issues.keys()) / len(repo.issues)


def summarize(repo: Repository) -> dict:
    """Descriptive statistics of a cleaned repository (Table-1 shape)."""
    n_links = len(repo.links)
    cross = sum(
        1
        for link in repo.links
        if repo.issues[link.source].project != repo.issues[link.target].project
    )
    return {
        "repository": repo.name,
        "issues": len(repo.issues),
        "links": n_links,
        "link_types": len({link.raw_type.casefold() for link in repo.links}),
        "coverage": coverage(repo) if repo.issues else None,
        "cross_project_share": (cross / n_links) if n_links else 0.0,
    }


def issue_to_dict(issue: IssueRecord) -> dict:
    return {
        "key": issue.key,
        "project": issue.project,
        "title": issue.title,
        "description": issue.description,
        "issue_type": issue.issue_type,
        "status": issue.status,
        "resolution": issue.resolution,
        "created": issue.created.isoformat(),
        "is_private": issue.is_private,
    }


def repository_to_dict(repo: Repository) -> dict:
    """Round-trippable export form (the documented input format)."""
    return {
        "name": repo.name,
        "issues": [issue_to_dict(repo.issues[k]) for k in sorted(repo.issues)],
        "links": [
            {
                "source": link.source,
                "target": link.target,
                "type": link.raw_type,
                "direction": link.directed_role,
            }
            for link in repo.links
        ],
    }
