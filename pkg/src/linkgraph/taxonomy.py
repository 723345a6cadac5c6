"""Normalize raw link type names and map them onto five link categories.

The bundled table covers 30 canonical types. Assignments the source data
states outright are marked "stated" in the data file; the rest are marked
"inferred" and can be overridden by pointing at an edited copy.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import UndefinedValueError, UnknownLinkTypeError, ValidationError
from .ingest import Repository

_GANTT_PREFIX = re.compile(r"^gantt[:\s]+")
_GANTT_SUFFIX = re.compile(r"\s*\[gantt\]$")


class LinkCategory(Enum):
    RELATION = "Relation"
    DUPLICATION = "Duplication"
    COMPOSITION = "Composition"
    TEMPORAL_CAUSAL = "TemporalCausal"
    WORKFLOW = "Workflow"


CATEGORY_ORDER = (
    LinkCategory.RELATION,
    LinkCategory.DUPLICATION,
    LinkCategory.COMPOSITION,
    LinkCategory.TEMPORAL_CAUSAL,
    LinkCategory.WORKFLOW,
)


@dataclass(frozen=True)
class LinkTaxonomy:
    """Ordered normalization rules plus a canonical-type -> category map."""

    rules: tuple[tuple[re.Pattern, str], ...]
    category_map: dict[str, LinkCategory]
    auto_created: frozenset[str] = frozenset()
    unknown_policy: str = "error"  # "error" | "relation"
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.unknown_policy not in ("error", "relation"):
            raise ValidationError(f"unknown_policy must be 'error' or 'relation', got {self.unknown_policy!r}")
        for _, canonical in self.rules:
            if canonical not in self.category_map:
                raise ValidationError(f"rule target {canonical!r} has no category assignment")

    @property
    def canonical_types(self) -> tuple[str, ...]:
        return tuple(sorted(self.category_map))


def load_taxonomy(path: str | Path | None = None, unknown_policy: str = "error") -> LinkTaxonomy:
    """Load a taxonomy file; None loads the bundled default table."""
    if path is None:
        text = resources.files("linkgraph.data").joinpath("taxonomy.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)

    rules = []
    for i, rule in enumerate(doc.get("rules", [])):
        try:
            pattern = re.compile(rule["pattern"])
        except (re.error, KeyError) as exc:
            raise ValidationError(f"rules[{i}] is invalid: {exc}") from exc
        rules.append((pattern, rule["canonical"]))

    try:
        categories = {
            canonical: LinkCategory(name) for canonical, name in doc["categories"].items()
        }
    except ValueError as exc:
        raise ValidationError(f"bad category name: {exc}") from exc

    return LinkTaxonomy(
        rules=tuple(rules),
        category_map=categories,
        auto_created=frozenset(doc.get("auto_created", [])),
        unknown_policy=unknown_policy,
        provenance=dict(doc.get("provenance", {})),
    )


def _strip_gantt(name: str) -> str:
    name = _GANTT_PREFIX.sub("", name)
    name = _GANTT_SUFFIX.sub("", name)
    return name.strip()


def normalize_type(raw: str, taxonomy: LinkTaxonomy) -> str:
    """Case-fold, strip gantt decoration, and group word-stem variants.

    Raises UnknownLinkTypeError when no rule matches and the policy is
    'error'; with policy 'relation' unknown names fall back to "Relates".
    """
    if not raw:
        raise ValidationError("raw link type must be non-empty")
    folded = _strip_gantt(raw.strip().casefold())
    for pattern, canonical in taxonomy.rules:
        if pattern.fullmatch(folded):
            return canonical
    for canonical in taxonomy.category_map:
        if folded == canonical.casefold():
            return canonical
    if taxonomy.unknown_policy == "relation":
        return "Relates"
    raise UnknownLinkTypeError(raw)


def categorize(canonical: str, taxonomy: LinkTaxonomy) -> LinkCategory:
    """Category of a canonical type produced by normalize_type."""
    try:
        return taxonomy.category_map[canonical]
    except KeyError:
        if taxonomy.unknown_policy == "relation":
            return LinkCategory.RELATION
        raise UnknownLinkTypeError(canonical) from None


@dataclass(frozen=True)
class Prevalence:
    """Shares over categorizable links; unknown-typed links counted aside."""

    shares: dict
    categorized: int
    uncategorized: int


def _prevalence(repo: Repository, taxonomy: LinkTaxonomy, keyfn) -> Prevalence:
    counts: dict = {}
    uncategorized = 0
    for link in repo.links:
        try:
            key = keyfn(link.raw_type)
        except UnknownLinkTypeError:
            uncategorized += 1
            continue
        counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    if total == 0:
        raise UndefinedValueError("prevalence is undefined without categorizable links")
    shares = {key: count / total for key, count in counts.items()}
    return Prevalence(shares=shares, categorized=total, uncategorized=uncategorized)


def type_prevalence(repo: Repository, taxonomy: LinkTaxonomy) -> Prevalence:
    """Share of each canonical link type among the repository's links."""
    return _prevalence(repo, taxonomy, lambda raw: normalize_type(raw, taxonomy))


def category_prevalence(repo: Repository, taxonomy: LinkTaxonomy) -> Prevalence:
    """Share of each link category among the repository's links."""
    return _prevalence(
        repo, taxonomy, lambda raw: categorize(normalize_type(raw, taxonomy), taxonomy)
    )
