"""Labeled pair datasets: non-link synthesis, splits, and training configs.

Every operation is a deterministic function of its inputs and a seed.
Balancing always downsamples; duplicated text pairs would leak into any
similarity model, so nothing is ever oversampled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import ExhaustionError, InsufficientDataError, SplitError, ValidationError
from .graph import IssueGraph, connected_components
from .ingest import Repository
from .taxonomy import LinkCategory, LinkTaxonomy, categorize, normalize_type

DEFAULT_CLOSED_STATUSES = frozenset({"closed", "done", "resolved"})


class PairClass(Enum):
    DUP = "Dup"
    OTHER_LINK = "OtherLink"
    NON_LINK = "NonLink"


class TrainingConfig(Enum):
    D_VS_NL = "DvsNL"
    D_VS_OLNL = "DvsOLNL"
    DOL_VS_NL = "DOLvsNL"


@dataclass(frozen=True, order=True)
class LabeledPair:
    a: str
    b: str
    klass: PairClass = field(compare=False)
    canonical_type: str | None = field(default=None, compare=False)
    category: LinkCategory | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.a == self.b:
            raise ValidationError(f"pair endpoints must differ, got {self.a!r} twice")
        if self.a > self.b:
            raise ValidationError("pair endpoints must be stored sorted")
        if (self.klass is PairClass.DUP) != (self.canonical_type == "Duplicate"):
            raise ValidationError("klass Dup iff canonical_type 'Duplicate'")

    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


def make_pair(a: str, b: str, klass: PairClass, canonical_type: str | None = None,
              category: LinkCategory | None = None) -> LabeledPair:
    if a > b:
        a, b = b, a
    return LabeledPair(a=a, b=b, klass=klass, canonical_type=canonical_type, category=category)


@dataclass(frozen=True)
class SplitConfig:
    strategy: str = "random"  # "random" | "cluster"
    test_fraction: float = 0.2
    seed: int = 0
    exclude_auto_created: bool = True

    def __post_init__(self):
        if self.strategy not in ("random", "cluster"):
            raise ValidationError(f"unknown split strategy {self.strategy!r}")
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test_fraction must be in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SplitResult:
    train: tuple[LabeledPair, ...]
    test: tuple[LabeledPair, ...]
    strategy: str
    issue_overlap: int  # issue keys present in both pools (0 under cluster)


def link_pairs(repo: Repository, taxonomy: LinkTaxonomy) -> list[LabeledPair]:
    """One LabeledPair per retained link: Dup for Duplicate, else OtherLink."""
    pairs = []
    for link in repo.links:
        canonical = normalize_type(link.raw_type, taxonomy)
        klass = PairClass.DUP if canonical == "Duplicate" else PairClass.OTHER_LINK
        pairs.append(
            make_pair(link.source, link.target, klass,
                      canonical_type=canonical, category=categorize(canonical, taxonomy))
        )
    return sorted(pairs)


def eligible_nonlink_issues(
    repo: Repository, closed_statuses: frozenset[str] = DEFAULT_CLOSED_STATUSES
) -> list[str]:
    """Closed issues whose resolution is not Duplicate, sorted by key."""
    return sorted(
        issue.key
        for issue in repo.issues.values()
        if issue.status.casefold() in closed_statuses
        and (issue.resolution or "").casefold() != "duplicate"
    )


def synthesize_nonlinks(
    repo: Repository,
    n: int,
    seed: int,
    closed_statuses: frozenset[str] = DEFAULT_CLOSED_STATUSES,
    forbidden: set[tuple[str, str]] | None = None,
    eligible: list[str] | None = None,
) -> list[LabeledPair]:
    """n distinct unordered non-link pairs of eligible issues.

    Rejection-sampled; when the sampler stalls near exhaustion the remaining
    satisfiable pairs are enumerated so the result stays deterministic.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    if n == 0:
        return []
    keys = eligible_nonlink_issues(repo, closed_statuses) if eligible is None else sorted(eligible)
    linked = repo.link_pairs()
    if forbidden:
        linked = linked | forbidden
    if len(keys) < 2:
        raise ExhaustionError(requested=n, produced=0)

    rng = random.Random(seed)
    chosen: set[tuple[str, str]] = set()
    result: list[LabeledPair] = []
    attempts = 0
    budget = 100 * n + 1000
    while len(result) < n and attempts < budget:
        attempts += 1
        a, b = rng.sample(keys, 2)
        pair = (a, b) if a < b else (b, a)
        if pair in linked or pair in chosen:
            continue
        chosen.add(pair)
        result.append(make_pair(*pair, PairClass.NON_LINK))
    if len(result) < n:
        remaining = [
            (a, b)
            for i, a in enumerate(keys)
            for b in keys[i + 1:]
            if (a, b) not in linked and (a, b) not in chosen
        ]
        needed = n - len(result)
        if len(remaining) < needed:
            raise ExhaustionError(requested=n, produced=len(result) + len(remaining))
        for pair in rng.sample(remaining, needed):
            result.append(make_pair(*pair, PairClass.NON_LINK))
    return result


def _measure_overlap(train: list[LabeledPair], test: list[LabeledPair]) -> int:
    train_keys = {k for p in train for k in (p.a, p.b)}
    test_keys = {k for p in test for k in (p.a, p.b)}
    return len(train_keys & test_keys)


def _test_size(total: int, fraction: float) -> int:
    return int(total * fraction + 0.5)


def split_random(pairs: list[LabeledPair], cfg: SplitConfig) -> SplitResult:
    """Seeded shuffle cut at test_fraction; issue overlap allowed and measured."""
    if cfg.strategy != "random":
        raise ValidationError("split_random requires strategy 'random'")
    rng = random.Random(cfg.seed)
    shuffled = sorted(pairs)
    rng.shuffle(shuffled)
    n_test = _test_size(len(shuffled), cfg.test_fraction)
    test, train = shuffled[:n_test], shuffled[n_test:]
    return SplitResult(
        train=tuple(train),
        test=tuple(test),
        strategy="random",
        issue_overlap=_measure_overlap(train, test),
    )


def split_cluster(
    pairs: list[LabeledPair],
    g: IssueGraph,
    cfg: SplitConfig,
    repo: Repository | None = None,
    closed_statuses: frozenset[str] = DEFAULT_CLOSED_STATUSES,
) -> SplitResult:
    """Assign whole connected components to train or test; pools share no issue.

    Linked pairs land with their component. A non-link pair straddling pools
    is discarded and replaced by one synthesized from within-pool issues
    (requires `repo`); per-pool non-link targets keep the configured fraction.
    Components carrying no linked pair are spread by the same seeded RNG.
    """
    if cfg.strategy != "cluster":
        raise ValidationError("split_cluster requires strategy 'cluster'")
    comps = connected_components(g)
    comp_of: dict[str, int] = {}
    for idx, comp in enumerate(comps):
        for v in comp.vertices:
            comp_of[v] = idx

    linked = [p for p in pairs if p.klass is not PairClass.NON_LINK]
    nonlinks = [p for p in pairs if p.klass is PairClass.NON_LINK]
    pairs_by_comp: dict[int, int] = {}
    for p in linked:
        ca, cb = comp_of.get(p.a), comp_of.get(p.b)
        if ca is None or cb is None or ca != cb:
            raise ValidationError(
                f"linked pair ({p.a}, {p.b}) does not sit inside one component; "
                "build the split graph over all link types"
            )
        pairs_by_comp[ca] = pairs_by_comp.get(ca, 0) + 1

    rng = random.Random(cfg.seed)
    carrying = sorted(pairs_by_comp)
    rng.shuffle(carrying)
    target = cfg.test_fraction * len(linked)
    tolerance = 0.05 * target
    test_comps: set[int] = set()
    test_pairs = 0
    # Walk components in shuffled order, topping up the test pool while it
    # sits below the tolerance band; anything that would overshoot the band
    # stays in train.
    for idx in carrying:
        if test_pairs >= target - tolerance:
            break
        if test_pairs + pairs_by_comp[idx] <= target + tolerance:
            test_comps.add(idx)
            test_pairs += pairs_by_comp[idx]
    if target > 0 and abs(test_pairs - target) > tolerance:
        raise SplitError(
            f"test pool holds {test_pairs} linked pairs, target {target:.1f} "
            f"(>5% off); try a different seed"
        )
    for idx in range(len(comps)):
        if idx not in pairs_by_comp and rng.random() < cfg.test_fraction:
            test_comps.add(idx)

    def in_test(key: str) -> bool:
        return comp_of[key] in test_comps

    train = [p for p in linked if not in_test(p.a)]
    test = [p for p in linked if in_test(p.a)]

    kept_train = [p for p in nonlinks if not in_test(p.a) and not in_test(p.b)]
    kept_test = [p for p in nonlinks if in_test(p.a) and in_test(p.b)]
    target_test_nl = _test_size(len(nonlinks), cfg.test_fraction)
    target_train_nl = len(nonlinks) - target_test_nl
    if repo is not None:
        existing = {p.key() for p in nonlinks}
        for kept, want, pool in ((kept_train, target_train_nl, False),
                                 (kept_test, target_test_nl, True)):
            if len(kept) < want:
                kept.extend(
                    synthesize_nonlinks(
                        repo,
                        want - len(kept),
                        seed=rng.randrange(2**32),
                        closed_statuses=closed_statuses,
                        forbidden=existing | {p.key() for p in kept},
                        eligible=[
                            k for k in eligible_nonlink_issues(repo, closed_statuses)
                            if in_test(k) is pool
                        ],
                    )
                )
    train.extend(kept_train)
    test.extend(kept_test)
    train.sort()
    test.sort()
    overlap = _measure_overlap(train, test)
    if overlap:
        raise SplitError(f"cluster split leaked {overlap} issue keys across pools")
    return SplitResult(train=tuple(train), test=tuple(test), strategy="cluster", issue_overlap=0)


def split(pairs: list[LabeledPair], cfg: SplitConfig, g: IssueGraph | None = None,
          repo: Repository | None = None) -> SplitResult:
    if cfg.strategy == "random":
        return split_random(pairs, cfg)
    if g is None:
        raise ValidationError("cluster split needs the all-types issue graph")
    return split_cluster(pairs, g, cfg, repo=repo)


def _binary_label(klass: PairClass, tc: TrainingConfig) -> int | None:
    """Label mapping shared by training-set construction and evaluation.

    None means the class is excluded from training under this config.
    """
    if klass is PairClass.DUP:
        return 1
    if klass is PairClass.NON_LINK:
        return 0
    # OtherLink:
    if tc is TrainingConfig.D_VS_NL:
        return None
    if tc is TrainingConfig.D_VS_OLNL:
        return 0
    return 1  # DOLvsNL: any link counts as positive


def binarize(klass: PairClass, tc: TrainingConfig) -> int:
    """Ground-truth binary label for scoring; OtherLink under DvsNL maps to 0."""
    label = _binary_label(klass, tc)
    return 0 if label is None else label


def make_training_set(
    pool,
    tc: TrainingConfig,
    seed: int,
    exclude_auto_created: bool = True,
    auto_created: frozenset[str] = frozenset({"Clone"}),
) -> list[tuple[LabeledPair, int]]:
    """Balanced binary training set under the given configuration.

    Auto-created link types (cloning machinery) are dropped before labeling
    when exclude_auto_created is set. The majority label is downsampled.
    """
    usable = sorted(
        p for p in pool
        if not (exclude_auto_created and p.canonical_type in auto_created)
    )
    positives = []
    negatives = []
    for p in usable:
        label = _binary_label(p.klass, tc)
        if label == 1:
            positives.append(p)
        elif label == 0:
            negatives.append(p)
    if not positives:
        raise InsufficientDataError(f"{tc.value}: no pairs for label 1 in the pool")
    if not negatives:
        raise InsufficientDataError(f"{tc.value}: no pairs for label 0 in the pool")

    rng = random.Random(seed)
    size = min(len(positives), len(negatives))
    if len(positives) > size:
        positives = rng.sample(positives, size)
    if len(negatives) > size:
        negatives = rng.sample(negatives, size)
    out = [(p, 1) for p in positives] + [(p, 0) for p in negatives]
    rng.shuffle(out)
    return out


def make_test_sets(pool, seed: int) -> tuple[list[LabeledPair], list[LabeledPair]]:
    """(traditional, new): new is balanced over the three classes, traditional
    is the same set with OtherLink pairs removed."""
    by_class = {klass: sorted(p for p in pool if p.klass is klass) for klass in PairClass}
    smallest = min(len(v) for v in by_class.values())
    if smallest == 0:
        empty = [k.value for k, v in by_class.items() if not v]
        raise InsufficientDataError(
            f"test pool lacks classes {empty}; achievable balanced size is 0"
        )
    rng = random.Random(seed)
    new: list[LabeledPair] = []
    for klass in PairClass:
        members = by_class[klass]
        new.extend(members if len(members) == smallest else rng.sample(members, smallest))
    rng.shuffle(new)
    traditional = [p for p in new if p.klass is not PairClass.OTHER_LINK]
    return traditional, new


@dataclass(frozen=True)
class DatasetBundle:
    train: tuple[tuple[LabeledPair, int], ...]
    test_new: tuple[LabeledPair, ...]
    test_traditional: tuple[LabeledPair, ...]
    provenance: dict


def build_dataset(
    repo: Repository,
    taxonomy: LinkTaxonomy,
    split_cfg: SplitConfig,
    tc: TrainingConfig,
    g: IssueGraph | None = None,
    n_nonlinks: int | None = None,
    closed_statuses: frozenset[str] = DEFAULT_CLOSED_STATUSES,
) -> DatasetBundle:
    """Full pipeline from a cleaned repository to one dataset bundle.

    n_nonlinks defaults to the size of the largest link class so the
    synthesized class is comparable to the real ones.
    """
    links = link_pairs(repo, taxonomy)
    if n_nonlinks is None:
        dups = sum(1 for p in links if p.klass is PairClass.DUP)
        n_nonlinks = max(dups, len(links) - dups, 1)
    nonlinks = synthesize_nonlinks(repo, n_nonlinks, split_cfg.seed,
                                   closed_statuses=closed_statuses)
    result = split(links + nonlinks, split_cfg, g=g, repo=repo)
    train = make_training_set(
        result.train, tc, split_cfg.seed,
        exclude_auto_created=split_cfg.exclude_auto_created,
        auto_created=taxonomy.auto_created,
    )
    traditional, new = make_test_sets(result.test, split_cfg.seed)
    counts = {klass.value: sum(1 for p in result.test if p.klass is klass) for klass in PairClass}
    provenance = {
        "repository": repo.name,
        "strategy": split_cfg.strategy,
        "test_fraction": split_cfg.test_fraction,
        "seed": split_cfg.seed,
        "exclude_auto_created": split_cfg.exclude_auto_created,
        "training_config": tc.value,
        "n_nonlinks": n_nonlinks,
        "issue_overlap": result.issue_overlap,
        "train_size": len(train),
        "test_pool_counts": counts,
        "test_new_size": len(new),
        "test_traditional_size": len(traditional),
    }
    return DatasetBundle(
        train=tuple(train),
        test_new=tuple(new),
        test_traditional=tuple(traditional),
        provenance=provenance,
    )
