"""Undirected issue graphs and their structural metric suite.

Metrics with an empty denominator are reported as None (serialized null),
never as 0, because 0 is a meaningful value for every metric here.

Ratios are computed with one correctly-rounded division of exact integer
(or rational) quantities, so identical counts always give identical floats
regardless of platform.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .errors import UndefinedValueError, ValidationError
from .ingest import Repository
from .taxonomy import LinkCategory, LinkTaxonomy, categorize, normalize_type


@dataclass(frozen=True)
class IssueGraph:
    """Simple undirected graph; vertices include isolated issues."""

    vertices: frozenset[str]
    edges: frozenset[tuple[str, str]]  # each pair stored sorted

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ValidationError(f"self-loop on {a!r}")
            if a > b:
                raise ValidationError(f"edge ({a!r}, {b!r}) not stored sorted")
            if a not in self.vertices or b not in self.vertices:
                raise ValidationError(f"edge endpoint missing from vertices: ({a!r}, {b!r})")

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


def make_graph(vertices, edges) -> IssueGraph:
    """Build an IssueGraph, normalizing edge order and dropping parallels."""
    vertex_set = frozenset(vertices)
    edge_set = set()
    for a, b in edges:
        if a == b:
            continue
        edge_set.add((a, b) if a < b else (b, a))
    return IssueGraph(vertices=vertex_set, edges=frozenset(edge_set))


@dataclass(frozen=True)
class Component:
    vertices: tuple[str, ...]  # sorted
    edge_count: int
    degree_sequence: tuple[int, ...]  # aligned with vertices

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def max_degree(self) -> int:
        return max(self.degree_sequence)

    def density(self) -> Fraction:
        n = self.size
        if n < 2:
            raise UndefinedValueError("density needs at least two vertices")
        return Fraction(self.edge_count, n * (n - 1) // 2)


@dataclass(frozen=True)
class GraphMetricsReport:
    """The eight structural metrics for one graph slice. None = undefined."""

    pct_isolated: float | None
    pct_2comp: float | None
    pct_3comp_plus: float | None
    avg_density: float | None
    pct_trees: float | None
    pct_stars: float | None
    assortativity: float | None
    transitivity: float

    def to_dict(self) -> dict:
        return {
            "pct_isolated": self.pct_isolated,
            "pct_2comp": self.pct_2comp,
            "pct_3comp_plus": self.pct_3comp_plus,
            "avg_density": self.avg_density,
            "pct_trees": self.pct_trees,
            "pct_stars": self.pct_stars,
            "assortativity": self.assortativity,
            "transitivity": self.transitivity,
        }


def parse_slice(spec: str) -> tuple[str, str | None]:
    """Parse "all", "type:<name>", or "category:<name>" into (kind, arg)."""
    if spec == "all":
        return "all", None
    kind, sep, arg = spec.partition(":")
    if sep and arg and kind in ("type", "category"):
        return kind, arg
    raise ValidationError(f"unknown slice {spec!r}; use all, type:<name>, or category:<name>")


def build_graph(repo: Repository, taxonomy: LinkTaxonomy, slice_spec: str = "all") -> IssueGraph:
    """Graph over all repository issues with edges matching the slice."""
    kind, arg = parse_slice(slice_spec)
    if kind == "category":
        try:
            wanted_category = LinkCategory(arg)
        except ValueError:
            raise ValidationError(f"unknown category {arg!r}") from None

    edges = []
    for link in repo.links:
        if kind == "type":
            canonical = normalize_type(link.raw_type, taxonomy)
            if canonical != arg:
                continue
        elif kind == "category":
            canonical = normalize_type(link.raw_type, taxonomy)
            if categorize(canonical, taxonomy) is not wanted_category:
                continue
        edges.append(link.pair())
    return make_graph(repo.issues.keys(), edges)


def connected_components(g: IssueGraph) -> list[Component]:
    """Partition into components, largest first, ties by smallest member key."""
    adj = g.adjacency()
    seen: set[str] = set()
    components = []
    for start in sorted(g.vertices):
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        members = []
        while queue:
            v = queue.popleft()
            members.append(v)
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        members.sort()
        member_set = set(members)
        edge_count = sum(1 for a, b in g.edges if a in member_set)
        components.append(
            Component(
                vertices=tuple(members),
                edge_count=edge_count,
                degree_sequence=tuple(len(adj[v]) for v in members),
            )
        )
    components.sort(key=lambda c: (-c.size, c.vertices[0]))
    return components


def complexity_metrics(
    g: IssueGraph, components: list[Component] | None = None
) -> tuple[float | None, float | None, float | None, float | None]:
    """(pct_isolated, pct_2comp, pct_3comp_plus, avg_density).

    Denominators: isolated over all vertices; 2comp/3comp+ over non-singleton
    components; density averaged over components with >= 3 vertices only.
    """
    comps = connected_components(g) if components is None else components
    n_vertices = len(g.vertices)
    singletons = sum(1 for c in comps if c.size == 1)
    non_singleton = [c for c in comps if c.size >= 2]
    large = [c for c in comps if c.size >= 3]

    pct_isolated = singletons / n_vertices if n_vertices else None
    if non_singleton:
        exactly_two = sum(1 for c in non_singleton if c.size == 2)
        pct_2comp = exactly_two / len(non_singleton)
        pct_3comp_plus = len(large) / len(non_singleton)
    else:
        pct_2comp = pct_3comp_plus = None
    if large:
        avg_density = float(sum(c.density() for c in large) / len(large))
    else:
        avg_density = None
    return pct_isolated, pct_2comp, pct_3comp_plus, avg_density


def is_tree(c: Component) -> bool:
    """Connected and acyclic, i.e. edge_count == n - 1. Requires n >= 3."""
    if c.size < 3:
        raise ValidationError("shape analysis requires components with >= 3 vertices")
    return c.edge_count == c.size - 1


def is_star(c: Component) -> bool:
    """Tree with one center adjacent to every other vertex. Requires n >= 3."""
    return is_tree(c) and c.max_degree == c.size - 1


def shape_metrics(
    g: IssueGraph, components: list[Component] | None = None
) -> tuple[float | None, float | None]:
    """(pct_trees, pct_stars) over components with >= 3 vertices."""
    comps = connected_components(g) if components is None else components
    large = [c for c in comps if c.size >= 3]
    if not large:
        return None, None
    trees = sum(1 for c in large if is_tree(c))
    stars = sum(1 for c in large if is_star(c))
    return trees / len(large), stars / len(large)


def degree_assortativity(g: IssueGraph) -> float | None:
    """Pearson correlation of endpoint degrees over symmetrized edge pairs.

    Every edge contributes (deg u, deg v) and (deg v, deg u), which makes the
    two marginals identical, so the correlation reduces to a ratio of integer
    sums and needs no square root. Zero degree variance returns None.
    """
    if not g.edges:
        raise UndefinedValueError("assortativity needs at least one edge")
    adj = g.adjacency()
    n = 0
    s_x = 0
    s_xx = 0
    s_xy = 0
    for a, b in g.edges:
        da, db = len(adj[a]), len(adj[b])
        n += 2
        s_x += da + db
        s_xx += da * da + db * db
        s_xy += 2 * da * db
    denominator = n * s_xx - s_x * s_x
    if denominator == 0:
        return None
    return (n * s_xy - s_x * s_x) / denominator


def count_triangles(g: IssueGraph) -> int:
    """Triangle count by degree-ordered neighbor intersection."""
    adj = g.adjacency()
    rank = {v: (len(adj[v]), v) for v in g.vertices}
    # Orient each edge from lower to higher (degree, key) rank; every triangle
    # is then counted exactly once at its lowest-ranked vertex.
    forward: dict[str, set[str]] = {v: set() for v in g.vertices}
    for a, b in g.edges:
        if rank[a] < rank[b]:
            forward[a].add(b)
        else:
            forward[b].add(a)
    triangles = 0
    for v in g.vertices:
        out = forward[v]
        for w in out:
            triangles += len(out & forward[w])
    return triangles


def count_triads(g: IssueGraph) -> int:
    """Number of length-2 paths: sum over vertices of C(deg, 2)."""
    adj = g.adjacency()
    return sum(d * (d - 1) // 2 for d in (len(neighbors) for neighbors in adj.values()))


def transitivity(g: IssueGraph) -> float:
    """3 * triangles / triads; defined as 0 when there are no triads."""
    triads = count_triads(g)
    if triads == 0:
        return 0.0
    return 3 * count_triangles(g) / triads


def metrics_report(g: IssueGraph) -> GraphMetricsReport:
    """All eight metrics; per-metric errors surface as None fields."""
    comps = connected_components(g)
    pct_isolated, pct_2comp, pct_3comp_plus, avg_density = complexity_metrics(g, comps)
    pct_trees, pct_stars = shape_metrics(g, comps)
    try:
        assortativity = degree_assortativity(g)
    except UndefinedValueError:
        assortativity = None
    return GraphMetricsReport(
        pct_isolated=pct_isolated,
        pct_2comp=pct_2comp,
        pct_3comp_plus=pct_3comp_plus,
        avg_density=avg_density,
        pct_trees=pct_trees,
        pct_stars=pct_stars,
        assortativity=assortativity,
        transitivity=transitivity(g),
    )
