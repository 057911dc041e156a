"""Overlapping community detection driven by configuration-model significance.

The unified graph is projected to an undirected topology (an edge exists if
either direction does). A node's affinity to a community is the probability,
under a degree-preserving null model, that a node of its degree would have at
least the observed number of links into the community:

    p = P(X >= k_in),  X ~ Binomial(k_node, s_C / 2m)

where s_C is the total stub count attached to community members and m is the
undirected edge count. Communities are grown locally from seed edges (closed
over common neighbors), one candidate at a time, while the best candidate's
order-statistic-corrected p-value 1 - (1 - p)^n_ext stays below the acceptance
threshold P. Members are then pruned by the symmetric re-admission test until
a fixed point, candidates are deduplicated by Jaccard overlap, and complete
coverage optionally attaches every remaining node to its most significant
community (or leaves it as a singleton when it has no links into any).

Lower thresholds accept less, so they tend to produce more and smaller
communities; this resolution behavior is validated empirically on synthetic
fixtures rather than assumed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import median
from typing import Iterable

import numpy as np
from scipy.special import betainc

from .errors import ConfigError, DataError
from .fusion import UnifiedGraph

#: defaults surfaced as CLI flags
DEFAULT_RESTARTS = 10
DEFAULT_JACCARD = 0.75


def binomial_tail(successes, trials, prob):
    """Exact P(X >= successes) for X ~ Binomial(trials, prob).

    Evaluated through the regularized incomplete beta function; vectorized.
    successes <= 0 gives 1, successes > trials gives 0.
    """
    s = np.asarray(successes, dtype=np.int64)
    n = np.asarray(trials, dtype=np.int64)
    q = np.asarray(prob, dtype=np.float64)
    s, n, q = np.broadcast_arrays(s, n, q)
    inside = (s >= 1) & (s <= n)
    a = np.where(inside, s, 1).astype(np.float64)
    b = np.where(inside, n - s + 1, 1).astype(np.float64)
    tail = betainc(a, b, np.clip(q, 0.0, 1.0))
    out = np.where(s <= 0, 1.0, np.where(s > n, 0.0, tail))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CoverParameters:
    p_threshold: float
    seed: int
    coverage: str
    restarts: int = DEFAULT_RESTARTS
    jaccard_threshold: float = DEFAULT_JACCARD


@dataclass
class CommunityCover:
    """Possibly overlapping node groups; indices refer into ``communities``."""

    communities: tuple[tuple[str, ...], ...]  # members sorted; list sorted canonically
    assignment: dict[str, tuple[int, ...]]
    parameters: CoverParameters

    def multi_members(self) -> tuple[str, ...]:
        return tuple(sorted(n for n, cs in self.assignment.items() if len(cs) > 1))

    def covered_nodes(self) -> set[str]:
        return set(self.assignment)

    def to_json_dict(self) -> dict:
        return {
            "parameters": {
                "p_threshold": self.parameters.p_threshold,
                "seed": self.parameters.seed,
                "coverage": self.parameters.coverage,
                "restarts": self.parameters.restarts,
                "jaccard_threshold": self.parameters.jaccard_threshold,
            },
            "communities": [list(c) for c in self.communities],
            "multi_membership": list(self.multi_members()),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class SweepRow:
    p_threshold: float
    seed: int
    community_count: int
    size_min: int
    size_median: float
    size_max: int
    mean_overlap: float


@dataclass
class SweepReport:
    rows: tuple[SweepRow, ...]


# ---------------------------------------------------------------------------
# undirected projection


class _Projection:
    """Index-based undirected projection of a unified graph."""

    __slots__ = ("nodes", "index", "adj_sets", "adj_arrays", "deg", "two_m", "edges")

    def __init__(self, graph: UnifiedGraph):
        self.nodes: tuple[str, ...] = tuple(graph.accounts)
        self.index = {node: i for i, node in enumerate(self.nodes)}
        n = len(self.nodes)
        neighbor_sets: list[set[int]] = [set() for _ in range(n)]
        for src, dst in graph.edges():
            i, j = self.index[src], self.index[dst]
            if i == j:
                continue
            neighbor_sets[i].add(j)
            neighbor_sets[j].add(i)
        self.adj_sets = [frozenset(s) for s in neighbor_sets]
        self.adj_arrays = [np.fromiter(sorted(s), dtype=np.int64) for s in neighbor_sets]
        self.deg = np.array([len(s) for s in neighbor_sets], dtype=np.int64)
        self.edges: list[tuple[int, int]] = sorted(
            (i, j) for i in range(n) for j in neighbor_sets[i] if i < j
        )
        self.two_m = int(self.deg.sum())


def node_significance(graph: UnifiedGraph, community: Iterable[str], node: str) -> float:
    """p-value of a node's links into a community under the configuration null."""
    proj = _Projection(graph)
    members = {proj.index[m] for m in community if m in proj.index}
    missing = [m for m in community if m not in proj.index]
    if missing:
        raise DataError(f"community members not in graph: {missing[:5]}")
    if not members:
        raise DataError("community must not be empty")
    if node not in proj.index:
        raise DataError(f"unknown node {node!r}")
    i = proj.index[node]
    if i in members:
        raise DataError(f"node {node!r} is already a community member")
    if proj.two_m == 0:
        return 1.0
    stub_count = int(proj.deg[sorted(members)].sum())
    k_in = len(proj.adj_sets[i] & members)
    return float(binomial_tail(k_in, int(proj.deg[i]), stub_count / proj.two_m))


# ---------------------------------------------------------------------------
# local growth and pruning


def _grow(proj: _Projection, seed_members: set[int], p_threshold: float) -> set[int]:
    """Greedy expansion: keep adding the most significant external node while
    its best-of-n_ext corrected p-value stays below the threshold."""
    members = set(seed_members)
    links = np.zeros(len(proj.nodes), dtype=np.int64)
    for m in members:
        links[proj.adj_arrays[m]] += 1
    stub_count = int(proj.deg[sorted(members)].sum())
    frontier: set[int] = set()
    for m in members:
        frontier |= proj.adj_sets[m]
    frontier -= members

    while frontier:
        ext = np.fromiter(sorted(frontier), dtype=np.int64)
        q = stub_count / proj.two_m
        p = binomial_tail(links[ext], proj.deg[ext], q)
        best = int(np.lexsort((ext, p))[0])
        corrected = float(binomial_tail(1, len(ext), float(p[best])))
        if corrected >= p_threshold:
            break
        new = int(ext[best])
        members.add(new)
        links[proj.adj_arrays[new]] += 1
        stub_count += int(proj.deg[new])
        frontier.discard(new)
        frontier |= proj.adj_sets[new] - members
    return members


def _prune(proj: _Projection, members: set[int], p_threshold: float) -> set[int]:
    """Drop members failing the re-admission test until a fixed point.

    A member u is re-admissible when its p-value against the rest of the
    community, corrected as the best of the external candidates of C \\ {u},
    stays below the threshold. The worst offender is removed each round.
    """
    members = set(members)
    while len(members) >= 2:
        order = sorted(members)
        idx = np.fromiter(order, dtype=np.int64)
        links = np.zeros(len(proj.nodes), dtype=np.int64)
        for m in order:
            links[proj.adj_arrays[m]] += 1
        stub_count = int(proj.deg[idx].sum())

        exterior: set[int] = set()
        for m in order:
            exterior |= proj.adj_sets[m]
        exterior -= members
        ext_mask = np.zeros(len(proj.nodes), dtype=bool)
        if exterior:
            ext_mask[np.fromiter(sorted(exterior), dtype=np.int64)] = True

        q = (stub_count - proj.deg[idx]) / proj.two_m
        p = binomial_tail(links[idx], proj.deg[idx], q)
        n_ext = np.empty(len(order), dtype=np.int64)
        for pos, u in enumerate(order):
            neigh = proj.adj_arrays[u]
            # candidates that were only reachable through u drop out; u itself joins
            dropped = int(np.count_nonzero(ext_mask[neigh] & (links[neigh] == 1)))
            n_ext[pos] = len(exterior) - dropped + (1 if links[u] >= 1 else 0)
        corrected = binomial_tail(np.ones(len(order), dtype=np.int64), n_ext, p)

        failing = corrected >= p_threshold
        if not np.any(failing):
            break
        # worst offender first: highest corrected, then highest raw p, then lowest id
        for pos in np.lexsort((idx, -p, -corrected)):
            if failing[pos]:
                members.discard(int(idx[pos]))
                break
    return members if len(members) >= 2 else set()


def _community_log_significance(proj: _Projection, members: frozenset[int]) -> float:
    """Sum of member log p-values; lower means a more significant community."""
    order = sorted(members)
    idx = np.fromiter(order, dtype=np.int64)
    links = np.zeros(len(proj.nodes), dtype=np.int64)
    for m in order:
        links[proj.adj_arrays[m]] += 1
    stub_count = int(proj.deg[idx].sum())
    q = (stub_count - proj.deg[idx]) / proj.two_m
    p = binomial_tail(links[idx], proj.deg[idx], q)
    return float(np.sum(np.log(np.maximum(p, 1e-300))))


def _covering_pass(proj: _Projection, p_threshold: float, rng: np.random.Generator) -> list[frozenset[int]]:
    """Seed from random uncovered edges until every edge has been tried or
    absorbed; each seed is an edge closed over its common neighbors."""
    uncovered = set(range(len(proj.edges)))
    found: list[frozenset[int]] = []
    while uncovered:
        pool = sorted(uncovered)
        edge_idx = pool[int(rng.integers(len(pool)))]
        uncovered.discard(edge_idx)  # guarantees progress even when growth dies
        u, v = proj.edges[edge_idx]
        seed = {u, v} | (proj.adj_sets[u] & proj.adj_sets[v])
        community = _prune(proj, _grow(proj, seed, p_threshold), p_threshold)
        if len(community) >= 2:
            frozen = frozenset(community)
            found.append(frozen)
            uncovered = {
                e for e in uncovered
                if not (proj.edges[e][0] in frozen and proj.edges[e][1] in frozen)
            }
    return found


def _jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / (len(a) + len(b) - inter)


def _dedup(
    proj: _Projection,
    candidates: list[frozenset[int]],
    jaccard_threshold: float,
) -> list[frozenset[int]]:
    """Collapse near-duplicates (Jaccard > threshold), keeping per group the
    candidate with the lowest aggregate significance."""
    unique = sorted(set(candidates), key=lambda c: tuple(sorted(c)))
    if not unique:
        return []
    parent = list(range(len(unique)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(unique)):
        for j in range(i + 1, len(unique)):
            if _jaccard(unique[i], unique[j]) > jaccard_threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(len(unique)):
        groups.setdefault(find(i), []).append(i)

    kept = []
    for root in sorted(groups):
        best = min(
            groups[root],
            key=lambda i: (_community_log_significance(proj, unique[i]), -len(unique[i]), tuple(sorted(unique[i]))),
        )
        kept.append(unique[best])
    return sorted(kept, key=lambda c: tuple(sorted(c)))


def _complete_coverage(proj: _Projection, communities: list[frozenset[int]]) -> list[frozenset[int]]:
    """Attach every unassigned node to the community where its significance is
    lowest; nodes with no links into any community become singletons.

    Attachment decisions are taken simultaneously against the detected
    communities, so they are independent of node processing order.
    """
    assigned: set[int] = set()
    for community in communities:
        assigned |= community
    unassigned = sorted(set(range(len(proj.nodes))) - assigned)
    if not unassigned:
        return communities

    stats = [
        (int(proj.deg[sorted(c)].sum()) if c else 0, c)
        for c in communities
    ]
    additions: dict[int, list[int]] = {}
    singletons: list[frozenset[int]] = []
    for node in unassigned:
        best: tuple[float, int] | None = None
        for ci, (stub_count, community) in enumerate(stats):
            k_in = len(proj.adj_sets[node] & community)
            if k_in == 0 or proj.two_m == 0:
                continue
            p = float(binomial_tail(k_in, int(proj.deg[node]), stub_count / proj.two_m))
            if p < 1.0 and (best is None or (p, ci) < best):
                best = (p, ci)
        if best is None:
            singletons.append(frozenset({node}))
        else:
            additions.setdefault(best[1], []).append(node)

    out = [
        community | frozenset(additions.get(ci, ()))
        for ci, community in enumerate(communities)
    ]
    return out + singletons


# ---------------------------------------------------------------------------
# public operations


def detect_communities(
    graph: UnifiedGraph,
    p_threshold: float,
    seed: int = 0,
    coverage: str = "complete",
    *,
    restarts: int = DEFAULT_RESTARTS,
    jaccard_threshold: float = DEFAULT_JACCARD,
) -> CommunityCover:
    """Detect an overlapping community cover, deterministically for one seed.

    Each restart is an independent covering pass over the undirected
    projection seeded by its own generator, so results do not depend on
    execution order and the passes are safe to run in parallel.
    """
    if not 0.0 < p_threshold < 1.0:
        raise ConfigError(f"P must lie strictly between 0 and 1, got {p_threshold}")
    if coverage not in ("complete", "natural"):
        raise ConfigError(f"unknown coverage mode {coverage!r}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")

    proj = _Projection(graph)
    candidates: list[frozenset[int]] = []
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        candidates.extend(_covering_pass(proj, p_threshold, rng))
    communities = _dedup(proj, candidates, jaccard_threshold)
    if coverage == "complete":
        communities = _complete_coverage(proj, communities)

    # attachment can in rare cases make two communities coincide
    final = sorted(set(communities), key=lambda c: tuple(sorted(c)))
    named = tuple(tuple(proj.nodes[i] for i in sorted(c)) for c in final)
    assignment: dict[str, list[int]] = {}
    for ci, community in enumerate(named):
        for node in community:
            assignment.setdefault(node, []).append(ci)
    return CommunityCover(
        communities=named,
        assignment={n: tuple(cs) for n, cs in sorted(assignment.items())},
        parameters=CoverParameters(p_threshold, seed, coverage, restarts, jaccard_threshold),
    )


def resolution_sweep(
    graph: UnifiedGraph,
    p_values: list[float],
    seeds: list[int],
    coverage: str = "complete",
    *,
    restarts: int = DEFAULT_RESTARTS,
    jaccard_threshold: float = DEFAULT_JACCARD,
) -> SweepReport:
    """Run detection over the (P, seed) cross product; rows sorted by P, seed."""
    if not p_values or not seeds:
        raise ConfigError("p_values and seeds must be nonempty")
    rows = []
    for p_threshold in sorted(p_values):
        for seed in sorted(seeds):
            cover = detect_communities(
                graph, p_threshold, seed, coverage,
                restarts=restarts, jaccard_threshold=jaccard_threshold,
            )
            sizes = [len(c) for c in cover.communities] or [0]
            overlaps = [len(cs) for cs in cover.assignment.values()] or [0]
            rows.append(
                SweepRow(
                    p_threshold=p_threshold,
                    seed=seed,
                    community_count=len(cover.communities),
                    size_min=min(sizes),
                    size_median=float(median(sizes)),
                    size_max=max(sizes),
                    mean_overlap=float(sum(overlaps) / len(overlaps)),
                )
            )
    return SweepReport(rows=tuple(rows))
