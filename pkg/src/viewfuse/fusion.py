"""Per-view cosine neighbor rankings, singular-triple rank aggregation, and
construction of the unified asymmetric k-nearest-neighbor graph.

For one ego account, the per-view cosine scores of every other account form a
nonnegative candidates-by-views matrix. The aggregate score of a candidate is
its entry in the leading left singular vector of that matrix (scaled by the
leading singular value), computed by power iteration on the tiny Gram matrix.
Columns are put into a canonical content order first, which makes the result
exactly invariant to the order the views are supplied in.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError
from .ingest import Corpus
from .views import ViewMatrix, account_index

AGGREGATE = "aggregate"

POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000


@dataclass
class NeighborRanking:
    """Scored candidates for one ego, descending score, ties by ascending id.

    Zero-score candidates and the ego itself are excluded.
    """

    ego: str
    view: str  # a ViewKind value or "aggregate"
    entries: tuple[tuple[str, float], ...]

    def scores(self) -> dict[str, float]:
        return dict(self.entries)


@dataclass
class UnifiedGraph:
    """Directed unweighted graph; u -> v means v is in u's neighbor set."""

    accounts: tuple[str, ...]
    k: int
    out_edges: dict[str, tuple[str, ...]]  # rank-ordered, length <= k

    @property
    def edge_count(self) -> int:
        return sum(len(v) for v in self.out_edges.values())

    def edges(self):
        for src in self.accounts:
            for dst in self.out_edges.get(src, ()):
                yield src, dst

    def undirected_edges(self) -> set[tuple[str, str]]:
        pairs = set()
        for src, dst in self.edges():
            pairs.add((src, dst) if src <= dst else (dst, src))
        return pairs


def _sorted_entries(scored: list[tuple[str, float]]) -> tuple[tuple[str, float], ...]:
    return tuple(sorted(scored, key=lambda e: (-e[1], e[0])))


def cosine_matrix(view: ViewMatrix) -> np.ndarray:
    """Dense all-pairs cosine similarity between account rows of one view."""
    matrix = view.matrix.tocsr().astype(np.float64)
    norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
    inv = np.zeros_like(norms)
    nonzero = norms > 0
    inv[nonzero] = 1.0 / norms[nonzero]
    normalized = sp.diags(inv) @ matrix
    return (normalized @ normalized.T).toarray()


def cosine_ranking(view: ViewMatrix, ego: str) -> NeighborRanking:
    """Rank all other accounts by cosine similarity to the ego's profile row."""
    i = view.accounts.index(ego) if ego in view.accounts else -1
    if i < 0:
        raise DataError(f"unknown account {ego!r}")
    sims = cosine_matrix(view)[i]
    entries = [
        (view.accounts[j], float(sims[j]))
        for j in range(len(view.accounts))
        if j != i and sims[j] > 0.0
    ]
    return NeighborRanking(ego, view.kind.value, _sorted_entries(entries))


def _power_iteration(gram: np.ndarray) -> np.ndarray:
    """Leading eigenvector of a small nonnegative Gram matrix, unit length.

    Starts from the uniform positive vector, so iterates stay entrywise
    nonnegative; converges when the successive change drops below POWER_TOL.
    """
    size = gram.shape[0]
    vec = np.full(size, 1.0 / np.sqrt(size))
    for _ in range(POWER_MAX_ITER):
        nxt = gram @ vec
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            return np.zeros(size)
        nxt /= norm
        if np.max(np.abs(nxt - vec)) < POWER_TOL:
            vec = nxt
            break
        vec = nxt
    if vec.sum() < 0.0:  # sign convention: leading right singular vector nonnegative
        vec = -vec
    return vec


def aggregate_scores(score_matrix: np.ndarray) -> np.ndarray:
    """Aggregate a candidates-by-views score matrix into one score per candidate.

    Returns sigma_1 * u_1 where (u_1, sigma_1, v_1) is the leading singular
    triple; with nonnegative input and nonnegative v_1 all scores are >= 0.
    Columns are sorted into a canonical content order before any arithmetic, so
    permuting the input columns cannot change the output even at the last bit.
    """
    x = np.asarray(score_matrix, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError("score matrix must be 2-dimensional")
    if x.size == 0 or not np.any(x > 0.0):
        return np.zeros(x.shape[0])
    if np.any(x < 0.0):
        raise DataError("score matrix entries must be nonnegative")
    order = np.lexsort(x[::-1])  # columns sorted by content, top row most significant
    canonical = x[:, order]
    gram = canonical.T @ canonical
    right = _power_iteration(gram)
    return canonical @ right


def svd_aggregate(rankings: list[NeighborRanking], candidates: set[str] | list[str]) -> NeighborRanking:
    """Merge one ego's per-view rankings into a single aggregate ranking."""
    if not rankings:
        raise ConfigError("svd_aggregate requires at least one ranking")
    egos = {r.ego for r in rankings}
    if len(egos) != 1:
        raise DataError(f"rankings must share one ego, got {sorted(egos)}")
    ego = rankings[0].ego
    ordered = tuple(sorted(set(candidates) - {ego}))
    matrix = np.zeros((len(ordered), len(rankings)))
    for j, ranking in enumerate(rankings):
        scores = ranking.scores()
        for i, candidate in enumerate(ordered):
            matrix[i, j] = scores.get(candidate, 0.0)
    agg = aggregate_scores(matrix)
    entries = [(c, float(s)) for c, s in zip(ordered, agg) if s > 0.0]
    return NeighborRanking(ego, AGGREGATE, _sorted_entries(entries))


def neighbor_set(aggregate: NeighborRanking, k: int) -> list[str]:
    """The k highest-ranked accounts (fewer when the ranking is shorter)."""
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    return [account for account, _ in aggregate.entries[:k]]


def reciprocal_rank_matrix(score_matrix: np.ndarray) -> np.ndarray:
    """Replace scores with reciprocal rank positions (sensitivity-check input)."""
    x = np.asarray(score_matrix, dtype=np.float64)
    out = np.zeros_like(x)
    for j in range(x.shape[1]):
        scored = [(i, x[i, j]) for i in range(x.shape[0]) if x[i, j] > 0.0]
        scored.sort(key=lambda t: (-t[1], t[0]))
        for position, (i, _) in enumerate(scored, start=1):
            out[i, j] = 1.0 / position
    return out


def build_unified_graph(
    corpus: Corpus,
    views: list[ViewMatrix],
    k: int,
    *,
    agg_input: str = "cosine",
) -> UnifiedGraph:
    """Assemble the unified k-NN graph over every account in the corpus.

    Candidates scoring zero in every view are never admitted to a neighbor
    set, so out-degrees may fall short of k; accounts absent from all views
    stay as isolated nodes.
    """
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    if agg_input not in ("cosine", "rrank"):
        raise ConfigError(f"unknown aggregation input {agg_input!r}")
    if not views:
        raise ConfigError("at least one view is required")
    accounts = account_index(corpus)
    for view in views:
        if view.accounts != accounts:
            raise DataError(f"view {view.kind.value} does not share the corpus account indexing")

    sims = [cosine_matrix(view) for view in views]
    n = len(accounts)
    out_edges: dict[str, tuple[str, ...]] = {}
    for i, ego in enumerate(accounts):
        mask = np.arange(n) != i
        candidate_ids = [accounts[j] for j in range(n) if j != i]
        x = np.column_stack([s[i, mask] for s in sims])
        if agg_input == "rrank":
            x = reciprocal_rank_matrix(x)
        agg = aggregate_scores(x)
        scored = [(candidate_ids[j], float(agg[j])) for j in range(len(candidate_ids)) if agg[j] > 0.0]
        scored.sort(key=lambda e: (-e[1], e[0]))
        out_edges[ego] = tuple(account for account, _ in scored[:k])
    return UnifiedGraph(accounts=accounts, k=k, out_edges=out_edges)


def export_graph_csv(graph: UnifiedGraph, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst"])
        for src, dst in graph.edges():
            writer.writerow([src, dst])


def load_graph_csv(path: str | Path, accounts: tuple[str, ...], k: int) -> UnifiedGraph:
    """Rebuild a UnifiedGraph from an exported edge list plus a node roster."""
    known = set(accounts)
    out: dict[str, list[str]] = {a: [] for a in accounts}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["src", "dst"]:
            raise DataError(f"{path}: expected header 'src,dst'")
        for row in reader:
            if not row:
                continue
            src, dst = row
            if src not in known or dst not in known:
                raise DataError(f"{path}: edge references unknown account {src!r} or {dst!r}")
            out[src].append(dst)
    return UnifiedGraph(accounts=tuple(accounts), k=k, out_edges={a: tuple(v) for a, v in out.items()})
