"""Sparse nonnegative account-by-feature profile matrices (the "views").

Eight views are supported: the outgoing/incoming directions of the follow,
mention, and retweet relations, co-listing on curated lists, and shared
YouTube channel references. All views over one corpus share a single row
indexing (sorted account ids).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .ingest import Corpus, extract_youtube_refs, resolve_video_channels


class ViewKind(str, Enum):
    FOLLOWS = "follows"
    FOLLOWED_BY = "followed_by"
    MENTIONS = "mentions"
    MENTIONED_BY = "mentioned_by"
    RETWEETS = "retweets"
    RETWEETED_BY = "retweeted_by"
    CO_LISTED = "co_listed"
    CHANNEL_SHARED = "channel_shared"


ALL_VIEW_KINDS: tuple[ViewKind, ...] = tuple(ViewKind)

_DIRECTED = {
    ViewKind.FOLLOWS: ("follow", "outgoing"),
    ViewKind.FOLLOWED_BY: ("follow", "incoming"),
    ViewKind.MENTIONS: ("mention", "outgoing"),
    ViewKind.MENTIONED_BY: ("mention", "incoming"),
    ViewKind.RETWEETS: ("retweet", "outgoing"),
    ViewKind.RETWEETED_BY: ("retweet", "incoming"),
}


@dataclass
class ViewMatrix:
    kind: ViewKind
    accounts: tuple[str, ...]  # row labels, shared across views of one corpus
    col_labels: tuple[str, ...]
    matrix: sp.csr_matrix  # nonnegative weights

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def row_of(self, account_id: str) -> int:
        # accounts is sorted, so bisection would work too; dict is simpler
        try:
            return self.accounts.index(account_id)
        except ValueError:
            raise KeyError(account_id) from None


def account_index(corpus: Corpus) -> tuple[str, ...]:
    """Row indexing shared by every view built from this corpus."""
    return tuple(sorted(corpus.accounts))


def _csr(rows, cols, weights, shape) -> sp.csr_matrix:
    matrix = sp.coo_matrix(
        (np.asarray(weights, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=shape,
    ).tocsr()
    matrix.sum_duplicates()
    return matrix


def build_directed_view(corpus: Corpus, relation: str, direction: str) -> ViewMatrix:
    """One directed relation as an account-by-account profile matrix.

    Outgoing: row u has the weight of edge (u, v) at column v. Incoming is the
    transpose profile. Follow edges weigh 1; mention/retweet edges carry their
    counts.
    """
    if relation not in ("follow", "mention", "retweet"):
        raise ConfigError(f"unknown relation {relation!r}")
    if direction not in ("outgoing", "incoming"):
        raise ConfigError(f"unknown direction {direction!r}")
    accounts = account_index(corpus)
    index = {a: i for i, a in enumerate(accounts)}
    if relation == "follow":
        edges = [(s, d, 1) for s, d in corpus.follow_edges]
    elif relation == "mention":
        edges = list(corpus.mention_edges)
    else:
        edges = list(corpus.retweet_edges)

    rows, cols, weights = [], [], []
    for src, dst, weight in edges:
        if src == dst:
            continue
        i, j = index[src], index[dst]
        if direction == "incoming":
            i, j = j, i
        rows.append(i)
        cols.append(j)
        weights.append(weight)
    kind = {
        ("follow", "outgoing"): ViewKind.FOLLOWS,
        ("follow", "incoming"): ViewKind.FOLLOWED_BY,
        ("mention", "outgoing"): ViewKind.MENTIONS,
        ("mention", "incoming"): ViewKind.MENTIONED_BY,
        ("retweet", "outgoing"): ViewKind.RETWEETS,
        ("retweet", "incoming"): ViewKind.RETWEETED_BY,
    }[(relation, direction)]
    n = len(accounts)
    return ViewMatrix(kind, accounts, accounts, _csr(rows, cols, weights, (n, n)))


def build_colisted_view(corpus: Corpus) -> ViewMatrix:
    """Binary account-by-list membership matrix."""
    accounts = account_index(corpus)
    index = {a: i for i, a in enumerate(accounts)}
    lists = tuple(sorted({list_id for list_id, _ in corpus.list_memberships}))
    list_index = {l: j for j, l in enumerate(lists)}
    rows = [index[a] for _, a in corpus.list_memberships]
    cols = [list_index[l] for l, _ in corpus.list_memberships]
    matrix = _csr(rows, cols, np.ones(len(rows)), (len(accounts), len(lists)))
    matrix.data = np.minimum(matrix.data, 1.0)  # memberships are deduplicated, but keep it binary regardless
    return ViewMatrix(ViewKind.CO_LISTED, accounts, lists, matrix)


def build_channel_view(corpus: Corpus, *, binary: bool = False) -> ViewMatrix:
    """Account-by-channel reference counts, resolved through the video map.

    Each tweet contributes the channels of its recognized video links plus any
    directly referenced channels; repetition across tweets accumulates. With
    binary=True the counts collapse to presence flags.
    """
    accounts = account_index(corpus)
    index = {a: i for i, a in enumerate(accounts)}
    usage: dict[tuple[str, str], int] = {}
    for tweet in corpus.tweets:
        refs = extract_youtube_refs(tweet.urls)
        if not refs:
            continue
        for channel_id, count in resolve_video_channels(refs, corpus).items():
            key = (tweet.account_id, channel_id)
            usage[key] = usage.get(key, 0) + count
    channels = tuple(sorted({c for _, c in usage}))
    channel_index = {c: j for j, c in enumerate(channels)}
    rows = [index[a] for (a, _) in usage]
    cols = [channel_index[c] for (_, c) in usage]
    weights = list(usage.values())
    matrix = _csr(rows, cols, weights, (len(accounts), len(channels)))
    if binary:
        matrix.data = np.minimum(matrix.data, 1.0)
    return ViewMatrix(ViewKind.CHANNEL_SHARED, accounts, channels, matrix)


def build_view(corpus: Corpus, kind: ViewKind, *, channel_binary: bool = False) -> ViewMatrix:
    if kind in _DIRECTED:
        relation, direction = _DIRECTED[kind]
        return build_directed_view(corpus, relation, direction)
    if kind is ViewKind.CO_LISTED:
        return build_colisted_view(corpus)
    if kind is ViewKind.CHANNEL_SHARED:
        return build_channel_view(corpus, binary=channel_binary)
    raise ConfigError(f"unknown view kind {kind!r}")


def build_views(
    corpus: Corpus,
    kinds: tuple[ViewKind, ...] = ALL_VIEW_KINDS,
    *,
    channel_binary: bool = False,
) -> list[ViewMatrix]:
    if not kinds:
        raise ConfigError("at least one view kind must be enabled")
    return [build_view(corpus, kind, channel_binary=channel_binary) for kind in kinds]


def export_view_csv(view: ViewMatrix, path: str | Path) -> None:
    """Debug export as a sparse triplet file: row_id,col_id,weight."""
    coo = view.matrix.tocoo()
    triplets = sorted(
        (view.accounts[i], view.col_labels[j], weight)
        for i, j, weight in zip(coo.row, coo.col, coo.data)
    )
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_id", "col_id", "weight"])
        for row_id, col_id, weight in triplets:
            writer.writerow([row_id, col_id, f"{weight:g}"])
