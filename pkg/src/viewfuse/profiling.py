"""Per-community TF-IDF rankings of preferred channels and of topic labels.

Account profile documents hold the channel identifiers referenced from an
account's tweets; channel topic documents aggregate the annotation labels of a
(seeded, capped) sample of the channel's uploads. Weights follow the log
scheme (1 + ln tf) * ln(N / df) with nonzero rows normalized to unit Euclidean
length; the natural log is fixed so outputs are byte-stable. A token present
in every document gets zero weight and silently vanishes from rankings, an
accepted consequence of the formula.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .community import CommunityCover
from .ingest import Corpus, extract_youtube_refs, resolve_video_channels

DEFAULT_CHANNEL_TOP_N = 25
DEFAULT_TOPIC_TOP_N = 10


@dataclass
class ProfileDocument:
    owner: str  # account id for channel documents' consumers; channel id for topic documents
    tokens: Counter

    def __post_init__(self):
        self.tokens = Counter(self.tokens)


@dataclass
class TfidfMatrix:
    owners: tuple[str, ...]
    vocabulary: tuple[str, ...]
    matrix: sp.csr_matrix  # rows aligned with owners; nonzero rows unit-length

    def row_of(self, owner: str) -> int | None:
        if not hasattr(self, "_index"):
            self._index = {o: i for i, o in enumerate(self.owners)}
        return self._index.get(owner)

    def nonzero_rows(self) -> np.ndarray:
        return np.asarray(self.matrix.power(2).sum(axis=1)).ravel() > 0.0


@dataclass
class RankingReport:
    """Top-n identifiers for one community, descending score, ties by id."""

    community: int
    kind: str  # "channel" | "topic"
    entries: tuple[tuple[str, float], ...]
    annotated_fraction: float | None = None

    @property
    def empty(self) -> bool:
        return not self.entries


def account_channel_documents(corpus: Corpus) -> list[ProfileDocument]:
    """One profile document per account that referenced at least one channel."""
    usage: dict[str, Counter] = {}
    for tweet in corpus.tweets:
        refs = extract_youtube_refs(tweet.urls)
        if not refs:
            continue
        resolved = resolve_video_channels(refs, corpus)
        if resolved:
            usage.setdefault(tweet.account_id, Counter()).update(resolved)
    return [ProfileDocument(owner, tokens) for owner, tokens in sorted(usage.items())]


def tfidf_vectors(documents: list[ProfileDocument]) -> TfidfMatrix:
    """Log-scaled TF-IDF vectors over the documents, rows unit-normalized.

    Documents with no tokens are excluded from the corpus statistics entirely.
    A single-document corpus is degenerate (every idf is ln(1/1) = 0, which
    would zero the whole matrix); there idf is taken as 1 so the lone row
    still ranks its own tokens.
    """
    docs = [d for d in documents if d.tokens]
    if not docs:
        raise DataError("tfidf requires at least one document with at least one token")
    owners = tuple(d.owner for d in docs)
    if len(set(owners)) != len(owners):
        raise DataError("document owners must be unique")

    vocabulary = tuple(sorted({t for d in docs for t in d.tokens}))
    col = {t: j for j, t in enumerate(vocabulary)}
    n_docs = len(docs)
    df = Counter()
    for d in docs:
        df.update(set(d.tokens))
    if n_docs == 1:
        idf = {t: 1.0 for t in vocabulary}
    else:
        idf = {t: float(np.log(n_docs / df[t])) for t in vocabulary}

    rows, cols, data = [], [], []
    for i, d in enumerate(docs):
        for token, tf in d.tokens.items():
            weight = (1.0 + np.log(tf)) * idf[token]
            if weight > 0.0:
                rows.append(i)
                cols.append(col[token])
                data.append(weight)
    matrix = sp.coo_matrix(
        (np.array(data), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(n_docs, len(vocabulary)),
    ).tocsr()

    norms = np.sqrt(np.asarray(matrix.power(2).sum(axis=1)).ravel())
    inv = np.zeros_like(norms)
    inv[norms > 0] = 1.0 / norms[norms > 0]
    matrix = sp.diags(inv) @ matrix
    return TfidfMatrix(owners, vocabulary, matrix.tocsr())


def _top_entries(mean_vector: np.ndarray, vocabulary: tuple[str, ...], top_n: int) -> tuple[tuple[str, float], ...]:
    scored = [(vocabulary[j], float(mean_vector[j])) for j in np.flatnonzero(mean_vector > 0.0)]
    scored.sort(key=lambda e: (-e[1], e[0]))
    return tuple(scored[:top_n])


def _mean_ranking(
    tfidf: TfidfMatrix,
    member_owners: list[str],
    community: int,
    kind: str,
    top_n: int,
) -> RankingReport:
    nonzero = tfidf.nonzero_rows()
    rows = []
    for owner in member_owners:
        i = tfidf.row_of(owner)
        if i is not None and nonzero[i]:
            rows.append(i)
    if not rows:
        return RankingReport(community=community, kind=kind, entries=())
    mean_vector = np.asarray(tfidf.matrix[rows].mean(axis=0)).ravel()
    return RankingReport(community=community, kind=kind, entries=_top_entries(mean_vector, tfidf.vocabulary, top_n))


def community_channel_ranking(
    cover: CommunityCover,
    documents: list[ProfileDocument],
    top_n: int = DEFAULT_CHANNEL_TOP_N,
) -> list[RankingReport]:
    """Rank channels per community from the mean of member TF-IDF rows.

    The IDF statistics come from the full account corpus, not per community;
    accounts belonging to several communities contribute fully to each. A
    community with no documented accounts yields an empty, flagged report.
    """
    tfidf = tfidf_vectors(documents)
    return [
        _mean_ranking(tfidf, list(community), ci, "channel", top_n)
        for ci, community in enumerate(cover.communities)
    ]


def channel_topic_document(
    channel_id: str,
    corpus: Corpus,
    sample_cap: int = 1000,
    seed: int = 0,
) -> tuple[ProfileDocument, float]:
    """Topic document for one channel from a seeded uniform video sample.

    Samples min(sample_cap, uploads) videos without replacement, aggregates
    their labels, and reports the fraction of sampled videos that carried at
    least one label.
    """
    videos = sorted(
        (v for v in corpus.videos.values() if v.channel_id == channel_id),
        key=lambda v: v.video_id,
    )
    if len(videos) > sample_cap:
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(videos), size=sample_cap, replace=False)
        videos = [videos[i] for i in sorted(picks)]
    tokens: Counter = Counter()
    annotated = 0
    for video in videos:
        if video.topic_labels:
            annotated += 1
            tokens.update(video.topic_labels)
    fraction = annotated / len(videos) if videos else 0.0
    return ProfileDocument(channel_id, tokens), fraction


def community_topic_ranking(
    channel_rankings: list[RankingReport],
    topic_documents: list[ProfileDocument],
    top_n: int = DEFAULT_TOPIC_TOP_N,
) -> list[RankingReport]:
    """Rank topic labels per community from its ranked channels' topic vectors.

    The topic TF-IDF corpus covers every channel appearing in at least one
    channel ranking; per community the mean is over that community's ranked
    channels.
    """
    if not any(d.tokens for d in topic_documents):
        return [
            RankingReport(community=r.community, kind="topic", entries=())
            for r in channel_rankings
        ]
    tfidf = tfidf_vectors(topic_documents)
    reports = []
    for ranking in channel_rankings:
        channels = [channel for channel, _ in ranking.entries]
        reports.append(_mean_ranking(tfidf, channels, ranking.community, "topic", top_n))
    return reports
