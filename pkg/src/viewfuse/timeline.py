"""Daily upload series for a community's preferred channels, and
period-restricted topic rankings around events.

Days are UTC calendar days throughout; window bounds are inclusive and a video
published one day past the end never contributes.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from .errors import ConfigError
from .ingest import Corpus
from .profiling import (
    DEFAULT_TOPIC_TOP_N,
    ProfileDocument,
    RankingReport,
    tfidf_vectors,
    _mean_ranking,
)


@dataclass(frozen=True)
class EventWindow:
    start: date
    end: date  # inclusive

    def __post_init__(self):
        if self.start > self.end:
            raise ConfigError(f"window start {self.start} is after end {self.end}")

    def days(self) -> list[date]:
        span = (self.end - self.start).days + 1
        return [self.start + timedelta(days=i) for i in range(span)]

    def contains(self, day: date) -> bool:
        return self.start <= day <= self.end


@dataclass
class UploadSeries:
    community: int
    start: date
    end: date
    counts: tuple[int, ...]  # one entry per day, zeros included

    def total(self) -> int:
        return sum(self.counts)

    def peak_day(self) -> date | None:
        if not self.counts or max(self.counts) == 0:
            return None
        offset = max(range(len(self.counts)), key=lambda i: (self.counts[i], -i))
        return self.start + timedelta(days=offset)


def daily_upload_series(
    community: int,
    channel_ranking: RankingReport,
    corpus: Corpus,
    window: EventWindow,
) -> UploadSeries:
    """Per-day upload counts over the community's ranked channels."""
    channels = {channel for channel, _ in channel_ranking.entries}
    per_day: Counter = Counter()
    for video in corpus.videos.values():
        if video.channel_id not in channels:
            continue
        day = video.published_at.date()
        if window.contains(day):
            per_day[day] += 1
    days = window.days()
    return UploadSeries(
        community=community,
        start=window.start,
        end=window.end,
        counts=tuple(per_day.get(day, 0) for day in days),
    )


def window_topic_ranking(
    community: int,
    channel_ranking: RankingReport,
    corpus: Corpus,
    window: EventWindow,
    top_n: int = DEFAULT_TOPIC_TOP_N,
) -> RankingReport:
    """Topic ranking built only from the ranked channels' in-window uploads.

    No sampling cap applies inside a window. The report carries the fraction
    of in-window videos that had at least one label; when the window holds no
    videos at all the report is empty and flagged.
    """
    channels = [channel for channel, _ in channel_ranking.entries]
    channel_set = set(channels)
    docs: dict[str, Counter] = {channel: Counter() for channel in channels}
    total = 0
    annotated = 0
    for video in sorted(corpus.videos.values(), key=lambda v: v.video_id):
        if video.channel_id not in channel_set:
            continue
        if not window.contains(video.published_at.date()):
            continue
        total += 1
        if video.topic_labels:
            annotated += 1
            docs[video.channel_id].update(video.topic_labels)
    fraction = annotated / total if total else 0.0
    documents = [ProfileDocument(channel, tokens) for channel, tokens in docs.items() if tokens]
    if not documents:
        return RankingReport(community=community, kind="topic", entries=(), annotated_fraction=fraction)
    tfidf = tfidf_vectors(documents)
    report = _mean_ranking(tfidf, channels, community, "topic", top_n)
    report.annotated_fraction = fraction
    return report


def export_series_csv(series: UploadSeries, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "count"])
        for offset, count in enumerate(series.counts):
            writer.writerow([(series.start + timedelta(days=offset)).isoformat(), count])
