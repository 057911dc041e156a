"""Dump-file corpus loading, tweet entity extraction, and video/channel resolution.

A corpus is assembled from a small set of flat files (CSV edge lists plus JSONL
records) referenced by a dataset manifest. All timestamps are normalized to UTC
at parse time so that downstream daily binning is timezone-stable. Loading in
strict mode rejects records that reference unknown accounts; in lenient mode
they are quarantined and counted in the skip metrics, which are always reported.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlparse, parse_qs

from .errors import DataError

VIDEO_ID_RE = re.compile(r"^[A-Za-z0-9_-]{11}$")
CHANNEL_SEGMENT_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
SCREEN_NAME = r"[A-Za-z0-9_]{1,15}"
RT_PREFIX_RE = re.compile(rf"^RT @({SCREEN_NAME})(?:\b|$)")
MENTION_RE = re.compile(rf"@({SCREEN_NAME})")

#: canonical manifest keys -> default file names
DATASET_FILES = {
    "accounts": "accounts.csv",
    "follows": "follows.csv",
    "mentions": "mentions.csv",
    "retweets": "retweets.csv",
    "lists": "lists.csv",
    "tweets": "tweets.jsonl",
    "videos": "videos.jsonl",
    "channels": "channels.jsonl",
    "exclusions": "exclusions.txt",
}


@dataclass(frozen=True)
class AccountRecord:
    account_id: str
    screen_name: str


@dataclass(frozen=True)
class TweetRecord:
    account_id: str
    tweet_id: str
    timestamp: datetime
    text: str
    mentioned_account_ids: tuple[str, ...]
    retweeted_account_id: str | None
    urls: tuple[str, ...]


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    channel_id: str
    published_at: datetime
    topic_labels: tuple[str, ...]  # deduplicated, original order


@dataclass(frozen=True)
class ChannelRecord:
    channel_id: str
    title: str


@dataclass(frozen=True)
class YouTubeRefs:
    """Video and channel identifiers recognized in a list of URLs."""

    video_ids: frozenset[str]
    channel_ids: frozenset[str]

    def __bool__(self) -> bool:
        return bool(self.video_ids or self.channel_ids)


@dataclass
class SkipMetrics:
    """Counters for records dropped instead of failing the load."""

    excluded_accounts: int = 0
    excluded_edges: int = 0
    dangling_edges: int = 0
    dangling_memberships: int = 0
    dropped_tweets: int = 0
    unresolved_mentions: int = 0
    unresolved_retweet_targets: int = 0
    unresolved_videos: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass
class Corpus:
    """In-memory dataset; treated as immutable once loaded."""

    accounts: dict[str, AccountRecord]
    follow_edges: tuple[tuple[str, str], ...]
    mention_edges: tuple[tuple[str, str, int], ...]
    retweet_edges: tuple[tuple[str, str, int], ...]
    list_memberships: tuple[tuple[str, str], ...]
    tweets: tuple[TweetRecord, ...]
    channels: dict[str, ChannelRecord]
    videos: dict[str, VideoRecord]
    skip_metrics: SkipMetrics = field(default_factory=SkipMetrics)

    def screen_name_index(self) -> dict[str, str]:
        """Lower-cased screen name -> account id (last writer wins on clashes)."""
        return {rec.screen_name.lower(): aid for aid, rec in self.accounts.items()}

    def videos_by_channel(self) -> dict[str, list[VideoRecord]]:
        by_channel: dict[str, list[VideoRecord]] = {}
        for video in self.videos.values():
            by_channel.setdefault(video.channel_id, []).append(video)
        for vids in by_channel.values():
            vids.sort(key=lambda v: v.video_id)
        return by_channel


def parse_timestamp(value: str, *, where: str = "") -> datetime:
    """Parse an ISO-8601 timestamp and normalize it to UTC.

    Naive timestamps are taken as already-UTC.
    """
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"{where}: unparseable timestamp {value!r}") from exc
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


# ---------------------------------------------------------------------------
# entity extraction


def extract_youtube_refs(urls: list[str] | tuple[str, ...]) -> YouTubeRefs:
    """Pick video/channel identifiers out of a URL list.

    Recognized forms: ``youtu.be/<id>``, ``watch?v=<id>``, ``/channel/<id>``,
    ``/user/<name>``. Everything else is ignored. Idempotent and
    order-independent: the result is a pair of sets.
    """
    video_ids: set[str] = set()
    channel_ids: set[str] = set()
    for url in urls:
        try:
            parsed = urlparse(url)
        except ValueError:
            continue
        if parsed.scheme not in ("http", "https"):
            continue
        host = parsed.netloc.lower().split(":")[0]
        segments = [s for s in parsed.path.split("/") if s]
        if host == "youtu.be":
            if segments and VIDEO_ID_RE.match(segments[0]):
                video_ids.add(segments[0])
            continue
        if host != "youtube.com" and not host.endswith(".youtube.com"):
            continue
        if segments and segments[0] == "watch":
            for candidate in parse_qs(parsed.query).get("v", []):
                if VIDEO_ID_RE.match(candidate):
                    video_ids.add(candidate)
        elif len(segments) >= 2 and segments[0] in ("channel", "user"):
            if CHANNEL_SEGMENT_RE.match(segments[1]):
                channel_ids.add(segments[1])
    return YouTubeRefs(frozenset(video_ids), frozenset(channel_ids))


def extract_tweet_entities(
    tweet: TweetRecord,
    corpus: Corpus,
    metrics: SkipMetrics | None = None,
) -> tuple[Counter, str | None]:
    """Resolve a tweet's mention multiset and its retweet target.

    The structured retweet field takes precedence; a leading ``RT @name`` text
    pattern, resolved case-insensitively against known screen names, is the
    fallback for partial dumps. The target's leading mention occurrence is
    excluded from the mention multiset. Unresolvable names are dropped and
    counted, never fatal.
    """
    metrics = metrics if metrics is not None else corpus.skip_metrics
    names = corpus.screen_name_index()

    target: str | None = None
    if tweet.retweeted_account_id:
        if tweet.retweeted_account_id in corpus.accounts:
            target = tweet.retweeted_account_id
        else:
            metrics.unresolved_retweet_targets += 1
    else:
        match = RT_PREFIX_RE.match(tweet.text)
        if match:
            resolved = names.get(match.group(1).lower())
            if resolved is not None:
                target = resolved
            else:
                metrics.unresolved_retweet_targets += 1

    mentions: Counter = Counter()
    if tweet.mentioned_account_ids:
        for account_id in tweet.mentioned_account_ids:
            if account_id in corpus.accounts:
                mentions[account_id] += 1
            else:
                metrics.unresolved_mentions += 1
    elif tweet.text:
        for name in MENTION_RE.findall(tweet.text):
            resolved = names.get(name.lower())
            if resolved is not None:
                mentions[resolved] += 1
            else:
                metrics.unresolved_mentions += 1

    if target is not None and mentions[target] > 0:
        mentions[target] -= 1
        if mentions[target] == 0:
            del mentions[target]
    return mentions, target


def resolve_video_channels(
    refs: YouTubeRefs,
    corpus: Corpus,
    metrics: SkipMetrics | None = None,
) -> Counter:
    """Map references to a channel-usage multiset.

    Each video id contributes its owning channel (indirect); channel ids pass
    through (direct). Unknown video ids are counted as unresolved.
    """
    metrics = metrics if metrics is not None else corpus.skip_metrics
    usage: Counter = Counter()
    for video_id in refs.video_ids:
        video = corpus.videos.get(video_id)
        if video is None:
            metrics.unresolved_videos += 1
        else:
            usage[video.channel_id] += 1
    for channel_id in refs.channel_ids:
        usage[channel_id] += 1
    return usage


# ---------------------------------------------------------------------------
# loading


def _read_csv(path: Path, expected_header: list[str]):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        if header != expected_header:
            raise DataError(
                f"{path}:1: expected header {','.join(expected_header)!r}, got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise DataError(f"{path}:{lineno}: expected {len(expected_header)} fields, got {len(row)}")
            yield lineno, row


def _read_jsonl(path: Path):
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _require(obj: dict, key: str, path: Path, lineno: int) -> object:
    if key not in obj:
        raise DataError(f"{path}:{lineno}: missing field {key!r}")
    return obj[key]


def read_manifest(manifest_path: str | Path) -> dict[str, Path]:
    """Read a dataset manifest (JSON mapping of section -> file path).

    Paths are resolved relative to the manifest's directory. Unknown keys are
    rejected; only 'accounts' is mandatory.
    """
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"dataset manifest not found: {manifest_path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataError(f"{manifest_path}: manifest must be a JSON object")
    unknown = set(raw) - set(DATASET_FILES)
    if unknown:
        raise DataError(f"{manifest_path}: unknown manifest keys: {sorted(unknown)}")
    if "accounts" not in raw or raw["accounts"] is None:
        raise DataError(f"{manifest_path}: manifest must name an accounts file")
    base = manifest_path.parent
    paths: dict[str, Path] = {}
    for key, value in raw.items():
        if value is None:
            continue
        path = base / value
        if not path.exists():
            raise DataError(f"{manifest_path}: referenced file does not exist: {path}")
        paths[key] = path
    return paths


def _load_edges(
    path: Path | None,
    accounts: dict[str, AccountRecord],
    excluded: set[str],
    *,
    weighted: bool,
    strict: bool,
    metrics: SkipMetrics,
) -> tuple:
    if path is None:
        return ()
    header = ["src", "dst", "count"] if weighted else ["src", "dst"]
    acc: dict[tuple[str, str], int] = {}
    offenders: list[str] = []
    for lineno, row in _read_csv(path, header):
        src, dst = row[0], row[1]
        if weighted:
            try:
                count = int(row[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: count must be an integer, got {row[2]!r}") from None
            if count < 1:
                raise DataError(f"{path}:{lineno}: count must be >= 1, got {count}")
        else:
            count = 1
        if src == dst:
            raise DataError(f"{path}:{lineno}: self-loop edge {src!r}")
        if src in excluded or dst in excluded:
            metrics.excluded_edges += 1
            continue
        missing = [a for a in (src, dst) if a not in accounts]
        if missing:
            if strict:
                offenders.extend(f"{path}:{lineno}: unknown account {a!r}" for a in missing)
            else:
                metrics.dangling_edges += 1
            continue
        acc[(src, dst)] = acc.get((src, dst), 0) + count
    if offenders:
        raise DataError("dangling edge endpoints:\n" + "\n".join(offenders))
    if weighted:
        return tuple((s, d, c) for (s, d), c in sorted(acc.items()))
    return tuple(sorted(acc))


def load_corpus(manifest: str | Path | dict[str, Path], *, strict: bool = True) -> Corpus:
    """Load and validate a corpus from a dataset manifest.

    strict=True rejects edges/tweets referencing unknown accounts; strict=False
    quarantines them into the skip metrics. Exclusions are applied before
    anything else, so excluded accounts never contribute records in either mode.
    """
    paths = read_manifest(manifest) if not isinstance(manifest, dict) else dict(manifest)
    metrics = SkipMetrics()

    excluded: set[str] = set()
    if paths.get("exclusions") is not None:
        for line in Path(paths["exclusions"]).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                excluded.add(line)

    accounts: dict[str, AccountRecord] = {}
    for lineno, row in _read_csv(paths["accounts"], ["account_id", "screen_name"]):
        account_id, screen_name = row
        if not account_id:
            raise DataError(f"{paths['accounts']}:{lineno}: empty account_id")
        if account_id in excluded:
            metrics.excluded_accounts += 1
            continue
        if account_id in accounts:
            raise DataError(f"{paths['accounts']}:{lineno}: duplicate account {account_id!r}")
        accounts[account_id] = AccountRecord(account_id, screen_name)

    follow_edges = _load_edges(paths.get("follows"), accounts, excluded, weighted=False, strict=strict, metrics=metrics)
    mention_edges = _load_edges(paths.get("mentions"), accounts, excluded, weighted=True, strict=strict, metrics=metrics)
    retweet_edges = _load_edges(paths.get("retweets"), accounts, excluded, weighted=True, strict=strict, metrics=metrics)

    memberships: set[tuple[str, str]] = set()
    if paths.get("lists") is not None:
        offenders = []
        for lineno, row in _read_csv(paths["lists"], ["list_id", "account_id"]):
            list_id, account_id = row
            if account_id not in accounts:
                if account_id in excluded:
                    metrics.dangling_memberships += 1
                elif strict:
                    offenders.append(f"{paths['lists']}:{lineno}: unknown account {account_id!r}")
                else:
                    metrics.dangling_memberships += 1
                continue
            memberships.add((list_id, account_id))
        if offenders:
            raise DataError("dangling list memberships:\n" + "\n".join(offenders))

    channels: dict[str, ChannelRecord] = {}
    if paths.get("channels") is not None:
        for lineno, obj in _read_jsonl(paths["channels"]):
            channel_id = str(_require(obj, "channel_id", paths["channels"], lineno))
            title = str(obj.get("title", ""))
            if channel_id in channels and channels[channel_id].title != title:
                raise DataError(f"{paths['channels']}:{lineno}: conflicting duplicate channel {channel_id!r}")
            channels[channel_id] = ChannelRecord(channel_id, title)

    videos: dict[str, VideoRecord] = {}
    if paths.get("videos") is not None:
        for lineno, obj in _read_jsonl(paths["videos"]):
            video_id = str(_require(obj, "video_id", paths["videos"], lineno))
            channel_id = str(_require(obj, "channel_id", paths["videos"], lineno))
            published = parse_timestamp(
                str(_require(obj, "published_at", paths["videos"], lineno)),
                where=f"{paths['videos']}:{lineno}",
            )
            labels_raw = obj.get("topic_labels", [])
            if not isinstance(labels_raw, list):
                raise DataError(f"{paths['videos']}:{lineno}: topic_labels must be a list")
            labels = tuple(dict.fromkeys(str(lab) for lab in labels_raw))
            if video_id in videos and videos[video_id].channel_id != channel_id:
                raise DataError(f"{paths['videos']}:{lineno}: video {video_id!r} maps to two channels")
            videos[video_id] = VideoRecord(video_id, channel_id, published, labels)
            # videos referencing a channel absent from channels.jsonl register it
            if channel_id not in channels:
                channels[channel_id] = ChannelRecord(channel_id, "")

    tweets: list[TweetRecord] = []
    if paths.get("tweets") is not None:
        for lineno, obj in _read_jsonl(paths["tweets"]):
            account_id = str(_require(obj, "account_id", paths["tweets"], lineno))
            if account_id not in accounts:
                if account_id in excluded or not strict:
                    metrics.dropped_tweets += 1
                    continue
                raise DataError(f"{paths['tweets']}:{lineno}: tweet by unknown account {account_id!r}")
            mentioned = obj.get("mentioned_account_ids", [])
            if not isinstance(mentioned, list):
                raise DataError(f"{paths['tweets']}:{lineno}: mentioned_account_ids must be a list")
            urls = obj.get("urls", [])
            if not isinstance(urls, list):
                raise DataError(f"{paths['tweets']}:{lineno}: urls must be a list")
            retweeted = obj.get("retweeted_account_id")
            tweets.append(
                TweetRecord(
                    account_id=account_id,
                    tweet_id=str(_require(obj, "tweet_id", paths["tweets"], lineno)),
                    timestamp=parse_timestamp(
                        str(_require(obj, "timestamp", paths["tweets"], lineno)),
                        where=f"{paths['tweets']}:{lineno}",
                    ),
                    text=str(obj.get("text", "")),
                    mentioned_account_ids=tuple(str(m) for m in mentioned),
                    retweeted_account_id=None if retweeted is None else str(retweeted),
                    urls=tuple(str(u) for u in urls),
                )
            )
    tweets.sort(key=lambda t: (t.tweet_id, t.account_id))

    return Corpus(
        accounts=accounts,
        follow_edges=follow_edges,
        mention_edges=mention_edges,
        retweet_edges=retweet_edges,
        list_memberships=tuple(sorted(memberships)),
        tweets=tuple(tweets),
        channels=channels,
        videos=videos,
        skip_metrics=metrics,
    )


# ---------------------------------------------------------------------------
# saving (canonical form; load -> save -> load is a fixed point)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_jsonl(path: Path, objects) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")


def save_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    """Write the corpus in the dataset file formats and return the manifest path.

    Output is canonical (sorted rows, compact JSON) so a reload re-saves
    byte-identically.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    _write_csv(
        out / "accounts.csv",
        ["account_id", "screen_name"],
        ((a.account_id, a.screen_name) for a in sorted(corpus.accounts.values(), key=lambda a: a.account_id)),
    )
    _write_csv(out / "follows.csv", ["src", "dst"], sorted(corpus.follow_edges))
    _write_csv(out / "mentions.csv", ["src", "dst", "count"], sorted(corpus.mention_edges))
    _write_csv(out / "retweets.csv", ["src", "dst", "count"], sorted(corpus.retweet_edges))
    _write_csv(out / "lists.csv", ["list_id", "account_id"], sorted(corpus.list_memberships))

    _write_jsonl(
        out / "tweets.jsonl",
        (
            {
                "account_id": t.account_id,
                "tweet_id": t.tweet_id,
                "timestamp": format_timestamp(t.timestamp),
                "text": t.text,
                "mentioned_account_ids": list(t.mentioned_account_ids),
                "retweeted_account_id": t.retweeted_account_id,
                "urls": list(t.urls),
            }
            for t in sorted(corpus.tweets, key=lambda t: (t.tweet_id, t.account_id))
        ),
    )
    _write_jsonl(
        out / "videos.jsonl",
        (
            {
                "video_id": v.video_id,
                "channel_id": v.channel_id,
                "published_at": format_timestamp(v.published_at),
                "topic_labels": list(v.topic_labels),
            }
            for v in sorted(corpus.videos.values(), key=lambda v: v.video_id)
        ),
    )
    _write_jsonl(
        out / "channels.jsonl",
        (
            {"channel_id": c.channel_id, "title": c.title}
            for c in sorted(corpus.channels.values(), key=lambda c: c.channel_id)
        ),
    )

    manifest = {key: DATASET_FILES[key] for key in DATASET_FILES if key != "exclusions"}
    manifest_path = out / "dataset.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest_path
