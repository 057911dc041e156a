"""Synthetic multi-view corpora with planted overlapping communities.

The generator plants a block structure: accounts partition into blocks (a
configurable fraction joins a second block), every directed relation is drawn
from a block model (intra-block, within-macro-group, and cross-group edge
probabilities), lists and preferred channels are block-local, and uploaded
videos carry block-specific topic labels. Single-day event injections add
timed bursts of labeled uploads for one block's channels. Everything is a
deterministic function of the spec seed, and the spec is canonicalized (blocks
stable-sorted by size, macro groups remapped) before generation, so relabeling
blocks cannot change the output.

Cover agreement is measured with the extended normalized mutual information
for overlapping covers, where each community is treated as a binary variable
over nodes and mismatch terms use the min-conditional-entropy matching with
the standard eligibility constraint h(P11) + h(P00) >= h(P01) + h(P10).
Convention: a community whose membership variable has zero entropy (empty or
covering every node) contributes a zero normalized term. Natural logs
throughout (the normalization cancels the base).

Worked 6-node example, pinned for reference: for covers
A = {{0,1,2}, {3,4,5}} and B = {{0,1}, {2,3,4,5}},
nmi(A, B) = 0.47957395851362217; and for all-singletons versus one community
of all six nodes the value is 0.5.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta, timezone
from math import log

import numpy as np

from .community import CommunityCover, CoverParameters
from .errors import ConfigError, DataError
from .ingest import (
    AccountRecord,
    ChannelRecord,
    Corpus,
    SkipMetrics,
    TweetRecord,
    VideoRecord,
)

RELATIONS = ("follow", "mention", "retweet")


@dataclass(frozen=True)
class EventInjection:
    """A one-day burst of labeled uploads for one block's channels."""

    block: int
    day_offset: int
    video_count: int
    labels: tuple[str, ...]
    channel_fraction: float = 0.75  # share of the block's channels that carry the burst


@dataclass
class SynthSpec:
    n_accounts: int
    block_sizes: tuple[int, ...]
    macro_groups: tuple[tuple[int, ...], ...] | None = None
    overlap_fraction: float = 0.0
    intra_p: dict[str, float] = field(default_factory=lambda: {"follow": 0.1, "mention": 0.08, "retweet": 0.05})
    within_macro_p: dict[str, float] = field(default_factory=lambda: {"follow": 0.01, "mention": 0.008, "retweet": 0.005})
    cross_p: dict[str, float] = field(default_factory=lambda: {"follow": 0.002, "mention": 0.002, "retweet": 0.001})
    mention_lambda: float = 1.0
    retweet_lambda: float = 0.5
    lists_per_block: int = 3
    list_membership_p: float = 0.7
    channels_per_block: int = 4
    videos_per_channel: int = 30
    topics_per_block: int = 6
    labels_per_video: int = 2
    label_probability: float = 0.8  # chance an upload carries any labels at all
    channel_refs_per_account: float = 6.0
    upload_start: date = date(2013, 8, 1)
    upload_days: int = 60
    events: tuple[EventInjection, ...] = ()
    seed: int = 0

    def validate(self) -> None:
        if self.n_accounts < 1:
            raise ConfigError("n_accounts must be >= 1")
        if not self.block_sizes:
            raise ConfigError("block_sizes must be nonempty")
        if any(s < 1 for s in self.block_sizes):
            raise ConfigError("every block size must be >= 1")
        if sum(self.block_sizes) != self.n_accounts:
            raise ConfigError(
                f"block sizes sum to {sum(self.block_sizes)}, expected n_accounts={self.n_accounts}"
            )
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ConfigError("overlap_fraction must lie in [0, 1)")
        for name, probs in (
            ("intra_p", self.intra_p),
            ("within_macro_p", self.within_macro_p),
            ("cross_p", self.cross_p),
        ):
            for relation in RELATIONS:
                p = probs.get(relation)
                if p is None or not 0.0 <= p <= 1.0:
                    raise ConfigError(f"{name}[{relation!r}] must be a probability in [0, 1]")
        if self.macro_groups is not None:
            flat = [b for group in self.macro_groups for b in group]
            if sorted(flat) != list(range(len(self.block_sizes))):
                raise ConfigError("macro_groups must partition the block indices")
        if self.upload_days < 1:
            raise ConfigError("upload_days must be >= 1")
        for event in self.events:
            if not 0 <= event.block < len(self.block_sizes):
                raise ConfigError(f"event references unknown block {event.block}")
            if not 0 <= event.day_offset < self.upload_days:
                raise ConfigError(f"event day_offset {event.day_offset} outside the upload period")
            if event.video_count < 1:
                raise ConfigError("event video_count must be >= 1")


@dataclass
class GroundTruth:
    cover: CommunityCover
    channel_preferences: dict[int, tuple[str, ...]]
    topic_preferences: dict[int, tuple[str, ...]]


def _canonicalize(spec: SynthSpec) -> SynthSpec:
    """Stable-sort blocks by size and remap macro groups accordingly."""
    order = sorted(range(len(spec.block_sizes)), key=lambda b: spec.block_sizes[b])
    remap = {old: new for new, old in enumerate(order)}
    macro = None
    if spec.macro_groups is not None:
        macro = tuple(
            sorted(tuple(sorted(remap[b] for b in group)) for group in spec.macro_groups)
        )
    events = tuple(replace(e, block=remap[e.block]) for e in spec.events)
    return replace(
        spec,
        block_sizes=tuple(spec.block_sizes[b] for b in order),
        macro_groups=macro,
        events=events,
    )


def _utc(day: date, seconds: int) -> datetime:
    return datetime.combine(day, time(0, 0), tzinfo=timezone.utc) + timedelta(seconds=int(seconds))


def generate_multiview(spec: SynthSpec) -> tuple[Corpus, GroundTruth]:
    """Generate a corpus plus its planted ground truth, deterministically."""
    spec.validate()
    spec = _canonicalize(spec)
    rng = np.random.default_rng(spec.seed)
    n = spec.n_accounts
    n_blocks = len(spec.block_sizes)

    account_ids = [f"a{i:04d}" for i in range(n)]
    accounts = {aid: AccountRecord(aid, f"user_{i:04d}") for i, aid in enumerate(account_ids)}

    # block assignment: contiguous primary blocks, then seeded second memberships
    primary = np.zeros(n, dtype=np.int64)
    cursor = 0
    for b, size in enumerate(spec.block_sizes):
        primary[cursor:cursor + size] = b
        cursor += size
    member_blocks: list[set[int]] = [{int(primary[i])} for i in range(n)]
    overlap_count = int(round(n * spec.overlap_fraction))
    if overlap_count > 0 and n_blocks > 1:
        chosen = rng.choice(n, size=overlap_count, replace=False)
        for i in sorted(int(c) for c in chosen):
            others = [b for b in range(n_blocks) if b != int(primary[i])]
            member_blocks[i].add(int(others[int(rng.integers(len(others)))]))

    macro_of = np.zeros(n_blocks, dtype=np.int64)
    if spec.macro_groups is not None:
        for g, group in enumerate(spec.macro_groups):
            for b in group:
                macro_of[b] = g
    else:
        macro_of = np.arange(n_blocks)

    membership = np.zeros((n, n_blocks), dtype=bool)
    for i, blocks in enumerate(member_blocks):
        for b in blocks:
            membership[i, b] = True
    shares_block = membership @ membership.T
    macro_mask = np.zeros((n, int(macro_of.max()) + 1), dtype=bool)
    for i, blocks in enumerate(member_blocks):
        for b in blocks:
            macro_mask[i, int(macro_of[b])] = True
    shares_macro = macro_mask @ macro_mask.T

    follow_edges: list[tuple[str, str]] = []
    mention_edges: list[tuple[str, str, int]] = []
    retweet_edges: list[tuple[str, str, int]] = []
    for relation in RELATIONS:
        probs = np.where(
            shares_block,
            spec.intra_p[relation],
            np.where(shares_macro, spec.within_macro_p[relation], spec.cross_p[relation]),
        )
        np.fill_diagonal(probs, 0.0)
        adjacency = rng.random((n, n)) < probs
        sources, targets = np.nonzero(adjacency)
        if relation == "follow":
            follow_edges = [(account_ids[s], account_ids[t]) for s, t in zip(sources, targets)]
        else:
            lam = spec.mention_lambda if relation == "mention" else spec.retweet_lambda
            counts = 1 + rng.poisson(lam, size=len(sources))
            edges = [
                (account_ids[s], account_ids[t], int(c))
                for s, t, c in zip(sources, targets, counts)
            ]
            if relation == "mention":
                mention_edges = edges
            else:
                retweet_edges = edges

    memberships: list[tuple[str, str]] = []
    for b in range(n_blocks):
        block_accounts = [account_ids[i] for i in range(n) if membership[i, b]]
        for l in range(spec.lists_per_block):
            list_id = f"L{b:02d}_{l:02d}"
            joined = rng.random(len(block_accounts)) < spec.list_membership_p
            memberships.extend((list_id, a) for a, j in zip(block_accounts, joined) if j)

    # channels, uploads, topic labels
    channels: dict[str, ChannelRecord] = {}
    videos: dict[str, VideoRecord] = {}
    block_channels: dict[int, list[str]] = {}
    block_topics: dict[int, tuple[str, ...]] = {}
    block_videos: dict[int, list[str]] = {}
    video_counter = 0
    for b in range(n_blocks):
        block_topics[b] = tuple(f"topic{b:02d}_{t}" for t in range(spec.topics_per_block))
        block_channels[b] = [f"ch{b:02d}_{c:02d}" for c in range(spec.channels_per_block)]
        block_videos[b] = []
        for channel_id in block_channels[b]:
            channels[channel_id] = ChannelRecord(channel_id, f"channel {channel_id}")
            for _ in range(spec.videos_per_channel):
                video_id = f"{video_counter:011d}"
                video_counter += 1
                day = spec.upload_start + timedelta(days=int(rng.integers(spec.upload_days)))
                published = _utc(day, int(rng.integers(86400)))
                labels: tuple[str, ...] = ()
                if rng.random() < spec.label_probability:
                    k = int(rng.integers(1, spec.labels_per_video + 1))
                    picks = rng.choice(spec.topics_per_block, size=min(k, spec.topics_per_block), replace=False)
                    labels = tuple(block_topics[b][p] for p in sorted(picks))
                videos[video_id] = VideoRecord(video_id, channel_id, published, labels)
                block_videos[b].append(video_id)

    for event in spec.events:
        carriers = block_channels[event.block][: max(1, int(round(len(block_channels[event.block]) * event.channel_fraction)))]
        day = spec.upload_start + timedelta(days=event.day_offset)
        for v in range(event.video_count):
            video_id = f"{video_counter:011d}"
            video_counter += 1
            channel_id = carriers[v % len(carriers)]
            published = _utc(day, int(rng.integers(86400)))
            videos[video_id] = VideoRecord(video_id, channel_id, published, tuple(event.labels))

    tweets: list[TweetRecord] = []
    tweet_counter = 0
    for i, aid in enumerate(account_ids):
        n_refs = int(rng.poisson(spec.channel_refs_per_account))
        blocks = sorted(member_blocks[i])
        for _ in range(n_refs):
            b = blocks[int(rng.integers(len(blocks)))] if len(blocks) > 1 else blocks[0]
            if not block_videos[b]:
                continue
            video_id = block_videos[b][int(rng.integers(len(block_videos[b])))]
            day = spec.upload_start + timedelta(days=int(rng.integers(spec.upload_days)))
            tweets.append(
                TweetRecord(
                    account_id=aid,
                    tweet_id=f"t{tweet_counter:08d}",
                    timestamp=_utc(day, int(rng.integers(86400))),
                    text="",
                    mentioned_account_ids=(),
                    retweeted_account_id=None,
                    urls=(f"https://youtu.be/{video_id}",),
                )
            )
            tweet_counter += 1

    corpus = Corpus(
        accounts=accounts,
        follow_edges=tuple(sorted(follow_edges)),
        mention_edges=tuple(sorted(mention_edges)),
        retweet_edges=tuple(sorted(retweet_edges)),
        list_memberships=tuple(sorted(set(memberships))),
        tweets=tuple(sorted(tweets, key=lambda t: (t.tweet_id, t.account_id))),
        channels=channels,
        videos=videos,
        skip_metrics=SkipMetrics(),
    )

    planted = tuple(
        tuple(sorted(account_ids[i] for i in range(n) if membership[i, b]))
        for b in range(n_blocks)
    )
    assignment: dict[str, list[int]] = {}
    for ci, community in enumerate(planted):
        for node in community:
            assignment.setdefault(node, []).append(ci)
    cover = CommunityCover(
        communities=planted,
        assignment={k: tuple(v) for k, v in sorted(assignment.items())},
        parameters=CoverParameters(p_threshold=0.5, seed=spec.seed, coverage="complete"),
    )
    truth = GroundTruth(
        cover=cover,
        channel_preferences={b: tuple(block_channels[b]) for b in range(n_blocks)},
        topic_preferences=dict(block_topics),
    )
    return corpus, truth


def spec_to_dict(spec: SynthSpec) -> dict:
    return {
        "n_accounts": spec.n_accounts,
        "block_sizes": list(spec.block_sizes),
        "macro_groups": None if spec.macro_groups is None else [list(g) for g in spec.macro_groups],
        "overlap_fraction": spec.overlap_fraction,
        "intra_p": dict(spec.intra_p),
        "within_macro_p": dict(spec.within_macro_p),
        "cross_p": dict(spec.cross_p),
        "mention_lambda": spec.mention_lambda,
        "retweet_lambda": spec.retweet_lambda,
        "lists_per_block": spec.lists_per_block,
        "list_membership_p": spec.list_membership_p,
        "channels_per_block": spec.channels_per_block,
        "videos_per_channel": spec.videos_per_channel,
        "topics_per_block": spec.topics_per_block,
        "labels_per_video": spec.labels_per_video,
        "label_probability": spec.label_probability,
        "channel_refs_per_account": spec.channel_refs_per_account,
        "upload_start": spec.upload_start.isoformat(),
        "upload_days": spec.upload_days,
        "events": [
            {
                "block": e.block,
                "day_offset": e.day_offset,
                "video_count": e.video_count,
                "labels": list(e.labels),
                "channel_fraction": e.channel_fraction,
            }
            for e in spec.events
        ],
        "seed": spec.seed,
    }


def spec_from_dict(raw: dict) -> SynthSpec:
    """Build a spec from a JSON object; {"preset": name, "seed": s} is a shorthand."""
    if "preset" in raw:
        presets = {"four_block": four_block_spec, "syria_like": syria_like_spec}
        name = raw["preset"]
        if name not in presets:
            raise ConfigError(f"unknown synth preset {name!r}; choose from {sorted(presets)}")
        extra = set(raw) - {"preset", "seed"}
        if extra:
            raise ConfigError(f"preset specs only accept a 'seed' override, got {sorted(extra)}")
        return presets[name](seed=int(raw.get("seed", 7)))
    known = set(spec_to_dict(SynthSpec(n_accounts=1, block_sizes=(1,))))
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown synth spec keys: {sorted(unknown)}")
    if "n_accounts" not in raw or "block_sizes" not in raw:
        raise ConfigError("synth spec requires n_accounts and block_sizes")
    kwargs = dict(raw)
    kwargs["block_sizes"] = tuple(int(s) for s in raw["block_sizes"])
    if raw.get("macro_groups") is not None:
        kwargs["macro_groups"] = tuple(tuple(int(b) for b in g) for g in raw["macro_groups"])
    if "upload_start" in raw:
        kwargs["upload_start"] = date.fromisoformat(raw["upload_start"])
    if "events" in raw:
        kwargs["events"] = tuple(
            EventInjection(
                block=int(e["block"]),
                day_offset=int(e["day_offset"]),
                video_count=int(e["video_count"]),
                labels=tuple(str(l) for l in e.get("labels", [])),
                channel_fraction=float(e.get("channel_fraction", 0.75)),
            )
            for e in raw["events"]
        )
    return SynthSpec(**kwargs)


# ---------------------------------------------------------------------------
# extended NMI for overlapping covers


def _h(p: float) -> float:
    return -p * log(p) if p > 0.0 else 0.0


def _mean_conditional(groups_x: list[frozenset], groups_y: list[frozenset], n: int) -> float:
    total = 0.0
    for x in groups_x:
        px = len(x) / n
        h_x = _h(px) + _h(1.0 - px)
        best: float | None = None
        for y in groups_y:
            n11 = len(x & y)
            n10 = len(x) - n11
            n01 = len(y) - n11
            n00 = n - n11 - n10 - n01
            h11, h10, h01, h00 = (_h(c / n) for c in (n11, n10, n01, n00))
            if h11 + h00 < h01 + h10:
                continue  # anti-correlated match; ineligible
            py = len(y) / n
            conditional = (h11 + h10 + h01 + h00) - (_h(py) + _h(1.0 - py))
            if best is None or conditional < best:
                best = conditional
        term = h_x if best is None else best
        total += term / h_x if h_x > 0.0 else 0.0
    return total / len(groups_x)


def overlapping_nmi(a: CommunityCover, b: CommunityCover) -> float:
    """Extended NMI between two overlapping covers; 1 iff identical up to order."""
    universe_a = {node for community in a.communities for node in community}
    universe_b = {node for community in b.communities for node in community}
    if universe_a != universe_b:
        raise DataError(
            f"covers span different node universes ({len(universe_a)} vs {len(universe_b)} nodes)"
        )
    if not a.communities or not b.communities:
        raise DataError("both covers must contain at least one community")
    n = len(universe_a)
    groups_a = [frozenset(c) for c in a.communities]
    groups_b = [frozenset(c) for c in b.communities]
    value = 1.0 - 0.5 * (
        _mean_conditional(groups_a, groups_b, n) + _mean_conditional(groups_b, groups_a, n)
    )
    return min(1.0, max(0.0, value))


# ---------------------------------------------------------------------------
# stock fixtures


def four_block_spec(seed: int = 7) -> SynthSpec:
    """Four equal blocks of 163 accounts; the classic 652-node shape."""
    return SynthSpec(
        n_accounts=652,
        block_sizes=(163, 163, 163, 163),
        intra_p={"follow": 0.05, "mention": 0.04, "retweet": 0.03},
        within_macro_p={"follow": 0.002, "mention": 0.002, "retweet": 0.001},
        cross_p={"follow": 0.002, "mention": 0.002, "retweet": 0.001},
        seed=seed,
    )


def syria_like_spec(seed: int = 7, events: tuple[EventInjection, ...] | None = None) -> SynthSpec:
    """Default fixture: 652 accounts in 16 sub-blocks grouped into 4 macro
    categories; purely structural, no semantic claim.

    When events is None, two single-day bursts are injected: a large one on
    day 20 for block 0 and a small one on day 22 for block 1, both carrying a
    shared planted label that no other block uses.
    """
    if events is None:
        events = (
            EventInjection(block=0, day_offset=20, video_count=400, labels=("planted_event_label",)),
            EventInjection(block=1, day_offset=22, video_count=37, labels=("planted_event_label",)),
        )
    # sizes already ascending so canonicalization keeps block indices in place
    sizes = (40,) * 4 + (41,) * 12
    macro = tuple(tuple(range(g * 4, g * 4 + 4)) for g in range(4))
    return SynthSpec(
        n_accounts=652,
        block_sizes=sizes,
        macro_groups=macro,
        overlap_fraction=0.01,
        intra_p={"follow": 0.25, "mention": 0.15, "retweet": 0.1},
        within_macro_p={"follow": 0.012, "mention": 0.01, "retweet": 0.006},
        cross_p={"follow": 0.0015, "mention": 0.0015, "retweet": 0.001},
        lists_per_block=3,
        list_membership_p=0.75,
        channels_per_block=4,
        videos_per_channel=30,
        channel_refs_per_account=6.0,
        upload_days=60,
        events=events,
        seed=seed,
    )


def event_fixture_spec(seed: int = 7) -> SynthSpec:
    """Event-injection fixture: the syria-like shape without membership
    overlap, so ranked channels never leak across blocks and the planted event
    label stays contained to the two injected communities."""
    return replace(syria_like_spec(seed=seed), overlap_fraction=0.0)
