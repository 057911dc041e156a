from math import log

import pytest
from hypothesis import given, settings, strategies as st

from viewfuse.community import CommunityCover, CoverParameters
from viewfuse.errors import ConfigError, DataError
from viewfuse.ingest import load_corpus, save_corpus
from viewfuse.synth import (
    EventInjection,
    SynthSpec,
    four_block_spec,
    generate_multiview,
    overlapping_nmi,
    spec_from_dict,
    spec_to_dict,
    syria_like_spec,
)


def small_spec(**overrides):
    kwargs = dict(
        n_accounts=30,
        block_sizes=(10, 10, 10),
        videos_per_channel=5,
        seed=1,
    )
    kwargs.update(overrides)
    return SynthSpec(**kwargs)


def cover_of(*communities):
    assignment = {}
    for ci, community in enumerate(communities):
        for node in community:
            assignment.setdefault(node, []).append(ci)
    return CommunityCover(
        communities=tuple(tuple(sorted(c)) for c in communities),
        assignment={k: tuple(v) for k, v in sorted(assignment.items())},
        parameters=CoverParameters(0.5, 0, "complete"),
    )


# -- generator -----------------------------------------------------------------


def test_same_seed_identical_corpus(tmp_path):
    a, _ = generate_multiview(small_spec())
    b, _ = generate_multiview(small_spec())
    save_corpus(a, tmp_path / "a")
    save_corpus(b, tmp_path / "b")
    for name in ("accounts.csv", "follows.csv", "mentions.csv", "retweets.csv",
                 "lists.csv", "tweets.jsonl", "videos.jsonl", "channels.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seed_differs(tmp_path):
    a, _ = generate_multiview(small_spec(seed=1))
    b, _ = generate_multiview(small_spec(seed=2))
    assert a.follow_edges != b.follow_edges


def test_single_block_ground_truth():
    corpus, truth = generate_multiview(small_spec(n_accounts=10, block_sizes=(10,)))
    assert len(truth.cover.communities) == 1
    assert set(truth.cover.communities[0]) == set(corpus.accounts)


def test_infeasible_specs_name_the_constraint():
    with pytest.raises(ConfigError, match="block sizes"):
        small_spec(block_sizes=(10, 10)).validate()
    with pytest.raises(ConfigError, match="intra_p"):
        small_spec(intra_p={"follow": 1.5, "mention": 0.1, "retweet": 0.1}).validate()
    with pytest.raises(ConfigError, match="macro_groups"):
        small_spec(macro_groups=((0, 1),)).validate()
    with pytest.raises(ConfigError, match="day_offset"):
        small_spec(events=(EventInjection(0, 99, 5, ("x",)),)).validate()


def test_overlap_fraction_creates_second_memberships():
    corpus, truth = generate_multiview(small_spec(overlap_fraction=0.2, seed=3))
    multi = truth.cover.multi_members()
    assert len(multi) == 6  # round(30 * 0.2)
    total = sum(len(c) for c in truth.cover.communities)
    assert total == 30 + 6


def test_block_relabel_seeded_equality(tmp_path):
    # listing the blocks in a different order must not change the corpus
    a, _ = generate_multiview(small_spec(block_sizes=(8, 10, 12), seed=4))
    b, _ = generate_multiview(small_spec(block_sizes=(12, 8, 10), seed=4))
    save_corpus(a, tmp_path / "a")
    save_corpus(b, tmp_path / "b")
    for name in ("follows.csv", "mentions.csv", "lists.csv", "videos.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generated_corpus_loads_through_ingest(tmp_path):
    corpus, _ = generate_multiview(small_spec())
    manifest = save_corpus(corpus, tmp_path / "data")
    loaded = load_corpus(manifest)
    assert set(loaded.accounts) == set(corpus.accounts)
    assert loaded.follow_edges == corpus.follow_edges
    assert len(loaded.videos) == len(corpus.videos)


def test_event_injection_adds_labeled_uploads():
    spec = small_spec(events=(EventInjection(0, 3, 25, ("burst",)),))
    corpus, truth = generate_multiview(spec)
    burst = [v for v in corpus.videos.values() if "burst" in v.topic_labels]
    assert len(burst) == 25
    carriers = {v.channel_id for v in burst}
    assert carriers <= set(truth.channel_preferences[0])


def test_spec_round_trip_through_dict():
    spec = syria_like_spec(seed=3)
    again = spec_from_dict(spec_to_dict(spec))
    assert spec_to_dict(again) == spec_to_dict(spec)
    preset = spec_from_dict({"preset": "four_block", "seed": 2})
    assert preset.n_accounts == four_block_spec(seed=2).n_accounts
    with pytest.raises(ConfigError):
        spec_from_dict({"preset": "nope"})
    with pytest.raises(ConfigError):
        spec_from_dict({"n_accounts": 10})


# -- extended NMI ----------------------------------------------------------------


def oracle_nmi(groups_a, groups_b, n):
    """Direct evaluation of the extended-NMI definition, written independently
    of the library implementation."""

    def h(p):
        return -p * log(p) if p > 0 else 0.0

    def entropy(group):
        p = len(group) / n
        return h(p) + h(1 - p)

    def conditional(x, y):
        n11 = len(x & y)
        n10, n01 = len(x) - n11, len(y) - n11
        n00 = n - n11 - n10 - n01
        parts = [h(c / n) for c in (n11, n10, n01, n00)]
        if parts[0] + parts[3] < parts[1] + parts[2]:
            return None
        return sum(parts) - entropy(y)

    def side(groups_x, groups_y):
        acc = 0.0
        for x in groups_x:
            options = [c for y in groups_y if (c := conditional(x, y)) is not None]
            hx = entropy(x)
            best = min(options) if options else hx
            acc += best / hx if hx > 0 else 0.0
        return acc / len(groups_x)

    return 1 - 0.5 * (side(groups_a, groups_b) + side(groups_b, groups_a))


def test_identical_covers_score_one():
    cover = cover_of({"a", "b"}, {"c", "d"})
    assert overlapping_nmi(cover, cover) == pytest.approx(1.0)


def test_permuted_community_list_scores_one():
    a = cover_of({"a", "b"}, {"c", "d"})
    b = cover_of({"c", "d"}, {"a", "b"})
    assert overlapping_nmi(a, b) == pytest.approx(1.0)


def test_singletons_vs_single_community_matches_oracle():
    nodes = [f"n{i}" for i in range(6)]
    singles = cover_of(*[{n} for n in nodes])
    one = cover_of(set(nodes))
    expected = oracle_nmi(
        [frozenset({n}) for n in nodes], [frozenset(nodes)], 6
    )
    assert overlapping_nmi(singles, one) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.5)


def test_worked_example_pinned_value():
    a = cover_of({"0", "1", "2"}, {"3", "4", "5"})
    b = cover_of({"0", "1"}, {"2", "3", "4", "5"})
    assert overlapping_nmi(a, b) == pytest.approx(0.47957395851362217, abs=1e-12)


def test_mismatched_universes_rejected():
    a = cover_of({"a", "b"})
    b = cover_of({"a", "c"})
    with pytest.raises(DataError):
        overlapping_nmi(a, b)


cover_strategy = st.lists(
    st.sets(st.sampled_from("abcdefgh"), min_size=1, max_size=8),
    min_size=1,
    max_size=4,
)


@settings(max_examples=100, deadline=None)
@given(cover_strategy, cover_strategy)
def test_nmi_symmetry_and_range(groups_a, groups_b):
    universe = set("abcdefgh")
    groups_a = groups_a + [universe - set().union(*groups_a)] if universe - set().union(*groups_a) else groups_a
    groups_b = groups_b + [universe - set().union(*groups_b)] if universe - set().union(*groups_b) else groups_b
    a = cover_of(*groups_a)
    b = cover_of(*groups_b)
    ab = overlapping_nmi(a, b)
    ba = overlapping_nmi(b, a)
    assert abs(ab - ba) < 1e-12
    assert 0.0 <= ab <= 1.0
    assert overlapping_nmi(a, b) == pytest.approx(
        oracle_nmi([frozenset(g) for g in groups_a], [frozenset(g) for g in groups_b], 8),
        abs=1e-12,
    )
