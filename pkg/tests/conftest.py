import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from viewfuse.fusion import UnifiedGraph
from viewfuse.synth import generate_multiview, syria_like_spec
from viewfuse.views import build_views
from viewfuse.fusion import build_unified_graph

GEXF_NS = "{http://www.gexf.net/1.2draft}"
GRAPHML_NS = "{http://graphml.graphdrawing.org/xmlns}"


def validate_gexf(path: Path) -> None:
    """Structural schema check: element layout, attribute declarations, and
    edge endpoint integrity (offline stand-in for XSD validation)."""
    root = ET.parse(path).getroot()
    assert root.tag == f"{GEXF_NS}gexf"
    graph = root.find(f"{GEXF_NS}graph")
    assert graph is not None and graph.get("defaultedgetype") == "directed"
    declared = {
        a.get("id")
        for attrs in graph.findall(f"{GEXF_NS}attributes")
        for a in attrs.findall(f"{GEXF_NS}attribute")
    }
    nodes = graph.find(f"{GEXF_NS}nodes").findall(f"{GEXF_NS}node")
    node_ids = {n.get("id") for n in nodes}
    assert len(node_ids) == len(nodes)
    for node in nodes:
        for value in node.iter(f"{GEXF_NS}attvalue"):
            assert value.get("for") in declared
    edges = graph.find(f"{GEXF_NS}edges").findall(f"{GEXF_NS}edge")
    edge_ids = set()
    for edge in edges:
        assert edge.get("source") in node_ids and edge.get("target") in node_ids
        edge_ids.add(edge.get("id"))
    assert len(edge_ids) == len(edges)


def validate_graphml(path: Path) -> None:
    root = ET.parse(path).getroot()
    assert root.tag == f"{GRAPHML_NS}graphml"
    keys = {k.get("id") for k in root.findall(f"{GRAPHML_NS}key")}
    graph = root.find(f"{GRAPHML_NS}graph")
    assert graph is not None and graph.get("edgedefault") == "directed"
    node_ids = set()
    for node in graph.findall(f"{GRAPHML_NS}node"):
        node_ids.add(node.get("id"))
        for data in node.findall(f"{GRAPHML_NS}data"):
            assert data.get("key") in keys
    for edge in graph.findall(f"{GRAPHML_NS}edge"):
        assert edge.get("source") in node_ids and edge.get("target") in node_ids


def write_dataset(
    root: Path,
    accounts,
    follows=(),
    mentions=(),
    retweets=(),
    lists=(),
    tweets=(),
    videos=(),
    channels=(),
    exclusions=None,
) -> Path:
    """Write a small dataset in the canonical file formats; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)

    def csv_file(name, header, rows):
        lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
        (root / name).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def jsonl_file(name, objects):
        (root / name).write_text(
            "".join(json.dumps(o, sort_keys=True) + "\n" for o in objects), encoding="utf-8"
        )

    csv_file("accounts.csv", ["account_id", "screen_name"], accounts)
    csv_file("follows.csv", ["src", "dst"], follows)
    csv_file("mentions.csv", ["src", "dst", "count"], mentions)
    csv_file("retweets.csv", ["src", "dst", "count"], retweets)
    csv_file("lists.csv", ["list_id", "account_id"], lists)
    jsonl_file("tweets.jsonl", tweets)
    jsonl_file("videos.jsonl", videos)
    jsonl_file("channels.jsonl", channels)
    manifest = {
        "accounts": "accounts.csv",
        "follows": "follows.csv",
        "mentions": "mentions.csv",
        "retweets": "retweets.csv",
        "lists": "lists.csv",
        "tweets": "tweets.jsonl",
        "videos": "videos.jsonl",
        "channels": "channels.jsonl",
    }
    if exclusions is not None:
        (root / "exclusions.txt").write_text("\n".join(exclusions) + "\n", encoding="utf-8")
        manifest["exclusions"] = "exclusions.txt"
    manifest_path = root / "dataset.json"
    manifest_path.write_text(json.dumps(manifest), encoding="utf-8")
    return manifest_path


def tweet(account_id, tweet_id, *, text="", mentioned=(), retweeted=None, urls=(),
          timestamp="2013-08-21T10:00:00Z"):
    return {
        "account_id": account_id,
        "tweet_id": tweet_id,
        "timestamp": timestamp,
        "text": text,
        "mentioned_account_ids": list(mentioned),
        "retweeted_account_id": retweeted,
        "urls": list(urls),
    }


def video(video_id, channel_id, *, published="2013-08-21T10:00:00Z", labels=()):
    return {
        "video_id": video_id,
        "channel_id": channel_id,
        "published_at": published,
        "topic_labels": list(labels),
    }


def graph_from_edges(nodes, edges, k=5) -> UnifiedGraph:
    """Directed graph with the listed edges; convenient for community tests."""
    out = {n: [] for n in nodes}
    for u, v in edges:
        out[u].append(v)
    return UnifiedGraph(
        accounts=tuple(sorted(nodes)),
        k=k,
        out_edges={a: tuple(sorted(vs)) for a, vs in out.items()},
    )


def clique_pair_graph(size: int):
    """Two size-cliques joined by a single bridge edge a0-b0."""
    a = [f"a{i}" for i in range(size)]
    b = [f"b{i}" for i in range(size)]
    edges = []
    for clique in (a, b):
        for i in range(size):
            for j in range(i + 1, size):
                edges.append((clique[i], clique[j]))
    edges.append(("a0", "b0"))
    return graph_from_edges(a + b, edges), frozenset(a), frozenset(b)


@pytest.fixture(scope="session")
def syria_fixture():
    """Shared 652-account planted fixture with its unified graph."""
    corpus, truth = generate_multiview(syria_like_spec())
    views = build_views(corpus)
    graph = build_unified_graph(corpus, views, 5)
    return corpus, truth, graph
