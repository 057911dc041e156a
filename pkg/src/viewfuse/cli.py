"""Pipeline orchestration and command-line entry points.

Subcommands: ingest, views, unify, detect, sweep, profile, timeline, run,
synth, export. A single JSON config file drives the full `run`; every design
default is overridable there. Exit codes: 0 success, 2 config error, 3 data
error, 4 internal error. The VIEWFUSE_OUTPUT_ROOT environment variable supplies
the default output root when no explicit output directory is given.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from statistics import fmean, pstdev

from . import community as community_mod
from .community import CommunityCover, detect_communities, resolution_sweep
from .errors import ConfigError, DataError, StageFailure, ViewfuseError
from .fusion import UnifiedGraph, build_unified_graph, export_graph_csv
from .ingest import Corpus, load_corpus, read_manifest, save_corpus
from .profiling import (
    account_channel_documents,
    channel_topic_document,
    community_channel_ranking,
    community_topic_ranking,
)
from .synth import generate_multiview, spec_from_dict, syria_like_spec
from .timeline import EventWindow, daily_upload_series, export_series_csv, window_topic_ranking
from .views import ALL_VIEW_KINDS, ViewKind, build_views, export_view_csv

logger = logging.getLogger("viewfuse")

OUTPUT_ROOT_ENV = "VIEWFUSE_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


@dataclass
class PipelineConfig:
    manifest: Path
    output_dir: Path
    views: tuple[ViewKind, ...] = ALL_VIEW_KINDS
    k: int = 5
    p_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    chosen_p: float = 0.8
    seeds: tuple[int, ...] = (0,)
    channel_top_n: int = 25
    topic_top_n: int = 10
    sample_cap: int = 1000
    sample_seed: int = 0
    coverage: str = "complete"
    restarts: int = community_mod.DEFAULT_RESTARTS
    jaccard_threshold: float = community_mod.DEFAULT_JACCARD
    channel_binary: bool = False
    agg_input: str = "cosine"
    strict: bool = True
    timeline_window: EventWindow | None = None  # defaults to the full upload span
    event_windows: tuple[EventWindow, ...] = ()
    export_formats: tuple[str, ...] = ("gexf", "graphml")
    export_views: bool = False

    @staticmethod
    def from_file(path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return PipelineConfig.from_dict(raw, base=path.parent)

    @staticmethod
    def from_dict(raw: dict, base: Path = Path(".")) -> "PipelineConfig":
        known = {
            "manifest", "output_dir", "views", "k", "p_values", "chosen_p", "seeds",
            "channel_top_n", "topic_top_n", "sample_cap", "sample_seed", "coverage",
            "restarts", "jaccard_threshold", "channel_binary", "agg_input", "strict",
            "timeline_window", "event_windows", "export_formats", "export_views",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "manifest" not in raw:
            raise ConfigError("config requires a 'manifest' path")
        manifest = (base / raw["manifest"]).resolve()
        output_dir = Path(raw["output_dir"]) if "output_dir" in raw else None
        if output_dir is None:
            output_dir = default_output_dir("run")
        elif not output_dir.is_absolute():
            output_dir = (base / output_dir).resolve()

        def window(obj: dict) -> EventWindow:
            try:
                return EventWindow(date.fromisoformat(obj["start"]), date.fromisoformat(obj["end"]))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"invalid window {obj!r}: {exc}") from None

        try:
            view_names = raw.get("views", [k.value for k in ALL_VIEW_KINDS])
            views = tuple(ViewKind(v) for v in view_names)
        except ValueError as exc:
            raise ConfigError(f"invalid view name: {exc}") from None

        config = PipelineConfig(
            manifest=manifest,
            output_dir=output_dir,
            views=views,
            k=int(raw.get("k", 5)),
            p_values=tuple(float(p) for p in raw.get("p_values", PipelineConfig.p_values)),
            chosen_p=float(raw.get("chosen_p", 0.8)),
            seeds=tuple(int(s) for s in raw.get("seeds", (0,))),
            channel_top_n=int(raw.get("channel_top_n", 25)),
            topic_top_n=int(raw.get("topic_top_n", 10)),
            sample_cap=int(raw.get("sample_cap", 1000)),
            sample_seed=int(raw.get("sample_seed", 0)),
            coverage=str(raw.get("coverage", "complete")),
            restarts=int(raw.get("restarts", community_mod.DEFAULT_RESTARTS)),
            jaccard_threshold=float(raw.get("jaccard_threshold", community_mod.DEFAULT_JACCARD)),
            channel_binary=bool(raw.get("channel_binary", False)),
            agg_input=str(raw.get("agg_input", "cosine")),
            strict=bool(raw.get("strict", True)),
            timeline_window=window(raw["timeline_window"]) if raw.get("timeline_window") else None,
            event_windows=tuple(window(w) for w in raw.get("event_windows", [])),
            export_formats=tuple(raw.get("export_formats", ("gexf", "graphml"))),
            export_views=bool(raw.get("export_views", False)),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if self.k <= 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not self.p_values or any(not 0.0 < p < 1.0 for p in self.p_values):
            raise ConfigError("p_values must be nonempty and lie strictly in (0, 1)")
        if not 0.0 < self.chosen_p < 1.0:
            raise ConfigError(f"chosen_p must lie strictly in (0, 1), got {self.chosen_p}")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.coverage not in ("complete", "natural"):
            raise ConfigError(f"unknown coverage mode {self.coverage!r}")
        if self.agg_input not in ("cosine", "rrank"):
            raise ConfigError(f"unknown agg_input {self.agg_input!r}")
        if not self.views:
            raise ConfigError("at least one view must be enabled")
        for fmt in self.export_formats:
            if fmt not in ("gexf", "graphml", "csv"):
                raise ConfigError(f"unknown export format {fmt!r}")

    def echo(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "output_dir": str(self.output_dir),
            "views": [v.value for v in self.views],
            "k": self.k,
            "p_values": list(self.p_values),
            "chosen_p": self.chosen_p,
            "seeds": list(self.seeds),
            "channel_top_n": self.channel_top_n,
            "topic_top_n": self.topic_top_n,
            "sample_cap": self.sample_cap,
            "sample_seed": self.sample_seed,
            "coverage": self.coverage,
            "restarts": self.restarts,
            "jaccard_threshold": self.jaccard_threshold,
            "channel_binary": self.channel_binary,
            "agg_input": self.agg_input,
            "strict": self.strict,
            "timeline_window": _window_dict(self.timeline_window),
            "event_windows": [_window_dict(w) for w in self.event_windows],
            "export_formats": list(self.export_formats),
            "export_views": self.export_views,
        }


def default_output_dir(name: str) -> Path:
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "viewfuse_out"))
    return root / name


def _window_dict(window: EventWindow | None) -> dict | None:
    if window is None:
        return None
    return {"start": window.start.isoformat(), "end": window.end.isoformat()}


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _rankings_payload(reports, id_key: str) -> list[dict]:
    payload = []
    for report in reports:
        entry = {
            "community": report.community,
            "entries": [{id_key: name, "score": score} for name, score in report.entries],
        }
        if report.annotated_fraction is not None:
            entry["annotated_fraction"] = report.annotated_fraction
        payload.append(entry)
    return payload


# ---------------------------------------------------------------------------
# graph export


def _xml_bytes(root: ET.Element) -> bytes:
    ET.indent(root)
    return ET.tostring(root, encoding="UTF-8", xml_declaration=True) + b"\n"


def _membership_attr(cover: CommunityCover, node: str) -> str:
    return ";".join(str(ci) for ci in cover.assignment.get(node, ()))


def export_graph(
    graph: UnifiedGraph,
    cover: CommunityCover,
    fmt: str,
    path: str | Path,
) -> Path:
    """Write the directed graph with community-membership node attributes.

    Multi-membership is encoded as a semicolon-delimited index list. Supported
    formats: gexf, graphml, csv (edge list only).
    """
    path = Path(path)
    if fmt == "csv":
        export_graph_csv(graph, path)
        return path
    if fmt == "gexf":
        ns = "http://www.gexf.net/1.2draft"
        ET.register_namespace("", ns)
        root = ET.Element(f"{{{ns}}}gexf", version="1.2")
        graph_el = ET.SubElement(root, f"{{{ns}}}graph", defaultedgetype="directed", mode="static")
        attrs = ET.SubElement(graph_el, f"{{{ns}}}attributes", {"class": "node"})
        ET.SubElement(attrs, f"{{{ns}}}attribute", id="0", title="communities", type="string")
        nodes_el = ET.SubElement(graph_el, f"{{{ns}}}nodes")
        for node in graph.accounts:
            node_el = ET.SubElement(nodes_el, f"{{{ns}}}node", id=node, label=node)
            values = ET.SubElement(node_el, f"{{{ns}}}attvalues")
            ET.SubElement(values, f"{{{ns}}}attvalue", attrib={"for": "0", "value": _membership_attr(cover, node)})
        edges_el = ET.SubElement(graph_el, f"{{{ns}}}edges")
        for idx, (src, dst) in enumerate(graph.edges()):
            ET.SubElement(edges_el, f"{{{ns}}}edge", id=str(idx), source=src, target=dst)
        path.write_bytes(_xml_bytes(root))
        return path
    if fmt == "graphml":
        ns = "http://graphml.graphdrawing.org/xmlns"
        ET.register_namespace("", ns)
        root = ET.Element(f"{{{ns}}}graphml")
        key = ET.SubElement(root, f"{{{ns}}}key", id="d0")
        key.set("for", "node")
        key.set("attr.name", "communities")
        key.set("attr.type", "string")
        graph_el = ET.SubElement(root, f"{{{ns}}}graph", id="G", edgedefault="directed")
        for node in graph.accounts:
            node_el = ET.SubElement(graph_el, f"{{{ns}}}node", id=node)
            data = ET.SubElement(node_el, f"{{{ns}}}data", key="d0")
            data.text = _membership_attr(cover, node)
        for src, dst in graph.edges():
            ET.SubElement(graph_el, f"{{{ns}}}edge", source=src, target=dst)
        path.write_bytes(_xml_bytes(root))
        return path
    raise ConfigError(f"unknown export format {fmt!r}")


# ---------------------------------------------------------------------------
# pipeline


class _Run:
    """Tracks artifacts written by one pipeline run for cleanup on failure."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []
        self.timings: list[dict] = []

    def path(self, name: str) -> Path:
        path = self.out_dir / name
        self.written.append(path)
        return path

    def cleanup(self) -> None:
        for path in self.written:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute ingest -> views -> fusion -> community -> profiling -> timeline.

    Writes every artifact under the configured output directory plus a
    manifest with input hashes, the config echo, per-stage timings, and the
    artifact digests. On stage failure all partial outputs are removed.
    """
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(out_dir)
    state: dict = {}

    def stage(name: str, fn) -> None:
        started = time.perf_counter()
        try:
            fn()
        except Exception as exc:
            run.cleanup()
            raise StageFailure(name, exc) from exc
        run.timings.append({"stage": name, "seconds": round(time.perf_counter() - started, 6)})
        logger.info("stage %s done in %.2fs", name, time.perf_counter() - started)

    def do_ingest() -> None:
        state["corpus"] = load_corpus(config.manifest, strict=config.strict)
        _write_json(run.path("skip_metrics.json"), state["corpus"].skip_metrics.as_dict())

    def do_views() -> None:
        state["views"] = build_views(state["corpus"], config.views, channel_binary=config.channel_binary)
        if config.export_views:
            for view in state["views"]:
                export_view_csv(view, run.path(f"view_{view.kind.value}.csv"))

    def do_fusion() -> None:
        graph = build_unified_graph(state["corpus"], state["views"], config.k, agg_input=config.agg_input)
        state["graph"] = graph
        export_graph_csv(graph, run.path("unified_graph.csv"))

    def do_community() -> None:
        report = resolution_sweep(
            state["graph"], list(config.p_values), list(config.seeds), config.coverage,
            restarts=config.restarts, jaccard_threshold=config.jaccard_threshold,
        )
        with run.path("sweep.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["p", "seed", "communities", "size_min", "size_median", "size_max", "mean_overlap"])
            for row in report.rows:
                writer.writerow([
                    f"{row.p_threshold:g}", row.seed, row.community_count,
                    row.size_min, f"{row.size_median:g}", row.size_max, f"{row.mean_overlap:.6f}",
                ])
        cover = detect_communities(
            state["graph"], config.chosen_p, config.seeds[0], config.coverage,
            restarts=config.restarts, jaccard_threshold=config.jaccard_threshold,
        )
        state["cover"] = cover
        _write_json(run.path("communities.json"), cover.to_json_dict())

    def do_profiling() -> None:
        corpus, cover = state["corpus"], state["cover"]
        documents = account_channel_documents(corpus)
        channel_rankings = community_channel_ranking(cover, documents, config.channel_top_n)
        state["channel_rankings"] = channel_rankings
        _write_json(run.path("rankings_channels.json"), _rankings_payload(channel_rankings, "id"))

        ranked_channels = sorted({c for r in channel_rankings for c, _ in r.entries})
        topic_docs = []
        fractions = {}
        for channel_id in ranked_channels:
            doc, fraction = channel_topic_document(channel_id, corpus, config.sample_cap, config.sample_seed)
            topic_docs.append(doc)
            fractions[channel_id] = fraction
        topic_rankings = community_topic_ranking(channel_rankings, topic_docs, config.topic_top_n)
        _write_json(run.path("rankings_topics.json"), _rankings_payload(topic_rankings, "label"))
        stats = {
            "ranked_channels": len(ranked_channels),
            "unique_ranked_channels": len(ranked_channels),
            "unique_topics": len(sorted({t for r in topic_rankings for t, _ in r.entries})),
            "mean_annotated_fraction": fmean(fractions.values()) if fractions else 0.0,
            "stdev_annotated_fraction": pstdev(fractions.values()) if len(fractions) > 1 else 0.0,
            "per_channel_annotated_fraction": fractions,
        }
        _write_json(run.path("topic_stats.json"), stats)

    def do_timeline() -> None:
        corpus, cover = state["corpus"], state["cover"]
        window = config.timeline_window
        if window is None:
            days = [v.published_at.date() for v in corpus.videos.values()]
            window = EventWindow(min(days), max(days)) if days else EventWindow(date(1970, 1, 1), date(1970, 1, 1))
        for ranking in state["channel_rankings"]:
            series = daily_upload_series(ranking.community, ranking, corpus, window)
            export_series_csv(series, run.path(f"timeline_{ranking.community}.csv"))
        window_payload = []
        for event_window in config.event_windows:
            for ranking in state["channel_rankings"]:
                report = window_topic_ranking(
                    ranking.community, ranking, corpus, event_window, config.topic_top_n
                )
                window_payload.append({
                    "window": _window_dict(event_window),
                    "community": report.community,
                    "entries": [{"label": label, "score": score} for label, score in report.entries],
                    "annotated_fraction": report.annotated_fraction,
                })
        _write_json(run.path("window_topics.json"), window_payload)

    def do_export() -> None:
        for fmt in config.export_formats:
            suffix = {"gexf": "gexf", "graphml": "graphml", "csv": "edges.csv"}[fmt]
            export_graph(state["graph"], state["cover"], fmt, run.path(f"unified.{suffix}"))

    stage("ingest", do_ingest)
    stage("views", do_views)
    stage("fusion", do_fusion)
    stage("community", do_community)
    stage("profiling", do_profiling)
    stage("timeline", do_timeline)
    if config.export_formats:
        stage("export", do_export)

    inputs = {
        str(path.name): _sha256(path)
        for key, path in sorted(read_manifest(config.manifest).items())
    }
    inputs[Path(config.manifest).name] = _sha256(Path(config.manifest))
    artifacts = {p.name: _sha256(p) for p in sorted(run.written)}
    for path in run.written:
        if not path.exists() or path.stat().st_size == 0:
            raise DataError(f"artifact missing or empty after run: {path}")
    manifest = {
        "inputs": inputs,
        "config": config.echo(),
        "stages": run.timings,
        "artifacts": artifacts,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------------------
# subcommands


def _load_for(args) -> Corpus:
    return load_corpus(args.manifest, strict=not args.lenient)


def _out_dir(args, name: str) -> Path:
    out = Path(args.out) if args.out else default_output_dir(name)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pipeline_graph(corpus: Corpus, args) -> UnifiedGraph:
    kinds = tuple(ViewKind(v) for v in args.views) if args.views else ALL_VIEW_KINDS
    views = build_views(corpus, kinds, channel_binary=args.channel_binary)
    return build_unified_graph(corpus, views, args.k, agg_input=args.agg_input)


def cmd_ingest(args) -> int:
    corpus = _load_for(args)
    out = _out_dir(args, "ingest")
    manifest_path = save_corpus(corpus, out)
    _write_json(out / "skip_metrics.json", corpus.skip_metrics.as_dict())
    print(f"loaded {len(corpus.accounts)} accounts, {len(corpus.tweets)} tweets, "
          f"{len(corpus.videos)} videos; canonical copy at {manifest_path}")
    return EXIT_OK


def cmd_views(args) -> int:
    corpus = _load_for(args)
    kinds = tuple(ViewKind(v) for v in args.views) if args.views else ALL_VIEW_KINDS
    views = build_views(corpus, kinds, channel_binary=args.channel_binary)
    out = _out_dir(args, "views")
    for view in views:
        export_view_csv(view, out / f"view_{view.kind.value}.csv")
        print(f"{view.kind.value}: {view.matrix.nnz} nonzeros over {view.shape[0]}x{view.shape[1]}")
    return EXIT_OK


def cmd_unify(args) -> int:
    corpus = _load_for(args)
    graph = _pipeline_graph(corpus, args)
    out = _out_dir(args, "unify")
    export_graph_csv(graph, out / "unified_graph.csv")
    print(f"unified graph: {len(graph.accounts)} nodes, {graph.edge_count} edges -> {out / 'unified_graph.csv'}")
    return EXIT_OK


def cmd_detect(args) -> int:
    corpus = _load_for(args)
    graph = _pipeline_graph(corpus, args)
    cover = detect_communities(
        graph, args.p, args.seed, args.coverage,
        restarts=args.restarts, jaccard_threshold=args.jaccard_threshold,
    )
    out = _out_dir(args, "detect")
    export_graph_csv(graph, out / "unified_graph.csv")
    _write_json(out / "communities.json", cover.to_json_dict())
    sizes = sorted((len(c) for c in cover.communities), reverse=True)
    print(f"{len(cover.communities)} communities at P={args.p:g} (sizes {sizes[:10]}...)"
          if len(sizes) > 10 else
          f"{len(cover.communities)} communities at P={args.p:g} (sizes {sizes})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    corpus = _load_for(args)
    graph = _pipeline_graph(corpus, args)
    report = resolution_sweep(
        graph, args.p_values, args.seeds, args.coverage,
        restarts=args.restarts, jaccard_threshold=args.jaccard_threshold,
    )
    out = _out_dir(args, "sweep")
    with (out / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p", "seed", "communities", "size_min", "size_median", "size_max", "mean_overlap"])
        for row in report.rows:
            writer.writerow([
                f"{row.p_threshold:g}", row.seed, row.community_count,
                row.size_min, f"{row.size_median:g}", row.size_max, f"{row.mean_overlap:.6f}",
            ])
            print(f"P={row.p_threshold:g} seed={row.seed}: {row.community_count} communities, "
                  f"median size {row.size_median:g}")
    return EXIT_OK


def cmd_profile(args) -> int:
    corpus = _load_for(args)
    graph = _pipeline_graph(corpus, args)
    cover = detect_communities(graph, args.p, args.seed, args.coverage)
    documents = account_channel_documents(corpus)
    channel_rankings = community_channel_ranking(cover, documents, args.channel_top_n)
    ranked = sorted({c for r in channel_rankings for c, _ in r.entries})
    topic_docs = [channel_topic_document(c, corpus, args.sample_cap, args.sample_seed)[0] for c in ranked]
    topic_rankings = community_topic_ranking(channel_rankings, topic_docs, args.topic_top_n)
    out = _out_dir(args, "profile")
    _write_json(out / "rankings_channels.json", _rankings_payload(channel_rankings, "id"))
    _write_json(out / "rankings_topics.json", _rankings_payload(topic_rankings, "label"))
    print(f"{len(channel_rankings)} communities profiled; {len(ranked)} unique ranked channels")
    return EXIT_OK


def cmd_timeline(args) -> int:
    corpus = _load_for(args)
    graph = _pipeline_graph(corpus, args)
    cover = detect_communities(graph, args.p, args.seed, args.coverage)
    documents = account_channel_documents(corpus)
    channel_rankings = community_channel_ranking(cover, documents, args.channel_top_n)
    window = EventWindow(date.fromisoformat(args.start), date.fromisoformat(args.end))
    out = _out_dir(args, "timeline")
    payload = []
    for ranking in channel_rankings:
        series = daily_upload_series(ranking.community, ranking, corpus, window)
        export_series_csv(series, out / f"timeline_{ranking.community}.csv")
        report = window_topic_ranking(ranking.community, ranking, corpus, window, args.topic_top_n)
        payload.append({
            "window": _window_dict(window),
            "community": report.community,
            "entries": [{"label": label, "score": score} for label, score in report.entries],
            "annotated_fraction": report.annotated_fraction,
        })
    _write_json(out / "window_topics.json", payload)
    print(f"timelines and window topics for {len(channel_rankings)} communities -> {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = PipelineConfig.from_file(args.config)
    manifest = run_pipeline(config)
    print(f"run complete: {len(manifest['artifacts'])} artifacts in {config.output_dir}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.spec:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        spec = spec_from_dict(raw)
    else:
        spec = syria_like_spec(seed=args.seed)
    corpus, truth = generate_multiview(spec)
    out = _out_dir(args, "synth")
    manifest_path = save_corpus(corpus, out)
    _write_json(out / "ground_truth.json", {
        "communities": [list(c) for c in truth.cover.communities],
        "channel_preferences": {str(b): list(v) for b, v in truth.channel_preferences.items()},
        "topic_preferences": {str(b): list(v) for b, v in truth.topic_preferences.items()},
    })
    print(f"synthetic corpus: {len(corpus.accounts)} accounts, "
          f"{len(truth.cover.communities)} planted communities -> {manifest_path}")
    return EXIT_OK


def cmd_export(args) -> int:
    run_dir = Path(args.run_dir)
    cover_path = run_dir / "communities.json"
    edges_path = run_dir / "unified_graph.csv"
    if not cover_path.exists() or not edges_path.exists():
        raise DataError(f"{run_dir} must contain communities.json and unified_graph.csv")
    raw = json.loads(cover_path.read_text(encoding="utf-8"))
    communities = tuple(tuple(c) for c in raw["communities"])
    assignment: dict[str, list[int]] = {}
    for ci, comm in enumerate(communities):
        for node in comm:
            assignment.setdefault(node, []).append(ci)
    params = raw.get("parameters", {})
    cover = CommunityCover(
        communities=communities,
        assignment={k: tuple(v) for k, v in sorted(assignment.items())},
        parameters=community_mod.CoverParameters(
            p_threshold=float(params.get("p_threshold", 0.8)),
            seed=int(params.get("seed", 0)),
            coverage=str(params.get("coverage", "complete")),
        ),
    )
    nodes = sorted(set(assignment))
    edge_nodes = set()
    out_edges: dict[str, list[str]] = {}
    with edges_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if row:
                out_edges.setdefault(row[0], []).append(row[1])
                edge_nodes.update(row)
    accounts = tuple(sorted(set(nodes) | edge_nodes))
    k = max((len(v) for v in out_edges.values()), default=0)
    graph = UnifiedGraph(accounts=accounts, k=max(k, 1), out_edges={a: tuple(out_edges.get(a, ())) for a in accounts})
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    suffix = {"gexf": "gexf", "graphml": "graphml", "csv": "edges.csv"}[args.format]
    target = export_graph(graph, cover, args.format, out / f"unified.{suffix}")
    print(f"exported {args.format} -> {target}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser, *, graph: bool = False, detect: bool = False) -> None:
    parser.add_argument("--manifest", required=True, help="dataset manifest (JSON)")
    parser.add_argument("--out", "-o", default=None, help="output directory")
    parser.add_argument("--lenient", action="store_true", help="quarantine dangling references instead of failing")
    if graph:
        parser.add_argument("--views", nargs="*", default=None, choices=[k.value for k in ALL_VIEW_KINDS])
        parser.add_argument("--k", type=int, default=5)
        parser.add_argument("--channel-binary", action="store_true", dest="channel_binary")
        parser.add_argument("--agg-input", default="cosine", choices=["cosine", "rrank"], dest="agg_input")
    if detect:
        parser.add_argument("--p", type=float, default=0.8, help="significance acceptance threshold")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--coverage", default="complete", choices=["complete", "natural"])
        parser.add_argument("--restarts", type=int, default=community_mod.DEFAULT_RESTARTS)
        parser.add_argument("--jaccard-threshold", type=float, default=community_mod.DEFAULT_JACCARD,
                            dest="jaccard_threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viewfuse", description=__doc__)
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, validate, and canonically re-save a dataset")
    _add_common(p)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("views", help="build and export the profile matrices")
    _add_common(p, graph=True)
    p.set_defaults(fn=cmd_views)

    p = sub.add_parser("unify", help="build the unified k-NN graph")
    _add_common(p, graph=True)
    p.set_defaults(fn=cmd_unify)

    p = sub.add_parser("detect", help="detect overlapping communities")
    _add_common(p, graph=True, detect=True)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("sweep", help="sweep the resolution threshold")
    _add_common(p, graph=True, detect=True)
    p.add_argument("--p-values", nargs="+", type=float,
                   default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], dest="p_values")
    p.add_argument("--seeds", nargs="+", type=int, default=[0])
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("profile", help="channel and topic rankings per community")
    _add_common(p, graph=True, detect=True)
    p.add_argument("--channel-top-n", type=int, default=25, dest="channel_top_n")
    p.add_argument("--topic-top-n", type=int, default=10, dest="topic_top_n")
    p.add_argument("--sample-cap", type=int, default=1000, dest="sample_cap")
    p.add_argument("--sample-seed", type=int, default=0, dest="sample_seed")
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("timeline", help="daily upload series and window topics")
    _add_common(p, graph=True, detect=True)
    p.add_argument("--start", required=True, help="window start (YYYY-MM-DD)")
    p.add_argument("--end", required=True, help="window end, inclusive (YYYY-MM-DD)")
    p.add_argument("--channel-top-n", type=int, default=25, dest="channel_top_n")
    p.add_argument("--topic-top-n", type=int, default=10, dest="topic_top_n")
    p.set_defaults(fn=cmd_timeline)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", "-c", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", default=None, help="synth spec JSON (defaults to the syria-like preset)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("export", help="export a run's graph+cover to GEXF/GraphML/CSV")
    p.add_argument("--run-dir", required=True, dest="run_dir")
    p.add_argument("--format", required=True, choices=["gexf", "graphml", "csv"])
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(fn=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, ConfigError):
            return EXIT_CONFIG
        if isinstance(cause, DataError):
            return EXIT_DATA
        return EXIT_INTERNAL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ViewfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
