#!/usr/bin/env python3
"""End-to-end demo on the default synthetic fixture.

Generates the 652-account multi-view corpus with 16 planted sub-blocks and two
injected upload bursts, writes it in the dataset formats, runs the full
pipeline, and prints a digest: recovery quality against the planted cover, the
resolution sweep, top channels per community, and the event-window topics.
"""

import argparse
import json
from datetime import timedelta
from pathlib import Path

from viewfuse.cli import PipelineConfig, run_pipeline
from viewfuse.community import detect_communities
from viewfuse.fusion import build_unified_graph
from viewfuse.ingest import save_corpus
from viewfuse.synth import generate_multiview, overlapping_nmi, syria_like_spec
from viewfuse.views import build_views


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("viewfuse_out/demo"))
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--p", type=float, default=0.8)
    args = parser.parse_args()

    spec = syria_like_spec(seed=args.seed)
    corpus, truth = generate_multiview(spec)
    data_dir = args.out / "data"
    manifest_path = save_corpus(corpus, data_dir)
    print(f"dataset: {len(corpus.accounts)} accounts, {len(corpus.tweets)} tweets, "
          f"{len(corpus.videos)} videos -> {data_dir}")

    event_start = spec.upload_start + timedelta(days=20)
    config = PipelineConfig.from_dict({
        "manifest": str(manifest_path),
        "output_dir": str(args.out / "run"),
        "chosen_p": args.p,
        "event_windows": [{
            "start": event_start.isoformat(),
            "end": (event_start + timedelta(days=8)).isoformat(),
        }],
    })
    manifest = run_pipeline(config)
    print(f"pipeline wrote {len(manifest['artifacts'])} artifacts to {config.output_dir}")
    for stage in manifest["stages"]:
        print(f"  {stage['stage']:<10} {stage['seconds']:.2f}s")

    graph = build_unified_graph(corpus, build_views(corpus), config.k)
    cover = detect_communities(graph, args.p, config.seeds[0])
    nmi = overlapping_nmi(cover, truth.cover)
    print(f"\nrecovery vs planted cover at P={args.p:g}: "
          f"{len(cover.communities)} communities, extended NMI {nmi:.3f}")

    rankings = json.loads((config.output_dir / "rankings_channels.json").read_text())
    print("\ntop channels per community (first 5 communities):")
    for report in rankings[:5]:
        top = ", ".join(e["id"] for e in report["entries"][:4])
        print(f"  community {report['community']}: {top}")

    window_topics = json.loads((config.output_dir / "window_topics.json").read_text())
    print("\nevent-window topics (communities with a #1 entry):")
    for report in window_topics:
        if report["entries"]:
            lead = report["entries"][0]
            print(f"  community {report['community']}: {lead['label']} "
                  f"(annotated {report['annotated_fraction']:.0%})")


if __name__ == "__main__":
    main()
