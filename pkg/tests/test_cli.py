import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from viewfuse.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    OUTPUT_ROOT_ENV,
    PipelineConfig,
    export_graph,
    main,
    run_pipeline,
)
from viewfuse.community import CommunityCover, CoverParameters
from viewfuse.errors import ConfigError, StageFailure
from viewfuse.fusion import UnifiedGraph
from viewfuse.ingest import save_corpus
from viewfuse.synth import SynthSpec, generate_multiview

from conftest import GEXF_NS, GRAPHML_NS, validate_gexf, validate_graphml


def small_dataset(tmp_path) -> Path:
    spec = SynthSpec(
        n_accounts=40,
        block_sizes=(20, 20),
        intra_p={"follow": 0.3, "mention": 0.2, "retweet": 0.15},
        within_macro_p={"follow": 0.01, "mention": 0.01, "retweet": 0.01},
        cross_p={"follow": 0.01, "mention": 0.01, "retweet": 0.01},
        videos_per_channel=8,
        seed=5,
    )
    corpus, _ = generate_multiview(spec)
    return save_corpus(corpus, tmp_path / "data")


def config_for(tmp_path, manifest, **overrides) -> Path:
    raw = {
        "manifest": str(manifest),
        "output_dir": str(tmp_path / "out"),
        "p_values": [0.5, 0.8],
        "seeds": [0],
    }
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


# -- config --------------------------------------------------------------------


def test_defaults_match_contract(tmp_path):
    manifest = small_dataset(tmp_path)
    config = PipelineConfig.from_dict({"manifest": str(manifest), "output_dir": str(tmp_path / "o")})
    assert config.k == 5
    assert config.p_values == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    assert config.chosen_p == 0.8
    assert config.channel_top_n == 25
    assert config.topic_top_n == 10
    assert config.sample_cap == 1000
    assert len(config.views) == 8


def test_unknown_config_key_rejected(tmp_path):
    manifest = small_dataset(tmp_path)
    with pytest.raises(ConfigError, match="unknown config keys"):
        PipelineConfig.from_dict({"manifest": str(manifest), "bogus": 1})


def test_zero_k_fails_before_any_work(tmp_path):
    manifest = small_dataset(tmp_path)
    path = config_for(tmp_path, manifest, k=0)
    with pytest.raises(ConfigError, match="k must be positive"):
        PipelineConfig.from_file(path)
    assert not (tmp_path / "out").exists()


def test_bad_view_name_rejected(tmp_path):
    manifest = small_dataset(tmp_path)
    with pytest.raises(ConfigError, match="view"):
        PipelineConfig.from_dict({
            "manifest": str(manifest), "output_dir": "o", "views": ["follows", "likes"],
        })


# -- run -----------------------------------------------------------------------


def test_run_pipeline_artifacts(tmp_path):
    manifest_path = small_dataset(tmp_path)
    config = PipelineConfig.from_file(config_for(tmp_path, manifest_path))
    manifest = run_pipeline(config)
    out = config.output_dir
    for name in ("skip_metrics.json", "unified_graph.csv", "sweep.csv", "communities.json",
                 "rankings_channels.json", "rankings_topics.json", "topic_stats.json",
                 "window_topics.json", "manifest.json", "unified.gexf", "unified.graphml"):
        assert (out / name).exists(), name
        assert (out / name).stat().st_size > 0
    assert set(manifest["artifacts"]) >= {"communities.json", "sweep.csv"}
    assert [s["stage"] for s in manifest["stages"]] == [
        "ingest", "views", "fusion", "community", "profiling", "timeline", "export",
    ]
    sweep_lines = (out / "sweep.csv").read_text().splitlines()
    assert len(sweep_lines) == 1 + 2  # header + one row per (P, seed)


def test_stage_failure_removes_partial_outputs(tmp_path):
    manifest_path = small_dataset(tmp_path)
    (tmp_path / "data" / "follows.csv").write_text("src,dst\na0000,missing\n", encoding="utf-8")
    config = PipelineConfig.from_file(config_for(tmp_path, manifest_path))
    with pytest.raises(StageFailure, match="ingest"):
        run_pipeline(config)
    leftovers = [p for p in config.output_dir.glob("*") if p.is_file()]
    assert leftovers == []


def test_default_sweep_has_nine_rows(tmp_path):
    manifest_path = small_dataset(tmp_path)
    config = PipelineConfig.from_dict({
        "manifest": str(manifest_path), "output_dir": str(tmp_path / "out"),
    })
    run_pipeline(config)
    rows = (config.output_dir / "sweep.csv").read_text().splitlines()
    assert len(rows) == 1 + 9  # header plus the default P grid


def test_manifest_input_hashes_track_changes(tmp_path):
    manifest_path = small_dataset(tmp_path)
    config = PipelineConfig.from_file(config_for(tmp_path, manifest_path))
    first = run_pipeline(config)
    accounts = tmp_path / "data" / "accounts.csv"
    accounts.write_text(accounts.read_text() + "zz99,extra\n", encoding="utf-8")
    second = run_pipeline(config)
    assert first["inputs"]["accounts.csv"] != second["inputs"]["accounts.csv"]


# -- export --------------------------------------------------------------------


def three_node_graph():
    return UnifiedGraph(
        accounts=("n1", "n2", "n3"),
        k=2,
        out_edges={"n1": ("n2",), "n2": ("n3",), "n3": ()},
    )


def cover_with(assignments: dict[str, tuple[int, ...]], count: int) -> CommunityCover:
    communities = [[] for _ in range(count)]
    for node, indices in assignments.items():
        for ci in indices:
            communities[ci].append(node)
    return CommunityCover(
        communities=tuple(tuple(sorted(c)) for c in communities),
        assignment=dict(sorted(assignments.items())),
        parameters=CoverParameters(0.8, 0, "complete"),
    )


def test_graphml_single_community(tmp_path):
    cover = cover_with({"n1": (0,), "n2": (0,), "n3": (0,)}, 1)
    path = export_graph(three_node_graph(), cover, "graphml", tmp_path / "g.graphml")
    validate_graphml(path)
    root = ET.parse(path).getroot()
    values = [d.text for d in root.iter(f"{GRAPHML_NS}data")]
    assert values == ["0", "0", "0"]


def test_multi_membership_encoding(tmp_path):
    cover = cover_with({"n1": (1, 3), "n2": (0,), "n3": (2,)}, 4)
    path = export_graph(three_node_graph(), cover, "gexf", tmp_path / "g.gexf")
    validate_gexf(path)
    root = ET.parse(path).getroot()
    first = next(root.iter(f"{GEXF_NS}attvalue"))
    assert first.get("value") == "1;3"


def test_unknown_format_rejected(tmp_path):
    cover = cover_with({"n1": (0,), "n2": (0,), "n3": (0,)}, 1)
    with pytest.raises(ConfigError):
        export_graph(three_node_graph(), cover, "dot", tmp_path / "g.dot")


# -- entry point ---------------------------------------------------------------


def test_exit_code_config_error(tmp_path):
    manifest = small_dataset(tmp_path)
    path = config_for(tmp_path, manifest, k=0)
    assert main(["run", "--config", str(path)]) == EXIT_CONFIG


def test_exit_code_data_error(tmp_path):
    missing = tmp_path / "nowhere.json"
    assert main(["ingest", "--manifest", str(missing), "-o", str(tmp_path / "o")]) == EXIT_DATA


def test_stage_failure_exit_code(tmp_path):
    manifest_path = small_dataset(tmp_path)
    (tmp_path / "data" / "follows.csv").write_text("src,dst\na0000,missing\n", encoding="utf-8")
    path = config_for(tmp_path, manifest_path)
    assert main(["run", "--config", str(path)]) == EXIT_DATA


def test_env_var_output_root(tmp_path, monkeypatch, capsys):
    manifest = small_dataset(tmp_path)
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    assert main(["unify", "--manifest", str(manifest)]) == 0
    assert (tmp_path / "root" / "unify" / "unified_graph.csv").exists()


def test_cli_synth_then_detect(tmp_path):
    out = tmp_path / "synth"
    spec = {
        "n_accounts": 30, "block_sizes": [10, 10, 10], "videos_per_channel": 5,
        "seed": 2,
        "intra_p": {"follow": 0.4, "mention": 0.3, "retweet": 0.2},
        "within_macro_p": {"follow": 0.01, "mention": 0.01, "retweet": 0.01},
        "cross_p": {"follow": 0.01, "mention": 0.01, "retweet": 0.01},
    }
    spec_path = tmp_path / "synth.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    assert main(["synth", "--spec", str(spec_path), "-o", str(out)]) == 0
    detect_dir = tmp_path / "detect"
    assert main([
        "detect", "--manifest", str(out / "dataset.json"), "-o", str(detect_dir), "--p", "0.8",
    ]) == 0
    cover = json.loads((detect_dir / "communities.json").read_text())
    assert len(cover["communities"]) == 3
    assert main(["export", "--run-dir", str(detect_dir), "--format", "graphml"]) == 0
    validate_graphml(detect_dir / "unified.graphml")
