from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml

from bizsynth.cli import main
from bizsynth.config import config_from_dict, load_config
from bizsynth.dataset import read_jsonl, read_samples
from bizsynth.demo import demo_config, scripted_providers
from bizsynth.errors import ConfigError, DbUnavailable, InsufficientLevel, IoError
from bizsynth.pipeline import Pipeline


def _small(pack: Path, out: Path, **sections) -> Pipeline:
    raw = demo_config()
    raw["model_logic"] = {"num_personas": 4, "scenarios_per_persona": 3, "instances": 4}
    raw["synthesize"] = {"queries_per_level": 1}
    raw["bench"]["per_level"] = 2
    raw["bench"]["candidates"] = ["candidate_a"]
    for k, v in sections.items():
        raw[k] = v
    config = config_from_dict(raw, pack, out_dir=out)
    return Pipeline(config, providers=scripted_providers())


def _calls(pipe: Pipeline) -> int:
    return sum(len(p.calls) for p in pipe._providers.values())


def test_demo_logic_counts(demo_run):
    manifest = json.loads((demo_run / "manifest.json").read_text())
    c = manifest["counts"]
    assert (c["personas"], c["scenarios"], c["instances"]) == (20, 100, 20)
    assert c["dropped"] + c["samples"] == c["drafts"]
    assert set(manifest["stages"].values()) == {"done"}
    assert len(json.loads((demo_run / "logic" / "instances.json").read_text())) == 20


def test_demo_outputs(demo_run):
    bench = json.loads((demo_run / "bench_report.json").read_text())
    assert [r["model_name"] for r in bench["results"]] == ["demo-candidate_a", "demo-candidate_b"]
    for r in bench["results"]:
        assert sum(r["per_level_counts"].values()) == 100
    summary = (demo_run / "summary.txt").read_text()
    assert "execution accuracy" in summary and "complexity diversity" in summary


def test_resume_skips_and_force_reruns(demo_pack, tmp_path):
    pipe = _small(demo_pack, tmp_path / "out")
    pipe.run_all()
    first = _calls(pipe)
    snapshot = {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.json*")}

    again = _small(demo_pack, tmp_path / "out")
    again.run_all()
    assert _calls(again) == 0
    assert {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.json*")} == snapshot

    forced = _small(demo_pack, tmp_path / "out")
    forced.run_all(force=True)
    assert _calls(forced) == first
    assert {p.name: p.read_bytes() for p in (tmp_path / "out").glob("*.json*")} == snapshot


def test_corrupt_output_reruns_stage(demo_pack, tmp_path):
    out = tmp_path / "out"
    _small(demo_pack, out).run_all()
    (out / "dataset.jsonl").write_text("{broken\n")
    pipe = _small(demo_pack, out)
    pipe.synthesize()
    assert _calls(pipe) > 0
    assert read_samples(out / "dataset.jsonl")
    assert pipe.manifest.stages["judge"] == "pending"


def test_missing_provider_fails_before_calls(demo_pack, tmp_path):
    raw = demo_config()
    del raw["providers"]["judge"]
    with pytest.raises(ConfigError):
        config_from_dict(raw, demo_pack)


def test_db_unreachable(demo_pack, tmp_path):
    pipe = _small(demo_pack, tmp_path / "out", database={"path": "missing.db"})
    pipe.model_logic()
    before = _calls(pipe)
    with pytest.raises(DbUnavailable):
        pipe.synthesize()
    assert _calls(pipe) == before
    assert pipe.manifest.stages["synthesize"] == "failed"


def test_empty_subset_skips_instance(demo_pack, tmp_path):
    pipe = _small(demo_pack, tmp_path / "out", synthesize={"queries_per_level": 1, "relevance_threshold": 3, "max_tables": 30})
    pipe.model_logic()
    # cap every relevance score at 2 so nothing clears the threshold
    providers = pipe._providers
    original = providers["generator"].respond

    def no_threes(req):
        text = original(req)
        return text.replace('"score": 3', '"score": 2') if "rate the relevance" in req.user_prompt + req.system_prompt else text

    providers["generator"].respond = no_threes
    samples = pipe.synthesize()
    assert samples == []
    assert any("no table scored >= 3" in n for n in pipe.manifest.notes)


def test_judge_without_dataset(demo_pack, tmp_path):
    pipe = _small(demo_pack, tmp_path / "out")
    with pytest.raises(IoError):
        pipe.judge(tmp_path / "nope.jsonl")


def test_bench_insufficient_level(demo_pack, tmp_path):
    raw_bench = {"candidates": ["candidate_a"], "per_level": 50, "verified_only": True}
    pipe = _small(demo_pack, tmp_path / "out", bench=raw_bench)
    pipe.model_logic(), pipe.synthesize(), pipe.judge()
    with pytest.raises(InsufficientLevel):
        pipe.bench()


def test_review_blocks_rejected(demo_pack, tmp_path):
    pipe = _small(demo_pack, tmp_path / "out")
    instances = pipe.model_logic()
    rejected = instances[0].id
    pipe.review(reject=[rejected])
    samples = pipe.synthesize()
    assert rejected not in {s.instance_id for s in samples}
    assert any(rejected in n for n in pipe.manifest.notes)


# --- CLI -------------------------------------------------------------------------------------


def test_cli_all_and_exit_codes(pack_copy, capsys):
    cfg = pack_copy / "config.yaml"
    assert main(["all", "--config", str(cfg), "--workers", "2"]) == 0
    out = capsys.readouterr().out
    assert "execution accuracy" in out
    assert len(read_jsonl(pack_copy / "out" / "dataset.jsonl")) == 240
    assert main(["report", "--config", str(cfg)]) == 0
    assert main(["review", "--config", str(cfg)]) == 0
    assert main(["synthesize", "--config", str(pack_copy / "absent.yaml")]) == 2

    broken = yaml.safe_load(cfg.read_text())
    broken["database"]["path"] = "gone.db"
    bad = pack_copy / "bad.yaml"
    bad.write_text(yaml.safe_dump(broken))
    assert main(["synthesize", "--config", str(bad), "--out-dir", str(pack_copy / "out2"), "--force"]) == 1


def test_cli_stage_by_stage_matches_all(pack_copy, demo_run):
    cfg = str(pack_copy / "config.yaml")
    for cmd in ("model-logic", "synthesize", "judge", "bench"):
        assert main([cmd, "--config", cfg, "--out-dir", str(pack_copy / "staged")]) == 0
    for name in ("dataset.jsonl", "judge_reports.jsonl", "bench_report.json", "quality_report.json"):
        assert (pack_copy / "staged" / name).read_bytes() == (demo_run / name).read_bytes()


def test_cli_demo(tmp_path, capsys):
    assert main(["demo", "--out", str(tmp_path / "pack")]) == 0
    assert "bizsynth all --config" in capsys.readouterr().out
    assert load_config(tmp_path / "pack" / "config.yaml").bench.candidates == ("candidate_a", "candidate_b")
