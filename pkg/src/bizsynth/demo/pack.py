"""Write a self-contained retail demo: database, recorded fixtures and a config."""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path
from typing import Any

import yaml

from ..config import config_from_dict
from ..domain import parse_level
from ..llm import RecordingProvider, ScriptedProvider
from .author import AREAS, DemoAuthor, DemoCandidate
from .retail import build_database

DB_FILE = "retail.db"
CONFIG_FILE = "config.yaml"
# 2026-01-01T00:00:00Z; keeps created_at stable so reruns are byte-identical.
DEMO_EPOCH = 1767225600

CANDIDATES: dict[str, dict[str, int]] = {
    "candidate_a": {"single_metric": 92, "comparative_metric": 80, "derived_metric": 66, "compositional_task": 48},
    "candidate_b": {"single_metric": 85, "comparative_metric": 64, "derived_metric": 50, "compositional_task": 30},
}


def demo_config(db_path: str = DB_FILE, fixtures: str = "fixtures") -> dict[str, Any]:
    """The demo's run configuration as plain data (paths relative to the config file)."""
    providers: dict[str, Any] = {
        name: {"kind": "mock_fixture", "model_name": f"demo-{name}", "fixture_directory": f"{fixtures}/{name}"}
        for name in ("generator", "judge", *CANDIDATES)
    }
    return {
        "domain": {
            "domain_name": "Omnichannel Retail",
            "functional_areas": [{"name": n, "description": d} for n, d in AREAS.items()],
        },
        "providers": providers,
        "database": {"path": db_path, "engine_name": "SQLite"},
        "out_dir": "out",
        "seed": 7,
        "workers": 4,
        "source_date_epoch": DEMO_EPOCH,
        "model_logic": {"num_personas": 20, "scenarios_per_persona": 5, "instances": 20},
        "synthesize": {"queries_per_level": 3},
        "judge": {"passes": 1, "classify_complexity": True},
        "bench": {"candidates": list(CANDIDATES), "mode": "react", "max_steps": 10, "per_level": 25, "verified_only": True},
    }


def scripted_providers() -> dict[str, ScriptedProvider]:
    author = DemoAuthor()
    out = {
        "generator": ScriptedProvider(author, name="generator", model_name="demo-generator"),
        "judge": ScriptedProvider(author, name="judge", model_name="demo-judge"),
    }
    for name, skill in CANDIDATES.items():
        cand = DemoCandidate(name, {parse_level(k): v for k, v in skill.items()})
        out[name] = ScriptedProvider(cand, name=name, model_name=f"demo-{name}")
    return out


def build_demo_pack(out: str | Path) -> Path:
    """Create ``out/`` with the database, one fixture directory per provider and ``config.yaml``.

    The fixtures are recorded by running the full pipeline once against the
    scripted author, so ``bizsynth all --config out/config.yaml`` replays offline.
    """
    from ..pipeline import Pipeline

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    build_database(out / DB_FILE)
    raw = demo_config()
    fixtures = out / "fixtures"
    if fixtures.exists():
        shutil.rmtree(fixtures)

    recorders = {name: RecordingProvider(p, fixtures / name) for name, p in scripted_providers().items()}
    with tempfile.TemporaryDirectory() as scratch:
        config = config_from_dict(raw, out, out_dir=scratch)
        Pipeline(config, providers=recorders).run_all()
    for rec in recorders.values():
        rec.save_index()

    path = out / CONFIG_FILE
    path.write_text(yaml.safe_dump(raw, sort_keys=False), encoding="utf-8")
    return path
