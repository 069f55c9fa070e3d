from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bizsynth.dataset import (
    DatasetSample,
    Provenance,
    RunManifest,
    read_samples,
    sample_balanced,
    write_samples,
)
from bizsynth.domain import ALL_LEVELS, ComplexityLevel
from bizsynth.errors import InsufficientLevel, IoError, ParseError


def _samples(n_per_level: int) -> list[DatasetSample]:
    out = []
    for lvl in ALL_LEVELS:
        for k in range(n_per_level):
            out.append(DatasetSample(f"{lvl.value}-{k:03d}", "inst", "P", "S", lvl, "intent", f"SELECT {k}", f"Question {k}?",
                                     ("p1", "p2"), "d" * 64, Provenance("gen", "2026-01-01T00:00:00Z", k % 3)))
    return out


def test_write_240_lines(tmp_path):
    samples = _samples(60)
    path = tmp_path / "d.jsonl"
    assert write_samples(path, samples) == 240
    assert len(path.read_text(encoding="utf-8").splitlines()) == 240
    assert read_samples(path) == samples


def test_empty_file(tmp_path):
    path = tmp_path / "e.jsonl"
    assert write_samples(path, []) == 0
    assert path.read_text() == ""
    assert read_samples(path) == []


def test_unwritable(tmp_path):
    with pytest.raises(IoError):
        write_samples(tmp_path / "missing" / "d.jsonl", _samples(1))


def test_malformed_line_three(tmp_path):
    path = tmp_path / "d.jsonl"
    write_samples(path, _samples(1))
    lines = path.read_text().splitlines()
    lines[2] = "{oops"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        read_samples(path)
    assert err.value.line == 3


def test_missing_sql_field(tmp_path):
    path = tmp_path / "d.jsonl"
    row = _samples(1)[0].to_dict()
    del row["sql"]
    path.write_text(json.dumps(row) + "\n")
    with pytest.raises(ParseError) as err:
        read_samples(path)
    assert err.value.field == "sql" and err.value.line == 1


def test_duplicate_ids(tmp_path):
    s = _samples(1)
    with pytest.raises(ValueError):
        write_samples(tmp_path / "d.jsonl", [s[0], s[0]])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.text(min_size=1).filter(lambda t: t.strip()), min_size=1, max_size=6, unique=True))
def test_round_trip_property(tmp_path_factory, questions):
    path = tmp_path_factory.mktemp("rt") / "d.jsonl"
    samples = [DatasetSample(f"id{i}", "inst", "P", "S", ALL_LEVELS[i % 4], "i", "SELECT 1", q) for i, q in enumerate(questions)]
    write_samples(path, samples)
    assert read_samples(path) == samples


def test_sample_balanced():
    pool = _samples(60)
    picked = sample_balanced(pool, 25, seed=7)
    assert len(picked) == 100
    assert all(sum(s.complexity is lvl for s in picked) == 25 for lvl in ALL_LEVELS)
    assert sample_balanced(list(reversed(pool)), 25, seed=7) == picked
    assert sample_balanced(pool, 0, seed=7) == []
    short = [s for s in pool if s.complexity is not ComplexityLevel.DERIVED_METRIC] + _samples(2)[4:6]
    with pytest.raises(InsufficientLevel):
        sample_balanced(short, 5, seed=1)


def test_manifest_round_trip(tmp_path):
    m = RunManifest("run-1", {"seed": 7})
    m.stages["synthesize"] = "done"
    m.counts.update(drafts=10, dropped=3, samples=7)
    m.notes.append("synthesize: skipped instance x")
    m.save(tmp_path / "manifest.json")
    assert RunManifest.load(tmp_path / "manifest.json") == m


def test_manifest_rejects_unbalanced_counts(tmp_path):
    m = RunManifest("run-1")
    m.stages["synthesize"] = "done"
    m.counts.update(drafts=10, dropped=3, samples=6)
    with pytest.raises(ValueError):
        m.save(tmp_path / "manifest.json")
