"""Stage orchestration: model-logic, synthesize, judge, bench and report.

Every stage reads its inputs from and writes its outputs to ``config.out_dir``, records
counts and a completion flag in ``manifest.json``, and is skipped on rerun when its
outputs are present and parse, unless ``force`` is set.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence, TypeVar

from .bench import (
    BENCH_ROW_LIMIT,
    BenchResult,
    PredictionRecord,
    has_top_level_order_by,
    render_bench_table,
    result_digest,
    run_react,
    run_single_shot,
    score_run,
)
from .config import RunConfig
from .dataset import (
    DatasetSample,
    Provenance,
    STAGES,
    RunManifest,
    read_json,
    read_jsonl,
    read_samples,
    sample_balanced,
    write_json,
    write_jsonl,
    write_samples,
)
from .domain import BusinessLogicInstance, ComplexityLevel, Kpi, Persona, WorkflowTask, WorkScenario
from .errors import BizSynthError, ConfigError, EmptySubset, GenerationFailed, IoError
from .executor import SqliteExecutor
from .forge import Dropped, RefinePolicy, classify_complexity, generate_drafts, referenced_tables, refine_until_executable
from .judge import PERFECT, JudgeReport, judge, quality_report, render_quality_table, verify_sample
from .llm import GENERATION_TEMPERATURE, JUDGE_TEMPERATURE, Asker, Provider, make_provider
from .logic import assemble_instances, generate_personas, generate_scenarios, generate_workflow, stable_id
from .prompts import load_templates
from .questions import sql_to_question
from .schema import SchemaSubset, TableSummary, introspect, score_tables, select_subset, tables_block

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

MANIFEST = "manifest.json"
LOGIC_DIR = "logic"
PERSONAS = "logic/personas.json"
SCENARIOS = "logic/scenarios.json"
WORKFLOWS = "logic/workflows.json"
INSTANCES = "logic/instances.json"
CATALOG = "catalog.json"
SUBSETS = "subsets.json"
DATASET = "dataset.jsonl"
DROPPED = "dropped.jsonl"
JUDGE_REPORTS = "judge_reports.jsonl"
QUALITY_REPORT = "quality_report.json"
QUALITY_SUMMARY = "quality_summary.txt"
BENCH_REPORT = "bench_report.json"
BENCH_SUMMARY = "bench_summary.txt"
SUMMARY = "summary.txt"

STAGE_OUTPUTS = {
    "model_logic": (PERSONAS, SCENARIOS, WORKFLOWS, INSTANCES),
    "synthesize": (CATALOG, SUBSETS, DATASET, DROPPED),
    "judge": (JUDGE_REPORTS, QUALITY_REPORT, QUALITY_SUMMARY),
    "bench": (BENCH_REPORT, BENCH_SUMMARY),
}


def split_evenly(total: int, parts: int) -> list[int]:
    base, rem = divmod(total, parts)
    return [base + (1 if k < rem else 0) for k in range(parts)]


@dataclass
class _InstanceResult:
    subset: SchemaSubset | None = None
    samples: list[DatasetSample] = field(default_factory=list)
    dropped: list[dict[str, Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    drafts: int = 0


class Pipeline:
    """Runs stages for one :class:`RunConfig`.

    ``providers`` overrides configured providers by name (tests and the demo
    recorder inject scripted ones this way).
    """

    def __init__(self, config: RunConfig, providers: Mapping[str, Provider] | None = None):
        self.config = config
        self.out = Path(config.out_dir)
        self._providers: dict[str, Provider] = dict(providers or {})
        self._templates: dict[str, str] | None = None
        self.run_id = stable_id("run", config.seed, json.dumps(config.raw, sort_keys=True, default=str))
        self.manifest = self._load_manifest()

    # --- plumbing -----------------------------------------------------------------

    @property
    def templates(self) -> dict[str, str]:
        if self._templates is None:
            self._templates = load_templates(self.config.templates_dir)
        return self._templates

    def path(self, rel: str) -> Path:
        return self.out / rel

    def provider(self, name: str) -> Provider:
        if name not in self._providers:
            if name not in self.config.providers:
                raise ConfigError(f"unknown provider {name!r}")
            self._providers[name] = make_provider(self.config.providers[name])
        return self._providers[name]

    def asker(self, name: str, attempts: int, *, judging: bool = False) -> Asker:
        cfg = self.config.providers[name]
        default = JUDGE_TEMPERATURE if judging else GENERATION_TEMPERATURE
        return Asker(
            self.provider(name),
            temperature=default if cfg.temperature is None else cfg.temperature,
            max_output_tokens=cfg.max_output_tokens,
            attempts=attempts,
            seed=cfg.seed,
        )

    def executor(self) -> SqliteExecutor:
        return SqliteExecutor(self.config.database_path)

    def _map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        if self.config.workers <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            return list(pool.map(fn, items))

    def _load_manifest(self) -> RunManifest:
        path = self.path(MANIFEST)
        if path.exists():
            try:
                manifest = RunManifest.load(path)
                if manifest.run_id == self.run_id:
                    return manifest
            except (BizSynthError, KeyError, ValueError):
                pass
        return RunManifest(self.run_id, dict(self.config.raw))

    def save_manifest(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest.save(self.path(MANIFEST))

    def _note(self, stage: str, text: str) -> None:
        logger.warning("%s: %s", stage, text)
        self.manifest.notes.append(f"{stage}: {text}")

    def _begin(self, stage: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest.notes = [n for n in self.manifest.notes if not n.startswith(f"{stage}: ")]
        self.manifest.stages[stage] = "running"

    def _fresh(self, stage: str, force: bool, check: Callable[[], Any]) -> bool:
        if force or self.manifest.stages.get(stage) != "done":
            return False
        if not all(self.path(p).exists() for p in STAGE_OUTPUTS[stage]):
            return False
        try:
            check()
        except (BizSynthError, KeyError, ValueError, TypeError):
            return False
        logger.info("%s: outputs present, skipping (use --force to rerun)", stage)
        return True

    def _run(self, stage: str, body: Callable[[], R]) -> R:
        self._begin(stage)
        try:
            result = body()
        except BaseException:
            self.manifest.stages[stage] = "failed"
            self.save_manifest()
            raise
        # Worker threads may note things in any order; keep the manifest byte-stable.
        mine = sorted(n for n in self.manifest.notes if n.startswith(f"{stage}: "))
        self.manifest.notes = [n for n in self.manifest.notes if not n.startswith(f"{stage}: ")] + mine
        self.manifest.stages[stage] = "done"
        # Fresh upstream outputs invalidate everything downstream.
        for later in STAGES[STAGES.index(stage) + 1 :]:
            self.manifest.stages[later] = "pending"
        self.save_manifest()
        return result

    # --- artifact loading ---------------------------------------------------------

    def load_instances(self) -> list[BusinessLogicInstance]:
        path = self.path(INSTANCES)
        if not path.exists():
            raise IoError(f"{path} not found; run model-logic first")
        return [BusinessLogicInstance.from_dict(d) for d in read_json(path)]

    def save_instances(self, instances: Sequence[BusinessLogicInstance]) -> None:
        write_json(self.path(INSTANCES), [i.to_dict() for i in instances])

    def load_catalog(self) -> list[TableSummary]:
        path = self.path(CATALOG)
        if path.exists():
            return [TableSummary.from_dict(t) for t in read_json(path)]
        return introspect(self.executor())

    def load_subsets(self) -> dict[str, SchemaSubset]:
        path = self.path(SUBSETS)
        if not path.exists():
            return {}
        return {s["instance_id"]: SchemaSubset.from_dict(s) for s in read_json(path)}

    def load_reports(self) -> list[JudgeReport]:
        path = self.path(JUDGE_REPORTS)
        if not path.exists():
            raise IoError(f"{path} not found; run judge first or set bench.verified_only to false")
        return [JudgeReport.from_dict(r) for r in read_jsonl(path)]

    # --- model-logic ----------------------------------------------------------------

    def model_logic(self, force: bool = False) -> list[BusinessLogicInstance]:
        if self._fresh("model_logic", force, self.load_instances):
            return self.load_instances()
        return self._run("model_logic", self._model_logic)

    def _model_logic(self) -> list[BusinessLogicInstance]:
        cfg, params = self.config, self.config.logic
        spec = cfg.domain
        asker = self.asker(params.provider, params.content_attempts)
        self.path(LOGIC_DIR).mkdir(parents=True, exist_ok=True)
        for rel in STAGE_OUTPUTS["model_logic"]:
            self.path(rel).unlink(missing_ok=True)

        quotas = split_evenly(params.num_personas, len(spec.functional_areas))
        jobs = [(area, n) for area, n in zip(spec.functional_areas, quotas) if n > 0]
        batches = self._map(lambda job: generate_personas(spec, job[0], job[1], asker, templates=self.templates), jobs)
        personas: list[Persona] = [p for batch in batches for p in batch]
        write_json(self.path(PERSONAS), [p.to_dict() for p in personas])
        self.manifest.counts["personas"] = len(personas)

        def scenarios_for(persona: Persona) -> list[WorkScenario]:
            try:
                found = generate_scenarios(persona, spec, asker, templates=self.templates)
            except GenerationFailed as exc:
                self._note("model_logic", f"no scenarios for persona {persona.name!r}: {exc}")
                return []
            return found[: params.scenarios_per_persona]

        scenarios = dict(enumerate(self._map(scenarios_for, personas)))
        write_json(
            self.path(SCENARIOS),
            [{"persona": personas[i].name, "scenarios": [s.to_dict() for s in scenarios[i]]} for i in range(len(personas))],
        )
        self.manifest.counts["scenarios"] = sum(len(v) for v in scenarios.values())

        pairs = [(i, j) for i in range(len(personas)) for j in range(len(scenarios[i]))]

        def workflow_for(pair: tuple[int, int]) -> tuple[list[WorkflowTask], list[Kpi]] | None:
            i, j = pair
            try:
                return generate_workflow(personas[i], scenarios[i][j], spec, asker, templates=self.templates)
            except GenerationFailed as exc:
                self._note("model_logic", f"no workflow for {personas[i].name!r} / {scenarios[i][j].name!r}: {exc}")
                return None

        workflows = dict(zip(pairs, self._map(workflow_for, pairs)))
        write_json(
            self.path(WORKFLOWS),
            [
                {
                    "persona_index": i,
                    "scenario_index": j,
                    "tasks": [t.to_dict() for t in wf[0]],
                    "kpis": [k.to_dict() for k in wf[1]],
                }
                for (i, j), wf in workflows.items()
                if wf is not None
            ],
        )

        # Scenarios without a workflow cannot seed an instance.
        usable: dict[int, list[WorkScenario]] = {}
        usable_wf: dict[tuple[int, int], tuple[list[WorkflowTask], list[Kpi]]] = {}
        for i in range(len(personas)):
            usable[i] = []
            for j, scenario in enumerate(scenarios[i]):
                wf = workflows[(i, j)]
                if wf is not None:
                    usable_wf[(i, len(usable[i]))] = wf
                    usable[i].append(scenario)
        instances = assemble_instances(personas, usable, usable_wf, params.instances, seed=cfg.seed)
        if len(instances) < params.instances:
            self._note("model_logic", f"only {len(instances)} of {params.instances} instances could be assembled")
        self.save_instances(instances)
        self.manifest.counts["instances"] = len(instances)
        return instances

    # --- synthesize -------------------------------------------------------------------

    def synthesize(self, force: bool = False) -> list[DatasetSample]:
        if self._fresh("synthesize", force, lambda: read_samples(self.path(DATASET))):
            return read_samples(self.path(DATASET))
        return self._run("synthesize", self._synthesize)

    def _synthesize(self) -> list[DatasetSample]:
        instances = self.load_instances()
        db = self.executor()
        catalog = introspect(db)
        if not catalog:
            raise BizSynthError(f"database {self.config.database_path} has no tables")
        write_json(self.path(CATALOG), [t.to_dict() for t in catalog])

        approved = [i for i in instances if i.approved]
        for inst in instances:
            if not inst.approved:
                self._note("synthesize", f"instance {inst.id} not approved, skipped")
        params = self.config.synthesize
        asker = self.asker(params.provider, params.content_attempts)
        created_at = self.config.created_at()

        results = self._map(lambda inst: self._synthesize_instance(inst, catalog, db, asker, created_at), approved)

        samples = [s for r in results for s in r.samples]
        dropped = [d for r in results for d in r.dropped]
        for r in results:
            for note in r.notes:
                self._note("synthesize", note)
        write_json(self.path(SUBSETS), [r.subset.to_dict() for r in results if r.subset is not None])
        write_samples(self.path(DATASET), samples)
        write_jsonl(self.path(DROPPED), dropped)
        self.manifest.counts.update(drafts=sum(r.drafts for r in results), dropped=len(dropped), samples=len(samples))
        return samples

    def _synthesize_instance(
        self,
        inst: BusinessLogicInstance,
        catalog: Sequence[TableSummary],
        db: SqliteExecutor,
        asker: Asker,
        created_at: str,
    ) -> _InstanceResult:
        cfg, params = self.config, self.config.synthesize
        out = _InstanceResult()
        try:
            relevance = score_tables(inst, catalog, asker, params.batch_size, spec=cfg.domain, templates=self.templates)
            subset = select_subset(inst.id, catalog, relevance, params.relevance_threshold, params.max_tables)
        except (GenerationFailed, EmptySubset) as exc:
            out.notes.append(f"instance {inst.id} skipped: {exc}")
            return out
        out.subset = subset

        for level in params.levels:
            try:
                drafts = generate_drafts(
                    inst, subset, level, params.queries_per_level, asker,
                    spec=cfg.domain, templates=self.templates, db_engine_name=cfg.db_engine_name, id_prefix=str(cfg.seed),
                )
            except GenerationFailed as exc:
                out.notes.append(f"instance {inst.id} level {level.value}: no drafts: {exc}")
                continue
            for draft in drafts:
                out.drafts += 1
                policy = RefinePolicy(
                    max_attempts=params.max_repair_attempts,
                    empty_result_is_failure=params.empty_result_is_failure,
                    row_limit=params.row_limit,
                    timeout=params.timeout,
                    db_engine_name=cfg.db_engine_name,
                )
                refined = refine_until_executable(
                    draft, inst, subset, db, asker, params.max_repair_attempts,
                    spec=cfg.domain, templates=self.templates, policy=policy,
                )
                if isinstance(refined, Dropped):
                    out.dropped.append({"stage": "refinement", **refined.to_dict()})
                    continue
                try:
                    q = sql_to_question(
                        refined, inst, subset, asker, spec=cfg.domain, templates=self.templates, db_engine_name=cfg.db_engine_name
                    )
                except GenerationFailed as exc:
                    out.dropped.append({"stage": "question", "draft": refined.to_dict(), "final_error": str(exc)})
                    continue
                gold = db.execute(refined.sql, row_limit=BENCH_ROW_LIMIT, timeout=params.timeout)
                digest = result_digest(gold.rows or (), has_top_level_order_by(refined.sql)) if gold.ok else None
                out.samples.append(
                    DatasetSample(
                        id=refined.id,
                        instance_id=inst.id,
                        persona_name=inst.persona.name,
                        scenario_name=inst.scenario.name,
                        complexity=refined.complexity,
                        intent=refined.intent,
                        sql=refined.sql,
                        question=q.question,
                        paraphrases=q.paraphrases,
                        gold_result_digest=digest,
                        provenance=Provenance(asker.provider.model_name, created_at, len(refined.repair_history)),
                    )
                )
        return out

    # --- judge ---------------------------------------------------------------------------

    def _dataset_path(self, dataset_path: str | Path | None) -> Path:
        return Path(dataset_path) if dataset_path is not None else self.path(DATASET)

    def judge(self, dataset_path: str | Path | None = None, force: bool = False) -> dict[str, Any]:
        default = dataset_path is None or Path(dataset_path) == self.path(DATASET)
        if default and self._fresh("judge", force, lambda: read_json(self.path(QUALITY_REPORT))["overall"]):
            return read_json(self.path(QUALITY_REPORT))
        return self._run("judge", lambda: self._judge(self._dataset_path(dataset_path)))

    def _judge(self, dataset: Path) -> dict[str, Any]:
        cfg, params = self.config, self.config.judge
        samples = read_samples(dataset)
        instances = {i.id: i for i in self.load_instances()} if self.path(INSTANCES).exists() else {}
        subsets = self.load_subsets()
        catalog_text = tables_block(self.load_catalog()) if not subsets else None
        asker = self.asker(params.provider, params.content_attempts, judging=True)

        def schema_for(sample: DatasetSample) -> str | None:
            subset = subsets.get(sample.instance_id)
            return tables_block(subset.tables) if subset is not None else catalog_text

        def run(job: tuple[DatasetSample, Any]) -> JudgeReport | None:
            sample, dim = job
            try:
                return judge(
                    sample, dim, instances.get(sample.instance_id), schema_for(sample), asker,
                    domain_name=cfg.domain.domain_name, templates=self.templates,
                    db_engine_name=cfg.db_engine_name, passes=params.passes,
                )
            except (GenerationFailed, ValueError) as exc:
                self._note("judge", f"sample {sample.id} {dim.value}: {exc}")
                return None

        jobs = [(s, d) for s in samples for d in params.dimensions]
        reports = [r for r in self._map(run, jobs) if r is not None]

        classified: dict[str, ComplexityLevel] | None = None
        if params.classify_complexity:
            def label(sample: DatasetSample) -> tuple[str, ComplexityLevel | None]:
                try:
                    return sample.id, classify_complexity(sample.question, sample.sql, asker, templates=self.templates)
                except GenerationFailed as exc:
                    self._note("judge", f"sample {sample.id} classification: {exc}")
                    return sample.id, None

            classified = {k: v for k, v in self._map(label, samples) if v is not None}

        report = quality_report(samples, reports, params.dimensions, classified)
        write_jsonl(self.path(JUDGE_REPORTS), (r.to_dict() for r in reports))
        write_json(self.path(QUALITY_REPORT), report)
        self.path(QUALITY_SUMMARY).write_text(render_quality_table(report), encoding="utf-8")
        covered = {(r.sample_id, r.dimension) for r in reports}
        self.manifest.counts["judged"] = sum(all((s.id, d) in covered for d in params.dimensions) for s in samples)
        return report

    # --- bench ------------------------------------------------------------------------------

    def bench(self, dataset_path: str | Path | None = None, force: bool = False) -> dict[str, Any]:
        default = dataset_path is None or Path(dataset_path) == self.path(DATASET)
        if default and self._fresh("bench", force, lambda: read_json(self.path(BENCH_REPORT))["results"]):
            return read_json(self.path(BENCH_REPORT))
        if not self.config.bench.candidates:
            raise ConfigError("bench.candidates is empty")
        return self._run("bench", lambda: self._bench(self._dataset_path(dataset_path)))

    def select_bench_samples(self, samples: Sequence[DatasetSample]) -> list[DatasetSample]:
        params = self.config.bench
        pool = list(samples)
        if params.verified_only:
            reports = self.load_reports()
            judged = {r.sample_id for r in reports}
            pool = [s for s in pool if s.id in judged and verify_sample(s, reports) == PERFECT]
        if params.per_level is not None:
            return sample_balanced(pool, params.per_level, self.config.seed)
        return sorted(pool, key=lambda s: s.id)

    def _bench(self, dataset: Path) -> dict[str, Any]:
        cfg, params = self.config, self.config.bench
        selected = self.select_bench_samples(read_samples(dataset))
        catalog = self.load_catalog()
        used = set().union(*(referenced_tables(s.sql) for s in selected)) if selected else set()
        tables = [t for t in catalog if t.table_name.lower() in used]
        schema_text = tables_block(tables)
        db = self.executor()

        results: list[BenchResult] = []
        entries = []
        for name in params.candidates:
            asker = self.asker(name, 1, judging=True)

            def predict(sample: DatasetSample) -> PredictionRecord:
                try:
                    if params.mode == "react":
                        return run_react(
                            sample, schema_text, asker, db, params.max_steps,
                            templates=self.templates, db_engine_name=cfg.db_engine_name,
                        )
                    return run_single_shot(
                        sample, schema_text, asker.provider, templates=self.templates,
                        db_engine_name=cfg.db_engine_name, temperature=asker.temperature,
                    )
                except GenerationFailed as exc:
                    return PredictionRecord(sample.id, "", error=str(exc))

            predictions = self._map(predict, selected)
            result = score_run(predictions, selected, db, model_name=asker.provider.model_name)
            results.append(result)
            entries.append({"provider": name, **result.to_dict(), "predictions": [_prediction_dict(p) for p in predictions]})

        report = {
            "mode": params.mode,
            "per_level": params.per_level,
            "verified_only": params.verified_only,
            "selected_sample_ids": [s.id for s in selected],
            "schema_tables": [t.table_name for t in tables],
            "results": entries,
        }
        write_json(self.path(BENCH_REPORT), report)
        self.path(BENCH_SUMMARY).write_text(render_bench_table(results), encoding="utf-8")
        return report

    # --- review / report -------------------------------------------------------------------

    def review(self, approve: Iterable[str] = (), reject: Iterable[str] = ()) -> list[BusinessLogicInstance]:
        """Set the approval flag on logic instances before synthesis."""
        approve, reject = set(approve), set(reject)
        instances = self.load_instances()
        unknown = (approve | reject) - {i.id for i in instances}
        if unknown:
            raise BizSynthError(f"unknown instance ids {sorted(unknown)}")
        updated = [
            replace(i, approved=True) if i.id in approve else replace(i, approved=False) if i.id in reject else i
            for i in instances
        ]
        self.save_instances(updated)
        if approve or reject:
            self.manifest.stages["synthesize"] = "pending"
            self.save_manifest()
        return updated

    def report(self) -> str:
        m = self.manifest
        lines = [f"run {m.run_id}", ""]
        lines.append("stages: " + ", ".join(f"{k}={v}" for k, v in m.stages.items()))
        lines.append("counts: " + ", ".join(f"{k}={v}" for k, v in m.counts.items()))
        if self.path(QUALITY_REPORT).exists():
            lines += ["", "data quality", render_quality_table(read_json(self.path(QUALITY_REPORT))).rstrip("\n")]
        if self.path(BENCH_SUMMARY).exists():
            lines += ["", "execution accuracy (%)", self.path(BENCH_SUMMARY).read_text(encoding="utf-8").rstrip("\n")]
        if m.notes:
            lines += ["", f"notes ({len(m.notes)}):"] + [f"  - {n}" for n in m.notes]
        text = "\n".join(lines) + "\n"
        self.out.mkdir(parents=True, exist_ok=True)
        self.path(SUMMARY).write_text(text, encoding="utf-8")
        return text

    def run_all(self, force: bool = False) -> str:
        self.model_logic(force)
        self.synthesize(force)
        self.judge(force=force)
        if self.config.bench.candidates:
            self.bench(force=force)
        return self.report()


def _prediction_dict(p: PredictionRecord) -> dict[str, Any]:
    data = p.to_dict()
    if p.outcome is not None:
        data["outcome"] = {
            "status": p.outcome.status,
            "error_message": p.outcome.error_message,
            "row_count": len(p.outcome.rows or ()),
        }
    return data
