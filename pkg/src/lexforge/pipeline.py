"""End-to-end pipeline runner driven by one declarative JSON config.

Stages run in a fixed order (filter, score, enhance, mix, pack, schedule,
hipo); each enabled stage reads the previous stage's output and writes its
artifacts under the configured output directory. With a mock endpoint and a
fixed seed, the whole run is byte-deterministic apart from wall-clock time
in the report.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import curriculum, filtering, hipo, mixing, packing, scoring
from .client import EndpointConfig, Transport, http_transport, ChatRequest, complete
from .corpus import (CorpusManifest, Document, ManifestEntry, ReadReport,
                     read_documents, write_documents)
from .enhancement import (ALL_DIMENSIONS, KnowledgeDimension,
                          build_synthesis_prompt, parse_synthesis_output,
                          validate_dimension_coverage)
from .mocks import MockGeneratorTransport, MockJudgeTransport, MockSynthesisTransport

STAGE_ORDER = ("filter", "score", "enhance", "mix", "pack", "schedule", "hipo")

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_STAGE_FAILURE = 2
EXIT_ACCEPTANCE_FAILURE = 3


class ConfigError(Exception):
    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if message else path)


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage}: {message}")


def validate_config(config: dict) -> list[ConfigError]:
    """Static structural and range checks; returns all problems found."""
    errors: list[ConfigError] = []

    def need(cond: bool, path: str, msg: str):
        if not cond:
            errors.append(ConfigError(path, msg))

    need(isinstance(config.get("seed", 0), int), "seed", "must be an integer")
    need(bool(config.get("input")), "input", "input path required")
    need(bool(config.get("output_dir")), "output_dir", "output directory required")

    toggles = config.get("stages_enabled", {})
    for stage in STAGE_ORDER:
        section = config.get(stage)
        on = toggles.get(stage, section.get("enabled", False) if section else False)
        if not on:
            continue
        if section is None:
            errors.append(ConfigError(stage, "enabled stage has no config section"))
            continue
        if stage == "filter":
            mn = section.get("min_chars", 32)
            mx = section.get("max_chars", 131072)
            need(0 < mn < mx, "filter.min_chars", "require 0 < min_chars < max_chars")
            r = section.get("max_special_ratio", 0.3)
            need(0.0 <= r <= 1.0, "filter.max_special_ratio", "must be in [0, 1]")
        elif stage == "score":
            need("endpoint" in section, "score.endpoint", "endpoint required")
            tau = section.get("tau", 3)
            need(isinstance(tau, int) and 0 <= tau <= 6, "score.tau",
                 "must be an integer in [0, 6]")
        elif stage == "enhance":
            need("endpoint" in section, "enhance.endpoint", "endpoint required")
            need("statutes" in section, "enhance.statutes", "statutes path required")
        elif stage == "mix":
            need(isinstance(section.get("budgets"), dict) and section.get("budgets"),
                 "mix.budgets", "non-empty budgets map required")
        elif stage == "pack":
            w = section.get("window", 8192)
            step = section.get("tokens_per_step", packing.TOKENS_PER_STEP)
            need(w > 0 and step % w == 0, "pack.window",
                 f"window must divide tokens_per_step {step}")
        elif stage == "schedule":
            lam = section.get("mixing_lambda", 0.2)
            need(0.0 <= lam <= 1.0, "schedule.mixing_lambda", "must be in [0, 1]")
            need(section.get("batch_size", 32) >= 1, "schedule.batch_size", "must be >= 1")
        elif stage == "hipo":
            need(section.get("beta", 0.1) > 0, "hipo.beta", "must be positive")
            need(section.get("nll_lambda", 0.1) >= 0, "hipo.nll_lambda",
                 "must be non-negative")
            need(0.0 <= section.get("tau", 0.8) <= 1.0, "hipo.tau", "must be in [0, 1]")
            need("endpoint" in section, "hipo.endpoint", "endpoint required")
            need("queries" in section, "hipo.queries", "queries path required")
    return errors


def config_hash(config: dict) -> str:
    """Digest of the canonical config, ignoring where artifacts are written
    so identical runs into different directories report the same hash."""
    stable = {k: v for k, v in config.items() if k != "output_dir"}
    canonical = json.dumps(stable, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _make_transport(endpoint: str, seed: int) -> tuple[Transport, EndpointConfig]:
    cfg = EndpointConfig(base_url=endpoint)
    if endpoint == "mock:judge":
        return MockJudgeTransport(salt=str(seed)), cfg
    if endpoint == "mock:synthesis":
        return MockSynthesisTransport(), cfg
    if endpoint == "mock:generator":
        return MockGeneratorTransport(salt=str(seed)), cfg
    return http_transport(cfg), cfg


@dataclass
class RunReport:
    config_hash: str
    seed: int
    stages: dict[str, Any] = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "seed": self.seed,
                "stages": self.stages, "wall_clock_s": self.wall_clock_s}


def _read_docs_file(path: Path) -> tuple[list[Document], ReadReport]:
    report = ReadReport()
    with path.open("r", encoding="utf-8") as fh:
        docs = list(read_documents(fh, report=report))
    return docs, report


def _write_docs_file(docs, path: Path) -> int:
    with path.open("w", encoding="utf-8") as fh:
        return write_documents(docs, fh)


def run_pipeline(config: dict) -> RunReport:
    """Execute enabled stages in order; raises ConfigError or StageError."""
    errors = validate_config(config)
    if errors:
        raise errors[0]
    started = time.monotonic()
    seed = config.get("seed", 0)
    report = RunReport(config_hash=config_hash(config), seed=seed)
    out_dir = Path(config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    docs: Optional[list[Document]] = None

    def current_docs() -> list[Document]:
        nonlocal docs
        if docs is None:
            docs, read_report = _read_docs_file(Path(config["input"]))
            report.stages["input"] = {"n_documents": len(docs),
                                      "n_parse_errors": len(read_report.errors)}
        return docs

    toggles = config.get("stages_enabled", {})

    def enabled(stage: str) -> bool:
        section = config.get(stage, {})
        return bool(toggles.get(stage, section.get("enabled", False)))

    try:
        if enabled("filter"):
            section = config["filter"]
            rules = filtering.FilterRuleSet(
                min_chars=section.get("min_chars", 32),
                max_chars=section.get("max_chars", 131072),
                max_special_ratio=section.get("max_special_ratio", 0.3))
            stats = filtering.FilterStats()
            docs = list(filtering.filter_corpus(current_docs(), rules, stats))
            _write_docs_file(docs, out_dir / "filtered.jsonl")
            report.stages["filter"] = stats.to_dict()

        if enabled("score"):
            section = config["score"]
            transport, ecfg = _make_transport(section["endpoint"], seed)
            scored = scoring.score_corpus(
                current_docs(), ecfg, transport,
                sample_n=section.get("sample_n"), seed=seed,
                model=section.get("model", "default"))
            n_errors = sum(1 for s in scored if not s.ok)
            tau = section.get("tau", 3)
            docs = list(scoring.threshold_filter(
                (s.doc for s in scored if s.ok), tau))
            _write_docs_file(docs, out_dir / "scored_kept.jsonl")
            report.stages["score"] = {
                "n_scored": sum(1 for s in scored if s.ok),
                "n_errors": n_errors, "tau": tau,
                "n_kept": len(docs),
            }

        if enabled("enhance"):
            section = config["enhance"]
            transport, ecfg = _make_transport(section["endpoint"], seed)
            dims = (list(ALL_DIMENSIONS) if section.get("dims", "all") == "all"
                    else [KnowledgeDimension(d) for d in section["dims"]])
            statutes = json.loads(Path(section["statutes"]).read_text("utf-8"))
            all_pairs = []
            gaps = 0
            for st in statutes:
                prompt = build_synthesis_prompt(st["id"], st["text"], dims)
                result = complete(ChatRequest.user(prompt), ecfg, transport)
                pairs = parse_synthesis_output(result.content, dims, st["id"])
                coverage = validate_dimension_coverage(pairs, dims)
                gaps += len(coverage.missing)
                all_pairs.extend(pairs)
            with (out_dir / "synthesized.jsonl").open("w", encoding="utf-8") as fh:
                for p in all_pairs:
                    fh.write(json.dumps({
                        "statute_id": p.statute_id, "dimension": p.dimension.value,
                        "instruction": p.instruction, "output": p.output,
                    }, ensure_ascii=False) + "\n")
            report.stages["enhance"] = {"n_pairs": len(all_pairs),
                                        "n_missing_dimensions": gaps}

        if enabled("mix"):
            section = config["mix"]
            pool = current_docs()
            by_key: dict[tuple[str, str], list[Document]] = {}
            for d in pool:
                by_key.setdefault((d.lang, d.source), []).append(d)
            budget_keys = {tuple(k.split("/", 1)) for k in section["budgets"]}
            # sources without a budget are excluded from sampling entirely
            entries = [ManifestEntry(lang, source, len(group),
                                     sum(d.token_count for d in group))
                       for (lang, source), group in sorted(by_key.items())
                       if (lang, source) in budget_keys]
            manifest = CorpusManifest.from_entries(entries)
            budgets: dict[tuple[str, str], int] = {}
            for key_str, value in section["budgets"].items():
                lang, source = key_str.split("/", 1)
                available = next((e.total_tokens for e in entries
                                  if (e.lang, e.source) == (lang, source)), 0)
                # fractions (floats <= 1) are resolved against availability
                budgets[(lang, source)] = (int(value) if value > 1
                                           else max(1, int(value * available)))
            plan = mixing.plan_sampling(manifest, budgets, seed=seed)
            in_plan = [d for d in pool if (d.lang, d.source) in budget_keys]
            docs = list(mixing.execute_sampling(in_plan, plan))
            _write_docs_file(docs, out_dir / "sampled.jsonl")
            (out_dir / "sampling_plan.json").write_text(
                json.dumps(plan.to_dict(), indent=2, sort_keys=True), "utf-8")
            report.stages["mix"] = {
                "n_sampled": len(docs),
                "sampled_tokens": sum(d.token_count for d in docs),
            }

        if enabled("pack"):
            section = config["pack"]
            window = section.get("window", 8192)
            plan = packing.pack_documents(current_docs(), window)
            (out_dir / "packing_plan.json").write_text(
                json.dumps(plan.to_dict(), indent=2, sort_keys=True), "utf-8")
            report.stages["pack"] = {
                "n_sequences": len(plan.sequences),
                "pad_fraction": plan.pad_fraction,
                "data_tokens": plan.total_data_tokens,
            }

        if enabled("schedule"):
            section = config["schedule"]
            ccfg = curriculum.CurriculumConfig(
                mixing_lambda=section.get("mixing_lambda", 0.2),
                batch_size=section.get("batch_size", 32),
                seed=seed)
            core_ids = json.loads(Path(section["core"]).read_text("utf-8"))
            down_ids = json.loads(Path(section["downstream"]).read_text("utf-8"))
            batches = list(curriculum.stage2_batches(core_ids, down_ids, ccfg))
            with (out_dir / "batches.jsonl").open("w", encoding="utf-8") as fh:
                for b in batches:
                    fh.write(json.dumps({
                        "core_ids": list(b.core_ids),
                        "downstream_ids": list(b.downstream_ids),
                        "partial": b.partial,
                    }) + "\n")
            observed = curriculum.mixing_stats(batches)
            report.stages["schedule"] = {"n_batches": len(batches),
                                         "core_fraction": observed}

        if enabled("hipo"):
            section = config["hipo"]
            transport, ecfg = _make_transport(section["endpoint"], seed)
            cfg = hipo.HipoConfig(beta=section.get("beta", 0.1),
                                  nll_lambda=section.get("nll_lambda", 0.1),
                                  hard_threshold=section.get("tau", 0.8))
            queries = [hipo.HipoQuery(**q) for q in
                       json.loads(Path(section["queries"]).read_text("utf-8"))]

            def generate(q: hipo.HipoQuery, n: int) -> list[str]:
                prompt = f"{q.query}\nGOLDEN: {q.golden}"
                out = []
                for _ in range(n):
                    out.append(complete(ChatRequest.user(prompt), ecfg, transport).content)
                if isinstance(transport, MockGeneratorTransport):
                    transport.round += 1
                return out

            def evaluate(q: hipo.HipoQuery, text: str) -> float:
                return 1.0 if text == q.golden else 0.0

            records = hipo.run_hipo_iterations(
                queries, generate, evaluate, cfg,
                n_iterations=section.get("iterations", 3),
                n_generations=section.get("n_generations", 4))
            pairs = [p for r in records for p in r.pairs]
            with (out_dir / "preference_pairs.jsonl").open("w", encoding="utf-8") as fh:
                for p in pairs:
                    fh.write(json.dumps({"query": p.query, "chosen": p.chosen,
                                         "rejected": p.rejected},
                                        ensure_ascii=False) + "\n")
            final = records[-1].state if records else None
            if final is not None:
                (out_dir / "hipo_state.json").write_text(
                    json.dumps(final.to_dict(), indent=2, sort_keys=True), "utf-8")
            report.stages["hipo"] = {
                "n_iterations": len(records),
                "n_pairs": len(pairs),
                "active_remaining": len(final.active) if final else 0,
            }
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(_failing_stage(report), str(exc)) from exc

    report.wall_clock_s = time.monotonic() - started
    report_dict = report.to_dict()
    stable = {k: v for k, v in report_dict.items() if k != "wall_clock_s"}
    (out_dir / "report.json").write_text(
        json.dumps(stable, indent=2, sort_keys=True), "utf-8")
    return report


def _failing_stage(report: RunReport) -> str:
    done = set(report.stages)
    for stage in STAGE_ORDER:
        if stage not in done:
            return stage
    return "finalize"
