"""Command-line entry point: one subcommand per pipeline stage plus an
end-to-end runner driven by a single JSON config."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import curriculum, filtering, hipo, metrics, mixing, packing, pipeline, scoring
from .corpus import (CorpusManifest, ReadReport, read_documents,
                     validate_manifest, write_documents)
from .enhancement import (ALL_DIMENSIONS, KnowledgeDimension,
                          build_synthesis_prompt, parse_synthesis_output)
from .client import ChatRequest, complete
from .pipeline import (EXIT_CONFIG_ERROR, EXIT_OK, EXIT_STAGE_FAILURE,
                       ConfigError, StageError, _make_transport)


def _load_json(path: str):
    return json.loads(Path(path).read_text("utf-8"))


def _dump_json(obj, path: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)
    if path:
        Path(path).write_text(text + "\n", "utf-8")
    else:
        print(text)


def _read_docs(path: str):
    report = ReadReport()
    with open(path, "r", encoding="utf-8") as fh:
        docs = list(read_documents(fh, report=report))
    if report.errors:
        print(f"warning: skipped {len(report.errors)} malformed lines",
              file=sys.stderr)
    return docs


def _write_docs(docs, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        write_documents(docs, fh)


def cmd_filter(args) -> int:
    rules_cfg = _load_json(args.rules) if args.rules else {}
    rules = filtering.FilterRuleSet(**rules_cfg)
    stats = filtering.FilterStats()
    kept = list(filtering.filter_corpus(_read_docs(args.infile), rules, stats))
    _write_docs(kept, args.out)
    _dump_json(stats.to_dict(), args.stats)
    return EXIT_OK


def cmd_score(args) -> int:
    transport, ecfg = _make_transport(args.endpoint, args.seed)
    docs = _read_docs(args.infile)
    scored = scoring.score_corpus(docs, ecfg, transport,
                                  sample_n=args.sample_n, seed=args.seed)
    records = []
    for s in scored:
        rec = {"id": s.doc.id}
        if s.ok:
            rec["score"] = s.record.score
            if s.record.rationale:
                rec["rationale"] = s.record.rationale
        else:
            rec["error"] = s.error
        records.append(rec)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    if args.tau is not None:
        kept = list(scoring.threshold_filter(
            (s.doc for s in scored if s.ok), args.tau))
        _write_docs(kept, args.kept or args.out + ".kept.jsonl")
    return EXIT_OK


def cmd_enhance(args) -> int:
    transport, ecfg = _make_transport(args.endpoint, 0)
    dims = (list(ALL_DIMENSIONS) if args.dims == "all"
            else [KnowledgeDimension(d) for d in args.dims.split(",")])
    statutes = _load_json(args.statutes)
    with open(args.out, "w", encoding="utf-8") as fh:
        for st in statutes:
            prompt = build_synthesis_prompt(st["id"], st["text"], dims)
            result = complete(ChatRequest.user(prompt), ecfg, transport)
            for p in parse_synthesis_output(result.content, dims, st["id"]):
                fh.write(json.dumps({
                    "statute_id": p.statute_id, "dimension": p.dimension.value,
                    "instruction": p.instruction, "output": p.output,
                }, ensure_ascii=False) + "\n")
    return EXIT_OK


def _budgets_from_file(path: str) -> dict[tuple[str, str], int]:
    raw = _load_json(path)
    return {tuple(k.split("/", 1)): v for k, v in raw.items()}


def cmd_mix(args) -> int:
    manifest = CorpusManifest.from_dict(_load_json(args.manifest))
    if args.action == "plan":
        plan = mixing.plan_sampling(manifest, _budgets_from_file(args.budgets),
                                    seed=args.seed)
        _dump_json(plan.to_dict(), args.out)
        return EXIT_OK
    if args.action == "check":
        plan = mixing.plan_sampling(manifest, _budgets_from_file(args.budgets),
                                    seed=args.seed)
        rep = mixing.check_ratios(plan, mixing.RatioTargets())
        _dump_json({"zh_share": rep.zh_share, "domain_share": rep.domain_share,
                    "passed": rep.passed}, args.out)
        return EXIT_OK if rep.passed else EXIT_STAGE_FAILURE
    # run
    plan = mixing.plan_sampling(manifest, _budgets_from_file(args.budgets),
                                seed=args.seed)
    sampled = list(mixing.execute_sampling(_read_docs(args.infile), plan))
    _write_docs(sampled, args.out)
    return EXIT_OK


def cmd_pack(args) -> int:
    plan = packing.pack_documents(_read_docs(args.infile), args.window)
    _dump_json(plan.to_dict(), args.out)
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg = curriculum.CurriculumConfig(mixing_lambda=args.mixing_lambda,
                                      batch_size=args.batch, seed=args.seed)
    core = _load_json(args.core)
    downstream = _load_json(args.downstream)
    batches = list(curriculum.stage2_batches(core, downstream, cfg))
    with open(args.out, "w", encoding="utf-8") as fh:
        for b in batches:
            fh.write(json.dumps({"core_ids": list(b.core_ids),
                                 "downstream_ids": list(b.downstream_ids),
                                 "partial": b.partial}) + "\n")
    return EXIT_OK


def cmd_hipo(args) -> int:
    if args.action == "loss":
        cfg_raw = _load_json(args.config) if args.config else {}
        cfg = hipo.HipoConfig(beta=cfg_raw.get("beta", 0.1),
                              nll_lambda=cfg_raw.get("nll_lambda", 0.1))
        quads = [hipo.LogProbQuad(**q) for q in _load_json(args.quads)]
        _dump_json([{"dpo": hipo.dpo_loss(q, cfg.beta),
                     "hipo": hipo.hipo_loss(q, cfg)} for q in quads], args.out)
        return EXIT_OK

    outcomes = [
        hipo.EvalOutcome(o["query_id"], o.get("metric_kind", "accuracy"),
                         o["score"],
                         tuple(hipo.Generation(g["text"], g["score"])
                               for g in o.get("generations", [])))
        for o in _load_json(args.outcomes)
    ]
    if args.action == "mine":
        _dump_json(sorted(hipo.mine_hard_samples(outcomes, args.tau)), args.out)
        return EXIT_OK
    if args.action == "pairs":
        samples = {s["query_id"]: s for s in _load_json(args.samples)}
        hard = hipo.mine_hard_samples(outcomes, args.tau)
        pairs = []
        for o in outcomes:
            if o.query_id not in hard:
                continue
            s = samples[o.query_id]
            pair = hipo.build_preference_pairs(s["query"], s["golden"], o)
            if pair is not None:
                pairs.append({"query": pair.query, "chosen": pair.chosen,
                              "rejected": pair.rejected})
        with open(args.out or "/dev/stdout", "w", encoding="utf-8") as fh:
            for p in pairs:
                fh.write(json.dumps(p, ensure_ascii=False) + "\n")
        return EXIT_OK
    # iterate: advance a state file one round
    state_raw = _load_json(args.state)
    state = hipo.HipoState(iteration=state_raw["iteration"],
                           active=frozenset(state_raw["active"]),
                           resolved=frozenset(state_raw["resolved"]),
                           reference_policy=state_raw.get("reference_policy", "initial"))
    new_state = hipo.advance_iteration(state, outcomes, args.tau)
    _dump_json(new_state.to_dict(), args.out or args.state)
    return EXIT_OK


def cmd_eval(args) -> int:
    per_task: dict[str, list[float]] = {}
    with open(args.infile, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            kind = metrics.MetricKind(args.metric or rec["metric"])
            value = metrics.score(kind, rec["pred"], rec["gold"],
                                  max_term=rec.get("max_term"))
            per_task.setdefault(rec.get("task", "default"), []).append(value)
    report = {task: {"mean": sum(v) / len(v), "count": len(v)}
              for task, v in sorted(per_task.items())}
    _dump_json(report, args.report)
    return EXIT_OK


def cmd_validate_manifest(args) -> int:
    manifest = CorpusManifest.from_dict(_load_json(args.manifest))
    violations = validate_manifest(manifest, sig_figs=args.sig_figs)
    _dump_json([str(v) for v in violations], args.out)
    return EXIT_OK if not violations else EXIT_STAGE_FAILURE


def cmd_run(args) -> int:
    config = _load_json(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        report = pipeline.run_pipeline(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    _dump_json(report.to_dict(), args.report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexforge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="rule-based cleaning")
    p.add_argument("--rules")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("score", help="LLM quality scoring")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kept")
    p.add_argument("--sample-n", dest="sample_n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=int)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("enhance", help="knowledge-guided instruction synthesis")
    p.add_argument("--statutes", required=True)
    p.add_argument("--dims", default="all")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("mix", help="budgeted down-sampling")
    p.add_argument("action", choices=["plan", "check", "run"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--budgets", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("pack", help="fixed-window sequence packing")
    p.add_argument("--window", type=int, default=8192)
    p.add_argument("--step-tokens", dest="step_tokens", type=int,
                   default=packing.TOKENS_PER_STEP)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("schedule", help="curriculum batch construction")
    p.add_argument("mode", choices=["psft"])
    p.add_argument("--core", required=True)
    p.add_argument("--downstream", required=True)
    p.add_argument("--lambda", dest="mixing_lambda", type=float, default=0.2)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("hipo", help="hard-sample mining and preference loss")
    p.add_argument("action", choices=["mine", "pairs", "loss", "iterate"])
    p.add_argument("--config")
    p.add_argument("--outcomes")
    p.add_argument("--samples")
    p.add_argument("--quads")
    p.add_argument("--state")
    p.add_argument("--tau", type=float, default=0.8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hipo)

    p = sub.add_parser("eval", help="metric scoring over prediction records")
    p.add_argument("--metric")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate-manifest", help="manifest total/budget checks")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sig-figs", dest="sig_figs", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate_manifest)

    p = sub.add_parser("run", help="end-to-end pipeline from one config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--report")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
