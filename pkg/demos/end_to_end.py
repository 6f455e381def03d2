"""Run the full pipeline hermetically on a synthetic corpus.

Everything below uses in-process mock endpoints, so it needs no network and
is byte-deterministic for a fixed seed.
"""

import json
import tempfile
from pathlib import Path

from lexforge.corpus import write_documents
from lexforge.pipeline import run_pipeline
from lexforge.testing import make_mini_corpus

workdir = Path(tempfile.mkdtemp(prefix="lexforge-demo-"))

infile = workdir / "corpus.jsonl"
with infile.open("w", encoding="utf-8") as fh:
    write_documents(make_mini_corpus(500, seed=1), fh)

queries = workdir / "queries.json"
queries.write_text(json.dumps([
    {"query_id": f"q{i}", "query": f"What does provision {i} require?",
     "golden": f"It requires obligation {i}."}
    for i in range(15)
]))

config = {
    "seed": 7,
    "input": str(infile),
    "output_dir": str(workdir / "out"),
    "filter": {"enabled": True, "min_chars": 32},
    "score": {"enabled": True, "endpoint": "mock:judge", "tau": 2},
    "pack": {"enabled": True, "window": 8192},
    "hipo": {"enabled": True, "endpoint": "mock:generator",
             "queries": str(queries), "iterations": 3, "tau": 1.0},
}

report = run_pipeline(config)
print(f"artifacts in {workdir / 'out'}")
for stage, stats in report.stages.items():
    print(f"  {stage}: {stats}")
