"""Run configured experiments and write their outputs."""
from __future__ import annotations

import io
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .verify.registry import REGISTRY, run_experiment
from .verify.report import FAIL, INCONCLUSIVE, INVALID, PASS, _jsonable, fmt

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2


def combined_status(reports) -> str:
    statuses = [r.status for r in reports]
    if not statuses:
        return FAIL
    if INVALID in statuses:
        return INVALID
    if all(s == PASS for s in statuses):
        return PASS
    if FAIL in statuses:
        return FAIL
    return INCONCLUSIVE


def exit_code(status: str) -> int:
    """0 iff everything passed, 2 for an invalid scenario, 1 otherwise."""
    if status == PASS:
        return EXIT_OK
    if status == INVALID:
        return EXIT_INVALID
    return EXIT_ERROR


def merged_csv(reports) -> str:
    """One table for all reports; ``scenario`` is the report's position in the run."""
    cols = ["anchor", "experiment", "scenario", "series"]
    for rep in reports:
        for c in rep.columns():
            if c not in cols:
                cols.append(c)
    out = io.StringIO()
    out.write(",".join(cols) + "\n")
    for i, rep in enumerate(reports):
        for row in rep.rows:
            full = {"anchor": rep.anchor, "experiment": rep.name, "scenario": i, **row}
            out.write(",".join(fmt(full.get(c)) for c in cols) + "\n")
    return out.getvalue()


def merged_summary(cfg, reports) -> str:
    status = combined_status(reports)
    doc = {
        "experiment": cfg.name,
        "anchor": REGISTRY[cfg.name].anchor,
        "status": status,
        "pass": status == PASS,
        "config": cfg.describe(),
        "reports": [r.summary() for r in reports],
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunResult:
    name: str
    status: str
    reports: list = field(default_factory=list)
    paths: tuple = ()
    runtime: float = 0.0

    @property
    def code(self) -> int:
        return exit_code(self.status)


def run_config(cfg, write: bool = True) -> RunResult:
    start = time.perf_counter()
    reports = run_experiment(cfg)
    runtime = time.perf_counter() - start
    status = combined_status(reports)
    paths = ()
    if write:
        base = Path(cfg.out_dir) / cfg.output_stem
        csv_path = base.with_name(base.name + ".csv")
        summary_path = base.with_name(base.name + ".summary.json")
        atomic_write(csv_path, merged_csv(reports))
        atomic_write(summary_path, merged_summary(cfg, reports))
        paths = (csv_path, summary_path)
    return RunResult(cfg.name, status, reports, paths, runtime)
