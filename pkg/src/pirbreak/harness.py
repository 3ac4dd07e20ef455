"""Seeded experiment runner and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import analysis
from .attack_fast import run_improved_attack
from .attack_lb import run_original_attack
from .errors import AttackInconclusive, ExtractionError
from .pir import (
    Database,
    SchemeParams,
    encode_answer,
    extract_file,
    gen_queries,
    gen_secret,
)
from .report import AttackReport

MODES = ("roundtrip", "attack-original", "attack-improved", "analysis", "simulate")
FORMATS = ("json", "csv")
SEED_ENV = "PIRBREAK_SEED"

TABLE_COLUMNS = ("n", "min_minutes", "max_minutes", "success_percent")
SIMULATE_COLUMNS = ("n", "worst_exact", "worst_approx", "avg_exact", "avg_approx")


def master_seed(explicit: int | None) -> int:
    """The given seed, else ``$PIRBREAK_SEED``, else 0."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        return int(env)
    return 0


def trial_seeds(master: int, trials: int) -> list[int]:
    """Independent 64-bit seeds, one per trial, split from ``master``."""
    children = np.random.SeedSequence(master).spawn(trials)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass
class ExperimentConfig:
    params: SchemeParams | None
    mode: str
    trials: int = 1
    seed: int = 0
    output_path: str | None = None
    output_format: str = "json"
    jobs: int = 1
    planted_index: int | None = None
    n_grid: tuple[int, ...] = ()
    delta: float = 0.99

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.output_format not in FORMATS:
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.mode in ("roundtrip", "attack-original", "attack-improved"):
            if self.params is None:
                raise ValueError(f"mode {self.mode} needs scheme parameters")
            if self.planted_index is not None and not 1 <= self.planted_index <= self.params.n:
                raise ValueError(f"planted index must lie in 1..{self.params.n}")


def _plant(config: ExperimentConfig, rng: np.random.Generator) -> int:
    # Drawn even when fixed, so the rest of the stream does not shift.
    drawn = int(rng.integers(1, config.params.n + 1))
    return config.planted_index if config.planted_index is not None else drawn


def run_roundtrip(config: ExperimentConfig, seed: int) -> dict:
    params = config.params
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    secret = gen_secret(params, rng)
    i0 = _plant(config, rng)
    queries, _ = gen_queries(params, secret, i0, rng)
    db = Database.random(params, rng)
    answer = encode_answer(db, queries)
    error = None
    try:
        ok = bool(np.array_equal(extract_file(answer, secret, params), db.files[i0 - 1]))
    except ExtractionError as exc:
        ok, error = False, str(exc)
    return {
        "seed": seed,
        "planted_index": i0,
        "success": ok,
        "wall_ms": 1000 * (time.perf_counter() - start),
        "error": error,
    }


def run_attack(config: ExperimentConfig, seed: int) -> AttackReport:
    params = config.params
    rng = np.random.default_rng(seed)
    secret = gen_secret(params, rng)
    i0 = _plant(config, rng)
    queries, _ = gen_queries(params, secret, i0, rng)
    attack = run_improved_attack if config.mode == "attack-improved" else run_original_attack
    try:
        return attack(queries, params, planted_index=i0, seed=seed, delta=config.delta)
    except AttackInconclusive as exc:
        return exc.report


def _run_one(args: tuple[ExperimentConfig, int]) -> dict:
    config, seed = args
    if config.mode == "roundtrip":
        return run_roundtrip(config, seed)
    return run_attack(config, seed).to_dict()


@dataclass
class AggregateReport:
    mode: str
    params: dict | None
    master_seed: int
    trials: int
    records: list[dict] = field(default_factory=list)

    @property
    def successes(self) -> int:
        return sum(1 for r in self.records if r.get("success"))

    @property
    def success_rate(self) -> float:
        return self.successes / len(self.records) if self.records else 0.0

    def _times(self) -> list[float]:
        return [float(r["wall_ms"]) for r in self.records]

    def summary(self) -> dict:
        times = self._times()
        out = {
            "trials_completed": len(self.records),
            "success_rate": self.success_rate,
            "min_wall_ms": min(times) if times else None,
            "max_wall_ms": max(times) if times else None,
            "mean_wall_ms": sum(times) / len(times) if times else None,
        }
        cvps = [r["cvp_count_preprocess"] + r["cvp_count_final"] for r in self.records if "cvp_count_final" in r]
        if cvps:
            out["mean_cvp_count"] = sum(cvps) / len(cvps)
            out["max_cvp_count"] = max(cvps)
        return out

    def table_row(self) -> dict:
        """Summary in minutes and percent, keyed by :data:`TABLE_COLUMNS`."""
        times = self._times()
        return {
            "n": self.params["n"] if self.params else None,
            "min_minutes": min(times) / 60000 if times else None,
            "max_minutes": max(times) / 60000 if times else None,
            "success_percent": 100 * self.success_rate,
        }

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "params": self.params,
            "master_seed": self.master_seed,
            "trials": self.trials,
            "summary": self.summary(),
            "table_row": self.table_row(),
            "records": self.records,
        }


def run_trials(config: ExperimentConfig) -> AggregateReport:
    """Run ``config.trials`` seeded trials (in parallel when ``jobs > 1``).

    Records keep trial order whatever the execution order.  If a trial
    raises, the records gathered so far are written before re-raising.
    """
    if config.mode not in ("roundtrip", "attack-original", "attack-improved"):
        raise ValueError(f"mode {config.mode} does not run trials")
    seeds = trial_seeds(config.seed, config.trials)
    agg = AggregateReport(config.mode, config.params.to_dict(), config.seed, config.trials)
    work = [(config, s) for s in seeds]
    try:
        if config.jobs == 1:
            for item in work:
                agg.records.append(_run_one(item))
        else:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                for rec in pool.map(_run_one, work):
                    agg.records.append(rec)
    finally:
        if config.output_path:
            write_output(agg.to_dict() if config.output_format == "json" else [agg.table_row()],
                         config.output_path, config.output_format, TABLE_COLUMNS)
    return agg


# -- analysis and simulation tables -------------------------------------------

def analysis_summary(params: SchemeParams, n_grid: Sequence[int] = ()) -> dict:
    bound = analysis.l_max_bound(params.p, params.N)
    log_bound, failure = analysis.success_probability(params.p, params.N)
    rows = []
    for n in n_grid or (params.n,):
        l = -(-n // 6)
        row = {"n": n, "l": l, "bound_holds": analysis.theorem_bound_check(params.p, params.N, l)}
        if n >= params.t:
            row["worst_approx"] = analysis.cvp_count_worst(n, params.t)
            row["avg_approx"] = analysis.cvp_count_avg(n, params.t)
        rows.append(row)
    return {
        "p": str(params.p),
        "N": params.N,
        "l_max": bound.simple_form,
        "l_max_exact_form": bound.exact_form,
        "success_log_bound": log_bound,
        "failure_complement": failure,
        "grid": rows,
    }


def simulate_rows(n_grid: Sequence[int], t: int = 6) -> list[dict]:
    rows = []
    for n in n_grid:
        est = analysis.simulate_cvp_counts(n, t)
        rows.append({
            "n": n,
            "worst_exact": est.worst_exact,
            "worst_approx": est.worst_approx,
            "avg_exact": est.avg_exact,
            "avg_approx": est.avg_approx,
        })
    return rows


def parse_grid(spec: str) -> tuple[int, ...]:
    """``"a..b[:step]"`` or a comma list.  A range without a step takes
    roughly ten points per decade."""
    spec = spec.strip()
    if ".." not in spec:
        vals = tuple(int(x) for x in spec.split(",") if x.strip())
        if not vals:
            raise ValueError("empty grid")
        return vals
    lo_s, rest = spec.split("..", 1)
    hi_s, _, step_s = rest.partition(":")
    lo, hi = int(lo_s), int(hi_s)
    if lo < 1 or hi < lo:
        raise ValueError(f"bad range {spec!r}")
    if step_s:
        step = int(step_s)
        if step < 1:
            raise ValueError("step must be positive")
        vals = list(range(lo, hi + 1, step))
    else:
        count = max(2, int(round(10 * math.log10(hi / lo))) + 1)
        vals = sorted({int(round(lo * (hi / lo) ** (i / (count - 1)))) for i in range(count)})
    if vals[-1] != hi:
        vals.append(hi)
    return tuple(vals)


# -- output -------------------------------------------------------------------

def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render(payload, fmt: str, columns: Sequence[str] = ()) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    return to_csv(payload, columns)


def write_output(payload, path: str, fmt: str, columns: Sequence[str] = ()):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(payload, fmt, columns))
