"""Evaluation protocol and result aggregation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import Policy, get_policy, run_policy
from .env import exploration_rate
from .generators import Dataset

REPORT_COLUMNS = ("dataset", "policy", "mean", "std", "seeds")
CURVE_COLUMNS = ("step", "mean_rate", "std_rate")


@dataclass
class EvalReport:
    dataset: str
    policy: str
    rates: list[float]
    seed: int = 0
    step: int | None = None
    per_seed: dict[int, float] = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.rates))

    @property
    def std(self) -> float:
        return float(np.std(self.rates))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(mean=self.mean, std=self.std)
        d["per_seed"] = {str(k): v for k, v in self.per_seed.items()}
        return d


def evaluate(policy: Policy | str, dataset: Dataset, step_cap: int = 500, seed: int = 0,
             policy_name: str | None = None, step: int | None = None) -> EvalReport:
    """Run every fixed ``(graph, source)`` pair of the test split to completion or the cap."""
    if isinstance(policy, str):
        policy_name = policy_name or policy
        policy = get_policy(policy)
    pairs = dataset.eval_pairs()
    if not pairs:
        raise ValueError("dataset has no evaluation pairs")
    rates = []
    for k, (i, source) in enumerate(pairs):
        state, _ = run_policy(dataset.test[i], source, policy, step_cap, np.random.default_rng([seed, k]))
        rates.append(exploration_rate(state))
    return EvalReport(dataset.name, policy_name or getattr(policy, "__name__", "policy"), rates, seed, step)


def evaluate_seeds(policy: Policy | str, dataset: Dataset, seeds: Sequence[int], step_cap: int = 500,
                   policy_name: str | None = None) -> EvalReport:
    """Repeat :func:`evaluate` per seed; ``rates`` holds the per-seed means."""
    per_seed = {}
    for s in seeds:
        per_seed[int(s)] = evaluate(policy, dataset, step_cap, s, policy_name).mean
    name = policy_name or (policy if isinstance(policy, str) else getattr(policy, "__name__", "policy"))
    return EvalReport(dataset.name, name, list(per_seed.values()), int(seeds[0]), None, per_seed)


# --- persistence -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def report_rows_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r["dataset"], r["policy"], _fmt(r["mean"]), _fmt(r["std"]),
                    ";".join(str(s) for s in r["seeds"])])
    return buf.getvalue()


def reports_to_rows(reports: Sequence[EvalReport]) -> list[dict]:
    return [{"dataset": r.dataset, "policy": r.policy, "mean": r.mean, "std": r.std,
             "seeds": sorted(r.per_seed) or [r.seed]} for r in reports]


def curve_csv(points: Sequence[tuple[int, float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for step, mean, std in points:
        w.writerow([int(step), _fmt(mean), _fmt(std)])
    return buf.getvalue()


def read_curve(path) -> list[tuple[int, float, float]]:
    with open(path) as fh:
        return [(int(r["step"]), float(r["mean_rate"]), float(r["std_rate"])) for r in csv.DictReader(fh)]


def write_report_json(path, report: EvalReport, **extra) -> None:
    Path(path).write_text(json.dumps({**report.to_dict(), **extra}, indent=2, sort_keys=True) + "\n")


def aggregate_runs(run_dirs: Sequence) -> tuple[list[dict], list[tuple[int, float, float]]]:
    """Merge per-seed run directories into table rows and a mean learning curve.

    Each run contributes its final mean rate; ``std`` is taken across runs.
    """
    finals: dict[tuple[str, str], list[tuple[int, float]]] = {}
    curves: dict[int, list[float]] = {}
    for d in map(Path, run_dirs):
        rep = json.loads((d / "report.json").read_text())
        finals.setdefault((rep["dataset"], rep["policy"]), []).append((int(rep["seed"]), float(rep["mean"])))
        if (d / "curve.csv").exists():
            for step, mean, _ in read_curve(d / "curve.csv"):
                curves.setdefault(step, []).append(mean)
    rows = []
    for (dataset, policy), vals in sorted(finals.items()):
        means = np.array([m for _, m in vals])
        rows.append({"dataset": dataset, "policy": policy, "mean": float(means.mean()),
                     "std": float(means.std()), "seeds": sorted(s for s, _ in vals)})
    curve = [(step, float(np.mean(v)), float(np.std(v))) for step, v in sorted(curves.items())]
    return rows, curve
