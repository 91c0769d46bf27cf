"""Mitigation metrics, multi-run aggregation and report files."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diffusion import REALIZATION
from .environment import Backend, Environment, Network, make_environment
from .errors import UndefinedMetricError
from .exposure import mis_share, ratio
from .fairness import total_loss

METRICS = ("mis_pct_before", "mis_pct_after", "efficiency", "fairness_error", "consumption_ratio",
           "wall_time_seconds")
REPORT_COLUMNS = ("method", "network", "capacity", "efficiency_mean", "efficiency_se", "fairness_mean",
                  "fairness_se", "consumption_ratio", "runs")


@dataclass(frozen=True)
class RunMetrics:
    mis_pct_before: float
    mis_pct_after: float
    efficiency: float
    fairness_error: float
    consumption_ratio: float
    wall_time_seconds: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("wall_time_seconds")
        return d


@dataclass(frozen=True)
class AggregateMetrics:
    mean: dict = field(default_factory=dict)
    std_error: dict = field(default_factory=dict)
    n_runs: int = 0

    def to_dict(self) -> dict:
        return {"mean": dict(self.mean), "std_error": dict(self.std_error), "n_runs": self.n_runs}


def efficiency(before: float, after: float) -> float:
    """``1 - after / before``; negative when mitigation made things worse."""
    if before == 0:
        raise UndefinedMetricError("efficiency is undefined when the share before mitigation is 0")
    if before < 0 or after < 0:
        raise ValueError("misinformation shares cannot be negative")
    return 1.0 - after / before


def post_mitigation_share(network: Network, incentives, backend: Backend | str = Backend.EXPECTED,
                          horizon: int = 1, seed: int = 0, *, window: float = REALIZATION,
                          balance: float = 1.3) -> float:
    """Misinformation share (percent) over ``horizon`` realizations with ``incentives`` applied."""
    env = make_environment(network, backend, eval_horizon=horizon, window=window, balance=balance)
    return env.mis_share(incentives, seed)


def evaluate_incentives(env: Environment, incentives, consumption_ratio: float, seed: int = 0,
                        wall_time_seconds: float = 0.0) -> RunMetrics:
    """Metrics for one allocation; before and after share the evaluation seed."""
    x = np.asarray(incentives, dtype=float)
    before = env.mis_share(np.zeros_like(x), seed)
    after_impacts = env.impacts(x, seed)
    after = 100.0 * float(mis_share(after_impacts).mean())
    loss = total_loss(ratio(after_impacts, env.balance), env.adjacency)
    return RunMetrics(before, after, efficiency(before, after), loss.normalized, float(consumption_ratio),
                      float(wall_time_seconds))


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    # fsum keeps the aggregate independent of run order
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var) / math.sqrt(n)


def aggregate(runs: Iterable[RunMetrics]) -> AggregateMetrics:
    runs = list(runs)
    if not runs:
        raise ValueError("cannot aggregate an empty list of runs")
    mean, se = {}, {}
    for name in METRICS:
        mean[name], se[name] = _mean_se([getattr(r, name) for r in runs])
    return AggregateMetrics(mean, se, len(runs))


@dataclass(frozen=True)
class ReportRow:
    method: str
    network: str
    capacity: float
    metrics: AggregateMetrics

    def record(self) -> dict:
        m, s = self.metrics.mean, self.metrics.std_error
        return {"method": self.method, "network": self.network, "capacity": float(self.capacity),
                "efficiency_mean": m["efficiency"], "efficiency_se": s["efficiency"],
                "fairness_mean": m["fairness_error"], "fairness_se": s["fairness_error"],
                "consumption_ratio": m["consumption_ratio"], "runs": self.metrics.n_runs}


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc.strerror or exc}") from exc


def emit_report(rows: Sequence[ReportRow], directory: str | Path, formats: Sequence[str] = ("json", "csv"),
                stem: str = "report") -> list[Path]:
    """One row per (method, network, capacity); floats are written with repr precision."""
    unknown = set(formats) - {"json", "csv"}
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    directory = Path(directory)
    records = [r.record() for r in rows]
    written = []
    if "csv" in formats:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for rec in records:
            writer.writerow([repr(rec[c]) if isinstance(rec[c], float) else str(rec[c]) for c in REPORT_COLUMNS])
        path = directory / f"{stem}.csv"
        _write(path, buf.getvalue())
        written.append(path)
    if "json" in formats:
        path = directory / f"{stem}.json"
        _write(path, json.dumps({"columns": list(REPORT_COLUMNS), "rows": records}, indent=2) + "\n")
        written.append(path)
    return written


def read_report_csv(path: str | Path) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            rec = {}
            for c in REPORT_COLUMNS:
                if c in ("method", "network"):
                    rec[c] = row[c]
                elif c == "runs":
                    rec[c] = int(row[c])
                else:
                    rec[c] = float(row[c])
            out.append(rec)
    return out
