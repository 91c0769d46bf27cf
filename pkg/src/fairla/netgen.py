"""Synthetic networks with controlled misinformation exposure, and CSV ingestion.

Each user gets an activity level (events over the history window) and a
personal misinformation share; the three archetypes differ in how shares are
laid out:

* ``case0``: every user sits near the target share.
* ``case1``: an exposed minority carries most of the misinformation while the
  rest see little.
* ``case2``: an exposed majority, a heavy subset of which posts
  ``heavy_multiplier`` times more misinformation.

Edges are drawn with homophily: pairs inside the same exposure group connect
more often than pairs across groups, at the requested overall density.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .diffusion import TRAIN_WINDOW, Content, EventLog
from .errors import FeasibilityError, UndefinedMetricError
from .seeding import rng as make_rng

MIN_ACTIVITY = 10
# exposed users must be clearly majority-misinformation, others clearly not
EXPOSED_SHARE_RANGE = (0.6, 0.98)
UNEXPOSED_SHARE_MAX = 0.4


class Case(str, Enum):
    CASE0 = "case0"
    CASE1 = "case1"
    CASE2 = "case2"
    CUSTOM = "custom"


@dataclass
class NetworkSpec:
    n_users: int = 200
    case: Case = Case.CASE1
    target_mis_pct: float = 17.0
    exposed_fraction: float = 0.2
    heavy_subset_fraction: float = 0.25
    heavy_multiplier: float = 3.0
    edge_density: float = 0.05
    seed: int = 0
    activity: float = 60.0
    history: float = TRAIN_WINDOW
    cross_group_ratio: float = 0.02
    unexposed_share: float | None = None
    case0_spread: float = 0.05
    name: str = "network"

    def __post_init__(self):
        self.case = Case(self.case)
        if int(self.n_users) != self.n_users or self.n_users < 2:
            raise ValueError(f"n_users must be an integer >= 2, got {self.n_users}")
        self.n_users = int(self.n_users)
        if not 0 < self.target_mis_pct < 100:
            raise ValueError(f"target_mis_pct must lie in (0, 100), got {self.target_mis_pct}")
        if not 0 < self.exposed_fraction <= 1:
            raise ValueError(f"exposed_fraction must lie in (0, 1], got {self.exposed_fraction}")
        if not 0 < self.heavy_subset_fraction <= 1:
            raise ValueError(f"heavy_subset_fraction must lie in (0, 1], got {self.heavy_subset_fraction}")
        if not self.heavy_multiplier >= 1:
            raise ValueError(f"heavy_multiplier must be at least 1, got {self.heavy_multiplier}")
        if not 0 < self.edge_density < 1:
            raise ValueError(f"edge_density must lie in (0, 1), got {self.edge_density}")
        if not self.activity >= MIN_ACTIVITY:
            raise ValueError(f"activity must be at least {MIN_ACTIVITY}, got {self.activity}")
        if not self.history > 0:
            raise ValueError("history must be positive")
        if not 0 < self.cross_group_ratio <= 1:
            raise ValueError(f"cross_group_ratio must lie in (0, 1], got {self.cross_group_ratio}")
        if self.unexposed_share is not None and not 0 <= self.unexposed_share < 1:
            raise ValueError("unexposed_share must lie in [0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case"] = self.case.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(**d)


@dataclass(eq=False)
class GeneratedNetwork:
    adjacency: np.ndarray
    mis_log: EventLog
    true_log: EventLog
    achieved_mis_pct: float
    exposed: np.ndarray
    heavy: np.ndarray
    spec: NetworkSpec | None = None

    @property
    def n_users(self) -> int:
        return self.adjacency.shape[0]

    def user_shares(self) -> np.ndarray:
        """Personal misinformation share of each user's own posts."""
        mis = np.bincount(self.mis_log.users, minlength=self.n_users)
        true = np.bincount(self.true_log.users, minlength=self.n_users)
        total = mis + true
        return np.divide(mis, total, out=np.zeros(self.n_users), where=total > 0)

    def summary(self) -> dict:
        shares = self.user_shares()
        return {"n_users": self.n_users, "achieved_mis_pct": self.achieved_mis_pct,
                "mis_events": len(self.mis_log), "true_events": len(self.true_log),
                "edges": int(self.adjacency.sum() - self.n_users),
                "exposed_users": int(self.exposed.sum()), "heavy_users": int(self.heavy.sum()),
                "fraction_majority_mis": float((shares > 0.5).mean()),
                "spec": None if self.spec is None else self.spec.to_dict()}

    def export(self, directory: str | Path) -> dict:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {"adjacency": directory / "adjacency.json", "events": directory / "events.csv",
                 "summary": directory / "network_summary.json"}
        save_adjacency(self.adjacency, paths["adjacency"])
        self.mis_log.merge(self.true_log).to_csv(paths["events"])
        paths["summary"].write_text(json.dumps(self.summary(), indent=2) + "\n")
        return paths


def save_adjacency(adjacency, path: str | Path) -> None:
    a = (np.asarray(adjacency) > 0).astype(int)
    Path(path).write_text(json.dumps(a.tolist()) + "\n")


def load_adjacency(path: str | Path) -> np.ndarray:
    try:
        a = np.array(json.loads(Path(path).read_text()), dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ValueError(f"{path}: not a JSON matrix ({exc})") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{path}: adjacency must be square, got shape {a.shape}")
    if not np.isin(a, (0.0, 1.0)).all():
        raise ValueError(f"{path}: adjacency must be binary")
    np.fill_diagonal(a, 1.0)
    return a


def mis_percentage(mis_log: EventLog, true_log: EventLog) -> float:
    total = len(mis_log) + len(true_log)
    if total == 0:
        raise UndefinedMetricError("misinformation percentage of two empty logs is undefined")
    return 100.0 * len(mis_log) / total


def _groups(spec: NetworkSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = spec.n_users
    exposed = np.zeros(n, dtype=bool)
    heavy = np.zeros(n, dtype=bool)
    if spec.case is Case.CASE0:
        return exposed, heavy
    k = int(round(spec.exposed_fraction * n))
    if spec.case is Case.CASE2 and spec.exposed_fraction <= 0.5:
        raise FeasibilityError("case2 needs an exposed majority (exposed_fraction > 0.5)")
    if k < 1:
        raise FeasibilityError(f"exposed_fraction {spec.exposed_fraction} leaves no exposed user among {n}")
    chosen = rng.choice(n, size=k, replace=False)
    exposed[chosen] = True
    if spec.case is Case.CASE2:
        h = max(1, int(round(spec.heavy_subset_fraction * k)))
        heavy[rng.choice(chosen, size=h, replace=False)] = True
    return exposed, heavy


def _solve_exposed_share(target: float, p_lo: float, a: np.ndarray, exposed: np.ndarray,
                         multiplier: np.ndarray) -> float:
    """Share p for exposed users such that the overall event share hits ``target``.

    Exposed user ``i`` posts ``mult_i * p * a_i`` misinformation and
    ``(1 - p) * a_i`` true events; the share is increasing in ``p``.
    """
    lo_mis = p_lo * a[~exposed].sum()
    lo_all = a[~exposed].sum()

    def share(p):
        mis = lo_mis + (multiplier[exposed] * p * a[exposed]).sum()
        true = (1 - p_lo) * lo_all + ((1 - p) * a[exposed]).sum()
        return mis / (mis + true)

    lo, hi = 0.0, 1.0
    if not share(lo) <= target <= share(hi):
        raise FeasibilityError(f"target {100 * target:.2f}% is unreachable with these group sizes")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if share(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _shares(spec: NetworkSpec, a: np.ndarray, exposed: np.ndarray, heavy: np.ndarray,
            rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-user misinformation share and misinformation multiplier."""
    target = spec.target_mis_pct / 100.0
    n = spec.n_users
    mult = np.where(heavy, spec.heavy_multiplier, 1.0)
    if spec.case is Case.CASE0:
        noise = rng.normal(0.0, spec.case0_spread, size=n)
        return np.clip(target * (1.0 + noise), 0.0, 1.0), mult
    if exposed.all():
        p_lo = 0.0
    elif spec.unexposed_share is not None:
        p_lo = spec.unexposed_share
    elif spec.case is Case.CASE2:
        p_lo = min(0.5 * target, UNEXPOSED_SHARE_MAX)
    else:
        p_lo = min(0.25 * target, UNEXPOSED_SHARE_MAX)
    if p_lo > UNEXPOSED_SHARE_MAX:
        raise FeasibilityError(f"unexposed share {p_lo} is not a minority share")
    p_e = _solve_exposed_share(target, p_lo, a, exposed, mult)
    lo, hi = EXPOSED_SHARE_RANGE
    if not lo <= p_e <= hi:
        raise FeasibilityError(
            f"{spec.case.value}: exposed users would need a {100 * p_e:.1f}% misinformation share "
            f"(allowed {100 * lo:.0f}-{100 * hi:.0f}%) to reach {spec.target_mis_pct}% overall; "
            f"adjust exposed_fraction or target_mis_pct")
    return np.where(exposed, p_e, p_lo), mult


def _homophilous_adjacency(spec: NetworkSpec, exposed: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = spec.n_users
    same = exposed[:, None] == exposed[None, :]
    np.fill_diagonal(same, False)
    n_same = same.sum()
    n_cross = n * (n - 1) - n_same
    # scale so the expected off-diagonal density equals edge_density
    p_same = spec.edge_density * n * (n - 1) / (n_same + spec.cross_group_ratio * n_cross)
    p = np.where(same, p_same, spec.cross_group_ratio * p_same)
    p = np.minimum(p, 1.0)
    a = (rng.random((n, n)) < p).astype(float)
    np.fill_diagonal(a, 1.0)
    return a


def _timestamps(rng: np.random.Generator, count: int, history: float) -> np.ndarray:
    t = np.round(rng.uniform(0.0, history, size=count), 6)
    return np.minimum(t, np.nextafter(history, 0.0))


def generate(spec: NetworkSpec) -> GeneratedNetwork:
    """Draw a network whose overall misinformation share is within 2 points of the target."""
    n = spec.n_users
    r_groups = make_rng(spec.seed, "netgen", "groups")
    exposed, heavy = _groups(spec, r_groups)
    adjacency = _homophilous_adjacency(spec, exposed, make_rng(spec.seed, "netgen", "edges"))
    r_counts = make_rng(spec.seed, "netgen", "counts")
    activity = np.maximum(r_counts.poisson(spec.activity, size=n), MIN_ACTIVITY).astype(float)
    shares, mult = _shares(spec, activity, exposed, heavy, r_counts)
    mis_counts = np.rint(mult * shares * activity).astype(np.int64)
    true_counts = np.rint((1.0 - shares) * activity).astype(np.int64)
    achieved = 100.0 * mis_counts.sum() / (mis_counts.sum() + true_counts.sum())
    if abs(achieved - spec.target_mis_pct) > 2.0:
        raise FeasibilityError(f"achieved {achieved:.2f}% misses target {spec.target_mis_pct}% by more than 2 points")

    r_times = make_rng(spec.seed, "netgen", "times")
    logs = []
    for content, counts in ((Content.MIS, mis_counts), (Content.TRUE, true_counts)):
        users = np.repeat(np.arange(n), counts)
        times = _timestamps(r_times, len(users), spec.history)
        logs.append(EventLog(times, users, np.full(len(users), content.code), horizon=spec.history, n_users=n))
    mis_log, true_log = logs
    return GeneratedNetwork(adjacency, mis_log, true_log, mis_percentage(mis_log, true_log), exposed, heavy, spec)


def ingest_csv(path: str | Path, n_users: int, horizon: float | None = None) -> tuple[EventLog, EventLog]:
    log = EventLog.from_csv(path, n_users, horizon)
    return log.of_content(Content.MIS), log.of_content(Content.TRUE)
