"""Round-robin learning-automata campaign over a diffusion environment.

Every user owns an automaton over incentive levels ``0, step, ..., M*step``.
Users are visited in index order; an unconverged automaton proposes a move,
the environment is evaluated at the committed and the tentative incentive,
and the sign of the loss slope (plus the shared budget) decides the reward.
Rightward moves reserve budget before the environment is consulted.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from fractions import Fraction
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .automaton import Automaton, Direction, reward
from .diffusion import REALIZATION
from .environment import Backend, Environment, Network, make_environment
from .errors import IntegrityError
from .evaluation import RunMetrics, evaluate_incentives
from .fairness import LossReport, neighborhood, total_loss
from .knapsack import BudgetLedger
from .seeding import derive_seed, rng as make_rng

FAIR_LA = "fair_la"
UNIFORM = "uniform"
CHECKPOINT_VERSION = 1


@dataclass
class CampaignConfig:
    capacity: float = 0.06
    balance: float = 1.3
    memory_depth: int = 300
    step: float | None = None
    epsilon: float = 0.01
    backend: Backend = Backend.EXPECTED
    eval_horizon: int = 1
    window: float = REALIZATION
    loss_sample_size: int | None = None
    seed: int = 0
    max_iterations: int = 50_000
    shuffled: bool = False
    allow_unstable: bool = False

    def __post_init__(self):
        self.backend = Backend(self.backend)
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if int(self.memory_depth) != self.memory_depth or self.memory_depth <= 0:
            raise ValueError(f"memory_depth must be a positive integer, got {self.memory_depth}")
        self.memory_depth = int(self.memory_depth)
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")
        if not self.balance > 0:
            raise ValueError(f"balance must be positive, got {self.balance}")
        if self.step is None:
            self.step = self.capacity / self.memory_depth
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.eval_horizon < 1 or self.max_iterations < 1:
            raise ValueError("eval_horizon and max_iterations must be at least 1")
        if not self.window > 0:
            raise ValueError("window must be positive")
        if self.loss_sample_size is not None and self.loss_sample_size < 1:
            raise ValueError(f"loss_sample_size must be at least 1, got {self.loss_sample_size}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["backend"] = self.backend.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        return cls(**d)

    def environment(self, network: Network) -> Environment:
        return make_environment(network, self.backend, eval_horizon=self.eval_horizon, window=self.window,
                                balance=self.balance, allow_unstable=self.allow_unstable)


@dataclass
class CampaignResult:
    method: str
    incentives: np.ndarray
    per_user_states: np.ndarray
    loss_trajectory: list
    consumption: float
    iterations: int
    converged: bool
    metrics: RunMetrics | None
    config: CampaignConfig
    ledger: BudgetLedger
    steps: int = 0
    final_loss: LossReport | None = None
    network: str = "network"
    wall_time_seconds: float = 0.0
    complete: bool = True

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {"method": self.method, "network": self.network, "config": self.config.to_dict(),
             "incentives": self.incentives.tolist(), "per_user_states": self.per_user_states.tolist(),
             "loss_trajectory": list(self.loss_trajectory), "consumption": self.consumption,
             "ledger": self.ledger.to_dict(), "iterations": self.iterations, "steps": self.steps,
             "converged": self.converged, "complete": self.complete,
             "final_loss": None if self.final_loss is None else self.final_loss.to_dict(),
             "metrics": None if self.metrics is None else self.metrics.to_dict(include_timing)}
        if include_timing:
            d["wall_time"] = self.wall_time_seconds
        return d

    def save(self, path: str | Path, include_timing: bool = False) -> None:
        Path(path).write_text(json.dumps(self.to_dict(include_timing), indent=2) + "\n")


@dataclass(eq=False)
class _State:
    """Everything that must survive a checkpoint."""

    config: CampaignConfig
    automata: list
    ledger: BudgetLedger
    rng: np.random.Generator
    sample_rng: np.random.Generator
    sweep: int = 0
    steps: int = 0
    trajectory: list = field(default_factory=list)
    fingerprint: str = ""

    @property
    def states(self) -> np.ndarray:
        return np.array([a.state for a in self.automata], dtype=np.int64)

    def incentives(self) -> np.ndarray:
        return self.states * self.config.step

    def n_converged(self) -> int:
        return sum(a.converged for a in self.automata)

    def to_dict(self) -> dict:
        return {"version": CHECKPOINT_VERSION, "config": self.config.to_dict(), "network": self.fingerprint,
                "sweep": self.sweep, "steps": self.steps, "automata": [a.to_dict() for a in self.automata],
                "ledger": self.ledger.to_dict(), "rng": self.rng.bit_generator.state,
                "sample_rng": self.sample_rng.bit_generator.state, "trajectory": self.trajectory}

    @classmethod
    def from_dict(cls, d: dict) -> "_State":
        if d.get("version") != CHECKPOINT_VERSION:
            raise IntegrityError(f"unsupported checkpoint version {d.get('version')}")
        config = CampaignConfig.from_dict(d["config"])
        rng, sample_rng = np.random.default_rng(), np.random.default_rng()
        rng.bit_generator.state = d["rng"]
        sample_rng.bit_generator.state = d["sample_rng"]
        return cls(config, [Automaton.from_dict(a) for a in d["automata"]], BudgetLedger.from_dict(d["ledger"]),
                   rng, sample_rng, d["sweep"], d["steps"], list(d["trajectory"]), d["network"])


def _canonical(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def save_checkpoint(state: _State, path: str | Path) -> Path:
    payload = state.to_dict()
    doc = {"sha256": hashlib.sha256(_canonical(payload)).hexdigest(), "payload": payload}
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc))
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str | Path) -> _State:
    try:
        doc = json.loads(Path(path).read_text())
        payload, digest = doc["payload"], doc["sha256"]
    except (json.JSONDecodeError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise IntegrityError(f"{path}: unreadable checkpoint ({exc})") from exc
    if hashlib.sha256(_canonical(payload)).hexdigest() != digest:
        raise IntegrityError(f"{path}: checkpoint content hash mismatch")
    try:
        return _State.from_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"{path}: malformed checkpoint payload ({exc})") from exc


RewardFn = Callable[[Direction, float, int], int]


class _Runner:
    def __init__(self, network: Network, state: _State, env: Environment | None = None,
                 reward_fn: RewardFn | None = None):
        self.network = network
        self.state = state
        self.config = state.config
        self.env = env if env is not None else self.config.environment(network)
        self.reward_fn = reward_fn or reward
        n = network.n_users
        self.neighbors = [neighborhood(i, network.adjacency) for i in range(n)]
        s = self.config.loss_sample_size
        if s is not None and not 1 <= s <= n:
            raise ValueError(f"loss_sample_size must lie in [1, {n}], got {s}")
        self.x = state.incentives()

    def _scope(self, user: int) -> np.ndarray:
        nb = self.neighbors[user]
        s = self.config.loss_sample_size
        if s is None:
            return nb
        sample = np.zeros(self.network.n_users, dtype=bool)
        sample[self.state.sample_rng.choice(self.network.n_users, size=s, replace=False)] = True
        keep = sample[nb]
        keep[0] = True  # the user's own ratio always enters its loss
        return nb[keep]

    def _slope(self, user: int, delta: float, seed: int) -> float:
        scope = self._scope(user)
        before = self.env.scope_ratios(self.x, scope, seed)
        tentative = self.x.copy()
        tentative[user] += delta
        after = self.env.scope_ratios(tentative, scope, seed)
        return (float(((1.0 - after) ** 2).sum()) - float(((1.0 - before) ** 2).sum())) / self.config.step

    def _fits(self, user: int) -> bool:
        # exact float guard on top of the ledger's rational bookkeeping
        x = self.x.copy()
        x[user] += self.config.step
        return math.fsum(x) <= self.config.capacity

    def step_user(self, user: int) -> None:
        st, cfg = self.state, self.config
        a = st.automata[user]
        direction = a.propose(st.rng)
        st.steps += 1
        if direction is None or direction is Direction.STAY:
            a.check_convergence(cfg.epsilon)
            return
        seed = derive_seed(cfg.seed, "env", user, st.sweep)
        if direction is Direction.RIGHT:
            if st.ledger.try_reserve(cfg.step):
                if self._fits(user):
                    beta = self.reward_fn(direction, self._slope(user, cfg.step, seed), 0)
                else:
                    beta = self.reward_fn(direction, 0.0, 1)
                if beta:
                    st.ledger.release(cfg.step)
            else:
                beta = self.reward_fn(direction, 0.0, 1)
        else:
            beta = self.reward_fn(direction, self._slope(user, -cfg.step, seed), st.ledger.full_flag())
            if not beta:
                st.ledger.release(cfg.step)
        a.apply_feedback(direction, beta)
        self.x[user] = a.state * cfg.step
        a.check_convergence(cfg.epsilon)

    def record_loss(self) -> None:
        st, cfg = self.state, self.config
        seed = derive_seed(cfg.seed, "trajectory", st.sweep)
        ratios = self.env.ratios(self.x, seed)
        subset = None
        if cfg.loss_sample_size is not None:
            subset = st.sample_rng.choice(self.network.n_users, size=cfg.loss_sample_size, replace=False)
        report = total_loss(ratios, self.network.adjacency, subset)
        st.trajectory.append({"iteration": st.sweep, "total": report.total, "normalized": report.normalized,
                              "terms": report.terms})

    def order(self) -> np.ndarray:
        n = self.network.n_users
        return self.state.rng.permutation(n) if self.config.shuffled else np.arange(n)

    def done(self) -> bool:
        return all(a.converged for a in self.state.automata) or self.state.sweep >= self.config.max_iterations

    def loop(self, checkpoint: str | Path | None, checkpoint_every: int, stop_after: int | None,
             observer: Callable | None) -> bool:
        st = self.state
        if not st.trajectory:
            self.record_loss()
        swept = 0
        while not self.done():
            if stop_after is not None and swept >= stop_after:
                if checkpoint is not None:
                    save_checkpoint(st, checkpoint)
                return False
            for user in self.order():
                if not st.automata[user].converged:
                    self.step_user(int(user))
            st.sweep += 1
            swept += 1
            self.record_loss()
            if observer is not None:
                observer(self)
            if checkpoint is not None and checkpoint_every and st.sweep % checkpoint_every == 0:
                save_checkpoint(st, checkpoint)
        if checkpoint is not None:
            save_checkpoint(st, checkpoint)
        return True


def _fresh_state(network: Network, config: CampaignConfig) -> _State:
    m = config.memory_depth
    return _State(config, [Automaton(i, m) for i in range(network.n_users)],
                  BudgetLedger(config.capacity, config.step), make_rng(config.seed, "automata"),
                  make_rng(config.seed, "loss-sample"), fingerprint=network.fingerprint())


def _finish(runner: _Runner, method: str, complete: bool, elapsed: float) -> CampaignResult:
    st, cfg, env = runner.state, runner.config, runner.env
    x = st.incentives()
    seed = derive_seed(cfg.seed, "evaluate")
    metrics = evaluate_incentives(env, x, st.ledger.ratio(), seed, elapsed) if complete else None
    final = total_loss(env.ratios(x, seed), runner.network.adjacency)
    return CampaignResult(method, x, st.states, st.trajectory, st.ledger.ratio(), st.sweep,
                          all(a.converged for a in st.automata), metrics, cfg, st.ledger, st.steps, final,
                          runner.network.name, elapsed, complete)


def _check_network(network: Network) -> None:
    if network.mis_model.n_users != network.true_model.n_users:
        raise ValueError("misinformation and true-content models have different sizes")


def run(network: Network, config: CampaignConfig, *, checkpoint: str | Path | None = None,
        checkpoint_every: int = 0, stop_after: int | None = None, reward_fn: RewardFn | None = None,
        observer: Callable | None = None, env: Environment | None = None) -> CampaignResult:
    """Run the automata network until every automaton converged or ``max_iterations`` sweeps.

    ``stop_after`` ends the run after that many sweeps (writing ``checkpoint``
    if given) and returns an incomplete result, which :func:`resume` continues.
    """
    _check_network(network)
    t0 = time.perf_counter()
    runner = _Runner(network, _fresh_state(network, config), env, reward_fn)
    complete = runner.loop(checkpoint, checkpoint_every, stop_after, observer)
    return _finish(runner, FAIR_LA, complete, time.perf_counter() - t0)


def run_sampled_loss(network: Network, config: CampaignConfig, **kwargs) -> CampaignResult:
    if config.loss_sample_size is None:
        raise ValueError("run_sampled_loss needs config.loss_sample_size")
    if not 1 <= config.loss_sample_size <= network.n_users:
        raise ValueError(f"loss_sample_size must lie in [1, {network.n_users}], got {config.loss_sample_size}")
    return run(network, config, **kwargs)


def checkpoint(runner_or_state, path: str | Path) -> Path:
    state = runner_or_state.state if isinstance(runner_or_state, _Runner) else runner_or_state
    return save_checkpoint(state, path)


def resume(path: str | Path, network: Network, *, checkpoint_every: int = 0, stop_after: int | None = None,
           reward_fn: RewardFn | None = None, observer: Callable | None = None,
           env: Environment | None = None) -> CampaignResult:
    """Continue a campaign from a checkpoint; the same file is updated as the run proceeds."""
    state = load_checkpoint(path)
    if state.fingerprint != network.fingerprint():
        raise IntegrityError(f"{path}: checkpoint was written for a different network")
    t0 = time.perf_counter()
    runner = _Runner(network, state, env, reward_fn)
    complete = runner.loop(path, checkpoint_every, stop_after, observer)
    return _finish(runner, FAIR_LA, complete, time.perf_counter() - t0)


def uniform_baseline(network: Network, config: CampaignConfig, env: Environment | None = None) -> CampaignResult:
    """Every user gets ``capacity / N``; no learning."""
    _check_network(network)
    t0 = time.perf_counter()
    n = network.n_users
    share = config.capacity / n
    # C / N can round up; step down until N shares fit exactly
    while Fraction(share) * n > Fraction(config.capacity):
        share = float(np.nextafter(share, 0.0))
    ledger = BudgetLedger(config.capacity, config.step)
    for _ in range(n):
        if not ledger.try_reserve(share):
            raise AssertionError("uniform shares exceeded capacity")
    x = np.full(n, share)
    env = env if env is not None else config.environment(network)
    seed = derive_seed(config.seed, "evaluate")
    ratios = env.ratios(x, seed)
    final = total_loss(ratios, network.adjacency)
    trajectory = [{"iteration": 0, "total": final.total, "normalized": final.normalized, "terms": final.terms}]
    elapsed = time.perf_counter() - t0
    metrics = evaluate_incentives(env, x, ledger.ratio(), seed, elapsed)
    return CampaignResult(UNIFORM, x, x / config.step, trajectory, ledger.ratio(), 0, True, metrics, config,
                          ledger, 0, final, network.name, elapsed, True)
