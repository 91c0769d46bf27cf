"""Diffusion environment the automata interact with.

A :class:`Network` bundles the two fitted Hawkes models, the binary influence
graph used for impacts, and the observed history.  An environment turns an
incentive vector into per-realization event counts over the evaluation
horizon, either in expectation (deterministic, history frozen) or by
simulation.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .diffusion import (REALIZATION, Content, EventLog, HawkesModel, Realization, expected_counts,
                        fit_mle, simulate)
from .exposure import ExposureRatios, ImpactTable, accumulate_impacts, mis_share, ratio, with_self_loops
from .seeding import derive_seed


class Backend(str, Enum):
    EXPECTED = "expected"
    SAMPLED = "sampled"


@dataclass(eq=False)
class Network:
    mis_model: HawkesModel
    true_model: HawkesModel
    adjacency: np.ndarray
    history: EventLog | None = None
    origin: float | None = None
    name: str = "network"

    def __post_init__(self):
        if self.mis_model.n_users != self.true_model.n_users:
            raise ValueError("misinformation and true-content models have different sizes")
        if self.mis_model.content is not Content.MIS or self.true_model.content is not Content.TRUE:
            raise ValueError("models must be (misinformation, true content) in that order")
        self.adjacency = with_self_loops((np.asarray(self.adjacency) > 0).astype(float))
        n = self.n_users
        if self.adjacency.shape != (n, n):
            raise ValueError(f"adjacency must be {n}x{n}, got {self.adjacency.shape}")
        if self.history is not None and self.history.n_users != n:
            raise ValueError("history and models disagree on n_users")
        if self.origin is None:
            self.origin = self.history.horizon if self.history is not None else 0.0
        self.origin = float(self.origin)

    @property
    def n_users(self) -> int:
        return self.mis_model.n_users

    @classmethod
    def fit(cls, adjacency, mis_log: EventLog, true_log: EventLog, *, mis_decay: float = 0.7,
            true_decay: float = 1.0, name: str = "network", **fit_kwargs) -> "Network":
        n = mis_log.n_users
        mis = fit_mle(mis_log, mis_decay, n, content=Content.MIS, **fit_kwargs)
        true = fit_mle(true_log, true_decay, n, content=Content.TRUE, **fit_kwargs)
        history = mis_log.merge(true_log)
        return cls(mis, true, adjacency, history, name=name)

    def fingerprint(self) -> str:
        payload = {"mis": self.mis_model.to_dict(), "true": self.true_model.to_dict(),
                   "adjacency": self.adjacency.astype(int).tolist(), "origin": self.origin,
                   "history": None if self.history is None else
                   [self.history.times.tolist(), self.history.users.tolist(), self.history.contents.tolist()]}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


class Environment:
    """Maps incentives to realization counts; subclasses choose the backend."""

    def __init__(self, network: Network, *, eval_horizon: int = 1, window: float = REALIZATION,
                 balance: float = 1.3):
        if eval_horizon < 1:
            raise ValueError("eval_horizon must be at least one realization")
        self.network = network
        self.balance = balance
        self.window = float(window)
        self.realizations = [Realization.after(network.origin, r, window) for r in range(eval_horizon)]
        self.adjacency = network.adjacency

    def counts(self, incentives, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def impacts(self, incentives, seed: int = 0) -> ImpactTable:
        mis, true = self.counts(incentives, seed)
        return accumulate_impacts(mis, true, self.adjacency)

    def ratios(self, incentives, seed: int = 0) -> ExposureRatios:
        return ratio(self.impacts(incentives, seed), self.balance)

    def scope_ratios(self, incentives, scope: np.ndarray, seed: int = 0) -> np.ndarray:
        """Exposure ratios of the ``scope`` users only."""
        mis, true = self.counts(incentives, seed)
        rows = self.adjacency[scope]
        f = rows @ mis.sum(axis=0)
        t = rows @ true.sum(axis=0)
        return (1.0 + t) / ((1.0 + f) * self.balance)

    def mis_share(self, incentives, seed: int = 0) -> float:
        """Network misinformation share in percent: mean over users of F_i / (F_i + T_i)."""
        return 100.0 * float(mis_share(self.impacts(incentives, seed)).mean())


class ExpectedEnvironment(Environment):
    def __init__(self, network: Network, **kwargs):
        super().__init__(network, **kwargs)
        zero = np.zeros(network.n_users)
        self._mis = np.array([expected_counts(network.mis_model, zero, r, network.history)
                              for r in self.realizations])
        self._true_base = np.array([expected_counts(network.true_model, zero, r, network.history)
                                    for r in self.realizations])
        self._mis_total = self._mis.sum(axis=0)
        self._true_base_total = self._true_base.sum(axis=0)
        self._span = self.window * len(self.realizations)

    def counts(self, incentives, seed: int = 0):
        x = np.asarray(incentives, dtype=float)
        return self._mis.copy(), self._true_base + x[None, :] * self.window

    def scope_ratios(self, incentives, scope, seed: int = 0):
        rows = self.adjacency[scope]
        f = rows @ self._mis_total
        t = rows @ (self._true_base_total + np.asarray(incentives, dtype=float) * self._span)
        return (1.0 + t) / ((1.0 + f) * self.balance)


class SampledEnvironment(Environment):
    """Counts from thinning simulations started at the network origin.

    Both content types are drawn from streams derived from ``seed``, so two
    calls with the same seed differ only through the incentives (and the
    coupled thinning makes that difference monotone).
    """

    def __init__(self, network: Network, allow_unstable: bool = False, **kwargs):
        super().__init__(network, **kwargs)
        self.allow_unstable = allow_unstable
        self._edges = np.array([r.start for r in self.realizations] + [self.realizations[-1].end])

    def _binned(self, log: EventLog) -> np.ndarray:
        n = self.network.n_users
        out = np.zeros((len(self.realizations), n))
        idx = np.searchsorted(self._edges, log.times, side="right") - 1
        np.add.at(out, (idx, log.users), 1.0)
        return out

    def counts(self, incentives, seed: int = 0):
        net = self.network
        end = self._edges[-1]
        mis = simulate(net.mis_model, None, end, derive_seed(seed, "mis"), history=net.history,
                       start=net.origin, allow_unstable=self.allow_unstable)
        true = simulate(net.true_model, incentives, end, derive_seed(seed, "true"), history=net.history,
                        start=net.origin, allow_unstable=self.allow_unstable)
        return self._binned(mis), self._binned(true)


def make_environment(network: Network, backend: Backend | str = Backend.EXPECTED, **kwargs) -> Environment:
    backend = Backend(backend)
    if backend is Backend.EXPECTED:
        kwargs.pop("allow_unstable", None)
        return ExpectedEnvironment(network, **kwargs)
    return SampledEnvironment(network, **kwargs)
