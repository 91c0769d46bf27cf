"""Finite-state learning automaton walking over incentive levels.

State ``k`` in ``[0, M]`` stands for the incentive ``k * step``.  From each
state the automaton may move left, stay, or move right.  Transition
probabilities are kept per state and come from reward counters: ``w`` counts
attempts of a directed move out of a state and ``v`` counts the attempts that
were rewarded.  A move with attempts has probability ``v / w``; the mass left
over is split equally between stay and any feasible move not yet tried.
Convergence means both walk probabilities at the current state have fallen
below ``epsilon``.
"""
from __future__ import annotations

from collections import Counter
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np


class Direction(IntEnum):
    LEFT = -1
    STAY = 0
    RIGHT = 1


_ORDER = (Direction.LEFT, Direction.STAY, Direction.RIGHT)


def reward(direction: Direction, slope: float, knapsack_full: int) -> int:
    """0 rewards the move, 1 penalizes it.

    A right move is penalized when the loss rises along it or the budget is
    full; a left move only when the loss rises.
    """
    direction = Direction(direction)
    if direction is Direction.RIGHT:
        return int(slope > 0 or knapsack_full == 1)
    if direction is Direction.LEFT:
        return int(slope > 0)
    raise ValueError("stay transitions are never evaluated by the environment")


class Automaton:
    def __init__(self, user_id: int, memory_depth: int, state: int = 0):
        if memory_depth <= 0:
            raise ValueError(f"memory depth must be positive, got {memory_depth}")
        if not 0 <= state <= memory_depth:
            raise ValueError(f"state {state} outside [0, {memory_depth}]")
        self.user_id = int(user_id)
        self.memory_depth = int(memory_depth)
        self.state = int(state)
        self.v: Counter = Counter()
        self.w: Counter = Counter()
        self.visits: Counter = Counter()
        self.converged = False

    def __repr__(self) -> str:
        return (f"Automaton(user_id={self.user_id}, state={self.state}/{self.memory_depth}, "
                f"converged={self.converged})")

    def feasible(self, state: int | None = None) -> list[Direction]:
        k = self.state if state is None else state
        moves = []
        if k > 0:
            moves.append(Direction.LEFT)
        if k < self.memory_depth:
            moves.append(Direction.RIGHT)
        return moves

    def transition_probabilities(self, state: int | None = None) -> np.ndarray:
        """``[P(left), P(stay), P(right)]`` out of ``state`` (default: current)."""
        k = self.state if state is None else state
        moves = self.feasible(k)
        known = {d: self.v[(k, d)] / self.w[(k, d)] for d in moves if self.w[(k, d)] > 0}
        p = dict.fromkeys(_ORDER, 0.0)
        if not known:
            share = 1.0 / (len(moves) + 1)
            for d in (*moves, Direction.STAY):
                p[d] = share
        else:
            mass = sum(known.values())
            if mass > 1.0:
                for d, e in known.items():
                    p[d] = e / mass
            else:
                p.update(known)
                open_ = [d for d in moves if d not in known] + [Direction.STAY]
                for d in open_:
                    p[d] = (1.0 - mass) / len(open_)
        return np.array([p[d] for d in _ORDER])

    @property
    def pi(self) -> np.ndarray:
        return self.transition_probabilities()

    def state_value(self, step: float) -> float:
        if not step > 0:
            raise ValueError("step must be positive")
        return self.state * step

    def propose(self, rng: np.random.Generator) -> Direction | None:
        """Sample a direction from the current state's probabilities; None once converged."""
        if self.converged:
            return None
        self.visits[self.state] += 1
        cum = np.cumsum(self.pi)
        u = rng.random() * cum[-1]
        return _ORDER[min(int(np.searchsorted(cum, u, side="right")), 2)]

    def apply_feedback(self, direction: Direction, beta: int) -> "Automaton":
        direction = Direction(direction)
        if direction is Direction.STAY:
            return self
        if direction not in self.feasible():
            raise ValueError(f"{direction.name} is infeasible from state {self.state}")
        if beta not in (0, 1):
            raise ValueError(f"beta must be 0 or 1, got {beta}")
        key = (self.state, direction)
        self.w[key] += 1
        if beta == 0:
            self.v[key] += 1
            self.state += int(direction)
        return self

    def check_convergence(self, epsilon: float = 0.01) -> bool:
        if not 0 < epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if not self.converged:
            p = self.pi
            self.converged = bool(p[0] + p[2] <= epsilon)
        return self.converged

    def occupancy(self, state: int | None = None) -> float:
        """Fraction of interaction steps spent in ``state`` (default: current)."""
        total = sum(self.visits.values())
        if total == 0:
            return 1.0
        return self.visits[self.state if state is None else state] / total

    def to_dict(self) -> dict:
        def dump(c):
            return sorted([k, int(d), n] for (k, d), n in c.items())

        return {"user_id": self.user_id, "memory_depth": self.memory_depth, "state": self.state,
                "pi": self.pi.tolist(), "v": dump(self.v), "w": dump(self.w),
                "visits": sorted([k, n] for k, n in self.visits.items()),
                "converged": self.converged}

    @classmethod
    def from_dict(cls, d: dict) -> "Automaton":
        a = cls(d["user_id"], d["memory_depth"], d["state"])
        a.v = Counter({(k, Direction(di)): n for k, di, n in d["v"]})
        a.w = Counter({(k, Direction(di)): n for k, di, n in d["w"]})
        a.visits = Counter({k: n for k, n in d.get("visits", [])})
        a.converged = bool(d["converged"])
        return a

    def __eq__(self, other) -> bool:
        if not isinstance(other, Automaton):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def joint_state_probability(automata: Sequence[Automaton],
                            history: Iterable[Sequence[int]] | None = None) -> float:
    """Chain-rule probability of the automata's current joint state.

    With ``history`` (one tuple of states per observation) each conditional
    ``P(S_k | S_1..S_{k-1})`` is estimated from prefix frequencies.  Without
    it the conditionals fall back to each automaton's marginal occupancy.
    """
    if not automata:
        return 1.0
    current = tuple(a.state for a in automata)
    if history is None:
        return float(np.prod([a.occupancy() for a in automata]))
    rows = [tuple(h) for h in history]
    if not rows:
        return 0.0
    p = 1.0
    matching = rows
    for k, s in enumerate(current):
        nxt = [r for r in matching if r[k] == s]
        if not nxt:
            return 0.0
        p *= len(nxt) / len(matching)
        matching = nxt
    return p
