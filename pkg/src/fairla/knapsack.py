"""Shared incentive budget.

Consumption is accumulated as an exact rational sum of the float deltas, so a
reserve followed by an equal release restores the ledger bit for bit and the
capacity check has no rounding slack.
"""
from __future__ import annotations

import threading
from fractions import Fraction

from .errors import BudgetUnderflowError


class BudgetLedger:
    def __init__(self, capacity: float, step: float, consumed: Fraction | float = 0):
        if not capacity > 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        if not step > 0:
            raise ValueError(f"step must be positive, got {step}")
        self.capacity = float(capacity)
        self.step = float(step)
        self._cap = Fraction(self.capacity)
        self._consumed = Fraction(consumed)
        if not 0 <= self._consumed <= self._cap:
            raise ValueError("consumed must lie in [0, capacity]")
        self._lock = threading.Lock()

    @property
    def consumed(self) -> float:
        return float(self._consumed)

    @property
    def remaining(self) -> float:
        return float(self._cap - self._consumed)

    def try_reserve(self, delta: float) -> bool:
        if not delta > 0:
            raise ValueError(f"reserve amount must be positive, got {delta}")
        d = Fraction(float(delta))
        with self._lock:
            if self._consumed + d > self._cap:
                return False
            self._consumed += d
            return True

    def release(self, delta: float) -> None:
        if not delta > 0:
            raise ValueError(f"release amount must be positive, got {delta}")
        d = Fraction(float(delta))
        with self._lock:
            if d > self._consumed:
                raise BudgetUnderflowError(f"cannot release {delta}; only {self.consumed} consumed")
            self._consumed -= d

    def full_flag(self) -> int:
        """1 when another ``step`` no longer fits."""
        return int(self._consumed + Fraction(self.step) > self._cap)

    def ratio(self) -> float:
        return float(self._consumed / self._cap)

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "consumed": self.consumed, "step": self.step,
                "consumed_exact": f"{self._consumed.numerator}/{self._consumed.denominator}"}

    @classmethod
    def from_dict(cls, d: dict) -> "BudgetLedger":
        exact = d.get("consumed_exact")
        return cls(d["capacity"], d["step"], Fraction(exact) if exact else Fraction(d["consumed"]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BudgetLedger):
            return NotImplemented
        return (self.capacity, self.step, self._consumed) == (other.capacity, other.step, other._consumed)

    def __repr__(self) -> str:
        return f"BudgetLedger(capacity={self.capacity}, consumed={self.consumed}, step={self.step})"
