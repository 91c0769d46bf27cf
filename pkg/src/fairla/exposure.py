"""Per-user misinformation / true-content impact and the exposure ratio."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ImpactTable:
    mis_impact: np.ndarray
    true_impact: np.ndarray
    realization_index: int

    def to_dict(self) -> dict:
        return {"mis_impact": self.mis_impact.tolist(), "true_impact": self.true_impact.tolist(),
                "realization_index": self.realization_index}


@dataclass(frozen=True)
class ExposureRatios:
    r: np.ndarray
    balance: float

    def __len__(self) -> int:
        return len(self.r)

    def fairly_exposed(self) -> np.ndarray:
        return self.r >= 1.0


def with_self_loops(influence) -> np.ndarray:
    """Copy of ``influence`` whose diagonal is 1 (every user influences itself)."""
    a = np.array(influence, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"influence must be square, got shape {a.shape}")
    np.fill_diagonal(a, 1.0)
    return a


def _as_realizations(counts, n: int) -> np.ndarray:
    c = np.asarray(counts, dtype=float)
    if c.ndim == 1:
        c = c[None, :]
    if c.ndim != 2 or c.shape[1] != n:
        raise ValueError(f"counts must have shape (realizations, {n}), got {np.shape(counts)}")
    return c


def accumulate_impacts(counts_mis, counts_true, influence, upto: int | None = None) -> ImpactTable:
    """Cumulative neighbor-weighted event counts up to realization ``upto`` (inclusive).

    ``counts_*[s, j]`` is the number of events user ``j`` produced in
    realization ``s``; ``influence[i, j] > 0`` means ``i`` sees ``j``'s
    content.  The diagonal is forced to 1.  Impacts are one-hop sums of raw
    neighbor counts.
    """
    a = with_self_loops(influence)
    n = a.shape[0]
    mis = _as_realizations(counts_mis, n)
    true = _as_realizations(counts_true, n)
    if mis.shape[0] != true.shape[0]:
        raise ValueError("misinformation and true-content counts cover different realizations")
    last = mis.shape[0] - 1 if upto is None else upto
    if not 0 <= last < mis.shape[0]:
        raise ValueError(f"upto={upto} outside the {mis.shape[0]} available realizations")
    return ImpactTable(a @ mis[: last + 1].sum(axis=0), a @ true[: last + 1].sum(axis=0), last)


def ratio(impacts: ImpactTable, balance: float = 1.3) -> ExposureRatios:
    """``(1 + T_i) / ((1 + F_i) * balance)``; a value of at least 1 means fairly exposed."""
    if not balance > 0:
        raise ValueError(f"balance factor must be positive, got {balance}")
    r = (1.0 + impacts.true_impact) / ((1.0 + impacts.mis_impact) * balance)
    return ExposureRatios(r, float(balance))


def mis_share(impacts: ImpactTable) -> np.ndarray:
    """Per-user misinformation fraction of total impact (0 where a user saw nothing)."""
    total = impacts.mis_impact + impacts.true_impact
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(total > 0, impacts.mis_impact / total, 0.0)
    return share
