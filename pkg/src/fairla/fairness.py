"""Fairness loss over exposure ratios.

The local loss of user ``i`` sums ``(1 - R_j)^2`` over ``i`` itself and every
user ``j`` that ``i`` influences (``adjacency[j, i] > 0``), i.e. the users
whose ratio moves when ``i``'s incentive changes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exposure import ExposureRatios


@dataclass(frozen=True)
class LossReport:
    per_user: np.ndarray
    total: float
    normalized: float
    users: np.ndarray | None = None  # None means all users, in index order
    terms: int = 0

    def to_dict(self, include_per_user: bool = True) -> dict:
        d = {"total": self.total, "normalized": self.normalized, "terms": self.terms}
        if include_per_user:
            d["per_user"] = self.per_user.tolist()
            if self.users is not None:
                d["users"] = self.users.tolist()
        return d


def neighborhood(user: int, adjacency) -> np.ndarray:
    """``user`` followed by the users it influences."""
    a = np.asarray(adjacency)
    n = a.shape[0]
    if not 0 <= user < n:
        raise IndexError(f"user {user} out of range [0, {n})")
    out = np.flatnonzero(a[:, user] > 0)
    return np.concatenate([[user], out[out != user]]).astype(np.int64)


def _r(ratios) -> np.ndarray:
    return ratios.r if isinstance(ratios, ExposureRatios) else np.asarray(ratios, dtype=float)


def local_loss(user: int, ratios: ExposureRatios, adjacency) -> float:
    r = _r(ratios)
    terms = r[neighborhood(user, adjacency)]
    return float(((1.0 - terms) ** 2).sum())


def total_loss(ratios: ExposureRatios, adjacency, subset=None) -> LossReport:
    """Sum of local losses over all users, or over ``subset``.

    ``normalized`` is the mean over every (user, neighbor) term of
    ``min((1 - R_j)^2, 1)``, so it lies in [0, 1] whatever the network size.
    """
    r = _r(ratios)
    a = np.asarray(adjacency) > 0
    n = len(r)
    if a.shape != (n, n):
        raise ValueError(f"adjacency must be {n}x{n}")
    if subset is None:
        users = np.arange(n)
    else:
        users = np.unique(np.asarray(subset, dtype=np.int64))
        if len(users) == 0:
            raise ValueError("loss subset must be nonempty")
        if users.min() < 0 or users.max() >= n:
            raise IndexError("loss subset contains out-of-range users")
    # deviation terms per user; column i of `scope` marks i's neighborhood
    dev = (1.0 - r) ** 2
    scope = a[:, users].copy()
    scope[users, np.arange(len(users))] = True
    per_user = dev @ scope
    clamped = np.minimum(dev, 1.0) @ scope
    terms = int(scope.sum())
    total = float(per_user.sum())
    return LossReport(per_user=per_user, total=total, normalized=float(clamped.sum() / terms),
                      users=None if subset is None else users, terms=terms)
