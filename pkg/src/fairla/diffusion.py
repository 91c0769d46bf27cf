"""Multivariate Hawkes processes with an exponential kernel.

The conditional intensity of user ``i`` is

    lambda_i(t) = x_i + mu_i + sum_{t_s < t} A[i, u_s] * exp(-w (t - t_s))

where ``A[i, j] > 0`` means user ``i`` is influenced by user ``j`` and ``x`` is
an optional additive incentive on the base rate.  Times are in seconds: the
default realization window is two hours (7200 s) and the default training
history is eight hours.
"""
from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, FitError, ParseError, SchemaError, StabilityError

HOUR = 3600.0
REALIZATION = 2 * HOUR
TRAIN_WINDOW = 8 * HOUR
MIS_DECAY = 0.7
TRUE_DECAY = 1.0
ERROR_BASELINE = 5.0

CSV_HEADER = ("user_id", "timestamp", "content")


class Content(str, Enum):
    MIS = "mis"
    TRUE = "true"

    @property
    def code(self) -> int:
        return 0 if self is Content.MIS else 1

    @classmethod
    def from_code(cls, code: int) -> "Content":
        return cls.MIS if int(code) == 0 else cls.TRUE


@dataclass(frozen=True)
class Event:
    user_id: int
    timestamp: float
    content: Content = Content.MIS


class EventLog:
    """Time-sorted events over ``[0, horizon]`` for ``n_users`` users.

    Stored column-wise; iteration yields :class:`Event` objects.  Ties in
    timestamp keep their input order.
    """

    def __init__(self, times, users, contents=None, *, horizon: float, n_users: int):
        times = np.asarray(times, dtype=float).reshape(-1)
        users = np.asarray(users, dtype=np.int64).reshape(-1)
        if contents is None:
            contents = np.zeros(len(times), dtype=np.int8)
        else:
            arr = np.asarray(contents)
            if arr.dtype.kind in "iu":
                contents = arr.astype(np.int8).reshape(-1)
            else:
                contents = np.array([_content_code(c) for c in arr.reshape(-1)], dtype=np.int8)
        if not (len(times) == len(users) == len(contents)):
            raise ValueError("times, users and contents must have equal length")
        if horizon <= 0:
            raise ValueError(f"horizon must be positive, got {horizon}")
        if n_users <= 0:
            raise ValueError(f"n_users must be positive, got {n_users}")
        if len(times):
            if times.min() < 0 or times.max() > horizon:
                raise ValueError("event timestamps must lie in [0, horizon]")
            if users.min() < 0 or users.max() >= n_users:
                raise ValueError(f"user ids must lie in [0, {n_users})")
        order = np.argsort(times, kind="stable")
        self.times = times[order]
        self.users = users[order]
        self.contents = contents[order]
        self.horizon = float(horizon)
        self.n_users = int(n_users)

    @classmethod
    def from_events(cls, events: Iterable[Event], *, horizon: float, n_users: int) -> "EventLog":
        events = list(events)
        return cls([e.timestamp for e in events], [e.user_id for e in events],
                   np.array([Content(e.content).code for e in events], dtype=np.int8),
                   horizon=horizon, n_users=n_users)

    @classmethod
    def empty(cls, *, horizon: float, n_users: int) -> "EventLog":
        return cls([], [], horizon=horizon, n_users=n_users)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[Event]:
        for t, u, c in zip(self.times, self.users, self.contents):
            yield Event(int(u), float(t), Content.from_code(c))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return (self.n_users == other.n_users and self.horizon == other.horizon
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.users, other.users)
                and np.array_equal(self.contents, other.contents))

    def __repr__(self) -> str:
        return f"EventLog(n_events={len(self)}, n_users={self.n_users}, horizon={self.horizon})"

    def _subset(self, mask, horizon=None) -> "EventLog":
        return EventLog(self.times[mask], self.users[mask], self.contents[mask],
                        horizon=self.horizon if horizon is None else horizon, n_users=self.n_users)

    def of_content(self, content: Content | str) -> "EventLog":
        return self._subset(self.contents == _content_code(content))

    def before(self, t: float) -> "EventLog":
        """Events strictly earlier than ``t``; the horizon becomes ``t``."""
        return self._subset(self.times < t, horizon=t)

    def window(self, start: float, end: float) -> "EventLog":
        """Events in ``[start, end)``, keeping absolute timestamps."""
        return self._subset((self.times >= start) & (self.times < end), horizon=max(end, self.horizon))

    def counts(self, start: float = 0.0, end: float | None = None) -> np.ndarray:
        end = self.horizon if end is None else end
        mask = (self.times >= start) & (self.times < end)
        if end >= self.horizon:
            mask |= self.times == self.horizon
        return np.bincount(self.users[mask], minlength=self.n_users).astype(float)

    def merge(self, other: "EventLog") -> "EventLog":
        if other.n_users != self.n_users:
            raise ValueError("cannot merge logs with different n_users")
        return EventLog(np.concatenate([self.times, other.times]),
                        np.concatenate([self.users, other.users]),
                        np.concatenate([self.contents, other.contents]),
                        horizon=max(self.horizon, other.horizon), n_users=self.n_users)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for t, u, c in zip(self.times, self.users, self.contents):
                writer.writerow((int(u), f"{t:.6f}", Content.from_code(c).value))

    @classmethod
    def from_csv(cls, path: str | Path, n_users: int, horizon: float | None = None) -> "EventLog":
        times, users, contents = [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
                raise SchemaError(f"expected header {','.join(CSV_HEADER)}, got {header}", line=1)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
                try:
                    user = int(row[0])
                    t = float(row[1])
                except ValueError as exc:
                    raise ParseError(str(exc), line=lineno) from None
                tag = row[2].strip()
                if tag not in (Content.MIS.value, Content.TRUE.value):
                    raise SchemaError(f"unknown content tag {tag!r}", line=lineno)
                if not 0 <= user < n_users:
                    raise ParseError(f"user_id {user} outside [0, {n_users})", line=lineno)
                if not (t >= 0 and math.isfinite(t)):
                    raise ParseError(f"invalid timestamp {row[1]!r}", line=lineno)
                times.append(t)
                users.append(user)
                contents.append(Content(tag).code)
        if horizon is None:
            if not times:
                raise ParseError("empty event file and no horizon given")
            horizon = max(times)
        if times and max(times) > horizon:
            raise ParseError(f"timestamp {max(times)} beyond horizon {horizon}")
        return cls(times, users, np.array(contents, dtype=np.int8), horizon=horizon, n_users=n_users)


def _content_code(c) -> int:
    if isinstance(c, (int, np.integer)):
        return int(c)
    return Content(c).code


@dataclass(frozen=True)
class Realization:
    """Evaluation window ``[start, end)``; ``index`` counts windows from an origin."""

    index: int
    start: float
    end: float

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("realization end must exceed start")
        if self.index < 0:
            raise ValueError("realization index must be nonnegative")

    @property
    def length(self) -> float:
        return self.end - self.start

    @classmethod
    def after(cls, origin: float, index: int, length: float = REALIZATION) -> "Realization":
        return cls(index, origin + index * length, origin + (index + 1) * length)


@dataclass(eq=False)
class HawkesModel:
    mu: np.ndarray
    influence: np.ndarray
    decay: float
    content: Content = Content.MIS

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).reshape(-1)
        self.influence = np.asarray(self.influence, dtype=float)
        self.content = Content(self.content)
        n = len(self.mu)
        if self.influence.shape != (n, n):
            raise ValueError(f"influence must be {n}x{n}, got {self.influence.shape}")
        if not self.decay > 0:
            raise ValueError(f"decay must be positive, got {self.decay}")
        if (self.mu < 0).any() or (self.influence < 0).any():
            raise ValueError("base intensities and influence entries must be nonnegative")
        self.decay = float(self.decay)

    @property
    def n_users(self) -> int:
        return len(self.mu)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HawkesModel):
            return NotImplemented
        return (self.decay == other.decay and self.content == other.content
                and np.array_equal(self.mu, other.mu)
                and np.array_equal(self.influence, other.influence))

    def spectral_radius(self, iterations: int = 100) -> float:
        return spectral_radius(self.influence / self.decay, iterations)

    def is_stable(self) -> bool:
        return self.spectral_radius() < 1.0

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "influence": self.influence.tolist(),
                "decay": self.decay, "content": self.content.value}

    @classmethod
    def from_dict(cls, d: Mapping) -> "HawkesModel":
        return cls(np.array(d["mu"], dtype=float), np.array(d["influence"], dtype=float),
                   float(d["decay"]), Content(d.get("content", "mis")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "HawkesModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def spectral_radius(matrix: np.ndarray, iterations: int = 100) -> float:
    """Perron root of a nonnegative matrix by power iteration.

    Iterates on ``M + I`` so periodic (imprimitive) matrices still converge;
    the shift is removed from the estimate.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if n == 0 or not m.any():
        return 0.0
    shifted = m + np.eye(n)
    v = np.ones(n) / n
    estimate = 1.0
    for _ in range(iterations):
        nxt = shifted @ v
        norm = nxt.sum()
        estimate = norm / v.sum()
        v = nxt / norm
    return max(float(estimate) - 1.0, 0.0)


def _incentive_vector(incentives, n: int) -> np.ndarray:
    if incentives is None:
        return np.zeros(n)
    x = np.asarray(incentives, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise ValueError(f"incentive vector must have length {n}, got {x.shape}")
    if (x < 0).any():
        raise ValueError("incentives must be nonnegative")
    return x


def _matching(model: HawkesModel, history: EventLog | None, before: float) -> tuple[np.ndarray, np.ndarray]:
    if history is None or len(history) == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if history.n_users != model.n_users:
        raise ValueError("history and model disagree on n_users")
    mask = (history.contents == model.content.code) & (history.times < before)
    return history.times[mask], history.users[mask]


def intensity(model: HawkesModel, incentives, user: int, t: float, history: EventLog | None = None) -> float:
    """Conditional intensity of ``user`` at time ``t`` given earlier events of the model's content."""
    if not 0 <= user < model.n_users:
        raise IndexError(f"user {user} out of range [0, {model.n_users})")
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = _incentive_vector(incentives, model.n_users)
    times, users = _matching(model, history, t)
    kernel = model.influence[user, users] * np.exp(-model.decay * (t - times))
    return float(x[user] + model.mu[user] + kernel.sum())


def _excitation_at(model: HawkesModel, history: EventLog | None, t: float) -> np.ndarray:
    times, users = _matching(model, history, t)
    if len(times) == 0:
        return np.zeros(model.n_users)
    decayed = np.bincount(users, weights=np.exp(-model.decay * (t - times)), minlength=model.n_users)
    return model.influence @ decayed


class _Band:
    """One horizontal strip ``[lo, lo + width)`` of a user's Poisson embedding.

    Candidate points arrive at rate ``width`` in time, each carrying a height
    uniform in the strip.  The stream depends only on (seed, user, band), so
    the same candidates are seen whatever the process intensity is.
    """

    CHUNK = 64
    __slots__ = ("rng", "width", "lo", "t", "times", "heights", "pos")

    def __init__(self, seed: int, user: int, band: int, width: float, origin: float):
        self.rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(user, band)))
        self.width = width
        self.lo = band * width
        self.t = origin
        self.times = self.heights = ()
        self.pos = 0

    def next(self) -> tuple[float, float]:
        if self.pos == len(self.times):
            gaps = self.rng.exponential(1.0 / self.width, self.CHUNK)
            heights = self.rng.random(self.CHUNK)
            times = self.t + np.cumsum(gaps)
            self.t = float(times[-1])
            self.times = times.tolist()
            self.heights = (self.lo + self.width * heights).tolist()
            self.pos = 0
        i = self.pos
        self.pos += 1
        return self.times[i], self.heights[i]


def _band_widths(model: HawkesModel, band_width) -> np.ndarray:
    if band_width is not None:
        widths = np.broadcast_to(np.asarray(band_width, dtype=float), (model.n_users,)).copy()
        if (widths <= 0).any():
            raise ValueError("band_width must be positive")
        return widths
    positive = model.mu[model.mu > 0]
    fallback = float(positive.mean()) if len(positive) else 1.0
    return np.where(model.mu > 0, model.mu, fallback)


def simulate(model: HawkesModel, incentives=None, horizon: float = REALIZATION, seed: int = 0, *,
             history: EventLog | None = None, start: float = 0.0, allow_unstable: bool = False,
             band_width=None, max_events: int | None = None) -> EventLog:
    """Draw events on ``[start, horizon)`` by thinning.

    Each user's candidates come from a fixed Poisson embedding cut into strips
    of height ``band_width`` (default: the user's base rate).  Strips are
    opened lazily whenever the intensity, recomputed after every accepted
    event, rises above the covered height, and a candidate at height ``u`` is
    kept iff ``u < lambda_i(t-)``.  Because the candidate stream does not
    depend on the intensity, raising any incentive can only add events.

    ``history`` (events of this model's content before ``start``) seeds the
    excitation.  The returned log holds only the newly drawn events.
    """
    if not horizon > start:
        raise ValueError(f"horizon must exceed start ({start}), got {horizon}")
    if not allow_unstable:
        radius = model.spectral_radius()
        if radius >= 1.0:
            raise StabilityError(radius)
    n = model.n_users
    base = model.mu + _incentive_vector(incentives, n)
    widths = _band_widths(model, band_width)
    excitation = _excitation_at(model, history, start)
    decay = model.decay
    columns = [np.flatnonzero(model.influence[:, j]) for j in range(n)]
    seed = int(seed)

    heap: list = []
    opened = [0] * n

    def open_bands(i: int, now: float) -> None:
        level = base[i] + excitation[i]
        while opened[i] * widths[i] < level:
            band = _Band(seed, i, opened[i], float(widths[i]), start)
            tc, u = band.next()
            while tc <= now:
                tc, u = band.next()
            heapq.heappush(heap, (tc, i, opened[i], u, band))
            opened[i] += 1

    for i in range(n):
        open_bands(i, start)

    out_t: list[float] = []
    out_u: list[int] = []
    now = start
    while heap:
        tc, i, k, u, band = heapq.heappop(heap)
        if tc >= horizon:
            break
        if tc > now:
            excitation *= math.exp(-decay * (tc - now))
            now = tc
        if u < base[i] + excitation[i]:
            out_t.append(tc)
            out_u.append(i)
            if max_events is not None and len(out_t) > max_events:
                raise RuntimeError(f"simulation exceeded max_events={max_events}")
            targets = columns[i]
            if len(targets):
                excitation[targets] += model.influence[targets, i]
                for j in targets:
                    open_bands(int(j), tc)
        tn, un = band.next()
        heapq.heappush(heap, (tn, i, k, un, band))

    contents = np.full(len(out_t), model.content.code, dtype=np.int8)
    return EventLog(out_t, out_u, contents, horizon=horizon, n_users=n)


def expected_counts(model: HawkesModel, incentives, realization: Realization,
                    history: EventLog | None = None) -> np.ndarray:
    """Per-user expected counts in the window with the history frozen.

    Integrates the intensity in closed form: ``(mu + x) * length`` plus the
    decaying tail of every history event; no excitation from events inside
    the window is added.
    """
    x = _incentive_vector(incentives, model.n_users)
    times, users = _matching(model, history, math.inf)
    if len(times) and times.max() >= realization.start:
        raise ValueError("history must precede the realization start")
    counts = (model.mu + x) * realization.length
    if len(times):
        w = model.decay
        tail = (np.exp(-w * (realization.start - times)) - np.exp(-w * (realization.end - times))) / w
        counts = counts + model.influence @ np.bincount(users, weights=tail, minlength=model.n_users)
    return counts


def simulation_error(actual: EventLog, predicted: EventLog, realization: Realization,
                     models: Mapping[Content, HawkesModel] | Sequence[HawkesModel] | None = None) -> float:
    """Mean absolute difference of per-user count increments over the window.

    With several content types the per-content errors are averaged.
    """
    errors = simulation_errors(actual, predicted, realization, models)
    return float(np.mean(list(errors.values())))


def simulation_errors(actual: EventLog, predicted: EventLog, realization: Realization,
                      models=None) -> dict[Content, float]:
    if actual.n_users != predicted.n_users:
        raise ValueError(f"n_users mismatch: actual {actual.n_users}, predicted {predicted.n_users}")
    if models is not None:
        models = list(models.values()) if isinstance(models, Mapping) else list(models)
        for m in models:
            if m.n_users != actual.n_users:
                raise ValueError("model and logs disagree on n_users")
        contents = sorted({m.content for m in models}, key=lambda c: c.code)
    else:
        present = set(actual.contents.tolist()) | set(predicted.contents.tolist())
        contents = [Content.from_code(c) for c in sorted(present)] or [Content.MIS]
    out = {}
    for c in contents:
        a = actual.of_content(c).counts(realization.start, realization.end)
        p = predicted.of_content(c).counts(realization.start, realization.end)
        out[c] = float(np.abs(p - a).mean())
    return out


# -- maximum likelihood -------------------------------------------------------

def _excitation_rows(times: np.ndarray, users: np.ndarray, n_users: int, decay: float) -> np.ndarray:
    """Row k holds sum_{s: t_s < t_k} exp(-decay (t_k - t_s)) split by source user."""
    n = len(times)
    rows = np.zeros((n, n_users))
    r = np.zeros(n_users)
    prev = times[0] if n else 0.0
    k = 0
    while k < n:
        t = times[k]
        if t > prev:
            r *= math.exp(-decay * (t - prev))
            prev = t
        j = k + 1
        while j < n and times[j] == t:
            j += 1
        rows[k:j] = r
        for u in users[k:j]:
            r[u] += 1.0
        k = j
    return rows


def _compensator_weights(times, users, n_users, decay, horizon) -> np.ndarray:
    return np.bincount(users, weights=(1.0 - np.exp(-decay * (horizon - times))) / decay,
                       minlength=n_users)


def log_likelihood(model: HawkesModel, log: EventLog) -> float:
    """Exponential-kernel log-likelihood of the model's content events on ``[0, log.horizon]``."""
    sub = log.of_content(model.content) if len(log) and (log.contents != model.content.code).any() else log
    if sub.n_users != model.n_users:
        raise ValueError("log and model disagree on n_users")
    rows = _excitation_rows(sub.times, sub.users, model.n_users, model.decay)
    weights = _compensator_weights(sub.times, sub.users, model.n_users, model.decay, sub.horizon)
    lam = model.mu[sub.users] + np.einsum("kj,kj->k", rows, model.influence[sub.users])
    with np.errstate(divide="ignore"):
        ll = np.log(lam).sum()
    return float(ll - model.mu.sum() * sub.horizon - (model.influence @ weights).sum())


@dataclass
class FitResult:
    model: HawkesModel
    log_likelihood: float
    iterations: list[int] = field(default_factory=list)
    converged: bool = True

    def report(self) -> dict:
        return {"log_likelihood": self.log_likelihood, "iterations": self.iterations,
                "max_iterations_used": max(self.iterations, default=0), "converged": self.converged}


def _row_objective(design: np.ndarray, phi: np.ndarray):
    lam = design @ phi
    if (lam <= 0).any():
        return -math.inf, lam
    return float(np.log(lam).sum() - phi.sum()), lam


def _projected_ascent(design: np.ndarray, phi: np.ndarray, tol: float, max_iter: int):
    """Maximize sum(log(design @ phi)) - sum(phi) over phi >= 0.

    Projected gradient ascent with Barzilai-Borwein steps and Armijo
    backtracking.  Stops when the projected-gradient step has sup-norm
    <= ``tol``.  Returns (phi, objective, iterations, converged).
    """
    f, lam = _row_objective(design, phi)
    grad = design.T @ (1.0 / lam) - 1.0
    alpha = 1.0
    for it in range(max_iter):
        pg = np.maximum(phi + grad, 0.0) - phi
        if np.abs(pg).max() <= tol:
            return phi, f, it, True
        d = np.maximum(phi + alpha * grad, 0.0) - phi
        slope = float(grad @ d)
        step = 1.0
        while True:
            cand = phi + step * d
            f_c, lam_c = _row_objective(design, cand)
            if f_c >= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-30:
                # no ascent possible at working precision
                return phi, f, it, bool(np.abs(pg).max() <= math.sqrt(tol))
        grad_c = design.T @ (1.0 / lam_c) - 1.0
        s = cand - phi
        y = grad_c - grad
        sy = float(s @ y)
        alpha = float(s @ s) / -sy if sy < 0 else 1e6
        alpha = min(max(alpha, 1e-10), 1e10)
        phi, f, lam, grad = cand, f_c, lam_c, grad_c
    pg = np.maximum(phi + grad, 0.0) - phi
    return phi, f, max_iter, bool(np.abs(pg).max() <= tol)


def fit(log: EventLog, decay: float, n_users: int | None = None, *, content: Content | str | None = None,
        max_iter: int = 10_000, tol: float = 1e-6) -> FitResult:
    """Maximum-likelihood (mu, A) for a fixed decay.

    The likelihood separates by target user.  Each user's problem is solved
    in rescaled coordinates ``phi = (mu * T, A[i, j] * G_j)`` (expected event
    counts attributed to the base rate and to each source), where the
    objective is ``sum log(lambda) - sum phi``; the stopping tolerance applies
    to the gradient in these coordinates.
    """
    n_users = log.n_users if n_users is None else n_users
    if n_users != log.n_users:
        raise ValueError(f"log has {log.n_users} users, expected {n_users}")
    if not decay > 0:
        raise ValueError("decay must be positive")
    if content is None:
        present = np.unique(log.contents)
        content = Content.from_code(present[0]) if len(present) == 1 else Content.MIS
    content = Content(content)
    sub = log.of_content(content)
    if len(sub) == 0:
        raise FitError(f"cannot fit an empty {content.value} log")

    horizon = sub.horizon
    rows = _excitation_rows(sub.times, sub.users, n_users, decay)
    weights = _compensator_weights(sub.times, sub.users, n_users, decay, horizon)
    active = np.flatnonzero(weights > 0)
    mu = np.zeros(n_users)
    influence = np.zeros((n_users, n_users))
    iterations = []
    converged = True
    total = 0.0
    for i in range(n_users):
        mine = sub.users == i
        n_i = int(mine.sum())
        if n_i == 0:
            iterations.append(0)
            continue
        design = np.hstack([np.full((n_i, 1), 1.0 / horizon), rows[mine][:, active] / weights[active]])
        phi0 = np.zeros(design.shape[1])
        phi0[0] = n_i
        phi, f, its, ok = _projected_ascent(design, phi0, tol, max_iter)
        iterations.append(its)
        converged &= ok
        total += f
        mu[i] = phi[0] / horizon
        influence[i, active] = phi[1:] / weights[active]
    model = HawkesModel(mu, influence, decay, content)
    result = FitResult(model, log_likelihood(model, sub), iterations, converged)
    if not converged:
        raise ConvergenceError(f"MLE did not converge within {max_iter} iterations", best=result)
    return result


def fit_mle(log: EventLog, decay: float, n_users: int | None = None, **kwargs) -> HawkesModel:
    return fit(log, decay, n_users, **kwargs).model
