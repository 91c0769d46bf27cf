import math

import numpy as np
import pytest

from fairla.diffusion import Content, EventLog, HawkesModel
from fairla.environment import Network
from fairla.netgen import NetworkSpec, generate

CASE1_SPEC = dict(n_users=50, case="case1", target_mis_pct=17.0, exposed_fraction=0.2, seed=0)
CASE0_SPEC = dict(n_users=50, case="case0", target_mis_pct=50.0, seed=0)


def make_network(mu_mis, mu_true, adjacency=None, influence_mis=None, influence_true=None, history=None,
                 origin=0.0, mis_decay=0.7, true_decay=1.0):
    mu_mis = np.asarray(mu_mis, dtype=float)
    n = len(mu_mis)
    zero = np.zeros((n, n))
    mis = HawkesModel(mu_mis, zero if influence_mis is None else influence_mis, mis_decay, Content.MIS)
    true = HawkesModel(np.asarray(mu_true, dtype=float), zero if influence_true is None else influence_true,
                       true_decay, Content.TRUE)
    adjacency = np.eye(n) if adjacency is None else adjacency
    return Network(mis, true, adjacency, history, origin=origin)


def fitted(spec_kwargs):
    g = generate(NetworkSpec(**spec_kwargs))
    return g, Network.fit(g.adjacency, g.mis_log, g.true_log)


@pytest.fixture(scope="session")
def case1():
    return fitted(CASE1_SPEC)


@pytest.fixture(scope="session")
def case0():
    return fitted(CASE0_SPEC)


class BudgetWatch:
    """Campaign observer asserting the budget invariants at every sweep."""

    def __init__(self):
        self.sweeps = 0
        self.converged = []

    def __call__(self, runner):
        st, cfg = runner.state, runner.config
        x = st.incentives()
        assert math.fsum(x) <= cfg.capacity
        assert st.ledger.consumed <= cfg.capacity
        assert np.isclose(st.ledger.consumed, math.fsum(x), rtol=0, atol=1e-9)
        assert (x >= 0).all() and (x <= cfg.capacity).all()
        self.converged.append(st.n_converged())
        self.sweeps += 1


@pytest.fixture
def budget_watch():
    return BudgetWatch()


def log_from(times, users, contents=None, horizon=None, n_users=None):
    times = np.asarray(times, dtype=float)
    users = np.asarray(users, dtype=np.int64)
    horizon = horizon if horizon is not None else (times.max() + 1.0 if len(times) else 1.0)
    n_users = n_users if n_users is not None else int(users.max()) + 1
    return EventLog(times, users, contents, horizon=horizon, n_users=n_users)


def first_events(log, k):
    """The first ``k`` events, with the horizon halfway to the next one."""
    if len(log) <= k:
        raise ValueError(f"log has only {len(log)} events")
    horizon = 0.5 * (log.times[k - 1] + log.times[k])
    return EventLog(log.times[:k], log.users[:k], log.contents[:k], horizon=horizon, n_users=log.n_users)
