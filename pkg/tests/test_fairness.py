import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fairla.exposure import ExposureRatios
from fairla.fairness import local_loss, neighborhood, total_loss


def test_local_loss_examples():
    assert local_loss(0, np.ones(3), np.ones((3, 3))) == 0
    assert local_loss(0, np.array([0.5]), np.eye(1)) == pytest.approx(0.25)
    # user 0 influences users 1 and 2 (column 0)
    adj = np.eye(3)
    adj[1, 0] = adj[2, 0] = 1
    assert local_loss(0, ExposureRatios(np.array([1.0, 0.6, 1.4]), 1.3), adj) == pytest.approx(0.32)


def test_neighborhood_uses_influenced_users():
    adj = np.eye(3)
    adj[2, 0] = 1  # user 2 sees user 0
    assert neighborhood(0, adj).tolist() == [0, 2]
    assert neighborhood(2, adj).tolist() == [2]
    with pytest.raises(IndexError):
        neighborhood(5, adj)


def test_total_loss_examples():
    adj = np.ones((4, 4))
    rep = total_loss(np.ones(4), adj)
    assert rep.total == 0 and rep.normalized == 0
    rep = total_loss(np.zeros(10), np.eye(10))
    assert rep.total == 10 and rep.normalized == 1
    r = np.array([0.2, 1.5, 0.9, 3.0])
    assert total_loss(r, adj, subset=range(4)).total == total_loss(r, adj).total


def test_total_loss_subset_errors():
    with pytest.raises(ValueError):
        total_loss(np.ones(3), np.eye(3), subset=[])
    with pytest.raises(IndexError):
        total_loss(np.ones(3), np.eye(3), subset=[7])


def _graph(n, seed):
    rng = np.random.default_rng(seed)
    adj = (rng.random((n, n)) < 0.3).astype(float)
    np.fill_diagonal(adj, 1)
    return adj


@settings(max_examples=40, deadline=None)
@given(r=arrays(float, 6, elements=st.floats(0.01, 5)), seed=st.integers(0, 1000))
def test_total_is_sum_of_local(r, seed):
    adj = _graph(6, seed)
    rep = total_loss(r, adj)
    assert rep.total == pytest.approx(sum(local_loss(i, r, adj) for i in range(6)), abs=1e-9)
    assert rep.total == pytest.approx(rep.per_user.sum(), abs=1e-9)
    assert 0 <= rep.normalized <= 1
    assert (rep.total == 0) == bool(np.all(r == 1))


@settings(max_examples=30, deadline=None)
@given(r=arrays(float, 6, elements=st.floats(0.01, 5)), seed=st.integers(0, 1000), perm_seed=st.integers(0, 1000))
def test_permutation_invariance(r, seed, perm_seed):
    adj = _graph(6, seed)
    p = np.random.default_rng(perm_seed).permutation(6)
    assert total_loss(r[p], adj[np.ix_(p, p)]).total == pytest.approx(total_loss(r, adj).total)


def test_subsample_per_term_mean_unbiased():
    rng = np.random.default_rng(0)
    n = 40
    adj = _graph(n, 1)
    r = rng.uniform(0.2, 1.8, n)
    full = total_loss(r, adj)
    means = [(lambda rep: rep.total / rep.terms)(total_loss(r, adj, rng.choice(n, 10, replace=False)))
             for _ in range(2000)]
    assert np.mean(means) == pytest.approx(full.total / full.terms, rel=0.02)
