import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairla.diffusion import Content, EventLog
from fairla.errors import FeasibilityError, SchemaError, UndefinedMetricError
from fairla.netgen import (Case, NetworkSpec, generate, ingest_csv, load_adjacency, mis_percentage,
                           save_adjacency)

from conftest import log_from


def test_case1_hits_target():
    g = generate(NetworkSpec(n_users=200, case="case1", target_mis_pct=17.0, exposed_fraction=0.2, seed=0))
    assert 15.0 <= g.achieved_mis_pct <= 19.0
    assert g.exposed.sum() == 40
    assert g.summary()["fraction_majority_mis"] == pytest.approx(0.2, abs=0.05)


def test_case2_hits_target_with_heavy_posters():
    spec = NetworkSpec(n_users=200, case="case2", target_mis_pct=88.5, exposed_fraction=0.8, seed=0)
    g = generate(spec)
    assert 86.5 <= g.achieved_mis_pct <= 90.5
    assert g.heavy.sum() == 40 and (g.exposed[g.heavy]).all()
    mis = np.bincount(g.mis_log.users, minlength=200)
    light = g.exposed & ~g.heavy
    assert mis[g.heavy].mean() / mis[light].mean() >= 0.8 * spec.heavy_multiplier


def test_case0_is_balanced_across_users():
    cvs = []
    for seed in range(20):
        g = generate(NetworkSpec(n_users=200, case="case0", target_mis_pct=50.0, seed=seed))
        shares = g.user_shares()
        cvs.append(shares.std() / shares.mean())
        assert 48.0 <= g.achieved_mis_pct <= 52.0
    assert max(cvs) < 0.2


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), target=st.floats(15.5, 23.0))
def test_case1_within_two_points(seed, target):
    g = generate(NetworkSpec(n_users=100, case="case1", target_mis_pct=target, exposed_fraction=0.2, seed=seed))
    assert abs(g.achieved_mis_pct - target) <= 2.0
    assert (np.diag(g.adjacency) == 1).all()
    assert set(np.unique(g.adjacency)) <= {0.0, 1.0}


def test_determinism_and_distinct_seeds():
    spec = NetworkSpec(n_users=60, seed=4)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.adjacency, b.adjacency)
    np.testing.assert_array_equal(a.mis_log.times, b.mis_log.times)
    c = generate(NetworkSpec(n_users=60, seed=5))
    assert not np.array_equal(a.adjacency, c.adjacency)


def test_homophily():
    g = generate(NetworkSpec(n_users=200, seed=1))
    e = g.exposed
    off = g.adjacency - np.eye(200)
    same = off[e[:, None] == e[None, :]].mean()
    cross = off[e[:, None] != e[None, :]].mean()
    assert cross < 0.1 * same
    assert off.sum() / (200 * 199) == pytest.approx(0.05, rel=0.15)


@pytest.mark.parametrize("kwargs", [
    dict(case="case1", target_mis_pct=90.0, exposed_fraction=0.2),
    dict(case="case2", target_mis_pct=88.5, exposed_fraction=0.4),
    dict(case="case1", target_mis_pct=17.0, exposed_fraction=0.001),
])
def test_infeasible_targets(kwargs):
    with pytest.raises(FeasibilityError):
        generate(NetworkSpec(n_users=200, seed=0, **kwargs))


def test_spec_validation_and_round_trip():
    with pytest.raises(ValueError):
        NetworkSpec(n_users=0)
    with pytest.raises(ValueError):
        NetworkSpec(case="case9")
    spec = NetworkSpec(case=Case.CASE2, exposed_fraction=0.8, target_mis_pct=88.5)
    assert NetworkSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("n_mis,n_true,expected", [(17, 83, 17.0), (0, 10, 0.0), (179, 21, 89.5)])
def test_mis_percentage(n_mis, n_true, expected):
    mis = log_from(np.arange(n_mis, dtype=float), np.zeros(n_mis), np.zeros(n_mis, dtype=int), horizon=500.0, n_users=1)
    true = log_from(np.arange(n_true, dtype=float), np.zeros(n_true), np.ones(n_true, dtype=int), horizon=500.0, n_users=1)
    assert mis_percentage(mis, true) == pytest.approx(expected)


def test_mis_percentage_of_empty_logs():
    empty = EventLog(np.array([]), np.array([], dtype=np.int64), horizon=1.0, n_users=1)
    with pytest.raises(UndefinedMetricError):
        mis_percentage(empty, empty)


def test_ingest_three_rows(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("user_id,timestamp,content\n0,1.5,mis\n1,2.0,true\n0,3.25,mis\n")
    mis, true = ingest_csv(p, n_users=2, horizon=10.0)
    assert len(mis) == 2 and len(true) == 1
    assert mis.times.tolist() == [1.5, 3.25] and true.users.tolist() == [1]
    assert (mis.contents == Content.MIS.code).all()


def test_ingest_unknown_tag_reports_line(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("user_id,timestamp,content\n0,1.5,mis\n1,2.0,rumor\n")
    with pytest.raises(SchemaError) as info:
        ingest_csv(p, n_users=2)
    assert info.value.line == 3


def test_export_ingest_round_trip(tmp_path):
    g = generate(NetworkSpec(n_users=40, seed=2))
    paths = g.export(tmp_path / "net")
    mis, true = ingest_csv(paths["events"], 40, horizon=g.spec.history)
    assert len(mis) == len(g.mis_log) and len(true) == len(g.true_log)
    np.testing.assert_array_equal(np.sort(mis.times), np.sort(g.mis_log.times))
    np.testing.assert_array_equal(load_adjacency(paths["adjacency"]), g.adjacency)


def test_adjacency_files(tmp_path):
    p = tmp_path / "a.json"
    save_adjacency(np.array([[0, 1], [0, 0]]), p)
    a = load_adjacency(p)
    assert a.tolist() == [[1.0, 1.0], [0.0, 1.0]]
    p.write_text("[[0, 2], [0, 0]]")
    with pytest.raises(ValueError):
        load_adjacency(p)
    p.write_text("[[0, 1, 0], [0, 0, 1]]")
    with pytest.raises(ValueError):
        load_adjacency(p)
