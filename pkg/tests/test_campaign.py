import json
import math

import numpy as np
import pytest

from fairla.automaton import Direction
from fairla.campaign import (CampaignConfig, checkpoint, load_checkpoint, resume, run, run_sampled_loss,
                             uniform_baseline)
from fairla.environment import Backend, ExpectedEnvironment, Network
from fairla.errors import IntegrityError
from fairla.fairness import total_loss

from conftest import make_network

MU_T = 0.001
MU_M = 0.011 / 1.3 - 1e-9  # balanced exactly at x = 0.01


def _brute_force_state(net, cfg):
    env = ExpectedEnvironment(net, window=cfg.window, balance=cfg.balance)
    losses = [total_loss(env.ratios(np.array([k * cfg.step])), net.adjacency).total
              for k in range(cfg.memory_depth + 1)]
    return int(np.argmin(losses))


def test_single_user_finds_balance_point(budget_watch):
    net = make_network([MU_M], [MU_T])
    cfg = CampaignConfig(capacity=0.06, memory_depth=300, seed=3)
    assert _brute_force_state(net, cfg) == 50
    res = run(net, cfg, observer=budget_watch)
    assert res.converged and res.complete
    assert abs(int(res.per_user_states[0]) - 50) <= 1
    assert res.incentives[0] == pytest.approx(0.01, abs=cfg.step)


def test_independent_users_match_single_user_runs():
    mus = [MU_M, 0.005, 0.012]
    net = make_network(mus, [MU_T] * 3)
    cfg = CampaignConfig(capacity=1.0, memory_depth=200, seed=5)
    res = run(net, cfg)
    for i, mu in enumerate(mus):
        solo = make_network([mu], [MU_T])
        target = _brute_force_state(solo, cfg)
        assert abs(int(res.per_user_states[i]) - target) <= 1
        assert abs(int(run(solo, cfg).per_user_states[0]) - target) <= 1


def test_balanced_network_spends_nothing():
    # true content already exceeds balance for everyone
    net = make_network([0.001] * 4, [0.01] * 4)
    res = run(net, CampaignConfig(capacity=0.06, memory_depth=50, seed=1))
    assert res.converged
    assert (res.incentives == 0).all()
    assert res.consumption == 0


def test_uniform_baseline_shares():
    net = make_network(np.full(200, 0.002), np.full(200, 0.001))
    res = uniform_baseline(net, CampaignConfig(capacity=0.06))
    assert res.incentives[0] == pytest.approx(0.0003)
    assert len(set(res.incentives.tolist())) == 1
    assert math.fsum(res.incentives) <= 0.06
    assert res.consumption == pytest.approx(1.0)


def test_uniform_shares_never_overshoot():
    for n in (3, 7, 11, 49, 97):
        net = make_network(np.full(n, 0.002), np.full(n, 0.001))
        res = uniform_baseline(net, CampaignConfig(capacity=0.1))
        assert math.fsum(res.incentives) <= 0.1


def test_uniform_wastes_budget_on_balanced_users(case1):
    _, net = case1
    cfg = CampaignConfig(capacity=0.015)
    res = uniform_baseline(net, cfg)
    env = cfg.environment(net)
    balanced = env.ratios(np.zeros(net.n_users)).fairly_exposed()
    assert balanced.mean() >= 0.8
    assert res.incentives[balanced].sum() >= 0.8 * cfg.capacity * (1 - 1e-9)


def test_penalized_moves_roll_back(budget_watch):
    net = make_network([0.01, 0.01], [0.0, 0.0])
    res = run(net, CampaignConfig(capacity=0.06, memory_depth=20, seed=0, max_iterations=300),
              reward_fn=lambda d, m, full: 1, observer=budget_watch)
    assert (res.incentives == 0).all()
    assert res.ledger.consumed == 0
    assert res.converged


def test_budget_invariants_and_monotone_convergence(case1, budget_watch):
    _, net = case1
    res = run(net, CampaignConfig(capacity=0.015, seed=2), observer=budget_watch)
    assert budget_watch.sweeps == res.iterations
    assert all(a <= b for a, b in zip(budget_watch.converged, budget_watch.converged[1:]))
    assert 0 <= res.consumption <= 1


def test_tight_budget_is_never_exceeded(budget_watch):
    net = make_network(np.full(6, 0.02), np.full(6, 0.0005))
    res = run(net, CampaignConfig(capacity=0.003, memory_depth=30, seed=4, max_iterations=3000),
              observer=budget_watch)
    assert math.fsum(res.incentives) <= 0.003
    assert res.consumption > 0.9


def test_final_loss_no_worse_than_doing_nothing(case1):
    _, net = case1
    cfg = CampaignConfig(capacity=0.015, seed=7)
    res = run(net, cfg)
    env = cfg.environment(net)
    zero = total_loss(env.ratios(np.zeros(net.n_users)), net.adjacency)
    assert res.final_loss.total <= zero.total
    assert res.loss_trajectory[0]["total"] == pytest.approx(zero.total)
    assert len(res.loss_trajectory) == res.iterations + 1


def test_determinism(case1):
    _, net = case1
    cfg = CampaignConfig(capacity=0.015, seed=11)
    a, b = run(net, cfg), run(net, cfg)
    assert a.to_dict() == b.to_dict()
    c = run(net, CampaignConfig(capacity=0.015, seed=12))
    assert c.to_dict() != a.to_dict()


@pytest.mark.parametrize("stop", [0, 7])
def test_resume_matches_uninterrupted_run(case1, tmp_path, stop):
    _, net = case1
    cfg = CampaignConfig(capacity=0.015, seed=13)
    full = run(net, cfg)
    path = tmp_path / "ckpt.json"
    part = run(net, cfg, checkpoint=path, stop_after=stop)
    assert not part.complete and part.metrics is None
    resumed = resume(path, net)
    assert resumed.to_dict() == full.to_dict()


def test_shuffled_resume(case1, tmp_path):
    _, net = case1
    cfg = CampaignConfig(capacity=0.015, seed=13, shuffled=True)
    full = run(net, cfg)
    run(net, cfg, checkpoint=tmp_path / "c.json", stop_after=5)
    assert resume(tmp_path / "c.json", net).to_dict() == full.to_dict()


def test_checkpoint_integrity(case1, tmp_path):
    _, net = case1
    path = tmp_path / "ckpt.json"
    run(net, CampaignConfig(capacity=0.015), checkpoint=path, stop_after=3)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(IntegrityError):
        load_checkpoint(path)
    doc = json.loads(text)
    doc["payload"]["sweep"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(IntegrityError):
        resume(path, net)


def test_resume_rejects_other_network(case1, case0, tmp_path):
    path = tmp_path / "ckpt.json"
    run(case1[1], CampaignConfig(capacity=0.015), checkpoint=path, stop_after=2)
    with pytest.raises(IntegrityError):
        resume(path, case0[1])


def test_checkpoint_helper_round_trip(case1, tmp_path):
    _, net = case1
    run(net, CampaignConfig(capacity=0.015), checkpoint=tmp_path / "a.json", stop_after=4)
    state = load_checkpoint(tmp_path / "a.json")
    checkpoint(state, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_sampled_loss_full_sample_matches_full_run():
    # a tiny dense network: every sample of size N is the whole neighborhood
    rng = np.random.default_rng(0)
    adj = (rng.random((8, 8)) < 0.4).astype(float)
    net = make_network(rng.uniform(0.004, 0.012, 8), np.full(8, MU_T), adjacency=adj)
    cfg = CampaignConfig(capacity=0.02, memory_depth=40, seed=1)
    full = run(net, cfg)
    sampled = run_sampled_loss(net, CampaignConfig(capacity=0.02, memory_depth=40, seed=1, loss_sample_size=8))
    np.testing.assert_array_equal(full.incentives, sampled.incentives)


def test_sampled_loss_extremes():
    net = make_network(np.full(5, 0.008), np.full(5, MU_T))
    res = run_sampled_loss(net, CampaignConfig(capacity=0.02, memory_depth=20, loss_sample_size=1,
                                               max_iterations=2000))
    assert res.complete
    for s in (0, 6):
        with pytest.raises(ValueError):
            run_sampled_loss(net, CampaignConfig(capacity=0.02, memory_depth=20, loss_sample_size=s or None))
    with pytest.raises(ValueError):
        run_sampled_loss(net, CampaignConfig(capacity=0.02, memory_depth=20, loss_sample_size=6))


def test_sampled_backend_runs(budget_watch):
    net = make_network(np.full(4, 0.008), np.full(4, MU_T))
    cfg = CampaignConfig(capacity=0.02, memory_depth=20, backend=Backend.SAMPLED, seed=2, max_iterations=200)
    res = run(net, cfg, observer=budget_watch)
    assert res.complete and res.metrics is not None
    assert run(net, cfg).to_dict() == res.to_dict()


def test_mismatched_models():
    with pytest.raises(ValueError):
        make_network([0.01, 0.01], [0.01])


def test_config_validation():
    for bad in (dict(capacity=0), dict(memory_depth=0), dict(epsilon=0.6), dict(step=-1.0),
                dict(loss_sample_size=0), dict(backend="bogus")):
        with pytest.raises(ValueError):
            CampaignConfig(**bad)
    cfg = CampaignConfig(capacity=0.06, memory_depth=300)
    assert cfg.step == pytest.approx(0.0002)
    assert CampaignConfig.from_dict(cfg.to_dict()) == cfg
