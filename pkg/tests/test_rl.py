import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_scenario
from uavsec.capacity import relay_link_rates
from uavsec.numerics import make_rng
from uavsec.rl import (ChainEnv, EnvConfig, GridWorld, Hyperparams, QNetwork, QTable, ReplayMemory,
                       UavRelayEnv, action_set, bellman_targets, dqn_loss, dqn_loss_and_grad, dqn_train,
                       epsilon_greedy, epsilon_schedule, greedy_action, grid_search, q_update,
                       train_qlearning, value_iteration)
from uavsec.rl.dqn import DivergenceError
from uavsec.rl.tabular import bellman_update


def random_batch(rng, n=6, dim=3, actions=5):
    return (rng.standard_normal((n, dim)), rng.integers(0, actions, n), rng.standard_normal(n),
            rng.standard_normal((n, dim)), rng.random(n) < 0.3)


class TestReplay:
    def test_fifo_eviction(self):
        mem = ReplayMemory(3)
        for i in range(5):
            mem.push([i], 0, float(i), [i + 1])
        assert len(mem) == 3
        assert [e.r for e in mem.buffer] == [2.0, 3.0, 4.0]

    @settings(max_examples=50, deadline=None)
    @given(capacity=st.integers(1, 20), pushes=st.integers(0, 60))
    def test_never_exceeds_capacity(self, capacity, pushes):
        mem = ReplayMemory(capacity)
        for i in range(pushes):
            mem.push([0.0], 0, float(i), [0.0])
            assert len(mem) <= capacity
        assert [e.r for e in mem.buffer] == [float(i) for i in range(max(0, pushes - capacity), pushes)]

    def test_rejects_non_finite_reward(self):
        with pytest.raises(ValueError):
            ReplayMemory(2).push([0], 0, math.nan, [0])

    def test_sample_shapes(self):
        mem = ReplayMemory(10)
        for i in range(10):
            mem.push([i, i], i % 3, 1.0, [i, i + 1], i == 9)
        s, a, r, s2, term = mem.sample(4, make_rng(0))
        assert s.shape == (4, 2) and a.shape == (4,) and term.dtype == bool
        assert len(set(s[:, 0].tolist())) == 4

    def test_bad_capacity(self):
        with pytest.raises(ValueError):
            ReplayMemory(0)


class TestBellman:
    def test_examples(self):
        assert bellman_update(0.0, 1.0, 0.0, 0.5, 0.9) == 0.5
        assert bellman_update(3.0, 2.0, 7.0, 1.0, 0.0) == 2.0

    def test_q_update_table(self):
        table = QTable(2, make_rng(0), init_scale=0.0)
        table.row("b")[:] = [1.0, 4.0]
        assert q_update(table, "a", 1, 1.0, "b", 0.5, 0.5) == pytest.approx(0.5 * (1.0 + 0.5 * 4.0))
        assert q_update(table, "a", 0, 1.0, "b", 1.0, 0.5, terminal=True) == 1.0

    def test_chain_matches_value_iteration(self):
        env = ChainEnv(5)
        hp = Hyperparams(gamma=0.9, learning_rate=0.5, epsilon_start=1.0, epsilon_end=1.0, episodes=3000,
                         steps_per_episode=10)
        table, _ = train_qlearning(env, hp, make_rng(1))
        q_star = value_iteration(env.model, 5, 2, 0.9)
        learned = np.array([table.row(s) for s in range(5)])
        assert np.max(np.abs(learned - q_star)) < 1e-4

    def test_two_state_chain(self):
        env = ChainEnv(2)
        hp = Hyperparams(gamma=0.5, learning_rate=0.5, epsilon_start=1.0, epsilon_end=1.0, episodes=2000,
                         steps_per_episode=5)
        table, _ = train_qlearning(env, hp, make_rng(2))
        q_star = value_iteration(env.model, 2, 2, 0.5)
        assert np.max(np.abs(np.array([table.row(s) for s in range(2)]) - q_star)) < 1e-4

    def test_value_iteration_closed_form(self):
        # from the right end, holding right pays 1 forever
        q = value_iteration(ChainEnv(5).model, 5, 2, 0.9)
        assert q[4, 1] == pytest.approx(10.0)
        assert q[3, 1] == pytest.approx(10.0)
        assert q[2, 1] == pytest.approx(9.0)


class TestExploration:
    def test_uniform_when_fully_random(self):
        rng = make_rng(3)
        n, draws = 21, 100_000
        counts = np.bincount([epsilon_greedy(np.arange(n), 1.0, rng) for _ in range(draws)], minlength=n)
        p = 1.0 / n
        sigma = math.sqrt(draws * p * (1 - p))
        assert np.all(np.abs(counts - draws * p) < 3 * sigma + 1)

    def test_greedy_when_epsilon_zero(self):
        rng = make_rng(4)
        assert all(epsilon_greedy(np.array([0.1, 0.9, 0.2]), 0.0, rng) == 1 for _ in range(100))

    @settings(max_examples=50, deadline=None)
    @given(start=st.floats(0.0, 1.0), end_frac=st.floats(0.0, 1.0), decay=st.floats(0.01, 1.0))
    def test_schedule_monotone_bounded(self, start, end_frac, decay):
        hp = Hyperparams(epsilon_start=start, epsilon_end=start * end_frac, epsilon_decay=decay)
        eps = epsilon_schedule(hp, 200)
        assert all(b <= a for a, b in zip(eps, eps[1:]))
        assert all(hp.epsilon_end <= e <= hp.epsilon_start for e in eps)

    @settings(max_examples=50, deadline=None)
    @given(q=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=10), c=st.floats(-1e3, 1e3))
    def test_greedy_shift_invariant(self, q, c):
        q = np.array(q)
        if np.sum(q == q.max()) > 1:
            return
        shifted = q + c
        if np.sum(shifted == shifted.max()) > 1:
            return
        assert greedy_action(q) == greedy_action(shifted)


class TestLoss:
    def test_consistent_targets_zero_loss(self):
        rng = make_rng(5)
        net = QNetwork([2, 4, 3], rng)
        s = rng.standard_normal((5, 2))
        a = rng.integers(0, 3, 5)
        # terminal transitions back into s: r must equal Q(s, a)
        q = net.forward(s)[np.arange(5), a]
        batch = (s, a, q, s, np.ones(5, dtype=bool))
        assert dqn_loss(batch, net, net.copy(), 0.9) == pytest.approx(0.0, abs=1e-20)

    def test_stationary_reward_zero_loss(self):
        # a constant Q = c everywhere with r = (1 - gamma) c gives zero TD error
        net = QNetwork([2, 3], make_rng(0))
        net.params[0][:] = 0.0
        net.params[1][:] = 2.0
        batch = (np.ones((3, 2)), np.array([0, 1, 2]), np.full(3, 0.1 * 2.0), np.ones((3, 2)), np.zeros(3, bool))
        assert dqn_loss(batch, net, net.copy(), 0.9) == pytest.approx(0.0, abs=1e-24)

    def test_td_error_two(self):
        net = QNetwork([1, 1], make_rng(0))
        net.params[0][:] = 0.0
        net.params[1][:] = 0.0
        batch = (np.zeros((1, 1)), np.array([0]), np.array([2.0]), np.zeros((1, 1)), np.array([True]))
        assert dqn_loss(batch, net, net.copy(), 0.9) == pytest.approx(4.0)

    def test_empty_batch(self):
        net = QNetwork([1, 2], make_rng(0))
        with pytest.raises(ValueError):
            dqn_loss((np.zeros((0, 1)), np.zeros(0, int), np.zeros(0), np.zeros((0, 1)), np.zeros(0, bool)),
                     net, net, 0.9)

    def test_targets_use_target_network(self):
        rng = make_rng(6)
        train, target = QNetwork([3, 5, 4], rng), QNetwork([3, 5, 4], rng)
        batch = random_batch(rng, actions=4)
        y = bellman_targets(batch, target, 0.9)
        expected = batch[2] + 0.9 * np.where(batch[4], 0.0, target.forward(batch[3]).max(axis=1))
        np.testing.assert_allclose(y, expected)

    @pytest.mark.parametrize("draw", range(20))
    def test_gradient_finite_differences(self, draw):
        rng = make_rng(7, draw)
        sizes = [3, int(rng.integers(2, 9)), int(rng.integers(2, 9)), 5]
        net, target = QNetwork(sizes, rng), QNetwork(sizes, rng)
        # zero biases put dead-input units exactly on the ReLU kink
        for b in net.params[1::2]:
            b[:] = rng.normal(0.0, 0.1, b.shape)
        batch = random_batch(rng)
        _, grads, _ = dqn_loss_and_grad(batch, net, target, 0.9)
        h = 1e-5
        for p, g in zip(net.params, grads):
            flat, gflat = p.reshape(-1), g.reshape(-1)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = old + h
                up = dqn_loss(batch, net, target, 0.9)
                flat[i] = old - h
                down = dqn_loss(batch, net, target, 0.9)
                flat[i] = old
                num = (up - down) / (2 * h)
                assert abs(num - gflat[i]) <= 1e-4 * max(1e-6, abs(num) + abs(gflat[i]))


class TestNetwork:
    def test_round_trip(self, tmp_path):
        net = QNetwork([3, 4, 2], make_rng(0))
        net.save(tmp_path / "net.json")
        back = QNetwork.load(tmp_path / "net.json")
        x = make_rng(1).standard_normal((4, 3))
        np.testing.assert_array_equal(back.forward(x), net.forward(x))

    def test_copy_is_independent(self):
        net = QNetwork([2, 2], make_rng(0))
        twin = net.copy()
        net.params[0] += 1
        assert not np.array_equal(net.params[0], twin.params[0])


class TestDqnTraining:
    def test_zero_learning_rate_freezes(self):
        env = ChainEnv(5)
        hp = Hyperparams(learning_rate=0.0, episodes=5, steps_per_episode=20, batch_size=8, hidden=(8,))
        net0 = QNetwork([5, 8, 2], make_rng(9))
        result = dqn_train(env, hp, make_rng(9))
        for a, b in zip(result.network.params, net0.params):
            np.testing.assert_array_equal(a, b)

    def test_target_updates_are_snapshots(self):
        env = ChainEnv(5)
        hp = Hyperparams(learning_rate=0.05, episodes=6, steps_per_episode=20, batch_size=8,
                         target_update_every=15, hidden=(8,))
        snapshots, seen = {}, []

        def observer(step, q_train, q_target):
            snapshots[step] = [p.copy() for p in q_train.params]
            seen.append((step, [p.copy() for p in q_target.params]))

        result = dqn_train(env, hp, make_rng(10), observer)
        assert result.sync_steps == list(range(15, 121, 15))
        previous = seen[0][1]
        for step, target in seen:
            changed = any(not np.array_equal(a, b) for a, b in zip(target, previous))
            if changed:
                assert step % 15 == 0
                assert all(np.array_equal(a, b) for a, b in zip(target, snapshots[step]))
            previous = target

    def test_deterministic_per_seed(self):
        hp = Hyperparams(learning_rate=0.05, episodes=20, steps_per_episode=10, batch_size=8, hidden=(8,))
        a = dqn_train(ChainEnv(5), hp, make_rng(11)).log
        b = dqn_train(ChainEnv(5), hp, make_rng(11)).log
        assert a == b

    def test_solves_gridworld(self):
        env = GridWorld(5)
        hp = Hyperparams(gamma=0.9, learning_rate=0.05, epsilon_decay=0.99, episodes=400,
                         steps_per_episode=30, batch_size=32, target_update_every=50, hidden=(32,))
        net = dqn_train(env, hp, make_rng(12)).network
        for start in range(env.state_dim):
            if env.cell(start) == env.goal:
                continue
            s, steps = env.reset(None, start), 0
            done = False
            while not done and steps < 20:
                s, _, done, _ = env.step(greedy_action(net.forward(env.encode(s))[0]))
                steps += 1
            assert done and steps == env.shortest_path(start)

    def test_divergence_guard(self):
        class Blowup(ChainEnv):
            def step(self, a):
                s, _, d, i = super().step(a)
                return s, 1e12, d, i

        hp = Hyperparams(learning_rate=0.1, episodes=5, steps_per_episode=20, batch_size=4, hidden=(4,))
        with pytest.raises(DivergenceError):
            dqn_train(Blowup(5), hp, make_rng(13))

    def test_invalid_hyperparams(self):
        with pytest.raises(ValueError):
            Hyperparams(gamma=1.0)
        with pytest.raises(ValueError):
            Hyperparams(batch_size=0)


class TestGridSearch:
    def base(self):
        return Hyperparams(episodes=10, steps_per_episode=10, batch_size=8, hidden=(8,))

    def test_single_cell(self):
        cells = grid_search(lambda: ChainEnv(5), [0.9], [1e-4], self.base(), seed=1)
        assert len(cells) == 1 and cells[0].hyperparams.gamma == 0.9

    def test_duplicates_score_equal(self):
        cells = grid_search(lambda: ChainEnv(5), [0.9, 0.9], [1e-2], self.base(), seed=1)
        assert cells[0].score == cells[1].score

    def test_ranked_best_first(self):
        cells = grid_search(lambda: ChainEnv(5), [0.5, 0.9], [1e-3, 1e-2], self.base(), seed=2)
        scores = [c.score for c in cells]
        assert scores == sorted(scores, reverse=True) and len(cells) == 4

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            grid_search(lambda: ChainEnv(5), [], [1e-3], self.base(), seed=1)


class TestUavEnv:
    def env(self, **kw):
        cfg = EnvConfig(freeze_channels=True, random_start=False, **kw)
        return UavRelayEnv(make_scenario(), cfg, seed=3)

    def test_action_set_sizes(self):
        assert len(action_set(EnvConfig())) == 21
        assert len(action_set(EnvConfig(allow_z=False, power_actions=False))) == 5

    def test_hold_is_fixed_point(self):
        env = self.env()
        env.reset()
        hold = next(i for i, a in enumerate(env.actions) if a.move == "hold" and a.power_delta == 0)
        s1, r1, _, _ = env.step(hold)
        s2, r2, _, _ = env.step(hold)
        np.testing.assert_array_equal(s1, s2)
        assert r1 == r2

    def test_altitude_clamp(self):
        env = self.env()
        env.reset(position=[80.0, 0.0, 120.0])
        up = next(i for i, a in enumerate(env.actions) if a.move == "+z")
        _, _, _, info = env.step(up)
        assert info["position"][2] == 120.0

    def test_power_clamp(self):
        env = self.env()
        env.reset(power=env.p_r_max)
        more = next(i for i, a in enumerate(env.actions) if a.power_delta == 1)
        assert env.step(more)[3]["power"] == env.p_r_max

    def test_reward_matches_capacity_module(self):
        for mode in ("A", "B"):
            env = UavRelayEnv(make_scenario(), EnvConfig(reward_mode=mode), seed=4)
            rng = make_rng(1)
            env.reset(rng)
            for a in (0, 5, 11, 20):
                _, r, _, info = env.step(a)
                ch, _ = env.evaluate(info["position"], info["power"], env.channel_rng())
                zf = info["outcome"].zf
                rates = relay_link_rates(ch.h2, ch.h2e, zf.w_r, ch.h1, zf.w_br)
                expected = rates.total_capacity if mode == "A" else rates.total_secrecy
                assert abs(r - expected) < 1e-12

    def test_state_is_offset_from_cluster(self):
        env = self.env()
        s = env.reset(position=[100.0, 10.0, 50.0])
        np.testing.assert_allclose(s, np.array([100.0, 10.0, 50.0]) - env.centroid)

    def test_reward_non_negative_in_secrecy_mode(self):
        env = UavRelayEnv(make_scenario(), EnvConfig(reward_mode="B"), seed=5)
        env.reset(make_rng(0))
        assert all(env.step(a)[1] >= 0 for a in range(env.n_actions))

    def test_bad_config(self):
        with pytest.raises(ValueError):
            EnvConfig(reward_mode="C")
