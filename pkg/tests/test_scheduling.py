"""Greedy scheduler vs brute force, baselines, and the log utility."""

import math

import pytest

from specfair.scheduling import (
    ScheduleDecision,
    SchedulerInput,
    allocation_objective,
    brute_force_schedule,
    fixed_schedule,
    gradient_log,
    gradient_schedule,
    iter_allocations,
    random_schedule,
    utility_log,
)
from specfair.seeding import substream


class TestUtilityLog:
    def test_ones(self):
        assert utility_log([1.0, 1.0, 1.0]) == 0.0

    def test_e(self):
        assert abs(utility_log([math.e, math.e]) - 2.0) <= 1e-12

    def test_reciprocal_pair(self):
        assert abs(utility_log([2.0, 0.5])) <= 1e-15

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            utility_log([1.0, 0.0])


class TestGradientLog:
    def test_values(self):
        assert gradient_log([1.0, 1.0]) == (1.0, 1.0)
        assert gradient_log([2.0, 4.0]) == (0.5, 0.25)
        assert gradient_log([0.5]) == (2.0,)


class TestGradientSchedule:
    def test_single_client_consumes_budget(self):
        decision, _ = gradient_schedule(SchedulerInput((1.0,), (0.5,), 5))
        assert decision.slots == (5,)

    def test_hand_enumerated_two_clients(self):
        inp = SchedulerInput((1.0, 1.0), (0.9, 0.1), 3)
        decision, value = gradient_schedule(inp)
        assert decision.slots == (3, 0)
        best = max(
            allocation_objective(inp, s) for s in [(3, 0), (2, 1), (1, 2), (0, 3)]
        )
        assert value == best

    def test_budget_saturation(self):
        rng = substream(31, 0)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            cap = int(rng.integers(1, 20))
            inp = SchedulerInput(
                tuple(float(w) for w in rng.uniform(0.1, 5.0, n)),
                tuple(float(a) for a in rng.uniform(0.05, 0.95, n)),
                cap,
            )
            decision, _ = gradient_schedule(inp)
            assert decision.total == cap

    def test_scale_invariance(self):
        rng = substream(32, 0)
        for _ in range(30):
            n = int(rng.integers(2, 5))
            weights = tuple(float(w) for w in rng.uniform(0.1, 5.0, n))
            alphas = tuple(float(a) for a in rng.uniform(0.1, 0.9, n))
            base, _ = gradient_schedule(SchedulerInput(weights, alphas, 9))
            for scale in (0.25, 2.0, 64.0):  # power-of-two scaling is lossless
                scaled, _ = gradient_schedule(
                    SchedulerInput(tuple(scale * w for w in weights), alphas, 9)
                )
                assert scaled.slots == base.slots

    def test_largest_weight_gets_most_slots_under_equal_alphas(self):
        rng = substream(33, 0)
        for _ in range(30):
            n = int(rng.integers(2, 5))
            weights = tuple(float(w) for w in rng.uniform(0.1, 5.0, n))
            alpha = float(rng.uniform(0.2, 0.9))
            decision, _ = gradient_schedule(SchedulerInput(weights, (alpha,) * n, 11))
            top = max(range(n), key=lambda i: weights[i])
            assert decision.slots[top] == max(decision.slots)

    def test_matches_brute_force_on_random_instances(self):
        rng = substream(34, 0)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            cap = int(rng.integers(1, 13))
            inp = SchedulerInput(
                tuple(float(w) for w in rng.uniform(0.05, 10.0, n)),
                tuple(float(a) for a in rng.uniform(0.02, 0.98, n)),
                cap,
            )
            _, greedy_value = gradient_schedule(inp)
            _, brute_value = brute_force_schedule(inp)
            assert abs(greedy_value - brute_value) <= 1e-12


class TestBruteForce:
    def test_tie_breaks_lexicographically(self):
        inp = SchedulerInput((1.0, 1.0), (0.5, 0.5), 1)
        brute, brute_value = brute_force_schedule(inp)
        greedy, greedy_value = gradient_schedule(inp)
        assert brute.slots == (0, 1)
        assert greedy.slots == (1, 0)  # greedy index rule prefers client 0
        assert brute_value == greedy_value

    def test_size_guard(self):
        with pytest.raises(ValueError):
            brute_force_schedule(SchedulerInput((1.0,) * 7, (0.5,) * 7, 4))
        with pytest.raises(ValueError):
            brute_force_schedule(SchedulerInput((1.0, 1.0), (0.5, 0.5), 17))

    def test_iter_allocations_counts(self):
        assert len(list(iter_allocations(1, 3))) == 4
        assert len(list(iter_allocations(2, 2))) == 6
        assert len(list(iter_allocations(3, 4))) == 35


class TestFixedSchedule:
    def test_even_split(self):
        assert fixed_schedule(4, 24).slots == (6, 6, 6, 6)

    def test_remainder_to_lowest_indices(self):
        assert fixed_schedule(8, 20).slots == (3, 3, 3, 3, 2, 2, 2, 2)

    def test_single_client(self):
        assert fixed_schedule(1, 7).slots == (7,)

    def test_zero_capacity(self):
        assert fixed_schedule(3, 0).slots == (0, 0, 0)


class TestRandomSchedule:
    def test_zero_capacity(self):
        decision = random_schedule(3, 0, substream(41, 0))
        assert decision.slots == (0, 0, 0)

    def test_sum_always_capacity(self):
        rng = substream(42, 0)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            cap = int(rng.integers(0, 25))
            assert random_schedule(n, cap, rng).total == cap

    def test_uniform_over_compositions(self):
        rng = substream(43, 0)
        counts = {(0, 2): 0, (1, 1): 0, (2, 0): 0}
        draws = 100_000
        for _ in range(draws):
            counts[random_schedule(2, 2, rng).slots] += 1
        sigma = math.sqrt((1 / 3) * (2 / 3) / draws)
        for slots, count in counts.items():
            assert abs(count / draws - 1 / 3) <= 3 * sigma, slots

    def test_deterministic_under_seed(self):
        a = [random_schedule(4, 9, substream(44, 0, i)).slots for i in range(20)]
        b = [random_schedule(4, 9, substream(44, 0, i)).slots for i in range(20)]
        assert a == b


class TestInputValidation:
    def test_decision_rejects_negative(self):
        with pytest.raises(ValueError):
            ScheduleDecision((1, -1))

    def test_input_rejects_bad_weight(self):
        with pytest.raises(ValueError):
            SchedulerInput((0.0, 1.0), (0.5, 0.5), 3)
        with pytest.raises(ValueError):
            SchedulerInput((1.0, float("inf")), (0.5, 0.5), 3)

    def test_input_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            SchedulerInput((1.0,), (1.0,), 3)

    def test_input_rejects_bad_capacity(self):
        with pytest.raises(ValueError):
            SchedulerInput((1.0,), (0.5,), 0)
