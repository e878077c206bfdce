"""Baseline solvers: NEH, random search, insertion descent, ILS, IG."""

import numpy as np
import pytest

from flowshop.core import Instance, makespan
from flowshop.errors import ValidationError
from flowshop.exact import brute_force
from flowshop.heuristics import (
    HeuristicBudget,
    IgParams,
    insertion_makespans,
    iterated_greedy,
    iterated_local_search,
    local_search_insert,
    neh,
    random_search,
)
from flowshop.instances import DatasetSpec, generate

from conftest import oracle_makespan, random_instance


def identical_jobs_instance(n=5, m=3):
    col = np.array([2.0, 1.0, 3.0])[:m]
    return Instance(np.tile(col[:, None], (1, n)))


class TestBudget:
    def test_needs_some_limit(self):
        with pytest.raises(ValidationError):
            HeuristicBudget()

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            HeuristicBudget(max_iterations=-1)
        with pytest.raises(ValidationError):
            HeuristicBudget(max_time=0.0)


class TestInsertionMakespans:
    def test_matches_naive_scan(self, rng):
        # front/tail acceleration equals full re-evaluation at every position
        for _ in range(30):
            inst = random_instance(rng, n=int(rng.integers(2, 9)), m=int(rng.integers(1, 6)))
            seq = list(rng.permutation(inst.n))
            job = seq.pop(int(rng.integers(0, inst.n)))
            fast = insertion_makespans(inst.times, seq, job)
            naive = [
                oracle_makespan(inst.times, seq[:pos] + [job] + seq[pos:])
                for pos in range(len(seq) + 1)
            ]
            assert np.allclose(fast, naive, atol=1e-9)

    def test_empty_sequence(self):
        inst = Instance(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.allclose(insertion_makespans(inst.times, [], 1), [6.0])


class TestNeh:
    def test_identical_jobs_identity_order(self):
        perm, value = neh(identical_jobs_instance())
        assert list(perm) == [0, 1, 2, 3, 4]
        assert value == makespan(identical_jobs_instance(), perm)

    def test_single_machine_returns_phase1_order(self, rng):
        inst = Instance(rng.gamma(1, 2, (1, 5)))
        perm, value = neh(inst)
        totals = inst.times.sum(axis=0)
        assert list(perm) == sorted(range(5), key=lambda j: (-totals[j], j))
        assert value == pytest.approx(inst.times.sum())

    def test_single_job(self):
        inst = Instance(np.array([[2.0], [3.0]]))
        perm, value = neh(inst)
        assert list(perm) == [0] and value == 5.0

    def test_value_matches_makespan(self, rng):
        for _ in range(20):
            inst = random_instance(rng, n=int(rng.integers(2, 12)), m=int(rng.integers(1, 6)))
            perm, value = neh(inst)
            assert value == pytest.approx(makespan(inst, perm), abs=1e-9)

    def test_near_optimal_on_small_suite(self):
        # n <= 8: NEH never beats the optimum and stays within 5% on average
        suite = generate(DatasetSpec(count=40, jobs=8, machines=5, dist="gamma", seed=61))
        suite += generate(DatasetSpec(count=10, jobs=6, machines=3, dist="gamma", seed=62))
        gaps = []
        for inst in suite:
            _, opt = brute_force(inst)
            _, nv = neh(inst)
            assert nv >= opt - 1e-9
            gaps.append(100.0 * (nv - opt) / opt)
        assert np.mean(gaps) <= 5.0

    def test_insertion_chooses_best_position_each_step(self, rng):
        # replay phase 2 with an exhaustive per-step scan
        inst = random_instance(rng, n=9, m=4)
        totals = inst.times.sum(axis=0)
        order = np.lexsort((np.arange(inst.n), -totals))
        seq = [int(order[0])]
        for job in order[1:]:
            best = min(
                oracle_makespan(inst.times, seq[:pos] + [int(job)] + seq[pos:])
                for pos in range(len(seq) + 1)
            )
            ms = insertion_makespans(inst.times, seq, int(job))
            pos = len(ms) - 1 - int(np.argmin(ms[::-1]))  # same tie rule as neh()
            assert ms[pos] == pytest.approx(best, abs=1e-9)
            seq.insert(pos, int(job))
        perm, value = neh(inst)
        assert list(perm) == seq and value == pytest.approx(makespan(inst, seq))


class TestRandomSearch:
    def test_single_job(self):
        inst = Instance(np.array([[2.0], [3.0]]))
        perm, value = random_search(inst, HeuristicBudget(max_iterations=10, rng_seed=0))
        assert list(perm) == [0] and value == 5.0

    def test_identical_jobs(self):
        inst = identical_jobs_instance()
        _, value = random_search(inst, HeuristicBudget(max_iterations=5, rng_seed=1))
        assert value == pytest.approx(makespan(inst, np.arange(inst.n)))

    def test_deterministic_given_seed(self, rng):
        inst = random_instance(rng, n=8, m=4)
        a = random_search(inst, HeuristicBudget(max_iterations=300, rng_seed=9))
        b = random_search(inst, HeuristicBudget(max_iterations=300, rng_seed=9))
        assert list(a[0]) == list(b[0]) and a[1] == b[1]

    def test_zero_iterations_rejected(self, rng):
        inst = random_instance(rng, n=4, m=2)
        with pytest.raises(ValidationError):
            random_search(inst, HeuristicBudget(max_iterations=0))

    def test_close_to_optimum_with_generous_budget(self):
        # 10000 samples on n=6 lands within 2% of optimum on >= 95% of seeds
        suite = generate(DatasetSpec(count=10, jobs=6, machines=4, dist="gamma", seed=77))
        hits = total = 0
        for inst in suite:
            _, opt = brute_force(inst)
            for seed in range(5):
                _, value = random_search(inst, HeuristicBudget(max_iterations=10000, rng_seed=seed))
                total += 1
                hits += value <= opt * 1.02 + 1e-12
        assert hits / total >= 0.95

    def test_respects_time_budget(self, rng):
        import time

        inst = random_instance(rng, n=30, m=5)
        budget = HeuristicBudget(max_time=0.2, rng_seed=3)
        start = time.perf_counter()
        random_search(inst, budget)
        assert time.perf_counter() - start < 0.2 * 1.5 + 0.1


class TestLocalSearchInsert:
    def test_fixed_point_unchanged(self, rng):
        inst = random_instance(rng, n=7, m=4)
        perm, value = local_search_insert(inst, rng.permutation(7))
        again, value2 = local_search_insert(inst, perm)
        assert list(again) == list(perm) and value2 == value

    def test_single_machine_unchanged(self, rng):
        inst = Instance(rng.gamma(1, 2, (1, 6)))
        start = rng.permutation(6)
        perm, _ = local_search_insert(inst, start)
        assert list(perm) == list(start)

    def test_never_worse_and_locally_optimal(self, rng):
        for _ in range(10):
            inst = random_instance(rng, n=7, m=3)
            start = rng.permutation(7)
            perm, value = local_search_insert(inst, start)
            assert value <= makespan(inst, start) + 1e-12
            # exhaustive neighborhood scan: no single reinsertion improves
            seq = list(perm)
            for idx in range(7):
                rest = seq[:idx] + seq[idx + 1 :]
                for pos in range(7):
                    cand = rest[:pos] + [seq[idx]] + rest[pos:]
                    assert oracle_makespan(inst.times, cand) >= value - 1e-9

    def test_budget_truncation(self, rng):
        inst = random_instance(rng, n=10, m=4)
        start = rng.permutation(10)
        perm, value = local_search_insert(inst, start, HeuristicBudget(max_iterations=1))
        assert value <= makespan(inst, start) + 1e-12


class TestIteratedLocalSearch:
    def test_zero_outer_iterations_is_one_descent(self, rng):
        inst = random_instance(rng, n=8, m=3)
        budget = HeuristicBudget(max_iterations=0, rng_seed=5)
        perm, value = iterated_local_search(inst, budget)
        start = np.random.Generator(np.random.PCG64(5)).permutation(8)
        ref_perm, ref_value = local_search_insert(inst, start)
        assert list(perm) == list(ref_perm) and value == ref_value

    def test_identical_jobs(self):
        inst = identical_jobs_instance()
        _, value = iterated_local_search(inst, HeuristicBudget(max_iterations=3, rng_seed=0))
        assert value == pytest.approx(makespan(inst, np.arange(inst.n)))

    def test_beats_random_search_generously_budgeted(self):
        suite = generate(DatasetSpec(count=8, jobs=8, machines=5, dist="gamma", seed=88))
        ils_mean = np.mean(
            [iterated_local_search(i, HeuristicBudget(max_iterations=50, rng_seed=3))[1] for i in suite]
        )
        rs_mean = np.mean(
            [random_search(i, HeuristicBudget(max_iterations=1000, rng_seed=3))[1] for i in suite]
        )
        assert ils_mean <= rs_mean + 1e-9

    def test_deterministic(self, rng):
        inst = random_instance(rng, n=9, m=4)
        budget = HeuristicBudget(max_iterations=10, rng_seed=21)
        a = iterated_local_search(inst, budget)
        b = iterated_local_search(inst, budget)
        assert list(a[0]) == list(b[0]) and a[1] == b[1]


class TestIteratedGreedy:
    def test_neh_fixed_point_with_zero_temperature(self):
        # single machine: nothing improves, temperature 0 rejects all worsening
        inst = Instance(np.array([[3.0, 1.0, 2.0, 5.0]]))
        neh_perm, neh_value = neh(inst)
        params = IgParams(
            d_jobs=2,
            acceptance_temperature=0.0,
            budget=HeuristicBudget(max_iterations=1, rng_seed=0),
            init="neh",
        )
        perm, value = iterated_greedy(inst, params)
        assert value == neh_value

    def test_single_machine_equals_neh_value(self, rng):
        inst = Instance(rng.gamma(1, 2, (1, 6)))
        params = IgParams(d_jobs=2, budget=HeuristicBudget(max_iterations=3, rng_seed=1))
        _, value = iterated_greedy(inst, params)
        assert value == pytest.approx(neh(inst)[1])

    def test_destruction_size_guard(self, rng):
        inst = random_instance(rng, n=4, m=2)
        with pytest.raises(ValidationError):
            iterated_greedy(inst, IgParams(d_jobs=4, budget=HeuristicBudget(max_iterations=1)))

    def test_neh_init_never_worse_than_neh(self, rng):
        for seed in range(5):
            inst = random_instance(rng, n=10, m=4)
            params = IgParams(
                d_jobs=3, budget=HeuristicBudget(max_iterations=10, rng_seed=seed), init="neh"
            )
            _, value = iterated_greedy(inst, params)
            assert value <= neh(inst)[1] + 1e-9

    def test_mean_not_worse_than_ils_small_suite(self):
        # paired run at n=8 with the harness-default style budgets
        suite = generate(DatasetSpec(count=25, jobs=8, machines=5, dist="gamma", seed=99))
        ig_vals, ils_vals = [], []
        for k, inst in enumerate(suite):
            ig_vals.append(
                iterated_greedy(
                    inst,
                    IgParams(
                        d_jobs=4,
                        budget=HeuristicBudget(max_iterations=5, rng_seed=k),
                        inner_iterations=10,
                    ),
                )[1]
            )
            ils_vals.append(
                iterated_local_search(
                    inst,
                    HeuristicBudget(max_iterations=3, rng_seed=k),
                    inner_iterations=10,
                )[1]
            )
        assert np.mean(ig_vals) <= np.mean(ils_vals) + 1e-9

    def test_deterministic(self, rng):
        inst = random_instance(rng, n=9, m=3)
        params = IgParams(d_jobs=3, budget=HeuristicBudget(max_iterations=8, rng_seed=4))
        a = iterated_greedy(inst, params)
        b = iterated_greedy(inst, params)
        assert list(a[0]) == list(b[0]) and a[1] == b[1]


class TestAnytimeProperty:
    def test_more_budget_never_hurts(self, rng):
        inst = random_instance(rng, n=10, m=4)
        values = [
            random_search(inst, HeuristicBudget(max_iterations=it, rng_seed=11))[1]
            for it in (10, 100, 1000)
        ]
        assert values[0] >= values[1] >= values[2]
        ils = [
            iterated_local_search(inst, HeuristicBudget(max_iterations=it, rng_seed=11))[1]
            for it in (0, 5, 20)
        ]
        assert ils[0] >= ils[1] >= ils[2]
        ig = [
            iterated_greedy(
                inst, IgParams(d_jobs=3, budget=HeuristicBudget(max_iterations=it, rng_seed=11))
            )[1]
            for it in (1, 5, 20)
        ]
        assert ig[0] >= ig[1] >= ig[2]
