import numpy as np
import pytest

from conftest import random_unit_rows
from superand.errors import ParameterError
from superand.memory_bank import MemoryBank, init_bank


class TestInit:
    def test_rows_unit_norm(self):
        bank = init_bank(3, 128, seed=7)
        assert bank.count == 3 and bank.dim == 128
        np.testing.assert_allclose(np.linalg.norm(bank.rows, axis=1), 1.0, atol=1e-6)

    def test_deterministic_per_seed(self):
        a = init_bank(10, 16, seed=42)
        b = init_bank(10, 16, seed=42)
        assert np.array_equal(a.rows, b.rows)
        c = init_bank(10, 16, seed=43)
        assert not np.array_equal(a.rows, c.rows)

    def test_high_dim_rows_nearly_orthogonal(self):
        bank = init_bank(1000, 128, seed=1)
        sims = bank.rows @ bank.rows.T
        off = np.abs(sims[~np.eye(1000, dtype=bool)])
        assert off.mean() < 0.25

    def test_bad_sizes_rejected(self):
        with pytest.raises(ParameterError):
            init_bank(0, 8, seed=0)
        with pytest.raises(ParameterError):
            init_bank(4, 1, seed=0)

    def test_non_unit_rows_rejected(self):
        with pytest.raises(ParameterError):
            MemoryBank(np.ones((3, 4)))


class TestEmaUpdate:
    def test_symmetric_blend(self):
        bank = MemoryBank(np.array([[1.0, 0.0], [0.0, 1.0]]))
        bank.ema_update(0, np.array([0.0, 1.0]), eta=0.5)
        np.testing.assert_allclose(bank.rows[0], [0.707107, 0.707107], atol=1e-6)

    def test_full_replacement(self, rng):
        bank = init_bank(4, 8, seed=0)
        v = random_unit_rows(rng, 1, 8)[0]
        bank.ema_update(2, v, eta=1.0)
        np.testing.assert_allclose(bank.rows[2], v, atol=1e-12)

    def test_fixed_point(self):
        bank = init_bank(4, 8, seed=0)
        before = bank.rows[1].copy()
        bank.ema_update(1, before, eta=0.5)
        np.testing.assert_allclose(bank.rows[1], before, atol=1e-12)

    def test_touches_exactly_one_row(self, rng):
        bank = init_bank(6, 8, seed=3)
        before = bank.rows.copy()
        bank.ema_update(4, random_unit_rows(rng, 1, 8)[0], eta=0.5)
        untouched = [i for i in range(6) if i != 4]
        assert np.array_equal(bank.rows[untouched], before[untouched])

    def test_rows_stay_unit_after_many_updates(self, rng):
        bank = init_bank(32, 16, seed=9)
        for _ in range(1000):
            i = int(rng.integers(0, 32))
            bank.ema_update(i, random_unit_rows(rng, 1, 16)[0], eta=float(rng.uniform(0.1, 1.0)))
        np.testing.assert_allclose(np.linalg.norm(bank.rows, axis=1), 1.0, atol=1e-6)

    def test_bad_index_and_eta(self, rng):
        bank = init_bank(4, 8, seed=0)
        v = random_unit_rows(rng, 1, 8)[0]
        with pytest.raises(IndexError):
            bank.ema_update(4, v, eta=0.5)
        for eta in (0.0, -0.1, 1.5):
            with pytest.raises(ParameterError):
                bank.ema_update(0, v, eta=eta)


class TestAllSimilarities:
    def test_self_match(self):
        bank = init_bank(5, 12, seed=11)
        sims = bank.all_similarities(bank.rows[3])
        assert sims[3] == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_vector(self):
        bank = MemoryBank(np.eye(3)[:2])  # rows e0, e1 in R^3
        sims = bank.all_similarities(np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(sims, 0.0, atol=1e-15)

    def test_matches_per_row_loop(self, rng):
        bank = init_bank(64, 10, seed=5)
        v = random_unit_rows(rng, 1, 10)[0]
        sims = bank.all_similarities(v)
        manual = np.array([float(np.dot(row, v)) for row in bank.rows])
        np.testing.assert_allclose(sims, manual, atol=1e-12)

    def test_dim_mismatch(self):
        bank = init_bank(4, 8, seed=0)
        with pytest.raises(ParameterError):
            bank.all_similarities(np.ones(9))
