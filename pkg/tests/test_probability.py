import numpy as np
import pytest

from conftest import random_unit_rows
from superand.errors import DegenerateInputError, ParameterError
from superand.memory_bank import MemoryBank, init_bank
from superand.numerics import cosine_similarity, softmax_temp
from superand.probability import (
    augmented_pair_probs,
    batch_relationship_vectors,
    excluded_probs,
    instance_probs,
    relationship_vector,
)


class TestInstanceProbs:
    def test_two_orthogonal_rows(self):
        bank = MemoryBank(np.eye(2))
        p = instance_probs(bank, np.array([1.0, 0.0]), tau=1.0)
        np.testing.assert_allclose(p, [0.731059, 0.268941], atol=1e-6)

    def test_identical_rows_uniform(self):
        row = np.array([0.6, 0.8])
        bank = MemoryBank(np.tile(row, (5, 1)))
        p = instance_probs(bank, row, tau=0.07)
        np.testing.assert_allclose(p, 0.2, atol=1e-12)

    def test_composition_with_similarities(self, rng):
        bank = init_bank(64, 12, seed=2)
        v = random_unit_rows(rng, 1, 12)[0]
        p = instance_probs(bank, v, tau=0.07)
        expected = softmax_temp(bank.all_similarities(v), 0.07)
        np.testing.assert_allclose(p, expected, atol=1e-12)

    def test_rotation_invariance(self, rng):
        d = 6
        bank = init_bank(10, d, seed=4)
        v = random_unit_rows(rng, 1, d)[0]
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        rotated = MemoryBank(bank.rows @ q.T, validate=False)
        np.testing.assert_allclose(
            instance_probs(rotated, q @ v, 0.07), instance_probs(bank, v, 0.07), atol=1e-9
        )


class TestExcludedProbs:
    def test_two_rows_degenerate_distribution(self, rng):
        bank = init_bank(2, 8, seed=0)
        v = random_unit_rows(rng, 1, 8)[0]
        p = excluded_probs(bank, v, self_index=0, tau=0.07)
        np.testing.assert_allclose(p, [1.0], atol=1e-12)

    def test_symmetric_three_rows(self):
        # self row orthogonal to two rows that v hits equally
        bank = MemoryBank(np.eye(3))
        v = np.array([0.0, 1.0, 1.0]) / np.sqrt(2.0)
        p = excluded_probs(bank, v, self_index=0, tau=0.5)
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-12)

    def test_delete_and_renormalize_oracle(self, rng):
        for _ in range(20):
            bank = init_bank(16, 6, seed=int(rng.integers(1e6)))
            v = random_unit_rows(rng, 1, 6)[0]
            i = int(rng.integers(0, 16))
            full = instance_probs(bank, v, 0.07)
            expected = np.delete(full, i) / (1.0 - full[i])
            np.testing.assert_allclose(excluded_probs(bank, v, i, 0.07), expected, atol=1e-12)

    def test_excluded_dominates_instance_probs(self, rng):
        bank = init_bank(12, 5, seed=8)
        v = random_unit_rows(rng, 1, 5)[0]
        full = instance_probs(bank, v, 0.07)
        excl = excluded_probs(bank, v, 3, 0.07)
        assert np.all(excl >= np.delete(full, 3) - 1e-15)

    def test_single_row_rejected(self):
        bank = MemoryBank(np.array([[1.0, 0.0]]))
        with pytest.raises(DegenerateInputError):
            excluded_probs(bank, np.array([1.0, 0.0]), 0, 0.07)


class TestRelationshipVector:
    def test_matching_row_entry_is_one(self):
        bank = init_bank(6, 9, seed=3)
        r = relationship_vector(bank, bank.rows[2])
        assert r[2] == pytest.approx(1.0, abs=1e-9)

    def test_unit_input_equals_all_similarities(self, rng):
        bank = init_bank(8, 7, seed=1)
        v = random_unit_rows(rng, 1, 7)[0]
        np.testing.assert_allclose(
            relationship_vector(bank, v), bank.all_similarities(v), atol=1e-12
        )

    def test_per_entry_cosine_oracle(self, rng):
        bank = init_bank(32, 6, seed=6)
        v = rng.standard_normal(6) * 3.0
        r = relationship_vector(bank, v)
        manual = np.array([cosine_similarity(v, row) for row in bank.rows])
        np.testing.assert_allclose(r, manual, atol=1e-12)

    def test_zero_vector_rejected(self):
        bank = init_bank(4, 5, seed=0)
        with pytest.raises(DegenerateInputError):
            relationship_vector(bank, np.zeros(5))

    def test_batch_matches_single(self, rng):
        bank = init_bank(10, 6, seed=2)
        vs = random_unit_rows(rng, 4, 6)
        batch = batch_relationship_vectors(bank, vs)
        for i in range(4):
            np.testing.assert_allclose(batch[i], relationship_vector(bank, vs[i]), atol=1e-12)


class TestAugmentedPairProbs:
    def test_single_instance(self, rng):
        r = rng.standard_normal((1, 8))
        diag, offdiag = augmented_pair_probs(r, r + 0.1, tau=0.5)
        np.testing.assert_allclose(diag, [1.0])
        np.testing.assert_allclose(offdiag, [[0.0]])

    def test_orthogonal_profiles_closed_form(self):
        # identical branches, two orthogonal profiles of squared norm 1
        r = np.eye(2)
        tau = 0.5
        diag, offdiag = augmented_pair_probs(r, r, tau)
        sigma = np.exp(1.0 / tau) / (np.exp(1.0 / tau) + 1.0)
        np.testing.assert_allclose(diag, [sigma, sigma], atol=1e-12)
        np.testing.assert_allclose(offdiag, [[0.0, 1 - sigma], [1 - sigma, 0.0]], atol=1e-12)

    def test_rows_of_implied_softmax_normalize(self, rng):
        r = rng.standard_normal((8, 20))
        r_hat = r + rng.normal(scale=0.1, size=r.shape)
        diag, offdiag = augmented_pair_probs(r, r_hat, tau=0.07)
        logits = r @ r.T / 0.07
        for i in range(8):
            beta_ii = softmax_temp(logits[i], 1.0)[i]
            assert abs(offdiag[i].sum() + beta_ii - 1.0) <= 1e-9
        assert np.all((diag > 0) & (diag <= 1))

    def test_diag_rises_as_hat_profile_approaches_own(self, rng):
        r = random_unit_rows(rng, 5, 16) * 2.0
        r_hat = random_unit_rows(rng, 5, 16) * 2.0
        previous = None
        for t in (0.0, 0.5, 1.0):
            blend = (1 - t) * r_hat + t * r
            diag, _ = augmented_pair_probs(r, blend, tau=0.5)
            if previous is not None:
                assert np.all(diag >= previous - 1e-12)
            previous = diag

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ParameterError):
            augmented_pair_probs(rng.normal(size=(3, 5)), rng.normal(size=(3, 6)), 0.5)
