import numpy as np
import pytest

from conftest import finite_difference, random_unit_rows, relative_error
from superand.errors import DegenerateInputError, ParameterError, StateError
from superand.losses import (
    BatchMembership,
    and_loss,
    aug_loss,
    total_loss,
    ue_loss,
)
from superand.memory_bank import MemoryBank, init_bank
from superand.neighborhood import build_state


def membership(selected_flags, neighbor_lists):
    return BatchMembership(
        selected=np.asarray(selected_flags, dtype=bool),
        neighbor_lists=tuple(np.asarray(nl, dtype=np.int64) for nl in neighbor_lists),
    )


def all_complement(n):
    return membership([False] * n, [[]] * n)


class TestAndLoss:
    def test_singleton_formula(self):
        # unit vs whose self-probability is exactly 0.8 at tau=1
        theta = np.arccos(np.log(4.0) / np.sqrt(2.0)) - np.pi / 4.0
        a, b = np.cos(theta), np.sin(theta)
        bank = MemoryBank(np.eye(2))
        vs = np.array([[a, b], [b, a]])
        value, _ = and_loss(bank, vs, [0, 1], all_complement(2), tau=1.0)
        assert value == pytest.approx(-2.0 * np.log(0.8), abs=1e-9)
        assert value == pytest.approx(0.446287, abs=1e-6)

    def test_full_neighbor_mass_contributes_zero(self, rng):
        bank = init_bank(2, 6, seed=0)
        v = random_unit_rows(rng, 1, 6)
        joined = membership([True], [[1]])  # class of instance 0 covers both rows
        value, grad = and_loss(bank, v, [0], joined, tau=0.07)
        assert value == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_two_row_gradient_closed_form(self):
        bank = MemoryBank(np.eye(2))
        vs = np.array([[1.0, 0.0]])
        value, grad = and_loss(bank, vs, [0], all_complement(1), tau=1.0)
        assert value == pytest.approx(0.313262, abs=1e-6)
        np.testing.assert_allclose(grad, [[-0.268941, 0.268941]], atol=1e-6)

    def test_gradient_matches_finite_differences(self, rng):
        for trial in range(5):
            n, big_n, d = 4, 12, 6
            bank = init_bank(big_n, d, seed=trial)
            vs = random_unit_rows(rng, n, d)
            idx = rng.choice(big_n, size=n, replace=False)
            state = build_state(bank, k=2, round_index=1, total_rounds=2, tau=0.07)
            member = BatchMembership.from_state(state, idx)
            tau = [1.0, 0.5, 0.07, 0.2, 0.07][trial]
            _, grad = and_loss(bank, vs, idx, member, tau)
            numeric = finite_difference(
                lambda x: and_loss(bank, x, idx, member, tau)[0], vs
            )
            assert relative_error(grad, numeric) < 1e-4

    def test_value_non_negative(self, rng):
        bank = init_bank(10, 5, seed=9)
        vs = random_unit_rows(rng, 6, 5)
        idx = rng.choice(10, size=6, replace=False)
        value, _ = and_loss(bank, vs, idx, all_complement(6), tau=0.07)
        assert value >= 0.0

    def test_selected_without_neighbors_rejected(self, rng):
        bank = init_bank(4, 5, seed=1)
        vs = random_unit_rows(rng, 1, 5)
        with pytest.raises(StateError):
            and_loss(bank, vs, [0], membership([True], [[]]), tau=0.07)


class TestUeLoss:
    def test_two_rows_identically_zero(self, rng):
        bank = init_bank(2, 6, seed=2)
        vs = random_unit_rows(rng, 2, 6)
        value, grad = ue_loss(bank, vs, [0, 1], tau=0.07)
        assert value == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_near_one_hot_entropy_floor(self):
        # far-apart rows and a tiny temperature concentrate all mass
        rows = np.eye(8)[:4]
        bank = MemoryBank(rows)
        vs = rows[:2]
        value, _ = ue_loss(bank, vs, [2, 3], tau=0.01)
        assert value == pytest.approx(0.0, abs=1e-9)

    def test_bounds(self, rng):
        bank = init_bank(9, 5, seed=3)
        vs = random_unit_rows(rng, 5, 5)
        value, _ = ue_loss(bank, vs, rng.choice(9, 5, replace=False), tau=0.07)
        assert 0.0 <= value <= 5 * np.log(8) + 1e-12

    def test_gradient_matches_finite_differences(self, rng):
        for trial in range(5):
            n, big_n, d = 3, 8, 5
            bank = init_bank(big_n, d, seed=10 + trial)
            vs = random_unit_rows(rng, n, d)
            idx = rng.choice(big_n, size=n, replace=False)
            tau = [0.07, 0.5, 1.0, 0.07, 0.2][trial]
            _, grad = ue_loss(bank, vs, idx, tau)
            numeric = finite_difference(lambda x: ue_loss(bank, x, idx, tau)[0], vs)
            assert relative_error(grad, numeric) < 1e-4

    def test_single_row_bank_rejected(self):
        bank = MemoryBank(np.array([[0.0, 1.0]]))
        with pytest.raises(DegenerateInputError):
            ue_loss(bank, np.array([[0.0, 1.0]]), [0], tau=0.07)


class TestAugLoss:
    def test_single_instance_is_zero(self, rng):
        bank = init_bank(6, 5, seed=4)
        v = random_unit_rows(rng, 1, 5)
        value, gv, gh = aug_loss(bank, v, v.copy(), tau=0.07)
        assert value == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(gv, 0.0, atol=1e-12)
        np.testing.assert_allclose(gh, 0.0, atol=1e-12)

    def test_orthogonal_profiles_closed_form(self):
        # identical branches; profiles are e0, e1 with squared norm 1; the
        # confusion and matching terms collapse to -2 ln sigma each
        bank = MemoryBank(np.eye(2))
        vs = np.eye(2)
        tau = 0.5
        sigma = np.exp(1.0 / tau) / (np.exp(1.0 / tau) + 1.0)
        value, _, _ = aug_loss(bank, vs, vs.copy(), tau)
        expected = -2.0 * np.log(sigma) - 2.0 * np.log(1.0 - (1.0 - sigma))
        assert value == pytest.approx(expected, abs=1e-9)

    def test_gradients_match_finite_differences(self, rng):
        for trial in range(5):
            n, big_n, d = 4, 10, 6
            bank = init_bank(big_n, d, seed=20 + trial)
            vs = random_unit_rows(rng, n, d)
            v_hats = random_unit_rows(rng, n, d)
            tau = [0.07, 0.5, 1.0, 0.07, 0.25][trial]
            _, grad_v, grad_h = aug_loss(bank, vs, v_hats, tau)
            numeric_v = finite_difference(
                lambda x: aug_loss(bank, x, v_hats, tau)[0], vs
            )
            numeric_h = finite_difference(
                lambda x: aug_loss(bank, vs, x, tau)[0], v_hats
            )
            assert relative_error(grad_v, numeric_v) < 1e-4
            assert relative_error(grad_h, numeric_h) < 1e-4

    def test_branch_shape_mismatch(self, rng):
        bank = init_bank(5, 4, seed=0)
        with pytest.raises(ParameterError):
            aug_loss(bank, random_unit_rows(rng, 2, 4), random_unit_rows(rng, 3, 4), 0.07)

    def test_saturated_confusion_stays_finite(self):
        # duplicate bank rows give profiles of very different norms, driving
        # one confusion probability to 1; the floored log must stay finite
        bank = MemoryBank(np.array([[1.0, 0.0], [1.0, 0.0]]))
        vs = np.array([[0.5, np.sqrt(3) / 2.0], [1.0, 0.0]])
        value, gv, gh = aug_loss(bank, vs, vs.copy(), tau=0.01)
        assert np.isfinite(value)
        assert np.all(np.isfinite(gv)) and np.all(np.isfinite(gh))

    def test_value_reconstructs_from_pair_probs(self, rng):
        # dual route: the loss value must equal the log form assembled from
        # the public pair-probability op over relationship vectors
        from superand.probability import augmented_pair_probs, batch_relationship_vectors

        bank = init_bank(12, 6, seed=30)
        vs = random_unit_rows(rng, 5, 6)
        v_hats = random_unit_rows(rng, 5, 6)
        value, _, _ = aug_loss(bank, vs, v_hats, tau=0.5)
        diag, offdiag = augmented_pair_probs(
            batch_relationship_vectors(bank, vs),
            batch_relationship_vectors(bank, v_hats),
            tau=0.5,
        )
        off = ~np.eye(5, dtype=bool)
        expected = -np.log(diag).sum() - np.log(1.0 - offdiag[off]).sum()
        assert value == pytest.approx(expected, rel=1e-9)


class TestTotalLoss:
    def _components(self, rng, w):
        bank = init_bank(9, 5, seed=5)
        vs = random_unit_rows(rng, 3, 5)
        v_hats = random_unit_rows(rng, 3, 5)
        idx = np.array([0, 4, 7])
        return total_loss(
            and_loss(bank, vs, idx, all_complement(3), 0.07),
            ue_loss(bank, vs, idx, 0.07),
            aug_loss(bank, vs, v_hats, 0.07),
            w,
        )

    def test_zero_weight_drops_entropy_term(self, rng):
        bundle = self._components(rng, 0.0)
        assert bundle.total_value == pytest.approx(bundle.and_value + bundle.aug_value, abs=1e-12)

    def test_arithmetic(self):
        n = 2
        zeros = np.zeros((n, 3))
        bundle = total_loss((1.0, zeros), (2.0, zeros), (3.0, zeros, zeros), 0.2)
        assert bundle.total_value == pytest.approx(4.4, abs=1e-12)

    def test_linearity_in_weight(self, rng):
        b0 = self._components(rng, 0.0)
        rng2 = np.random.default_rng(12345)
        b2 = self._components(rng2, 0.2)
        rng4 = np.random.default_rng(12345)
        b4 = self._components(rng4, 0.4)
        # same inputs (fresh identical rngs), so components are equal and
        # values/gradients must combine linearly in w
        assert b4.total_value - b2.total_value == pytest.approx(0.2 * b2.ue_value, abs=1e-9)
        np.testing.assert_allclose(
            b4.grad_v - b2.grad_v, b2.grad_v - b0.grad_v, atol=1e-12
        )
        np.testing.assert_allclose(b4.grad_v_hat, b2.grad_v_hat, atol=1e-12)

    def test_negative_weight_rejected(self, rng):
        with pytest.raises(ParameterError):
            self._components(rng, -0.1)


class TestPerInstanceSeparability:
    def test_and_ue_rows_independent_of_batch_peers(self, rng):
        bank = init_bank(8, 5, seed=6)
        vs = random_unit_rows(rng, 3, 5)
        idx = np.array([1, 3, 5])
        _, grad_full = and_loss(bank, vs, idx, all_complement(3), 0.07)
        _, grad_sub = and_loss(bank, vs[:1], idx[:1], all_complement(1), 0.07)
        np.testing.assert_allclose(grad_full[0], grad_sub[0], atol=1e-12)
        _, ue_full = ue_loss(bank, vs, idx, 0.07)
        _, ue_sub = ue_loss(bank, vs[:1], idx[:1], 0.07)
        np.testing.assert_allclose(ue_full[0], ue_sub[0], atol=1e-12)
