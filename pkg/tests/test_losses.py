import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from floss import (
    DimensionError,
    SaturationError,
    balanced_celoss,
    binarize,
    celoss,
    f_at_threshold,
    finite_difference_grad,
    floss,
    log_floss,
    loss_surface_grid,
    new_binary_map,
    new_saliency_map,
    relaxed_counts,
    relaxed_f,
)
from floss.losses import balance_weights, evaluate_loss, max_relative_error

B2 = 0.3
LOSSES = ["floss", "logfloss", "ce", "balanced-ce"]


def random_pair(rng, h, w, lo=0.05, hi=0.95):
    pred = rng.uniform(lo, hi, size=(h, w))
    gt = (rng.random((h, w)) < 0.4).astype(float)
    if not gt.any():
        gt[0, 0] = 1.0
    return pred, gt


# ---------------------------------------------------------------- fixtures

def test_relaxed_counts_example(fixture4):
    c = relaxed_counts(*fixture4)
    assert c.tp == pytest.approx(1.5)
    assert c.fp == pytest.approx(0.3)
    assert c.fn_ == pytest.approx(0.5)
    assert (c.n_pos, c.n_neg) == (2, 2)


def test_relaxed_counts_perfect_and_empty():
    gt = new_binary_map(3, 1, [1, 0, 1])
    c = relaxed_counts(gt.as_saliency(), gt)
    assert (c.tp, c.fp, c.fn_) == (2, 0, 0)
    c = relaxed_counts(new_saliency_map(3, 1, [0, 0, 0]), new_binary_map(3, 1, [1, 1, 1]))
    assert (c.tp, c.fp, c.fn_) == (0, 0, 3)


def test_exact_oracle_matches_frozen_fixture():
    # exact rational evaluation of the hand-worked example
    pred = [Fraction(9, 10), Fraction(2, 10), Fraction(6, 10), Fraction(1, 10)]
    gt = [1, 0, 1, 0]
    b2 = Fraction(3, 10)
    assert oracles.relaxed_f(pred, gt, b2) == Fraction(13, 16)
    assert oracles.floss_grad(pred, gt, b2) == [Fraction(-13, 64), Fraction(65, 192)] * 2


def test_relaxed_f_example(fixture4):
    assert relaxed_f(*fixture4, beta2=B2) == pytest.approx(0.8125, abs=1e-12)


def test_relaxed_f_perfect_and_empty():
    gt = new_binary_map(2, 2, [1, 0, 0, 1])
    assert relaxed_f(gt.as_saliency(), gt) == pytest.approx(1.0, abs=1e-12)
    z = new_binary_map(2, 2, [0, 0, 0, 0])
    assert relaxed_f(z.as_saliency(), z) == 0.0


def test_floss_example(fixture4):
    res = floss(*fixture4, beta2=B2)
    assert res.loss == pytest.approx(0.1875, abs=1e-12)
    np.testing.assert_allclose(res.grad.flat(), [-13 / 64, 65 / 192, -13 / 64, 65 / 192], atol=1e-12)


def test_floss_saturation_value():
    gt = new_binary_map(2, 1, [1, 0])
    res = floss(gt.as_saliency(), gt, beta2=B2)
    assert res.loss == pytest.approx(0.0, abs=1e-15)
    assert res.grad.flat()[0] == pytest.approx(-0.3 / 1.3, abs=1e-12)


def test_floss_empty_image_convention():
    z = new_binary_map(3, 1, [0, 0, 0])
    assert floss(z.as_saliency(), z).loss == 1.0


def test_log_floss_example(fixture4):
    res = log_floss(*fixture4, beta2=B2)
    assert res.loss == pytest.approx(-math.log(0.8125), abs=1e-12)
    np.testing.assert_allclose(res.grad.flat(), [-0.25, 5 / 12, -0.25, 5 / 12], atol=1e-12)


def test_log_floss_perfect_and_saturated():
    gt = new_binary_map(2, 1, [1, 0])
    assert log_floss(gt.as_saliency(), gt).loss == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SaturationError):
        log_floss(new_saliency_map(2, 1, [0, 0]), gt)


def test_celoss_examples():
    pred = new_saliency_map(2, 1, [0.5, 0.5])
    gt = new_binary_map(2, 1, [1, 0])
    assert celoss(pred, gt).loss == pytest.approx(2 * math.log(2), abs=1e-7)
    assert celoss(pred, gt).loss == pytest.approx(oracles.ce_loss([0.5, 0.5], [1, 0]), abs=1e-7)
    assert celoss(gt.as_saliency(), gt).loss < 2 * 1e-7
    g = celoss(new_saliency_map(1, 1, [0.01]), new_binary_map(1, 1, [1])).grad.flat()[0]
    assert g == pytest.approx(-100, rel=1e-6)


def test_celoss_mean_reduction(rng):
    pred, gt = random_pair(rng, 4, 4)
    s, m = celoss(pred, gt), celoss(pred, gt, reduction="mean")
    assert m.loss == pytest.approx(s.loss / 16)
    np.testing.assert_allclose(m.grad.values, s.grad.values / 16)


def test_balance_weights_example():
    assert balance_weights(np.array([[1, 0, 0, 0]])) == (0.75, 0.25)


def test_balanced_ce_halves_ce_when_balanced(rng):
    pred = rng.uniform(0.05, 0.95, size=(1, 4))
    gt = np.array([[1.0, 1.0, 0.0, 0.0]])
    assert balanced_celoss(pred, gt).loss == pytest.approx(0.5 * celoss(pred, gt).loss, rel=1e-12)
    np.testing.assert_allclose(balanced_celoss(pred, gt).grad.values, 0.5 * celoss(pred, gt).grad.values)


def test_balanced_ce_all_positive_is_zero(rng):
    pred = rng.uniform(0.05, 0.95, size=(2, 2))
    assert balanced_celoss(pred, np.ones((2, 2))).loss == 0.0


def test_shape_mismatch_raises():
    for fn in (floss, log_floss, celoss, balanced_celoss, relaxed_counts):
        with pytest.raises(DimensionError):
            fn(np.zeros((2, 2)), np.zeros((2, 3)))


# ------------------------------------------------------------ gradients

def test_fd_floss_example(fixture4):
    fd = finite_difference_grad("floss", *fixture4, h=1e-5, beta2=B2)
    assert max_relative_error(floss(*fixture4).grad, fd) < 1e-6


def test_fd_celoss_example():
    fd = finite_difference_grad("ce", np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]), h=1e-5)
    np.testing.assert_allclose(fd.flat(), [-2, 2], rtol=1e-6)


def test_fd_matches_independent_oracle(rng):
    pred, gt = random_pair(rng, 3, 3)
    f = lambda p: 1 - oracles.relaxed_f(p, gt.ravel().tolist(), B2)  # noqa: E731
    ref = oracles.central_difference(f, pred.ravel().tolist(), 1e-6)
    np.testing.assert_allclose(floss(pred, gt).grad.flat(), ref, rtol=1e-6)


@pytest.mark.parametrize("name", LOSSES)
@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (16, 16)])
def test_gradient_matches_finite_differences(name, shape, rng):
    for _ in range(3):
        pred, gt = random_pair(rng, *shape)
        analytic = evaluate_loss(name, pred, gt, beta2=B2).grad
        numeric = finite_difference_grad(name, pred, gt, h=1e-5, beta2=B2)
        assert max_relative_error(analytic, numeric) < 1e-6


def test_fd_clamps_at_boundary():
    fd = finite_difference_grad("floss", np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]), h=1e-5)
    assert np.all(np.isfinite(fd.values))


def test_log_floss_ratio_identity(rng):
    for _ in range(20):
        pred, gt = random_pair(rng, 4, 4)
        f = relaxed_f(pred, gt)
        np.testing.assert_allclose(log_floss(pred, gt).grad.values, floss(pred, gt).grad.values / f, rtol=1e-12)


# ------------------------------------------------------------ properties

maps = st.integers(1, 6).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0, 1), min_size=n, max_size=n),
        st.lists(st.sampled_from([0.0, 1.0]), min_size=n, max_size=n),
    )
)


@given(maps, st.floats(0.05, 5.0))
def test_floss_sign_structure(pair, b2):
    pred, gt = (np.array([v]) for v in pair)
    g = floss(pred, gt, beta2=b2).grad.values
    assert np.all(g[gt == 1] <= 0)
    assert np.all(g[gt == 0] >= 0)


@given(maps, st.floats(0.05, 5.0))
def test_floss_gradient_bound(pair, b2):
    pred, gt = (np.array([v]) for v in pair)
    n_pos = gt.sum()
    if n_pos == 0:
        return
    g = floss(pred, gt, beta2=b2).grad.values
    assert np.all(np.abs(g) <= 2 * (1 + b2) / (b2 * n_pos))


@given(maps)
def test_floss_in_unit_interval(pair):
    pred, gt = (np.array([v]) for v in pair)
    assert 0.0 <= floss(pred, gt).loss <= 1.0


@given(maps)
def test_counts_identity_exact(pair):
    pred, gt = (np.array([v]) for v in pair)
    c = relaxed_counts(pred, gt)
    assert c.tp + c.fn_ == gt.sum()


@given(st.integers(1, 8), st.integers(1, 8), st.floats(0.05, 3.0), st.randoms(use_true_random=False))
def test_saturation_gradient(h, w, b2, r):
    gt = np.array([[r.random() < 0.5 for _ in range(w)] for _ in range(h)], dtype=float)
    if not gt.any():
        gt[0, 0] = 1
    n_pos = gt.sum()
    g = floss(gt, gt, beta2=b2).grad.values
    np.testing.assert_allclose(g[gt == 1], -b2 / ((1 + b2) * n_pos), atol=1e-12)
    assert celoss(gt, gt).loss < gt.size * 1e-7


@settings(max_examples=200)
@given(maps, st.floats(0, 1), st.floats(0.1, 3.0))
def test_binary_input_consistency(pair, t, b2):
    pred, gt = (np.array([v]) for v in pair)
    b = binarize(pred, t)
    assert relaxed_f(b, gt, beta2=b2) == f_at_threshold(pred, gt, t, beta2=b2)[2]


def test_ce_gradient_unbounded():
    g = celoss(np.array([[1e-6]]), np.array([[1.0]])).grad.values[0, 0]
    assert abs(g) > 1e5


# ---------------------------------------------------------------- surface

def test_surface_corners():
    grid = loss_surface_grid("floss", np.array([[0.0, 1.0]]), beta2=B2, resolution=11)
    assert grid.shape == (121, 3)
    rows = {(round(a, 6), round(b, 6)): v for a, b, v in grid}
    assert rows[(0.0, 1.0)] == pytest.approx(0.0, abs=1e-15)
    assert rows[(1.0, 0.0)] == pytest.approx(1.0)


def test_surface_ce_center_and_order():
    grid = loss_surface_grid("ce", np.array([[1.0, 1.0]]), resolution=3)
    assert grid[4, :2].tolist() == [0.5, 0.5]
    assert grid[4, 2] == pytest.approx(2 * math.log(2), abs=1e-7)
    keys = [tuple(r[:2]) for r in grid]
    assert keys == sorted(keys)


def test_surface_logfloss_infinite_corner():
    grid = loss_surface_grid("logfloss", np.array([[0.0, 1.0]]), resolution=3)
    assert math.isinf(grid[6, 2])  # (1, 0): no true positive


def test_surface_errors():
    with pytest.raises(DimensionError):
        loss_surface_grid("floss", np.array([[1.0, 0.0, 1.0]]))
    with pytest.raises(ValueError):
        loss_surface_grid("floss", np.array([[1.0, 0.0]]), resolution=1)


def test_unknown_loss():
    with pytest.raises(ValueError):
        evaluate_loss("dice", np.zeros((1, 1)), np.zeros((1, 1)))
