"""Adam optimizer behavior."""

import numpy as np
import pytest

from msda import autodiff as ad
from msda.errors import ContractError
from msda.optim import Adam


def test_zero_gradient_leaves_params_unchanged():
    p = ad.tensor([1.0, -2.0], requires_grad=True)
    opt = Adam([p], lr=0.1, weight_decay=0.0)
    p.grad = np.zeros(2)
    before = p.data.copy()
    opt.step()
    np.testing.assert_array_equal(p.data, before)


def test_constant_gradient_moves_against_its_sign():
    p = ad.tensor([0.0, 0.0], requires_grad=True)
    opt = Adam([p], lr=0.01)
    for _ in range(20):
        p.grad = np.array([1.0, -3.0])
        opt.step()
    assert p.data[0] < 0.0 and p.data[1] > 0.0


def test_quadratic_convergence():
    # minimize 0.5 * x^2 from x0 = 1
    x = ad.tensor([1.0], requires_grad=True)
    opt = Adam([x], lr=1e-2)
    for _ in range(2000):
        opt.zero_grad()
        loss = ad.tsum(ad.mul(ad.mul(x, x), ad.tensor([0.5])))
        loss.backward()
        opt.step()
    assert abs(x.data[0]) < 1e-3


def test_decoupled_weight_decay_shrinks_params():
    p = ad.tensor([1.0], requires_grad=True)
    opt = Adam([p], lr=0.1, weight_decay=0.5)
    p.grad = np.zeros(1)
    opt.step()
    # zero gradient: only the decay term acts, applied after the adaptive step
    np.testing.assert_allclose(p.data, [1.0 - 0.1 * 0.5 * 1.0])


def test_no_decay_exemption():
    p = ad.tensor([1.0], requires_grad=True)
    q = ad.tensor([1.0], requires_grad=True)
    opt = Adam([p, q], lr=0.1, weight_decay=0.5, no_decay=[q])
    p.grad = np.zeros(1)
    q.grad = np.zeros(1)
    opt.step()
    assert p.data[0] < 1.0
    np.testing.assert_array_equal(q.data, [1.0])


def test_step_counter_increments():
    p = ad.tensor([1.0], requires_grad=True)
    opt = Adam([p])
    assert opt.t == 0
    for k in range(1, 4):
        p.grad = np.ones(1)
        opt.step()
        assert opt.t == k


def test_gradient_shape_mismatch_rejected():
    p = ad.tensor([1.0, 2.0], requires_grad=True)
    opt = Adam([p])
    p.grad = np.ones(3)
    with pytest.raises(ContractError):
        opt.step()


def test_requires_grad_enforced():
    with pytest.raises(ContractError):
        Adam([ad.tensor([1.0])])
