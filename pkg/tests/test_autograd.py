"""Gradient-core checks: every op against central finite differences."""

import numpy as np
import pytest

from flowshop import autograd as ag
from flowshop.autograd import Tensor


def numeric_grad(fn, values: list[np.ndarray], eps: float = 1e-6) -> list[np.ndarray]:
    """Central finite differences of a scalar fn over a list of arrays."""
    grads = []
    for target in values:
        g = np.zeros_like(target)
        flat = target.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = fn(values)
            flat[idx] = orig - eps
            down = fn(values)
            flat[idx] = orig
            gflat[idx] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def check_op(build, shapes, seed=0, rtol=1e-6, atol=1e-8):
    """Compare analytic and numeric gradients of scalar-valued `build`."""
    rng = np.random.Generator(np.random.PCG64(seed))
    values = [rng.normal(0.0, 1.0, size=shape) for shape in shapes]

    tensors = [Tensor(v.copy(), requires_grad=True) for v in values]
    out = build(tensors)
    out.backward()

    def fn(vals):
        return float(build([Tensor(v) for v in vals]).data)

    numeric = numeric_grad(fn, [v.copy() for v in values])
    for t, num in zip(tensors, numeric):
        assert t.grad is not None
        np.testing.assert_allclose(t.grad, num, rtol=rtol, atol=atol)


class TestElementwise:
    def test_add_broadcast(self):
        check_op(lambda ts: ((ts[0] + ts[1]) * (ts[0] + ts[1])).sum(), [(3, 4), (4,)])

    def test_sub_and_neg(self):
        check_op(lambda ts: ((ts[0] - ts[1]) * ts[0]).sum(), [(2, 3), (2, 3)])

    def test_mul_broadcast(self):
        check_op(lambda ts: (ts[0] * ts[1]).sum(), [(2, 3, 4), (4,)])

    def test_div(self):
        def build(ts):
            denom = ts[1] * ts[1] + 1.0  # keep away from zero
            return (ts[0] / denom).sum()

        check_op(build, [(3, 3), (3, 3)])

    def test_pow_sqrt(self):
        def build(ts):
            sq = ts[0] * ts[0] + 0.5
            return (sq.pow(1.5) + sq.sqrt()).sum()

        check_op(build, [(4,)])

    def test_nonlinearities(self):
        check_op(lambda ts: (ts[0].tanh() + ts[0].sigmoid() + ts[0].relu()).sum(), [(5, 2)], seed=3)

    def test_exp_log(self):
        def build(ts):
            pos = ts[0] * ts[0] + 0.1
            return (pos.log() + (ts[0] * 0.1).exp()).sum()

        check_op(build, [(6,)])


class TestMatmul:
    def test_plain(self):
        check_op(lambda ts: (ts[0] @ ts[1]).sum(), [(3, 4), (4, 2)])

    def test_batched_with_broadcast_rhs(self):
        check_op(lambda ts: (ts[0] @ ts[1]).sum(), [(2, 3, 4), (4, 5)])

    def test_batched_both(self):
        check_op(lambda ts: (ts[0] @ ts[1]).sum(), [(2, 3, 4), (2, 4, 2)])

    def test_requires_2d(self):
        with pytest.raises(ValueError):
            Tensor(np.ones(3)) @ Tensor(np.ones((3, 2)))


class TestReductions:
    def test_sum_axis_keepdims(self):
        check_op(lambda ts: (ts[0].sum(axis=1, keepdims=True) * ts[0]).sum(), [(3, 4)])

    def test_mean_axes_tuple(self):
        check_op(lambda ts: (ts[0].mean(axis=(0, 1)) * ts[0].mean(axis=(0, 1))).sum(), [(2, 3, 4)])

    def test_max_routes_to_argmax(self):
        check_op(lambda ts: (ts[0].max(axis=1) * ts[0].max(axis=1)).sum(), [(4, 5)], seed=7)

    def test_max_keepdims(self):
        check_op(lambda ts: (ts[0] - ts[0].max(axis=-1, keepdims=True)).pow(2.0).sum(), [(3, 4)], seed=8)


class TestSoftmaxFamily:
    def test_softmax_grad(self):
        check_op(lambda ts: (ts[0].softmax(axis=-1) * ts[1]).sum(), [(3, 5), (3, 5)])

    def test_log_softmax_grad(self):
        check_op(lambda ts: (ts[0].log_softmax(axis=-1) * ts[1]).sum(), [(3, 5), (3, 5)])

    def test_masked_minus_inf_exact_zero(self):
        x = np.array([[1.0, -np.inf, 2.0, -np.inf]])
        p = Tensor(x).softmax(axis=-1)
        assert p.data[0, 1] == 0.0 and p.data[0, 3] == 0.0
        assert p.data.sum() == pytest.approx(1.0, abs=1e-15)

    def test_masked_grad_stays_finite(self):
        mask = np.array([[True, False, True]])
        t = Tensor(np.array([[0.3, 9.9, -0.2]]), requires_grad=True)
        logits = ag.where(mask, t, Tensor(-np.inf))
        lp = logits.log_softmax(axis=-1)
        loss = -lp.gather(np.array([[0]]), axis=1).sum()
        loss.backward()
        assert np.isfinite(t.grad).all()
        assert t.grad[0, 1] == 0.0  # masked entry receives no gradient

    def test_softmax_matches_explicit_formula(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 6))
        p = Tensor(x).softmax(axis=-1).data
        e = np.exp(x - x.max(axis=-1, keepdims=True))
        np.testing.assert_allclose(p, e / e.sum(axis=-1, keepdims=True), rtol=1e-12)


class TestShapeOps:
    def test_reshape_transpose(self):
        def build(ts):
            y = ts[0].reshape(2, 6).transpose(1, 0)
            return (y * y).sum()

        check_op(build, [(2, 3, 2)])

    def test_concat(self):
        check_op(lambda ts: (ag.concat([ts[0], ts[1]], axis=1).pow(2.0)).sum(), [(2, 3), (2, 2)])

    def test_where(self):
        cond = np.array([[True, False], [False, True]])
        check_op(lambda ts: (ag.where(cond, ts[0], ts[1]) * 2.0).pow(2.0).sum(), [(2, 2), (2, 2)])

    def test_broadcast_to(self):
        check_op(lambda ts: (ts[0].broadcast_to((4, 3)) * ts[1]).sum(), [(1, 3), (4, 3)])

    def test_gather_with_duplicates(self):
        idx = np.array([[0, 0, 2], [1, 1, 1]])
        check_op(lambda ts: (ts[0].gather(idx, axis=1).pow(2.0)).sum(), [(2, 3)])

    def test_gather_rows_with_duplicates(self):
        idx = np.array([[0, 0, 3], [2, 2, 1]])
        check_op(lambda ts: (ag.gather_rows(ts[0], idx).pow(2.0)).sum(), [(2, 4, 3)])


class TestGraphMechanics:
    def test_backward_requires_scalar(self):
        t = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(ValueError):
            (t * 2.0).backward()

    def test_grad_accumulates_over_reuse(self):
        t = Tensor(np.array([3.0]), requires_grad=True)
        y = (t * t + t).sum()  # dy/dt = 2t + 1 = 7
        y.backward()
        assert t.grad[0] == pytest.approx(7.0)

    def test_no_grad_suppresses_graph(self):
        t = Tensor(np.ones(3), requires_grad=True)
        with ag.no_grad():
            out = (t * 2.0).sum()
        assert not out.requires_grad
        assert out._backward is None

    def test_constants_build_no_graph(self):
        out = (Tensor(np.ones(3)) * 2.0).sum()
        assert not out.requires_grad

    def test_diamond_topology(self):
        t = Tensor(np.array([2.0]), requires_grad=True)
        a = t * 3.0
        b = t * 5.0
        y = (a * b).sum()  # y = 15 t^2, dy/dt = 30 t = 60
        y.backward()
        assert t.grad[0] == pytest.approx(60.0)
