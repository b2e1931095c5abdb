"""Optimizer tests: reference-Adam trajectory oracle, freezing, lr schedule."""

from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nvsr import tensor as T
from nvsr.errors import ContractError
from nvsr.optim import Adam, ParamGroup, lr_at
from nvsr.tensor import Tensor


def reference_adam(w0, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam loop, written directly from the update equations."""
    w = w0.astype(np.float64).copy()
    m = np.zeros_like(w)
    v = np.zeros_like(w)
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        w = w - lr * mhat / (np.sqrt(vhat) + eps)
        out.append(w.copy())
    return out


def sched(total=100, base=1e-3, warm=0.1):
    return SimpleNamespace(total_epochs=total, base_lr=base, warmup_frac=warm)


class TestAdamStep:
    def test_first_step_is_signed_lr(self):
        """From zero moments, bias correction makes |update| ~ lr."""
        with T.precision("double"):
            p = Tensor(np.array([1.0, -1.0, 2.0]), trainable=True)
        before = p.data.copy()
        opt = Adam([ParamGroup("all", [p])], lr=1e-2)
        p.grad = np.array([0.5, -0.25, 3.0])
        opt.step()
        assert_allclose(before - p.data, 1e-2 * np.sign([0.5, -0.25, 3.0]), rtol=1e-5)

    def test_hundred_step_trajectory_matches_reference(self):
        """Quadratic objective, 100 steps, compared against the oracle loop."""
        rng = np.random.default_rng(21)
        w0 = rng.standard_normal(5)
        tgt = rng.standard_normal(5)
        with T.precision("double"):
            p = Tensor(w0, trainable=True)
        opt = Adam([ParamGroup("w", [p])], lr=3e-3)
        mine = []
        grads = []
        w_ref = w0.copy()
        for _ in range(100):
            g = 2.0 * (p.data - tgt)
            grads.append(2.0 * (w_ref - tgt))
            p.grad = g.copy()
            opt.step()
            mine.append(p.data.copy())
            w_ref = reference_adam(w0, grads, 3e-3)[-1]
        ref = reference_adam(w0, grads, 3e-3)
        for a, b in zip(mine, ref):
            assert_allclose(a, b, atol=1e-6)

    def test_grad_cleared_after_step(self):
        p = Tensor(np.ones(3, np.float32), trainable=True)
        opt = Adam([ParamGroup("w", [p])], lr=1e-3)
        p.grad = np.ones(3, np.float32)
        opt.step()
        assert p.grad is None

    def test_missing_grad_on_trainable_raises(self):
        p = Tensor(np.ones(2, np.float32), trainable=True)
        opt = Adam([ParamGroup("w", [p])], lr=1e-3)
        with pytest.raises(ContractError):
            opt.step()

    def test_duplicate_membership_rejected(self):
        p = Tensor(np.ones(2, np.float32), trainable=True)
        with pytest.raises(ContractError):
            Adam([ParamGroup("a", [p]), ParamGroup("b", [p])], lr=1e-3)

    def test_scale_invariance_of_convergence(self):
        """Adam reaches the same minimum basin for loss scales 0.1x and 10x."""
        finals = []
        for c in (0.1, 10.0):
            with T.precision("double"):
                p = Tensor(np.array([1.0]), trainable=True)
            opt = Adam([ParamGroup("w", [p])], lr=0.05)
            for _ in range(200):
                p.grad = 2.0 * c * p.data
                opt.step()
            finals.append(abs(float(p.data[0])))
        assert finals[0] < 0.05 and finals[1] < 0.05


class TestFreezing:
    def _pair(self):
        a = Tensor(np.ones(3, np.float32), trainable=True)
        b = Tensor(np.full(3, 2.0, np.float32), trainable=True)
        opt = Adam([ParamGroup("dec", [a]), ParamGroup("srb", [b])], lr=1e-2)
        return a, b, opt

    def test_frozen_group_bit_identical(self):
        a, b, opt = self._pair()
        opt.set_trainable("srb", False)
        raw = b.data.tobytes()
        for _ in range(10):
            a.grad = np.ones(3, np.float32)
            opt.step()
        assert b.data.tobytes() == raw

    def test_frozen_moments_do_not_advance(self):
        a, b, opt = self._pair()
        opt.set_trainable("srb", False)
        for _ in range(5):
            a.grad = np.ones(3, np.float32)
            opt.step()
        _, _, t = opt.moments(b)
        assert t == 0

    def test_unfreeze_resets_moments_and_updates(self):
        a, b, opt = self._pair()
        a.grad = np.ones(3, np.float32)
        b.grad = np.ones(3, np.float32)
        opt.step()  # srb moves once, accruing moments
        opt.set_trainable("srb", False)
        opt.set_trainable("srb", True)
        m, v, t = opt.moments(b)
        assert t == 0 and not m.any() and not v.any()
        before = b.data.copy()
        a.grad = np.ones(3, np.float32)
        b.grad = np.ones(3, np.float32)
        opt.step()
        assert (b.data != before).all()

    def test_freeze_clears_pending_grads_and_flags(self):
        _, b, opt = self._pair()
        b.grad = np.ones(3, np.float32)
        opt.set_trainable("srb", False)
        assert b.grad is None and not b.trainable and not b.requires_grad
        opt.set_trainable("srb", True)
        assert b.trainable and b.requires_grad

    def test_unknown_group_rejected(self):
        _, _, opt = self._pair()
        with pytest.raises(ContractError):
            opt.set_trainable("nope", True)


class TestLrSchedule:
    def test_end_of_warmup_is_base(self):
        s = sched(total=100, base=2e-3, warm=0.1)
        assert_allclose(lr_at(10, s), 2e-3, rtol=1e-12)

    def test_warmup_is_linear(self):
        s = sched(total=100, base=1e-3, warm=0.1)
        got = [lr_at(e, s) for e in range(10)]
        assert_allclose(got, [1e-3 * (e + 1) / 10 for e in range(10)])

    def test_final_epoch_near_zero(self):
        s = sched(total=300, base=5e-4, warm=0.1)
        assert lr_at(299, s) <= 1e-3 * 5e-4

    def test_decay_midpoint_is_half_base(self):
        s = sched(total=101, base=4e-4, warm=0.0)
        assert_allclose(lr_at(50, s), 2e-4, atol=1e-9 * 4e-4 + 1e-15)

    def test_monotone_decay_after_warmup(self):
        s = sched(total=200, base=1e-3, warm=0.1)
        vals = [lr_at(e, s) for e in range(20, 200)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))

    def test_out_of_range_rejected(self):
        s = sched(total=50)
        with pytest.raises(ContractError):
            lr_at(-1, s)
        with pytest.raises(ContractError):
            lr_at(50, s)

    def test_single_epoch_schedule(self):
        s = sched(total=1, base=1e-3, warm=0.1)
        assert lr_at(0, s) == 1e-3
