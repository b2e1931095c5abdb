"""Adam over named parameter groups, with group freezing and an lr schedule.

Freezing a group stops its updates and its moment advancement; unfreezing
restarts its moments from zero so bias correction begins cleanly instead
of replaying stale statistics.  One optimizer instance belongs to one
training loop.
"""

import math

import numpy as np

from .errors import ContractError


class ParamGroup:
    """Named list of parameters sharing one trainability flag."""

    def __init__(self, name, params, trainable=True):
        self.name = name
        self.params = list(params)
        self.trainable = trainable
        for p in self.params:
            p.set_trainable(trainable)


class _Slot:
    __slots__ = ("m", "v", "t")

    def __init__(self, param):
        self.m = np.zeros_like(param.data)
        self.v = np.zeros_like(param.data)
        self.t = 0


class Adam:
    """Bias-corrected Adam.

    Per-parameter step counters advance only when that parameter is
    updated, so a group unfrozen at epoch e warms up its own bias
    correction rather than inheriting the global step count.
    """

    def __init__(self, groups, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        names = [g.name for g in groups]
        if len(set(names)) != len(names):
            raise ContractError(f"duplicate group names: {names}")
        self.groups = list(groups)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._slots = {}
        seen = set()
        for g in self.groups:
            for p in g.params:
                if id(p) in seen:
                    raise ContractError("a parameter may belong to exactly one group")
                seen.add(id(p))
                self._slots[id(p)] = _Slot(p)

    def group(self, name):
        for g in self.groups:
            if g.name == name:
                return g
        raise ContractError(f"no parameter group named {name!r}")

    def step(self, lr=None):
        """Apply one Adam update to every trainable group, then drop grads."""
        if lr is None:
            lr = self.lr
        b1, b2, eps = self.beta1, self.beta2, self.eps
        for g in self.groups:
            if not g.trainable:
                continue
            for p in g.params:
                if p.grad is None:
                    raise ContractError(
                        f"trainable parameter in group {g.name!r} has no gradient"
                    )
                slot = self._slots[id(p)]
                slot.t += 1
                grad = p.grad
                slot.m *= b1
                slot.m += (1.0 - b1) * grad
                slot.v *= b2
                slot.v += (1.0 - b2) * (grad * grad)
                mhat = slot.m / (1.0 - b1**slot.t)
                vhat = slot.v / (1.0 - b2**slot.t)
                p.data -= lr * mhat / (np.sqrt(vhat) + eps)
                p.grad = None

    def set_trainable(self, name, flag):
        """Toggle a group.  False->true resets its moments to zero."""
        g = self.group(name)
        was = g.trainable
        g.trainable = bool(flag)
        for p in g.params:
            p.set_trainable(g.trainable)
            if not g.trainable:
                p.grad = None
        if g.trainable and not was:
            for p in g.params:
                slot = self._slots[id(p)]
                slot.m[...] = 0.0
                slot.v[...] = 0.0
                slot.t = 0

    # Checkpoint plumbing: moments addressed through the owning parameter.
    def moments(self, param):
        slot = self._slots[id(param)]
        return slot.m, slot.v, slot.t

    def load_moments(self, param, m, v, t):
        slot = self._slots[id(param)]
        if m.shape != param.data.shape or v.shape != param.data.shape:
            raise ContractError("moment buffers must be shaped like their parameter")
        slot.m = np.asarray(m, dtype=param.data.dtype).copy()
        slot.v = np.asarray(v, dtype=param.data.dtype).copy()
        slot.t = int(t)


def lr_at(epoch, schedule):
    """Learning rate at an epoch: linear warmup then cosine decay to zero.

    schedule exposes total_epochs, base_lr, warmup_frac.  Pure function.
    """
    total = schedule.total_epochs
    if not 0 <= epoch < total:
        raise ContractError(f"epoch {epoch} outside [0, {total})")
    base = schedule.base_lr
    warm = int(schedule.warmup_frac * total)
    if epoch < warm:
        return base * (epoch + 1) / warm
    span = total - 1 - warm
    if span <= 0:
        return base
    return 0.5 * base * (1.0 + math.cos(math.pi * (epoch - warm) / span))
