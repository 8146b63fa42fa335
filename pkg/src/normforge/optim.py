"""Named parameter stores, the Adam optimizer, and the gradient-check harness.

ParamStore iteration is always sorted by name, so gradient vectors,
checkpoints, and finite-difference sweeps line up across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, backward
from .errors import ShapeError


class ParamStore:
    """Immutable-by-convention mapping name -> parameter Tensor."""

    def __init__(self, params: dict[str, Tensor] | None = None):
        self._params: dict[str, Tensor] = {}
        if params:
            for name in sorted(params):
                self._params[name] = params[name]

    def add(self, name: str, tensor: Tensor) -> None:
        if name in self._params:
            raise ShapeError(f"duplicate parameter name {name!r}")
        self._params[name] = tensor
        self._params = {k: self._params[k] for k in sorted(self._params)}

    def replace(self, name: str, tensor: Tensor) -> "ParamStore":
        """New store with one parameter swapped; the rest are shared."""
        if name not in self._params:
            raise KeyError(name)
        new = dict(self._params)
        new[name] = tensor
        return ParamStore(new)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def total_size(self) -> int:
        return sum(t.data.size for t in self._params.values())


def gradients(loss: Tensor, params: ParamStore) -> list[np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, in store order.

    Parameters the loss does not reach get zero gradients.
    """
    for _, t in params.items():
        t.grad = None
    backward(loss)
    out = []
    for _, t in params.items():
        out.append(t.grad if t.grad is not None else np.zeros_like(t.data))
    return out


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(cls, params: ParamStore, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        return cls(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon, t=0,
                   m={n: np.zeros_like(t.data) for n, t in params.items()},
                   v={n: np.zeros_like(t.data) for n, t in params.items()})


def adam_step(params: ParamStore, grads: list[np.ndarray],
              state: AdamState) -> tuple[ParamStore, AdamState]:
    """One bias-corrected Adam update. Pure: returns new params and state."""
    names = params.names()
    if len(grads) != len(names):
        raise ShapeError(f"got {len(grads)} gradients for {len(names)} parameters")
    t = state.t + 1
    new_params: dict[str, Tensor] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, g in zip(names, grads):
        p = params[name].data
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        new_params[name] = Tensor(p - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon),
                                  requires_grad=True)
        new_m[name] = m
        new_v[name] = v
    new_state = AdamState(lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                          epsilon=state.epsilon, t=t, m=new_m, v=new_v)
    return ParamStore(new_params), new_state


def grad_check(f, params: ParamStore, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per entry is |analytic - fd| / max(|analytic|, |fd|, 1e-12).
    """
    analytic = gradients(f(params), params)
    worst = 0.0
    for name, a_grad in zip(params.names(), analytic):
        base = params[name].data
        flat_a = a_grad.ravel()
        for i in range(base.size):
            plus = base.copy()
            plus.ravel()[i] += h
            minus = base.copy()
            minus.ravel()[i] -= h
            fp = f(params.replace(name, Tensor(plus, requires_grad=True))).item()
            fm = f(params.replace(name, Tensor(minus, requires_grad=True))).item()
            fd = (fp - fm) / (2.0 * h)
            a = flat_a[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-12)
            if rel > worst:
                worst = rel
    return worst
