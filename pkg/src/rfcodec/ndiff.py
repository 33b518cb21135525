"""Differentiable tensor operations used by the compression networks.

Autodiff is delegated to torch; this module pins down the exact op
surface the models are allowed to use, adds NaN/Inf detection on every
output, and provides the independent verification tooling: a hand-rolled
central finite-difference gradient checker (run in float64) and a small
functional Adam implementation whose state is plain data.

All ops accept float32 or float64 tensors and preserve dtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .errors import DimensionError, NumericsError

_finite_checks_enabled = True


def enable_finite_checks(enabled: bool) -> bool:
    """Toggle NaN/Inf detection on op outputs; returns the previous value."""
    global _finite_checks_enabled
    prev = _finite_checks_enabled
    _finite_checks_enabled = enabled
    return prev


def _guard(name: str, t: torch.Tensor) -> torch.Tensor:
    if _finite_checks_enabled and not torch.isfinite(t).all():
        raise NumericsError(f"{name}: output contains NaN or Inf")
    return t


def _check_conv_shapes(name, x, weight):
    if x.dim() not in (2, 3):
        raise DimensionError(f"{name}: input must be (C, W) or (B, C, W), got {tuple(x.shape)}")
    if weight.dim() != 3:
        raise DimensionError(f"{name}: kernel must be rank 3, got {tuple(weight.shape)}")


def conv1d(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor | None = None,
           stride: int = 1, padding: int = 0) -> torch.Tensor:
    """1-D convolution; kernel layout (C_out, C_in, K).

    Output width is floor((W + 2*padding - K) / stride) + 1.
    """
    _check_conv_shapes("conv1d", x, weight)
    if x.shape[-2] != weight.shape[1]:
        raise DimensionError(
            f"conv1d: input has {x.shape[-2]} channels, kernel expects {weight.shape[1]}")
    if x.shape[-1] + 2 * padding < weight.shape[2]:
        raise DimensionError("conv1d: padded width shorter than the kernel")
    y = torch.nn.functional.conv1d(x, weight, bias, stride=stride, padding=padding)
    return _guard("conv1d", y)


def conv1d_transposed(x: torch.Tensor, weight: torch.Tensor,
                      bias: torch.Tensor | None = None, stride: int = 1,
                      padding: int = 0, output_padding: int = 0) -> torch.Tensor:
    """Transposed 1-D convolution; kernel layout (C_in, C_out, K).

    Output width is (W - 1)*stride - 2*padding + K + output_padding,
    inverting the conv1d width formula.
    """
    _check_conv_shapes("conv1d_transposed", x, weight)
    if x.shape[-2] != weight.shape[0]:
        raise DimensionError(
            f"conv1d_transposed: input has {x.shape[-2]} channels, "
            f"kernel expects {weight.shape[0]}")
    y = torch.nn.functional.conv_transpose1d(
        x, weight, bias, stride=stride, padding=padding, output_padding=output_padding)
    return _guard("conv1d_transposed", y)


def leaky_relu(x: torch.Tensor, negative_slope: float = 0.01) -> torch.Tensor:
    return _guard("leaky_relu", torch.nn.functional.leaky_relu(x, negative_slope))


def _check_axis(name, x, dim):
    if not -x.dim() <= dim < x.dim():
        raise DimensionError(f"{name}: axis {dim} invalid for rank {x.dim()}")


def softmax(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    _check_axis("softmax", x, dim)
    return _guard("softmax", torch.softmax(x, dim=dim))


def log_softmax(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    _check_axis("log_softmax", x, dim)
    return _guard("log_softmax", torch.log_softmax(x, dim=dim))


def mse(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"mse: shapes differ {tuple(a.shape)} vs {tuple(b.shape)}")
    return _guard("mse", torch.mean((a - b) ** 2))


# --- optimizer -----------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment accumulators plus hyperparameters."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


@torch.no_grad()
def adam_step(params: list[torch.Tensor], grads: list[torch.Tensor],
              state: AdamState) -> AdamState:
    """One Adam update, in place on ``params``.

    Deterministic given inputs; moment buffers are created lazily on the
    first call and must keep matching the parameter shapes afterwards.
    """
    if len(params) != len(grads):
        raise DimensionError("adam_step: params and grads differ in length")
    if not state.m:
        state.m = [torch.zeros_like(p) for p in params]
        state.v = [torch.zeros_like(p) for p in params]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            continue
        if p.shape != m.shape:
            raise DimensionError("adam_step: moment shape does not match parameter")
        if state.weight_decay:
            g = g + state.weight_decay * p
        m.mul_(b1).add_(g, alpha=1.0 - b1)
        v.mul_(b2).addcmul_(g, g, value=1.0 - b2)
        denom = (v / bc2).sqrt_().add_(state.eps)
        p.addcdiv_(m, denom, value=-state.lr / bc1)
    return state


class Adam:
    """Convenience wrapper driving adam_step from parameter .grad fields."""

    def __init__(self, params, lr: float = 3e-4, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1],
                               eps=eps, weight_decay=weight_decay)

    def step(self):
        grads = [p.grad if p.grad is not None else torch.zeros_like(p)
                 for p in self.params]
        adam_step(self.params, grads, self.state)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


# --- gradient verification ------------------------------------------------

def central_difference(fn, inputs: list[torch.Tensor], eps: float = 1e-5) -> list[torch.Tensor]:
    """Central finite-difference gradient of a scalar function.

    ``fn`` receives detached float64 clones of ``inputs`` and must return
    a scalar tensor.  This is the independent oracle for autodiff
    results: it never touches torch gradients.
    """
    base = [t.detach().clone().double() for t in inputs]
    grads = []
    for i, t in enumerate(base):
        g = torch.zeros_like(t)
        flat = t.view(-1)
        gflat = g.view(-1)
        for j in range(flat.numel()):
            orig = flat[j].item()
            flat[j] = orig + eps
            fp = float(fn(*base))
            flat[j] = orig - eps
            fm = float(fn(*base))
            flat[j] = orig
            gflat[j] = (fp - fm) / (2.0 * eps)
        grads.append(g)
    return grads


def check_gradients(fn, inputs: list[torch.Tensor], rtol: float = 1e-4,
                    atol: float = 1e-6, eps: float = 1e-5) -> float:
    """Compare autodiff gradients of a scalar function against central
    finite differences, both evaluated in float64.

    Returns the worst relative error seen; raises AssertionError when any
    entry violates |a - n| <= atol + rtol*|n|.
    """
    tracked = [t.detach().clone().double().requires_grad_(True) for t in inputs]
    out = fn(*tracked)
    if out.dim() != 0:
        raise DimensionError("check_gradients: function must return a scalar")
    out.backward()
    analytic = [t.grad if t.grad is not None else torch.zeros_like(t) for t in tracked]
    numeric = central_difference(fn, inputs, eps=eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        err = (a - n).abs()
        bound = atol + rtol * n.abs()
        if (err > bound).any():
            k = int((err - bound).argmax())
            raise AssertionError(
                f"gradient mismatch at flat index {k}: "
                f"analytic {a.view(-1)[k]:.8g} vs numeric {n.view(-1)[k]:.8g}")
        denom = n.abs().clamp_min(atol)
        worst = max(worst, float((err / denom).max()))
    return worst
