# contrastcpd/services/network.py
"""
The mlp family on torch: one dense ReLU network per candidate split, trained side by side.

Parameters travel as a flat (B, P) float64 array, one row per split, laid out
W_1, b_1, W_2, b_2, ... with each W stored (fan_in, fan_out) row-major. Adam's update
is elementwise, so one optimizer over the stacked tensors trains B independent networks.
"""
import logging
from typing import List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from ..errors import NonFiniteObjective
from ..schemas.discriminators import DiscriminatorSpec
from .contrast_core import batch_value_and_gradient

log = logging.getLogger("network")

# one intra-op thread: reduction order must not depend on the host
torch.set_num_threads(1)


class SplitNetworks(nn.Module):
    """B copies of a ReLU network with the given layer widths, one per parameter row."""

    def __init__(self, widths: Sequence[int], params: np.ndarray):
        super().__init__()
        params = np.asarray(params, dtype=np.float64)
        B = params.shape[0]
        self.weights = nn.ParameterList()
        self.biases = nn.ParameterList()
        off = 0
        for fin, fout in zip(widths[:-1], widths[1:]):
            W = params[:, off:off + fin * fout].reshape(B, fin, fout)
            off += fin * fout
            b = params[:, off:off + fout]
            off += fout
            self.weights.append(nn.Parameter(torch.tensor(W, dtype=torch.float64)))
            self.biases.append(nn.Parameter(torch.tensor(b, dtype=torch.float64)))

    def preactivations(self, X: torch.Tensor) -> List[torch.Tensor]:
        """
        :param X: (n, input_dim)
        :return: per layer, the (B, n, fan_out) values before the ReLU
        """
        h = X.expand(self.weights[0].shape[0], -1, -1)
        zs = []
        for W, b in zip(self.weights, self.biases):
            z = torch.bmm(h, W) + b[:, None, :]
            zs.append(z)
            h = torch.relu(z)
        return zs

    def forward(self, X: torch.Tensor) -> torch.Tensor:
        """(n, input_dim) -> (B, n) raw outputs."""
        return self.preactivations(X)[-1][:, :, 0]

    def _flatten(self, tensors) -> np.ndarray:
        B = self.weights[0].shape[0]
        parts = [t.reshape(B, -1) for t in tensors]
        return torch.cat(parts, dim=1).numpy().copy()

    def flat_params(self) -> np.ndarray:
        with torch.no_grad():
            return self._flatten(
                p.detach() for pair in zip(self.weights, self.biases) for p in pair
            )

    def flat_grads(self) -> np.ndarray:
        return self._flatten(
            (p.grad if p.grad is not None else torch.zeros_like(p)).detach()
            for pair in zip(self.weights, self.biases) for p in pair
        )


def as_tensor(X: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(X, dtype=np.float64))


def raw_outputs(spec: DiscriminatorSpec, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    net = SplitNetworks(spec.widths, params)
    with torch.no_grad():
        return net(as_tensor(X)).numpy().copy()


def _accumulate(spec: DiscriminatorSpec, net: SplitNetworks, X: torch.Tensor, taus: np.ndarray) -> np.ndarray:
    """T per row at the current weights; dT/dweights lands in each parameter's .grad."""
    raw = net(X)
    raw_np = raw.detach().numpy()
    bound = spec.clamp_bound
    values, g_out = batch_value_and_gradient(np.clip(raw_np, -bound, bound), taus)
    # hard clamp: saturated outputs pass no gradient
    g_raw = g_out * ((raw_np > -bound) & (raw_np < bound))
    raw.backward(torch.from_numpy(np.ascontiguousarray(g_raw)))
    return values


def value_and_grad(spec: DiscriminatorSpec, params: np.ndarray, X: np.ndarray, taus: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    net = SplitNetworks(spec.widths, params)
    values = _accumulate(spec, net, as_tensor(X), taus)
    return values, net.flat_grads()


def train(spec: DiscriminatorSpec, params: np.ndarray, X: np.ndarray, taus: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Full-batch Adam ascent for `epochs` steps from `params`.
    Returns the best parameters seen per row (epochs + 1 evaluations) and their objective values.
    """
    opt = spec.optimizer
    net = SplitNetworks(spec.widths, params)
    optimizer = torch.optim.Adam(
        net.parameters(),
        lr=opt.learning_rate,
        betas=(opt.beta1, opt.beta2),
        eps=opt.eps,
        maximize=True,
    )
    X_t = as_tensor(X)
    best_value = np.full(params.shape[0], -np.inf)
    best_params = np.array(params, dtype=np.float64, copy=True)

    for epoch in range(opt.epochs + 1):
        optimizer.zero_grad()
        current = net.flat_params()
        values = _accumulate(spec, net, X_t, taus)
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(net.flat_grads()))):
            raise NonFiniteObjective(
                f"{spec.label}: objective diverged at epoch {epoch} (learning_rate={opt.learning_rate})"
            )
        improved = values > best_value
        best_value = np.where(improved, values, best_value)
        best_params[improved] = current[improved]
        if epoch == opt.epochs:
            break
        optimizer.step()

    log.debug("trained %d networks %s (n=%d, epochs=%d)", params.shape[0], spec.label, X.shape[0], opt.epochs)
    return best_params, best_value
