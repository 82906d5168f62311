# contrastcpd/services/discriminators.py
"""
Function families for the contrastive discriminator and their fitting.

Polynomial, Fourier and linear families are linear in their parameters (a feature map
followed by a dot product), so T_{tau,t} is concave in the parameters and is maximized
to tolerance. The MLP is a dense ReLU network with a scalar output, trained by Adam
(see network.py). All outputs are hard-clamped to [-clamp_bound, clamp_bound].

Several candidate splits over the same samples are fitted at once, one parameter row
per split. Every reduction is taken over the last axis of a freshly built C-contiguous
array and linear solves are per row, so a row's arithmetic does not depend on which
other rows share its batch.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..errors import DimensionMismatch, NonFiniteObjective, UnsupportedFamily
from ..schemas.discriminators import DiscriminatorSpec
from ..shared import derive_rng
from . import network
from .contrast_core import batch_value_and_gradient, sigmoid

log = logging.getLogger("discriminators")

TWO_PI = 2.0 * math.pi
LINE_SEARCH_STEPS = 0.5 ** np.arange(24)
ARMIJO = 1e-4
NEWTON_RIDGE = 1e-12
ROW_BLOCK = 32      # splits per Newton block, bounds the (rows, k, k, n) curvature array


@dataclass
class FittedDiscriminator:
    spec: DiscriminatorSpec
    params: np.ndarray
    achieved_value: float


# ---------- samples / features ----------

def as_samples(spec: DiscriminatorSpec, samples) -> np.ndarray:
    """Coerce samples to an (n, d) float array matching the family's input dimension."""
    arr = np.asarray(samples, dtype=np.float64)
    d = spec.sample_dim
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise DimensionMismatch(f"{spec.label} expects {d}-dimensional samples, got shape {np.shape(samples)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    return arr


def num_params(spec: DiscriminatorSpec) -> int:
    if spec.family == "poly":
        return spec.degree + 1
    if spec.family == "fourier":
        return spec.num_terms
    if spec.family == "linear":
        return spec.input_dim + 1
    w = spec.widths
    return sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))


def feature_matrix(spec: DiscriminatorSpec, X: np.ndarray) -> np.ndarray:
    """(n, k) feature map of an (n, d) sample array."""
    if spec.family == "poly":
        x = X[:, 0]
        return np.stack([x ** p for p in range(spec.degree + 1)], axis=1)
    if spec.family == "fourier":
        x = X[:, 0]
        cols = [np.ones_like(x)]
        for j in range(1, spec.num_terms):
            k = (j + 1) // 2
            cols.append(np.sin(TWO_PI * k * x) if j % 2 else np.cos(TWO_PI * k * x))
        return np.stack(cols, axis=1)
    if spec.family == "linear":
        return np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
    raise UnsupportedFamily("mlp is not linear in its parameters and has no feature map")


def features(spec: DiscriminatorSpec, x) -> np.ndarray:
    if spec.family == "mlp":
        raise UnsupportedFamily("mlp is not linear in its parameters and has no feature map")
    return feature_matrix(spec, as_samples(spec, [x] if spec.sample_dim > 1 else x))[0]


# ---------- forward / backward ----------

def _linear_outputs(params: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return (params[:, None, :] * phi[None, :, :]).sum(axis=-1)


def _clamped(spec: DiscriminatorSpec, raw: np.ndarray, taus: np.ndarray, phiT: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    bound = spec.clamp_bound
    values, g_out = batch_value_and_gradient(np.clip(raw, -bound, bound), taus)
    # hard clamp: saturated outputs pass no gradient
    g_raw = g_out * ((raw > -bound) & (raw < bound))
    return values, (g_raw[:, None, :] * phiT[None, :, :]).sum(axis=-1)


def batch_objective(
    spec: DiscriminatorSpec,
    params: np.ndarray,
    X: np.ndarray,
    taus: np.ndarray,
    phi: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """T_{tau,t} of the clamped family outputs and its parameter gradient, one row per split."""
    if spec.family == "mlp":
        return network.value_and_grad(spec, params, X, taus)
    if phi is None:
        phi = feature_matrix(spec, X)
    return _clamped(spec, _linear_outputs(params, phi), taus, np.ascontiguousarray(phi.T))


def objective_and_gradient(spec: DiscriminatorSpec, params, samples, tau: int) -> Tuple[float, np.ndarray]:
    X = as_samples(spec, samples)
    p = np.asarray(params, dtype=np.float64).reshape(1, -1)
    values, grads = batch_objective(spec, p, X, np.array([tau]))
    return float(values[0]), grads[0]


def evaluate_params(spec: DiscriminatorSpec, params, samples) -> np.ndarray:
    """Clamped outputs of one parameter vector on an (n, d) sample array."""
    X = as_samples(spec, samples)
    p = np.asarray(params, dtype=np.float64).reshape(1, -1)
    if p.shape[1] != num_params(spec):
        raise DimensionMismatch(f"{spec.label} has {num_params(spec)} parameters, got {p.shape[1]}")
    if spec.family == "mlp":
        raw = network.raw_outputs(spec, p, X)
    else:
        raw = _linear_outputs(p, feature_matrix(spec, X))
    return np.clip(raw[0], -spec.clamp_bound, spec.clamp_bound)


def evaluate(f: FittedDiscriminator, x) -> float:
    sample = [x] if f.spec.sample_dim > 1 else x
    return float(evaluate_params(f.spec, f.params, sample)[0])


# ---------- constraints ----------

def _finite(radius: Optional[float]) -> bool:
    return radius is not None and math.isfinite(radius)


def project_linear_constraints(
    params,
    radii: Tuple[Optional[float], Optional[float]],
    sigma_sqrt: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Project (w, b) onto {||S w|| <= r_w, |b| <= r_b}, S = Sigma^{1/2} (identity when None).
    Works on a single vector (d+1,) or a batch (B, d+1); the bias is the last entry.
    A radius of None or inf leaves that part alone.
    """
    p = np.array(params, dtype=np.float64, copy=True)
    flat = p.reshape(-1, p.shape[-1])
    w, b = flat[:, :-1], flat[:, -1]
    r_w, r_b = radii
    if _finite(r_w):
        if sigma_sqrt is None:
            sw = w
        else:
            S = np.asarray(sigma_sqrt, dtype=np.float64)
            sw = (w[:, None, :] * S[None, :, :]).sum(axis=-1)
        norms = np.sqrt((sw * sw).sum(axis=-1))
        with np.errstate(divide="ignore"):
            scale = np.where(norms > r_w, r_w / norms, 1.0)
        flat[:, :-1] = w * scale[:, None]
    if _finite(r_b):
        flat[:, -1] = np.clip(b, -r_b, r_b)
    return flat.reshape(p.shape)


# ---------- fitting ----------

def init_params(spec: DiscriminatorSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Zeros for linear-in-parameter families; U(-1/sqrt(fan_in), 1/sqrt(fan_in)) per MLP layer."""
    if spec.is_linear_in_params:
        return np.zeros(num_params(spec))
    if rng is None:
        raise ValueError("mlp initialization needs a random generator")
    w = spec.widths
    chunks = []
    for i in range(len(w) - 1):
        bound = 1.0 / math.sqrt(w[i])
        chunks.append(rng.uniform(-bound, bound, size=w[i] * w[i + 1]))
        chunks.append(rng.uniform(-bound, bound, size=w[i + 1]))
    return np.concatenate(chunks)


def _check_finite(spec: DiscriminatorSpec, values: np.ndarray, grad: np.ndarray, it: int) -> None:
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(grad))):
        raise NonFiniteObjective(f"{spec.label}: objective diverged at iteration {it}")


def _curvature(spec: DiscriminatorSpec, raw: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Per-sample weights w with d2T/df_s^2 = -w_s; zero where the clamp saturates."""
    n = raw.shape[1]
    tt = np.asarray(taus, dtype=np.float64).reshape(-1, 1)
    coef = np.where(np.arange(n)[None, :] < tt, (n - tt) / n, tt / n)
    bound = spec.clamp_bound
    s = sigmoid(np.clip(raw, -bound, bound))
    return coef * s * (1.0 - s) * ((raw > -bound) & (raw < bound))


def _newton_direction(w: np.ndarray, outer: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve (sum_s w_s phi_s phi_s^T) d = grad per row, Jacobi-scaled with a small ridge."""
    H = (w[:, None, None, :] * outer[None, :, :, :]).sum(axis=-1)
    k = H.shape[-1]
    scale = np.sqrt(np.diagonal(H, axis1=1, axis2=2))
    scale = np.where(scale > 0.0, scale, 1.0)
    M = H / (scale[:, :, None] * scale[:, None, :]) + NEWTON_RIDGE * np.eye(k)
    y = np.linalg.solve(M, (grad / scale)[:, :, None])[:, :, 0]
    return y / scale


def _newton_ascent(
    spec: DiscriminatorSpec, params: np.ndarray, phi: np.ndarray, taus: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Damped Newton ascent on a concave T for a block of splits.

    Every row takes the longest step in LINE_SEARCH_STEPS that passes the Armijo test
    and stops once its Newton decrement drops below the tolerance or no step improves.
    Returns the best parameters and values seen per row.
    """
    opt = spec.optimizer
    bound = spec.clamp_bound
    n = phi.shape[0]
    phiT = np.ascontiguousarray(phi.T)
    outer = np.ascontiguousarray(phiT[:, None, :] * phiT[None, :, :])
    steps = LINE_SEARCH_STEPS
    params = params.copy()
    best_value = np.full(params.shape[0], -np.inf)
    best_params = params.copy()
    active = np.arange(params.shape[0])

    for it in range(opt.max_iter + 1):
        p, tt = params[active], taus[active]
        raw = _linear_outputs(p, phi)
        values, grad = _clamped(spec, raw, tt, phiT)
        _check_finite(spec, values, grad, it)
        improved = values > best_value[active]
        best_value[active[improved]] = values[improved]
        best_params[active[improved]] = p[improved]
        if it == opt.max_iter:
            break

        direction = _newton_direction(_curvature(spec, raw, tt), outer, grad)
        decrement = (grad * direction).sum(axis=-1)
        # every candidate step length at once; outputs are linear in the parameters
        along = _linear_outputs(direction, phi)
        trial = raw[:, None, :] + steps[None, :, None] * along[:, None, :]
        trial_values, _ = batch_value_and_gradient(
            np.clip(trial, -bound, bound).reshape(-1, n), np.repeat(tt, steps.size)
        )
        trial_values = trial_values.reshape(-1, steps.size)
        ok = trial_values >= values[:, None] + ARMIJO * steps[None, :] * decrement[:, None]
        moving = (decrement > opt.tolerance) & ok.any(axis=1)
        first = ok.argmax(axis=1)
        params[active[moving]] = p[moving] + steps[first[moving], None] * direction[moving]
        active = active[moving]
        if active.size == 0:
            break

    return best_params, best_value


def _constrained_ascent(
    spec: DiscriminatorSpec, params: np.ndarray, X: np.ndarray, phi: np.ndarray, taus: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """SLSQP per split on {||S w|| <= r_w, |b| <= r_b}; the result is projected back onto the set."""
    opt = spec.optimizer
    radii = (spec.weight_radius, spec.bias_radius)
    S = np.asarray(spec.sigma_sqrt, dtype=np.float64) if spec.sigma_sqrt is not None else np.eye(spec.input_dim)
    StS = S.T @ S
    d = spec.input_dim
    bounds = [(None, None)] * d + [(-radii[1], radii[1]) if _finite(radii[1]) else (None, None)]
    constraints = []
    if _finite(radii[0]):
        r2 = radii[0] ** 2
        constraints.append({
            "type": "ineq",
            "fun": lambda p: r2 - p[:d] @ StS @ p[:d],
            "jac": lambda p: np.concatenate([-2.0 * (StS @ p[:d]), [0.0]]),
        })

    best_params = project_linear_constraints(params, radii, S)
    best_value, grad = batch_objective(spec, best_params, X, taus, phi)
    _check_finite(spec, best_value, grad, 0)
    for i, tau in enumerate(taus):
        tau_row = np.array([tau])

        def negated(p):
            v, g = batch_objective(spec, p.reshape(1, -1), X, tau_row, phi)
            return -float(v[0]), -g[0]

        res = optimize.minimize(
            negated,
            best_params[i],
            jac=True,
            method="SLSQP",
            bounds=bounds,
            constraints=constraints,
            options={"maxiter": max(opt.max_iter, 1), "ftol": opt.tolerance},
        )
        candidate = project_linear_constraints(res.x, radii, S)
        value, grad = batch_objective(spec, candidate.reshape(1, -1), X, tau_row, phi)
        _check_finite(spec, value, grad, res.nit)
        if value[0] > best_value[i]:
            best_value[i] = value[0]
            best_params[i] = candidate
    return best_params, best_value


def fit_splits(
    spec: DiscriminatorSpec,
    samples,
    taus: Sequence[int],
    seed: int,
    *,
    tau_keys: Optional[Sequence[int]] = None,
    t_key: Optional[int] = None,
    init: Optional[np.ndarray] = None,
) -> List[FittedDiscriminator]:
    """
    Fit one discriminator per split tau over the same samples.

    Linear-in-parameter families are solved to tolerance by damped Newton ascent (SLSQP
    under linear-class constraints); every row is solved on its own, so any chunking of
    `taus` gives bit-identical fits. The mlp trains by Adam on torch, all rows as one batch.

    Random initialization (MLP) for the row of split tau draws from a generator keyed on
    (seed, tau_key, t_key), defaulting to (seed, tau, len(samples)). `init` (B, P)
    overrides initialization (warm start).
    """
    X = as_samples(spec, samples)
    n = X.shape[0]
    taus = np.asarray(list(taus), dtype=np.int64)
    B = taus.size
    if B == 0:
        return []
    if np.any(taus < 1) or np.any(taus > n - 1):
        raise ValueError(f"every tau must leave both segments non-empty (n={n})")
    tau_keys = taus if tau_keys is None else np.asarray(list(tau_keys), dtype=np.int64)
    t_key = n if t_key is None else int(t_key)

    if init is not None:
        params = np.array(init, dtype=np.float64, copy=True).reshape(B, -1)
    else:
        params = np.stack([
            init_params(spec, None if spec.is_linear_in_params else derive_rng(seed, int(k), t_key))
            for k in tau_keys
        ])
    if params.shape[1] != num_params(spec):
        raise DimensionMismatch(f"{spec.label} has {num_params(spec)} parameters, got {params.shape[1]}")

    if spec.family == "mlp":
        best_params, best_value = network.train(spec, params, X, taus)
    elif spec.is_constrained:
        best_params, best_value = _constrained_ascent(spec, params, X, feature_matrix(spec, X), taus)
    else:
        phi = feature_matrix(spec, X)
        best_params, best_value = np.empty_like(params), np.empty(B)
        for lo in range(0, B, ROW_BLOCK):
            hi = lo + ROW_BLOCK
            best_params[lo:hi], best_value[lo:hi] = _newton_ascent(spec, params[lo:hi], phi, taus[lo:hi])

    log.debug("fitted %s on %d splits (n=%d)", spec.label, B, n)
    return [
        FittedDiscriminator(spec=spec, params=best_params[i].copy(), achieved_value=float(best_value[i]))
        for i in range(B)
    ]


def fit(spec: DiscriminatorSpec, pre_samples, post_samples, seed: int) -> FittedDiscriminator:
    pre = as_samples(spec, pre_samples)
    post = as_samples(spec, post_samples)
    if pre.shape[0] == 0 or post.shape[0] == 0:
        raise ValueError("pre and post samples must both be non-empty")
    samples = np.concatenate([pre, post], axis=0)
    return fit_splits(spec, samples, [pre.shape[0]], seed)[0]
