"""Self-expressive layer, training losses, and the two training phases.

The self-expressive layer holds one trainable N x N coefficient matrix
Theta_s with a hard zero diagonal: each sample's latent code is rebuilt as a
combination of the *other* samples' codes, Z_hat = Theta_s^T Z for
batch-first Z. Spatial fusion trains one fused latent against Theta_s;
affinity fusion trains per-modality latents against the single shared
Theta_s, which is where the modalities get coupled.

Both losses share the same shape:

    pnorm(Theta_s) + lambda1/2 * sum ||Z - Theta_s^T Z||_F^2
                   + lambda2/2 * sum ||X - X_hat||_F^2

with one self-expression term for spatial fusion and one per modality for
affinity fusion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import network
from .optim import Adam
from .tensor import Tensor

SUPPORTED_P = (0.3, 1.0, 1.5, 2.0)


class TrainingDiverged(RuntimeError):
    """Raised when a training loss stops being finite."""


@dataclass
class HyperParams:
    """Knobs shared by both training phases.

    lambda2 = None means "derive from the cluster count" via
    `lambda2_for_clusters` at the point of use.
    """

    lambda1: float = 1.0
    lambda2: float = None
    p: float = 2.0
    learning_rate: float = 1e-3
    pretrain_epochs: int = 2000
    train_epochs: int = 1000
    batch_size: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.lambda1 <= 0:
            raise ValueError(f"lambda1 must be positive, got {self.lambda1}")
        if self.lambda2 is not None and self.lambda2 <= 0:
            raise ValueError(f"lambda2 must be positive, got {self.lambda2}")
        if self.p <= 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.p not in SUPPORTED_P:
            warnings.warn(
                f"p={self.p} is outside the tested set {SUPPORTED_P}; "
                "proceeding anyway",
                stacklevel=2,
            )

    def resolved_lambda2(self, num_clusters):
        if self.lambda2 is not None:
            return self.lambda2
        return lambda2_for_clusters(num_clusters)


def lambda2_for_clusters(k):
    """Reconstruction weight schedule 10^(K/10 - 3) for K clusters."""
    if k < 1:
        raise ValueError(f"cluster count must be >= 1, got {k}")
    return 10.0 ** (k / 10.0 - 3.0)


class SelfExpressiveLayer:
    """Trainable N x N coefficients with a pinned zero diagonal."""

    def __init__(self, n, init=None):
        if init is None:
            data = np.zeros((n, n))
        else:
            data = np.array(init, dtype=np.float64)
            if data.shape != (n, n):
                raise ValueError(
                    f"self-expressive init has shape {data.shape}, expected {(n, n)}"
                )
        self.coeffs = Tensor(data, name="theta_s")
        self.zero_diagonal()

    @property
    def n(self):
        return self.coeffs.shape[0]

    def zero_diagonal(self):
        np.fill_diagonal(self.coeffs.data, 0.0)

    def apply(self, z):
        """Self-express a batch-first latent: Z_hat = Theta_s^T Z."""
        if z.shape[0] != self.n:
            raise ValueError(
                f"latent has {z.shape[0]} rows but Theta_s is {self.n} x {self.n}"
            )
        return self.coeffs.T.matmul(z)


def pnorm_reg(coeffs, p):
    """Entrywise p-norm regularizer of the coefficient matrix.

    Accepts a Tensor (returns a 0-d Tensor in the graph) or an ndarray
    (returns a float). (sum |c|^p)^(1/p) for p >= 1, sum |c|^p for p < 1.
    """
    if p not in SUPPORTED_P:
        warnings.warn(
            f"p={p} is outside the tested set {SUPPORTED_P}", stacklevel=2
        )
    if isinstance(coeffs, Tensor):
        return coeffs.pnorm(p)
    return float(Tensor(coeffs).pnorm(p).data)


def spatial_loss(z, theta, xs, xhats, hp, lambda2):
    """Single fused latent against Theta_s, plus all reconstruction terms."""
    loss = pnorm_reg(theta.coeffs, hp.p)
    loss = loss + (hp.lambda1 / 2.0) * (z - theta.apply(z)).frob2()
    for x, xhat in zip(xs, xhats):
        loss = loss + (lambda2 / 2.0) * (x - xhat).frob2()
    return loss


def affinity_loss(zs, theta, xs, xhats, hp, lambda2):
    """Per-modality latents against the one shared Theta_s."""
    loss = pnorm_reg(theta.coeffs, hp.p)
    for z in zs:
        loss = loss + (hp.lambda1 / 2.0) * (z - theta.apply(z)).frob2()
    for x, xhat in zip(xs, xhats):
        loss = loss + (lambda2 / 2.0) * (x - xhat).frob2()
    return loss


# -- training phases ---------------------------------------------------------


def pretrain(net, params, bundle, hp):
    """Reconstruction-only warmup of the autoencoder.

    Minimizes sum_m ||X_m - X_hat_m||_F^2 with ADAM over minibatches
    (sequential slices of hp.batch_size; the final partial batch is used).
    Parameters are updated in place; the per-epoch loss history (full-data
    loss summed over the epoch's batches) is returned.
    """
    views = bundle.views()
    n = views[0].shape[0]
    opt = Adam(params, lr=hp.learning_rate)
    history = []
    starts = list(range(0, n, hp.batch_size))
    for epoch in range(hp.pretrain_epochs):
        total = 0.0
        for s in starts:
            batch = [Tensor(v[s : s + hp.batch_size]) for v in views]
            _, recons = network.autoencode(net, params, batch)
            loss = None
            for x, xhat in zip(batch, recons):
                term = (x - xhat).frob2()
                loss = term if loss is None else loss + term
            if not np.isfinite(loss.data):
                raise TrainingDiverged(
                    f"pretrain loss became non-finite at epoch {epoch}"
                )
            loss.backward()
            opt.step()
            total += loss.item()
        history.append(total)
    return history


def train_self_expressive(net, params, theta, bundle, hp, mode, on_step=None):
    """Full-batch joint training of the autoencoder and Theta_s.

    mode is "spatial" (one fused latent, loss with a single self-expression
    term) or "affinity" (per-modality latents sharing Theta_s). After every
    ADAM step the diagonal of Theta_s is zeroed, along with the diagonal of
    its first/second moment buffers, so the zero-diagonal constraint holds at
    every point of the trace. `on_step(epoch, loss, theta)` runs after each
    step when given. Returns the loss history.
    """
    if mode not in ("spatial", "affinity"):
        raise ValueError(f"mode must be 'spatial' or 'affinity', got {mode!r}")
    views = bundle.views()
    n = views[0].shape[0]
    if theta.n != n:
        raise ValueError(f"Theta_s is {theta.n} x {theta.n} but the batch has {n}")
    lambda2 = hp.resolved_lambda2(bundle.num_clusters())
    all_params = dict(params)
    all_params["theta_s"] = theta.coeffs
    opt = Adam(all_params, lr=hp.learning_rate)
    batch = [Tensor(v) for v in views]
    history = []
    for epoch in range(hp.train_epochs):
        latents, recons = network.autoencode(net, params, batch, self_expr=theta)
        if mode == "spatial":
            if len(latents) != 1:
                raise ValueError(
                    f"spatial mode expects one latent, network has {len(latents)}"
                )
            loss = spatial_loss(latents[0], theta, batch, recons, hp, lambda2)
        else:
            loss = affinity_loss(latents, theta, batch, recons, hp, lambda2)
        if not np.isfinite(loss.data):
            raise TrainingDiverged(
                f"self-expressive loss became non-finite at epoch {epoch}"
            )
        loss.backward()
        opt.step()
        theta.zero_diagonal()
        np.fill_diagonal(opt.m["theta_s"], 0.0)
        np.fill_diagonal(opt.v["theta_s"], 0.0)
        history.append(loss.item())
        if on_step is not None:
            on_step(epoch, history[-1], theta)
    return history


def latent_features(net, params, bundle):
    """Encoder-only latents as plain arrays, one N x D matrix per latent."""
    batch = [Tensor(v) for v in bundle.views()]
    latents, _ = network.autoencode(net, params, batch)
    return [z.data.copy() for z in latents]
