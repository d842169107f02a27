"""Classical single-view subspace clustering baselines via ADMM.

Both solve    min_C reg(C) + (lam/2) ||X - X C||_F^2    for X with samples
as columns (D x N): sparse subspace clustering (reg = entrywise l1, with
diag(C) = 0) and low-rank representation (reg = nuclear norm, diagonal
unconstrained). The splitting is the standard one: a smooth block A for the
data-fidelity term, the prox block C for the regularizer, scaled dual U, and
Boyd-style primal/dual stopping criteria.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class AdmmConfig:
    """ADMM settings; `lam` is the data-fidelity weight (no default: it is
    problem-dependent and must come from the caller/config). rho = None
    means "use lam" as the penalty parameter."""

    lam: float
    rho: float = None
    max_iters: int = 1000
    abs_tol: float = 1e-6
    rel_tol: float = 1e-4

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.rho is None:
            self.rho = self.lam
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass
class AdmmResult:
    coeffs: np.ndarray
    converged: bool
    iterations: int
    objective: list


def ssc_solve(x, cfg):
    """Sparse subspace clustering coefficients, diag(C) exactly zero."""
    return _admm(x, cfg, _prox_l1_zero_diag, _objective_l1)


def lrr_solve(x, cfg):
    """Low-rank representation coefficients (nuclear-norm prox)."""
    return _admm(x, cfg, _prox_nuclear, _objective_nuclear)


def _admm(x, cfg, prox, objective):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"data matrix must be 2-D (D x N), got shape {x.shape}")
    n = x.shape[1]
    lam, rho = cfg.lam, cfg.rho
    gram = lam * (x.T @ x)
    lhs = gram + rho * np.eye(n)
    chol = np.linalg.cholesky(lhs)

    c = np.zeros((n, n))
    u = np.zeros((n, n))
    history = []
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        a = _chol_solve(chol, gram + rho * (c - u))
        c_prev = c
        c = prox(a + u, 1.0 / rho)
        u = u + a - c

        history.append(objective(x, c, lam))
        r = np.linalg.norm(a - c)
        s = rho * np.linalg.norm(c - c_prev)
        eps_pri = n * cfg.abs_tol + cfg.rel_tol * max(
            np.linalg.norm(a), np.linalg.norm(c)
        )
        eps_dual = n * cfg.abs_tol + cfg.rel_tol * rho * np.linalg.norm(u)
        if r <= eps_pri and s <= eps_dual:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"ADMM did not converge within {cfg.max_iters} iterations "
            f"(primal residual {r:.3e})",
            stacklevel=3,
        )
    return AdmmResult(coeffs=c, converged=converged, iterations=iters, objective=history)


def _chol_solve(chol, b):
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, y)


def _prox_l1_zero_diag(m, tau):
    c = np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)
    np.fill_diagonal(c, 0.0)
    return c


def _prox_nuclear(m, tau):
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vt


def _objective_l1(x, c, lam):
    return float(np.abs(c).sum() + lam / 2.0 * np.sum((x - x @ c) ** 2))


def _objective_nuclear(x, c, lam):
    nuc = float(np.linalg.svd(c, compute_uv=False).sum())
    return float(nuc + lam / 2.0 * np.sum((x - x @ c) ** 2))
