"""Confidence adaptation by diffusion on the space-time graph.

Minimizes a smoothness + fit energy over per-superpixel confidences, either
by the damped diffusion iteration

    X_{k+1} = alpha * S @ X_k + (1 - alpha) * C

or by solving the stationarity system

    (I - (1 - eta) S) X = eta C,   eta = mu / (1 + mu)

with preconditioned conjugate gradients. With alpha = 1 / (1 + mu) both
routes share the same fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spilu

from .proposals import ConfidenceField

DEFAULT_MU = 0.5


class ConvergenceError(RuntimeError):
    """Solver failed to reach tolerance; carries the last iterate."""

    def __init__(self, message, x, residual, iterations):
        super().__init__(message)
        self.x = x
        self.residual = residual
        self.iterations = iterations


@dataclass
class PropagationConfig:
    mu: float = DEFAULT_MU
    solver: str = "linear"  # "linear" | "iterative"
    tolerance: float = 1e-8
    max_iterations: int = 10000
    preconditioner: str = "jacobi"  # "jacobi" | "ilu"

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.solver not in ("linear", "iterative"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def eta(self):
        return self.mu / (1.0 + self.mu)

    @property
    def alpha(self):
        return 1.0 / (1.0 + self.mu)


@dataclass
class PropagationResult:
    x: np.ndarray
    iterations: int
    residual: float
    route: str


def energy(x, graph, c, mu):
    """Smoothness + fit objective over the normalized graph.

    The smoothness term is the full double sum over ordered pairs
    sum_ij A_ij (x_i d_i^-1/2 - x_j d_j^-1/2)^2, with d^-1/2 taken as 0 on
    isolated nodes; the fit term is mu * ||x - c||^2.
    """
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    active = graph.degrees > 0
    smooth = 2.0 * (float(x[active] @ x[active]) - float(x @ graph.operator.dot(x)))
    fit = mu * float(np.sum((x - c) ** 2))
    return smooth + fit


def stationarity_residual(x, graph, c, mu):
    """Max-norm residual of the optimality condition X - SX + mu (X - C)."""
    r = x - graph.operator.dot(x) + mu * (x - c)
    return float(np.max(np.abs(r))) if len(r) else 0.0


def propagate_iterative(graph, c, cfg: PropagationConfig) -> PropagationResult:
    """Run the diffusion iteration from X0 = C to its fixed point.

    Converged when the max-norm of successive iterates is within tolerance;
    raises ConvergenceError (carrying the last iterate) past max_iterations.
    """
    c = np.asarray(c, dtype=np.float64)
    s = graph.operator
    alpha = cfg.alpha
    x = c.copy()
    residual = np.inf
    for k in range(1, cfg.max_iterations + 1):
        x_next = alpha * s.dot(x) + (1.0 - alpha) * c
        residual = float(np.max(np.abs(x_next - x))) if len(x) else 0.0
        x = x_next
        if residual <= cfg.tolerance:
            return PropagationResult(x, k, residual, "iterative")
    raise ConvergenceError(
        f"diffusion did not converge in {cfg.max_iterations} iterations "
        f"(residual {residual:.3e})",
        x,
        residual,
        cfg.max_iterations,
    )


def propagate_linear(graph, c, cfg: PropagationConfig) -> PropagationResult:
    """Solve (I - (1 - eta) S) X = eta C by preconditioned conjugate gradients.

    The system matrix is symmetric positive definite (the spectrum of S lies
    in [-1, 1] and 1 - eta < 1). Converged at relative 2-norm residual
    <= tolerance. Jacobi preconditioning by default; "ilu" switches to an
    incomplete-factorization preconditioner.
    """
    c = np.asarray(c, dtype=np.float64)
    s = graph.operator
    eta = cfg.eta
    gamma = 1.0 - eta

    def matvec(v):
        return v - gamma * s.dot(v)

    b = eta * c
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return PropagationResult(np.zeros_like(c), 0, 0.0, "linear")

    if cfg.preconditioner == "ilu":
        n = len(c)
        m = sparse.eye(n, format="csc") - gamma * s.tocsc()
        lu = spilu(m, drop_tol=1e-5, fill_factor=10)
        precondition = lu.solve
    else:
        diag = 1.0 - gamma * s.diagonal()

        def precondition(r):
            return r / diag

    x = np.zeros_like(b)
    r = b.copy()
    z = precondition(r)
    p = z.copy()
    rz = float(r @ z)
    residual = 1.0
    for k in range(1, cfg.max_iterations + 1):
        ap = matvec(p)
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        residual = float(np.linalg.norm(r)) / norm_b
        if residual <= cfg.tolerance:
            return PropagationResult(x, k, residual, "linear")
        z = precondition(r)
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise ConvergenceError(
        f"conjugate gradient did not converge in {cfg.max_iterations} iterations "
        f"(relative residual {residual:.3e})",
        x,
        residual,
        cfg.max_iterations,
    )


def propagate(graph, c, cfg: PropagationConfig) -> PropagationResult:
    if cfg.solver == "iterative":
        return propagate_iterative(graph, c, cfg)
    return propagate_linear(graph, c, cfg)


def adapt_confidence(field: ConfidenceField, graph, cfg: PropagationConfig) -> ConfidenceField:
    """Diffuse a pooled confidence field over the graph; clamp into [0, 1]."""
    flat = field.flat()
    if len(flat) != graph.n_nodes:
        raise ValueError(
            f"field covers {len(flat)} superpixels, graph has {graph.n_nodes}"
        )
    result = propagate(graph, flat, cfg)
    adapted = np.clip(result.x, 0.0, 1.0)
    counts = [len(v) for v in field.values]
    return ConfidenceField.from_flat(field.class_id, adapted, counts, "adapted")
