"""SPD solvers for the implicit-Euler and projection systems.

Desk-scale systems go through a dense Cholesky factorization (robust when
the enriched Gram block is ill conditioned at sqrt(eps) ~ h); larger ones
fall back to Jacobi-preconditioned conjugate gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


class NotPositiveDefinite(Exception):
    """Cholesky hit a nonpositive pivot."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoConvergence(Exception):
    """CG exhausted its iteration budget."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    method: str = "direct_cholesky"
    rel_tolerance: float = 1e-10
    max_iterations: int = None  # defaults to 4 * dimension

    def __post_init__(self):
        if self.method not in ("direct_cholesky", "cg_jacobi"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not 0.0 < self.rel_tolerance <= 1e-4:
            raise ValueError("rel_tolerance must be in (0, 1e-4]")


class SpdSolver:
    """Factorize once, solve many right-hand sides.

    Exposes `condition_proxy`: the ratio of extreme diagonal entries of the
    Cholesky factor, a cheap indicator of near-linear-dependence between
    enrichment and hat functions.
    """

    def __init__(self, matrix, config: SolverConfig = SolverConfig()):
        self.config = config
        self.matrix = sp.csr_matrix(matrix)
        self.n = self.matrix.shape[0]
        self.condition_proxy = None
        if config.method == "direct_cholesky":
            try:
                self._chol = sla.cho_factor(self.matrix.toarray(), lower=True, check_finite=False)
            except sla.LinAlgError as exc:
                raise NotPositiveDefinite(str(exc)) from exc
            d = np.abs(np.diag(self._chol[0]))
            self.condition_proxy = float(d.max() / d.min())
        else:
            self._jacobi = 1.0 / self.matrix.diagonal()

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.n,):
            raise ValueError("rhs dimension mismatch")
        nb = np.linalg.norm(rhs)
        if nb == 0.0:
            return np.zeros(self.n)
        if self.config.method == "direct_cholesky":
            return sla.cho_solve(self._chol, rhs, check_finite=False)
        return self._pcg(rhs, nb)

    def _pcg(self, b, nb):
        a = self.matrix
        max_iter = self.config.max_iterations or 4 * self.n
        x = np.zeros(self.n)
        r = b.copy()
        z = self._jacobi * r
        p = z.copy()
        rz = r @ z
        for _ in range(max_iter):
            ap = a @ p
            alpha = rz / (p @ ap)
            x += alpha * p
            r -= alpha * ap
            if np.linalg.norm(r) <= self.config.rel_tolerance * nb:
                return x
            z = self._jacobi * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise NoConvergence(
            f"CG did not reach {self.config.rel_tolerance} in {max_iter} iterations",
            residual=float(np.linalg.norm(r) / nb),
        )


def solve_spd(matrix, rhs, config: SolverConfig = SolverConfig()):
    """One-shot SPD solve; see SpdSolver for reusable factorizations."""
    return SpdSolver(matrix, config).solve(rhs)
