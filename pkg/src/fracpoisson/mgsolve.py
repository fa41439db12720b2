"""Geometric multigrid V-cycle and preconditioned CG for shifted operators.

Targets operators sigma*M + S with shift sigma >= 0 on a nested hierarchy.
The smoother is damped Jacobi (weight 2/3) with two pre- and two
post-smoothing steps; the cycle is symmetric, so the preconditioner is SPD
and admissible for CG.  Shift-dependent pieces (smoother diagonals, coarse
factorizations) are cached lazily per distinct sigma on top of one reusable
hierarchy.
"""

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NonConvergenceError
from . import fem

__all__ = ["MgHierarchy", "build_mg", "pcg_solve"]

_JACOBI_WEIGHT = 2.0 / 3.0
_PRE_SMOOTH = 2
_POST_SMOOTH = 2
_MAX_PCG_ITER = 200


@dataclass
class MgHierarchy:
    """Per-level operators plus prolongations, coarse-to-fine ordering."""

    masses: list
    stiffnesses: list
    prolongations: list  # prolongations[l] maps level l to level l+1
    _shift_cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_levels(self):
        return len(self.masses)

    def level_size(self, level):
        return self.masses[level].shape[0]

    def _shifted(self, sigma):
        key = float(sigma)
        entry = self._shift_cache.get(key)
        if entry is None:
            ops = [(self.stiffnesses[l] + sigma * self.masses[l]).tocsr()
                   for l in range(self.num_levels)]
            diags = [np.asarray(op.diagonal()) for op in ops]
            coarse = spla.splu(ops[0].tocsc())
            entry = (ops, diags, coarse)
            self._shift_cache[key] = entry
        return entry

    def vcycle(self, sigma, rhs, level=None):
        """One symmetric V-cycle for sigma*M + S, zero initial guess.

        Accepts a single right-hand side or a block of them as columns.
        """
        ops, diags, coarse = self._shifted(sigma)
        if level is None:
            level = self.num_levels - 1
        rhs = np.asarray(rhs, dtype=float)
        return self._vcycle(ops, diags, coarse, level, rhs)

    def _vcycle(self, ops, diags, coarse, level, rhs):
        if level == 0:
            return coarse.solve(rhs) if rhs.size else np.zeros_like(rhs)
        a = ops[level]
        d = diags[level] if rhs.ndim == 1 else diags[level][:, None]
        x = np.zeros_like(rhs)
        for _ in range(_PRE_SMOOTH):
            x += _JACOBI_WEIGHT * (rhs - a @ x) / d
        p = self.prolongations[level - 1]
        coarse_rhs = p.T @ (rhs - a @ x)
        x += p @ self._vcycle(ops, diags, coarse, level - 1, coarse_rhs)
        for _ in range(_POST_SMOOTH):
            x += _JACOBI_WEIGHT * (rhs - a @ x) / d
        return x

    def operator(self, sigma, level=None):
        ops, _, _ = self._shifted(sigma)
        return ops[self.num_levels - 1 if level is None else level]


def build_mg(spaces, operators=None):
    """Build a reusable hierarchy from nested FE spaces.

    ``operators`` may supply per-level (mass, stiffness) pairs; otherwise
    they are assembled here.  Shifts are applied at cycle time.
    """
    if len(spaces) < 1:
        raise ConfigurationError("need at least one level")
    if operators is None:
        operators = [(fem.assemble_mass(sp), fem.assemble_stiffness(sp)) for sp in spaces]
    if len(operators) != len(spaces):
        raise ConfigurationError("one (mass, stiffness) pair per level required")
    for sp, (m, s) in zip(spaces, operators):
        if m.shape != (sp.n, sp.n) or s.shape != (sp.n, sp.n):
            raise ConfigurationError("operator sizes do not match their spaces")
    if spaces[0].n > 2000:
        raise ConfigurationError("coarsest level too large for a direct solve (n <= 2000)")
    prolongations = [fem.build_prolongation(spaces[l], spaces[l + 1])
                     for l in range(len(spaces) - 1)]
    return MgHierarchy(masses=[m for m, _ in operators],
                       stiffnesses=[s for _, s in operators],
                       prolongations=prolongations)


def pcg_solve(hier, sigma, rhs, rel_tol=1e-10, max_iter=_MAX_PCG_ITER, level=None):
    """CG on sigma*M + S with one V-cycle as preconditioner.

    Returns (solution, iteration count) once the true residual satisfies
    ||(sigma*M + S) x - rhs|| <= rel_tol * ||rhs||.  Raises
    :class:`NonConvergenceError` carrying the final relative residual if the
    iteration cap is exceeded.
    """
    if sigma < 0:
        raise ConfigurationError("shift sigma must be >= 0")
    if level is None:
        level = hier.num_levels - 1
    a = hier.operator(sigma, level)
    if rhs.shape[0] != a.shape[0]:
        raise ConfigurationError("rhs dimension does not match the requested level")
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), 0

    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = hier.vcycle(sigma, r, level)
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        ap = a @ p
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= rel_tol * rhs_norm:
            true_res = np.linalg.norm(rhs - a @ x)
            if true_res <= rel_tol * rhs_norm:
                return x, it
            r = rhs - a @ x
        z = hier.vcycle(sigma, r, level)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    final = np.linalg.norm(rhs - a @ x) / rhs_norm
    raise NonConvergenceError(
        f"PCG did not reach rel_tol={rel_tol:g} within {max_iter} iterations "
        f"(relative residual {final:.3e})", residual=final, iterations=max_iter)
