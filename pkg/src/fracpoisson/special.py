"""Special functions used by the spectral basis, Weyl constants and error series.

Gamma, Bessel J of real order, the positive zeros of J0, and the modified
Bessel function K of real order in (0, 1).  Evaluation is delegated to the
battle-tested routines in :mod:`scipy.special`; this module adds the domain
contracts needed by the rest of the package and the Newton-polished zero
table.  All functions are pure and safe to call concurrently.
"""

from dataclasses import dataclass
import numpy as np
import scipy.special as sp

from .errors import DomainError, NumericalError

__all__ = ["gamma", "bessel_j", "bessel_k", "bessel_j0_zeros", "BesselZeroTable"]

_NEWTON_MAX_ITER = 50


def gamma(x):
    """Gamma function for positive real arguments.

    Relative error is below 1e-13 on [1e-3, 50].
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("gamma requires finite x > 0")
    out = sp.gamma(x)
    return float(out) if out.ndim == 0 else out


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x) for nu in [0, 10], x in [0, 1e5]."""
    x = np.asarray(x, dtype=float)
    if not (0.0 <= nu <= 10.0):
        raise DomainError(f"bessel_j supports orders in [0, 10], got nu={nu}")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1e5):
        raise DomainError("bessel_j supports arguments in [0, 1e5]")
    out = sp.jv(nu, x)
    return float(out) if out.ndim == 0 else out


def bessel_k(nu, x):
    """Modified Bessel function of the second kind K_nu(x), 0 < nu < 1, x > 0."""
    x = np.asarray(x, dtype=float)
    if not (0.0 < nu < 1.0):
        raise DomainError(f"bessel_k supports orders in (0, 1), got nu={nu}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("bessel_k requires x > 0")
    out = sp.kv(nu, x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BesselZeroTable:
    """First ``count`` positive zeros of J0, strictly increasing.

    Consecutive zeros approach spacing pi; every stored zero satisfies
    ``|J0(zero)| < 1e-12``.
    """

    zeros: np.ndarray
    count: int

    def __post_init__(self):
        z = np.asarray(self.zeros, dtype=float)
        if z.shape != (self.count,):
            raise ValueError("zero table shape does not match count")
        if np.any(np.diff(z) <= 0.0):
            raise ValueError("zeros must be strictly increasing")


def _mcmahon_j0_guess(k):
    """McMahon asymptotic estimate of the k-th positive zero of J0 (k >= 1)."""
    b = (np.asarray(k, dtype=float) - 0.25) * np.pi
    return b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b**3) + 3779.0 / (15360.0 * b**5)


def bessel_j0_zeros(count):
    """First ``count`` positive zeros of J0.

    Starts from the McMahon asymptotic guesses and polishes each zero with
    Newton iteration (J0' = -J1).  Raises :class:`NumericalError` if Newton
    has not converged after 50 iterations.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    x = _mcmahon_j0_guess(np.arange(1, count + 1))
    for _ in range(_NEWTON_MAX_ITER):
        step = sp.j0(x) / sp.j1(x)
        x = x + step
        # stop once steps are at the roundoff floor of the representation
        if np.max(np.abs(step) / x) < 4e-16:
            break
    else:
        raise NumericalError("Newton iteration for J0 zeros did not converge")
    if np.max(np.abs(sp.j0(x))) >= 1e-12:
        raise NumericalError("polished J0 zeros exceed residual tolerance")
    return BesselZeroTable(zeros=x, count=count)
