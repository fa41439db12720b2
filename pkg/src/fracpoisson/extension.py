"""Everything in the extruded direction of the cylinder problem.

Holds the fractional-order constants, the relative energy loss incurred by
approximating an eigenvalue, the dense spectral mass/stiffness matrices of
the y-direction basis (closed forms), their joint factorization, and the
weight vector driving the reduced solve.
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
import scipy.linalg as la

from .errors import DomainError, IllConditionedBasisError
from . import special

__all__ = [
    "FractionalParams",
    "SpectralFactorization",
    "energy_loss",
    "lemma_eps_max",
    "spectral_mass",
    "spectral_stiffness",
    "factorize",
    "rational_value",
    "basis_profile",
]

_COINCIDENT_REL = 1e-8
_PIVOT_RATIO_LIMIT = 1e14


@dataclass(frozen=True)
class FractionalParams:
    """Fractional order ``s`` in (0,1) and data-regularity index ``r`` >= -s.

    Derived constants: ``alpha`` is the weight exponent 1-2s of the extruded
    problem, ``d_s`` the Neumann-trace scaling 2^(1-2s) Gamma(1-s)/Gamma(s),
    ``c_s`` the basis normalisation 2^(1-s)/Gamma(s) that gives profile
    value one at y=0, and ``kappa_s`` = sqrt(2/(e s (1-s))), the constant in
    the decimation log-distance threshold.
    """

    s: float
    r: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"fractional order s must be in (0, 1), got {self.s}")
        if self.r < -self.s:
            raise DomainError(f"regularity index r must be >= -s, got r={self.r}")

    @cached_property
    def alpha(self):
        return 1.0 - 2.0 * self.s

    @cached_property
    def d_s(self):
        return 2.0 ** (1.0 - 2.0 * self.s) * special.gamma(1.0 - self.s) / special.gamma(self.s)

    @cached_property
    def c_s(self):
        return 2.0 ** (1.0 - self.s) / special.gamma(self.s)

    @cached_property
    def kappa_s(self):
        return math.sqrt(2.0 / (math.e * self.s * (1.0 - self.s)))


def energy_loss(s, rho):
    """Relative energy loss when a true eigenvalue is replaced by rho times it.

    Equals 1 - 1/((1-s) rho^s + s rho^(s-1)); zero exactly at rho = 1 and
    always in [0, 1).
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise DomainError("eigenvalue ratio rho must be positive")
    out = 1.0 - 1.0 / ((1.0 - s) * rho**s + s * rho ** (s - 1.0))
    out = np.maximum(out, 0.0)  # roundoff can dip just below zero at rho ~ 1
    return float(out) if out.ndim == 0 else out


def lemma_eps_max(s):
    """Upper end of the epsilon range where the log-distance criterion applies."""
    lo, hi = min(s, 1.0 - s), max(s, 1.0 - s)
    return min(0.5 * math.e * lo / hi, 1.0)


def _difference_quotient(values, power):
    """(a^power - b^power) / (a - b) with a stable branch for near ties.

    For |a - b| below the coincidence threshold the quotient is evaluated by
    a two-term Taylor expansion about the midpoint.
    """
    lam = np.asarray(values, dtype=float)
    a = lam[:, None]
    b = lam[None, :]
    diff = a - b
    close = np.abs(diff) < _COINCIDENT_REL * np.maximum(a, b)
    safe = np.where(close, 1.0, diff)
    quot = (a**power - b**power) / safe
    mid = 0.5 * (a + b)
    taylor = power * mid ** (power - 1.0) \
        + power * (power - 1.0) * (power - 2.0) * mid ** (power - 3.0) * diff**2 / 24.0
    return np.where(close, taylor, quot)


def _values_of(spectrum):
    return np.asarray(getattr(spectrum, "values", spectrum), dtype=float)


def spectral_mass(spectrum, params):
    """Dense matrix of weighted L2 inner products of the y-direction basis.

    Entry (m, n) is d_s (lam_m^s - lam_n^s)/(lam_m - lam_n) off the diagonal
    and s d_s lam_m^(s-1) on it.
    """
    lam = _values_of(spectrum)
    s, ds = params.s, params.d_s
    out = ds * _difference_quotient(lam, s)
    np.fill_diagonal(out, s * ds * lam ** (s - 1.0))
    return out


def spectral_stiffness(spectrum, params):
    """Dense matrix of weighted H1 inner products of the y-direction basis.

    Entry (m, n) is d_s (lam_m lam_n^s - lam_n lam_m^s)/(lam_m - lam_n) off
    the diagonal and (1-s) d_s lam_m^s on it.  The off-diagonal equals
    -lam_m lam_n times the difference quotient of t^(s-1).
    """
    lam = _values_of(spectrum)
    s, ds = params.s, params.d_s
    outer = lam[:, None] * lam[None, :]
    out = -ds * outer * _difference_quotient(lam, s - 1.0)
    np.fill_diagonal(out, (1.0 - s) * ds * lam**s)
    return out


@dataclass(frozen=True)
class SpectralFactorization:
    """Cholesky + eigendecomposition of the spectral matrix pair.

    m_sigma = L L^T and s_sigma = L P diag(lambda_diag) P^T L^T with
    orthogonal modal matrix P and ascending lambda_diag;
    weights = P^T L^{-1} 1.
    """

    m_sigma: np.ndarray
    s_sigma: np.ndarray
    chol_l: np.ndarray
    lambda_diag: np.ndarray
    weights: np.ndarray
    modal: np.ndarray = None


def _factorize_double(m_sigma, s_sigma):
    chol_l = la.cholesky(m_sigma, lower=True)
    piv = np.diag(chol_l)
    if piv.max() ** 2 > _PIVOT_RATIO_LIMIT * piv.min() ** 2:
        raise la.LinAlgError("pivot ratio beyond guard")
    inner = la.solve_triangular(chol_l, s_sigma, lower=True)
    inner = la.solve_triangular(chol_l, inner.T, lower=True).T
    lam, p = la.eigh(0.5 * (inner + inner.T))
    ones = np.ones(m_sigma.shape[0])
    weights = p.T @ la.solve_triangular(chol_l, ones, lower=True)
    return chol_l, lam, weights, p


def _factorize_extended(values, s, dps):
    """Same factorization at ``dps`` decimal digits, rebuilt from eigenvalues.

    The basis Gram matrix is analytically positive definite but its
    conditioning grows exponentially with the basis size, so for larger
    decimated spectra the double-precision entries are already indefinite.
    All quantities returned are rounded to float64; every term of the final
    rational sum is positive, so double evaluation downstream stays stable.
    """
    from mpmath import mp

    old = mp.dps
    try:
        mp.dps = dps
        n = len(values)
        lam = [mp.mpf(float(x)) for x in values]
        sm = mp.mpf(float(s))
        ds = 2 ** (1 - 2 * sm) * mp.gamma(1 - sm) / mp.gamma(sm)
        msig = mp.matrix(n, n)
        ssig = mp.matrix(n, n)
        for i in range(n):
            msig[i, i] = sm * ds * lam[i] ** (sm - 1)
            ssig[i, i] = (1 - sm) * ds * lam[i] ** sm
            for j in range(i):
                msig[i, j] = msig[j, i] = ds * (lam[i] ** sm - lam[j] ** sm) / (lam[i] - lam[j])
                ssig[i, j] = ssig[j, i] = ds * (lam[i] * lam[j] ** sm - lam[j] * lam[i] ** sm) \
                    / (lam[i] - lam[j])
        low = mp.cholesky(msig)

        def fwd(rhs):
            cols = rhs.cols
            x = mp.matrix(n, cols)
            for c in range(cols):
                for i in range(n):
                    acc = rhs[i, c]
                    for j in range(i):
                        acc -= low[i, j] * x[j, c]
                    x[i, c] = acc / low[i, i]
            return x

        half = fwd(ssig)
        core = fwd(half.T)
        core = (core + core.T) / 2
        eigvals, q = mp.eigsy(core)
        w = q.T * fwd(mp.matrix([[1.0]] * n))
        lam_out = np.array([float(eigvals[i]) for i in range(n)])
        w_out = np.array([float(w[i]) for i in range(n)])
        low_out = np.array([[float(low[i, j]) if j <= i else 0.0 for j in range(n)]
                            for i in range(n)])
        modal = np.array([[float(q[i, j]) for j in range(n)] for i in range(n)])
        order = np.argsort(lam_out)
        return low_out, lam_out[order], w_out[order], modal[:, order]
    finally:
        mp.dps = old


def factorize(m_sigma, s_sigma, spectrum=None, params=None):
    """Joint factorization of the spectral mass/stiffness pair.

    Runs in O(mtilde^3).  The double-precision Cholesky route is used when
    its pivots are sound and (when ``spectrum`` and ``params`` are given)
    the rational trace identity holds at the basis points; otherwise the
    identical factorization is recomputed from the eigenvalues in extended
    precision.  Nothing is ever regularized: if no precision level yields a
    positive definite basis Gram matrix, the basis is numerically dependent
    and :class:`IllConditionedBasisError` asks for a larger decimation
    threshold.
    """
    m_sigma = np.asarray(m_sigma, dtype=float)
    s_sigma = np.asarray(s_sigma, dtype=float)

    def result(chol_l, lam, weights, modal):
        return SpectralFactorization(m_sigma=m_sigma, s_sigma=s_sigma, chol_l=chol_l,
                                     lambda_diag=lam, weights=weights, modal=modal)

    def identity_ok(fact):
        if spectrum is None or params is None:
            return True
        lam = _values_of(spectrum)
        rel = np.abs(rational_value(fact, params, lam) - lam ** (-params.s))
        return np.all(rel <= 1e-8 * lam ** (-params.s))

    try:
        fact = result(*_factorize_double(m_sigma, s_sigma))
        if identity_ok(fact):
            return fact
    except la.LinAlgError:
        pass
    if spectrum is None or params is None:
        raise IllConditionedBasisError(
            "spectral mass matrix is not numerically positive definite in double "
            "precision; increase the decimation threshold to separate the basis")

    values = _values_of(spectrum)
    for dps in (60, 120, 240):
        try:
            fact = result(*_factorize_extended(values, params.s, dps))
        except ValueError:
            continue
        if identity_ok(fact):
            return fact
    raise IllConditionedBasisError(
        "spectral basis is numerically dependent even at extended precision; "
        "increase the decimation threshold to separate the basis")


def rational_value(fact, params, lam):
    """d_s sum_m w_m^2 / (Lambda_m + lam): the discrete trace response.

    Reproduces lam^(-s) exactly when lam is one of the basis eigenvalues.
    """
    lam = np.asarray(lam, dtype=float)
    flat = np.atleast_1d(lam)
    out = params.d_s * np.sum(fact.weights[:, None] ** 2
                              / (fact.lambda_diag[:, None] + flat[None, :]), axis=0)
    return float(out[0]) if lam.ndim == 0 else out.reshape(lam.shape)


def basis_profile(lambda_hat, params, y):
    """Value of the y-direction basis function for eigenvalue ``lambda_hat``.

    c_s (sqrt(lam) y)^s K_s(sqrt(lam) y); tends to one as y -> 0+ and is
    guarded against underflow for sqrt(lam) y > 700 (returns 0).  Diagnostic
    only; the solve path never evaluates it.
    """
    if y <= 0.0:
        raise DomainError("basis profile is evaluated for y > 0")
    z = math.sqrt(lambda_hat) * y
    if z > 700.0:
        return 0.0
    return params.c_s * z**params.s * special.bessel_k(params.s, z)
