"""Approximate Dirichlet-Laplacian spectra: FEM below, Weyl above, decimated.

The lower part of the spectrum is computed by generalized eigensolves of
(S, M) on a coarse level of the multigrid hierarchy; the upper part uses the
leading-order Weyl count.  The merged candidate list is then decimated:
consecutive candidates within a kappa_s-scaled log distance collapse onto a
single representative, which shrinks the basis from M to mtilde values.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NumericalError
from . import special
from .extension import lemma_eps_max

__all__ = [
    "SpectrumApprox",
    "weyl_constant",
    "weyl_eigenvalue",
    "choose_mode_count",
    "crossover_m0",
    "coarse_level_for_eigs",
    "coarse_fem_eigs",
    "decimate",
    "approximate_spectrum",
    "dump_spectrum_csv",
]

_DENSE_EIG_LIMIT = 1500
_DENSE_FALLBACK_LIMIT = 6000
_EIG_RESIDUAL_REL = 1e-8
_MIN_REL_GAP = 1e-12


@dataclass(frozen=True)
class SpectrumApprox:
    """Distinct approximate eigenvalues with provenance and multiplicities.

    ``values`` is strictly increasing; ``multiplicity[i]`` counts how many of
    the original M candidate indices collapsed onto ``values[i]`` and
    ``assignment[m]`` is the representative index of candidate m.
    """

    values: np.ndarray
    provenance: tuple
    multiplicity: np.ndarray
    M: int
    assignment: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ConfigurationError("spectrum must hold at least one value")
        if np.any(v <= 0.0):
            raise ConfigurationError("approximate eigenvalues must be positive")
        if v.size > 1 and np.any(np.diff(v) < _MIN_REL_GAP * v[1:]):
            raise ConfigurationError("decimated values must be strictly increasing")
        if int(np.sum(self.multiplicity)) != self.M:
            raise ConfigurationError("multiplicities must sum to the target count M")
        if v.size > self.M:
            raise ConfigurationError("mtilde cannot exceed M")

    @property
    def m_tilde(self):
        return int(self.values.shape[0])


def weyl_constant(d):
    """C_d = 4 pi Gamma(1 + d/2)^(2/d) of the leading Weyl term."""
    return 4.0 * math.pi * special.gamma(1.0 + d / 2.0) ** (2.0 / d)


def weyl_eigenvalue(m, d, domain_measure):
    """Leading-order Weyl estimate C_d (m/|Omega|)^(2/d) for index m >= 1."""
    if np.any(np.asarray(m) < 1):
        raise ConfigurationError("Weyl estimate requires index m >= 1")
    out = weyl_constant(d) * (np.asarray(m, dtype=float) / domain_measure) ** (2.0 / d)
    return float(out) if out.ndim == 0 else out


def choose_mode_count(h, k, r, s, d, domain_measure, c_m=1.0):
    """Number of spectral modes M so the tail weight matches the FE error.

    Inverts the Weyl count at the target eigenvalue lambda with
    lambda^(-(r+s)/2) = c_m h^min(k, r+s); always at least one.
    """
    mink = min(k, r + s)
    lam_target = (c_m * h**mink) ** (-2.0 / (r + s)) if r + s > 0 else 1.0
    return max(1, math.ceil(domain_measure * (lam_target / weyl_constant(d)) ** (d / 2.0)))


def crossover_m0(h, k, r, s, d, c_cross=1.0):
    """First index from which the Weyl estimate is accurate enough.

    m0 = ceil(c_cross h^(-d min(k, r+s)/(1+r+s))); finite element
    approximations are used below m0, Weyl estimates from m0 on.
    """
    expo = d * min(k, r + s) / (1.0 + r + s)
    return max(1, math.ceil(c_cross * h ** (-expo)))


def coarse_level_for_eigs(h_per_level, solve_level, h, k, r, s, m0, level_sizes, c_h=1.0):
    """Coarsest usable level for the FEM eigensolve.

    Picks the coarsest level whose mesh size satisfies the accuracy
    requirement H <= c_h h^e (e from the order balance, or sqrt(h) for very
    smooth data) while leaving room for m0 eigenpairs (n > 2 m0).  Falls
    back towards finer levels when no level satisfies both.
    """
    if r + s <= 2 * k:
        expo = min(k, r + s) * (1 + 2 * k) / ((1.0 + r + s) * 2 * k)
    else:
        expo = 0.5
    h_max = c_h * h**expo
    for level in range(solve_level + 1):
        if h_per_level[level] <= h_max and level_sizes[level] > 2 * m0:
            return level
    for level in range(max(solve_level - 1, 0), solve_level + 1):
        if level_sizes[level] > 2 * m0:
            return level
    return solve_level


def _mass_orthonormalize(mass, block, against=None):
    if against is not None and against.shape[1] > 0:
        block = block - against @ (against.T @ (mass @ block))
    gram = block.T @ (mass @ block)
    chol = la.cholesky(gram, lower=True)
    return la.solve_triangular(chol, block.T, lower=True).T


def _verify_pairs(stiff, mass, vals, vecs):
    res = stiff @ vecs - (mass @ vecs) * vals[None, :]
    norms = np.linalg.norm(res, axis=0)
    return norms, norms <= _EIG_RESIDUAL_REL * vals


def _dense_eigs(stiff, mass, count):
    vals, vecs = la.eigh(stiff.toarray(), mass.toarray(), subset_by_index=(0, count - 1))
    return vals, vecs


def _lobpcg_eigs(mg, level, count, rng_seed):
    """Blocked locally optimal PCG rounds with V-cycle preconditioning.

    Blocks of at most 40 vectors with a 10-vector buffer are iterated and
    deflated; unconverged buffer vectors are expected and discarded, so the
    solver warnings about them are suppressed.
    """
    import warnings

    n = mg.level_size(level)
    stiff, mass = mg.stiffnesses[level], mg.masses[level]
    cycles = spla.LinearOperator(
        (n, n),
        matvec=lambda b: mg.vcycle(0.0, b, level),
        matmat=lambda b: mg.vcycle(0.0, b, level),
        dtype=np.float64,
    )
    rng = np.random.default_rng(rng_seed + 7919 * level)
    collected_vals, collected_vecs = [], None
    remaining = count
    while remaining > 0:
        block = min(remaining + 10, 40)
        n_deflated = 0 if collected_vecs is None else collected_vecs.shape[1]
        if 5 * block + n_deflated >= n:
            return None, None
        x0 = _mass_orthonormalize(mass, rng.standard_normal((n, block)), collected_vecs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            warm_vals, warm_vecs = spla.lobpcg(stiff, x0, B=mass, M=cycles,
                                               Y=collected_vecs, tol=1e-3,
                                               maxiter=30, largest=False)
            order = np.argsort(warm_vals)
            tol = 3e-9 * max(warm_vals[order[0]], 1e-30)
            vals, vecs = spla.lobpcg(stiff, warm_vecs[:, order], B=mass, M=cycles,
                                     Y=collected_vecs, tol=tol, maxiter=200,
                                     largest=False)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        keep = min(remaining, max(block - 10, 1))
        vecs = _mass_orthonormalize(mass, vecs[:, :keep], collected_vecs)
        vals = vals[:keep]
        collected_vals.extend(vals.tolist())
        collected_vecs = vecs if collected_vecs is None else np.hstack([collected_vecs, vecs])
        remaining -= keep
    vals = np.asarray(collected_vals)
    order = np.argsort(vals)
    return vals[order], collected_vecs[:, order]


def _shift_invert_eigs(stiff, mass, count):
    """Shift-invert Lanczos about zero; the workhorse for large mode counts."""
    n = stiff.shape[0]
    vals, vecs = spla.eigsh(stiff, k=count, M=mass, sigma=0.0, which="LM",
                            v0=np.ones(n))
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


_LOBPCG_COUNT_LIMIT = 120


def coarse_fem_eigs(mg, level, count, rng_seed=20240501):
    """Smallest ``count`` generalized eigenpairs of (S, M) on ``level``.

    Eigenvectors are returned M-orthonormal and eigenvalues ascending; every
    pair satisfies ||S v - lam M v|| <= 1e-8 lam ||v||_M.  Small problems are
    solved densely; moderate counts use blocked locally optimal PCG with the
    hierarchy's V-cycle as preconditioner; counts in the hundreds switch to
    shift-invert Lanczos, which scales better there.  Raises
    :class:`NumericalError` with the achieved residuals on stagnation.
    """
    n = mg.level_size(level)
    if count < 1:
        raise ConfigurationError("eigenpair count must be >= 1")
    if 2 * count >= n:
        raise ConfigurationError(f"eigensolve needs n > 2*count, got n={n}, count={count}")
    stiff, mass = mg.stiffnesses[level], mg.masses[level]

    if n <= _DENSE_EIG_LIMIT:
        return _dense_eigs(stiff, mass, count)

    if count <= _LOBPCG_COUNT_LIMIT:
        vals, vecs = _lobpcg_eigs(mg, level, count, rng_seed)
    else:
        vals, vecs = _shift_invert_eigs(stiff, mass, count)
    norms = None
    if vals is not None:
        norms, ok = _verify_pairs(stiff, mass, vals, vecs)
        if np.all(ok):
            return vals, vecs

    if n <= _DENSE_FALLBACK_LIMIT:
        vals, vecs = _dense_eigs(stiff, mass, count)
        norms, ok = _verify_pairs(stiff, mass, vals, vecs)
        if np.all(ok):
            return vals, vecs
    raise NumericalError(
        "eigensolver stagnation: achieved residuals "
        + ("unavailable" if norms is None else np.array2string(norms, precision=3)))


def decimation_threshold(params, h, k, m, d, domain_measure):
    """Log-distance threshold of the decimation rule at candidate index m >= 1."""
    rs = params.r + params.s
    weyl = weyl_eigenvalue(m, d, domain_measure)
    return params.kappa_s * min(
        weyl ** (rs / 2.0) * h ** min(k, rs),
        math.sqrt(lemma_eps_max(params.s)),
        1.0,
    )


def decimate(candidates, provenance, params, h, k, d, domain_measure):
    """Collapse sorted candidates within the log-distance threshold.

    The first candidate is always kept; candidate m >= 1 reuses the previous
    representative when |log(hat/cand_m)| stays within the threshold, else it
    starts a new distinct value.  Returns the reduced spectrum with
    multiplicities and per-candidate assignment.
    """
    cand = np.asarray(candidates, dtype=float)
    if cand.size == 0 or np.any(cand <= 0.0):
        raise ConfigurationError("candidates must be positive")
    if np.any(np.diff(cand) < 0.0):
        raise ConfigurationError("candidates must be sorted ascending")
    m_total = cand.size
    values = [cand[0]]
    prov = [provenance[0]]
    mult = [1]
    assignment = np.zeros(m_total, dtype=np.int64)
    for m in range(1, m_total):
        thr = decimation_threshold(params, h, k, m, d, domain_measure)
        if abs(math.log(values[-1] / cand[m])) <= thr:
            mult[-1] += 1
        else:
            values.append(cand[m])
            prov.append(provenance[m])
            mult.append(1)
        assignment[m] = len(values) - 1
    return SpectrumApprox(values=np.asarray(values), provenance=tuple(prov),
                          multiplicity=np.asarray(mult), M=m_total,
                          assignment=assignment)


def approximate_spectrum(mg, params, h, k, d, domain_measure, h_per_level,
                         solve_level=None, c_m=1.0, c_cross=1.0, c_h=1.0,
                         rng_seed=20240501):
    """Full pipeline: target count, FEM low modes, Weyl high modes, decimation.

    Returns (spectrum, fem_count, eig_level).
    """
    if solve_level is None:
        solve_level = mg.num_levels - 1
    count_m = choose_mode_count(h, k, params.r, params.s, d, domain_measure, c_m)
    m0 = min(crossover_m0(h, k, params.r, params.s, d, c_cross), count_m)
    level_sizes = [mg.level_size(l) for l in range(mg.num_levels)]
    eig_level = coarse_level_for_eigs(h_per_level, solve_level, h, k, params.r,
                                      params.s, m0, level_sizes, c_h)
    m0 = min(m0, max(1, (level_sizes[eig_level] - 1) // 2))
    fem_vals, _ = coarse_fem_eigs(mg, eig_level, m0, rng_seed)
    prov = [f"FEM({eig_level})"] * m0
    if count_m > m0:
        weyl_vals = weyl_eigenvalue(np.arange(m0, count_m), d, domain_measure)
        cand = np.concatenate([fem_vals, np.atleast_1d(weyl_vals)])
        prov += ["Weyl"] * (count_m - m0)
    else:
        cand = fem_vals[:count_m]
        prov = prov[:count_m]
    order = np.argsort(cand, kind="stable")
    cand = cand[order]
    prov = [prov[i] for i in order]
    spec = decimate(cand, prov, params, h, k, d, domain_measure)
    return spec, m0, eig_level


def dump_spectrum_csv(stream, candidates, provenance, spectrum):
    """Diagnostic dump of (index, candidate, provenance, representative)."""
    stream.write("index,candidate,provenance,representative\n")
    rep = spectrum.values[spectrum.assignment]
    for m, (c, p) in enumerate(zip(candidates, provenance)):
        stream.write(f"{m},{c:.17g},{p},{rep[m]:.17g}\n")
