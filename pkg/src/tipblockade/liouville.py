"""Lindblad superoperator, steady states and photon correlations.

Density matrices are vectorized by column stacking, ``vec(rho) =
rho.reshape(-1, order="F")``, so that ``vec(A rho B) = kron(B.T, A) vec(rho)``
and the generator reads::

    L = -i (I (x) H - H^T (x) I)
        + sum_j gamma/2 (2 conj(a_j) (x) a_j - I (x) a_j^+ a_j - (a_j^+ a_j)^T (x) I)

The superoperator is held as a sparse CSR matrix; ``Liouvillian.dense()``
returns the full array when needed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fock
from .errors import (
    DegenerateSteadyState,
    DimensionError,
    NoConvergence,
    PropagationError,
    ZeroPhotonNumber,
)
from .model import SystemParams, build_hamiltonian

DEFAULT_N_MAX = 5
MAX_LIOUVILLE_DIM = 20164
ZERO_PHOTON_THRESHOLD = 1e-14
RCOND_LIMIT = 1e-13


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


@dataclass(frozen=True)
class Liouvillian:
    basis: fock.TwoModeBasis
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side of the master equation for ``rho``."""
        return unvec(self.matrix @ vec(rho), self.basis.dim)

    def trace_residual(self) -> float:
        """Norm of vec(I)^+ L, zero for a trace-preserving generator."""
        row = vec(np.eye(self.basis.dim))
        return float(np.linalg.norm(self.matrix.T @ row))


def liouvillian_from(basis, hamiltonian, collapse_ops=(), max_dim=MAX_LIOUVILLE_DIM) -> Liouvillian:
    """Generator for ``hamiltonian`` and rate-weighted collapse operators.

    ``collapse_ops`` holds ``(rate, c)`` pairs contributing
    ``rate/2 (2 c rho c^+ - c^+ c rho - rho c^+ c)``.
    """
    d = basis.dim
    if d * d > max_dim:
        raise DimensionError(f"Liouville dimension {d * d} exceeds limit {max_dim}")
    h = sp.csr_matrix(np.asarray(hamiltonian))
    if h.shape != (d, d):
        raise DimensionError(f"Hamiltonian shape {h.shape} does not match basis dim {d}")
    eye = sp.identity(d, dtype=complex, format="csr")
    out = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for rate, c in collapse_ops:
        c = sp.csr_matrix(np.asarray(c))
        cdc = c.conj().T @ c
        out = out + 0.5 * rate * (2 * sp.kron(c.conj(), c) - sp.kron(eye, cdc) - sp.kron(cdc.T, eye))
    return Liouvillian(basis, sp.csr_matrix(out))


def build_liouvillian(basis: fock.TwoModeBasis, p: SystemParams, max_dim: int = MAX_LIOUVILLE_DIM) -> Liouvillian:
    """Master-equation generator with one total loss rate shared by both modes."""
    if basis.dim**2 > max_dim:
        raise DimensionError(f"Liouville dimension {basis.dim ** 2} exceeds limit {max_dim}")
    gamma = p.gamma_total
    h = build_hamiltonian(basis, p)
    collapse = [(gamma, fock.annihilation(basis, mode)) for mode in fock.MODES]
    return liouvillian_from(basis, h, collapse, max_dim=max_dim)


def _bordered_system(L: Liouvillian):
    d = L.basis.dim
    trace_row = vec(np.eye(d))
    m = L.matrix.tolil(copy=True)
    m[0, :] = trace_row
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    return m, rhs


def _solve_sparse(m, rhs):
    mc = sp.csc_matrix(m)
    try:
        lu = spla.splu(mc)
    except RuntimeError as exc:  # exactly singular
        raise DegenerateSteadyState(f"bordered Liouvillian is singular: {exc}") from exc
    inv = spla.LinearOperator(
        mc.shape,
        matvec=lu.solve,
        rmatvec=lambda b: lu.solve(b, trans="H"),
        dtype=complex,
    )
    inv_norm = spla.onenormest(inv)
    rcond = 1.0 / (spla.norm(mc, 1) * inv_norm)
    return lu.solve(rhs), rcond


def _solve_dense(m, rhs):
    a = m.toarray()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, np.linalg.norm(a, 1), norm="1")
    if info != 0 or not np.all(np.isfinite(lu)):
        raise NoConvergence("LU factorization of the bordered Liouvillian failed")
    return sla.lu_solve((lu, piv), rhs, check_finite=False), float(rcond)


def steady_state(L: Liouvillian, method: str = "sparse") -> np.ndarray:
    """Unique stationary state from the trace-bordered linear system.

    ``method`` selects sparse (SuperLU) or dense (LAPACK) LU; both solve the
    same system. Raises ``DegenerateSteadyState`` when the stationary space is
    not one-dimensional and ``NoConvergence`` when the result fails the
    residual or positivity checks.
    """
    m, rhs = _bordered_system(L)
    if method == "sparse":
        x, rcond = _solve_sparse(m, rhs)
    elif method == "dense":
        x, rcond = _solve_dense(m, rhs)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    if not np.isfinite(rcond) or rcond < RCOND_LIMIT or not np.all(np.isfinite(x)):
        raise DegenerateSteadyState(f"steady state not unique (rcond={rcond:.3g})")

    d = L.basis.dim
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real

    residual = np.linalg.norm(L.matrix @ vec(rho))
    scale = spla.norm(L.matrix)
    if residual > 1e-9 * scale:
        raise NoConvergence(f"steady-state residual {residual:.3g} exceeds 1e-9 * |L| = {1e-9 * scale:.3g}")
    min_eig = np.linalg.eigvalsh(rho).min()
    if min_eig < -1e-8:
        raise NoConvergence(f"steady state has negative eigenvalue {min_eig:.3g}")
    return rho


def time_evolve(L: Liouvillian, rho0: np.ndarray, t: float) -> np.ndarray:
    """``unvec(exp(L t) vec(rho0))``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    if t == 0:
        return rho0.copy()
    try:
        v = spla.expm_multiply(L.matrix * t, vec(rho0))
    except (ValueError, OverflowError, FloatingPointError) as exc:
        raise PropagationError(str(exc)) from exc
    rho = unvec(v, L.basis.dim)
    tr0, tr = np.trace(rho0), np.trace(rho)
    if not np.all(np.isfinite(v)) or abs(tr - tr0) > 1e-8 * max(1.0, abs(tr0)):
        raise PropagationError(f"trace drifted from {tr0} to {tr} during propagation")
    return rho


def propagator(L: Liouvillian, t: float) -> np.ndarray:
    """Dense ``exp(L t)`` by Pade scaling and squaring."""
    return sla.expm(L.dense() * t)


def photon_probs(rho: np.ndarray, basis: fock.TwoModeBasis | None = None) -> dict:
    basis = basis or basis_for(rho)
    diag = np.real(np.diag(rho))
    return {state: float(diag[k]) for k, state in enumerate(basis.states())}


def basis_for(rho: np.ndarray) -> fock.TwoModeBasis:
    d = np.asarray(rho).shape[0]
    levels = math.isqrt(d)
    if levels * levels != d:
        raise DimensionError(f"dimension {d} is not a two-mode square basis")
    return fock.TwoModeBasis(levels - 1)


def mean_photons(rho: np.ndarray, mode="cw") -> float:
    basis = basis_for(rho)
    return fock.expectation(rho, fock.number_op(basis, mode)).real


def gn_zero(rho: np.ndarray, n: int = 2) -> float:
    """Normalized equal-time CW correlation <a^+^n a^n> / <a^+ a>^n."""
    if n < 1:
        raise ValueError("order must be >= 1")
    basis = basis_for(rho)
    n_cw = mean_photons(rho)
    if n_cw < ZERO_PHOTON_THRESHOLD:
        raise ZeroPhotonNumber(f"<n_cw> = {n_cw:.3g} is too small to normalize g({n})")
    # <a^+^n a^n> = sum_m m!/(m-n)! P_m for the diagonal number-state weights
    m = np.array([s[0] for s in basis.states()], dtype=float)
    falling = np.ones_like(m)
    for k in range(n):
        falling *= np.clip(m - k, 0, None)
    moment = float(np.dot(falling, np.real(np.diag(rho))))
    return max(moment, 0.0) / n_cw**n


def g2_tau(L: Liouvillian, rho_ss: np.ndarray, tau_grid) -> np.ndarray:
    """Delayed CW intensity correlation via the quantum regression theorem."""
    taus = np.asarray(tau_grid, dtype=float)
    if np.any(taus < 0) or np.any(np.diff(taus) < 0):
        raise ValueError("tau_grid must be sorted and non-negative")
    basis = L.basis
    a1 = fock.annihilation(basis, "cw")
    n1 = fock.number_op(basis, "cw")
    n_cw = fock.expectation(rho_ss, n1).real
    if n_cw < ZERO_PHOTON_THRESHOLD:
        raise ZeroPhotonNumber(f"<n_cw> = {n_cw:.3g}")
    sigma = a1 @ rho_ss @ a1.conj().T
    out = np.empty(len(taus))
    t_prev = 0.0
    for k, tau in enumerate(taus):
        sigma = time_evolve(L, sigma, tau - t_prev)
        t_prev = tau
        out[k] = fock.expectation(sigma, n1).real / n_cw**2
    return out


@dataclass(frozen=True)
class CorrelationResult:
    n_cw: float
    g2_0: float
    g3_0: float
    g4_0: float
    p_mn: dict

    def probability(self, m: int, n: int) -> float:
        return self.p_mn.get((m, n), 0.0)


def solve_point(p: SystemParams, n_max: int = DEFAULT_N_MAX, method: str = "sparse") -> np.ndarray:
    basis = fock.TwoModeBasis(n_max)
    return steady_state(build_liouvillian(basis, p), method=method)


def correlations(p: SystemParams, n_max: int = DEFAULT_N_MAX, method: str = "sparse") -> CorrelationResult:
    rho = solve_point(p, n_max, method)
    return CorrelationResult(
        n_cw=mean_photons(rho),
        g2_0=gn_zero(rho, 2),
        g3_0=gn_zero(rho, 3),
        g4_0=gn_zero(rho, 4),
        p_mn=photon_probs(rho),
    )


def cutoff_convergence(p: SystemParams, n_low: int = 4, n_high: int = 6) -> float:
    """Relative change of g2(0) when the per-mode cutoff grows from n_low to n_high."""
    lo = gn_zero(solve_point(p, n_low), 2)
    hi = gn_zero(solve_point(p, n_high), 2)
    return abs(hi - lo) / abs(hi)
