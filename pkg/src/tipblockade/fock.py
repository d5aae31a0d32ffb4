"""Operators on the truncated two-mode Fock space |m, n>.

Mode ``cw`` (index 0) carries ``m`` photons and mode ``ccw`` (index 1) carries
``n`` photons. Basis states are ordered lexicographically with ``m`` major::

    index_of(m, n) = m * (n_max + 1) + n

so the full space is ``kron(cw_space, ccw_space)``. Operators are plain dense
complex ``numpy`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError

MODES = ("cw", "ccw")


@dataclass(frozen=True)
class TwoModeBasis:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.levels**2

    def index_of(self, m: int, n: int) -> int:
        if not (0 <= m <= self.n_max and 0 <= n <= self.n_max):
            raise IndexError(f"|{m},{n}> outside cutoff n_max={self.n_max}")
        return m * self.levels + n

    def state_of(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} outside basis of dim {self.dim}")
        return divmod(index, self.levels)

    def states(self) -> list[tuple[int, int]]:
        return [self.state_of(k) for k in range(self.dim)]

    def ket(self, m: int, n: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index_of(m, n)] = 1.0
        return v

    def projector(self, m: int, n: int) -> np.ndarray:
        v = self.ket(m, n)
        return np.outer(v, v.conj())

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    @cached_property
    def _single_mode_lowering(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.levels)), 1).astype(complex)


def _mode_index(mode) -> int:
    if mode in (0, "cw"):
        return 0
    if mode in (1, "ccw"):
        return 1
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def embed(op: np.ndarray, mode, basis: TwoModeBasis) -> np.ndarray:
    """Lift a single-mode operator onto one tensor factor of ``basis``."""
    op = np.asarray(op)
    if op.shape != (basis.levels, basis.levels):
        raise DimensionError(
            f"single-mode operator has shape {op.shape}, expected {(basis.levels,) * 2}"
        )
    eye = np.eye(basis.levels)
    if _mode_index(mode) == 0:
        return np.kron(op, eye)
    return np.kron(eye, op)


def annihilation(basis: TwoModeBasis, mode="cw") -> np.ndarray:
    return embed(basis._single_mode_lowering, mode, basis)


def creation(basis: TwoModeBasis, mode="cw") -> np.ndarray:
    return adjoint(annihilation(basis, mode))


def number_op(basis: TwoModeBasis, mode="cw") -> np.ndarray:
    k = _mode_index(mode)
    counts = [state[k] for state in basis.states()]
    return np.diag(np.asarray(counts, dtype=complex))


def adjoint(op: np.ndarray) -> np.ndarray:
    return np.asarray(op).conj().T


def _check_square_pair(a: np.ndarray, b: np.ndarray):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got shape {a.shape}")
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_square_pair(a, b)
    return a @ b


def add_scaled(a: np.ndarray, b: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """Return ``a + scale * b``."""
    a, b = np.asarray(a), np.asarray(b)
    _check_square_pair(a, b)
    return a + scale * b


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_square_pair(a, b)
    return a @ b - b @ a


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    """``tr(op @ rho)``."""
    rho, op = np.asarray(rho), np.asarray(op)
    _check_square_pair(rho, op)
    # tr(AB) = sum_ij A_ij B_ji without forming the product
    return complex(np.einsum("ij,ji->", op, rho))


def is_hermitian(op: np.ndarray, atol: float = 1e-10) -> bool:
    op = np.asarray(op)
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= atol)


def density_defects(rho: np.ndarray) -> dict:
    """Hermiticity, trace and positivity defects of a candidate density matrix."""
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T), initial=0.0))
    trace = abs(complex(np.trace(rho)) - 1.0)
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    return {"hermiticity": herm, "trace": trace, "min_eigenvalue": min_eig}


def is_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-8, pos_tol=1e-8) -> bool:
    d = density_defects(rho)
    return d["hermiticity"] <= herm_tol and d["trace"] <= trace_tol and d["min_eigenvalue"] >= -pos_tol
