"""Weak-drive closed forms and tip-position condition solvers.

The amplitude solver works on the triangular space m + n <= 3 with the
non-Hermitian Hamiltonian H - i gamma/2 (n1 + n2). Setting c_00 = 1, each
excitation level k satisfies

    H_k c_k = -xi A_k c_{k-1}

where H_k is the effective Hamiltonian restricted to level k and A_k the
matrix of a1^+ from level k-1 to level k. Coupling back to lower levels is
one order higher in xi and is dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoSolution, ResonantPole
from .model import SystemParams, TipGeometry, TipModel, tip_coupling, tip_loss

MAX_LEVEL = 3
POLE_TOL = 1e-12


def _level_states(k: int) -> list[tuple[int, int]]:
    return [(m, k - m) for m in range(k, -1, -1)]


@dataclass(frozen=True)
class AmplitudeSet:
    c_mn: dict

    def amplitude(self, m: int, n: int) -> complex:
        return self.c_mn[(m, n)]

    def probability(self, m: int, n: int) -> float:
        return abs(self.c_mn[(m, n)]) ** 2

    def level_norm(self, k: int) -> float:
        return math.sqrt(sum(abs(self.c_mn[s]) ** 2 for s in _level_states(k)))

    def g2_0(self) -> float:
        return 2 * self.probability(2, 0) / self.probability(1, 0) ** 2


def _level_hamiltonian(k: int, p: SystemParams) -> np.ndarray:
    states = _level_states(k)
    idx = {s: i for i, s in enumerate(states)}
    j = p.j_total
    diag = p.delta * k + p.chi * (k * k - k) - 0.5j * p.gamma_total * k
    h = np.eye(len(states), dtype=complex) * diag
    for (m, n), col in idx.items():
        if n > 0:  # J a1^+ a2
            h[idx[(m + 1, n - 1)], col] += j * math.sqrt((m + 1) * n)
        if m > 0:  # J* a2^+ a1
            h[idx[(m - 1, n + 1)], col] += np.conj(j) * math.sqrt(m * (n + 1))
    return h


def _drive_matrix(k: int) -> np.ndarray:
    lower, upper = _level_states(k - 1), _level_states(k)
    row = {s: i for i, s in enumerate(upper)}
    a = np.zeros((len(upper), len(lower)), dtype=complex)
    for col, (m, n) in enumerate(lower):
        a[row[(m + 1, n)], col] = math.sqrt(m + 1)
    return a


def effective_amplitudes(p: SystemParams, max_level: int = MAX_LEVEL) -> AmplitudeSet:
    """Steady weak-drive amplitudes c_mn for m + n <= max_level, with c_00 = 1."""
    if p.gamma_total <= 0:
        raise ResonantPole("hierarchy is singular without dissipation")
    c = {(0, 0): 1.0 + 0j}
    prev = np.array([1.0 + 0j])
    for k in range(1, max_level + 1):
        hk = _level_hamiltonian(k, p)
        try:
            ck = np.linalg.solve(hk, -p.xi * (_drive_matrix(k) @ prev))
        except np.linalg.LinAlgError as exc:
            raise ResonantPole(f"level-{k} hierarchy is singular") from exc
        c.update(zip(_level_states(k), ck))
        prev = ck
    return AmplitudeSet(c)


def _denominators(p: SystemParams):
    d1 = 2 * p.delta - 1j * p.gamma_total
    d2 = d1 + 2 * p.chi
    j2 = abs(p.j_total) ** 2
    eta1 = 4 * j2 - d1**2
    eta2 = 4 * j2 - d2**2
    if abs(eta1 * eta2 * d2) < POLE_TOL:
        raise ResonantPole("closed form evaluated on a pole (eta1 * eta2 * Delta2 ~ 0)")
    return d1, d2, j2, eta1, eta2


def c20_closed_form(p: SystemParams) -> complex:
    d1, d2, j2, eta1, eta2 = _denominators(p)
    return 2 * math.sqrt(2) * p.xi**2 * (d1 * d2 + 4 * j2 * p.chi / d2) / (eta1 * eta2)


def single_photon_probs(p: SystemParams) -> tuple[float, float]:
    """``(P_10, P_01)``: one photon in the CW / CCW mode."""
    d1, _, _, eta1, _ = _denominators(p)
    return 4 * p.xi**2 * abs(d1 / eta1) ** 2, 16 * p.xi**2 * abs(p.j_total / eta1) ** 2


def g2_closed_form(p: SystemParams) -> float:
    d1, d2, j2, eta1, eta2 = _denominators(p)
    return abs(eta1 * (d1 * d2 + 4 * j2 * p.chi / d2) / (d1**2 * eta2)) ** 2


@dataclass(frozen=True)
class ConditionSolution:
    points: list = field(default_factory=list)  # (r_nm, phi_um) pairs
    branches: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def geometries(self) -> list[TipGeometry]:
        return [TipGeometry(r, phi) for r, phi in self.points]


def decoupling_radius(tip: TipModel, j0: float) -> float:
    if j0 <= 0 or tip.a_t < j0:
        raise NoSolution(f"tip amplitude a_t={tip.a_t:g} cannot cancel J0={j0:g}")
    return tip.inv_2beta_t * math.log(tip.a_t / j0)


def decoupling_positions(p: SystemParams, tip: TipModel | None = None, k_opt: float | None = None, l_max: int = 1) -> ConditionSolution:
    """Tip positions with J_tip = -J0, i.e. vanishing total CW-CCW coupling.

    r* = (2 beta_t)^-1 ln(a_t / J0) and phi_l = ((2l+1) pi - theta - theta_t r*) / (2 k_opt)
    for l = 0..l_max; branches with phi < 0 are dropped.
    """
    tip = tip or p.tip
    k_opt = p.k_opt if k_opt is None else k_opt
    r = decoupling_radius(tip, p.j0)
    r_um = r * 1e-3
    sol = ConditionSolution()
    for branch in range(l_max + 1):
        phi = ((2 * branch + 1) * math.pi - tip.theta - tip.theta_t * r_um) / (2 * k_opt)
        if phi < 0:
            continue
        resid = abs(p.j0 + tip_coupling(tip, TipGeometry(r, phi), k_opt))
        sol.points.append((r, phi))
        sol.branches.append(branch)
        sol.residuals.append(resid)
    if not sol.points:
        raise NoSolution("no non-negative azimuthal branch in range")
    return sol


def with_decoupled_tip(p: SystemParams, branch: int = 0) -> SystemParams:
    sol = decoupling_positions(p, l_max=branch)
    r, phi = sol.points[sol.branches.index(branch)]
    return p.with_tip(r, phi)


def blockade_positions_weak(
    p: SystemParams,
    tip: TipModel | None = None,
    k_opt: float | None = None,
    r: float | None = None,
    phi_window: tuple[float, float] = (0.0, 0.5),
    scan_points: int = 1000,
) -> ConditionSolution:
    """Azimuthal positions where |J0 + J_tip| equals the total loss rate.

    Together with chi = gamma/2 and zero detuning this makes the two-photon
    amplitude vanish. The radius defaults to the decoupling radius; roots are
    bracketed on a uniform scan of ``phi_window`` and refined with Brent's
    method to 1e-12 um.
    """
    tip = tip or p.tip
    k_opt = p.k_opt if k_opt is None else k_opt
    if r is None:
        try:
            r = decoupling_radius(tip, p.j0)
        except NoSolution as exc:
            raise NoSolution(f"no default radius: {exc}") from exc
    gamma = p.gamma1 + tip_loss(tip, r)

    def f(phi):
        return abs(p.j0 + tip_coupling(tip, TipGeometry(r, phi), k_opt)) - gamma

    lo, hi = phi_window
    grid = np.linspace(max(lo, 0.0), hi, scan_points + 1)
    vals = np.array([f(x) for x in grid])
    sol = ConditionSolution()
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            root = a
        elif fa * fb < 0:
            root = brentq(f, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps)
        else:
            continue
        sol.points.append((r, float(root)))
        sol.branches.append(len(sol.branches))
        sol.residuals.append(abs(f(root)))
    if vals[-1] == 0.0:
        sol.points.append((r, float(grid[-1])))
        sol.branches.append(len(sol.branches))
        sol.residuals.append(0.0)
    if not sol.points:
        raise NoSolution("|J| = gamma is not reached in the requested phi window")
    return sol
