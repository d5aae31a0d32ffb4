"""Physical parameter laws of the tip-perturbed Kerr resonator.

Rates are dimensionless, measured in units of the bare cavity linewidth
gamma1 (gamma1 == 1). Lengths follow the figure axes of the experiment:
radial tip distance ``r`` in nm, azimuthal distance ``phi`` in um.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

from . import fock
from .errors import DimensionError

#: linewidth scale implied by J0 = 1.8 gamma1 ~ 0.4 MHz
GAMMA1_MHZ = 0.4 / 1.8


def mhz_to_gamma1(value_mhz: float, gamma1_mhz: float = GAMMA1_MHZ) -> float:
    return value_mhz / gamma1_mhz


def optical_wavenumber(lambda_nm: float = 1550.0, n0: float = 1.4) -> float:
    """k_opt = 2 pi n0 / lambda in rad/um."""
    return 2 * math.pi * n0 / (lambda_nm * 1e-3)


@dataclass(frozen=True)
class TipModel:
    """Exponential coupling and loss laws of the nanotip.

    Rate amplitudes are in units of gamma1; the defaults are the measured tip
    constants (a_t = 14.3 MHz, a_gamma = 2.43 MHz) converted with
    ``GAMMA1_MHZ``.
    """

    a_t: float = 14.3 / GAMMA1_MHZ
    inv_2beta_t: float = 99.0  # nm
    theta_t: float = 1.5 * math.pi  # rad/um
    theta: float = -0.5 * math.pi  # rad
    a_gamma: float = 2.43 / GAMMA1_MHZ
    inv_2beta_gamma: float = 92.0  # nm

    def __post_init__(self):
        if self.inv_2beta_t <= 0 or self.inv_2beta_gamma <= 0:
            raise ValueError("tip decay lengths must be positive")
        if self.a_t < 0 or self.a_gamma < 0:
            raise ValueError("tip rate amplitudes must be non-negative")

    @classmethod
    def from_mhz(cls, a_t_mhz=14.3, a_gamma_mhz=2.43, gamma1_mhz=GAMMA1_MHZ, **kwargs):
        return cls(a_t=a_t_mhz / gamma1_mhz, a_gamma=a_gamma_mhz / gamma1_mhz, **kwargs)


@dataclass(frozen=True)
class TipGeometry:
    r: float  # nm
    phi: float  # um

    def __post_init__(self):
        if self.r < 0 or self.phi < 0:
            raise ValueError(f"tip geometry must be non-negative, got r={self.r}, phi={self.phi}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Device constants in SI-friendly units (see field comments)."""

    lambda_nm: float = 1550.0
    n0: float = 1.4
    Q: float = 1e10
    V_eff_um3: float = 150.0
    chi3_over_eps_r2: float = 1.8e-17  # m^2/V^2
    P_in: float = 4e-15  # W
    # "MHz" read as 1e6 s^-1 of angular rate; multiply by 2*pi for the other reading
    gamma1_phys: float = GAMMA1_MHZ * 1e6  # rad/s

    def __post_init__(self):
        for name in ("lambda_nm", "n0", "Q", "V_eff_um3", "gamma1_phys"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.chi3_over_eps_r2 < 0 or self.P_in < 0:
            raise ValueError("chi3_over_eps_r2 and P_in must be non-negative")

    @property
    def omega(self) -> float:
        """Optical angular frequency 2 pi c / lambda (rad/s)."""
        return 2 * math.pi * constants.c / (self.lambda_nm * 1e-9)

    @property
    def k_opt(self) -> float:
        return optical_wavenumber(self.lambda_nm, self.n0)

    @property
    def gamma0(self) -> float:
        """Intrinsic loss omega0/Q (rad/s)."""
        return self.omega / self.Q

    @property
    def gamma_ex(self) -> float:
        """Waveguide coupling gamma1 - gamma0, clamped at zero (rad/s)."""
        return max(self.gamma1_phys - self.gamma0, 0.0)


def tip_coupling(model: TipModel, geom: TipGeometry, k_opt: float) -> complex:
    """J_tip = a_t exp(-2 beta_t r) exp(-i Theta), Theta = 2 k_opt phi + theta + theta_t r."""
    r_um = geom.r * 1e-3
    phase = 2 * k_opt * geom.phi + model.theta + model.theta_t * r_um
    return model.a_t * math.exp(-geom.r / model.inv_2beta_t) * complex(math.cos(phase), -math.sin(phase))


def tip_loss(model: TipModel, r: float) -> float:
    if r < 0:
        raise ValueError("r must be non-negative")
    return model.a_gamma * math.exp(-r / model.inv_2beta_gamma)


def kerr_strength(pc: PhysicalConstants) -> tuple[float, float]:
    """Kerr rate 3 hbar omega^2 chi3 / (4 eps0 eps_r^2 V_eff).

    Returns ``(chi_rad_per_s, chi_over_gamma1)``.
    """
    v_eff = pc.V_eff_um3 * 1e-18
    chi = 3 * constants.hbar * pc.omega**2 * pc.chi3_over_eps_r2 / (4 * constants.epsilon_0 * v_eff)
    return chi, chi / pc.gamma1_phys


def drive_amplitude(pc: PhysicalConstants, gamma_ex: float | None = None) -> tuple[float, float]:
    """Drive sqrt(gamma_ex P_in / (hbar omega_L)); returns ``(rad/s, units of gamma1)``."""
    if gamma_ex is None:
        gamma_ex = pc.gamma_ex
    if gamma_ex < 0:
        raise ValueError("gamma_ex must be non-negative")
    xi = math.sqrt(gamma_ex * pc.P_in / (constants.hbar * pc.omega))
    return xi, xi / pc.gamma1_phys


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless model parameters; ``geom=None`` means no tip."""

    delta: float = 0.0
    chi: float = 5.3
    xi: float = 0.01
    j0: float = 1.8
    gamma1: float = 1.0
    tip: TipModel = field(default_factory=TipModel)
    geom: TipGeometry | None = None
    k_opt: float = field(default_factory=optical_wavenumber)

    def __post_init__(self):
        if self.j0 < 0:
            raise ValueError("j0 must be real and non-negative")
        if self.gamma1 <= 0:
            raise ValueError("gamma1 must be positive")
        if self.chi < 0 or self.xi < 0:
            raise ValueError("chi and xi must be non-negative")

    @property
    def j_tip(self) -> complex:
        if self.geom is None:
            return 0j
        return tip_coupling(self.tip, self.geom, self.k_opt)

    @property
    def gamma_tip(self) -> float:
        if self.geom is None:
            return 0.0
        return tip_loss(self.tip, self.geom.r)

    @property
    def j_total(self) -> complex:
        return self.j0 + self.j_tip

    @property
    def gamma_total(self) -> float:
        return self.gamma1 + self.gamma_tip

    def with_tip(self, r: float, phi: float) -> "SystemParams":
        return replace(self, geom=TipGeometry(r, phi))

    def without_tip(self) -> "SystemParams":
        return replace(self, geom=None)

    def ideal(self) -> "SystemParams":
        """Same nonlinearity and drive in a cavity without backscattering or tip."""
        return replace(self, j0=0.0, geom=None)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def build_hamiltonian(basis: fock.TwoModeBasis, p: SystemParams) -> np.ndarray:
    """Rotating-frame Hamiltonian with detuning, CW-CCW coupling, Kerr terms and CW drive."""
    if basis.n_max < 1:
        raise DimensionError("basis too small")
    a1 = fock.annihilation(basis, "cw")
    a2 = fock.annihilation(basis, "ccw")
    a1d, a2d = a1.conj().T, a2.conj().T
    n1 = fock.number_op(basis, "cw")
    n2 = fock.number_op(basis, "ccw")
    j = p.j_total
    h = p.delta * (n1 + n2)
    h = h + j * (a1d @ a2) + np.conj(j) * (a2d @ a1)
    h = h + p.chi * (a1d @ a1d @ a1 @ a1 + a2d @ a2d @ a2 @ a2) + 2 * p.chi * (n1 @ n2)
    h = h + p.xi * (a1d + a1)
    return h
