"""Single-photon blockade in a Kerr microresonator with backscattering and a nanotip."""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    blockade_positions_weak,
    c20_closed_form,
    decoupling_positions,
    effective_amplitudes,
    g2_closed_form,
    with_decoupled_tip,
)
from .fock import TwoModeBasis, annihilation, number_op  # noqa: E402
from .liouville import build_liouvillian, correlations, g2_tau, gn_zero, steady_state  # noqa: E402
from .model import PhysicalConstants, SystemParams, TipGeometry, TipModel  # noqa: E402

__all__ = [
    "PhysicalConstants",
    "SystemParams",
    "TipGeometry",
    "TipModel",
    "TwoModeBasis",
    "annihilation",
    "blockade_positions_weak",
    "build_liouvillian",
    "c20_closed_form",
    "correlations",
    "decoupling_positions",
    "effective_amplitudes",
    "g2_closed_form",
    "g2_tau",
    "gn_zero",
    "number_op",
    "steady_state",
    "with_decoupled_tip",
]
