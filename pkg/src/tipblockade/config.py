"""Flat, unit-suffixed parameter keys and the JSON configuration document.

The same key names are used by the JSON config file, ``--set key=value``
overrides, sweep axes and CSV columns. A config document looks like::

    {
      "system": {"chi_over_gamma1": 5.3, "j0_over_gamma1": 1.8, "tip": "decoupled"},
      "physical": {"lambda_nm": 1550.0, "Q": 1e10}
    }

Missing keys take the default (experimental) values; unknown keys raise
``ConfigError``.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .errors import ConfigError, NoSolution
from .model import PhysicalConstants, SystemParams, TipGeometry, TipModel, optical_wavenumber

TIP_MODES = ("none", "placed", "decoupled")

# key -> (kind, default, unit / help)
SYSTEM_KEYS = {
    "delta_over_gamma1": (float, 0.0, "detuning Delta / gamma1"),
    "chi_over_gamma1": (float, 5.3, "Kerr strength chi / gamma1"),
    "chi_over_gamma": (float, None, "Kerr strength relative to the total loss gamma1 + gamma_tip (alternative to chi_over_gamma1)"),
    "xi_over_gamma1": (float, 0.01, "drive amplitude xi / gamma1"),
    "j0_over_gamma1": (float, 1.8, "intrinsic backscattering J0 / gamma1 (real, >= 0)"),
    "tip": (str, None, "tip placement: none | placed | decoupled (default: placed iff r_nm and phi_um given)"),
    "tip_branch": (int, 0, "azimuthal branch l used when tip=decoupled"),
    "r_nm": (float, None, "tip radial distance (nm)"),
    "phi_um": (float, None, "tip azimuthal distance (um)"),
    "a_t_over_gamma1": (float, TipModel.a_t, "tip coupling amplitude a_t / gamma1"),
    "inv_2beta_t_nm": (float, TipModel.inv_2beta_t, "coupling decay length (2 beta_t)^-1 (nm)"),
    "theta_t_rad_per_um": (float, TipModel.theta_t, "radial phase gradient theta_t (rad/um)"),
    "theta_rad": (float, TipModel.theta, "initial phase theta (rad)"),
    "a_gamma_over_gamma1": (float, TipModel.a_gamma, "tip loss amplitude a_gamma / gamma1"),
    "inv_2beta_gamma_nm": (float, TipModel.inv_2beta_gamma, "loss decay length (2 beta_gamma)^-1 (nm)"),
    "lambda_nm": (float, 1550.0, "vacuum wavelength (nm), sets k_opt"),
    "n0": (float, 1.4, "refractive index, sets k_opt"),
}

PHYSICAL_KEYS = {
    "lambda_nm": "lambda_nm",
    "n0": "n0",
    "Q": "Q",
    "V_eff_um3": "V_eff_um3",
    "chi3_over_eps_r2_m2_per_V2": "chi3_over_eps_r2",
    "P_in_W": "P_in",
    "gamma1_phys_rad_per_s": "gamma1_phys",
}

_TIP_FIELDS = {
    "a_t_over_gamma1": "a_t",
    "inv_2beta_t_nm": "inv_2beta_t",
    "theta_t_rad_per_um": "theta_t",
    "theta_rad": "theta",
    "a_gamma_over_gamma1": "a_gamma",
    "inv_2beta_gamma_nm": "inv_2beta_gamma",
}


def coerce(key: str, value):
    """Convert a raw (possibly string) value for ``key``; raises ConfigError."""
    if key not in SYSTEM_KEYS:
        raise ConfigError(f"unknown parameter {key!r}")
    kind = SYSTEM_KEYS[key][0]
    if value is None:
        return None
    try:
        if kind is str:
            value = str(value)
            if key == "tip" and value not in TIP_MODES:
                raise ValueError(f"expected one of {TIP_MODES}")
            return value
        if kind is int:
            return int(value)
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


def validate_flat(flat: dict) -> dict:
    return {k: coerce(k, v) for k, v in flat.items()}


def default_flat() -> dict:
    return {k: spec[1] for k, spec in SYSTEM_KEYS.items() if spec[1] is not None}


def resolve_params(flat: dict | None = None) -> SystemParams:
    """Build ``SystemParams`` from flat keys layered over the defaults."""
    given = validate_flat(flat or {})
    values = default_flat()
    values.update({k: v for k, v in given.items() if v is not None})

    tip_model = TipModel(**{attr: values[key] for key, attr in _TIP_FIELDS.items()})
    k_opt = optical_wavenumber(values["lambda_nm"], values["n0"])

    mode = values.get("tip")
    has_r, has_phi = "r_nm" in values, "phi_um" in values
    if mode is None:
        if has_r != has_phi:
            raise ConfigError("tip placement needs both r_nm and phi_um")
        mode = "placed" if has_r else "none"

    try:
        base = SystemParams(
            delta=values["delta_over_gamma1"],
            chi=0.0,
            xi=values["xi_over_gamma1"],
            j0=values["j0_over_gamma1"],
            tip=tip_model,
            k_opt=k_opt,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if mode == "placed":
        if not (has_r and has_phi):
            raise ConfigError("tip=placed needs r_nm and phi_um")
        try:
            geom = TipGeometry(values["r_nm"], values["phi_um"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    elif mode == "decoupled":
        if has_r or has_phi:
            raise ConfigError("tip=decoupled computes r_nm/phi_um; do not set them")
        if base.j0 == 0:
            geom = None  # nothing to cancel; the tip is withdrawn
        else:
            from .analytic import decoupling_positions

            branch = values["tip_branch"]
            sol = decoupling_positions(base, l_max=branch)
            if branch not in sol.branches:
                raise NoSolution(f"decoupling branch {branch} has negative phi")
            geom = TipGeometry(*sol.points[sol.branches.index(branch)])
    else:
        geom = None
    base = base.replace(geom=geom)

    if "chi_over_gamma" in values:
        if given.get("chi_over_gamma1") is not None:
            raise ConfigError("set only one of chi_over_gamma1 and chi_over_gamma")
        chi = values["chi_over_gamma"] * base.gamma_total
    else:
        chi = values["chi_over_gamma1"]
    try:
        return base.replace(chi=chi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def params_to_flat(p: SystemParams, lambda_nm: float | None = None, n0: float | None = None) -> dict:
    """Flat form of ``p``; optics keys are included only when supplied."""
    out = {
        "delta_over_gamma1": p.delta,
        "chi_over_gamma1": p.chi,
        "xi_over_gamma1": p.xi,
        "j0_over_gamma1": p.j0,
    }
    for key, attr in _TIP_FIELDS.items():
        out[key] = getattr(p.tip, attr)
    if p.geom is None:
        out["tip"] = "none"
    else:
        out.update(tip="placed", r_nm=p.geom.r, phi_um=p.geom.phi)
    if lambda_nm is not None:
        out["lambda_nm"] = lambda_nm
    if n0 is not None:
        out["n0"] = n0
    return out


def physical_from_dict(d: dict | None) -> PhysicalConstants:
    d = d or {}
    unknown = set(d) - set(PHYSICAL_KEYS)
    if unknown:
        raise ConfigError(f"unknown physical constant(s): {sorted(unknown)}")
    try:
        return PhysicalConstants(**{PHYSICAL_KEYS[k]: float(v) for k, v in d.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def physical_to_dict(pc: PhysicalConstants) -> dict:
    raw = asdict(pc)
    return {key: raw[attr] for key, attr in PHYSICAL_KEYS.items()}


def default_document() -> dict:
    return {
        "system": default_flat(),
        "physical": physical_to_dict(PhysicalConstants()),
    }


def load_document(path) -> dict:
    """Read and validate a JSON config; returns ``{"system": flat, "physical": dict}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - {"system", "physical"}
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    system = validate_flat(doc.get("system") or {})
    physical_from_dict(doc.get("physical"))
    return {"system": system, "physical": dict(doc.get("physical") or {})}


def dump_document(system_flat: dict, pc: PhysicalConstants | None = None) -> str:
    doc = {"system": system_flat, "physical": physical_to_dict(pc or PhysicalConstants())}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parameter_table() -> list[tuple[str, str, str]]:
    """``(key, default, description)`` rows for help text and docs."""
    rows = []
    for key, (_, default, text) in SYSTEM_KEYS.items():
        rows.append((key, "-" if default is None else repr(default), text))
    return rows

