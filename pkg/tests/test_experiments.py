import json

import numpy as np
import pytest

from conftest import col
from tipblockade import analytic, config, experiments, liouville
from tipblockade.errors import IdealNotBlockading
from tipblockade.experiments import Axis, SweepSpec
from tipblockade.model import SystemParams

XI = 0.01


def small_spec(**kw):
    base = dict(
        axes=(Axis("delta_over_gamma1", -1.0, 1.0, 2), Axis("j0_over_gamma1", values=(0.0, 1.0))),
        fixed={"chi_over_gamma1": 2.0},
        engine="both",
        n_max=4,
    )
    base.update(kw)
    return SweepSpec(**base)


def test_row_major_order():
    res = experiments.run_sweep(small_spec())
    got = [(r["delta_over_gamma1"], r["j0_over_gamma1"]) for r in res.rows]
    assert got == [(-1.0, 0.0), (-1.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
    assert all(r["status"] == "ok" for r in res.rows)


def test_single_point_ideal_blockade():
    spec = SweepSpec((Axis("delta_over_gamma1", values=(0.0,)),), {"j0_over_gamma1": 0.0}, "both")
    (row,) = experiments.run_sweep(spec).rows
    assert row["g2_0"] == pytest.approx(0.009, abs=0.001)
    assert row["g2_0_analytic"] == pytest.approx(row["g2_0"], rel=0.02)
    assert sum(row[f"p{m}{n}"] for m, n in experiments.PROB_STATES) == pytest.approx(1.0, abs=1e-6)


def test_engine_both_columns_agree():
    res = experiments.run_sweep(small_spec(n_max=5))
    for row in res.rows:
        assert row["g2_0_analytic"] == pytest.approx(row["g2_0"], rel=0.02)
        assert row["p10_analytic"] == pytest.approx(row["p10"], rel=0.02)


def test_engines_select_columns():
    me = experiments.run_sweep(small_spec(engine="master-equation")).rows[0]
    an = experiments.run_sweep(small_spec(engine="analytic")).rows[0]
    geo = experiments.run_sweep(small_spec(engine="none")).rows[0]
    assert "g2_0" in me and "g2_0_analytic" not in me
    assert "g2_0_analytic" in an and "g2_0" not in an
    assert "abs_j_sq_over_gamma1_sq" in geo and "g2_0" not in geo and "g2_0_analytic" not in geo


def test_higher_orders():
    row = experiments.run_sweep(small_spec(orders=(2, 3, 4), n_max=5)).rows[0]
    assert row["g4_0"] < row["g3_0"] < row["g2_0"]


def test_failed_points_are_flagged_not_fatal():
    spec = SweepSpec((Axis("r_nm", values=(-5.0, 300.0)),), {"phi_um": 0.2}, "both", 4)
    rows = experiments.run_sweep(spec).rows
    assert rows[0]["status"] == "error:ConfigError"
    assert rows[1]["status"] == "ok"
    csv = experiments.SweepResult(rows, [spec]).to_csv()
    assert "error:ConfigError" in csv
    pole = SweepSpec((Axis("xi_over_gamma1", values=(0.0,)),), {}, "master-equation", 3)
    assert experiments.run_sweep(pole).rows[0]["status"] == "error:ZeroPhotonNumber"


def test_determinism_and_parallel_equivalence(tmp_path):
    spec = small_spec()
    a = experiments.run_sweep(spec).to_csv()
    b = experiments.run_sweep(spec).to_csv()
    c = experiments.run_sweep(spec, workers=2).to_csv()
    assert a == b == c
    assert "\r" not in a


def test_csv_floats_round_trip():
    res = experiments.run_sweep(small_spec())
    lines = res.to_csv().splitlines()
    header = lines[0].split(",")
    cell = lines[1].split(",")[header.index("g2_0")]
    assert float(cell) == res.rows[0]["g2_0"]


def test_sidecar(tmp_path, monkeypatch):
    res = experiments.run_sweep(small_spec())
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    csv_path, json_path = res.write(tmp_path, "s")
    side = json.loads(json_path.read_text())
    assert side["metadata"]["timestamp"] == "1970-01-01T00:00:00Z"
    assert side["metadata"]["rows"] == 4
    assert SweepSpec.from_dict(side["specs"][0]) == small_spec()
    assert "timestamp" not in res.sidecar(seedless=True)["metadata"]


def test_spec_validation():
    with pytest.raises(ValueError):
        Axis("nope", 0, 1, 3)
    with pytest.raises(ValueError):
        Axis("r_nm", 0, 1, 1)
    with pytest.raises(ValueError):
        SweepSpec((Axis("r_nm", 0, 1, 2), Axis("r_nm", 0, 1, 2)))
    with pytest.raises(ValueError):
        SweepSpec(engine="magic")
    assert Axis("chi_over_gamma", 0.1, 10.0, 3, "log").grid() == pytest.approx([0.1, 1.0, 10.0])


def test_spec_round_trip():
    spec = small_spec(orders=(2, 3), family="x", panel="p")
    assert SweepSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_efficiency_ratio_basics(operating_point):
    ideal = operating_point.ideal()
    assert experiments.efficiency_ratio(ideal, ideal) == 1.0
    flat = ideal.replace(chi=0.0)
    with pytest.raises(IdealNotBlockading):
        experiments.efficiency_ratio(flat, flat, engine="analytic")
    with pytest.raises(IdealNotBlockading):
        experiments.efficiency_ratio(flat.replace(delta=0.5), flat, engine="analytic")
    with pytest.raises(ValueError):
        experiments.efficiency_ratio(operating_point, ideal.replace(chi=1.0))


def test_min_over_detuning_refines():
    p = SystemParams(j0=0.0, chi=2.0)
    dense = np.linspace(-1.0, 1.0, 200001)
    brute = [analytic.g2_closed_form(p.replace(delta=d)) for d in dense]
    d_true = dense[int(np.argmin(brute))]
    grid = np.linspace(-1.0, 1.0, 7) + 0.05
    d_grid, g_grid = experiments.min_g2_over_detuning(p, grid, engine="analytic")
    d_ref, g_ref = experiments.min_g2_over_detuning(p, grid, engine="analytic", refine=True)
    assert g_ref <= g_grid
    assert g_ref == pytest.approx(min(brute), rel=1e-9)
    assert d_ref == pytest.approx(d_true, abs=2e-5)


# figure data sets -----------------------------------------------------------


def analytic_deviation_ok(rows):
    """Analytic vs master-equation g2 within 2%, or within 20 xi^2 absolute.

    The master equation carries an O(xi^2) absolute offset (~16 xi^2) that
    only matters where the closed form is small.
    """
    bad = []
    for r in rows:
        g, ga = r.get("g2_0"), r.get("g2_0_analytic")
        if g is None or ga is None or not (1e-4 <= g <= 10):
            continue
        if abs(g - ga) > max(0.02 * ga, 20 * XI**2):
            bad.append((r.get("phi_um"), r.get("r_nm"), r.get("chi_over_gamma"), g, ga))
    return bad


def literal_deviation_failures(rows):
    return [
        r
        for r in rows
        if r.get("g2_0") is not None and r.get("g2_0_analytic") is not None and 1e-4 <= r["g2_0"] <= 10
        and abs(r["g2_0"] - r["g2_0_analytic"]) > 0.02 * r["g2_0_analytic"]
    ]


def test_fig1_features(fig_rows):
    rows = fig_rows[1]
    assert len(rows) == 3 * 241
    by = {f: [r for r in rows if r["family"] == f] for f in ("ideal", "bare", "tip")}
    at0 = {f: next(r for r in rs if r["delta_over_gamma1"] == 0.0) for f, rs in by.items()}
    assert at0["ideal"]["g2_0"] == pytest.approx(0.009, abs=0.001)
    assert 0.010 <= at0["tip"]["g2_0"] <= 0.015
    assert at0["tip"]["g2_0"] > at0["ideal"]["g2_0"]
    assert at0["bare"]["g2_0"] > 1
    # bare cavity: mode splitting of 2|J|
    delta, n = col(by["bare"], "delta_over_gamma1"), col(by["bare"], "n_cw")
    peaks = [i for i in range(1, len(n) - 1) if n[i] > n[i - 1] and n[i] > n[i + 1]]
    assert len(peaks) == 2
    assert delta[peaks[1]] - delta[peaks[0]] == pytest.approx(2 * 1.8, abs=0.15)
    assert analytic_deviation_ok(rows) == []


def test_fig1_delay_curves(fig_runs):
    from conftest import load_rows

    rows = load_rows(fig_runs[1][0] / "fig1_tau.csv")
    tip = [r for r in rows if r["family"] == "tip"]
    assert tip[0]["tau_over_gamma1_inv"] == 0.0
    assert tip[0]["g2_tau"] == pytest.approx(0.01336, abs=1e-4)
    assert all(r["g2_tau"] > tip[0]["g2_tau"] for r in tip[1:])


def test_fig2_features(fig_rows):
    rows = [r for r in fig_rows[2] if r["panel"] == "a"]
    assert len(rows) == 4 * 141

    def g2(phi, chi):
        return next(r["g2_0"] for r in rows if abs(r["phi_um"] - phi) < 1e-9 and r["chi_over_gamma"] == chi)

    assert g2(0.27, 0.1) >= 0.9
    assert g2(0.27, 3.0) < 0.05
    curve = sorted((r for r in rows if r["chi_over_gamma"] == 0.5), key=lambda r: r["phi_um"])
    phi, g = col(curve, "phi_um"), col(curve, "g2_0")
    minima = [(phi[i], g[i]) for i in range(1, len(g) - 1) if g[i] < g[i - 1] and g[i] < g[i + 1]]
    # blockade minima near zero; the decoupling point (J = 0) adds a shallow one at g2 = 1/2
    deep = [x for x, v in minima if v < 0.01]
    assert deep == pytest.approx([0.21, 0.33], abs=0.01)
    shallow = [(x, v) for x, v in minima if v >= 0.01]
    assert len(shallow) == 1 and shallow[0][1] == pytest.approx(0.5, abs=0.01)
    assert analytic_deviation_ok(fig_rows[2]) == []


def test_fig2_photon_number_independent_of_kerr_absolute(fig_rows):
    rows = [r for r in fig_rows[2] if r["panel"] == "a"]
    for phi in {r["phi_um"] for r in rows}:
        n = [r["n_cw"] for r in rows if r["phi_um"] == phi]
        assert max(n) - min(n) < 1e-6


def test_photon_number_independent_of_kerr_relative_weak_drive():
    # the chi dependence of N_cw is an O(xi^2) correction; it vanishes as xi -> 0
    p0 = analytic.with_decoupled_tip(SystemParams(xi=1e-4))
    for phi in (0.21, 0.27, 0.33):
        n = [
            liouville.mean_photons(liouville.solve_point(config.resolve_params({"xi_over_gamma1": 1e-4, "r_nm": p0.geom.r, "phi_um": phi, "chi_over_gamma": c})))
            for c in (0.1, 0.5, 3.0, 5.3)
        ]
        assert (max(n) - min(n)) / max(n) < 1e-6


def test_fig2_photon_number_relative_spread_at_figure_drive(fig_rows):
    """Literal form of the figure invariant at xi = 0.01: relative N_cw spread < 1e-6.

    Expected to fail: the Kerr term shifts N_cw by ~1e-3 relative at this drive.
    """
    rows = [r for r in fig_rows[2] if r["panel"] == "a"]
    worst = 0.0
    for phi in {r["phi_um"] for r in rows}:
        n = [r["n_cw"] for r in rows if r["phi_um"] == phi]
        worst = max(worst, (max(n) - min(n)) / max(n))
    assert worst < 1e-6, f"max relative N_cw spread over chi = {worst:.3e}"


@pytest.mark.parametrize("which", [1, 2, 3, 4])
def test_figure_analytic_numeric_two_percent_literal(fig_rows, which):
    """Literal figure invariant: 2% relative wherever g2 in [1e-4, 10] at xi = 0.01.

    Near exact zeros of the two-photon amplitude the master-equation g2 keeps a
    floor of order 16 xi^2 that the weak-drive closed form does not have, so
    fig 2 is expected to fail here.
    """
    bad = literal_deviation_failures(fig_rows[which])
    assert bad == [], f"{len(bad)} rows exceed 2%, e.g. phi={bad[0].get('phi_um')} g2={bad[0]['g2_0']:.3e} analytic={bad[0]['g2_0_analytic']:.3e}"


def test_fig3_features(fig_rows):
    rows = fig_rows[3]
    jmap = [r for r in rows if r["panel"] == "b"]
    assert len(jmap) == 61 * 101
    best = min(jmap, key=lambda r: r["abs_j_sq_over_gamma1_sq"])
    assert best["r_nm"] == pytest.approx(354, abs=10) and best["phi_um"] in (0.26, 0.27, 0.82)

    phi0 = analytic.with_decoupled_tip(SystemParams()).geom.phi
    radial = sorted((r for r in rows if r["panel"] == "cd" and abs(r["phi_um"] - phi0) < 1e-12), key=lambda r: r["r_nm"])
    r_nm, p10, p01, g2 = (col(radial, k) for k in ("r_nm", "p10", "p01", "g2_0"))
    assert r_nm[np.argmax(p10)] == pytest.approx(354, abs=10)
    window = (r_nm > 200) & (r_nm < 600)
    assert r_nm[window][np.argmin(p01[window])] == pytest.approx(354, abs=10)
    assert np.all(g2[(r_nm > 0) & (r_nm < 200)] > 1)
    bare = analytic.g2_closed_form(SystemParams())
    far = g2[r_nm >= 800]
    assert np.all(np.abs(far - bare) / bare < 0.05)


def test_fig4_features(fig_rows):
    rows = fig_rows[4]
    amap = [r for r in rows if r["panel"] == "a"]
    assert len(amap) == 31 * 26
    rs = col(amap, "R")
    assert np.all((rs >= 0) & (rs <= 1 + experiments.R_TOLERANCE))
    best = amap[int(np.argmax(rs))]
    assert best["R"] == pytest.approx(0.997, abs=0.005)
    assert best["r_nm"] == pytest.approx(354, abs=20) and best["phi_um"] == pytest.approx(0.27, abs=0.02)

    tip = sorted((r for r in rows if r.get("family") == "tip"), key=lambda r: r["j0_over_gamma1"])
    none = sorted((r for r in rows if r.get("family") == "no-tip"), key=lambda r: r["j0_over_gamma1"])
    assert len(tip) == len(none) == 51
    assert np.all(col(tip, "R") > 0.99)
    r_none = col(none, "R")
    assert np.all(np.diff(r_none) <= 1e-12)
    j0 = col(none, "j0_over_gamma1")
    assert np.all(r_none[j0 >= 1.8] == 0.0)
