import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexnpc.errors import EvanescentModeError
from hexnpc.qpm_geometry import (
    CURVE_CSV_HEADER,
    Branch,
    CrystalConfig,
    LatticeConfig,
    ModeCoordinate,
    PumpConfig,
    ScanSpec,
    _roots_1d,
    coupled_partners,
    full_mismatch_DD,
    mismatch_D,
    mismatch_D_array,
    phase_matching_curve,
    resonance_detuning,
    shared_modes,
    write_curve_csv,
)

OMEGA_WINDOW = (-6e13, 6e13)


def test_lattice_vectors(lattice):
    assert lattice.G_z == pytest.approx(2 * math.pi / 8.3e-6, rel=1e-12)
    assert lattice.G_x == pytest.approx(2 * math.pi / (math.sqrt(3) * 8.3e-6), rel=1e-12)
    assert lattice.d01 == pytest.approx(0.29 * lattice.d33, rel=1e-12)
    assert lattice.d33 == 17e-12
    with pytest.raises(ValueError):
        LatticeConfig(0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        PumpConfig(0.0, -1.0, 0.01)
    with pytest.raises(ValueError):
        PumpConfig(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        ModeCoordinate(0.0, 0.0, 0.0, role="loud")
    with pytest.raises(ValueError):
        ModeCoordinate(math.nan, 0.0, 0.0)
    assert PumpConfig(0.0, 500.0, 0.01).gain == pytest.approx(5.0)


def _toy_D(cr, q_p, qx, qy, W, sign):
    """Independent re-evaluation of the parametric-limit mismatch, toy model."""
    n, G = 2.2, cr.lattice
    c = 299792458.0
    ks = n * (cr.waves.omega_s + W) / c
    ki = n * (cr.waves.omega_i - W) / c
    kp = n * cr.waves.omega_p / c
    qix = q_p - qx + sign * G.G_x
    return (math.sqrt(ks**2 - qx**2 - qy**2) + math.sqrt(ki**2 - qix**2 - qy**2)
            - math.sqrt(kp**2 - q_p**2) + G.G_z)


@pytest.mark.parametrize("branch", list(Branch))
def test_mismatch_toy_model_matches_scratch_evaluation(toy_crystal, branch):
    G = toy_crystal.lattice
    q_p = -0.3 * G.G_x
    pump = PumpConfig(q_p, 500.0, 0.01)
    for qx, qy, W in [(0.0, 0.0, 0.0), (0.4 * G.G_x, 2e5, 3e12), (-G.G_x, -1e6, -2e13)]:
        got = mismatch_D(toy_crystal, pump, ModeCoordinate(qx, qy, W), branch)
        assert got == pytest.approx(_toy_D(toy_crystal, q_p, qx, qy, W, Branch(branch).sign),
                                    rel=1e-12, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(qp=st.floats(-1.2, 1.2), qy=st.floats(-3e5, 3e5), W=st.floats(-5e13, 5e13))
def test_shared_column_has_equal_branches(qp, qy, W):
    cr = CrystalConfig.hexnpc_default(lambda_s=815e-9)
    q_p = qp * cr.lattice.G_x
    pump = PumpConfig(q_p, 500.0, 0.01)
    w = ModeCoordinate(q_p, qy, W)
    assert mismatch_D(cr, pump, w, "G01") == mismatch_D(cr, pump, w, "G10")


def test_mirror_symmetry_about_untilted_pump(crystal, rng):
    G = crystal.lattice
    pump = PumpConfig(0.0, 500.0, 0.01)
    for _ in range(20):
        qx, qy, W = rng.uniform(-1.5, 1.5) * G.G_x, rng.uniform(-3e5, 3e5), rng.uniform(-5e13, 5e13)
        a = {b: mismatch_D(crystal, pump, ModeCoordinate(qx, qy, W), b) for b in Branch}
        m = {b: mismatch_D(crystal, pump, ModeCoordinate(-qx, qy, W), b) for b in Branch}
        assert a[Branch.G01] == pytest.approx(m[Branch.G10], rel=1e-12, abs=1e-7)
        assert a[Branch.G10] == pytest.approx(m[Branch.G01], rel=1e-12, abs=1e-7)


def test_full_mismatch_reduces_to_parametric_limit(crystal, rng):
    G = crystal.lattice
    for q_p in (0.0, -0.3 * G.G_x, -G.G_x):
        pump = PumpConfig(q_p, 500.0, 0.01)
        wp = ModeCoordinate(q_p, 0.0, 0.0, "pump")
        for _ in range(5):
            ws = ModeCoordinate(rng.uniform(-1, 1) * G.G_x, rng.uniform(-2e5, 2e5),
                                rng.uniform(-4e13, 4e13))
            for b in Branch:
                assert full_mismatch_DD(crystal, ws, wp, b) == pytest.approx(
                    mismatch_D(crystal, pump, ws, b), rel=1e-13, abs=1e-8)


def test_full_mismatch_relabeling(crystal, rng):
    """A process seen from its idler side carries the same value."""
    G = crystal.lattice
    for _ in range(20):
        wp = ModeCoordinate(rng.uniform(-1, 1) * G.G_x, rng.uniform(-1e4, 1e4),
                            rng.uniform(-1e11, 1e11), "pump")
        ws = ModeCoordinate(rng.uniform(-1, 1) * G.G_x, rng.uniform(-2e5, 2e5),
                            rng.uniform(-4e13, 4e13))
        for b in Branch:
            wi = ModeCoordinate(wp.q_x - ws.q_x + b.sign * G.G_x, wp.q_y - ws.q_y,
                                wp.Omega - ws.Omega, "idler")
            assert full_mismatch_DD(crystal, wi, wp, b) == pytest.approx(
                full_mismatch_DD(crystal, ws, wp, b), rel=1e-12, abs=1e-7)


def test_full_mismatch_toy_collinear_closed_form(toy_crystal):
    # degenerate collinear signal, on-axis pump: the idler sees only the
    # lattice tilt, so DD = k_s + sqrt(k_i^2 - G_x^2) - k_p + G_z
    G = toy_crystal.lattice
    c = 299792458.0
    k = 2.2 * toy_crystal.waves.omega_s / c
    kp = 2.2 * toy_crystal.waves.omega_p / c
    ws = ModeCoordinate(0.0, 0.0, 0.0)
    wp = ModeCoordinate(0.0, 0.0, 0.0, "pump")
    expected = k + math.sqrt(k * k - G.G_x**2) - kp + G.G_z
    for b in Branch:
        assert full_mismatch_DD(toy_crystal, ws, wp, b) == pytest.approx(expected, rel=1e-12)


def test_evanescent_constituent_raises(crystal):
    pump = PumpConfig(0.0, 500.0, 0.01)
    with pytest.raises(EvanescentModeError):
        mismatch_D(crystal, pump, ModeCoordinate(1e8, 0.0, 0.0), "G01")
    D, ok = mismatch_D_array(crystal, 0.0, np.array([0.0, 1e8]), 0.0, 0.0, "G01")
    assert ok.tolist() == [True, False] and np.isnan(D[1])


def test_resonance_detuning(lattice):
    G = lattice.G_x
    assert resonance_detuning(PumpConfig(-G, 1.0, 0.01), lattice) == 0.0
    assert resonance_detuning(PumpConfig(G, 1.0, 0.01), lattice) == 0.0
    assert resonance_detuning(PumpConfig(0.0, 1.0, 0.01), lattice) == pytest.approx(1.0)
    assert resonance_detuning(PumpConfig(-0.3 * G, 1.0, 0.01), lattice) == pytest.approx(0.7)


def test_toy_curve_matches_closed_form(toy_crystal):
    G = toy_crystal.lattice
    c = 299792458.0
    pump = PumpConfig(0.0, 500.0, 0.01)
    kp = 2.2 * toy_crystal.waves.omega_p / c
    a = kp - G.G_z
    scan = ScanSpec("q_x", np.linspace(-0.5, 0.5, 11) * G.G_x, "q_y", (0.0, 8e6))
    for branch in Branch:
        pts = phase_matching_curve(toy_crystal, pump, branch, scan)
        assert len(pts) == 11
        for p in pts:
            A = (2.2 * toy_crystal.waves.omega_s / c) ** 2 - p.q_x**2
            B = (2.2 * toy_crystal.waves.omega_i / c) ** 2 - (-p.q_x + branch.sign * G.G_x) ** 2
            y = B - ((a * a + B - A) / (2 * a)) ** 2
            assert p.q_y == pytest.approx(math.sqrt(y), rel=1e-9)
            assert p.residual < 1e-6 * G.G_z


@pytest.fixture(scope="module")
def fig2():
    """Both branches over the (q_x, Omega) plane at q_y = 0 for a tilted pump."""
    cr = CrystalConfig.hexnpc_default()
    G = cr.lattice
    pump = PumpConfig(-0.3 * G.G_x, 500.0, 0.01)
    qx = np.linspace(-1.5, 1.5, 31) * G.G_x
    qx = np.sort(np.append(qx, pump.q_p))
    scan = ScanSpec("q_x", qx, "Omega", OMEGA_WINDOW)
    return cr, pump, scan, {b: phase_matching_curve(cr, pump, b, scan) for b in Branch}


def test_tilted_pump_curves_cross_at_shared_column(fig2):
    cr, pump, scan, curves = fig2
    tol = 1e-6 * cr.lattice.G_z
    for pts in curves.values():
        assert len(pts) > 10
        assert all(p.residual < tol for p in pts)
        assert all(abs(mismatch_D(cr, pump, p.mode(), p.branch)) < tol for p in pts)
    at = {b: sorted(p.Omega for p in curves[b] if p.q_x == pump.q_p) for b in Branch}
    assert at[Branch.G01] and at[Branch.G01] == pytest.approx(at[Branch.G10], rel=1e-9)
    # away from the shared column the two branches are distinct curves
    off = [q for q in scan.scan_values if abs(q - pump.q_p) > 0.2 * cr.lattice.G_x]
    for q in off[:5]:
        r1 = [p.Omega for p in curves[Branch.G01] if p.q_x == q]
        r2 = [p.Omega for p in curves[Branch.G10] if p.q_x == q]
        if r1 and r2:
            assert min(abs(a - b) for a in r1 for b in r2) > 1e11


def test_scan_order_does_not_matter(crystal):
    G = crystal.lattice
    pump = PumpConfig(-0.3 * G.G_x, 500.0, 0.01)
    vals = np.linspace(-1, 1, 9) * G.G_x
    fwd = phase_matching_curve(crystal, pump, "G01", ScanSpec("q_x", vals, "Omega", OMEGA_WINDOW))
    rev = phase_matching_curve(crystal, pump, "G01",
                               ScanSpec("q_x", vals[::-1], "Omega", OMEGA_WINDOW))
    assert fwd == rev


def test_solution_set_mirror_in_qy(crystal):
    G = crystal.lattice
    pump = PumpConfig(0.0, 500.0, 0.01)
    qy = np.linspace(-2e5, 2e5, 9)
    for b in Branch:
        pts = phase_matching_curve(crystal, pump, b, ScanSpec("q_y", qy, "Omega", OMEGA_WINDOW,
                                                              fixed_value=0.2 * G.G_x))
        key = {(round(p.q_y, 6), round(p.Omega / 1e6)) for p in pts}
        mirrored = {(round(-p.q_y, 6), round(p.Omega / 1e6)) for p in pts}
        assert pts and key == mirrored


def test_no_root_gives_empty_entry(crystal):
    pump = PumpConfig(0.0, 500.0, 0.01)
    scan = ScanSpec("q_x", [0.0], "Omega", (1e10, 2e10))
    assert phase_matching_curve(crystal, pump, "G01", scan) == []


def test_tangential_root_reported_once():
    xs = np.linspace(-1, 1, 201)
    roots = _roots_1d(lambda x: (np.asarray(x) - 0.3123) ** 2, xs, 1e-8, 1e-9)
    assert len(roots) == 1
    x, r, tang = roots[0]
    assert tang and abs(x - 0.3123) < 1e-4
    simple = _roots_1d(lambda x: np.asarray(x) - 0.3123, xs, 1e-8, 1e-9)
    assert len(simple) == 1 and not simple[0][2]


def test_scan_spec_validation():
    with pytest.raises(ValueError):
        ScanSpec("q_x", [0.0], "q_x", (0, 1))
    with pytest.raises(ValueError):
        ScanSpec("q_x", [0.0], "Omega", (1, 0))
    with pytest.raises(ValueError):
        ScanSpec("k", [0.0], "Omega", (0, 1))


@pytest.mark.parametrize("role", ["signal", "idler"])
def test_shared_modes(crystal, role):
    G = crystal.lattice
    pump = PumpConfig(0.0, 500.0, 0.01)
    tol = 1e-6 * G.G_z
    scan = ScanSpec("q_y", np.linspace(-1e5, 1e5, 5), "Omega", OMEGA_WINDOW, role=role)
    pts = shared_modes(crystal, pump, scan)
    assert len(pts) >= 5
    for p in pts:
        assert p.q_x == pump.q_p and p.role == role
        d1 = mismatch_D(crystal, pump, p.mode(), "G01")
        d2 = mismatch_D(crystal, pump, p.mode(), "G10")
        assert abs(d1) < tol and abs(d1 - d2) <= 2 * tol
        i1, i2 = coupled_partners(p.mode(), pump, G)
        other = "idler" if role == "signal" else "signal"
        assert (i1.q_x, i2.q_x) == (pytest.approx(-G.G_x), pytest.approx(G.G_x))
        assert i1.q_y == -p.q_y and i1.Omega == -p.Omega and i1.role == other
    with pytest.raises(ValueError):
        shared_modes(crystal, pump, ScanSpec("q_x", [0.0], "Omega", OMEGA_WINDOW))


def test_superresonance_closes_the_four_mode_system(resonant_crystal):
    G = resonant_crystal.lattice
    pump = PumpConfig(-G.G_x, 500.0, 0.01)
    tol = 1e-6 * G.G_z
    sig = shared_modes(resonant_crystal, pump, ScanSpec("q_y", [0.0, 5e4], "Omega", OMEGA_WINDOW))
    assert sig
    for p in sig:
        # the shared signal line sits on the column of coupled modes at -G_x
        assert p.q_x == -G.G_x
        b_i, c_i = coupled_partners(p.mode(), pump, G)
        assert b_i.q_x == pytest.approx(-G.G_x) and c_i.q_x == pytest.approx(G.G_x)
        # its G01 partner is itself a shared, phase-matched idler
        for br in Branch:
            assert abs(mismatch_D(resonant_crystal, pump, b_i, br)) < 2 * tol


def test_curve_csv(tmp_path, crystal):
    pump = PumpConfig(0.0, 500.0, 0.01)
    pts = phase_matching_curve(crystal, pump, "G10",
                               ScanSpec("q_x", [0.0, 1e5], "Omega", OMEGA_WINDOW))
    path = write_curve_csv(pts, tmp_path / "c.csv", crystal)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema: qpm_curve/1"
    rows = list(csv.reader(lines[1:]))
    assert tuple(rows[0]) == CURVE_CSV_HEADER
    assert CURVE_CSV_HEADER[:6] == ("Omega_rad_s", "lambda_nm", "q_y_rad_m", "branch", "residual",
                                    "tangency_flag")
    assert len(rows) == len(pts) + 1
    assert float(rows[1][0]) == pts[0].Omega and rows[1][3] == "G10"


def test_default_carrier_is_midpoint(crystal):
    # both shared modes sit at the same offset from their own carriers, so the
    # shared signal and the signals coupled to the shared idler straddle the carrier
    G = crystal.lattice
    pump = PumpConfig(0.0, 500.0, 0.01)
    om = {}
    for role in ("signal", "idler"):
        pts = shared_modes(crystal, pump, ScanSpec("q_y", [0.0], "Omega", OMEGA_WINDOW, role=role))
        om[role] = min((p.Omega for p in pts), key=abs)
    assert om["signal"] == pytest.approx(om["idler"], rel=1e-5)
    lam_s = 2 * math.pi * 299792458.0 / crystal.carrier("signal")
    assert 780e-9 < lam_s < 850e-9
    assert G.G_x > 0
