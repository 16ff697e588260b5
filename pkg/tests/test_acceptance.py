"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest -v -s tests/test_acceptance.py`` to see one PASS/FAIL line
per criterion.
"""

import time
from fractions import Fraction

import numpy as np

import beclab.hierarchy as hier
import beclab.manybody as mb
from beclab.hermite import HermiteBasis, quartic_norm
from beclab.nls2d import (
    Field2D,
    Grid2D,
    NLS2DConfig,
    evolve_2d,
    free_gaussian_exact,
    step_2d,
)
from beclab.nls3d import dimensional_reduction_experiment
from beclab.potential import GaussianProfile, ScaledPotential, coupling_constant
from beclab.scaling import region_table, v_of_beta

PI = np.pi


def _report(number, name, ok, detail, started):
    line = f"ACCEPTANCE {number:2d} [{name}] {'PASS' if ok else 'FAIL'} ({time.time() - started:.1f}s): {detail}"
    print(line)
    assert ok, line


def test_criterion_1_coupling_constant():
    t0 = time.time()
    basis = HermiteBasis()
    q = quartic_norm(basis)
    err_q = abs(q - (2 * PI) ** -0.5)
    pot = ScaledPotential(GaussianProfile(), beta=0.2, N=2, omega=4.0)
    c = coupling_constant(pot, basis)
    err_c = abs(c - 2 * PI)
    ok = err_q <= 1e-10 and err_c <= 1e-8 and time.time() - t0 < 1.0
    _report(1, "coupling-constant", ok, f"quartic err {err_q:.2e}, coupling err {err_c:.2e}", t0)


def test_criterion_2_v_of_beta_ledger():
    t0 = time.time()
    exact = v_of_beta(Fraction(1, 3))
    rows = region_table(np.linspace(0.004, 0.396, 1000))
    row_ok = all(
        row["v"]
        == max(
            (1 - row["beta"]) / (2 * row["beta"]),
            (1.25 * row["beta"] - 1 / 12) / (1 - 2.5 * row["beta"]),
            (0.5 * row["beta"] + 5 / 6) / (1 - row["beta"]),
            (row["beta"] + 1 / 3) / (1 - 2 * row["beta"]),
        )
        for row in rows
    )
    ok = exact == 2 and isinstance(exact, Fraction) and row_ok and time.time() - t0 < 1.0
    _report(2, "v-of-beta", ok, f"v(1/3) = {exact}, 1000-row table row-for-row: {row_ok}", t0)


def test_criterion_3_nls2d_solver():
    t0 = time.time()
    grid = Grid2D()
    X, Y = grid.meshgrid()

    state = Field2D(grid, np.exp(-(X**2 + Y**2) / 2).astype(complex))
    state = evolve_2d(state, NLS2DConfig(coupling=0.0, dt=1e-3), 100)
    free_err = np.sqrt(
        np.sum(np.abs(state.values - free_gaussian_exact(grid, 1.0, 0.1)) ** 2) * grid.cell_area
    )

    kx = 2 * PI / (2 * grid.L) * 3
    A, c = 0.5, 2 * PI
    pw = Field2D(grid, A * np.exp(1j * kx * X))
    pw = evolve_2d(pw, NLS2DConfig(coupling=c, dt=1e-3), 1000)
    exact = A * np.exp(1j * (kx * X - (kx**2 + c * A**2) * pw.time))
    phase_err = float(np.max(np.abs(np.angle(pw.values / exact))))

    g = np.exp(-(X**2 + Y**2) / 2).astype(complex)
    g /= np.sqrt(np.sum(np.abs(g) ** 2) * grid.cell_area)
    st8 = Field2D(grid, g.copy())
    m0 = st8.mass()
    st8 = evolve_2d(st8, NLS2DConfig(coupling=c, dt=1e-3), 1000)
    mass_drift = abs(st8.mass() - m0)

    ref = evolve_2d(Field2D(grid, g.copy()), NLS2DConfig(coupling=c, dt=1e-3 / 8), 800)
    errs = []
    for dt, steps in ((1e-3, 100), (5e-4, 200)):
        out = evolve_2d(Field2D(grid, g.copy()), NLS2DConfig(coupling=c, dt=dt), steps)
        errs.append(np.sqrt(np.sum(np.abs(out.values - ref.values) ** 2) * grid.cell_area))
    ratio = errs[0] / errs[1]

    ok = (
        free_err <= 1e-8
        and phase_err <= 1e-6
        and mass_drift <= 1e-10
        and 4 * 0.8 <= ratio <= 4 * 1.2
        and time.time() - t0 < 30.0
    )
    _report(
        3,
        "nls2d-solver",
        ok,
        f"free {free_err:.2e}, phase {phase_err:.2e}, mass {mass_drift:.2e}, order ratio {ratio:.2f}",
        t0,
    )


def test_criterion_4_dimensional_reduction():
    t0 = time.time()
    grid = Grid2D()
    basis = HermiteBasis(mode_count=8)
    prof = mb.ground_profile(grid) / np.sqrt(grid.cell_area)
    res = dimensional_reduction_experiment(
        (4.0, 16.0, 64.0), 0.5, prof, coupling=2 * PI, grid=grid, basis=basis
    )
    d = [r["l2_distance"] for r in res["rows"]]
    ratios = [a / b for a, b in zip(d, d[1:])]
    free = dimensional_reduction_experiment(
        (4.0, 16.0, 64.0), 0.5, prof, coupling=0.0, grid=grid, basis=basis
    )
    free_ok = all(r["l2_distance"] <= 1e-7 for r in free["rows"])
    ok = (
        res["status"] == "PASS"
        and all(b < a for a, b in zip(d, d[1:]))
        and all(r >= 2 for r in ratios)
        and free_ok
        and time.time() - t0 < 600.0
    )
    _report(
        4,
        "dimensional-reduction",
        ok,
        f"distances {['%.3e' % x for x in d]}, ratios {['%.2f' % r for r in ratios]}, c=0 ok {free_ok}",
        t0,
    )


def _pair(omega=4.0, saturating=False, n=8, modes=4):
    grid = Grid2D(n=n, L=4.0)
    basis = HermiteBasis(mode_count=modes)
    pot = ScaledPotential(GaussianProfile(), beta=0.2, N=2, omega=omega)
    op = mb.ManyBodyOperator(grid, basis, 2, omega, pot)
    if saturating:
        state = mb.saturating_state(grid, basis, 2, omega)
    else:
        zc = np.zeros(modes, complex)
        zc[0] = 1.0
        state = mb.ManyBodyState.product(grid, basis, 2, mb.ground_profile(grid), zc)
    return grid, basis, op, state


def test_criterion_5_manybody_invariants(micro, rng):
    t0 = time.time()
    grid, basis, op, state = _pair()
    e0 = mb.excess_energy_per_particle(state, op)["per_particle"]
    evolved = mb.evolve(state, op, 1e-3, 1000)
    norm_err = abs(evolved.norm() - 1)
    sym = evolved.symmetry_defect()
    energy_drift = abs(mb.excess_energy_per_particle(evolved, op)["per_particle"] - e0)
    g1 = mb.marginal(evolved, 1)
    trace_err = abs(g1.trace() - 1)
    psd_floor = g1.min_eigenvalue()

    mgrid, mbasis = micro
    d = mgrid.n**2 * mbasis.mode_count
    raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    raw = (raw + raw.T) / np.linalg.norm(raw + raw.T)
    ms = mb.ManyBodyState(mgrid, mbasis, 2, raw.reshape((mgrid.n, mgrid.n, mbasis.mode_count) * 2))
    lib = mb.marginal(ms, 1).dense()
    brute = np.zeros((d, d), complex)
    for a in range(d):
        for ap in range(d):
            brute[a, ap] = sum(raw[a, b] * np.conj(raw[ap, b]) for b in range(d))
    oracle_err = float(np.max(np.abs(lib - brute)))

    ok = (
        norm_err <= 1e-10
        and sym <= 1e-12
        and energy_drift <= 1e-5
        and trace_err <= 1e-9
        and psd_floor >= -1e-10
        and oracle_err <= 1e-10
        and time.time() - t0 < 600.0
    )
    _report(
        5,
        "manybody-invariants",
        ok,
        f"norm {norm_err:.1e}, sym {sym:.1e}, energy {energy_drift:.1e}, "
        f"trace {trace_err:.1e}, psd {psd_floor:.1e}, oracle {oracle_err:.1e}",
        t0,
    )


def test_criterion_6_projection_decay():
    t0 = time.time()
    omegas = (4.0, 16.0, 64.0)
    diag, majorant = [], []
    for omega in omegas:
        _, _, op, state = _pair(omega=omega, saturating=True)
        evolved = mb.evolve(state, op, 1e-3, 250)
        diag.append(abs(mb.projection_statistics(evolved, (1, 0), (1, 0))))
        majorant.append(
            mb.projection_norm(evolved, (1, 0)) * mb.projection_norm(evolved, (0, 0))
        )
    logw = np.log(omegas)
    slope_2 = float(np.polyfit(logw, np.log(diag), 1)[0])  # |alpha| + |beta| = 2
    slope_1 = float(np.polyfit(logw, np.log(majorant), 1)[0])  # |alpha| + |beta| = 1
    ok = abs(slope_2 - (-1.0)) <= 0.15 and abs(slope_1 - (-0.5)) <= 0.15 and time.time() - t0 < 1200.0
    _report(
        6,
        "projection-decay",
        ok,
        f"fit |a|+|b|=2: {slope_2:.3f} (target -1), |a|+|b|=1: {slope_1:.3f} (target -0.5)",
        t0,
    )


def test_criterion_7_sobolev_sharpness():
    t0 = time.time()
    res = mb.sobolev_loss_sharpness()
    devs = {k: abs(res["slopes"][k] - res["expected"][k]) for k in res["slopes"]}
    ok = all(v <= 0.05 for v in devs.values()) and res["sf_variation"] <= 0.01 and time.time() - t0 < 60.0
    _report(
        7,
        "sobolev-loss-sharpness",
        ok,
        f"slope deviations {({k: round(v, 4) for k, v in devs.items()})}, sf var {res['sf_variation']:.2e}",
        t0,
    )


def test_criterion_8_hierarchy_residuals():
    t0 = time.time()

    def top_level(n, dt):
        grid, basis, op, state = _pair(n=n)
        steps = round(0.05 / dt)
        s_minus = mb.evolve(state, op, dt, steps - 1)
        s_center = mb.evolve(s_minus, op, dt, 1)
        s_plus = mb.evolve(s_center, op, dt, 1)
        tri = [mb.marginal(s, 2) for s in (s_minus, s_center, s_plus)]
        panel = hier.standard_panel(grid, basis, 2)
        return hier.bbgky_residual(tri[0], tri[1], tri[2], None, op, panel, dt)["max_residual"]

    bbgky_ratio = top_level(8, 1e-3) / top_level(16, 5e-4)

    def gp(n, dt):
        grid = Grid2D(n=n, L=8.0)
        cfg = NLS2DConfig(coupling=2 * PI, dt=dt)
        phi = Field2D(grid, mb.ground_profile(grid) / np.sqrt(grid.cell_area))
        phi = evolve_2d(phi, cfg, round(0.05 / dt) - 1)
        p0 = step_2d(phi, cfg)
        p1 = step_2d(p0, cfg)
        return hier.gp_residual_2d((phi, p0, p1), 2 * PI, 1)["max_residual"]

    gp_ratio = gp(32, 1e-3) / gp(64, 5e-4)

    grid = Grid2D(n=16, L=8.0)
    phi = Field2D(grid, mb.ground_profile(grid) / np.sqrt(grid.cell_area))
    ident = hier.coupled_collision_identity(phi, HermiteBasis(mode_count=8))["max_diff"]

    ok = (
        4 * 0.7 <= bbgky_ratio <= 4 * 1.3
        and 4 * 0.7 <= gp_ratio <= 4 * 1.3
        and ident <= 1e-8
        and time.time() - t0 < 900.0
    )
    _report(
        8,
        "hierarchy-residuals",
        ok,
        f"top-level ratio {bbgky_ratio:.2f}, gp k=1 ratio {gp_ratio:.2f}, tensor identity {ident:.1e}",
        t0,
    )


def test_criterion_9_mollifier_rate():
    t0 = time.time()
    setup = hier.MollifierSetup()
    res = hier.mollifier_rate(0.4, (0.5, 0.7, 1.0, 1.4, 2.0), setup)
    rejected = False
    try:
        hier.mollifier_rate(0.6, (0.5, 1.0), setup)
    except ValueError:
        rejected = True
    ok = res["slope"] >= 0.4 - 0.05 and rejected and time.time() - t0 < 60.0
    _report(
        9,
        "mollifier-rate",
        ok,
        f"fitted slope {res['slope']:.3f} (needs >= 0.35), kappa=0.6 rejected: {rejected}",
        t0,
    )


def test_criterion_10_coercivity():
    t0 = time.time()
    mins = mb.coercivity_min_eigenvalues(
        Grid2D(n=8, L=4.0), HermiteBasis(), omega_list=(1.0, 4.0, 16.0), c=0.25
    )
    ok = all(v >= -1e-10 for v in mins.values()) and time.time() - t0 < 10.0
    _report(
        10,
        "coercivity",
        ok,
        f"min eigenvalues {({k: round(v, 6) for k, v in mins.items()})}",
        t0,
    )
