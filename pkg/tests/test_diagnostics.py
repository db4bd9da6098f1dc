"""Gaussian diagnostics against closed forms and quadrature oracles."""

import numpy as np
import pytest
from scipy.integrate import quad

from lmcflab import diagnostics as dg
from lmcflab import fixtures as fx
from lmcflab import flow
from lmcflab import geometry as geo
from lmcflab.errors import WindowInPast

CIRCLE_ENTROPY = np.sqrt(2.0 * np.pi / np.e)  # ~ 1.5203


def circle_density_oracle(r, x0, delta):
    """1-d quadrature of the kernel over the exact circle of radius r."""

    def integrand(phi):
        p = np.array([r * np.cos(phi), r * np.sin(phi)])
        return np.exp(-np.sum((p - x0) ** 2) / (4 * delta)) * r

    val, _ = quad(integrand, 0.0, 2.0 * np.pi, epsabs=1e-13, epsrel=1e-13)
    return val / np.sqrt(4.0 * np.pi * delta)


def test_window_in_past():
    w = dg.GaussianWindow(np.zeros(2), t0=1.0)
    with pytest.raises(WindowInPast):
        w.scale(1.0)


def test_line_density_one():
    line = fx.make_line(angle=0.4, extent=30.0, n=601)
    w = dg.GaussianWindow(np.zeros(2), t0=1.0)
    val = dg.gaussian_density_ratio(line, w, t=0.0)
    assert abs(val - 1.0) < 1e-6


def test_plane_through_center_density_one():
    pair = geo.make_plane_pair((np.pi / 4, -np.pi / 4), 1)
    plane = pair.planes[0].as_product(extent=30.0, samples=601)
    w = dg.GaussianWindow(np.zeros(4), t0=1.0)
    val = dg.gaussian_density_ratio(plane, w, t=0.0)
    assert abs(val - 1.0) < 1e-6


def test_plane_pair_density_two():
    for m in (0, 1):
        pair = geo.make_plane_pair((np.pi / 4, -np.pi / 4), m)
        state = [p.as_product(extent=30.0, samples=601) for p in pair.planes]
        w = dg.GaussianWindow(np.zeros(4), t0=1.0)
        val = dg.gaussian_density_ratio(state, w, t=0.0)
        assert abs(val - 2.0) < 1e-6
        # analytic path agrees
        assert abs(dg.gaussian_density_ratio(pair, w, t=0.0) - 2.0) < 1e-12


def test_circle_density_against_oracle_and_monotone():
    # window at the extinction spacetime point of the shrinking circle
    def gen(t):
        return fx.make_circle(np.sqrt(-2.0 * t), 256)

    w = dg.GaussianWindow(np.zeros(2), t0=0.0)
    vals = []
    h2 = (2 * np.pi / 256) ** 2
    for t in (-0.5, -0.3, -0.1):
        state = gen(t)
        val = dg.gaussian_density_ratio(state, w, t=t)
        oracle = circle_density_oracle(np.sqrt(-2.0 * t), np.zeros(2), -t)
        # module integrates the polygon exactly; oracle the smooth circle
        assert abs(val - oracle) < 0.2 * h2
        vals.append(val)
        # self-shrinker: density constant = sqrt(2 pi / e) up to discretization
        assert abs(val - CIRCLE_ENTROPY) < 1e-3
    assert vals[0] >= vals[-1] - 1e-9


def test_offcenter_circle_density_decreasing():
    def gen(t):
        return fx.make_circle(np.sqrt(1.0 - 2.0 * t), 256)

    w = dg.GaussianWindow(np.array([0.3, 0.0]), t0=0.9)
    vals = [dg.gaussian_density_ratio(gen(t), w, t=t) for t in (0.0, 0.2, 0.4)]
    assert vals[0] > vals[1] > vals[2]


def test_entropy_line():
    line = fx.make_line(angle=1.0, extent=25.0, n=501)
    rep = dg.entropy(line)
    assert abs(rep.value - 1.0) < 1e-4


def test_entropy_circle():
    # oracle: golden-section over r of the closed form for the exact circle
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda lr: -circle_density_oracle(1.0, np.zeros(2), np.exp(lr)),
                          bounds=(-6, 3), method="bounded")
    oracle = -res.fun
    assert abs(oracle - CIRCLE_ENTROPY) < 1e-9

    circ = fx.make_circle(1.0, 256)
    rep = dg.entropy(circ)
    assert abs(rep.value - CIRCLE_ENTROPY) < 1e-3
    assert np.linalg.norm(rep.x0) < 0.05
    assert abs(rep.r - 0.5) < 0.1


def test_entropy_two_lines():
    state = fx.make_line_pair(0.5, -0.5, extent=25.0, n=501)
    rep = dg.entropy(state)
    assert abs(rep.value - 2.0) < 1e-3
    assert np.linalg.norm(rep.x0) < 0.05


def test_entropy_scale_equivariance():
    circ = fx.make_circle(1.0, 128)
    big = flow.scale_state(circ, 7.0)
    r1 = dg.entropy(circ)
    r2 = dg.entropy(big)
    assert abs(r1.value - r2.value) < 1e-8


def test_density_between_one_and_entropy():
    circ = fx.make_circle(1.0, 256)
    ent = dg.entropy(circ).value
    for t0, x0 in ((0.5, circ.vertices[0]), (0.2, circ.vertices[31])):
        w = dg.GaussianWindow(x0, t0=t0)
        val = dg.gaussian_density_ratio(circ, w, t=0.0)
        assert 1.0 - 1e-6 <= val <= ent + 1e-6


def test_monotonicity_static_plane_constant():
    line = fx.make_line(angle=0.3, extent=25.0, n=501)
    traj = flow.FlowTrajectory([0.0, 0.1, 0.2], [line] * 3)
    w = dg.GaussianWindow(np.zeros(2), t0=0.5)
    rep = dg.monotonicity_audit(traj, w)
    assert rep.verdict
    assert np.max(np.abs(rep.values - 1.0)) < 1e-6
    assert np.max(rep.dissipations) < 1e-10


def test_monotonicity_circle_decrement_matches_dissipation():
    n = 256
    circ = fx.make_circle(1.0, n)
    dt = 5e-4
    steps = 400
    traj = flow.evolve(circ, dt, steps, record_every=10)
    w = dg.GaussianWindow(np.array([0.3, 0.0]), t0=0.8)
    rep = dg.monotonicity_audit(traj, w)
    assert rep.verdict, f"max violation {rep.max_violation}"
    assert rep.nonincreasing
    drop = rep.values[0] - rep.values[-1]
    diss = sum(r[2] for r in rep.rows)
    assert drop > 1e-3
    assert abs(drop - diss) / drop < 0.02


def test_monotonicity_caloric_coordinate_constant():
    # f = coordinate on a static plane through the centre: equality case
    line = fx.make_line(angle=0.3, extent=25.0, n=501)
    traj = flow.FlowTrajectory([0.0, 0.1, 0.2], [line] * 3)
    w = dg.GaussianWindow(np.zeros(2), t0=0.5)
    f_vals = [[line.vertices @ np.array([1.0, 0.0])] for _ in range(3)]
    res_vals = [[np.zeros(line.n_vertices)] for _ in range(3)]
    rep = dg.monotonicity_audit(traj, w, f_values=f_vals, residual_values=res_vals)
    assert np.max(np.abs(rep.values - rep.values[0])) < 1e-8


def test_translator_fit_plane_containing_ez():
    # plane containing e_z: w and theta constant, b = 0, tiny residual
    prod, frame = fx.make_circle_product(1.0, 64)
    line1 = fx.make_line(angle=0.0, extent=5.0, n=41)
    state = geo.ProductLagrangian(line1, geo.AffineLine((0, 0), (1.0, 0.0)))
    fits = dg.translator_fit(state, frame)
    assert len(fits) == 1
    assert not fits[0].degenerate
    assert abs(fits[0].b) < 1e-10
    assert fits[0].residual < 1e-12


def test_translator_fit_grim_reaper_product():
    prod, frame, _ = fx.make_grim_reaper_product(speed=1.0, extent=3.0, n=512)
    fits = dg.translator_fit(prod, frame)
    fit = fits[0]
    h = np.max(prod.factor1.edge_lengths())
    assert fit.residual < 5.0 * h * h
    # paper sign: w = a + b*theta with b = -1/kappa, so b*kappa = -1
    assert abs(fit.b * 1.0 + 1.0) < 1e-3
    assert abs(fit.kappa - 1.0) < 1e-3
    assert fit.velocity_residual < 1e-3


def test_translator_fit_grim_reaper_richardson():
    resids = []
    for n in (128, 256, 512):
        prod, frame, _ = fx.make_grim_reaper_product(speed=1.0, extent=3.0, n=n)
        resids.append(dg.translator_fit(prod, frame)[0].residual)
    slope = np.log2(resids[0] / resids[1])
    slope2 = np.log2(resids[1] / resids[2])
    assert slope >= 1.8 and slope2 >= 1.8


def test_translator_fit_circle_product_rejected():
    prod, frame = fx.make_circle_product(1.0, 128)
    fit = dg.translator_fit(prod, frame)[0]
    assert fit.residual >= 0.1 * fit.rms_w


def test_growth_certificate_guard():
    line = fx.make_line(angle=0.0, extent=10.0, n=101)
    vals = line.vertices[:, 0] ** 2
    with pytest.raises(dg.GrowthUnbounded):
        dg.check_polynomial_growth(vals, line.vertices, degree=1, bound=0.5)
    c = dg.check_polynomial_growth(vals, line.vertices, degree=2, bound=None)
    assert c <= 1.0 + 1e-12


def test_density_scale_equivariance():
    # density is invariant under parabolic rescaling of state and window
    circ = fx.make_circle(1.0, 128)
    w = dg.GaussianWindow(np.array([0.2, 0.1]), t0=0.7)
    base = dg.gaussian_density_ratio(circ, w, t=0.0)
    for lam in (0.5, 3.0):
        scaled = flow.scale_state(circ, lam)
        w_scaled = dg.GaussianWindow(lam * w.x0, t0=lam * lam * 0.7)
        val = dg.gaussian_density_ratio(scaled, w_scaled, t=0.0)
        assert abs(val - base) < 1e-8


def test_angle_oscillation_reported_not_enforced():
    # grim reaper: oscillation approaches pi from below (almost calibrated)
    curve, _ = fx.make_grim_reaper(speed=1.0, extent=4.0, n=201)
    rep = dg.angle_oscillation(curve)
    assert rep["almost_calibrated"]
    assert 0 < rep["margin_to_pi"] < 0.1
    # circle: oscillation 2*pi (not zero-Maslov); still just reported
    rep_c = dg.angle_oscillation(fx.make_circle(1.0, 64))
    assert not rep_c["almost_calibrated"]
    assert abs(rep_c["oscillation"] - 2 * np.pi * (1 - 1 / 64)) < 1e-9
