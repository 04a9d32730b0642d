import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from eprnoise.analysis import v_out_oracle, v_pm_oracle
from eprnoise.elements import CavityParams, LossChannel, OpoParams, cascade, cavity_ports, loss_ports, opo_ports
from eprnoise.errors import DegenerateConditioning, InvalidArgument
from eprnoise.readout import (
    ReadoutConfig,
    SpectrumResult,
    angle_sweep,
    homodyne_variance,
    optimal_readout_angle,
    to_db,
    wiener_conditional,
)
from eprnoise.spectral import FrequencyGrid, NoisePortSet, SpectralCovariance, covariance_from_ports, make_grid

G_OPO = 2 * np.pi * 12.1e6
G_TC = 2 * np.pi * 1.25e6
LOW = FrequencyGrid([1e-7, 2e-7])


def opo_cov(grid, x=0.5, theta=np.pi, eta=1.0, cavity=None, loss=None):
    stages = []
    if cavity is not None:
        stages.append(cavity_ports(CavityParams(G_TC, 1.0, *cavity), grid))
    if loss is not None:
        stages.append(loss_ports(LossChannel(loss, loss), grid))
    ports = cascade(opo_ports(OpoParams.from_hwhm(x, G_OPO, eta, theta), grid), *stages)
    return covariance_from_ports(ports)


def direct_wiener(m, phi_s, rng, starts=20):
    """Min over idler angle and complex gain of Var(X_s + g X_i) / (1 + |g|^2), by Nelder-Mead."""

    def f(p):
        g = p[1] + 1j * p[2]
        u = np.array([np.cos(phi_s), np.sin(phi_s), g * np.cos(p[0]), g * np.sin(p[0])])
        return np.real(np.conj(u) @ m @ u) / (1 + abs(g) ** 2)

    opts = dict(xatol=1e-12, fatol=1e-14, maxiter=20000)
    return min(minimize(f, x0, method="Nelder-Mead", options=opts).fun
               for x0 in rng.normal(size=(starts, 3)) * [3, 2, 2])


def test_readout_config_validation():
    with pytest.raises(InvalidArgument):
        ReadoutConfig(g_s=0.0, g_i=0.0)
    with pytest.raises(InvalidArgument):
        ReadoutConfig(combiner_sign=0)


@given(st.floats(-7, 7), st.floats(-7, 7), st.floats(0.05, 3), st.floats(0.0, 3), st.sampled_from([1, -1]))
def test_vacuum_reads_one(phi_s, phi_i, g_s, g_i, sign):
    s = covariance_from_ports(NoisePortSet.vacuum(make_grid(1, 10, 3)))
    v = homodyne_variance(s, ReadoutConfig(phi_s, phi_i, g_s, g_i, sign))
    assert np.allclose(v, 1.0, atol=1e-14)


def test_equal_combination_squeezed_and_antisqueezed_at_dc():
    s = opo_cov(LOW, 0.5, np.pi)
    assert homodyne_variance(s, ReadoutConfig())[0] == pytest.approx(1 / 9, rel=1e-9)
    assert to_db(homodyne_variance(s, ReadoutConfig())[0]) == pytest.approx(-9.54, abs=0.005)
    s0 = opo_cov(LOW, 0.5, 0.0)
    # V_+/2 with V_+ = 2 (1 + 4*0.5/0.25) = 18
    assert homodyne_variance(s0, ReadoutConfig())[0] == pytest.approx(9.0, rel=1e-9)


def test_single_field_readout_never_below_shot_noise(rng):
    g = make_grid(1e3, 1e9, 60)
    for _ in range(20):
        s = opo_cov(g, rng.uniform(0, 0.95), rng.uniform(-4, 4), rng.uniform(0.3, 1))
        for phi in rng.uniform(0, 2 * np.pi, 4):
            v = homodyne_variance(s, ReadoutConfig(phi, 0.0, 1.0, 0.0))
            assert np.all(v >= 1 - 1e-12)


@given(st.floats(0.01, 0.9), st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4))
def test_global_pi_shift_invariance(x, theta, phi_s, phi_i):
    g = make_grid(1e5, 1e8, 6)
    s = opo_cov(g, x, theta, cavity=(0.4, -1.3))
    a = homodyne_variance(s, ReadoutConfig(phi_s, phi_i))
    b = homodyne_variance(s, ReadoutConfig(phi_s + np.pi, phi_i + np.pi))
    assert np.allclose(a, b, rtol=1e-10)


def test_sweep_vacuum_all_ones():
    s = covariance_from_ports(NoisePortSet.vacuum(make_grid(1, 10, 4)))
    res = angle_sweep(s, 0.3, np.linspace(0, 2 * np.pi, 9))
    assert np.allclose(res.variance, 1.0)
    assert np.allclose(res.variance_db, 0.0)


def test_sweep_is_2pi_periodic():
    g = make_grid(1e4, 1e8, 30)
    s = opo_cov(g, 0.3, np.pi, cavity=(0.0, 1.0), loss=0.6)
    res = angle_sweep(s, 0.0, [0.0, 2 * np.pi])
    assert np.allclose(res.variance[:, 0], res.variance[:, 1], rtol=0, atol=1e-12)


def test_sweep_pi_symmetry_for_real_cross_correlations():
    # no cavity: S stays real, so phi_i and phi_i + pi give the same sweep up to the sign
    # of the cross term; with g_s = 0 (idler only) they are equal
    g = make_grid(1e4, 1e8, 10)
    s = opo_cov(g, 0.6, 1.0)
    assert np.max(np.abs(s.matrix.imag)) < 1e-12
    res = angle_sweep(s, 0.0, [0.4, 0.4 + np.pi], g_s=0.0, g_i=1.0)
    assert np.allclose(res.variance[:, 0], res.variance[:, 1])


def test_min_and_max_over_angle_are_v_minus_and_v_plus(rng):
    g = make_grid(1e4, 1e8, 50)
    for _ in range(5):
        x, theta = rng.uniform(0.05, 0.9), rng.uniform(-np.pi, np.pi)
        s = opo_cov(g, x, theta)
        vp, vm = v_pm_oracle(x, 1.0, g.omega / G_OPO)
        _, vmin = optimal_readout_angle(s)
        assert np.allclose(vmin, vm / 2, rtol=1e-9)
        # max over angle: minimise the negated readout by flipping the combiner sign
        _, vmin_flipped = optimal_readout_angle(s, combiner_sign=1)
        total = 2 * v_out_oracle(x, 1.0, g.omega / G_OPO)
        assert np.allclose(total - vmin_flipped, vp / 2, rtol=1e-9)


def test_frequency_independent_squeezing_has_constant_optimal_angle():
    g = make_grid(1e4, 1e8, 60)
    angle, _ = optimal_readout_angle(opo_cov(g, 0.5, np.pi, loss=0.7))
    assert np.ptp(np.unwrap(angle)) < 1e-6


def test_equal_detuning_rotates_optimal_angle_by_pi_in_idler_phase():
    # both fields rotate; idler LO phase must follow twice the quadrature rotation
    g = FrequencyGrid(G_TC * np.array([0.01, 100.0]))
    angle, _ = optimal_readout_angle(opo_cov(g, 0.3, np.pi, cavity=(1.0, 1.0)))
    shift = np.abs(np.diff(np.unwrap(angle)))[0]
    rho = lambda w: np.arctan2(2.0, w**2)  # quadrature rotation at detuning 1
    assert shift == pytest.approx(2 * (rho(0.01) - rho(100.0)), abs=1e-6)


def test_sweep_argmin_tracks_refined_optimum():
    g = make_grid(1e4, 1e8, 20)
    s = opo_cov(g, 0.3, np.pi, cavity=(0.0, 1.0), loss=0.53)
    res = angle_sweep(s, 0.0, np.linspace(0, 2 * np.pi, 3601))
    angle, vmin = optimal_readout_angle(s)
    assert np.all(res.variance.min(axis=1) >= vmin - 1e-12)
    d = np.angle(np.exp(1j * (res.argmin_angles() - angle)))
    assert np.max(np.abs(d)) < 2e-3


def test_to_db():
    assert to_db(1.0) == 0.0
    assert to_db(0.6310) == pytest.approx(-2.00, abs=0.005)
    assert to_db(1 / 9) == pytest.approx(-9.54, abs=0.005)
    with pytest.raises(InvalidArgument):
        to_db(0.0)
    with pytest.raises(InvalidArgument):
        to_db([1.0, -1.0])


def test_spectrum_result_rejects_nonpositive():
    g = make_grid(1, 10, 2)
    with pytest.raises(InvalidArgument):
        SpectrumResult(g, [0.0], [[1.0], [0.0]])
    with pytest.raises(InvalidArgument):
        SpectrumResult(g, [0.0, 1.0], [[1.0], [1.0]])


def test_wiener_uncorrelated_fields():
    g = make_grid(1e4, 1e8, 5)
    w = wiener_conditional(opo_cov(g, 0.0))
    assert np.allclose(w.gain, 0.0)
    assert np.allclose(w.variance, 1.0)
    assert np.allclose(w.signal_referenced, 1.0)


def test_wiener_symmetric_lossless_dc():
    s = opo_cov(LOW, 0.5, np.pi)
    w = wiener_conditional(s)
    assert w.variance[0] == pytest.approx(1 / 9, rel=1e-9)
    assert w.gain[0] == pytest.approx(1.0, abs=1e-7)
    # signal-referenced conditional variance: V - c^2 / V with V = 41/9, c = 40/9
    assert w.signal_referenced[0] == pytest.approx(41 / 9 - (40 / 9) ** 2 / (41 / 9), rel=1e-9)


def test_wiener_matches_direct_search(rng):
    g = FrequencyGrid(G_TC * np.array([0.1, 0.7, 1.0, 3.0]))
    for _ in range(4):
        s = opo_cov(g, rng.uniform(0.1, 0.8), rng.uniform(-4, 4), cavity=tuple(rng.uniform(-2, 2, 2)),
                    loss=rng.uniform(0.4, 1))
        phi_s = rng.uniform(0, np.pi)
        w = wiener_conditional(s, phi_s)
        for k in range(g.count):
            direct = direct_wiener(s.matrix[k], phi_s, rng)
            assert w.variance[k] <= direct + 1e-12
            assert w.variance[k] == pytest.approx(direct, rel=1e-9)


def test_wiener_gain_realises_reported_variance(rng):
    g = make_grid(1e4, 1e8, 25)
    s = opo_cov(g, 0.4, np.pi, cavity=(0.0, 1.0), loss=0.53)
    w = wiener_conditional(s)
    for k in range(g.count):
        u = np.array([1, 0, w.gain[k] * np.cos(w.idler_angle[k]), w.gain[k] * np.sin(w.idler_angle[k])])
        var = np.real(u @ s.matrix[k] @ np.conj(u)) / (1 + abs(w.gain[k]) ** 2)
        assert var == pytest.approx(w.variance[k], rel=1e-9)


def test_wiener_beats_every_fixed_combination_middle_case():
    g = make_grid(1e4, 1e8, 40)
    s = opo_cov(g, 0.29, np.pi, cavity=(0.0, 1.0), loss=0.53)
    w = wiener_conditional(s)
    angles = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    for gs, gi, sign in [(1, 1, -1), (1, 0.5, -1), (0.7, 1, 1), (1, 2, -1)]:
        fixed = angle_sweep(s, 0.0, angles, gs, gi, sign).variance
        assert np.all(w.variance[:, None] <= fixed + 1e-12)
    assert np.all(w.variance >= 0)


def test_wiener_degenerate_idler():
    g = make_grid(1, 10, 2)
    m = np.zeros((2, 4, 4), dtype=complex)
    m[:, 0, 0] = m[:, 1, 1] = 1.0
    with pytest.raises(DegenerateConditioning):
        wiener_conditional(SpectralCovariance(g, m))
