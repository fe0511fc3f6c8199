import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emff.estimator import (
    KalmanConfig,
    KalmanState,
    RiccatiDivergence,
    input_estimate,
    kalman_gain,
    kf_update,
    riccati_map,
    solve_dare,
    steady_gain,
)

AIRTRACK_2 = KalmanConfig(0.1, 1.2e-6, 5e-6)
AIRTRACK_3 = KalmanConfig(0.1, 2.0e-6, 5e-6)


@pytest.mark.parametrize("cfg, ref", [(AIRTRACK_2, [0.0942, 0.0466]), (AIRTRACK_3, [0.1064, 0.0598])])
def test_reference_gains(cfg, ref):
    np.testing.assert_allclose(steady_gain(cfg), ref, atol=5e-4)


@pytest.mark.parametrize("cfg", [AIRTRACK_2, AIRTRACK_3, KalmanConfig(0.1, 1.2e-6, 5e-6, swap_roles=False)])
def test_dare_fixed_point_and_stability(cfg):
    P = solve_dare(cfg)
    np.testing.assert_allclose(P, P.T, atol=0)
    assert np.all(np.linalg.eigvalsh(P) >= 0)
    assert np.max(np.abs(riccati_map(P, cfg) - P)) <= 1e-12
    L = kalman_gain(P, cfg)
    assert np.all((L > 0) & (L < 1))
    M = cfg.A - np.outer(L, cfg.C @ cfg.A)
    assert max(abs(np.linalg.eigvals(M))) < 1


def test_textbook_roles_gain_decreases_with_measurement_noise():
    lo = steady_gain(KalmanConfig(0.1, 1.2e-6, 5e-6, swap_roles=False))
    hi = steady_gain(KalmanConfig(0.1, 1.2e-4, 5e-6, swap_roles=False))
    assert np.all(hi < lo)


def test_default_roles_gain_decreases_with_measurement_noise():
    # with the default pairing the measurement-side variance is the w field
    lo = steady_gain(AIRTRACK_2)
    hi = steady_gain(KalmanConfig(0.1, 1.2e-6, 5e-4))
    assert AIRTRACK_2.meas_var == 5e-6
    assert np.all(hi < lo)


def test_role_assignment():
    assert (AIRTRACK_2.process_var, AIRTRACK_2.meas_var) == (1.2e-6, 5e-6)
    textbook = KalmanConfig(0.1, 1.2e-6, 5e-6, swap_roles=False)
    assert (textbook.process_var, textbook.meas_var) == (5e-6, 1.2e-6)
    np.testing.assert_allclose(textbook.W, 5e-6 * textbook.B @ textbook.B.T)


def test_zero_covariance_gives_zero_gain():
    np.testing.assert_array_equal(kalman_gain(np.zeros((2, 2)), AIRTRACK_2), [0, 0])


def test_dare_iteration_cap():
    with pytest.raises(RiccatiDivergence):
        solve_dare(AIRTRACK_2, max_iter=3)


@pytest.mark.parametrize("kw", [dict(T=0.0), dict(V=0.0), dict(w=-1.0)])
def test_config_invariants(kw):
    args = dict(T=0.1, V=1e-6, w=1e-6)
    args.update(kw)
    with pytest.raises(ValueError):
        KalmanConfig(**args)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-5, 5), st.floats(-1, 1))
def test_zero_gain_is_pure_prediction(r, v, nu, q):
    s = kf_update(KalmanState(r, v, np.zeros(2)), q, nu, AIRTRACK_2)
    T = 0.1
    assert s.r_hat == pytest.approx(r + T * v + 0.5 * T * T * nu, abs=1e-15)
    assert s.v_hat == pytest.approx(v + T * nu, abs=1e-15)


def test_initialization():
    s = KalmanState.initial(0.41, steady_gain(AIRTRACK_2))
    assert (s.r_hat, s.v_hat) == (0.41, 0.0)


def test_noiseless_stationary_convergence():
    L = steady_gain(AIRTRACK_2)
    s = KalmanState(0.30, 0.05, L)
    for _ in range(600):
        s = kf_update(s, 0.45, 0.0, AIRTRACK_2)
    assert s.r_hat == pytest.approx(0.45, abs=1e-9)
    assert s.v_hat == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("cfg", [AIRTRACK_2, AIRTRACK_3])
def test_position_rms_below_sensor_noise(cfg):
    rng = np.random.default_rng(3)
    L = steady_gain(cfg)
    A, B = cfg.A, cfg.B.ravel()
    x = np.zeros(2)
    s = KalmanState(0.0, 0.0, L)
    err = []
    for k in range(10_000):
        x = A @ x + B * rng.normal(0.0, np.sqrt(cfg.w))
        q = x[0] + rng.normal(0.0, np.sqrt(cfg.V))
        s = kf_update(s, q, 0.0, cfg)
        if k >= 500:
            err.append(s.r_hat - x[0])
    assert np.sqrt(np.mean(np.square(err))) < np.sqrt(cfg.V)


def test_input_estimate_two_satellites():
    F12 = 2e-3
    force = lambda a, b: F12 if (a, b) == (1, 2) else -F12  # noqa: E731
    nbrs = {1: [2], 2: [1]}.__getitem__
    assert input_estimate(1, 2, nbrs, force, 3.8) == pytest.approx(2 * F12 / 3.8)


def test_input_estimate_line_graph_skips_non_neighbor_term():
    calls = []
    forces = {(1, 2): 1.0, (1, 3): 2.0, (2, 1): -1.0, (3, 1): -2.0}

    def force(a, b):
        calls.append((a, b))
        return forces[(a, b)]

    nbrs = {1: [2, 3], 2: [1], 3: [1]}.__getitem__
    nu = input_estimate(1, 2, nbrs, force, 2.0)
    assert nu == pytest.approx(((1.0 + 2.0) - (-1.0)) / 2.0)
    assert (2, 3) not in calls and (3, 2) not in calls


def test_input_estimate_zero_forces():
    nbrs = {1: [2, 3], 2: [1], 3: [1]}.__getitem__
    assert input_estimate(2, 1, nbrs, lambda a, b: 0.0, 3.8) == 0.0
