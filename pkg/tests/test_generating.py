import numpy as np
import pytest

from conftest import SIGMA_FREE, SIGMA_PEND
from hjkam.errors import SigmaExceeded
from hjkam.flow import integrate_flow
from hjkam.generating import (generating_S, generating_batch, second_diff_probe,
                              shoot_rho0)


def test_hopf_lax_free(free):
    s = generating_S(free, 0.0, 1.0, [0.0], [1.0], sigma_eff=1.5)
    assert abs(s.S - 0.5) < 1e-12
    assert abs(s.rho0[0] - 1.0) < 1e-12 and abs(s.rho1[0] - 1.0) < 1e-12


def test_hopf_lax_quadratic(quad2):
    s = generating_S(quad2, 0.0, 1.0, [0.0], [1.0], sigma_eff=1.5)
    assert abs(s.S - 0.25) < 1e-12


def test_shoot_examples(free, pendulum):
    rho = shoot_rho0(free, 0.0, 1.0, [0.0], [1.0], sigma_eff=1.5)
    assert abs(rho[0] - 1.0) < 1e-12
    rho = shoot_rho0(free, 0.0, 1.0, [0.3], [0.3], sigma_eff=1.5)
    assert abs(rho[0]) < 1e-12
    # dense scan oracle for the near-free pendulum shot
    t = 1e-4
    ps = np.linspace(0.5, 1.5, 20001)
    from hjkam.flow import integrate_batch
    Q = integrate_batch(pendulum, 0.0, t, np.zeros((len(ps), 1)), ps[:, None], 1)[0]
    p_scan = ps[np.argmin(np.abs(Q[:, 0] - 1e-4))]
    rho = shoot_rho0(pendulum, 0.0, t, [0.0], [1e-4], sigma_eff=SIGMA_PEND)
    assert abs(rho[0] - 1.0) < 1e-3
    assert abs(rho[0] - p_scan) < 1e-4


def test_sigma_exceeded(pendulum):
    with pytest.raises(SigmaExceeded):
        shoot_rho0(pendulum, 0.0, 0.5, [0.0], [0.2], sigma_eff=SIGMA_PEND)
    with pytest.raises(SigmaExceeded):
        generating_S(pendulum, 0.3, 0.2, [0.0], [0.1], sigma_eff=SIGMA_PEND)


def test_constant_shift(pendulum, shifted_pendulum):
    # H + c shifts the action by -c (t - tau)
    a = generating_S(pendulum, 0.0, 0.1, [0.2], [0.35], sigma_eff=SIGMA_PEND)
    b = generating_S(shifted_pendulum, 0.0, 0.1, [0.2], [0.35], sigma_eff=SIGMA_PEND)
    assert abs((b.S - a.S) + 0.5 * 0.1) < 1e-10


def test_monotone_comparison(pendulum, shifted_pendulum):
    rng = np.random.default_rng(2)
    for _ in range(20):
        q0 = rng.uniform(0, 1, 1)
        q1 = q0 + rng.uniform(-0.4, 0.4, 1)
        t = rng.uniform(0.02, SIGMA_PEND)
        s0 = generating_S(pendulum, 0.0, t, q0, q1, sigma_eff=SIGMA_PEND)
        s1 = generating_S(shifted_pendulum, 0.0, t, q0, q1, sigma_eff=SIGMA_PEND)
        assert s0.S >= s1.S - 1e-10


@pytest.mark.parametrize("case", ["free", "pendulum", "forced"])
def test_derivative_identities(case, free, pendulum, forced):
    model, sigma = {"free": (free, SIGMA_FREE), "pendulum": (pendulum, SIGMA_PEND),
                    "forced": (forced, SIGMA_PEND)}[case]
    rng = np.random.default_rng(8)
    h = 1e-6
    for _ in range(50):
        tau = 0.0 if model.autonomous else rng.uniform(0, 1)
        t = tau + rng.uniform(0.02, sigma)
        q0 = rng.uniform(-1, 1, (1,))
        q1 = q0 + rng.uniform(-0.4, 0.4, (1,))
        S, r0, r1, _, _ = generating_batch(model, tau, t, q0, q1, sigma_eff=sigma)
        fd1 = (generating_batch(model, tau, t, q0, q1 + h, sigma_eff=sigma)[0]
               - generating_batch(model, tau, t, q0, q1 - h, sigma_eff=sigma)[0]) / (2 * h)
        fd0 = (generating_batch(model, tau, t, q0 + h, q1, sigma_eff=sigma)[0]
               - generating_batch(model, tau, t, q0 - h, q1, sigma_eff=sigma)[0]) / (2 * h)
        assert abs(np.ravel(fd1)[0] - np.ravel(r1)[0]) < 1e-5
        assert abs(np.ravel(fd0)[0] + np.ravel(r0)[0]) < 1e-5


def test_time_derivative_is_minus_H(pendulum):
    t, q0, q1 = 0.15, np.array([0.2]), np.array([0.55])
    s = generating_S(pendulum, 0.0, t, q0, q1, sigma_eff=SIGMA_PEND)
    h = 1e-4
    dts = (generating_S(pendulum, 0.0, t + h, q0, q1, sigma_eff=SIGMA_PEND).S
           - generating_S(pendulum, 0.0, t - h, q0, q1, sigma_eff=SIGMA_PEND).S) / (2 * h)
    H_end = float(pendulum.value(t, q1, s.rho1))
    assert abs(dts + H_end) < 1e-4


def test_flow_generating_consistency(pendulum):
    # the flow maps (q0, -d0 S) to (q1, d1 S)
    rng = np.random.default_rng(3)
    for _ in range(10):
        q0 = rng.uniform(0, 1, (1,))
        q1 = q0 + rng.uniform(-0.3, 0.3, (1,))
        t = rng.uniform(0.05, SIGMA_PEND)
        s = generating_S(pendulum, 0.0, t, q0, q1, sigma_eff=SIGMA_PEND)
        traj = integrate_flow(pendulum, (q0, s.rho0), 0.0, t, step=1e-3)
        assert abs(traj.terminal.q[0] - q1[0]) < 1e-7
        assert abs(traj.terminal.p[0] - s.rho1[0]) < 1e-7


def test_second_diff_free(free):
    d00, d11, d01 = second_diff_probe(free, 0.0, 0.25, [0.1], [0.6])
    assert abs(d00 - 4.0) < 1e-6
    assert abs(d11 - 4.0) < 1e-6
    assert abs(d01 + 4.0) < 1e-6


def test_second_diff_pendulum_lower_bound(pendulum):
    # paper constant m / (16 M^2 t), relaxed 10% for the discretization
    t = 1e-4
    m, M = 1.0, 4 * np.pi ** 2
    _, d11, _ = second_diff_probe(pendulum, 0.0, t, [0.2], [0.2 + 5e-5],
                                  sigma_eff=SIGMA_PEND)
    assert d11 >= 0.9 * m / (16 * M ** 2 * t)


def test_triangle_equality_scan(pendulum):
    # S_0^{t2}(q0, q2) = min_q [S_0^{t1}(q0, q) + S_{t1}^{t2}(q, q2)]
    t1, t2 = 0.08, 0.17
    q0, q2 = np.array([0.2]), np.array([0.5])
    lhs = generating_S(pendulum, 0.0, t2, q0, q2, sigma_eff=SIGMA_PEND)
    grid = np.linspace(0.0, 0.8, 1601)
    S1 = generating_batch(pendulum, 0.0, t1, np.broadcast_to(q0, (len(grid), 1)),
                          grid[:, None], sigma_eff=SIGMA_PEND)[0]
    S2 = generating_batch(pendulum, t1, t2, grid[:, None],
                          np.broadcast_to(q2, (len(grid), 1)), sigma_eff=SIGMA_PEND)[0]
    rhs = S1 + S2
    assert np.min(rhs) >= lhs.S - 1e-9
    assert abs(np.min(rhs) - lhs.S) < 1e-6
    # equality is attained at the through-orbit's interior point
    orbit = integrate_flow(pendulum, (q0, lhs.rho0), 0.0, t1, step=1e-3)
    q_mid = grid[int(np.argmin(rhs))]
    assert abs(q_mid - orbit.terminal.q[0]) < 2e-3
