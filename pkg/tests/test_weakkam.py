import numpy as np
import pytest

from conftest import SIGMA_FREE, SIGMA_PEND
from hjkam.errors import LevelBelowCritical, NonConvergence
from hjkam.hamiltonian import mechanical_model
from hjkam.laxoleinik import GridFunction
from hjkam.weakkam import (aubry_set, calibrated_curve, critical_value,
                           fixed_point_residual, invariant_set, is_subsolution,
                           mane_pair, mane_potential, weak_kam_solve)


def closed_form_pendulum_u(q):
    u = np.where(q <= 0.5, (2 / np.pi) * (1 - np.cos(np.pi * q)),
                 (2 / np.pi) * (1 + np.cos(np.pi * q)))
    return u - u.min()


def test_critical_value_free(free):
    res = critical_value(free, grid_n=64, t_step=0.2, t_max=4.0, sigma_eff=SIGMA_FREE)
    assert abs(res.alpha) < 1e-12
    # bounded oscillation of the recorded history
    plus = np.array([h[1] for h in res.history])
    minus = np.array([h[2] for h in res.history])
    assert np.max(plus - minus) < 1e-12


def test_critical_value_pendulum_and_family(pendulum):
    res = critical_value(pendulum, grid_n=64, t_step=0.2, t_max=8.0,
                         sigma_eff=SIGMA_PEND)
    assert abs(res.alpha - 1.0) <= 1e-2
    model2 = mechanical_model([0.2, 0.3], m=1.0)
    res2 = critical_value(model2, grid_n=64, t_step=0.2, t_max=8.0, sigma_eff=0.2)
    assert abs(res2.alpha - 0.5) <= 1e-2


def test_history_subadditive(pendulum):
    res = critical_value(pendulum, grid_n=32, t_step=0.2, t_max=4.0,
                         sigma_eff=SIGMA_PEND)
    ts = [h[0] for h in res.history]
    plus = {round(h[0], 9): h[1] for h in res.history}
    minus = {round(h[0], 9): h[2] for h in res.history}
    slack = 2e-2  # grid slack on a 32 grid
    for t in ts:
        for s in ts:
            key = round(t + s, 9)
            if key in plus:
                assert plus[key] <= plus[round(t, 9)] + plus[round(s, 9)] + slack
                assert minus[key] >= minus[round(t, 9)] + minus[round(s, 9)] - slack
    # a^-(t) - t alpha brackets hold at the tail
    T = ts[-1]
    assert minus[round(T, 9)] / T - 1e-2 <= -res.alpha <= plus[round(T, 9)] / T + 1e-2


def test_weak_kam_free(free):
    res = weak_kam_solve(free, grid_n=64, alpha=0.0, t_step=0.2, sigma_eff=SIGMA_FREE)
    assert res.residual <= 1e-10
    assert np.max(np.abs(res.u.values)) <= 1e-12


def test_weak_kam_pendulum_oracle(pendulum):
    res = weak_kam_solve(pendulum, grid_n=64, alpha=1.0, t_step=0.1,
                         sigma_eff=SIGMA_PEND)
    assert res.residual <= 5e-3
    dist = np.max(np.abs(res.u.values - closed_form_pendulum_u(res.u.nodes)))
    assert dist <= 5e-3
    # second probe horizon consistent with the semigroup
    r2 = fixed_point_residual(pendulum, res.u, 1.0, 0.2, sigma_eff=SIGMA_PEND)
    assert r2 <= 5e-3


def test_weak_kam_off_level_plateau(pendulum):
    t_probe = 0.1
    with pytest.raises(NonConvergence) as info:
        weak_kam_solve(pendulum, grid_n=32, alpha=1.2, t_step=t_probe,
                       sigma_eff=SIGMA_PEND, t_max=6.0)
    res = info.value.result
    assert res is not None
    assert res.residual >= 0.2 * t_probe / 2
    assert abs(res.residual - 0.2 * t_probe) < 0.05 * t_probe


def test_is_subsolution_examples(pendulum, free):
    n = 64
    zero = GridFunction(1, n, np.zeros(n))
    ok, worst = is_subsolution(pendulum, zero, 1.0, slack=1e-9, sigma_eff=SIGMA_PEND)
    assert ok and worst <= 0.0 + 1e-12
    ok, worst = is_subsolution(pendulum, zero, 0.5, sigma_eff=SIGMA_PEND)
    assert not ok and abs(worst - 0.5) < 1e-9
    q = np.arange(n) / n
    u = GridFunction(1, n, 0.1 * np.sin(2 * np.pi * q) / (2 * np.pi))
    ok, _ = is_subsolution(free, u, 0.005, slack=1e-9, sigma_eff=SIGMA_FREE)
    assert ok


def test_mane_free_closed_form(free):
    field = mane_potential(free, 0.5, 0.0, grid_n=64, sigma_eff=SIGMA_FREE)
    q = field.phi.nodes
    exact = np.minimum(q, 1 - q)
    assert np.max(np.abs(field.phi.values - exact)) <= 2e-3
    assert abs(field.phi.values[0]) <= 1e-3
    assert field.phi.values.min() >= -1e-3


def test_mane_lipschitz_bound(free):
    # |phi(q) - phi(q')| <= 2 sqrt(2 m (M + a)) dist + slack
    field = mane_potential(free, 0.5, 0.0, grid_n=64, sigma_eff=SIGMA_FREE)
    v = field.phi.values
    bound = 2 * np.sqrt(2 * 1.0 * (1.0 + 0.5)) / 64
    assert np.max(np.abs(np.diff(v))) <= bound + 1e-3


def test_mane_pendulum_matches_weak_kam(pendulum):
    field = mane_potential(pendulum, 1.0, 0.0, grid_n=64, sigma_eff=SIGMA_PEND)
    res = weak_kam_solve(pendulum, grid_n=64, alpha=1.0, t_step=0.1,
                         sigma_eff=SIGMA_PEND)
    diff = field.phi.values - res.u.values
    assert np.max(np.abs(diff - diff[0])) <= 5e-3


def test_mane_triangle_and_maximality(free):
    a, n = 0.5, 64
    field = mane_potential(free, a, 0.0, grid_n=n, sigma_eff=SIGMA_FREE)
    rng = np.random.default_rng(1)
    for _ in range(15):
        th = rng.integers(0, n) / n
        q1 = rng.integers(0, n) / n
        lhs = field.phi.values[int(q1 * n)]
        rhs = field.phi.values[int(th * n)] + mane_pair(free, a, th, q1, grid_n=n,
                                                        sigma_eff=SIGMA_FREE)
        assert lhs <= rhs + 1e-3
    # certified sub-solutions vanishing at the base stay below phi
    q = np.arange(n) / n
    for c in (0.0, 0.5, 0.9):
        u = GridFunction(1, n, c * np.sin(2 * np.pi * q) / (2 * np.pi))
        ok, _ = is_subsolution(free, u, a, slack=1e-9, sigma_eff=SIGMA_FREE)
        assert ok
        assert np.max(u.values - field.phi.values) <= 2e-3


def test_mane_below_critical_detected(pendulum):
    with pytest.raises(LevelBelowCritical):
        mane_potential(pendulum, 0.5, 0.0, grid_n=32, t_max=8.0,
                       sigma_eff=SIGMA_PEND)


def test_calibrated_free(free):
    traj = calibrated_curve(free, 0.5, 0.0, 1.0, horizon_cap=4.0,
                            sigma_eff=SIGMA_FREE)
    assert abs(traj.times[-1] - 1.0) < 1e-5
    assert abs(traj.P[0, 0] - 1.0) < 1e-6
    assert np.max(np.abs(traj.energy - 0.5)) < 1e-6


def test_calibrated_pendulum_energy_and_splitting(pendulum):
    traj = calibrated_curve(pendulum, 1.0, 0.15, 0.45, horizon_cap=3.0,
                            sigma_eff=SIGMA_PEND)
    assert np.max(np.abs(traj.energy - 1.0)) <= 1e-4
    # optimal horizon equals the separatrix transit time
    from scipy.integrate import quad
    T_oracle = quad(lambda s: 1 / (2 * np.sin(np.pi * s)), 0.15, 0.45)[0]
    assert abs(traj.times[-1] - T_oracle) < 1e-3
    full = mane_pair(pendulum, 1.0, 0.15, 0.45, grid_n=64, sigma_eff=SIGMA_PEND)
    for frac in (0.25, 0.5, 0.75):
        i = int(frac * (len(traj.times) - 1))
        qs = float(np.mod(traj.Q[i, 0], 1.0))
        split = (mane_pair(pendulum, 1.0, 0.15, qs, grid_n=64, sigma_eff=SIGMA_PEND)
                 + mane_pair(pendulum, 1.0, qs, 0.45, grid_n=64, sigma_eff=SIGMA_PEND))
        assert abs(split - full) <= 1e-2


def test_aubry_masks(free, pendulum):
    res = aubry_set(free, grid_n=64, sigma_eff=SIGMA_FREE)
    assert np.all(res.mask)
    resp = aubry_set(pendulum, grid_n=64, sigma_eff=SIGMA_PEND)
    marked = resp.marked_nodes()
    assert len(marked) >= 1 and 0 in marked
    assert np.all(np.minimum(marked, 64 - marked) <= 1)


def test_aubry_two_well():
    model = mechanical_model([0.0, 0.0, 0.0, 0.5], m=1.0)
    res = aubry_set(model, grid_n=64, sigma_eff=0.1)
    marked = res.marked_nodes()
    near0 = np.minimum(marked, 64 - marked) <= 1
    near_half = np.abs(marked - 32) <= 1
    assert np.all(near0 | near_half)
    assert np.any(near0) and np.any(near_half)
    assert abs(res.alpha - 0.5) <= 1e-2


def test_invariant_sets(free, pendulum):
    sf = weak_kam_solve(free, grid_n=64, alpha=0.0, t_step=0.2, sigma_eff=SIGMA_FREE)
    invf = invariant_set(free, sf.u, t_step=0.2, n_steps=10)
    assert len(invf.points) == 64 and invf.stable

    sp = weak_kam_solve(pendulum, grid_n=64, alpha=1.0, t_step=0.1,
                        sigma_eff=SIGMA_PEND)
    inv = invariant_set(pendulum, sp.u, t_step=0.2, n_steps=40)
    pts = inv.points
    assert len(pts) >= 1
    dist = np.sqrt(np.minimum(pts[:, 0], 1 - pts[:, 0]) ** 2 + pts[:, 1] ** 2)
    assert np.max(dist) <= 1.0 / 64 + 1e-9
    # aubry mask lifts into the surviving set
    resp = aubry_set(pendulum, grid_n=64, sigma_eff=SIGMA_PEND)
    du = (np.roll(sp.u.values, -1) - np.roll(sp.u.values, 1)) * 64 / 2
    for i in resp.marked_nodes():
        dq = pts[:, 0] - i / 64
        dq -= np.round(dq)
        assert np.min(np.sqrt(dq ** 2 + (pts[:, 1] - du[i]) ** 2)) <= inv.tol_graph


def test_calibration_on_aubry_nodes(pendulum):
    # T^t u + t alpha = u = dual - t alpha on the marked set
    from hjkam.laxoleinik import apply_T, apply_T_dual
    res = aubry_set(pendulum, grid_n=64, sigma_eff=SIGMA_PEND)
    u = weak_kam_solve(pendulum, grid_n=64, alpha=res.alpha, t_step=0.1,
                       sigma_eff=SIGMA_PEND).u
    fwd = apply_T(pendulum, u, 0.0, 0.1, sigma_eff=SIGMA_PEND).shifted(0.1 * res.alpha)
    bwd = apply_T_dual(pendulum, u, 0.0, 0.1, sigma_eff=SIGMA_PEND).shifted(-0.1 * res.alpha)
    for i in res.marked_nodes():
        assert abs(fwd.values[i] - u.values[i]) <= 5e-3
        assert abs(bwd.values[i] - u.values[i]) <= 5e-3
