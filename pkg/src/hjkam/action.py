"""Minimal action over arbitrary horizons by broken geodesics.

A path is a chain of short-time orbit segments; the chain is relaxed by
block-coordinate descent (each interior node solves a strictly convex
one-node problem via Newton), with red-black node ordering so the two
colors vectorize over batches and nodes.  The Lagrangian-side Tonelli
minimizer is kept fully independent of this pipeline and serves as the
designated brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigError, MultistartExhausted
from .flow import integrate_batch, resolve_sigma
from .generating import _steps_for, generating_batch, shoot_batch
from .hamiltonian import HamiltonianModel, legendre_batch

TOL_CRIT_BASE = 1e-6
TOL_A_BASE = 1e-6
KERNEL_STEP = 5e-3


@dataclass
class BrokenPath:
    """A broken-geodesic chain with its action and first-order diagnostics."""

    tau: float
    t: float
    q0: np.ndarray
    q1: np.ndarray
    nodes: np.ndarray
    n: int
    value: float
    momentum_jumps: np.ndarray
    rho0: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray

    def node_times(self) -> np.ndarray:
        return self.tau + (self.t - self.tau) * np.arange(1, self.n) / self.n

    def to_csv(self, path):
        rows = ["t_i,theta_i,p_minus,p_plus"]
        times = self.node_times()
        for i in range(self.n - 1):
            rows.append(f"{times[i]:.17g},{self.nodes[i, 0]:.17g},"
                        f"{self.p_minus[i, 0]:.17g},{self.p_plus[i, 0]:.17g}")
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(rows) + "\n")


def default_segments(tau: float, t: float, sigma: float) -> int:
    """Smallest segment count keeping horizons inside half the twist window."""
    return max(1, int(np.ceil((t - tau) / (sigma / 2) - 1e-12)))


def broken_action_value(model: HamiltonianModel, tau: float, t: float, q0, q1,
                        nodes, sigma_eff=None, step_target=None) -> float:
    """Total action of the chain through ``nodes`` (uniform time slots)."""
    q0 = np.atleast_1d(np.asarray(q0, float))
    q1 = np.atleast_1d(np.asarray(q1, float))
    nodes = np.asarray(nodes, float).reshape(-1, model.d)
    pts = np.concatenate([q0[None], nodes, q1[None]])
    n = len(pts) - 1
    dt = (t - tau) / n
    total = 0.0
    from .generating import TARGET_STEP
    st = step_target or TARGET_STEP
    for i in range(n):
        S, _, _, _, _ = generating_batch(model, tau + i * dt, tau + (i + 1) * dt,
                                         pts[i], pts[i + 1], sigma_eff=sigma_eff,
                                         step_target=st)
        total += float(S)
    return total


def _second_blocks(model, ta, tb, A, pa, step_target):
    """Hessian blocks d11 S and d00 S of the segment starting at (A, pa)."""
    d = model.d
    n = _steps_for(tb - ta, step_target)
    _, _, Mono, _, _ = integrate_batch(model, ta, tb, A, pa, n, want_monodromy=True)
    dqQ = Mono[..., :d, :d]
    dpQ = Mono[..., :d, d:]
    dpP = Mono[..., d:, d:]
    if d == 1:
        b = dpQ[..., 0, 0]
        b = np.where(np.abs(b) < 1e-14, 1e-14, b)
        d11 = (dpP[..., 0, 0] / b)[..., None, None]
        d00 = (dqQ[..., 0, 0] / b)[..., None, None]
        return d11, d00
    dpQ_inv = np.linalg.inv(dpQ)
    d11 = dpP @ dpQ_inv
    d00 = np.swapaxes(dqQ, -1, -2) @ np.linalg.inv(np.swapaxes(dpQ, -1, -2))
    return d11, d00


def _relax_chain(model, tau, t, pts, sigma_eff, step_target, max_sweeps,
                 tol_crit, inner_iters=2):
    """Block-coordinate descent on the chain; ``pts`` has endpoints included.

    Shapes: ``pts`` is (B, n+1, d).  Returns updated pts and the final
    momentum-jump magnitudes (B, n-1).
    """
    Bsz, n_plus, d = pts.shape
    n = n_plus - 1
    dt = (t - tau) / n
    if n == 1:
        return pts, np.zeros((Bsz, 0))

    def update_color(color):
        idx = np.arange(1 + color, n, 2)
        if len(idx) == 0:
            return
        for _ in range(inner_iters):
            prev = pts[:, idx - 1].reshape(-1, d)
            cur = pts[:, idx].reshape(-1, d)
            nxt = pts[:, idx + 1].reshape(-1, d)
            pa, _ = shoot_batch(model, 0.0, dt, prev, cur, sigma_eff=sigma_eff,
                                check_sigma=False, step_target=step_target)
            pb, _ = shoot_batch(model, 0.0, dt, cur, nxt, sigma_eff=sigma_eff,
                                check_sigma=False, step_target=step_target)
            nseg = _steps_for(dt, step_target)
            _, Pa_end, _, _, _ = integrate_batch(model, 0.0, dt, prev, pa, nseg)
            grad = Pa_end - pb
            d11, _ = _second_blocks(model, 0.0, dt, prev, pa, step_target)
            _, d00b = _second_blocks(model, 0.0, dt, cur, pb, step_target)
            hess = d11 + d00b
            if d == 1:
                hval = np.maximum(hess[..., 0, 0], 1e-8)
                step = grad[..., 0] / hval
                step = np.clip(step, -0.5 * np.abs(dt) * 10 - 0.5, 0.5 * np.abs(dt) * 10 + 0.5)
                cur_new = cur[..., 0] - step
                pts[:, idx, 0] = cur_new.reshape(Bsz, len(idx))
            else:
                w = np.linalg.eigvalsh(hess)
                shift = np.maximum(1e-8 - w[..., 0], 0.0)
                hess = hess + shift[..., None, None] * np.eye(d)
                step = np.linalg.solve(hess, grad[..., None])[..., 0]
                pts[:, idx, :] = (cur - step).reshape(Bsz, len(idx), d)

    jumps = _chain_jumps(model, tau, t, pts, sigma_eff, step_target)[2]
    if np.max(jumps, initial=0.0) <= tol_crit:
        return pts, jumps
    coord_sweeps = min(max_sweeps, 3)
    for sweep in range(coord_sweeps):
        if not model.autonomous:
            # non-autonomous segments live in distinct time slots: plain loop
            for k in range(1, n):
                ta, tm, tb = tau + (k - 1) * dt, tau + k * dt, tau + (k + 1) * dt
                for _ in range(inner_iters):
                    pa, _ = shoot_batch(model, ta, tm, pts[:, k - 1], pts[:, k],
                                        sigma_eff=sigma_eff, check_sigma=False,
                                        step_target=step_target)
                    pb, _ = shoot_batch(model, tm, tb, pts[:, k], pts[:, k + 1],
                                        sigma_eff=sigma_eff, check_sigma=False,
                                        step_target=step_target)
                    nseg = _steps_for(dt, step_target)
                    _, Pa_end, _, _, _ = integrate_batch(model, ta, tm, pts[:, k - 1], pa, nseg)
                    grad = Pa_end - pb
                    d11, _ = _second_blocks(model, ta, tm, pts[:, k - 1], pa, step_target)
                    _, d00b = _second_blocks(model, tm, tb, pts[:, k], pb, step_target)
                    hval = np.maximum((d11 + d00b)[..., 0, 0], 1e-8)
                    pts[:, k, 0] -= grad[..., 0] / hval
        else:
            update_color(0)
            update_color(1)
        jumps = _chain_jumps(model, tau, t, pts, sigma_eff, step_target)[2]
        if np.max(jumps, initial=0.0) <= tol_crit:
            break
    # quadratic tail: damped Newton on the whole chain (tridiagonal Hessian);
    # coordinate sweeps alone contract too slowly on long chains
    if np.max(jumps, initial=0.0) > tol_crit:
        pts, jumps = _newton_chain(model, tau, t, pts, sigma_eff, step_target,
                                   tol_crit, max_iter=max_sweeps)
    return pts, jumps


def _segment_full(model, tau, t, pts, sigma_eff, step_target):
    """Per-segment momenta and monodromy blocks along the chain.

    Returns ``(rho0, rho1, A, B, D)`` with shapes (Bsz, n, d...), where
    A, B, D are the dqQ, dpQ, dpP blocks of each segment's differential.
    """
    Bsz, n_plus, d = pts.shape
    n = n_plus - 1
    dt = (t - tau) / n

    def one(ta, tb, a, b):
        p0, _ = shoot_batch(model, ta, tb, a, b, sigma_eff=sigma_eff,
                            check_sigma=False, step_target=step_target)
        _, p1, Mono, _, _ = integrate_batch(model, ta, tb, a, p0,
                                            _steps_for(tb - ta, step_target),
                                            want_monodromy=True)
        return p0, p1, Mono[..., :d, :d], Mono[..., :d, d:], Mono[..., d:, d:]

    if model.autonomous:
        a = pts[:, :-1].reshape(-1, d)
        b = pts[:, 1:].reshape(-1, d)
        p0, p1, Ab, Bb, Db = one(0.0, dt, a, b)
        shp = (Bsz, n)
        return (p0.reshape(shp + (d,)), p1.reshape(shp + (d,)),
                Ab.reshape(shp + (d, d)), Bb.reshape(shp + (d, d)),
                Db.reshape(shp + (d, d)))
    p0 = np.empty((Bsz, n, d)); p1 = np.empty((Bsz, n, d))
    Ab = np.empty((Bsz, n, d, d)); Bb = np.empty((Bsz, n, d, d)); Db = np.empty((Bsz, n, d, d))
    for i in range(n):
        out = one(tau + i * dt, tau + (i + 1) * dt, pts[:, i], pts[:, i + 1])
        p0[:, i], p1[:, i], Ab[:, i], Bb[:, i], Db[:, i] = out
    return p0, p1, Ab, Bb, Db


def _thomas_batch(diag, off, rhs):
    """Solve symmetric tridiagonal systems, vectorized over the batch axis.

    ``diag``: (B, m), ``off``: (B, m-1) couples j and j+1, ``rhs``: (B, m).
    Returns None entries where a pivot is nonpositive (indefinite Hessian).
    """
    B, m = diag.shape
    c = np.zeros((B, max(m - 1, 0)))
    dvec = np.empty((B, m))
    x = np.empty((B, m))
    piv = diag[:, 0].copy()
    ok = piv > 1e-14
    dvec[:, 0] = rhs[:, 0]
    pivs = [piv]
    for j in range(1, m):
        w = off[:, j - 1] / pivs[j - 1]
        c[:, j - 1] = w
        piv = diag[:, j] - w * off[:, j - 1]
        ok &= piv > 1e-14
        pivs.append(piv)
        dvec[:, j] = rhs[:, j] - w * dvec[:, j - 1]
    x[:, m - 1] = dvec[:, m - 1] / pivs[m - 1]
    for j in range(m - 2, -1, -1):
        x[:, j] = (dvec[:, j] - off[:, j] * x[:, j + 1]) / pivs[j]
    return x, ok


def _newton_chain(model, tau, t, pts, sigma_eff, step_target, tol_crit,
                  max_iter=30):
    """Damped Newton on the full chain (tridiagonal Hessian), d = 1 fast path."""
    Bsz, n_plus, d = pts.shape
    n = n_plus - 1
    if n < 2:
        return pts, np.zeros((Bsz, 0))
    for _ in range(max_iter):
        r0, r1, Ab, Bb, Db = _segment_full(model, tau, t, pts, sigma_eff, step_target)
        g = r1[:, :-1] - r0[:, 1:]
        gn = np.max(np.abs(g), axis=(1, 2))
        if np.all(gn <= tol_crit):
            break
        if d == 1:
            Bseg = Bb[..., 0, 0]
            Bseg = np.where(np.abs(Bseg) < 1e-14, 1e-14, Bseg)
            diag = Db[:, :-1, 0, 0] / Bseg[:, :-1] + Ab[:, 1:, 0, 0] / Bseg[:, 1:]
            off = -1.0 / Bseg[:, 1:-1]
            shift = np.zeros(Bsz)
            for _reg in range(4):
                delta, ok = _thomas_batch(diag + shift[:, None], off, g[..., 0])
                if ok.all():
                    break
                shift = np.where(ok, shift, np.maximum(2 * shift, 1.0))
            delta = delta[..., None]
        else:
            delta = np.empty_like(g)
            for bi in range(Bsz):
                m = n - 1
                diag_b = [Db[bi, j] @ np.linalg.inv(Bb[bi, j])
                          + np.swapaxes(Ab[bi, j + 1], -1, -2)
                          @ np.linalg.inv(np.swapaxes(Bb[bi, j + 1], -1, -2))
                          for j in range(m)]
                off_b = [-np.linalg.inv(Bb[bi, j + 1]) for j in range(m - 1)]
                Hfull = np.zeros((m * d, m * d))
                for j in range(m):
                    Hfull[j * d:(j + 1) * d, j * d:(j + 1) * d] = diag_b[j]
                    if j < m - 1:
                        Hfull[j * d:(j + 1) * d, (j + 1) * d:(j + 2) * d] = off_b[j]
                        Hfull[(j + 1) * d:(j + 2) * d, j * d:(j + 1) * d] = off_b[j].T
                w = np.linalg.eigvalsh((Hfull + Hfull.T) / 2).min()
                if w < 1e-10:
                    Hfull += (1e-10 - w) * np.eye(m * d)
                delta[bi] = np.linalg.solve(Hfull, g[bi].ravel()).reshape(m, d)
        lam = np.ones(Bsz)
        active = gn > tol_crit
        for _bt in range(10):
            pts_try = pts.copy()
            pts_try[:, 1:-1] -= (lam * active)[:, None, None] * delta
            _, _, jt = _chain_jumps(model, tau, t, pts_try, sigma_eff, step_target)
            gt = np.max(jt, axis=1)
            ok = (gt <= (1 - 0.25 * lam) * gn) | ~active
            if ok.all():
                break
            lam = np.where(ok, lam, lam * 0.5)
        improve = (gt < gn) & active
        pts[improve] = pts_try[improve]
        if not improve.any():
            break
    _, _, jumps = _chain_jumps(model, tau, t, pts, sigma_eff, step_target)
    return pts, jumps


def _chain_jumps(model, tau, t, pts, sigma_eff, step_target):
    """Segment momenta of the chain: (p_minus, p_plus, |jump|) at interior nodes."""
    Bsz, n_plus, d = pts.shape
    n = n_plus - 1
    dt = (t - tau) / n
    if model.autonomous:
        a = pts[:, :-1].reshape(-1, d)
        b = pts[:, 1:].reshape(-1, d)
        p0, _ = shoot_batch(model, 0.0, dt, a, b, sigma_eff=sigma_eff,
                            check_sigma=False, step_target=step_target)
        _, p1, _, _, _ = integrate_batch(model, 0.0, dt, a, p0, _steps_for(dt, step_target))
        p0 = p0.reshape(Bsz, n, d)
        p1 = p1.reshape(Bsz, n, d)
    else:
        p0 = np.empty((Bsz, n, d))
        p1 = np.empty((Bsz, n, d))
        for i in range(n):
            ta, tb = tau + i * dt, tau + (i + 1) * dt
            pi, _ = shoot_batch(model, ta, tb, pts[:, i], pts[:, i + 1],
                                sigma_eff=sigma_eff, check_sigma=False,
                                step_target=step_target)
            _, pe, _, _, _ = integrate_batch(model, ta, tb, pts[:, i], pi,
                                             _steps_for(dt, step_target))
            p0[:, i] = pi
            p1[:, i] = pe
    p_minus = p1[:, :-1]
    p_plus = p0[:, 1:]
    jumps = np.linalg.norm(p_minus - p_plus, axis=-1)
    return p_minus, p_plus, jumps


def _chain_value(model, tau, t, pts, sigma_eff, step_target):
    Bsz, n_plus, d = pts.shape
    n = n_plus - 1
    dt = (t - tau) / n
    if model.autonomous:
        a = pts[:, :-1].reshape(-1, d)
        b = pts[:, 1:].reshape(-1, d)
        S, r0, _, _, _ = generating_batch(model, 0.0, dt, a, b, sigma_eff=sigma_eff,
                                          check_sigma=False, step_target=step_target)
        return S.reshape(Bsz, n).sum(axis=1), r0.reshape(Bsz, n, d)[:, 0]
    total = np.zeros(Bsz)
    rho0 = None
    for i in range(n):
        S, r0, _, _, _ = generating_batch(model, tau + i * dt, tau + (i + 1) * dt,
                                          pts[:, i], pts[:, i + 1], sigma_eff=sigma_eff,
                                          check_sigma=False, step_target=step_target)
        total += S
        if i == 0:
            rho0 = r0
    return total, rho0


def minimal_action_batch(model: HamiltonianModel, tau: float, t: float, Q0, Q1,
                         sigma_eff=None, n: Optional[int] = None,
                         init_nodes: Optional[np.ndarray] = None,
                         step_target: float = KERNEL_STEP, max_sweeps: int = 12,
                         tol_crit: Optional[float] = None):
    """Relax one chain per batch entry from a single start.

    Returns ``(values, pts, jumps, rho0)`` where ``pts`` includes endpoints.
    """
    sig = resolve_sigma(model, sigma_eff)
    Q0 = np.asarray(Q0, float).reshape(-1, model.d)
    Q1 = np.asarray(Q1, float).reshape(-1, model.d)
    if n is None:
        n = default_segments(tau, t, sig)
    lam = np.linspace(0, 1, n + 1)
    pts = Q0[:, None, :] + lam[None, :, None] * (Q1 - Q0)[:, None, :]
    if init_nodes is not None and n > 1:
        pts[:, 1:-1, :] = init_nodes
    if tol_crit is None:
        scale = 1.0 + np.max(np.linalg.norm(Q1 - Q0, axis=1)) / max(t - tau, 1e-12)
        tol_crit = TOL_CRIT_BASE * scale
    pts, jumps = _relax_chain(model, tau, t, pts, sig, step_target, max_sweeps, tol_crit)
    values, rho0 = _chain_value(model, tau, t, pts, sig, step_target)
    return values, pts, jumps, rho0


def minimal_action(model: HamiltonianModel, tau: float, t: float, q0, q1,
                   sigma_eff=None, n: Optional[int] = None, restarts: int = 5,
                   warm_start: Optional[np.ndarray] = None, seed: int = 0,
                   step_target: float = 2e-3, max_sweeps: int = 25):
    """Minimal action ``A_tau^t(q0, q1)`` with its reconstructed chain.

    Multistarts: straight-line interpolation, an optional warm start from a
    neighboring problem, and seeded random perturbations.  Raises
    MultistartExhausted when the restarts disagree beyond tolerance and
    none meets the momentum-jump criterion.
    """
    if t <= tau:
        raise ConfigError("minimal_action requires t > tau")
    sig = resolve_sigma(model, sigma_eff)
    q0 = np.atleast_1d(np.asarray(q0, float))
    q1 = np.atleast_1d(np.asarray(q1, float))
    if n is None:
        n = default_segments(tau, t, sig)
    d = model.d
    lam = np.linspace(0, 1, n + 1)
    straight = q0[None, :] + lam[:, None] * (q1 - q0)[None, :]

    starts = [straight]
    if warm_start is not None and n > 1:
        w = np.asarray(warm_start, float).reshape(-1, d)
        if len(w) == n - 1:
            starts.append(np.concatenate([q0[None], w, q1[None]]))
    if d == 1 and n > 3 and t - tau > 2 * sig:
        lo = min(q0[0], q1[0]) - 1.0
        hi = max(q0[0], q1[0]) + 1.0
        for c in waypoint_curves(q0[0], q1[0], np.linspace(0, 1, n + 1),
                                 np.linspace(lo, hi, 7)):
            starts.append(c[:, None])
    rng = np.random.default_rng(seed)
    amp = 0.25 * (1.0 + float(np.linalg.norm(q1 - q0)))
    n_random = max(0, restarts - 1)
    for _ in range(n_random):
        pert = straight.copy()
        if n > 1:
            bump = rng.normal(0.0, amp, (n - 1, d))
            taper = np.sin(np.pi * lam[1:-1])[:, None]
            pert[1:-1] += bump * taper
        starts.append(pert)
    pts = np.stack(starts)

    scale = 1.0 + float(np.linalg.norm(q1 - q0)) / max(t - tau, 1e-12)
    tol_crit = TOL_CRIT_BASE * scale
    pts, jumps = _relax_chain(model, tau, t, pts, sig, step_target, max_sweeps, tol_crit)
    values, rho0s = _chain_value(model, tau, t, pts, sig, step_target)
    ok = (jumps.max(axis=1, initial=0.0) <= tol_crit) if n > 1 else np.ones(len(pts), bool)
    tol_A = TOL_A_BASE * (1.0 + float(np.abs(values).max()))
    if not ok.any():
        if values.max() - values.min() > tol_A:
            raise MultistartExhausted(
                f"restarts disagree by {values.max() - values.min():.3e} and none "
                f"meets the jump criterion (worst jump {jumps.max():.3e})")
        ok = np.ones(len(pts), bool)
    cand = np.where(ok, values, np.inf)
    best = int(np.argmin(cand))
    p_minus, p_plus, jump_best = _chain_jumps(model, tau, t, pts[best][None],
                                              sig, step_target)
    path = BrokenPath(tau=tau, t=t, q0=q0, q1=q1, nodes=pts[best, 1:-1].copy(), n=n,
                      value=float(values[best]), momentum_jumps=jump_best[0],
                      rho0=rho0s[best], p_minus=p_minus[0], p_plus=p_plus[0])
    return float(values[best]), path


def reconstruct_trajectory(model: HamiltonianModel, path: BrokenPath,
                           step: float = 1e-3):
    """Stitch the chain's orbit segments into one sampled trajectory.

    Each segment integrates from its own stored initial momentum, so the
    reconstruction stays accurate over horizons where a single shot from
    ``rho0`` would be destroyed by hyperbolic error growth.
    """
    from .flow import integrate_flow
    n = path.n
    dt = (path.t - path.tau) / n
    pts = np.concatenate([path.q0[None], path.nodes.reshape(-1, model.d),
                          path.q1[None]])
    starts = [path.rho0] + [path.p_plus[i] for i in range(n - 1)]
    times, Q, P = [], [], []
    for i in range(n):
        seg = integrate_flow(model, (pts[i], starts[i]), path.tau + i * dt,
                             path.tau + (i + 1) * dt, step=step)
        s = 0 if i == 0 else 1
        times.append(seg.times[s:])
        Q.append(seg.Q[s:])
        P.append(seg.P[s:])
    times = np.concatenate(times)
    Q = np.concatenate(Q)
    P = np.concatenate(P)
    from .flow import Trajectory
    energy = np.asarray(model.value(times, Q, P), float)
    return Trajectory(times=times, Q=Q, P=P, energy=energy)


def action_bounds(model: HamiltonianModel, tau: float, t: float, q0, q1):
    """A-priori bracket ``[|dq|^2/(2 M dt) - M dt, |dq|^2/(2 m dt) + M dt]``."""
    dq = float(np.linalg.norm(np.atleast_1d(np.asarray(q1, float))
                              - np.atleast_1d(np.asarray(q0, float))))
    dt = t - tau
    return (dq * dq / (2 * model.M * dt) - model.M * dt,
            dq * dq / (2 * model.m * dt) + model.M * dt)


def lagrangian_action(model: HamiltonianModel, times, curve) -> float:
    """Midpoint-rule Lagrangian action of a piecewise-linear curve."""
    times = np.asarray(times, float)
    curve = np.asarray(curve, float)
    if curve.ndim == 1:
        curve = curve[:, None]
    if len(times) != len(curve):
        raise ConfigError("times and curve must have equal length")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be increasing")
    dt = np.diff(times)
    mid_t = times[:-1] + dt / 2
    mid_q = (curve[1:] + curve[:-1]) / 2
    v = (curve[1:] - curve[:-1]) / dt[:, None]
    L, _ = legendre_batch(model, mid_t if not model.autonomous else 0.0, mid_q, v)
    return float(np.sum(L * dt))


def _discrete_action_and_grad(model, tau, t, q0, q1, theta, n):
    d = model.d
    h = (t - tau) / n
    pts = np.concatenate([q0[None], theta.reshape(n - 1, d), q1[None]])
    mid_t = tau + h * (np.arange(n) + 0.5)
    mid_q = (pts[1:] + pts[:-1]) / 2
    v = (pts[1:] - pts[:-1]) / h
    tt = mid_t if not model.autonomous else 0.0
    L, p_star = legendre_batch(model, tt, mid_q, v)
    Hq, _ = model.grad(tt, mid_q, p_star)
    Lq = -Hq
    value = float(np.sum(L) * h)
    # d/d theta_k: h/2 (Lq_k-1 + Lq_k) + (p*_{k-1} - p*_k)
    grad = 0.5 * h * (Lq[:-1] + Lq[1:]) + (p_star[:-1] - p_star[1:])
    return value, grad.ravel()


def waypoint_curves(q0, q1, lam, waypoints):
    """Travel-hold-travel initial curves through each waypoint (d = 1)."""
    curves = []
    for w in waypoints:
        c = np.empty(len(lam))
        leg1 = lam <= 0.25
        hold = (lam > 0.25) & (lam < 0.75)
        leg2 = lam >= 0.75
        c[leg1] = q0 + (lam[leg1] / 0.25) * (w - q0)
        c[hold] = w
        c[leg2] = w + ((lam[leg2] - 0.75) / 0.25) * (q1 - w)
        curves.append(c)
    return curves


def tonelli_oracle(model: HamiltonianModel, tau: float, t: float, q0, q1,
                   n_segments: int = 200, restarts: int = 3, seed: int = 0,
                   maxiter: int = 200) -> float:
    """Brute-force minimal Lagrangian action over discrete Lipschitz curves.

    Deliberately independent of the generating/action pipeline: uniform
    time grid, forward-difference velocities, limited-memory quasi-Newton.
    Starts cover the straight line, travel-hold-travel curves through a
    spread of waypoints (long horizons reward parking in cheap regions),
    and seeded random perturbations.
    """
    if n_segments < 2:
        raise ConfigError("tonelli oracle needs n_segments >= 2")
    d = model.d
    q0 = np.atleast_1d(np.asarray(q0, float))
    q1 = np.atleast_1d(np.asarray(q1, float))
    n = n_segments
    lam = np.linspace(0, 1, n + 1)[1:-1]
    straight = (q0[None, :] + lam[:, None] * (q1 - q0)[None, :]).ravel()
    starts = [straight]
    if d == 1:
        lo = min(q0[0], q1[0]) - 1.0
        hi = max(q0[0], q1[0]) + 1.0
        for c in waypoint_curves(q0[0], q1[0], lam, np.linspace(lo, hi, 9)):
            starts.append(c)
    rng = np.random.default_rng(seed)
    for _ in range(max(0, restarts - 1)):
        taper = np.sin(np.pi * lam)
        starts.append(straight + (rng.normal(0.0, 0.3 * (1 + np.linalg.norm(q1 - q0)),
                                             (n - 1, d)) * taper[:, None]).ravel())
    best = np.inf
    for x0 in starts:
        out = minimize(lambda x: _discrete_action_and_grad(model, tau, t, q0, q1, x, n),
                       x0, jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "ftol": 1e-14, "gtol": 1e-12})
        best = min(best, float(out.fun))
    return best


def triangle_check(model: HamiltonianModel, t0: float, t1: float, t2: float,
                   q0, q2, scan_grid, sigma_eff=None):
    """Evaluate both sides of the concatenation identity on a scan grid.

    Returns ``(lhs, rhs_min, rhs_values)`` for
    ``A_{t0}^{t2}(q0, q2)`` versus ``min_q A_{t0}^{t1}(q0, q) + A_{t1}^{t2}(q, q2)``.
    """
    if not (t0 < t1 < t2):
        raise ConfigError("need t0 < t1 < t2")
    q0 = np.atleast_1d(np.asarray(q0, float))
    q2 = np.atleast_1d(np.asarray(q2, float))
    grid = np.asarray(scan_grid, float).reshape(-1, model.d)
    lhs, _ = minimal_action(model, t0, t2, q0, q2, sigma_eff=sigma_eff)
    v1, _, _, _ = minimal_action_batch(model, t0, t1, np.broadcast_to(q0, grid.shape),
                                       grid, sigma_eff=sigma_eff)
    v2, _, _, _ = minimal_action_batch(model, t1, t2, grid,
                                       np.broadcast_to(q2, grid.shape),
                                       sigma_eff=sigma_eff)
    rhs = v1 + v2
    return float(lhs), float(np.min(rhs)), rhs
