"""Hamiltonian flow, variational (monodromy) equation, and twist checks.

The integrator is a classical explicit 4th-order one-step method applied
jointly to the state, the 2d x 2d monodromy matrix, and the running
Hamiltonian action, so derivative and action estimates share the state's
discretization.  All internals are vectorized over a leading batch axis;
the public API wraps single trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, TrajectoryEscape
from .hamiltonian import HamiltonianModel, check_hypotheses

DEFAULT_STEP = 1e-3
TOL_ENERGY = 1e-8
TOL_SYMP = 1e-7
TOL_ODE = 1e-6
OVERFLOW_GUARD = 1e8


@dataclass(frozen=True)
class PhaseState:
    """A point ``(q, p)`` of phase space."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.atleast_1d(np.asarray(self.q, float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, float)))
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ConfigError("phase state has non-finite components")


@dataclass
class Trajectory:
    """Sampled orbit with the Hamiltonian recorded along it."""

    times: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    energy: np.ndarray

    @property
    def terminal(self) -> PhaseState:
        return PhaseState(self.Q[-1], self.P[-1])

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def to_csv(self, path):
        d = self.Q.shape[1]
        header = "t," + ",".join(f"q_{k}" for k in range(d)) + "," + \
                 ",".join(f"p_{k}" for k in range(d)) + ",H"
        rows = [header]
        for i in range(len(self.times)):
            vals = [self.times[i], *self.Q[i], *self.P[i], self.energy[i]]
            rows.append(",".join(f"{v:.17g}" for v in vals))
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(rows) + "\n")


@dataclass
class MonodromyResult:
    """Blocks of the flow differential and its distance from the identity."""

    dqQ: np.ndarray
    dpQ: np.ndarray
    dqP: np.ndarray
    dpP: np.ndarray
    deviation: float

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.dqQ, self.dpQ], [self.dqP, self.dpP]])

    def symplectic_defect(self) -> float:
        d = self.dqQ.shape[0]
        J = np.block([[np.zeros((d, d)), np.eye(d)], [-np.eye(d), np.zeros((d, d))]])
        m = self.matrix
        return float(np.linalg.norm(m.T @ J @ m - J, 2))


def _variational_matrix(model, t, Q, P):
    Hqq, Hqp, Hpp = model.hessian(t, Q, P)
    top = np.concatenate([np.swapaxes(Hqp, -1, -2), Hpp], axis=-1)
    bot = np.concatenate([-Hqq, -Hqp], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _stage(model, t, Q, P, Mono, want_action):
    if model.rhs is not None:
        dQ, dP = model.rhs(t, Q, P)
    else:
        Hq, Hp = model.grad(t, Q, P)
        dQ, dP = Hp, -Hq
    dM = None
    if Mono is not None:
        A = _variational_matrix(model, t, Q, P)
        dM = A @ Mono
    dW = None
    if want_action:
        if model.action_rate is not None:
            dW = model.action_rate(t, Q, P)
        else:
            Hq, Hp = model.grad(t, Q, P)
            dW = np.sum(P * Hp, axis=-1) - model.value(t, Q, P)
    return dQ, dP, dM, dW


def _exact_quadratic_flow(model, tau, t, Q0, P0, want_monodromy, want_action):
    """Closed-form flow for ``H = a |p|^2 / 2``: straight lines."""
    a = model.params[0]
    span = t - tau
    Q = np.asarray(Q0, float) + span * a * np.asarray(P0, float)
    P = np.array(P0, float, copy=True)
    d = model.d
    shape = Q.shape[:-1]
    Mono = None
    if want_monodromy:
        m1 = np.eye(2 * d)
        m1[:d, d:] = span * a * np.eye(d)
        Mono = np.broadcast_to(m1, shape + (2 * d, 2 * d)).copy()
    W = 0.5 * a * span * np.sum(P * P, axis=-1) if want_action else None
    return Q, P, Mono, W, np.zeros(shape, bool)


def integrate_batch(model: HamiltonianModel, tau: float, t: float, Q0, P0,
                    n_steps: int, want_monodromy: bool = False,
                    want_action: bool = False, guard: Optional[float] = None):
    """Integrate a batch of initial conditions from ``tau`` to ``t``.

    Returns ``(Q, P, Mono, W, escaped)``; ``Mono`` has shape
    ``(..., 2d, 2d)`` and ``W`` the accumulated action when requested.
    ``escaped`` marks batch entries whose norm passed ``guard`` (their
    remaining evolution is frozen).
    """
    if model.family in ("free", "quadratic"):
        return _exact_quadratic_flow(model, tau, t, Q0, P0, want_monodromy, want_action)
    Q = np.array(Q0, float, copy=True)
    P = np.array(P0, float, copy=True)
    d = model.d
    shape = Q.shape[:-1]
    Mono = None
    if want_monodromy:
        Mono = np.broadcast_to(np.eye(2 * d), shape + (2 * d, 2 * d)).copy()
    W = np.zeros(shape) if want_action else None
    escaped = np.zeros(shape, bool)

    h = (t - tau) / n_steps
    s = tau
    for _ in range(n_steps):
        k1 = _stage(model, s, Q, P, Mono, want_action)
        k2 = _stage(model, s + h / 2, Q + h / 2 * k1[0], P + h / 2 * k1[1],
                    None if Mono is None else Mono + h / 2 * k1[2], want_action)
        k3 = _stage(model, s + h / 2, Q + h / 2 * k2[0], P + h / 2 * k2[1],
                    None if Mono is None else Mono + h / 2 * k2[2], want_action)
        k4 = _stage(model, s + h, Q + h * k3[0], P + h * k3[1],
                    None if Mono is None else Mono + h * k3[2], want_action)
        dQ = (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) * (h / 6)
        dP = (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) * (h / 6)
        if guard is not None and escaped.any():
            live = ~escaped
            Q[live] += dQ[live]
            P[live] += dP[live]
        else:
            Q += dQ
            P += dP
        if Mono is not None:
            Mono += (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]) * (h / 6)
        if W is not None:
            dW = (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]) * (h / 6)
            W = np.where(escaped, W, W + dW) if guard is not None else W + dW
        s += h
        if guard is not None:
            over = (np.max(np.abs(Q), axis=-1) > guard) | (np.max(np.abs(P), axis=-1) > guard)
            escaped |= over
    return Q, P, Mono, W, escaped


def _n_steps(tau, t, step):
    span = abs(t - tau)
    if span == 0:
        return 1
    h = DEFAULT_STEP if step is None else float(step)
    return max(1, int(np.ceil(span / h - 1e-12)))


def integrate_flow(model: HamiltonianModel, x0, tau: float, t: float,
                   step: Optional[float] = None) -> Trajectory:
    """Flow ``x0`` from time ``tau`` to ``t`` (backward when ``t < tau``)."""
    if not isinstance(x0, PhaseState):
        x0 = PhaseState(*x0)
    n = _n_steps(tau, t, step)
    h = (t - tau) / n
    times = tau + h * np.arange(n + 1)
    Q = np.empty((n + 1, model.d))
    P = np.empty((n + 1, model.d))
    Q[0], P[0] = x0.q, x0.p
    for i in range(n):
        out = integrate_batch(model, times[i], times[i + 1], Q[i], P[i], 1)
        Q[i + 1], P[i + 1] = out[0], out[1]
        norm = max(np.max(np.abs(Q[i + 1])), np.max(np.abs(P[i + 1])))
        if norm > OVERFLOW_GUARD:
            raise TrajectoryEscape(f"trajectory escaped at t={times[i + 1]:.6g}",
                                   exit_time=float(times[i + 1]))
    energy = np.asarray(model.value(times, Q, P), float)
    return Trajectory(times=times, Q=Q, P=P, energy=energy)


def operator_norm(A: np.ndarray, iters: int = 30) -> float:
    """Spectral norm by power iteration on ``A^T A`` (d is small)."""
    A = np.asarray(A, float)
    n = A.shape[1]
    v = np.ones(n) / np.sqrt(n)
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(A @ v))


def monodromy(model: HamiltonianModel, x0, tau: float, t: float,
              step: Optional[float] = None) -> MonodromyResult:
    """Differential of the flow map along the orbit of ``x0``."""
    if not isinstance(x0, PhaseState):
        x0 = PhaseState(*x0)
    n = _n_steps(tau, t, step)
    Q, P, Mono, _, _ = integrate_batch(model, tau, t, x0.q, x0.p, n, want_monodromy=True)
    if np.max(np.abs(Q)) > OVERFLOW_GUARD or np.max(np.abs(P)) > OVERFLOW_GUARD:
        raise TrajectoryEscape("trajectory escaped during monodromy integration")
    d = model.d
    dev = operator_norm(Mono - np.eye(2 * d))
    return MonodromyResult(dqQ=Mono[:d, :d].copy(), dpQ=Mono[:d, d:].copy(),
                           dqP=Mono[d:, :d].copy(), dpP=Mono[d:, d:].copy(),
                           deviation=dev)


def sigma_bound(model: HamiltonianModel, use_empirical: bool = False,
                report=None) -> float:
    """Guaranteed twist window ``m / (4 M^2)`` from declared or sampled constants."""
    if use_empirical:
        if report is None:
            report = check_hypotheses(model)
        m, M = report.m_emp, report.M_emp
    else:
        m, M = model.m, model.M
    if m <= 0 or M <= 0:
        raise ConfigError("sigma bound needs positive constants")
    return m / (4.0 * M * M)


def check_twist(model: HamiltonianModel, q, t: float, p_box=(-4.0, 4.0),
                n_samples: int = 1000, seed: int = 0,
                step: Optional[float] = None) -> float:
    """Sampled margin of the ``(m t / 2)``-monotonicity of ``p -> Q_0^t(q, p)``.

    Nonnegative margin certifies the twist estimate on the sample; it is
    never a proof.
    """
    if t <= 0:
        raise ConfigError("twist check needs t > 0")
    d = model.d
    q = np.broadcast_to(np.atleast_1d(np.asarray(q, float)), (d,))
    rng = np.random.default_rng(seed)
    lo, hi = p_box
    pa = rng.uniform(lo, hi, (n_samples, d))
    pb = rng.uniform(lo, hi, (n_samples, d))
    # half the pairs probe locally: p' = p + small increment
    half = n_samples // 2
    pb[:half] = pa[:half] + rng.uniform(-0.05, 0.05, (half, d))
    keep = np.linalg.norm(pb - pa, axis=1) > 1e-12
    pa, pb = pa[keep], pb[keep]
    Q0 = np.broadcast_to(q, pa.shape)
    n = max(1, int(np.ceil(t / (DEFAULT_STEP * 5 if step is None else step))))
    Qa = integrate_batch(model, 0.0, t, Q0, pa, n)[0]
    Qb = integrate_batch(model, 0.0, t, Q0, pb, n)[0]
    dp = pb - pa
    quot = np.sum((Qb - Qa) * dp, axis=1) / np.sum(dp * dp, axis=1)
    return float(np.min(quot) - model.m * t / 2.0)


@dataclass(frozen=True)
class TwistWindow:
    """A twist window verified by sampling, usable as sigma_eff downstream."""

    t: float
    margin: float
    p_box: tuple
    n_samples: int
    seed: int

    def __float__(self):
        return self.t

    def to_dict(self):
        return {"t": self.t, "margin": self.margin, "p_box": list(self.p_box),
                "n_samples": self.n_samples, "seed": self.seed}


def certify_sigma(model: HamiltonianModel, t: float, q=None, p_box=(-4.0, 4.0),
                  n_samples: int = 1000, seed: int = 0) -> TwistWindow:
    """Run a twist scan at horizon ``t``; raise if the margin is negative."""
    if q is None:
        q = np.zeros(model.d)
    margins = []
    qs = [q] if np.ndim(q) <= 1 else list(q)
    for qq in qs:
        margins.append(check_twist(model, qq, t, p_box=p_box,
                                   n_samples=n_samples, seed=seed))
    margin = float(min(margins))
    if margin < 0:
        raise ConfigError(f"twist margin {margin:.3e} < 0 at t={t}; window not certified")
    return TwistWindow(t=float(t), margin=margin, p_box=tuple(p_box),
                       n_samples=n_samples, seed=seed)


def default_sigma_eff(model: HamiltonianModel, seed: int = 0) -> TwistWindow:
    """Certified working window: try a frequency-scaled candidate, halving on failure."""
    report = check_hypotheses(model, seed=seed)
    cand = min(1.0, 0.8 * np.pi / (2.0 * np.sqrt(max(report.M_emp, 1.0))))
    cand = max(cand, sigma_bound(model))
    for _ in range(6):
        try:
            return certify_sigma(model, cand, seed=seed)
        except ConfigError:
            cand *= 0.5
    return certify_sigma(model, sigma_bound(model), seed=seed)


def resolve_sigma(model: HamiltonianModel, sigma_eff) -> float:
    """Working twist window as a float: formula default, or explicit override."""
    if sigma_eff is None:
        return sigma_bound(model)
    return float(sigma_eff)
