"""Hamiltonian models, standing-hypothesis checks, and the Legendre transform.

A model bundles a vectorized evaluator ``H(t, q, p)`` with its first and
second derivatives in ``(q, p)``, the declared convexity/bound constants
``m`` and ``M``, and the periodicity/autonomy flags used downstream.
Built-in families (free kinetic, scaled quadratic, mechanical with a
trigonometric-polynomial potential, and a time-forced variant) all carry
analytic derivatives; models built from user callables fall back to central
finite differences with step ``h_fd``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NumericalDomain, SolverDiverged

DEFAULT_H_FD = 1e-5
TOL_NEWTON = 1e-10
MAX_NEWTON_ITER = 50
TOL_HYP = 1e-6


@dataclass(frozen=True)
class HamiltonianModel:
    """Evaluable Hamiltonian with derivatives and declared constants.

    ``value``, ``grad`` and ``hessian`` accept arrays ``q, p`` of shape
    ``(..., d)`` (``t`` scalar or broadcastable) and return shapes
    ``(...)``, ``((..., d), (..., d))`` and ``((..., d, d),) * 3``.
    Instances are immutable; evaluation is pure and thread-safe.
    """

    d: int
    value: Callable
    grad: Callable
    hessian: Callable
    m: float
    M: float
    periodic: bool
    autonomous: bool
    q_homogeneous: bool = False
    h_fd: float = DEFAULT_H_FD
    family: str = "custom"
    params: tuple = ()
    # optional fused callables for the integrator hot path
    rhs: Optional[Callable] = None
    action_rate: Optional[Callable] = None

    def cache_key(self) -> tuple:
        if self.family == "custom":
            return ("custom", id(self))
        return (self.family, self.d, self.params)

    def __repr__(self):
        return f"HamiltonianModel(family={self.family!r}, d={self.d}, m={self.m:g}, M={self.M:g})"


def _fd_grad_factory(value, d, h_fd):
    def grad(t, q, p):
        q = np.asarray(q, float)
        p = np.asarray(p, float)
        Hq = np.empty_like(q)
        Hp = np.empty_like(p)
        for k in range(d):
            hq = h_fd * (1.0 + np.abs(q[..., k]))
            hp = h_fd * (1.0 + np.abs(p[..., k]))
            eq = np.zeros(d)
            eq[k] = 1.0
            Hq[..., k] = (value(t, q + hq[..., None] * eq, p) - value(t, q - hq[..., None] * eq, p)) / (2 * hq)
            Hp[..., k] = (value(t, q, p + hp[..., None] * eq) - value(t, q, p - hp[..., None] * eq)) / (2 * hp)
        return Hq, Hp

    return grad


def _fd_hessian_factory(grad, d, h_fd):
    def hessian(t, q, p):
        q = np.asarray(q, float)
        p = np.asarray(p, float)
        shape = q.shape[:-1]
        Hqq = np.empty(shape + (d, d))
        Hqp = np.empty(shape + (d, d))
        Hpp = np.empty(shape + (d, d))
        for k in range(d):
            e = np.zeros(d)
            e[k] = 1.0
            hq = h_fd * (1.0 + np.abs(q[..., k]))[..., None]
            hp = h_fd * (1.0 + np.abs(p[..., k]))[..., None]
            gq_plus = grad(t, q + hq * e, p)
            gq_minus = grad(t, q - hq * e, p)
            gp_plus = grad(t, q, p + hp * e)
            gp_minus = grad(t, q, p - hp * e)
            # row k of each block: derivative of (Hq, Hp) in direction e_k
            Hqq[..., k, :] = (gq_plus[0] - gq_minus[0]) / (2 * hq)
            Hqp[..., k, :] = (gp_plus[0] - gp_minus[0]) / (2 * hp)
            Hpp[..., k, :] = (gp_plus[1] - gp_minus[1]) / (2 * hp)
        return Hqq, Hqp, Hpp

    return hessian


def custom_model(value, d, m, M, grad=None, hessian=None, periodic=False,
                 autonomous=True, q_homogeneous=False, h_fd=DEFAULT_H_FD):
    """Wrap user callables into a model, with finite-difference fallbacks."""
    if grad is None:
        grad = _fd_grad_factory(value, d, h_fd)
    if hessian is None:
        hessian = _fd_hessian_factory(grad, d, h_fd)
    return HamiltonianModel(d=d, value=value, grad=grad, hessian=hessian, m=m, M=M,
                            periodic=periodic, autonomous=autonomous,
                            q_homogeneous=q_homogeneous, h_fd=h_fd)


def quadratic_model(a: float = 1.0, d: int = 1) -> HamiltonianModel:
    """Kinetic Hamiltonian ``a |p|^2 / 2``; ``a = 1`` is the free model."""
    if a <= 0:
        raise ConfigError("quadratic model requires a > 0")

    def value(t, q, p):
        p = np.asarray(p, float)
        return 0.5 * a * np.sum(p * p, axis=-1)

    def grad(t, q, p):
        q = np.asarray(q, float)
        p = np.asarray(p, float)
        return np.zeros_like(q), a * p

    eye = np.eye(d)

    def hessian(t, q, p):
        shape = np.asarray(q, float).shape[:-1]
        z = np.zeros(shape + (d, d))
        return z, z.copy(), np.broadcast_to(a * eye, shape + (d, d)).copy()

    def rhs(t, q, p):
        return a * p, np.zeros_like(p)

    def action_rate(t, q, p):
        return 0.5 * a * np.sum(p * p, axis=-1)

    return HamiltonianModel(d=d, value=value, grad=grad, hessian=hessian, m=a, M=a,
                            periodic=True, autonomous=True, q_homogeneous=True,
                            family="quadratic", params=(float(a),),
                            rhs=rhs, action_rate=action_rate)


def free_model(d: int = 1) -> HamiltonianModel:
    """``|p|^2 / 2``."""
    model = quadratic_model(1.0, d)
    return HamiltonianModel(**{**model.__dict__, "family": "free"})


class TrigPolynomial:
    """1-d potential ``c0 + sum_k a_k cos(2 pi k q) + b_k sin(2 pi k q)``.

    Coefficients are packed ``[c0, a1, b1, a2, b2, ...]``.  Arguments are
    reduced mod 1 before evaluation so integer shifts are exact.
    """

    def __init__(self, coeffs):
        coeffs = list(np.asarray(coeffs, float).ravel())
        if len(coeffs) % 2 == 0:
            coeffs.append(0.0)
        self.coeffs = np.asarray(coeffs)
        self.c0 = self.coeffs[0]
        self.a = self.coeffs[1::2]
        self.b = self.coeffs[2::2]
        self.k = np.arange(1, len(self.a) + 1)
        self._has_b = bool(np.any(self.b != 0.0))
        self._single = len(self.a) == 1 and not self._has_b

    def _theta(self, q, reduce=True):
        q = np.asarray(q, float)
        if reduce:
            q = np.mod(q, 1.0)
        return (2 * np.pi) * q[..., None] * self.k

    def __call__(self, q, reduce=True):
        # argument reduction keeps integer shifts bitwise exact
        if self._single:
            qq = np.mod(np.asarray(q, float), 1.0) if reduce else np.asarray(q, float)
            return self.c0 + self.a[0] * np.cos((2 * np.pi) * qq)
        th = self._theta(q, reduce)
        out = self.c0 + np.cos(th) @ self.a
        if self._has_b:
            out = out + np.sin(th) @ self.b
        return out

    def deriv(self, q):
        if self._single:
            return (-2 * np.pi * self.a[0]) * np.sin((2 * np.pi) * np.asarray(q, float))
        th = self._theta(q, reduce=False)
        w = 2 * np.pi * self.k
        out = -np.sin(th) @ (w * self.a)
        if self._has_b:
            out = out + np.cos(th) @ (w * self.b)
        return out

    def second(self, q):
        if self._single:
            return (-4 * np.pi ** 2 * self.a[0]) * np.cos((2 * np.pi) * np.asarray(q, float))
        th = self._theta(q, reduce=False)
        w2 = (2 * np.pi * self.k) ** 2
        out = -np.cos(th) @ (w2 * self.a)
        if self._has_b:
            out = out - np.sin(th) @ (w2 * self.b)
        return out

    def max_curvature(self) -> float:
        return float(np.sum((2 * np.pi * self.k) ** 2 * (np.abs(self.a) + np.abs(self.b))))

    def bound(self) -> float:
        return float(abs(self.c0) + np.sum(np.abs(self.a) + np.abs(self.b)))


def mechanical_model(V_coeffs, m: Optional[float] = None, M: Optional[float] = None) -> HamiltonianModel:
    """``p^2/2 + V(q)`` on the circle, V a trigonometric polynomial (d = 1)."""
    V = TrigPolynomial(V_coeffs)
    declared_m = 1.0 if m is None else float(m)
    declared_M = max(1.0, V.max_curvature(), V.bound()) if M is None else float(M)

    def value(t, q, p):
        p = np.asarray(p, float)
        return 0.5 * np.sum(p * p, axis=-1) + V(np.asarray(q, float)[..., 0])

    def grad(t, q, p):
        q = np.asarray(q, float)
        p = np.asarray(p, float)
        return V.deriv(q[..., 0])[..., None], p.copy()

    def hessian(t, q, p):
        q = np.asarray(q, float)
        shape = q.shape[:-1]
        Hqq = V.second(q[..., 0]).reshape(shape + (1, 1))
        z = np.zeros(shape + (1, 1))
        return Hqq, z, np.ones(shape + (1, 1))

    def rhs(t, q, p):
        return p, -V.deriv(q[..., 0])[..., None]

    def action_rate(t, q, p):
        return 0.5 * np.sum(p * p, axis=-1) - V(q[..., 0], reduce=False)

    return HamiltonianModel(d=1, value=value, grad=grad, hessian=hessian,
                            m=declared_m, M=declared_M, periodic=True, autonomous=True,
                            family="mechanical", params=tuple(map(float, V.coeffs)),
                            rhs=rhs, action_rate=action_rate)


def pendulum_model() -> HamiltonianModel:
    """``p^2/2 + cos(2 pi q)``."""
    return mechanical_model([0.0, 1.0], m=1.0, M=4 * np.pi ** 2)


def forced_model(V_coeffs, epsilon: float = 0.2, m: Optional[float] = None,
                 M: Optional[float] = None) -> HamiltonianModel:
    """``p^2/2 + (1 + eps sin(2 pi t)) V(q)``: 1-periodic in time, d = 1."""
    V = TrigPolynomial(V_coeffs)
    eps = float(epsilon)
    declared_m = 1.0 if m is None else float(m)
    declared_M = max(1.0, (1 + abs(eps)) * max(V.max_curvature(), V.bound())) if M is None else float(M)

    def g(t):
        return 1.0 + eps * np.sin(2 * np.pi * np.asarray(t, float))

    def value(t, q, p):
        p = np.asarray(p, float)
        return 0.5 * np.sum(p * p, axis=-1) + g(t) * V(np.asarray(q, float)[..., 0])

    def grad(t, q, p):
        q = np.asarray(q, float)
        p = np.asarray(p, float)
        return (g(t) * V.deriv(q[..., 0]))[..., None], p.copy()

    def hessian(t, q, p):
        q = np.asarray(q, float)
        shape = q.shape[:-1]
        Hqq = (g(t) * V.second(q[..., 0])).reshape(shape + (1, 1))
        z = np.zeros(shape + (1, 1))
        return Hqq, z, np.ones(shape + (1, 1))

    def rhs(t, q, p):
        return p, (-g(t) * V.deriv(q[..., 0]))[..., None]

    def action_rate(t, q, p):
        return 0.5 * np.sum(p * p, axis=-1) - g(t) * V(q[..., 0], reduce=False)

    return HamiltonianModel(d=1, value=value, grad=grad, hessian=hessian,
                            m=declared_m, M=declared_M, periodic=True, autonomous=False,
                            family="forced", params=tuple(map(float, V.coeffs)) + (eps,),
                            rhs=rhs, action_rate=action_rate)


_MODEL_KEYS = {"family", "d", "V_coeffs", "a", "epsilon", "m", "M", "periodic"}


def model_from_dict(desc: dict) -> HamiltonianModel:
    """Build a model from its JSON description; unknown keys are rejected."""
    unknown = set(desc) - _MODEL_KEYS
    if unknown:
        raise ConfigError(f"unknown model keys: {sorted(unknown)}")
    family = desc.get("family")
    if family is None:
        raise ConfigError("model description requires a 'family' key")
    d = int(desc.get("d", 1))
    m = desc.get("m")
    M = desc.get("M")
    if family == "free":
        model = free_model(d)
    elif family == "quadratic":
        model = quadratic_model(float(desc.get("a", 1.0)), d)
    elif family == "mechanical":
        if d != 1:
            raise ConfigError("mechanical models are 1-dimensional")
        model = mechanical_model(desc.get("V_coeffs", [0.0]), m=m, M=M)
    elif family == "forced":
        if d != 1:
            raise ConfigError("forced models are 1-dimensional")
        model = forced_model(desc.get("V_coeffs", [0.0]), epsilon=float(desc.get("epsilon", 0.2)), m=m, M=M)
    else:
        raise ConfigError(f"unknown model family {family!r}")
    if m is not None or M is not None:
        cfg = dict(model.__dict__)
        if m is not None:
            cfg["m"] = float(m)
        if M is not None:
            cfg["M"] = float(M)
        model = HamiltonianModel(**cfg)
    if "periodic" in desc and bool(desc["periodic"]) != model.periodic:
        raise ConfigError(f"family {family!r} has periodic={model.periodic}, description disagrees")
    return model


def model_from_json(path) -> HamiltonianModel:
    with open(path) as fh:
        try:
            desc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed model file {path}: {exc}") from exc
    return model_from_dict(desc)


def _point(q, d):
    q = np.atleast_1d(np.asarray(q, float))
    if q.shape != (d,):
        raise ConfigError(f"expected a length-{d} vector, got shape {q.shape}")
    return q


def eval_and_grads(model: HamiltonianModel, t: float, q, p):
    """Evaluate ``H`` and its gradients at a single phase point.

    Raises NumericalDomain if the evaluator returns a non-finite value.
    """
    q = _point(q, model.d)
    p = _point(p, model.d)
    if not np.isfinite(t):
        raise ConfigError("time must be finite")
    H = float(model.value(t, q, p))
    Hq, Hp = model.grad(t, q, p)
    if not (np.isfinite(H) and np.all(np.isfinite(Hq)) and np.all(np.isfinite(Hp))):
        raise NumericalDomain(f"non-finite Hamiltonian data at t={t}, q={q}, p={p}",
                              point=(t, q.copy(), p.copy()))
    return H, np.asarray(Hq, float), np.asarray(Hp, float)


@dataclass
class HypothesisReport:
    """Sampled verification of the standing hypotheses (never a proof)."""

    passes: dict
    m_emp: float
    M_emp: float
    worst_point: tuple
    n_samples: int
    seed: int
    declared_m: float
    declared_M: float
    notes: str = "sampled check only; no global claim"
    h3_violation: float = 0.0
    periodic_defect: float = 0.0

    def all_pass(self) -> bool:
        return all(self.passes.values())

    def to_dict(self) -> dict:
        return {
            "passes": dict(self.passes),
            "m_emp": self.m_emp,
            "M_emp": self.M_emp,
            "worst_point": [float(x) for x in np.ravel(np.concatenate([[self.worst_point[0]],
                                                                       self.worst_point[1], self.worst_point[2]]))],
            "n_samples": self.n_samples,
            "seed": self.seed,
            "declared_m": self.declared_m,
            "declared_M": self.declared_M,
            "h3_violation": self.h3_violation,
            "periodic_defect": self.periodic_defect,
            "notes": self.notes,
        }


def check_hypotheses(model: HamiltonianModel, sample_box=None, n_samples: int = 400,
                     seed: int = 0, tol_hyp: float = TOL_HYP) -> HypothesisReport:
    """Sample the box and report empirical constants and hypothesis status.

    The sample always includes a small deterministic lattice (so potential
    extrema on coordinate axes are hit) plus ``n_samples`` seeded draws.
    """
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    d = model.d
    if sample_box is None:
        sample_box = ((0.0, 1.0), (-1.0, 1.0), (-3.0, 3.0))
    (t0, t1), (q0, q1), (p0, p1) = sample_box
    if not (t1 >= t0 and q1 > q0 and p1 > p0):
        raise ConfigError("sample box is degenerate")
    rng = np.random.default_rng(seed)
    ts = rng.uniform(t0, t1, n_samples)
    qs = rng.uniform(q0, q1, (n_samples, d))
    ps = rng.uniform(p0, p1, (n_samples, d))
    # deterministic lattice along each axis, momenta at rest and box edges
    lin = np.linspace(q0, q1, 17)
    lat_q = np.zeros((17 * d, d))
    for k in range(d):
        lat_q[17 * k:17 * (k + 1), k] = lin
    lat_t = np.full(len(lat_q), t0)
    lat_p = np.zeros_like(lat_q)
    ts = np.concatenate([ts, lat_t, lat_t])
    qs = np.concatenate([qs, lat_q, lat_q])
    ps = np.concatenate([ps, lat_p, np.full_like(lat_p, p1)])

    H = np.empty(len(ts))
    m_vals = np.empty(len(ts))
    M_vals = np.empty(len(ts))
    for i in range(len(ts)):
        H[i] = model.value(ts[i], qs[i], ps[i])
        Hqq, Hqp, Hpp = (np.asarray(b, float).reshape(d, d)
                         for b in model.hessian(ts[i], qs[i], ps[i]))
        m_vals[i] = np.linalg.eigvalsh(Hpp).min()
        full = np.block([[Hqq, Hqp], [Hqp.T, Hpp]])
        M_vals[i] = np.linalg.norm(full, 2)

    m_emp = float(m_vals.min())
    M_emp = float(M_vals.max())
    i_worst = int(M_vals.argmax())
    worst = (float(ts[i_worst]), qs[i_worst].copy(), ps[i_worst].copy())

    p_sq = np.sum(ps * ps, axis=1)
    lower = model.m / 2 * p_sq - model.M
    upper = model.M / 2 * p_sq + model.M
    h3_violation = float(max(np.max(lower - H), np.max(H - upper), 0.0))

    periodic_defect = 0.0
    if model.periodic:
        for k in range(d):
            e = np.zeros(d)
            e[k] = 1.0
            periodic_defect = max(periodic_defect,
                                  float(np.max(np.abs(model.value(ts, qs + e, ps) - H))))

    passes = {
        "H1": M_emp <= model.M + tol_hyp,
        "H2": m_emp >= model.m - tol_hyp,
        "H3": h3_violation <= tol_hyp,
        "H5": (periodic_defect <= 1e-12) if model.periodic else True,
    }
    return HypothesisReport(passes=passes, m_emp=m_emp, M_emp=M_emp, worst_point=worst,
                            n_samples=len(ts), seed=seed, declared_m=model.m,
                            declared_M=model.M, h3_violation=h3_violation,
                            periodic_defect=periodic_defect)


def legendre_batch(model: HamiltonianModel, t, q, v, tol=TOL_NEWTON, max_iter=MAX_NEWTON_ITER):
    """Vectorized Legendre transform: maximize ``p . v - H(t, q, p)`` over p.

    Returns ``(L, p_star)`` with shapes ``(...)``, ``(..., d)``.  The damped
    Newton iteration on ``grad_p H = v`` is globally convergent under H2.
    """
    q = np.asarray(q, float)
    v = np.asarray(v, float)
    p = np.zeros_like(v)

    def residual(p):
        _, Hp = model.grad(t, q, p)
        return Hp - v

    r = residual(p)
    rnorm = np.linalg.norm(r, axis=-1)
    for _ in range(max_iter):
        if np.all(rnorm <= tol):
            break
        _, _, Hpp = model.hessian(t, q, p)
        if model.d == 1:
            step = -r / Hpp[..., 0, 0][..., None]
        else:
            step = -np.linalg.solve(Hpp, r[..., None])[..., 0]
        lam = np.ones(rnorm.shape)
        active = rnorm > tol
        for _bt in range(30):
            p_try = p + lam[..., None] * step
            r_try = residual(p_try)
            rn_try = np.linalg.norm(r_try, axis=-1)
            better = (rn_try <= (1 - 0.25 * lam) * rnorm) | ~active
            if np.all(better):
                break
            lam = np.where(better, lam, lam * 0.5)
        p = np.where(active[..., None], p_try, p)
        r = np.where(active[..., None], r_try, r)
        rnorm = np.where(active, rn_try, rnorm)
    else:
        raise SolverDiverged("Legendre Newton iteration failed",
                             residual=float(np.max(rnorm)))
    L = np.sum(p * v, axis=-1) - model.value(t, q, p)
    return L, p


def legendre(model: HamiltonianModel, t: float, q, v):
    """Legendre transform at a single point: ``(L(t, q, v), p_star)``."""
    q = _point(q, model.d)
    v = _point(v, model.d)
    L, p = legendre_batch(model, t, q, v)
    return float(L), np.asarray(p, float)
