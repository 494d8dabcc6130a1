"""Hitchin and reduced hypo flow integrators plus the closed-form solutions.

The general Hitchin stepper evolves sigma = star_phi(phi) (the flow is
d/dt sigma = -d phi) and recovers phi from sigma by Newton iteration on the
algebraic map phi -> star_phi(phi). All evaluators used for metrics are
complex-step safe, so first time-derivatives of trajectory metrics are exact
directional derivatives and second derivatives come from finite differences
of a machine-smooth function; curvature downstream inherits that accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .algebra import (Form, LieAlgebra, Metric, _gram_minors,
                      _complement_table, ce_differential, form_norm,
                      interior, interior_tensor, monomials, n_monomials,
                      promote, pullback, wedge, wedge_all, wedge_tensor)
from .gstruct import (G2Structure, SU3Structure, StructureError, drop_seventh,
                      embed_six, stable_three_form_data, su3_to_g2,
                      validate_g2, validate_su3)
from .torsion import check_cocalibrated, check_hypo, has_invariant_torsion, hypo_torsion

CSTEP = 1e-30


class FlowError(RuntimeError):
    """Integration failure (Newton divergence, degeneration, bad input)."""


@dataclass
class FlowOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    eig_floor: float = 1e-8
    newton_tol: float = 1e-13
    max_newton: int = 30


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class FlowTrajectory:
    """Recorded adaptive-grid solution of one flow, with dense re-evaluation."""

    method: str
    alg: LieAlgebra
    ts: np.ndarray
    states: list
    diagnostics: list
    stop_reason: str | None
    evaluator: object
    interpolants: list = field(default_factory=list)

    @property
    def t0(self):
        return float(self.ts[0])

    @property
    def t1(self):
        return float(self.ts[-1])

    def state_at(self, t):
        ts = self.ts
        if not (min(ts[0], ts[-1]) - 1e-12 <= t <= max(ts[0], ts[-1]) + 1e-12):
            raise FlowError(f"t={t} outside the computed interval [{ts[0]}, {ts[-1]}]")
        if abs(t - ts[0]) < 1e-14:
            return np.asarray(self.states[0], dtype=float)
        for interp in self.interpolants:
            lo, hi = sorted((interp.t_min, interp.t_max))
            if lo - 1e-12 <= t <= hi + 1e-12:
                return interp(t)
        return np.asarray(self.states[-1], dtype=float)

    def _seed(self, t):
        """Walk the Newton warm start of an implicit evaluator toward time t."""
        ev = self.evaluator
        if not hasattr(ev, "recover"):
            return
        target = int(np.argmin(np.abs(self.ts - t)))
        cur = getattr(self, "_seed_idx", len(self.ts) - 1)
        step = 1 if target >= cur else -1
        for k in range(cur, target + step, step):
            ev.recover(np.asarray(self.states[k], dtype=float))
        self._seed_idx = target

    def metric_at(self, t):
        self._seed(t)
        return np.real(self.evaluator.metric_of_state(self.state_at(t)))

    def metric_jet(self, t, fd_step=4e-3):
        """(G, dG/dt, d2G/dt2) at time t, machine-accurate in the first two."""
        self._seed(t)
        return state_metric_jet(self.evaluator, self.state_at(t), fd_step=fd_step)

    def structure_at(self, t):
        self._seed(t)
        return self.evaluator.structure_of_state(self.state_at(t))

    def forms8_at(self, t):
        """Parallel 8-dimensional forms (Omega, Psi and/or Phi) in the frame (e1..e7, dt)."""
        self._seed(t)
        return self.evaluator.forms8_of_state(self.state_at(t))

    def summary(self):
        keys = sorted({k for d in self.diagnostics for k in d})
        maxima = {k: max(float(np.real(d.get(k, 0.0))) for d in self.diagnostics) for k in keys}
        return {
            "schema": 1,
            "method": self.method,
            "t0": self.t0,
            "t1": self.t1,
            "steps": len(self.ts),
            "stop_reason": self.stop_reason,
            "residual_maxima": maxima,
        }

    def export_csv(self, path):
        """CSV columns: t, upper-triangle g_ij in basis order, then diagnostics."""
        keys = sorted({k for d in self.diagnostics for k in d})
        names = [f"g{i + 1}{j + 1}" for i in range(7) for j in range(i, 7)]
        with open(path, "w") as fh:
            fh.write(",".join(["t"] + names + keys) + "\n")
            for t, d in zip(self.ts, self.diagnostics):
                G = self.metric_at(t)
                vals = [f"{t:.16g}"]
                vals += [f"{G[i, j]:.16g}" for i in range(7) for j in range(i, 7)]
                vals += [f"{float(np.real(d.get(k, np.nan))):.16g}" for k in keys]
                fh.write(",".join(vals) + "\n")


def state_metric_jet(ev, y, fd_step=4e-3):
    """Jet of t -> metric along the flow through state y.

    dG is the exact directional derivative of the metric map along the flow
    RHS (complex step); d2G is a 5-point finite difference along the
    second-order Taylor curve of the state, which agrees with the true
    second derivative to the stencil's accuracy.
    """
    y = np.asarray(y, dtype=float)
    yd = ev.rhs_real(y)
    ydd = ev.rhs_dir(y, yd)
    G = np.real(ev.metric_of_state(y))
    Gd = np.imag(ev.metric_of_state(y + 1j * CSTEP * yd)) / CSTEP
    h = fd_step

    def q(s):
        return np.real(ev.metric_of_state(y + s * yd + 0.5 * s * s * ydd))

    Gdd = (-q(2 * h) + 16 * q(h) - 30 * G + 16 * q(-h) - q(-2 * h)) / (12 * h * h)
    return G, Gd, Gdd


def _run_rk(rhs, y0, t1, opts, check_state, make_diag):
    """Adaptive RK45 loop with truncation on degeneration or Newton failure."""
    ts = [0.0]
    states = [np.asarray(y0, dtype=float).copy()]
    diags = [make_diag(states[0])]
    interps = []
    stop = None
    if t1 == 0.0:
        return np.asarray(ts), states, diags, interps, stop
    solver = RK45(lambda t, y: rhs(y), 0.0, y0, t_bound=t1, rtol=opts.rtol,
                  atol=opts.atol, max_step=opts.max_step)
    while solver.status == "running":
        try:
            solver.step()
        except FlowError as exc:
            stop = f"stopped: {exc}"
            break
        if solver.status == "failed":
            stop = "stopped: integrator failure"
            break
        bad = check_state(solver.y)
        if bad:
            stop = f"stopped: {bad}"
            break
        try:
            diag = make_diag(solver.y)
        except (FlowError, StructureError) as exc:
            stop = f"stopped: {exc}"
            break
        interps.append(solver.dense_output())
        ts.append(solver.t)
        states.append(solver.y.copy())
        diags.append(diag)
    return np.asarray(ts), states, diags, interps, stop


# ---------------------------------------------------------------------------
# general Hitchin flow (implicit sigma-stepper)
# ---------------------------------------------------------------------------

def _ninth_root(d):
    s = np.sign(np.real(d))
    return s * (s * d) ** (1.0 / 9.0)


class HitchinEvaluator:
    """Algebraic maps around sigma = star_phi(phi) with Newton recovery of phi."""

    def __init__(self, alg: LieAlgebra, phi0: Form, opts: FlowOptions):
        self.alg = alg
        self.opts = opts
        self.D3 = alg.differential_matrix(3)
        self.D4 = alg.differential_matrix(4)
        self.Ti3 = interior_tensor(7, 3)         # (7, 21, 35)
        self.T22 = wedge_tensor(7, 2, 2)         # (21, 21, 35)
        self.T43 = wedge_tensor(7, 4, 3)[:, :, 0]
        self.jc3, self.eps3 = _complement_table(7, 3)
        self.phi_guess = np.array(phi0.coeffs, dtype=float)
        self._J = None
        self.last_newton_iters = 0
        self.newton_high_water = 0

    # -- algebraic maps ----------------------------------------------------
    def b_matrix(self, phi):
        ints = np.einsum("vok,k->vo", self.Ti3, phi)
        P4 = np.einsum("vo,wp,opq->vwq", ints, ints, self.T22)
        return np.einsum("vwq,ql,l->vw", P4, self.T43, phi) / 6.0

    def metric_of_phi(self, phi):
        B = self.b_matrix(phi)
        detB = np.linalg.det(B)
        if not np.iscomplexobj(B):
            if detB == 0 or np.linalg.eigvalsh(B).min() * np.sign(detB) <= 0:
                raise FlowError("three-form left the G2 orbit (metric degenerate)")
        return B / _ninth_root(detB), detB

    def starphi_of_phi(self, phi):
        G, detB = self.metric_of_phi(phi)
        Ginv = np.linalg.inv(G)
        gram = _gram_minors(Ginv, 7, 3)
        s = np.sign(np.real(detB)) * np.sqrt(np.linalg.det(G))
        u = gram @ phi * s
        out = np.zeros(35, dtype=u.dtype)
        out[self.jc3] = self.eps3 * u
        return out

    def jacobian(self, phi):
        J = np.zeros((35, 35))
        for j in range(35):
            dphi = np.zeros(35, dtype=complex)
            dphi[j] = 1j * CSTEP
            J[:, j] = np.imag(self.starphi_of_phi(phi + dphi)) / CSTEP
        return J

    # -- Newton recovery -----------------------------------------------------
    def recover(self, sigma, refresh=False):
        phi = self.phi_guess.copy()
        scale = max(1.0, float(np.abs(sigma).max()))
        if self._J is None or refresh:
            self._J = self.jacobian(phi)
        iters = 0
        for attempt in range(2):
            for _ in range(self.opts.max_newton):
                F = self.starphi_of_phi(phi) - sigma
                if np.abs(F).max() < self.opts.newton_tol * scale:
                    self.phi_guess = phi.copy()
                    self.last_newton_iters = iters
                    self.newton_high_water = max(self.newton_high_water, iters)
                    return phi
                try:
                    phi = phi - np.linalg.solve(self._J, F)
                except np.linalg.LinAlgError as exc:
                    raise FlowError(f"Newton linear solve failed: {exc}") from exc
                iters += 1
                if iters >= 8 * (attempt + 1):
                    break
            self._J = self.jacobian(np.real(phi))
        raise FlowError("Newton recovery of phi from star_phi(phi) diverged")

    # -- flow interface ------------------------------------------------------
    def rhs_real(self, sigma):
        phi = self.recover(sigma)
        return -(self.D3 @ phi)

    def rhs_dir(self, sigma, v):
        """Directional derivative of the RHS: -d(J^{-1} v)."""
        phi = self.recover(sigma)
        J = self.jacobian(phi)
        return -(self.D3 @ np.linalg.solve(J, v))

    def phi_of_state(self, sigma):
        """phi(sigma), extended complex-analytically to first order off the real locus."""
        sig_r = np.real(sigma)
        phi_r = self.recover(sig_r)
        if not np.iscomplexobj(sigma):
            return phi_r
        J = self.jacobian(phi_r)
        return phi_r + np.linalg.solve(J, sigma - self.starphi_of_phi(phi_r))

    def metric_of_state(self, sigma):
        G, _ = self.metric_of_phi(self.phi_of_state(sigma))
        return G

    def structure_of_state(self, sigma) -> G2Structure:
        phi = self.phi_of_state(np.real(sigma))
        return validate_g2(self.alg, Form(7, 3, phi))

    def forms8_of_state(self, sigma):
        g2 = self.structure_of_state(sigma)
        e8 = Form.basis(8, (8,))
        Phi = wedge(promote(g2.phi, 8), e8) + promote(g2.starphi, 8)
        return {"Phi": Phi}

    def diag_of_state(self, sigma):
        m = Metric(7, np.real(self.metric_of_state(sigma)))
        iters = self.newton_high_water
        self.newton_high_water = 0
        return {
            "cocalibration": form_norm(Form(7, 5, self.D4 @ np.real(sigma)), m),
            "newton_iters": iters,
            "min_metric_eig": float(np.linalg.eigvalsh(np.real(m.G)).min()),
        }


def hitchin_integrate(phi0: G2Structure, t1: float, opts: FlowOptions = None) -> FlowTrajectory:
    """Integrate d/dt star_phi(phi) = -d phi from a cocalibrated start.

    The state is sigma = star_phi(phi); phi is recovered by Newton iteration
    with the previous phi as the guess and a complex-step Jacobian reused
    across steps. Stops at t1 or at degeneration (metric eigenvalue below
    the floor, Newton failure), recording the reason.
    """
    opts = opts or FlowOptions()
    if check_cocalibrated(phi0) > 1e-8 * max(1.0, phi0.phi.sup_norm()):
        raise FlowError("initial G2-structure is not cocalibrated")
    ev = HitchinEvaluator(phi0.alg, phi0.phi, opts)
    sigma0 = np.array(phi0.starphi.coeffs, dtype=float)

    def check(sig):
        try:
            G = np.real(ev.metric_of_state(sig))
        except FlowError as exc:
            return str(exc)
        if np.linalg.eigvalsh(G).min() < opts.eig_floor:
            return "metric degeneration (eigenvalue below floor)"
        return None

    ts, states, diags, interps, stop = _run_rk(ev.rhs_real, sigma0, t1, opts,
                                               check, ev.diag_of_state)
    return FlowTrajectory("hitchin", phi0.alg, ts, states, diags, stop, ev, interps)


# ---------------------------------------------------------------------------
# reduced hypo flow for torsion class 2V1 + V8 + V12 (beta = 0)
# ---------------------------------------------------------------------------

class ReducedHypoEvaluator:
    """State (x, tau): alpha = x' alpha0, omega = omega0 - x d(alpha0), psi = (tau + i tau_hat)/x'."""

    def __init__(self, s0: SU3Structure):
        self.alg = s0.alg
        self.s0 = s0
        self.alpha0 = s0.alpha
        self.omega0 = s0.omega
        self.dalpha0 = ce_differential(s0.alg, s0.alpha)
        self.X0 = s0.X
        self.vb = s0.vbasis
        self.vb_inv = np.linalg.inv(self.vb)
        self.D3 = s0.alg.differential_matrix(3)
        self.intX4 = np.einsum("v,vok->ok", s0.X, interior_tensor(7, 4))
        self.T22_6 = wedge_tensor(6, 2, 2)
        self.T42_6 = wedge_tensor(6, 4, 2)

    # -- helpers -------------------------------------------------------------
    def _restrict3(self, coeffs7):
        return drop_seventh(pullback(self.vb, Form(7, 3, coeffs7)))

    def _extend3(self, form6):
        return pullback(self.vb_inv, embed_six(form6))

    def _omega_x(self, x):
        return Form(7, 2, self.omega0.coeffs - x * self.dalpha0.coeffs)

    def _vol_of_omega(self, x):
        w6 = drop_seventh(pullback(self.vb, self._omega_x(x)))
        w2 = np.einsum("abq,a,b->q", self.T22_6, w6.coeffs, w6.coeffs)
        return np.einsum("ab,a,b->", self.T42_6[:, :, 0], w2, w6.coeffs) / 6.0

    def _split(self, y):
        return y[0], y[1:]

    def _xdot_and_hat(self, y):
        x, tau = self._split(y)
        tau6 = self._restrict3(tau)
        J6, tauhat6, vol6, lam = stable_three_form_data(tau6)
        q = np.sqrt(-lam)
        p = self._vol_of_omega(x)
        xdot = np.sqrt(q / (2.0 * p))
        return xdot, tau6, tauhat6, J6

    # -- flow interface --------------------------------------------------------
    def rhs_real(self, y):
        try:
            xdot, _, tauhat6, _ = self._xdot_and_hat(y)
        except StructureError as exc:
            raise FlowError(f"stable-form degeneration: {exc}") from exc
        tauhat7 = self._extend3(tauhat6).coeffs
        taudot = (self.intX4 @ (self.D3 @ tauhat7)) / xdot
        return np.concatenate([np.atleast_1d(xdot), taudot])

    def rhs_dir(self, y, v):
        yc = np.asarray(y, dtype=complex) + 1j * CSTEP * np.asarray(v)
        return np.imag(self.rhs_real(yc)) / CSTEP

    def metric_of_state(self, y):
        x, tau = self._split(y)
        xdot, tau6, tauhat6, J6 = self._xdot_and_hat(y)
        J7 = self.vb @ np.block([[J6, np.zeros((6, 1))],
                                 [np.zeros((1, 6)), np.zeros((1, 1))]]) @ self.vb_inv
        wx = self._omega_x(x)
        W = np.zeros((7, 7), dtype=wx.coeffs.dtype)
        for (i, j), val in zip(monomials(7, 2), wx.coeffs):
            W[i, j] = val
            W[j, i] = -val
        a0 = self.alpha0.coeffs
        G = J7.T @ W + (xdot * xdot) * np.outer(a0, a0)
        return 0.5 * (G + G.T)

    def structure_of_state(self, y) -> SU3Structure:
        x, tau = self._split(np.real(y))
        xdot, *_ = self._xdot_and_hat(np.real(y))
        alpha = float(np.real(xdot)) * self.alpha0
        omega = self._omega_x(float(np.real(x)))
        rho = Form(7, 3, tau / float(np.real(xdot)))
        return validate_su3(self.alg, alpha, omega, rho)

    def forms8_of_state(self, y):
        s = self.structure_of_state(np.real(y))
        e8 = Form.basis(8, (8,))
        alpha8 = promote(s.alpha, 8)
        Omega = promote(s.omega, 8) + wedge(alpha8, e8)
        Psi = wedge(promote(s.psi, 8), alpha8 - 1j * e8)
        g2 = su3_to_g2(s)
        Phi = wedge(promote(g2.phi, 8), e8) + promote(g2.starphi, 8)
        return {"Omega": Omega, "Psi": Psi, "Phi": Phi}

    def diag_of_state(self, y):
        s = self.structure_of_state(y)
        m = s.metric
        volpsi = np.real(0.5 * wedge(s.rhohat, s.rho).coeffs[-1])
        volom = np.real(wedge_all(s.omega, s.omega, s.omega).coeffs[-1]) / 3.0
        return {
            "hypo": check_hypo(s),
            "normalization": abs(volpsi - volom) / max(abs(volom), 1e-300),
            "min_metric_eig": float(np.linalg.eigvalsh(np.real(m.G)).min()),
        }


def hypo_reduced_2v1v8v12(s0: SU3Structure, t1: float, opts: FlowOptions = None,
                          class_tol=1e-8) -> FlowTrajectory:
    """Reduced hypo flow for structures with no V6 torsion.

    Integrates x' = sqrt(phi(tau) / 2 phi(omega0 - x d alpha0)),
    tau' = (X0 -| d tau_hat)/x' and reconstructs the structure family
    (x' alpha0, omega0 - x d alpha0, (tau + i tau_hat)/x').
    """
    opts = opts or FlowOptions()
    t = hypo_torsion(s0)
    if t.magnitudes["V6"] > class_tol:
        raise FlowError("initial structure has V6 torsion; the reduced flow needs beta = 0")
    ev = ReducedHypoEvaluator(s0)
    y0 = np.concatenate([[0.0], np.array(s0.rho.coeffs, dtype=float)])

    def check(y):
        try:
            G = np.real(ev.metric_of_state(y))
        except (StructureError, FlowError) as exc:
            return str(exc)
        if np.linalg.eigvalsh(G).min() < opts.eig_floor:
            return "metric degeneration (eigenvalue below floor)"
        return None

    ts, states, diags, interps, stop = _run_rk(ev.rhs_real, y0, t1, opts,
                                               check, ev.diag_of_state)
    return FlowTrajectory("reduced", s0.alg, ts, states, diags, stop, ev, interps)


# ---------------------------------------------------------------------------
# closed-form solutions
# ---------------------------------------------------------------------------

@dataclass
class ClosedFormMetric:
    """Closed-form cohomogeneity-one metric G(x) + S(x) dx^2 on a declared interval."""

    tag: str
    params: dict
    domain: tuple[float, float]
    G: object            # callable x -> 7x7, complex-step safe
    S: object            # callable x -> scalar, complex-step safe
    dG: object = None    # optional analytic derivatives
    d2G: object = None
    dS: object = None
    d2S: object = None
    notes: str = ""

    def check_domain(self, x):
        lo, hi = self.domain
        if not (lo < np.real(x) < hi):
            raise FlowError(f"x={np.real(x)} outside the metric domain ({lo}, {hi})")


def f_lambda_mu(lam: float, mu: float):
    """Closed-form solution of f' = -(lam f^2 + mu), f(0) = 1, and its domain.

    Branches: tan (lam/mu > 0), tanh (-1 < lam/mu < 0), coth (lam/mu < -1),
    1/(lam y + 1) (mu = 0), 1 - mu y (lam = 0); lam + mu = 0 gives f == 1.
    The domain J is the maximal interval around 0 with f positive and finite.
    """
    inf = np.inf
    if lam == 0.0 and mu == 0.0:
        return (lambda y: np.ones_like(np.asarray(y, dtype=np.result_type(y, float)))), (-inf, inf)
    if lam + mu == 0.0:
        return (lambda y: np.ones_like(np.asarray(y, dtype=np.result_type(y, float)))), (-inf, inf)
    if lam == 0.0:
        dom = (-inf, 1.0 / mu) if mu > 0 else (1.0 / mu, inf)
        return (lambda y: 1.0 - mu * y), dom
    if mu == 0.0:
        dom = (-1.0 / lam, inf) if lam > 0 else (-inf, -1.0 / lam)
        return (lambda y: 1.0 / (lam * y + 1.0)), dom
    r = lam / mu
    if r > 0:
        amp = np.sqrt(mu / lam)
        slope = np.sign(mu) * np.sqrt(lam * mu)
        b = np.arctan(np.sqrt(lam / mu))
        f = lambda y: amp * np.tan(-slope * y + b)
        # u = b - slope y must stay in (0, pi/2)
        if slope > 0:
            dom = ((b - np.pi / 2) / slope, b / slope)
        else:
            dom = (b / slope, (b - np.pi / 2) / slope)
        return f, dom
    amp = np.sqrt(-mu / lam)
    slope = np.sign(mu) * np.sqrt(-lam * mu)
    if -1 < r < 0:
        b = np.arctanh(np.sqrt(-lam / mu))
        f = lambda y: amp * np.tanh(-slope * y + b)
    else:
        b = np.arctanh(np.sqrt(-mu / lam))   # arcoth(z) = artanh(1/z)
        f = lambda y: amp / np.tanh(-slope * y + b)
    dom = (-inf, b / slope) if slope > 0 else (b / slope, inf)
    return f, dom


def hypo_invariant_closed(lam1: float, lam2: float, s0: SU3Structure = None):
    """Closed-form flow metric for invariant intrinsic torsion (lam1 != 0).

    omega-coefficient (1 - lam1 x), alpha-coefficient f(x)^2/(1 - lam1 x)^3 and
    dx^2-coefficient (1 - lam1 x)^3/f(x)^2, with
    f(x) = sqrt(-lam2/(2 lam1) (1 - lam1 x)^4 + lam2/(2 lam1) + 1) on the
    maximal interval around 0 where the radicand is positive and 1 - lam1 x > 0.
    Returns (ClosedFormMetric, f, x_ode_rhs).
    """
    if lam1 * lam2 < 0:
        raise FlowError("lambda1 lambda2 < 0 excluded: no such hypo structure exists")
    if lam1 == 0.0:
        # linear branch: (alpha, omega, psi)(t) = ((1 + lam2 t) alpha0, omega0, psi0)
        G6, a0 = _closed_frame(s0)
        A = np.outer(a0, a0)
        lo, hi = (-np.inf, np.inf) if lam2 == 0 else (
            (-1.0 / lam2, np.inf) if lam2 > 0 else (-np.inf, -1.0 / lam2))
        one = lambda t: np.ones_like(np.asarray(t, dtype=np.result_type(t, float)))
        cf = ClosedFormMetric(
            "invariant-lam1-zero", {"lam1": lam1, "lam2": lam2}, (lo, hi),
            G=lambda t: G6 + (1.0 + lam2 * t) ** 2 * A, S=one,
            dG=lambda t: 2 * lam2 * (1.0 + lam2 * t) * A,
            d2G=lambda t: 2 * lam2 * lam2 * A,
            dS=lambda t: 0.0, d2S=lambda t: 0.0)
        return cf, one, (lambda t, x: 1.0 + 0.0 * x)

    c = -lam2 / (2.0 * lam1)
    w = lambda x: 1.0 - lam1 * x

    def P(x):
        return c * w(x) ** 4 - c + 1.0

    def dP(x):
        return -4.0 * c * lam1 * w(x) ** 3

    def d2P(x):
        return 12.0 * c * lam1 * lam1 * w(x) ** 2

    def f(x):
        return np.sqrt(P(x))

    # domain: radicand > 0 and 1 - lam1 x > 0, maximal around x = 0
    bounds = [r for r in np.roots([c * lam1 ** 4, -4 * c * lam1 ** 3, 6 * c * lam1 ** 2,
                                   -4 * c * lam1, 1.0]) if abs(r.imag) < 1e-12] if c != 0 else []
    cuts = sorted({float(np.real(r)) for r in bounds} | {1.0 / lam1})
    lo = max([x for x in cuts if x < 0], default=-np.inf)
    hi = min([x for x in cuts if x > 0], default=np.inf)
    G6, a0 = _closed_frame(s0)
    A = np.outer(a0, a0)

    # alpha-coefficient q = P/w^3 and lapse S = w^3/P, differentiated by the
    # quotient rule with w' = -lam1
    def q(x):
        return P(x) / w(x) ** 3

    def dq(x):
        return dP(x) / w(x) ** 3 + 3.0 * lam1 * P(x) / w(x) ** 4

    def d2q(x):
        return (d2P(x) / w(x) ** 3 + 6.0 * lam1 * dP(x) / w(x) ** 4
                + 12.0 * lam1 * lam1 * P(x) / w(x) ** 5)

    def S(x):
        return w(x) ** 3 / P(x)

    def dS(x):
        return -3.0 * lam1 * w(x) ** 2 / P(x) - w(x) ** 3 * dP(x) / P(x) ** 2

    def d2S(x):
        return (6.0 * lam1 * lam1 * w(x) / P(x)
                + 6.0 * lam1 * w(x) ** 2 * dP(x) / P(x) ** 2
                - w(x) ** 3 * d2P(x) / P(x) ** 2
                + 2.0 * w(x) ** 3 * dP(x) ** 2 / P(x) ** 3)

    def x_rhs(t, x):
        return w(x) ** (-1.5) * f(x)

    cf = ClosedFormMetric(
        "invariant-torsion", {"lam1": lam1, "lam2": lam2}, (lo, hi),
        G=lambda x: w(x) * G6 + q(x) * A, S=S,
        dG=lambda x: -lam1 * G6 + dq(x) * A,
        d2G=lambda x: d2q(x) * A, dS=dS, d2S=d2S,
        notes="domain reported as the SPD interval of the coefficients")
    return cf, f, x_rhs


def _closed_frame(s0: SU3Structure):
    if s0 is None:
        G6 = np.eye(7)
        G6[6, 6] = 0.0
        return G6, np.eye(7)[:, 6]
    a0 = np.real(s0.alpha.coeffs)
    G6 = np.real(s0.G) - np.outer(a0, a0)
    return G6, a0


# ---------------------------------------------------------------------------
# diagonal Hitchin flow on almost Abelian algebras
# ---------------------------------------------------------------------------

class DiagonalEvaluator:
    """State (f1, f2, f3) of the coupled diagonal system."""

    def __init__(self, alg, a, lam, mu):
        self.alg = alg
        self.a = a
        self.lam = np.asarray(lam, dtype=float)
        self.mu = np.asarray(mu, dtype=float)
        self.degenerate = np.isclose(self.lam + self.mu, 0.0)

    def ratios(self, fvec):
        out = []
        for i in range(3):
            if self.degenerate[i]:
                out.append(1.0 + 0.0 * fvec[i])
            else:
                out.append((self.lam[i] * fvec[i] + self.mu[i] / fvec[i])
                           / (self.lam[i] + self.mu[i]))
        return np.asarray(out, dtype=np.result_type(fvec, float))

    def rhs_real(self, y):
        r = self.ratios(y)
        prod = r[0] * r[1] * r[2]
        if not np.iscomplexobj(y) and np.real(prod) <= 0:
            raise FlowError("diagonal flow degenerated (ratio product nonpositive)")
        root = np.sqrt(prod)
        out = -(self.lam * y * y + self.mu) * root
        out[self.degenerate] = 0.0
        return out

    def rhs_dir(self, y, v):
        yc = np.asarray(y, dtype=complex) + 1j * CSTEP * np.asarray(v)
        return np.imag(self.rhs_real(yc)) / CSTEP

    def metric_of_state(self, y):
        r = self.ratios(y)
        prod = r[0] * r[1] * r[2]
        diag = [1.0 / y[0], y[0], 1.0 / y[1], y[1], 1.0 / y[2], y[2], 1.0 / prod]
        return np.diag(np.asarray(diag, dtype=np.result_type(y, float)))

    def phi_of_state(self, y):
        f1, f2, f3 = y
        r = self.ratios(y)
        prod = r[0] * r[1] * r[2]
        e = Form.basis
        phi = (np.sqrt(1.0 / prod) * (e(7, (1, 2, 7)) + e(7, (3, 4, 7)) + e(7, (5, 6, 7)))
               + (f1 * f2 * f3) ** -0.5 * e(7, (1, 3, 5))
               - np.sqrt(f2 * f3 / f1) * e(7, (1, 4, 6))
               - np.sqrt(f1 * f3 / f2) * e(7, (2, 3, 6))
               - np.sqrt(f1 * f2 / f3) * e(7, (2, 4, 5)))
        return phi

    def structure_of_state(self, y) -> G2Structure:
        return validate_g2(self.alg, self.phi_of_state(np.real(y)))

    def forms8_of_state(self, y):
        g2 = self.structure_of_state(y)
        e8 = Form.basis(8, (8,))
        Phi = wedge(promote(g2.phi, 8), e8) + promote(g2.starphi, 8)
        # the inducing hypo family: alpha = sqrt(g77) e7, omega = X -| phi
        y = np.real(y)
        G = np.real(self.metric_of_state(y))
        X = np.eye(7)[:, 6] / np.sqrt(G[6, 6])
        alpha = Form(7, 1, G @ X)
        omega = interior(X, g2.phi)
        rho = interior(X, g2.starphi)
        tau = wedge(omega, alpha) - g2.phi
        alpha8 = promote(alpha, 8)
        Omega = promote(omega, 8) + wedge(alpha8, e8)
        Psi = wedge(promote(rho, 8) + 1j * promote(tau, 8), alpha8 - 1j * e8)
        return {"Omega": Omega, "Psi": Psi, "Phi": Phi}

    def diag_of_state(self, y):
        g2 = self.structure_of_state(y)
        return {
            "cocalibration": check_cocalibrated(g2),
            "min_metric_eig": float(np.linalg.eigvalsh(np.real(self.metric_of_state(np.real(y)))).min()),
        }


def diagonal_solve(a, lam, mu, t1, opts: FlowOptions = None):
    """Diagonal Hitchin flow f_i' = -(lam_i f_i^2 + mu_i) sqrt(prod ratios), f_i(0) = 1.

    Returns (FlowTrajectory, ClosedFormMetric, x_of_t) where the closed metric
    uses the f_{lam,mu} solutions with coefficients 1/f, f and the shared
    product factor on e7 (x) e7 and dx^2, and x(t) solves x' = sqrt(prod ratios),
    x(0) = 0.
    """
    from .construct import build_almost_abelian, diagonal_conditions, diagonal_f
    opts = opts or FlowOptions()
    fmat = diagonal_f(a, lam, mu)
    case = diagonal_conditions(fmat)
    if case.case != "(iii)":
        raise FlowError(f"parameters do not satisfy the diagonal normal form (case {case.case})")
    alg, s = build_almost_abelian(fmat)
    ev = DiagonalEvaluator(alg, a, lam, mu)
    y0 = np.ones(3)

    def check(y):
        if np.min(y) <= opts.eig_floor:
            return "diagonal coefficient reached zero"
        r = ev.ratios(y)
        if np.real(r[0] * r[1] * r[2]) <= opts.eig_floor:
            return "orthogonal-frame factor degenerated"
        return None

    ts, states, diags, interps, stop = _run_rk(ev.rhs_real, y0, t1, opts, check,
                                               ev.diag_of_state)
    traj = FlowTrajectory("diagonal", alg, ts, states, diags, stop, ev, interps)

    fs = [f_lambda_mu(lam[i], mu[i]) for i in range(3)]
    lo = max(f[1][0] for f in fs)
    hi = min(f[1][1] for f in fs)

    def _fjet(i, x):
        """(f, f', f'') of f_{lam_i,mu_i}; derivatives from the defining ODE."""
        fx = fs[i][0](x)
        fp = -(lam[i] * fx * fx + mu[i])
        return fx, fp, -2.0 * lam[i] * fx * fp

    def _rjet(i, x):
        """(r, r', r'') for r = (lam f + mu/f)/(lam + mu), or the constant 1."""
        if np.isclose(lam[i] + mu[i], 0.0):
            z = 0.0 * np.asarray(x, dtype=np.result_type(x, float))
            return 1.0 + z, z, z
        fx, fp, fpp = _fjet(i, x)
        den = lam[i] + mu[i]
        r = (lam[i] * fx + mu[i] / fx) / den
        rp = (lam[i] - mu[i] / fx ** 2) * fp / den
        rpp = ((lam[i] - mu[i] / fx ** 2) * fpp + 2.0 * mu[i] * fp * fp / fx ** 3) / den
        return r, rp, rpp

    def _metric_jets(x):
        """Diagonals of (G, G', G'') plus (S, S', S'')."""
        d0, d1, d2 = [], [], []
        for i in range(3):
            fx, fp, fpp = _fjet(i, x)
            d0 += [1.0 / fx, fx]
            d1 += [-fp / fx ** 2, fp]
            d2 += [(2.0 * fp * fp - fx * fpp) / fx ** 3, fpp]
        jets = [_rjet(i, x) for i in range(3)]
        r = [j[0] for j in jets]
        logp = sum(j[1] / j[0] for j in jets)
        logpp = sum((j[2] * j[0] - j[1] ** 2) / j[0] ** 2 for j in jets)
        F = 1.0 / (r[0] * r[1] * r[2])
        Fp = -F * logp
        Fpp = -Fp * logp - F * logpp
        d0.append(F)
        d1.append(Fp)
        d2.append(Fpp)
        return d0, d1, d2, (F, Fp, Fpp)

    def Gx(x):
        return np.diag(np.asarray(_metric_jets(x)[0], dtype=np.result_type(x, float)))

    def dGx(x):
        return np.diag(np.asarray(_metric_jets(x)[1], dtype=np.result_type(x, float)))

    def d2Gx(x):
        return np.diag(np.asarray(_metric_jets(x)[2], dtype=np.result_type(x, float)))

    closed = ClosedFormMetric("diagonal", {"a": a, "lam": tuple(lam), "mu": tuple(mu),
                                           "eligible_su4": case.eligible},
                              (lo, hi), Gx, lambda x: _metric_jets(x)[3][0],
                              dG=dGx, d2G=d2Gx,
                              dS=lambda x: _metric_jets(x)[3][1],
                              d2S=lambda x: _metric_jets(x)[3][2])

    def x_rhs(t, x):
        r = [_rjet(i, x)[0] for i in range(3)]
        return np.sqrt(r[0] * r[1] * r[2])

    def x_of_t(tq):
        sol = _solve_scalar_ode(x_rhs, 0.0, np.atleast_1d(tq), opts)
        return sol if np.ndim(tq) else float(sol[0])

    return traj, closed, x_of_t


def _solve_scalar_ode(rhs, y0, t_eval, opts):
    from scipy.integrate import solve_ivp
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.full_like(t_eval, y0)
    for neg in (True, False):
        sel = t_eval < 0 if neg else t_eval > 0
        if not np.any(sel):
            continue
        tmax = t_eval[sel].min() if neg else t_eval[sel].max()
        sol = solve_ivp(rhs, (0.0, tmax), [y0], rtol=opts.rtol, atol=opts.atol,
                        method="RK45", dense_output=True)
        if not sol.success:
            raise FlowError(f"scalar ODE integration failed: {sol.message}")
        out[sel] = sol.sol(t_eval[sel])[0]
    return out


# ---------------------------------------------------------------------------
# eight-dimensional assembly
# ---------------------------------------------------------------------------

def assemble_8d(traj: FlowTrajectory):
    """Closure residuals of the parallel 8-dimensional structure on the grid.

    Time derivatives are taken from the flow's own right-hand side, so what
    remains is the conservation of the defining closure conditions
    (d sigma for the Hitchin flow, d omega and d(alpha ^ psi) for hypo flows).
    """
    per_time = []
    for t, y in zip(traj.ts, traj.states):
        y = np.real(np.asarray(y))
        if traj.method in ("hitchin",):
            ev = traj.evaluator
            m = Metric(7, np.real(ev.metric_of_state(y)))
            res = form_norm(Form(7, 5, ev.D4 @ y), m)
        elif traj.method == "diagonal":
            g2 = traj.evaluator.structure_of_state(y)
            res = check_cocalibrated(g2)
        else:
            s = traj.evaluator.structure_of_state(y)
            res = check_hypo(s)
        per_time.append(res)
    return {"max_residual": max(per_time), "per_time": per_time}
