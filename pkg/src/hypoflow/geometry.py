"""Curvature and holonomy analysis of cohomogeneity-one metrics G(u) + S(u) du^2.

Everything is computed in the left-invariant frame (e_1..e_7, d/du). The
Levi-Civita connection comes from the Koszul formula with the only nonzero
frame derivative being d/du of the metric; curvature then needs first and
second u-derivatives of G, which the metric object provides to near machine
accuracy (analytic callbacks or complex-step/stencil jets of a smooth
evaluator).

Holonomy is estimated from below by Ambrose-Singer: curvature operators in a
g-orthonormal frame at each sample, closed under commutators, with the rank
read off singular values. Containment in su(4)/sp(2)/spin(7) is tested from
above by checking that every generator annihilates the corresponding
parallel forms. Verdicts are only emitted when the two bounds pinch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (Form, LieAlgebra, endo_action, monomials, n_monomials,
                      pullback)

CSTEP = 1e-30


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# the metric object
# ---------------------------------------------------------------------------

class CohomOneMetric:
    """Time-dependent left-invariant metric G(u) plus a lapse S(u) du^2.

    Derivatives: if explicit dG/d2G callbacks are given they are used;
    otherwise G must be complex-step safe, first derivatives come from a
    complex step and second derivatives from a 5-point stencil applied to
    the (machine-smooth) first derivative. A `jet` callback returning
    (G, dG, d2G) at once overrides everything (used for flow trajectories).
    """

    def __init__(self, alg: LieAlgebra, G, S=None, dG=None, d2G=None,
                 dS=None, d2S=None, domain=(-np.inf, np.inf), jet=None,
                 fd_step=1e-3):
        self.alg = alg
        self._G = G
        self._S = S
        self._dG, self._d2G = dG, d2G
        self._dS, self._d2S = dS, d2S
        self.domain = domain
        self._jet = jet
        self.fd_step = fd_step

    # -- constructors --------------------------------------------------------
    @staticmethod
    def from_trajectory(traj, margin=0.0):
        ts = sorted((traj.t0, traj.t1))
        dom = (ts[0] + margin, ts[1] - margin)
        return CohomOneMetric(traj.alg, G=None, domain=dom,
                              jet=lambda u: traj.metric_jet(u))

    @staticmethod
    def from_closed(cf, alg: LieAlgebra):
        return CohomOneMetric(alg, cf.G, S=cf.S, dG=cf.dG, d2G=cf.d2G,
                              dS=cf.dS, d2S=cf.d2S, domain=cf.domain)

    @staticmethod
    def from_grid(alg, ts, Gs, domain=None):
        """Cubic-spline fallback for purely gridded data."""
        from scipy.interpolate import CubicSpline
        ts = np.asarray(ts, dtype=float)
        spl = CubicSpline(ts, np.asarray(Gs), axis=0)
        d1 = spl.derivative(1)
        d2 = spl.derivative(2)
        dom = domain or (float(ts[0]), float(ts[-1]))
        return CohomOneMetric(alg, G=lambda u: spl(u), dG=lambda u: d1(u),
                              d2G=lambda u: d2(u), domain=dom)

    # -- jets ----------------------------------------------------------------
    def _check_domain(self, u):
        lo, hi = self.domain
        if not (lo < u < hi):
            raise GeometryError(f"u={u} outside the metric domain ({lo}, {hi})")

    def _deriv(self, F, u):
        return np.imag(F(u + 1j * CSTEP)) / CSTEP

    def _jet_scalar(self, F, dF, d2F, u):
        if F is None:
            return 1.0, 0.0, 0.0
        F0 = float(np.real(F(u)))
        if dF is not None:
            return F0, float(dF(u)), float(d2F(u)) if d2F else self._stencil(dF, u)
        d1 = float(self._deriv(F, u))
        d2 = self._stencil(lambda v: self._deriv(F, v), u)
        return F0, d1, d2

    def _stencil(self, dF, u):
        h = self.fd_step
        return (-np.asarray(dF(u + 2 * h)) + 8 * np.asarray(dF(u + h))
                - 8 * np.asarray(dF(u - h)) + np.asarray(dF(u - 2 * h))) / (12 * h)

    def jet7(self, u):
        """(G, dG, d2G) of the 7x7 block at u."""
        self._check_domain(u)
        if self._jet is not None:
            return self._jet(u)
        G0 = np.real(np.asarray(self._G(u), dtype=complex))
        if self._dG is not None:
            d1 = np.asarray(self._dG(u), dtype=float)
            d2 = (np.asarray(self._d2G(u), dtype=float) if self._d2G is not None
                  else self._stencil(self._dG, u))
            return G0, d1, d2
        d1 = self._deriv(self._G, u)
        d2 = self._stencil(lambda v: self._deriv(self._G, v), u)
        return G0, d1, d2

    def jet8(self, u):
        """(G8, dG8, d2G8) including the lapse block."""
        G, d1, d2 = self.jet7(u)
        s0, s1, s2 = self._jet_scalar(self._S, self._dS, self._d2S, u)
        out = []
        for M, s in ((G, s0), (d1, s1), (d2, s2)):
            B = np.zeros((8, 8))
            B[:7, :7] = M
            B[7, 7] = s
            out.append(B)
        return out

    def metric8(self, u):
        return self.jet8(u)[0]

    def consistency_check(self, u, h=1e-3):
        """Finite-difference cross-check of dG and d2G against G (5-point)."""
        G0, d1, d2 = self.jet8(u)
        vals = {s: self.jet8(u + s * h)[0] for s in (-2, -1, 1, 2)}
        fd1 = (-vals[2] + 8 * vals[1] - 8 * vals[-1] + vals[-2]) / (12 * h)
        fd2 = (-vals[2] + 16 * vals[1] - 30 * G0 + 16 * vals[-1] - vals[-2]) / (12 * h * h)
        return max(np.abs(fd1 - d1).max(), np.abs(fd2 - d2).max())


def _c8(alg: LieAlgebra):
    c8 = np.zeros((8, 8, 8))
    c8[:7, :7, :7] = alg.c
    return c8


# ---------------------------------------------------------------------------
# connection and curvature
# ---------------------------------------------------------------------------

def christoffels(m: CohomOneMetric, u):
    """Gamma[a, b, d] with nabla_{E_a} E_b = Gamma[a,b,d] E_d, plus d/du Gamma."""
    G, dG, d2G = m.jet8(u)
    c8 = _c8(m.alg)
    Ginv = np.linalg.inv(G)

    def K_of(Gm, dGm):
        K = np.zeros((8, 8, 8))
        K[7, :, :] += dGm
        K[:, 7, :] += dGm
        K[:, :, 7] -= dGm
        K += np.einsum("abm,mc->abc", c8, Gm)
        K -= np.einsum("acm,mb->abc", c8, Gm)
        K -= np.einsum("bcm,ma->abc", c8, Gm)
        return K

    K = K_of(G, dG)
    Kp = K_of(dG, d2G)
    Gamma = 0.5 * np.einsum("dc,abc->abd", Ginv, K)
    Ginv_p = -Ginv @ dG @ Ginv
    Gamma_p = 0.5 * (np.einsum("dc,abc->abd", Ginv_p, K)
                     + np.einsum("dc,abc->abd", Ginv, Kp))
    return Gamma, Gamma_p


def levi_civita(m: CohomOneMetric, u, check_tol=1e-9):
    """Connection coefficients in the frame (e_1..e_7, du), with both
    torsion-freeness and metric compatibility verified numerically."""
    Gamma, _ = christoffels(m, u)
    G, dG, _ = m.jet8(u)
    c8 = _c8(m.alg)
    scale = max(1.0, np.abs(Gamma).max()) * max(1.0, np.abs(G).max())
    tors = Gamma - np.swapaxes(Gamma, 0, 1) - c8
    if np.abs(tors).max() > check_tol * scale:
        raise GeometryError("torsion-freeness violated beyond tolerance")
    # metric compatibility: E_a G_bc = g(nabla_a b, c) + g(b, nabla_a c)
    lhs = np.zeros((8, 8, 8))
    lhs[7] = dG
    rhs = np.einsum("abd,dc->abc", Gamma, G) + np.einsum("acd,db->abc", Gamma, G)
    if np.abs(lhs - rhs).max() > check_tol * scale:
        raise GeometryError("metric compatibility violated beyond tolerance")
    return Gamma


def curvature(m: CohomOneMetric, u, check_tol=1e-8):
    """(Riemann, Ricci, scalar) at u; Riem[a,b,c,d] is the E_d-component of
    R(E_a, E_b) E_c. Algebraic symmetries are verified before returning."""
    Gamma, Gamma_p = christoffels(m, u)
    G, dG, _ = m.jet8(u)
    c8 = _c8(m.alg)
    T = np.zeros((8, 8, 8, 8))
    T[7] = Gamma_p
    Riem = (T - np.swapaxes(T, 0, 1)
            + np.einsum("bce,aed->abcd", Gamma, Gamma)
            - np.einsum("ace,bed->abcd", Gamma, Gamma)
            - np.einsum("abe,ecd->abcd", c8, Gamma))
    low = np.einsum("abcd,de->abce", Riem, G)
    scale = max(np.abs(low).max(), 1e-12)
    sym_err = max(
        np.abs(low + np.swapaxes(low, 0, 1)).max(),            # antisym in (a,b)
        np.abs(low + np.swapaxes(low, 2, 3)).max(),            # antisym in (c,d)
        np.abs(low + np.transpose(low, (1, 2, 0, 3))
               + np.transpose(low, (2, 0, 1, 3))).max(),       # first Bianchi
    )
    if sym_err > check_tol * max(scale, 1.0):
        raise GeometryError(f"curvature symmetries violated ({sym_err:.2e})")
    Ricci = np.einsum("abca->bc", Riem)
    scal = float(np.einsum("bc,bc->", np.linalg.inv(G), Ricci))
    return Riem, Ricci, scal


def ricci_tensor(m: CohomOneMetric, u):
    return curvature(m, u)[1]


# ---------------------------------------------------------------------------
# orthonormal frames, model forms and alignment
# ---------------------------------------------------------------------------

def _model8_omega():
    return (Form.basis(8, (1, 2)) + Form.basis(8, (3, 4))
            + Form.basis(8, (5, 6)) + Form.basis(8, (7, 8)))


def _model8_psi():
    from .algebra import wedge
    out = None
    for j in range(4):
        z = Form.basis(8, (2 * j + 1,)) - 1j * Form.basis(8, (2 * j + 2,))
        out = z if out is None else wedge(out, z)
    return out


def _onb_frame(G):
    L = np.linalg.cholesky(G)
    return np.linalg.inv(L).T    # columns orthonormal: F^T G F = I


def _align_su4(omega_on: Form, psi_on: Form):
    """Orthogonal U carrying (omega_on, psi_on) to the model pair, or None."""
    from .algebra import form_inner, Metric, wedge
    W = np.zeros((8, 8))
    for (i, j), v in omega_on.items():
        W[i - 1, j - 1] = np.real(v)
        W[j - 1, i - 1] = -np.real(v)
    J = W
    if np.abs(J @ J + np.eye(8)).max() > 1e-6:
        return None
    cols = []
    for _ in range(4):
        v = None
        for k in range(8):
            cand = np.eye(8)[:, k]
            for b in cols:
                cand = cand - (b @ cand) * b
            if np.linalg.norm(cand) > 1e-3:
                v = cand / np.linalg.norm(cand)
                break
        w = -J @ v
        for b in cols:
            w = w - (b @ w) * b
        w = w / np.linalg.norm(w)
        cols += [v, w]
    U = np.column_stack(cols)
    # absorb the residual phase of psi by rotating the first complex line
    m8 = Metric.identity(8)
    psi_u = pullback(U, psi_on)
    model = _model8_psi()
    denom = form_inner(model.real, model.real, m8) + form_inner(model.imag, model.imag, m8)
    z = (form_inner(psi_u.real, model.real, m8) + form_inner(psi_u.imag, model.imag, m8)
         + 1j * (form_inner(psi_u.imag, model.real, m8) - form_inner(psi_u.real, model.imag, m8)))
    theta = float(np.angle(z / denom))
    for sign in (1.0, -1.0):
        R = np.eye(8)
        cs, sn = np.cos(sign * theta), np.sin(sign * theta)
        R[0, 0] = R[1, 1] = cs
        R[0, 1] = -sn
        R[1, 0] = sn
        U2 = U @ R
        if (pullback(U2, psi_on) - model).sup_norm() < 1e-6 * max(1.0, model.sup_norm()):
            return U2
    return None


def _derivation_matrix(A, k):
    """Matrix of sigma -> sum_i sigma(.., A v_i, ..) on Lambda^k(R^8)."""
    from .algebra import _endo_tensor
    return -np.einsum("ml,mloi->oi", A, _endo_tensor(8, k))


# ---------------------------------------------------------------------------
# holonomy estimation
# ---------------------------------------------------------------------------

@dataclass
class HolonomyReport:
    samples: list
    generator_count: int
    dimension: int
    singular_values: list
    margin: float
    containment: dict
    parallel_two_form: dict
    verdict: str
    notes: str = ""

    def to_json(self):
        return {
            "schema": 1,
            "samples": [float(t) for t in self.samples],
            "generator_count": int(self.generator_count),
            "dimension": int(self.dimension),
            "singular_values": [float(s) for s in self.singular_values],
            "rank_margin": float(self.margin),
            "containment": self.containment,
            "parallel_two_form": self.parallel_two_form,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def curvature_generators(m: CohomOneMetric, u, structures=None):
    """Curvature operators in an orthonormal frame at u, plus frame forms.

    When SU(4) data (Omega, Psi) is available the frame is rotated so the
    forms hit their model tensors; generators from different samples then sit
    inside one fixed copy of su(4) whenever the holonomy is contained in it.
    """
    Riem, _, _ = curvature(m, u)
    G = m.metric8(u)
    F = _onb_frame(G)
    Finv = np.linalg.inv(F)
    ops = np.einsum("ap,bq,rd,abcd,cs->pqrs", F, F, Finv, Riem, F)
    forms = {}
    if structures is not None:
        raw = structures(u)
        for key, f8 in raw.items():
            forms[key] = pullback(F, f8)
    if "Omega" in forms and "Psi" in forms:
        U = _align_su4(forms["Omega"], forms["Psi"])
        if U is not None:
            ops = np.einsum("ap,bq,mr,ns,abmn->pqrs", U, U, U, U, ops)
            forms = {key: pullback(U, f) for key, f in forms.items()}
    gens = []
    scale = np.abs(ops).max()
    for p in range(8):
        for q in range(p + 1, 8):
            A = ops[p, q]
            if np.abs(A).max() > 1e-12 * max(scale, 1.0):
                gens.append(A)
    return gens, forms, scale


def _close_under_brackets(gens, rank_rtol, max_rounds=6):
    """Span closure under commutators; returns (basis, singular values)."""
    vecs = [g.flatten() / np.linalg.norm(g) for g in gens]
    basis = []
    svals = np.zeros(0)
    for _ in range(max_rounds):
        M = np.vstack(vecs)
        uu, ss, vt = np.linalg.svd(M, full_matrices=False)
        rank = int(np.sum(ss > rank_rtol * ss[0]))
        svals = ss
        basis = [vt[i].reshape(8, 8) for i in range(rank)]
        new = []
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                C = basis[i] @ basis[j] - basis[j] @ basis[i]
                nn = np.linalg.norm(C)
                if nn > 1e-12:
                    new.append(C.flatten() / nn)
        M2 = np.vstack([b.flatten() for b in basis] + new) if new else M
        ss2 = np.linalg.svd(M2, compute_uv=False)
        rank2 = int(np.sum(ss2 > rank_rtol * ss2[0]))
        if rank2 == rank:
            return basis, svals
        vecs = [b.flatten() for b in basis] + new
    return basis, svals


def parallel_form_search(generators, omega_on: Form = None, tol=1e-7):
    """Joint kernel of the generator action on Lambda^2(R^8).

    Returns a dict with the kernel dimension and a witness beyond span(Omega)
    when one exists.
    """
    if not generators:
        return {"present": True, "kernel_dim": 28, "witness": None,
                "note": "zero curvature, every 2-form is parallel"}
    mats = [_derivation_matrix(A / np.linalg.norm(A), 2) for A in generators]
    M = np.vstack(mats)
    u, s, vt = np.linalg.svd(M)
    keep = s > tol * s[0]
    kernel = vt[int(np.sum(keep)):]
    kdim = kernel.shape[0]
    witness = None
    if kdim > 0:
        K = kernel.copy()
        if omega_on is not None:
            w = omega_on.coeffs / np.linalg.norm(omega_on.coeffs)
            K = K - np.outer(K @ w, w)
        nrm = np.linalg.norm(K, axis=1)
        order = np.argsort(-nrm)
        if nrm[order[0]] > 0.5:
            witness = K[order[0]] / nrm[order[0]]
    return {"present": witness is not None, "kernel_dim": int(kdim),
            "witness": None if witness is None else [float(x) for x in witness]}


def _containment(gens, forms):
    """Max violation of each stabilizer condition over all unit generators."""
    out = {}
    tests = {
        "su4": [f for k, f in forms.items() if k in ("Omega", "Psi")],
        "spin7": [forms["Phi"]] if "Phi" in forms else [],
    }
    for name, flist in tests.items():
        if not flist:
            out[name] = None
            continue
        worst = 0.0
        for A in gens:
            An = A / np.linalg.norm(A)
            for f in flist:
                if f.is_complex:
                    v = max(endo_action(An, f.real).sup_norm(),
                            endo_action(An, f.imag).sup_norm())
                else:
                    v = endo_action(An, f).sup_norm()
                worst = max(worst, v / max(f.sup_norm(), 1e-300))
        out[name] = worst
    return out


def _sp2_triple(kernel_basis, psi_on: Form, tol=1e-6):
    """Search span(kernel) for Omega_c = Omega2 + i Omega3 with Omega_c^2 = 2 Psi."""
    from scipy.optimize import least_squares
    from .algebra import wedge
    if kernel_basis.shape[0] < 3 or psi_on is None:
        return None
    K = kernel_basis
    nb = K.shape[0]

    def resid(x):
        sigma = Form(8, 2, (x[:nb] @ K) + 1j * (x[nb:] @ K))
        diff = 0.5 * wedge(sigma, sigma) - psi_on
        return np.concatenate([np.real(diff.coeffs), np.imag(diff.coeffs)])

    # model guess: dz1^dz2 + dz3^dz4 projected onto the kernel
    from .algebra import wedge as _w
    z = [Form.basis(8, (2 * j + 1,)) - 1j * Form.basis(8, (2 * j + 2,)) for j in range(4)]
    guess = _w(z[0], z[1]) + _w(z[2], z[3])
    gr = np.real(guess.coeffs) @ K.T
    gi = np.imag(guess.coeffs) @ K.T
    best = None
    rng = np.random.default_rng(7)
    for trial in range(4):
        x0 = np.concatenate([gr, gi]) if trial == 0 else rng.normal(size=2 * nb)
        sol = least_squares(resid, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if np.linalg.norm(sol.fun) < tol * max(1.0, psi_on.sup_norm()):
            best = sol.x
            break
    if best is None:
        return None
    return Form(8, 2, best[:nb] @ K), Form(8, 2, best[nb:] @ K)


def holonomy_estimate(m: CohomOneMetric, structures, samples,
                      rank_rtol=1e-7, margin_required=10.0,
                      containment_tol=1e-7, flat_tol=1e-9) -> HolonomyReport:
    """Ambrose-Singer lower bound plus containment upper bounds at sampled u.

    structures: callable u -> dict of 8-dim forms in the coordinate frame
    (keys among Omega, Psi, Phi), or None when no containment data exists.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise GeometryError("holonomy estimation needs at least 3 sample points")
    all_gens = []
    forms0 = {}
    curved_scale = 0.0
    viol = {"su4": None, "spin7": None}
    for u in samples:
        gens, forms, scale = curvature_generators(m, u, structures)
        curved_scale = max(curved_scale, scale)
        all_gens.extend(gens)
        if forms and not forms0:
            forms0 = forms
        if forms:
            v = _containment(gens if gens else [], forms)
            for key in viol:
                if v.get(key) is not None:
                    viol[key] = max(viol[key] or 0.0, v[key])
    notes = "holonomy statements refer to the sampled points only"
    if curved_scale <= flat_tol:
        return HolonomyReport(samples, 0, 0, [], np.inf,
                              {"su4": _flag(0.0, containment_tol),
                               "sp2": _flag(0.0, containment_tol),
                               "spin7": _flag(0.0, containment_tol)},
                              {"present": True, "kernel_dim": 28, "witness": None},
                              "flat", notes)
    basis, svals = _close_under_brackets(all_gens, rank_rtol)
    dim = len(basis)
    kept = svals[svals > rank_rtol * svals[0]]
    dropped = svals[svals <= rank_rtol * svals[0]]
    margin = float(kept.min() / dropped.max()) if dropped.size and dropped.max() > 0 else np.inf
    ambiguous = margin < margin_required
    pf = parallel_form_search(basis, forms0.get("Omega"))
    cont = {
        "su4": _flag(viol["su4"], containment_tol),
        "spin7": _flag(viol["spin7"], containment_tol),
    }
    # sp(2): only meaningful when the dimension allows it
    sp2_flag = {"violation": None, "ok": False}
    if dim <= 10:
        mats = [_derivation_matrix(A / np.linalg.norm(A), 2) for A in basis]
        u_, s_, vt_ = np.linalg.svd(np.vstack(mats))
        kernel = vt_[int(np.sum(s_ > 1e-7 * s_[0])):]
        triple = _sp2_triple(kernel, forms0.get("Psi")) if kernel.shape[0] >= 3 else None
        if triple is not None:
            sp2_flag = {"violation": 0.0, "ok": True}
    cont["sp2"] = sp2_flag
    if ambiguous:
        verdict = "undetermined"
    elif dim == 0:
        verdict = "flat"
    elif dim == 15 and cont["su4"]["ok"]:
        verdict = "su4"
    elif dim == 10 and cont["sp2"]["ok"]:
        verdict = "sp2"
    elif dim == 21 and cont["spin7"]["ok"]:
        verdict = "spin7"
    elif pf["present"] and dim < 15:
        verdict = "reducible-suspected"
    else:
        verdict = "undetermined"
    return HolonomyReport(samples, len(all_gens), dim,
                          [float(s) for s in svals], margin, cont, pf, verdict, notes)


def _flag(violation, tol):
    if violation is None:
        return {"violation": None, "ok": False}
    return {"violation": float(violation), "ok": bool(violation <= tol)}
