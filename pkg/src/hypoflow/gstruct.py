"""SU(3)-, G2- and Sp(1)-structures on 7-dimensional Lie algebras.

The central tool is Hitchin's stable-form construction on a 6-dimensional
oriented space: a 3-form rho with negative invariant lambda(rho) induces an
almost complex structure J, a dual 3-form rho_hat = J*rho and a volume form.
All maps here are complex-step safe so that flow code can differentiate
through them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (AlgebraError, Form, LieAlgebra, Metric, ce_differential,
                      form_norm, hodge_star, interior, monomials, nullspace,
                      n_monomials, promote, pullback, restrict_top, wedge,
                      wedge_all)


class StructureError(ValueError):
    """Validation failure; the message names the violated condition."""


# ---------------------------------------------------------------------------
# model tensors
# ---------------------------------------------------------------------------

def model_alpha(dim=7):
    return Form.basis(dim, (dim,))


def model_omega(dim=7):
    return Form.basis(dim, (1, 2)) + Form.basis(dim, (3, 4)) + Form.basis(dim, (5, 6))


def model_rho(dim=7):
    return (Form.basis(dim, (1, 3, 5)) - Form.basis(dim, (1, 4, 6))
            - Form.basis(dim, (2, 3, 6)) - Form.basis(dim, (2, 4, 5)))


def model_rhohat(dim=7):
    return (-Form.basis(dim, (1, 3, 6)) - Form.basis(dim, (1, 4, 5))
            - Form.basis(dim, (2, 3, 5)) + Form.basis(dim, (2, 4, 6)))


def model_psi(dim=7):
    return model_rho(dim) + 1j * model_rhohat(dim)


def model_phi():
    """phi0 = omega0 ^ alpha0 + rho0."""
    return wedge(model_omega(), model_alpha()) + model_rho()


def model_starphi():
    """Hodge dual of phi0 for the identity metric and standard orientation."""
    out = Form.zero(7, 4)
    for I, s in (((1, 2, 3, 4), 1), ((1, 2, 5, 6), 1), ((3, 4, 5, 6), 1),
                 ((1, 3, 6, 7), 1), ((1, 4, 5, 7), 1), ((2, 3, 5, 7), 1),
                 ((2, 4, 6, 7), -1)):
        out = out + s * Form.basis(7, I)
    return out


def model_sp1():
    """Model tensors (alpha1, alpha2, alpha3, omega1, omega2, omega3)."""
    a1 = Form.basis(7, (7,))
    a2 = -Form.basis(7, (6,))
    a3 = -Form.basis(7, (5,))
    w1 = Form.basis(7, (1, 2)) + Form.basis(7, (3, 4))
    w2 = Form.basis(7, (1, 3)) - Form.basis(7, (2, 4))
    w3 = -Form.basis(7, (1, 4)) - Form.basis(7, (2, 3))
    return a1, a2, a3, w1, w2, w3


# ---------------------------------------------------------------------------
# stable three-forms in dimension six
# ---------------------------------------------------------------------------

def _vector_from_five_form(eta: Form):
    """Solve w -| e^{1..6} = eta for w on a 6-dimensional space."""
    w = np.zeros(6, dtype=eta.coeffs.dtype)
    idx5 = {m: i for i, m in enumerate(monomials(6, 5))}
    full = tuple(range(6))
    for a in range(6):
        rest = full[:a] + full[a + 1:]
        w[a] = ((-1.0) ** a) * eta.coeffs[idx5[rest]]
    return w


def stable_three_form_data(rho: Form, tol=1e-9):
    """Hitchin data (J, rho_hat, vol, lam) of a 3-form on oriented R^6.

    K(v) -| vol0 = (v -| rho) ^ rho with vol0 = e^{123456}; lam = tr(K^2)/6
    must be negative, then J = K / sqrt(-lam) and rho_hat = J*rho.
    """
    if rho.dim != 6 or rho.degree != 3:
        raise AlgebraError("stable-form machinery expects a 3-form on R^6")
    K = np.zeros((6, 6), dtype=rho.coeffs.dtype)
    for j in range(6):
        v = np.zeros(6)
        v[j] = 1.0
        K[:, j] = _vector_from_five_form(wedge(interior(v, rho), rho))
    lam = np.trace(K @ K) / 6.0
    scale = max(float(np.abs(rho.coeffs).max()) ** 4, 1e-300)
    if not rho.is_complex and np.real(lam) > -tol * scale:
        raise StructureError(f"three-form not stable of negative type (lambda={np.real(lam):.3e})")
    J = K / np.sqrt(-lam)
    rho_hat = pullback(J, rho)
    vol = 0.5 * wedge(rho_hat, rho)
    return J, rho_hat, vol, lam


def volume_ratio(top: Form, ref: Form):
    """The scalar top/ref for two forms of top degree (ref nonzero)."""
    return top.coeffs[-1] / ref.coeffs[-1]


# ---------------------------------------------------------------------------
# SU(3)-structures in dimension seven
# ---------------------------------------------------------------------------

@dataclass
class SU3Structure:
    """Validated SU(3)-structure (alpha, omega, psi = rho + i rho_hat) with caches."""

    alg: LieAlgebra
    alpha: Form
    omega: Form
    rho: Form
    rhohat: Form
    X: np.ndarray          # Reeb vector
    J: np.ndarray          # almost complex structure, J X = 0
    metric: Metric
    vbasis: np.ndarray     # 7x7, first 6 columns span ker(alpha), last is X
    lam: float

    @property
    def psi(self) -> Form:
        return self.rho + 1j * self.rhohat

    @property
    def G(self):
        return self.metric.G

    def restrict(self, a: Form) -> Form:
        """Coefficients of a form annihilating X in the ker(alpha) basis."""
        full = pullback(self.vbasis, a)
        return drop_seventh(full)

    def extend(self, a6: Form) -> Form:
        """Inverse of restrict for forms on ker(alpha)."""
        full = embed_six(a6)
        return pullback(np.linalg.inv(self.vbasis), full)

    def volume6(self) -> Form:
        """phi(psi) = rho_hat ^ rho / 2 as a 6-form on ker(alpha)."""
        return 0.5 * wedge(self.rhohat, self.rho)


def drop_seventh(a: Form) -> Form:
    """Forget the 7th direction of a 7-dim form with no 7-components."""
    return restrict_top(a, 6)


def embed_six(a: Form) -> Form:
    return promote(a, 7)


def _omega_matrix(omega: Form):
    n = omega.dim
    W = np.zeros((n, n), dtype=omega.coeffs.dtype)
    for (i, j), v in zip(monomials(n, 2), omega.coeffs):
        W[i, j] = v
        W[j, i] = -v
    return W


def validate_su3(alg: LieAlgebra, alpha: Form, omega: Form, rho: Form,
                 tol=1e-9) -> SU3Structure:
    """Check the model-tensor property of (alpha, omega, rho) and build caches.

    rho_hat is reconstructed from rho by the stable-form machinery; each
    failed condition raises StructureError naming it.
    """
    if not (alpha.dim == omega.dim == rho.dim == alg.dim == 7):
        raise AlgebraError("expected forms on a common 7-dimensional algebra")
    if alpha.is_complex or omega.is_complex or rho.is_complex:
        raise AlgebraError("validate_su3 expects real alpha, omega, rho")
    scal_o = max(omega.sup_norm(), 1e-300)
    W = _omega_matrix(omega)
    s = np.linalg.svd(np.real(W), compute_uv=False)
    if s[5] <= tol * s[0] or s[6] > tol * s[0]:
        raise StructureError("omega is not of rank 6")
    X = nullspace(np.real(W), rtol=tol)[:, 0]
    aX = np.real(alpha.coeffs) @ X
    if abs(aX) <= tol * max(alpha.sup_norm(), 1e-300):
        raise StructureError("alpha vanishes on ker(omega)")
    X = X / aX
    # basis of ker(alpha), oriented so that omega^3 is a positive volume
    B = nullspace(np.real(alpha.coeffs)[None, :], rtol=tol)
    vb = np.column_stack([B, X])
    omega6 = drop_seventh(pullback(vb, omega))
    c_om3 = np.real(wedge_all(omega6, omega6, omega6).coeffs[-1]) / 6.0
    if c_om3 < 0:
        B[:, [0, 1]] = B[:, [1, 0]]
        vb = np.column_stack([B, X])
        omega6 = drop_seventh(pullback(vb, omega))
        c_om3 = -c_om3
    if interior(X, rho).sup_norm() > tol * max(rho.sup_norm(), 1e-300):
        raise StructureError("rho has a component along the Reeb direction")
    rho6 = drop_seventh(pullback(vb, rho))
    J6, rhohat6, vol6, lam = stable_three_form_data(rho6, tol=tol)
    vb_inv = np.linalg.inv(vb)
    rhohat = pullback(vb_inv, embed_six(rhohat6))
    scal_r = max(rho.sup_norm(), 1e-300)
    if wedge(omega, rho).sup_norm() > tol * scal_o * scal_r:
        raise StructureError("omega ^ rho != 0")
    if wedge(omega, rhohat).sup_norm() > tol * scal_o * scal_r:
        raise StructureError("omega ^ rho_hat != 0")
    # normalization phi(psi) = 2 phi(omega), compared on ker(alpha)
    vol_psi = np.real(0.5 * wedge(rhohat6, rho6).coeffs[-1])
    if abs(vol_psi - 2.0 * c_om3) > tol * max(abs(vol_psi), abs(2 * c_om3)):
        raise StructureError("normalization phi(psi) = 2 phi(omega) violated")
    # metric g = omega(J., .) + alpha (x) alpha with J extended by J X = 0
    J7 = vb @ np.block([[J6, np.zeros((6, 1))], [np.zeros((1, 6)), 0.0]]) @ vb_inv
    G = np.real(J7).T @ np.real(W)          # G[i,j] = omega(J e_i, e_j)
    G = G + np.outer(np.real(alpha.coeffs), np.real(alpha.coeffs))
    G = 0.5 * (G + G.T)
    eig = np.linalg.eigvalsh(G)
    if eig.min() <= tol * max(eig.max(), 1e-300):
        raise StructureError("induced metric not positive definite")
    orient = 1 if np.real(wedge(alpha, pullback(vb_inv, embed_six(vol6))).coeffs[-1]) > 0 else -1
    metric = Metric(7, G, orient)
    return SU3Structure(alg, alpha, omega, rho, rhohat, X, np.real(J7),
                        metric, vb, float(np.real(lam)))


def su3_rebuild(alg, alpha, omega, rho, tol=1e-9):
    """validate_su3 shorthand used by flows; keeps the signature in one place."""
    return validate_su3(alg, alpha, omega, rho, tol=tol)


# ---------------------------------------------------------------------------
# G2-structures
# ---------------------------------------------------------------------------

@dataclass
class G2Structure:
    alg: LieAlgebra
    phi: Form
    metric: Metric
    starphi: Form
    volume: Form

    @property
    def G(self):
        return self.metric.G


def g2_metric(phi: Form, tol=1e-9):
    """Metric and volume induced by a G2 three-form.

    b(X, Y) vol0 = (X -| phi) ^ (Y -| phi) ^ phi / 6, then g = b / det(b)^{1/9}
    in the working frame; not definite b means phi is not a G2-structure.
    """
    if phi.dim != 7 or phi.degree != 3:
        raise AlgebraError("expected a 3-form on a 7-dimensional space")
    n = 7
    B = np.zeros((n, n), dtype=phi.coeffs.dtype)
    ints = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        ints.append(interior(v, phi))
    for i in range(n):
        for j in range(i, n):
            c = wedge_all(ints[i], ints[j], phi).coeffs[-1] / 6.0
            B[i, j] = c
            B[j, i] = c
    detB = np.linalg.det(B)
    if not np.iscomplexobj(B):
        eig = np.linalg.eigvalsh(B)
        if eig.min() * eig.max() <= 0 or min(np.abs(eig)) <= tol * max(np.abs(eig)):
            raise StructureError("three-form does not induce a definite metric (no G2-structure)")
        scale = np.sign(detB) * np.abs(detB) ** (1.0 / 9.0)
    else:
        s = np.sign(np.real(detB))
        scale = s * (s * detB) ** (1.0 / 9.0)
    G = B / scale
    orientation = 1 if np.real(detB) > 0 else -1
    metric = Metric(7, G, orientation)
    return metric, metric.volume_form()


def validate_g2(alg: LieAlgebra, phi: Form, tol=1e-9) -> G2Structure:
    metric, vol = g2_metric(phi, tol=tol)
    return G2Structure(alg, phi, metric, hodge_star(phi, metric), vol)


def su3_to_g2(s: SU3Structure) -> G2Structure:
    """phi = omega ^ alpha - rho_hat (cocalibrated when the input is hypo)."""
    phi = wedge(s.omega, s.alpha) - s.rhohat
    return validate_g2(s.alg, phi)


# ---------------------------------------------------------------------------
# Sp(1)-structures
# ---------------------------------------------------------------------------

@dataclass
class Sp1Structure:
    alg: LieAlgebra
    alphas: tuple[Form, Form, Form]
    omegas: tuple[Form, Form, Form]
    metric: Metric
    adapted: np.ndarray    # columns form an adapted basis

    @property
    def G(self):
        return self.metric.G


def validate_sp1(alg: LieAlgebra, alphas, omegas, tol=1e-9) -> Sp1Structure:
    """Check the Sp(1) model-tensor property by synthesizing an adapted basis."""
    alphas = tuple(alphas)
    omegas = tuple(omegas)
    if len(alphas) != 3 or len(omegas) != 3:
        raise AlgebraError("an Sp(1)-structure needs three 1-forms and three 2-forms")
    A = np.vstack([np.real(a.coeffs) for a in alphas])
    if np.linalg.matrix_rank(A, tol=tol) != 3:
        raise StructureError("alpha_1, alpha_2, alpha_3 not linearly independent")
    W4 = nullspace(A, rtol=tol)                      # rank-4 distribution
    mats = [_omega_matrix(w) for w in omegas]
    K = np.vstack(mats)
    V3 = nullspace(K, rtol=tol)
    if V3.shape[1] != 3:
        raise StructureError("the omega_i have no common 3-dimensional kernel")
    # omega_i restricted to W4 as invertible maps W4 -> W4*
    M = [W4.T @ m @ W4 for m in mats]
    try:
        J1 = -np.linalg.solve(M[1], M[2])
        J2 = -np.linalg.solve(M[2], M[0])
        J3 = -np.linalg.solve(M[0], M[1])
    except np.linalg.LinAlgError as exc:
        raise StructureError("omega_i degenerate on the rank-4 distribution") from exc
    for J in (J1, J2, J3):
        if np.abs(J @ J + np.eye(4)).max() > 1e-6:
            raise StructureError("induced J_i do not square to -1")
    if np.abs(J1 @ J2 - J3).max() > 1e-6:
        raise StructureError("quaternion relation J1 J2 = J3 violated")
    g4 = J1.T @ M[0]  # g[i,j] = omega_1(J1 e_i, e_j) in W4 coordinates
    g4 = 0.5 * (g4 + g4.T)
    if np.linalg.eigvalsh(g4).min() <= 0:
        raise StructureError("induced metric on the rank-4 distribution not positive definite")
    # adapted basis: b1 unit, b2 = -J1 b1, b3 = -J2 b1, b4 = J3 b1, then the
    # frame of V3 dual to (alpha_1, alpha_2, alpha_3) matching the model values
    L = np.linalg.cholesky(g4)
    b1 = np.linalg.solve(L.T, np.eye(4)[:, 0])
    cand = np.column_stack([b1, -J1 @ b1, -J2 @ b1, J3 @ b1])
    E4 = W4 @ cand
    AV = A @ V3
    targets = np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [-1.0, 0.0, 0.0]])
    E3 = V3 @ np.linalg.solve(AV, targets)           # columns e5, e6, e7
    Ebasis = np.column_stack([E4, E3])
    models = model_sp1()
    for got, want, name in zip(alphas + omegas, models,
                               ("alpha1", "alpha2", "alpha3", "omega1", "omega2", "omega3")):
        moved = pullback(Ebasis, got)
        if (moved - want).sup_norm() > 1e-6 * max(1.0, got.sup_norm()):
            raise StructureError(f"{name} does not reach its model tensor in the adapted basis")
    Binv = np.linalg.inv(Ebasis)
    G = Binv.T @ Binv
    metric = Metric(7, 0.5 * (G + G.T), 1 if np.linalg.det(Ebasis) > 0 else -1)
    return Sp1Structure(alg, alphas, omegas, metric, Ebasis)


def sp1_to_su3(s: Sp1Structure) -> SU3Structure:
    """(alpha, omega, psi) = (a1, w1 - a2^a3, -w3^a2 - w2^a3 + i(w2^a2 - w3^a3))."""
    a1, a2, a3 = s.alphas
    w1, w2, w3 = s.omegas
    alpha = a1
    omega = w1 - wedge(a2, a3)
    rho = -wedge(w3, a2) - wedge(w2, a3)
    return validate_su3(s.alg, alpha, omega, rho)


def check_sp1_hypo(alg: LieAlgebra, s: Sp1Structure, metric=None) -> float:
    """Residual of d(omega_i - alpha_{i+1} ^ alpha_{i+2}) = 0 for i = 1, 2, 3."""
    m = metric or s.metric
    a = s.alphas
    w = s.omegas
    res = 0.0
    for i in range(3):
        form = w[i] - wedge(a[(i + 1) % 3], a[(i + 2) % 3])
        res = max(res, form_norm(ce_differential(alg, form), m))
    return res
