"""Hypo/cocalibrated predicates and intrinsic-torsion extraction.

A hypo SU(3)-structure satisfies the structure equations

    d(alpha)   = alpha ^ beta + lambda1 omega + omega_tilde
    d(rho)     = beta ^ rho - lambda2 alpha ^ rho_hat + alpha ^ gamma
    d(rho_hat) = beta ^ rho_hat + lambda2 alpha ^ rho - alpha ^ J*gamma

with beta a 1-form annihilating the Reeb vector, omega_tilde primitive of
type (1,1) and gamma primitive real of type (2,1)+(1,2). The extraction
formulas below are forced by these equations together with alpha(X) = 1 and
the constants <omega, omega> = 3, <rho_hat, rho_hat> = 4, which are verified
against each structure before use.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (Form, ce_differential, endo_action, form_inner,
                      form_norm, interior, pullback, wedge)
from .gstruct import G2Structure, SU3Structure, StructureError, validate_su3

COMPONENTS = ("V1(lambda1)", "V1(lambda2)", "V6", "V8", "V12")


@dataclass
class HypoTorsion:
    """Intrinsic torsion (lambda1, lambda2, beta, omega_tilde, gamma) of a hypo structure."""

    lambda1: float
    lambda2: float
    beta: Form
    omega_tilde: Form
    gamma: Form
    residuals: tuple[float, float, float]   # reconstruction errors of d(alpha), d(rho), d(rho_hat)
    magnitudes: dict[str, float] = field(default_factory=dict)


@dataclass
class TorsionClass:
    """Subset of torsion components with their magnitudes."""

    components: tuple[str, ...]
    magnitudes: dict[str, float]

    def __contains__(self, name):
        return name in self.components

    def issubset(self, names):
        return set(self.components) <= set(names)

    def label(self):
        return "+".join(self.components) if self.components else "{0}"


def check_hypo(s: SU3Structure) -> float:
    """max(|d omega|, |d(alpha ^ psi)|) in the induced metric norm."""
    g = s.alg
    m = s.metric
    r1 = form_norm(ce_differential(g, s.omega), m)
    ap_r = wedge(s.alpha, s.rho)
    ap_i = wedge(s.alpha, s.rhohat)
    r2 = max(form_norm(ce_differential(g, ap_r), m),
             form_norm(ce_differential(g, ap_i), m))
    return max(r1, r2)


def check_cocalibrated(phi: G2Structure) -> float:
    """|d star_phi phi| in the induced metric norm."""
    return form_norm(ce_differential(phi.alg, phi.starphi), phi.metric)


def _type30_part(s: SU3Structure, gamma: Form) -> Form:
    """(3,0)+(0,3) component of a 3-form annihilating X, via the J-derivation.

    The derivation D induced by J has D^2 = -9 on [[Lambda^{3,0}]] and
    D^2 = -1 on real (2,1)+(1,2) forms, so the projector is -(D^2 + 1)/8.
    """
    D1 = -endo_action(s.J, gamma)
    D2 = -endo_action(s.J, D1)
    return (-1.0 / 8.0) * (D2 + gamma)


def hypo_torsion(s: SU3Structure, tol=1e-8) -> HypoTorsion:
    """Extract (lambda1, lambda2, beta, omega_tilde, gamma) from a hypo structure."""
    if check_hypo(s) > tol * max(1.0, s.omega.sup_norm()):
        raise StructureError("structure is not hypo; torsion extraction needs dw = d(alpha^psi) = 0")
    g, m = s.alg, s.metric
    ww = float(np.real(form_inner(s.omega, s.omega, m)))
    rr = float(np.real(form_inner(s.rhohat, s.rhohat, m)))
    if abs(ww - 3.0) > 1e-6 or abs(rr - 4.0) > 1e-6:
        raise StructureError("inner-product normalizations <w,w>=3, <rho_hat,rho_hat>=4 failed")
    dal = ce_differential(g, s.alpha)
    drho = ce_differential(g, s.rho)
    drhohat = ce_differential(g, s.rhohat)
    beta = interior(s.X, dal)
    rest = dal - wedge(s.alpha, beta)
    lam1 = float(np.real(form_inner(rest, s.omega, m))) / ww
    omega_tilde = rest - lam1 * s.omega
    xdr = interior(s.X, drho)
    lam2 = -float(np.real(form_inner(xdr, s.rhohat, m))) / rr
    gamma = xdr + lam2 * s.rhohat

    scale = max(1.0, dal.sup_norm(), drho.sup_norm(), drhohat.sup_norm())
    rec1 = form_norm(dal - (wedge(s.alpha, beta) + lam1 * s.omega + omega_tilde), m)
    rec2 = form_norm(drho - (wedge(beta, s.rho) - lam2 * wedge(s.alpha, s.rhohat)
                             + wedge(s.alpha, gamma)), m)
    jgamma = pullback(s.J, gamma)
    rec3 = form_norm(drhohat - (wedge(beta, s.rhohat) + lam2 * wedge(s.alpha, s.rho)
                                - wedge(s.alpha, jgamma)), m)
    # component typing; a failure signals a convention bug, not bad data
    checks = {
        "beta(X)": abs(float(np.real(beta.coeffs @ s.X))),
        "omega_tilde primitive": abs(float(np.real(form_inner(omega_tilde, s.omega, m)))),
        "omega_tilde wedge w^2": form_norm(wedge(omega_tilde, wedge(s.omega, s.omega)), m),
        "omega_tilde (1,1)": form_norm(pullback(s.J, omega_tilde) - omega_tilde, m),
        "gamma primitive": form_norm(wedge(gamma, s.omega), m),
        "gamma (3,0)-part": form_norm(_type30_part(s, gamma), m),
    }
    typing_tol = max(1e-9 * scale, 1e-12)
    bad = {k: v for k, v in checks.items() if v > typing_tol}
    if bad:
        raise StructureError(f"torsion component typing failed: {bad}")
    mags = {
        "V1(lambda1)": abs(lam1),
        "V1(lambda2)": abs(lam2),
        "V6": form_norm(beta, m),
        "V8": form_norm(omega_tilde, m),
        "V12": form_norm(gamma, m),
    }
    return HypoTorsion(lam1, lam2, beta, omega_tilde, gamma,
                       (rec1, rec2, rec3), mags)


def classify_torsion(t: HypoTorsion, threshold=1e-8) -> TorsionClass:
    """Components whose magnitude exceeds the threshold, in catalog order."""
    comps = tuple(name for name in COMPONENTS if t.magnitudes.get(name, 0.0) > threshold)
    return TorsionClass(comps, dict(t.magnitudes))


def has_invariant_torsion(t: HypoTorsion, threshold=1e-8) -> bool:
    return all(t.magnitudes[k] <= threshold for k in ("V6", "V8", "V12"))


def rescale_invariant(s: SU3Structure, a1: float, a2: float, tol=1e-8) -> SU3Structure:
    """Rescale an invariant-torsion structure to prescribed torsion (a1, a2).

    Uses (lambda2/a2 alpha, c omega, c^{3/2} psi) with c = lambda1 lambda2/(a1 a2);
    sign(a1 a2) must match sign(lambda1 lambda2), otherwise no such hypo
    structure exists on a Lie algebra.
    """
    t = hypo_torsion(s)
    if not has_invariant_torsion(t, threshold=tol * max(1.0, abs(t.lambda1), abs(t.lambda2))):
        raise StructureError("structure does not have invariant intrinsic torsion")
    l1, l2 = t.lambda1, t.lambda2
    if l1 * l2 == 0 or a1 * a2 == 0:
        raise StructureError("rescaling needs lambda1 lambda2 != 0 and a1 a2 != 0")
    if np.sign(a1 * a2) != np.sign(l1 * l2):
        raise StructureError("sign mismatch: no hypo structure with lambda1 lambda2 < 0 exists")
    c = (l1 * l2) / (a1 * a2)
    alpha = (l2 / a2) * s.alpha
    omega = c * s.omega
    rho = c ** 1.5 * s.rho
    return validate_su3(s.alg, alpha, omega, rho)
