"""Builders for the Lie-algebra constructions and the fixture catalog.

Three builders produce 7-dimensional hypo Lie algebras from 6-dimensional
Kahler data (central extension by ker(omega), the ker(beta) extension, and
the almost Abelian semidirect sum), one builds the one-dimensional-commutator
family, and find_inducing_hypo inverts "hypo induces cocalibrated".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .algebra import (AlgebraError, Form, LieAlgebra, Metric, ce_differential,
                      endo_action, interior, jacobi_check, lie_derivative,
                      nullspace, pullback, wedge)
from .gstruct import (G2Structure, SU3Structure, StructureError, drop_seventh,
                      embed_six, model_alpha, model_omega, model_rho,
                      model_rhohat, stable_three_form_data, su3_to_g2,
                      validate_g2, validate_su3)
from .torsion import check_cocalibrated

JACOBI_TOL = 1e-12


# ---------------------------------------------------------------------------
# Kahler data on a 6-dimensional Lie algebra
# ---------------------------------------------------------------------------

@dataclass
class KahlerData:
    """Kahler special almost Hermitian data (Omega, Psi) with beta and optional tau.

    beta is the unique real 1-form with d(Psi) = beta ^ Psi; when tau is
    present it must be a real (1,1)-form with d(tau) = -tau ^ beta.
    """

    alg: LieAlgebra
    Omega: Form
    Psi: Form
    beta: Form = None
    tau: Form = None
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alg.dim != 6:
            raise AlgebraError("KahlerData lives on a 6-dimensional Lie algebra")
        if self.beta is None:
            self.beta = solve_beta(self.alg, self.Psi)
        self.residuals = kahler_residuals(self)

    @property
    def J(self):
        J, _, _, _ = stable_three_form_data(self.Psi.real)
        return J

    def metric(self) -> Metric:
        J = self.J
        W = np.zeros((6, 6))
        for (i, j), v in self.Omega.items():
            W[i - 1, j - 1] = np.real(v)
            W[j - 1, i - 1] = -np.real(v)
        G = J.T @ W
        return Metric(6, 0.5 * (G + G.T), 1)

    def check(self, tol=1e-9, require_closed_beta=True):
        """Raise StructureError naming the first violated invariant."""
        r = self.residuals
        order = ["dOmega", "stability", "psi_hat", "Omega_wedge_Psi",
                 "normalization", "dPsi_beta"]
        if require_closed_beta:
            order.append("dbeta")
        if self.tau is not None:
            order += ["tau_type11", "dtau"]
        for name in order:
            if r[name] > tol:
                raise StructureError(f"Kahler data invariant failed: {name} (residual {r[name]:.2e})")


def solve_beta(alg: LieAlgebra, Psi: Form) -> Form:
    """Least-squares solution of d(Psi) = beta ^ Psi over real 1-forms."""
    dPsi = ce_differential(alg, Psi)
    cols = []
    for i in range(6):
        b = Form.basis(6, (i + 1,))
        w = wedge(b, Psi)
        cols.append(np.concatenate([np.real(w.coeffs), np.imag(w.coeffs)]))
    A = np.column_stack(cols)
    rhs = np.concatenate([np.real(dPsi.coeffs), np.imag(dPsi.coeffs)])
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return Form(6, 1, sol)


def kahler_residuals(k: KahlerData) -> dict:
    alg, Om, Psi, beta = k.alg, k.Omega, k.Psi, k.beta
    out = {}
    out["dOmega"] = ce_differential(alg, Om).sup_norm()
    rho = Psi.real
    try:
        J, rho_hat, vol, lam = stable_three_form_data(rho)
        out["stability"] = 0.0
        out["psi_hat"] = (Psi.imag - rho_hat).sup_norm()
        # Psi ^ conj(Psi) = (4i/3) Omega^3
        lhs = wedge(Psi, Psi.conj())
        rhs = (4j / 3.0) * wedge(wedge(Om, Om), Om)
        out["normalization"] = (lhs - rhs).sup_norm() / max(rhs.sup_norm(), 1e-300)
    except StructureError:
        out["stability"] = np.inf
        out["psi_hat"] = np.inf
        out["normalization"] = np.inf
    out["Omega_wedge_Psi"] = wedge(Om, Psi).sup_norm() / max(Psi.sup_norm(), 1e-300)
    out["dPsi_beta"] = (ce_differential(alg, Psi) - wedge(beta, Psi)).sup_norm()
    out["dbeta"] = ce_differential(alg, beta).sup_norm()
    if k.tau is not None:
        Jm = k.J
        out["tau_type11"] = (pullback(Jm, k.tau) - k.tau).sup_norm()
        out["dtau"] = (ce_differential(alg, k.tau) + wedge(k.tau, beta)).sup_norm()
    return out


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _structure_from_kahler(alg7: LieAlgebra, k: KahlerData) -> SU3Structure:
    return validate_su3(alg7, model_alpha(), embed_six(k.Omega), embed_six(k.Psi.real))


def build_domega_ideal(k: KahlerData) -> tuple[LieAlgebra, SU3Structure]:
    """Central-type extension with ker(omega) = span(e7) an ideal.

    Brackets: [e7, X] = -beta(X) e7 and [X, Y] = [X, Y]_h - tau(X, Y) e7;
    the Jacobi identity is equivalent to d(beta) = 0 and d(tau) = -tau ^ beta.
    """
    if k.tau is None:
        raise StructureError("build_domega_ideal needs a (possibly zero) tau")
    k.check(require_closed_beta=True)
    tau_mat = np.zeros((6, 6))
    for (i, j), v in k.tau.items():
        tau_mat[i - 1, j - 1] = np.real(v)
        tau_mat[j - 1, i - 1] = -np.real(v)
    c = np.zeros((7, 7, 7))
    c[:6, :6, :6] = k.alg.c
    c[:6, :6, 6] = -tau_mat
    b = np.real(k.beta.coeffs)
    c[6, :6, 6] = -b
    c[:6, 6, 6] = b
    alg7 = LieAlgebra(7, c)
    res = jacobi_check(alg7)
    if res > JACOBI_TOL:
        raise StructureError(f"Jacobi failed ({res:.2e}); check d(beta) = 0 and d(tau) = -tau ^ beta")
    alg7.attach_ideal("ker_omega", np.eye(7)[:, [6]])
    return alg7, _structure_from_kahler(alg7, k)


def quotient_pushdown(alg7: LieAlgebra, s: SU3Structure) -> KahlerData:
    """Push (omega, psi, beta, tau) down to g / ker(omega) = span(e7).

    Assumes the standard builder layout where ker(omega) is the last basis
    direction.
    """
    if np.abs(s.X - np.eye(7)[:, 6]).max() > 1e-9:
        raise StructureError("quotient pushdown expects ker(omega) = span(e7)")
    c6 = alg7.c[:6, :6, :6].copy()
    h = LieAlgebra(6, c6)
    dal = ce_differential(alg7, s.alpha)
    beta7 = interior(s.X, dal)
    tau7 = dal - wedge(s.alpha, beta7)
    Om = drop_seventh(s.omega)
    Psi = drop_seventh(s.rho) + 1j * drop_seventh(s.rhohat)
    return KahlerData(h, Om, Psi, beta=drop_seventh(beta7), tau=drop_seventh(tau7))


def build_kahler_extension(k: KahlerData) -> tuple[LieAlgebra, SU3Structure]:
    """Extension by X with [X, Z] = [Y, Z] on ker(beta) and [X, Y] = |beta|^2 (Y - X).

    Y = sharp(beta) for the induced metric; requires d(beta) = 0 and the
    Lie-derivative identity L_Y omega = beta ^ (Y -| omega).
    """
    k.check(require_closed_beta=True)
    m = k.metric()
    beta = np.real(k.beta.coeffs)
    Y = m.sharp(beta)
    nb2 = float(beta @ Y)
    lhs = lie_derivative(k.alg, Y, k.Omega)
    rhs = wedge(k.beta, interior(Y, k.Omega))
    if (lhs - rhs).sup_norm() > 1e-9 * max(1.0, k.Omega.sup_norm(), nb2):
        raise StructureError("Lie-derivative identity L_Y omega = beta ^ (Y -| omega) failed")
    c = np.zeros((7, 7, 7))
    c[:6, :6, :6] = k.alg.c
    if nb2 > 0:
        P = np.eye(6) - np.outer(Y, beta) / nb2      # projection onto ker(beta)
        for a in range(6):
            z = P[:, a]
            w = k.alg.bracket(Y, z)                   # [X, Z] = [Y, Z]_h
            coeff_y = beta[a] / nb2
            c[6, a, :6] = w + coeff_y * nb2 * Y       # [X, c Y] = c |b|^2 Y ...
            c[6, a, 6] = -coeff_y * nb2               # ... - c |b|^2 X
            c[a, 6, :6] = -c[6, a, :6]
            c[a, 6, 6] = -c[6, a, 6]
    alg7 = LieAlgebra(7, c)
    res = jacobi_check(alg7)
    if res > JACOBI_TOL:
        raise StructureError(f"Jacobi failed ({res:.2e}) in the ker(beta) extension")
    return alg7, _structure_from_kahler(alg7, k)


def build_class_ii(a: float, a1=0.0, a2=0.0, a3=0.0, a4=0.0, a5=0.0):
    """One-dimensional-kernel family with ker(alpha) an ideal (class V1(l2)+V12)."""
    if a == 0:
        raise StructureError("the parameter a must be nonzero")
    br = {
        (1, 6): {2: a}, (2, 6): {1: -a}, (3, 6): {4: -a}, (4, 6): {3: a},
        (1, 7): {2: -a1, 3: a2, 4: a3},
        (2, 7): {1: a1, 3: a3, 4: -a2},
        (3, 7): {1: a2, 2: a3, 4: -a4},
        (4, 7): {1: a3, 2: -a2, 3: a4},
        (6, 7): {5: a5},
    }
    alg = LieAlgebra.from_brackets(7, br)
    if jacobi_check(alg) > JACOBI_TOL:
        raise StructureError("Jacobi identity failed for the class-(ii) bracket table")
    s = validate_su3(alg, model_alpha(), model_omega(), model_rho())
    return alg, s


def build_almost_abelian(f, omega0: Form = None, psi0: Form = None):
    """g = R^6 x| span(e7) with ad(e7)|_u = f and structure (e7, omega0, psi0).

    The structure is hypo exactly when f is symplectic for omega0; a
    non-symplectic f still yields a valid algebra.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (6, 6):
        raise AlgebraError("f must be a 6 x 6 matrix")
    c = np.zeros((7, 7, 7))
    c[6, :6, :6] = f.T            # [e7, e_a] = f(e_a)
    c[:6, 6, :6] = -f.T
    alg = LieAlgebra(7, c)
    om = embed_six(omega0) if omega0 is not None and omega0.dim == 6 else (omega0 or model_omega())
    if psi0 is None:
        rho = model_rho()
    else:
        rho = embed_six(psi0.real) if psi0.dim == 6 else psi0.real
    s = validate_su3(alg, model_alpha(), om, rho)
    return alg, s


def find_inducing_hypo(g2: G2Structure, tol=1e-9):
    """Unit X with d(X -| phi) = 0 and d(X^b ^ phi) = 0, plus the hypo structure.

    Solves the joint linear system over X; on multi-dimensional solution
    spaces the tie-break picks the first standard-basis direction with a
    nonzero projection onto the space.
    """
    if check_cocalibrated(g2) > 1e-8 * max(1.0, g2.phi.sup_norm()):
        raise StructureError("phi is not cocalibrated")
    alg, phi, G = g2.alg, g2.phi, np.real(g2.G)
    rows = []
    for j in range(7):
        e = np.eye(7)[:, j]
        r1 = ce_differential(alg, interior(e, phi)).coeffs
        r2 = ce_differential(alg, wedge(Form(7, 1, G[:, j]), phi)).coeffs
        rows.append(np.concatenate([r1, r2]))
    A = np.column_stack(rows)
    N = nullspace(A, rtol=tol)
    if N.shape[1] == 0:
        raise StructureError("phi is not induced by a hypo structure (no admissible X)")
    P = N @ N.T
    X = None
    for i in range(7):
        v = P @ np.eye(7)[:, i]
        if np.linalg.norm(v) > 1e-8:
            X = v
            break
    lead = np.argmax(np.abs(X) > 1e-8)
    if X[lead] < 0:
        X = -X
    X = X / np.real(np.sqrt(X @ G @ X))
    alpha = Form(7, 1, G @ X)
    omega = interior(X, phi)
    tau = wedge(omega, alpha) - phi
    rho = interior(X, g2.starphi)
    s = validate_su3(alg, alpha, omega, rho, tol=1e-8)
    if (s.rhohat - tau).sup_norm() > 1e-7 * max(1.0, phi.sup_norm()):
        raise StructureError("phi decomposition inconsistent: hat(rho) != tau")
    return X, s


# ---------------------------------------------------------------------------
# diagonal normal form of Lemma 5.4 / Theorem 5.5
# ---------------------------------------------------------------------------

@dataclass
class DiagonalCase:
    case: str                      # "(i)", "(ii)", "(iii)" or "none"
    eligible: bool                 # SU(4) criterion for case (iii)
    params: dict = field(default_factory=dict)


def diagonal_conditions(f, phi0: G2Structure = None, tol=1e-9) -> DiagonalCase:
    """Classify ad(e7)|_u against the orthogonal-basis cases, in the given adapted basis.

    Case (i): f in u(3). Case (ii): orthogonal J0- and f-invariant splitting
    4+2 with [f, J0] = 0 on the 4-part and equal-diagonal f on the 2-part.
    Case (iii): the (a, lambda_i, mu_j) normal form with
    a((l1-l2)^2 + (m1-m2)^2) = 0; eligibility additionally needs
    lambda_i + mu_i != 0 for all i.
    """
    f = np.asarray(f, dtype=float)
    if phi0 is None:
        om6 = drop_seventh(model_omega())
        rho6 = drop_seventh(model_rho())
    else:
        om6 = drop_seventh(interior(np.eye(7)[:, 6], phi0.phi))
        rho6 = drop_seventh(phi0.phi - wedge(interior(np.eye(7)[:, 6], phi0.phi), model_alpha()))
    if endo_action(f, om6).sup_norm() > 1e-9 * max(1.0, np.abs(f).max()):
        raise StructureError("f is not symplectic for omega0 (phi0 not cocalibrated)")
    J0, _, _, _ = stable_three_form_data(rho6)
    scale = max(1.0, np.abs(f).max())
    if np.abs(f @ J0 - J0 @ f).max() <= tol * scale:
        return DiagonalCase("(i)", False)
    pairs = [(0, 1), (2, 3), (4, 5)]
    for p in range(3):
        v2 = list(pairs[p])
        v4 = [i for q in range(3) if q != p for i in pairs[q]]
        off = max(np.abs(f[np.ix_(v4, v2)]).max(), np.abs(f[np.ix_(v2, v4)]).max())
        comm4 = np.abs((f @ J0 - J0 @ f)[np.ix_(v4, v4)]).max()
        diag_eq = abs(f[v2[0], v2[0]] - f[v2[1], v2[1]])
        if off <= tol * scale and comm4 <= tol * scale and diag_eq <= tol * scale:
            return DiagonalCase("(ii)", False,
                                {"a": f[v2[0], v2[0]], "b": -f[v2[1], v2[0]], "c": -f[v2[0], v2[1]],
                                 "pair": p})
    pattern = np.zeros((6, 6), dtype=bool)
    slots = {"m1": (0, 1), "l1": (1, 0), "m2": (2, 3), "l2": (3, 2),
             "m3": (4, 5), "l3": (5, 4), "a+": [(2, 0), (3, 1)], "a-": [(0, 2), (1, 3)]}
    for key in ("m1", "l1", "m2", "l2", "m3", "l3"):
        pattern[slots[key]] = True
    for ij in slots["a+"] + slots["a-"]:
        pattern[ij] = True
    if np.abs(f[~pattern]).max() <= tol * scale:
        a = f[2, 0]
        ok_a = (abs(f[3, 1] - a) <= tol * scale and abs(f[0, 2] + a) <= tol * scale
                and abs(f[1, 3] + a) <= tol * scale)
        lam = (f[1, 0], f[3, 2], f[5, 4])
        mu = (f[0, 1], f[2, 3], f[4, 5])
        constraint = abs(a * ((lam[0] - lam[1]) ** 2 + (mu[0] - mu[1]) ** 2))
        if ok_a and constraint <= tol * max(1.0, scale ** 3):
            eligible = all(abs(l + m) > tol * scale for l, m in zip(lam, mu))
            return DiagonalCase("(iii)", eligible, {"a": a, "lam": lam, "mu": mu})
    return DiagonalCase("none", False)


def diagonal_f(a, lam, mu):
    """The Theorem 5.5 normal-form matrix for (a, lambda_1..3, mu_1..3)."""
    f = np.zeros((6, 6))
    f[0, 1], f[1, 0] = mu[0], lam[0]
    f[2, 3], f[3, 2] = mu[1], lam[1]
    f[4, 5], f[5, 4] = mu[2], lam[2]
    f[2, 0] = f[3, 1] = a
    f[0, 2] = f[1, 3] = -a
    return f


# ---------------------------------------------------------------------------
# fixture catalog
# ---------------------------------------------------------------------------

@dataclass
class CatalogEntry:
    name: str
    alg: LieAlgebra
    su3: SU3Structure = None
    g2: G2Structure = None
    kahler: KahlerData = None
    params: dict = field(default_factory=dict)
    notes: str = ""


CATALOG_IDS = ("h7-cocal", "h3-r4", "h5-r2", "invtors-1", "invtors-2",
               "kahler-closedbeta", "kahler-dbeta-nonzero", "parallel-nonideal",
               "v1v6v12-r2", "class-ii", "diagonal", "intrtors-su4")


def _sqrt(x):
    return float(np.sqrt(x))


def _heisenberg_like(pairs):
    br = {pair: {7: 1.0} for pair in pairs}
    return LieAlgebra.from_brackets(7, br)


def _invtors_algebra(which: int) -> LieAlgebra:
    s2 = 2.0 * _sqrt(2.0)
    s6 = _sqrt(6.0)
    e = Form.basis
    z = Form.zero(7, 2)
    if which == 1:
        diffs = [
            s2 * e(7, (1, 2)),
            z,
            (2.0 / 3.0) * s6 * (e(7, (3, 4)) + e(7, (5, 6))),
            (-2.0 / 3.0) * s6 * (e(7, (3, 4)) + e(7, (5, 6))),
            -s2 * e(7, (1, 6)) - (s6 / 3.0) * (e(7, (3, 5)) + 3 * e(7, (3, 6))
                                               + e(7, (4, 5)) - 3 * e(7, (4, 6))) + 4 * e(7, (6, 7)),
            s2 * e(7, (1, 5)) + (s6 / 3.0) * (3 * e(7, (3, 5)) - e(7, (3, 6))
                                              - 3 * e(7, (4, 5)) - e(7, (4, 6))) - 4 * e(7, (5, 7)),
            -2.0 * (e(7, (1, 2)) + e(7, (3, 4)) + e(7, (5, 6))),
        ]
    else:
        diffs = [
            s2 * e(7, (1, 2)),
            z,
            s2 * e(7, (3, 4)),
            z,
            -s2 * (e(7, (1, 6)) + e(7, (3, 6))) + 4 * e(7, (6, 7)),
            s2 * (e(7, (1, 5)) + e(7, (3, 5))) - 4 * e(7, (5, 7)),
            -2.0 * (e(7, (1, 2)) + e(7, (3, 4)) + e(7, (5, 6))),
        ]
    return LieAlgebra.from_differentials(diffs)


def _r2r2r2_kahler() -> KahlerData:
    h = LieAlgebra.from_brackets(6, {(1, 2): {1: 1.0}, (3, 4): {3: 1.0}, (5, 6): {5: 1.0}})
    Om = model_omega(6)
    Psi = model_rho(6) + 1j * model_rhohat(6)
    e = Form.basis
    tau = (e(6, (1, 4)) + e(6, (1, 6)) + e(6, (3, 6)) - e(6, (2, 3)) - e(6, (2, 5))
           - e(6, (4, 5)) + 2 * Om)
    return KahlerData(h, Om, Psi, tau=tau)


def _dbeta_nonzero_kahler() -> KahlerData:
    h = LieAlgebra.from_brackets(6, {(4, 1): {1: 1.0}, (4, 2): {3: -1.0}, (4, 3): {2: 1.0}})
    e = Form.basis
    Om = e(6, (1, 4)) + e(6, (2, 3)) + e(6, (5, 6))
    one = e(6, (1,)) - 1j * e(6, (4,))
    two = e(6, (2,)) - 1j * e(6, (3,))
    three = e(6, (5,)) - 1j * e(6, (6,))
    Psi = wedge(wedge(one, two), three)
    return KahlerData(h, Om, Psi)


def parse_catalog_id(name: str):
    """Split 'class-ii(1;0,0,0,0,0)' style ids into (base, params)."""
    m = re.fullmatch(r"([a-z0-9-]+)(?:\(([^)]*)\))?", name.strip())
    if not m:
        raise KeyError(f"unknown catalog id {name!r}")
    base, argstr = m.group(1), m.group(2)
    if argstr is None:
        return base, None
    groups = [seg for seg in argstr.split(";")]
    vals = [[float(x) for x in seg.split(",")] if seg else [] for seg in groups]
    return base, vals


def catalog(name: str) -> CatalogEntry:
    """Resolve a fixture id to its algebra and structures; unknown ids raise KeyError."""
    base, params = parse_catalog_id(name)
    if base == "h7-cocal":
        alg = _heisenberg_like([(1, 2), (3, 4), (5, 6)])
        phi = wedge(model_omega(), model_alpha()) + model_rho()
        return CatalogEntry(name, alg, g2=validate_g2(alg, phi),
                            notes="Heisenberg h7 with cocalibrated phi = w ^ e7 + rho")
    if base == "h3-r4":
        alg = _heisenberg_like([(1, 2)])
        phi = wedge(model_omega(), model_alpha()) + model_rho()
        return CatalogEntry(name, alg, g2=validate_g2(alg, phi))
    if base == "h5-r2":
        alg = _heisenberg_like([(1, 2), (3, 4)])
        phi = wedge(model_omega(), model_alpha()) + model_rho()
        return CatalogEntry(name, alg, g2=validate_g2(alg, phi))
    if base in ("invtors-1", "invtors-2", "intrtors-su4"):
        which = 2 if base == "invtors-2" else 1
        alg = _invtors_algebra(which)
        s = validate_su3(alg, model_alpha(), model_omega(), model_rho())
        notes = "invariant intrinsic torsion (-2, -4)"
        if base == "intrtors-su4":
            notes += "; closed-form SU(4) metric via the invariant-torsion flow"
        return CatalogEntry(name, alg, su3=s, notes=notes)
    if base == "kahler-closedbeta":
        k = _r2r2r2_kahler()
        return CatalogEntry(name, k.alg, kahler=k, notes="r2+r2+r2 Kahler data, d(beta) = 0")
    if base == "kahler-dbeta-nonzero":
        k = _dbeta_nonzero_kahler()
        return CatalogEntry(name, k.alg, kahler=k, notes="Kahler data with d(beta) != 0")
    if base == "parallel-nonideal":
        e = Form.basis
        diffs = [e(7, (2, 7)), -e(7, (1, 7)), -e(7, (4, 7)), e(7, (3, 7)),
                 Form.zero(7, 2), Form.zero(7, 2), Form.zero(7, 2)]
        alg = LieAlgebra.from_differentials(diffs)
        s = validate_su3(alg, model_alpha(), model_omega(), model_rho())
        return CatalogEntry(name, alg, su3=s, notes="parallel hypo structure, ker(omega) not an ideal")
    if base == "v1v6v12-r2":
        alg = LieAlgebra.from_brackets(7, {(1, 2): {1: 1.0}, (7, 1): {1: -1.0},
                                           (7, 2): {7: -1.0, 2: 1.0}})
        s = validate_su3(alg, model_alpha(), model_omega(), model_rho())
        return CatalogEntry(name, alg, su3=s, notes="ker(beta) extension of r2 + R^4")
    if base == "class-ii":
        vals = params or [[1.0], [0.0, 0.0, 0.0, 0.0, 0.0]]
        if len(vals) == 1:
            vals = [vals[0][:1], vals[0][1:] or [0.0] * 5]
        a = vals[0][0]
        rest = (vals[1] + [0.0] * 5)[:5]
        alg, s = build_class_ii(a, *rest)
        return CatalogEntry(name, alg, su3=s, params={"a": a, "a1..a5": rest})
    if base == "diagonal":
        vals = params or [[0.0], [0.0, 0.0, 0.0], [3.0, 2.0, 1.0]]
        a = vals[0][0]
        lam = tuple(vals[1])
        mu = tuple(vals[2])
        f = diagonal_f(a, lam, mu)
        alg, s = build_almost_abelian(f)
        return CatalogEntry(name, alg, su3=s, g2=su3_to_g2(s),
                            params={"a": a, "lam": lam, "mu": mu})
    raise KeyError(f"unknown catalog id {name!r}")
