"""Exterior algebra over R^n (n <= 8) and Chevalley-Eilenberg calculus.

Forms are stored densely over strictly increasing multi-indices in
lexicographic order; that ordering is also used by every flattened
linear-algebra view elsewhere in the package.

Sign conventions pinned here (each one has a dedicated test):
  * d on 1-forms:  d(eta)(X, Y) = -eta([X, Y])
  * Hodge star:    a ^ star(b) = <a, b> vol
  * endomorphism action: f.nu extends -f^T on 1-forms, so that on an
    almost Abelian algebra with ad(e_n)|_u = f one has d(nu) = e^n ^ f.nu
    for nu in Lambda^k u*.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_DIM = 8


class AlgebraError(ValueError):
    """Raised for malformed algebraic input (dimension mismatch, bad metric...)."""


# ---------------------------------------------------------------------------
# multi-index bookkeeping
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def monomials(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing k-tuples out of range(n), lexicographic."""
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def monomial_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(monomials(n, k))}


def n_monomials(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    return len(monomials(n, k))


def sort_sign(idx):
    """Sort a repeated-free index tuple; return (sorted tuple, permutation sign).

    Returns (None, 0) when an index repeats.
    """
    idx = list(idx)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(idx)):
        if idx[i - 1] == idx[i]:
            return None, 0
    return tuple(idx), sign


@lru_cache(maxsize=None)
def _wedge_table(n, k, l):
    """Index arrays (ia, ib, iout, sign) with e^I ^ e^J = sign e^(I u J)."""
    ia, ib, iout, sg = [], [], [], []
    if k + l <= n:
        idx_out = monomial_index(n, k + l)
        for i, I in enumerate(monomials(n, k)):
            for j, J in enumerate(monomials(n, l)):
                merged, s = sort_sign(I + J)
                if s == 0:
                    continue
                ia.append(i)
                ib.append(j)
                iout.append(idx_out[merged])
                sg.append(s)
    return (np.asarray(ia, dtype=np.intp), np.asarray(ib, dtype=np.intp),
            np.asarray(iout, dtype=np.intp), np.asarray(sg, dtype=np.float64))


@lru_cache(maxsize=None)
def _interior_table(n, k):
    """Index arrays (ivec, ia, iout, sign) for v -| a on k-forms."""
    iv, ia, iout, sg = [], [], [], []
    idx_out = monomial_index(n, k - 1)
    for i, I in enumerate(monomials(n, k)):
        for p, ind in enumerate(I):
            rest = I[:p] + I[p + 1:]
            iv.append(ind)
            ia.append(i)
            iout.append(idx_out[rest])
            sg.append((-1.0) ** p)
    return (np.asarray(iv, dtype=np.intp), np.asarray(ia, dtype=np.intp),
            np.asarray(iout, dtype=np.intp), np.asarray(sg, dtype=np.float64))


@lru_cache(maxsize=None)
def _complement_table(n, k):
    """For each k-monomial J: index of its complement and the sign of (J, J^c)."""
    idx_c = monomial_index(n, n - k)
    jc, eps = [], []
    full = set(range(n))
    for J in monomials(n, k):
        Jc = tuple(sorted(full - set(J)))
        _, s = sort_sign(J + Jc)
        jc.append(idx_c[Jc])
        eps.append(s)
    return np.asarray(jc, dtype=np.intp), np.asarray(eps, dtype=np.float64)


@lru_cache(maxsize=None)
def _index_array(n, k):
    return np.asarray(monomials(n, k), dtype=np.intp).reshape(n_monomials(n, k), k)


def _gram_minors(M, n, k):
    """Matrix of k x k minors det(M[I, J]) over k-monomial pairs (I, J)."""
    if k == 0:
        return np.ones((1, 1), dtype=M.dtype)
    if k == 1:
        return M
    idx = _index_array(n, k)
    A = M[idx[:, None, :, None], idx[None, :, None, :]]
    if k == 2:
        return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    if k == 3:
        return (A[..., 0, 0] * (A[..., 1, 1] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 1])
                - A[..., 0, 1] * (A[..., 1, 0] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 0])
                + A[..., 0, 2] * (A[..., 1, 0] * A[..., 2, 1] - A[..., 1, 1] * A[..., 2, 0]))
    return np.linalg.det(A)


# ---------------------------------------------------------------------------
# forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Form:
    """Exterior form of fixed degree with dense coefficients.

    Coefficients may be real or complex; all operations preserve the scalar
    kind. Values are immutable after construction.
    """

    dim: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not (0 < self.dim <= MAX_DIM):
            raise AlgebraError(f"dimension {self.dim} outside 1..{MAX_DIM}")
        if not (0 <= self.degree <= self.dim):
            raise AlgebraError(f"degree {self.degree} outside 0..{self.dim}")
        c = np.asarray(self.coeffs)
        if c.shape != (n_monomials(self.dim, self.degree),):
            raise AlgebraError("coefficient vector has wrong length")
        c = c.astype(np.complex128 if np.iscomplexobj(c) else np.float64)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero(dim, degree, complex_=False):
        dt = np.complex128 if complex_ else np.float64
        return Form(dim, degree, np.zeros(n_monomials(dim, degree), dtype=dt))

    @staticmethod
    def from_dict(dim, degree, entries):
        """Build from {multi-index tuple: coefficient}; indices are 0-based."""
        coeffs = np.zeros(n_monomials(dim, degree),
                          dtype=np.complex128 if any(np.iscomplexobj(v) for v in entries.values()) else np.float64)
        idx = monomial_index(dim, degree)
        for I, v in entries.items():
            srt, s = sort_sign(tuple(I))
            if s == 0:
                raise AlgebraError(f"repeated index in monomial {I}")
            coeffs[idx[srt]] += s * v
        return Form(dim, degree, coeffs)

    @staticmethod
    def basis(dim, I):
        """The basis monomial e^I (1-based indices)."""
        I0 = tuple(i - 1 for i in I)
        return Form.from_dict(dim, len(I0), {I0: 1.0})

    # -- scalar kind -------------------------------------------------------
    @property
    def is_complex(self):
        return np.iscomplexobj(self.coeffs)

    @property
    def real(self):
        return Form(self.dim, self.degree, np.real(self.coeffs))

    @property
    def imag(self):
        return Form(self.dim, self.degree, np.imag(self.coeffs))

    def conj(self):
        return Form(self.dim, self.degree, np.conj(self.coeffs))

    # -- arithmetic --------------------------------------------------------
    def _check_same(self, other):
        if self.dim != other.dim:
            raise AlgebraError("dimension mismatch")
        if self.degree != other.degree:
            raise AlgebraError("degree mismatch")

    def __add__(self, other):
        self._check_same(other)
        return Form(self.dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_same(other)
        return Form(self.dim, self.degree, self.coeffs - other.coeffs)

    def __neg__(self):
        return Form(self.dim, self.degree, -self.coeffs)

    def __rmul__(self, c):
        return Form(self.dim, self.degree, c * self.coeffs)

    def __mul__(self, c):
        return self.__rmul__(c)

    def sup_norm(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def __call__(self, *vectors):
        """Evaluate on dim-vectors (given as coefficient arrays)."""
        if len(vectors) != self.degree:
            raise AlgebraError("wrong number of arguments")
        if self.degree == 0:
            return self.coeffs[0]
        V = np.column_stack([np.asarray(v) for v in vectors])
        idx = _index_array(self.dim, self.degree)
        dets = np.linalg.det(V[idx, :]) if self.degree > 1 else V[idx[:, 0], 0]
        return self.coeffs @ dets

    def items(self):
        """Yield (1-based multi-index tuple, coefficient) for nonzero entries."""
        for I, c in zip(monomials(self.dim, self.degree), self.coeffs):
            if c != 0:
                yield tuple(i + 1 for i in I), c


def promote(a: Form, dim: int) -> Form:
    """Reinterpret a form on R^m as a form on R^dim (dim >= m), same indices."""
    if dim < a.dim:
        raise AlgebraError("promote target dimension too small")
    if dim == a.dim:
        return a
    k = a.degree
    idx = monomial_index(dim, k)
    out = np.zeros(n_monomials(dim, k), dtype=a.coeffs.dtype)
    for i, I in enumerate(monomials(a.dim, k)):
        out[idx[I]] = a.coeffs[i]
    return Form(dim, k, out)


def restrict_top(a: Form, dim: int) -> Form:
    """Drop all components touching indices >= dim (inverse of promote)."""
    if dim > a.dim:
        raise AlgebraError("restrict target dimension too large")
    if dim == a.dim:
        return a
    k = a.degree
    if k > dim:
        raise AlgebraError("degree exceeds the target dimension")
    idx = monomial_index(dim, k)
    out = np.zeros(n_monomials(dim, k), dtype=a.coeffs.dtype)
    for i, I in enumerate(monomials(a.dim, k)):
        if I and I[-1] >= dim:
            continue
        out[idx[I]] = a.coeffs[i]
    return Form(dim, k, out)


@lru_cache(maxsize=None)
def wedge_tensor(n, k, l):
    """Dense tensor T with (a ^ b)_q = T[i, j, q] a_i b_j."""
    ia, ib, iout, sg = _wedge_table(n, k, l)
    T = np.zeros((n_monomials(n, k), n_monomials(n, l), n_monomials(n, k + l)))
    T[ia, ib, iout] = sg
    return T


@lru_cache(maxsize=None)
def interior_tensor(n, k):
    """Dense tensor T with (v -| a)_o = T[m, o, i] v_m a_i."""
    iv, ia, iout, sg = _interior_table(n, k)
    T = np.zeros((n, n_monomials(n, k - 1), n_monomials(n, k)))
    np.add.at(T, (iv, iout, ia), sg)
    return T


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; zero form when the degrees overflow the dimension."""
    if a.dim != b.dim:
        raise AlgebraError("dimension mismatch")
    k, l = a.degree, b.degree
    if k + l > a.dim:
        return Form.zero(a.dim, a.dim, a.is_complex or b.is_complex)
    ia, ib, iout, sg = _wedge_table(a.dim, k, l)
    out = np.zeros(n_monomials(a.dim, k + l), dtype=np.result_type(a.coeffs, b.coeffs))
    np.add.at(out, iout, sg * a.coeffs[ia] * b.coeffs[ib])
    return Form(a.dim, k + l, out)


def wedge_all(*forms: Form) -> Form:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def interior(v, a: Form) -> Form:
    """Interior product v -| a (antiderivation of degree -1)."""
    v = np.asarray(v)
    if v.shape != (a.dim,):
        raise AlgebraError("dimension mismatch")
    if a.degree == 0:
        raise AlgebraError("interior product of a degree-0 form")
    iv, ia, iout, sg = _interior_table(a.dim, a.degree)
    out = np.zeros(n_monomials(a.dim, a.degree - 1), dtype=np.result_type(v, a.coeffs))
    np.add.at(out, iout, sg * v[iv] * a.coeffs[ia])
    return Form(a.dim, a.degree - 1, out)


def pullback(A, a: Form) -> Form:
    """Pullback (A*a)(v_1..v_k) = a(A v_1, .., A v_k) for a matrix A."""
    A = np.asarray(A)
    n, k = a.dim, a.degree
    if A.shape != (n, n):
        raise AlgebraError("dimension mismatch")
    if k == 0:
        return a
    idx = _index_array(n, k)
    if k == 1:
        M = A
    else:
        M = np.linalg.det(A[idx[:, None, :, None], idx[None, :, None, :]])
    # M[I, J] = det(A[rows I, cols J]); (A*a)_J = sum_I a_I M[I, J]
    return Form(n, k, M.T @ a.coeffs if k > 1 else A.T @ a.coeffs)


# ---------------------------------------------------------------------------
# metric, inner products, Hodge star
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metric:
    """Inner products of the working basis plus an orientation sign."""

    dim: int
    G: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        G = np.asarray(self.G)
        if G.shape != (self.dim, self.dim):
            raise AlgebraError("metric matrix has wrong shape")
        if self.orientation not in (-1, 1):
            raise AlgebraError("orientation must be +1 or -1")
        if not np.iscomplexobj(G):
            if not np.allclose(G, G.T, atol=1e-10 * max(1.0, np.abs(G).max())):
                raise AlgebraError("metric not symmetric")
            if np.linalg.eigvalsh(G).min() <= 0:
                raise AlgebraError("metric not positive definite")
        G = G.astype(np.complex128 if np.iscomplexobj(G) else np.float64)
        G.flags.writeable = False
        object.__setattr__(self, "G", G)

    @staticmethod
    def identity(dim, orientation=1):
        return Metric(dim, np.eye(dim), orientation)

    @property
    def Ginv(self):
        return np.linalg.inv(self.G)

    def volume_form(self) -> Form:
        s = np.sqrt(np.linalg.det(self.G))
        top = np.array([self.orientation * s])
        return Form(self.dim, self.dim, top)

    def sharp(self, covec):
        return self.Ginv @ np.asarray(covec)

    def flat(self, vec):
        return self.G @ np.asarray(vec)

    def vector_norm(self, vec):
        v = np.asarray(vec)
        return np.sqrt(v @ self.G @ v)


def form_gram(metric: Metric, k: int):
    """Gram matrix of <.,.> on degree-k forms (k x k minors of G^{-1})."""
    return _gram_minors(metric.Ginv, metric.dim, k)


def form_inner(a: Form, b: Form, metric: Metric):
    a._check_same(b)
    return a.coeffs @ form_gram(metric, a.degree) @ b.coeffs


def form_norm(a: Form, metric: Metric) -> float:
    if a.is_complex:
        re = form_inner(a.real, a.real, metric)
        im = form_inner(a.imag, a.imag, metric)
        return float(np.sqrt(np.real(re + im)))
    return float(np.sqrt(np.real(form_inner(a, a, metric))))


def hodge_star(a: Form, metric: Metric) -> Form:
    """Hodge star with the convention a ^ star(b) = <a, b> vol."""
    if metric.dim != a.dim:
        raise AlgebraError("dimension mismatch")
    n, k = a.dim, a.degree
    u = form_gram(metric, k) @ a.coeffs
    jc, eps = _complement_table(n, k)
    s = metric.orientation * np.sqrt(np.linalg.det(metric.G))
    out = np.zeros(n_monomials(n, n - k), dtype=u.dtype)
    out[jc] = eps * u * s
    return Form(n, n - k, out)


# ---------------------------------------------------------------------------
# Lie algebras and the Chevalley-Eilenberg differential
# ---------------------------------------------------------------------------

def nullspace(M, rtol=1e-10):
    """Orthonormal basis (columns) of the kernel of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    u, s, vt = np.linalg.svd(M)
    if s.size == 0:
        return np.eye(M.shape[1])
    rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:].T


@dataclass
class LieAlgebra:
    """Lie algebra given by structure constants c[i,j,k]: [e_i,e_j] = c[i,j,k] e_k."""

    dim: int
    c: np.ndarray
    basis: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (3 <= self.dim <= MAX_DIM):
            raise AlgebraError(f"dimension {self.dim} outside 3..{MAX_DIM}")
        c = np.asarray(self.c, dtype=float)
        if c.shape != (self.dim,) * 3:
            raise AlgebraError("structure constants have wrong shape")
        if np.abs(c + np.swapaxes(c, 0, 1)).max() > 1e-12 * max(1.0, np.abs(c).max()):
            raise AlgebraError("structure constants not antisymmetric")
        self.c = c
        if not self.basis:
            self.basis = [f"e{i + 1}" for i in range(self.dim)]
        self._d_cache: dict[int, np.ndarray] = {}
        self._ideals: dict[str, np.ndarray] = {}

    # -- constructors ------------------------------------------------------
    @staticmethod
    def abelian(dim):
        return LieAlgebra(dim, np.zeros((dim, dim, dim)))

    @staticmethod
    def from_brackets(dim, brackets, basis=None):
        """brackets: {(i, j): {k: coeff}} with 1-based i < j meaning [e_i,e_j]."""
        c = np.zeros((dim, dim, dim))
        for (i, j), terms in brackets.items():
            for k, v in terms.items():
                c[i - 1, j - 1, k - 1] += v
                c[j - 1, i - 1, k - 1] -= v
        return LieAlgebra(dim, c, basis or [])

    @staticmethod
    def from_differentials(diffs, basis=None):
        """diffs: list of 2-forms, entry k is d(e^{k+1}); inverts d(eta)(X,Y) = -eta([X,Y])."""
        dim = diffs[0].dim
        c = np.zeros((dim, dim, dim))
        for k, dk in enumerate(diffs):
            if dk.degree != 2 or dk.dim != dim:
                raise AlgebraError("differentials must be 2-forms of matching dimension")
            for (i, j), v in dk.items():
                c[i - 1, j - 1, k] = -np.real(v)
                c[j - 1, i - 1, k] = np.real(v)
        return LieAlgebra(dim, c, basis or [])

    # -- basic operations --------------------------------------------------
    def bracket(self, x, y):
        return np.einsum("i,j,ijk->k", np.asarray(x), np.asarray(y), self.c)

    def ad(self, x):
        """Matrix of ad(x) = [x, .]."""
        return np.einsum("i,ijk->kj", np.asarray(x), self.c)

    def differential_matrix(self, k):
        """Matrix of d: Lambda^k -> Lambda^{k+1} in the monomial bases."""
        if k in self._d_cache:
            return self._d_cache[k]
        n = self.dim
        N_in, N_out = n_monomials(n, k), n_monomials(n, k + 1)
        D = np.zeros((N_out, N_in))
        if k >= n:
            self._d_cache[k] = D
            return D
        if k == 0:
            self._d_cache[k] = D
            return D
        # d(e^m) as 2-form coefficients
        idx2 = monomial_index(n, 2)
        de1 = np.zeros((n_monomials(n, 2), n))
        for i in range(n):
            for j in range(i + 1, n):
                de1[idx2[(i, j)], :] = -self.c[i, j, :]
        if k == 1:
            D = de1
        else:
            for col, I in enumerate(monomials(n, k)):
                acc = np.zeros(N_out)
                for p, m in enumerate(I):
                    rest = I[:p] + I[p + 1:]
                    dm = Form(n, 2, de1[:, m])
                    rest_form = Form.from_dict(n, k - 1, {rest: 1.0})
                    acc += ((-1.0) ** p) * wedge(dm, rest_form).coeffs
                D[:, col] = acc
        self._d_cache[k] = D
        return D

    # -- ideals metadata ---------------------------------------------------
    def attach_ideal(self, name, basis_matrix, tol=1e-10):
        """Record a subspace as an ideal after checking [g, U] <= U."""
        U = np.asarray(basis_matrix, dtype=float)
        if not self.is_ideal(U, tol):
            raise AlgebraError(f"subspace {name!r} is not an ideal")
        self._ideals[name] = U

    def ideal(self, name):
        return self._ideals[name]

    def is_ideal(self, basis_matrix, tol=1e-10):
        U = np.atleast_2d(np.asarray(basis_matrix, dtype=float))
        if U.shape[0] != self.dim:
            U = U.T
        P = U @ np.linalg.pinv(U)
        for i in range(self.dim):
            for j in range(U.shape[1]):
                w = self.bracket(np.eye(self.dim)[i], U[:, j])
                if np.linalg.norm(w - P @ w) > tol * max(1.0, np.linalg.norm(w)):
                    return False
        return True


def ce_differential(g: LieAlgebra, a: Form) -> Form:
    """Chevalley-Eilenberg differential on left-invariant forms."""
    if a.dim != g.dim:
        raise AlgebraError("form dimension does not match the algebra")
    if a.degree >= g.dim:
        return Form.zero(g.dim, g.dim, a.is_complex) if a.degree == g.dim else Form.zero(g.dim, a.degree + 1, a.is_complex)
    D = g.differential_matrix(a.degree)
    return Form(g.dim, a.degree + 1, D @ a.coeffs)


def jacobi_check(g: LieAlgebra) -> float:
    """Max-norm of all Jacobi cyclic sums."""
    c = g.c
    T = np.einsum("ijm,mkl->ijkl", c, c)
    J = T + np.einsum("jkm,mil->ijkl", c, c) + np.einsum("kim,mjl->ijkl", c, c)
    return float(np.abs(J).max())


@lru_cache(maxsize=None)
def _endo_tensor(n, k):
    """Tensor T with (f.a)_o = T[m, l, o, i] f[m, l] a_i (derivation action)."""
    N = n_monomials(n, k)
    T = np.zeros((n, n, N, N))
    idx = monomial_index(n, k)
    for col, I in enumerate(monomials(n, k)):
        # f.(e^I) = sum_p e^{i_1} ^ .. ^ (f.e^{i_p}) ^ .. with f.e^m = -sum_l f[m,l] e^l
        for p, m in enumerate(I):
            for l in range(n):
                tup, s = sort_sign(I[:p] + (l,) + I[p + 1:])
                if s == 0:
                    continue
                T[m, l, idx[tup], col] += -s
    return T


def endo_action(f, a: Form) -> Form:
    """Derivation f.nu of the exterior algebra with (f.eta)(v) = -eta(f v) on 1-forms."""
    f = np.asarray(f)
    n, k = a.dim, a.degree
    if f.shape != (n, n):
        raise AlgebraError("dimension mismatch")
    if k == 0:
        return Form.zero(n, 0, a.is_complex)
    T = _endo_tensor(n, k)
    out = np.einsum("ml,mloi,i->o", f, T, a.coeffs)
    return Form(n, k, out)


def lie_derivative(g: LieAlgebra, x, a: Form) -> Form:
    """Lie derivative of a left-invariant form along a left-invariant field."""
    return endo_action(g.ad(x), a)


def transform_algebra(g: LieAlgebra, A) -> LieAlgebra:
    """Structure constants in the new basis f_i = A e_i.

    Forms transform by pullback(A, .); the Chevalley-Eilenberg differential
    commutes with the change of basis: d'(A* a) = A*(d a).
    """
    A = np.asarray(A, dtype=float)
    Ainv = np.linalg.inv(A)
    c_new = np.einsum("pi,qj,pqm,km->ijk", A, A, g.c, Ainv)
    return LieAlgebra(g.dim, c_new)
