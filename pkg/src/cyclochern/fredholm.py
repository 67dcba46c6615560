"""Finite-dimensional Fredholm modules and operator-valued bar cochains.

A module is (H, gamma, Q, c): a graded inner-product space with grading
involution gamma, an odd self-adjoint Q and a parity-preserving linear
map c from the algebra into operators, with c(1) = 1.  A module is
*strong* when [Q, c(f)] = c(df), c(f t) = c(f) c(t) and c(t f) = c(t) c(f)
hold for all degree-0 f; otherwise *weak*.  Everything is a dense complex
matrix; heavy analysis collapses to exact linear algebra here, but the
invariants are still asserted.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AlgebraError, InvalidInputError
from .galg import (DgAlgebra, Element, acyclic_extension, algebra_from_dict,
                   algebra_to_dict, is_extension, load_algebra,
                   matrix_algebra, two_point_algebra, universal_forms)
from .chains import BarChain, bar_differential
from .report import VerificationReport

HARD_TOL = 1e-12


def _herm(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


@dataclass
class FredholmModule:
    algebra: DgAlgebra
    gamma: np.ndarray
    Q: np.ndarray
    c: np.ndarray                      # (algebra.dim, dim, dim)
    flag: str = field(default=None)    # "strong" | "weak", set by validate

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=complex)
        self.Q = np.asarray(self.Q, dtype=complex)
        self.c = np.asarray(self.c, dtype=complex)
        if self.c.shape != (self.algebra.dim, self.dim, self.dim):
            raise InvalidInputError("c table must be (alg.dim, dim, dim)")
        if self.flag is None:
            validate(self)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def strong(self) -> bool:
        return self.flag == "strong"

    # -- operator helpers ------------------------------------------------

    def c_of(self, x) -> np.ndarray:
        vec = x.vec if isinstance(x, Element) else np.asarray(x, dtype=complex)
        return np.einsum("i,ijk->jk", vec, self.c)

    def op_parity_split(self, A: np.ndarray):
        g = self.gamma
        even = (A + g @ A @ g) / 2
        odd = (A - g @ A @ g) / 2
        return even, odd

    def graded_comm_Q(self, A: np.ndarray) -> np.ndarray:
        """[Q, A] with the supercommutator convention (Q odd)."""
        even, odd = self.op_parity_split(A)
        return (self.Q @ even - even @ self.Q) + (self.Q @ odd + odd @ self.Q)

    def supertrace(self, A: np.ndarray) -> complex:
        return complex(np.trace(self.gamma @ A))

    def delta_power(self, p: float) -> np.ndarray:
        lam, U = np.linalg.eigh(self.Q @ self.Q)
        lam = np.clip(lam.real, 0.0, None) + 1.0
        return (U * (lam ** p)) @ U.conj().T

    # -- curvature components --------------------------------------------

    def F0(self) -> np.ndarray:
        return self.Q @ self.Q

    def F1(self, theta) -> np.ndarray:
        vec = theta.vec if isinstance(theta, Element) else np.asarray(theta, dtype=complex)
        alg = self.algebra
        return self.c_of(alg.d_vec(vec)) - self.graded_comm_Q(self.c_of(vec))

    def F2(self, t1, t2) -> np.ndarray:
        alg = self.algebra
        v1 = t1.vec if isinstance(t1, Element) else np.asarray(t1, dtype=complex)
        v2 = t2.vec if isinstance(t2, Element) else np.asarray(t2, dtype=complex)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        degs = alg.degrees
        for i in np.flatnonzero(np.abs(v1) > 0):
            sign = (-1.0) ** (degs[i] % 2)
            prod = alg.mul_vec(np.eye(alg.dim, dtype=complex)[i], v2)
            out += sign * v1[i] * (self.c_of(prod) - self.c[i] @ self.c_of(v2))
        return out

    def F1_basis(self) -> np.ndarray:
        return np.stack([self.F1(np.eye(self.algebra.dim)[i])
                         for i in range(self.algebra.dim)])

    def F2_basis(self, i: int, j: int) -> np.ndarray:
        alg = self.algebra
        sign = (-1.0) ** (alg.degrees[i] % 2)
        prod = alg.mul_tensor[i, j]
        return sign * (self.c_of(prod) - self.c[i] @ self.c[j])


def validate(m: FredholmModule, tol: float = None,
             report: VerificationReport = None) -> VerificationReport:
    """Check structural invariants, set the weak/strong flag.

    Structural failures (non-Hermitian Q, gamma defects, parity breaking,
    c(1) != 1) raise; the multiplicativity identities only decide the
    flag.  (A1)/(A2) are automatic at finite dimension; the report still
    records the relevant operator norms.
    """
    rep = report if report is not None else VerificationReport("module-validate")
    n = m.dim
    scale = max(1.0, float(np.abs(m.Q).max()))
    r = np.abs(m.Q - m.Q.conj().T).max() / scale
    rep.add("q-herm", "Q = Q*", residual=r, tolerance=HARD_TOL)
    if r > HARD_TOL:
        raise InvalidInputError("Q is not self-adjoint")
    g = m.gamma
    r = max(np.abs(g - g.conj().T).max(), np.abs(g @ g - np.eye(n)).max())
    rep.add("grading", "gamma Hermitian involution", residual=r, tolerance=HARD_TOL)
    if r > HARD_TOL:
        raise InvalidInputError("gamma is not a Hermitian involution")
    r = np.abs(g @ m.Q + m.Q @ g).max() / scale
    rep.add("q-odd", "gamma Q + Q gamma = 0", residual=r, tolerance=HARD_TOL)
    if r > HARD_TOL:
        raise InvalidInputError("Q is not odd")
    cscale = max(1.0, float(np.abs(m.c).max()))
    r = np.abs(m.c_of(m.algebra.unit_vec) - np.eye(n)).max()
    rep.add("c-unit", "c(1) = id", residual=r, tolerance=HARD_TOL * cscale)
    if r > HARD_TOL * cscale:
        raise InvalidInputError("c(1) is not the identity")
    r = 0.0
    for i in range(m.algebra.dim):
        sign = (-1.0) ** (m.algebra.degrees[i] % 2)
        r = max(r, float(np.abs(g @ m.c[i] @ g - sign * m.c[i]).max()))
    rep.add("c-parity", "gamma c(e) gamma = (-1)^{|e|} c(e)",
            residual=r / cscale, tolerance=HARD_TOL)
    if r / cscale > HARD_TOL:
        raise InvalidInputError("c is not parity-preserving")

    # (A1)/(A2): report the finite-dimensional constants
    dhalf, dmhalf = m.delta_power(0.5), m.delta_power(-0.5)
    nu = m.algebra.C * m.algebra.weights
    best = 0.0
    for i in range(m.algebra.dim):
        for s, (L, R) in (("+", (dhalf, dmhalf)), ("-", (dmhalf, dhalf))):
            best = max(best, np.linalg.norm(L @ m.c[i] @ R, 2) / nu[i])
    rep.add("a1", "sup ||D^{1/2} c(e) D^{-1/2}|| / nu(e) finite",
            residual=0.0, bound=best, passed=True)
    lam = np.linalg.eigvalsh(m.Q @ m.Q)
    rep.add("a2", "tr exp(-Q^2) finite", residual=0.0,
            bound=float(np.exp(-np.clip(lam, 0, None)).sum()),
            passed=True)

    # multiplicativity on the full basis decides weak vs strong
    if tol is None:
        tol = 1e-10 * n
    alg = m.algebra
    zero_idx = np.flatnonzero(alg.degrees == 0)
    r1 = r2 = r3 = 0.0
    for f in zero_idx:
        df = alg.diff_matrix[f]
        r1 = max(r1, float(np.abs(m.graded_comm_Q(m.c[f]) - m.c_of(df)).max()))
        for t in range(alg.dim):
            ft = alg.mul_tensor[f, t]
            tf = alg.mul_tensor[t, f]
            r2 = max(r2, float(np.abs(m.c_of(ft) - m.c[f] @ m.c[t]).max()))
            r3 = max(r3, float(np.abs(m.c_of(tf) - m.c[t] @ m.c[f]).max()))
    rep.add("mult-1", "[Q, c(f)] = c(df)", residual=r1, tolerance=tol)
    rep.add("mult-2", "c(f t) = c(f) c(t)", residual=r2, tolerance=tol)
    rep.add("mult-3", "c(t f) = c(t) c(f)", residual=r3, tolerance=tol)
    m.flag = "strong" if max(r1, r2, r3) <= tol else "weak"
    return rep


# ----------------------------------------------------------------------
# connection form, curvature and the extension
# ----------------------------------------------------------------------

def omega(m: FredholmModule, args) -> np.ndarray:
    """Connection-form cochain: arity 0 -> -Q, arity 1 -> c, else 0."""
    if len(args) == 0:
        return -m.Q
    if len(args) == 1:
        return m.c_of(args[0])
    return np.zeros((m.dim, m.dim), dtype=complex)


def curvature(m: FredholmModule, args) -> np.ndarray:
    """Curvature components; tuples longer than 2 give 0 (not an error)."""
    if len(args) == 0:
        return m.F0()
    if len(args) == 1:
        return m.F1(args[0])
    if len(args) == 2:
        return m.F2(args[0], args[1])
    return np.zeros((m.dim, m.dim), dtype=complex)


def extend_T(m: FredholmModule) -> FredholmModule:
    """Module over the acyclic extension: c_T(t' + s t'') = c(t')."""
    ext = acyclic_extension(m.algebra)
    c = np.concatenate([m.c, np.zeros_like(m.c)], axis=0)
    return FredholmModule(ext, m.gamma, m.Q, c)


# ----------------------------------------------------------------------
# operator-valued bar cochains
# ----------------------------------------------------------------------

class OperatorCochain:
    """Multilinear operator-valued bar cochain with finite arity support.

    ``tables[N]`` has shape (algdim,)*N + (d, d) and holds the values on
    basis tuples; ``parity`` is 0/1 for homogeneous cochains (checked by
    gamma-conjugation) and None for mixed ones.
    """

    def __init__(self, algebra: DgAlgebra, dim: int, tables: dict, parity=None):
        self.algebra = algebra
        self.dim = dim
        self.tables = {int(k): np.asarray(v, dtype=complex)
                       for k, v in tables.items()}
        self.parity = parity

    def value(self, key: tuple) -> np.ndarray:
        N = len(key)
        if N not in self.tables:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.tables[N][key] if N else self.tables[0]

    def evaluate(self, chain: BarChain) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for key, coeff in chain.terms.items():
            out += coeff * self.value(key)
        return out

    def max_arity(self) -> int:
        return max(self.tables, default=-1)

    def scaled(self, z: complex) -> "OperatorCochain":
        return OperatorCochain(self.algebra, self.dim,
                               {k: z * v for k, v in self.tables.items()},
                               self.parity)

    def plus(self, other: "OperatorCochain") -> "OperatorCochain":
        tables = {k: v.copy() for k, v in self.tables.items()}
        for k, v in other.tables.items():
            tables[k] = tables.get(k, 0) + v
        parity = self.parity if self.parity == other.parity else None
        return OperatorCochain(self.algebra, self.dim, tables, parity)

    def parity_split(self, gamma: np.ndarray):
        """Split into (even, odd) parts by gamma-conjugation per tuple."""
        degs = self.algebra.degrees
        even, odd = {}, {}
        for N, tab in self.tables.items():
            ev = np.zeros_like(tab)
            od = np.zeros_like(tab)
            for key in itertools.product(range(self.algebra.dim), repeat=N):
                bar_par = int(sum(degs[i] - 1 for i in key)) % 2
                A = tab[key] if N else tab
                conj = gamma @ A @ gamma
                a_even = (A + conj) / 2
                a_odd = (A - conj) / 2
                # cochain parity = operator parity - chain parity
                if bar_par == 0:
                    ev_val, od_val = a_even, a_odd
                else:
                    ev_val, od_val = a_odd, a_even
                if N:
                    ev[key], od[key] = ev_val, od_val
                else:
                    ev, od = ev_val, od_val
            even[N], odd[N] = ev, od
        return (OperatorCochain(self.algebra, self.dim, even, 0),
                OperatorCochain(self.algebra, self.dim, odd, 1))


def omega_cochain(m: FredholmModule) -> OperatorCochain:
    return OperatorCochain(m.algebra, m.dim, {0: -m.Q, 1: m.c.copy()}, parity=1)


def curvature_cochain(m: FredholmModule, max_arity: int = 3) -> OperatorCochain:
    alg = m.algebra
    tables = {0: m.F0(), 1: m.F1_basis()}
    if max_arity >= 2:
        t2 = np.zeros((alg.dim, alg.dim, m.dim, m.dim), dtype=complex)
        for i in range(alg.dim):
            for j in range(alg.dim):
                t2[i, j] = m.F2_basis(i, j)
        tables[2] = t2
    for N in range(3, max_arity + 1):
        tables[N] = np.zeros((alg.dim,) * N + (m.dim, m.dim), dtype=complex)
    return OperatorCochain(alg, m.dim, tables, parity=0)


def cochain_codifferential(ell: OperatorCochain, gamma: np.ndarray = None,
                           max_arity: int = None) -> OperatorCochain:
    """delta = -(d + b')^dual with the Koszul-sign dual.

    (delta L)(c) = -(-1)^{|L|} L((d + b') c); mixed-parity cochains are
    split by gamma-conjugation first (gamma required in that case).
    """
    alg = ell.algebra
    if ell.parity is None:
        if gamma is None:
            raise InvalidInputError("mixed-parity cochain needs gamma to split")
        ev, od = ell.parity_split(gamma)
        return cochain_codifferential(ev, max_arity=max_arity).plus(
            cochain_codifferential(od, max_arity=max_arity))
    sign = -((-1.0) ** ell.parity)
    if max_arity is None:
        max_arity = ell.max_arity() + 1
    tables = {}
    for N in range(max_arity + 1):
        tab = np.zeros((alg.dim,) * N + (ell.dim, ell.dim), dtype=complex)
        for key in itertools.product(range(alg.dim), repeat=N):
            chain = BarChain(alg).add(key, 1.0)
            tab[key if N else ...] = sign * ell.evaluate(
                bar_differential("total", chain))
        tables[N] = tab
    return OperatorCochain(alg, ell.dim, tables, ell.parity)


def cochain_product(l1: OperatorCochain, l2: OperatorCochain,
                    gamma: np.ndarray = None,
                    max_arity: int = None) -> OperatorCochain:
    """(l1 l2)(t_1..t_N) = sum_k (-1)^{|l2| n_k} l1(t_1..t_k) l2(t_{k+1}..t_N)."""
    alg = l1.algebra
    if l2.parity is None:
        if gamma is None:
            raise InvalidInputError("mixed-parity cochain needs gamma to split")
        ev, od = l2.parity_split(gamma)
        return cochain_product(l1, ev, gamma, max_arity).plus(
            cochain_product(l1, od, gamma, max_arity))
    if max_arity is None:
        max_arity = l1.max_arity() + l2.max_arity()
    degs = alg.degrees
    tables = {}
    for N in range(max_arity + 1):
        tab = np.zeros((alg.dim,) * N + (l1.dim, l1.dim), dtype=complex)
        for key in itertools.product(range(alg.dim), repeat=N):
            acc = np.zeros((l1.dim, l1.dim), dtype=complex)
            nk = 0
            for k in range(N + 1):
                if k > 0:
                    nk += int(degs[key[k - 1]]) - 1
                sign = (-1.0) ** ((l2.parity * nk) % 2)
                acc += sign * (l1.value(key[:k]) @ l2.value(key[k:]))
            tab[key if N else ...] = acc
        tables[N] = tab
    par = None if l1.parity is None else (l1.parity + l2.parity) % 2
    return OperatorCochain(alg, l1.dim, tables, par)


def cochain_calculus(kind: str, *args, **kwargs):
    if kind == "codifferential":
        return cochain_codifferential(*args, **kwargs)
    if kind == "product":
        return cochain_product(*args, **kwargs)
    raise InvalidInputError(f"unknown cochain operation {kind!r}")


# ----------------------------------------------------------------------
# shipped constructors
# ----------------------------------------------------------------------

def module_from_representation(alg: DgAlgebra, gamma, Q, c0_table) -> FredholmModule:
    """Extend a degree-0 representation to universal forms.

    c(a0 da1 ... dan) = c0(a0) [Q, c0(a1)] ... [Q, c0(an)], the canonical
    strong extension; ``alg`` must come from universal_forms and
    ``c0_table`` is indexed by the basis of the generating degree-0
    algebra.
    """
    words = getattr(alg, "forms_words", None)
    if words is None:
        raise InvalidInputError("algebra is not a universal-forms quotient")
    gamma = np.asarray(gamma, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    c0 = np.asarray(c0_table, dtype=complex)
    dim = Q.shape[0]

    def comm(A):
        conj = gamma @ A @ gamma
        even, odd = (A + conj) / 2, (A - conj) / 2
        return (Q @ even - even @ Q) + (Q @ odd + odd @ Q)

    c = np.zeros((alg.dim, dim, dim), dtype=complex)
    for idx, (a0, js) in enumerate(words):
        mat = c0[a0]
        for j in js:
            mat = mat @ comm(c0[j])
        c[idx] = mat
    return FredholmModule(alg, gamma, Q, c)


def two_point_module(cap: int = 3) -> FredholmModule:
    """H = C^2, gamma = diag(1,-1), Q = offdiag(1,1), c0(a, b) = diag(a, b)."""
    base = two_point_algebra()
    alg = universal_forms(base, cap)
    gamma = np.diag([1.0, -1.0]).astype(complex)
    Q = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    # generating basis: 1 -> id, p1 -> diag(1, 0)
    c0 = np.stack([np.eye(2, dtype=complex), np.diag([1.0, 0.0]).astype(complex)])
    return module_from_representation(alg, gamma, Q, c0)


def two_point_weak_module(cap: int = 3) -> FredholmModule:
    """The two-point module with c(dp) zeroed out: weak, not strong."""
    m = two_point_module(cap)
    c = m.c.copy()
    c[m.algebra.index_of_label("1.dp1")] = 0.0
    return FredholmModule(m.algebra, m.gamma, m.Q, c)


def random_strong_module(seed: int, dim: int = 8, cap: int = 3,
                         qscale: float = 1.0) -> FredholmModule:
    """Random strong module over two-point universal forms.

    gamma splits H evenly; c0 represents functions-on-two-points through a
    random even idempotent with asymmetric graded rank (so indices of
    subprojections are nonzero); Q is a random odd self-adjoint matrix.
    """
    if dim % 2 or dim < 4:
        raise InvalidInputError("dim must be even and >= 4")
    rng = np.random.default_rng(seed)
    h = dim // 2
    gamma = np.diag([1.0] * h + [-1.0] * h).astype(complex)
    # even invertible conjugator
    g_even = np.eye(dim, dtype=complex) + 0.35 * (
        np.kron(np.eye(2), rng.standard_normal((h, h))
                + 1j * rng.standard_normal((h, h))))
    ranks = (h // 2 + 1, max(h // 2 - 1, 1))
    diag = np.zeros(dim)
    diag[:ranks[0]] = 1.0
    diag[h:h + ranks[1]] = 1.0
    P = g_even @ np.diag(diag).astype(complex) @ np.linalg.inv(g_even)
    offblock = rng.standard_normal((h, h)) + 1j * rng.standard_normal((h, h))
    Q = qscale * np.block([[np.zeros((h, h)), offblock],
                           [offblock.conj().T, np.zeros((h, h))]])
    alg = universal_forms(two_point_algebra(), cap)
    c0 = np.stack([np.eye(dim, dtype=complex), P])
    return module_from_representation(alg, gamma, Q, c0)


def matrix_module(m: FredholmModule, n: int) -> FredholmModule:
    """Module over matrix_algebra(alg, n) acting on H^n = C^n (x) H."""
    mat = matrix_algebra(m.algebra, n)
    dim = n * m.dim
    gamma = np.kron(np.eye(n), m.gamma)
    Q = np.kron(np.eye(n), m.Q)
    c = np.zeros((mat.dim, dim, dim), dtype=complex)
    base_dim = m.algebra.dim
    for r in range(n):
        for col in range(n):
            E = np.zeros((n, n))
            E[r, col] = 1.0
            for b in range(base_dim):
                c[(r * n + col) * base_dim + b] = np.kron(E, m.c[b])
    return FredholmModule(mat, gamma, Q, c)


# ----------------------------------------------------------------------
# JSON interface
# ----------------------------------------------------------------------

def _matrix_to_json(A: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(p[0], p[1]) for p in row] for row in rows])


def module_to_dict(m: FredholmModule, algebra_ref=None) -> dict:
    data = {
        "algebra": algebra_ref if algebra_ref is not None
        else algebra_to_dict(m.algebra),
        "dim": m.dim,
        "grading": _matrix_to_json(m.gamma),
        "Q": _matrix_to_json(m.Q),
        "c": {str(i): _matrix_to_json(m.c[i]) for i in range(m.algebra.dim)
              if np.abs(m.c[i]).max() > 0},
    }
    return data


def module_from_dict(data: dict, algebra: DgAlgebra = None,
                     search_dir: str = None) -> FredholmModule:
    from .schemas import validate_payload
    import os
    validate_payload(data, "module")
    if algebra is None:
        ref = data.get("algebra")
        if isinstance(ref, dict):
            algebra = algebra_from_dict(ref)
        elif isinstance(ref, str):
            path = ref if os.path.isabs(ref) or search_dir is None \
                else os.path.join(search_dir, ref)
            algebra = load_algebra(path)
        else:
            raise InvalidInputError("module file carries no algebra reference")
    dim = data["dim"]
    gamma = _matrix_from_json(data["grading"])
    Q = _matrix_from_json(data["Q"])
    c = np.zeros((algebra.dim, dim, dim), dtype=complex)
    for k, rows in data["c"].items():
        i = int(k)
        if not 0 <= i < algebra.dim:
            raise InvalidInputError("c index out of range")
        c[i] = _matrix_from_json(rows)
    return FredholmModule(algebra, gamma, Q, c)


def save_module(m: FredholmModule, path: str, algebra_ref=None):
    with open(path, "w") as f:
        json.dump(module_to_dict(m, algebra_ref), f, indent=1, sort_keys=True)


def load_module(path: str) -> FredholmModule:
    import os
    with open(path) as f:
        data = json.load(f)
    return module_from_dict(data, search_dir=os.path.dirname(path) or ".")
