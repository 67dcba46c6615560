"""Finite-dimensional locally convex dg algebras.

An algebra is stored by structure constants on a fixed homogeneous basis:
e_i * e_j = sum_k mul_tensor[i, j, k] e_k, with a degree +1 differential
d e_i = sum_k diff_matrix[i, k] e_k and a weighted-l1 seminorm

    nu(a) = C * sum_i w_i |a_i|,

where the recorded constant C >= 1 makes nu submultiplicative:
C >= sum_k |T[i,j,k]| w_k / (w_i w_j) for all i, j implies
nu(ab) <= nu(a) nu(b).  Everything is exact finite linear algebra; float
error enters only through products.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AlgebraError, InvalidInputError

TOL = 1e-12


def _as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=complex)


@dataclass
class DgAlgebra:
    """Graded unital algebra with differential and seminorm data.

    ``unit_vec`` is the coefficient vector of the unit; for every shipped
    constructor except ``matrix_algebra`` it is a standard basis vector.
    ``unit_anchor`` is an index with ``unit_vec[anchor] == 1``; the reduced
    quotient by the unit line is realized as v -> v - v[anchor]*unit_vec,
    a plain coordinate drop whenever the unit is a basis vector.
    """

    labels: list
    degrees: np.ndarray
    unit_vec: np.ndarray
    mul_tensor: np.ndarray          # (dim, dim, dim)
    diff_matrix: np.ndarray         # (dim, dim), row i = d(e_i)
    weights: np.ndarray = None
    name: str = "algebra"
    unit_anchor: int = field(init=False, default=0)
    C: float = field(init=False, default=1.0)
    diff_const: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=int)
        self.unit_vec = _as_complex(self.unit_vec)
        self.mul_tensor = _as_complex(self.mul_tensor)
        self.diff_matrix = _as_complex(self.diff_matrix)
        n = len(self.labels)
        if self.degrees.shape != (n,):
            raise AlgebraError("degrees/labels size mismatch")
        if self.mul_tensor.shape != (n, n, n):
            raise AlgebraError("structure tensor must be (dim, dim, dim)")
        if self.diff_matrix.shape != (n, n):
            raise AlgebraError("differential must be (dim, dim)")
        if self.weights is None:
            self.weights = np.ones(n)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (n,) or np.any(self.weights <= 0):
            raise AlgebraError("seminorm weights must be positive, one per basis element")
        anchors = np.where(np.abs(self.unit_vec - 1.0) <= TOL)[0]
        if len(anchors) == 0:
            raise AlgebraError("unit vector needs a coefficient-1 anchor")
        self.unit_anchor = int(anchors[0])
        self.C = self._submultiplicativity_constant()
        self.diff_const = self._differential_constant()
        self.validate()

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def unit_is_basis(self) -> bool:
        v = self.unit_vec.copy()
        v[self.unit_anchor] -= 1.0
        return bool(np.abs(v).max() <= TOL)

    # ------------------------------------------------------------------
    # seminorm constants
    # ------------------------------------------------------------------

    def _submultiplicativity_constant(self) -> float:
        w = self.weights
        absorbed = np.einsum("ijk,k->ij", np.abs(self.mul_tensor), w)
        ratio = absorbed / np.outer(w, w)
        return max(1.0, float(ratio.max())) if ratio.size else 1.0

    def _differential_constant(self) -> float:
        # nu(da) <= diff_const * nu(a); this is the nu' of the continuity contract
        w = self.weights
        absorbed = np.abs(self.diff_matrix) @ w
        return float((absorbed / w).max()) if len(w) else 0.0

    # ------------------------------------------------------------------
    # structural invariants
    # ------------------------------------------------------------------

    def validate(self, tol: float = TOL):
        """Check all structural invariants; raise AlgebraError on failure."""
        n = self.dim
        deg = self.degrees
        T = self.mul_tensor
        D = self.diff_matrix
        scale = max(1.0, float(np.abs(T).max()), float(np.abs(D).max()))
        for i in range(n):
            for j in range(n):
                nz = np.where(np.abs(T[i, j]) > tol * scale)[0]
                if np.any(deg[nz] != deg[i] + deg[j]):
                    raise AlgebraError(
                        f"product {self.labels[i]}*{self.labels[j]} not degree-additive")
        for i in range(n):
            nz = np.where(np.abs(D[i]) > tol * scale)[0]
            if np.any(deg[nz] != deg[i] + 1):
                raise AlgebraError(f"d({self.labels[i]}) does not raise degree by 1")
        if np.abs(D @ D).max() > tol * scale**2:
            raise AlgebraError("d is not square-zero")
        if np.abs(self.unit_vec @ D).max() > tol * scale:
            raise AlgebraError("d(1) != 0")
        left = np.einsum("i,ijk->jk", self.unit_vec, T)
        right = np.einsum("j,ijk->ik", self.unit_vec, T)
        if np.abs(left - np.eye(n)).max() > tol * scale or \
           np.abs(right - np.eye(n)).max() > tol * scale:
            raise AlgebraError("unit is not neutral")
        # graded Leibniz d(ab) = (da)b + (-1)^{|a|} a (db) on all basis pairs
        d_ab = np.einsum("ijk,kl->ijl", T, D)
        da_b = np.einsum("ik,kjl->ijl", D, T)
        a_db = np.einsum("jk,ikl->ijl", D, T)
        signs = (-1.0) ** (deg % 2)
        resid = d_ab - da_b - signs[:, None, None] * a_db
        if np.abs(resid).max() > tol * scale**2:
            raise AlgebraError("graded Leibniz rule fails")
        # associativity, row by row to keep memory at dim^3
        for i in range(n):
            ab_c = np.einsum("jm,mkl->jkl", T[i], T)
            a_bc = np.einsum("jkm,ml->jkl", T, T[i])
            if np.abs(ab_c - a_bc).max() > tol * scale**2:
                raise AlgebraError(f"product not associative at {self.labels[i]}")

    # ------------------------------------------------------------------
    # element-level operations
    # ------------------------------------------------------------------

    def element(self, vec) -> "Element":
        vec = _as_complex(vec)
        if vec.shape != (self.dim,):
            raise AlgebraError("coefficient vector has wrong length")
        return Element(self, vec)

    def basis_element(self, i: int) -> "Element":
        v = np.zeros(self.dim, dtype=complex)
        v[i] = 1.0
        return Element(self, v)

    def unit(self) -> "Element":
        return Element(self, self.unit_vec.copy())

    def zero(self) -> "Element":
        return Element(self, np.zeros(self.dim, dtype=complex))

    def mul_vec(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", a, b, self.mul_tensor)

    def d_vec(self, a: np.ndarray) -> np.ndarray:
        return a @ self.diff_matrix

    def seminorm_vec(self, a: np.ndarray) -> float:
        return float(self.C * np.sum(self.weights * np.abs(a)))

    def reduce_vec(self, a: np.ndarray) -> np.ndarray:
        """Canonical representative of a mod the unit line."""
        return a - a[self.unit_anchor] * self.unit_vec

    def degree_of_index(self, i: int) -> int:
        return int(self.degrees[i])

    def index_of_label(self, label: str) -> int:
        return self.labels.index(label)


def mul(a: "Element", b: "Element") -> "Element":
    if a.algebra is not b.algebra:
        raise AlgebraError("elements live in distinct algebras")
    return Element(a.algebra, a.algebra.mul_vec(a.vec, b.vec))


def differential(a: "Element") -> "Element":
    return Element(a.algebra, a.algebra.d_vec(a.vec))


def seminorm(a: "Element") -> float:
    return a.algebra.seminorm_vec(a.vec)


@dataclass
class Element:
    """An algebra element as a dense coefficient vector."""

    algebra: DgAlgebra
    vec: np.ndarray

    def __post_init__(self):
        self.vec = _as_complex(self.vec)
        if self.vec.shape != (self.algebra.dim,):
            raise AlgebraError("coefficient vector has wrong length")

    def __mul__(self, other):
        if isinstance(other, Element):
            return mul(self, other)
        return Element(self.algebra, self.vec * complex(other))

    def __rmul__(self, scalar):
        return Element(self.algebra, self.vec * complex(scalar))

    def __add__(self, other):
        if self.algebra is not other.algebra:
            raise AlgebraError("elements live in distinct algebras")
        return Element(self.algebra, self.vec + other.vec)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def d(self) -> "Element":
        return differential(self)

    def seminorm(self) -> float:
        return seminorm(self)

    def homogeneous_part(self, degree: int) -> "Element":
        mask = (self.algebra.degrees == degree).astype(float)
        return Element(self.algebra, self.vec * mask)

    def homogeneous_parts(self) -> dict:
        out = {}
        for g in sorted(set(self.algebra.degrees[np.abs(self.vec) > 0].tolist())):
            out[int(g)] = self.homogeneous_part(int(g))
        return out

    def degree(self):
        """Degree if homogeneous, else None."""
        degs = set(self.algebra.degrees[np.abs(self.vec) > TOL].tolist())
        if len(degs) == 1:
            return int(degs.pop())
        return None if degs else 0

    def is_zero(self, tol: float = TOL) -> bool:
        return bool(np.abs(self.vec).max() <= tol) if self.vec.size else True

    def norm_inf(self) -> float:
        return float(np.abs(self.vec).max())


# ----------------------------------------------------------------------
# constructors
# ----------------------------------------------------------------------

def trivial_algebra() -> DgAlgebra:
    """The complex numbers as a dg algebra concentrated in degree 0."""
    T = np.ones((1, 1, 1), dtype=complex)
    D = np.zeros((1, 1), dtype=complex)
    return DgAlgebra(["1"], [0], [1.0], T, D, name="C")


def functions_algebra(npoints: int = 2) -> DgAlgebra:
    """C^npoints with pointwise product, degree 0, zero differential.

    Basis: the unit followed by the indicators of the first npoints-1
    points (so the unit is a basis vector and the complement is spanned
    by indicators).
    """
    if npoints < 1:
        raise InvalidInputError("npoints >= 1 required")
    n = npoints
    # basis: u = (1,...,1), p_a = indicator of point a (a = 1..n-1)
    # values of basis element i at point x:
    vals = np.zeros((n, n), dtype=complex)
    vals[0] = 1.0
    for a in range(1, n):
        vals[a, a - 1] = 1.0
    inv = np.linalg.inv(vals.T)   # point values -> basis coefficients
    T = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            T[i, j] = inv @ (vals[i] * vals[j])
    D = np.zeros((n, n), dtype=complex)
    labels = ["1"] + [f"p{a}" for a in range(1, n)]
    return DgAlgebra(labels, [0] * n, np.eye(n)[0], T, D,
                     name=f"functions({n})")


def two_point_algebra() -> DgAlgebra:
    """Functions on two points: basis {1, p}, p^2 = p."""
    alg = functions_algebra(2)
    alg.name = "two_point"
    return alg


def universal_forms(assoc: DgAlgebra, cap: int) -> DgAlgebra:
    """Degree-capped algebra of noncommutative differential forms.

    ``assoc`` must be concentrated in degree 0 with zero differential.
    Degree-n forms are spanned by words a0 da1 ... dan subject to the
    bimodule relations d(ab) = a db + da b; the normal form identifies
    the degree-n part with A (x) Abar^(x n), Abar the non-unit basis
    span.  Forms of degree > cap are set to zero (the ideal they span is
    d-stable, so the quotient is again a dg algebra).
    """
    if cap < 0:
        raise InvalidInputError("cap must be >= 0")
    if np.any(assoc.degrees != 0):
        raise InvalidInputError("universal_forms needs a degree-0 algebra")
    if np.abs(assoc.diff_matrix).max() > TOL:
        raise InvalidInputError("universal_forms needs a zero differential")
    if not assoc.unit_is_basis:
        raise InvalidInputError("universal_forms needs a basis-vector unit")
    m = assoc.dim
    u = assoc.unit_anchor
    red = [i for i in range(m) if i != u]      # non-unit basis indices
    # words: (a0, (j1..jn)) with a0 in 0..m-1, j in red, n <= cap
    words = []
    for n in range(cap + 1):
        def extend(prefix, depth):
            if depth == 0:
                for a0 in range(m):
                    words.append((a0, prefix))
                return
            for j in red:
                extend(prefix + (j,), depth - 1)
        extend((), n)
    index = {w: k for k, w in enumerate(words)}
    dim = len(words)

    def word_label(w):
        a0, js = w
        s = assoc.labels[a0]
        return s + "".join(f".d{assoc.labels[j]}" for j in js)

    labels = [word_label(w) for w in words]
    degrees = [len(w[1]) for w in words]

    def right_mul_by_basis(word, coeff, b, out):
        """Accumulate (a0 da_{j1} ... da_{jn}) * e_b into out (dict word->coeff)."""
        a0, js = word
        if not js:
            prod = assoc.mul_tensor[a0, b]
            for k in np.where(np.abs(prod) > 0)[0]:
                out[(int(k), ())] = out.get((int(k), ()), 0.0) + coeff * prod[k]
            return
        head, tail = js[:-1], js[-1]
        # (w' d a_tail) b = w' d(a_tail b) - (w' a_tail) d b
        prod = assoc.mul_tensor[tail, b]
        for k in np.where(np.abs(prod) > 0)[0]:
            if k == u:
                continue          # d(1) = 0
            w2 = (a0, head + (int(k),))
            out[w2] = out.get(w2, 0.0) + coeff * prod[k]
        if b != u:
            tmp = {}
            right_mul_by_basis((a0, head), coeff, tail, tmp)
            for (a2, js2), c2 in tmp.items():
                w2 = (a2, js2 + (b,))
                out[w2] = out.get(w2, 0.0) - c2

    T = np.zeros((dim, dim, dim), dtype=complex)
    for i, wi in enumerate(words):
        ni = len(wi[1])
        for j, wj in enumerate(words):
            b0, ks = wj
            if ni + len(ks) > cap:
                continue
            acc = {}
            right_mul_by_basis(wi, 1.0, b0, acc)
            # append d a_{k1} ... d a_{kl}
            for w2, c2 in acc.items():
                a2, js2 = w2
                full = (a2, js2 + ks)
                if len(full[1]) <= cap:
                    T[i, j, index[full]] += c2
    D = np.zeros((dim, dim), dtype=complex)
    for i, (a0, js) in enumerate(words):
        if a0 == u or len(js) + 1 > cap:
            continue
        D[i, index[(u, (a0,) + js)]] = 1.0
    out = DgAlgebra(labels, degrees, np.eye(dim)[index[(u, ())]], T, D,
                    name=f"forms({assoc.name},cap={cap})")
    out.forms_base = assoc
    out.forms_words = words
    out.forms_zero_index = {a0: index[(a0, ())] for a0 in range(m)}
    return out


def acyclic_extension(alg: DgAlgebra) -> DgAlgebra:
    """Adjoin an odd degree -1 variable s with s^2 = 0 and d(s) = -1.

    Basis doubles: index i is e_i, index dim+i is s*e_i.  The variable is
    graded-central (s x = (-1)^{|x|} x s) and the differential is
    d_T = d - iota with iota the s-coefficient extraction.
    """
    n = alg.dim
    T = np.zeros((2 * n, 2 * n, 2 * n), dtype=complex)
    base = alg.mul_tensor
    signs = (-1.0) ** (alg.degrees % 2)
    T[:n, :n, :n] = base
    # e_i * (s e_j) = (-1)^{|e_i|} s (e_i e_j)
    T[:n, n:, n:] = signs[:, None, None] * base
    # (s e_i) * e_j = s (e_i e_j)
    T[n:, :n, n:] = base
    # (s e_i)(s e_j) = 0
    D = np.zeros((2 * n, 2 * n), dtype=complex)
    D[:n, :n] = alg.diff_matrix
    D[n:, n:] = -alg.diff_matrix
    D[n:, :n] = -np.eye(n)
    labels = list(alg.labels) + [f"s.{l}" for l in alg.labels]
    degrees = np.concatenate([alg.degrees, alg.degrees - 1])
    weights = np.concatenate([alg.weights, alg.weights])
    unit = np.zeros(2 * n, dtype=complex)
    unit[:n] = alg.unit_vec
    out = DgAlgebra(labels, degrees, unit, T, D, weights,
                    name=f"{alg.name}[s]")
    out.base_algebra = alg
    return out


def sigma_index(ext: DgAlgebra) -> int:
    """Index of the adjoined odd variable in an acyclic extension."""
    base = getattr(ext, "base_algebra", None)
    if base is None:
        raise InvalidInputError("not an acyclic extension")
    return base.dim + base.unit_anchor


def is_extension(alg: DgAlgebra) -> bool:
    return getattr(alg, "base_algebra", None) is not None


def split_extension_vec(ext: DgAlgebra, vec: np.ndarray):
    """Split v in Omega[s] as (v', v'') with v = v' + s v''."""
    n = ext.base_algebra.dim
    return vec[:n].copy(), vec[n:].copy()


def matrix_algebra(alg: DgAlgebra, n: int) -> DgAlgebra:
    """n x n matrices over alg; basis E_rc (x) e_b, entrywise differential."""
    if n < 1:
        raise InvalidInputError("n >= 1 required")
    m = alg.dim
    dim = n * n * m

    def idx(r, c, b):
        return (r * n + c) * m + b

    T = np.zeros((dim, dim, dim), dtype=complex)
    base = alg.mul_tensor
    for r in range(n):
        for c in range(n):
            for c2 in range(n):
                i0 = (r * n + c) * m
                j0 = (c * n + c2) * m
                k0 = (r * n + c2) * m
                T[i0:i0 + m, j0:j0 + m, k0:k0 + m] += base
    D = np.zeros((dim, dim), dtype=complex)
    for r in range(n):
        for c in range(n):
            i0 = (r * n + c) * m
            D[i0:i0 + m, i0:i0 + m] = alg.diff_matrix
    labels = [f"{alg.labels[b]}[{r},{c}]"
              for r in range(n) for c in range(n) for b in range(m)]
    degrees = np.tile(alg.degrees, n * n)
    weights = np.tile(alg.weights, n * n)
    unit = np.zeros(dim, dtype=complex)
    for r in range(n):
        unit[(r * n + r) * m: (r * n + r) * m + m] = alg.unit_vec
    out = DgAlgebra(labels, degrees, unit, T, D, weights,
                    name=f"mat{n}({alg.name})")
    out.matrix_base = alg
    out.matrix_size = n
    return out


def matrix_entry_index(mat: DgAlgebra, r: int, c: int, b: int) -> int:
    n, m = mat.matrix_size, mat.matrix_base.dim
    return (r * n + c) * m + b


def matrix_element(mat: DgAlgebra, entries) -> Element:
    """Build a matrix-algebra element from an n x n array of Elements/vectors."""
    n, base = mat.matrix_size, mat.matrix_base
    vec = np.zeros(mat.dim, dtype=complex)
    for r in range(n):
        for c in range(n):
            e = entries[r][c]
            v = e.vec if isinstance(e, Element) else _as_complex(e)
            vec[(r * n + c) * base.dim:(r * n + c + 1) * base.dim] = v
    return Element(mat, vec)


def matrix_entries(mat: DgAlgebra, x: Element):
    """Inverse of matrix_element: n x n nested list of base-algebra Elements."""
    n, base = mat.matrix_size, mat.matrix_base
    return [[Element(base, x.vec[(r * n + c) * base.dim:(r * n + c + 1) * base.dim])
             for c in range(n)] for r in range(n)]


def generalized_trace(chain, target: DgAlgebra):
    """Trace a cyclic chain over matrix_algebra(target, n) down to target.

    On elementary tensors of matrix basis elements E_{r0 c0} x0, ...,
    E_{rN cN} xN the trace is the chain (x0, ..., xN) when the index
    cycle closes (c_k = r_{k+1}, c_N = r_0) and zero otherwise.  Matrix
    units are even, so no Koszul signs appear; the map commutes with all
    three cyclic differentials (tested).
    """
    from .chains import CyclicChain
    mat = chain.algebra
    base = getattr(mat, "matrix_base", None)
    if base is not target:
        raise AlgebraError("chain is not over a matrix algebra of the target")
    n, m = mat.matrix_size, base.dim
    out = CyclicChain(target)
    for key, coeff in chain.terms.items():
        rcb = [((i // m) // n, (i // m) % n, i % m) for i in key]
        ok = all(rcb[k][1] == rcb[(k + 1) % len(rcb)][0] for k in range(len(rcb)))
        if ok:
            out.add(tuple(b for (_, _, b) in rcb), coeff)
    return out.canonicalize()


# ----------------------------------------------------------------------
# JSON interface
# ----------------------------------------------------------------------

def algebra_to_dict(alg: DgAlgebra) -> dict:
    if not alg.unit_is_basis:
        raise InvalidInputError("file format requires a basis-vector unit")
    structure = []
    T = alg.mul_tensor
    for i, j, k in zip(*np.nonzero(np.abs(T) > 0)):
        z = T[i, j, k]
        structure.append([int(i), int(j), int(k), float(z.real), float(z.imag)])
    diff = []
    for i, k in zip(*np.nonzero(np.abs(alg.diff_matrix) > 0)):
        z = alg.diff_matrix[i, k]
        diff.append([int(i), int(k), float(z.real), float(z.imag)])
    return {
        "basis": list(alg.labels),
        "degrees": [int(g) for g in alg.degrees],
        "unit": int(alg.unit_anchor),
        "structure": structure,
        "differential": diff,
        "seminorm_weights": [float(w) for w in alg.weights],
    }


def algebra_from_dict(data: dict, name: str = "algebra") -> DgAlgebra:
    from .schemas import validate_payload
    validate_payload(data, "algebra")
    nb = len(data["basis"])
    T = np.zeros((nb, nb, nb), dtype=complex)
    for i, j, k, re, im in data["structure"]:
        if not (0 <= i < nb and 0 <= j < nb and 0 <= k < nb):
            raise AlgebraError("structure index out of range")
        T[i, j, k] += re + 1j * im
    D = np.zeros((nb, nb), dtype=complex)
    for i, k, re, im in data["differential"]:
        if not (0 <= i < nb and 0 <= k < nb):
            raise AlgebraError("differential index out of range")
        D[i, k] += re + 1j * im
    unit = np.zeros(nb, dtype=complex)
    if not (0 <= data["unit"] < nb):
        raise AlgebraError("unit index out of range")
    unit[data["unit"]] = 1.0
    weights = data.get("seminorm_weights") or None
    return DgAlgebra(list(data["basis"]), data["degrees"], unit, T, D,
                     weights, name=name)


def save_algebra(alg: DgAlgebra, path: str):
    with open(path, "w") as f:
        json.dump(algebra_to_dict(alg), f, indent=1, sort_keys=True)


def load_algebra(path: str) -> DgAlgebra:
    with open(path) as f:
        data = json.load(f)
    return algebra_from_dict(data, name=str(path))
