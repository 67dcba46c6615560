"""Bar and reduced cyclic chains with their differentials.

Chains are finitely supported sums of elementary tensors of homogeneous
basis elements, stored as ``{(i_0, ..., i_N): coeff}`` with mixed arities
in one container.  Cyclic chains keep position 0 in the full algebra and
positions >= 1 in the reduced quotient (unit coordinate projected out
eagerly, so equality is coefficient comparison).

Sign conventions (n_k, m_k are shifted prefix degrees):

    n_k = |t_1| + ... + |t_k| - k          (bar)
    m_k = |t_0| + ... + |t_k| - k          (cyclic, position 0 unshifted)

    d (t_1..t_N)  = sum_k (-1)^{n_{k-1}} (t_1, .., d t_k, .., t_N)
    b'(t_1..t_N)  = -sum_{k<N} (-1)^{n_k} (t_1, .., t_k t_{k+1}, .., t_N)
    d (t_0..t_N)  = (d t_0, ..) - sum_{k>=1} (-1)^{m_{k-1}} (.., d t_k, ..)
    b (t_0..t_N)  = sum_{k<N} (-1)^{m_k} (.., t_k t_{k+1}, ..)
                    - (-1)^{(|t_N|-1) m_{N-1}} (t_N t_0, t_1, .., t_{N-1})
    B (t_0..t_N)  = sum_k (-1)^{(m_k+1)(m_N-m_k)} (1, t_{k+1}, .., t_0, .., t_k)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AlgebraError, InvalidInputError
from .galg import (DgAlgebra, Element, is_extension, sigma_index,
                   split_extension_vec)

DROP_RATIO = 1e-15


def _expand_vec(alg: DgAlgebra, vec: np.ndarray, reduced: bool):
    """Nonzero (index, coeff) pairs of vec, reduced mod the unit if asked."""
    v = alg.reduce_vec(vec) if reduced else vec
    return [(int(i), v[i]) for i in np.flatnonzero(np.abs(v) > 0)]


def _expand_index(alg: DgAlgebra, i: int, reduced: bool):
    if not reduced:
        return [(i, 1.0 + 0j)]
    if i == alg.unit_anchor:
        v = alg.reduce_vec(np.eye(alg.dim, dtype=complex)[i])
        return [(int(j), v[j]) for j in np.flatnonzero(np.abs(v) > 0)]
    return [(i, 1.0 + 0j)]


class _ChainBase:
    """Shared container behaviour for bar and cyclic chains."""

    def __init__(self, algebra: DgAlgebra, terms=None):
        self.algebra = algebra
        self.terms = dict(terms) if terms else {}

    def add(self, key: tuple, coeff: complex):
        if abs(coeff) == 0:
            return self
        self.terms[key] = self.terms.get(key, 0.0 + 0j) + complex(coeff)
        return self

    def canonicalize(self):
        if not self.terms:
            return self
        top = max(abs(c) for c in self.terms.values())
        cut = DROP_RATIO * top
        self.terms = {k: c for k, c in self.terms.items() if abs(c) > cut}
        return self

    def _new(self):
        return self.__class__(self.algebra)

    def scaled(self, z: complex):
        out = self._new()
        for k, c in self.terms.items():
            out.add(k, z * c)
        return out

    def plus(self, other):
        if other.algebra is not self.algebra:
            raise AlgebraError("chains over distinct algebras")
        out = self._new()
        for k, c in self.terms.items():
            out.add(k, c)
        for k, c in other.terms.items():
            out.add(k, c)
        return out.canonicalize()

    def minus(self, other):
        return self.plus(other.scaled(-1.0))

    def arities(self):
        return sorted({self._arity(k) for k in self.terms})

    def arity_part(self, N: int):
        out = self._new()
        for k, c in self.terms.items():
            if self._arity(k) == N:
                out.add(k, c)
        return out

    def norm_inf(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def norm_l1(self) -> float:
        return sum(abs(c) for c in self.terms.values())

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm_inf() <= tol

    def __len__(self):
        return len(self.terms)


class BarChain(_ChainBase):
    """Sum of elementary bar tensors; ``reduced`` means all slots are
    taken mod the unit line."""

    def __init__(self, algebra, terms=None, reduced=False):
        super().__init__(algebra, terms)
        self.reduced = reduced

    @staticmethod
    def _arity(key):
        return len(key)

    def _new(self):
        return BarChain(self.algebra, reduced=self.reduced)

    def like(self):
        return self._new()

    def plus(self, other):
        if other.algebra is not self.algebra or other.reduced != self.reduced:
            raise AlgebraError("incompatible bar chains")
        return super().plus(other)

    def shifted_prefix(self, key, k):
        """n_k for the first k entries of key."""
        deg = self.algebra.degrees
        return int(sum(deg[i] for i in key[:k]) - k)

    def term_parity(self, key) -> int:
        return self.shifted_prefix(key, len(key)) % 2


class CyclicChain(_ChainBase):
    """Reduced cyclic chains: position 0 in the algebra, rest reduced."""

    @staticmethod
    def _arity(key):
        return len(key) - 1

    def add(self, key, coeff):
        # keep positions >= 1 in the canonical complement of the unit line
        if abs(coeff) == 0:
            return self
        alg = self.algebra
        anchor = alg.unit_anchor
        if any(i == anchor for i in key[1:]):
            stack = [(key, complex(coeff))]
            for kk, cc in self._expand_reduced(stack):
                super().add(kk, cc)
            return self
        return super().add(key, complex(coeff))

    def _expand_reduced(self, stack):
        alg = self.algebra
        anchor = alg.unit_anchor
        out = []
        while stack:
            key, coeff = stack.pop()
            pos = next((p for p in range(1, len(key)) if key[p] == anchor), None)
            if pos is None:
                out.append((key, coeff))
                continue
            for j, cj in _expand_index(alg, anchor, True):
                stack.append((key[:pos] + (j,) + key[pos + 1:], coeff * cj))
        return out

    def shifted_prefix(self, key, k):
        """m_{k-1}: shifted degree of positions 0..k-1 (position 0 unshifted)."""
        deg = self.algebra.degrees
        if k <= 0:
            return 0
        return int(deg[key[0]] + sum(deg[i] for i in key[1:k]) - (k - 1))

    def term_parity(self, key) -> int:
        return self.shifted_prefix(key, len(key)) % 2

    def parity_part(self, parity: int) -> "CyclicChain":
        out = CyclicChain(self.algebra)
        for k, c in self.terms.items():
            if self.term_parity(k) == parity:
                out.add(k, c)
        return out


# ----------------------------------------------------------------------
# bar differentials
# ----------------------------------------------------------------------

def bar_differential(kind: str, c: BarChain) -> BarChain:
    if kind not in ("d", "bprime", "b'", "total"):
        raise InvalidInputError(f"unknown bar differential {kind!r}")
    if kind == "total":
        return bar_differential("d", c).plus(bar_differential("bprime", c))
    alg = c.algebra
    deg = alg.degrees
    out = c.like()
    for key, coeff in c.terms.items():
        N = len(key)
        if kind == "d":
            for k in range(1, N + 1):
                sign = (-1.0) ** (c.shifted_prefix(key, k - 1) % 2)
                dvec = alg.diff_matrix[key[k - 1]]
                for j, cj in _expand_vec(alg, dvec, c.reduced):
                    out.add(key[:k - 1] + (j,) + key[k:], sign * coeff * cj)
        else:
            for k in range(1, N):
                sign = -((-1.0) ** (c.shifted_prefix(key, k) % 2))
                prod = alg.mul_tensor[key[k - 1], key[k]]
                for j, cj in _expand_vec(alg, prod, c.reduced):
                    out.add(key[:k - 1] + (j,) + key[k + 1:], sign * coeff * cj)
    return out.canonicalize()


def bar_average(c: BarChain) -> BarChain:
    """Averaging operator N: signed sum of cyclic rotations."""
    out = c.like()
    deg = c.algebra.degrees
    for key, coeff in c.terms.items():
        N = len(key)
        if N == 0:
            out.add(key, coeff)
            continue
        nk = [c.shifted_prefix(key, k) for k in range(N + 1)]
        for k in range(1, N + 1):
            sign = (-1.0) ** ((nk[k] * (nk[N] - nk[k])) % 2)
            out.add(key[k:] + key[:k], sign * coeff)
    return out.canonicalize()


def bar_sigma_insertion(c: BarChain) -> BarChain:
    """Insert the odd extension variable in every gap (bar-side S)."""
    sig = sigma_index(c.algebra)
    out = c.like()
    for key, coeff in c.terms.items():
        for k in range(len(key) + 1):
            out.add(key[:k] + (sig,) + key[k:], coeff)
    return out.canonicalize()


# ----------------------------------------------------------------------
# cyclic differentials
# ----------------------------------------------------------------------

def cyclic_differential(kind: str, c: CyclicChain) -> CyclicChain:
    if kind == "total":
        out = cyclic_differential("d", c)
        out = out.plus(cyclic_differential("b", c))
        return out.plus(cyclic_differential("B", c))
    if kind not in ("d", "b", "B"):
        raise InvalidInputError(f"unknown cyclic differential {kind!r}")
    alg = c.algebra
    out = CyclicChain(alg)
    for key, coeff in c.terms.items():
        N = len(key) - 1
        if kind == "d":
            for j, cj in _expand_vec(alg, alg.diff_matrix[key[0]], False):
                out.add((j,) + key[1:], coeff * cj)
            for k in range(1, N + 1):
                sign = -((-1.0) ** (c.shifted_prefix(key, k) % 2))
                for j, cj in _expand_vec(alg, alg.diff_matrix[key[k]], True):
                    out.add(key[:k] + (j,) + key[k + 1:], sign * coeff * cj)
        elif kind == "b":
            if N == 0:
                continue
            for k in range(0, N):
                sign = (-1.0) ** (c.shifted_prefix(key, k + 1) % 2)
                prod = alg.mul_tensor[key[k], key[k + 1]]
                red = k != 0
                for j, cj in _expand_vec(alg, prod, red):
                    out.add(key[:k] + (j,) + key[k + 2:], sign * coeff * cj)
            degN = alg.degrees[key[N]]
            mN1 = c.shifted_prefix(key, N)
            sign = -((-1.0) ** (((degN - 1) * mN1) % 2))
            prod = alg.mul_tensor[key[N], key[0]]
            for j, cj in _expand_vec(alg, prod, False):
                out.add((j,) + key[1:N], sign * coeff * cj)
        else:  # Connes operator
            mN = c.shifted_prefix(key, N + 1)
            for k in range(0, N + 1):
                mk = c.shifted_prefix(key, k + 1)
                sign = (-1.0) ** (((mk + 1) * (mN - mk)) % 2)
                rotated = key[k + 1:] + key[:k + 1]
                for u, cu in _expand_vec(alg, alg.unit_vec, False):
                    out.add((u,) + rotated, sign * coeff * cu)
    return out.canonicalize()


# ----------------------------------------------------------------------
# Chen generators on chains over an acyclic extension
# ----------------------------------------------------------------------

def _check_base_degree_zero(ext: DgAlgebra, f: Element):
    """f must be a degree-0 element of the base algebra inside Omega[s]."""
    if not is_extension(ext):
        raise InvalidInputError("chain is not over an acyclic extension")
    base = ext.base_algebra
    if f.algebra is base:
        vec = np.zeros(ext.dim, dtype=complex)
        vec[:base.dim] = f.vec
        f = Element(ext, vec)
    if f.algebra is not ext:
        raise InvalidInputError("generator element over the wrong algebra")
    if np.abs(f.vec[base.dim:]).max() > 0:
        raise InvalidInputError("generator element must come from the base algebra")
    nz = np.flatnonzero(np.abs(f.vec) > 0)
    if np.any(ext.degrees[nz] != 0):
        raise InvalidInputError("generator element must have degree 0")
    return f


def chen_generator(kind: str, c: CyclicChain, f: Element = None,
                   i: int = None) -> CyclicChain:
    """Generators of the normalization subcomplex.

    kind = "S":      insert sigma into every gap after position 0
    kind = "R":      multiply position 0 by sigma from the left
    kind = "S_i^f":  insert the degree-0 base element f after position i
    kind = "comm_db_S_i^f": the three-term boundary of the f-insertion
    """
    alg = c.algebra
    if not is_extension(alg):
        raise InvalidInputError("Chen generators act on chains over an extension")
    out = CyclicChain(alg)
    if kind == "S":
        sig = sigma_index(alg)
        for key, coeff in c.terms.items():
            for k in range(len(key)):
                out.add(key[:k + 1] + (sig,) + key[k + 1:], coeff)
        return out.canonicalize()
    if kind == "R":
        sig = sigma_index(alg)
        for key, coeff in c.terms.items():
            prod = alg.mul_tensor[sig, key[0]]
            for j, cj in _expand_vec(alg, prod, False):
                out.add((j,) + key[1:], coeff * cj)
        return out.canonicalize()
    if kind in ("S_i^f", "comm_db_S_i^f"):
        if f is None or i is None:
            raise InvalidInputError("f and i are required")
        if i < 0:
            raise InvalidInputError("insertion index must be >= 0")
        f = _check_base_degree_zero(alg, f)
        if kind == "S_i^f":
            for key, coeff in c.terms.items():
                if i > len(key) - 1:
                    continue
                for j, cj in _expand_vec(alg, f.vec, True):
                    out.add(key[:i + 1] + (j,) + key[i + 1:], coeff * cj)
            return out.canonicalize()
        df = f.d().vec
        for key, coeff in c.terms.items():
            N = len(key) - 1
            if i > N:
                continue
            if i <= N - 1:
                for j, cj in _expand_vec(alg, df, True):
                    out.add(key[:i + 1] + (j,) + key[i + 1:], coeff * cj)
                prod = alg.mul_vec(np.eye(alg.dim, dtype=complex)[key[i]], f.vec)
                for j, cj in _expand_vec(alg, prod, i != 0):
                    out.add(key[:i] + (j,) + key[i + 1:], -coeff * cj)
                prod = alg.mul_vec(f.vec, np.eye(alg.dim, dtype=complex)[key[i + 1]])
                for j, cj in _expand_vec(alg, prod, True):
                    out.add(key[:i + 1] + (j,) + key[i + 2:], coeff * cj)
            else:  # i == N
                for j, cj in _expand_vec(alg, df, True):
                    out.add(key + (j,), coeff * cj)
                prod = alg.mul_vec(np.eye(alg.dim, dtype=complex)[key[N]], f.vec)
                for j, cj in _expand_vec(alg, prod, N != 0):
                    out.add(key[:N] + (j,), -coeff * cj)
                prod = alg.mul_vec(f.vec, np.eye(alg.dim, dtype=complex)[key[0]])
                for j, cj in _expand_vec(alg, prod, False):
                    out.add((j,) + key[1:], coeff * cj)
        return out.canonicalize()
    raise InvalidInputError(f"unknown generator kind {kind!r}")


# ----------------------------------------------------------------------
# maps from cyclic chains to reduced bar chains
# ----------------------------------------------------------------------

def proof_maps(kind: str, c: CyclicChain) -> BarChain:
    """alpha, h and the averaging operator, landing in the reduced bar space."""
    alg = c.algebra
    if kind == "averaging_N":
        raise InvalidInputError("averaging acts on bar chains; use bar_average")
    if kind not in ("alpha", "h"):
        raise InvalidInputError(f"unknown proof map {kind!r}")
    if not is_extension(alg):
        raise InvalidInputError("proof maps act on chains over an extension")
    sig = sigma_index(alg)
    pre = BarChain(alg, reduced=True)
    for key, coeff in c.terms.items():
        if kind == "alpha":
            head = alg.mul_tensor[sig, key[0]]
        else:
            head = np.eye(alg.dim, dtype=complex)[key[0]]
        # positions >= 1 of a cyclic chain are already reduced representatives
        for j, cj in _expand_vec(alg, head, True):
            pre.add((j,) + key[1:], coeff * cj)
    return bar_average(pre.canonicalize())


# ----------------------------------------------------------------------
# entire norm bounds
# ----------------------------------------------------------------------

@dataclass
class EntireNormBound:
    """Per-arity projective-norm upper bounds and their entire total."""

    per_arity: dict
    total: float

    def arity_bound(self, N: int) -> float:
        return self.per_arity.get(N, 0.0)


def entire_norm_bound(c) -> EntireNormBound:
    """Representation upper bound on the projective norms, entire-weighted.

    pi_N <= sum over stored elementary tensors of prod_j nu(factor_j); the
    true projective norm is the infimum over all representations and is
    not computed.
    """
    alg = c.algebra
    nu = alg.C * alg.weights
    per = {}
    for key, coeff in c.terms.items():
        N = c._arity(key)
        val = abs(coeff) * float(np.prod([nu[i] for i in key])) if key else abs(coeff)
        per[N] = per.get(N, 0.0) + val
    total = sum(v / math.factorial(N // 2) for N, v in per.items())
    return EntireNormBound(per, total)


# ----------------------------------------------------------------------
# random chains and JSON
# ----------------------------------------------------------------------

def random_cyclic_chain(alg: DgAlgebra, rng, arity: int, nterms: int = 1,
                        max_arity: int = None) -> CyclicChain:
    out = CyclicChain(alg)
    anchor = alg.unit_anchor
    allowed = [i for i in range(alg.dim) if i != anchor]
    for _ in range(nterms):
        N = arity if max_arity is None else int(rng.integers(arity, max_arity + 1))
        key = (int(rng.integers(0, alg.dim)),) + tuple(
            int(allowed[rng.integers(0, len(allowed))]) for _ in range(N))
        out.add(key, complex(rng.standard_normal(), rng.standard_normal()))
    return out.canonicalize()


def random_bar_chain(alg: DgAlgebra, rng, arity: int, nterms: int = 1,
                     reduced: bool = False) -> BarChain:
    out = BarChain(alg, reduced=reduced)
    anchor = alg.unit_anchor
    pool = [i for i in range(alg.dim) if not (reduced and i == anchor)]
    for _ in range(nterms):
        key = tuple(int(pool[rng.integers(0, len(pool))]) for _ in range(arity))
        out.add(key, complex(rng.standard_normal(), rng.standard_normal()))
    return out.canonicalize()


def chain_to_dict(c) -> dict:
    terms = []
    for key, coeff in sorted(c.terms.items()):
        if isinstance(c, CyclicChain):
            arity, factors = len(key) - 1, list(key)
        else:
            arity, factors = len(key), list(key)
        terms.append({"arity": arity, "coeff": [coeff.real, coeff.imag],
                      "factors": [int(i) for i in factors]})
    return {"reduced": True, "terms": terms}


def cyclic_chain_from_dict(alg: DgAlgebra, data: dict) -> CyclicChain:
    from .schemas import validate_payload
    validate_payload(data, "chain")
    out = CyclicChain(alg)
    for t in data["terms"]:
        fac = t["factors"]
        if len(fac) != t["arity"] + 1:
            raise InvalidInputError("cyclic chain term needs arity+1 factors")
        if any(not 0 <= i < alg.dim for i in fac):
            raise InvalidInputError("factor index out of range")
        out.add(tuple(fac), t["coeff"][0] + 1j * t["coeff"][1])
    return out.canonicalize()


def save_chain(c, path: str):
    with open(path, "w") as fh:
        json.dump(chain_to_dict(c), fh, indent=1, sort_keys=True)


def load_cyclic_chain(alg: DgAlgebra, path: str) -> CyclicChain:
    with open(path) as fh:
        return cyclic_chain_from_dict(alg, json.load(fh))
