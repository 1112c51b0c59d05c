"""Commutative algebras from linear brackets on a dual space.

A linear bracket on coordinate functions of V* is the same data as a
commutative product on V through {i_u, i_v} = i_{u.v}.  In a basis the
structure constants satisfy theta^{ij}(x) = c^k_{ij} x^k, and:

- the bracket is integrable (with the flat connection) iff the algebra has
  a vanishing cyclic Jacobiator;
- it is strongly integrable iff, in addition, the product is associative,
  which for these algebras is equivalent to all triple products vanishing.

Catalog constants are exact rationals; verdicts on them are exact.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import expr as ex
from .geometry import Chart, Connection, SymTensorField
from .poisson import Involutivity, SymPoissonPair


class AlgebraError(Exception):
    pass


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, numbers.Integral):
        return Fraction(int(v))
    if isinstance(v, float):
        return Fraction(v)  # exact binary expansion
    if isinstance(v, str):
        return Fraction(v)
    raise AlgebraError(f"cannot interpret {v!r} as an exact rational")


class CommutativeAlgebra:
    """Structure constants c[k][i][j], exactly symmetric in (i, j)."""

    __slots__ = ("dim", "c")

    def __init__(self, dim: int, c):
        self.dim = dim
        self.c = tuple(
            tuple(tuple(_frac(c[k][i][j]) for j in range(dim)) for i in range(dim))
            for k in range(dim)
        )
        for k in range(dim):
            for i in range(dim):
                for j in range(dim):
                    if self.c[k][i][j] != self.c[k][j][i]:
                        raise AlgebraError(f"constants not symmetric at (k,i,j)=({k},{i},{j})")

    @classmethod
    def zero(cls, dim: int) -> "CommutativeAlgebra":
        z = [[[0] * dim for _ in range(dim)] for _ in range(dim)]
        return cls(dim, z)

    @classmethod
    def from_products(cls, dim: int, products: dict) -> "CommutativeAlgebra":
        """{(i, j): {k: value}} meaning e_i . e_j = sum value * e_k (0-based)."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j), comp in products.items():
            for k, v in comp.items():
                c[k][i][j] = _frac(v)
                c[k][j][i] = _frac(v)
        return cls(dim, c)

    def product(self, u: Sequence, v: Sequence) -> tuple[Fraction, ...]:
        if len(u) != self.dim or len(v) != self.dim:
            raise AlgebraError("vector dimension mismatch")
        u = [_frac(a) for a in u]
        v = [_frac(a) for a in v]
        return tuple(
            sum(
                (self.c[k][i][j] * u[i] * v[j] for i in range(self.dim) for j in range(self.dim)),
                start=Fraction(0),
            )
            for k in range(self.dim)
        )

    def basis_product(self, i: int, j: int) -> tuple[Fraction, ...]:
        return tuple(self.c[k][i][j] for k in range(self.dim))

    def _triple(self, i: int, j: int, k: int) -> tuple[Fraction, ...]:
        """e_i . (e_j . e_k)."""
        inner = self.basis_product(j, k)
        out = [Fraction(0)] * self.dim
        for m in range(self.dim):
            if inner[m]:
                for l in range(self.dim):
                    out[l] += self.c[l][i][m] * inner[m]
        return tuple(out)

    def jacobiator(self, i: int, j: int, k: int) -> tuple[Fraction, ...]:
        a = self._triple(i, j, k)
        b = self._triple(j, k, i)
        c = self._triple(k, i, j)
        return tuple(a[l] + b[l] + c[l] for l in range(self.dim))

    def associator(self, i: int, j: int, k: int) -> tuple[Fraction, ...]:
        """e_i . (e_j . e_k) - (e_i . e_j) . e_k."""
        left = self._triple(i, j, k)
        inner = self.basis_product(i, j)
        right = [Fraction(0)] * self.dim
        for m in range(self.dim):
            if inner[m]:
                for l in range(self.dim):
                    right[l] += self.c[l][m][k] * inner[m]
        return tuple(left[l] - right[l] for l in range(self.dim))

    def __eq__(self, other):
        return isinstance(other, CommutativeAlgebra) and self.c == other.c

    def __repr__(self):
        return f"CommutativeAlgebra(dim={self.dim})"


def product(alg: CommutativeAlgebra, u, v):
    return alg.product(u, v)


def is_jacobi_jordan(alg: CommutativeAlgebra) -> bool:
    """Exact check of the cyclic Jacobiator over all basis triples."""
    d = alg.dim
    zero = (Fraction(0),) * d
    return all(
        alg.jacobiator(i, j, k) == zero
        for i in range(d)
        for j in range(i, d)
        for k in range(j, d)
    )


def is_associative(alg: CommutativeAlgebra) -> bool:
    d = alg.dim
    zero = (Fraction(0),) * d
    return all(
        alg.associator(i, j, k) == zero
        for i in range(d)
        for j in range(d)
        for k in range(d)
    )


def basis_change(alg: CommutativeAlgebra, p: Sequence[Sequence]) -> CommutativeAlgebra:
    """Structure constants in the basis f_i = sum_m p[m][i] e_m (p invertible)."""
    d = alg.dim
    pm = [[_frac(p[m][i]) for i in range(d)] for m in range(d)]
    inv = _exact_inverse(pm)
    c = [[[Fraction(0)] * d for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            prod = alg.product([pm[m][i] for m in range(d)], [pm[m][j] for m in range(d)])
            for r in range(d):
                c[r][i][j] = sum(
                    (inv[r][k] * prod[k] for k in range(d)), start=Fraction(0)
                )
    return CommutativeAlgebra(d, c)


def _exact_inverse(m):
    d = len(m)
    a = [[Fraction(m[i][j]) for j in range(d)] + [Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for col in range(d):
        pivot = next((r for r in range(col, d) if a[r][col] != 0), None)
        if pivot is None:
            raise AlgebraError("matrix not invertible")
        a[col], a[pivot] = a[pivot], a[col]
        pv = a[col][col]
        a[col] = [v / pv for v in a[col]]
        for r in range(d):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [a[r][j] - f * a[col][j] for j in range(2 * d)]
    return [[a[i][d + j] for j in range(d)] for i in range(d)]


# ---------------------------------------------------------------------------
# linear structures
# ---------------------------------------------------------------------------

def _chart_names(dim: int) -> list[str]:
    if dim <= 4:
        return ["x", "y", "z", "t"][:dim]
    return [f"x{i + 1}" for i in range(dim)]


def to_linear_structure(alg: CommutativeAlgebra, names: Sequence[str] | None = None) -> SymPoissonPair:
    """theta^{ij} = c^k_{ij} x^k on the dual chart, with the flat connection."""
    names = list(names) if names is not None else _chart_names(alg.dim)
    chart = Chart(names)
    d = alg.dim
    comps = np.empty((d, d), dtype=object)
    for i in range(d):
        for j in range(d):
            comps[i, j] = ex.expr_sum(
                [
                    ex.mul(ex.const(float(alg.c[k][i][j])), ex.var(k))
                    for k in range(d)
                    if alg.c[k][i][j] != 0
                ]
            )
    theta = SymTensorField(chart, 2, comps)
    return SymPoissonPair(theta, Connection.euclidean(chart))


def from_linear_structure(theta: SymTensorField, tol: float = 1e-12) -> CommutativeAlgebra:
    """Recover structure constants from a homogeneous-linear bivector field.

    Raises AlgebraError when any component is not homogeneous linear.
    """
    if theta.degree != 2:
        raise AlgebraError("expected a degree-2 field")
    d = theta.chart.n
    origin = (0.0,) * d
    c = [[[Fraction(0)] * d for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            e = theta.comps[i, j]
            if abs(e.evaluate(origin)) > tol:
                raise AlgebraError(f"component ({i},{j}) has a constant part")
            for k in range(d):
                dk = e.diff(k)
                c[k][i][j] = Fraction(dk.evaluate(origin))
                for m in range(d):
                    second = dk.diff(m)
                    for pt in theta.chart.sample_points(5):
                        if abs(second.evaluate(pt)) > tol:
                            raise AlgebraError(
                                f"component ({i},{j}) is not linear in the coordinates"
                            )
    return CommutativeAlgebra(d, c)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    ident: str
    dim: int
    algebra: CommutativeAlgebra
    coords: str  # display form of theta in chart coordinates
    expect: dict


def _entry(ident, dim, products, coords, **expect) -> CatalogEntry:
    return CatalogEntry(
        ident, dim, CommutativeAlgebra.from_products(dim, products), coords, dict(expect)
    )


def catalog() -> list[CatalogEntry]:
    """Nontrivial linear structures up to dimension 4, plus the unique
    5-dimensional non-associative normal form: nine entries in total."""
    h = Fraction(1, 2)
    entries = [
        _entry(
            "dim2", 2, {(0, 0): {1: 1}}, "y dx.dx",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim3_1", 3, {(0, 0): {2: 1}}, "z dx.dx",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim3_2", 3, {(0, 0): {2: 1}, (1, 1): {2: 1}}, "z (dx.dx + dy.dy)",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim4_1", 4, {(0, 0): {3: 1}}, "t dx.dx",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim4_2", 4, {(0, 0): {3: 1}, (1, 1): {3: 1}}, "t (dx.dx + dy.dy)",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim4_3", 4, {(0, 0): {3: 1}, (1, 1): {2: 1}}, "t dx.dx + z dy.dy",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim4_4", 4, {(0, 0): {3: 1}, (0, 1): {2: 1}}, "t dx.dx + z dx.dy + z dy.dx",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim4_5", 4, {(0, 0): {3: 1}, (1, 2): {3: 1}}, "t (dx.dx + dy.dz + dz.dy)",
            jacobi=True, associative=True, sp=True, strong=True,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
        _entry(
            "dim5_nonassoc",
            5,
            {
                (0, 0): {1: 1},
                (0, 3): {4: 1},
                (0, 4): {2: -h},
                (1, 3): {2: 1},
            },
            "x2 d1.d1 + x5 (d1.d4 + d4.d1) - x3/2 (d1.d5 + d5.d1) + x3 (d2.d4 + d4.d2)",
            jacobi=True, associative=False, sp=True, strong=False,
            involutive=Involutivity.INVOLUTIVE_ON_SAMPLES,
        ),
    ]
    return entries


def catalog_entry(ident: str) -> CatalogEntry:
    for e in catalog():
        if e.ident == ident:
            return e
    raise KeyError(ident)


def characteristic_generators(pair: SymPoissonPair) -> list[SymTensorField]:
    """theta(dx^i) for each coordinate covector (spanning the module)."""
    from .geometry import SymFormField, contract

    chart = pair.chart
    return [
        contract(SymFormField.from_dict(chart, 1, {(i,): 1.0}), pair.theta)
        for i in range(chart.n)
    ]
