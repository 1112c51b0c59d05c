"""Left-invariant structures on Lie groups, handled through structure
constants in an invariant frame.

All verdicts here are exact linear algebra over the rationals: a
left-invariant bivector together with the halved-bracket torsion-free
connection is always integrable, strongness and involutivity are matrix
conditions, and curvature of that connection is -1/4 [[X,Y],Z].
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .jj import _exact_inverse, _frac


class LieAlgebraError(Exception):
    pass


class LieAlgebra:
    """Structure constants c[k][i][j] with [X_i, X_j] = c^k_{ij} X_k."""

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
                    if self.c[k][i][j] != -self.c[k][j][i]:
                        raise LieAlgebraError("structure constants must be antisymmetric")
        self._check_jacobi()

    def _check_jacobi(self):
        d = self.dim
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    for l in range(d):
                        total = Fraction(0)
                        for m in range(d):
                            total += self.c[m][i][j] * self.c[l][m][k]
                            total += self.c[m][j][k] * self.c[l][m][i]
                            total += self.c[m][k][i] * self.c[l][m][j]
                        if total != 0:
                            raise LieAlgebraError("Jacobi identity fails")

    @classmethod
    def from_brackets(cls, dim: int, brackets: dict) -> "LieAlgebra":
        """{(i, j): {k: value}} meaning [X_i, X_j] = sum value X_k for i < j."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j), comp in brackets.items():
            for k, v in comp.items():
                c[k][i][j] = _frac(v)
                c[k][j][i] = -_frac(v)
        return cls(dim, c)

    def bracket(self, u: Sequence, v: Sequence) -> tuple[Fraction, ...]:
        u = [_frac(a) for a in u]
        v = [_frac(a) for a in v]
        return tuple(
            sum(
                (self.c[k][i][j] * u[i] * v[j] for i in range(self.dim) for j in range(self.dim)),
                start=Fraction(0),
            )
            for k in range(self.dim)
        )

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim})"


@dataclass(frozen=True)
class LeftInvariantConnection:
    """nabla_{X_i} X_j = A^k_{ij} X_k with constant coefficients."""

    algebra: LieAlgebra
    a: tuple  # a[k][i][j]

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def is_torsion_free(self) -> bool:
        d = self.dim
        return all(
            self.a[k][i][j] - self.a[k][j][i] == self.algebra.c[k][i][j]
            for k in range(d)
            for i in range(d)
            for j in range(d)
        )

    def require_torsion_free(self):
        if not self.is_torsion_free():
            raise LieAlgebraError("connection is not torsion-free against the bracket")


def left_invariant_connection(g: LieAlgebra, entries: dict) -> LeftInvariantConnection:
    """Sparse coefficients {(k, i, j): value} for nabla_{X_i} X_j = A^k_{ij} X_k."""
    d = g.dim
    a = [[[Fraction(0)] * d for _ in range(d)] for _ in range(d)]
    for (k, i, j), v in entries.items():
        a[k][i][j] = _frac(v)
    return LeftInvariantConnection(g, tuple(tuple(tuple(r) for r in lvl) for lvl in a))


def weitzenboeck0(g: LieAlgebra) -> LeftInvariantConnection:
    """The torsion-free part of the parallelizing connection: nabla_X Y = [X,Y]/2."""
    d = g.dim
    half = Fraction(1, 2)
    a = tuple(
        tuple(tuple(half * g.c[k][i][j] for j in range(d)) for i in range(d))
        for k in range(d)
    )
    return LeftInvariantConnection(g, a)


class LeftInvariantSymTensor:
    """Constant symmetric components in the invariant frame."""

    __slots__ = ("dim", "degree", "comps")

    def __init__(self, dim: int, degree: int, comps: np.ndarray):
        self.dim = dim
        self.degree = degree
        self.comps = comps

    @classmethod
    def from_dict(cls, dim: int, degree: int, entries: dict) -> "LeftInvariantSymTensor":
        import itertools

        comps = np.empty((dim,) * degree, dtype=object)
        comps[...] = Fraction(0)
        for idx, v in entries.items():
            if isinstance(idx, int):
                idx = (idx,)
            for perm in set(itertools.permutations(idx)):
                comps[perm] = _frac(v)
        return cls(dim, degree, comps)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.comps.flat)

    def __add__(self, other):
        comps = np.empty(self.comps.shape, dtype=object)
        for idx in np.ndindex(*self.comps.shape):
            comps[idx] = self.comps[idx] + other.comps[idx]
        return LeftInvariantSymTensor(self.dim, self.degree, comps)

    def __sub__(self, other):
        comps = np.empty(self.comps.shape, dtype=object)
        for idx in np.ndindex(*self.comps.shape):
            comps[idx] = self.comps[idx] - other.comps[idx]
        return LeftInvariantSymTensor(self.dim, self.degree, comps)

    def scale(self, v):
        v = _frac(v)
        comps = np.empty(self.comps.shape, dtype=object)
        for idx in np.ndindex(*self.comps.shape):
            comps[idx] = v * self.comps[idx]
        return LeftInvariantSymTensor(self.dim, self.degree, comps)


def li_symmetric_bracket(conn: LeftInvariantConnection, i: int, j: int) -> tuple[Fraction, ...]:
    """<X_i, X_j> = nabla_i X_j + nabla_j X_i in frame components."""
    d = conn.dim
    return tuple(conn.a[k][i][j] + conn.a[k][j][i] for k in range(d))


def li_covariant_derivative(
    conn: LeftInvariantConnection, theta: LeftInvariantSymTensor, i: int
) -> LeftInvariantSymTensor:
    """(nabla_i theta)^J = sum over slots of A^{j_a}_{i m} theta^{..m..}."""
    d = conn.dim
    r = theta.degree
    comps = np.empty((d,) * r, dtype=object)
    for idx in np.ndindex(*comps.shape):
        total = Fraction(0)
        for a_slot in range(r):
            ja = idx[a_slot]
            for m in range(d):
                swapped = idx[:a_slot] + (m,) + idx[a_slot + 1:]
                total += conn.a[ja][i][m] * theta.comps[swapped]
        comps[idx] = total
    return LeftInvariantSymTensor(d, r, comps)


def _directional_derivatives(conn, theta):
    """D[i] = nabla_{theta(eps^i)} theta = theta^{im} nabla_m theta."""
    if theta.degree != 2:
        raise LieAlgebraError("directional derivatives expect a degree-2 tensor")
    d = conn.dim
    out = []
    for i in range(d):
        acc = LeftInvariantSymTensor.from_dict(d, 2, {})
        for m in range(d):
            if theta.comps[i, m] != 0:
                acc = acc + li_covariant_derivative(conn, theta, m).scale(theta.comps[i, m])
        out.append(acc)
    return out


def li_is_parallel(theta: LeftInvariantSymTensor, conn: LeftInvariantConnection) -> bool:
    conn.require_torsion_free()
    return all(li_covariant_derivative(conn, theta, i).is_zero() for i in range(conn.dim))


def li_is_strong(theta: LeftInvariantSymTensor, conn: LeftInvariantConnection) -> bool:
    conn.require_torsion_free()
    return all(d.is_zero() for d in _directional_derivatives(conn, theta))


def li_is_symmetric_poisson(theta: LeftInvariantSymTensor, conn: LeftInvariantConnection) -> bool:
    """Cyclic alternative: sum_cyc (nabla_{theta(eps^i)} theta)^{jk} = 0 exactly."""
    conn.require_torsion_free()
    d = conn.dim
    dirs = _directional_derivatives(conn, theta)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                total = dirs[i].comps[j, k] + dirs[j].comps[k, i] + dirs[k].comps[i, j]
                if total != 0:
                    return False
    return True


def li_is_involutive(theta: LeftInvariantSymTensor, g: LieAlgebra) -> bool:
    """Closure of span{theta(eps^i)} under the bracket, by exact elimination."""
    d = g.dim
    rows = [[theta.comps[i, m] for m in range(d)] for i in range(d)]
    basis = _row_space(rows)
    for i in range(d):
        for j in range(i + 1, d):
            br = g.bracket(rows[i], rows[j])
            if not _in_span(basis, list(br)):
                return False
    return True


def _row_space(rows):
    basis = []
    for row in rows:
        row = _reduce_against(basis, [Fraction(v) for v in row])
        if any(v != 0 for v in row):
            lead = next(idx for idx, v in enumerate(row) if v != 0)
            row = [v / row[lead] for v in row]
            basis.append((lead, row))
            basis.sort()
    return basis


def _reduce_against(basis, row):
    for lead, b in basis:
        if row[lead] != 0:
            f = row[lead]
            row = [r - f * bv for r, bv in zip(row, b)]
    return row


def _in_span(basis, row):
    return all(v == 0 for v in _reduce_against(basis, [Fraction(v) for v in row]))


def li_curvature_weitzenboeck(g: LieAlgebra, i: int, j: int, k: int) -> tuple[Fraction, ...]:
    """R(X_i, X_j) X_k = -1/4 [[X_i, X_j], X_k] for the halved-bracket connection."""
    d = g.dim
    inner = tuple(g.c[m][i][j] for m in range(d))
    out = [Fraction(0)] * d
    for m in range(d):
        if inner[m]:
            for l in range(d):
                out[l] += inner[m] * g.c[l][m][k]
    q = Fraction(-1, 4)
    return tuple(q * v for v in out)


def li_curvature_general(
    conn: LeftInvariantConnection, i: int, j: int, k: int
) -> tuple[Fraction, ...]:
    """R(X_i, X_j) X_k = nabla_i nabla_j X_k - nabla_j nabla_i X_k - nabla_{[X_i,X_j]} X_k."""
    d = conn.dim
    a, c = conn.a, conn.algebra.c
    out = [Fraction(0)] * d
    for m in range(d):
        for l in range(d):
            out[l] += a[m][j][k] * a[l][i][m] - a[m][i][k] * a[l][j][m]
        for l in range(d):
            out[l] -= c[m][i][j] * a[l][m][k]
    return tuple(out)


def li_levi_civita(g: LieAlgebra, metric) -> LeftInvariantConnection:
    """Koszul formula on the invariant frame for a constant metric g_{ij}.

    2 g(nabla_i j, k) = g([i,j],k) - g([j,k],i) + g([k,i],j)
    """
    d = g.dim
    gm = [[_frac(metric[i][j]) for j in range(d)] for i in range(d)]
    ginv = _exact_inverse(gm)
    a = [[[Fraction(0)] * d for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            rhs = []
            for k in range(d):
                term = Fraction(0)
                for m in range(d):
                    term += g.c[m][i][j] * gm[m][k]
                    term -= g.c[m][j][k] * gm[m][i]
                    term += g.c[m][k][i] * gm[m][j]
                rhs.append(term / 2)
            for l in range(d):
                a[l][i][j] = sum((ginv[l][k] * rhs[k] for k in range(d)), start=Fraction(0))
    return LeftInvariantConnection(g, tuple(tuple(tuple(r) for r in lvl) for lvl in a))


# ---------------------------------------------------------------------------
# unit-quaternion flow
# ---------------------------------------------------------------------------

def su2_flow_matrix(a: float, b: float, c: float) -> np.ndarray:
    """Generator of right multiplication by a i + b j + c k on unit quaternions.

    Skew by construction, so the induced flow preserves the Euclidean norm.
    """
    return np.array(
        [
            [0.0, -a, -b, -c],
            [a, 0.0, c, -b],
            [b, -c, 0.0, a],
            [c, b, -a, 0.0],
        ]
    )


def su2_flow(a: float, b: float, c: float, q0, t: float, dt: float = 1e-3) -> np.ndarray:
    """RK4 solution of qdot = M(a,b,c) q from a unit 4-vector q0.

    The generator is skew, so the Euclidean norm is preserved; a norm check
    guards against misuse anyway.
    """
    q = np.array(q0, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > 1e-12:
        raise LieAlgebraError("q0 must be a unit 4-vector")
    m = su2_flow_matrix(a, b, c)
    steps = max(1, int(round(abs(t) / dt)))
    h = t / steps
    for _ in range(steps):
        k1 = m @ q
        k2 = m @ (q + 0.5 * h * k1)
        k3 = m @ (q + 0.5 * h * k2)
        k4 = m @ (q + h * k3)
        q = q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(q).all():  # unreachable for a skew generator
            raise LieAlgebraError("flow left the finite range")
    return q


def su2_flow_closed_form_i(q0, t: float) -> np.ndarray:
    """Closed form for the (a,b,c) = (1,0,0) flow."""
    x0, y0, z0, w0 = q0
    ct, st = np.cos(t), np.sin(t)
    return np.array(
        [
            x0 * ct - y0 * st,
            y0 * ct + x0 * st,
            z0 * ct + w0 * st,
            w0 * ct - z0 * st,
        ]
    )


# ---------------------------------------------------------------------------
# named algebras
# ---------------------------------------------------------------------------

def algebra(ident: str) -> LieAlgebra:
    """Catalog: abelian_n, so3, su2, aff1, aff1xR, heisenberg3."""
    if ident.startswith("abelian_"):
        return LieAlgebra.from_brackets(int(ident.split("_")[1]), {})
    if ident in ("so3", "su2"):
        return LieAlgebra.from_brackets(
            3, {(0, 1): {2: 1}, (1, 2): {0: 1}, (2, 0): {1: 1}}
        )
    if ident == "aff1":
        return LieAlgebra.from_brackets(2, {(0, 1): {1: 1}})
    if ident == "aff1xR":
        return LieAlgebra.from_brackets(3, {(0, 1): {1: 1}})
    if ident == "heisenberg3":
        return LieAlgebra.from_brackets(3, {(0, 1): {2: 1}})
    raise KeyError(ident)


def aff1xR_parallelizing_connection() -> LeftInvariantConnection:
    """The torsion-free connection making X . Y parallel on aff(1) x R:

    nabla_X X = -X, nabla_X Y = Y, everything else zero.
    """
    g = algebra("aff1xR")
    return left_invariant_connection(g, {(0, 0, 0): -1, (1, 0, 1): 1})


# ---------------------------------------------------------------------------
# chart export
# ---------------------------------------------------------------------------

def polynomial_frame(ident: str):
    """Chart plus an exact polynomial invariant frame for the named algebra.

    Available for algebras whose invariant frames close in polynomial (or
    rational) coordinate expressions: abelian_n, heisenberg3, aff1, aff1xR.
    """
    from .geometry import Chart, SymTensorField

    def vec(chart, *entries):
        return SymTensorField.from_dict(chart, 1, {(i,): e for i, e in enumerate(entries)})

    if ident.startswith("abelian_"):
        n = int(ident.split("_")[1])
        chart = Chart([f"x{i + 1}" for i in range(n)])
        frame = [
            SymTensorField.from_dict(chart, 1, {(i,): 1.0}) for i in range(n)
        ]
        return chart, frame
    if ident == "heisenberg3":
        chart = Chart(["x", "y", "z"])
        return chart, [vec(chart, "1", "0", "0"), vec(chart, "0", "1", "x"), vec(chart, "0", "0", "1")]
    if ident == "aff1":
        chart = Chart(["a", "b"], box=[(0.5, 1.5), (-1.0, 1.0)])
        return chart, [vec(chart, "a", "0"), vec(chart, "0", "a")]
    if ident == "aff1xR":
        chart = Chart(["a", "b", "c"], box=[(0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0)])
        return chart, [
            vec(chart, "a", "0", "0"),
            vec(chart, "0", "a", "0"),
            vec(chart, "0", "0", "1"),
        ]
    raise KeyError(f"no polynomial frame for '{ident}'")


def chart_export(
    g: LieAlgebra,
    conn: LeftInvariantConnection,
    theta: LeftInvariantSymTensor,
    chart,
    frame,
):
    """Realize an invariant pair in coordinates through an explicit frame.

    The frame fields must satisfy the algebra's bracket relations; the
    resulting chart connection reproduces nabla_{E_i} E_j = A^k_{ij} E_k and
    theta pushes forward through the frame.
    """
    from . import expr as ex
    from .geometry import Connection, SymTensorField, _symbolic_inverse
    from .poisson import SymPoissonPair

    n = chart.n
    if g.dim != n or len(frame) != n:
        raise LieAlgebraError("frame must match the algebra dimension")
    conn.require_torsion_free()
    m = np.empty((n, n), dtype=object)
    for a in range(n):
        for i in range(n):
            m[a, i] = frame[i].comps[(a,)]
    m_inv = _symbolic_inverse(m)  # m_inv[i, a]

    # F^b_{ij} = A^k_{ij} E_k^b - E_i^a d_a E_j^b
    f = np.empty((n, n, n), dtype=object)
    for b in range(n):
        for i in range(n):
            for j in range(n):
                terms = [
                    ex.mul(ex.const(float(conn.a[k][i][j])), frame[k].comps[(b,)])
                    for k in range(n)
                    if conn.a[k][i][j] != 0
                ]
                for a in range(n):
                    terms.append(
                        ex.neg(ex.mul(frame[i].comps[(a,)], frame[j].comps[(b,)].diff(a)))
                    )
                f[b, i, j] = ex.expr_sum(terms)

    gamma = np.empty((n, n, n), dtype=object)
    for b in range(n):
        for a in range(n):
            for c in range(n):
                terms = []
                for i in range(n):
                    for j in range(n):
                        terms.append(
                            ex.expr_product([m_inv[i, a], m_inv[j, c], f[b, i, j]])
                        )
                gamma[b, a, c] = ex.expr_sum(terms)

    comps = np.empty((n, n), dtype=object)
    for a in range(n):
        for b in range(n):
            terms = []
            for i in range(n):
                for j in range(n):
                    if theta.comps[i, j] != 0:
                        terms.append(
                            ex.expr_product(
                                [
                                    ex.const(float(theta.comps[i, j])),
                                    frame[i].comps[(a,)],
                                    frame[j].comps[(b,)],
                                ]
                            )
                        )
            comps[a, b] = ex.expr_sum(terms)
    theta_chart = SymTensorField(chart, 2, comps)
    return SymPoissonPair(theta_chart, Connection(chart, gamma))
