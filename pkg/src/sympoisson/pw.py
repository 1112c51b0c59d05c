"""Split-signature cotangent metric, its bracket, and the induced dynamics.

A torsion-free connection on an n-chart induces on the 2n phase chart
(x^1..x^n, p_1..p_n):

- the metric matrix   [[ -2 p_k G^k_{ij},  I ], [ I, 0 ]]           (blocks x|p)
- the bracket         {F,G} = F_{x^i} G_{p_i} + F_{p_i} G_{x^i}
                               + 2 p_k G^k_{ij} F_{p_i} G_{p_j}
- the gradient flow   xdot^i = H_{p_i},
                      pdot_j = H_{x^j} + 2 p_k G^k_{ij} H_{p_i}

Trajectories are produced by classical fixed-step RK4; conserved-quantity
monitors are recorded per step so an inadequate step size is visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from . import geometry as geo
from .defaults import DT, RANK_TOL
from .expr import ScalarField
from .geometry import Chart, Connection, SymFormField, SymTensorField, levi_civita
from .poisson import SymPoissonPair, characteristic_data, schouten_self


class DynamicsError(Exception):
    pass


class BlowUpError(DynamicsError):
    """Non-finite state encountered; carries the last finite prefix."""

    def __init__(self, step: int, trajectory: "Trajectory"):
        super().__init__(f"trajectory blew up at step {step}")
        self.step = step
        self.trajectory = trajectory


# ---------------------------------------------------------------------------
# phase fields
# ---------------------------------------------------------------------------

def phase_names(chart: Chart) -> list[str]:
    """Coordinate names on the phase chart: base names then p1..pn."""
    momenta = [f"p{i + 1}" for i in range(chart.n)]
    clash = set(momenta) & set(chart.names)
    if clash:
        raise DynamicsError(f"base coordinates {clash} collide with momentum names")
    return list(chart.names) + momenta


@dataclass(frozen=True)
class PhaseField:
    """Scalar function on the phase chart of a base chart (arity 2n)."""

    chart: Chart
    f: ScalarField

    def __post_init__(self):
        if self.f.arity != 2 * self.chart.n:
            raise DynamicsError("phase field must have arity 2n")

    @staticmethod
    def parse(chart: Chart, text: str) -> "PhaseField":
        return PhaseField(chart, ex.parse(text, phase_names(chart)))

    @staticmethod
    def from_expr(chart: Chart, e: ex.Expr) -> "PhaseField":
        return PhaseField(chart, ScalarField(e, 2 * chart.n))

    def __call__(self, state) -> float:
        return self.f(state)

    def diff(self, index: int) -> ScalarField:
        return self.f.diff(index)

    def __add__(self, other: "PhaseField") -> "PhaseField":
        return PhaseField(self.chart, self.f + other.f)

    def __sub__(self, other: "PhaseField") -> "PhaseField":
        return PhaseField(self.chart, self.f - other.f)


def base_lift(chart: Chart, f: ScalarField) -> PhaseField:
    """Pull a base function back to the phase chart (same leading variables)."""
    return PhaseField(chart, f.with_arity(2 * chart.n))


def vertical_lift(a: SymTensorField) -> PhaseField:
    """Degree-r multivector -> degree-r polynomial in momenta.

    Components contract against momenta with a 1/r! normalization, so a
    vector field X gives X^i p_i and a bivector theta gives
    (1/2) theta^{ij} p_i p_j.
    """
    chart = a.chart
    n = chart.n
    r = a.degree
    if r == 0:
        return base_lift(chart, a.scalar())
    factor = 1.0
    for m in range(2, r + 1):
        factor *= m
    terms = []
    for multi in np.ndindex(*(n,) * r):
        p_prod = ex.expr_product([ex.var(n + i) for i in multi])
        terms.append(ex.mul(a.comps[multi], p_prod))
    e = ex.mul(ex.const(1.0 / factor), ex.expr_sum(terms))
    return PhaseField.from_expr(chart, e)


# ---------------------------------------------------------------------------
# metric, brackets, gradient
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CotangentState:
    x: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        if len(self.x) != len(self.p):
            raise DynamicsError("x and p must have the same length")
        if not all(math.isfinite(v) for v in self.x + self.p):
            raise DynamicsError("state entries must be finite")

    def flat(self) -> tuple[float, ...]:
        return self.x + self.p


def pw_metric_matrix(conn: Connection, state: CotangentState) -> np.ndarray:
    """2n x 2n symmetric matrix of the induced metric at a state."""
    n = conn.chart.n
    gamma = conn.gamma_at(state.x)
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            a[i, j] = -2.0 * sum(state.p[k] * gamma[k, i, j] for k in range(n))
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = a
    out[:n, n:] = np.eye(n)
    out[n:, :n] = np.eye(n)
    return out


def pw_bracket(conn: Connection, f: PhaseField, g: PhaseField) -> PhaseField:
    """Symmetric bracket on phase functions induced by the connection."""
    if f.chart != conn.chart or g.chart != conn.chart:
        raise geo.ChartMismatchError("phase fields on a different chart")
    n = conn.chart.n
    terms = []
    for i in range(n):
        terms.append(ex.mul(f.diff(i).expr, g.diff(n + i).expr))
        terms.append(ex.mul(f.diff(n + i).expr, g.diff(i).expr))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                terms.append(
                    ex.expr_product(
                        [
                            ex.const(2.0),
                            ex.var(n + k),
                            conn.gamma[k, i, j],
                            f.diff(n + i).expr,
                            g.diff(n + j).expr,
                        ]
                    )
                )
    return PhaseField.from_expr(conn.chart, ex.expr_sum(terms))


def canonical_bracket(f: PhaseField, g: PhaseField) -> PhaseField:
    """{F,G}_can = F_{x^i} G_{p_i} - G_{x^i} F_{p_i}."""
    if f.chart != g.chart:
        raise geo.ChartMismatchError("phase fields on different charts")
    n = f.chart.n
    terms = []
    for i in range(n):
        terms.append(ex.mul(f.diff(i).expr, g.diff(n + i).expr))
        terms.append(ex.neg(ex.mul(g.diff(i).expr, f.diff(n + i).expr)))
    return PhaseField.from_expr(f.chart, ex.expr_sum(terms))


def pw_gradient(conn: Connection, h: PhaseField) -> list[ScalarField]:
    """Components of the gradient flow on the phase chart (x block then p block)."""
    n = conn.chart.n
    out: list[ScalarField] = []
    for i in range(n):
        out.append(h.diff(n + i))
    for j in range(n):
        terms = [h.diff(j).expr]
        for i in range(n):
            for k in range(n):
                terms.append(
                    ex.expr_product(
                        [ex.const(2.0), ex.var(n + k), conn.gamma[k, i, j], h.diff(n + i).expr]
                    )
                )
        out.append(ScalarField(ex.expr_sum(terms), 2 * n))
    return out


def hamiltonian_vector_field(h: PhaseField) -> list[ScalarField]:
    """Canonical flow components (H_{p_i}, -H_{x^j})."""
    n = h.chart.n
    return [h.diff(n + i) for i in range(n)] + [-h.diff(j) for j in range(n)]


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Uniform-step trajectory with aligned monitor channels.

    For cotangent runs the second block holds momenta; for geodesic runs it
    holds velocities (`second` records which).
    """

    dt: float
    xs: np.ndarray  # (steps+1, n)
    ps: np.ndarray  # (steps+1, n)
    velocities: np.ndarray  # (steps+1, n): xdot at each stored state
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    second: str = "p"

    @property
    def steps(self) -> int:
        return len(self.xs) - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.xs))

    def state(self, k: int) -> CotangentState:
        return CotangentState(tuple(self.xs[k]), tuple(self.ps[k]))

    def channel_drift(self, name: str) -> float:
        c = self.channels[name]
        return float(np.abs(c - c[0]).max())


def _rk4(rhs, y0: np.ndarray, dt: float, steps: int):
    """Classical RK4; yields the state after each step."""
    y = y0.astype(float)
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        yield y


def _compile_fields(fields: list[ScalarField]):
    fns = [f.compiled() for f in fields]

    def rhs(y: np.ndarray) -> np.ndarray:
        v = tuple(map(float, y))
        try:
            return np.array([fn(v) for fn in fns], dtype=float)
        except (ValueError, ZeroDivisionError, OverflowError):
            return np.full(len(fns), np.nan)

    return rhs


def integrate_pw(
    conn: Connection,
    h: PhaseField,
    s0: CotangentState,
    dt: float = DT,
    steps: int = 1000,
    extra_monitors: dict[str, PhaseField] | None = None,
) -> Trajectory:
    """Integrate the gradient flow of `h`; records the `hamiltonian` channel.

    Raises BlowUpError (carrying the finite prefix) if the state leaves the
    finite range.
    """
    if dt <= 0 or steps < 1:
        raise DynamicsError("need dt > 0 and steps >= 1")
    n = conn.chart.n
    grad = pw_gradient(conn, h)
    rhs = _compile_fields(grad)
    monitors = {"hamiltonian": h}
    if extra_monitors:
        monitors.update(extra_monitors)
    mon_fns = {name: f.f.compiled() for name, f in monitors.items()}

    xs = [np.array(s0.x, dtype=float)]
    ps = [np.array(s0.p, dtype=float)]
    vels = []
    chans: dict[str, list[float]] = {name: [] for name in mon_fns}
    vel_fns = [grad[i].compiled() for i in range(n)]

    def record(y: np.ndarray):
        v = tuple(map(float, y))
        vels.append(np.array([fn(v) for fn in vel_fns]))
        for name, fn in mon_fns.items():
            chans[name].append(fn(v))

    y0 = np.array(s0.flat(), dtype=float)
    record(y0)
    for k, y in enumerate(_rk4(rhs, y0, dt, steps)):
        if not np.isfinite(y).all():
            partial = _make_traj(dt, xs, ps, vels, chans)
            raise BlowUpError(k + 1, partial)
        xs.append(y[:n].copy())
        ps.append(y[n:].copy())
        record(y)
    return _make_traj(dt, xs, ps, vels, chans)


def _make_traj(dt, xs, ps, vels, chans, second="p") -> Trajectory:
    return Trajectory(
        dt=dt,
        xs=np.array(xs),
        ps=np.array(ps),
        velocities=np.array(vels),
        channels={k: np.array(v) for k, v in chans.items()},
        second=second,
    )


def integrate_geodesic(
    conn: Connection,
    x0,
    v0,
    dt: float = DT,
    steps: int = 1000,
) -> Trajectory:
    """RK4 solution of xddot^k + G^k_{ij} xdot^i xdot^j = 0."""
    if dt <= 0 or steps < 1:
        raise DynamicsError("need dt > 0 and steps >= 1")
    n = conn.chart.n
    gamma_fns = [
        [[conn.entry(k, i, j).compiled() for j in range(n)] for i in range(n)]
        for k in range(n)
    ]
    nonzero = [
        (k, i, j)
        for k in range(n)
        for i in range(n)
        for j in range(n)
        if not (isinstance(conn.gamma[k, i, j], ex.Const) and conn.gamma[k, i, j].value == 0.0)
    ]

    def rhs(y: np.ndarray) -> np.ndarray:
        x = tuple(map(float, y[:n]))
        v = y[n:]
        acc = np.zeros(n)
        try:
            for k, i, j in nonzero:
                acc[k] -= gamma_fns[k][i][j](x) * v[i] * v[j]
        except (ValueError, ZeroDivisionError, OverflowError):
            return np.full(2 * n, np.nan)
        return np.concatenate([v, acc])

    xs = [np.array(x0, dtype=float)]
    vs = [np.array(v0, dtype=float)]
    y0 = np.concatenate([xs[0], vs[0]])
    for k, y in enumerate(_rk4(rhs, y0, dt, steps)):
        if not np.isfinite(y).all():
            partial = _make_traj(dt, xs, vs, vs, {}, second="v")
            raise BlowUpError(k + 1, partial)
        xs.append(y[:n].copy())
        vs.append(y[n:].copy())
    traj = _make_traj(dt, xs, vs, vs, {}, second="v")
    return traj


def geodesic_residual_along(conn: Connection, traj: Trajectory) -> np.ndarray:
    """|nabla_{xdot} xdot| along a trajectory's own states (self-consistency)."""
    n = conn.chart.n
    out = []
    for k in range(len(traj.xs)):
        x = tuple(traj.xs[k])
        v = traj.velocities[k]
        gamma = conn.gamma_at(x)
        acc_fd = _fd_velocity(traj, k)
        res = acc_fd + np.einsum("kij,i,j->k", gamma, v, v)
        out.append(np.linalg.norm(res))
    return np.array(out)


def _fd_velocity(traj: Trajectory, k: int) -> np.ndarray:
    """Central finite difference of the stored velocity channel (interior only)."""
    v = traj.velocities
    if 0 < k < len(v) - 1:
        return (v[k + 1] - v[k - 1]) / (2.0 * traj.dt)
    if k == 0:
        return (v[1] - v[0]) / traj.dt
    return (v[-1] - v[-2]) / traj.dt


# ---------------------------------------------------------------------------
# monitors tied to a symmetric Poisson pair
# ---------------------------------------------------------------------------

def speed_square_field(pair: SymPoissonPair) -> PhaseField:
    """theta(a, a) as a phase function (twice the vertical lift of theta)."""
    n = pair.chart.n
    terms = []
    for i in range(n):
        for j in range(n):
            terms.append(
                ex.expr_product([pair.theta.comps[i, j], ex.var(n + i), ex.var(n + j)])
            )
    return PhaseField.from_expr(pair.chart, ex.expr_sum(terms))


def monitor_speed_square(pair: SymPoissonPair, traj: Trajectory) -> np.ndarray:
    """Per-step values of theta(a, a) along a cotangent trajectory."""
    fn = speed_square_field(pair).f.compiled()
    return np.array([fn(tuple(traj.xs[k]) + tuple(traj.ps[k])) for k in range(len(traj.xs))])


def monitor_geodesic_residual(pair: SymPoissonPair, traj: Trajectory) -> np.ndarray:
    """Per interior step: | nabla_{xdot} xdot - (1/4) i_a i_a [theta,theta] |.

    The acceleration side is a central finite difference of the stored
    velocity channel; the bracket side is evaluated symbolically.
    """
    if len(traj.xs) < 3:
        raise DynamicsError("need at least 3 stored states for finite differences")
    n = pair.chart.n
    cubic = schouten_self(pair)
    fns = np.empty((n, n, n), dtype=object)
    for idx in np.ndindex(n, n, n):
        fns[idx] = ex.compile_expr(cubic.comps[idx])
    gamma_cache = {}
    out = []
    for k in range(1, len(traj.xs) - 1):
        x = tuple(traj.xs[k])
        p = traj.ps[k]
        v = traj.velocities[k]
        acc = _fd_velocity(traj, k)
        gamma = gamma_cache.get(x)
        if gamma is None:
            gamma = pair.nabla.gamma_at(x)
            gamma_cache[x] = gamma
        lhs = acc + np.einsum("kij,i,j->k", gamma, v, v)
        bracket = np.array(
            [[[fns[i, j, m](x) for m in range(n)] for j in range(n)] for i in range(n)]
        )
        rhs = 0.25 * np.einsum("i,j,ijm->m", p, p, bracket)
        out.append(np.linalg.norm(lhs - rhs))
    return np.array(out)


@dataclass
class GeodesicInvarianceReport:
    max_base_distance: float
    max_distribution_residual: float
    steps: int


def check_locally_geodesically_invariant(
    pair: SymPoissonPair,
    x0,
    zeta0,
    dt: float = DT,
    steps: int = 1000,
    rank_tol: float = RANK_TOL,
) -> GeodesicInvarianceReport:
    """Launch the gradient flow of the lifted bivector from (x0, zeta0) and
    compare with the plain geodesic started with velocity theta(zeta0).

    Reports the worst base-point distance between the two runs and the worst
    least-squares distance from the geodesic velocity to im theta.
    """
    x0 = np.array(x0, dtype=float)
    zeta0 = np.array(zeta0, dtype=float)
    theta0 = pair.theta.evaluate(x0)
    v0 = theta0 @ zeta0
    if np.linalg.norm(v0) == 0.0:
        raise DynamicsError("theta(zeta0) vanishes; pick a covector off the kernel")
    h = vertical_lift(pair.theta)
    lifted = integrate_pw(pair.nabla, h, CotangentState(tuple(x0), tuple(zeta0)), dt, steps)
    plain = integrate_geodesic(pair.nabla, x0, v0, dt, steps)
    base_dist = float(np.linalg.norm(lifted.xs - plain.xs, axis=1).max())
    worst_res = 0.0
    for k in range(0, len(plain.xs), max(1, len(plain.xs) // 50)):
        data = characteristic_data(pair.theta, plain.xs[k], rank_tol)
        v = plain.velocities[k]
        worst_res = max(worst_res, data.project_residual(v) / (1.0 + np.linalg.norm(v)))
    return GeodesicInvarianceReport(base_dist, worst_res, steps)


# ---------------------------------------------------------------------------
# Newtonian reduction
# ---------------------------------------------------------------------------

def run_newtonian(
    g: SymFormField,
    f: ScalarField,
    x0,
    v0,
    dt: float = DT,
    steps: int = 1000,
) -> Trajectory:
    """Second-order dynamics nabla^g_{xdot} xdot = -grad_g f via the phase flow
    of (g^{-1} - f) lifted, under the Levi-Civita connection of g.

    Exposes `energy` = (1/2) g(xdot, xdot) + f and per-step position/velocity.
    """
    chart = g.chart
    conn = levi_civita(g)
    ginv = geo.invert_metric(g)
    h = vertical_lift(ginv) - base_lift(chart, f)
    g_at0 = g.evaluate(x0)
    p0 = tuple(g_at0 @ np.array(v0, dtype=float))
    energy = PhaseField.from_expr(chart, _energy_expr(chart, ginv, f))
    traj = integrate_pw(conn, h, CotangentState(tuple(float(v) for v in x0), p0), dt, steps, {"energy": energy})
    return traj


def _energy_expr(chart: Chart, ginv: SymTensorField, f: ScalarField) -> ex.Expr:
    # (1/2) g^{ij} p_i p_j + f: kinetic plus potential along the flow
    n = chart.n
    terms = []
    for i in range(n):
        for j in range(n):
            terms.append(
                ex.expr_product(
                    [ex.const(0.5), ginv.comps[i, j], ex.var(n + i), ex.var(n + j)]
                )
            )
    return ex.add(ex.expr_sum(terms), f.expr)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory) -> str:
    """Delimited export: t, x1..xn, p1..pn, then one column per monitor.

    Full double precision (17 significant digits), one row per stored state.
    """
    n = traj.xs.shape[1]
    second = traj.second
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"{second}{i + 1}" for i in range(n)]
        + list(traj.channels.keys())
    )
    lines = [",".join(header)]
    times = traj.times
    for k in range(len(traj.xs)):
        row = [times[k], *traj.xs[k], *traj.ps[k]]
        row += [traj.channels[name][k] for name in traj.channels]
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write(trajectory_to_csv(traj))
