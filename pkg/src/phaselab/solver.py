"""Explicit time integration of the Allen-Cahn system.

Interior nodes evolve by explicit Euler on

    du/dt = lap(u) - W'(u)/eps^2,      W(s) = (1 - s^2)^2 / 2,

while each boundary face carries one of three laws: a dynamic law
``du/dt = -sigma * du/dnu`` (outward normal derivative by the 3-point
one-sided stencil), a frozen trace (formal ``sigma -> 0`` limit), or
zero-flux reflection (formal ``sigma = infinity``).  The scheme commutes
with ``u -> -u`` bit-exactly and keeps ``max|u| <= 1 + 1e-12`` whenever
the initial data lies in ``[-1, 1]``; a violation or a NaN aborts the
run as numerical divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError, DivergenceError, StabilityError, UsageError
from .grid import Face, Grid2D, ScalarField2D

MAX_PRINCIPLE_SLACK = 1e-12
ENERGY_RISE_SLACK = 1e-10


def double_well(s):
    """W(s) = (1 - s^2)^2 / 2, minima at s = +-1."""
    q = 1.0 - s * s
    return 0.5 * q * q


def double_well_prime(s):
    """W'(s) = -2 s (1 - s^2)."""
    return -2.0 * s * (1.0 - s * s)


# -- boundary laws ------------------------------------------------------------


@dataclass(frozen=True)
class Dynamic:
    """Boundary trace driven by the outward normal derivative."""

    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigurationError(f"dynamic law needs sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class DirichletFrozen:
    """Trace pinned at its initial values."""


@dataclass(frozen=True)
class NeumannZeroFlux:
    """Zero-flux: mirror ghost values, then the interior update."""


BoundaryLaw = Union[Dynamic, DirichletFrozen, NeumannZeroFlux]


# -- initial interfaces -------------------------------------------------------


@dataclass(frozen=True)
class Line1D:
    """Vertical interface at x = x_star; the +1 phase sits at x > x_star."""

    x_star: float


@dataclass(frozen=True)
class CircleArc:
    """Circular interface; sign=+1 puts the +1 phase inside the disk."""

    center: tuple[float, float]
    radius: float
    sign: float = 1.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ConfigurationError("circle radius must be positive")


@dataclass(frozen=True)
class Halfspace:
    """The +1 phase occupies {x . n < offset}."""

    normal: tuple[float, float]
    offset: float


InterfaceDescriptor = Union[Line1D, CircleArc, Halfspace]


def signed_distance(desc: InterfaceDescriptor, grid: Grid2D) -> np.ndarray:
    """Signed distance to the described interface, positive on the +1 side."""
    xx, yy = grid.meshgrid()
    if isinstance(desc, Line1D):
        return xx - desc.x_star
    if isinstance(desc, CircleArc):
        cx, cy = desc.center
        rr = np.hypot(xx - cx, yy - cy)
        return desc.sign * (desc.radius - rr)
    if isinstance(desc, Halfspace):
        nx_, ny_ = desc.normal
        nn = math.hypot(nx_, ny_)
        if nn == 0:
            raise ConfigurationError("halfspace normal must be nonzero")
        return (desc.offset - (xx * nx_ + yy * ny_)) / nn
    raise ConfigurationError(f"unknown interface descriptor {desc!r}")


# -- solver state -------------------------------------------------------------


@dataclass
class PhaseState:
    """Full solver state: order parameter, time, layer width, per-face laws
    and the time derivative cached from the last accepted step."""

    u: ScalarField2D
    t: float
    eps: float
    laws: dict[Face, BoundaryLaw]
    dudt: ScalarField2D | None = None
    init_bounded: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.eps < 1.0):
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        missing = [f for f in self.u.grid.active_faces() if f not in self.laws]
        if missing:
            raise ConfigurationError(
                f"missing boundary law for face(s) {[f.value for f in missing]}"
            )

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def dynamic_faces(self) -> list[tuple[Face, float]]:
        return [
            (f, law.sigma)
            for f in self.grid.active_faces()
            if isinstance((law := self.laws[f]), Dynamic)
        ]


def neumann_laws() -> dict[Face, BoundaryLaw]:
    return {f: NeumannZeroFlux() for f in Face}


def init_profile(
    grid: Grid2D,
    desc: InterfaceDescriptor,
    eps: float,
    laws: dict[Face, BoundaryLaw] | None = None,
) -> PhaseState:
    """tanh(d/eps) initial data for the signed distance d of the descriptor.

    sup|u0| <= 1 holds by construction.  A descriptor whose interface does
    not cross the grid is rejected.
    """
    if not (0.0 < eps < 1.0):
        raise ConfigurationError(f"eps must lie in (0, 1), got {eps}")
    d = signed_distance(desc, grid)
    if not (d.min() < 0.0 < d.max()):
        raise ConfigurationError(
            "interface descriptor does not cross the grid extents"
        )
    u0 = np.tanh(d / eps)
    return PhaseState(
        u=ScalarField2D(grid, u0),
        t=0.0,
        eps=eps,
        laws=dict(laws) if laws is not None else neumann_laws(),
        dudt=None,
        init_bounded=True,
    )


def stable_dt(state: PhaseState, safety: float = 0.5) -> float:
    """Explicit stability bound: diffusion CFL ``h^2/(2*dim)`` (unit
    diffusivity) against reaction stiffness ``eps^2/8`` (|W''| <= 4 on
    [-1, 1]), scaled by the safety factor."""
    g = state.grid
    h = g.hx if g.is_1d else min(g.hx, g.hy)
    dim = 1 if g.is_1d else 2
    return safety * min(h * h / (2.0 * dim), state.eps**2 / 8.0)


# -- the explicit step --------------------------------------------------------


def _one_sided_second(f0, f1, f2, f3, h2):
    return (-5.0 * (f1 - f0) + 4.0 * (f2 - f0) - (f3 - f0)) / h2


class _StepKernel:
    """Precompiled single-step arithmetic for one (grid, eps, laws)
    combination.  `step` builds one per call; `run` reuses one across the
    whole march, so both paths produce bit-identical updates."""

    def __init__(self, state: PhaseState):
        g = state.grid
        self.grid = g
        self.eps = state.eps
        self.inv_eps2 = 1.0 / (state.eps * state.eps)
        self.laws = state.laws
        self.is_1d = g.is_1d
        self.hx2 = g.hx * g.hx
        self.hy2 = g.hy * g.hy
        # faces in reverse ownership precedence: the owner writes corners
        # last (bottom owns both bottom corners, then right, top, left)
        self.face_plan = [
            (f, self.laws[f])
            for f in (Face.LEFT, Face.TOP, Face.RIGHT, Face.BOTTOM)
            if f in g.active_faces()
        ]
        if self.is_1d:
            # scratch buffers for the in-place 1D update
            self._d1 = np.empty(g.nx - 1)
            self._lap = np.empty(g.nx - 2)
            self._r = np.empty(g.nx)
            self._poly = np.empty(g.nx)

    # -- face pieces -----------------------------------------------------

    def _normal_derivative(self, u: np.ndarray, face: Face) -> np.ndarray:
        g = self.grid
        if face is Face.LEFT:
            n, h = g.nx, g.hx
            f0, f1, f2 = u[0, :], u[1, :], (u[2, :] if g.nx > 2 else None)
        elif face is Face.RIGHT:
            n, h = g.nx, g.hx
            f0, f1, f2 = u[-1, :], u[-2, :], (u[-3, :] if g.nx > 2 else None)
        elif face is Face.BOTTOM:
            n, h = g.ny, g.hy
            f0, f1, f2 = u[:, 0], u[:, 1], (u[:, 2] if g.ny > 2 else None)
        else:
            n, h = g.ny, g.hy
            f0, f1, f2 = u[:, -1], u[:, -2], (u[:, -3] if g.ny > 2 else None)
        if f2 is None:
            return -((f1 - f0) / h)
        return -((4.0 * (f1 - f0) - (f2 - f0)) / (2 * h))

    def _neumann_face(self, u, wprime, face: Face, dt: float) -> np.ndarray:
        """Zero-flux face: mirrored normal second difference plus the
        tangential second derivative along the face."""
        g = self.grid
        if face in (Face.BOTTOM, Face.TOP):
            j0, j1 = (0, 1) if face is Face.BOTTOM else (-1, -2)
            fv, inner = u[:, j0], u[:, j1]
            h_n2, h_t2, n_t = self.hy2, self.hx2, g.nx
            adj_lo, adj_hi = Face.LEFT, Face.RIGHT
            w_face = wprime[:, j0]
        else:
            i0, i1 = (0, 1) if face is Face.LEFT else (-1, -2)
            fv, inner = u[i0, :], u[i1, :]
            h_n2, h_t2, n_t = self.hx2, self.hy2, g.ny
            adj_lo, adj_hi = Face.BOTTOM, Face.TOP
            w_face = wprime[i0, :]

        lap = 2.0 * (inner - fv) / h_n2
        tang = np.zeros_like(fv)
        if n_t >= 3:
            tang[1:-1] = ((fv[2:] - fv[1:-1]) - (fv[1:-1] - fv[:-2])) / h_t2
            for end, adj in ((0, adj_lo), (-1, adj_hi)):
                ordered = fv if end == 0 else fv[::-1]
                if isinstance(self.laws.get(adj), NeumannZeroFlux):
                    # the adjacent face mirrors across the corner
                    tang[end] = 2.0 * (ordered[1] - ordered[0]) / h_t2
                elif n_t >= 4:
                    tang[end] = _one_sided_second(
                        ordered[0], ordered[1], ordered[2], ordered[3], h_t2
                    )
                else:
                    tang[end] = (
                        (ordered[2] - ordered[1]) - (ordered[1] - ordered[0])
                    ) / h_t2
        return fv + dt * (lap + tang - self.inv_eps2 * w_face)

    # -- full update -------------------------------------------------------

    def advance(self, u: np.ndarray, dt: float) -> np.ndarray:
        inv_eps2 = self.inv_eps2
        unew = np.empty_like(u)

        if self.is_1d:
            # fused in-place 1D path: -dt/eps^2 W'(u) = (2 dt/eps^2)(u - u^3)
            col = u[:, 0]
            c_react = 2.0 * dt * inv_eps2
            d1, lap, r, poly = self._d1, self._lap, self._r, self._poly
            np.subtract(col[1:], col[:-1], out=d1)
            np.subtract(d1[1:], d1[:-1], out=lap)
            lap *= dt / self.hx2
            np.multiply(col, col, out=r)
            r *= col
            np.subtract(col, r, out=poly)
            poly *= c_react
            poly += col
            out_col = unew[:, 0]
            out_col[:] = poly
            out_col[1:-1] += lap
            for face, law in self.face_plan:
                i = 0 if face is Face.LEFT else -1
                j = 1 if face is Face.LEFT else -2
                if isinstance(law, DirichletFrozen):
                    out_col[i] = col[i]
                elif isinstance(law, Dynamic):
                    k = 2 if face is Face.LEFT else -3
                    if self.grid.nx > 2:
                        inward = (4.0 * (col[j] - col[i]) - (col[k] - col[i])) / (
                            2 * self.grid.hx
                        )
                    else:
                        inward = (col[j] - col[i]) / self.grid.hx
                    out_col[i] = col[i] + dt * law.sigma * inward
                else:
                    # poly already carries col + reaction at the end node
                    lap_b = 2.0 * (col[j] - col[i]) / self.hx2
                    out_col[i] = poly[i] + dt * lap_b
            return unew

        wprime = double_well_prime(u)
        core = u[1:-1, 1:-1]
        lap = ((u[2:, 1:-1] - core) - (core - u[:-2, 1:-1])) / self.hx2 + (
            (u[1:-1, 2:] - core) - (core - u[1:-1, :-2])
        ) / self.hy2
        unew[1:-1, 1:-1] = core + dt * (lap - inv_eps2 * wprime[1:-1, 1:-1])

        for face, law in self.face_plan:
            trace = self.grid.face_slice(u, face)
            if isinstance(law, DirichletFrozen):
                vals = trace.copy()
            elif isinstance(law, Dynamic):
                vals = trace - (dt * law.sigma) * self._normal_derivative(u, face)
            else:
                vals = self._neumann_face(u, wprime, face, dt)
            if face is Face.BOTTOM:
                unew[:, 0] = vals
            elif face is Face.TOP:
                unew[:, -1] = vals
            elif face is Face.LEFT:
                unew[0, :] = vals
            else:
                unew[-1, :] = vals
        return unew


def _check_new_values(unew: np.ndarray, init_bounded: bool, t: float) -> None:
    mx = float(unew.max())
    mn = float(unew.min())
    if not (math.isfinite(mx) and math.isfinite(mn)):
        raise DivergenceError(f"NaN/Inf detected during the step at t={t:.6g}")
    m = max(mx, -mn)
    if init_bounded and m > 1.0 + MAX_PRINCIPLE_SLACK:
        raise DivergenceError(
            f"maximum principle violated: max|u| = {m:.15g} at t={t:.6g}"
        )


def step(state: PhaseState, dt: float) -> PhaseState:
    """One explicit Euler step.  Pure Jacobi-style update: the new state
    is a function of the previous one only.

    Raises `StabilityError` when dt exceeds the stable bound and
    `DivergenceError` on NaN or a maximum-principle violation.
    """
    if dt <= 0:
        raise UsageError("dt must be positive")
    bound = stable_dt(state)
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(f"dt={dt:.3e} exceeds the stable bound {bound:.3e}")
    kernel = _StepKernel(state)
    u = state.u.values
    unew = kernel.advance(u, dt)
    _check_new_values(unew, state.init_bounded, state.t)
    dudt = (unew - u) / dt
    return PhaseState(
        u=ScalarField2D(state.grid, unew),
        t=state.t + dt,
        eps=state.eps,
        laws=state.laws,
        dudt=ScalarField2D(state.grid, dudt),
        init_bounded=state.init_bounded,
    )


def run(
    state: PhaseState,
    t_end: float,
    observer_cadence: int = 100,
    dt: float | None = None,
    safety: float = 0.5,
):
    """March to ``t_end`` with dt = stable_dt (or an explicit override),
    recording diagnostics every ``observer_cadence`` steps.

    The discrete energy must be nonincreasing between snapshots up to
    ``1e-10 * max(E, 1)``; any rise beyond that aborts as divergence.
    Returns a `RunRecord`.
    """
    from . import measures
    from .record import RunRecord

    if t_end < state.t:
        raise UsageError("t_end must not precede the state time")
    if observer_cadence < 1:
        raise UsageError("observer cadence must be >= 1")

    record = RunRecord.start(state)
    if t_end == state.t:
        return record

    base_dt = stable_dt(state, safety) if dt is None else dt
    if base_dt <= 0:
        raise UsageError("dt must be positive")
    bound = stable_dt(state)
    if base_dt > bound * (1.0 + 1e-12):
        raise StabilityError(
            f"dt={base_dt:.3e} exceeds the stable bound {bound:.3e}"
        )

    kernel = _StepKernel(state)
    u = state.u.values
    t = state.t
    prev_energy = record.snapshots[0].scalars["E"]
    k = 0
    t_eps = 1e-12 * max(1.0, abs(t_end))
    while t < t_end - t_eps:
        step_dt = min(base_dt, t_end - t)
        observing = ((k + 1) % observer_cadence == 0) or (
            t + step_dt >= t_end - t_eps
        )
        if observing:
            state = PhaseState(
                u=ScalarField2D(kernel.grid, u),
                t=t,
                eps=kernel.eps,
                laws=kernel.laws,
                init_bounded=state.init_bounded,
            )
            e_before = measures.energy(state)
        unew = kernel.advance(u, step_dt)
        _check_new_values(unew, state.init_bounded, t)
        t += step_dt
        k += 1
        if observing:
            after = PhaseState(
                u=ScalarField2D(kernel.grid, unew),
                t=t,
                eps=kernel.eps,
                laws=kernel.laws,
                dudt=ScalarField2D(kernel.grid, (unew - u) / step_dt),
                init_bounded=state.init_bounded,
            )
            snap = measures.observe(after, e_before=e_before, dt=step_dt)
            rise = snap.scalars["E"] - prev_energy
            if rise > ENERGY_RISE_SLACK * max(prev_energy, 1.0):
                raise DivergenceError(
                    f"energy increased by {rise:.3e} at t={t:.6g}"
                )
            prev_energy = snap.scalars["E"]
            record.append(snap)
        u = unew
    return record
