"""Condenser capacities in the unit disc by Dirichlet-energy minimization.

The condenser has a closed arc set on the unit circle held at potential 1 and
a concentric closed disc held at 0; its capacity is the minimal Dirichlet
integral over admissible potentials, normalized by 1/(2 pi) so the full-circle
benchmark with inner radius r comes out 1 / log(1/r) exactly.

Discretization: a tensor polar grid on the annulus between the plates, graded
geometrically toward the unit circle, with edge conductances obtained by exact
integration of the metric weight over each cell (trapezoid in the radial
direction, logarithmic band widths in the angular direction).  Minimizing the
resulting quadratic form is a 5-point discrete Laplace problem with natural
boundary conditions on the free part of the circle; it is solved by a
Jacobi-preconditioned conjugate-gradient iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DegenerateSetError, MisalignedArcError
from .tree import BoundarySet


@dataclass(frozen=True)
class SolverGrid:
    """Polar grid configuration; the radial grading adapts to the inner radius."""

    n_angular: int = 1024
    n_radial: int = 200
    tol: float = 1e-10
    max_iter: int = 60000

    def __post_init__(self):
        if self.n_angular < 4 or self.n_angular & (self.n_angular - 1):
            raise ValueError(
                f"angular cell count must be a power of two >= 4, got {self.n_angular}"
            )
        if self.n_radial < 4:
            raise ValueError(f"need at least 4 radial layers, got {self.n_radial}")
        if self.tol <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")


@dataclass(frozen=True)
class CondenserProblem:
    """Plates of the condenser: dyadic circle arcs at 1, the disc of ``inner_radius`` at 0."""

    arcs: tuple[tuple[int, int], ...]
    inner_radius: float
    plate_values: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.inner_radius < 1.0:
            raise ValueError(
                f"inner radius must lie strictly inside (0, 1), got {self.inner_radius}"
            )
        # canonicalizing through the boundary-set encoding validates the arcs
        # and merges overlaps, which leaves the plate unchanged
        canonical = tuple(BoundarySet.from_full_leaves(self.arcs).full_leaves())
        object.__setattr__(self, "arcs", canonical)

    @staticmethod
    def from_set(e: BoundarySet, inner_radius: float) -> "CondenserProblem":
        return CondenserProblem(tuple(e.full_leaves()), inner_radius)

    @property
    def arc_resolution(self) -> int:
        return max((n for n, _ in self.arcs), default=0)

    def to_json_obj(self) -> dict:
        return {
            "arcs": [[n, j] for n, j in self.arcs],
            "inner_radius": self.inner_radius,
            "plate_values": list(self.plate_values),
        }

    @staticmethod
    def from_json_obj(obj) -> "CondenserProblem":
        return CondenserProblem(
            tuple((int(n), int(j)) for n, j in obj["arcs"]),
            float(obj["inner_radius"]),
        )


@dataclass
class DiscSolution:
    """Solved condenser: capacity, potential field, and the grid it lives on."""

    capacity: float
    potential: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    n_angular: int = 0
    iterations: int = 0
    residual: float = 0.0
    _kr: np.ndarray = field(repr=False, default=None)
    _kt: np.ndarray = field(repr=False, default=None)

    def flux_capacity(self, gap: int) -> float:
        """Capacity measured as the flux through the circle between rings ``gap`` and ``gap+1``.

        Equals ``capacity`` up to solver tolerance for every interior gap (the
        discrete Green identity).
        """
        return _kernels.ring_flux(self.potential, self._kr, gap) / (2.0 * math.pi)

    def field_rows(self):
        """(rho, theta, u) triples of the potential field, for CSV dumps."""
        thetas = 2.0 * math.pi * np.arange(self.n_angular) / self.n_angular
        for i, rho in enumerate(self.radii):
            for k, theta in enumerate(thetas):
                yield float(rho), float(theta), float(self.potential[i, k])

    def to_json_obj(self) -> dict:
        """Result summary (the field itself goes through ``field_rows``)."""
        return {
            "capacity": self.capacity,
            "iterations": self.iterations,
            "residual": self.residual,
            "rings": len(self.radii),
            "n_angular": self.n_angular,
        }


def _radial_nodes(r: float, layers: int, n_angular: int) -> np.ndarray:
    """Graded radii from the inner plate to 1; spacing shrinks toward the circle.

    The finest spacing matches the angular arc length, keeping the boundary
    cells square-ish (grossly anisotropic cells would wreck the conditioning).
    """
    span = 1.0 - r
    finest = min(span / 2.0, 2.0 * math.pi / n_angular)
    rho = np.empty(layers + 1)
    rho[layers] = 1.0
    beta = (finest / span) ** (1.0 / (layers - 1))
    rho[:layers] = 1.0 - span * beta ** np.arange(layers)
    return rho


def _conductances(rho: np.ndarray, n_angular: int):
    """Edge conductances from exact metric integrals over grid cells."""
    dtheta = 2.0 * math.pi / n_angular
    kr = dtheta * (rho[1:] + rho[:-1]) / (2.0 * np.diff(rho))
    mid = 0.5 * (rho[1:] + rho[:-1])
    bands = np.concatenate(([rho[0]], mid, [rho[-1]]))
    kt = np.log(bands[1:] / bands[:-1]) / dtheta
    return kr, kt


def _initial_guess(problem, grid, rho, cols) -> np.ndarray:
    """Starting potential: a coarse-grid solution when affordable, else the
    radial profile of the full-circle condenser (which satisfies both plates).
    """
    coarse_cols = grid.n_angular // 2
    coarse_layers = grid.n_radial // 2
    if (
        coarse_cols >= (1 << (problem.arc_resolution + 1))
        and coarse_cols >= 64
        and coarse_layers >= 8
    ):
        coarse = solve(
            problem,
            SolverGrid(
                n_angular=coarse_cols,
                n_radial=coarse_layers,
                tol=max(grid.tol, 1e-8),
                max_iter=grid.max_iter,
            ),
        )
        return _prolong(coarse.potential, coarse.radii, rho, cols)
    profile = np.log(rho / problem.inner_radius) / math.log(
        1.0 / problem.inner_radius
    )
    return np.broadcast_to(profile[:, None], (len(rho), cols)).copy()


def _prolong(u_coarse, rho_coarse, rho_fine, cols_fine) -> np.ndarray:
    """Interpolate a coarse potential onto a finer grid (linear both ways)."""
    rings_c, cols_c = u_coarse.shape
    assert cols_fine == 2 * cols_c
    radial = np.empty((len(rho_fine), cols_c))
    for k in range(cols_c):
        radial[:, k] = np.interp(rho_fine, rho_coarse, u_coarse[:, k])
    fine = np.empty((len(rho_fine), cols_fine))
    fine[:, 0::2] = radial
    fine[:, 1::2] = 0.5 * (radial + np.roll(radial, -1, axis=1))
    return fine


def _plate_mask(arcs, n_angular: int, arc_resolution: int) -> np.ndarray:
    """Boundary nodes held at 1: whole cells per arc, endpoints included."""
    if n_angular < (1 << (arc_resolution + 1)):
        raise MisalignedArcError(
            f"{n_angular} angular cells cannot tile arcs of resolution "
            f"{arc_resolution}; need at least {1 << (arc_resolution + 1)}"
        )
    mask = np.zeros(n_angular, dtype=bool)
    for level, index in arcs:
        width = n_angular >> level
        start = index * width
        mask[start : start + width + 1] = True
        if start + width >= n_angular:
            mask[0] = True
    return mask


def solve(problem: CondenserProblem, grid: SolverGrid = SolverGrid()) -> DiscSolution:
    """Solve the condenser problem on the given grid.

    The discrete energy is minimized over potentials fixed to 1 on the arc
    plate's boundary nodes and 0 on the inner circle, free elsewhere (which
    realizes the zero-flux condition on the rest of the unit circle).  Returns
    the discrete capacity (energy / 2 pi) together with the potential field.

    Large grids are warm-started from a recursively solved half-resolution
    grid, which cuts the conjugate-gradient iteration count considerably; the
    iteration itself is unchanged.
    """
    if not problem.arcs:
        rho = _radial_nodes(problem.inner_radius, grid.n_radial, grid.n_angular)
        u = np.zeros((grid.n_radial + 1, grid.n_angular))
        kr, kt = _conductances(rho, grid.n_angular)
        return DiscSolution(0.0, u, rho, grid.n_angular, 0, 0.0, kr, kt)

    rho = _radial_nodes(problem.inner_radius, grid.n_radial, grid.n_angular)
    kr, kt = _conductances(rho, grid.n_angular)
    rings, cols = grid.n_radial + 1, grid.n_angular

    free = np.ones((rings, cols), dtype=bool)
    free[0, :] = False
    plate = _plate_mask(problem.arcs, cols, problem.arc_resolution)
    free[rings - 1, plate] = False

    u = _initial_guess(problem, grid, rho, cols)
    u[0, :] = 0.0
    u[rings - 1, plate] = 1.0

    diag = np.zeros(rings)
    diag[1:] += kr
    diag[:-1] += kr
    inv_diag = 1.0 / (diag + 2.0 * kt)

    apply_masked = _kernels.apply_masked
    dot = _kernels.dot
    scratch = np.empty_like(u)
    temp = np.empty_like(u)

    # residual scale of the cold problem (plate values only), so the stopping
    # test does not tighten when a warm start shrinks the initial residual
    cold = np.zeros_like(u)
    cold[rings - 1, plate] = 1.0
    apply_masked(cold, scratch, kr, kt, free)
    scale = math.sqrt(dot(scratch, scratch))

    apply_masked(u, scratch, kr, kt, free)
    r = -scratch
    scratch = np.empty_like(u)
    np.multiply(r, inv_diag[:, None], out=temp)
    p = temp.copy()
    rz = dot(r, temp)
    norm0 = math.sqrt(dot(r, r))
    residual = norm0
    iterations = 0

    if norm0 > 0.0:
        target = grid.tol * max(scale, norm0)
        for iterations in range(1, grid.max_iter + 1):
            q = apply_masked(p, scratch, kr, kt, free)
            alpha = rz / dot(p, q)
            u += alpha * p
            r -= alpha * q
            residual = math.sqrt(dot(r, r))
            if residual <= target:
                break
            np.multiply(r, inv_diag[:, None], out=temp)
            rz_next = dot(r, temp)
            p *= rz_next / rz
            p += temp
            rz = rz_next
        else:
            raise ConvergenceError(
                f"conjugate gradient did not reach residual {target:.3e} in "
                f"{grid.max_iter} iterations (residual {residual:.3e})",
                residual=residual,
                iterations=grid.max_iter,
            )

    cap = _kernels.grid_energy(u, kr, kt) / (2.0 * math.pi)
    return DiscSolution(cap, u, rho, cols, iterations, residual, kr, kt)


def capacity_of_set(e: BoundarySet, grid: SolverGrid = SolverGrid()) -> float:
    """Normalized capacity of a circle arc set: the condenser against the disc of radius 1/2."""
    if e.is_empty():
        raise DegenerateSetError("capacity_of_set needs a nonempty arc set")
    return solve(CondenserProblem.from_set(e, 0.5), grid).capacity


def condenser_profile(
    e: BoundarySet, n_max: int, grid: SolverGrid = SolverGrid()
) -> list[tuple[int, float]]:
    """Condenser capacities against the discs of radius 1 - 2^-n for n = 1..n_max."""
    if n_max < 1:
        raise ValueError(f"need n_max >= 1, got {n_max}")
    out = []
    for n in range(1, n_max + 1):
        r = 1.0 - 0.5**n
        out.append((n, solve(CondenserProblem.from_set(e, r), grid).capacity))
    return out
