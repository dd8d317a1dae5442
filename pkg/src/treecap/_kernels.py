"""Hot numeric kernels for the polar-grid solver.

The conjugate-gradient inner loop spends nearly all its time applying the
5-point stencil of the graded polar Laplacian.  The stencil has a numba-jitted
implementation and a vectorized pure-numpy fallback; the jitted path is the
default whenever numba imports, and ``TREECAP_NO_NUMBA=1`` forces the numpy
path.  The surrounding vector updates stay in numpy either way (they are
memory-bound and BLAS handles them well).

Grids are ``(rings, columns)`` arrays: rows are radial rings (ring 0 at the
inner plate, the last ring on the unit circle), columns are angular cells with
periodic wraparound.  ``kr[i]`` is the edge conductance between rings ``i``
and ``i + 1`` (uniform in the angle), ``kt[i]`` the angular edge conductance
within ring ``i``, and ``free`` masks the unknowns; fixed entries of the input
are read as-is and the output is zeroed at them.  Dot products stay in BLAS so
reductions are independent of the thread count.
"""

from __future__ import annotations

import os

import numpy as np


def _apply_masked_numpy(u, out, kr, kt, free):
    """out = (weighted Laplacian applied to u) on free nodes, 0 elsewhere."""
    diag = np.zeros(u.shape[0])
    diag[1:] += kr
    diag[:-1] += kr
    out[:] = (diag + 2.0 * kt)[:, None] * u
    out[:-1, :] -= kr[:, None] * u[1:, :]
    out[1:, :] -= kr[:, None] * u[:-1, :]
    out -= kt[:, None] * (np.roll(u, 1, axis=1) + np.roll(u, -1, axis=1))
    out[~free] = 0.0
    return out


def _env_disables_numba() -> bool:
    return os.environ.get("TREECAP_NO_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
    )


_HAVE_NUMBA = False
if not _env_disables_numba():
    try:
        import numba

        @numba.njit(cache=True)
        def _apply_masked_numba(u, out, kr, kt, free):
            rings, cols = u.shape
            for i in range(rings):
                k_down = kr[i - 1] if i > 0 else 0.0
                k_up = kr[i] if i < rings - 1 else 0.0
                k_ang = kt[i]
                d = k_down + k_up + 2.0 * k_ang
                for j in range(cols):
                    if not free[i, j]:
                        out[i, j] = 0.0
                        continue
                    acc = d * u[i, j]
                    if i > 0:
                        acc -= k_down * u[i - 1, j]
                    if i < rings - 1:
                        acc -= k_up * u[i + 1, j]
                    jm = j - 1 if j > 0 else cols - 1
                    jp = j + 1 if j < cols - 1 else 0
                    acc -= k_ang * (u[i, jm] + u[i, jp])
                    out[i, j] = acc
            return out

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

apply_masked = _apply_masked_numba if _HAVE_NUMBA else _apply_masked_numpy


def backend_name() -> str:
    """Which kernel implementation is active: 'numba' or 'numpy'."""
    return "numba" if _HAVE_NUMBA else "numpy"


def dot(a, b) -> float:
    return float(np.dot(a.ravel(), b.ravel()))


def grid_energy(u, kr, kt) -> float:
    """Raw Dirichlet energy of a grid field: sum of conductance-weighted squared drops."""
    radial = kr[:, None] * (u[1:, :] - u[:-1, :]) ** 2
    angular = kt[:, None] * (np.roll(u, -1, axis=1) - u) ** 2
    return float(radial.sum() + angular.sum())


def ring_flux(u, kr, i) -> float:
    """Net flux crossing the gap between rings ``i`` and ``i + 1``."""
    return float((kr[i] * (u[i + 1, :] - u[i, :])).sum())
