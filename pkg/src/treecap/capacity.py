"""Exact capacities on the dyadic tree: set capacity, condenser capacity at a
cut level, the extremal flux, and the equilibrium measure.

Everything reduces to one recursion over the trie: a Full leaf has subtree
capacity 1/2, an Empty leaf 0, and an internal vertex ``s / (1 + s)`` where
``s`` is the sum of its children's subtree capacities.  The condenser value at
level ``n`` is the sum of the subtree capacities of all ``2^n`` level-``n``
vertices; subtrees buried inside a Full region contribute closed-form tails,
never deep expansions.

Float mode works in binary64; exact mode carries unreduced integer pairs so
that even path tries tens of thousands of levels deep evaluate quickly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateSetError
from .tree import (
    BoundarySet,
    VertexId,
    _EMPTY_TAG,
    _FULL_TAG,
    _INTERNAL_TAG,
)

MAX_BRUTE_FORCE_DEPTH = 8


# ---------------------------------------------------------------------------
# core recursion, float and exact flavors
# ---------------------------------------------------------------------------


def _cap_float_memo(root) -> dict[int, float]:
    """Subtree capacity per distinct node, bottom-up without recursion."""
    memo: dict[int, float] = {}
    stack = [root]
    while stack:
        node = stack[-1]
        if id(node) in memo:
            stack.pop()
            continue
        tag = node.tag
        if tag == _FULL_TAG:
            memo[id(node)] = 0.5
            stack.pop()
        elif tag == _EMPTY_TAG:
            memo[id(node)] = 0.0
            stack.pop()
        else:
            left, right = node.left, node.right
            cl = memo.get(id(left))
            cr = memo.get(id(right))
            if cl is not None and cr is not None:
                s = cl + cr
                memo[id(node)] = s / (1.0 + s)
                stack.pop()
            else:
                if cr is None:
                    stack.append(right)
                if cl is None:
                    stack.append(left)
    return memo


def _cap_pair_memo(root) -> dict[int, tuple[int, int]]:
    """Exact subtree capacities as unreduced integer pairs (numerator, denominator).

    Pairs are never reduced; identical children (shared subtree objects) take a
    fast path so balanced spines over one shared subtree stay linear in size.
    """
    memo: dict[int, tuple[int, int]] = {}
    stack = [root]
    while stack:
        node = stack[-1]
        if id(node) in memo:
            stack.pop()
            continue
        tag = node.tag
        if tag == _FULL_TAG:
            memo[id(node)] = (1, 2)
            stack.pop()
        elif tag == _EMPTY_TAG:
            memo[id(node)] = (0, 1)
            stack.pop()
        else:
            left, right = node.left, node.right
            cl = memo.get(id(left))
            cr = memo.get(id(right))
            if cl is not None and cr is not None:
                if left is right:
                    a, b = cl
                    sn, sd = 2 * a, b
                else:
                    a, b = cl
                    c, d = cr
                    sn, sd = a * d + c * b, b * d
                memo[id(node)] = (sn, sd + sn)
                stack.pop()
            else:
                if cr is None:
                    stack.append(right)
                if cl is None:
                    stack.append(left)
    return memo


def _float_memo(e: BoundarySet) -> dict[int, float]:
    memo = e._cache.get("cap_float")
    if memo is None:
        memo = e._cache["cap_float"] = _cap_float_memo(e._root)
    return memo


def _pair_memo(e: BoundarySet) -> dict[int, tuple[int, int]]:
    memo = e._cache.get("cap_pair")
    if memo is None:
        memo = e._cache["cap_pair"] = _cap_pair_memo(e._root)
    return memo


def capacity(e: BoundarySet, exact: bool = False):
    """Capacity of a closed boundary set; 1/2 for the full boundary, 0 for the empty set."""
    if exact:
        p, q = _pair_memo(e)[id(e._root)]
        return Fraction(p, q)
    return _float_memo(e)[id(e._root)]


def condenser_capacity(e: BoundarySet, n: int, exact: bool = False):
    """Condenser capacity at cut level ``n``: the sum of level-``n`` subtree capacities.

    A Full leaf at depth ``m <= n`` owns ``2^(n-m)`` level-``n`` subtrees worth
    1/2 each, contributed in closed form.  ``n = 0`` gives back ``capacity(e)``.
    """
    if n < 0:
        raise ValueError(f"cut level must be >= 0, got {n}")
    root = e._root
    if exact:
        caps = _pair_memo(e)

        def leaf_value(node):
            p, q = caps[id(node)]
            return Fraction(p, q)

        zero = Fraction(0)
        full_tail = lambda gap: Fraction(1 << gap, 2)
    else:
        caps = _float_memo(e)
        leaf_value = lambda node: caps[id(node)]
        zero = 0.0
        full_tail = lambda gap: 0.5 * (1 << gap)

    memo = {}

    def settled(node, remaining):
        tag = node.tag
        if tag == _EMPTY_TAG:
            return zero
        if tag == _FULL_TAG:
            return full_tail(remaining)
        if remaining == 0:
            return leaf_value(node)
        return memo.get((id(node), remaining))

    top = settled(root, n)
    if top is not None:
        return top
    stack = [(root, n)]
    while stack:
        node, remaining = stack[-1]
        key = (id(node), remaining)
        if key in memo:
            stack.pop()
            continue
        left_value = settled(node.left, remaining - 1)
        right_value = settled(node.right, remaining - 1)
        if left_value is not None and right_value is not None:
            memo[key] = left_value + right_value
            stack.pop()
        else:
            if right_value is None:
                stack.append((node.right, remaining - 1))
            if left_value is None:
                stack.append((node.left, remaining - 1))
    return memo[(id(root), n)]


# ---------------------------------------------------------------------------
# tables over explicit trie positions
# ---------------------------------------------------------------------------


@dataclass
class CapacityTable:
    """Per-vertex subtree capacities over the explicit trie positions of a set."""

    boundary_set: BoundarySet
    values: dict[VertexId, object] = field(repr=False)

    @property
    def root_value(self):
        return self.values[VertexId(0, 0)]

    def to_json_obj(self):
        return [
            {"vertex": [v.level, v.index], "c": _num(self.values[v])}
            for v in sorted(self.values)
        ]


def _positions(root):
    """(vertex, node) pairs for every explicit trie position, parents first."""
    out = []
    stack = [(root, 0, 0)]
    while stack:
        node, level, index = stack.pop()
        out.append((VertexId(level, index), node))
        if node.tag == _INTERNAL_TAG:
            stack.append((node.right, level + 1, 2 * index + 1))
            stack.append((node.left, level + 1, 2 * index))
    return out


def capacity_table(e: BoundarySet, exact: bool = False) -> CapacityTable:
    """Materialized capacity table; size is the number of trie positions."""
    if exact:
        caps = _pair_memo(e)
        values = {
            v: Fraction(*caps[id(node)]) for v, node in _positions(e._root)
        }
    else:
        caps = _float_memo(e)
        values = {v: caps[id(node)] for v, node in _positions(e._root)}
    return CapacityTable(e, values)


@dataclass
class FluxTable:
    """Extremal flux ``h`` and its path sums ``H`` over explicit trie positions.

    Below a Full leaf the continuation is implicit: ``h`` halves at every
    descent and the deficit ``1 - H`` halves with it, so queries at implicit
    vertices are closed-form (`h_at`, `H_at`).
    """

    boundary_set: BoundarySet
    h: dict[VertexId, object] = field(repr=False)
    H: dict[VertexId, object] = field(repr=False)
    root_capacity: object = 0.0

    def h_at(self, vertex: VertexId):
        node, prefix = self._descend(vertex)
        if node.tag == _INTERNAL_TAG or prefix == vertex:
            return self.h[prefix]
        if node.tag == _EMPTY_TAG:
            return self.h[prefix] * 0
        gap = vertex.level - prefix.level
        return self.h[prefix] / (1 << gap)

    def H_at(self, vertex: VertexId):
        node, prefix = self._descend(vertex)
        if node.tag == _INTERNAL_TAG or prefix == vertex:
            return self.H[prefix]
        if node.tag == _EMPTY_TAG:
            return self.H[prefix]
        gap = vertex.level - prefix.level
        value = self.H[prefix]
        one = Fraction(1) if isinstance(value, Fraction) else 1.0
        return one - (one - value) / (1 << gap)

    def _descend(self, vertex: VertexId):
        node = self.boundary_set._root
        level = 0
        index = 0
        while level < vertex.level and node.tag == _INTERNAL_TAG:
            bit = (vertex.index >> (vertex.level - level - 1)) & 1
            node = node.right if bit else node.left
            index = 2 * index + bit
            level += 1
        return node, VertexId(level, index)

    def to_json_obj(self):
        caps = capacity_table(self.boundary_set)
        return [
            {
                "vertex": [v.level, v.index],
                "c": _num(caps.values[v]),
                "h": _num(self.h[v]),
                "H": _num(self.H[v]),
            }
            for v in sorted(self.h)
        ]


def extremal(e: BoundarySet, exact: bool = False) -> FluxTable:
    """Extremal flux for the capacity problem of ``e``.

    Top-down rescaling: the root carries ``h = c(root)`` and every child gets
    ``h(child) = (1 - H(parent)) * c(child)``, which makes ``h`` additive and
    reproduces the subtree capacities after renormalization.  Raises for null
    sets, where no equilibrium normalization exists.
    """
    root = e._root
    if exact:
        pairs = _pair_memo(e)
        caps = {k: Fraction(*v) for k, v in pairs.items()}
        one = Fraction(1)
    else:
        caps = _float_memo(e)
        one = 1.0
    c_root = caps[id(root)]
    if c_root == 0:
        raise DegenerateSetError(
            "the set has zero capacity; the extremal flux is identically zero"
        )
    h = {VertexId(0, 0): c_root}
    H = {VertexId(0, 0): c_root}
    stack = [(root, 0, 0, c_root)]  # node, level, index, H at node
    while stack:
        node, level, index, h_sum = stack.pop()
        if node.tag != _INTERNAL_TAG:
            continue
        deficit = one - h_sum
        for child, j in ((node.left, 2 * index), (node.right, 2 * index + 1)):
            hc = deficit * caps[id(child)]
            v = VertexId(level + 1, j)
            h[v] = hc
            H[v] = h_sum + hc
            stack.append((child, level + 1, j, h_sum + hc))
    return FluxTable(e, h, H, c_root)


def energy(flux: FluxTable):
    """Squared flux norm, with the closed-form tail below each Full leaf.

    The implicit continuation under a Full leaf carrying ``h`` contributes
    exactly ``h^2`` (the geometric tail of the halving), so the total equals
    the capacity of the underlying set.
    """
    total = sum(value * value for value in flux.h.values())
    root = flux.boundary_set._root
    for v, node in _positions(root):
        if node.tag == _FULL_TAG:
            hv = flux.h[v]
            total += hv * hv
    return total


@dataclass
class EquilibriumMeasure:
    """Additive arc masses with ``mass(S(x)) = h(x)``; supported on the set."""

    boundary_set: BoundarySet
    arc_masses: dict[VertexId, object] = field(repr=False)
    flux: FluxTable = field(repr=False, default=None)

    @property
    def total_mass(self):
        return self.flux.root_capacity

    def mass_of(self, vertex: VertexId):
        """Mass of the shadow of an arbitrary vertex, implicit regions included."""
        return self.flux.h_at(vertex)

    def to_json_obj(self):
        return [
            {"arc": [v.level, v.index], "mass": _num(self.arc_masses[v])}
            for v in sorted(self.arc_masses)
        ]


def equilibrium_measure(e: BoundarySet, exact: bool = False) -> EquilibriumMeasure:
    """The measure whose shadow masses equal the extremal flux; total mass = capacity."""
    flux = extremal(e, exact=exact)
    masses = {
        v: flux.h[v]
        for v, node in _positions(e._root)
        if node.tag == _FULL_TAG
    }
    return EquilibriumMeasure(e, masses, flux)


# ---------------------------------------------------------------------------
# independent oracle: small dense KKT solve
# ---------------------------------------------------------------------------


def brute_force_capacity(e: BoundarySet, depth: int) -> float:
    """Capacity via a dense constrained quadratic program, independent of the recursion.

    Unknowns are the vertex weights down to ``depth - 1`` plus one tail drop per
    level-``depth`` vertex buried in the Full region; each such terminal must
    see a unit path sum, and its infinite continuation is folded in as a
    terminal conductance of 1/2.  Solved through the KKT linear system.
    """
    if depth < 1 or depth > MAX_BRUTE_FORCE_DEPTH:
        raise ValueError(f"depth must be in 1..{MAX_BRUTE_FORCE_DEPTH}, got {depth}")
    if e.resolution > depth:
        raise ValueError(
            f"set resolution {e.resolution} exceeds brute-force depth {depth}"
        )

    full_terminals = _terminal_region_indices(e._root, depth)
    if not full_terminals:
        raise DegenerateSetError(
            "empty constraint set: the boundary set is null at this depth"
        )

    n_phi = (1 << depth) - 1
    n_tau = len(full_terminals)
    n_vars = n_phi + n_tau
    n_cons = n_tau

    def phi_var(level, index):
        return ((1 << level) - 1) + index

    q_diag = np.ones(n_vars)
    q_diag[n_phi:] = 0.5

    a = np.zeros((n_cons, n_vars))
    for row, j in enumerate(full_terminals):
        index = j
        for level in range(depth - 1, -1, -1):
            index >>= 1
            a[row, phi_var(level, index)] = 1.0
        a[row, n_phi + row] = 1.0

    kkt = np.zeros((n_vars + n_cons, n_vars + n_cons))
    kkt[:n_vars, :n_vars] = np.diag(2.0 * q_diag)
    kkt[:n_vars, n_vars:] = a.T
    kkt[n_vars:, :n_vars] = a
    rhs = np.zeros(n_vars + n_cons)
    rhs[n_vars:] = 1.0

    solution = np.linalg.solve(kkt, rhs)
    x = solution[:n_vars]
    return float(x @ (q_diag * x))


def _terminal_region_indices(root, depth: int) -> list[int]:
    """Indices of level-``depth`` vertices lying inside the Full region."""
    out = []
    stack = [(root, 0, 0)]
    while stack:
        node, level, index = stack.pop()
        if node.tag == _FULL_TAG:
            gap = depth - level
            out.extend(range(index << gap, (index + 1) << gap))
        elif node.tag == _INTERNAL_TAG:
            stack.append((node.left, level + 1, 2 * index))
            stack.append((node.right, level + 1, 2 * index + 1))
    out.sort()
    return out


def _num(value):
    """JSON-friendly number: floats pass through, fractions become 'p/q' strings."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return float(value)
