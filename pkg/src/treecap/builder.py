"""Constructive procedures: sets of prescribed capacity, the equal-split
family whose condenser capacity plateaus, and the sharp lower-bound formulas.

The workhorse is a bisection over dyadic cut points of the circle.  Instead of
re-evaluating a whole trie at every step, the bracket is carried as a
fractional-linear map (a nonnegative 2x2 matrix) sending the capacity of the
still-undecided subtree to the capacity at the root; refining by one bit is a
single matrix composition, so targets needing tens of thousands of levels stay
cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from random import Random

from .capacity import capacity, _float_memo
from .errors import CalibrationError, ToleranceError
from .tree import (
    BoundarySet,
    prefix_set,
    _EMPTY_LEAF,
    _EMPTY_TAG,
    _FULL_LEAF,
    _FULL_TAG,
    _INTERNAL_TAG,
    _join,
)

BISECTION_MAX_RESOLUTION = 200_000


# ---------------------------------------------------------------------------
# closed-form transfer maps
# ---------------------------------------------------------------------------


def psi(t: float) -> float:
    """One-step capacity transfer t / (2 (1 - t)), a diffeomorphism of [0, 1/2]."""
    if not 0.0 <= t <= 0.5:
        raise ValueError(f"psi is defined on [0, 1/2], got {t}")
    return t / (2.0 * (1.0 - t))


def psi_iterate(t: float, n: int) -> float:
    """n-fold composition of `psi` in closed form: t / (2^n - (2^(n+1) - 2) t)."""
    if not 0.0 <= t <= 0.5:
        raise ValueError(f"psi_iterate is defined on [0, 1/2], got {t}")
    if n < 0:
        raise ValueError(f"iteration count must be >= 0, got {n}")
    # denominator rearranged as 2^n (1 - 2t) + 2t: algebraically identical and
    # free of cancellation when t sits next to 1/2
    return t / (2.0**n * (1.0 - 2.0 * t) + 2.0 * t)


def lower_bound(eps: float, n: int) -> float:
    """Sharp lower bound for the level-``n`` condenser capacity over sets of capacity ``eps``.

    Equals ``2^n * psi_iterate(eps, n)``; attained by the equal-split family.
    """
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"capacity must lie in [0, 1/2], got {eps}")
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    # 1 - (2 - 2^(1-n)) eps, rearranged to avoid cancellation near eps = 1/2
    return eps / ((1.0 - 2.0 * eps) + 2.0 ** (1 - n) * eps)


def lower_bound_gap_form(delta: float, n: int) -> float:
    """The same bound written in terms of the gap ``delta = 1/2 - eps``.

    Reads as a doubling-then-plateau curve: it doubles per level until the cut
    scale ``2^-n`` reaches ``delta``, then stabilizes near ``(1/2 - delta) / (2 delta)``.
    """
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"gap must lie in [0, 1/2], got {delta}")
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    return (0.5 - delta) / ((2.0 - 2.0 ** (1 - n)) * delta + 2.0 ** (-n))


def plateau_bound(eps: float) -> float:
    """Ceiling eps / (1 - 2 eps) for the condenser capacities of the equal-split family."""
    if not 0.0 < eps < 0.5:
        raise ValueError(f"capacity must lie in (0, 1/2), got {eps}")
    return eps / (1.0 - 2.0 * eps)


# ---------------------------------------------------------------------------
# bisection on dyadic cut points
# ---------------------------------------------------------------------------

def _node_value(memo, node) -> float:
    if node.tag == _FULL_TAG:
        return 0.5
    if node.tag == _EMPTY_TAG:
        return 0.0
    return memo[id(node)]


def _node_child(node, bit: int):
    """Child along the cut path; leaves stand for their own uniform regions."""
    if node.tag == _INTERNAL_TAG:
        return node.right if bit else node.left
    return node


def _closure_set(
    bits: list[int], close_full, base_root, mode, site_node=None
) -> BoundarySet:
    """Materialize the cut set by surgery along the path, sharing base subtrees.

    For a trim the left siblings of the path keep the base's subtrees and the
    right siblings are emptied; for a union the left siblings become Full and
    the right siblings keep the base's subtrees.  ``close_full`` decides which
    bracket endpoint the deepest vertex takes; alternatively ``site_node``
    plants an explicit subtree at the cut vertex.
    """
    ptrs = [base_root]
    for b in bits:
        ptrs.append(_node_child(ptrs[-1], b))
    if site_node is not None:
        node = site_node
    elif mode == "trim":
        node = ptrs[-1] if close_full else _EMPTY_LEAF
    else:
        node = _FULL_LEAF if close_full else ptrs[-1]
    for k in range(len(bits) - 1, -1, -1):
        if bits[k]:
            sibling = _node_child(ptrs[k], 0) if mode == "trim" else _FULL_LEAF
            node = _join(sibling, node)
        else:
            sibling = _EMPTY_LEAF if mode == "trim" else _node_child(ptrs[k], 1)
            node = _join(node, sibling)
    return BoundarySet(node)


_ITERATION_BUDGET = 4000
_CARVE_DEPTH = 8
_CARVE_BITS = 3000


def _carve_plan(target, tol, matrix, local_hi, max_resolution):
    """Local target and relaxed tolerance for rebuilding the cut subtree.

    Inverts the bracket map F(v) = (A v + B) / (C v + D) at the target; the
    local tolerance is the global one divided by the sensitivity F'(x*).
    Returns None when the map cannot be inverted, when the relaxation is too
    small for the rebuild to make progress, or when the rebuilt subtree would
    be inherently too deep (a set of capacity c needs resolution >= 1/c - 2,
    so tiny local targets must wait for more sensitivity decay, which grows
    x* toward affordable values).
    """
    ma, mb, mc, md = matrix
    det = ma * md - mb * mc
    denom = ma - mc * target
    if det <= 0.0 or denom <= 0.0:
        return None
    x_star = (md * target - mb) / denom
    x_star = min(max(x_star, 0.0), min(local_hi, 0.5))
    if x_star * max_resolution < 100.0:
        return None
    tol_local = 0.35 * tol * (mc * x_star + md) ** 2 / det
    if tol_local <= 2.0 * tol:
        return None
    return x_star, tol_local


def _bisect_cut(target, tol, mode, base, max_resolution):
    """Refine a dyadic cut t until the derived set's capacity hits ``target +- tol``.

    ``mode`` is ``trim`` (base intersected with the arc [0, t]) or ``union``
    (base joined with it); a plain prescribed-capacity set is a trim of the
    full boundary.  Monotone continuity of the cut-to-capacity map guarantees
    convergence; each bit refines the bracket via one composition of the
    fractional-linear bracket map, and runs of 0-bits through uniform regions
    are composed in closed form.

    Returns ``(set, value, None)`` on success.  When the bracket contracts too
    slowly (its gap decays only harmonically around some targets) the search
    stops after an iteration budget and instead returns ``(None, None, state)``
    so the caller can finish the job by re-targeting the cut subtree.
    """
    base_set = base if base is not None else BoundarySet.full()
    memo = _float_memo(base_set)
    base_root = base_set._root
    ptr = base_root

    # root capacity as a fractional-linear function of the capacity v of the
    # undecided part below the cut vertex: v -> (A v + B) / (C v + D)
    ma, mb, mc, md = 1.0, 0.0, 0.0, 1.0
    bits: list[int] = []
    inner_tol = tol * 0.9

    def evaluate(v):
        return (ma * v + mb) / (mc * v + md)

    for _ in range(_ITERATION_BUDGET):
        if mode == "trim":
            v_lo, v_hi = 0.0, _node_value(memo, ptr)
        else:
            v_lo, v_hi = _node_value(memo, ptr), 0.5
        f_lo, f_hi = evaluate(v_lo), evaluate(v_hi)

        if f_lo == target:
            return _closure_set(bits, False, base_root, mode), f_lo, None
        if f_hi == target:
            return _closure_set(bits, True, base_root, mode), f_hi, None
        near_lo = abs(f_lo - target) <= inner_tol
        near_hi = abs(f_hi - target) <= inner_tol
        if near_lo or near_hi:
            pick_hi = near_hi and (
                not near_lo or abs(f_hi - target) < abs(f_lo - target)
            )
            return (
                _closure_set(bits, pick_hi, base_root, mode),
                f_hi if pick_hi else f_lo,
                None,
            )
        if v_lo == v_hi:
            # the cut crossed into a region where the value is constant, and
            # the plateau value itself is out of tolerance
            raise ToleranceError(
                f"cut value plateaus at {f_lo}, tolerance {tol} unreachable; "
                f"bracket is [{f_lo}, {f_hi}]",
                bracket=(f_lo, f_hi),
            )
        if len(bits) >= _CARVE_BITS and _carve_plan(
            target, tol, (ma, mb, mc, md), v_hi, max_resolution
        ):
            # deep cut with accumulated sensitivity: rebuilding the subtree
            # below the cut at relaxed tolerance beats refining further
            return None, None, (bits, (ma, mb, mc, md), ptr)
        if len(bits) >= max_resolution:
            raise ToleranceError(
                f"could not reach tolerance {tol} within resolution "
                f"{max_resolution}; bracket is [{f_lo}, {f_hi}]",
                bracket=(f_lo, f_hi),
            )

        # inside a uniform region every 0-bit composes v -> v / (1 + v); jump
        # the whole run of them at once
        uniform = ptr.tag != _INTERNAL_TAG and (
            (mode == "trim") == (ptr.tag == _FULL_TAG)
        )
        if uniform:
            denom = ma - mc * target
            if denom > 0.0:
                x_star = (md * target - mb) / denom
                if 0.0 < x_star < 0.25:
                    # the run ends once the midpoint value 1/(m+3) drops to
                    # x_star; stop three short so the generic step, which is
                    # robust to float slop, finishes the run.  Jumps are also
                    # chunked so the carve check at the loop head gets a look
                    # between them.
                    zeros = min(
                        int(1.0 / x_star) - 3,
                        max_resolution - len(bits),
                        _CARVE_BITS,
                    )
                    if zeros > 0:
                        bits.extend([0] * zeros)
                        ma, mc = ma + mb * zeros, mc + md * zeros
                        norm = max(ma, mb, mc, md)
                        ma, mb, mc, md = (
                            ma / norm,
                            mb / norm,
                            mc / norm,
                            md / norm,
                        )

        left = _node_child(ptr, 0)
        right = _node_child(ptr, 1)
        # capacity contributed below the cut vertex when t sits at its midpoint
        if mode == "trim":
            s = _node_value(memo, left)
        else:
            s = 0.5 + _node_value(memo, right)
        f_mid = evaluate(s / (1.0 + s))

        if f_mid == target:
            bits.append(1)
            return _closure_set(bits, False, base_root, mode), f_mid, None
        if f_mid <= target:
            bit = 1
            a = _node_value(memo, left) if mode == "trim" else 0.5
        else:
            bit = 0
            a = 0.0 if mode == "trim" else _node_value(memo, right)
        bits.append(bit)
        ptr = _node_child(ptr, bit)
        # compose with the sibling merge v -> (v + a) / (v + 1 + a)
        ma, mb = ma + mb, ma * a + mb * (1.0 + a)
        mc, md = mc + md, mc * a + md * (1.0 + a)
        norm = max(ma, mb, mc, md)
        ma, mb, mc, md = ma / norm, mb / norm, mc / norm, md / norm

    return None, None, (bits, (ma, mb, mc, md), ptr)


def _solve_cut(target, tol, mode, base, max_resolution, carve_depth=_CARVE_DEPTH):
    """Drive the cut bisection, carving the cut subtree when it stalls.

    Stalls happen where the bracket gap decays only harmonically; then the
    bracket map F(v) = (A v + B) / (C v + D) is inverted at the target and the
    undecided subtree is rebuilt for the local value F^-1(target), whose
    tolerance is relaxed by the inverse sensitivity 1/F'.  The recursion gains
    accuracy geometrically per carve level.
    """
    result, value, state = _bisect_cut(target, tol, mode, base, max_resolution)
    if result is not None:
        return result, value
    bits, matrix, ptr = state

    base_set = base if base is not None else BoundarySet.full()
    local_hi = (
        _node_value(_float_memo(base_set), ptr) if mode == "trim" else 0.5
    )
    plan = (
        _carve_plan(target, tol, matrix, local_hi, max_resolution)
        if carve_depth > 0
        else None
    )
    if plan is None:
        raise ToleranceError(
            f"cut search stalled and the cut subtree cannot be rebuilt at a "
            f"useful tolerance; target {target}, tolerance {tol}",
            bracket=None,
        )
    x_star, tol_local = plan
    site, _ = _solve_cut(
        x_star, tol_local, "trim", None, max_resolution, carve_depth - 1
    )
    carved = _closure_set(
        bits, None, base_set._root, mode, site_node=site._root
    )
    return carved, None


# ---------------------------------------------------------------------------
# public constructors
# ---------------------------------------------------------------------------


def set_of_capacity(
    target: float,
    tol: float,
    max_resolution: int = BISECTION_MAX_RESOLUTION,
) -> BoundarySet:
    """A closed boundary set whose capacity is ``target`` within ``tol``.

    Bisection on arc preimages: the candidate sets are the closed preimages of
    circle arcs [0, t] for dyadic t, whose capacity runs continuously and
    monotonically from 0 to 1/2.  Exact dyadic hits return the coarsest such t.
    Targets hugging a plateau of the cut family from above (where its mesh is
    only harmonically fine) are retried with a root split: one child takes an
    exact shallow piece and the other reruns the search at a shifted target.
    """
    if not 0.0 <= target <= 0.5:
        raise ValueError(f"target capacity must lie in [0, 1/2], got {target}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    try:
        result, _ = _solve_cut(target, tol, "trim", None, max_resolution)
    except ToleranceError as exc:
        result = _split_fallback(target, tol, max_resolution, exc)
    final = capacity(result)
    if abs(final - target) > tol:
        raise ToleranceError(
            f"materialized capacity {final} misses target {target} by more "
            f"than {tol}",
            bracket=(None, final),
        )
    return result


def _fallback_pieces():
    """Prefix cuts for the root-split fallback, large pieces first.

    The 2^-k cuts are useless here (their capacities are the plateau values
    themselves), so the candidates are odd-numerator cuts whose capacities do
    not land back on the family causing the trouble.
    """
    for cut in (
        Fraction(1, 2),
        Fraction(3, 4),
        Fraction(3, 8),
        Fraction(5, 8),
        Fraction(7, 8),
        Fraction(5, 16),
        Fraction(11, 16),
        Fraction(15, 16),
    ):
        yield cut
    for k in range(4, 64):
        yield Fraction(3, 1 << k)
        yield Fraction(5, 1 << (k + 1))


def _split_fallback(target, tol, max_resolution, original) -> BoundarySet:
    """Root-split construction for targets the plain cut search cannot reach.

    The children capacities only need to sum to ``target / (1 - target)``, so
    planting an exact prefix piece in the left child moves the right child's
    target away from the troublesome value; the sub-search runs once per
    candidate piece until one lands.
    """
    s_needed = target / (1.0 - target)
    tol_sub = 0.8 * tol * (1.0 + s_needed) ** 2
    for cut in _fallback_pieces():
        piece = prefix_set(cut, max_resolution=None)
        w = capacity(piece)
        rest = s_needed - w
        if not 1e-6 < rest < 0.5 - 1e-9:
            continue
        try:
            right, _ = _solve_cut(rest, tol_sub, "trim", None, max_resolution)
        except ToleranceError:
            continue
        return BoundarySet(_join(piece._root, right._root))
    raise ToleranceError(
        f"no reachable construction for capacity {target} at tolerance {tol} "
        f"within resolution {max_resolution}; last bracket {original.bracket}",
        bracket=original.bracket,
    ) from original


def calibrated_set(
    base: BoundarySet,
    target: float,
    tol: float,
    max_resolution: int = BISECTION_MAX_RESOLUTION,
) -> BoundarySet:
    """Adjust ``base`` to capacity ``target`` by trimming with or joining an arc preimage.

    Trims when the base is too heavy, unions a prefix arc in when too light;
    either way the cut-to-capacity map is continuous and monotone, so the same
    bracket bisection applies.
    """
    if not 0.0 <= target <= 0.5:
        raise ValueError(f"target capacity must lie in [0, 1/2], got {target}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    c0 = capacity(base)
    if abs(c0 - target) <= tol:
        return base
    mode = "trim" if c0 > target else "union"
    try:
        result, _ = _solve_cut(target, tol, mode, base, max_resolution)
    except ToleranceError as exc:
        raise CalibrationError(
            f"cannot calibrate set of capacity {c0} to {target}: {exc}"
        ) from exc
    final = capacity(result)
    if abs(final - target) > tol:
        raise CalibrationError(
            f"calibrated capacity {final} misses target {target} by more than {tol}"
        )
    return result


# ---------------------------------------------------------------------------
# the equal-split family
# ---------------------------------------------------------------------------


@dataclass
class SplitFamily:
    """A set of capacity ``epsilon`` split into 2^n equal-capacity pieces at level ``n``.

    ``e[k]`` is the common subtree capacity of the pieces at level ``k``; the
    carrier realizes the construction with the same piece shape repeated in
    every level-``n`` shadow, so its condenser capacity at level ``n`` is
    ``2^n e[n]`` and stays below the plateau ceiling for every ``n``.
    """

    epsilon: float
    n: int
    e: list[float]
    carrier: BoundarySet

    @property
    def bound_R(self) -> float:
        return plateau_bound(self.epsilon)

    def to_json_obj(self):
        return {
            "epsilon": self.epsilon,
            "n": self.n,
            "e": list(self.e),
            "bound_R": self.bound_R,
            "carrier": self.carrier.to_json_obj(),
        }


def split_levels(epsilon: float, n: int) -> list[float]:
    """Per-level piece capacities e_0 = epsilon, e_k = e_{k-1} / (2 - 2 e_{k-1})."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    e = [epsilon]
    for _ in range(n):
        e.append(e[-1] / (2.0 - 2.0 * e[-1]))
    return e


def equal_split(
    epsilon: float,
    n: int,
    tol: float = 1e-9,
    max_resolution: int = BISECTION_MAX_RESOLUTION,
) -> SplitFamily:
    """Build the equal-split family member at split depth ``n``.

    One piece of capacity ``e[n]`` is constructed to tolerance ``tol * 2^-n``
    and repeated (as a shared subtree) in all 2^n level-``n`` shadows; running
    the merge recursion back up then lands the root capacity within ``tol`` of
    ``epsilon``, which the builder verifies before returning.
    """
    if n < 0:
        raise ValueError(f"split depth must be >= 0, got {n}")
    e = split_levels(epsilon, n)
    piece = set_of_capacity(e[n], tol * 0.5**n, max_resolution)
    node = piece._root
    for _ in range(n):
        node = _join(node, node)
    carrier = BoundarySet(node)
    achieved = capacity(carrier)
    if abs(achieved - epsilon) > tol:
        raise ToleranceError(
            f"assembled carrier capacity {achieved} misses {epsilon} by more "
            f"than {tol}",
            bracket=(achieved, epsilon),
        )
    return SplitFamily(epsilon, n, e, carrier)


# ---------------------------------------------------------------------------
# stock test sets
# ---------------------------------------------------------------------------


def cantor_set(levels: int) -> BoundarySet:
    """Cantor-type set: each kept arc is refined to its two outer quarters.

    ``levels`` refinements leave ``2^levels`` closed arcs of length
    ``4^-levels``; ``levels = 0`` is the full boundary.
    """
    if levels < 0:
        raise ValueError(f"levels must be >= 0, got {levels}")
    indices = [0]
    for _ in range(levels):
        indices = [4 * j for j in indices] + [4 * j + 3 for j in indices]
    return BoundarySet.from_full_leaves((2 * levels, j) for j in sorted(indices))


def random_boundary_set(
    seed: int,
    max_depth: int = 8,
    leaf_prob: float = 0.35,
    full_prob: float = 0.45,
) -> BoundarySet:
    """Seeded random canonical trie of bounded depth.

    Interior vertices stop early with probability ``leaf_prob`` (always at
    ``max_depth``) and a stopped vertex is Full with probability ``full_prob``.
    Canonical merging may shrink the result, including to the empty set.
    """
    rng = Random(seed)

    def gen(depth):
        if depth >= max_depth or rng.random() < leaf_prob:
            return _FULL_LEAF if rng.random() < full_prob else _EMPTY_LEAF
        left = gen(depth + 1)
        right = gen(depth + 1)
        return _join(left, right)

    return BoundarySet(gen(0))
