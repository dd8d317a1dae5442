"""Rooted dyadic tree, its boundary, and closed boundary sets as canonical tries.

Vertices are labelled ``(level, index)`` with root ``(0, 0)``; the vertex
``(n, j)`` owns the circle arc ``[j/2^n, (j+1)/2^n]``.  A closed boundary set
is stored as a finite binary trie whose leaves are tagged Full or Empty; the
set is the union of the shadows of the Full leaves, equivalently a finite
union of closed dyadic arcs.  Tries are canonical (no two sibling leaves share
a tag) and immutable, so subtrees can be shared freely between sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import ResolutionError, SetSpecError

DEFAULT_MAX_RESOLUTION = 30

_EMPTY_TAG = 0
_FULL_TAG = 1
_INTERNAL_TAG = 2


@dataclass(frozen=True, order=True)
class VertexId:
    """A vertex (level, index) of the infinite rooted dyadic tree."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be >= 0, got {self.level}")
        if not 0 <= self.index < (1 << self.level):
            raise ValueError(f"index {self.index} out of range at level {self.level}")

    @property
    def depth(self) -> int:
        """Natural distance from the root."""
        return self.level

    def parent(self) -> "VertexId":
        if self.level == 0:
            raise ValueError("the root has no parent")
        return VertexId(self.level - 1, self.index >> 1)

    def children(self) -> tuple["VertexId", "VertexId"]:
        return (
            VertexId(self.level + 1, 2 * self.index),
            VertexId(self.level + 1, 2 * self.index + 1),
        )

    def arc(self) -> tuple[Fraction, Fraction]:
        """Endpoints of the circle arc owned by this vertex, as fractions of a turn."""
        scale = 1 << self.level
        return Fraction(self.index, scale), Fraction(self.index + 1, scale)

    def is_ancestor_of(self, other: "VertexId") -> bool:
        """True when ``other`` lies in the subtree below, or equals, this vertex."""
        gap = other.level - self.level
        return gap >= 0 and (other.index >> gap) == self.index


ROOT = VertexId(0, 0)


def confluent(a: VertexId, b: VertexId) -> VertexId:
    """Deepest common ancestor of two vertices."""
    ja, jb = a.index, b.index
    n = min(a.level, b.level)
    ja >>= a.level - n
    jb >>= b.level - n
    k = (ja ^ jb).bit_length()
    return VertexId(n - k, ja >> k)


def rho(a: VertexId, b: VertexId) -> Fraction:
    """Boundary-compatible metric between vertices.

    Distance is ``2^-d(a^b) - (2^-d(a) + 2^-d(b)) / 2`` where ``a^b`` is the
    confluent; vertices become isolated points and boundary geodesics become
    Cauchy sequences under this metric.
    """
    w = confluent(a, b)
    return (
        Fraction(1, 1 << w.level)
        - (Fraction(1, 1 << a.level) + Fraction(1, 1 << b.level)) / 2
    )


def boundary_rho(a: VertexId, b: VertexId) -> Fraction:
    """Metric between boundary points identified by finite path prefixes.

    Two distinct prefixes stand for boundary points whose geodesics separate
    at the confluent, so the distance is ``2^-d(a^b)``; equal prefixes give 0.
    """
    if a == b:
        return Fraction(0)
    return Fraction(1, 1 << confluent(a, b).level)


class _Node:
    """Immutable trie node; ``tag`` is EMPTY/FULL for leaves, INTERNAL otherwise."""

    __slots__ = ("tag", "left", "right")

    def __init__(self, tag, left=None, right=None):
        self.tag = tag
        self.left = left
        self.right = right


_EMPTY_LEAF = _Node(_EMPTY_TAG)
_FULL_LEAF = _Node(_FULL_TAG)


def _join(left: _Node, right: _Node) -> _Node:
    """Combine two subtrees one level up, merging equal-tag leaf pairs."""
    if left.tag == right.tag and left.tag != _INTERNAL_TAG:
        return left
    return _Node(_INTERNAL_TAG, left, right)


def _leaf_run(a: int, b: int, scale_log: int) -> Iterator[tuple[int, int]]:
    """Maximal dyadic arcs covering [a, b) at scale 2^-scale_log, in order."""
    while a < b:
        size_log = (a & -a).bit_length() - 1 if a else scale_log
        while (1 << size_log) > b - a:
            size_log -= 1
        yield scale_log - size_log, a >> size_log
        a += 1 << size_log


class BoundarySet:
    """A closed subset of the tree boundary, canonically encoded as a trie.

    Instances are immutable; all operations return new sets.  Equality is
    set equality (canonical tries are unique, so it is structural).
    """

    __slots__ = ("_root", "_leaves", "_resolution", "_cache")

    def __init__(self, root: _Node):
        self._root = root
        self._leaves = None
        self._resolution = None
        self._cache = {}  # write-once memos of derived pure values

    # -- constructors ------------------------------------------------------

    @staticmethod
    def empty() -> "BoundarySet":
        return _EMPTY_SET

    @staticmethod
    def full() -> "BoundarySet":
        return _FULL_SET

    @staticmethod
    def shadow(vertex: VertexId) -> "BoundarySet":
        """The shadow S(x): every boundary point passing through ``vertex``."""
        node = _FULL_LEAF
        level, index = vertex.level, vertex.index
        for k in range(level):
            bit = (index >> k) & 1
            node = _Node(_INTERNAL_TAG, _EMPTY_LEAF, node) if bit else _Node(
                _INTERNAL_TAG, node, _EMPTY_LEAF
            )
        return BoundarySet(node)

    @staticmethod
    def from_full_leaves(pairs: Iterable[tuple[int, int]]) -> "BoundarySet":
        """Union of the shadows S((n, j)) for the given (possibly overlapping) pairs."""
        intervals = []
        for n, j in pairs:
            v = VertexId(n, j)  # validates the pair
            lo, hi = v.arc()
            intervals.append((lo, hi))
        return BoundarySet._from_intervals(_merge_intervals(intervals))

    @staticmethod
    def _from_intervals(intervals: list[tuple[Fraction, Fraction]]) -> "BoundarySet":
        """Build the canonical trie for a sorted list of disjoint dyadic intervals."""
        if not intervals:
            return _EMPTY_SET
        leaves = []
        for lo, hi in intervals:
            scale_log = max(
                _dyadic_resolution(lo), _dyadic_resolution(hi)
            )
            scale = 1 << scale_log
            a = lo.numerator * (scale // lo.denominator)
            b = hi.numerator * (scale // hi.denominator)
            leaves.extend(_leaf_run(a, b, scale_log))
        return BoundarySet(_tree_from_leaves(leaves))

    # -- basic queries ------------------------------------------------------

    def is_empty(self) -> bool:
        return self._root.tag == _EMPTY_TAG

    def is_full(self) -> bool:
        return self._root.tag == _FULL_TAG

    def full_leaves(self) -> list[tuple[int, int]]:
        """(level, index) labels of the Full leaves, in arc (left-to-right) order."""
        if self._leaves is None:
            out = []
            stack = [(self._root, 0, 0)]
            while stack:
                node, level, index = stack.pop()
                if node.tag == _FULL_TAG:
                    out.append((level, index))
                elif node.tag == _INTERNAL_TAG:
                    stack.append((node.right, level + 1, 2 * index + 1))
                    stack.append((node.left, level + 1, 2 * index))
            self._leaves = out
        return list(self._leaves)

    @property
    def resolution(self) -> int:
        """Depth of the trie; the finest arc scale used by the encoding."""
        if self._resolution is None:
            best = 0
            stack = [(self._root, 0)]
            deepest = {}  # deepest position already expanded, per shared node
            while stack:
                node, level = stack.pop()
                if deepest.get(id(node), -1) >= level:
                    continue
                deepest[id(node)] = level
                if node.tag == _INTERNAL_TAG:
                    stack.append((node.left, level + 1))
                    stack.append((node.right, level + 1))
                else:
                    best = max(best, level)
            self._resolution = best
        return self._resolution

    def node_count(self) -> int:
        """Number of distinct trie nodes (shared subtrees counted once)."""
        seen = set()
        stack = [self._root]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            if node.tag == _INTERNAL_TAG:
                stack.append(node.left)
                stack.append(node.right)
        return len(seen)

    def intervals(self) -> list[tuple[Fraction, Fraction]]:
        """The set as maximal disjoint closed arcs, endpoints as turn fractions."""
        out = []
        for n, j in self.full_leaves():
            lo, hi = VertexId(n, j).arc()
            if out and out[-1][1] == lo:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
        return out

    # -- set algebra ---------------------------------------------------------

    def union(self, other: "BoundarySet") -> "BoundarySet":
        merged = _merge_intervals(self.intervals() + other.intervals())
        return BoundarySet._from_intervals(merged)

    def intersection(self, other: "BoundarySet") -> "BoundarySet":
        return BoundarySet._from_intervals(
            _intersect_intervals(self.intervals(), other.intervals())
        )

    def is_subset_of(self, other: "BoundarySet") -> bool:
        return self.intersection(other) == self

    # -- dunder --------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundarySet):
            return NotImplemented
        return _same_structure(self._root, other._root)

    def __hash__(self) -> int:
        return hash(tuple(self.full_leaves()))

    def __repr__(self) -> str:
        if self.is_empty():
            return "BoundarySet.empty()"
        if self.is_full():
            return "BoundarySet.full()"
        count = self.node_count()
        if count > 33:
            return f"BoundarySet(<{count} nodes, resolution {self.resolution}>)"
        return f"BoundarySet.from_full_leaves({self.full_leaves()})"

    # -- serialization ---------------------------------------------------------

    def to_text(self) -> str:
        """One ``n:j`` line per Full leaf, sorted by (n, j)."""
        return "\n".join(f"{n}:{j}" for n, j in sorted(self.full_leaves()))

    @staticmethod
    def from_text(text: str) -> "BoundarySet":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                n, j = line.split(":")
                pairs.append((int(n), int(j)))
            except (ValueError, TypeError) as exc:
                raise SetSpecError(f"bad leaf line {lineno}: {line!r}") from exc
        return BoundarySet.from_full_leaves(pairs)

    def to_json_obj(self) -> list[list[int]]:
        return [[n, j] for n, j in sorted(self.full_leaves())]

    @staticmethod
    def from_json_obj(obj) -> "BoundarySet":
        try:
            pairs = [(int(n), int(j)) for n, j in obj]
        except (ValueError, TypeError) as exc:
            raise SetSpecError(f"bad JSON leaf list: {obj!r}") from exc
        return BoundarySet.from_full_leaves(pairs)


_EMPTY_SET = BoundarySet(_EMPTY_LEAF)
_FULL_SET = BoundarySet(_FULL_LEAF)


def set_algebra(a: BoundarySet, b: BoundarySet, op: str) -> BoundarySet:
    """Union or intersection of two boundary sets (``op`` in {'union', 'intersection'})."""
    if op == "union":
        return a.union(b)
    if op == "intersection":
        return a.intersection(b)
    raise ValueError(f"unknown set operation {op!r}")


def prefix_set(
    t, max_resolution: int | None = DEFAULT_MAX_RESOLUTION
) -> BoundarySet:
    """The closed set of boundary points mapping into the circle arc [0, t].

    ``t`` must be a dyadic rational in [0, 1].  Along the binary expansion of
    ``t`` every left sibling of the expansion path becomes a Full leaf, which
    is exactly the canonical trie of the arc preimage.
    """
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    q = _dyadic_resolution(t)
    if max_resolution is not None and q > max_resolution:
        raise ResolutionError(
            f"t = {t} needs resolution {q} > maximum {max_resolution}"
        )
    if t == 0:
        return _EMPTY_SET
    if t == 1:
        return _FULL_SET
    bits_int = t.numerator  # q bits, bit q-1 is the leading binary digit
    return BoundarySet(_path_trie(bits_int, q, close_full=False))


def _path_trie(bits_int: int, q: int, close_full: bool) -> _Node:
    """Trie of the arc [0, 0.b1..bq] built bottom-up; bq is bit 0 of ``bits_int``.

    ``close_full`` picks the tag of the deepest path node: Full encodes the
    arc closed at ``t + 2^-q`` instead (used by bracketed constructions).
    """
    node = _FULL_LEAF if close_full else _EMPTY_LEAF
    for k in range(q):
        if (bits_int >> k) & 1:
            node = _join(_FULL_LEAF, node)
        else:
            node = _join(node, _EMPTY_LEAF)
    return node


def _dyadic_resolution(x: Fraction) -> int:
    """log2 of the denominator of a dyadic rational; raises otherwise."""
    d = x.denominator
    if d & (d - 1):
        raise ValueError(f"{x} is not a dyadic rational")
    return d.bit_length() - 1


def _merge_intervals(
    intervals: list[tuple[Fraction, Fraction]],
) -> list[tuple[Fraction, Fraction]]:
    """Sort and merge touching/overlapping intervals."""
    out: list[tuple[Fraction, Fraction]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def _intersect_intervals(xs, ys):
    """Pairwise overlaps of two sorted disjoint interval lists (half-open tiling)."""
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        lo = max(xs[i][0], ys[j][0])
        hi = min(xs[i][1], ys[j][1])
        if lo < hi:
            out.append((lo, hi))
        if xs[i][1] <= ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _tree_from_leaves(leaves: list[tuple[int, int]]) -> _Node:
    """Canonical trie from sorted disjoint full arcs, gaps filled with Empty leaves."""
    if not leaves:
        return _EMPTY_LEAF

    stack: list[tuple[int, int, _Node]] = []

    def push(level, index, node):
        stack.append((level, index, node))
        while len(stack) >= 2:
            l1, j1, n1 = stack[-2]
            l2, j2, n2 = stack[-1]
            if l1 == l2 and j2 == j1 + 1 and (j1 & 1) == 0:
                stack.pop()
                stack.pop()
                stack.append((l1 - 1, j1 >> 1, _join(n1, n2)))
            else:
                break

    cursor = Fraction(0)  # left edge of the uncovered region
    for n, j in leaves:
        lo, hi = Fraction(j, 1 << n), Fraction(j + 1, 1 << n)
        if lo < cursor:
            raise ValueError("leaves must be sorted and disjoint")
        for gap in _gap_leaves(cursor, lo):
            push(gap[0], gap[1], _EMPTY_LEAF)
        push(n, j, _FULL_LEAF)
        cursor = hi
    for gap in _gap_leaves(cursor, Fraction(1)):
        push(gap[0], gap[1], _EMPTY_LEAF)

    assert len(stack) == 1 and stack[0][:2] == (0, 0)
    return stack[0][2]


def _gap_leaves(lo: Fraction, hi: Fraction) -> Iterator[tuple[int, int]]:
    if lo >= hi:
        return
    scale_log = max(_dyadic_resolution(lo), _dyadic_resolution(hi))
    scale = 1 << scale_log
    a = lo.numerator * (scale // lo.denominator)
    b = hi.numerator * (scale // hi.denominator)
    yield from _leaf_run(a, b, scale_log)


def _same_structure(a: _Node, b: _Node) -> bool:
    stack = [(a, b)]
    seen = set()
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if (id(x), id(y)) in seen:
            continue
        seen.add((id(x), id(y)))
        if x.tag != y.tag:
            return False
        if x.tag == _INTERNAL_TAG:
            stack.append((x.left, y.left))
            stack.append((x.right, y.right))
    return True
