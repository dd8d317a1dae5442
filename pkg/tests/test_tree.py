from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from treecap import (
    BoundarySet,
    ResolutionError,
    SetSpecError,
    VertexId,
    boundary_rho,
    confluent,
    prefix_set,
    rho,
    set_algebra,
)


def vertex_ids(max_level=8):
    return st.integers(0, max_level).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1))
    ).map(lambda t: VertexId(*t))


def boundary_sets(max_level=6, max_leaves=10):
    pairs = st.integers(0, max_level).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1))
    )
    return st.lists(pairs, max_size=max_leaves).map(BoundarySet.from_full_leaves)


class TestVertexId:
    def test_root(self):
        assert VertexId(0, 0).arc() == (0, 1)

    def test_validation(self):
        with pytest.raises(ValueError):
            VertexId(2, 4)
        with pytest.raises(ValueError):
            VertexId(-1, 0)

    def test_parent_children(self):
        v = VertexId(3, 5)
        left, right = v.children()
        assert left == VertexId(4, 10)
        assert right == VertexId(4, 11)
        assert left.parent() == v and right.parent() == v
        with pytest.raises(ValueError):
            VertexId(0, 0).parent()

    @given(vertex_ids())
    def test_parent_child_roundtrip(self, v):
        for child in v.children():
            assert child.parent() == v

    @given(vertex_ids())
    def test_arc_tiling(self, v):
        left, right = v.children()
        lo, hi = v.arc()
        assert left.arc() == (lo, (lo + hi) / 2)
        assert right.arc() == ((lo + hi) / 2, hi)


class TestConfluent:
    def test_siblings(self):
        assert confluent(VertexId(3, 0), VertexId(3, 1)) == VertexId(2, 0)

    def test_identity(self):
        assert confluent(VertexId(2, 1), VertexId(2, 1)) == VertexId(2, 1)

    def test_disjoint_branches(self):
        # walk both root paths by hand: (4,0) -> 0,0,0,0 and (2,3) -> 1,1
        assert confluent(VertexId(4, 0), VertexId(2, 3)) == VertexId(0, 0)

    def test_ancestor(self):
        assert confluent(VertexId(5, 9), VertexId(2, 1)) == VertexId(2, 1)

    @given(vertex_ids(), vertex_ids())
    def test_commutative_and_shallow(self, a, b):
        w = confluent(a, b)
        assert w == confluent(b, a)
        assert w.level <= min(a.level, b.level)
        assert w.is_ancestor_of(a) and w.is_ancestor_of(b)


class TestMetric:
    def test_vertex_values(self):
        assert rho(VertexId(0, 0), VertexId(0, 0)) == 0
        assert rho(VertexId(1, 0), VertexId(1, 1)) == Fraction(1, 2)
        assert rho(VertexId(1, 0), VertexId(2, 1)) == Fraction(1, 8)

    def test_boundary_values(self):
        assert boundary_rho(VertexId(3, 0), VertexId(3, 4)) == 1
        assert boundary_rho(VertexId(3, 0), VertexId(3, 1)) == Fraction(1, 4)
        assert boundary_rho(VertexId(3, 2), VertexId(3, 2)) == 0

    @given(vertex_ids(), vertex_ids(), vertex_ids())
    def test_vertex_metric_axioms(self, a, b, c):
        assert rho(a, b) == rho(b, a)
        assert (rho(a, b) == 0) == (a == b)
        assert rho(a, c) <= rho(a, b) + rho(b, c)

    @given(vertex_ids(), vertex_ids(), vertex_ids())
    def test_boundary_ultrametric(self, a, b, c):
        assert boundary_rho(a, c) <= max(boundary_rho(a, b), boundary_rho(b, c))


class TestPrefixSet:
    def test_endpoints(self):
        assert prefix_set(0).is_empty()
        assert prefix_set(1).is_full()

    def test_half(self):
        assert prefix_set(Fraction(1, 2)).full_leaves() == [(1, 0)]

    def test_three_eighths(self):
        assert prefix_set(Fraction(3, 8)).full_leaves() == [(2, 0), (3, 2)]

    def test_non_dyadic_rejected(self):
        with pytest.raises(ValueError):
            prefix_set(Fraction(1, 3))

    def test_resolution_overflow(self):
        with pytest.raises(ResolutionError):
            prefix_set(Fraction(1, 2**40), max_resolution=30)

    @given(st.integers(1, 255))
    def test_closed_under_complementary_arc(self, p):
        t = Fraction(p, 256)
        left = prefix_set(t)
        leaves = left.full_leaves()
        arcs = left.intervals()
        assert arcs and arcs[0][0] == 0 and arcs[-1][1] == t
        assert all(0 <= n <= 8 for n, _ in leaves)


class TestCanonicalization:
    def test_sibling_merge(self):
        assert BoundarySet.from_full_leaves([(1, 0), (1, 1)]).is_full()
        merged = BoundarySet.from_full_leaves([(2, 0), (2, 1)])
        assert merged.full_leaves() == [(1, 0)]

    def test_overlap_absorbed(self):
        nested = BoundarySet.from_full_leaves([(1, 0), (3, 2)])
        assert nested.full_leaves() == [(1, 0)]

    def test_resolution(self):
        assert BoundarySet.empty().resolution == 0
        assert BoundarySet.full().resolution == 0
        assert BoundarySet.from_full_leaves([(3, 1), (2, 2)]).resolution == 3

    @given(boundary_sets())
    def test_idempotent(self, e):
        assert BoundarySet.from_full_leaves(e.full_leaves()) == e

    @given(boundary_sets())
    def test_no_mergeable_siblings(self, e):
        leaves = set(e.full_leaves())
        for n, j in leaves:
            assert (n, j ^ 1) not in leaves


class TestSetAlgebra:
    def test_union_identity(self):
        x = BoundarySet.from_full_leaves([(2, 1)])
        assert set_algebra(BoundarySet.empty(), x, "union") == x

    def test_intersection_identity(self):
        x = BoundarySet.from_full_leaves([(2, 1), (3, 1)])
        assert set_algebra(BoundarySet.full(), x, "intersection") == x

    def test_two_shadows_tile(self):
        half = prefix_set(Fraction(1, 2))
        other = BoundarySet.shadow(VertexId(1, 1))
        assert half.union(other).is_full()

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            set_algebra(BoundarySet.full(), BoundarySet.full(), "xor")

    def test_touching_arcs_intersect_to_null(self):
        # adjacent closed arcs share one endpoint; single points carry no
        # capacity and are dropped by the half-open tiling convention
        a = BoundarySet.shadow(VertexId(2, 0))
        b = BoundarySet.shadow(VertexId(2, 1))
        assert a.intersection(b).is_empty()
        assert a.union(b).full_leaves() == [(1, 0)]

    @given(boundary_sets(), boundary_sets())
    def test_union_intersection_laws(self, a, b):
        u = a.union(b)
        i = a.intersection(b)
        assert a.is_subset_of(u) and b.is_subset_of(u)
        assert i.is_subset_of(a) and i.is_subset_of(b)
        assert u.union(a) == u
        assert i.intersection(a) == i

    @given(boundary_sets(max_level=5), boundary_sets(max_level=5))
    def test_commutative(self, a, b):
        assert a.union(b) == b.union(a)
        assert a.intersection(b) == b.intersection(a)


class TestSerialization:
    def test_text_roundtrip(self):
        e = BoundarySet.from_full_leaves([(3, 5), (2, 0), (4, 13)])
        assert BoundarySet.from_text(e.to_text()) == e

    def test_text_canonicalizes(self):
        # sibling pair in the listing collapses on load
        again = BoundarySet.from_text("2:0\n2:1\n")
        assert again.full_leaves() == [(1, 0)]

    def test_json_roundtrip(self):
        e = BoundarySet.from_full_leaves([(1, 1), (3, 1)])
        assert BoundarySet.from_json_obj(e.to_json_obj()) == e

    def test_bad_text(self):
        with pytest.raises(SetSpecError):
            BoundarySet.from_text("2-0")

    def test_empty_and_full(self):
        assert BoundarySet.from_text("") == BoundarySet.empty()
        assert BoundarySet.from_text("0:0") == BoundarySet.full()

    @given(boundary_sets())
    def test_roundtrip_property(self, e):
        assert BoundarySet.from_text(e.to_text()) == e
        assert BoundarySet.from_json_obj(e.to_json_obj()) == e


class TestShadow:
    def test_shadow_leaves(self):
        assert BoundarySet.shadow(VertexId(2, 2)).full_leaves() == [(2, 2)]
        assert BoundarySet.shadow(VertexId(0, 0)).is_full()

    @given(vertex_ids(max_level=6))
    def test_shadow_arc(self, v):
        s = BoundarySet.shadow(v)
        assert s.intervals() == [v.arc()]
