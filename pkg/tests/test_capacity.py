from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecap import (
    BoundarySet,
    DegenerateSetError,
    VertexId,
    brute_force_capacity,
    cantor_set,
    capacity,
    capacity_table,
    condenser_capacity,
    energy,
    equilibrium_measure,
    extremal,
    prefix_set,
    random_boundary_set,
)

ROOT = VertexId(0, 0)


def boundary_sets(max_level=6, max_leaves=10):
    pairs = st.integers(0, max_level).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1))
    )
    return st.lists(pairs, max_size=max_leaves).map(BoundarySet.from_full_leaves)


class TestCapacity:
    def test_full_boundary(self):
        assert capacity(BoundarySet.full()) == 0.5
        assert capacity(BoundarySet.full(), exact=True) == Fraction(1, 2)

    def test_empty(self):
        assert capacity(BoundarySet.empty()) == 0.0

    @pytest.mark.parametrize("depth", [0, 1, 2, 4, 7, 12, 20])
    def test_shadow_formula(self, depth):
        # iterating c -> c / (1 + c) from 1/2 gives 1 / (depth + 2)
        s = BoundarySet.shadow(VertexId(depth, 0))
        assert capacity(s, exact=True) == Fraction(1, depth + 2)
        assert abs(capacity(s) - 1.0 / (depth + 2)) <= 1e-12

    def test_hand_worked_pair(self):
        # leaves (2,0) and (3,6): c(1,0)=1/3, c(2,3)=1/3, c(1,1)=1/4, root 7/19
        e = BoundarySet.from_full_leaves([(2, 0), (3, 6)])
        assert capacity(e, exact=True) == Fraction(7, 19)

    def test_cantor_values(self):
        assert capacity(cantor_set(1), exact=True) == Fraction(2, 5)
        assert capacity(cantor_set(2), exact=True) == Fraction(4, 11)

    @given(boundary_sets())
    @settings(max_examples=60)
    def test_range_and_recursion(self, e):
        table = capacity_table(e)
        for v, c in table.values.items():
            assert -1e-15 <= c <= 0.5 + 1e-15
        for v, c in table.values.items():
            left, right = v.children()
            if left in table.values and right in table.values:
                s = table.values[left] + table.values[right]
                assert abs(c * (1.0 + s) - s) <= 1e-12

    @given(boundary_sets(), boundary_sets())
    @settings(max_examples=60)
    def test_monotone_and_subadditive(self, a, b):
        u = a.union(b)
        assert capacity(a) <= capacity(u) + 1e-12
        assert capacity(u) <= capacity(a) + capacity(b) + 1e-12


class TestCondenser:
    @pytest.mark.parametrize("n", [0, 1, 2, 5, 20])
    def test_full_boundary(self, n):
        assert condenser_capacity(BoundarySet.full(), n) == 2.0 ** (n - 1)

    def test_level_zero_is_capacity(self):
        e = BoundarySet.from_full_leaves([(2, 0), (3, 6)])
        assert condenser_capacity(e, 0) == capacity(e)

    def test_empty(self):
        assert condenser_capacity(BoundarySet.empty(), 5) == 0.0

    def test_half_circle(self):
        half = prefix_set(Fraction(1, 2))
        for n in range(1, 21):
            assert condenser_capacity(half, n) == 2.0 ** (n - 2)

    def test_negative_level(self):
        with pytest.raises(ValueError):
            condenser_capacity(BoundarySet.full(), -1)

    @given(boundary_sets(), st.integers(0, 10))
    @settings(max_examples=60)
    def test_monotone_in_level(self, e, n):
        assert condenser_capacity(e, n) <= condenser_capacity(e, n + 1) + 1e-12

    @given(boundary_sets())
    @settings(max_examples=40)
    def test_dominates_full_leaf_tails(self, e):
        for n in range(0, 10):
            floor = sum(
                2.0 ** (n - m - 1) for m, _ in e.full_leaves() if m <= n
            )
            assert condenser_capacity(e, n) >= floor - 1e-12


class TestBruteForceOracle:
    def test_full(self):
        assert abs(brute_force_capacity(BoundarySet.full(), 4) - 0.5) <= 1e-9

    def test_shadow(self):
        s = BoundarySet.shadow(VertexId(2, 0))
        assert abs(brute_force_capacity(s, 4) - 0.25) <= 1e-9

    def test_hand_worked_pair(self):
        e = BoundarySet.from_full_leaves([(2, 0), (3, 6)])
        assert abs(brute_force_capacity(e, 5) - 7.0 / 19.0) <= 1e-9

    def test_empty_constraints(self):
        with pytest.raises(DegenerateSetError):
            brute_force_capacity(BoundarySet.empty(), 3)

    def test_depth_validation(self):
        with pytest.raises(ValueError):
            brute_force_capacity(BoundarySet.full(), 9)
        deep = BoundarySet.from_full_leaves([(7, 1)])
        with pytest.raises(ValueError):
            brute_force_capacity(deep, 5)

    def test_matches_recursion_on_random_sets(self):
        count = 0
        seed = 0
        while count < 100:
            e = random_boundary_set(seed, max_depth=6)
            seed += 1
            if e.is_empty():
                continue
            count += 1
            assert abs(brute_force_capacity(e, 6) - capacity(e)) <= 1e-6


class TestExtremal:
    def test_full_boundary(self):
        flux = extremal(BoundarySet.full())
        assert flux.h[ROOT] == 0.5
        for level, index in [(1, 0), (3, 5), (7, 100)]:
            assert abs(flux.h_at(VertexId(level, index)) - 2.0 ** (-level - 1)) <= 1e-15

    def test_single_shadow(self):
        flux = extremal(BoundarySet.shadow(VertexId(1, 0)))
        assert abs(flux.h[ROOT] - 1.0 / 3.0) <= 1e-15
        assert abs(flux.h[VertexId(1, 0)] - 1.0 / 3.0) <= 1e-15
        assert flux.h[VertexId(1, 1)] == 0.0

    def test_zero_off_support(self):
        e = BoundarySet.shadow(VertexId(2, 0))
        flux = extremal(e)
        assert flux.h_at(VertexId(2, 3)) == 0.0
        assert flux.h_at(VertexId(5, 31)) == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateSetError):
            extremal(BoundarySet.empty())

    @given(boundary_sets())
    @settings(max_examples=60)
    def test_flux_additivity(self, e):
        if capacity(e) == 0.0:
            return
        flux = extremal(e)
        for v, hv in flux.h.items():
            left, right = v.children()
            if left in flux.h and right in flux.h:
                assert abs(hv - flux.h[left] - flux.h[right]) <= 1e-12

    @given(boundary_sets())
    @settings(max_examples=60)
    def test_positive_exactly_on_support(self, e):
        # h(x) > 0 exactly where the set meets the subtree below x
        if capacity(e) == 0.0:
            return
        flux = extremal(e)
        caps = capacity_table(e)
        for v, hv in flux.h.items():
            assert (hv > 0.0) == (caps.values[v] > 0.0)

    @given(boundary_sets())
    @settings(max_examples=60)
    def test_path_sums_bounded_and_monotone(self, e):
        if capacity(e) == 0.0:
            return
        flux = extremal(e)
        for v, Hv in flux.H.items():
            assert -1e-15 <= Hv <= 1.0 + 1e-15
            if v.level > 0:
                assert Hv >= flux.H[v.parent()] - 1e-15

    def test_deficit_halves_inside_full_regions(self):
        e = prefix_set(Fraction(3, 8))
        flux = extremal(e)
        leaf = VertexId(2, 0)
        deficit = 1.0 - flux.H_at(leaf)
        below = leaf
        for _ in range(6):
            below = below.children()[0]
            deficit /= 2.0
            assert abs(1.0 - flux.H_at(below) - deficit) <= 1e-14


class TestEnergy:
    def test_full_boundary(self):
        assert abs(energy(extremal(BoundarySet.full())) - 0.5) <= 1e-12

    def test_single_shadow(self):
        # (1/3)^2 explicit at root and leaf plus the (1/3)^2 tail
        flux = extremal(BoundarySet.shadow(VertexId(1, 0)))
        assert abs(energy(flux) - 1.0 / 3.0) <= 1e-12

    def test_quadratic_scaling(self):
        flux = extremal(cantor_set(2))
        base = energy(flux)
        for v in flux.h:
            flux.h[v] *= 3.0
        assert abs(energy(flux) - 9.0 * base) <= 1e-12

    @given(boundary_sets())
    @settings(max_examples=60)
    def test_energy_identity(self, e):
        c = capacity(e)
        if c == 0.0:
            return
        assert abs(energy(extremal(e)) - c) <= 1e-9


class TestEquilibriumMeasure:
    def test_total_mass_full(self):
        m = equilibrium_measure(BoundarySet.full())
        assert m.total_mass == 0.5

    def test_uniform_on_full_boundary(self):
        m = equilibrium_measure(BoundarySet.full())
        for level, index in [(1, 1), (4, 7), (9, 100)]:
            assert abs(m.mass_of(VertexId(level, index)) - 2.0 ** (-level - 1)) <= 1e-15

    def test_vanishes_off_support(self):
        m = equilibrium_measure(BoundarySet.shadow(VertexId(1, 0)))
        assert m.mass_of(VertexId(1, 1)) == 0.0
        assert m.mass_of(VertexId(4, 15)) == 0.0

    @given(boundary_sets())
    @settings(max_examples=40)
    def test_additive_and_consistent(self, e):
        if capacity(e) == 0.0:
            return
        m = equilibrium_measure(e)
        assert abs(m.total_mass - capacity(e)) <= 1e-12
        for v in list(m.flux.h)[:30]:
            left, right = v.children()
            assert abs(
                m.mass_of(v) - m.mass_of(left) - m.mass_of(right)
            ) <= 1e-12

    def test_leaf_masses_sum_to_capacity(self):
        e = cantor_set(2)
        m = equilibrium_measure(e)
        assert abs(sum(m.arc_masses.values()) - capacity(e)) <= 1e-12


class TestExactMode:
    def test_exact_condenser(self):
        fam_carrier = BoundarySet.from_full_leaves([(2, 0), (3, 6)])
        value = condenser_capacity(fam_carrier, 2, exact=True)
        # level-2 subtrees: full at (2,0), capacity 1/3 at (2,3)'s parent slot
        assert value == Fraction(1, 2) + Fraction(1, 3)

    def test_exact_tables(self):
        table = capacity_table(cantor_set(1), exact=True)
        assert table.root_value == Fraction(2, 5)

    def test_exact_extremal_energy(self):
        e = cantor_set(2)
        flux = extremal(e, exact=True)
        assert energy(flux) == capacity(e, exact=True)

    def test_json_export_shapes(self):
        e = BoundarySet.shadow(VertexId(1, 0))
        rows = extremal(e).to_json_obj()
        assert {"vertex", "c", "h", "H"} == set(rows[0])
        masses = equilibrium_measure(e).to_json_obj()
        assert masses == [{"arc": [1, 0], "mass": pytest.approx(1.0 / 3.0)}]
