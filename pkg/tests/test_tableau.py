import copy

import numpy as np
import pytest

from polypuzzle import (
    PieceId,
    build_tableau,
    periodic_column,
    piece_containing,
    render_ascii,
    rule3_full_scan,
    verify_rule1,
    verify_rule2,
    verify_rule3,
)
from polypuzzle.errors import ConfidenceTooLowError, OrbitEscapedError
from polypuzzle.tableau import Tableau


class TestBuild:
    def test_quad_origin_all_critical(self, quad_tree):
        t = build_tableau(quad_tree, 0j, 3, 4)
        for m in range(4):
            for j in range(5):
                assert t.entries[m][j] == PieceId(m, 0)
                assert t.marks[m][j] == frozenset({0})

    def test_bh_critical_column(self, bh_tree):
        c = bh_tree.setup.criticals[1].location
        t = build_tableau(bh_tree, c, bh_tree.max_depth, 3)
        for m in range(bh_tree.max_depth + 1):
            assert 1 in t.marks[m][0]

    def test_unmarked_entries_off_the_critical_part(self, bh_tree):
        # the repelling fixed point -1.8858 sits in the non-critical lobe
        fx = complex(sorted(np.roots([1, 0, -2.92, 1.2]).real)[0])
        t = build_tableau(bh_tree, fx, 1, 3)
        assert all(t.entries[1][j] is not None for j in range(4))
        assert all(t.marks[1][j] == frozenset() for j in range(4))

    def test_escaped_origin_rejected(self, bh_tree):
        with pytest.raises(OrbitEscapedError):
            build_tableau(bh_tree, -0.8 + 0j, 2, 4)

    def test_coherence_with_fresh_orbit(self, bh_tree):
        c = bh_tree.setup.criticals[1].location
        t = build_tableau(bh_tree, c, bh_tree.max_depth, 6)
        w = c
        for j in range(7):
            for m in range(bh_tree.max_depth + 1):
                assert t.entries[m][j] == piece_containing(bh_tree, w, m)
            w = bh_tree.setup.map(w)


class TestRules12:
    def test_clean_on_built_tableaux(self, quad_tree, bh_tree):
        for tree, x in [(quad_tree, 0j),
                        (bh_tree, bh_tree.setup.criticals[1].location)]:
            t = build_tableau(tree, x, tree.max_depth, 12)
            assert verify_rule1(t) == []
            assert verify_rule2(t) == []

    def test_rule1_fault_injection(self, bh_tree):
        c = bh_tree.setup.criticals[1].location
        t = build_tableau(bh_tree, c, bh_tree.max_depth, 6)
        bad = copy.deepcopy(t)
        # corrupt a shallow entry under a critical vertex
        other = next(p.id for p in bh_tree.pieces_at(1)
                     if not p.critical_marks)
        bad.entries[1][2] = other
        bad.marks[1][2] = frozenset()
        violations = verify_rule1(bad)
        assert violations and any(v[2] == 2 for v in violations)

    def test_rule2_fault_injection(self, bh_tree):
        c = bh_tree.setup.criticals[1].location
        t = build_tableau(bh_tree, c, bh_tree.max_depth, 6)
        bad = copy.deepcopy(t)
        other = next(p.id for p in bh_tree.pieces_at(1)
                     if not p.critical_marks)
        bad.entries[1][3] = other
        assert verify_rule2(bad)


def _synthetic_pair():
    """Hand-built tableaux exercising the exclusion rule's branches.

    Depth extent 3, width 4, critical indices 0 and 1; entries are dummy
    ids (the checker only reads marks and extents).
    """
    def blank():
        e = [[PieceId(m, 0) for _ in range(5)] for m in range(4)]
        mk = [[frozenset() for _ in range(5)] for _ in range(4)]
        return e, mk

    e1, m1 = blank()
    # c0-vertex at depth 2 column 0; c1-vertex one diagonal step later at
    # depth 1
    m1[2][0] = frozenset({0})
    m1[1][1] = frozenset({1})
    t1 = Tableau(tree=None, origin=0j, depth_extent=3, width_extent=4,
                 entries=e1, marks=m1, orbit=[])

    e2, m2 = blank()
    # c0-vertex at depth 1 column 1, not critical at depth 2
    m2[1][1] = frozenset({0})
    t2 = Tableau(tree=None, origin=0j, depth_extent=3, width_extent=4,
                 entries=e2, marks=m2, orbit=[])
    return t1, t2


class TestRule3:
    def test_not_applicable(self, quad_tree):
        t = build_tableau(quad_tree, 0j, 4, 8)
        # every vertex is critical so hypothesis (ii) always fails
        assert verify_rule3(t, t, 1, 0, 1, 1, 0, 0) == "not_applicable"

    def test_full_scan_zero_violated(self, quad_tree, bh_tree):
        tq = build_tableau(quad_tree, 0j, quad_tree.max_depth, 24)
        _, violations = rule3_full_scan(tq, tq)
        assert violations == []
        c = bh_tree.setup.criticals[1].location
        tb = build_tableau(bh_tree, c, bh_tree.max_depth, 24)
        _, violations = rule3_full_scan(tb, tb)
        assert violations == []

    def test_synthetic_holds(self):
        t1, t2 = _synthetic_pair()
        # m0=1, n0=0, i0=1, n1=1: hypotheses hold, conclusion vertex at
        # depth 1, column 2 is not critical
        assert verify_rule3(t1, t2, 1, 0, 1, 1, 0, 1) == "holds"

    def test_synthetic_violated(self):
        t1, t2 = _synthetic_pair()
        t2.marks[1][2] = frozenset({1})  # poison the conclusion vertex
        assert verify_rule3(t1, t2, 1, 0, 1, 1, 0, 1) == "violated"

    def test_synthetic_blocked_diagonal(self):
        t1, t2 = _synthetic_pair()
        # make i0=2 admissible in t1, but poison the barrier vertex one
        # level above the staircase (depth m0-i at i=1): side condition
        # fails and the instance is inapplicable
        t1.marks[2][0] = frozenset({0})
        t1.marks[0][2] = frozenset({1})
        t1.marks[0][1] = frozenset({1})
        assert verify_rule3(t1, t2, 1, 0, 2, 1, 0, 1) == "not_applicable"


class TestPeriodicColumn:
    def test_quad_column_one(self, quad_tree):
        t = build_tableau(quad_tree, 0j, 8, 8)
        assert periodic_column(t, 0) == 1

    def test_cubic_column_one(self, cubic_tree):
        t = build_tableau(cubic_tree, 0j, 8, 8)
        assert periodic_column(t, 0) == 1

    def test_fed_point_has_none(self, quart_feed_tree):
        # the fed critical point's orbit sits on the other critical point
        # forever; no column repeats
        tree = quart_feed_tree
        ce = next(i for i, c in enumerate(tree.setup.criticals)
                  if not c.escapes and c.location.real < 0)
        t = build_tableau(tree, tree.setup.criticals[ce].location,
                          tree.max_depth, 6)
        assert periodic_column(t, ce, confidence_depth=1) is None

    def test_confidence_gate(self, quad_tree):
        t = build_tableau(quad_tree, 0j, 4, 6)
        # columns repeat, but depth extent 4 leaves at most 3 confirmed
        # depths below the default confidence
        with pytest.raises(ConfidenceTooLowError):
            periodic_column(t, 0)
        assert periodic_column(t, 0, confidence_depth=3) == 1

    def test_origin_must_be_the_critical_point(self, quad_tree):
        t = build_tableau(quad_tree, 0.5 + 0j, 4, 4)
        with pytest.raises(ValueError):
            periodic_column(t, 0)


class TestAscii:
    def test_render_smoke(self, bh_tree):
        c = bh_tree.setup.criticals[1].location
        t = build_tableau(bh_tree, c, bh_tree.max_depth, 6)
        art = render_ascii(t)
        lines = art.splitlines()
        assert len(lines) == bh_tree.max_depth + 2  # header + depths
        assert "1" in art  # the critical index appears
