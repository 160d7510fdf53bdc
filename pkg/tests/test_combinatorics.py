import pytest

from polypuzzle import (
    PieceId,
    accumulates,
    build_decomposition,
    build_relation,
    case_of,
    children,
    classify,
    normalize_star_star,
    piece_containing,
)
from polypuzzle.combinatorics import (
    TAG_ESCAPING_TO,
    TAG_NON,
    TAG_PERSISTENT,
    TAG_RELUCTANT,
    AccumRelation,
    Classification,
    CriticalClassification,
    Verdict,
)
from polypuzzle.errors import InconclusiveError, StarStarDepthNotFoundError


class TestAccumulates:
    def test_fixed_critical_point(self, quad_tree):
        v = accumulates(quad_tree, 0j, 0j, 3, 4)
        assert v.yes and v.witnesses == [1, 1, 1, 1]

    def test_escaping_sample_is_bounded_no(self, quad_tree):
        # orbit of 3 blows up; pieces around 0 at depth >= 2 have radius
        # below 2, so no orbit point ever lands
        v = accumulates(quad_tree, 3 + 0j, 0j, 4, 8)
        assert not v.yes
        assert (v.depth_bound, v.horizon) == (4, 8)

    def test_feed_pair(self, quart_feed_tree):
        tree = quart_feed_tree
        ce = next(c.location for c in tree.setup.criticals
                  if not c.escapes and c.location.real < 0)
        cp = next(c.location for c in tree.setup.criticals
                  if not c.escapes and c.location.real > 0)
        N = tree.max_depth
        assert accumulates(tree, ce, cp, N, 8).yes
        assert not accumulates(tree, cp, ce, N, 8).yes
        assert not accumulates(tree, ce, ce, N, 8).yes

    def test_transitivity_on_corpus(self, quad_tree, bh_tree,
                                    quart_feed_tree, quart_twin_tree):
        for tree in (quad_tree, bh_tree, quart_feed_tree, quart_twin_tree):
            rel = build_relation(tree, min(tree.max_depth, 4), 16)
            assert rel.transitivity_violations() == []


class TestDecomposition:
    def test_quad_single_class(self, quad_tree):
        dec = build_decomposition(quad_tree, 4, 8)
        assert dec.classes == [[0]]
        assert dec.layers == [[0]]
        assert all(dec.properties.values())

    def test_bh_escaping_excluded(self, bh_tree):
        dec = build_decomposition(bh_tree, bh_tree.max_depth, 16)
        assert dec.classes == [[1]]  # only the bounded critical point
        assert dec.layers == [[0]]

    def test_feed_two_layers(self, quart_feed_tree):
        tree = quart_feed_tree
        dec = build_decomposition(tree, tree.max_depth, 8)
        # classes listed by smallest member: [c_e]=crit 0, [c_p]=crit 2
        assert dec.classes == [[0], [2]]
        # bottom layer is the persistent target, the feeder sits above
        assert dec.layers == [[1], [0]]
        assert dec.order_edges == [(0, 1)]
        assert all(dec.properties.values())

    def test_twin_single_layer(self, quart_twin_tree):
        tree = quart_twin_tree
        dec = build_decomposition(tree, tree.max_depth, 8)
        assert len(dec.classes) == 2
        assert dec.layers == [[0, 1]]
        assert dec.order_edges == []


class TestChildren:
    def test_quad_exactly_one(self, quad_tree):
        got = children(quad_tree, 0, 1, 4)
        assert got == [(0, 1, PieceId(2, 0))]

    def test_search_zero_empty(self, quad_tree):
        assert children(quad_tree, 0, 1, 0) == []

    def test_range_guard(self, quad_tree):
        with pytest.raises(ValueError):
            children(quad_tree, 0, 8, 4)

    def test_bh_against_independent_oracle(self, bh_tree):
        # oracle: scan critical pieces at depth n+k; verify the image and
        # the conformality through piece lookups along the orbit, never
        # through the decorated links
        tree = bh_tree
        ci = 1
        loc = tree.setup.criticals[ci].location
        n = 0
        search = tree.max_depth - n
        target = piece_containing(tree, loc, n)
        oracle = []
        for k in range(1, search + 1):
            p = piece_containing(tree, loc, n + k)
            w = loc
            for _ in range(k):
                w = tree.setup.map(w)
            if piece_containing(tree, w, n) != target:
                continue
            # conformality: pieces along the orbit of f(loc) up to k-1
            # steps must be critical-free
            conformal = True
            w = tree.setup.map(loc)
            for step in range(k - 1):
                pid = piece_containing(tree, w, n + k - 1 - step)
                if tree.piece(pid).critical_marks:
                    conformal = False
                w = tree.setup.map(w)
            if conformal:
                oracle.append((ci, k, p))
        assert children(tree, ci, n, search, [ci]) == oracle


class TestClassify:
    def test_quad(self, quad_tree):
        dec = build_decomposition(quad_tree, 4, 8)
        cls = classify(quad_tree, dec, 4, 8, search_depth=5)
        assert cls.tag(0) == TAG_PERSISTENT and cls.periodic(0)

    def test_cubic_unicrit(self, cubic_tree):
        dec = build_decomposition(cubic_tree, 4, 8)
        cls = classify(cubic_tree, dec, 4, 8, search_depth=5)
        assert cls.tag(0) == TAG_PERSISTENT and cls.periodic(0)

    def test_feed_tags(self, quart_feed_tree):
        tree = quart_feed_tree
        dec = build_decomposition(tree, tree.max_depth, 8)
        cls = classify(tree, dec, tree.max_depth, 8,
                       search_depth=tree.max_depth,
                       census_window=2, confidence_depth=1)
        tags = {i: cls.tag(i) for i in cls.tags}
        assert tags == {0: TAG_ESCAPING_TO, 2: TAG_PERSISTENT}
        assert cls.periodic(2) and not cls.periodic(0)
        # certificates carry their windows
        assert cls.tags[2].evidence["census_window"] == 2
        assert cls.tags[2].evidence["confidence_depth"] == 1

    def test_shallow_tree_is_inconclusive(self, bh_tree):
        # the resolved depth leaves no room for a census at the default
        # window; strict mode refuses to guess
        dec = build_decomposition(bh_tree, bh_tree.max_depth, 16)
        with pytest.raises(InconclusiveError):
            classify(bh_tree, dec, bh_tree.max_depth, 16, search_depth=3)
        cls = classify(bh_tree, dec, bh_tree.max_depth, 16, search_depth=3,
                       strict=False)
        assert cls.tag(1) == "inconclusive"

    def test_layer_placement_invariant(self, quad_tree, quart_feed_tree):
        # non-accumulating and persistent classes sit in the bottom layer;
        # feeder classes never do
        for tree, kw in [(quad_tree, {"search_depth": 5}),
                         (quart_feed_tree,
                          {"search_depth": quart_feed_tree.max_depth,
                           "census_window": 2, "confidence_depth": 1})]:
            N = min(tree.max_depth, 4)
            dec = build_decomposition(tree, N, 8)
            cls = classify(tree, dec, N, 8, **kw)
            for i, t in cls.tags.items():
                layer = dec.layer_of_class(dec.class_of(i))
                if t.tag in (TAG_NON, TAG_PERSISTENT):
                    assert layer == 0
                if t.tag == TAG_ESCAPING_TO:
                    assert layer > 0

    def test_forw_equals_class_for_persistent(self, quad_tree,
                                              quart_feed_tree):
        for tree, kw in [(quad_tree, {"search_depth": 5}),
                         (quart_feed_tree,
                          {"search_depth": quart_feed_tree.max_depth,
                           "census_window": 2, "confidence_depth": 1})]:
            N = min(tree.max_depth, 4)
            dec = build_decomposition(tree, N, 8)
            cls = classify(tree, dec, N, 8, **kw)
            for i, t in cls.tags.items():
                if t.tag == TAG_PERSISTENT:
                    klass = dec.classes[dec.class_of(i)]
                    assert sorted(dec.relation.forw(i)) == klass


def _fake_relation(indices, arrows):
    verdicts = {}
    for i in indices:
        for j in indices:
            yes = (i, j) in arrows
            verdicts[(i, j)] = Verdict(yes, [1] if yes else [], 4, 8)
    return AccumRelation(crit_indices=list(indices), verdicts=verdicts,
                         depth_bound=4, horizon=8)


def _fake_decomposition(indices, arrows, classes, layers, edges):
    from polypuzzle.combinatorics import Decomposition
    return Decomposition(relation=_fake_relation(indices, arrows),
                         classes=classes, layers=layers, order_edges=edges)


def _fake_classification(tags):
    return Classification(tags={
        i: CriticalClassification(tag=t, periodic=False, evidence={})
        for i, t in tags.items()})


class TestCaseOf:
    def test_quad_case2(self, quad_tree):
        dec = build_decomposition(quad_tree, 4, 8)
        cls = classify(quad_tree, dec, 4, 8, search_depth=5)
        assert case_of(cls, dec, 0)["case"] == "Case2"

    def test_feed_case2(self, quart_feed_tree):
        tree = quart_feed_tree
        dec = build_decomposition(tree, tree.max_depth, 8)
        cls = classify(tree, dec, tree.max_depth, 8,
                       search_depth=tree.max_depth,
                       census_window=2, confidence_depth=1)
        assert case_of(cls, dec, 0)["case"] == "Case2"

    def test_decision_table_case1(self):
        dec = _fake_decomposition([0, 1], {(0, 1)}, [[0], [1]],
                                  [[1], [0]], [(0, 1)])
        cls = _fake_classification({0: TAG_ESCAPING_TO, 1: TAG_RELUCTANT})
        assert case_of(cls, dec, 0)["case"] == "Case1"

    def test_decision_table_case3(self):
        # forw(0) = {1, 2}: 1 feeds the persistent point 2
        arrows = {(0, 1), (0, 2), (1, 2), (2, 2)}
        dec = _fake_decomposition([0, 1, 2], arrows, [[0], [1], [2]],
                                  [[2], [1], [0]], [(0, 1), (1, 2), (0, 2)])
        cls = _fake_classification({0: TAG_ESCAPING_TO, 1: TAG_ESCAPING_TO,
                                    2: TAG_PERSISTENT})
        out = case_of(cls, dec, 0)
        assert out["case"] == "Case3"
        assert out["witnesses"] == {1: 2}


class TestNormalizeStarStar:
    def test_quad_vacuous(self, quad_tree):
        assert normalize_star_star(quad_tree, 4, 8) == 0

    def test_feed_separated_at_zero(self, quart_feed_tree):
        # the outer components already separate the critical orbits
        tree = quart_feed_tree
        assert normalize_star_star(tree, tree.max_depth, 8) == 0

    def test_twin_both_directions(self, quart_twin_tree):
        tree = quart_twin_tree
        assert normalize_star_star(tree, tree.max_depth, 8) == 0

    def test_not_found_on_fabricated_relation(self, quart_feed_tree):
        # declare the feeding pair non-accumulating: its orbit sits inside
        # every piece around the target, so no depth separates it
        tree = quart_feed_tree
        rel = _fake_relation([0, 2], {(2, 2)})
        with pytest.raises(StarStarDepthNotFoundError):
            normalize_star_star(tree, tree.max_depth, 8, relation=rel)
