import pytest

from polypuzzle import (
    canonical_form,
    compare,
    decorated_from_json,
    extract,
    tree_to_json,
)
from polypuzzle.compare import canonical_digest


def first_return_depths(tree, c, horizon=8):
    """Minimal return time of the critical point to its own piece, by depth."""
    from polypuzzle import piece_containing
    out = []
    for n in range(tree.max_depth + 1):
        target = piece_containing(tree, c, n)
        w = c
        ret = None
        for j in range(1, horizon + 1):
            w = tree.setup.map(w)
            if piece_containing(tree, w, n) == target:
                ret = j
                break
        out.append(ret)
    return out


class TestCanonicalForm:
    def test_reflexive(self, quad_tree, bh_tree, quart_feed_tree):
        for tree in (quad_tree, bh_tree, quart_feed_tree):
            t = extract(tree, tree.max_depth)
            assert canonical_form(t) == canonical_form(t)

    def test_affine_conjugates_equal_everywhere(self, quad_tree, conj_tree):
        for d in range(11):
            assert canonical_form(extract(quad_tree, d)) == \
                canonical_form(extract(conj_tree, d))

    def test_degree_separates_at_depth_one(self, quad_tree, cubic_tree):
        assert canonical_form(extract(quad_tree, 0)) == \
            canonical_form(extract(cubic_tree, 0))
        assert canonical_form(extract(quad_tree, 1)) != \
            canonical_form(extract(cubic_tree, 1))

    def test_digest_stability(self, quad_tree):
        t = extract(quad_tree, 4)
        assert canonical_digest(t) == canonical_digest(t)


class TestCompare:
    def test_identity(self, bh_tree):
        t = extract(bh_tree, bh_tree.max_depth)
        v = compare(t, t, bh_tree.max_depth)
        assert v.isomorphic
        assert v.mapping is not None
        # identity mapping slot by slot
        for row in v.mapping:
            assert all(a == b for a, b in row)

    def test_affine_pair(self, quad_tree, conj_tree):
        v = compare(extract(quad_tree, 10), extract(conj_tree, 10), 10)
        assert v.isomorphic and v.depth_checked == 10

    def test_quad_vs_cubic_mismatch_depth_one(self, quad_tree, cubic_tree):
        v = compare(extract(quad_tree, 4), extract(cubic_tree, 4), 4)
        assert not v.isomorphic
        assert v.mismatch_depth == 1
        assert v.witness["kind"] == "decoration"

    def test_mismatch_depth_minimal(self, quad_tree, cubic_tree):
        # truncating both trees above the mismatch gives isomorphic trees
        v = compare(extract(quad_tree, 4), extract(cubic_tree, 4), 4)
        d = v.mismatch_depth
        assert compare(extract(quad_tree, d - 1),
                       extract(cubic_tree, d - 1), d - 1).isomorphic

    def test_cross_validation_with_canonical_form(
            self, quad_tree, conj_tree, cubic_tree, bh_tree, per1_tree,
            per2_tree, quart_feed_tree, quart_twin_tree):
        trees = [quad_tree, conj_tree, cubic_tree, bh_tree, per1_tree,
                 per2_tree, quart_feed_tree, quart_twin_tree]
        extracts = [extract(t, min(2, t.max_depth)) for t in trees]
        for a in extracts:
            for b in extracts:
                d = min(a.depth_extent, b.depth_extent)
                same = canonical_form(a.truncated(d)) == \
                    canonical_form(b.truncated(d))
                assert same == compare(a, b, d).isomorphic


class TestReturnTimeOracle:
    def test_cubic_pair_mismatch_at_predicted_depth(self, per1_tree,
                                                    per2_tree):
        c = -1.1 + 0j
        r1 = first_return_depths(per1_tree, c)
        r2 = first_return_depths(per2_tree, c)
        # the fixed-point fixture returns in one step at every depth; the
        # 2-cycle fixture diverges from it
        assert all(r == 1 for r in r1)
        diverge = next(n for n in range(min(len(r1), len(r2)))
                       if r1[n] != r2[n])
        predicted = diverge + 1
        d = min(per1_tree.max_depth, per2_tree.max_depth)
        v = compare(extract(per1_tree, d), extract(per2_tree, d), d)
        assert not v.isomorphic
        assert v.mismatch_depth == predicted

    def test_pair_agrees_before_divergence(self, per1_tree, per2_tree):
        v = compare(extract(per1_tree, 1), extract(per2_tree, 1), 1)
        assert v.isomorphic


class TestJsonRoundTrip:
    def test_extract_equals_json_route(self, bh_tree):
        doc = tree_to_json(bh_tree)
        via_json = decorated_from_json(doc)
        direct = extract(bh_tree, bh_tree.max_depth)
        assert via_json.depths == direct.depths
        assert canonical_form(via_json) == canonical_form(direct)

    def test_truncation_guard(self, quad_tree):
        t = extract(quad_tree, 3)
        with pytest.raises(ValueError):
            compare(t, t, 5)
