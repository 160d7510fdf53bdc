"""Combinatorial accumulation between critical orbits, equivalence classes,
the layered decomposition, children counting, and the four-way tagging of
critical points.

Every negative verdict is explicitly bounded: a "no" carries the depth
bound N and orbit horizon J it was established under, and every recurrence
certificate names its census window. The marked points are exactly the
bounded critical points of the restriction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousCellError,
    ConfidenceTooLowError,
    InconclusiveError,
    PViolationError,
    StarStarDepthNotFoundError,
)
from .mapmodel import magnitude
from .puzzle import (
    PieceId,
    PuzzleTree,
    iterated_degree,
    iterated_image,
    piece_containing,
)
from .tableau import (
    PERIODICITY_CONFIDENCE_DEPTH,
    build_tableau,
    periodic_column,
)

TAG_NON = "Crit_n"
TAG_ESCAPING_TO = "Crit_e"
TAG_RELUCTANT = "Crit_r"
TAG_PERSISTENT = "Crit_p"

CENSUS_STABLE_WINDOW = 3


@dataclass
class Verdict:
    """yes(witnesses) | no_up_to(N, J) for one ordered pair of points."""

    yes: bool
    witnesses: list  # per depth n: minimal j >= 1 with f^j(x) in P_n(y)
    depth_bound: int
    horizon: int


def _orbit(tree, z, length):
    orbit = [complex(z)]
    for _ in range(length):
        orbit.append(tree.setup.map(orbit[-1]))
    return orbit


def accumulates(tree: PuzzleTree, x: complex, y: complex, N: int, J: int) -> Verdict:
    """Does the forward orbit of x enter every depth-n piece around y?

    yes iff for every n <= N some 1 <= j <= J has f^j(x) in P_n(y); a no is
    a bounded verdict, not a negative proof.
    """
    if N > tree.max_depth:
        raise ValueError("N exceeds the tree depth")
    if J < 1:
        raise ValueError("J must be >= 1")
    orbit = _orbit(tree, x, J)
    witnesses = []
    for n in range(N + 1):
        target = piece_containing(tree, y, n)
        if target is None:
            return Verdict(False, witnesses, N, J)
        hit = None
        for j in range(1, J + 1):
            w = orbit[j]
            if not np.isfinite(magnitude(w)):
                break
            try:
                if piece_containing(tree, w, n) == target:
                    hit = j
                    break
            except AmbiguousCellError:
                continue
        if hit is None:
            return Verdict(False, witnesses, N, J)
        witnesses.append(hit)
    return Verdict(True, witnesses, N, J)


@dataclass
class AccumRelation:
    """Accumulation verdicts over the bounded critical points."""

    crit_indices: list
    verdicts: dict  # (ci, cj) -> Verdict
    depth_bound: int
    horizon: int

    def arrow(self, i: int, j: int) -> bool:
        return self.verdicts[(i, j)].yes

    def forw(self, i: int):
        """Critical points the orbit of i accumulates to."""
        return {j for j in self.crit_indices if self.arrow(i, j)}

    def transitivity_violations(self):
        out = []
        for i in self.crit_indices:
            for j in self.crit_indices:
                if not self.arrow(i, j):
                    continue
                for k in self.crit_indices:
                    if self.arrow(j, k) and not self.arrow(i, k):
                        out.append((i, j, k))
        return out

    def to_json(self) -> dict:
        return {
            "crit_indices": list(self.crit_indices),
            "depth_bound": self.depth_bound,
            "horizon": self.horizon,
            "verdicts": {
                f"{i}->{j}": {
                    "yes": v.yes,
                    "witnesses": v.witnesses if v.yes else None,
                }
                for (i, j), v in sorted(self.verdicts.items())
            },
        }


def build_relation(tree: PuzzleTree, N: int, J: int) -> AccumRelation:
    crit = tree.setup.bounded_critical_indices()
    verdicts = {}
    for i in crit:
        xi = tree.setup.criticals[i].location
        for j in crit:
            yj = tree.setup.criticals[j].location
            verdicts[(i, j)] = accumulates(tree, xi, yj, N, J)
    return AccumRelation(crit_indices=crit, verdicts=verdicts,
                         depth_bound=N, horizon=J)


@dataclass
class Decomposition:
    """Classes under mutual accumulation, layered by repeated extraction of
    minimal elements of the accumulation partial order."""

    relation: AccumRelation
    classes: list          # list of sorted critical-index lists
    layers: list           # list of lists of class ids
    order_edges: list      # (class_a, class_b) meaning a accumulates to b
    properties: dict = field(default_factory=dict)

    def class_of(self, crit_index: int) -> int:
        for k, cls in enumerate(self.classes):
            if crit_index in cls:
                return k
        raise KeyError(crit_index)

    def layer_of_class(self, class_id: int) -> int:
        for lk, layer in enumerate(self.layers):
            if class_id in layer:
                return lk
        raise KeyError(class_id)

    def class_arrow(self, a: int, b: int) -> bool:
        return (a, b) in set(self.order_edges) or a == b

    def to_json(self) -> dict:
        return {
            "schema": "polypuzzle.decomposition/1",
            "classes": [list(c) for c in self.classes],
            "layers": [list(l) for l in self.layers],
            "order_edges": [list(e) for e in self.order_edges],
            "properties": dict(self.properties),
            "depth_bound": self.relation.depth_bound,
            "horizon": self.relation.horizon,
        }


def build_decomposition(tree: PuzzleTree, N: int, J: int) -> Decomposition:
    """Classes by mutual accumulation, layers by minimal-element extraction.

    The four structural properties are re-verified on the computed relation
    and attached; any failure raises PViolationError (it signals that N or J
    is too small, or a raster artifact).
    """
    rel = build_relation(tree, N, J)
    trans = rel.transitivity_violations()
    if trans:
        raise PViolationError(
            "computed accumulation matrix is not transitive; raise N or J",
            violations=trans)

    crit = rel.crit_indices
    # classes: mutual accumulation (or equality)
    assigned = {}
    classes = []
    for i in crit:
        if i in assigned:
            continue
        cls = [i]
        assigned[i] = len(classes)
        for j in crit:
            if j != i and j not in assigned and rel.arrow(i, j) and rel.arrow(j, i):
                cls.append(j)
                assigned[j] = len(classes)
        classes.append(sorted(cls))
    # deterministic listing by smallest member
    classes.sort(key=lambda c: c[0])

    def class_to(a, b):
        if a == b:
            return False
        return any(rel.arrow(i, j) for i in classes[a] for j in classes[b])

    n_cls = len(classes)
    edges = [(a, b) for a in range(n_cls) for b in range(n_cls) if class_to(a, b)]

    remaining = set(range(n_cls))
    layers = []
    while remaining:
        minimal = sorted(a for a in remaining
                         if not any(class_to(a, b) for b in remaining if b != a))
        if not minimal:
            raise PViolationError(
                "layer extraction stalled: accumulation cycle between classes",
                remaining=sorted(remaining))
        layers.append(minimal)
        remaining -= set(minimal)

    dec = Decomposition(relation=rel, classes=classes, layers=layers,
                        order_edges=edges)
    props = _check_properties(dec)
    dec.properties = props
    bad = [k for k, v in props.items() if not v]
    if bad:
        raise PViolationError(f"decomposition properties failed: {bad}",
                              properties=props)
    return dec


def _check_properties(dec: Decomposition) -> dict:
    n_cls = len(dec.classes)
    edge_set = set(dec.order_edges)
    in_layers = sorted(c for layer in dec.layers for c in layer)
    p1 = in_layers == list(range(n_cls))
    p2 = True
    for layer in dec.layers:
        for a in layer:
            for b in layer:
                if a != b and (a, b) in edge_set:
                    p2 = False
    p3 = True
    for s, layer_s in enumerate(dec.layers):
        for t in range(s + 1, len(dec.layers)):
            for a in layer_s:
                for b in dec.layers[t]:
                    if (a, b) in edge_set:
                        p3 = False
    p4 = True
    for k in range(1, len(dec.layers)):
        for a in dec.layers[k]:
            if not any((a, b) in edge_set for b in dec.layers[k - 1]):
                p4 = False
    # reachability of the bottom layer along edges
    reach_ok = True
    bottom = set(dec.layers[0])
    for k in range(1, len(dec.layers)):
        for a in dec.layers[k]:
            seen = {a}
            frontier = [a]
            found = False
            while frontier and not found:
                cur = frontier.pop()
                for (u, v) in edge_set:
                    if u == cur and v not in seen:
                        if v in bottom:
                            found = True
                            break
                        seen.add(v)
                        frontier.append(v)
            if not found:
                reach_ok = False
    return {"P1": p1, "P2": p2, "P3": p3, "P4": p4,
            "bottom_reachable": reach_ok}


def children(tree: PuzzleTree, c2: int, n: int, search_depth: int, klass=None):
    """Children of the depth-n piece around critical point c2.

    A child is a deeper piece P_{n+k}(c1), c1 in the class of c2, that maps
    onto P_n(c2) by the k-th iterate with everything after the first step
    conformal. Returns (c1, k, PieceId) triples, k from 1 to search_depth.
    """
    if n + search_depth > tree.max_depth:
        raise ValueError("n + search_depth exceeds the tree depth")
    if klass is None:
        klass = [c2]
    target = piece_containing(tree, tree.setup.criticals[c2].location, n)
    out = []
    for k in range(1, search_depth + 1):
        for c1 in sorted(klass):
            loc1 = tree.setup.criticals[c1].location
            p = piece_containing(tree, loc1, n + k)
            if p is None:
                continue
            if iterated_image(tree, p, k) != target:
                continue
            if k >= 2:
                q = piece_containing(tree, tree.setup.map(loc1), n + k - 1)
                if q is None or iterated_degree(tree, q, k - 1) != 1:
                    continue
            out.append((c1, k, p))
    return out


@dataclass
class CriticalClassification:
    tag: str
    periodic: bool
    evidence: dict


@dataclass
class Classification:
    tags: dict  # crit index -> CriticalClassification

    def tag(self, i: int) -> str:
        return self.tags[i].tag

    def periodic(self, i: int) -> bool:
        return self.tags[i].periodic

    def indices_with(self, tag: str):
        return sorted(i for i, t in self.tags.items() if t.tag == tag)

    def to_json(self) -> dict:
        return {
            "schema": "polypuzzle.classification/1",
            "critical_points": [
                {
                    "index": i,
                    "tag": t.tag,
                    "periodic": t.periodic,
                    "evidence": t.evidence,
                }
                for i, t in sorted(self.tags.items())
            ],
        }


def classify(tree: PuzzleTree, decomposition: Decomposition, N: int, J: int,
             search_depth: int,
             census_depths=None,
             census_window: int = CENSUS_STABLE_WINDOW,
             confidence_depth: int | None = None,
             tableau_depth: int | None = None,
             tableau_width: int | None = None,
             strict: bool = True) -> Classification:
    """Four-way tagging of the bounded critical points.

    Non-recurrent points split by whether they accumulate anywhere at all.
    Recurrent points get a children census over increasing pullback depth:
    counts flat over the stabilization window certify persistence, counts
    still strictly growing certify reluctance, anything else raises
    InconclusiveError (or yields the tag "inconclusive" when strict=False).
    A repeating tableau column certifies a periodic critical component
    (which forces persistence). The census window and the periodicity
    confidence depth are configurable and always reported in the evidence;
    shrinking them below the defaults weakens the certificates accordingly.
    """
    rel = decomposition.relation
    if search_depth < census_window and strict:
        raise ValueError(
            f"search_depth must be >= the census window {census_window}")
    if census_depths is None:
        top = max(0, min(2, tree.max_depth - search_depth))
        census_depths = list(range(top + 1))
    if confidence_depth is None:
        confidence_depth = PERIODICITY_CONFIDENCE_DEPTH
    if tableau_depth is None:
        tableau_depth = tree.max_depth
    if tableau_width is None:
        tableau_width = min(4 * tableau_depth, 48)

    tags = {}
    for i in rel.crit_indices:
        forw = sorted(rel.forw(i))
        loc = tree.setup.criticals[i].location
        evidence = {"forw": forw, "depth_bound": N, "horizon": J}

        t = build_tableau(tree, loc, tableau_depth, tableau_width)
        try:
            pc = periodic_column(t, i, confidence_depth=confidence_depth)
        except ConfidenceTooLowError:
            pc = None
        evidence["periodic_column"] = pc
        evidence["confidence_depth"] = confidence_depth

        if not rel.arrow(i, i):
            tag = TAG_ESCAPING_TO if forw else TAG_NON
            tags[i] = CriticalClassification(tag=tag, periodic=False,
                                             evidence=evidence)
            continue

        klass = decomposition.classes[decomposition.class_of(i)]
        census = {}
        for c_prime in klass:
            for n in census_depths:
                if n + search_depth > tree.max_depth:
                    continue
                counts = []
                for s in range(1, search_depth + 1):
                    counts.append(len(children(tree, c_prime, n, s, klass)))
                census[f"c{c_prime}@n{n}"] = counts
        evidence["children_census"] = census
        evidence["census_window"] = census_window

        if pc is not None:
            tags[i] = CriticalClassification(tag=TAG_PERSISTENT, periodic=True,
                                             evidence=evidence)
            continue

        w = census_window
        stabilized = bool(census) and all(len(counts) >= w
                                          and len(set(counts[-w:])) == 1
                                          for counts in census.values())
        growing = any(all(counts[k] > counts[k - 1]
                          for k in range(len(counts) - w + 1, len(counts)))
                      for counts in census.values() if len(counts) > w)
        if stabilized:
            tags[i] = CriticalClassification(tag=TAG_PERSISTENT, periodic=False,
                                             evidence=evidence)
        elif growing:
            tags[i] = CriticalClassification(tag=TAG_RELUCTANT, periodic=False,
                                             evidence=evidence)
        elif not strict:
            tags[i] = CriticalClassification(tag="inconclusive", periodic=False,
                                             evidence=evidence)
        else:
            raise InconclusiveError(
                f"children census for critical point {i} neither stabilized "
                f"nor grew within search depth {search_depth}",
                crit_index=i, census=census)
    return Classification(tags=tags)


def case_of(classification: Classification, decomposition: Decomposition,
            c0: int) -> dict:
    """Trichotomy for the forward critical set of c0.

    Case1: it meets a non-accumulating or reluctant point. Case2: it sits
    inside the persistent set. Case3: every member is persistent or feeds a
    persistent point; the witness for each feeding member is reported.
    """
    forw = sorted(decomposition.relation.forw(c0))
    tags = classification.tags
    known = {TAG_NON, TAG_ESCAPING_TO, TAG_RELUCTANT, TAG_PERSISTENT}
    if any(tags[c].tag not in known for c in forw):
        return {"case": "undetermined", "forw": forw}
    if any(tags[c].tag in (TAG_NON, TAG_RELUCTANT) for c in forw):
        return {"case": "Case1", "forw": forw}
    if all(tags[c].tag == TAG_PERSISTENT for c in forw):
        return {"case": "Case2", "forw": forw}
    witnesses = {}
    for c in forw:
        if tags[c].tag == TAG_PERSISTENT:
            continue
        # c is in the escaping-to set here; find its persistent target
        targets = [d for d in sorted(decomposition.relation.forw(c))
                   if tags[d].tag == TAG_PERSISTENT]
        if not targets:
            raise PViolationError(
                f"trichotomy witness missing for {c}: no persistent point in "
                "its forward set", crit_index=c)
        witnesses[c] = targets[0]
    return {"case": "Case3", "forw": forw, "witnesses": witnesses}


def normalize_star_star(tree: PuzzleTree, N: int, J: int,
                        relation: AccumRelation | None = None) -> int:
    """Smallest depth from which non-accumulating pairs never interact.

    Returns the least n0 <= N such that for every ordered critical pair
    (c, c') with a negative verdict, no orbit point f^j(c), j <= J, enters
    the depth-n0 piece around c'. Re-indexing depths by n0 makes the
    standing separation assumption hold.
    """
    if relation is None:
        relation = build_relation(tree, N, J)
    pairs = [(i, j) for (i, j), v in relation.verdicts.items() if not v.yes]
    if not pairs:
        return 0
    orbits = {i: _orbit(tree, tree.setup.criticals[i].location, J)
              for i in relation.crit_indices}

    def pair_clear(i, j, n0):
        target = piece_containing(tree, tree.setup.criticals[j].location, n0)
        if target is None:
            return False
        for k in range(1, J + 1):
            w = orbits[i][k]
            if not np.isfinite(magnitude(w)):
                break
            try:
                if piece_containing(tree, w, n0) == target:
                    return False
            except AmbiguousCellError:
                return False
        return True

    for n0 in range(N + 1):
        if all(pair_clear(i, j, n0) for i, j in pairs):
            return n0
    raise StarStarDepthNotFoundError(
        f"no depth <= {N} separates all non-accumulating pairs",
        pairs=pairs)
