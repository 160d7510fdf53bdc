"""First-landing domains, nice unions of pieces, the tau reduction, and the
spreading partition, with the supporting facts as executable checks.

A union of pieces is nice when no forward image of a member is strictly
inside the union; landing into a nice union from outside happens along
pairwise disjoint domains that the dynamics maps conformally when the union
holds all critical points. Membership in the landing region is always
decided by bounded orbit landing, never by global preimage computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousCellError, DepthExhaustedError
from .mapmodel import magnitude
from .puzzle import (
    PieceId,
    PuzzleTree,
    interior_samples,
    iterated_degree,
    iterated_image,
    piece_containing,
)

AUDIT_SAMPLES = 50


@dataclass(frozen=True)
class PieceUnion:
    """Finite union of pieces, not necessarily of one depth.

    Members must be pairwise disjoint; construction validates this through
    the tree's containment links.
    """

    members: tuple

    def __init__(self, tree: PuzzleTree, members):
        mem = tuple(sorted(set(members)))
        for a in range(len(mem)):
            for b in range(a + 1, len(mem)):
                if not tree.disjoint(mem[a], mem[b]):
                    raise ValueError(
                        f"members {mem[a]} and {mem[b]} are nested; a union "
                        "of pieces must be disjoint")
        object.__setattr__(self, "members", mem)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, pid: PieceId):
        return pid in self.members

    def min_depth(self) -> int:
        return min(p.depth for p in self.members)

    def max_depth(self) -> int:
        return max(p.depth for p in self.members)


@dataclass
class NiceCertificate:
    nice: bool
    counterexample: dict | None
    checked: int


def is_nice(tree: PuzzleTree, X: PieceUnion, horizon: int = 0) -> NiceCertificate:
    """Check that no forward image of a member is strictly inside a member.

    Exact hits (an image equal to a member) are allowed; the check is
    complete because images beyond a member's own depth leave the outer
    domain. A single-member union is nice outright.
    """
    members = list(X.members)
    if len(members) == 1:
        return NiceCertificate(nice=True, counterexample=None, checked=0)
    checked = 0
    for p in members:
        for n in range(1, p.depth + 1):
            q = iterated_image(tree, p, n)
            for r in members:
                if r.depth < q.depth and tree.ancestor(q, r.depth) == r:
                    return NiceCertificate(
                        nice=False,
                        counterexample={"member": tuple(p), "power": n,
                                        "image": tuple(q),
                                        "strictly_inside": tuple(r)},
                        checked=checked)
                checked += 1
    return NiceCertificate(nice=True, counterexample=None, checked=checked)


@dataclass
class LandingDomain:
    source: complex
    landing_time: int
    domain: PieceId
    landed_component: PieceId
    landing_degree: int


@dataclass
class NeverLands:
    horizon: int


def landing(tree: PuzzleTree, z: complex, X: PieceUnion, horizon: int):
    """First entry of the orbit of z into X, as a puzzle-piece domain.

    Landing time is the minimal j >= 1 with f^j(z) in a member (points
    already inside X get their first return). The domain is the piece of
    depth member_depth + j around z; DepthExhaustedError signals that this
    depth exceeds the computed tree.
    """
    if not X.members:
        raise ValueError("X must be nonempty")
    w = complex(z)
    for k in range(1, horizon + 1):
        w = tree.setup.map(w)
        if not np.isfinite(magnitude(w)):
            return NeverLands(horizon=horizon)
        hit = None
        for m in sorted({p.depth for p in X.members}):
            try:
                pid = piece_containing(tree, w, m)
            except AmbiguousCellError:
                raise
            if pid is not None and pid in X:
                hit = pid
                break
        if hit is None:
            continue
        target_depth = hit.depth + k
        if target_depth > tree.max_depth:
            raise DepthExhaustedError(
                f"landing domain depth {target_depth} exceeds tree depth "
                f"{tree.max_depth}", depth=target_depth, landing_time=k)
        domain = piece_containing(tree, z, target_depth)
        if domain is None:
            raise DepthExhaustedError(
                f"source point has no piece at depth {target_depth}",
                depth=target_depth)
        return LandingDomain(source=complex(z), landing_time=k, domain=domain,
                             landed_component=hit,
                             landing_degree=iterated_degree(tree, domain, k))
    return NeverLands(horizon=horizon)


def _piece_in_union(tree, pid, X):
    """Is the piece inside the union (equality or strict containment)?"""
    for r in X.members:
        if r == pid:
            return True
        if r.depth < pid.depth and tree.ancestor(pid, r.depth) == r:
            return True
    return False


def _pieces_intersect(tree, p, q):
    return not tree.disjoint(p, q)


def verify_lemma_basic(tree: PuzzleTree, z: complex, X: PieceUnion,
                       horizon: int) -> dict:
    """Disjointness of the landing chain, and avoidance of a nice union.

    Clause 1: the domains L, f(L), ..., f^{k-1}(L) are pairwise disjoint.
    Clause 2 (nice X): f^i(L) never meets X before landing; the i = 0 part
    applies only when the source starts outside X. When X covers all
    critical points the landing must also be conformal.
    """
    land = landing(tree, z, X, horizon)
    if isinstance(land, NeverLands):
        return {"landed": False, "horizon": horizon}
    k = land.landing_time
    chain = [iterated_image(tree, land.domain, i) for i in range(k)]

    disjoint_ok = True
    for a in range(len(chain)):
        for b in range(a + 1, len(chain)):
            if _pieces_intersect(tree, chain[a], chain[b]):
                disjoint_ok = False

    cert = is_nice(tree, X)
    z_in_x = False
    for r in X.members:
        try:
            if piece_containing(tree, z, r.depth) == r:
                z_in_x = True
        except AmbiguousCellError:
            pass

    avoid_ok = None
    if cert.nice:
        avoid_ok = True
        start = 1 if z_in_x else 0
        for i in range(start, k):
            for r in X.members:
                if _pieces_intersect(tree, chain[i], r):
                    avoid_ok = False

    marked = set()
    for ci in tree.setup.bounded_critical_indices():
        loc = tree.setup.criticals[ci].location
        covered = False
        for r in X.members:
            try:
                if piece_containing(tree, loc, r.depth) == r:
                    covered = True
            except AmbiguousCellError:
                pass
        marked.add(covered)
    covers_crit = marked == {True} if marked else False

    conformal_ok = None
    if cert.nice and covers_crit and not z_in_x:
        conformal_ok = land.landing_degree == 1

    return {
        "landed": True,
        "landing_time": k,
        "domain": tuple(land.domain),
        "chain_disjoint": disjoint_ok,
        "avoids_union": avoid_ok,
        "source_in_union": z_in_x,
        "covers_critical_points": covers_crit,
        "conformal": conformal_ok,
        "clean": disjoint_ok and (avoid_ok in (True, None))
                 and (conformal_ok in (True, None)),
    }


def verify_corollary_32(tree: PuzzleTree, z: complex, X: PieceUnion,
                        horizon: int, rng=None) -> dict:
    """Degree bound along the chain, and coherence of landing domains.

    (i) the chain meets each critical point at most once and the landing
    degree is at most (max local degree)^(number of critical points);
    (ii) sampled points of the domain land to the same domain;
    (iii) images of the domain are the landing domains of the orbit points.
    """
    land = landing(tree, z, X, horizon)
    if isinstance(land, NeverLands):
        return {"landed": False, "horizon": horizon}
    k = land.landing_time
    chain = [iterated_image(tree, land.domain, i) for i in range(k)]

    seen = {}
    at_most_once = True
    for i, pid in enumerate(chain):
        for ci in tree.piece(pid).critical_marks:
            if ci in seen:
                at_most_once = False
            seen[ci] = i

    crit = tree.setup.bounded_critical_indices()
    delta = max(tree.setup.criticals[ci].local_degree for ci in crit)
    bound = delta ** len(crit)
    bound_ok = land.landing_degree <= bound

    same_domain_ok = True
    for w in interior_samples(tree, land.domain, AUDIT_SAMPLES, rng):
        try:
            other = landing(tree, w, X, horizon)
        except (AmbiguousCellError, DepthExhaustedError):
            continue
        if isinstance(other, NeverLands) or other.domain != land.domain \
                or other.landing_time != k:
            same_domain_ok = False

    push_ok = True
    w = complex(z)
    for i in range(1, k):
        w = tree.setup.map(w)
        try:
            other = landing(tree, w, X, horizon)
        except (AmbiguousCellError, DepthExhaustedError):
            continue
        if isinstance(other, NeverLands) or other.domain != chain[i] \
                or other.landing_time != k - i:
            push_ok = False

    return {
        "landed": True,
        "landing_time": k,
        "landing_degree": land.landing_degree,
        "degree_bound": bound,
        "meets_critical_once": at_most_once,
        "degree_bound_ok": bound_ok,
        "same_domain_ok": same_domain_ok,
        "pushforward_ok": push_ok,
        "clean": at_most_once and bound_ok and same_domain_ok and push_ok,
    }


def tau(tree: PuzzleTree, p: PieceId):
    """First critical or depth-0 piece on the image chain of p.

    Returns (k, piece); the map up to that point is conformal, which is
    re-audited via the accumulated degree.
    """
    cur = p
    for k in range(p.depth + 1):
        piece = tree.piece(cur)
        if piece.critical_marks or cur.depth == 0:
            assert iterated_degree(tree, p, k) == 1, \
                "chain to the first critical piece must be conformal"
            return k, cur
        cur = piece.image
    raise AssertionError("image chain ended without reaching depth 0")


@dataclass
class SpreadingStep:
    j: int
    new_landing: list
    remaining: list
    undecided: list = field(default_factory=list)


@dataclass
class SpreadingPartition:
    """The inductive split of each depth into landing pieces and the rest.

    ``landing_sets[j]`` collects the depth-j pieces recognized as components
    of the landing region of W; ``remaining_sets[j]`` are the depth-j pieces
    still outside it. Pieces whose membership stayed undecided within the
    horizon are kept on the remaining side and reported.
    """

    W: PieceUnion
    steps: list
    checks: dict

    @property
    def landing_sets(self):
        return [set(map(tuple, s.new_landing)) for s in self.steps]

    @property
    def remaining_sets(self):
        return [set(map(tuple, s.remaining)) for s in self.steps]


def spreading_partition(tree: PuzzleTree, W: PieceUnion, max_j: int,
                        horizon: int = 64) -> SpreadingPartition:
    """Realize the depth-by-depth partition induced by a nice critical union.

    Depth j+1 pieces under a still-remaining parent either are components of
    the landing region of W (their own first landing is themselves, or they
    are members of W) and join X_{j+1}, or they stay in Y_{j+1}. The nesting
    of the Y sets, disjointness of the X sets, and the reduction claim on
    the Y pieces are verified and attached.
    """
    cert = is_nice(tree, W)
    if not cert.nice:
        raise ValueError(f"W is not nice: {cert.counterexample}")
    crit_ok = all(
        any(piece_containing(tree,
                             tree.setup.criticals[ci].location,
                             r.depth) == r for r in W.members)
        for ci in tree.setup.bounded_critical_indices())
    if not crit_ok:
        raise ValueError("W must contain a piece around every bounded "
                         "critical point")
    if max_j > tree.max_depth:
        raise ValueError("max_j exceeds the tree depth")

    steps = [SpreadingStep(j=0, new_landing=[],
                           remaining=[p.id for p in tree.pieces_at(0)])]
    tau_claim_ok = True
    tau_failures = []
    for j in range(max_j):
        prev_remaining = set(steps[-1].remaining)
        new_landing = []
        remaining = []
        undecided = []
        for piece in tree.pieces_at(j + 1):
            if piece.parent not in prev_remaining:
                continue
            if piece.id in W:
                new_landing.append(piece.id)
                continue
            try:
                land = landing(tree, piece.sample, W, horizon)
            except (AmbiguousCellError, DepthExhaustedError):
                # membership undecided at this grid/tree: kept outside,
                # conservatively, and reported
                land = NeverLands(horizon=horizon)
                undecided.append(piece.id)
            if isinstance(land, NeverLands):
                remaining.append(piece.id)
                continue
            if land.domain == piece.id:
                new_landing.append(piece.id)
            else:
                remaining.append(piece.id)
        steps.append(SpreadingStep(j=j + 1, new_landing=new_landing,
                                   remaining=remaining, undecided=undecided))
        for pid in remaining:
            k, target = tau(tree, pid)
            t_piece = tree.piece(target)
            if target.depth == 0:
                continue
            if t_piece.critical_marks and not _piece_in_union(tree, target, W):
                continue
            tau_claim_ok = False
            tau_failures.append({"piece": tuple(pid), "tau": tuple(target)})

    # Y_{j+1} strictly inside Y_j: every remaining piece's parent remains
    y_nested_ok = True
    for s in steps[1:]:
        for pid in s.remaining:
            if tree.piece(pid).parent not in set(steps[s.j - 1].remaining):
                y_nested_ok = False

    # X sets pairwise disjoint across depths: no landing piece sits under
    # another landing piece
    all_landing = [pid for s in steps for pid in s.new_landing]
    x_disjoint_ok = True
    for a in range(len(all_landing)):
        for b in range(a + 1, len(all_landing)):
            if not tree.disjoint(all_landing[a], all_landing[b]):
                x_disjoint_ok = False

    checks = {
        "y_nested": y_nested_ok,
        "x_disjoint": x_disjoint_ok,
        "tau_claim": tau_claim_ok,
        "tau_failures": tau_failures,
        "undecided_total": sum(len(s.undecided) for s in steps),
    }
    return SpreadingPartition(W=W, steps=steps, checks=checks)


def verify_union_nice(tree: PuzzleTree, W1: PieceUnion, W2: PieceUnion,
                      decomposition) -> dict:
    """Niceness of a union of two class-anchored nice unions.

    Hypothesis branch 1: the two classes do not accumulate to each other.
    Branch 2: the second class does not accumulate to the first and the
    second union is at least as deep as the first. The union's niceness is
    then verified directly, so a hypothesis failure plus a nice verdict (or
    the reverse) is visible in the report.
    """
    def classes_of(W):
        out = set()
        for pid in W.members:
            for ci in tree.piece(pid).critical_marks:
                out.add(decomposition.class_of(ci))
        return out

    cls1 = classes_of(W1)
    cls2 = classes_of(W2)
    if cls1 & cls2:
        # the hypothesis branches only cover distinct classes
        union = PieceUnion(tree, list(W1.members) + list(W2.members))
        cert = is_nice(tree, union)
        return {"hypothesis": "none", "nice": cert.nice,
                "counterexample": cert.counterexample,
                "classes": [sorted(cls1), sorted(cls2)],
                "consistent": True}
    arrow_12 = any(decomposition.class_arrow(a, b) and a != b
                   for a in cls1 for b in cls2)
    arrow_21 = any(decomposition.class_arrow(a, b) and a != b
                   for a in cls2 for b in cls1)
    depth_ok = W2.min_depth() >= W1.max_depth()

    if not arrow_12 and not arrow_21:
        hypothesis = "mutual_non_accumulation"
    elif not arrow_21 and depth_ok:
        hypothesis = "depth_inequality"
    else:
        hypothesis = "none"

    union = PieceUnion(tree, list(W1.members) + list(W2.members))
    cert = is_nice(tree, union)
    return {
        "hypothesis": hypothesis,
        "nice": cert.nice,
        "counterexample": cert.counterexample,
        "classes": [sorted(cls1), sorted(cls2)],
        "consistent": (hypothesis == "none") or cert.nice,
    }


def verify_annulus(tree: PuzzleTree, Q: PieceId, Qp: PieceId, P: PieceId,
                   Pp: PieceId, l: int, c0: int, horizon: int) -> dict:
    """Critical-orbit avoidance propagated through an annulus pullback.

    Hypotheses: Q strictly inside Q', the critical point inside P strictly
    inside P', the l-th iterate maps Q onto P and Q' onto P', and the ring
    between P and P' avoids the truncated forward orbits of the critical
    points downstream of c0. Conclusion: every intermediate ring avoids
    those critical points themselves.
    """
    from .combinatorics import build_relation
    # hypothesis (a): strict nesting and the critical anchor
    c0_loc = tree.setup.criticals[c0].location
    if not (tree.strictly_contains(Qp, Q) and tree.strictly_contains(Pp, P)):
        return {"verdict": "not_applicable", "reason": "nesting"}
    if piece_containing(tree, c0_loc, P.depth) != P:
        return {"verdict": "not_applicable", "reason": "critical_anchor"}
    # hypothesis (b): the iterate identities
    if Q.depth != P.depth + l or Qp.depth != Pp.depth + l:
        return {"verdict": "not_applicable", "reason": "depth_mismatch"}
    if iterated_image(tree, Q, l) != P or iterated_image(tree, Qp, l) != Pp:
        return {"verdict": "not_applicable", "reason": "image_mismatch"}

    # forward critical set of c0 on the computed relation
    N = min(tree.max_depth, Pp.depth + l)
    rel = build_relation(tree, N, horizon)
    forw = sorted(rel.forw(c0))

    def in_ring(z, inner, outer):
        try:
            po = piece_containing(tree, z, outer.depth)
            pi = piece_containing(tree, z, inner.depth)
        except AmbiguousCellError:
            return True  # undecidable counts as a hit, conservatively
        return po == outer and pi != inner

    # hypothesis (c): the P ring avoids the truncated orbits
    for ci in forw:
        w = tree.setup.criticals[ci].location
        for n in range(horizon + 1):
            if not np.isfinite(magnitude(w)):
                break
            if in_ring(w, P, Pp):
                return {"verdict": "not_applicable", "reason": "orbit_in_ring",
                        "crit": ci, "power": n}
            w = tree.setup.map(w)

    hits = []
    for i in range(l + 1):
        qi = iterated_image(tree, Q, i)
        qpi = iterated_image(tree, Qp, i)
        for ci in forw:
            if in_ring(tree.setup.criticals[ci].location, qi, qpi):
                hits.append({"i": i, "crit": ci})
    return {"verdict": "holds" if not hits else "violated",
            "forw": forw, "hits": hits, "l": l}
