"""Named invariant suites driven by the CLI ``verify`` subcommand.

Each suite yields JSON-line records {"lemma", "instance", "verdict",
"witnesses"}; a run is clean when no record carries the verdict
"violation". The suites are the executable form of the combinatorial facts
the pipeline relies on, run against a concrete tree.
"""

from __future__ import annotations

import numpy as np

from .combinatorics import build_decomposition
from .errors import AmbiguousCellError, DepthExhaustedError, PolypuzzleError
from .landing import (
    NeverLands,
    PieceUnion,
    is_nice,
    landing,
    spreading_partition,
    verify_annulus,
    verify_corollary_32,
    verify_lemma_basic,
    verify_union_nice,
)
from .puzzle import interior_samples, piece_containing
from .tableau import build_tableau, rule3_full_scan, verify_rule1, verify_rule2

SUITE_NAMES = ("rules", "lemma31", "corollary32", "decomposition",
               "unionnice", "annulus", "spreading")


def _record(lemma, instance, ok, witnesses=None, verdict=None):
    return {
        "lemma": lemma,
        "instance": instance,
        "verdict": verdict if verdict is not None else
        ("ok" if ok else "violation"),
        "witnesses": witnesses,
    }


def _critical_tableaux(tree, depth, width):
    out = {}
    for ci in tree.setup.bounded_critical_indices():
        loc = tree.setup.criticals[ci].location
        out[ci] = build_tableau(tree, loc, depth, width)
    return out


def suite_rules(tree, depth=None, width=None, **_):
    if depth is None:
        depth = tree.max_depth
    if width is None:
        width = min(4 * depth, 48)
    tabs = _critical_tableaux(tree, depth, width)
    records = []
    for ci, t in tabs.items():
        v1 = verify_rule1(t)
        records.append(_record("rule1", {"origin": ci, "D": depth, "W": width},
                               not v1, witnesses=v1 or None))
        v2 = verify_rule2(t)
        records.append(_record("rule2", {"origin": ci, "D": depth, "W": width},
                               not v2, witnesses=v2 or None))
    keys = sorted(tabs)
    for a in keys:
        for b in keys:
            checked, violations = rule3_full_scan(tabs[a], tabs[b])
            records.append(_record(
                "rule3", {"pair": [a, b], "checked": checked},
                not violations, witnesses=violations or None))
    return records


def nice_union_corpus(tree, decomposition=None):
    """Nice piece unions exercised by the landing suites.

    Single critical pieces at two depths, plus one union with a deep piece
    per class at layer-compatible depths when the tree has several classes.
    """
    out = []
    crit = tree.setup.bounded_critical_indices()
    maxd = tree.max_depth
    # member depth m leaves room for landing domains at m + k <= max depth
    cap = max(1, maxd - 1)
    for ci in crit:
        loc = tree.setup.criticals[ci].location
        for depth in {min(2, cap), min(3, cap)}:
            pid = piece_containing(tree, loc, depth)
            if pid is not None:
                out.append((f"P_{depth}(c{ci})", PieceUnion(tree, [pid])))
    if decomposition is not None and len(decomposition.classes) >= 1:
        members = _class_union_members(tree, decomposition)
        if members:
            union = PieceUnion(tree, members)
            if is_nice(tree, union).nice:
                out.append(("class_union", union))
    # dedupe by member tuple
    seen = set()
    uniq = []
    for name, u in out:
        if u.members not in seen:
            seen.add(u.members)
            uniq.append((name, u))
    return uniq


def _class_union_members(tree, decomposition, base_depth=None):
    """One piece per critical point, deeper for lower layers."""
    n_layers = len(decomposition.layers)
    if base_depth is None:
        base_depth = max(1, min(3, tree.max_depth - n_layers))
    members = []
    for k, layer in enumerate(decomposition.layers):
        depth = base_depth + (n_layers - 1 - k)
        if depth > tree.max_depth:
            return []
        for cls_id in layer:
            for ci in decomposition.classes[cls_id]:
                loc = tree.setup.criticals[ci].location
                pid = piece_containing(tree, loc, depth)
                if pid is None:
                    return []
                if pid not in members:
                    members.append(pid)
    return members


def _sample_landing_points(tree, X, count, horizon, rng):
    """Up to ``count`` grid points with a successful landing into X."""
    roots = [p.id for p in tree.pieces_at(min(1, tree.max_depth))]
    pool = []
    for pid in roots:
        pool.extend(interior_samples(tree, pid, 4 * count, rng))
    rng.shuffle(pool)
    picked = []
    for z in pool:
        if len(picked) >= count:
            break
        try:
            land = landing(tree, z, X, horizon)
        except (AmbiguousCellError, DepthExhaustedError):
            continue
        if not isinstance(land, NeverLands):
            picked.append(z)
    return picked


def suite_lemma31(tree, seed=0, samples=50, horizon=64, decomposition=None, **_):
    rng = np.random.default_rng(seed)
    records = []
    for name, X in nice_union_corpus(tree, decomposition):
        pts = _sample_landing_points(tree, X, samples, horizon, rng)
        for z in pts:
            rep = verify_lemma_basic(tree, z, X, horizon)
            records.append(_record(
                "landing_disjointness",
                {"X": name, "z": [z.real, z.imag]},
                rep.get("clean", False), witnesses=rep))
    return records


def suite_corollary32(tree, seed=0, samples=50, horizon=64,
                      decomposition=None, **_):
    rng = np.random.default_rng(seed)
    records = []
    for name, X in nice_union_corpus(tree, decomposition):
        pts = _sample_landing_points(tree, X, samples, horizon, rng)
        for z in pts:
            rep = verify_corollary_32(tree, z, X, horizon, rng=rng)
            records.append(_record(
                "landing_degree_bound",
                {"X": name, "z": [z.real, z.imag]},
                rep.get("clean", False), witnesses=rep))
    return records


def suite_decomposition(tree, N=None, J=64, **_):
    if N is None:
        N = min(tree.max_depth, 6)
    records = []
    try:
        dec = build_decomposition(tree, N, J)
    except PolypuzzleError as exc:
        return [_record("decomposition", {"N": N, "J": J}, False,
                        witnesses={"error": exc.code, "details": exc.details})]
    for prop, ok in dec.properties.items():
        records.append(_record(f"decomposition_{prop}", {"N": N, "J": J}, ok,
                               witnesses=dec.to_json() if not ok else None))
    trans = dec.relation.transitivity_violations()
    records.append(_record("accumulation_transitivity", {"N": N, "J": J},
                           not trans, witnesses=trans or None))
    return records


def suite_unionnice(tree, N=None, J=64, **_):
    if N is None:
        N = min(tree.max_depth, 6)
    dec = build_decomposition(tree, N, J)
    records = []
    n_cls = len(dec.classes)
    if n_cls < 2:
        members = _class_union_members(tree, dec)
        if members:
            cert = is_nice(tree, PieceUnion(tree, members))
            records.append(_record("union_nice_single_class", {}, cert.nice,
                                   witnesses=cert.counterexample))
        return records
    for a in range(n_cls):
        for b in range(n_cls):
            if a == b:
                continue
            la = dec.layer_of_class(a)
            lb = dec.layer_of_class(b)
            base = max(1, min(2, tree.max_depth - 1))
            depth_a = base if la >= lb else min(base + 1, tree.max_depth)
            depth_b = base if lb >= la else min(base + 1, tree.max_depth)
            try:
                W1 = PieceUnion(tree, [
                    piece_containing(tree, tree.setup.criticals[ci].location,
                                     depth_a)
                    for ci in dec.classes[a]])
                W2 = PieceUnion(tree, [
                    piece_containing(tree, tree.setup.criticals[ci].location,
                                     depth_b)
                    for ci in dec.classes[b]])
            except ValueError:
                continue
            rep = verify_union_nice(tree, W1, W2, dec)
            records.append(_record(
                "union_nice", {"classes": [a, b],
                               "depths": [depth_a, depth_b],
                               "hypothesis": rep["hypothesis"]},
                rep["consistent"], witnesses=rep))
    return records


def suite_annulus(tree, horizon=48, max_l=3, N=None, J=64, **_):
    records = []
    crit = tree.setup.bounded_critical_indices()
    for c0 in crit:
        loc = tree.setup.criticals[c0].location
        for outer_depth in range(0, min(3, tree.max_depth - 1) + 1):
            Pp = piece_containing(tree, loc, outer_depth)
            P = piece_containing(tree, loc, outer_depth + 1)
            if Pp is None or P is None:
                continue
            for l in range(1, max_l + 1):
                if P.depth + l > tree.max_depth:
                    break
                for piece in tree.pieces_at(P.depth + l):
                    from .puzzle import iterated_image
                    if iterated_image(tree, piece.id, l) != P:
                        continue
                    Qp = tree.ancestor(piece.id, Pp.depth + l)
                    if iterated_image(tree, Qp, l) != Pp:
                        continue
                    rep = verify_annulus(tree, piece.id, Qp, P, Pp, l, c0,
                                         horizon)
                    records.append(_record(
                        "annulus", {"c0": c0, "l": l,
                                    "Q": tuple(piece.id), "Qp": tuple(Qp),
                                    "P": tuple(P), "Pp": tuple(Pp)},
                        rep["verdict"] != "violated",
                        witnesses=rep,
                        verdict={"holds": "ok",
                                 "violated": "violation",
                                 "not_applicable": "not_applicable"}[rep["verdict"]]))
    return records


def suite_spreading(tree, max_j=None, horizon=64, N=None, J=64, **_):
    if N is None:
        N = min(tree.max_depth, 6)
    dec = build_decomposition(tree, N, J)
    members = _class_union_members(tree, dec)
    if not members:
        return [_record("spreading", {}, False,
                        witnesses={"error": "no class union available"})]
    W = PieceUnion(tree, members)
    if max_j is None:
        max_j = tree.max_depth
    max_j = min(max_j, tree.max_depth)
    part = spreading_partition(tree, W, max_j, horizon=horizon)
    records = []
    for key in ("y_nested", "x_disjoint", "tau_claim"):
        records.append(_record(
            f"spreading_{key}",
            {"W": [tuple(m) for m in W.members], "max_j": max_j},
            part.checks[key],
            witnesses=None if part.checks[key] else part.checks))
    return records


SUITES = {
    "rules": suite_rules,
    "lemma31": suite_lemma31,
    "corollary32": suite_corollary32,
    "decomposition": suite_decomposition,
    "unionnice": suite_unionnice,
    "annulus": suite_annulus,
    "spreading": suite_spreading,
}


def run_suite(name, tree, **kwargs):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return SUITES[name](tree, **kwargs)
