"""Geometry-free canonicalization of decorated puzzle trees and a
finite-depth combinatorial-equivalence verdict between two maps.

A decorated tree keeps, per depth, each node's parent link, image link,
mapping degree, and an abstract critical label (which critical points sit
inside, identified by index only, never by location). Root nodes carry no
mapping degree: the dynamics is only defined one level in, so two maps
whose outer domains hold the same number of critical points agree at depth
zero regardless of their degrees.

Verdicts always carry the depth they were computed to; equality of
canonical strings is cross-checked constructively by the comparator.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass


@dataclass(frozen=True)
class DecoratedNode:
    parent: int | None
    image: int | None
    local_degree: int   # 1 at depth 0 (no dynamics on the outer domain)
    crit_count: int


@dataclass
class DecoratedTree:
    depths: list  # list of lists of DecoratedNode

    @property
    def depth_extent(self) -> int:
        return len(self.depths) - 1

    def node(self, depth: int, index: int) -> DecoratedNode:
        return self.depths[depth][index]

    def truncated(self, depth: int) -> "DecoratedTree":
        if depth > self.depth_extent:
            raise ValueError("cannot truncate deeper than the extent")
        return DecoratedTree(depths=self.depths[:depth + 1])


def extract(tree, depth: int) -> DecoratedTree:
    """Strip the geometry off a puzzle tree down to the given depth."""
    if depth > tree.max_depth:
        raise ValueError(f"depth {depth} exceeds tree depth {tree.max_depth}")
    depths = []
    for n in range(depth + 1):
        row = []
        for p in tree.pieces_at(n):
            row.append(DecoratedNode(
                parent=None if p.parent is None else p.parent.index,
                image=None if p.image is None else p.image.index,
                local_degree=1 if n == 0 else p.local_degree,
                crit_count=len(p.critical_marks),
            ))
        depths.append(row)
    return DecoratedTree(depths=depths)


def decorated_from_json(doc: dict, depth: int | None = None) -> DecoratedTree:
    """Build a decorated tree from a tree-JSON export."""
    rows = doc["depths"]
    if depth is None:
        depth = len(rows) - 1
    if depth > len(rows) - 1:
        raise ValueError("requested depth exceeds the export")
    depths = []
    for n in range(depth + 1):
        row = []
        for rec in rows[n]:
            row.append(DecoratedNode(
                parent=rec["parent"],
                image=rec["image"],
                local_degree=1 if n == 0 else rec["local_degree"],
                crit_count=len(rec["critical_marks"]),
            ))
        depths.append(row)
    return DecoratedTree(depths=depths)


def _refined_keys(t: DecoratedTree):
    """Iteratively refined node keys over parent, image, and child links.

    Keys are rank-compressed each round so their values are canonical: they
    depend only on the isomorphism type of the neighborhood, never on input
    order or interpreter hashing.
    """
    keys = []
    for n, row in enumerate(t.depths):
        composites = [(n, node.local_degree, node.crit_count) for node in row]
        keys.append(composites)
    keys = _rank_compress(keys)

    children = []
    for n in range(t.depth_extent + 1):
        children.append([[] for _ in t.depths[n]])
    for n in range(1, t.depth_extent + 1):
        for i, node in enumerate(t.depths[n]):
            children[n - 1][node.parent].append((n, i))

    for _ in range(2 * t.depth_extent + 4):
        composites = []
        for n, row in enumerate(t.depths):
            comp_row = []
            for i, node in enumerate(row):
                pk = keys[n - 1][node.parent] if node.parent is not None else -1
                ik = keys[n - 1][node.image] if node.image is not None else -1
                ck = tuple(sorted(keys[cn][ci] for cn, ci in children[n][i]))
                comp_row.append((keys[n][i], pk, ik, ck))
            composites.append(comp_row)
        new_keys = _rank_compress(composites)
        if new_keys == keys:
            break
        keys = new_keys
    return keys


def _rank_compress(composites):
    universe = sorted({c for row in composites for c in row})
    rank = {c: k for k, c in enumerate(universe)}
    return [[rank[c] for c in row] for row in composites]


def _canonical_order(t: DecoratedTree):
    """Per-depth canonical index of every node.

    Depth by depth: sort nodes by refined key, then by the canonical
    positions of their parent and image (both one depth up, already
    numbered). Returns (order, position) lists per depth, where order maps
    canonical slot to original index and position is its inverse.
    """
    keys = _refined_keys(t)
    orders = []
    positions = []
    for n, row in enumerate(t.depths):
        if n == 0:
            sort_key = [(keys[0][i], 0, 0) for i in range(len(row))]
        else:
            pos_prev = positions[n - 1]
            sort_key = [(keys[n][i],
                         pos_prev[row[i].parent],
                         pos_prev[row[i].image])
                        for i in range(len(row))]
        order = sorted(range(len(row)), key=lambda i: sort_key[i])
        pos = [0] * len(row)
        for slot, i in enumerate(order):
            pos[i] = slot
        orders.append(order)
        positions.append(pos)
    return orders, positions


def _canonical_records(t: DecoratedTree):
    orders, positions = _canonical_order(t)
    records = []
    for n, row in enumerate(t.depths):
        rec_row = []
        for slot, i in enumerate(orders[n]):
            node = row[i]
            rec_row.append((
                node.local_degree,
                node.crit_count,
                None if node.parent is None else positions[n - 1][node.parent],
                None if node.image is None else positions[n - 1][node.image],
            ))
        records.append(rec_row)
    return records, orders


def canonical_form(t: DecoratedTree) -> bytes:
    """Canonical serialization; equal strings identify isomorphic trees.

    The string lists every node in canonical order with its decorations and
    the canonical positions of its links, so equality of strings yields an
    explicit structure-preserving bijection.
    """
    records, _ = _canonical_records(t)
    parts = []
    for n, row in enumerate(records):
        parts.append(f"depth {n}:")
        for rec in row:
            parts.append(repr(rec))
    return "\n".join(parts).encode("ascii")


def canonical_digest(t: DecoratedTree) -> str:
    return hashlib.sha256(canonical_form(t)).hexdigest()


@dataclass
class EquivalenceVerdict:
    isomorphic: bool
    depth_checked: int
    mapping: list | None          # per depth, list of (index1, index2)
    mismatch_depth: int | None
    witness: dict | None

    def to_json(self) -> dict:
        return {
            "schema": "polypuzzle.compare/1",
            "isomorphic": self.isomorphic,
            "depth_checked": self.depth_checked,
            "mapping": self.mapping,
            "mismatch_depth": self.mismatch_depth,
            "witness": self.witness,
        }


def _path_witness(t: DecoratedTree, orders, depth: int, slot: int) -> list:
    """Canonical parent path from a root down to the offending slot."""
    if not t.depths[depth]:
        return []
    slot = min(slot, len(t.depths[depth]) - 1)
    idx = orders[depth][slot]
    path = []
    n = depth
    while n >= 0:
        node = t.depths[n][idx]
        path.append({
            "depth": n,
            "index": idx,
            "local_degree": node.local_degree,
            "crit_count": node.crit_count,
        })
        idx = node.parent
        n -= 1
        if idx is None:
            break
    return list(reversed(path))


def compare(t1: DecoratedTree, t2: DecoratedTree, depth: int) -> EquivalenceVerdict:
    """Match the two trees depth by depth in canonical order.

    Either an explicit node mapping commuting with parent and image links
    and preserving decorations, or the shallowest mismatch with a path
    witness from a root. The mismatch depth is minimal: truncating both
    trees above it gives isomorphic trees.
    """
    if depth > t1.depth_extent or depth > t2.depth_extent:
        raise ValueError("both trees must be extracted to the requested depth")
    a = t1.truncated(depth)
    b = t2.truncated(depth)
    rec1, ord1 = _canonical_records(a)
    rec2, ord2 = _canonical_records(b)

    mapping = []
    for n in range(depth + 1):
        if len(rec1[n]) != len(rec2[n]):
            return EquivalenceVerdict(
                isomorphic=False, depth_checked=depth, mapping=None,
                mismatch_depth=n,
                witness={
                    "kind": "count",
                    "count_1": len(rec1[n]),
                    "count_2": len(rec2[n]),
                    "path_1": _path_witness(a, ord1, n, min(len(rec1[n]),
                                                            len(rec2[n]))),
                    "path_2": _path_witness(b, ord2, n, min(len(rec1[n]),
                                                            len(rec2[n]))),
                })
        for slot in range(len(rec1[n])):
            if rec1[n][slot] != rec2[n][slot]:
                return EquivalenceVerdict(
                    isomorphic=False, depth_checked=depth, mapping=None,
                    mismatch_depth=n,
                    witness={
                        "kind": "decoration",
                        "slot": slot,
                        "record_1": list(rec1[n][slot]),
                        "record_2": list(rec2[n][slot]),
                        "path_1": _path_witness(a, ord1, n, slot),
                        "path_2": _path_witness(b, ord2, n, slot),
                    })
        mapping.append([[ord1[n][slot], ord2[n][slot]]
                        for slot in range(len(rec1[n]))])

    # constructively verify that the slot pairing commutes with the links
    for n in range(1, depth + 1):
        pos2 = {orig: slot for slot, orig in enumerate(ord2[n - 1])}
        pos1 = {orig: slot for slot, orig in enumerate(ord1[n - 1])}
        for slot in range(len(mapping[n])):
            i1, i2 = mapping[n][slot]
            n1 = a.depths[n][i1]
            n2 = b.depths[n][i2]
            if pos1[n1.parent] != pos2[n2.parent] or \
                    pos1[n1.image] != pos2[n2.image]:
                return EquivalenceVerdict(
                    isomorphic=False, depth_checked=depth, mapping=None,
                    mismatch_depth=n,
                    witness={"kind": "link", "slot": slot})
    return EquivalenceVerdict(isomorphic=True, depth_checked=depth,
                              mapping=mapping, mismatch_depth=None,
                              witness=None)
