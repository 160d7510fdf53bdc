"""Branner-Hubbard tableaux over a puzzle tree, with the three rules as
executable checks.

The tableau of a point x records, for depth m and time j, the depth-m piece
containing f^j(x). Entries are stored directly by (depth, column); the rule
checkers translate the classical staircase coordinates internally. Entries
past orbit escape (or on unresolvable cells) are None and are skipped by
the checkers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import AmbiguousCellError, ConfidenceTooLowError, OrbitEscapedError
from .mapmodel import magnitude
from .puzzle import PieceId, PuzzleTree, piece_containing

PERIODICITY_CONFIDENCE_DEPTH = 5


@dataclass
class Tableau:
    tree: PuzzleTree
    origin: complex
    depth_extent: int
    width_extent: int
    entries: list  # entries[m][j] -> PieceId | None
    marks: list    # marks[m][j] -> frozenset of critical indices
    orbit: list    # f^j(origin) for j = 0..W
    ambiguous: list = field(default_factory=list)

    def entry(self, m: int, j: int):
        return self.entries[m][j]

    def mark(self, m: int, j: int):
        return self.marks[m][j]

    def is_critical(self, m: int, j: int) -> bool:
        mk = self.marks[m][j]
        return bool(mk) if mk is not None else False

    def to_json(self) -> dict:
        return {
            "schema": "polypuzzle.tableau/1",
            "origin": [self.origin.real, self.origin.imag],
            "depth_extent": self.depth_extent,
            "width_extent": self.width_extent,
            "entries": [[None if e is None else [e.depth, e.index] for e in row]
                        for row in self.entries],
            "marks": [[None if m is None else sorted(m) for m in row]
                      for row in self.marks],
        }


def build_tableau(tree: PuzzleTree, x: complex, depth_extent: int,
                  width_extent: int) -> Tableau:
    """Fill entries along the orbit of x via piece lookups.

    Raises OrbitEscapedError when x itself is not inside a piece of the
    requested depth; later orbit points that leave the domain simply yield
    None entries.
    """
    if depth_extent > tree.max_depth:
        raise ValueError(f"depth_extent {depth_extent} exceeds tree depth "
                         f"{tree.max_depth}")
    if piece_containing(tree, x, depth_extent) is None:
        raise OrbitEscapedError(
            f"origin {x} is not inside any depth-{depth_extent} piece",
            origin=[x.real, x.imag], depth=depth_extent)

    orbit = [complex(x)]
    for _ in range(width_extent):
        orbit.append(tree.setup.map(orbit[-1]))

    entries = [[None] * (width_extent + 1) for _ in range(depth_extent + 1)]
    marks = [[None] * (width_extent + 1) for _ in range(depth_extent + 1)]
    ambiguous = []
    for m, j in product(range(depth_extent + 1), range(width_extent + 1)):
        w = orbit[j]
        if not np.isfinite(magnitude(w)):
            continue
        try:
            pid = piece_containing(tree, w, m)
        except AmbiguousCellError:
            ambiguous.append((m, j))
            continue
        if pid is not None:
            entries[m][j] = pid
            marks[m][j] = tree.piece(pid).critical_marks
    return Tableau(tree=tree, origin=complex(x), depth_extent=depth_extent,
                   width_extent=width_extent, entries=entries, marks=marks,
                   orbit=orbit, ambiguous=ambiguous)


def _point_column(tree: PuzzleTree, y: complex, depth: int):
    """P_m(y) for m = 0..depth; None entries where undecidable."""
    col = []
    for m in range(depth + 1):
        try:
            col.append(piece_containing(tree, y, m))
        except AmbiguousCellError:
            col.append(None)
    return col


def verify_rule1(t: Tableau, y_points=None):
    """Vertical rule: a y-vertex at depth m forces y-vertices above it.

    ``y_points`` defaults to the bounded critical points of the tree's map.
    Returns a violation list of (y_label, m, j, i) tuples.
    """
    tree = t.tree
    if y_points is None:
        y_points = {f"c{i}": tree.setup.criticals[i].location
                    for i in tree.setup.bounded_critical_indices()}
    violations = []
    for label, y in y_points.items():
        ycol = _point_column(tree, complex(y), t.depth_extent)
        for m in range(t.depth_extent + 1):
            for j in range(t.width_extent + 1):
                if t.entries[m][j] is None or ycol[m] is None:
                    continue
                if t.entries[m][j] != ycol[m]:
                    continue
                for i in range(m):
                    if t.entries[i][j] is None or ycol[i] is None:
                        continue
                    if t.entries[i][j] != ycol[i]:
                        violations.append((label, m, j, i))
    return violations


def verify_rule2(t: Tableau, tree: PuzzleTree | None = None):
    """Diagonal rule: a y-vertex at (m, j) forces the piece of f^i(y) at
    depth m-i to sit at (m-i, j+i).

    y ranges over the bounded critical points; their orbits are recomputed
    independently of the tableau's own orbit.
    """
    if tree is None:
        tree = t.tree
    violations = []
    for ci in tree.setup.bounded_critical_indices():
        c = tree.setup.criticals[ci].location
        orbit = [complex(c)]
        for _ in range(t.width_extent):
            orbit.append(tree.setup.map(orbit[-1]))
        for m in range(t.depth_extent + 1):
            for j in range(t.width_extent + 1):
                if t.marks[m][j] is None or ci not in t.marks[m][j]:
                    continue
                for i in range(m + 1):
                    if j + i > t.width_extent:
                        break
                    got = t.entries[m - i][j + i]
                    if got is None:
                        continue
                    try:
                        want = piece_containing(tree, orbit[i], m - i)
                    except AmbiguousCellError:
                        continue
                    if want is not None and got != want:
                        violations.append((ci, m, j, i))
    return violations


def verify_rule3(t1: Tableau, t2: Tableau, m0: int, n0: int, i0: int,
                 n1: int, c1: int, c2: int) -> str:
    """One instance of the two-tableau exclusion rule.

    Checks the hypotheses verbatim and returns "not_applicable" when any of
    them fails, else "holds" or "violated" by the conclusion vertex.
    """
    if m0 < 1 or n0 < 0 or i0 < 1 or n1 < 1 or i0 > m0 + 1:
        return "not_applicable"
    if m0 + 1 > t1.depth_extent or n0 + i0 > t1.width_extent:
        return "not_applicable"
    if m0 + 1 > t2.depth_extent or n1 + i0 > t2.width_extent:
        return "not_applicable"

    def has(t, m, j, ci):
        mk = t.marks[m][j]
        return mk is not None and ci in mk

    # (i) in t1: a c1-vertex at depth m0+1 followed i0 steps later on the
    # diagonal by a c2-vertex
    if not has(t1, m0 + 1, n0, c1):
        return "not_applicable"
    if not has(t1, m0 + 1 - i0, n0 + i0, c2):
        return "not_applicable"
    # (ii) in t2: a c1-vertex at depth m0 whose vertex one deeper is not
    # critical
    if not has(t2, m0, n1, c1):
        return "not_applicable"
    if t2.marks[m0 + 1][n1] is None or t2.marks[m0 + 1][n1]:
        return "not_applicable"
    # side condition in t1: the diagonal strictly between is critical-free
    for i in range(1, i0):
        mk = t1.marks[m0 - i][n0 + i]
        if mk is None or mk:
            return "not_applicable"

    conclusion = t2.marks[m0 + 1 - i0][n1 + i0]
    if conclusion is None:
        return "not_applicable"
    return "violated" if conclusion else "holds"


def rule3_full_scan(t1: Tableau, t2: Tableau):
    """Scan every admissible instance of the exclusion rule for the pair.

    Returns (checked, violations) where violations lists the offending
    coordinate tuples. Enumeration starts from actual critical vertices so
    the scan stays proportional to the number of marks.
    """
    crit_ids = sorted(t1.tree.setup.bounded_critical_indices())
    c1_sites_t1 = {}
    for ci in crit_ids:
        c1_sites_t1[ci] = [(m, j)
                           for m in range(1, t1.depth_extent + 1)
                           for j in range(t1.width_extent + 1)
                           if t1.marks[m][j] is not None and ci in t1.marks[m][j]]
    checked = 0
    violations = []
    for c1 in crit_ids:
        for (mm, n0) in c1_sites_t1[c1]:
            m0 = mm - 1
            if m0 < 1:
                continue
            for i0 in range(1, m0 + 2):
                if n0 + i0 > t1.width_extent:
                    break
                mk = t1.marks[m0 + 1 - i0][n0 + i0]
                if mk is None or not mk:
                    continue
                for c2 in sorted(mk):
                    for n1 in range(1, t2.width_extent + 1):
                        verdict = verify_rule3(t1, t2, m0, n0, i0, n1, c1, c2)
                        if verdict != "not_applicable":
                            checked += 1
                        if verdict == "violated":
                            violations.append((m0, n0, i0, n1, c1, c2))
    return checked, violations


def periodic_column(t: Tableau, crit_index: int,
                    confidence_depth: int = PERIODICITY_CONFIDENCE_DEPTH):
    """Finite-depth periodicity certificate for the critical component.

    Returns the smallest column j >= 1 on which every computed vertex down
    to depth D-j is a vertex of the origin's own pieces, provided D-j stays
    at or above the confidence depth. Returns None when no column repeats;
    raises ConfidenceTooLowError when repeating columns exist but none is
    deep enough to certify.
    """
    tree = t.tree
    c = tree.setup.criticals[crit_index].location
    if abs(c - t.origin) > 1e-9:
        raise ValueError("tableau origin must be the critical point itself")
    shallow_candidates = []
    for j in range(1, t.width_extent + 1):
        depth_avail = t.depth_extent - j
        if depth_avail < 0:
            break
        all_c = True
        for m in range(depth_avail + 1):
            if t.entries[m][j] is None or t.entries[m][j] != t.entries[m][0]:
                all_c = False
                break
        if not all_c:
            continue
        if depth_avail >= confidence_depth:
            return j
        shallow_candidates.append(j)
    if shallow_candidates:
        raise ConfidenceTooLowError(
            f"columns {shallow_candidates} repeat but only to depth "
            f"{t.depth_extent - shallow_candidates[0]}, below the confidence "
            f"depth {confidence_depth}",
            candidates=shallow_candidates)
    return None


def render_ascii(t: Tableau) -> str:
    """Rows are depths (0 at top), columns are time steps.

    Cell glyphs: '.' for a non-critical vertex, the sorted critical indices
    for a critical one, blank where the entry is undefined.
    """
    width = 1
    for row in t.marks:
        for mk in row:
            if mk:
                width = max(width, len("".join(str(i) for i in sorted(mk))))
    lines = []
    header = "    " + " ".join(f"{j:>{width}}" for j in range(t.width_extent + 1))
    lines.append(header)
    for m in range(t.depth_extent + 1):
        cells = []
        for j in range(t.width_extent + 1):
            if t.entries[m][j] is None:
                cells.append(" " * width)
            elif t.marks[m][j]:
                cells.append("".join(str(i) for i in sorted(t.marks[m][j])).rjust(width))
            else:
                cells.append(".".rjust(width))
        lines.append(f"{m:>3} " + " ".join(cells))
    return "\n".join(lines)
