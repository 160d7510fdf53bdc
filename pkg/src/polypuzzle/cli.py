"""Command-line surface tying the pipeline together.

Subcommands: analyze | render | tableau | classify | verify | compare |
export. Exit codes: 0 success, 1 verification violations, 2 invalid input
or failed validation, 3 resolution exhaustion. Identical configuration and
seed produce byte-identical bundles; the manifest records the resolved
configuration and the checksum of every output file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .combinatorics import (
    build_decomposition,
    case_of,
    classify,
    normalize_star_star,
)
from .compare import compare as compare_trees
from .compare import decorated_from_json
from .errors import (
    InvalidSetupError,
    NoBoundedCriticalError,
    PolypuzzleError,
    ResolutionExhaustedError,
    VDisconnectedError,
)
from .jsonio import dump_file, dump_jsonl, dumps_canonical, load_file
from .mapmodel import build_setup, map_from_json
from .puzzle import build_tree, masks_to_json, tree_to_json
from .raster import GridSpec
from .suites import SUITE_NAMES, run_suite
from .tableau import build_tableau, render_ascii

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INVALID = 2
EXIT_RESOLUTION = 3


def _fail(msg: str, code: int) -> int:
    print(f"polypuzzle: error: {msg}", file=sys.stderr)
    return code


def _load_setup(args):
    try:
        doc = load_file(args.map)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSetupError(f"cannot parse map file {args.map}: {exc}")
    try:
        pm, level_r, grid, options = map_from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSetupError(f"malformed map description: {exc}")
    if args.resolution is not None:
        grid = GridSpec(grid.center, grid.half_width, args.resolution)
    setup = build_setup(pm, level_r, grid,
                        allow_disconnected_v=options["allow_disconnected_v"],
                        name=options["name"] or Path(args.map).stem)
    if not setup.validation.ok:
        raise InvalidSetupError(
            "restriction failed validation: "
            + "; ".join(setup.validation.notes or ["see report"]),
            report=setup.validation.to_json())
    return setup


def _config_doc(args, setup, extras=None):
    doc = {
        "map_file": str(args.map),
        "map_sha256": hashlib.sha256(
            Path(args.map).read_bytes()).hexdigest(),
        "depth": args.depth,
        "resolution": setup.grid.resolution,
        "horizon": args.horizon,
        "seed": args.seed,
        "name": setup.name,
    }
    if extras:
        doc.update(extras)
    return doc


def cmd_analyze(args) -> int:
    setup = _load_setup(args)
    tree = build_tree(setup, args.depth)
    N = min(args.depth, max(1, args.depth - 1))
    dec = build_decomposition(tree, N, args.horizon)
    search_depth = max(1, min(6, tree.max_depth - 1))
    cls = classify(tree, dec, N, args.horizon, search_depth, strict=False)
    cases = {str(ci): case_of(cls, dec, ci)
             for ci in dec.relation.crit_indices}
    n0 = normalize_star_star(tree, N, args.horizon, relation=dec.relation)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checks = {}
    tree_doc = tree_to_json(tree)
    tree_doc["validation"] = setup.validation.to_json()
    checks["tree.json"] = dump_file(tree_doc, out / "tree.json")
    checks["decomposition.json"] = dump_file(dec.to_json(),
                                             out / "decomposition.json")
    cls_doc = cls.to_json()
    cls_doc["cases"] = cases
    cls_doc["separation_depth"] = n0
    checks["classification.json"] = dump_file(cls_doc,
                                              out / "classification.json")
    manifest = {
        "tool": "polypuzzle",
        "version": __version__,
        "config": _config_doc(args, setup),
        "outputs": {k: f"sha256:{v}" for k, v in sorted(checks.items())},
    }
    dump_file(manifest, out / "manifest.json")
    print(f"analyze: wrote bundle to {out} "
          f"(depth {tree.max_depth}, {sum(tree.piece_count(n) for n in range(tree.max_depth + 1))} pieces)")
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import render_depths
    setup = _load_setup(args)
    try:
        tree = build_tree(setup, args.depth)
    except ResolutionExhaustedError as exc:
        if exc.partial_tree is None:
            raise
        tree = exc.partial_tree
        print(f"render: resolution exhausted below depth "
              f"{exc.resolved_depth}; rendering what was resolved",
              file=sys.stderr)
    depths = args.depths if args.depths else list(range(tree.max_depth + 1))
    written, skipped = render_depths(tree, depths, args.out,
                                     vector=args.vector)
    for path in written:
        print(f"render: wrote {path}")
    for depth in skipped:
        print(f"render: warning: depth {depth} beyond resolved depth "
              f"{tree.max_depth}, skipped", file=sys.stderr)
    return EXIT_OK


def cmd_tableau(args) -> int:
    setup = _load_setup(args)
    tree = build_tree(setup, args.depth)
    width = args.width if args.width else min(4 * args.depth, 48)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ci in tree.setup.bounded_critical_indices():
        loc = setup.criticals[ci].location
        t = build_tableau(tree, loc, args.depth, width)
        print(f"tableau for critical point {ci} at "
              f"{loc:.6g} (rows: depth, cols: time):")
        print(render_ascii(t))
        print()
        dump_file(t.to_json(), out / f"tableau_c{ci}.json")
    return EXIT_OK


def cmd_classify(args) -> int:
    setup = _load_setup(args)
    tree = build_tree(setup, args.depth)
    N = min(args.depth, max(1, args.depth - 1))
    dec = build_decomposition(tree, N, args.horizon)
    search_depth = max(1, min(6, tree.max_depth - 1))
    cls = classify(tree, dec, N, args.horizon, search_depth, strict=False)
    doc = cls.to_json()
    doc["cases"] = {str(ci): case_of(cls, dec, ci)
                    for ci in dec.relation.crit_indices}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_file(doc, out / "classification.json")
    for rec in doc["critical_points"]:
        flag = " periodic" if rec["periodic"] else ""
        print(f"critical point {rec['index']}: {rec['tag']}{flag}")
    return EXIT_OK


def cmd_verify(args) -> int:
    setup = _load_setup(args)
    try:
        tree = build_tree(setup, args.depth)
    except ResolutionExhaustedError as exc:
        if exc.partial_tree is None:
            raise
        tree = exc.partial_tree
    records = run_suite(args.suite, tree, seed=args.seed,
                        horizon=args.horizon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = out / f"verify_{args.suite}.jsonl"
    dump_jsonl(records, report)
    violations = [r for r in records if r["verdict"] == "violation"]
    print(f"verify[{args.suite}]: {len(records)} checks, "
          f"{len(violations)} violation(s); report at {report}")
    for v in violations[:10]:
        print(f"  violation: {json.dumps(v['instance'], sort_keys=True)}",
              file=sys.stderr)
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_compare(args) -> int:
    doc1 = load_file(args.tree1)
    doc2 = load_file(args.tree2)
    depth = args.depth
    if depth is None:
        depth = min(len(doc1["depths"]), len(doc2["depths"])) - 1
    t1 = decorated_from_json(doc1, depth)
    t2 = decorated_from_json(doc2, depth)
    verdict = compare_trees(t1, t2, depth)
    doc = verdict.to_json()
    doc["inputs"] = [str(args.tree1), str(args.tree2)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_file(doc, out / "compare.json")
    sys.stdout.write(dumps_canonical(doc))
    return EXIT_OK if verdict.isomorphic else EXIT_VIOLATIONS


def cmd_export(args) -> int:
    setup = _load_setup(args)
    tree = build_tree(setup, args.depth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_file(tree_to_json(tree), out / "tree.json")
    dump_file(masks_to_json(tree), out / "piece_masks.json")
    with open(out / "pieces.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth", "index", "parent", "image", "local_degree",
                         "critical_marks", "cells"])
        for n in range(tree.max_depth + 1):
            for p in tree.pieces_at(n):
                writer.writerow([
                    n, p.id.index,
                    "" if p.parent is None else p.parent.index,
                    "" if p.image is None else p.image.index,
                    p.local_degree,
                    ";".join(str(c) for c in sorted(p.critical_marks)),
                    p.cell_count,
                ])
    print(f"export: wrote tree.json, piece_masks.json, pieces.csv to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polypuzzle",
        description="Puzzle-piece combinatorics of polynomial maps on "
                    "equipotential domains")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_map=True):
        if needs_map:
            p.add_argument("map", help="map description JSON file")
        p.add_argument("--depth", type=int, default=6,
                       help="puzzle depth (default 6)")
        p.add_argument("--resolution", type=int, default=None,
                       help="override the grid resolution from the map file")
        p.add_argument("--horizon", type=int, default=64,
                       help="orbit horizon for landings and accumulation")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for sampled audits")
        p.add_argument("--out", default="out", help="output directory")

    common(sub.add_parser("analyze", help="full pipeline to a JSON bundle"))
    p = sub.add_parser("render", help="piece maps as image files")
    common(p)
    p.add_argument("--depths", type=int, nargs="*", default=None,
                   help="depths to render (default: all resolved)")
    p.add_argument("--vector", action="store_true",
                   help="also write vector (SVG) outlines")
    p = sub.add_parser("tableau", help="tableaux at the critical points")
    common(p)
    p.add_argument("--width", type=int, default=None,
                   help="tableau width (default 4*depth, capped at 48)")
    common(sub.add_parser("classify", help="critical point classification"))
    p = sub.add_parser("verify", help="run a named invariant suite")
    common(p)
    p.add_argument("--suite", required=True, choices=SUITE_NAMES)
    p = sub.add_parser("compare", help="compare two tree JSON exports")
    p.add_argument("tree1")
    p.add_argument("tree2")
    p.add_argument("--depth", type=int, default=None,
                   help="depth to compare to (default: common extent)")
    p.add_argument("--out", default="out")
    common(sub.add_parser("export", help="tree JSON, RLE masks, CSV summary"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "analyze": cmd_analyze,
        "render": cmd_render,
        "tableau": cmd_tableau,
        "classify": cmd_classify,
        "verify": cmd_verify,
        "compare": cmd_compare,
        "export": cmd_export,
    }
    try:
        return handlers[args.command](args)
    except ResolutionExhaustedError as exc:
        return _fail(f"{exc} (resolved depth {exc.resolved_depth})",
                     EXIT_RESOLUTION)
    except (InvalidSetupError, VDisconnectedError,
            NoBoundedCriticalError) as exc:
        return _fail(str(exc), EXIT_INVALID)
    except PolypuzzleError as exc:
        return _fail(f"[{exc.code}] {exc}", EXIT_INVALID)


if __name__ == "__main__":
    sys.exit(main())
