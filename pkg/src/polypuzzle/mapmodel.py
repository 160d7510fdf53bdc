"""Polynomial maps restricted between equipotential domains.

A map of degree d together with a level r defines the outer domain
V = {G < r} and the inner domain U = f^{-1}(V) = {G < r/d}, where G is the
escape-rate potential. ``build_setup`` packages the map, the level, and a
raster grid into a validated restriction that the puzzle machinery consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import raster
from .errors import (
    NoBoundedCriticalError,
    RootFindingError,
    VDisconnectedError,
)
from .raster import GridSpec

# Forward orbits of non-escaping critical points have potential exactly 0 in
# exact arithmetic; anything below this is treated as bounded.
_GREEN_ZERO = 1e-12

# Orbit points closer than this (relative) to a puzzle threshold level are
# flagged as boundary hits.
_LEVEL_CLEARANCE = 1e-7

DEFAULT_VALIDATION_HORIZON = 3


@dataclass(frozen=True)
class PolynomialMap:
    """Polynomial with constant-first coefficients, degree >= 2."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)
        if self.degree < 2:
            raise ValueError("degree must be >= 2 (leading coefficient nonzero)")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z: complex) -> complex:
        return eval_map(self, z)

    def derivative_coefficients(self) -> tuple:
        return tuple(k * c for k, c in enumerate(self.coefficients) if k >= 1)

    def to_json(self) -> dict:
        return {"coefficients": [[c.real, c.imag] for c in self.coefficients]}


_INF = complex(float("inf"), float("inf"))

magnitude = raster.magnitude


def eval_map(map: PolynomialMap, z: complex) -> complex:
    """Horner evaluation; overflow to infinity is a valid escape signal."""
    try:
        acc = 0j
        for c in reversed(map.coefficients):
            acc = acc * z + c
        return acc
    except OverflowError:
        return _INF


@dataclass(frozen=True)
class CriticalPoint:
    location: complex
    local_degree: int
    escapes: bool
    green_level: float = 0.0


def critical_points(map: PolynomialMap, horizon: int = raster.GREEN_MAX_ITER):
    """All roots of the derivative with local degrees and escape flags.

    Roots come from companion-matrix eigenvalues, polished by Newton on the
    derivative; roots closer than 1e-9 merge into one point of higher local
    degree. A critical point escapes iff its potential is positive, checked
    to ``horizon`` iterations.
    """
    dcoeffs = map.derivative_coefficients()
    # numpy wants highest-first
    roots = np.roots(np.array(dcoeffs[::-1], dtype=np.complex128))
    dd = [k * c for k, c in enumerate(dcoeffs) if k >= 1]

    def dval(z):
        acc = 0j
        for c in reversed(dcoeffs):
            acc = acc * z + c
        return acc

    def ddval(z):
        acc = 0j
        for c in reversed(dd):
            acc = acc * z + c
        return acc

    polished = []
    for z in roots:
        w = complex(z)
        for _ in range(40):
            d1 = dval(w)
            d2 = ddval(w)
            if abs(d2) < 1e-300:
                break  # multiple root; companion value is our best estimate
            step = d1 / d2
            w -= step
            if abs(step) < 1e-14 * max(1.0, abs(w)):
                break
        polished.append(w)

    scale = max(1.0, max(abs(c) for c in dcoeffs))
    for w in polished:
        if abs(dval(w)) > 1e-6 * scale * max(1.0, abs(w)) ** (map.degree - 1):
            raise RootFindingError(
                "critical point solver did not converge",
                residuals=[abs(dval(w)) for w in polished],
                roots=[[w.real, w.imag] for w in polished],
            )

    clusters = []
    for w in sorted(polished, key=lambda z: (z.real, z.imag)):
        for cl in clusters:
            if abs(w - cl[0]) < 1e-9:
                cl[1] += 1
                break
        else:
            clusters.append([w, 1])

    coeffs = np.array(map.coefficients, dtype=np.complex128)
    out = []
    for loc, mult in clusters:
        g = raster.green_value(coeffs, map.degree, loc, n_iter=max(horizon, 256))
        out.append(CriticalPoint(location=loc, local_degree=mult + 1,
                                 escapes=g > _GREEN_ZERO, green_level=float(g)))
    out.sort(key=lambda c: (c.location.real, c.location.imag))
    return out


def green(map: PolynomialMap, z: complex, n_iter: int = raster.GREEN_MAX_ITER) -> float:
    """Pointwise escape-rate potential (0 on bounded orbits)."""
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    coeffs = np.array(map.coefficients, dtype=np.complex128)
    return raster.green_value(coeffs, map.degree, z, n_iter=n_iter)


def suggest_level(map: PolynomialMap) -> float:
    """1.05 x the largest escaping critical potential, or 1.0 if none escape.

    The level is never picked silently by ``build_setup``; callers choose.
    """
    crits = critical_points(map)
    esc = [c.green_level for c in crits if c.escapes]
    if not esc:
        return 1.0
    return 1.05 * max(esc)


@dataclass
class ValidationReport:
    u_compact_in_v: bool
    crit_in_kf: bool
    one_crit_component_per_v: bool
    boundary_clear_of_postcritical: bool
    horizon_used: int
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.u_compact_in_v and self.crit_in_kf
                and self.one_crit_component_per_v
                and self.boundary_clear_of_postcritical)

    def to_json(self) -> dict:
        return {
            "u_compact_in_v": self.u_compact_in_v,
            "crit_in_kf": self.crit_in_kf,
            "one_crit_component_per_v": self.one_crit_component_per_v,
            "boundary_clear_of_postcritical": self.boundary_clear_of_postcritical,
            "horizon_used": self.horizon_used,
            "ok": self.ok,
            "notes": list(self.notes),
        }


@dataclass
class SetUpRestriction:
    """Map plus level plus grid, with the potential field precomputed.

    ``green_grid`` is sampled once at construction and shared by every
    downstream stage; the restriction is immutable after construction.
    """

    map: PolynomialMap
    level_r: float
    grid: GridSpec
    criticals: list
    green_grid: np.ndarray
    validation: ValidationReport
    name: str = ""

    @property
    def degree(self) -> int:
        return self.map.degree

    def threshold(self, depth: int) -> float:
        return self.level_r * float(self.degree) ** (-depth)

    def bounded_critical_indices(self):
        return [i for i, c in enumerate(self.criticals) if not c.escapes]


def build_setup(map: PolynomialMap, level_r: float, grid: GridSpec,
                horizon: int = DEFAULT_VALIDATION_HORIZON,
                allow_disconnected_v: bool = False,
                name: str = "") -> SetUpRestriction:
    """Construct the restriction for the given level and validate it.

    Raises VDisconnectedError when the level is at or below an escaping
    critical point's potential (the outer domain would split) unless
    ``allow_disconnected_v`` opts in; raises NoBoundedCriticalError when
    every critical point escapes. All other failures are report fields.
    """
    if not (level_r > 0):
        raise ValueError("level_r must be positive")
    crits = critical_points(map)
    if all(c.escapes for c in crits):
        raise NoBoundedCriticalError(
            "every critical point escapes; the filled set has no critical "
            "component", criticals=[[c.location.real, c.location.imag] for c in crits])
    esc_levels = [c.green_level for c in crits if c.escapes]
    if esc_levels and level_r <= max(esc_levels) and not allow_disconnected_v:
        raise VDisconnectedError(
            f"level_r={level_r} is at or below an escaping critical point's "
            f"potential {max(esc_levels)}; the outer domain splits "
            "(pass allow_disconnected_v=True to accept a multi-component V)",
            level_r=level_r, escaping_levels=esc_levels)

    coeffs = np.array(map.coefficients, dtype=np.complex128)
    gg = raster.green_field(coeffs, map.degree, grid)
    setup = SetUpRestriction(map=map, level_r=float(level_r), grid=grid,
                             criticals=crits, green_grid=gg,
                             validation=None, name=name)
    setup.validation = validate(setup, horizon)
    return setup


def validate(setup: SetUpRestriction, horizon: int = DEFAULT_VALIDATION_HORIZON) -> ValidationReport:
    """Raster validation of the restriction. Failures are fields, not errors.

    Checks, in order: the inner domain sits compactly inside the outer one
    (with the outer domain itself clear of the grid border); no escaping
    critical point sits inside the inner domain and every bounded one does;
    each outer component holds at most one depth-``horizon`` component with
    critical points; critical orbits stay clear of the threshold levels.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    notes = []
    g = setup.green_grid
    d = setup.degree
    r = setup.level_r
    inside_v = g < r
    inside_u = g < r / d

    border = np.zeros_like(inside_v)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    v_clear = not bool((inside_v & border).any())
    if not v_clear:
        notes.append("outer domain touches the grid border; enlarge the grid")

    from scipy import ndimage as _nd
    grown = _nd.binary_dilation(inside_u, structure=np.ones((3, 3), bool),
                                iterations=2)
    u_compact = v_clear and bool((inside_v | ~grown).all())

    crit_ok = True
    for c in setup.criticals:
        in_u = c.green_level < r / d
        if c.escapes and in_u:
            crit_ok = False
            notes.append(f"escaping critical point {c.location} lies inside U")
        if not c.escapes and not in_u:
            crit_ok = False
            notes.append(f"bounded critical point {c.location} outside U")
        if not c.escapes:
            # bounded orbits must stay bounded to the horizon
            w = c.location
            for _ in range(horizon):
                w = setup.map(w)
                if not np.isfinite(magnitude(w)) or magnitude(w) > raster.ESCAPE_RADIUS:
                    crit_ok = False
                    notes.append(f"critical orbit of {c.location} escaped "
                                 "despite zero potential")
                    break

    # one critical component per V-component, certified at depth `horizon`
    v_labels, _ = raster.label_components(raster.erode4(inside_v))
    t_h = r * float(d) ** (-horizon)
    deep_labels, _ = raster.label_components(raster.erode4(g < t_h))
    per_v = {}
    one_crit = True
    for i, c in enumerate(setup.criticals):
        if c.escapes:
            continue
        cell = setup.grid.cell_of(c.location)
        if cell is None or v_labels[cell] < 0 or deep_labels[cell] < 0:
            one_crit = False
            notes.append(f"critical point {c.location} not resolved in the raster")
            continue
        per_v.setdefault(int(v_labels[cell]), set()).add(int(deep_labels[cell]))
    for v_comp, deep_set in sorted(per_v.items()):
        if len(deep_set) > 1:
            one_crit = False
            notes.append(
                f"outer component {v_comp} holds {len(deep_set)} distinct "
                f"critical components at depth {horizon}")

    boundary_clear = True
    levels = [r * float(d) ** (-n) for n in range(horizon + 1)]
    coeffs = np.array(setup.map.coefficients, dtype=np.complex128)
    for c in setup.criticals:
        w = c.location
        for _ in range(horizon):
            w = setup.map(w)
            if not np.isfinite(magnitude(w)):
                break
            gw = raster.green_value(coeffs, d, w)
            for lv in levels:
                if abs(gw - lv) < _LEVEL_CLEARANCE * lv:
                    boundary_clear = False
                    notes.append(
                        f"postcritical point {w} sits on a threshold level {lv}")

    return ValidationReport(
        u_compact_in_v=u_compact,
        crit_in_kf=crit_ok,
        one_crit_component_per_v=one_crit,
        boundary_clear_of_postcritical=boundary_clear,
        horizon_used=horizon,
        notes=notes,
    )


def map_to_json(map: PolynomialMap, level_r: float, grid: GridSpec,
                allow_disconnected_v: bool = False, name: str = "") -> dict:
    doc = {
        "coefficients": [[c.real, c.imag] for c in map.coefficients],
        "level_r": float(level_r),
        "grid": grid.to_json(),
    }
    if allow_disconnected_v:
        doc["allow_disconnected_v"] = True
    if name:
        doc["name"] = name
    return doc


def map_from_json(doc: dict):
    """Parse a map description document; returns (map, level_r, grid, options)."""
    coeffs = [complex(re, im) for re, im in doc["coefficients"]]
    pm = PolynomialMap(tuple(coeffs))
    level_r = float(doc["level_r"])
    grid = GridSpec.from_json(doc["grid"])
    options = {
        "allow_disconnected_v": bool(doc.get("allow_disconnected_v", False)),
        "name": str(doc.get("name", "")),
    }
    return pm, level_r, grid, options
