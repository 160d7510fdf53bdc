"""Reference maps exercised by the tests and shipped as example inputs.

Levels are frozen numerically so map files are reproducible; a test pins
them against freshly computed escape-rate values.
"""

from __future__ import annotations

import numpy as np

from .mapmodel import PolynomialMap, build_setup, map_to_json
from .raster import GridSpec

# superattracting 2-cycle parameter for the period-2 cubic: the largest real
# root w of w^3 + (1 - 3 a^2) w + (a - 2 a^3) = 0 at a = 1.1, then b = w - 2 a^3
_A = 1.1
_W2 = float(sorted(r.real for r in np.roots(
    [1.0, 0.0, 1.0 - 3.0 * _A ** 2, _A - 2.0 * _A ** 3])
    if abs(r.imag) < 1e-12)[-1])
_B2 = _W2 - 2.0 * _A ** 3


def _spec(name, coefficients, level_r, center, half_width,
          allow_disconnected_v=False):
    return {
        "name": name,
        "coefficients": tuple(coefficients),
        "level_r": level_r,
        "center": center,
        "half_width": half_width,
        "allow_disconnected_v": allow_disconnected_v,
    }


CORPUS = {
    # z^2: superattracting fixed critical point, every sublevel a round disk
    "quad_basic": _spec("quad_basic", (0, 0, 1), float(np.log(4.0)), 0j, 4.4),
    # (z - 1/2)^2 + 1/2: affine conjugate of z^2 by a translation
    "quad_conj": _spec("quad_conj", (0.75, -1, 1), float(np.log(4.0)),
                       0.5 + 0j, 4.4),
    # z^3: unicritical, degree-3 analog of quad_basic
    "cubic_unicrit": _spec("cubic_unicrit", (0, 0, 0, 1), float(np.log(4.0)),
                           0j, 4.4),
    # z^3 - 1.92 z + 1.2: -0.8 escapes, +0.8 is attracted to a 2-cycle;
    # levels are 1.3x the escaping potential, inside the valid window
    # (G(c_esc), 3 G(c_esc)) and fattest for the raster
    "cubic_bh": _spec("cubic_bh", (1.2, -1.92, 0, 1), 0.2977245883027422,
                      0j, 2.4),
    # z^3 - 3.63 z - 3.762: -1.1 superattracting fixed, +1.1 escapes
    "cubic_per1": _spec("cubic_per1", (-3.762, -3.63, 0, 1),
                        0.7949454771400202, 0j, 3.2),
    # z^3 - 3.63 z + b: -1.1 on a superattracting 2-cycle, +1.1 escapes
    "cubic_per2": _spec("cubic_per2", (_B2, -3.63, 0, 1),
                        0.4896931506208213, 0j, 3.0),
    # 2 z^4 - 4 z^2 + 3: +1 superattracting fixed, -1 maps onto it in one
    # step, 0 escapes; the level splits the outer domain at the 0-pinch
    "quart_feed": _spec("quart_feed", (3, 0, -4, 0, 2), 0.157283411024,
                        0j, 2.0, allow_disconnected_v=True),
    # two independent superattracting fixed critical points at +-1, 0.1
    # escapes between them
    "quart_twin": _spec("quart_twin", (3.75, 1.5, -7.5, -0.5, 3.75),
                        0.2138810869736, 0j, 2.0, allow_disconnected_v=True),
}


def polynomial(name: str) -> PolynomialMap:
    return PolynomialMap(CORPUS[name]["coefficients"])


def grid(name: str, resolution: int) -> GridSpec:
    spec = CORPUS[name]
    return GridSpec(center=spec["center"], half_width=spec["half_width"],
                    resolution=resolution)


def setup(name: str, resolution: int, horizon: int = 3):
    spec = CORPUS[name]
    return build_setup(polynomial(name), spec["level_r"],
                       grid(name, resolution), horizon=horizon,
                       allow_disconnected_v=spec["allow_disconnected_v"],
                       name=name)


def map_document(name: str, resolution: int = 1024) -> dict:
    spec = CORPUS[name]
    return map_to_json(polynomial(name), spec["level_r"],
                       grid(name, resolution),
                       allow_disconnected_v=spec["allow_disconnected_v"],
                       name=name)
