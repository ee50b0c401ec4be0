"""Named instances and family strings used by the CLI and the acceptance runs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .expr import (CompactBump, ExpSum, FunctionExpr, PowerDecay, damp, exp_atom, from_json,
                   mollify, sine_modulate)
from .tauberian import LogDecay

# contour and rectangles of the standard damped-mollified-bump instance
STANDARD_CONTOUR = {"h": 0.2, "alpha_prime": -0.6, "r_prime": 2.0, "xi": 40.0,
                    "nodes_per_unit": 8, "panel_order": 16}
STANDARD_NORM_RECT = (-0.15, 1.5)
STANDARD_S = (0.5, 2.0, -0.1 + 1.0j, -0.15 + 1.5j, 0.3j, 1.0 + 1.4j, -0.15 - 1.5j,
              0.9 - 0.7j, 3.0 + 5.0j, 0.2 - 0.4j)


def _standard():
    return damp(mollify(CompactBump(4.0, 2), 2.0), 0.2)


INSTANCES = {
    "standard": _standard,
    "bump": lambda: mollify(CompactBump(2.0, 2), 1.0),
    "exp_unit": lambda: exp_atom(-1.0),
    "neg_exp": lambda: exp_atom(-1.0, -1.0),
    "zero": lambda: ExpSum(),
    "zeta0": lambda: exp_atom(-0.1 + 2.0j),
    "sine_bump": lambda: sine_modulate(CompactBump(2.0, 2), 3.0),
    "two_exp": lambda: ExpSum([-1.0, -2.0], [1.0, -1.0]),
    "pole_in_rect": lambda: exp_atom(-0.2),
    "damped_cos": lambda: ExpSum([-0.5 + 3.0j, -0.5 - 3.0j], [0.5, 0.5]),
}

# instances whose monotonicity margin is exercised by the transfer checks
TRANSFER_INSTANCES = ("exp_unit", "neg_exp", "two_exp", "sine_bump", "damped_cos")


def instance(name: str) -> FunctionExpr:
    try:
        return INSTANCES[name]()
    except KeyError:
        raise ParameterError(f"unknown instance {name!r}; known: {sorted(INSTANCES)}") from None


def load_target(ref: str) -> FunctionExpr:
    """A target from a JSON file path, ``instance:NAME`` or a bare instance name."""
    if ref.startswith("instance:"):
        return instance(ref.split(":", 1)[1])
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        try:
            return from_json(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ParameterError(f"target file {ref!r} not found") from None
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed target file {ref!r}: {exc}") from None
    return instance(ref)


def parse_family(text: str):
    """``powerdecay:p[:c]`` gives ``(c + x)^{-p}``; ``log`` gives ``1 / log(e + x)``.

    Registry instance names are accepted as well.
    """
    parts = text.split(":")
    kind = parts[0].lower()
    if kind == "powerdecay":
        if len(parts) not in (2, 3):
            raise ParameterError("use powerdecay:p or powerdecay:p:c")
        p = float(parts[1])
        c = float(parts[2]) if len(parts) == 3 else 1.0
        return PowerDecay(p, c)
    if kind == "log":
        return LogDecay()
    return load_target(text)


def parse_complex(text: str) -> complex:
    """``"re,im"``, ``"re"`` or a Python complex literal."""
    text = text.strip()
    if "," in text:
        re_, im_ = text.split(",", 1)
        return complex(float(re_), float(im_))
    try:
        return complex(text.replace("i", "j"))
    except ValueError:
        raise ParameterError(f"cannot parse complex number {text!r}") from None


def standard_points(seed: int | None = None, extra: int = 0) -> np.ndarray:
    """The ten fixed evaluation points, plus ``extra`` seeded draws from [-0.15, 1] x i[-1.5, 1.5]."""
    pts = list(STANDARD_S)
    if extra:
        rng = np.random.default_rng(seed)
        pts += list(rng.uniform(-0.15, 1.0, extra) + 1j * rng.uniform(-1.5, 1.5, extra))
    return np.array(pts, dtype=complex)
