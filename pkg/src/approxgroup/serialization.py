"""JSON formats for matrix sets and reports.

A matrix set is ``{"dim", "mode", "eps_eq"?, "elements": [...]}``.  Monomial
elements are ``{"perm": [...], "phases": [{"num", "den"}, ...]}`` where
``perm[j]`` is the 1-based row holding column ``j``'s nonzero entry; dense
elements are ``{"entries": [[[re, im], ...], ...]}``.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import InvalidSpec
from .linalg import Dense, Monomial, UnitaryElement
from .sets import EXACT, MatrixSet, tolerant


def element_to_json(g: UnitaryElement) -> dict:
    if isinstance(g, Monomial):
        return {"perm": [p + 1 for p in g.perm],
                "phases": [{"num": f.numerator, "den": f.denominator} for f in g.phases]}
    m = g.to_dense()
    return {"entries": [[[float(z.real), float(z.imag)] for z in row] for row in m]}


def element_from_json(obj: dict, check: bool = True) -> UnitaryElement:
    if "perm" in obj:
        perm = [int(p) - 1 for p in obj["perm"]]
        phases = [Fraction(int(ph["num"]), int(ph["den"])) for ph in obj["phases"]]
        return Monomial.from_phases(perm, phases)
    if "entries" in obj:
        m = np.array([[complex(re, im) for re, im in row] for row in obj["entries"]])
        return Dense(m, check=check)
    raise InvalidSpec("element needs 'perm' or 'entries'")


def set_to_json(s: MatrixSet) -> dict:
    out: dict[str, Any] = {"dim": s.dim, "mode": s.regime.mode}
    if not s.regime.exact:
        out["eps_eq"] = s.regime.eps_eq
    out["elements"] = [element_to_json(g) for g in s]
    return out


def set_from_json(obj: dict) -> MatrixSet:
    try:
        dim = int(obj["dim"])
        mode = obj["mode"]
        elems = [element_from_json(e) for e in obj["elements"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"malformed matrix set: {exc}") from None
    if mode == "exact":
        regime = EXACT
    elif mode == "tolerant":
        regime = tolerant(float(obj.get("eps_eq", 1e-6)))
        elems = [g if isinstance(g, Dense) else Dense(g.to_dense(), check=False) for g in elems]
    else:
        raise InvalidSpec(f"unknown mode {mode!r}")
    return MatrixSet(dim, regime, elems)


def load_set(path: str) -> MatrixSet:
    with open(path) as fh:
        return set_from_json(json.load(fh))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def _default(o: Any) -> Any:
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Fraction):
        return {"num": o.numerator, "den": o.denominator}
    if isinstance(o, (Monomial, Dense)):
        return element_to_json(o)
    if isinstance(o, MatrixSet):
        return set_to_json(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def digest(results: Any) -> str:
    return hashlib.sha256(canonical_json(results).encode()).hexdigest()


def to_plain(obj: Any) -> Any:
    """Round-trip through canonical JSON so reports hold only JSON types."""
    return json.loads(canonical_json(obj))
