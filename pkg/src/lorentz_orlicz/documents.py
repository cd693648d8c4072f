"""Versioned JSON documents for functions and Orlicz functions.

Every document is ``{"version": "1", "kind": ..., <payload>}``.  Floats are
written by :mod:`json` as shortest round-trip decimals, so parsing a
serialized object gives back an equal object.
"""

from __future__ import annotations

import json
import math

from .functionals import ConstructedPsi, PiecewisePowerPsi, two_power_psi
from .monotone import (
    LinearPiece,
    PowerPiece,
    PowerTail,
    StepFunction,
    TailedDecreasingFunction,
    make_exponents,
)

VERSION = "1"
KINDS = ("step", "two_power_psi", "constructed_psi", "tailed")


class DocumentError(ValueError):
    """A document that cannot be turned into a domain object."""


def _tail_doc(tail: PowerTail, with_shift: bool):
    doc = {}
    if with_shift:
        doc["shift"] = tail.shift
    doc["coeff"] = tail.coeff
    doc["exponent"] = tail.exponent
    doc["mode"] = "dyadic" if tail.dyadic else "power"
    return doc


def _tail_from(doc, side):
    mode = doc.get("mode", "power")
    if mode not in ("power", "dyadic"):
        raise DocumentError(f"unknown tail mode {mode!r}")
    return PowerTail(
        float(doc["coeff"]),
        float(doc["exponent"]),
        float(doc.get("shift", 0.0)),
        side=side,
        dyadic=mode == "dyadic",
    )


def _piece_doc(pc):
    if isinstance(pc, LinearPiece):
        return {"type": "linear", "lo": pc.lo, "hi": pc.hi, "y_lo": pc.y_lo, "y_hi": pc.y_hi}
    return {
        "type": "power",
        "lo": pc.lo,
        "hi": pc.hi,
        "shift": pc.shift,
        "coeff": pc.coeff,
        "exponent": pc.exponent,
    }


def _piece_from(doc):
    kind = doc.get("type")
    if kind == "linear":
        return LinearPiece(*(float(doc[k]) for k in ("lo", "hi", "y_lo", "y_hi")))
    if kind == "power":
        return PowerPiece(*(float(doc[k]) for k in ("lo", "hi", "shift", "coeff", "exponent")))
    raise DocumentError(f"unknown core piece type {kind!r}")


def to_document(obj, *, eps: float | None = None, p: float | None = None) -> dict:
    """Serialize a step function, tailed function or Orlicz function.

    A two-power ``Psi`` carries no record of how it was built, so its ``p``
    and ``eps`` must be passed explicitly.
    """
    head = {"version": VERSION}
    if isinstance(obj, StepFunction):
        return {**head, "kind": "step", "breakpoints": list(obj.breakpoints), "values": list(obj.values)}
    if isinstance(obj, ConstructedPsi):
        g, e = obj.g, obj.exponents
        return {
            **head,
            "kind": "constructed_psi",
            "exponents": {"p": e.p, "r": e.r, "q": e.q},
            "g": {
                "nearZero": _tail_doc(g.near, True),
                "knots": [[t, y] for t, y in g.knots()],
                "far": _tail_doc(g.far, False),
            },
        }
    if isinstance(obj, TailedDecreasingFunction):
        return {
            **head,
            "kind": "tailed",
            "near": _tail_doc(obj.near, True),
            "far": _tail_doc(obj.far, False),
            "junctions": list(obj.junctions),
            "core": [_piece_doc(pc) for pc in obj.core],
        }
    if isinstance(obj, PiecewisePowerPsi):
        if p is None or eps is None:
            raise DocumentError("a two-power Psi document needs p and eps")
        if obj != two_power_psi(p, eps):
            raise DocumentError("Psi is not the two-power function for the given p and eps")
        return {**head, "kind": "two_power_psi", "p": p, "eps": eps}
    raise DocumentError(f"cannot serialize {type(obj).__name__}")


def from_document(doc: dict):
    """Inverse of :func:`to_document`; raises :class:`DocumentError` on bad input."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("version") != VERSION:
        raise DocumentError(f"unsupported document version {doc.get('version')!r}")
    kind = doc.get("kind")
    try:
        if kind == "step":
            return StepFunction(tuple(doc["breakpoints"]), tuple(doc["values"]))
        if kind == "two_power_psi":
            return two_power_psi(float(doc["p"]), float(doc["eps"]))
        if kind == "tailed":
            return TailedDecreasingFunction(
                _tail_from(doc["near"], "near"),
                _tail_from(doc["far"], "far"),
                tuple(doc["junctions"]),
                tuple(_piece_from(pc) for pc in doc["core"]),
            )
        if kind == "constructed_psi":
            ex = doc["exponents"]
            e = make_exponents(ex["p"], ex["r"])
            if "q" in ex and not math.isclose(float(ex["q"]), e.q, rel_tol=1e-12):
                raise DocumentError("q does not match p and r")
            gd = doc["g"]
            g = TailedDecreasingFunction.from_knots(
                gd["knots"], _tail_from(gd["nearZero"], "near"), _tail_from(gd["far"], "far")
            )
            return ConstructedPsi(g, e)
    except DocumentError:
        raise
    except (KeyError, TypeError, IndexError) as exc:
        raise DocumentError(f"malformed {kind} document: missing or invalid {exc}") from exc
    except ValueError as exc:
        raise DocumentError(f"invalid {kind} document: {exc}") from exc
    raise DocumentError(f"unknown document kind {kind!r}; expected one of {', '.join(KINDS)}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return from_document(doc)
