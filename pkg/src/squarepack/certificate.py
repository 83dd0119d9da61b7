"""JSON certificates: a serialized packing that can be checked independently.

Reals are written as the shortest decimal string that round-trips to the
same double (``repr``), so ``load(dump(c)) == c`` bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .geometry import PlacedSquare, Rect
from .series import Params

SCHEMA_VERSION = 1

_REAL = {"type": "string", "pattern": r"^-?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?$"}
_BOX = {
    "type": "object",
    "required": ["x0", "y0", "x1", "y1"],
    "properties": {"x0": _REAL, "y0": _REAL, "x1": _REAL, "y1": _REAL, "tag": {"type": "string"}},
}

CERTIFICATE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["schema_version", "params", "outer", "squares", "residuals", "claimed_n_range"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "params": {
            "type": "object",
            "required": ["t", "M", "n0"],
            "properties": {
                "t": _REAL,
                "M": {"type": "integer", "minimum": 1},
                "n0": {"type": "integer", "minimum": 1},
                "n_max": {"type": ["integer", "null"]},
            },
        },
        "outer": _BOX,
        "squares": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n", "x", "y", "side"],
                "properties": {"n": {"type": "integer", "minimum": 1}, "x": _REAL, "y": _REAL, "side": _REAL},
            },
        },
        "residuals": {"type": "array", "items": _BOX},
        "claimed_n_range": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "discarded_area": _REAL,
        "kind": {"enum": ["packing", "block"]},
        "status": {"type": "string"},
        "failure": {"type": ["object", "null"]},
        "ledger": {"type": "array"},
    },
}


class CertificateError(ValueError):
    pass


@dataclass
class PackingCertificate:
    params: Params
    outer: Rect
    squares: list[PlacedSquare]
    residuals: list[Rect]
    claimed_n_range: tuple[int, int]
    discarded_area: float = 0.0
    status: str = ""
    failure: dict | None = None
    ledger: list[dict] = field(default_factory=list)
    kind: str = "packing"

    @classmethod
    def from_state(cls, state) -> PackingCertificate:
        return cls(
            params=state.params,
            outer=state.outer,
            squares=list(state.placed),
            residuals=list(state.family),
            claimed_n_range=(state.params.n0, state.n_current),
            discarded_area=state.discarded_area,
            status=state.halted or "",
            failure=state.failure,
            ledger=[asdict(r) for r in state.ledger],
        )


def _r(x: float) -> str:
    return repr(float(x))


def _box(r: Rect) -> dict:
    d = {"x0": _r(r.x_lo), "y0": _r(r.y_lo), "x1": _r(r.x_hi), "y1": _r(r.y_hi)}
    if r.tag:
        d["tag"] = r.tag
    return d


def _json_safe(obj):
    if isinstance(obj, float):
        return _r(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def to_dict(cert: PackingCertificate) -> dict:
    p = cert.params
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": cert.kind,
        "params": {"t": _r(p.t), "M": p.M, "n0": p.n0, "n_max": p.n_max},
        "outer": _box(cert.outer),
        "squares": [{"n": s.n, "x": _r(s.x_lo), "y": _r(s.y_lo), "side": _r(s.side)} for s in cert.squares],
        "residuals": [_box(r) for r in cert.residuals],
        "claimed_n_range": list(cert.claimed_n_range),
        "discarded_area": _r(cert.discarded_area),
        "status": cert.status,
        "failure": _json_safe(cert.failure),
        "ledger": _json_safe(cert.ledger),
    }


def _unbox(d: dict) -> Rect:
    return Rect(float(d["x0"]), float(d["y0"]), float(d["x1"]), float(d["y1"]), d.get("tag", ""))


def from_dict(d: dict) -> PackingCertificate:
    try:
        jsonschema.validate(d, CERTIFICATE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise CertificateError(f"malformed certificate: {exc.message}") from exc
    p = d["params"]
    try:
        params = Params(float(p["t"]), int(p["M"]), int(p["n0"]), p.get("n_max"))
        outer = _unbox(d["outer"])
        residuals = [_unbox(r) for r in d["residuals"]]
    except ValueError as exc:
        raise CertificateError(str(exc)) from exc
    squares = [PlacedSquare(int(s["n"]), float(s["side"]), float(s["x"]), float(s["y"])) for s in d["squares"]]
    lo, hi = d["claimed_n_range"]
    return PackingCertificate(
        params=params,
        outer=outer,
        squares=squares,
        residuals=residuals,
        claimed_n_range=(lo, hi),
        discarded_area=float(d.get("discarded_area", "0.0")),
        status=d.get("status", ""),
        failure=_failure_from_json(d.get("failure")),
        ledger=[{k: float(v) if isinstance(v, str) else v for k, v in rec.items()} for rec in d.get("ledger", [])],
        kind=d.get("kind", "packing"),
    )


def _failure_from_json(f: dict | None) -> dict | None:
    if f is None:
        return None
    return {k: float(v) if k in ("lhs", "rhs", "margin") else v for k, v in f.items()}


def dumps(cert: PackingCertificate) -> str:
    return json.dumps(to_dict(cert), separators=(",", ":"))


def loads(text: str) -> PackingCertificate:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"not valid JSON: {exc}") from exc
    return from_dict(data)


def save(cert: PackingCertificate, path: str | Path) -> None:
    Path(path).write_text(dumps(cert))


def load(path: str | Path) -> PackingCertificate:
    return loads(Path(path).read_text())
