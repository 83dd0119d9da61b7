"""Command-line front end.

Exit codes: 0 on success or a clean algorithmic termination, 2 when a
geometric or bookkeeping invariant fails, 3 for I/O and argument errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import engine
from .block import BlockSpec, ContainmentFailure, PreconditionViolation, pack_spec
from .certificate import CertificateError, PackingCertificate, load, save
from .geometry import Rect
from .render import write_svg
from .series import Params, side_length
from .sweep import monotonicity_findings, run_grid, write_csv
from .verify import verify_certificate

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_IO = 3

SUBCOMMANDS = ("pack", "verify", "sweep", "render", "block-demo")


@dataclass
class CliConfig:
    subcommand: str
    t: float | None = None
    M: int | None = None
    n0: int | None = None
    n_max: int | None = None
    budget: int | None = None
    precision: str = "double"
    level: str = "fast"
    inputs: list[str] = field(default_factory=list)
    out: str | None = None
    report: str | None = None
    svg: str | None = None
    M1: int | None = None
    M2: int | None = None
    w_units: float | None = None
    h_units: float | None = None
    ts: list[float] = field(default_factory=list)
    Ms: list[int] = field(default_factory=list)
    n0s: list[int] = field(default_factory=list)
    workers: int = 1
    verify: bool = True
    verbose: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> CliConfig:
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _exponent(text: str) -> float:
    t = float(text)
    if not 0.5 < t < 1.0:
        raise argparse.ArgumentTypeError(f"t must satisfy 1/2 < t < 1, got {t}")
    return t


def _csv(conv):
    def parse(text: str):
        return [conv(v) for v in text.split(",") if v]

    return parse


def _index(text: str) -> int:
    return int(float(text)) if "e" in text.lower() else int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="squarepack", description="Perfect packing of a square by squares of side n^-t.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    pk = sub.add_parser("pack", help="run the packing loop and write a certificate")
    pk.add_argument("--t", type=_exponent, required=True)
    pk.add_argument("--m", dest="M", type=int, required=True)
    pk.add_argument("--n0", type=_index, required=True)
    pk.add_argument("--n-max", dest="n_max", type=_index)
    pk.add_argument("--budget", type=_index, help="maximum number of squares to place")
    pk.add_argument("--precision", choices=["double"], default="double")
    pk.add_argument("--out", help="certificate JSON path")
    pk.add_argument("--report", help="run report JSON path")
    pk.add_argument("--svg")
    pk.add_argument("--no-verify", dest="verify", action="store_false")

    vf = sub.add_parser("verify", help="check a certificate")
    vf.add_argument("inputs", nargs=1, metavar="CERT")
    vf.add_argument("--level", choices=["fast", "full-bruteforce"], default="fast")
    vf.add_argument("--report")

    sw = sub.add_parser("sweep", help="run a grid of parameters and tabulate the outcome")
    sw.add_argument("--t", dest="ts", type=_csv(_exponent), required=True)
    sw.add_argument("--m", dest="Ms", type=_csv(int), required=True)
    sw.add_argument("--n0", dest="n0s", type=_csv(_index), required=True)
    sw.add_argument("--budget", type=_index, default=2000)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", help="CSV path (default: stdout)")

    rd = sub.add_parser("render", help="draw a certificate as SVG")
    rd.add_argument("inputs", nargs=1, metavar="CERT")
    rd.add_argument("--out", required=True)

    bd = sub.add_parser("block-demo", help="pack a single synthetic block")
    bd.add_argument("--t", type=_exponent, default=0.75)
    bd.add_argument("--m", dest="M", type=int, default=8)
    bd.add_argument("--n0", type=_index, default=10**6)
    bd.add_argument("--m1", dest="M1", type=int, default=3)
    bd.add_argument("--m2", dest="M2", type=int, default=4)
    bd.add_argument("--w-units", type=float, help="target width in units of n0^-t (default M1 + 0.5)")
    bd.add_argument("--h-units", type=float, help="target height in units of n0^-t (default M2 + 0.5)")
    bd.add_argument("--out", help="certificate JSON path")
    bd.add_argument("--svg")
    return parser


def parse_config(argv: list[str] | None = None) -> CliConfig:
    ns = build_parser().parse_args(argv)
    names = {f.name for f in fields(CliConfig)}
    return CliConfig(**{k: v for k, v in vars(ns).items() if k in names and v is not None})


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, default=float)
    if path:
        Path(path).write_text(text + "\n")


def cmd_pack(cfg: CliConfig) -> int:
    try:
        params = Params(cfg.t, cfg.M, cfg.n0, cfg.n_max)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    state = engine.init(params)
    try:
        state, rep = engine.run(state, max_squares=cfg.budget)
    except engine.InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    cert = PackingCertificate.from_state(state)
    cert.status = rep.status
    payload = {"status": rep.status, "report": rep.to_dict()}
    code = EXIT_OK
    if cfg.verify:
        vr = verify_certificate(cert)
        payload["verification"] = vr.to_dict()
        if not vr.ok:
            code = EXIT_INVARIANT
    try:
        if cfg.out:
            save(cert, cfg.out)
        if cfg.svg:
            write_svg(cert, cfg.svg)
        _write_json(cfg.report, payload)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    line = f"{rep.status}: {rep.squares_placed} squares, n = {rep.n0} .. {rep.n_final - 1}, max perim_delta/budget {rep.max_budget_ratio:.4g}"
    if rep.failure:
        line += f"; failed {rep.failure['inequality']} (lhs {rep.failure['lhs']:.6g}, rhs {rep.failure['rhs']:.6g})"
    print(line)
    if code != EXIT_OK:
        print("verification FAILED", file=sys.stderr)
    return code


def _load(path: str) -> PackingCertificate | None:
    try:
        return load(path)
    except (OSError, CertificateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_verify(cfg: CliConfig) -> int:
    cert = _load(cfg.inputs[0])
    if cert is None:
        return EXIT_IO
    level = "full" if cfg.level == "full-bruteforce" else "fast"
    vr = verify_certificate(cert, level)
    d = vr.to_dict()
    for key in ("disjointness_ok", "containment_ok", "cover_ok", "side_ok", "index_contiguity_ok",
                "tiling_ok", "area_identity_ok", "height_ok", "discarded_ok", "bruteforce_agrees"):
        if d[key] is not None:
            print(f"{key:22s} {'PASS' if d[key] else 'FAIL'}")
    print(f"{'wtr_ratio':22s} {vr.wtr_ratio:.6g}")
    if cfg.report:
        try:
            _write_json(cfg.report, d)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK if vr.ok else EXIT_INVARIANT


def cmd_sweep(cfg: CliConfig) -> int:
    rows = run_grid(cfg.ts, cfg.Ms, cfg.n0s, cfg.budget if cfg.budget is not None else 2000, cfg.workers)
    try:
        if cfg.out:
            write_csv(rows, cfg.out)
        else:
            write_csv(rows, "/dev/stdout")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for finding in monotonicity_findings(rows):
        print(f"finding: {finding}", file=sys.stderr)
    return EXIT_OK


def cmd_render(cfg: CliConfig) -> int:
    cert = _load(cfg.inputs[0])
    if cert is None:
        return EXIT_IO
    try:
        write_svg(cert, cfg.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def block_demo(t: float, M: int, n0: int, M1: int, M2: int, w_units: float | None = None, h_units: float | None = None):
    """Pack one synthetic block and wrap it in a certificate."""
    params = Params(t, max(M, 2), n0)
    s = side_length(n0, t)
    w = (M1 + 0.5 if w_units is None else w_units) * s
    h = (M2 + 0.5 if h_units is None else h_units) * s
    rect = Rect(0.0, 0.0, w, h, "target")
    res = pack_spec(BlockSpec(rect, n0, params, M1, M2))
    cert = PackingCertificate(
        params=params,
        outer=rect,
        squares=res.squares,
        residuals=res.gaps,
        claimed_n_range=(n0, res.n0_next),
        discarded_area=res.discarded_area,
        status="block",
        kind="block",
    )
    return res, cert


def cmd_block_demo(cfg: CliConfig) -> int:
    try:
        res, cert = block_demo(cfg.t, cfg.M, cfg.n0, cfg.M1, cfg.M2, cfg.w_units, cfg.h_units)
    except PreconditionViolation as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ContainmentFailure as exc:
        print(f"containment failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    vr = verify_certificate(cert)
    try:
        if cfg.out:
            save(cert, cfg.out)
        if cfg.svg:
            write_svg(cert, cfg.svg, label=True)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    counts = ", ".join(f"{v} {k}" for k, v in res.gap_counts.items())
    print(f"{len(res.squares)} squares, {len(res.gaps)} gaps ({counts}); verification {'PASS' if vr.ok else 'FAIL'}")
    return EXIT_OK if vr.ok else EXIT_INVARIANT


COMMANDS = {
    "pack": cmd_pack,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "render": cmd_render,
    "block-demo": cmd_block_demo,
}


def main(argv: list[str] | None = None) -> int:
    cfg = parse_config(argv)
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING)
    return COMMANDS[cfg.subcommand](cfg)


if __name__ == "__main__":
    sys.exit(main())
