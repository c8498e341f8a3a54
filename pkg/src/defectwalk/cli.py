"""Command-line front end.

Every output starts with ``#``-prefixed manifest lines; the remaining body is
a deterministic function of the manifest parameters (and seed).

Exit status: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence

from . import __version__
from .bound import Branch, exists, lambda_pm, total_overlap, x_pm
from .decoherence import evolve_decohered
from .oracle import run_suite
from .walk import NormalizationError, PhaseDefect, evolve, initial_state, position_distribution

log = logging.getLogger("defectwalk")

OUTPUT_DIR_ENV = "DEFECTWALK_OUTPUT_DIR"
COIN_PRESETS = {
    "zero": (1, 0),
    "one": (0, 1),
    "plus_i": (2**-0.5, 1j * 2**-0.5),
    "minus_i": (2**-0.5, -1j * 2**-0.5),
}
COIN_RENORM_TOL = 1e-3


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict[str, Any]
    seed: Optional[int] = None
    artifact_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def header(self) -> str:
        lines = [
            "# defectwalk run manifest",
            f"# command: {self.command}",
            f"# parameters: {json.dumps(self.parameters, sort_keys=True)}",
            f"# seed: {json.dumps(self.seed)}",
            f"# artifact_version: {self.artifact_version}",
            f"# timestamp: {self.timestamp}",
        ]
        return "\n".join(lines) + "\n"


# --- argument parsing ---------------------------------------------------------


def parse_phi(text: str) -> Fraction:
    """Parse ``1/6``, ``0.25`` or ``3/4`` exactly."""
    try:
        phi = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse phi {text!r}; use a decimal or a fraction like 1/6")
    if not (0 < phi < 1):
        raise UsageError(f"phi must lie strictly between 0 and 1, got {text}")
    return phi


def _parse_component(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    if t in ("j", "+j", "-j"):
        t = t.replace("j", "1j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse coin component {text!r}")


def parse_coin(text: str) -> tuple[complex, complex]:
    """Coin state as ``alpha,beta`` (complex literals, ``i`` or ``j`` suffix) or a
    preset name. Typed decimals like ``0.7071,0.7071i`` are renormalized when
    their norm is within 1e-3 of one."""
    if text in COIN_PRESETS:
        a, b = COIN_PRESETS[text]
        return complex(a), complex(b)
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"coin must be 'alpha,beta' or one of {sorted(COIN_PRESETS)}, got {text!r}")
    a, b = (_parse_component(p) for p in parts)
    n2 = abs(a) ** 2 + abs(b) ** 2
    if abs(n2 - 1) > COIN_RENORM_TOL:
        raise UsageError(f"coin {text!r} has |alpha|^2+|beta|^2 = {n2:.6g}, not 1")
    s = n2**-0.5
    return a * s, b * s


def phi_range(phi_min: str, phi_max: str, n_points: int) -> list[Fraction]:
    lo, hi = parse_phi(phi_min), parse_phi(phi_max)
    if n_points < 1:
        raise UsageError("n-points must be >= 1")
    if n_points == 1:
        return [lo]
    if not lo < hi:
        raise UsageError("phi-min must be smaller than phi-max")
    return [lo + (hi - lo) * k / (n_points - 1) for k in range(n_points)]


# --- output --------------------------------------------------------------------


def _resolve_out(path: str) -> Optional[str]:
    if path == "-":
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    return path


def _write(path: str, text: str) -> None:
    target = _resolve_out(path)
    if target is None:
        sys.stdout.write(text)
        return
    try:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {target}: {exc}")
    log.info("wrote %s", target)


def _csv(manifest: RunManifest, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(manifest.header())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coin_param(coin: tuple[complex, complex]) -> list[list[float]]:
    return [[c.real, c.imag] for c in coin]


# --- commands --------------------------------------------------------------------


def cmd_evolve(args: argparse.Namespace) -> int:
    phi = parse_phi(args.phi)
    coin = parse_coin(args.coin)
    if args.steps < 0:
        raise UsageError("steps must be non-negative")
    state = evolve(initial_state(*coin), PhaseDefect(float(phi)), args.steps)
    manifest = RunManifest(
        "evolve", {"phi": str(phi), "coin": args.coin, "coin_normalized": _coin_param(coin), "steps": args.steps}
    )
    _write(args.out, _csv(manifest, ["position", "probability"], position_distribution(state)))
    return 0


def spectrum_row(phi: Fraction) -> tuple:
    p = float(phi)
    lp, lm = lambda_pm(Branch.PLUS, p), lambda_pm(Branch.MINUS, p)
    return (
        p,
        abs(x_pm(Branch.PLUS, p)),
        abs(x_pm(Branch.MINUS, p)),
        exists(Branch.PLUS, phi),
        exists(Branch.MINUS, phi),
        lp.real,
        lp.imag,
        lm.real,
        lm.imag,
    )


def _sweep(fn: Callable, grid: Sequence, workers: int, *extra) -> list:
    if workers <= 1 or len(grid) < 2:
        return [fn(p, *extra) for p in grid]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, grid, *[[e] * len(grid) for e in extra]))


def cmd_spectrum(args: argparse.Namespace) -> int:
    grid = phi_range(args.phi_min, args.phi_max, args.n_points)
    rows = _sweep(spectrum_row, grid, args.workers)
    manifest = RunManifest(
        "spectrum", {"phi_min": args.phi_min, "phi_max": args.phi_max, "n_points": args.n_points}
    )
    cols = [
        "phi", "abs_x_plus", "abs_x_minus", "exists_plus", "exists_minus",
        "lambda_plus_re", "lambda_plus_im", "lambda_minus_re", "lambda_minus_im",
    ]
    _write(args.out, _csv(manifest, cols, rows))
    return 0


def overlap_row(phi: Fraction, coin: tuple[complex, complex]) -> tuple:
    rep = total_overlap(float(phi), *coin)
    return (float(phi), rep.f_plus, rep.f_minus, rep.total)


def cmd_overlap(args: argparse.Namespace) -> int:
    coin = parse_coin(args.coin)
    if args.phis:
        grid = [parse_phi(s) for s in args.phis.split(",")]
        params: dict[str, Any] = {"phis": args.phis}
    else:
        grid = phi_range(args.phi_min, args.phi_max, args.n_points)
        params = {"phi_min": args.phi_min, "phi_max": args.phi_max, "n_points": args.n_points}
    params.update(coin=args.coin, coin_normalized=_coin_param(coin))
    rows = _sweep(overlap_row, grid, args.workers, coin)
    _write(args.out, _csv(RunManifest("overlap", params), ["phi", "F_plus", "F_minus", "F_total"], rows))
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    report = run_suite(perturb=args.perturb, log=lambda m: log.info("%s", m))
    manifest = RunManifest("oracle", {"perturb": args.perturb})
    report["manifest"] = asdict(manifest)
    _write(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    if failed:
        log.error("failed checks: %s", ", ".join(failed))
        return 1
    return 0


def cmd_decohere(args: argparse.Namespace) -> int:
    phi = parse_phi(args.phi)
    coin = parse_coin(args.coin)
    if not (0 <= args.p <= 1):
        raise UsageError("p must lie in [0, 1]")
    if not (0 <= args.steps <= 200):
        raise UsageError("steps must lie in [0, 200]")
    if args.trajectories < 1:
        raise UsageError("trajectories must be >= 1")
    dist = evolve_decohered(*coin, float(phi), args.p, args.steps, args.trajectories, seed=args.seed)
    manifest = RunManifest(
        "decohere",
        {
            "phi": str(phi),
            "coin": args.coin,
            "coin_normalized": _coin_param(coin),
            "p": args.p,
            "steps": args.steps,
            "trajectories": args.trajectories,
        },
        seed=args.seed,
    )
    _write(args.out, _csv(manifest, ["position", "mean_probability", "std_error"], dist.rows()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="defectwalk", description="Hadamard walk with a phase defect at the origin.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def out(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default="-", help=f"output file ('-' for stdout; relative to ${OUTPUT_DIR_ENV} if set)")

    p = sub.add_parser("evolve", help="position distribution after a number of steps")
    p.add_argument("--phi", required=True, help="defect phase, e.g. 1/6")
    p.add_argument("--coin", required=True, help="alpha,beta e.g. 0.7071,0.7071i, or zero|one|plus_i|minus_i")
    p.add_argument("--steps", type=int, required=True)
    out(p)
    p.set_defaults(func=cmd_evolve)

    def grid_args(p: argparse.ArgumentParser, required: bool) -> None:
        p.add_argument("--phi-min", required=required, default="1/100")
        p.add_argument("--phi-max", required=required, default="99/100")
        p.add_argument("--n-points", type=int, required=required, default=99)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("spectrum", help="decay parameters, existence flags and eigenvalues over phi")
    grid_args(p, True)
    out(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("overlap", help="overlap of a coin state with the bound states over phi")
    p.add_argument("--coin", required=True)
    p.add_argument("--phis", help="comma-separated phi values (overrides the range options)")
    grid_args(p, False)
    out(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("oracle", help="run the verification suite and emit a JSON report")
    p.add_argument("--perturb", type=float, default=0.0, help="negative-control mode: shift closed-form constants")
    out(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("decohere", help="coin-measurement decoherence, trajectory average")
    p.add_argument("--phi", required=True)
    p.add_argument("--coin", required=True)
    p.add_argument("--p", type=float, required=True, help="coin-measurement probability per step")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--trajectories", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    out(p)
    p.set_defaults(func=cmd_decohere)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, NormalizationError) as exc:
        ap.exit(2, f"defectwalk {args.command}: error: {exc}\n")
    return 2
