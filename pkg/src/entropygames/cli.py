"""Command-line interface.

Subcommands: value, bounds, simulate, team, extract.  All randomness
derives from a single --seed through the philox4x64-v1 substream scheme,
so any output is replayable bit-exactly; every output embeds a run
manifest (command, argv, input hashes, seed, version) whose only
run-dependent field is the timestamp.

Exit codes: 0 success, 1 usage error, 2 input validation error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .game import validate_game
from .info import JointPmf, conditional_entropy
from .minentropy import bounds_report
from .lp import game_value
from .randomness import build_extractor
from .rational import (
    ResourceCapError,
    ValidationError,
    format_fraction,
    to_fraction,
)
from .repeated import RepeatedGameConfig, run as run_simulation
from .rng import GENERATOR_NAME
from .team import TeamGameSpec, team_maxmin_search

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_CAP = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(command: str, args, inputs: dict, seed=None) -> dict:
    return {
        "command": command,
        "argv": list(args),
        "inputs": {path: _sha256(path) for path in inputs.values() if path},
        "seed": seed,
        "version": __version__,
        "generator": GENERATOR_NAME,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}")


def _load_game(path: str):
    payload = _load_json(path)
    if "matrix" not in payload:
        raise ValidationError(f"{path} has no 'matrix' key")
    return validate_game(payload["matrix"])


def _load_source(path: str) -> JointPmf:
    payload = _load_json(path)
    if "pxy" not in payload:
        raise ValidationError(f"{path} has no 'pxy' key")
    return JointPmf(tuple(tuple(v for v in row) for row in payload["pxy"]))


def _write_atomic(path: str, text: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit_json(payload: dict, out_path: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        _write_atomic(out_path, text)
    sys.stdout.write(text)


def cmd_value(argv) -> int:
    parser = _Parser(prog="entropygames value")
    parser.add_argument("game", help="game JSON file ({'matrix': [[...]]})")
    parser.add_argument("--out", default=None, help="also write the JSON here")
    ns = parser.parse_args(argv)
    game = _load_game(ns.game)
    sol = game_value(game)
    payload = {
        "w_star": format_fraction(sol.optimum),
        "nash": [format_fraction(p) for p in sol.argmax],
        "v": format_fraction(game.v),
        "m_lo": format_fraction(game.m_lo),
        "m_hi": format_fraction(game.m_hi),
        "manifest": _manifest("value", argv, {"game": ns.game}),
    }
    _emit_json(payload, ns.out)
    return EXIT_OK


def cmd_bounds(argv) -> int:
    parser = _Parser(prog="entropygames bounds")
    parser.add_argument("game")
    parser.add_argument("--w-min", default=None)
    parser.add_argument("--w-max", default=None)
    parser.add_argument("--steps", type=int, required=True)
    parser.add_argument("--out", required=True)
    ns = parser.parse_args(argv)
    if ns.steps < 1:
        parser.error("--steps must be positive")
    game = _load_game(ns.game)
    w_star = game_value(game).optimum
    lo = game.v if ns.w_min is None else max(game.v, to_fraction(ns.w_min))
    hi = w_star if ns.w_max is None else min(w_star, to_fraction(ns.w_max))
    if lo > hi:
        raise ValidationError(f"empty grid: [{lo}, {hi}] after clamping to [v, w*]")
    if ns.steps == 1:
        grid = [lo]
    else:
        grid = [lo + Fraction(k, ns.steps - 1) * (hi - lo) for k in range(ns.steps)]
    report = bounds_report(game, grid)
    manifest = _manifest("bounds", argv, {"game": ns.game})
    import io

    buf = io.StringIO()
    report.write_csv(buf, header_lines=[f"manifest: {json.dumps(manifest)}"])
    _write_atomic(ns.out, buf.getvalue())
    sys.stdout.write(f"wrote {len(report.rows)} rows to {ns.out}\n")
    return EXIT_OK


def cmd_simulate(argv) -> int:
    parser = _Parser(prog="entropygames simulate")
    parser.add_argument("--game", required=True)
    parser.add_argument("--source", required=True)
    parser.add_argument("--block-len", type=int, required=True)
    parser.add_argument("--blocks", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bob", choices=("myopic", "fixed", "uniform"), default="myopic")
    parser.add_argument("--bob-column", type=int, default=0)
    parser.add_argument("--out", required=True)
    ns = parser.parse_args(argv)
    game = _load_game(ns.game)
    source = _load_source(ns.source)
    cfg = RepeatedGameConfig(
        game=game,
        source=source,
        L=ns.block_len,
        N=ns.blocks,
        seed=ns.seed,
        bob=ns.bob,
        bob_column=ns.bob_column,
    )
    trace = run_simulation(cfg)
    manifest = _manifest(
        "simulate", argv, {"game": ns.game, "source": ns.source}, seed=ns.seed
    )
    import io

    buf = io.StringIO()
    trace.write_csv(buf, header_lines=[f"manifest: {json.dumps(manifest)}"])
    _write_atomic(ns.out, buf.getvalue())
    summary = dict(trace.summary())
    summary["manifest"] = manifest
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_team(argv) -> int:
    parser = _Parser(prog="entropygames team")
    parser.add_argument("team", help="team JSON ({'players','payoff','channel'})")
    parser.add_argument("--restarts", type=int, default=6)
    parser.add_argument("--grid", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    ns = parser.parse_args(argv)
    payload = _load_json(ns.team)
    for key in ("players", "payoff", "channel"):
        if key not in payload:
            raise ValidationError(f"{ns.team} has no '{key}' key")
    spec = TeamGameSpec.from_json_dict(payload)
    res = team_maxmin_search(spec, restarts=ns.restarts, grid=ns.grid, seed=ns.seed)
    w_hat = res.w_hat
    out = {
        "w_hat": format_fraction(w_hat) if isinstance(w_hat, Fraction) else float(w_hat),
        "w_hat_float": float(w_hat),
        "slack": res.certificate["slack"],
        "family": res.certificate["family"],
        "bound_kind": "lower",
        "dist": {
            "p_r": [float(v) for v in res.best.p_r],
            "p_q_given_r": [[float(v) for v in row] for row in res.best.p_q_given_r],
            "p_ai_given_q": [
                [[float(v) for v in row] for row in player]
                for player in res.best.p_ai_given_q
            ],
        },
        "manifest": _manifest("team", argv, {"team": ns.team}, seed=ns.seed),
    }
    _emit_json(out, ns.out)
    return EXIT_OK


def cmd_extract(argv) -> int:
    parser = _Parser(prog="entropygames extract")
    parser.add_argument("--source", required=True)
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--bits", type=int, required=True)
    parser.add_argument("--eps", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-tries", type=int, default=64)
    parser.add_argument("--out", default=None)
    ns = parser.parse_args(argv)
    source = _load_source(ns.source)
    ext = build_extractor(
        source, ns.n, ns.bits, ns.seed, max_tries=ns.max_tries, eps=ns.eps
    )
    payload = ext.spec()
    payload["measured_tv_exact"] = format_fraction(ext.measured_tv)
    payload["source_cond_entropy"] = conditional_entropy(source)
    payload["manifest"] = _manifest("extract", argv, {"source": ns.source}, seed=ns.seed)
    _emit_json(payload, ns.out)
    return EXIT_OK


COMMANDS = {
    "value": cmd_value,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "team": cmd_team,
    "extract": cmd_extract,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        sys.stderr.write(
            "usage: entropygames {value,bounds,simulate,team,extract} ...\n"
        )
        return EXIT_USAGE if not argv else EXIT_OK
    cmd = argv[0]
    if cmd not in COMMANDS:
        sys.stderr.write(f"error: unknown command {cmd!r}\n")
        return EXIT_USAGE
    try:
        return COMMANDS[cmd](argv[1:])
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except ValidationError as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return EXIT_VALIDATION
    except ResourceCapError as exc:
        sys.stderr.write(f"resource cap: {exc}\n")
        return EXIT_CAP


if __name__ == "__main__":
    raise SystemExit(main())
