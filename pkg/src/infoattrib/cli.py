"""Command-line front end.

Exit codes: 0 success, 2 capacity limit, 3 invalid input, 4 numerical failure.
Every flag default can be overridden by an ``INFOATTRIB_<FLAG>`` environment
variable (for example ``INFOATTRIB_SEED=7``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

from . import __version__
from .axioms import ValueSpec, check_axioms, named_value
from .errors import CapacityError, ConvergenceError, DomainError, InfoAttribError, ValidationError
from .games import (
    dividend_rows,
    dividends_csv,
    is_monotone,
    is_nonnegative,
    is_submodular,
    is_supermodular,
    load_game,
    null_players,
)
from .information import DEFAULT_MAX_ITERS, DEFAULT_TOL, attribute, load_distribution
from .lattice import (
    DEFAULT_MAX_DOWNSET_RANK,
    DEFAULT_MAX_STREAM_RANK,
    boolean_algebra,
    get_lattice,
)
from .selectors import BUILTIN_SHARING, SharingSystem, sharing_value
from .values import ExtensionDistribution, hierarchical_value, random_order_value

EXIT_OK, EXIT_CAPACITY, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4
ENV_PREFIX = "INFOATTRIB_"
VALUES = ("hierarchical", "priority", "proportional", "random-order", "sharing-file")


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    rank: int | None = None
    format: str = "json"
    value: str = "hierarchical"
    method: str = "exact"
    samples: int | None = None
    seed: int | None = None
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    allow_large: bool = False
    sharing: str | None = None
    trials: int = 200

    def validate(self):
        if self.method == "sampled":
            if self.seed is None:
                raise ValidationError("a sampled method needs --seed")
            if self.samples is None or self.samples < 1:
                raise ValidationError("a sampled method needs --samples N with N >= 1")
        if self.tol <= 0 or self.max_iters < 1:
            raise ValidationError("--tol must be positive and --max-iters at least 1")
        if self.value == "sharing-file" and not self.sharing:
            raise ValidationError("--value sharing-file needs --sharing PATH")


def _env(name, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None or raw == "":
        return None
    try:
        if cast is bool:
            return raw.strip().lower() in {"1", "true", "yes", "on"}
        return cast(raw)
    except ValueError:
        raise ValidationError(f"environment variable {ENV_PREFIX}{name.upper()} has bad value {raw!r}") from None


def _common(p, value=True):
    p.add_argument("--input", "-i")
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=("json", "csv", "table"))
    p.add_argument("--allow-large", action="store_true", default=None)
    if value:
        p.add_argument("--value", choices=VALUES)
        p.add_argument("--method", choices=("exact", "sampled"))
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--sharing", help="sharing-system JSON for --value sharing-file")


def build_parser():
    parser = argparse.ArgumentParser(prog="infoattrib", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"infoattrib {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("lattice-stats", help="player, coalition and extension counts")
    ls.add_argument("--rank", type=int)
    _common(ls, value=False)

    game = sub.add_parser("game", help="operations on a game JSON file")
    gsub = game.add_subparsers(dest="game_command", required=True)
    for name, help_ in (("dividends", "Harsanyi dividend table"),
                        ("check", "structural predicates and axiom report"),
                        ("value", "allocation under a chosen value")):
        g = gsub.add_parser(name, help=help_)
        _common(g)
        g.add_argument("--rank", type=int)
        g.add_argument("--trials", type=int)

    dec = sub.add_parser("decompose", help="Information Attribution of a distribution JSON file")
    _common(dec)
    dec.add_argument("--tol", type=float)
    dec.add_argument("--max-iters", type=int)
    return parser


def _config(args):
    command = args.command if args.command != "game" else f"game {args.game_command}"
    cfg = RunConfig(command=command)
    casts = {"rank": int, "samples": int, "seed": int, "tol": float, "max_iters": int,
             "allow_large": bool, "trials": int}
    for name in ("input", "output", "rank", "format", "value", "method", "samples", "seed",
                 "tol", "max_iters", "allow_large", "sharing", "trials"):
        flag = getattr(args, name, None)
        if flag is not None:
            setattr(cfg, name, flag)
            continue
        env = _env(name, casts.get(name, str))
        if env is not None:
            setattr(cfg, name, env)
    cfg.validate()
    return cfg


def _table(headers, rows):
    cells = [headers] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fmt(x):
    return f"{x:.12g}"


def _envelope(cfg, result):
    config = {k: v for k, v in asdict(cfg).items() if k not in ("output",)}
    return {"tool": {"name": "infoattrib", "version": __version__}, "config": config, "result": result}


def _dump(payload):
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def cmd_lattice_stats(cfg):
    rank = cfg.rank
    if rank is None or rank < 1:
        raise ValidationError("lattice-stats needs --rank N with N >= 1")
    cap = DEFAULT_MAX_DOWNSET_RANK if not cfg.allow_large else max(rank, DEFAULT_MAX_DOWNSET_RANK)
    lat = get_lattice(rank, max_rank=cap)
    if rank <= DEFAULT_MAX_STREAM_RANK or cfg.allow_large:
        n_ext = lat.n_extensions
    else:
        n_ext = "skipped (cap)"
    result = {"rank": rank, "players": 1 << rank, "coalitions": len(lat), "linear_extensions": n_ext}
    if cfg.format == "json":
        return _dump(_envelope(cfg, result))
    rows = [[k, result[k]] for k in ("rank", "players", "coalitions", "linear_extensions")]
    if cfg.format == "csv":
        return "quantity,count\n" + "".join(f"{k},{v}\n" for k, v in rows)
    return _table(["quantity", "count"], rows)


def _load_game(cfg):
    if not cfg.input:
        raise ValidationError("--input GAME.json is required")
    try:
        v = load_game(cfg.input)
    except OSError as exc:
        raise ValidationError(f"cannot read {cfg.input}: {exc.strerror}") from None
    if cfg.rank is not None and cfg.rank != v.rank:
        raise ValidationError(f"--rank {cfg.rank} does not match the game's rank {v.rank}")
    return v


def cmd_game_dividends(cfg):
    v = _load_game(cfg)
    rows = dividend_rows(v)
    if cfg.format == "csv":
        return dividends_csv(v)
    if cfg.format == "table":
        return _table(["coalition", "worth", "dividend"], [[k, _fmt(w), _fmt(d)] for k, w, d in rows])
    result = {"rank": v.rank, "rows": [{"coalition": k, "worth": w, "dividend": d} for k, w, d in rows]}
    return _dump(_envelope(cfg, result))


def _load_sharing(cfg, rank):
    try:
        with open(cfg.sharing, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {cfg.sharing}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{cfg.sharing}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{cfg.sharing}: expected an object keyed by coalition")
    return SharingSystem.from_json(rank, data)


def _exact_cap(cfg):
    return None if not cfg.allow_large else 5


def _compute_value(cfg, v):
    name = cfg.value
    if name == "hierarchical":
        if cfg.method == "sampled":
            return hierarchical_value(v, "sampled", samples=cfg.samples, seed=cfg.seed)
        return hierarchical_value(v, "exact-dividend", max_rank=_exact_cap(cfg))
    if cfg.method == "sampled":
        raise ValidationError(f"--method sampled applies to the hierarchical value only, not {name}")
    if name == "random-order":
        return random_order_value(v, ExtensionDistribution.uniform(v.rank, max_rank=_exact_cap(cfg)))
    if name == "sharing-file":
        return sharing_value(v, _load_sharing(cfg, v.rank))
    return sharing_value(v, BUILTIN_SHARING[name](v.rank))


def cmd_game_value(cfg):
    v = _load_game(cfg)
    alloc = _compute_value(cfg, v)
    payload = alloc.to_json(cfg.value, v)
    alg = boolean_algebra(v.rank)
    if cfg.format == "json":
        return _dump(_envelope(cfg, payload))
    se = alloc.stderr
    headers = ["player", "allocation"] + (["stderr"] if se is not None else [])
    rows = []
    for i, x in enumerate(alloc.vector):
        row = [alg.key(i), _fmt(float(x))]
        if se is not None:
            row.append(_fmt(float(se[i])))
        rows.append(row)
    if cfg.format == "csv":
        return ",".join(headers) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    return _table(headers, rows)


def cmd_game_check(cfg):
    v = _load_game(cfg)
    alg = boolean_algebra(v.rank)

    def pred(check):
        out = {"holds": check.holds}
        if check.witness is not None:
            out["witness"] = list(check.witness)
        return out

    structure = {
        "monotone": pred(is_monotone(v)),
        "nonnegative": pred(is_nonnegative(v)),
        "supermodular": pred(is_supermodular(v)),
        "submodular": pred(is_submodular(v)),
        "null_players": [alg.key(i) for i in null_players(v)],
    }
    seed = 0 if cfg.seed is None else cfg.seed
    if cfg.value == "sharing-file":
        q = _load_sharing(cfg, v.rank)
        spec = ValueSpec("sharing-file", lambda g: sharing_value(g, q))
    else:
        spec = named_value(cfg.value)
    report = check_axioms(spec, rank=v.rank, trials=cfg.trials, seed=seed)
    result = {"game": structure, "axioms": report.to_json()}
    if cfg.format == "json":
        return _dump(_envelope(cfg, result))
    rows = [[r.axiom, "pass" if r.passed else "FAIL", r.trials,
             "" if r.witness is None else json.dumps(r.witness, sort_keys=True)[:80]]
            for r in report.results]
    if cfg.format == "csv":
        return "axiom,status,trials\n" + "".join(f"{a},{s},{t}\n" for a, s, t, _ in rows)
    head = "".join(f"{k}: {json.dumps(val, sort_keys=True)}\n" for k, val in structure.items())
    return head + "\n" + _table(["axiom", "status", "trials", "witness"], rows)


class ResidualError(InfoAttribError):
    pass


def cmd_decompose(cfg):
    if not cfg.input:
        raise ValidationError("--input DIST.json is required")
    try:
        p = load_distribution(cfg.input)
    except OSError as exc:
        raise ValidationError(f"cannot read {cfg.input}: {exc.strerror}") from None
    sharing = None
    if cfg.value == "sharing-file":
        sharing = _load_sharing(cfg, p.n_inputs)
    if cfg.value == "random-order":
        raise ValidationError("use --value hierarchical for the uniform random-order value")
    dec = attribute(
        p, value=cfg.value, method=cfg.method, samples=cfg.samples, seed=cfg.seed,
        sharing=sharing, tol=cfg.tol, max_iters=cfg.max_iters, max_rank=_exact_cap(cfg),
    )
    payload = dec.to_json()
    payload["inputs"] = list(p.input_names)
    payload["target"] = p.target_name
    payload["tolerances"] = {"ipf_residual": cfg.tol, "ipf_max_sweeps": cfg.max_iters,
                             "efficiency": 1e-6}
    if cfg.format == "json":
        out = _dump(_envelope(cfg, payload))
    elif cfg.format == "csv":
        out = dec.to_csv()
    else:
        rows = [[k, _fmt(x)] for k, x in dec.contributions.items()]
        out = f"I(X;Y) = {_fmt(dec.total)} bits\n" + _table(["predictor", "contribution_bits"], rows)
    if abs(dec.residual) > 1e-6:
        raise ResidualError(f"contributions miss I(X;Y) by {dec.residual:.3e} bits")
    return out


COMMANDS = {
    "lattice-stats": cmd_lattice_stats,
    "game dividends": cmd_game_dividends,
    "game value": cmd_game_value,
    "game check": cmd_game_check,
    "decompose": cmd_decompose,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        text = COMMANDS[cfg.command](cfg)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConvergenceError as exc:
        tail = ", ".join(f"{r:.3e}" for r in exc.residuals[-5:])
        print(f"error: {exc} (last residuals: {tail})", file=sys.stderr)
        return EXIT_NUMERICAL
    except ResidualError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
