"""Command line entry point: ``isodense <subcommand> [options]``.

JSON output carries ``"schema": "isodense/1"`` and sorted keys so identical
invocations produce identical bytes.  Exit codes: 0 success, 1 bad input,
2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .density import INF, RadialDensity, classify_shape, density_from_spec
from .existence import divergence_verdict, planar_annulus_inequality_check, zeta_sequence
from .line1d import brute_force_profile, solve_profile
from .quadrature import QuadratureError
from .spectral import ConvergenceError, GridDomain, faber_krahn_compare, lambda1
from .symmetrize import ColumnarSet, converge_to_ball, steiner_symmetrize, weighted_perimeter_columnar, \
    weighted_volume_columnar
from .variational import ball_stability, first_variation_check, mean_curvature_hyperplane, mean_curvature_sphere

SCHEMA = "isodense/1"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2

PROFILE_CSV_HEADER = ("volume", "infimum_perimeter", "attained", "kinds", "fleeing_end")


@dataclass
class RunConfig:
    """A subcommand plus its options; every option has a default in the parser."""

    subcommand: str
    options: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "json"
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# helpers


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    return v


def dump_json(command: str, result) -> str:
    return json.dumps({"schema": SCHEMA, "command": command, "result": _clean(result)}, sort_keys=True,
                      indent=2) + "\n"


def _params(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValueError(f"parameter must look like name=value, got {item!r}")
        out[name.strip()] = float(value)
    return out


def _pair(text: str | None, default=(-INF, INF)) -> tuple[float, float]:
    if text is None:
        return default
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'a,b', got {text!r}")
    vals = tuple(float(p.replace("+inf", "inf")) for p in parts)
    if not vals[0] < vals[1]:
        raise ValueError(f"empty range {text!r}")
    return vals


def _volumes(opts: dict) -> list[float]:
    if opts.get("volume") is not None and opts.get("sweep") is not None:
        raise ValueError("--volume and --sweep are mutually exclusive")
    if opts.get("volume") is not None:
        return [float(opts["volume"])]
    if opts.get("sweep") is not None:
        parts = opts["sweep"].split(":")
        if len(parts) != 3:
            raise ValueError("--sweep expects lo:hi:count")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1 or not 0 < lo <= hi:
            raise ValueError("--sweep needs 0 < lo <= hi and count >= 1")
        return list(np.linspace(lo, hi, n)) if n > 1 else [lo]
    raise ValueError("one of --volume or --sweep is required")


def _threads() -> int:
    raw = os.environ.get("ISODENSE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"ISODENSE_THREADS must be an integer, got {raw!r}") from None


def _radial_from_f(spec: str, n: int, params: dict) -> RadialDensity:
    """Radial density from an expression for ``f`` in ``r`` (``exp(...)`` is stripped)."""
    ast = ex.parse(spec, params=tuple(params))
    if isinstance(ast, ex.Unary) and ast.op == "exp":
        return RadialDensity.from_expression(ex.render(ast.arg), n=n, params=params)
    return RadialDensity.from_expression(f"log({spec})", n=n, params=params)


def _density(opts: dict):
    return density_from_spec(opts["density"], params=_params(opts.get("param")),
                             domain=_pair(opts.get("domain")), as_psi=bool(opts.get("as_psi")))


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# subcommands; each returns (text, converged)


def cmd_profile(cfg: RunConfig):
    o = cfg.options
    dens = _density(o)
    policy = "free-at-domain-endpoints" if o.get("free_boundary") else "count-all"
    vols = _volumes(o)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda v: solve_profile(dens, v, policy), vols))
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PROFILE_CSV_HEADER)
        for r in results:
            d = _clean(r.to_dict())
            w.writerow([repr(r.volume), repr(r.infimum_perimeter), str(r.attained).lower(),
                        ";".join(r.kinds), d["fleeing_end"] if d["fleeing_end"] is not None else ""])
        return buf.getvalue(), True
    payload = results[0].to_dict() if len(results) == 1 else [r.to_dict() for r in results]
    return dump_json("profile", payload), True


def cmd_classify(cfg: RunConfig):
    o = cfg.options
    shape = classify_shape(_density(o), window=_pair(o["window"]) if o.get("window") else None)
    return dump_json("classify", asdict(shape) | {"resolved": shape.resolved}), True


def cmd_stability(cfg: RunConfig):
    o = cfg.options
    dens = RadialDensity.from_expression(o["delta"], n=int(o["n"]), params=_params(o.get("param")))
    return dump_json("stability", ball_stability(dens, float(o["r"]), L=int(o["modes"])).to_dict()), True


def cmd_meancurv(cfg: RunConfig):
    o = cfg.options
    dens = RadialDensity.from_expression(o["delta"], n=int(o["n"]), params=_params(o.get("param")))
    if (o.get("sphere") is None) == (o.get("hyperplane") is None):
        raise ValueError("give exactly one of --sphere R or --hyperplane C")
    if o.get("sphere") is not None:
        r = float(o["sphere"])
        return dump_json("meancurv", {"surface": "sphere", "r": r, "H": mean_curvature_sphere(dens, r)}), True
    c = float(o["hyperplane"])
    dim = dens.n + 1
    point = [float(v) for v in o["point"].split(",")] if o.get("point") else [0.0] * (dim - 1) + [c]
    H = mean_curvature_hyperplane(dens, c, point)
    return dump_json("meancurv", {"surface": "hyperplane", "c": c, "point": point, "H": H}), True


def cmd_firstvar(cfg: RunConfig):
    o = cfg.options
    dens = RadialDensity.from_expression(o["delta"], n=int(o["n"]), params=_params(o.get("param")))
    if (o.get("sphere") is None) == (o.get("hyperplane") is None):
        raise ValueError("give exactly one of --sphere R or --hyperplane C")
    surface = ("sphere", float(o["sphere"])) if o.get("sphere") is not None else ("hyperplane", float(o["hyperplane"]))
    flow = o.get("flow", "constant")
    if flow not in ("constant", "harmonic"):
        flow = tuple(float(v) for v in flow.split(","))
    res = first_variation_check(dens, surface, flow=flow, h=float(o["step"]))
    return dump_json("firstvar", res.to_dict()), True


def _input_set(cfg: RunConfig) -> ColumnarSet:
    o = cfg.options
    if o.get("input"):
        return ColumnarSet.from_json(_read(o["input"]))
    return ColumnarSet.random_union(cfg.seed, o.get("blobs"), h=float(o["h"]), c=float(o["c"]))


def cmd_symmetrize(cfg: RunConfig):
    o = cfg.options
    cs = _input_set(cfg)
    if o.get("converge"):
        res = converge_to_ball(cs, max_steps=int(o["max_steps"]), tol=o.get("tol"), seed=cfg.seed)
        if o.get("output_set"):
            with open(o["output_set"], "w", encoding="utf-8") as fh:
                fh.write(res.final.to_json())
        text = res.logs_csv() if cfg.format == "csv" else dump_json(
            "symmetrize", res.to_dict() | {"logs": [dict(zip(log.FIELDS, log.row())) for log in res.logs]})
        return text, res.converged
    out = steiner_symmetrize(cs, axis=int(o["axis"]))
    if o.get("output_set"):
        with open(o["output_set"], "w", encoding="utf-8") as fh:
            fh.write(out.to_json())
    info = {
        "axis": int(o["axis"]),
        "volume_before": weighted_volume_columnar(cs),
        "volume_after": weighted_volume_columnar(out),
        "perimeter_before": weighted_perimeter_columnar(cs),
        "perimeter_after": weighted_perimeter_columnar(out),
    }
    if cfg.format == "csv":
        return "\n".join([",".join(info), ",".join(repr(v) if isinstance(v, float) else str(v)
                                                   for v in info.values())]) + "\n", True
    return dump_json("symmetrize", info | {"set": json.loads(out.to_json())}), True


def cmd_existence(cfg: RunConfig):
    o = cfg.options
    n = int(o["n"])
    dens = _radial_from_f(o["density"], n, _params(o.get("param")))
    seq = zeta_sequence(dens, n, int(o["m_max"]), mode=o["mode"])
    horizon = min(int(o["horizon"]), seq.log_zeta.size)
    verdict = divergence_verdict(seq, horizon) if horizon >= 3 else "inconclusive"
    if cfg.format == "json":
        return dump_json("existence", {"n": n, "mode": seq.mode, "m": seq.m.tolist(),
                                       "log_zeta": seq.log_zeta.tolist(), "verdict": verdict,
                                       "diagnostic": True}), True
    return seq.to_csv() + f"# verdict: {verdict} (numerical diagnostic, not a proof)\n", True


def cmd_annulus(cfg: RunConfig):
    o = cfg.options
    cs = _input_set(cfg)
    return dump_json("annulus-check", planar_annulus_inequality_check(cs, float(o["r0"])).to_dict()), True


def cmd_eigen(cfg: RunConfig):
    o = cfg.options
    dom = GridDomain.from_json(_read(o["mask"]))
    res = lambda1(dom, float(o["c"]), o["convention"])
    return dump_json("eigen", res.to_dict()), res.converged


def cmd_faber_krahn(cfg: RunConfig):
    o = cfg.options
    dom = GridDomain.from_json(_read(o["mask"]))
    res = faber_krahn_compare(dom, float(o["c"]), o["convention"], tolerance=float(o["tolerance"]))
    return dump_json("faber-krahn", res.to_dict()), True


def cmd_oracle(cfg: RunConfig):
    o = cfg.options
    dens = _density(o)
    policy = "free-at-domain-endpoints" if o.get("free_boundary") else "count-all"
    res = brute_force_profile(dens, float(o["volume"]), grid=float(o["grid"]),
                              max_components=int(o["components"]),
                              window=_pair(o["window"]) if o.get("window") else None, boundary_policy=policy)
    return dump_json("oracle", {"perimeter": res.perimeter, "region": None if res.region is None else [list(iv) for iv in res.region.intervals],
                                "allowance": res.allowance, "spacing": res.spacing}), True


COMMANDS = {
    "profile": cmd_profile,
    "classify": cmd_classify,
    "stability": cmd_stability,
    "meancurv": cmd_meancurv,
    "firstvar": cmd_firstvar,
    "symmetrize": cmd_symmetrize,
    "existence": cmd_existence,
    "annulus-check": cmd_annulus,
    "eigen": cmd_eigen,
    "faber-krahn": cmd_faber_krahn,
    "oracle": cmd_oracle,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default json; existence and symmetrize --converge default to csv)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized fixtures (default 0)")

    dens = argparse.ArgumentParser(add_help=False)
    dens.add_argument("--density", required=True,
                      help="built-in name, CSV path (x,psi) or expression for f such as 'exp(x)'")
    dens.add_argument("--as-psi", action="store_true", help="read the expression as psi = log f")
    dens.add_argument("--domain", help="'a,b' (default -inf,inf)")
    dens.add_argument("--param", action="append", help="name=value, repeatable")

    radial = argparse.ArgumentParser(add_help=False)
    radial.add_argument("--delta", required=True, help="psi as a function of r, e.g. 'r^2'")
    radial.add_argument("--n", type=int, default=1, help="hypersurface dimension; ambient is n+1 (default 1)")
    radial.add_argument("--param", action="append", help="name=value, repeatable")

    setin = argparse.ArgumentParser(add_help=False)
    setin.add_argument("--input", help="ColumnarSet JSON; without it a random union is generated from --seed")
    setin.add_argument("--blobs", type=int, default=None, help="blob count for the random union (default 1-4)")
    setin.add_argument("--h", type=float, default=1 / 128, help="grid spacing (default 1/128)")
    setin.add_argument("--c", type=float, default=1.0, help="density exp(c|x|^2) (default 1)")

    parser = argparse.ArgumentParser(prog="isodense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("profile", parents=[common, dens], help="isoperimetric profile on the line")
    p.add_argument("--volume", type=float)
    p.add_argument("--sweep", help="lo:hi:count")
    p.add_argument("--free-boundary", action="store_true", help="domain endpoints cost nothing")

    p = sub.add_parser("classify", parents=[common, dens], help="unimodality class of a density")
    p.add_argument("--window", help="'a,b' sampling window")

    p = sub.add_parser("stability", parents=[common, radial], help="stability of a centred ball")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--modes", type=int, default=8, help="highest spherical-harmonic degree (default 8)")

    for name, helptext in (("meancurv", "generalized mean curvature"), ("firstvar", "first-variation residuals")):
        p = sub.add_parser(name, parents=[common, radial], help=helptext)
        p.add_argument("--sphere", type=float, help="radius of the centred sphere")
        p.add_argument("--hyperplane", type=float, help="offset c of {x_last = c}")
        if name == "meancurv":
            p.add_argument("--point", help="comma-separated point on the hyperplane")
        else:
            p.add_argument("--flow", default="constant", help="constant, harmonic or 'a0,a1'")
            p.add_argument("--step", type=float, default=1e-2, help="finite-difference step (default 0.01)")

    p = sub.add_parser("symmetrize", parents=[common, setin], help="Steiner symmetrization runs")
    p.add_argument("--axis", type=int, default=1, help="coordinate the columns run along (default 1)")
    p.add_argument("--converge", action="store_true", help="iterate towards the ball")
    p.add_argument("--max-steps", type=int, default=80)
    p.add_argument("--tol", type=float, default=None, help="stopping tolerance (default h/4)")
    p.add_argument("--output-set", help="write the final ColumnarSet JSON here")

    p = sub.add_parser("existence", parents=[common], help="zeta-criterion table and verdict")
    p.add_argument("--density", required=True, help="f as an expression in r, e.g. 'exp(r^2)'")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m-max", type=int, default=100)
    p.add_argument("--mode", choices=("radial", "annulus"), default="radial")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--param", action="append")

    p = sub.add_parser("annulus-check", parents=[common, setin], help="planar annulus inequality")
    p.add_argument("--r0", type=float, required=True)

    for name in ("eigen", "faber-krahn"):
        p = sub.add_parser(name, parents=[common], help="lowest Dirichlet eigenvalue" if name == "eigen"
                           else "comparison with the equal-volume centred ball")
        p.add_argument("--mask", required=True, help="mask JSON {h, window, rows}")
        p.add_argument("--c", type=float, default=0.0 if name == "eigen" else 1.0)
        p.add_argument("--convention", choices=("paper", "weighted-laplacian"), default="paper")
        if name == "faber-krahn":
            p.add_argument("--tolerance", type=float, default=1e-2)

    p = sub.add_parser("oracle", parents=[common, dens], help="brute-force profile")
    p.add_argument("--volume", type=float, required=True)
    p.add_argument("--grid", type=float, default=0.05)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--window", help="'a,b' search window (default [-10,10] within the domain)")
    p.add_argument("--free-boundary", action="store_true")
    return parser


_CSV_DEFAULT = {"existence"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in ("subcommand", "output", "format", "seed")}
    fmt = args.format
    if fmt is None:
        fmt = "csv" if args.subcommand in _CSV_DEFAULT or opts.get("converge") else "json"
    return RunConfig(args.subcommand, opts, args.output, fmt, args.seed)


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    text, converged = COMMANDS[cfg.subcommand](cfg)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK if converged else EXIT_NUMERIC


_EXPRESSION_FLAGS = ("--delta", "--density", "--window", "--domain", "--point", "--flow")


def _glue_expressions(argv: Sequence[str]) -> list[str]:
    # argparse reads "--delta -sqrt(r)" or "--window -5,5" as two flags; glue such values on
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _EXPRESSION_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_expressions(sys.argv[1:] if argv is None else list(argv)))
    cfg = config_from_args(args)
    try:
        return run(cfg)
    except (QuadratureError, ConvergenceError) as err:
        print(f"isodense: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, ArithmeticError, OSError, KeyError, json.JSONDecodeError) as err:
        print(f"isodense: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
