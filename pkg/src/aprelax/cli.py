"""Command-line front end: ``aprelax run | sweep | check``.

Settings resolve in three layers: built-in defaults, then an optional
``key = value`` config file, then explicit flags. Exit status is 0 on
success, 1 on a solver abort or failing check, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .checks import run_checks
from .models import COMPONENTS, ModelName
from .scheme import SolverError
from .study import StudyConfig, StudyResult, StudyRow, emit_csv, emit_plot, run_pair, sweep

log = logging.getLogger("aprelax")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
# flag destination -> StudyConfig field
FLAG_KEYS = {"model": "model", "ic": "ic", "n": "N_list", "eps": "eps_list", "sigma": "sigma",
             "gamma": "gamma", "mu": "mu", "t_final": "T", "cfl": "cfl",
             "boundary": "boundary", "diffusion_number": "diffusion_number"}


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 3:
        raise argparse.ArgumentTypeError(f"a grid needs at least 3 cells, got {v}")
    return v


def _float_list(text, positive=True):
    vals = []
    for part in str(text).split(","):
        try:
            v = float(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {part.strip()!r}")
        if not np.isfinite(v) or (positive and not v > 0):
            raise argparse.ArgumentTypeError(f"expected a positive number, got {part.strip()!r}")
        vals.append(v)
    return tuple(vals)


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected at least 1 case, got {v}")
    return v


def _int_list(text):
    return tuple(_positive_int(p) for p in str(text).split(","))


def _positive_float(text):
    v = _float_list(text)
    if len(v) != 1:
        raise argparse.ArgumentTypeError(f"expected a single number, got {text!r}")
    return v[0]


def _nonneg_float(text):
    v = _float_list(text, positive=False)
    if len(v) != 1 or v[0] < 0:
        raise argparse.ArgumentTypeError(f"expected a number >= 0, got {text!r}")
    return v[0]


def _optional_float(text):
    if str(text).strip().lower() == "none":
        return None
    return _positive_float(text)


def _name_list(choices):
    def parse(text):
        vals = tuple(p.strip() for p in str(text).split(","))
        for v in vals:
            if v not in choices:
                raise argparse.ArgumentTypeError(f"invalid choice {v!r} (choose from {', '.join(choices)})")
        return vals
    return parse


def _boundary(text):
    vals = _name_list(["zeroflux", "periodic"])(text)
    if len(vals) != 1:
        raise argparse.ArgumentTypeError(f"expected one boundary mode, got {text!r}")
    return vals[0]


MODELS = [m.value for m in ModelName]
ICS = ["discontinuous", "smooth"]
# parsers for config-file values, keyed by StudyConfig field
VALUE_PARSERS = {
    "model": _name_list(MODELS), "ic": _name_list(ICS), "N_list": _int_list,
    "eps_list": _float_list, "T": _nonneg_float, "sigma": _positive_float,
    "gamma": _positive_float, "mu": _positive_float, "cfl": _positive_float,
    "domain": lambda t: _float_list(t, positive=False),
    "boundary": _boundary, "tau_star": _positive_float,
    "diffusion_number": _optional_float,
}


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(format_value(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def dump_config(cfg: StudyConfig) -> str:
    return "".join(f"{k} = {format_value(v)}\n" for k, v in asdict(cfg).items())


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; unknown keys are rejected."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}")
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        where = f"{path}:{lineno}"
        if not sep:
            raise UsageError(f"{where}: expected 'key = value', got {raw!r}")
        if key not in VALUE_PARSERS:
            raise UsageError(f"{where}: unknown key {key!r}")
        try:
            out[key] = VALUE_PARSERS[key](value)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{where}: {key}: {exc}")
    return out


def build_parser() -> argparse.ArgumentParser:
    # override flags default to SUPPRESS so "not given" is distinguishable
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--model", type=_name_list(MODELS), help="psystem|gt|euler|visco (sweep: comma list)")
    common.add_argument("--ic", type=_name_list(ICS), help="discontinuous|smooth (sweep: comma list)")
    common.add_argument("--n", type=_int_list, help="cell count (sweep: comma list)")
    common.add_argument("--eps", type=_float_list, help="eps > 0 (sweep: comma list)")
    common.add_argument("--sigma", type=_positive_float)
    common.add_argument("--gamma", type=_positive_float)
    common.add_argument("--mu", type=_positive_float)
    common.add_argument("--t-final", type=_nonneg_float)
    common.add_argument("--cfl", type=_positive_float)
    common.add_argument("--boundary", type=_boundary, help="zeroflux|periodic")
    common.add_argument("--diffusion-number", type=_optional_float,
                        help="explicit-diffusion cap on dt, or 'none' for the pure CFL rule")
    common.add_argument("--config", metavar="PATH", default=None)
    common.add_argument("--out", metavar="DIR", default="out")
    common.add_argument("--dump-config", action="store_true", default=False,
                        help="print the resolved settings and exit")
    common.add_argument("-v", "--verbose", action="store_true", default=False)

    p = argparse.ArgumentParser(prog="aprelax", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="one relaxation/limit pair")
    sub.add_parser("sweep", parents=[common], help="full eps x N study with CSV and plot")
    chk = sub.add_parser("check", parents=[common], help="entropy identity and bound suites")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--cases", type=_count, default=1000)
    chk.add_argument("--inject-psi-sign-flip", action="store_true", default=False,
                     help=argparse.SUPPRESS)
    return p


def resolve(args) -> StudyConfig:
    values = read_config(args.config) if args.config else {}
    for dest, key in FLAG_KEYS.items():
        if hasattr(args, dest):
            values[key] = getattr(args, dest)
    try:
        return StudyConfig(**values)
    except ValueError as exc:
        raise UsageError(f"invalid settings: {exc}")


def _single(cfg: StudyConfig, name: str, flag: str):
    vals = getattr(cfg, name)
    if len(vals) != 1:
        raise UsageError(f"{flag}: run takes a single value, got {format_value(vals)}")
    return vals[0]


def _eps_tag(eps: float) -> str:
    return f"{eps:g}"


def cmd_run(cfg: StudyConfig, out: Path) -> int:
    model = _single(cfg, "model", "--model")
    ic = _single(cfg, "ic", "--ic")
    N = _single(cfg, "N_list", "--n")
    eps = _single(cfg, "eps_list", "--eps")
    try:
        pr = run_pair(model, ic, N, eps, cfg)
    except SolverError as exc:
        print(f"aprelax: solver aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    row = StudyRow(model, ic, N, eps, cfg.sigma, cfg.gamma, cfg.mu, cfg.T, cfg.cfl,
                   pr.phi0, pr.phiT, pr.steps, pr.lambda_max, pr.lambda0)
    d = out / model / ic / f"N{N}_eps{_eps_tag(eps)}"
    emit_csv(StudyResult(cfg, [row]), d / "run.csv")
    comps = COMPONENTS[ModelName(model)]
    x = cfg.grid(N).centers
    cols = [x, *pr.q, *pr.qbar]
    header = ",".join(["x", *comps, *(c + "_bar" for c in comps)])
    lines = [header] + [",".join(f"{v:.16e}" for v in vals) for vals in zip(*cols)]
    (d / "fields.csv").write_text("".join(line + "\n" for line in lines))
    log.info("wrote %s", d)
    print(row.csv_line())
    return EXIT_OK


def cmd_sweep(cfg: StudyConfig, out: Path) -> int:
    result = sweep(cfg)
    emit_csv(result, out / "sweep.csv")
    try:
        emit_plot(result, out / "sweep.svg")
    except ValueError as exc:
        log.warning("no plot: %s", exc)
    print(f"{'group':<32} {'rate':>8} {'max resid':>10} {'points':>6}")
    for group, fit in result.fitted_rates.items():
        if fit is None:
            print(f"{group:<32} {'n/a':>8}")
        else:
            print(f"{group:<32} {fit.slope:8.4f} {fit.residual:10.3e} {len(fit.used):6d}")
    for job, msg in result.failures:
        print(f"aprelax: {msg}", file=sys.stderr)
    return EXIT_FAIL if result.failures else EXIT_OK


def cmd_check(seed: int, cases: int, inject: bool) -> int:
    outcomes = run_checks(seed, cases, flip_psi=inject)
    print(f"{'property':<28} {'cases':>6} {'worst':>11} {'tolerance':>10} result")
    for o in outcomes:
        print(f"{o.name:<28} {o.cases:6d} {o.worst:11.3e} {o.tolerance:10.1e} "
              f"{'pass' if o.passed else 'FAIL'}")
    failed = [o for o in outcomes if not o.passed]
    if failed:
        print(f"aprelax: {failed[0].name} failed (seed {seed}): {failed[0].failure}",
              file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        out = Path(args.out)
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out)
        return cmd_check(args.seed, args.cases, args.inject_psi_sign_flip)
    except UsageError as exc:
        print(f"aprelax: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"aprelax: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
