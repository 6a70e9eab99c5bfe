"""Command-line driver writing convergence tables as CSV.

Configuration is resolved in the order: built-in defaults, per-command
defaults, a ``key=value`` config file (``--config``), command-line flags.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import logging
import math
import sys
from typing import Callable, Iterator, Sequence, TextIO

import numpy as np

from fracsinc.experiments import (
    ConvergenceRow,
    ExperimentConfig,
    convergence_space,
    convergence_time,
    linear_fit,
    sinc_decay,
    solve_field,
    time_singularity,
)
from fracsinc.fem import FemResourceError, ShiftedSolveError
from fracsinc.mittag_leffler import mittag_leffler
from fracsinc.sinc import RealifyError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

CSV_HEADER = "abscissa,error_l2,error_h1,oroc_l2,oroc_h1"

SOLVER_ERRORS = (
    ShiftedSolveError,
    RealifyError,
    FemResourceError,
    ArithmeticError,
    np.linalg.LinAlgError,
)


class ConfigError(ValueError):
    pass


# {{{ parsing


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer: got '{text}'")
    return int(value)


def _parse_list(parse: Callable[[str], float | int]) -> Callable[[str], tuple]:
    """Comma-separated values, or an inclusive integer range ``a..b``."""
    def parser(text: str) -> tuple:
        text = text.strip()
        if ".." in text and parse is _parse_int:
            lo, hi = (_parse_int(p) for p in text.split("..", 1))
            if hi < lo:
                raise ValueError(f"empty range '{text}'")
            return tuple(range(lo, hi + 1))
        return tuple(parse(p) for p in text.split(",") if p.strip())

    return parser


#: config keys, their parsers and the corresponding command-line flag
KEYS: dict[str, tuple[Callable[[str], object], str]] = {
    "problem": (str, "--problem"),
    "gamma": (_parse_float, "--gamma"),
    "beta": (_parse_float, "--beta"),
    "t_final": (_parse_list(_parse_float), "--t"),
    "levels": (_parse_list(_parse_int), "--levels"),
    "N": (_parse_list(_parse_int), "--N"),
    "calN_list": (_parse_list(_parse_int), "--calN"),
    "d": (_parse_float, "--d"),
    "b": (_parse_float, "--b"),
    "output_path": (str, "--out"),
    "contour_sign": (_parse_int, "--contour-sign"),
    "partition": (str, "--partition"),
    "reference": (str, "--reference"),
}


def read_config_file(filename: str) -> dict[str, object]:
    """Parse a flat ``key=value`` file; blank lines and ``#`` comments are
    ignored."""
    values: dict[str, object] = {}
    try:
        with open(filename, encoding="utf-8") as fd:
            lines = fd.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file '{filename}': {exc}") from exc

    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{filename}:{lineno}: expected 'key=value'")
        key, text = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{filename}:{lineno}: unknown key '{key}'")
        try:
            values[key] = KEYS[key][0](text)
        except ValueError as exc:
            raise ConfigError(f"{filename}:{lineno}: bad value for '{key}': {exc}") from exc
    return values


def command_defaults(command: str, partition: str = "geometric") -> dict[str, object]:
    if command == "convergence-space":
        return {"problem": "hom-1d"}
    if command == "sinc-decay":
        return {"problem": "sinc-probe", "N": (25, 50, 100, 200, 400)}
    if command == "time-singularity":
        return {
            "problem": "sinc-probe",
            "N": (100,),
            "t_final": tuple(2.0**-m for m in range(1, 11)),
        }
    if command == "convergence-time":
        return {
            "problem": "nonhom-2d",
            "levels": (5,),
            "calN_list": ((2, 4, 8, 16, 32) if partition == "geometric"
                          else (8, 16, 32, 64, 128)),
        }
    if command == "solve":
        return {"problem": "hom-2d", "levels": (5,), "calN_list": (16,)}
    return {}


def resolve_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    file_values = read_config_file(args.config) if args.config else {}

    flag_values = {}
    for key in KEYS:
        value = getattr(args, key, None)
        if value is not None:
            flag_values[key] = value

    partition = flag_values.get("partition", file_values.get("partition", "geometric"))
    values = {**command_defaults(command, str(partition)), **file_values, **flag_values}
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for key, (parse, flag) in KEYS.items():
        def checked(text: str, parse=parse) -> object:
            try:
                return parse(text)
            except ValueError as exc:
                raise argparse.ArgumentTypeError(str(exc)) from exc

        parser.add_argument(flag, dest=key, type=checked, default=None, metavar=key.upper())
    parser.add_argument("--config", default=None, help="key=value configuration file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracsinc",
        description="Sinc-quadrature solvers for space-time fractional diffusion.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ml = sub.add_parser("ml-eval", help="evaluate the Mittag-Leffler function")
    ml.add_argument("--gamma", type=float, required=True)
    ml.add_argument("--mu", type=float, default=1.0)
    ml.add_argument("--re", type=float, required=True)
    ml.add_argument("--im", type=float, default=0.0)

    for name, text in (
        ("convergence-space", "errors under uniform mesh refinement"),
        ("sinc-decay", "scalar quadrature error against N"),
        ("time-singularity", "scalar quadrature error against t"),
        ("convergence-time", "time quadrature errors of the non-homogeneous problem"),
        ("solve", "single solve, dumping the nodal values"),
    ):
        _add_config_flags(sub.add_parser(name, help=text))

    return parser


# }}}


# {{{ output


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.15g}"


@contextlib.contextmanager
def _open_output(path: str) -> Iterator[TextIO]:
    if path == "-":
        yield sys.stdout
        return
    try:
        fd = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write '{path}': {exc}") from exc
    with fd:
        yield fd


def write_table(
    fd: TextIO,
    command: str,
    cfg: ExperimentConfig,
    rows: Sequence[ConvergenceRow],
    notes: Sequence[str] = (),
) -> None:
    fd.write(f"# fracsinc {command}\n")
    fd.write(f"# config: {cfg.describe()}\n")
    for note in notes:
        fd.write(f"# {note}\n")
    fd.write(CSV_HEADER + "\n")
    for r in rows:
        fd.write(",".join(_fmt(v) for v in (
            r.abscissa, r.error_l2, r.error_h1, r.oroc_l2, r.oroc_h1
        )) + "\n")


# }}}


# {{{ commands


def cmd_ml_eval(gamma: float, mu: float, re: float, im: float) -> str:
    if not 0.0 < gamma <= 1.0 or not mu > 0.0:
        raise ConfigError(f"need 0 < gamma <= 1 and mu > 0: got gamma={gamma}, mu={mu}")
    value = complex(mittag_leffler(complex(re, im), gamma, mu))
    if value.imag == 0.0:
        return f"{value.real:.12f}"
    return f"{value.real:.12f}{value.imag:+.12f}j"


def _fit_notes(label: str, x: Sequence[float], rows: Sequence[ConvergenceRow]) -> list[str]:
    errors = [r.error_l2 for r in rows]
    if len(rows) < 2 or min(errors) <= 0.0:
        return []
    slope, r2 = linear_fit(x, np.log(errors))
    return [f"fit: slope of ln(error) against {label} = {slope:.6f}, R^2 = {r2:.6f}"]


def run_command(command: str, cfg: ExperimentConfig, fd: TextIO) -> None:
    if command == "solve":
        u = solve_field(cfg)
        coords = u.system.node_coords
        names = ["x", "x1,x2"][coords.shape[1] - 1]
        fd.write(f"# fracsinc {command}\n")
        fd.write(f"# config: {cfg.describe()}\n")
        fd.write(f"{names},value\n")
        for x, c in zip(coords, u.coeffs.real):
            fd.write(",".join(_fmt(float(v)) for v in (*x, c)) + "\n")
        return

    notes: list[str] = []
    if command == "convergence-space":
        rows = convergence_space(cfg)
    elif command == "sinc-decay":
        rows = sinc_decay(cfg)
        notes = _fit_notes("sqrt(N)", [math.sqrt(r.abscissa) for r in rows], rows)
    elif command == "time-singularity":
        rows = time_singularity(cfg)
        notes = _fit_notes("ln(t)", [math.log(r.abscissa) for r in rows], rows)
    elif command == "convergence-time":
        rows = convergence_time(cfg)
    else:
        raise ConfigError(f"unknown command '{command}'")

    write_table(fd, command, cfg, rows, notes)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "ml-eval":
            print(cmd_ml_eval(args.gamma, args.mu, args.re, args.im))
            return EXIT_OK

        cfg = resolve_config(args.command, args)
        # only touch the output once everything has been computed
        buf = io.StringIO()
        run_command(args.command, cfg, buf)
        with _open_output(cfg.output_path) as fd:
            fd.write(buf.getvalue())
    except SOLVER_ERRORS as exc:
        logger.error("solver error: %s", exc)
        return EXIT_SOLVER
    except ValueError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG

    return EXIT_OK


# }}}


if __name__ == "__main__":
    sys.exit(main())
