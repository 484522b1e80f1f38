"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
1 anything else.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import __version__
from .config import KINDS, ConfigError, ScenarioConfig, convert_value, validate_config, parse_config
from .dynamics import IntegrationError
from .interactions import SingularBlockError
from .specfun import QuadratureError

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("superatom")

# flag -> (section, key)
FLAGS = {
    "--state": ("model", "state"),
    "--C6-MHz-um6": ("model", "C6_MHz_um6"),
    "--symmetry": ("model", "symmetry"),
    "--n-max": ("model", "n_max"),
    "--z-e": ("model", "z_e"),
    "--stage": ("model", "stage"),
    "--decay": ("model", "decay"),
    "--sigma-um": ("cloud", "sigma_um"),
    "--sigma-z-um": ("cloud", "sigma_z_um"),
    "--N": ("cloud", "N"),
    "--omega-MHz": ("pulses", "omega_MHz"),
    "--t-end-us": ("time", "t_end_us"),
    "--n-points": ("time", "n_points"),
    "--realizations": ("oracle", "realizations"),
    "--seed": ("oracle", "seed"),
    "--beta": ("dos", "beta"),
    "--n-values": ("sweep", "n_values"),
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superatom", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"superatom {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind)
        s.add_argument("--config", help="scenario file (INI)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override any configuration key")
        s.add_argument("-v", "--verbose", action="store_true")
        for flag in FLAGS:
            s.add_argument(flag, dest="flag_" + flag.lstrip("-").replace("-", "_"))
    return p


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    items = []
    for flag, (section, key) in FLAGS.items():
        v = getattr(args, "flag_" + flag.lstrip("-").replace("-", "_"))
        if v is not None:
            items.append((section, key, v))
    for spec in args.set:
        try:
            lhs, value = spec.split("=", 1)
            section, key = lhs.split(".", 1)
        except ValueError:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {spec!r}") from None
        items.append((section.strip(), key.strip(), value))
    for section, key, value in items:
        sub = getattr(cfg, section, None)
        if sub is None or not dataclasses.is_dataclass(sub):
            raise ConfigError(f"unknown section {section!r}")
        if key not in {f.name for f in dataclasses.fields(sub)}:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        try:
            cfg = cfg.replace(section, **{key: convert_value(type(sub), key, value)})
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    validate_config(cfg, "", "<command line>")
    return cfg


def _print(info: dict):
    for k, v in info.items():
        if isinstance(v, float):
            print(f"{k}: {v:.9g}")
        else:
            print(f"{k}: {v}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    from .scenarios import run_scenario

    try:
        cfg = parse_config(args.config) if args.config else ScenarioConfig(kind=args.command)
        if cfg.kind != args.command:
            cfg = cfg.replace(kind=args.command)
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        info = run_scenario(cfg, args.out)
    except (SingularBlockError, IntegrationError, QuadratureError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_OTHER
    _print(info)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
