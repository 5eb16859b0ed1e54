"""Command-line entry point.

    rotmhd {simulate|linear|kernels|strichartz|sweep|check}
        --config <path> [--out <dir>] [--seed <n>]

Exit codes: 0 success, 2 configuration error, 3 numerical failure (blow-up),
4 accuracy-degraded results present.  The only environment override is
ROTMHD_THREADS (FFT worker count); everything else comes from the config.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import config_from_dict, load_config, run_experiment
from .spectral import ConfigurationError

_KINDS = ("simulate", "linear", "kernels", "strichartz", "sweep", "check")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotmhd",
        description="Pseudo-spectral experiments for fast-rotating anisotropic MHD.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in _KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True, help="path to JSON config")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if config.kind != args.kind:
            raise ConfigurationError(
                f"config kind {config.kind!r} does not match subcommand {args.kind!r}")
        if args.seed is not None:
            raw = dict(config.raw)
            raw["seed"] = args.seed
            config = config_from_dict(raw)
        code, manifest = run_experiment(config, args.out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    print(f"{config.kind}: status={manifest.status} "
          f"wall_time={manifest.wall_time:.2f}s artifacts={manifest.artifacts}")
    return code


if __name__ == "__main__":
    sys.exit(main())
