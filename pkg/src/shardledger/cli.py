"""Command line: run scenarios, compare trends, audit exported chains."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_GUILTY = 3


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INVALID


def cmd_run(args) -> int:
    from .sim.config import ConfigError, load_config
    from .sim.runner import run_scenario

    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        return _fail(str(e))
    result = run_scenario(cfg)
    result.write(args.out)
    sys.stdout.write(result.summary())
    return EXIT_OK


def cmd_trend(args) -> int:
    from .sim.config import ConfigError
    from .sim.trend import trend_dir

    if not Path(args.config_dir).is_dir():
        return _fail(f"{args.config_dir} is not a directory")
    try:
        sys.stdout.write(trend_dir(args.config_dir))
    except ConfigError as e:
        return _fail(str(e))
    return EXIT_OK


def _chain_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    files = sorted(path.glob("*.chain")) or sorted(path.glob("chains/*.chain"))
    return files


def cmd_audit(args) -> int:
    from .audit import ChainFormatError, full_audit, load_chain
    from .contracts import default_registry

    files = _chain_files(Path(args.dir))
    if not files:
        return _fail(f"no .chain files under {args.dir}")
    reg = default_registry()
    total = 0
    for f in files:
        try:
            chain = load_chain(f)
        except ChainFormatError as e:
            return _fail(f"{f.name}: {e}")
        findings = full_audit(chain, reg)
        print(f"# {f.name}: shard {chain.shard}, {len(chain.checkpoints)} checkpoints, {len(findings)} findings")
        for x in findings:
            print(x.line())
        total += len(findings)
    return EXIT_OK if total == 0 else EXIT_GUILTY


def cmd_cross_audit(args) -> int:
    from .audit import ChainFormatError, ChainInvalid, cross_audit, load_chain
    from .contracts import default_registry

    try:
        a, b = load_chain(args.a), load_chain(args.b)
        verdict = cross_audit(a, b, default_registry())
    except (ChainFormatError, ChainInvalid) as e:
        return _fail(str(e))
    print(verdict.render())
    return EXIT_OK if verdict.ok else EXIT_GUILTY


def cmd_bench(args) -> int:
    from .bench import bench_contracts

    sys.stdout.write(bench_contracts(args.reps))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shardledger", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and export metrics and chains")
    r.add_argument("config")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("trend", help="throughput of every *.conf in a directory")
    t.add_argument("config_dir")
    t.set_defaults(func=cmd_trend)

    a = sub.add_parser("audit", help="full audit of exported chains")
    a.add_argument("dir")
    a.set_defaults(func=cmd_audit)

    c = sub.add_parser("cross-audit", help="check two shards' chains against each other")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(func=cmd_cross_audit)

    b = sub.add_parser("bench-contracts", help="time contract procedures and checkers")
    b.add_argument("--reps", type=int, default=5)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
