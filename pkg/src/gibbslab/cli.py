"""``gibbslab <command> --config <path> [--seed N] [--out DIR]``.

Exit codes: 0 when every criterion passes, 2 when a criterion fails, 3 on a
health or infrastructure failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import config as cfgmod
from .experiments import COMMANDS, Context, HealthError
from .orbits import CacheError, OrbitBudgetError
from .plots import save

log = logging.getLogger("gibbslab")

EXIT_OK, EXIT_FAIL, EXIT_HEALTH = 0, 2, 3


class RunLock:
    """Exclusive ownership of a run directory via an O_EXCL lockfile."""

    def __init__(self, directory: Path):
        self.path = directory / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise HealthError(f"run directory is locked by another run ({self.path})") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gibbslab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="dotted-key or JSON config file")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", type=Path, help="run directory (default: <output.dir>/<command>-<hash>)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _write_outputs(out: Path, cfg: dict, result, elapsed: float) -> None:
    for name, text in result.artifacts.items():
        (out / name).write_text(text)
    for fig in result.figures:
        save(fig, out)
    summary = {
        "command": result.command,
        "summary": result.summary,
        "verdicts": result.verdicts,
        "health": result.health,
        "passed": result.passed,
        "healthy": result.healthy,
        "cache_keys": result.cache_keys,
        "wall_clock_seconds": round(elapsed, 3),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.load(args.config)
    except (cfgmod.ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_HEALTH
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = args.out or Path(cfg["output.dir"]) / f"{args.command}-{cfgmod.config_hash(cfg)}"
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        with RunLock(out):
            (out / "resolved_config.json").write_text(cfgmod.dump(cfg))
            ctx = Context.from_config(cfg)
            result = COMMANDS[args.command](ctx)
            _write_outputs(out, cfg, result, time.perf_counter() - start)
    except (HealthError, CacheError, OrbitBudgetError, ValueError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_HEALTH
    for name, ok in {**result.health, **result.verdicts}.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"outputs in {out}")
    if not result.healthy:
        return EXIT_HEALTH
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
