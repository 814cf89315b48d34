"""Command line runner for scenario suites.

    potlab run CONFIG [--out DIR] [--emit-fields] [--tolerance X] [--jobs K]
    potlab --list-checks

CONFIG is a JSON file or the word ``bundled``.  Each scenario writes
``<name>.json``; the suite writes ``results.csv`` (deterministic) and
``metadata.json`` (timings, versions).  Exit status: 0 when every
verdict passes, 1 when any scenario fails or errors, 2 on a bad config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .scenario import CHECKS, SCHEMA_VERSION, run_scenario

log = logging.getLogger("potlab")

CSV_COLUMNS = ["name", "check", "verdict", "lhs", "rhs", "margin", "C", "Cbar", "h", "error"]


class ConfigError(ValueError):
    pass


def _data(name: str) -> str:
    return resources.files("potlab").joinpath("data", name).read_text()


def load_schema() -> dict:
    return json.loads(_data("schema.json"))


def load_config(path: str) -> dict:
    """Parse and validate a config; errors carry the line or field path."""
    if path == "bundled":
        text, where = _data("bundled.json"), "bundled"
    else:
        try:
            text, where = Path(path).read_text(), path
        except OSError as e:
            raise ConfigError(f"{path}: {e.strerror}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{where}:{e.lineno}:{e.colno}: {e.msg}") from e
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            loc = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path) or "(root)"
            msgs.append(f"{where}: {loc.lstrip('.')}: {e.message}")
        raise ConfigError("\n".join(msgs))
    names = [s["name"] for s in cfg["scenarios"]]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ConfigError(f"{where}: duplicate scenario names {dup}")
    return cfg


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "pass" if x else "fail"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_one(args):
    sc, tol, emit = args
    res = run_scenario(sc, tolerance=tol, emit_fields=emit)
    fields = {k: f.to_json() for k, f in res.fields.items()}
    res.fields = {}
    return res, fields


def run_suite(cfg: dict, out: Path, tolerance: float | None = None, jobs: int = 1, emit_fields: bool = False) -> list:
    scenarios = cfg["scenarios"]
    out.mkdir(parents=True, exist_ok=True)
    work = [(sc, tolerance, emit_fields) for sc in scenarios]
    t0 = time.perf_counter()
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, work))
    else:
        results = [_run_one(w) for w in work]
    total = time.perf_counter() - t0
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for res, fields in results:
        rec = res.to_json()
        rec["overrides"] = {"tolerance": tolerance} if tolerance is not None else {}
        (out / f"{res.name}.json").write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
        wr.writerow([_fmt(getattr(res, c)) for c in CSV_COLUMNS])
        if emit_fields and fields:
            fdir = out / "fields" / res.name
            fdir.mkdir(parents=True, exist_ok=True)
            for k, d in fields.items():
                (fdir / f"{k}.json").write_text(json.dumps(d))
        status = "pass" if res.verdict else ("error" if res.error else "fail")
        log.info("%s [%s] %s margin=%s", res.name, res.check, status, _fmt(res.margin))
        if res.error:
            log.warning("%s: %s", res.name, res.error)
    (out / "results.csv").write_text(buf.getvalue())
    meta = {
        "version": __version__,
        "schema_version": cfg.get("schema_version"),
        "python": platform.python_version(),
        "started": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "jobs": jobs,
        "tolerance": tolerance,
        "total_runtime": total,
        "runtime": {res.name: res.runtime for res, _ in results},
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    return [r for r, _ in results]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="potlab", description="Run potential-theory verification scenarios.")
    p.add_argument("--list-checks", action="store_true", help="list the available checks and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run a scenario suite")
    r.add_argument("config", help="JSON config path, or 'bundled'")
    r.add_argument("--out", default="potlab-out", help="output directory (default: potlab-out)")
    r.add_argument("--emit-fields", action="store_true", help="also dump sampled fields as JSON")
    r.add_argument("--tolerance", type=float, default=None, help="override the verdict tolerance")
    r.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel (default 1)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.list_checks:
        for name, desc in CHECKS.items():
            print(f"{name:16s} {desc}")
        return 0
    if args.command != "run":
        parser.print_help()
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if cfg["schema_version"] != SCHEMA_VERSION:
        print(f"config error: unsupported schema_version {cfg['schema_version']}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    results = run_suite(cfg, Path(args.out), args.tolerance, args.jobs, args.emit_fields)
    failed = [r for r in results if not r.verdict]
    print(f"{len(results) - len(failed)}/{len(results)} scenarios passed; reports in {args.out}")
    for r in failed:
        print(f"  {r.name}: {r.error or 'verdict failed'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
