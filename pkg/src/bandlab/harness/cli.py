"""Command-line entry point: ``bandlab <subcommand> [options]``.

Exit status is 0 when every asserted check passes, 1 when a numerical
check fails and 2 for usage or configuration errors.  A JSON summary is
written to ``<out>/summary.json`` in every non-usage case.
"""
import argparse
import datetime
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from .. import __version__
from ..model import build_variance, sample_h
from . import config as cfgmod
from . import experiments as ex
from .io import ensure_dir, write_csv, write_json

log = logging.getLogger("bandlab")

DEFAULTS = {
    "sample": {"samples": 1},
    "local-law": {"samples": 100},
    "diffusion": {"samples": 200},
    "deloc": {"samples": 50},
    "lk": {"samples": 50, "n": 3},
    "kloop": {"geometry": {"d": 3, "W": 3, "L": 2}, "n": 4},
    "flow-check": {"samples": 200},
    "ward-check": {},
    "decay": {"geometry": {"d": 3, "W": 1, "L": 16}},
}


def run_sample(cfg, map_fn=map):
    prof = build_variance(cfg.geo, cfg.lam)
    out = ensure_dir(cfg.output)
    checks, info = [], {"files": []}
    for s in range(cfg.samples):
        bm = sample_h(prof, cfg.seed, s)
        path = os.path.join(out, f"H_seed{cfg.seed}_sample{s}.bin")
        bm.dump(path)
        info["files"].append(os.path.basename(path))
        herm = float(np.abs(bm.H - bm.H.conj().T).max())
        checks.append(ex.Check(f"hermitian_sample{s}", herm, 0.0))
    return {"checks": checks, "info": info, "tables": {}}


RUNNERS = {
    "sample": run_sample,
    "local-law": ex.run_local_law,
    "diffusion": ex.run_diffusion,
    "deloc": ex.run_deloc,
    "lk": ex.run_lk,
    "kloop": ex.run_kloop,
    "flow-check": ex.run_flow_check,
    "ward-check": ex.run_ward_check,
    "decay": ex.run_decay,
}


def build_parser():
    p = argparse.ArgumentParser(prog="bandlab", description="Block random band matrix laboratory.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, help="worker threads (default $BANDLAB_THREADS or 1)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name in ("kloop", "lk"):
            sp.add_argument("--n", type=int, help="loop length")
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def resolve_config(args):
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
    merged = {**DEFAULTS[args.command], **raw}
    for key in ("seed", "samples", "n"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if args.out:
        merged["output"] = args.out
    merged["experiment"] = args.command
    return cfgmod.from_dict(merged)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) if e.code in (0, None) else 2
    if args.command == "schema":
        print(json.dumps(cfgmod.SCHEMA, indent=2))
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        print(f"config error at {path}: {e.message}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    threads = args.threads or int(os.environ.get("BANDLAB_THREADS", "1"))
    out = ensure_dir(cfg.output)
    t0 = time.time()
    if threads > 1:
        pool = ThreadPoolExecutor(threads)
        map_fn = pool.map
    else:
        pool, map_fn = None, map
    try:
        result = RUNNERS[args.command](cfg, map_fn=map_fn)
        error = None
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        result, error = {"checks": [], "info": {}, "tables": {}}, str(e)
    finally:
        if pool is not None:
            pool.shutdown()
    checks = [c.to_dict() for c in result["checks"]]
    failed = [c["name"] for c in checks if not c["passed"]]
    summary = {
        "experiment": args.command,
        "config": cfg.to_dict(),
        "passed": error is None and not failed,
        "failed": failed,
        "error": error,
        "checks": checks,
        "info": result["info"],
        "metadata": {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                     "wall_time": time.time() - t0,
                     "timings": result.get("timings", {}), "threads": threads, "version": __version__},
    }
    for name, (header, rows) in result["tables"].items():
        write_csv(os.path.join(out, f"{name}.csv"), header, rows)
    write_json(os.path.join(out, "summary.json"), summary)
    for c in checks:
        val = c.get("value", c.get("estimate"))
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {json.dumps(val)}")
    if error:
        print(f"ERROR: {error}", file=sys.stderr)
        return 1
    if failed:
        print(f"failing checks: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
