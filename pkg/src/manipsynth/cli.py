"""Command-line entry point.

Subcommands: generate, serve, synthesize, evaluate, inspect.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import fileio
from .fusion import CameraIntrinsics
from .hand import load_hand_model
from .pipeline import (ConfigError, PipelineConfig, cmd_evaluate,
                       cmd_generate, cmd_synthesize, save_report)
from .store import CandidateStore


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config)
    if args.seed is not None:
        config.rng_seed = args.seed
    if getattr(args, "out", None):
        config.output_dir = args.out
    return config


def _run_generate(args) -> int:
    config = _load_config(args)
    store_dir = args.out or config.output_dir
    store = cmd_generate(config, store_dir)
    n = len(store.candidate_ids())
    print(f"wrote {n} candidates to {store_dir} (config {config.hash()})")
    return 0


def _run_serve(args) -> int:
    from .service import make_server, shutdown_server
    store = CandidateStore(Path(args.store))
    model = load_hand_model(args.hand_model) if args.hand_model \
        else _store_hand_model(store)
    httpd = make_server(store, model, port=args.port,
                        static_root=args.static or None)
    host, port = httpd.server_address[:2]
    print(f"serving store {args.store} on http://{host}:{port} (Ctrl-C to stop)")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
        store.release_writer()
    return 0


def _store_hand_model(store: CandidateStore):
    from .assets import load_full_hand, load_toy_hand
    # stores don't embed the hand model; pick the bundled one by class
    try:
        return load_full_hand()
    except Exception:
        return load_toy_hand()


def _run_synthesize(args) -> int:
    config = _load_config(args)
    out = args.out or config.output_dir
    manifest = cmd_synthesize(config, args.store, out)
    print(f"synthesized {len(manifest['sequences'])} sequence(s), "
          f"{manifest['totalFrames']} frames -> {out}")
    return 0


def _run_evaluate(args) -> int:
    if args.config:
        config = PipelineConfig.load(args.config)
        intr = config.intrinsics
    else:
        intr = CameraIntrinsics(600.0, 600.0, 640.0, 360.0, 1280, 720)
    report = cmd_evaluate(args.predictions, args.ground_truth, intr)
    print(report.table())
    print(f"coverage: {report.coverage:.1%}  "
          f"excluded behind camera: {report.excluded_behind_camera}")
    if args.out:
        save_report(report, args.out)
        print(f"report written to {args.out}")
    return 0


def _run_inspect(args) -> int:
    path = Path(args.path)
    if (path / "store.json").is_file():
        store = CandidateStore(path)
        rows = store.list_candidates()
        by_status = {}
        for r in rows:
            by_status[r["status"]] = by_status.get(r["status"], 0) + 1
        print(f"candidate store: {path}")
        print(f"  object class: {store.object_class}")
        print(f"  candidates: {len(rows)}")
        for status, n in sorted(by_status.items()):
            print(f"    {status}: {n}")
        print(f"  journal consistent: {store.verify_journal()}")
        return 0
    manifest_path = path / "manifest.json"
    if manifest_path.is_file():
        doc = fileio.read_doc(manifest_path, "manifest/1")
        print(f"synthesis output: {path}")
        print(f"  config hash: {doc['configHash']}  seed: {doc['seed']}")
        for seq in doc["sequences"]:
            print(f"  seq {seq['sequence']:3d}: template {seq['template']}, "
                  f"{seq['frames']} frames")
        print(f"  total frames: {doc['totalFrames']}")
        print(f"  per-class counts: {doc['perClassFrameCounts']}")
        return 0
    print(f"{path}: neither a candidate store nor a synthesis output", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manipsynth",
                                description="Hand-tool manipulation sequence synthesis")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample, refine and score grasp candidates")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None, help="store directory")
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=_run_generate)

    s = sub.add_parser("serve", help="serve a store to the curation UI")
    s.add_argument("store", help="candidate store directory")
    s.add_argument("--port", type=int, default=8710)
    s.add_argument("--hand-model", default=None)
    s.add_argument("--static", default=None, help="directory of UI assets to serve at /")
    s.set_defaults(func=_run_serve)

    y = sub.add_parser("synthesize", help="build sequences from curated templates")
    y.add_argument("store", help="candidate store with curated templates")
    y.add_argument("--config", required=True)
    y.add_argument("--seed", type=int, default=None)
    y.add_argument("--out", default=None)
    y.add_argument("--jobs", type=int, default=1)
    y.set_defaults(func=_run_synthesize)

    e = sub.add_parser("evaluate", help="compare predictions against ground truth")
    e.add_argument("predictions")
    e.add_argument("ground_truth")
    e.add_argument("--config", default=None, help="config supplying intrinsics")
    e.add_argument("--out", default=None, help="write the report here")
    e.set_defaults(func=_run_evaluate)

    i = sub.add_parser("inspect", help="summarize a store or synthesis output")
    i.add_argument("path")
    i.set_defaults(func=_run_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
