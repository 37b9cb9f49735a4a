"""Command-line front door: serve, bench runtime, bench converge, stats."""
from __future__ import annotations

import argparse
import json
import sys
import threading
from typing import Optional, Sequence

from .bench import (
    RUNTIME_KINDS,
    render_convergence,
    render_runtime_table,
    run_convergence,
    run_runtime_eval,
)
from .offload.backends import DEFAULT_FIXTURES, FixtureStore, load_profile
from .offload.service import serve
from .surveystats import LikertMatrix, analyze, render_text
from .worldsim import Scene, load_scene


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hapticseek")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the offload service")
    p_serve.add_argument("--port", type=int, default=0, help="0 picks a free port")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--profile", help="latency profile json")
    p_serve.add_argument("--scene", help="scene json")
    p_serve.add_argument("--fixtures", help="fixture text json")
    p_serve.add_argument("--seed", type=int, default=0)
    p_serve.add_argument("--scale", type=float, default=1.0,
                         help="multiply all latency means and spreads")
    p_serve.add_argument("--ui", help="directory of static files to serve over http")

    p_bench = sub.add_parser("bench", help="benchmark harness")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)

    p_rt = bench_sub.add_parser("runtime", help="sequential latency trials")
    p_rt.add_argument("--kind", choices=sorted(RUNTIME_KINDS), required=True)
    p_rt.add_argument("--trials", type=int, default=20)
    p_rt.add_argument("--endpoint", required=True, help="host:port of a running service")
    p_rt.add_argument("--fixture", default="office_desk")
    p_rt.add_argument("--target-class", type=int, default=41)
    p_rt.add_argument("--json", action="store_true", dest="as_json")

    p_cv = bench_sub.add_parser("converge", help="closed-loop convergence campaign")
    p_cv.add_argument("--scene", required=True, help="scene json with a target")
    p_cv.add_argument("--seeds", type=int, default=100)
    p_cv.add_argument("--gain", type=float, default=5.0, help="degrees per user step")
    p_cv.add_argument("--budget", type=int, default=200)
    p_cv.add_argument("--dropout", type=float, default=None)
    p_cv.add_argument("--pixel-sigma", type=float, default=None)
    p_cv.add_argument("--min-success", type=float, default=0.0,
                      help="exit nonzero when the success rate falls below this")
    p_cv.add_argument("--json", action="store_true", dest="as_json")

    p_stats = sub.add_parser("stats", help="survey statistics")
    p_stats.add_argument("--input", required=True, help="long-format csv")
    p_stats.add_argument("--bootstrap", type=int, default=2000)
    p_stats.add_argument("--seed", type=int, default=0)
    p_stats.add_argument("--json", action="store_true", dest="as_json")

    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile) if args.profile else None
    scene = load_scene(args.scene) if args.scene else Scene()
    if args.fixtures:
        fixtures = FixtureStore.from_file(args.fixtures)
    else:
        fixtures = FixtureStore(DEFAULT_FIXTURES)
    service = serve(
        port=args.port,
        host=args.host,
        profile=profile,
        scene=scene,
        fixtures=fixtures,
        seed=args.seed,
        scale=args.scale,
        ui_dir=args.ui,
    )
    print(f"listening on {service.port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


def _cmd_bench_runtime(args: argparse.Namespace) -> int:
    stats = run_runtime_eval(
        endpoint=args.endpoint,
        kind=args.kind,
        trials=args.trials,
        fixture=args.fixture,
        target_class=args.target_class,
    )
    if args.as_json:
        print(json.dumps(stats.to_dict(), sort_keys=True))
    else:
        print(render_runtime_table([stats]))
    return 0 if stats.valid else 1


def _cmd_bench_converge(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    report = run_convergence(
        scene,
        seeds=args.seeds,
        gain_deg=args.gain,
        budget=args.budget,
        dropout=args.dropout,
        pixel_sigma=args.pixel_sigma,
    )
    if args.as_json:
        print(report.to_json())
    else:
        print(render_convergence(report))
    return 0 if report.success_rate >= args.min_success else 1


def _cmd_stats(args: argparse.Namespace) -> int:
    matrix = LikertMatrix.load_csv(args.input)
    analysis = analyze(matrix, resamples=args.bootstrap, seed=args.seed)
    if args.as_json:
        print(json.dumps(analysis.to_dict(), sort_keys=True))
    else:
        print(render_text(analysis))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "bench":
        if args.bench_command == "runtime":
            return _cmd_bench_runtime(args)
        return _cmd_bench_converge(args)
    if args.command == "stats":
        return _cmd_stats(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
