"""mokit command-line interface.

Subcommands: eval, curate, bench, flow, radar, winratio. Every subcommand is
deterministic given (inputs, config, seed), never mutates its inputs, writes
only under --out, and echoes its resolved config into each report. Exit
codes: 0 success, 2 empty input (or too many unscored prompts for bench),
1 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import bench as bench_mod
from . import curation, flow, io
from .metrics import MetricError, Thresholds, evaluate_clip
from .motion import MotionError

try:
    import tomllib  # py311+
except ModuleNotFoundError:
    import tomli as tomllib


REPORT_FIELDS = (
    "jitter_degree",
    "dynamic_degree",
    "foot_floating",
    "ground_penetration",
    "foot_sliding",
    "body_penetration_pairs",
    "body_penetration_frames",
    "pose_quality",
)


@dataclass
class RunConfig:
    """Merged view of filter, threshold, and run options.

    Resolved once before any work starts, then echoed into every output
    report. tau (the branch-gating threshold) has no canonical default; 0.5
    is an operational placeholder.
    """

    seed: int = 0
    jobs: int = 1
    tau: float = 0.5
    metrics: list[str] | None = None
    angular_jitter_weight: float = 0.0
    filter: curation.FilterConfig = field(default_factory=curation.FilterConfig)

    @property
    def thresholds(self) -> Thresholds:
        return self.filter.thresholds

    def to_dict(self) -> dict:
        # jobs is a scheduling knob with no effect on results and is left out
        # so reports stay byte-identical across worker counts.
        return {
            "seed": self.seed,
            "tau": self.tau,
            "metrics": self.metrics,
            "angular_jitter_weight": self.angular_jitter_weight,
            "filter": self.filter.to_dict(),
        }


def _resolve_metric_name(name: str) -> str:
    """Exact report field name or any unambiguous prefix (e.g. 'jitter')."""
    if name in REPORT_FIELDS:
        return name
    matches = [f for f in REPORT_FIELDS if f.startswith(name)]
    if len(matches) == 1:
        return matches[0]
    if matches:
        raise SystemExit(f"ambiguous metric {name!r}: {', '.join(matches)}")
    raise SystemExit(f"unknown metric {name!r}; choose from {', '.join(REPORT_FIELDS)}")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    raw = Path(path).read_bytes()
    if path.endswith(".toml"):
        return tomllib.loads(raw.decode())
    return json.loads(raw.decode())


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = load_config(getattr(args, "config", None))
    filter_data = dict(data.get("filter", {}))
    thresholds = Thresholds(**filter_data.pop("thresholds", {}))
    cfg = RunConfig(
        seed=data.get("seed", 0),
        jobs=data.get("jobs", 1),
        tau=data.get("tau", 0.5),
        metrics=data.get("metrics"),
        angular_jitter_weight=data.get("angular_jitter_weight", 0.0),
        filter=curation.FilterConfig(thresholds=thresholds, **filter_data),
    )
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if getattr(args, "metrics", None):
        cfg.metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if cfg.metrics:
        cfg.metrics = [_resolve_metric_name(m) for m in cfg.metrics]
    if cfg.jobs < 1:
        raise SystemExit("--jobs must be >= 1")
    return cfg


def _pool_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# eval -----------------------------------------------------------------

def _eval_one(task: tuple[str, Thresholds, float]) -> dict:
    path, thresholds, angular_weight = task
    motion = io.read_motion(path)
    report = evaluate_clip(motion, thresholds, angular_jitter_weight=angular_weight)
    return report.to_dict()


def _clip_paths_from_manifest(manifest_path: str) -> list[str]:
    """Clip files from a plain {"path": ...} manifest or a curate manifest.

    Relative clip_path entries resolve against the manifest's directory.
    """
    base = Path(manifest_path).parent
    paths = []
    for row in io.read_jsonl(manifest_path):
        if "path" in row:
            paths.append(row["path"])
        elif row.get("status") == "kept" and "clip_path" in row:
            p = Path(row["clip_path"])
            paths.append(str(p if p.is_absolute() else base / p))
    return paths


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    try:
        paths = _clip_paths_from_manifest(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not paths:
        print("error: no clips to evaluate", file=sys.stderr)
        return 2

    tasks = [(p, cfg.thresholds, cfg.angular_jitter_weight) for p in paths]
    try:
        reports = _pool_map(_eval_one, tasks, cfg.jobs)
    except (OSError, MotionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if cfg.metrics:
        keep = ["clip_id"] + cfg.metrics
        reports = [{k: r[k] for k in keep} for r in reports]
    io.write_jsonl(reports, out / "reports.jsonl")
    io.write_json({"config": cfg.to_dict(), "clips": len(reports)}, out / "summary.json")
    return 0


# curate ---------------------------------------------------------------

def _curate_one(task: tuple[curation.SourceEntry, curation.FilterConfig, str]) -> list[dict]:
    source, filter_cfg, out_dir = task
    return [e.to_dict() for e in curation.process_source(source, filter_cfg, out_dir)]


def cmd_curate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    try:
        sources = curation.read_source_manifest(args.sources)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not sources:
        print("error: empty source manifest", file=sys.stderr)
        return 2

    tasks = [(s, cfg.filter, str(out)) for s in sources]
    entry_lists = _pool_map(_curate_one, tasks, cfg.jobs)
    entries = [e for entries in entry_lists for e in entries]

    reasons: dict[str, int] = {}
    kept = 0
    for e in entries:
        if e["status"] == "kept":
            kept += 1
        else:
            reasons[e["drop_reason"]] = reasons.get(e["drop_reason"], 0) + 1
    io.write_jsonl(entries, out / "manifest.jsonl")
    io.write_json(
        {"config": cfg.to_dict(), "kept": kept, "dropped_by_reason": dict(sorted(reasons.items()))},
        out / "summary.json",
    )
    return 0 if kept > 0 else 2


# bench ----------------------------------------------------------------

def _make_clients(args: argparse.Namespace, out: Path):
    if args.embedder_url:
        embedder = bench_mod.HttpEmbedder(args.embedder_url)
    elif args.embedder_transcript:
        embedder = bench_mod.ReplayEmbedder(args.embedder_transcript)
    else:
        embedder = bench_mod.HashEmbedder()
    if args.judge_url:
        judge = bench_mod.HttpJudge(args.judge_url)
    elif args.judge_transcript:
        judge = bench_mod.ReplayJudge(args.judge_transcript)
    else:
        raise SystemExit("bench needs --judge-transcript (replay) or --judge-url (live)")
    if args.record_transcripts:
        embedder = bench_mod.RecordingEmbedder(embedder, out / "embedder_transcript.jsonl")
        judge = bench_mod.RecordingJudge(judge, out / "judge_transcript.jsonl")
    return embedder, judge


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    try:
        suite = bench_mod.load_prompt_suite(args.suite)
        renders = bench_mod.read_renders_manifest(args.renders)
        embedder, judge = _make_clients(args, out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not renders:
        print("error: empty renders manifest", file=sys.stderr)
        return 2

    result = bench_mod.run_consistency_eval(suite, judge, embedder, renders, seed=cfg.seed)
    report: dict = {"config": cfg.to_dict(), "consistency": result.to_dict()}

    per_prompt: dict[str, dict[str, float]] = {}
    for row in result.rows:
        if row.get("scored"):
            per_prompt.setdefault(row["prompt_id"], {})[row["model"]] = float(row["correct"])
    metric_table = None
    multi = {p: s for p, s in per_prompt.items() if len(s) >= 2}
    if multi:
        metric_table = bench_mod.win_ratio(bench_mod.scores_to_comparisons(multi))
        report["metric_win_ratios"] = metric_table.to_dict()

    if args.pairwise:
        try:
            comparisons = bench_mod.read_pairwise_csv(args.pairwise)
            revisions: list[dict] = []
            if args.singles:
                singles = bench_mod.read_singles_csv(args.singles)
                comparisons, revisions = bench_mod.reconcile_single_scores(
                    comparisons, singles, margin=args.margin
                )
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        human_table = bench_mod.win_ratio(comparisons)
        report["human_win_ratios"] = human_table.to_dict()
        report["revisions"] = revisions
        if metric_table is not None:
            common = sorted(set(metric_table.ratios) & set(human_table.ratios))
            if len(common) >= 2:
                mv = [metric_table.ratios[m] for m in common]
                hv = [human_table.ratios[m] for m in common]
                correlation = {"models": common}
                for method in ("pearson", "spearman"):
                    try:
                        correlation[method] = bench_mod.correlate(mv, hv, method)
                    except bench_mod.BenchError as exc:
                        correlation[method] = None
                        correlation[f"{method}_error"] = str(exc)
                report["correlation"] = correlation

    if len(result.accuracy) >= 2:
        models = sorted(result.accuracy)
        normalized = bench_mod.radar_normalize([result.accuracy[m] for m in models], True)
        report["radar"] = {"consistency_accuracy": dict(zip(models, normalized))}

    io.write_json(report, out / "bench_report.json")
    if result.unscored_fraction > 0.10:
        print(
            f"error: {result.unscored}/{result.total} renders unscored",
            file=sys.stderr,
        )
        return 2
    return 0


# flow -----------------------------------------------------------------

class _DemoTeacher:
    """Constant-velocity oracle toward a prompt-hashed target tensor."""

    def __init__(self, shape: tuple[int, int], base_seed: int):
        self.shape = shape
        self.base_seed = base_seed

    def target(self, c: flow.Condition):
        return flow.prompt_noise(f"{c.prompt_id}|target", self.shape, self.base_seed)

    def __call__(self, x, t, c):
        eps = flow.prompt_noise(c.prompt_id, self.shape, self.base_seed)
        return self.target(c) - eps


def cmd_flow(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    try:
        rows = list(io.read_jsonl(args.prompts))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not rows:
        print("error: no prompts", file=sys.stderr)
        return 2
    try:
        prompts = [flow.Condition(prompt_id=r["prompt_id"], text=r.get("text")) for r in rows]
    except KeyError as exc:
        print(f"error: prompt row missing {exc}", file=sys.stderr)
        return 1
    shape = (args.frames, args.dims)
    teacher = _DemoTeacher(shape, cfg.seed)
    samples = flow.distill_dataset(
        teacher, prompts, steps=args.steps, shape=shape, method=args.method, base_seed=cfg.seed
    )
    flow.write_distilled(samples, out)
    failed = sum(1 for s in samples if s.data is None)
    io.write_json(
        {"config": cfg.to_dict(), "prompts": len(samples), "failed": failed},
        out / "summary.json",
    )
    return 0


# radar ----------------------------------------------------------------

def cmd_radar(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    try:
        with open(args.scores, encoding="utf-8") as fh:
            scores = json.load(fh)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    metrics = scores.get("metrics", [])
    if not metrics:
        print("error: no metrics in scores file", file=sys.stderr)
        return 2
    report = {"config": cfg.to_dict(), "metrics": []}
    try:
        for metric in metrics:
            models = sorted(metric["values"])
            normalized = bench_mod.radar_normalize(
                [metric["values"][m] for m in models], bool(metric["higher_is_better"])
            )
            report["metrics"].append(
                {"name": metric["name"], "normalized": dict(zip(models, normalized))}
            )
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    io.write_json(report, out / "radar.json")
    return 0


# winratio -------------------------------------------------------------

def cmd_winratio(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    try:
        comparisons = bench_mod.read_pairwise_csv(args.pairwise)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not comparisons:
        print("error: no comparisons", file=sys.stderr)
        return 2
    revisions: list[dict] = []
    if args.singles:
        try:
            singles = bench_mod.read_singles_csv(args.singles)
            comparisons, revisions = bench_mod.reconcile_single_scores(
                comparisons, singles, margin=args.margin
            )
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    table = bench_mod.win_ratio(comparisons)
    io.write_json(
        {"config": cfg.to_dict(), **table.to_dict(), "revisions": revisions},
        out / "winratio.json",
    )
    return 0


# parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mokit", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=None, help="worker pool size")
    common.add_argument("--metrics", help="comma-separated report fields to keep")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate clips to metric reports")
    p.add_argument("--manifest", required=True, help="JSONL of clip paths or a curate manifest")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("curate", parents=[common], help="run the clip preparation pipeline")
    p.add_argument("--sources", required=True, help="JSONL source manifest")
    p.set_defaults(fn=cmd_curate)

    p = sub.add_parser("bench", parents=[common], help="judge-based benchmark aggregation")
    p.add_argument("--suite", required=True, help="prompt suite JSON")
    p.add_argument("--renders", required=True, help="JSONL renders manifest")
    p.add_argument("--embedder-transcript", help="replay embedder from transcript")
    p.add_argument("--judge-transcript", help="replay judge from transcript")
    p.add_argument("--embedder-url", help="live embedder endpoint")
    p.add_argument("--judge-url", help="live judge endpoint")
    p.add_argument("--record-transcripts", action="store_true")
    p.add_argument("--pairwise", help="human pairwise CSV")
    p.add_argument("--singles", help="human single-rating CSV")
    p.add_argument("--margin", type=float, default=1.0)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("flow", parents=[common], help="distill a demo teacher into dataset files")
    p.add_argument("--prompts", required=True, help="JSONL of {prompt_id, text}")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--dims", type=int, default=276)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--method", choices=["euler", "heun"], default="euler")
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("radar", parents=[common], help="radar-normalize model scores")
    p.add_argument("--scores", required=True, help="JSON with metrics/values/polarity")
    p.set_defaults(fn=cmd_radar)

    p = sub.add_parser("winratio", parents=[common], help="aggregate pairwise outcomes")
    p.add_argument("--pairwise", required=True, help="pairwise CSV")
    p.add_argument("--singles", help="single-rating CSV")
    p.add_argument("--margin", type=float, default=1.0)
    p.set_defaults(fn=cmd_winratio)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
