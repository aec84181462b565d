"""Command-line pipeline: validate, score, aggregate, agree.

All commands are deterministic: identical inputs and configuration produce
byte-identical outputs. Exit codes: 0 success, 1 domain failure, 2 I/O or
usage failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import aggregate as agg
from . import records
from .agreement import aggregate_votes, build_agreement_report, load_votes
from .errors import EngineError
from .motion import MotionConfig, motion_amplitude, motion_smoothness
from .records import EvaluationSample, SampleScore, SignalBundle, TaskCategory, VqaRecordSet
from .vqa import VqaConfig, score_sample_vqa

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

CONFIG_ENV_VAR = "RBENCH_CONFIG"

# Flat override keys accepted by --set and the config file, mapped to
# (config section, constructor argument).
_OVERRIDE_KEYS = {
    "penalty.t": ("penalty", "low_motion_threshold"),
    "penalty.t_low": ("penalty", "very_low_motion_threshold"),
    "penalty.delta": ("penalty", "very_low_motion_extra"),
    "penalty.w_rss": ("penalty", "stability_weight"),
    "penalty.w_ms": ("penalty", "smoothness_weight"),
    "motion.clip_ceiling": ("motion", "clip_ceiling"),
    "vqa.tac_w1": ("vqa", "_pair_w1"),
    "vqa.tac_w2": ("vqa", "_pair_w2"),
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration: engine tunables plus their override echo."""

    penalty: agg.PenaltyConfig = field(default_factory=agg.PenaltyConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    vqa: VqaConfig = field(default_factory=VqaConfig)
    overrides: tuple[tuple[str, float], ...] = ()

    @property
    def meta(self) -> dict[str, Any]:
        return {"config": {key: value for key, value in self.overrides}}

    @property
    def meta_line(self) -> str:
        rendered = " ".join(f"{k}={v!r}" for k, v in self.overrides) or "defaults"
        return f"rbench config: {rendered}"


def _load_override_file(path: str) -> dict[str, float]:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, Mapping):
        raise ValueError(f"config file {path} must hold a JSON object of overrides")
    return dict(payload)


def resolve_config(set_flags: list[str] | None, env: Mapping[str, str] | None = None) -> RunConfig:
    """Merge the config file named by RBENCH_CONFIG with --set flags (flags win)."""
    env = os.environ if env is None else env
    overrides: dict[str, float] = {}
    config_path = env.get(CONFIG_ENV_VAR)
    if config_path:
        overrides.update(_load_override_file(config_path))
    for flag in set_flags or []:
        key, sep, raw = flag.partition("=")
        if not sep:
            raise ValueError(f"override {flag!r} is not of the form key=value")
        overrides[key.strip()] = json.loads(raw)

    sections: dict[str, dict[str, float]] = {"penalty": {}, "motion": {}, "vqa": {}}
    for key in sorted(overrides):
        if key not in _OVERRIDE_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        section, arg = _OVERRIDE_KEYS[key]
        value = overrides[key]
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ValueError(f"config key {key!r} needs a finite number, got {value!r}")
        sections[section][arg] = float(value)

    vqa_args = sections["vqa"]
    w1 = vqa_args.pop("_pair_w1", None)
    w2 = vqa_args.pop("_pair_w2", None)
    if (w1 is None) != (w2 is None):
        raise ValueError("vqa.tac_w1 and vqa.tac_w2 must be set together")
    if w1 is not None:
        vqa_args["adherence_pair_weights"] = (w1, w2)

    return RunConfig(
        penalty=agg.PenaltyConfig(**sections["penalty"]),
        motion=MotionConfig(**sections["motion"]),
        vqa=VqaConfig(**vqa_args),
        overrides=tuple((k, float(overrides[k])) for k in sorted(overrides)),
    )


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        manifest = records.load_manifest(args.manifest)
    except OSError as exc:
        return _fail(f"cannot read manifest: {exc}", EXIT_USAGE)
    report = records.validate_manifest(
        manifest, base_dir=Path(args.manifest).parent, check_images=not args.no_image_check
    )
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_DOMAIN


PairKey = tuple[str, str, int]  # (model_id, sample_id, replicate_index)


def _collect_signals(signals_dir: Path) -> dict[PairKey, Path]:
    paths: dict[PairKey, Path] = {}
    for path in sorted(signals_dir.glob("*.json")):
        bundle = records.load_signal_bundle(path)
        key = (bundle.model_id, bundle.sample_id, bundle.replicate_index)
        if key in paths:
            raise EngineError(f"duplicate signal bundle for {key} in {path.name}")
        paths[key] = path
    return paths


def _collect_vqa(vqa_dir: Path) -> dict[PairKey, VqaRecordSet]:
    out: dict[PairKey, VqaRecordSet] = {}
    for path in sorted(vqa_dir.glob("*.jsonl")):
        for record in records.load_vqa_records(path):
            key = (record.model_id, record.sample_id, record.replicate_index)
            if key in out:
                raise EngineError(f"duplicate judge record for {key} in {path.name}")
            out[key] = record
    return out


def _score_pair(
    key: PairKey,
    signal_path: Path | None,
    vqa_record: VqaRecordSet | None,
    task_category: TaskCategory | None,
    embodiment: str,
    config: RunConfig,
) -> tuple[dict[str, Any], list[str]]:
    """Score one (model, sample, replicate); returns the output row and skip notes."""
    model_id, sample_id, replicate = key
    row: dict[str, Any] = {
        "sample_id": sample_id,
        "model_id": model_id,
        "replicate_index": replicate,
        "task_category": task_category.value if task_category else None,
        "embodiment": embodiment,
    }
    skips: list[str] = []
    mas = mss = None
    if signal_path is not None:
        bundle: SignalBundle = records.load_signal_bundle(signal_path)
        mas = motion_amplitude(bundle, config.motion)
        mss = motion_smoothness(bundle.quality_scores, mas, config.motion)
    else:
        skips.append(f"{model_id}/{sample_id}/r{replicate}: missing signal bundle")

    pss = tac = rss = None
    robot = obj = None
    if vqa_record is not None:
        vqa_result = score_sample_vqa(vqa_record, task_category, config.vqa)
        pss, tac = vqa_result.pss, vqa_result.tac
        robot, obj = vqa_result.robot_grade, vqa_result.object_grade
        if robot is not None:
            rss = agg.stability_score(robot, obj, config.penalty)
        else:
            skips.append(f"{model_id}/{sample_id}/r{replicate}: no stability grades")
    else:
        skips.append(f"{model_id}/{sample_id}/r{replicate}: missing judge record")

    tc = vq = ts = None
    if None not in (pss, tac, rss, mss, mas):
        tc = agg.task_completion(pss, tac)
        vq = agg.visual_quality(rss, mss, mas, robot, obj, config.penalty)
        ts = agg.sample_total(tc, vq)
    row.update({"pss": pss, "tac": tac, "rss": rss, "mss": mss, "mas": mas, "tc": tc, "vq": vq, "ts": ts})
    return row, skips


def _score_pair_star(packed):
    return _score_pair(*packed)


def cmd_score(args: argparse.Namespace) -> int:
    try:
        config = resolve_config(args.set)
    except ValueError as exc:
        return _fail(f"bad config: {exc}", EXIT_USAGE)
    try:
        manifest = records.load_manifest(args.manifest)
        signal_paths = _collect_signals(Path(args.signals_dir))
        vqa_by_key = _collect_vqa(Path(args.vqa_dir))
    except OSError as exc:
        return _fail(str(exc), EXIT_USAGE)

    by_id: dict[str, EvaluationSample] = {s.sample_id: s for s in manifest}
    pairs = sorted(set(signal_paths) | set(vqa_by_key))
    unknown = sorted({sample_id for _, sample_id, _ in pairs if sample_id not in by_id})
    if unknown:
        return _fail(f"records reference samples missing from the manifest: {unknown}", EXIT_DOMAIN)
    if not pairs:
        return _fail("zero scorable pairs", EXIT_DOMAIN)

    jobs = [
        (
            key,
            signal_paths.get(key),
            vqa_by_key.get(key),
            by_id[key[1]].task_category,
            by_id[key[1]].embodiment.value,
            config,
        )
        for key in pairs
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_score_pair_star, jobs))
    else:
        results = [_score_pair(*job) for job in jobs]

    # pairs are pre-sorted by (model_id, sample_id, replicate_index), so the
    # ordered map above already yields rows in output order.
    skip_report: list[str] = []
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({"record_type": "run_meta", "command": "score", **config.meta}) + "\n")
        for row, skips in results:
            handle.write(json.dumps(row) + "\n")
            skip_report.extend(skips)
    for note in skip_report:
        print(f"skip: {note}", file=sys.stderr)
    print(f"wrote {len(results)} rows to {args.out} ({len(skip_report)} skip entries)")
    return EXIT_OK


def _read_results(path: Path) -> list[dict[str, Any]]:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            payload = json.loads(line)
            if payload.get("record_type") == "run_meta":
                continue
            rows.append(payload)
    return rows


def cmd_aggregate(args: argparse.Namespace) -> int:
    try:
        config = resolve_config(args.set)
    except ValueError as exc:
        return _fail(f"bad config: {exc}", EXIT_USAGE)
    try:
        rows = _read_results(Path(args.results))
    except OSError as exc:
        return _fail(f"cannot read results: {exc}", EXIT_USAGE)

    strata: dict[str, agg.SampleStratum] = {}
    if args.manifest:
        strata = agg.strata_from_manifest(records.load_manifest(args.manifest))
    scores: list[SampleScore] = []
    for row in rows:
        if row.get("ts") is None:
            print(
                f"skip: {row.get('model_id')}/{row.get('sample_id')}"
                f"/r{row.get('replicate_index')}: incomplete row",
                file=sys.stderr,
            )
            continue
        scores.append(SampleScore.from_dict(row))
        if not args.manifest:
            task = row.get("task_category")
            strata[row["sample_id"]] = agg.SampleStratum(
                TaskCategory(task) if task else None,
                records.Embodiment(row["embodiment"]),
            )
    if not scores:
        return _fail("results hold no scorable rows", EXIT_DOMAIN)

    entries = agg.aggregate_models(scores, strata)
    entries = agg.restrict_entries(entries, args.table)
    if args.format == "csv":
        text = agg.leaderboard_csv(entries, args.table, config.meta_line)
    elif args.format == "json":
        text = agg.leaderboard_json(entries, args.table, config.meta)
    else:
        text = agg.leaderboard_text(entries, args.table, config.meta_line)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {len(entries)} leaderboard rows to {args.out}")
    return EXIT_OK


def _load_bench_scores(path: Path) -> dict[str, float]:
    payload = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(payload, Mapping) and "entries" in payload:
        return {e["model_id"]: float(e["avg"]) for e in payload["entries"]}
    if isinstance(payload, Mapping):
        return {str(k): float(v) for k, v in payload.items()}
    raise ValueError(f"bench scores file {path} must be a leaderboard or a model->score map")


def cmd_agree(args: argparse.Namespace) -> int:
    try:
        config = resolve_config(args.set)
    except ValueError as exc:
        return _fail(f"bad config: {exc}", EXIT_USAGE)
    try:
        votes = load_votes(Path(args.votes))
        bench = _load_bench_scores(Path(args.bench))
    except OSError as exc:
        return _fail(str(exc), EXIT_USAGE)

    human = aggregate_votes(votes)
    report = build_agreement_report(human, bench)
    # insertion order is meaningful here (the point table's column order), so
    # no key sorting on output
    payload = {"meta": config.meta["config"], **report.to_dict()}
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(
        f"rho={report.correlation.rho:.4f} p={report.correlation.p_two_sided:.2e} "
        f"({len(report.points)} calibrated models)"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a manifest file")
    p_validate.add_argument("--manifest", required=True)
    p_validate.add_argument("--no-image-check", action="store_true")
    p_validate.set_defaults(func=cmd_validate)

    p_score = sub.add_parser("score", help="score (model, sample, replicate) videos")
    p_score.add_argument("--manifest", required=True)
    p_score.add_argument("--signals-dir", required=True)
    p_score.add_argument("--vqa-dir", required=True)
    p_score.add_argument("--out", required=True)
    p_score.add_argument("--jobs", type=int, default=1)
    p_score.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_score.set_defaults(func=cmd_score)

    p_aggregate = sub.add_parser("aggregate", help="build a ranked leaderboard")
    p_aggregate.add_argument("--results", required=True)
    p_aggregate.add_argument("--out", required=True)
    p_aggregate.add_argument("--format", choices=("csv", "json", "text"), default="json")
    p_aggregate.add_argument("--table", choices=("main", "task", "embodiment"), default="main")
    p_aggregate.add_argument("--manifest")
    p_aggregate.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_aggregate.set_defaults(func=cmd_aggregate)

    p_agree = sub.add_parser("agree", help="human/benchmark agreement statistics")
    p_agree.add_argument("--votes", required=True)
    p_agree.add_argument("--bench", required=True)
    p_agree.add_argument("--out", required=True)
    p_agree.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_agree.set_defaults(func=cmd_agree)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(f"{exc.filename or exc}: not found", EXIT_USAGE)
    except OSError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except (EngineError, ValueError, KeyError, IndexError) as exc:
        return _fail(str(exc), EXIT_DOMAIN)


if __name__ == "__main__":
    raise SystemExit(main())
