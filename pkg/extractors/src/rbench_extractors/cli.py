"""Command-line extraction runner: one job per (model, sample, replicate)."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .jobs import Backend, ExtractorJob, LiveEndpoints, StubConfig
from .manifest import read_manifest
from .runner import run_jobs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbench-extract", description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out-dir", required=True, help="signals/ and vqa/ are created inside")
    parser.add_argument("--models", required=True, help="comma-separated model ids")
    parser.add_argument("--replicates", type=int, default=1)
    parser.add_argument("--backend", choices=("stub", "live"), default="stub")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--motion-profile", choices=("walk", "static"), default="walk")
    parser.add_argument("--videos-dir", help="required for the live backend")
    parser.add_argument("--judge-url")
    parser.add_argument("--signal-url")
    parser.add_argument("--jobs", type=int, default=4)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    backend = Backend(args.backend)
    endpoints = None
    if backend is Backend.LIVE:
        if not (args.judge_url and args.signal_url and args.videos_dir):
            print("error: live backend needs --judge-url, --signal-url and --videos-dir", file=sys.stderr)
            return 2
        endpoints = LiveEndpoints(judge_url=args.judge_url, signal_url=args.signal_url)
    try:
        samples = read_manifest(Path(args.manifest))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    stub = StubConfig(seed=args.seed, motion_profile=args.motion_profile)
    jobs = []
    for model in args.models.split(","):
        model = model.strip()
        for sample in samples:
            for replicate in range(args.replicates):
                video = (
                    Path(args.videos_dir) / f"{model}__{sample.sample_id}__r{replicate}.mp4"
                    if backend is Backend.LIVE
                    else None
                )
                jobs.append(
                    (
                        ExtractorJob(
                            sample_id=sample.sample_id,
                            model_id=model,
                            replicate_index=replicate,
                            video_path=video,
                            backend=backend,
                            output_dir=Path(args.out_dir),
                            stub=stub,
                            endpoints=endpoints,
                        ),
                        sample,
                    )
                )

    results = run_jobs(jobs, workers=args.jobs)
    failures = [r for r in results if r.error]
    for failure in failures:
        print(f"error: {failure.job.stem}: {failure.error}", file=sys.stderr)
    print(f"extracted {len(results) - len(failures)}/{len(results)} jobs into {args.out_dir}")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
