"""Command-line interface: score, eval, synth, alpha, inspect.

Every command is deterministic given its flags (including --parallel), and
every output file echoes the full configuration needed to re-run it. Exit
codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import baselines, evaluation, scores, synth
from .features import (
    FeatureFormatError,
    GradientFeatureSet,
    ProcessedGradients,
    materialize,
    read_features,
    write_features,
)

ALL_SCORES = [
    "GRACE",
    "GRACE-Variance",
    "GRACE-Bias",
    "G-Norm",
    "G-Vendi",
    "Determinant",
    "BADGE",
    "SamePromptCosine",
    "SamePromptInner",
    "Influence",
    "Loss",
    "AvgProb",
    "AvgLength",
]


class UsageError(Exception):
    pass


def compute_scores(
    fs: GradientFeatureSet,
    requested: list[str] | None = None,
    c: int = 10,
    nu: float = 1e-3,
    seed: int = 0,
    length_scaling: bool = True,
    drop_degenerate: bool = False,
    val: ProcessedGradients | None = None,
) -> baselines.ScoreReport:
    """Score one feature set. requested=None means every applicable score."""
    explicit = requested is not None
    names = list(requested) if explicit else list(ALL_SCORES)
    unknown = [s for s in names if s not in ALL_SCORES]
    if unknown:
        raise UsageError(f"unknown score name(s): {', '.join(unknown)}")

    proc = materialize(fs, length_scaling, drop_degenerate)
    report = baselines.ScoreReport(
        teacher_id=fs.teacher_id,
        config={
            "c": c,
            "nu": nu,
            "seed": seed,
            "length_scaling": length_scaling,
            "drop_degenerate": drop_degenerate,
            "dropped_rows": proc.dropped,
        },
    )

    def skip(name: str, reason: str):
        if explicit:
            raise UsageError(f"score '{name}' not computable: {reason}")

    if any(s.startswith("GRACE") for s in names):
        gr = scores.grace(proc, c=c, nu=nu, seed=seed)
    for name in names:
        if name == "GRACE":
            report.add(name, gr.total)
        elif name == "GRACE-Variance":
            report.add(name, gr.variance_term)
        elif name == "GRACE-Bias":
            report.add(name, gr.bias_term)
        elif name == "G-Norm":
            report.add(name, scores.g_norm(proc))
        elif name == "G-Vendi":
            report.add(name, scores.g_vendi(proc))
        elif name == "Determinant":
            report.add(name, baselines.gram_logdet(proc, normalized=True))
        elif name == "BADGE":
            report.add(name, baselines.gram_logdet(proc, normalized=False))
        elif name in ("SamePromptCosine", "SamePromptInner"):
            if fs.m < 2:
                skip(name, "needs m >= 2 generations per prompt")
                continue
            report.add(
                name,
                baselines.same_prompt_pairwise(proc, normalized=name.endswith("Cosine")),
            )
        elif name == "Influence":
            if val is None:
                skip(name, "needs a validation feature set (--val)")
                continue
            report.add(name, baselines.influence(proc, val))
        elif name in ("Loss", "AvgProb"):
            key = "loss" if name == "Loss" else "avg_prob"
            if key not in fs.scalars:
                skip(name, f"sidecar lacks '{key}'")
                continue
            report.add(name, baselines.scalar_score(fs.scalars, key, fs.num_rows))
        elif name == "AvgLength":
            report.add(name, float(fs.lengths.astype(np.float64).mean()))
    return report


def _report_json(report: baselines.ScoreReport, fs: GradientFeatureSet) -> dict:
    return {
        "teacher_id": report.teacher_id,
        "n": fs.n,
        "m": fs.m,
        "d": fs.d,
        "config": report.config,
        "scores": [
            {"name": n, "value": v, "orientation": o}
            for n, v, o in report.entries
        ],
    }


def _write_json(obj: dict, path: str) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def _collect_inputs(paths: list[str]) -> list[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(
                os.path.join(p, name)
                for name in sorted(os.listdir(p))
                if name.endswith(".gfs")
            )
        else:
            out.append(p)
    if not out:
        raise UsageError("no input .gfs files found")
    return out


def _parse_scores_flag(text: str) -> list[str] | None:
    if text == "all":
        return None
    return [s.strip() for s in text.split(",") if s.strip()]


def cmd_score(args) -> int:
    inputs = _collect_inputs(args.inputs)
    requested = _parse_scores_flag(args.scores)
    val = None
    if args.val:
        val = materialize(read_features(args.val), not args.no_length_scaling)

    def one(path: str) -> dict:
        fs = read_features(path)
        report = compute_scores(
            fs,
            requested,
            c=args.c,
            nu=args.nu,
            seed=args.seed,
            length_scaling=not args.no_length_scaling,
            drop_degenerate=args.drop_degenerate,
            val=val,
        )
        obj = _report_json(report, fs)
        obj["config"]["scores"] = args.scores
        obj["config"]["source"] = os.path.basename(path)
        return obj

    with ThreadPoolExecutor(max_workers=max(1, args.parallel)) as pool:
        results = list(pool.map(one, inputs))

    outdir = args.out or "."
    if len(inputs) == 1 and outdir.endswith(".json"):
        _write_json(results[0], outdir)
        print(outdir)
    else:
        os.makedirs(outdir, exist_ok=True)
        for path, obj in zip(inputs, results):
            stem = os.path.splitext(os.path.basename(path))[0]
            dest = os.path.join(outdir, stem + ".scores.json")
            _write_json(obj, dest)
            print(dest)
    return 0


def cmd_eval(args) -> int:
    perf = evaluation.PerformanceTable.from_csv(args.perf)
    reports = []
    for name in sorted(os.listdir(args.scores_dir)):
        if not name.endswith(".scores.json"):
            continue
        with open(os.path.join(args.scores_dir, name)) as f:
            obj = json.load(f)
        rep = baselines.ScoreReport(teacher_id=obj["teacher_id"])
        for entry in obj["scores"]:
            rep.add(entry["name"], entry["value"], entry["orientation"])
        reports.append(rep)
    if not reports:
        raise UsageError(f"no .scores.json files in {args.scores_dir}")
    # Teacher performance itself acts as a reference selector.
    for rep in reports:
        if rep.teacher_id in perf.entries:
            rep.add("TeacherPerf", perf.entries[rep.teacher_id])
    records, warnings = evaluation.evaluate(reports, perf)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    obj = {
        "teachers": sorted(
            set(r.teacher_id for r in reports) & set(perf.entries)
        ),
        "warnings": warnings,
        "results": records,
    }
    _write_json(obj, args.out)
    print(args.out)
    return 0


def cmd_synth(args) -> int:
    spectrum = None
    if args.spectrum:
        spectrum = [float(s) for s in args.spectrum.split(",")]
    spec = synth.SynthSpec(
        kind=args.kind,
        n=args.n,
        m=args.m,
        d=args.d,
        seed=args.seed,
        rank=args.rank,
        noise=args.noise,
        spectrum=spectrum,
        length=args.length,
        teacher_id=args.teacher_id,
    )
    if args.kind == "two_teacher_contrast":
        aligned, random_set = synth.generate_pair(spec)
        base, ext = os.path.splitext(args.out)
        ext = ext or ".gfs"
        for suffix, fs in (("aligned", aligned), ("random", random_set)):
            dest = f"{base}.{suffix}{ext}"
            write_features(fs, dest)
            print(dest)
    else:
        write_features(synth.generate(spec), args.out)
        print(args.out)
    return 0


def cmd_alpha(args) -> int:
    fs = read_features(args.input)
    proc = materialize(fs, not args.no_length_scaling, args.drop_degenerate)
    report = evaluation.alpha_check(proc, nu=args.nu)
    obj = {
        "teacher_id": fs.teacher_id,
        "config": {
            "nu": args.nu,
            "length_scaling": not args.no_length_scaling,
            "source": os.path.basename(args.input),
        },
        "mean_alpha": report.mean_alpha,
        "usable_prompts": report.usable_prompts,
        "skipped_prompts": report.skipped_prompts,
        "per_prompt": [
            {"prompt": p, "term1": t1, "term2": t2, "alpha": a}
            for p, (t1, t2, a) in enumerate(
                zip(report.term1, report.term2, report.alphas)
            )
        ],
    }
    _write_json(obj, args.out)
    print(f"{report.usable_prompts} prompts usable, "
          f"{report.skipped_prompts} skipped, mean_alpha={report.mean_alpha}")
    print(args.out)
    return 0


def cmd_inspect(args) -> int:
    fs = read_features(args.input)
    print(
        f"magic=GFS1 version=1 n={fs.n} m={fs.m} d={fs.d} "
        f"seed={fs.projection_seed} source_dim={fs.source_dim}"
    )
    sidecar = os.fspath(args.input) + ".meta.json"
    if os.path.exists(sidecar):
        present = [k for k in ("loss", "avg_prob", "correct") if k in fs.scalars]
        detail = f" ({', '.join(present)})" if present else ""
        print(f"meta: present{detail}; teacher_id={fs.teacher_id!r}")
    else:
        print("meta: absent")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gradscores")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--c", type=int, default=10, help="fold count")
        p.add_argument("--nu", type=float, default=1e-3, help="smoothing parameter")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-length-scaling", action="store_true")
        p.add_argument("--drop-degenerate", action="store_true")
        p.add_argument("--parallel", type=int, default=1)

    p = sub.add_parser("score", help="score one or more feature files")
    p.add_argument("inputs", nargs="+", help=".gfs files or directories of them")
    common(p)
    p.add_argument("--scores", default="all", help="comma list of score names, or 'all'")
    p.add_argument("--val", help="validation feature file for Influence")
    p.add_argument("--out", help="output file (.json) or directory")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="correlate scores with student performance")
    p.add_argument("scores_dir", help="directory of .scores.json reports")
    p.add_argument("perf", help="CSV with header teacher_id,performance")
    p.add_argument("--out", default="evaluation.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic feature file")
    p.add_argument("--kind", required=True, choices=synth.KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--spectrum", help="comma list of target eigenvalues summing to 1")
    p.add_argument("--length", type=int, default=synth.DEFAULT_LENGTH)
    p.add_argument("--teacher-id", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("alpha", help="preconditioner-stability ratio check")
    p.add_argument("input", help=".gfs feature file")
    p.add_argument("--nu", type=float, default=1e-3)
    p.add_argument("--no-length-scaling", action="store_true")
    p.add_argument("--drop-degenerate", action="store_true")
    p.add_argument("--out", default="alpha.json")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("inspect", help="print the header of a feature file")
    p.add_argument("input")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FeatureFormatError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
