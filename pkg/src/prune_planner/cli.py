"""Command-line surface: fit, plan, collect, sweep, validate, report.

Every artifact-producing command snapshots its configuration, input digests,
and output digests into a single ``manifest.json`` next to its outputs, so
reruns can be checked for bit-identical behavior.

Exit codes: 0 success (possibly with warnings), 1 validation thresholds not
met, 2 unusable inputs (parse failures, bad budget), 3 non-convergence under
``--strict``, 4 trainer protocol violation, 5 insufficient grid structure.
"""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import click

from . import __version__
from .collection import (
    CollectionConfig,
    PartialCollectionWarning,
    ProtocolError,
    SimulatedTrainer,
    SubprocessTrainer,
    collect,
)
from .dataset import Dataset, DatasetFormatError, load_samples, save_samples
from .fixture_data import FIXTURE_NAMES, fixture_path
from .maps import DimTriple, SeparableMap, eval_separable, load_map, save_map
from .planner import Budget, solve
from .regression import FitConfig, fit_full_tensor, fit_separable, mae, split
from .separability import InsufficientGridError, analyze_separability


@dataclass
class CliState:
    seed: int
    out: Path
    unit: str
    strict: bool
    quiet: bool

    def say(self, message: str) -> None:
        if not self.quiet:
            click.echo(message)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    state: CliState, command: str, config: dict, inputs: list[Path], outputs: list[Path]
) -> Path:
    manifest = {
        "format": "run-manifest/v1",
        "tool_version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {Path(p).name: _sha256(Path(p)) for p in outputs},
    }
    path = state.out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load_dataset_or_exit(state: CliState, path: str) -> Dataset:
    try:
        return load_samples(path, unit=state.unit)
    except DatasetFormatError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@click.group()
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True, help="Seed for every stochastic step.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True, help="Directory for artifacts and the run manifest.")
@click.option("--unit", type=click.Choice(["auto", "percent", "fraction"]), default="auto", show_default=True, help="Accuracy scale of input CSVs.")
@click.option("--strict", is_flag=True, help="Fail (exit 3) when a fit does not converge.")
@click.option("--quiet", is_flag=True, help="Suppress informational output.")
@click.version_option(version=__version__, prog_name="prune-planner")
@click.pass_context
def main(ctx: click.Context, seed: int, out: Path, unit: str, strict: bool, quiet: bool) -> None:
    """Plan budget-constrained pruning across depth, width, and resolution."""
    out.mkdir(parents=True, exist_ok=True)
    ctx.obj = CliState(seed=seed, out=out, unit=unit, strict=strict, quiet=quiet)


@main.command()
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=False), help="Training samples CSV (d,w,r,accuracy).")
@click.option("--degree", type=click.IntRange(min=0), default=3, show_default=True)
@click.option("--rank", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--ridge", type=click.FloatRange(min=0), default=0.0, show_default=True)
@click.option("--full", "fit_full", is_flag=True, help="Fit the dense polynomial baseline instead of the separable surface.")
@click.option("--max-sweeps", type=click.IntRange(min=1), default=500, show_default=True)
@click.option("--map-out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Override the fitted map path (default <out>/map.json).")
@click.pass_obj
def fit(state: CliState, samples_path: str, degree: int, rank: int, ridge: float, fit_full: bool, max_sweeps: int, map_out: Path | None) -> None:
    """Fit an accuracy surface to a samples CSV."""
    data = _load_dataset_or_exit(state, samples_path)
    if fit_full:
        fitted, report = fit_full_tensor(data, degree, ridge)
    else:
        config = FitConfig(
            rank=rank, degree=degree, ridge=ridge, max_sweeps=max_sweeps, seed=state.seed
        )
        fitted, report = fit_separable(data, config)
    map_path = map_out or (state.out / "map.json")
    save_map(fitted, map_path)
    report_path = state.out / "fit-report.json"
    report_path.write_text(
        json.dumps(
            {
                "train_mae": report.train_mae,
                "sweeps_used": report.sweeps_used,
                "converged": report.converged,
                "final_loss": report.final_loss,
                "n_samples": len(data),
            },
            indent=2,
        )
        + "\n"
    )
    _write_manifest(
        state,
        "fit",
        {
            "samples": samples_path,
            "degree": degree,
            "rank": None if fit_full else rank,
            "ridge": ridge,
            "full": fit_full,
            "max_sweeps": max_sweeps,
            "seed": state.seed,
            "unit": state.unit,
        },
        inputs=[Path(samples_path)],
        outputs=[map_path, report_path],
    )
    state.say(f"train MAE: {report.train_mae:.4f} accuracy points ({map_path})")
    if state.strict and not report.converged:
        click.echo("error: fit did not converge within the sweep budget", err=True)
        sys.exit(3)


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path(exists=False), help="Fitted map JSON.")
@click.option("-T", "--budget", type=float, required=True, help="Target cost fraction in (0, 1).")
@click.option("--grid", type=click.IntRange(min=16), default=512, show_default=True)
@click.option("--no-refine", is_flag=True, help="Skip local refinement of the best grid cell.")
@click.option("--plan-out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_obj
def plan(state: CliState, map_path: str, budget: float, grid: int, no_refine: bool, plan_out: Path | None) -> None:
    """Maximize a fitted surface on the cost-budget shell."""
    try:
        surface = load_map(map_path)
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    try:
        budget_obj = Budget(budget)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    result = solve(surface, budget_obj, grid_resolution=grid, refine=not no_refine)
    out_path = plan_out or (state.out / "plan.json")
    out_path.write_text(json.dumps(result.to_json_dict(), indent=2) + "\n")
    _write_manifest(
        state,
        "plan",
        {"map": map_path, "budget": budget, "grid": grid, "refine": not no_refine},
        inputs=[Path(map_path)],
        outputs=[out_path],
    )
    p = result.point
    state.say(
        f"optimal (d, w, r) = ({p.d:.4f}, {p.w:.4f}, {p.r:.4f}), "
        f"predicted accuracy {result.predicted_accuracy:.4f} ({out_path})"
    )


@main.command(name="collect")
@click.option("--trainer", "trainer_cmd", default=None, help="Shell command of an external trainer speaking the line protocol.")
@click.option("--simulate", nargs=3, type=click.Tuple([click.Path(exists=False), float, int]), default=None, metavar="SURFACE NOISE SEED", help="Simulate against a surface JSON with Gaussian accuracy noise.")
@click.option("-T", "--budget", type=float, required=True)
@click.option("--rds", type=click.IntRange(min=1), default=4, show_default=True, help="Prune rounds per dimension.")
@click.option("--jitter", type=click.FloatRange(min=0), default=0.0, show_default=True, help="Simulated echo jitter on the changed coordinate.")
@click.option("--base-accuracy", type=float, default=None, help="Accuracy of the unpruned model (required with --trainer).")
@click.option("--resume", is_flag=True, help="Replay a previous transcript, issuing only missing rounds.")
@click.option("--samples-out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--transcript", "transcript_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_obj
def collect_cmd(
    state: CliState,
    trainer_cmd: str | None,
    simulate: tuple[str, float, int] | None,
    budget: float,
    rds: int,
    jitter: float,
    base_accuracy: float | None,
    resume: bool,
    samples_out: Path | None,
    transcript_path: Path | None,
) -> None:
    """Collect (d, w, r, accuracy) samples through the trainer protocol."""
    if (trainer_cmd is None) == (simulate is None):
        click.echo("error: pass exactly one of --trainer or --simulate", err=True)
        sys.exit(2)
    try:
        budget_value = Budget(budget).t
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if simulate is not None:
        surface_path, noise_sd, sim_seed = simulate
        try:
            surface = load_map(surface_path)
        except (OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        if not isinstance(surface, SeparableMap):
            click.echo("error: --simulate needs a separable surface", err=True)
            sys.exit(2)
        trainer = SimulatedTrainer(surface, noise_sd=noise_sd, echo_jitter=jitter, seed=sim_seed)
        if base_accuracy is None:
            base_accuracy = min(max(eval_separable(surface, DimTriple.base()), 0.0), 1.0)
        inputs = [Path(surface_path)]
        source = {"simulate": {"surface": str(surface_path), "noise_sd": noise_sd, "seed": sim_seed, "jitter": jitter}}
    else:
        if base_accuracy is None:
            click.echo("error: --base-accuracy is required with --trainer", err=True)
            sys.exit(2)
        try:
            trainer = SubprocessTrainer(trainer_cmd)
        except OSError as exc:
            click.echo(f"error: cannot start trainer {trainer_cmd!r}: {exc}", err=True)
            sys.exit(2)
        inputs = []
        source = {"trainer": trainer_cmd}
    config = CollectionConfig(t=budget_value, rds=rds, base_accuracy=base_accuracy)
    samples_path = samples_out or (state.out / "samples.csv")
    transcript_file = transcript_path or (state.out / "transcript.jsonl")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PartialCollectionWarning)
            data = collect(trainer, config, transcript_path=transcript_file, resume=resume)
    except ProtocolError as exc:
        click.echo(f"error: protocol violation: {exc}", err=True)
        sys.exit(4)
    finally:
        trainer.close()
    save_samples(data, samples_path)
    _write_manifest(
        state,
        "collect",
        {**source, "budget": budget_value, "rds": rds, "base_accuracy": base_accuracy, "resume": resume},
        inputs=inputs,
        outputs=[samples_path, transcript_file],
    )
    for warning in caught:
        click.echo(f"warning: {warning.message}", err=True)
    state.say(f"collected {len(data)} samples -> {samples_path}")


def _parse_int_list(raw: str, what: str) -> list[int]:
    try:
        values = [int(tok) for tok in raw.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"{what} must be a comma-separated list of integers")
    if not values:
        raise click.BadParameter(f"{what} must be nonempty")
    return values


@main.command()
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=False))
@click.option("--degrees", default="1,2,3,4,5", show_default=True, help="Comma-separated polynomial degrees.")
@click.option("--ranks", default="1", show_default=True, help="Comma-separated ranks.")
@click.option("-T", "--budget", type=float, default=0.5, show_default=True)
@click.option("--n-train", type=click.IntRange(min=1), default=13, show_default=True, help="Training-split size for the generalization columns.")
@click.option("--sweep-out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_obj
def sweep(state: CliState, samples_path: str, degrees: str, ranks: str, budget: float, n_train: int, sweep_out: Path | None) -> None:
    """Fit and plan across a (degree, rank) grid; emit a plot-ready CSV.

    Each row reports the optimum from a fit on the full dataset plus
    train/eval MAE from a seeded n-train/rest split. Rows whose eval MAE is
    at least twice the (degree 3, rank 1) reference are flagged as underfit.
    """
    data = _load_dataset_or_exit(state, samples_path)
    try:
        budget_obj = Budget(budget)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    degree_list = _parse_int_list(degrees, "degrees")
    rank_list = _parse_int_list(ranks, "ranks")
    rows = []
    for degree in sorted(set(degree_list)):
        for rank in sorted(set(rank_list)):
            row = {
                "degree": degree,
                "rank": rank,
                "status": "ok",
                "d_opt": "",
                "w_opt": "",
                "r_opt": "",
                "predicted_accuracy": "",
                "train_mae": "",
                "eval_mae": "",
                "underfit": "",
                "message": "",
            }
            try:
                config = FitConfig(rank=rank, degree=degree, seed=state.seed)
                fitted, _ = fit_separable(data, config)
                result = solve(fitted, budget_obj)
                row["d_opt"] = f"{result.point.d:.6f}"
                row["w_opt"] = f"{result.point.w:.6f}"
                row["r_opt"] = f"{result.point.r:.6f}"
                row["predicted_accuracy"] = f"{result.predicted_accuracy:.6f}"
                if n_train < len(data):
                    train, evaluation = split(data, n_train, state.seed)
                    sub_fit, sub_report = fit_separable(train, config)
                    row["train_mae"] = f"{sub_report.train_mae:.6f}"
                    row["eval_mae"] = f"{mae(sub_fit, evaluation):.6f}"
                else:
                    row["message"] = "dataset too small for the requested split"
            except Exception as exc:  # noqa: BLE001 - per-config failures are data
                row["status"] = "error"
                row["message"] = str(exc)
            rows.append(row)
    reference = next(
        (
            float(r["eval_mae"])
            for r in rows
            if r["degree"] == 3 and r["rank"] == 1 and r["eval_mae"] != ""
        ),
        None,
    )
    if reference is not None and reference > 0:
        for row in rows:
            if row["eval_mae"] != "":
                row["underfit"] = str(float(row["eval_mae"]) >= 2.0 * reference).lower()
    out_path = sweep_out or (state.out / "sweep.csv")
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    _write_manifest(
        state,
        "sweep",
        {
            "samples": samples_path,
            "degrees": sorted(set(degree_list)),
            "ranks": sorted(set(rank_list)),
            "budget": budget_obj.t,
            "n_train": n_train,
            "seed": state.seed,
        },
        inputs=[Path(samples_path)],
        outputs=[out_path],
    )
    failures = sum(1 for r in rows if r["status"] != "ok")
    state.say(f"swept {len(rows)} configurations ({failures} failed) -> {out_path}")


@main.command()
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=False))
@click.option("--median-threshold", type=float, default=0.01, show_default=True, help="Pass bound on the median relative deviation (fraction).")
@click.option("--max-threshold", type=float, default=0.03, show_default=True, help="Pass bound on the max relative deviation (fraction).")
@click.option("--report-out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_obj
def validate(state: CliState, samples_path: str, median_threshold: float, max_threshold: float, report_out: Path | None) -> None:
    """Check that a measured grid is consistent with a separable surface."""
    data = _load_dataset_or_exit(state, samples_path)
    try:
        report = analyze_separability(data)
    except InsufficientGridError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(5)
    out_path = report_out or (state.out / "separability.json")
    out_path.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
    _write_manifest(
        state,
        "validate",
        {
            "samples": samples_path,
            "median_threshold": median_threshold,
            "max_threshold": max_threshold,
        },
        inputs=[Path(samples_path)],
        outputs=[out_path],
    )
    ok = report.passes(median_threshold, max_threshold)
    state.say(
        f"cross-ratio deviation: median {report.median_rel_dev * 100:.3f}%, "
        f"max {report.max_rel_dev * 100:.3f}% "
        f"(worst slice {report.worst_slice.axis}={report.worst_slice.value}) "
        f"-> {'pass' if ok else 'FAIL'}"
    )
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=False), default=None, help="PlanResult JSON to summarize.")
@click.option("--fit-report", "fit_report_path", type=click.Path(exists=False), default=None, help="Fit report JSON to summarize.")
@click.pass_obj
def report(state: CliState, plan_path: str | None, fit_report_path: str | None) -> None:
    """Print a human-readable summary of planning/fitting artifacts."""
    if plan_path is None and fit_report_path is None:
        click.echo("error: pass --plan and/or --fit-report", err=True)
        sys.exit(2)
    if fit_report_path is not None:
        doc = json.loads(Path(fit_report_path).read_text())
        click.echo(
            f"fit: train MAE {doc['train_mae']:.4f} points over {doc['n_samples']} samples, "
            f"{doc['sweeps_used']} sweeps, converged={doc['converged']}"
        )
    if plan_path is not None:
        doc = json.loads(Path(plan_path).read_text())
        p = doc["point"]
        display_acc = min(max(doc["predicted_accuracy"], 0.0), 1.0)
        click.echo(
            f"plan @ budget {doc['budget']:.3f}: depth x{p['d']:.3f}, width x{p['w']:.3f}, "
            f"resolution x{p['r']:.3f}"
        )
        click.echo(
            f"  predicted accuracy {display_acc * 100:.2f}%  "
            f"model-estimated FLOPs reduction {doc['frr'] * 100:.1f}%  "
            f"approx. parameter reduction {doc['prr_estimate'] * 100:.1f}%"
        )
        residuals = ", ".join(f"{v:+.2e}" for v in doc["kkt_residuals"])
        click.echo(
            f"  stationarity residuals [{residuals}]  "
            f"active bounds {doc['active_bounds']}"
        )


@main.command()
@click.argument("name", required=False)
@click.option("--dump", type=click.Path(file_okay=False, path_type=Path), default=None, help="Copy all bundled fixtures into a directory.")
@click.pass_obj
def fixtures(state: CliState, name: str | None, dump: Path | None) -> None:
    """List bundled fixtures, print one's path, or dump them all."""
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)
        for fixture in FIXTURE_NAMES:
            src = fixture_path(fixture)
            shutil.copy(src, dump / src.name)
        state.say(f"copied {len(FIXTURE_NAMES)} fixtures to {dump}")
        return
    if name is None:
        for fixture in FIXTURE_NAMES:
            click.echo(fixture)
        return
    try:
        click.echo(str(fixture_path(name)))
    except KeyError as exc:
        click.echo(f"error: {exc.args[0]}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
