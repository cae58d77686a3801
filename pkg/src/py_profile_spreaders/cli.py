"""
Defines the Command Line Interface (CLI) for the application.

This module uses Typer to expose every pipeline stage as a subcommand. All
subcommands read a configuration file; flags override individual settings.

Exit codes: 0 on success, 1 on fatal input or runtime errors, 2 on invalid
configuration.
"""

from pathlib import Path
from typing import Callable, Optional, TypeVar

import typer
from typing_extensions import Annotated

from . import run as pipeline
from .classifier import ExperimentResult
from .config import PipelineConfig, apply_overrides, load_config
from .stats import format_report

T = TypeVar("T")

# Create a Typer application instance
app = typer.Typer(help="Profile social-media users as fake- or real-news spreaders.")

ConfigOption = Annotated[
    Path,
    typer.Option(
        "--config",
        "-c",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
        resolve_path=True,
        help="Path to the configuration file (YAML, or flat key=value text).",
    ),
]
ThresholdOption = Annotated[
    Optional[int],
    typer.Option(
        "--threshold",
        min=1,
        help="Distinct fake stories that make a user a fake-news spreader.",
    ),
]
SeedOption = Annotated[
    Optional[int],
    typer.Option("--seed", min=0, help="Seed for the split and the networks."),
]
BaselineEmbedOption = Annotated[
    bool,
    typer.Option(
        "--baseline-embed",
        help="Use hashed term-frequency embeddings instead of an embeddings file.",
    ),
]
ClassWeightsOption = Annotated[
    bool,
    typer.Option("--class-weights", help="Weight the loss by inverse class frequency."),
]
OutOption = Annotated[
    Optional[Path],
    typer.Option(
        "--out",
        file_okay=False,
        help="Output directory; overrides output_dir from the configuration.",
    ),
]


def _load(
    config_file: Path, out: Optional[Path] = None, **overrides
) -> PipelineConfig:
    if out is not None:
        overrides["output_dir"] = str(out)
    try:
        settings = load_config(path=str(config_file))
        return apply_overrides(settings, **overrides)
    except ValueError as e:
        typer.secho(f"Configuration Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=2) from e


def _execute(stage: Callable[..., T], *args) -> T:
    try:
        return stage(*args)
    except pipeline.StageConfigurationError as e:
        typer.secho(f"Configuration Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=2) from e
    except Exception as e:
        typer.secho(
            f"\nAn error occurred during '{stage.__name__}': {e}",
            fg=typer.colors.RED,
            err=True,
        )
        raise typer.Exit(code=1) from e


def _echo_scores(result: ExperimentResult) -> None:
    for name, report in (
        ("embedding", result.baseline_report),
        ("embedding+features", result.fusion_report),
    ):
        typer.echo(f"{name:<20} accuracy {report.accuracy:.4f}  F1 {report.f1:.4f}")
    if result.dropped_users:
        typer.secho(
            f"{len(result.dropped_users)} user(s) without an embedding were dropped.",
            fg=typer.colors.YELLOW,
        )


def _training_overrides(
    seed: Optional[int],
    threshold: Optional[int],
    baseline_embed: bool,
    class_weights: bool,
) -> dict:
    # Boolean flags only switch a setting on; off keeps the configured value.
    return {
        "seed": seed,
        "spreader_threshold": threshold,
        "baseline_embed": True if baseline_embed else None,
        "network__class_weighting": True if class_weights else None,
    }


@app.command()
def label(
    config_file: ConfigOption, threshold: ThresholdOption = None, out: OutOption = None
):
    """
    Tag every posting user as a fake- or real-news spreader.
    """
    settings = _load(config_file, out, spreader_threshold=threshold)
    uri, labels = _execute(pipeline.run_label, settings)
    typer.secho(f"Labeled {len(labels)} users -> {uri}", fg=typer.colors.GREEN)


@app.command()
def features(
    config_file: ConfigOption,
    threshold: ThresholdOption = None,
    out: OutOption = None,
    workers: Annotated[
        Optional[int],
        typer.Option(min=1, help="Number of parallel worker processes to use."),
    ] = None,
):
    """
    Extract the ten motivational features of every labeled user.
    """
    settings = _load(
        config_file, out, spreader_threshold=threshold, workers=workers
    )
    uri, count = _execute(pipeline.run_features, settings)
    typer.secho(f"Wrote {count} feature rows -> {uri}", fg=typer.colors.GREEN)


@app.command()
def stats(
    config_file: ConfigOption, threshold: ThresholdOption = None, out: OutOption = None
):
    """
    Compare every feature between the spreader groups with Welch's t-test.
    """
    settings = _load(config_file, out, spreader_threshold=threshold)
    results = _execute(pipeline.run_stats, settings)
    typer.echo(format_report(results))
    untestable = [r.feature_name for r in results if not r.testable]
    if untestable:
        typer.secho(
            f"Untestable feature(s): {', '.join(untestable)}", fg=typer.colors.YELLOW
        )


@app.command()
def summary(
    config_file: ConfigOption, threshold: ThresholdOption = None, out: OutOption = None
):
    """
    Count users and tweets per spreader class.
    """
    settings = _load(config_file, out, spreader_threshold=threshold)
    rows = _execute(pipeline.run_summary, settings)
    for row in rows:
        typer.echo(
            f"{row.label.value:<14} users {row.users:>7}  tweets {row.tweets:>9}"
        )


@app.command()
def train(
    config_file: ConfigOption,
    seed: SeedOption = None,
    threshold: ThresholdOption = None,
    baseline_embed: BaselineEmbedOption = False,
    class_weights: ClassWeightsOption = False,
    out: OutOption = None,
):
    """
    Train the embedding-only and the fusion model and save both.
    """
    settings = _load(
        config_file,
        out,
        **_training_overrides(seed, threshold, baseline_embed, class_weights),
    )
    result = _execute(pipeline.run_train, settings)
    _echo_scores(result)
    typer.secho(f"Models written to {settings.output_dir}", fg=typer.colors.GREEN)


@app.command(name="eval")
def evaluate(
    config_file: ConfigOption,
    seed: SeedOption = None,
    threshold: ThresholdOption = None,
    baseline_embed: BaselineEmbedOption = False,
    class_weights: ClassWeightsOption = False,
    out: OutOption = None,
):
    """
    Evaluate the paired models on the held-out users.
    """
    settings = _load(
        config_file,
        out,
        **_training_overrides(seed, threshold, baseline_embed, class_weights),
    )
    result = _execute(pipeline.run_eval, settings)
    _echo_scores(result)


@app.command()
def export(
    config_file: ConfigOption,
    seed: SeedOption = None,
    threshold: ThresholdOption = None,
    baseline_embed: BaselineEmbedOption = False,
    class_weights: ClassWeightsOption = False,
    out: OutOption = None,
):
    """
    Export the combined vector of every user for external 2-D projection.
    """
    settings = _load(
        config_file,
        out,
        **_training_overrides(seed, threshold, baseline_embed, class_weights),
    )
    uri, count = _execute(pipeline.run_export, settings)
    typer.secho(f"Exported {count} vectors -> {uri}", fg=typer.colors.GREEN)


@app.command()
def demo(
    out: Annotated[
        Path,
        typer.Option(
            "--out", file_okay=False, help="Directory for the demo corpus and outputs."
        ),
    ],
    seed: Annotated[int, typer.Option("--seed", min=0, help="Demo seed.")] = 0,
    users: Annotated[
        int, typer.Option("--users", min=20, help="Number of demo users.")
    ] = 50,
    class_weights: ClassWeightsOption = False,
):
    """
    Generate the synthetic demo corpus and run every stage on it.
    """
    typer.echo(f"Generating demo corpus in {out} (seed {seed}, {users} users)")
    overrides = {"network__class_weighting": True if class_weights else None}
    try:
        result = pipeline.run_demo(str(out), seed=seed, n_users=users, **overrides)
    except Exception as e:
        typer.secho(f"\nThe demo failed: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e
    _echo_scores(result)
    typer.secho(f"\nDemo outputs written to {out / 'output'}", fg=typer.colors.GREEN)


if __name__ == "__main__":
    app()
