import logging
from pathlib import Path
from typing import NoReturn, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from typing_extensions import Annotated

from qle.config import settings
from qle.models import ConfigError, PipelineRun, QLEError, RunConfig

logger = logging.getLogger(__name__)

InputOption = Annotated[Optional[Path], typer.Option("--input", help="Point cloud CSV (one sample per line).")]
GenerateOption = Annotated[Optional[str], typer.Option("--generate", help="Synthetic dataset: ring, swiss-roll or two-moons.")]
MOption = Annotated[int, typer.Option("--m", help="Sample count for --generate.")]
NoiseOption = Annotated[float, typer.Option("--noise", help="Gaussian noise for --generate.")]
KOption = Annotated[int, typer.Option("--k", help="Nearest neighbors per sample.")]
KernelOption = Annotated[str, typer.Option("--kernel", help="Edge weights: heat or binary.")]
HeatTOption = Annotated[Optional[float], typer.Option("--heat-t", help="Heat kernel width (default: mean squared neighbor distance).")]
DimsOption = Annotated[int, typer.Option("--dims", help="Embedding dimension d.")]
PhaseBitsOption = Annotated[int, typer.Option("--phase-bits", help="Phase register width t (precision 2^-t / s).")]
ScaleOption = Annotated[float, typer.Option("--scale", help="Spectral scale s in (0, 1/2].")]
ShotsOption = Annotated[int, typer.Option("--shots", help="Sampled shots for the spectrum survey (0 = exact distribution only).")]
SeedOption = Annotated[int, typer.Option("--seed", help="Seed for generators and shot sampling.")]
OutOption = Annotated[Optional[Path], typer.Option("--out", help="Output file.")]
FormatOption = Annotated[str, typer.Option("--format", help="Embedding output format: csv or json.")]
TolOption = Annotated[float, typer.Option("--tol", help="Comparison tolerance.")]
IsolationInputOption = Annotated[str, typer.Option("--isolation-input", help="Eigenvector isolation input: column, uniform, uniform-padded or basis.")]
TimingsOption = Annotated[bool, typer.Option("--timings", help="Record stage timings in the JSON outputs.")]


def build_config(**values) -> RunConfig:
    """RunConfig from CLI values; pydantic validation errors become configuration errors."""
    try:
        return RunConfig(fmt=values.pop("fmt", "csv"), eps_rank=settings.eps_rank, **values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}" for err in e.errors())
        raise ConfigError(problems, module="cli_pipeline")


def fail(error: QLEError) -> NoReturn:
    logger.error(str(error))
    raise typer.Exit(code=error.exit_code)


def show_run(title: str, run: PipelineRun) -> None:
    table = Table(title=title)
    table.add_column("column", justify="right")
    table.add_column("eigenvalue", justify="right")
    for column, value in enumerate(run.embedding.eigenvalues):
        table.add_row(str(column), f"{value:.10g}")

    console = Console()
    console.print(table)
    for path in run.written:
        console.print(f"wrote {path}")
