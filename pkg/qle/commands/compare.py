from rich.console import Console
from rich.table import Table

from qle.commands.options import (
    DimsOption,
    FormatOption,
    GenerateOption,
    HeatTOption,
    InputOption,
    IsolationInputOption,
    KernelOption,
    KOption,
    MOption,
    NoiseOption,
    OutOption,
    PhaseBitsOption,
    ScaleOption,
    SeedOption,
    ShotsOption,
    TimingsOption,
    TolOption,
    build_config,
    fail,
)
from qle.config import settings
from qle.models import ComparisonFailed, QLEError
from qle.pipeline import run_comparison


def compare(
    input: InputOption = None,
    generate: GenerateOption = None,
    m: MOption = settings.generate_m,
    noise: NoiseOption = settings.noise,
    k: KOption = settings.k,
    kernel: KernelOption = settings.kernel,
    heat_t: HeatTOption = settings.heat_t,
    dims: DimsOption = settings.dims,
    phase_bits: PhaseBitsOption = settings.phase_bits,
    scale: ScaleOption = settings.scale,
    shots: ShotsOption = settings.shots,
    seed: SeedOption = settings.seed,
    out: OutOption = None,
    fmt: FormatOption = "csv",
    tol: TolOption = settings.tol,
    isolation_input: IsolationInputOption = settings.isolation_input,
    timings: TimingsOption = settings.record_timings,
):
    """
    Run the classical and the simulated quantum pipeline on the same data and compare them.

    With --out, writes <out stem>.report.json plus both embeddings (<out stem>.classical and
    <out stem>.quantum) in --format. Exits with code 5 when any column or eigenvalue deviates
    by more than --tol.
    """
    try:
        cfg = build_config(
            input=input, generate=generate, m=m, noise=noise, k=k, kernel=kernel, heat_t=heat_t,
            dims=dims, phase_bits=phase_bits, scale=scale, shots=shots, seed=seed, out=out, fmt=fmt,
            tol=tol, isolation_input=isolation_input, record_timings=timings,
        )
        report, classical, quantum = run_comparison(cfg)
    except QLEError as e:
        fail(e)

    table = Table(title=f"classical vs quantum (tol={tol:g})")
    for column in ("column", "classical", "quantum", "eigenvalue dev", "vector dev", "fidelity"):
        table.add_column(column, justify="right")
    for c in range(classical.embedding.d):
        table.add_row(
            str(c),
            f"{classical.embedding.eigenvalues[c]:.8g}",
            f"{quantum.embedding.eigenvalues[c]:.8g}",
            f"{report.eigenvalue_deviations[c]:.3g}",
            f"{report.column_deviations[c]:.3g}",
            f"{report.fidelities[c]:.6f}",
        )
    Console().print(table)

    if not report.passed:
        fail(ComparisonFailed(f"deviations exceed tol={tol:g}", module="cli_pipeline"))
    Console().print("PASS")
