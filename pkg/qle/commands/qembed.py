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
    build_config,
    fail,
)
from qle.config import settings
from qle.models import QLEError
from qle.pipeline import run_quantum_embed


def qembed(
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
    isolation_input: IsolationInputOption = settings.isolation_input,
    timings: TimingsOption = settings.record_timings,
):
    """
    Simulated quantum Laplacian eigenmap (chain product, phase estimation, amplitude amplification).

    Writes the embedding plus <out stem>.diagnostics.json with the outcome distribution, the
    eigenvalue table and the fidelity of every isolated state against the classical oracle.

    Example Usage:

        python -m qle qembed --generate ring --m 8 --k 2 --dims 2 --phase-bits 10 --out out/ring.csv
    """
    try:
        cfg = build_config(
            input=input, generate=generate, m=m, noise=noise, k=k, kernel=kernel, heat_t=heat_t,
            dims=dims, phase_bits=phase_bits, scale=scale, shots=shots, seed=seed, out=out, fmt=fmt,
            isolation_input=isolation_input, record_timings=timings,
        )
        run = run_quantum_embed(cfg)
    except QLEError as e:
        fail(e)

    table = Table(title="quantum embedding")
    for column in ("bitstring", "estimate", "oracle", "iterations", "success", "fidelity"):
        table.add_column(column, justify="right")
    for row in run.diagnostics["eigenvalue_table"]:
        table.add_row(
            row["bitstring"],
            f"{row['estimate']:.8g}",
            f"{row['oracle']:.8g}",
            str(row["iterations"]),
            f"{row['success_probability']:.4f}",
            f"{row['fidelity']:.6f}",
        )

    console = Console()
    console.print(table)
    for path in run.written:
        console.print(f"wrote {path}")
