from qle.commands.options import (
    DimsOption,
    FormatOption,
    GenerateOption,
    HeatTOption,
    InputOption,
    KernelOption,
    KOption,
    MOption,
    NoiseOption,
    OutOption,
    SeedOption,
    TimingsOption,
    build_config,
    fail,
    show_run,
)
from qle.config import settings
from qle.models import QLEError
from qle.pipeline import run_classical_embed


def embed(
    input: InputOption = None,
    generate: GenerateOption = None,
    m: MOption = settings.generate_m,
    noise: NoiseOption = settings.noise,
    k: KOption = settings.k,
    kernel: KernelOption = settings.kernel,
    heat_t: HeatTOption = settings.heat_t,
    dims: DimsOption = settings.dims,
    seed: SeedOption = settings.seed,
    out: OutOption = None,
    fmt: FormatOption = "csv",
    timings: TimingsOption = settings.record_timings,
):
    """
    Classical Laplacian eigenmap: the d smallest nonzero solutions of L v = lambda D v.

    Example Usage:

        python -m qle embed --input data/p3.csv --k 1 --kernel binary --dims 1 --out out/p3.csv
    """
    try:
        cfg = build_config(
            input=input, generate=generate, m=m, noise=noise, k=k, kernel=kernel, heat_t=heat_t,
            dims=dims, seed=seed, out=out, fmt=fmt, record_timings=timings,
        )
        run = run_classical_embed(cfg)
    except QLEError as e:
        fail(e)

    show_run("classical embedding", run)
