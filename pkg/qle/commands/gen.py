import logging
from pathlib import Path

import typer
from rich.console import Console
from typing_extensions import Annotated

from qle.commands.options import GenerateOption, MOption, NoiseOption, SeedOption, build_config, fail
from qle.config import settings
from qle.dataset_functions import generate_synthetic, save_points
from qle.models import QLEError

logger = logging.getLogger(__name__)


def gen(
    out: Annotated[Path, typer.Option("--out", help="Where to write the point cloud CSV.")],
    generate: GenerateOption = "ring",
    m: MOption = settings.generate_m,
    noise: NoiseOption = settings.noise,
    seed: SeedOption = settings.seed,
):
    """
    Generate a synthetic manifold dataset and save it as headerless CSV.

    Example Usage:

        python -m qle gen --generate swiss-roll --m 12 --noise 0.05 --seed 7 --out data/roll.csv
    """
    try:
        cfg = build_config(generate=generate, m=m, noise=noise, seed=seed, out=out)
        cloud = generate_synthetic(cfg.generate, cfg.m, cfg.noise, cfg.seed)
        path = save_points(cloud, out)
    except QLEError as e:
        fail(e)

    logger.info(f"Wrote {cloud.m} x {cloud.n} points to {path}")
    Console().print(f"wrote {path} ({cloud.m} samples, {cloud.n} features)")
