import logging
from pathlib import Path
from typing import Union

import numpy as np
import orjson
import pandas as pd
from sklearn.datasets import make_moons, make_swiss_roll

from qle.models import ConfigError, DatasetError, DatasetKind, Embedding, PointCloud

logger = logging.getLogger(__name__)

MODULE = "dataset_io"
FLOAT_FORMAT = "%.17g"
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def load_points(path: Union[str, Path], fmt: str = "csv") -> PointCloud:
    """
    Reads a point cloud from a headerless, comma separated file.

    Args:
        path (str | Path): The file to read. One sample per line, one feature per field.
        fmt (str): The file format. Only 'csv' is supported.

    Returns:
        PointCloud: Row i of the matrix is line i of the file.

    Raises:
        DatasetError: The file is missing or empty, rows have differing field counts,
                      a field is not a finite number, or fewer than 2 rows are present.

    Example Usage:

        cloud = load_points("data/ring.csv")
        print(cloud.m, cloud.n)
    """
    if fmt != "csv":
        raise ConfigError(f"unsupported point format '{fmt}', only csv is available", module=MODULE)

    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"input file does not exist: {path}", module=MODULE)

    try:
        # Strings first, so ragged rows and bad fields can be reported before any conversion
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise DatasetError(f"input file is empty: {path}", module=MODULE)
    except pd.errors.ParserError as e:
        logger.error(f"An error occurred while parsing {path}: {e}")
        raise DatasetError(f"ragged rows in {path}: {e}", module=MODULE)

    present = (frame.notna() & (frame != "")).sum(axis=1).to_numpy()
    filled = np.flatnonzero(present)
    if filled.size == 0:
        raise DatasetError(f"input file is empty: {path}", module=MODULE)
    # blank lines after the last sample are dropped, any other blank line shifts the row numbering
    frame, present = frame.iloc[: filled[-1] + 1], present[: filled[-1] + 1]
    blank = np.flatnonzero(present == 0)
    if blank.size:
        raise DatasetError(f"blank line {int(blank[0]) + 1} in {path}; row i must be line i", module=MODULE)

    expected = frame.shape[1]
    short_rows = np.flatnonzero(present != expected)
    if short_rows.size:
        line = int(short_rows[0])
        raise DatasetError(
            f"ragged rows in {path}: line {line + 1} has {present[line]} fields, expected {expected}",
            module=MODULE,
        )

    try:
        points = frame.to_numpy(dtype=object).astype(np.float64)
    except ValueError as e:
        raise DatasetError(f"non-numeric field in {path}: {e}", module=MODULE)

    if not np.all(np.isfinite(points)):
        raise DatasetError(f"non-finite value in {path}", module=MODULE)
    if points.shape[0] < 2:
        raise DatasetError(f"{path} holds {points.shape[0]} row(s), at least 2 samples are required", module=MODULE)

    logger.debug(f"Loaded {points.shape[0]} x {points.shape[1]} points from {path}")
    return PointCloud(points=points)


def save_points(data: Union[PointCloud, np.ndarray], path: Union[str, Path]) -> Path:
    """
    Writes a point cloud (or any real matrix, e.g. W or L for debugging) as headerless CSV.
    Values are printed with 17 significant digits, so load_points reads them back bit-exactly.
    """
    matrix = data.points if isinstance(data, PointCloud) else np.asarray(data, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(matrix).to_csv(
            path, header=False, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )
    except OSError as e:
        logger.error(f"An error occurred while writing {path}: {e}")
        raise DatasetError(f"cannot write {path}: {e}", module=MODULE)
    return path


def write_json(payload: dict, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(orjson.dumps(payload, option=JSON_OPTIONS) + b"\n")
    except (OSError, TypeError) as e:
        logger.error(f"An error occurred while writing {path}: {e}")
        raise DatasetError(f"cannot write {path}: {e}", module=MODULE)
    return path


def sidecar_path(path: Union[str, Path], suffix: str = "") -> Path:
    """'out/emb.csv' -> 'out/emb.json', or 'out/emb.<suffix>.json' when a suffix is given."""
    path = Path(path)
    stem = f"{path.stem}.{suffix}" if suffix else path.stem
    return path.with_name(f"{stem}.json")


def save_embedding(embedding: Embedding, path: Union[str, Path], fmt: str = "csv") -> list:
    """
    Writes an embedding and returns the paths written.

    Args:
        embedding (Embedding): The m x d coordinates and their eigenvalues.
        path (str | Path): Target file.
        fmt (str): 'csv' writes the coordinates to `path` and the eigenvalues to a JSON sidecar
                   next to it; 'json' writes a single document holding both.
    """
    meta = {"m": embedding.m, "d": embedding.d, "eigenvalues": list(embedding.eigenvalues)}
    if fmt == "csv":
        sidecar = sidecar_path(path)
        if sidecar == Path(path):
            raise ConfigError(
                f"csv output {path} would be overwritten by its eigenvalue sidecar; "
                "use a non-.json name or the json format",
                module=MODULE,
            )
        return [save_points(embedding.Y, path), write_json(meta, sidecar)]
    if fmt == "json":
        return [write_json({**meta, "Y": embedding.Y.tolist()}, path)]
    raise ConfigError(f"unsupported embedding format '{fmt}'", module=MODULE)


def generate_synthetic(kind: DatasetKind, m: int, noise: float = 0.0, seed: int = 0) -> PointCloud:
    """
    Generates a small manifold dataset. Output depends only on the arguments.

    Args:
        kind (str): 'ring' (unit circle in 2-D), 'swiss-roll' (3-D) or 'two-moons' (2-D).
        m (int): Number of samples, at least 2.
        noise (float): Standard deviation of the Gaussian noise added to every coordinate.
        seed (int): Seed for the noise and the sample positions.

    Returns:
        PointCloud: m samples. With noise 0 the ring places sample k at angle 2*pi*k/m.

    Example Usage:

        cloud = generate_synthetic("swiss-roll", 100, noise=0.0, seed=7)
        cloud.points.shape  # (100, 3)
    """
    if m < 2:
        raise ConfigError(f"a dataset needs at least 2 samples, got m={m}", module=MODULE)
    if noise < 0:
        raise ConfigError(f"noise must be >= 0, got {noise}", module=MODULE)

    if kind == "ring":
        angles = 2 * np.pi * np.arange(m) / m
        points = np.column_stack([np.cos(angles), np.sin(angles)])
        if noise > 0:
            points = points + noise * np.random.default_rng(seed).standard_normal(points.shape)
    elif kind == "swiss-roll":
        points, _ = make_swiss_roll(n_samples=m, noise=noise, random_state=seed)
    elif kind == "two-moons":
        points, _ = make_moons(n_samples=m, noise=noise, random_state=seed)
    else:
        raise ConfigError(f"unknown dataset kind '{kind}', use ring, swiss-roll or two-moons", module=MODULE)

    return PointCloud(points=points)
