from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

"""
This file will contain all the domain types passed between the pipeline stages,
together with the exceptions the stages raise.

Arrays are copied and frozen on construction, so every model is an immutable value.
"""

DatasetKind = Literal["ring", "swiss-roll", "two-moons"]
KernelName = Literal["heat", "binary", "explicit"]
IsolationInput = Literal["column", "uniform", "uniform-padded", "basis"]

MAX_REGISTER_QUBITS = 24
NORM_TOL = 1e-10


class QLEError(Exception):
    """Base exception for toolkit errors. The message is tagged with the module that raised it."""

    exit_code = 1

    def __init__(self, detail: str, module: str = "qle"):
        self.detail = detail
        self.module = module
        super().__init__(f"[{module}] {detail}")


class ConfigError(QLEError):
    """Invalid parameters or exceeded size caps."""

    exit_code = 2


class DatasetError(QLEError):
    """Missing, malformed or too small input files."""

    exit_code = 3


class ComputationError(QLEError):
    """A numerical stage could not produce a valid result."""

    exit_code = 4


class ComparisonFailed(QLEError):
    exit_code = 5


def frozen_array(value, dtype=float) -> np.ndarray:
    array = np.array(value, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class PointCloud(_ArrayModel):
    points: np.ndarray

    @field_validator("points", mode="before")
    @classmethod
    def freeze_points(cls, value):
        points = frozen_array(value)
        if points.ndim != 2:
            raise ValueError(f"points must be a matrix, got {points.ndim} dimensions")
        if points.shape[0] < 2 or points.shape[1] < 1:
            raise ValueError(f"a point cloud needs m >= 2 and n >= 1, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ValueError("every coordinate must be finite")
        return points

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]


class NeighborhoodGraph(_ArrayModel):
    W: np.ndarray
    k: Optional[int] = None
    kernel: KernelName = "heat"
    heat_t: Optional[float] = None
    components: int = 1

    @field_validator("W", mode="before")
    @classmethod
    def freeze_weights(cls, value):
        W = frozen_array(value)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 2:
            raise ValueError(f"W must be a square matrix of size >= 2, got {W.shape}")
        if np.any(W < 0) or not np.all(np.isfinite(W)):
            raise ValueError("weights must be finite and non-negative")
        if np.any(np.diag(W) != 0):
            raise ValueError("self loops are not allowed (W_ii must be 0)")
        if not np.array_equal(W, W.T):
            raise ValueError("W must be exactly symmetric")
        return W

    @model_validator(mode="after")
    def check_isolated(self):
        if self.components == 1 and self.isolated_vertices:
            raise ValueError("a graph with an isolated vertex must be flagged disconnected")
        return self

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def connected(self) -> bool:
        return self.components == 1

    @property
    def isolated_vertices(self) -> list:
        return [int(i) for i in np.flatnonzero(~np.any(self.W > 0, axis=1))]


class LaplacianBundle(_ArrayModel):
    W: np.ndarray
    D: np.ndarray
    L: np.ndarray
    B: np.ndarray
    components: int

    @field_validator("W", "D", "L", "B", mode="before")
    @classmethod
    def freeze(cls, value):
        return frozen_array(value)

    @model_validator(mode="after")
    def check_identities(self):
        scale = max(1.0, max_abs(self.W))
        if max_abs(np.diag(self.D) - self.W.sum(axis=1)) > 1e-12 * scale * self.m:
            raise ValueError("D_ii must equal the row sums of W")
        if max_abs(self.L - (self.D - self.W)) > 1e-12 * scale:
            raise ValueError("L must equal D - W")
        if max_abs(self.L - self.B @ self.B.T) > 1e-12 * max(1.0, max_abs(self.L)):
            raise ValueError("B B^T must reproduce L")
        return self

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.diag(self.D)

    @property
    def edge_count(self) -> int:
        return self.B.shape[1]


class GeneralizedEigenpair(_ArrayModel):
    eigenvalue: float
    vector: np.ndarray

    @field_validator("eigenvalue")
    @classmethod
    def clamp_eigenvalue(cls, value):
        if value < -1e-10:
            raise ValueError(f"generalized eigenvalues are non-negative, got {value}")
        return max(float(value), 0.0)

    @field_validator("vector", mode="before")
    @classmethod
    def freeze_vector(cls, value):
        vector = frozen_array(value)
        if vector.ndim != 1:
            raise ValueError("an eigenvector must be one-dimensional")
        return vector


class Embedding(_ArrayModel):
    Y: np.ndarray
    eigenvalues: tuple[float, ...]

    @field_validator("Y", mode="before")
    @classmethod
    def freeze_coordinates(cls, value):
        Y = frozen_array(value)
        if Y.ndim != 2:
            raise ValueError("an embedding is an m x d matrix")
        return Y

    @model_validator(mode="after")
    def check_eigenvalues(self):
        if len(self.eigenvalues) != self.Y.shape[1]:
            raise ValueError("one eigenvalue per embedding column is required")
        if any(value <= 0 for value in self.eigenvalues):
            raise ValueError("embedding eigenvalues must be nonzero")
        if any(b < a for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise ValueError("embedding eigenvalues must be ascending")
        return self

    @property
    def m(self) -> int:
        return self.Y.shape[0]

    @property
    def d(self) -> int:
        return self.Y.shape[1]


class ChainOperator(_ArrayModel):
    F: np.ndarray
    G: np.ndarray
    s: float
    eps_rank: float
    lambda_max: float

    @field_validator("F", "G", mode="before")
    @classmethod
    def freeze(cls, value):
        return frozen_array(value)

    @model_validator(mode="after")
    def check_operator(self):
        if max_abs(self.G - self.G.T) > 1e-12 * max(1.0, max_abs(self.G)):
            raise ValueError("G must be symmetric")
        if not 0 < self.s <= 0.5:
            raise ValueError(f"the spectral scale must lie in (0, 1/2], got {self.s}")
        if self.s * self.lambda_max >= 1:
            raise ValueError("s * lambda_max must stay below 1 for phase encoding")
        return self

    @property
    def m(self) -> int:
        return self.G.shape[0]


class RegisterLayout(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: int
    q: int
    m: int

    @model_validator(mode="after")
    def check_widths(self):
        if self.t < 1 or self.q < 1:
            raise ValueError("both registers need at least one qubit")
        if self.t + self.q > MAX_REGISTER_QUBITS:
            raise ValueError(f"t + q = {self.t + self.q} exceeds the {MAX_REGISTER_QUBITS}-qubit cap")
        if 2 ** self.q < self.m or self.m < 1:
            raise ValueError(f"{self.q} system qubits cannot hold {self.m} nodes")
        return self

    @classmethod
    def for_nodes(cls, m: int, t: int) -> "RegisterLayout":
        q = max(1, int(np.ceil(np.log2(m)))) if m > 1 else 1
        return cls(t=t, q=q, m=m)

    @property
    def m_pad(self) -> int:
        return 2 ** self.q

    @property
    def bins(self) -> int:
        return 2 ** self.t

    @property
    def dim(self) -> int:
        return 2 ** (self.t + self.q)

    def bitstring(self, index: int) -> str:
        return format(index, f"0{self.t}b")


class PureState(_ArrayModel):
    amplitudes: np.ndarray
    layout: RegisterLayout
    system_only: bool = False

    @field_validator("amplitudes", mode="before")
    @classmethod
    def freeze_amplitudes(cls, value):
        return frozen_array(value, dtype=complex).ravel()

    @model_validator(mode="after")
    def check_state(self):
        expected = self.layout.m_pad if self.system_only else self.layout.dim
        if self.amplitudes.size != expected:
            raise ValueError(f"expected {expected} amplitudes, got {self.amplitudes.size}")
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm {norm})")
        return self

    @property
    def blocks(self) -> np.ndarray:
        """Amplitudes as a (2^t, m_pad) array: row b is the system block for phase value b."""
        if self.system_only:
            return self.amplitudes.reshape(1, -1)
        return self.amplitudes.reshape(self.layout.bins, self.layout.m_pad)


class MixedState(_ArrayModel):
    rho: np.ndarray

    @field_validator("rho", mode="before")
    @classmethod
    def freeze_rho(cls, value):
        rho = frozen_array(value, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("a density matrix is square")
        if max_abs(rho - rho.conj().T) > 1e-12:
            raise ValueError("a density matrix is Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-12:
            raise ValueError("a density matrix has unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("a density matrix is positive semidefinite")
        return rho

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.rho) > tol))


class MeasurementRecord(_ArrayModel):
    outcome: str
    probability: float
    post_state: PureState

    @field_validator("probability")
    @classmethod
    def check_probability(cls, value):
        if not -1e-12 <= value <= 1 + 1e-12:
            raise ValueError(f"probability out of range: {value}")
        return min(max(float(value), 0.0), 1.0)


class PhaseMeasurement(_ArrayModel):
    """Exhaustive outcome distribution of the phase register, plus sampled counts when shots were taken."""

    layout: RegisterLayout
    probabilities: np.ndarray
    counts: Optional[dict] = None

    @field_validator("probabilities", mode="before")
    @classmethod
    def freeze_probabilities(cls, value):
        return frozen_array(value)

    def probability(self, outcome: str) -> float:
        return float(self.probabilities[int(outcome, 2)])

    def support(self, threshold: float = 1e-12) -> dict:
        return {
            self.layout.bitstring(index): float(p)
            for index, p in enumerate(self.probabilities)
            if p > threshold
        }


class SpectralComponent(_ArrayModel):
    """One eigenpair of the density input mixture and where phase estimation sends it."""

    eigenvalue: float
    weight: float
    vector: np.ndarray
    nearest_outcome: str
    nearest_probability: float

    @field_validator("vector", mode="before")
    @classmethod
    def freeze_vector(cls, value):
        return frozen_array(value, dtype=complex)


class DensityPhaseResult(_ArrayModel):
    layout: RegisterLayout
    s: float
    probabilities: np.ndarray
    components: list[SpectralComponent]
    counts: Optional[dict] = None

    @field_validator("probabilities", mode="before")
    @classmethod
    def freeze_probabilities(cls, value):
        return frozen_array(value)

    def estimate(self, outcome: str) -> float:
        """Unscaled eigenvalue encoded by a phase-register bitstring."""
        return int(outcome, 2) / self.layout.bins / self.s

    def table(self, threshold: float = 1e-12) -> list:
        return [
            {
                "bitstring": self.layout.bitstring(index),
                "probability": float(p),
                "eigenvalue": index / self.layout.bins / self.s,
            }
            for index, p in enumerate(self.probabilities)
            if p > threshold
        ]


class RunConfig(BaseModel):
    input: Optional[Path] = None
    generate: Optional[DatasetKind] = None
    m: int = 12
    noise: float = 0.0
    k: int = 2
    kernel: Literal["heat", "binary"] = "heat"
    heat_t: Optional[float] = None
    dims: int = 2
    phase_bits: int = 8
    scale: float = 0.25
    shots: int = 0
    seed: int = 0
    out: Optional[Path] = None
    fmt: Literal["csv", "json"] = "csv"
    tol: float = 1e-2
    isolation_input: IsolationInput = "column"
    eps_rank: float = 1e-10
    record_timings: bool = False

    @field_validator("k", "dims")
    @classmethod
    def at_least_one(cls, value):
        if value < 1:
            raise ValueError(f"must be >= 1, got {value}")
        return value

    @field_validator("m")
    @classmethod
    def enough_samples(cls, value):
        if value < 2:
            raise ValueError(f"a dataset needs at least 2 samples, got {value}")
        return value

    @field_validator("phase_bits")
    @classmethod
    def phase_bits_range(cls, value):
        if not 1 <= value <= 16:
            raise ValueError(f"phase bits must lie in [1, 16], got {value}")
        return value

    @field_validator("scale")
    @classmethod
    def scale_range(cls, value):
        if not 0 < value <= 0.5:
            raise ValueError(f"scale must lie in (0, 1/2], got {value}")
        return value

    @field_validator("shots", "noise")
    @classmethod
    def non_negative(cls, value):
        if value < 0:
            raise ValueError(f"must be >= 0, got {value}")
        return value

    @field_validator("heat_t", "tol", "eps_rank")
    @classmethod
    def positive(cls, value):
        if value is not None and value <= 0:
            raise ValueError(f"must be > 0, got {value}")
        return value

    @model_validator(mode="after")
    def one_source(self):
        if (self.input is None) == (self.generate is None):
            raise ValueError("exactly one of an input path or a generator kind is required")
        return self


class PipelineRun(_ArrayModel):
    embedding: Embedding
    diagnostics: dict
    written: list[Path] = []


class ComparisonReport(BaseModel):
    column_deviations: list[float]
    eigenvalue_deviations: list[float]
    fidelities: list[float]
    subspace_columns: list[int] = []
    tol: float
    passed: bool

    @field_validator("column_deviations", "eigenvalue_deviations")
    @classmethod
    def non_negative(cls, values):
        if any(value < 0 for value in values):
            raise ValueError("deviations are non-negative")
        return values

    @field_validator("fidelities")
    @classmethod
    def fidelity_range(cls, values):
        if any(not 0 <= value <= 1 + 1e-12 for value in values):
            raise ValueError("fidelities lie in [0, 1]")
        return values
