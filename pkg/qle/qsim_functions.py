"""
Dense statevector simulation of the quantum eigenmap pipeline.

A full state has a phase register of t qubits followed by a system register of q qubits.
Amplitudes are stored phase-major, so reshaping to (2^t, 2^q) gives one system block per
phase value b; the bitstring of b is written most significant bit first.
"""
import logging
import math
from typing import Optional, Union

import numpy as np

from qle.models import (
    ChainOperator,
    ComputationError,
    ConfigError,
    DensityPhaseResult,
    LaplacianBundle,
    MeasurementRecord,
    MixedState,
    PhaseMeasurement,
    PureState,
    RegisterLayout,
    SpectralComponent,
    IsolationInput,
    max_abs,
)

logger = logging.getLogger(__name__)

MODULE = "qsim_core"
ZERO_PROBABILITY = 1e-15
ZERO_WEIGHT = 1e-12


def _pad_matrix(matrix: np.ndarray, dim: Optional[int]) -> np.ndarray:
    if dim is None or dim == matrix.shape[0]:
        return matrix
    if dim < matrix.shape[0]:
        raise ConfigError(f"cannot pad a {matrix.shape[0]}-dimensional operator down to {dim}", module=MODULE)
    padded = np.zeros((dim, dim), dtype=matrix.dtype)
    padded[: matrix.shape[0], : matrix.shape[1]] = matrix
    return padded


def system_state(vector: np.ndarray, layout: RegisterLayout) -> PureState:
    """Normalizes a node-space vector and pads it with zeros to the 2^q system register."""
    vector = np.asarray(vector, dtype=complex).ravel()
    if vector.size > layout.m_pad:
        raise ConfigError(f"{vector.size} amplitudes do not fit a {layout.q}-qubit register", module=MODULE)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ComputationError("cannot prepare the zero vector as a state", module=MODULE)
    padded = np.zeros(layout.m_pad, dtype=complex)
    padded[: vector.size] = vector / norm
    return PureState(amplitudes=padded, layout=layout, system_only=True)


def prepare_density_from_columns(A: np.ndarray, m_pad: Optional[int] = None) -> MixedState:
    """
    Reduced density matrix of the state sum_i |a_i>|i> built from the columns a_i of A.

    Tracing out the index register leaves A A^T / trace(A A^T), padded with zeros to m_pad.
    With A = B (the incidence factor) this is L / trace(L).

    Raises:
        ComputationError: A is all zero.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    gram = A @ A.T
    trace = float(np.trace(gram))
    if trace <= 0:
        raise ComputationError("cannot prepare a density matrix from an all-zero matrix", module=MODULE)
    rho = (gram + gram.T) / (2 * trace)
    return MixedState(rho=_pad_matrix(rho, m_pad))


def prepare_degree_density(bundle: LaplacianBundle, m_pad: Optional[int] = None) -> MixedState:
    """The degree state sum_i |d_i>|i>: its reduced density is D / trace(D)."""
    return prepare_density_from_columns(np.sqrt(bundle.D), m_pad)


def prepare_input_state(
    layout: RegisterLayout,
    mode: IsolationInput = "uniform",
    chain: Optional[ChainOperator] = None,
    index: int = 0,
) -> PureState:
    """
    System-register input for phase estimation.

    Modes:
        uniform         equal amplitudes on the m node states, none on padding states
        uniform-padded  Hadamard on every system qubit, padding states included
        basis           the node state |index>
        column          column `index` of F, normalized; this is the system state left after
                        the index register of the purification of F F^T is read as `index`
    """
    vector = np.zeros(layout.m_pad)
    if mode == "uniform":
        vector[: layout.m] = 1.0
    elif mode == "uniform-padded":
        vector[:] = 1.0
    elif mode == "basis":
        if not 0 <= index < layout.m:
            raise ConfigError(f"basis index {index} outside [0, {layout.m})", module=MODULE)
        vector[index] = 1.0
    elif mode == "column":
        if chain is None:
            raise ConfigError("column inputs need a chain operator", module=MODULE)
        if not 0 <= index < chain.m:
            raise ConfigError(f"column index {index} outside [0, {chain.m})", module=MODULE)
        vector[: chain.m] = chain.F[:, index]
    else:
        raise ConfigError(f"unknown input mode '{mode}'", module=MODULE)
    return system_state(vector, layout)


def unitary_from_generator(G: np.ndarray, s: float, dim: Optional[int] = None) -> np.ndarray:
    """
    U = exp(i 2 pi s G) by eigendecomposition, optionally padded with identity up to `dim`.

    Raises:
        ComputationError: G is not symmetric.
        ConfigError: s * lambda_max(G) >= 1, so phases would wrap around.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or max_abs(G - G.T) > 1e-12 * max(1.0, max_abs(G)):
        raise ComputationError("the generator must be a real symmetric matrix", module=MODULE)

    values, Q = np.linalg.eigh((G + G.T) / 2)
    if s * values.max() >= 1:
        raise ConfigError(f"s * lambda_max = {s * values.max():.4g} leaves no phase headroom", module=MODULE)

    U = (Q * np.exp(2j * np.pi * s * values)) @ Q.conj().T
    if dim is not None and dim > U.shape[0]:
        padded = np.eye(dim, dtype=complex)
        padded[: U.shape[0], : U.shape[1]] = U
        U = padded
    return U


def qft_matrix(t: int) -> np.ndarray:
    """QFT on t qubits: entry (k, j) is exp(2 pi i j k / 2^t) / sqrt(2^t)."""
    size = 2 ** t
    indices = np.arange(size)
    return np.exp(2j * np.pi * np.outer(indices, indices) / size) / np.sqrt(size)


def inverse_qft(blocks: np.ndarray) -> np.ndarray:
    """Inverse QFT on the phase axis (axis 0) of a (2^t, m_pad) block array."""
    return np.fft.fft(blocks, axis=0, norm="ortho")


def _system_vector(state: Union[PureState, np.ndarray], layout: RegisterLayout) -> np.ndarray:
    if isinstance(state, PureState):
        if not state.system_only or state.layout.m_pad != layout.m_pad:
            raise ConfigError("input must be a system-register state matching the layout", module=MODULE)
        return np.array(state.amplitudes)

    vector = np.asarray(state, dtype=complex).ravel()
    if vector.size != layout.m_pad:
        raise ConfigError(f"input has {vector.size} amplitudes, the system register has {layout.m_pad}", module=MODULE)
    if abs(np.linalg.norm(vector) - 1.0) > 1e-10:
        raise ComputationError("input state is not normalized", module=MODULE)
    return vector


def phase_estimation(U: np.ndarray, state: Union[PureState, np.ndarray], layout: RegisterLayout) -> PureState:
    """
    Runs the phase estimation circuit on |0...0> (x) |state>.

    The phase register gets the uniform superposition (QFT on |0...0> equals the Hadamard layer),
    bit j of the phase register controls U^{2^j}, and the inverse QFT is applied to the phase
    register. An eigenvector with eigenphase k / 2^t is read out as the bitstring of k with
    probability 1.

    Raises:
        ConfigError: U or the input do not match the layout.
        ComputationError: U is not unitary or the input is not normalized.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (layout.m_pad, layout.m_pad):
        raise ConfigError(f"U has shape {U.shape}, the system register needs {layout.m_pad}", module=MODULE)
    if max_abs(U @ U.conj().T - np.eye(layout.m_pad)) > 1e-10:
        raise ComputationError("U is not unitary", module=MODULE)

    psi = _system_vector(state, layout)
    blocks = np.tile(psi / np.sqrt(layout.bins), (layout.bins, 1))

    phase_values = np.arange(layout.bins)
    power = U
    for j in range(layout.t):
        controlled = ((phase_values >> j) & 1) == 1
        blocks[controlled] = blocks[controlled] @ power.T
        power = power @ power

    return PureState(amplitudes=inverse_qft(blocks), layout=layout)


def _check_outcome(layout: RegisterLayout, outcome: str) -> int:
    if len(outcome) != layout.t or set(outcome) - {"0", "1"}:
        raise ConfigError(f"'{outcome}' is not a {layout.t}-bit string", module=MODULE)
    return int(outcome, 2)


def collapse(state: PureState, outcome: str) -> MeasurementRecord:
    """Measures the phase register as `outcome` and returns the renormalized system block."""
    block = state.blocks[_check_outcome(state.layout, outcome)]
    probability = float(np.vdot(block, block).real)
    if probability <= ZERO_PROBABILITY:
        raise ComputationError(f"outcome {outcome} has zero probability", module=MODULE)
    post_state = PureState(amplitudes=block / np.sqrt(probability), layout=state.layout, system_only=True)
    return MeasurementRecord(outcome=outcome, probability=probability, post_state=post_state)


def measure_phase_register(
    state: PureState,
    shots: int = 0,
    seed: Optional[int] = None,
    with_records: bool = True,
    record_threshold: float = 1e-12,
) -> tuple:
    """
    Exact outcome distribution of the phase register.

    Returns:
        tuple: (PhaseMeasurement, dict of bitstring -> MeasurementRecord). Records are built for
        every outcome above record_threshold when with_records is set. With shots > 0 the
        distribution also carries counts sampled from a generator seeded with `seed`.
    """
    if state.system_only:
        raise ConfigError("the state has no phase register", module=MODULE)
    if shots < 0:
        raise ConfigError(f"shots must be >= 0, got {shots}", module=MODULE)

    probabilities = np.sum(np.abs(state.blocks) ** 2, axis=1)
    counts = None
    if shots:
        sampled = np.random.default_rng(seed).multinomial(shots, probabilities / probabilities.sum())
        counts = {state.layout.bitstring(i): int(c) for i, c in enumerate(sampled) if c}

    distribution = PhaseMeasurement(layout=state.layout, probabilities=probabilities, counts=counts)
    records = {}
    if with_records:
        records = {outcome: collapse(state, outcome) for outcome in distribution.support(record_threshold)}
    return distribution, records


def marked_probability(state: PureState, target: str) -> float:
    block = state.blocks[_check_outcome(state.layout, target)]
    return float(np.vdot(block, block).real)


def amplitude_amplification(state: PureState, target: str, iterations: int) -> PureState:
    """
    Applies (U_flip U_mark)^iterations to `state`.

    U_mark flips the sign of the block whose phase register equals `target`; U_flip = 2|s><s| - I
    reflects about the input state |s>. After k iterations the marked probability is
    sin^2((2k + 1) theta) with theta = arcsin(sqrt(p0)).

    Raises:
        ComputationError: the marked probability p0 is zero.
    """
    index = _check_outcome(state.layout, target)
    if iterations < 0:
        raise ConfigError(f"iterations must be >= 0, got {iterations}", module=MODULE)
    if marked_probability(state, target) <= ZERO_PROBABILITY:
        raise ComputationError(f"outcome {target} has zero probability, nothing to amplify", module=MODULE)

    m_pad = state.layout.m_pad
    marked = slice(index * m_pad, (index + 1) * m_pad)
    initial = np.array(state.amplitudes)
    psi = initial.copy()
    for _ in range(iterations):
        psi[marked] = -psi[marked]
        psi = 2 * np.vdot(initial, psi) * initial - psi

    return PureState(amplitudes=psi, layout=state.layout)


def refine_eigenstate(
    U: np.ndarray,
    state: PureState,
    outcome: str,
    max_passes: int = 200,
    tol: float = 1e-10,
) -> tuple:
    """
    Repeats phase estimation on a system state and keeps the `outcome` block each time.

    One pass scales every eigencomponent of the state by its amplitude in the `outcome` bin, so
    components whose phase lies outside the bin decay geometrically relative to the component
    nearest the bin. Components with equal phases keep their ratio. Stops once a pass moves the
    state by at most tol (after removing the global phase) or after max_passes.

    Returns:
        tuple: (refined system PureState, passes run, product of the postselection probabilities).

    Raises:
        ConfigError: `state` carries a phase register.
        ComputationError: the outcome bin has zero probability for the state.
    """
    if not state.system_only:
        raise ConfigError("refinement needs a system-register state", module=MODULE)

    layout = state.layout
    current = np.array(state.amplitudes)
    kept, passes = 1.0, 0
    while passes < max_passes:
        record = collapse(phase_estimation(U, current, layout), outcome)
        refined = np.array(record.post_state.amplitudes)
        kept *= record.probability
        passes += 1

        overlap = np.vdot(current, refined)
        aligned = refined * np.conj(overlap) / abs(overlap) if abs(overlap) > 0 else refined
        change = float(np.linalg.norm(aligned - current))
        current = aligned
        if change <= tol:
            break
    else:
        logger.debug(f"Refinement on bin {outcome} stopped after {max_passes} passes")

    return PureState(amplitudes=current, layout=state.layout, system_only=True), passes, kept


def choose_iterations(p0: float) -> int:
    """Grover count round(pi / (4 theta) - 1/2), theta = arcsin(sqrt(p0)); halves round up."""
    if p0 <= 0 or p0 > 1 + 1e-12:
        raise ConfigError(f"the marked probability must lie in (0, 1], got {p0}", module=MODULE)
    theta = math.asin(math.sqrt(min(p0, 1.0)))
    return max(0, math.floor(math.pi / (4 * theta)))


def inverse_eigenvalue_iterations(eigenvalue: float) -> int:
    """ceil(1 / |lambda|): the amplification count an O(1/|lambda_i|) reading would give."""
    return math.ceil(1.0 / abs(eigenvalue)) if eigenvalue else 0


def density_phase_estimation(
    G: np.ndarray,
    s: float,
    t: int,
    shots: int = 0,
    seed: Optional[int] = None,
) -> DensityPhaseResult:
    """
    Phase estimation on the mixed input rho = G / trace(G).

    The circuit is linear, so rho is propagated through its spectral decomposition: every
    eigenvector phi_i with weight lambda_i / trace(G) runs through phase_estimation and the
    outcome distributions are mixed with those weights. Zero eigenvalues carry no weight.

    Args:
        G (ndarray): Real symmetric PSD generator (F F^T).
        s (float): Spectral scale, s * lambda_max < 1.
        t (int): Phase register width.
        shots (int): When > 0, outcome counts are sampled with numpy.random.default_rng(seed).

    Returns:
        DensityPhaseResult: Exact distribution over the 2^t outcomes, one SpectralComponent per
        weighted eigenvector, and the sampled counts. Estimates are unscaled (divided by s).

    Raises:
        ComputationError: trace(G) = 0.
    """
    G = np.asarray(G, dtype=float)
    trace = float(np.trace(G))
    if trace <= 0:
        raise ComputationError("trace(G) = 0, the density input is undefined", module=MODULE)

    layout = RegisterLayout.for_nodes(G.shape[0], t)
    U = unitary_from_generator(G, s, dim=layout.m_pad)
    rho = MixedState(rho=_pad_matrix(G / trace, layout.m_pad))
    weights, vectors = np.linalg.eigh(rho.rho)

    probabilities = np.zeros(layout.bins)
    components = []
    for weight, vector in zip(weights, vectors.T):
        if weight <= ZERO_WEIGHT:
            continue
        output = phase_estimation(U, system_state(vector, layout), layout)
        distribution = np.sum(np.abs(output.blocks) ** 2, axis=1)
        probabilities += weight * distribution
        nearest = int(np.argmax(distribution))
        components.append(
            SpectralComponent(
                eigenvalue=float(weight * trace),
                weight=float(weight),
                vector=vector[: G.shape[0]],
                nearest_outcome=layout.bitstring(nearest),
                nearest_probability=float(distribution[nearest]),
            )
        )
    probabilities /= probabilities.sum()

    counts = None
    if shots:
        sampled = np.random.default_rng(seed).multinomial(shots, probabilities)
        counts = {layout.bitstring(i): int(c) for i, c in enumerate(sampled) if c}

    return DensityPhaseResult(layout=layout, s=s, probabilities=probabilities, components=components, counts=counts)


def strip_global_phase(vector: np.ndarray) -> np.ndarray:
    """Rotates away the phase of the largest component and returns the normalized real part."""
    vector = np.asarray(vector, dtype=complex)
    pivot = vector[np.argmax(np.abs(vector))]
    real = (vector * np.conj(pivot) / abs(pivot)).real
    return real / np.linalg.norm(real)


def fidelity(vector: np.ndarray, basis: np.ndarray) -> float:
    """Squared norm of the projection of a normalized state onto span(basis columns)."""
    vector = np.asarray(vector, dtype=complex)[: basis.shape[0]]
    overlap = basis.conj().T @ vector
    return float(min(np.vdot(overlap, overlap).real, 1.0))
