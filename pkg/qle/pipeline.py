import logging
import time
from contextlib import contextmanager
from typing import Optional

import numpy as np
from pydantic import ValidationError

from qle.chain_functions import build_chain_operator, eigenspace_basis, recover_eigenvector
from qle.config import settings
from qle.dataset_functions import generate_synthetic, load_points, save_embedding, sidecar_path, write_json
from qle.eigenmap_functions import embed, generalized_eigenpairs
from qle.graph_functions import build_knn_graph, degree_and_laplacian
from qle.models import (
    ChainOperator,
    ComparisonReport,
    ComputationError,
    ConfigError,
    DatasetError,
    Embedding,
    LaplacianBundle,
    PipelineRun,
    PointCloud,
    RegisterLayout,
    RunConfig,
)
from qle.qsim_functions import (
    ZERO_PROBABILITY,
    amplitude_amplification,
    choose_iterations,
    collapse,
    density_phase_estimation,
    fidelity,
    marked_probability,
    inverse_eigenvalue_iterations,
    phase_estimation,
    prepare_degree_density,
    prepare_density_from_columns,
    prepare_input_state,
    refine_eigenstate,
    strip_global_phase,
    system_state,
    unitary_from_generator,
)

logger = logging.getLogger(__name__)

MODULE = "cli_pipeline"


@contextmanager
def _stage(timings: dict, name: str):
    """Times a stage; model validation failures inside it surface as QLEErrors."""
    logger.info(f"Running {name}")
    start = time.perf_counter()
    try:
        yield
    except ValidationError as e:
        problem = e.errors()[0]["msg"]
        if name == "dataset":
            raise DatasetError(f"invalid point cloud: {problem}", module=MODULE)
        raise ComputationError(f"{name} produced an invalid {e.title}: {problem}", module=MODULE)
    timings[name] = time.perf_counter() - start


def load_cloud(cfg: RunConfig) -> PointCloud:
    if cfg.input is not None:
        return load_points(cfg.input)
    return generate_synthetic(cfg.generate, cfg.m, cfg.noise, cfg.seed)


def build_bundle(cfg: RunConfig, cloud: PointCloud) -> LaplacianBundle:
    graph = build_knn_graph(cloud, cfg.k, cfg.kernel, cfg.heat_t)
    return degree_and_laplacian(graph)


def _config_echo(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json", exclude={"record_timings"})


def _finish(cfg: RunConfig, embedding: Embedding, diagnostics: dict, timings: dict, suffix: str) -> PipelineRun:
    if cfg.record_timings:
        diagnostics["timings"] = timings
    written = []
    if cfg.out is not None:
        written = save_embedding(embedding, cfg.out, cfg.fmt)
        if suffix:
            written.append(write_json(diagnostics, sidecar_path(cfg.out, suffix)))
        for path in written:
            logger.info(f"Wrote {path}")
    return PipelineRun(embedding=embedding, diagnostics=diagnostics, written=written)


def run_classical_embed(cfg: RunConfig) -> PipelineRun:
    """
    Classical Laplacian eigenmap: dataset -> graph -> (L, D) -> eigenpairs -> embedding.

    Writes the embedding (and its eigenvalue sidecar) when cfg.out is set. Output depends only on cfg.
    """
    timings = {}
    with _stage(timings, "dataset"):
        cloud = load_cloud(cfg)
    with _stage(timings, "graph"):
        bundle = build_bundle(cfg, cloud)
    with _stage(timings, "eigensolve"):
        pairs = generalized_eigenpairs(bundle)
        embedding = embed(pairs, cfg.dims, bundle.components, cfg.eps_rank)

    diagnostics = {
        "config": _config_echo(cfg),
        "components": bundle.components,
        "edges": bundle.edge_count,
        "spectrum": [pair.eigenvalue for pair in pairs],
        "eigenvalues": list(embedding.eigenvalues),
    }
    return _finish(cfg, embedding, diagnostics, timings, suffix="")


def _deflate(vector: np.ndarray, found: list) -> Optional[np.ndarray]:
    for previous in found:
        vector = vector - np.vdot(previous, vector) * previous
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 1e-8 else None


def _input_candidates(chain: ChainOperator, layout: RegisterLayout, mode: str) -> list:
    if mode == "column":
        return [
            (index, prepare_input_state(layout, "column", chain, index))
            for index in range(chain.m)
            if np.linalg.norm(chain.F[:, index]) > 0
        ]
    return [(None, prepare_input_state(layout, mode))]


def isolate_eigenvector(
    U: np.ndarray,
    chain: ChainOperator,
    layout: RegisterLayout,
    outcome: str,
    found: list,
    mode: str = "column",
) -> dict:
    """
    Isolates one eigenvector of a marked eigenvalue bin: phase estimation, amplitude amplification of the
    bin, then a measurement that leaves the system register in the eigenvector. Non-dyadic phases of
    other eigenvectors leak into the bin, so the collapsed state is refined by repeated phase
    estimation on the same bin before it is returned.

    Every candidate input is deflated against the vectors in `found` (already isolated from
    the same bin) and the candidate with the largest marked probability is amplified.
    """
    best = None
    for index, candidate in _input_candidates(chain, layout, mode):
        vector = _deflate(np.array(candidate.amplitudes), found)
        if vector is None:
            continue
        estimated = phase_estimation(U, system_state(vector, layout), layout)
        p0 = marked_probability(estimated, outcome)
        logger.debug(f"Input {index} reaches bin {outcome} with probability {p0:.4g}")
        if best is None or p0 > best[1]:
            best = (index, p0, estimated)

    if best is None or best[1] <= ZERO_PROBABILITY:
        raise ComputationError(f"no input state overlaps the eigenvalue bin {outcome}", module=MODULE)

    index, p0, estimated = best
    iterations = choose_iterations(p0)
    amplified = amplitude_amplification(estimated, outcome, iterations)
    record = collapse(amplified, outcome)
    refined, passes, kept = refine_eigenstate(
        U, record.post_state, outcome, settings.refine_passes, settings.refine_tol
    )
    logger.debug(f"Bin {outcome} refined in {passes} pass(es)")
    return {
        "input_index": index,
        "marked_probability": p0,
        "iterations": iterations,
        "success_probability": record.probability,
        "refinement_passes": passes,
        "refinement_probability": kept,
        "post_state": np.array(refined.amplitudes),
        "vector": strip_global_phase(refined.amplitudes[: chain.m]),
    }


def _select_bins(result, threshold: float) -> dict:
    """Groups the weighted spectrum-survey components by their most likely outcome."""
    bins = {}
    for component in result.components:
        if component.eigenvalue <= threshold:
            continue
        if int(component.nearest_outcome, 2) == 0:
            logger.warning(
                f"eigenvalue {component.eigenvalue:.4g} rounds to the zero bin; add phase bits to resolve it"
            )
            continue
        bins.setdefault(component.nearest_outcome, []).append(component)
    return dict(sorted(bins.items(), key=lambda item: int(item[0], 2)))


def run_quantum_embed(cfg: RunConfig) -> PipelineRun:
    """
    Simulated quantum Laplacian eigenmap.

    Prepares the Laplacian and degree states from B and D and builds G = F F^T. Phase estimation
    on rho = G / trace G surveys the eigenvalue bins; one eigenvector per bin is then isolated in
    ascending order (repeating with deflated inputs when a bin holds several) and lifted to
    L v = lambda D v. Diagnostics compare every isolated state against the classical oracle.

    Raises:
        ConfigError: more than max_quantum_nodes nodes, register wider than max_register_qubits,
                     or fewer than d nonzero eigenvalue bins.
        ComputationError: no nonzero eigenvalues, or a stage failed.
    """
    timings = {}
    with _stage(timings, "dataset"):
        cloud = load_cloud(cfg)
    if cloud.m > settings.max_quantum_nodes:
        raise ConfigError(
            f"{cloud.m} nodes exceed the simulation cap of {settings.max_quantum_nodes}", module=MODULE
        )
    q = max(1, int(np.ceil(np.log2(cloud.m))))
    if cfg.phase_bits + q > settings.max_register_qubits:
        raise ConfigError(
            f"t + q = {cfg.phase_bits + q} exceeds the cap of {settings.max_register_qubits} qubits",
            module=MODULE,
        )
    layout = RegisterLayout.for_nodes(cloud.m, cfg.phase_bits)

    with _stage(timings, "graph"):
        bundle = build_bundle(cfg, cloud)
    with _stage(timings, "oracle"):
        oracle = generalized_eigenpairs(bundle)
    with _stage(timings, "chain_product"):
        chain = build_chain_operator(bundle, cfg.scale, cfg.eps_rank)
        laplacian_state = prepare_density_from_columns(bundle.B, layout.m_pad)
        degree_state = prepare_degree_density(bundle, layout.m_pad)
    with _stage(timings, "spectrum"):
        survey = density_phase_estimation(chain.G, chain.s, layout.t, cfg.shots, cfg.seed)
        bins = _select_bins(survey, cfg.eps_rank * chain.lambda_max)
    if not bins:
        raise ComputationError("phase estimation found no nonzero eigenvalues", module=MODULE)

    nonzero_oracle = oracle[bundle.components:]
    U = unitary_from_generator(chain.G, chain.s, dim=layout.m_pad)
    rows, vectors = [], []
    with _stage(timings, "isolation"):
        for outcome, components in bins.items():
            found = []
            for _ in components:
                if len(vectors) == cfg.dims:
                    break
                isolated = isolate_eigenvector(U, chain, layout, outcome, found, cfg.isolation_input)
                found.append(np.pad(isolated["vector"], (0, layout.m_pad - chain.m)).astype(complex))

                estimate = survey.estimate(outcome)
                pair = recover_eigenvector(isolated["vector"], estimate, bundle, cfg.eps_rank, residual_tol=None)
                nearest = min(nonzero_oracle, key=lambda p: abs(p.eigenvalue - estimate))
                basis = eigenspace_basis(chain, nearest.eigenvalue)
                residual = np.linalg.norm(bundle.L @ pair.vector - estimate * (bundle.D @ pair.vector))

                vectors.append(pair.vector)
                rows.append(
                    {
                        "bitstring": outcome,
                        "estimate": estimate,
                        "oracle": nearest.eigenvalue,
                        "deviation": abs(estimate - nearest.eigenvalue),
                        "multiplicity": basis.shape[1],
                        "input_index": isolated["input_index"],
                        "marked_probability": isolated["marked_probability"],
                        "iterations": isolated["iterations"],
                        "inverse_eigenvalue_iterations": inverse_eigenvalue_iterations(estimate),
                        "success_probability": isolated["success_probability"],
                        "refinement_passes": isolated["refinement_passes"],
                        "refinement_probability": isolated["refinement_probability"],
                        "fidelity": fidelity(isolated["post_state"], basis),
                        "residual": float(residual),
                    }
                )
            if len(vectors) == cfg.dims:
                break

    if len(vectors) < cfg.dims:
        raise ConfigError(
            f"requested d={cfg.dims} but only {len(vectors)} nonzero eigenvalue(s) were resolved",
            module=MODULE,
        )

    with _stage(timings, "embedding"):
        embedding = Embedding(Y=np.column_stack(vectors), eigenvalues=tuple(row["estimate"] for row in rows))
    diagnostics = {
        "config": _config_echo(cfg),
        "layout": {"t": layout.t, "q": layout.q, "m": layout.m, "m_pad": layout.m_pad},
        "scale": chain.s,
        "precision": 1.0 / layout.bins / chain.s,
        "prepared_states": {
            "laplacian_state_rank": laplacian_state.rank(),
            "laplacian_state_purity": laplacian_state.purity,
            "degree_state_purity": degree_state.purity,
        },
        "outcome_distribution": survey.table(),
        "spectrum_components": [
            {
                "eigenvalue": component.eigenvalue,
                "weight": component.weight,
                "bitstring": component.nearest_outcome,
                "probability": component.nearest_probability,
            }
            for component in survey.components
        ],
        "spectrum_counts": survey.counts,
        "eigenvalue_table": rows,
        "fidelities": [row["fidelity"] for row in rows],
    }
    return _finish(cfg, embedding, diagnostics, timings, suffix="diagnostics")


def compare_embeddings(a: Embedding, b: Embedding, tol: float) -> ComparisonReport:
    """
    Compares two embeddings column by column.

    Columns are sign-aligned by their dot product before taking the max-abs deviation. Columns of
    `a` sharing an eigenvalue span a subspace; for those the deviation is the relative residual of
    b's column after projection onto that subspace. Eigenvalues are compared pairwise in order.

    Raises:
        ConfigError: the shapes differ.
    """
    if a.Y.shape != b.Y.shape:
        raise ConfigError(f"cannot compare embeddings of shapes {a.Y.shape} and {b.Y.shape}", module=MODULE)

    values = np.array(a.eigenvalues)
    clusters, start = [], 0
    for end in range(1, a.d + 1):
        if end == a.d or values[end] - values[start] > 1e-8 * max(1.0, float(values.max())):
            clusters.append(list(range(start, end)))
            start = end

    deviations, fidelities, subspace_columns = [0.0] * a.d, [0.0] * a.d, []
    for cluster in clusters:
        if len(cluster) == 1:
            c = cluster[0]
            x, y = a.Y[:, c], b.Y[:, c]
            sign = 1.0 if x @ y >= 0 else -1.0
            deviations[c] = float(np.max(np.abs(x - sign * y)))
            fidelities[c] = float(min((x @ y) ** 2 / ((x @ x) * (y @ y)), 1.0))
            continue
        basis, _ = np.linalg.qr(a.Y[:, cluster])
        for c in cluster:
            y = b.Y[:, c] / np.linalg.norm(b.Y[:, c])
            projection = basis @ (basis.T @ y)
            deviations[c] = float(np.linalg.norm(y - projection))
            fidelities[c] = float(min(projection @ projection, 1.0))
            subspace_columns.append(c)

    eigenvalue_deviations = [abs(x - y) for x, y in zip(a.eigenvalues, b.eigenvalues)]
    passed = all(value <= tol for value in deviations + eigenvalue_deviations)
    return ComparisonReport(
        column_deviations=deviations,
        eigenvalue_deviations=eigenvalue_deviations,
        fidelities=fidelities,
        subspace_columns=subspace_columns,
        tol=tol,
        passed=passed,
    )


def run_comparison(cfg: RunConfig) -> tuple:
    """
    Runs both pipelines on the same configuration and compares them (classical first).

    With cfg.out set, writes <out stem>.report.json and both embeddings as <out stem>.classical
    and <out stem>.quantum in cfg.fmt. `out` itself is not written.
    """
    quiet = cfg.model_copy(update={"out": None})
    classical = run_classical_embed(quiet)
    quantum = run_quantum_embed(quiet)
    report = compare_embeddings(classical.embedding, quantum.embedding, cfg.tol)
    if cfg.out is None:
        return report, classical, quantum

    payload = {
        "config": _config_echo(cfg),
        "report": report.model_dump(),
        "classical_eigenvalues": list(classical.embedding.eigenvalues),
        "quantum_eigenvalues": list(quantum.embedding.eigenvalues),
        "fidelities": quantum.diagnostics["fidelities"],
    }
    if quantum.diagnostics["spectrum_counts"] is not None:
        payload["spectrum_counts"] = quantum.diagnostics["spectrum_counts"]
    if cfg.record_timings:
        payload["timings"] = {"classical": classical.diagnostics["timings"], "quantum": quantum.diagnostics["timings"]}

    written = [write_json(payload, sidecar_path(cfg.out, "report"))]
    for label, run in (("classical", classical), ("quantum", quantum)):
        target = cfg.out.with_name(f"{cfg.out.stem}.{label}{cfg.out.suffix}")
        written.extend(save_embedding(run.embedding, target, cfg.fmt))
    for path in written:
        logger.info(f"Wrote {path}")
    return report, classical, quantum
