import math

import numpy as np
import pytest
from pydantic import ValidationError

from qle.chain_functions import build_chain_operator
from qle.models import ComputationError, ConfigError, MixedState, PureState, RegisterLayout
from qle.qsim_functions import (
    amplitude_amplification,
    choose_iterations,
    collapse,
    density_phase_estimation,
    fidelity,
    inverse_eigenvalue_iterations,
    inverse_qft,
    marked_probability,
    measure_phase_register,
    phase_estimation,
    prepare_degree_density,
    prepare_density_from_columns,
    prepare_input_state,
    qft_matrix,
    refine_eigenstate,
    strip_global_phase,
    system_state,
    unitary_from_generator,
)


def single_qubit_phase(phase):
    """U = diag(exp(2 pi i phase), 1) on one system qubit; |0> is the eigenvector."""
    return np.diag([np.exp(2j * np.pi * phase), 1.0])


def random_state(rng, layout):
    amplitudes = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return PureState(amplitudes=amplitudes / np.linalg.norm(amplitudes), layout=layout)


def test_register_layout_for_nodes():
    assert RegisterLayout.for_nodes(2, 3).q == 1
    assert RegisterLayout.for_nodes(3, 3).m_pad == 4
    assert RegisterLayout.for_nodes(16, 8).q == 4
    assert RegisterLayout.for_nodes(17, 8).q == 5
    assert RegisterLayout(t=3, q=1, m=2).bitstring(4) == "100"


def test_register_layout_caps():
    with pytest.raises(ValidationError):
        RegisterLayout(t=20, q=5, m=20)
    with pytest.raises(ValidationError):
        RegisterLayout(t=3, q=1, m=3)


def test_density_from_incidence_is_normalized_laplacian(p2):
    state = prepare_density_from_columns(p2.B)
    np.testing.assert_allclose(state.rho, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)
    assert state.purity == pytest.approx(1.0)
    assert state.rank() == 1


def test_density_is_padded_with_zeros(p3):
    state = prepare_density_from_columns(p3.B, m_pad=4)
    assert state.rho.shape == (4, 4)
    np.testing.assert_allclose(state.rho[:3, :3], p3.L / 4, atol=1e-15)
    assert np.all(state.rho[3] == 0) and np.all(state.rho[:, 3] == 0)


def test_degree_density(p3):
    state = prepare_degree_density(p3, m_pad=4)
    np.testing.assert_allclose(np.diag(state.rho).real, [0.25, 0.5, 0.25, 0.0], atol=1e-15)
    assert state.rank() == 3


def test_density_of_zero_matrix():
    with pytest.raises(ComputationError):
        prepare_density_from_columns(np.zeros((2, 2)))


def test_mixed_state_rejects_bad_trace():
    with pytest.raises(ValidationError):
        MixedState(rho=np.eye(2))


def test_unitary_of_diagonal_generator():
    U = unitary_from_generator(np.diag([1.0, 3.0]), 0.25)
    np.testing.assert_allclose(U, np.diag([1j, -1j]), atol=1e-12)


def test_unitary_is_padded_with_identity(p3):
    U = unitary_from_generator(p3.L, 0.25, dim=4)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(4), atol=1e-12)
    assert U[3, 3] == 1
    assert np.all(U[3, :3] == 0)


def test_unitary_on_random_generators():
    rng = np.random.default_rng(8)
    for _ in range(20):
        A = rng.normal(size=(4, 4))
        G = A @ A.T
        s = 0.9 / np.linalg.eigvalsh(G).max()
        U = unitary_from_generator(G, s)
        np.testing.assert_allclose(U @ U.conj().T, np.eye(4), atol=1e-10)


def test_unitary_without_phase_headroom():
    with pytest.raises(ConfigError, match="headroom"):
        unitary_from_generator(np.diag([1.0, 4.0]), 0.25)


def test_unitary_needs_symmetric_generator():
    with pytest.raises(ComputationError):
        unitary_from_generator(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.25)


def test_inverse_qft_matches_the_conjugate_transform():
    np.testing.assert_allclose(inverse_qft(np.eye(8)), qft_matrix(3).conj().T, atol=1e-12)
    np.testing.assert_allclose(qft_matrix(3) @ qft_matrix(3).conj().T, np.eye(8), atol=1e-12)


def test_phase_estimation_reads_half():
    layout = RegisterLayout(t=3, q=1, m=2)
    output = phase_estimation(single_qubit_phase(0.5), system_state([1.0, 0.0], layout), layout)
    distribution, _ = measure_phase_register(output)
    assert distribution.probability("100") == pytest.approx(1.0, abs=1e-12)


def test_phase_estimation_reads_zero():
    layout = RegisterLayout(t=3, q=1, m=2)
    output = phase_estimation(np.eye(2), system_state([0.6, 0.8], layout), layout)
    distribution, _ = measure_phase_register(output)
    assert distribution.probability("000") == pytest.approx(1.0, abs=1e-12)


def test_path_two_basis_input_splits_evenly(p2):
    chain = build_chain_operator(p2)
    layout = RegisterLayout.for_nodes(2, 3)
    U = unitary_from_generator(chain.G, chain.s, dim=layout.m_pad)
    output = phase_estimation(U, prepare_input_state(layout, "basis", index=0), layout)

    distribution, records = measure_phase_register(output)
    assert distribution.support() == pytest.approx({"000": 0.5, "100": 0.5}, abs=1e-12)
    np.testing.assert_allclose(np.abs(records["000"].post_state.amplitudes), [1 / np.sqrt(2)] * 2, atol=1e-12)
    np.testing.assert_allclose(strip_global_phase(records["100"].post_state.amplitudes),
                               [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-12)


def test_path_two_uniform_input_is_the_zero_mode(p2):
    chain = build_chain_operator(p2)
    layout = RegisterLayout.for_nodes(2, 3)
    U = unitary_from_generator(chain.G, chain.s, dim=layout.m_pad)
    output = phase_estimation(U, prepare_input_state(layout, "uniform"), layout)
    distribution, _ = measure_phase_register(output)
    assert distribution.probability("000") == pytest.approx(1.0, abs=1e-12)


def test_phase_estimation_nearest_bin_bound():
    rng = np.random.default_rng(21)
    layout = RegisterLayout(t=4, q=1, m=2)
    for phase in rng.uniform(0, 1, size=50):
        output = phase_estimation(single_qubit_phase(phase), system_state([1.0, 0.0], layout), layout)
        distribution, _ = measure_phase_register(output, with_records=False)
        nearest = layout.bitstring(int(round(phase * layout.bins)) % layout.bins)
        assert distribution.probability(nearest) >= 4 / math.pi ** 2 - 1e-12
        assert distribution.probabilities.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("k", [0, 1, 5, 15])
def test_phase_estimation_is_exact_on_dyadic_phases(k):
    layout = RegisterLayout(t=4, q=1, m=2)
    output = phase_estimation(single_qubit_phase(k / 16), system_state([1.0, 0.0], layout), layout)
    distribution, _ = measure_phase_register(output)
    assert distribution.probability(layout.bitstring(k)) == pytest.approx(1.0, abs=1e-12)


def test_phase_estimation_rejects_non_unitary():
    layout = RegisterLayout(t=2, q=1, m=2)
    with pytest.raises(ComputationError, match="unitary"):
        phase_estimation(2 * np.eye(2), system_state([1.0, 0.0], layout), layout)


def test_padding_amplitudes_stay_zero(p3):
    chain = build_chain_operator(p3)
    layout = RegisterLayout.for_nodes(3, 4)
    U = unitary_from_generator(chain.G, chain.s, dim=layout.m_pad)
    output = phase_estimation(U, prepare_input_state(layout, "column", chain, 0), layout)
    assert np.all(np.abs(output.blocks[:, 3]) <= 1e-14)


def test_input_state_modes(p3):
    chain = build_chain_operator(p3)
    layout = RegisterLayout.for_nodes(3, 2)
    np.testing.assert_allclose(prepare_input_state(layout, "uniform").amplitudes, np.r_[[1, 1, 1], 0] / np.sqrt(3))
    np.testing.assert_allclose(prepare_input_state(layout, "uniform-padded").amplitudes, [0.5] * 4)
    np.testing.assert_allclose(prepare_input_state(layout, "basis", index=2).amplitudes, [0, 0, 1, 0])
    column = prepare_input_state(layout, "column", chain, 1).amplitudes
    np.testing.assert_allclose(column[:3], chain.F[:, 1] / np.linalg.norm(chain.F[:, 1]))
    with pytest.raises(ConfigError):
        prepare_input_state(layout, "column")
    with pytest.raises(ConfigError):
        prepare_input_state(layout, "basis", index=3)


def test_measurement_records_are_normalized():
    rng = np.random.default_rng(4)
    state = random_state(rng, RegisterLayout(t=3, q=2, m=4))
    distribution, records = measure_phase_register(state)
    assert distribution.probabilities.sum() == pytest.approx(1.0)
    assert len(records) == 8
    for outcome, record in records.items():
        assert record.probability == pytest.approx(distribution.probability(outcome))
        assert np.linalg.norm(record.post_state.amplitudes) == pytest.approx(1.0)


def test_sampled_counts_are_seeded():
    rng = np.random.default_rng(4)
    state = random_state(rng, RegisterLayout(t=3, q=1, m=2))
    first, _ = measure_phase_register(state, shots=500, seed=3, with_records=False)
    second, _ = measure_phase_register(state, shots=500, seed=3, with_records=False)
    assert first.counts == second.counts
    assert sum(first.counts.values()) == 500


def test_collapse_on_zero_probability_outcome():
    layout = RegisterLayout(t=3, q=1, m=2)
    output = phase_estimation(single_qubit_phase(0.5), system_state([1.0, 0.0], layout), layout)
    with pytest.raises(ComputationError, match="zero probability"):
        collapse(output, "001")
    with pytest.raises(ConfigError):
        collapse(output, "01")


def test_amplification_of_quarter_probability():
    layout = RegisterLayout(t=2, q=1, m=2)
    state = PureState(amplitudes=np.full(8, 1 / np.sqrt(8)), layout=layout)
    assert marked_probability(state, "00") == pytest.approx(0.25)
    assert choose_iterations(0.25) == 1

    amplified = amplitude_amplification(state, "00", 1)
    assert marked_probability(amplified, "00") == pytest.approx(1.0, abs=1e-12)


def test_zero_iterations_leave_the_state_unchanged():
    rng = np.random.default_rng(6)
    state = random_state(rng, RegisterLayout(t=2, q=2, m=4))
    unchanged = amplitude_amplification(state, "10", 0)
    np.testing.assert_array_equal(unchanged.amplitudes, state.amplitudes)


def test_amplification_follows_the_closed_form():
    rng = np.random.default_rng(12)
    layout = RegisterLayout(t=3, q=2, m=4)
    for _ in range(10):
        state = random_state(rng, layout)
        p0 = marked_probability(state, "011")
        theta = math.asin(math.sqrt(p0))
        for k in range(5):
            amplified = amplitude_amplification(state, "011", k)
            assert marked_probability(amplified, "011") == pytest.approx(math.sin((2 * k + 1) * theta) ** 2, abs=1e-10)


def test_amplification_needs_overlap():
    layout = RegisterLayout(t=3, q=1, m=2)
    output = phase_estimation(single_qubit_phase(0.5), system_state([1.0, 0.0], layout), layout)
    with pytest.raises(ComputationError, match="nothing to amplify"):
        amplitude_amplification(output, "000", 1)


@pytest.mark.parametrize("p0, expected", [(0.25, 1), (1.0, 0), (0.01, 7), (0.3, 1), (0.9, 0)])
def test_choose_iterations(p0, expected):
    assert choose_iterations(p0) == expected


def test_chosen_iterations_reach_high_success():
    for p0 in np.linspace(0.001, 1.0, 200):
        theta = math.asin(math.sqrt(p0))
        success = math.sin((2 * choose_iterations(p0) + 1) * theta) ** 2
        assert success >= max(p0, 1 - p0) - 1e-12


@pytest.mark.parametrize("p0", [0.0, -0.1, 1.5])
def test_choose_iterations_rejects(p0):
    with pytest.raises(ConfigError):
        choose_iterations(p0)


def test_inverse_eigenvalue_iterations():
    assert inverse_eigenvalue_iterations(0.3) == 4
    assert inverse_eigenvalue_iterations(2.0) == 1


def test_density_phase_estimation_on_path_two(p2):
    result = density_phase_estimation(p2.L, 0.25, t=3)
    assert result.probabilities[4] == pytest.approx(1.0, abs=1e-12)
    assert result.estimate("100") == 2.0
    assert [component.nearest_outcome for component in result.components] == ["100"]


def test_density_phase_estimation_weights_by_eigenvalue():
    result = density_phase_estimation(np.diag([1.0, 3.0]), 0.25, t=2)
    np.testing.assert_allclose(result.probabilities, [0.0, 0.25, 0.0, 0.75], atol=1e-10)
    assert [row["bitstring"] for row in result.table()] == ["01", "11"]
    assert [row["eigenvalue"] for row in result.table()] == [1.0, 3.0]


def test_density_phase_estimation_shot_statistics():
    shots = 10000
    result = density_phase_estimation(np.diag([1.0, 3.0]), 0.25, t=2, shots=shots, seed=1)
    for outcome, p in (("01", 0.25), ("11", 0.75)):
        sigma = math.sqrt(p * (1 - p) / shots)
        assert abs(result.counts[outcome] / shots - p) <= 3 * sigma
    assert set(result.counts) == {"01", "11"}


def test_density_phase_estimation_needs_trace():
    with pytest.raises(ComputationError, match="trace"):
        density_phase_estimation(np.zeros((2, 2)), 0.25, t=3)


def test_strip_global_phase_up_to_sign():
    v = np.array([0.6, -0.8])
    stripped = strip_global_phase(np.exp(1.3j) * v)
    assert np.allclose(stripped, v) or np.allclose(stripped, -v)


def test_fidelity_against_a_subspace():
    basis = np.eye(4)[:, :2]
    assert fidelity(np.array([1.0, 0.0, 0.0, 0.0]), basis) == pytest.approx(1.0)
    assert fidelity(np.array([0.6, 0.0, 0.8, 0.0]), basis) == pytest.approx(0.36)


def test_circuit_stages_preserve_the_norm(p3):
    chain = build_chain_operator(p3)
    layout = RegisterLayout.for_nodes(3, 5)
    U = unitary_from_generator(chain.G, chain.s, dim=layout.m_pad)
    for index in range(3):
        output = phase_estimation(U, prepare_input_state(layout, "column", chain, index), layout)
        assert np.linalg.norm(output.amplitudes) == pytest.approx(1.0, abs=1e-12)
        amplified = amplitude_amplification(output, "10000", 2)
        assert np.linalg.norm(amplified.amplitudes) == pytest.approx(1.0, abs=1e-12)


def two_phase_unitary(first, second):
    return np.diag(np.exp(2j * np.pi * np.array([first, second])))


def test_refinement_removes_leakage_from_other_bins():
    layout = RegisterLayout(t=4, q=1, m=2)
    U = two_phase_unitary(0.3, 0.7)
    refined, passes, kept = refine_eigenstate(U, system_state([0.8, 0.6], layout), "0101")

    assert abs(refined.amplitudes[0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(refined.amplitudes[1]) <= 1e-9
    assert 1 < passes < 200
    assert 0 < kept < 1


def test_refinement_keeps_equal_phase_components():
    layout = RegisterLayout(t=4, q=1, m=2)
    U = two_phase_unitary(0.3, 0.3)
    refined, passes, _ = refine_eigenstate(U, system_state([0.8, 0.6], layout), "0101")
    np.testing.assert_allclose(np.abs(refined.amplitudes), [0.8, 0.6], atol=1e-12)
    assert passes == 1


def test_refinement_stops_at_the_pass_limit():
    layout = RegisterLayout(t=4, q=1, m=2)
    U = two_phase_unitary(0.3, 0.7)
    _, passes, _ = refine_eigenstate(U, system_state([0.8, 0.6], layout), "0101", max_passes=2)
    assert passes == 2


def test_refinement_needs_a_system_state():
    layout = RegisterLayout(t=2, q=1, m=2)
    state = PureState(amplitudes=np.full(8, 1 / np.sqrt(8)), layout=layout)
    with pytest.raises(ConfigError):
        refine_eigenstate(np.eye(2), state, "00")
