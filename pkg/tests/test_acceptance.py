"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Tolerances are fixed here and nowhere else; every expected number is either
a closed-form value of the worked examples or produced by the analytic
Born-rule oracle.
"""

import functools
import time

import numpy as np
from scipy import stats

from povmsim import (ConfusionModel, DensityMatrix, apply_confusion,
                     encode_to_qubits, instrument_purification, isometry_matrix,
                     joint_state, marginal_probabilities, mitigate_readout,
                     outcome_probabilities, parse_qasm, post_measurement_state,
                     post_select, prepare_state, run_circuit, sample_shots,
                     tomography, circuit_to_qasm)
from povmsim import branch_probabilities

from helpers import (instrument_qi, phase_aligned_distance, povm_ex1, povm_ex2,
                     povm_ex3, povm_ex4, psi0_ex3, qi_output_matrix,
                     random_povm, random_pure_state)

BELEM_RATES = (0.0145, 0.0290, 0.0265, 0.0378, 0.0326)
SHOTS = 8192
N_SEEDS = 100


def acceptance(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS")
        return wrapper
    return decorate


def end_to_end(povm, psi0):
    """Dilate, compile, execute; returns the final state and its encoding."""
    encoded, enc = encode_to_qubits(joint_state(povm, psi0))
    return run_circuit(prepare_state(encoded)), enc


def ancilla_marginals(povm, psi0):
    state, enc = end_to_end(povm, psi0)
    return marginal_probabilities(state, enc.subsystem_qubits(1)), state, enc


def zero_ket(dim):
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    return v


@functools.lru_cache(maxsize=1)
def random_povm_suite():
    """500 complete POVMs over all (d, n) in {2,3,4}^2 with pure inputs."""
    rng = np.random.default_rng(0xACCE)
    combos = [(d, n) for d in (2, 3, 4) for n in (2, 3, 4)]
    cases = []
    for i in range(500):
        d, n = combos[i % len(combos)]
        cases.append((random_povm(d, n, rng), random_pure_state(d, rng)))
    return cases


BUNDLED_CASES = {
    "ex1": (povm_ex1, lambda: zero_ket(2)),
    "ex2": (povm_ex2, lambda: zero_ket(2)),
    "ex3": (povm_ex3, psi0_ex3),
    "ex4": (povm_ex4, lambda: zero_ket(4)),
}


@acceptance("ex1-probabilities")
def test_ex1_probabilities():
    start = time.perf_counter()
    probs, _, _ = ancilla_marginals(povm_ex1(), zero_ket(2))
    elapsed = time.perf_counter() - start
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-10)
    assert elapsed < 1.0


@acceptance("ex2-probabilities")
def test_ex2_probabilities():
    probs, _, _ = ancilla_marginals(povm_ex2(), zero_ket(2))
    np.testing.assert_allclose(probs, [2 / 3, 1 / 6, 1 / 6, 0.0], atol=1e-10)


@acceptance("ex3-qutrit-probabilities")
def test_ex3_qutrit_probabilities():
    probs, state, enc = ancilla_marginals(povm_ex3(), psi0_ex3())
    np.testing.assert_allclose(probs, [1 / 6, 1 / 2, 1 / 3, 0.0], atol=1e-10)
    unused = [i for i in range(16) if i not in enc.used_indices()]
    assert float(np.max(np.abs(state.amplitudes[unused]))) <= 1e-12


@acceptance("ex4-two-qubit-povm")
def test_ex4_two_qubit_povm():
    probs, _, _ = ancilla_marginals(povm_ex4(), zero_ket(4))
    np.testing.assert_allclose(probs, [1 / 3, 1 / 12, 1 / 12, 1 / 2], atol=1e-10)


@acceptance("instrument-reconstruction")
def test_instrument_reconstruction():
    instr = instrument_qi()
    encoded, enc = encode_to_qubits(instrument_purification(instr, zero_ket(2)))
    state = run_circuit(prepare_state(encoded))
    rho = tomography(state, enc.subsystem_qubits(0) + enc.subsystem_qubits(1))
    np.testing.assert_allclose(rho.matrix, qi_output_matrix() / 8, atol=1e-10)
    traces = branch_probabilities(instr, DensityMatrix.from_pure(zero_ket(2)))
    np.testing.assert_allclose(traces, [3 / 4, 1 / 4], atol=1e-10)


@acceptance("protocol-equivalence-500")
def test_protocol_equivalence_suite():
    start = time.perf_counter()
    for povm, psi0 in random_povm_suite():
        d, n = povm.dim, povm.n_outcomes
        state, enc = end_to_end(povm, psi0)
        anc = enc.subsystem_qubits(1)
        probs = marginal_probabilities(state, anc)
        born = outcome_probabilities(povm, DensityMatrix.from_pure(psi0))
        np.testing.assert_allclose(probs[:n], born, atol=1e-10)
        assert np.all(probs[n:] <= 1e-10)
        rho0 = DensityMatrix.from_pure(psi0)
        for j in range(n):
            if born[j] <= 1e-9:
                continue
            reduced, prob = post_select(state, anc, enc.level_bitstring(1, j))
            assert abs(prob - born[j]) <= 1e-10
            decoded = reduced.amplitudes[:d] / np.linalg.norm(reduced.amplitudes[:d])
            oracle = post_measurement_state(povm, j, rho0)
            eigenvalues, vectors = np.linalg.eigh(oracle.matrix)
            oracle_vec = vectors[:, -1]  # rank-1 for pure inputs
            assert phase_aligned_distance(decoded, oracle_vec) <= 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0


@acceptance("isometry-property")
def test_isometry_property():
    for povm, psi0 in random_povm_suite():
        v = isometry_matrix(povm)
        assert float(np.max(np.abs(v.conj().T @ v - np.eye(povm.dim)))) <= 1e-10
        assert abs(joint_state(povm, psi0).norm - 1.0) <= 1e-10


@acceptance("compiler-fidelity-and-cost")
def test_compiler_fidelity_and_cost():
    rng = np.random.default_rng(0xC0DE)
    for i in range(1000):
        n = 1 + (i % 6)
        target = random_pure_state(2 ** n, rng)
        circuit = prepare_state(target)
        assert circuit.cnot_count <= 2 ** (n + 1)
        out = run_circuit(circuit).amplitudes
        assert abs(np.vdot(target, out)) ** 2 >= 1 - 1e-12
        reparsed = parse_qasm(circuit_to_qasm(circuit))
        replay = run_circuit(reparsed).amplitudes
        assert float(np.max(np.abs(replay - out))) <= 1e-12


def _sampling_cases():
    cases = []
    for name, (make_povm, make_psi0) in BUNDLED_CASES.items():
        state, enc = end_to_end(make_povm(), make_psi0())
        cases.append((name, state, enc.subsystem_qubits(1)))
    encoded, enc = encode_to_qubits(
        instrument_purification(instrument_qi(), zero_ket(2)))
    cases.append(("qi", run_circuit(prepare_state(encoded)),
                  enc.subsystem_qubits(1)))
    return cases


@acceptance("sampling-statistics")
def test_sampling_statistics():
    for name, state, anc in _sampling_cases():
        probs = marginal_probabilities(state, anc)
        support = probs > 1e-12
        in_band = 0
        chi_square_ok = 0
        for seed in range(N_SEEDS):
            record = sample_shots(state, anc, SHOTS, seed=seed)
            freqs = record.frequencies()
            assert float(freqs[~support].sum()) == 0.0, name
            sigma = np.sqrt(probs[support] * (1 - probs[support]) / SHOTS)
            if np.all(np.abs(freqs[support] - probs[support]) <= 5 * sigma):
                in_band += 1
            chi2 = float(np.sum(
                (freqs[support] * SHOTS - SHOTS * probs[support]) ** 2
                / (SHOTS * probs[support])))
            if stats.chi2.sf(chi2, df=int(support.sum()) - 1) >= 0.001:
                chi_square_ok += 1
        assert in_band >= 99, (name, in_band)
        assert chi_square_ok >= 99, (name, chi_square_ok)


@acceptance("noise-mitigation-loop")
def test_noise_mitigation_loop():
    model = ConfusionModel(BELEM_RATES)
    for name, state, anc in _sampling_cases():
        ideal = marginal_probabilities(state, anc)

        record = sample_shots(state, anc, 1_000_000, seed=7)
        noisy = apply_confusion(record, model, seed=8)
        recovered = mitigate_readout(noisy, model).probabilities
        tv_large = 0.5 * float(np.abs(recovered - ideal).sum())
        assert tv_large <= 0.01, (name, tv_large)

        tvs = []
        for seed in range(N_SEEDS):
            record = sample_shots(state, anc, SHOTS, seed=seed)
            noisy = apply_confusion(record, model, seed=seed + N_SEEDS)
            recovered = mitigate_readout(noisy, model).probabilities
            tvs.append(0.5 * float(np.abs(recovered - ideal).sum()))
        mean_tv = float(np.mean(tvs))
        assert mean_tv <= 0.02, (name, mean_tv)
