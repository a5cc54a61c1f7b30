import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symclone.dynamics import (
    EnsembleError,
    HybridEnsemble,
    coevolve_overlap,
    density_matrix,
    ensemble_trajectories,
    evolve_ensemble,
    flow_symplectic_check,
    hamiltonian_vector_field,
    hybrid_point,
    integrate,
    purity,
    purity_series,
    quadratic_flow_oracle,
    separate_run_overlap,
)
from symclone.errors import ConvergenceError
from symclone.hamiltonians import MeanFieldHybrid, QuadraticOperator, harmonic, sum_of_terms
from symclone.phase_space import (
    PAULI_X,
    PAULI_Z,
    HermitianOperator,
    PhasePoint,
    PhaseSpace,
    TangentVector,
    expectation,
    fit_global_phase,
    observable_field,
    poisson_bracket,
    to_canonical,
)
from symclone.presets import PLUS, UP, classical_ensemble, get_preset, meanfield_oscillator, weinberg_quadratic

from helpers import random_state

Q2 = PhaseSpace.quantum(2)
R2 = np.sqrt(2.0)


def _decoupled():
    return MeanFieldHybrid(harmonic(1), PAULI_Z)


class TestIntegrate:
    def test_sigma_z_matches_oracle(self):
        x0 = to_canonical(PLUS, Q2)
        traj = integrate(QuadraticOperator(PAULI_Z), x0, np.pi, 1e-3)
        assert traj.t_final == pytest.approx(3.142)
        exact = quadratic_flow_oracle(PAULI_Z, PLUS, traj.t_final)
        _, res = fit_global_phase(traj.amplitudes()[-1], exact)
        assert res < 1e-8

    def test_oracle_closed_form(self):
        # exp(-i sigma_z t) acting on |+>
        t = 0.37
        np.testing.assert_allclose(quadratic_flow_oracle(PAULI_Z, PLUS, t),
                                   [np.exp(-1j * t) / R2, np.exp(1j * t) / R2])
        np.testing.assert_allclose(quadratic_flow_oracle(PAULI_Z, PLUS, np.pi / 2), [-1j / R2, 1j / R2], atol=1e-15)

    def test_null_flow(self, rng):
        x0 = to_canonical(random_state(rng), Q2)
        traj = integrate(QuadraticOperator(HermitianOperator(np.zeros((2, 2)))), x0, 1.0, 0.1)
        np.testing.assert_array_equal(traj.states, np.tile(x0.coords, (len(traj), 1)))

    def test_time_grid(self):
        traj = integrate(QuadraticOperator(PAULI_Z), to_canonical(PLUS, Q2), 1.0, 0.25)
        np.testing.assert_allclose(traj.times, [0, 0.25, 0.5, 0.75, 1.0])
        assert len(traj.points) == 5 and traj.final.space == Q2

    def test_zero_time(self):
        traj = integrate(QuadraticOperator(PAULI_Z), to_canonical(PLUS, Q2), 0.0, 0.1)
        assert len(traj) == 1

    def test_bad_arguments(self):
        x0 = to_canonical(PLUS, Q2)
        with pytest.raises(ValueError):
            integrate(QuadraticOperator(PAULI_Z), x0, 1.0, 0.0)
        with pytest.raises(ValueError):
            integrate(QuadraticOperator(PAULI_Z), x0, -1.0, 0.1)
        with pytest.raises(ValueError):
            integrate(QuadraticOperator(PAULI_Z), x0, 1.0, 0.1, scheme="rk4")

    def test_non_convergence(self):
        x0 = to_canonical(PLUS, Q2)
        with pytest.raises(ConvergenceError):
            integrate(weinberg_quadratic(), x0, 1.0, 0.5, max_iter=2)

    def test_squared_expectation_conserves_norm(self):
        h = sum_of_terms((1.0, [PAULI_Z], [2]))
        x0 = to_canonical(np.array([0.6, 0.8j]), Q2)
        traj = integrate(h, x0, 10.0, 1e-3)
        assert np.max(np.abs(traj.norms() - 2.0)) < 1e-10

    @pytest.mark.parametrize("scheme", ["midpoint", "yoshida4"])
    def test_schemes_conserve(self, scheme):
        p = get_preset("weinberg-quadratic")
        traj = integrate(p.hamiltonian, p.initial, 2.0, 1e-2, scheme=scheme)
        assert np.max(np.abs(traj.norms() - 2)) < 1e-10
        assert np.max(np.abs(traj.energies - traj.energies[0])) < 1e-5

    @pytest.mark.parametrize("name", ["linear-sigma-z", "weinberg-quadratic", "meanfield-oscillator"])
    def test_conservation_long_run(self, name):
        p = get_preset(name)
        traj = integrate(p.hamiltonian, p.initial, 10.0, 1e-3)
        assert np.max(np.abs(traj.norms() - traj.norms()[0])) < 1e-10
        assert np.max(np.abs(traj.energies - traj.energies[0])) < 1e-8

    def test_observable_derivative_is_bracket(self):
        p = get_preset("weinberg-quadratic")
        dt = 1e-4
        traj = integrate(p.hamiltonian, p.initial, 0.1, dt)
        f = observable_field(PAULI_X, Q2)
        vals = np.array([f(s) for s in traj.states])
        for k in (100, 500, 900):
            fd = (vals[k + 1] - vals[k - 1]) / (2 * dt)
            point = PhasePoint(Q2, traj.states[k])
            v = hamiltonian_vector_field(p.hamiltonian, point).components
            bracket = float(f.grad(point.coords) @ v)
            assert fd == pytest.approx(bracket, abs=1e-6)

    def test_bracket_with_energy_function(self, rng):
        # {A, H} equals the directional derivative of A along the flow
        h = weinberg_quadratic()
        p = to_canonical(random_state(rng), Q2)
        hf = observable_field(PAULI_Z, Q2)
        hx = observable_field(PAULI_X, Q2)
        energy_field = lambda x: hf(x) + 0.3 * hx(x) ** 2  # noqa: E731
        f = observable_field(PAULI_X, Q2)
        v = hamiltonian_vector_field(h, p).components
        assert poisson_bracket(f, energy_field, p) == pytest.approx(f.grad(p.coords) @ v, abs=1e-7)


class TestFlowSymplectic:
    def _vectors(self, rng, point):
        return (TangentVector(point, rng.standard_normal(point.space.dim)) for _ in range(2))

    def test_null_flow(self, rng):
        x0 = to_canonical(PLUS, Q2)
        u, v = self._vectors(rng, x0)
        h = QuadraticOperator(HermitianOperator(np.zeros((2, 2))))
        # only finite-difference roundoff remains
        assert flow_symplectic_check(h, x0, u, v, 1.0, 0.1) == pytest.approx(1.0, abs=1e-9)

    def test_random_quadratic(self, rng):
        x0 = to_canonical(random_state(rng), Q2)
        u, v = self._vectors(rng, x0)
        h = QuadraticOperator(HermitianOperator.random(2, rng))
        assert flow_symplectic_check(h, x0, u, v, 1.0, 1e-2) == pytest.approx(1.0, abs=1e-8)

    def test_squared_expectation(self, rng):
        x0 = to_canonical(random_state(rng), Q2)
        u, v = self._vectors(rng, x0)
        h = sum_of_terms((1.0, [PAULI_Z], [2]))
        assert flow_symplectic_check(h, x0, u, v, 1.0, 1e-3) == pytest.approx(1.0, abs=1e-6)

    def test_meanfield(self, rng):
        p = get_preset("meanfield-oscillator")
        u, v = self._vectors(rng, p.initial)
        assert flow_symplectic_check(p.hamiltonian, p.initial, u, v, 1.0, 1e-3) == pytest.approx(1.0, abs=1e-6)

    def test_degenerate_area(self):
        x0 = to_canonical(PLUS, Q2)
        u = TangentVector(x0, np.array([1.0, 0, 0, 0]))
        with pytest.raises(ValueError):
            flow_symplectic_check(QuadraticOperator(PAULI_Z), x0, u, u, 1.0, 0.1)

    def test_base_checked(self, rng):
        x0 = to_canonical(PLUS, Q2)
        other = to_canonical(UP, Q2)
        u, v = self._vectors(rng, other)
        with pytest.raises(ValueError):
            flow_symplectic_check(QuadraticOperator(PAULI_Z), x0, u, v, 1.0, 0.1)


class TestDensityMatrix:
    def _ensemble(self, *states, weights=None):
        weights = weights or [1 / len(states)] * len(states)
        return HybridEnsemble(tuple((w, to_canonical(np.asarray(s, dtype=complex), Q2))
                                    for w, s in zip(weights, states)))

    def test_delta(self, rng):
        psi = random_state(rng)
        rho = density_matrix(self._ensemble(psi))
        np.testing.assert_allclose(rho.entries, np.outer(psi, psi.conj()), atol=1e-15)
        assert purity(rho) == pytest.approx(1.0)

    def test_orthogonal_mixture(self):
        rho = density_matrix(self._ensemble([1, 0], [0, 1]))
        np.testing.assert_allclose(rho.entries, np.eye(2) / 2)
        assert purity(rho) == pytest.approx(0.5)

    def test_non_orthogonal_mixture(self):
        rho = density_matrix(self._ensemble([1, 0], [1 / R2, 1 / R2]))
        assert np.trace(rho.entries).real == pytest.approx(1.0)
        # (1 + |<0|+>|^2) / 2; the larger eigenvalue is cos^2(pi/8) = (2 + sqrt 2) / 4
        assert purity(rho) == pytest.approx(0.75, abs=1e-14)
        assert np.max(np.linalg.eigvalsh(rho.entries)) == pytest.approx((2 + R2) / 4, abs=1e-14)

    def test_projectors_are_normalized(self):
        rho = density_matrix(self._ensemble([2, 0]))
        assert purity(rho) == pytest.approx(1.0)

    @pytest.mark.parametrize("diag, value", [((1, 0), 1.0), ((0.5, 0.5), 0.5), ((0.75, 0.25), 5 / 8)])
    def test_purity_examples(self, diag, value):
        assert purity(HermitianOperator(np.diag(diag).astype(complex))) == pytest.approx(value)

    def test_purity_trace_checked(self):
        with pytest.raises(ValueError):
            purity(HermitianOperator(np.eye(2)))

    @given(st.integers(1, 6), st.integers(0, 2**31))
    def test_positive_unit_trace(self, k, seed):
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.ones(k))
        w = w / w.sum()
        w[-1] = 1.0 - w[:-1].sum()
        ens = HybridEnsemble(tuple((float(wi), to_canonical(random_state(rng), Q2)) for wi in w))
        rho = density_matrix(ens).entries
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
        assert 0.5 - 1e-12 <= purity(density_matrix(ens)) <= 1 + 1e-12


class TestEnsemble:
    def test_validation(self):
        p = to_canonical(PLUS, Q2)
        with pytest.raises(ValueError):
            HybridEnsemble(())
        with pytest.raises(ValueError):
            HybridEnsemble(((0.6, p), (0.6, p)))
        with pytest.raises(ValueError):
            HybridEnsemble(((1.5, p), (-0.5, p)))
        with pytest.raises(ValueError):
            HybridEnsemble(((0.5, p), (0.5, PhasePoint(PhaseSpace.quantum(3), np.zeros(6)))))

    def test_delta_equals_single_run(self):
        mf = meanfield_oscillator()
        x0 = hybrid_point(mf, [1.0, 0.0], UP)
        out = evolve_ensemble(mf, HybridEnsemble.delta(x0), 1.0, 1e-2)
        np.testing.assert_array_equal(out.members[0][1].coords, integrate(mf, x0, 1.0, 1e-2).final.coords)

    def test_weights_preserved(self):
        ens = classical_ensemble("two-point")
        out = evolve_ensemble(meanfield_oscillator(), ens, 0.5, 1e-2, jobs=2)
        np.testing.assert_array_equal(out.weights, ens.weights)

    def test_decoupled_members_share_quantum_evolution(self):
        h = _decoupled()
        ens = HybridEnsemble(((0.5, hybrid_point(h, [1, 0], PLUS)), (0.5, hybrid_point(h, [-2, 0.5], PLUS))))
        trajs = ensemble_trajectories(h, ens, 1.0, 1e-3)
        exact = quadratic_flow_oracle(PAULI_Z, PLUS, trajs[0].t_final)
        for tr in trajs:
            np.testing.assert_allclose(tr.amplitudes()[-1], exact, atol=1e-10)

    def test_delta_purity(self):
        ens = classical_ensemble("delta")
        series = purity_series(ens, ensemble_trajectories(meanfield_oscillator(), ens, 2.0, 1e-3))
        assert np.max(np.abs(series - 1.0)) < 1e-8

    def test_two_point_purity_decays(self):
        ens = classical_ensemble("two-point")
        series = purity_series(ens, ensemble_trajectories(meanfield_oscillator(), ens, 2.0, 1e-3))
        assert series[0] == pytest.approx(1.0)
        assert series[-1] < 0.999

    def test_member_failures_reported(self):
        ens = classical_ensemble("two-point", spread=1e3)
        with pytest.raises(EnsembleError) as info:
            ensemble_trajectories(meanfield_oscillator(), ens, 1.0, 0.5, max_iter=2)
        assert set(info.value.failures) == {0, 1}

    def test_unknown_distribution(self):
        with pytest.raises(ValueError):
            classical_ensemble("gaussian")


class TestOverlaps:
    def test_identical_states(self, rng):
        psi = random_state(rng)
        mf = meanfield_oscillator()
        np.testing.assert_allclose(coevolve_overlap(mf, psi, psi, [1.0, 0.0], "A", 2.0, 1e-3), 1.0, atol=1e-12)
        np.testing.assert_allclose(separate_run_overlap(mf, psi, psi, [1.0, 0.0], 2.0, 1e-3), 1.0, atol=1e-12)

    def test_orthogonal_pair(self):
        ov = coevolve_overlap(meanfield_oscillator(), UP, np.array([0, 1], dtype=complex), [1.0, 0.0], "B", 5.0, 1e-3)
        assert np.max(ov) < 1e-8

    @pytest.mark.parametrize("driver", ["A", "B"])
    def test_shared_driver_constant(self, driver, rng):
        a, b = random_state(rng), random_state(rng)
        ov = coevolve_overlap(meanfield_oscillator(), a, b, rng.standard_normal(2), driver, 5.0, 1e-3)
        assert np.var(ov) < 1e-8
        assert ov[0] == pytest.approx(abs(np.vdot(a, b)))

    def test_no_interaction_separate_runs_constant(self, rng):
        a, b = random_state(rng), random_state(rng)
        ov = separate_run_overlap(_decoupled(), a, b, [1.0, 0.0], 3.0, 1e-3)
        assert np.ptp(ov) < 1e-10

    def test_separate_runs_reported(self):
        ov = separate_run_overlap(meanfield_oscillator(), UP, PLUS, [1.0, 0.0], 2.0, 1e-3)
        assert ov.shape == (2001,) and np.all(np.isfinite(ov))

    def test_driver_validated(self):
        with pytest.raises(ValueError):
            coevolve_overlap(meanfield_oscillator(), UP, PLUS, [1.0, 0.0], "C", 1.0, 0.1)

    def test_normalization_checked(self):
        with pytest.raises(ValueError):
            coevolve_overlap(meanfield_oscillator(), UP, 2 * PLUS, [1.0, 0.0], "A", 1.0, 0.1)
        with pytest.raises(ValueError):
            hybrid_point(meanfield_oscillator(), [1.0], UP)


class TestPresets:
    def test_unknown(self):
        with pytest.raises(KeyError):
            get_preset("nope")

    def test_meanfield_initial(self):
        p = get_preset("meanfield-oscillator")
        np.testing.assert_allclose(p.initial.coords, [1, 0, R2, 0, 0, 0])
        assert expectation(PAULI_X, PhasePoint(Q2, p.initial.coords[2:])) == 0.0
