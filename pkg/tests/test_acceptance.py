"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary and when this file is run as a script.
"""

import time

import numpy as np
import pytest

from symclone.cli import main, run_ensemble, run_evolve, run_verify
from symclone.dynamics import coevolve_overlap, flow_symplectic_check
from symclone.maps import (
    MAPS,
    GaugeSpec,
    Method,
    TangentParams,
    closed_form_area,
    initial_point,
    linear_gauge,
    sample_object_state,
    self_replication,
    sweep_ratios,
    tangent_from_params,
)
from symclone.phase_space import (
    HermitianOperator,
    PhaseSpace,
    TangentVector,
    observable_field,
    poisson_bracket,
    symplectic_form,
    to_canonical,
)
from symclone.presets import PRESET_NAMES, get_preset, meanfield_oscillator

SEED = 7
N = 1000
RESULTS: dict[int, str] = {}


def record(number, title, passed, detail):
    RESULTS[number] = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    assert passed, RESULTS[number]


def _ratio_criterion(name, expected):
    parts, ok = [], True
    for method, tol in (("analytic", 1e-6), ("fd", 1e-5)):
        summary, _ = run_verify(name, N, SEED, method, tol)
        ok &= summary["pass"]
        parts.append(f"{method} max|r-{expected:g}|={summary['max_deviation']:.2e} (tol {tol:g})")
    return ok, parts


def test_criterion_01_self_replication_ratio(capsys):
    t0 = time.perf_counter()
    code = main(["verify", "--map", "self-replication", "-n", str(N), "--seed", str(SEED), "--tol", "1e-6"])
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    ok, parts = _ratio_criterion("self-replication", 2.0)
    passed = ok and code == 0 and elapsed < 5.0
    record(1, "self-replication ratio = 2", passed, "; ".join(parts) + f"; cli runtime {elapsed:.2f}s (< 5s)")


def test_criterion_02_quantum_cloning_ratio():
    ok, parts = _ratio_criterion("quantum-cloning", 1.0)
    control, _ = run_verify("quantum-cloning-fixed-machine", N, SEED, "analytic", None)
    dev = max(abs(control["observed_min"] - 1), abs(control["observed_max"] - 1))
    passed = ok and control["pass"]
    record(2, "quantum-machine cloning ratio = 1, fixed machine deviates", passed,
           "; ".join(parts) + f"; control max|r-1|={dev:.3f} (> 0.1)")


def test_criterion_03_hybrid_cloning_ratio():
    ok, parts = _ratio_criterion("hybrid-cloning", 1.0)
    record(3, "hybrid cloning ratio = 1", ok, "; ".join(parts))


def test_criterion_04_gauge_independence():
    u0 = sample_object_state(0, 0.0)
    smooth = linear_gauge(0.8, 0.3)
    smooth.check_gradient(u0)
    ref = sweep_ratios(self_replication(GaugeSpec.zero()), N, SEED).ratios
    worst = 0.0
    for gauge in (GaugeSpec.constant(1.3), smooth):
        worst = max(worst, float(np.max(np.abs(sweep_ratios(self_replication(gauge), N, SEED).ratios - ref))))
    record(4, "gauge independence", worst < 1e-9, f"max ratio change {worst:.2e} over theta in {{0, 1.3, smooth}} (tol 1e-9)")


def test_criterion_05_closed_form_area():
    rng = np.random.default_rng(SEED)
    m = self_replication()
    worst = 0.0
    for _ in range(N):
        u = sample_object_state(rng, 0.0)
        pg, ph = TangentParams(*rng.standard_normal(3)), TangentParams(*rng.standard_normal(3))
        g, h = (tangent_from_params(m, u, p, normalize=False) for p in (pg, ph))
        worst = max(worst, abs(symplectic_form(g, h) - closed_form_area(u, pg, ph)))
    record(5, "closed-form area", worst < 1e-12, f"max residual {worst:.2e} over {N} instances (tol 1e-12)")


def test_criterion_06_linear_flow_oracle():
    t0 = time.perf_counter()
    _, summary = run_evolve("linear-sigma-z", np.pi, 1e-3)
    elapsed = time.perf_counter() - t0
    res = summary["oracle_residual"]
    record(6, "sigma_z flow vs matrix exponential", res < 1e-8 and elapsed < 1.0,
           f"amplitude residual {res:.2e} at t={summary['t_final']} (tol 1e-8); runtime {elapsed:.3f}s (< 1s)")


def test_criterion_07_flow_symplecticity():
    p = get_preset("weinberg-quadratic")
    rng = np.random.default_rng(SEED)
    u, v = (TangentVector(p.initial, rng.standard_normal(4)) for _ in range(2))
    ratio = flow_symplectic_check(p.hamiltonian, p.initial, u, v, 1.0, 1e-3)
    record(7, "nonlinear flow preserves the form", abs(ratio - 1) < 1e-6, f"|ratio-1|={abs(ratio - 1):.2e} (tol 1e-6)")


def test_criterion_08_conservation():
    parts, ok = [], True
    for name in PRESET_NAMES:
        _, s = run_evolve(name, 10.0, 1e-3)
        ok &= s["norm_drift"] < 1e-8 and s["energy_drift"] < 1e-8
        parts.append(f"{name} norm {s['norm_drift']:.1e} energy {s['energy_drift']:.1e}")
    record(8, "conservation over t=10", ok, "; ".join(parts) + " (tol 1e-8)")


def test_criterion_09_meanfield_purity():
    _, delta, _ = run_ensemble("delta", 2.0, 1e-3)
    _, mix, _ = run_ensemble("two-point", 2.0, 1e-3)
    dev = float(np.max(np.abs(delta - 1)))
    passed = dev <= 1e-8 and mix[-1] < 0.999
    record(9, "mean-field purity", passed, f"delta max|P-1|={dev:.1e} (tol 1e-8); two-point P(t=2)={mix[-1]:.4f} (< 0.999)")


def test_criterion_10_shared_driver_overlap():
    rng = np.random.default_rng(SEED)
    mf = meanfield_oscillator()
    worst = 0.0
    for k in range(20):
        a, b = (sample_object_state(rng, 0.0) for _ in range(2))
        c0 = rng.standard_normal(2)
        ov = coevolve_overlap(mf, a, b, c0, "AB"[k % 2], 5.0, 1e-3)
        worst = max(worst, float(np.var(ov)))
    record(10, "shared-driver overlap constancy", worst < 1e-8, f"max variance {worst:.1e} over 20 pairs (tol 1e-8)")


def test_criterion_11_oracle_gates():
    rng = np.random.default_rng(SEED)
    worst_jac = {}
    for name in ("self-replication", "quantum-cloning", "hybrid-cloning"):
        m = MAPS[name]()
        worst = 0.0
        for _ in range(100):
            x = initial_point(m, sample_object_state(rng, 0.0))
            worst = max(worst, float(np.max(np.abs(m.jacobian(x, Method.ANALYTIC) - m.jacobian(x, Method.FINITE_DIFFERENCE)))))
        worst_jac[name] = worst
    q2 = PhaseSpace.quantum(2)
    worst_pb = 0.0
    for _ in range(100):
        a, b = HermitianOperator.random(2, rng), HermitianOperator.random(2, rng)
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        point = to_canonical(z / np.linalg.norm(z), q2)
        c = point.amplitudes()
        rhs = (np.vdot(c, a.commutator(b) @ c) / 1j).real
        worst_pb = max(worst_pb, abs(poisson_bracket(observable_field(a, q2), observable_field(b, q2), point) - rhs))
    passed = max(worst_jac.values()) < 1e-6 and worst_pb < 1e-9
    jac = ", ".join(f"{k} {v:.1e}" for k, v in worst_jac.items())
    record(11, "oracle gates", passed, f"jacobian fd-vs-analytic {jac} (tol 1e-6); bracket-commutator {worst_pb:.1e} (tol 1e-9)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
