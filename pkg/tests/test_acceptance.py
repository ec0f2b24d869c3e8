"""Acceptance criteria 1-10; each test records one PASS/FAIL line."""

import json
import math
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE_LINES
from strongalg import calculus
from strongalg.cli import main
from strongalg.core import Element, GermsAlgebra, KondratievAlgebra, MatrixAlgebra, vage_constant, validate_strong_inequality
from strongalg.factorization import solve_canonical_factorization, solve_pair_equations, verify_factorization
from strongalg.oracles import finite_section_solve, pointwise_inverse_oracle
from strongalg.serialization import wiener_from_json
from strongalg.wiener import WienerElement, b0_of_epsilon, cutoff_omega, uncovered_arcs, wiener_left_inverse, wiener_multiply

FIXTURES = Path(__file__).parent / "fixtures"
S = MatrixAlgebra(1)


def record(k, ok, detail):
    line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def scalar_symbol(coeffs):
    return WienerElement.from_coefficients(S, {n: [[c]] for n, c in coeffs.items()})


def test_criterion_1_graded_inequality():
    cases = [
        (MatrixAlgebra(1), 0, 0),
        (MatrixAlgebra(2), 0, 0),
        (MatrixAlgebra(4), 0, 0),
        (GermsAlgebra(degree=8), 1.0, 1.0),
        (GermsAlgebra(degree=8), 1.0, 0.5),
        (GermsAlgebra(degree=8), 0.5, 0.25),
        (KondratievAlgebra(variables=3, degree=3), 0, 2),
        (KondratievAlgebra(variables=3, degree=3), 1, 3),
        (KondratievAlgebra(variables=3, degree=3), 2, 5),
    ]
    reports = [validate_strong_inequality(alg, a, b, sample_count=1000, seed=i) for i, (alg, a, b) in enumerate(cases)]
    wallis = math.sqrt(float(np.prod(1.0 / (1.0 - 1.0 / (2.0 * np.arange(1, 10**7 + 1)) ** 2))))
    vc = vage_constant(0, 2).limit
    ok = all(r.passed for r in reports) and abs(vc - wallis) < 1e-6 and abs(vc - 1.25331) < 1e-5
    worst = max(r.worst_ratio / r.constant for r in reports)
    record(1, ok, f"9 ladder positions x 1000 pairs, worst ratio/A = {worst:.6f}, A_(2,0) = {vc:.8f}, Wallis = {wallis:.8f}")


def test_criterion_2_certificate_soundness():
    rng = np.random.default_rng(2024)
    instances = [
        (MatrixAlgebra(3), 0, 0),
        (GermsAlgebra(degree=6), 1.0, 0.5),
        (KondratievAlgebra(variables=2, degree=3), 0, 2),
    ]
    violations, calls = 0, 0
    for alg, alpha, beta in instances:
        A = alg.constant(beta, alpha)
        done = 0
        while done < 500:
            d = alg.random_data(rng)
            d = d * rng.uniform(0.01, 0.95) / (A * float(alg.norm_data(d, alpha)))
            res = calculus.neumann_inverse(Element(alg, d), alpha, beta)
            x = res.inverse
            violations += x.norm(beta) > res.bound.bound
            violations += (x.one_like() - x).norm(beta) > res.distance.bound
            done += 1
        calls += done
    record(2, violations == 0, f"{calls} successful inversions, {violations} certificate violations")


def test_criterion_3_matrix_dense_oracle():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m *= rng.uniform(0.01, 0.95) / np.linalg.norm(m, 2)
        x = calculus.neumann_inverse(Element(MatrixAlgebra(n), m), 0, 0).inverse.data
        worst = max(worst, float(np.max(np.abs(x - np.linalg.inv(np.eye(n) - m)))))
    record(3, worst <= 1e-10, f"200 contractions n <= 8, max deviation {worst:.3e}")


def test_criterion_4_b0_quadrature():
    rng = np.random.default_rng(4)
    t = -np.pi + 2 * np.pi * np.arange(10**4) / 10**4
    worst = 0.0
    for _ in range(20):
        a = WienerElement.random(S, rng, 32)
        at = a.evaluate_data(t).ravel()
        a0 = a.evaluate_data(0.0).ravel()[0]
        for eps in (0.2, 0.1, 0.05):
            w = cutoff_omega(eps, t)
            quad = np.mean(w * at + (1 - w) * a0)
            worst = max(worst, abs(b0_of_epsilon(a, eps).data[0, 0] - quad))
    record(4, worst <= 1e-6, f"20 symbols x 3 eps, max deviation {worst:.3e}")


def test_criterion_5_scalar_wiener_theorem():
    a = scalar_symbol({0: 2.0, 1: 1.0})
    res = wiener_left_inverse(a, tol=1e-6)
    n = np.arange(-64, 65)
    expect = np.where(n >= 0, (-1.0) ** np.abs(n) / 2.0 ** (np.abs(n) + 1), 0.0)
    got = res.inverse.padded(64).truncated(64).coeffs.ravel()
    dev = float(np.max(np.abs(got - expect)))
    prod = wiener_multiply(res.inverse, a)
    residual = (prod - prod.one_like()).norm(0)
    covered = not uncovered_arcs([c.arc for c in res.certificates])
    certified = all(c.contraction < 1 for c in res.certificates)
    ok = covered and certified and dev <= 1e-6 and residual <= 1e-6
    record(5, ok, f"{len(res.certificates)} certified centres, coefficient deviation {dev:.3e}, residual {residual:.3e}")


def test_criterion_6_matrix_wiener_theorem():
    rng = np.random.default_rng(6)
    alg = MatrixAlgebra(2)
    worst_res, worst_dev = 0.0, 0.0
    for _ in range(20):
        C = WienerElement.random(alg, rng, 8)
        a = 1 + 0.2 * C
        res = wiener_left_inverse(a, tol=1e-6)
        oracle = pointwise_inverse_oracle(a, 4096).inverse
        K = max(res.inverse.half_width, 32)
        dev = float(np.max(np.abs(res.inverse.padded(K).truncated(K).coeffs - oracle.truncated(K).coeffs)))
        worst_res = max(worst_res, res.residual)
        worst_dev = max(worst_dev, dev)
    ok = worst_res <= 1e-6 and worst_dev <= 1e-5
    record(6, ok, f"20 symbols I + 0.2C, worst residual {worst_res:.3e}, worst oracle deviation {worst_dev:.3e}")


def test_criterion_7_scalar_factorization():
    a_plus = scalar_symbol({0: 1.0, -1: -0.3})
    a_minus = scalar_symbol({0: 1.0, 1: -0.4})
    a = a_minus * a_plus
    res = solve_canonical_factorization(a, tol=1e-10)
    # normalize a_plus to unit constant term and move the constant into a_minus
    c = res.a_plus.coefficient(0).data[0, 0]
    got_plus, got_minus = (1 / c) * res.a_plus, c * res.a_minus
    K = 8
    dev = max(
        float(np.max(np.abs(got_plus.padded(K).truncated(K).coeffs - a_plus.padded(K).coeffs))),
        float(np.max(np.abs(got_minus.padded(K).truncated(K).coeffs - a_minus.padded(K).coeffs))),
    )
    log = res.iteration_log["x"]
    q = log.ratio
    inc = np.array(log.increments)
    predicted = math.ceil(math.log(1e-11 * (1 - q) / (q * inc[0])) / math.log(q)) + 1
    geometric = bool(np.all(inc[1:] <= q * inc[:-1] * (1 + 1e-9)))
    rate = log.observed_rate()
    ok = dev <= 1e-8 and geometric and rate <= q and log.iterations <= predicted
    record(
        7,
        ok,
        f"factor deviation {dev:.3e}, {log.iterations} iterations (bound {predicted}), fitted rate {rate:.4f} <= ratio {q:.2f}",
    )


def test_criterion_8_matrix_factorization():
    rng = np.random.default_rng(8)
    alg = MatrixAlgebra(2)
    worst_res, worst_fs, exact = 0.0, 0.0, True
    for _ in range(50):
        d = WienerElement.random(alg, rng, int(rng.integers(1, 5)), scale=rng.uniform(0.05, 0.5))
        a = 1 - d
        assert alg.constant(0, 0) * (1 - a).norm(0) <= 0.5 + 1e-12
        res = solve_canonical_factorization(a, tol=1e-10)
        exact &= res.membership["exact"]
        worst_res = max(worst_res, res.residual)
        one = a.one_like()
        x, _, _ = solve_pair_equations(d, one, one, tol=1e-12)
        ref = finite_section_solve(d, one, 150)
        K = min(x.half_width, 150)
        worst_fs = max(worst_fs, float(np.max(np.abs(x.padded(150).truncated(K).coeffs - ref.truncated(K).coeffs))))
        worst_fs = max(worst_fs, float(np.max(np.abs(res.a_plus_inv.padded(150).truncated(K).coeffs - ref.truncated(K).coeffs))))
    ok = worst_res <= 1e-8 and exact and worst_fs <= 1e-7
    record(8, ok, f"50 symbols, worst residual {worst_res:.3e}, supports exact = {exact}, finite-section deviation {worst_fs:.3e}")


def test_criterion_9_ordering_fixture():
    a = wiener_from_json(json.loads((FIXTURES / "symbol_factor_matrix.json").read_text()))
    res = solve_canonical_factorization(a, tol=1e-8)
    rep = verify_factorization(a, res, tol=1e-8)
    ok = rep.minus_plus_ok != rep.plus_minus_ok and rep.minus_plus_ok
    record(
        9,
        ok,
        f"a_minus a_plus residual {rep.residual_minus_plus:.3e}, a_plus a_minus residual {rep.residual_plus_minus:.3e}",
    )


def _strip_timestamp(raw):
    return b"\n".join(line for line in raw.splitlines() if b'"timestamp"' not in line)


def test_criterion_10_determinism(tmp_path):
    configs = sorted(p for p in FIXTURES.glob("*.json") if "task" in json.loads(p.read_text()))
    same = []
    for cfg in configs:
        task = json.loads(cfg.read_text())["task"]
        outs = []
        for k in range(2):
            out = tmp_path / f"{cfg.stem}_{k}.json"
            main([task, "--config", str(cfg), "--out", str(out)])
            outs.append(_strip_timestamp(out.read_bytes()))
        same.append(outs[0] == outs[1])
    record(10, len(configs) > 0 and all(same), f"{sum(same)}/{len(configs)} fixture configs byte-identical")
