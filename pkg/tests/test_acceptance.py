"""One test per acceptance criterion; each records a single pass/fail line."""
import math
import time

import numpy as np
import pytest

from dualis import approx, duality, equivalence, ising
from dualis.cli import main
from dualis.opscore import operator_norm, random_hermitian, random_state, random_unitary

RESULTS = {}
ARITIES = [(p, q) for p in range(4) for q in range(4) if 1 <= p + q <= 3]


def _record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def _maps(count=200, seed=20240101):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.choice([2, 3, 4, 6]))
        p, q = ARITIES[int(rng.integers(len(ARITIES)))]
        out.append((duality.random_duality_map(n, p, q, rng), random_hermitian(n, rng), rng))
    return out


def test_criterion_1_characterisation_round_trip():
    t0 = time.perf_counter()
    failures = 0
    for phi, A, rng in _maps():
        mix = [(w, random_hermitian(phi.n, rng)) for w in rng.dirichlet(np.ones(3))]
        ok = (duality.verify_spectral_axiom(phi, A, 1e-8).passed
              and duality.verify_convexity_identity(phi, mix, 1e-8).passed
              and duality.verify_projector_lemmas(phi, rng, 1e-8).passed)
        failures += not ok
    elapsed = time.perf_counter() - t0
    _record(1, failures == 0 and elapsed < 30,
            f"200 maps, {failures} failing, {elapsed:.2f}s (limit 30s)")


def test_criterion_2_three_way_equivalence():
    grid = equivalence.charge_grid()
    thermal_fail = entropic_fail = 0
    worst_offset = 0.0
    for phi, A, rng in _maps():
        thermal_fail += not equivalence.verify_thermal_axiom(phi, A, grid, 1e-8).passed
        phi_e = equivalence.derive_entropic_map(phi)
        audit = equivalence.verify_entropic_axioms(
            phi_e, None, [random_state(phi.n, rng) for _ in range(2)], int(rng.integers(2**31)), 1e-9)
        worst_offset = max(worst_offset, max(r.residual for r in audit))
        entropic_fail += not audit.passed
    rng = np.random.default_rng(7)
    caught = 0
    for _ in range(100):
        d, a, f = int(rng.integers(1, 6)), int(rng.integers(1, 4)), float(rng.uniform(0.25, 4))
        lam = rng.uniform(-3, 3, d)
        dual = np.repeat(f * lam, a)
        dual[int(rng.integers(dual.size))] += rng.choice([-1, 1]) * rng.uniform(1e-3, 0.5)
        caught += not equivalence.partition_equality(lam, dual, f, a, grid, 1e-8).passed
    _record(2, thermal_fail == 0 and entropic_fail == 0 and caught == 100,
            f"thermal failures {thermal_fail}/200, entropic failures {entropic_fail}/200 "
            f"(worst offset residual {worst_offset:.1e}), faults caught {caught}/100")


def test_criterion_3_spectrum_recovery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(500):
        d = int(rng.integers(1, 9))
        while True:
            spec = np.sort(rng.uniform(-5, 5, d))
            if d == 1 or np.min(np.diff(spec)) >= 0.05:
                break
        got = equivalence.reconstruct_spectrum(equivalence.power_sums(spec, d), d)
        worst = max(worst, float(np.max(np.abs(got - spec))))
    peel_ok = True
    for _ in range(50):
        d = int(rng.integers(1, 5))
        lam = rng.uniform(0.5, 3, d) * rng.choice([-1, 1], d)
        f, a = float(rng.uniform(0.3, 3)), int(rng.integers(1, 4))
        dual = np.repeat(f * lam, a)
        peel_ok &= equivalence.verify_peel_linf(lam, dual, f, (a, 1), 16).passed
        flipped = dual.copy()
        flipped[int(rng.integers(dual.size))] *= -1
        peel_ok &= not equivalence.verify_peel_linf(lam, flipped, f, (a, 1), 16).passed
    elapsed = time.perf_counter() - t0
    _record(3, worst <= 1e-6 and peel_ok and elapsed < 10,
            f"500 round trips, worst error {worst:.1e} (limit 1e-6), peel checks {'ok' if peel_ok else 'wrong'}, "
            f"{elapsed:.2f}s (limit 10s)")


def _orthogonal_ensemble(rng, dim=4):
    U = random_unitary(dim, rng)
    k = int(rng.integers(2, dim + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), k - 1, replace=False))
    comps = []
    for block in np.split(np.arange(dim), cuts):
        cols = U[:, block]
        comps.append((cols * rng.dirichlet(np.ones(len(block)))) @ cols.conj().T)
    return list(zip(rng.dirichlet(np.ones(k)), comps))


def test_criterion_4_entropy_lemmas():
    rng = np.random.default_rng(4)
    worst_orth = max(abs(equivalence.mixture_entropy_residual(_orthogonal_ensemble(rng))) for _ in range(100))
    least_generic = min(
        equivalence.mixture_entropy_residual([(p, random_state(4, rng)) for p in rng.dirichlet(np.ones(3))])
        for _ in range(100))
    wigner = []
    for a in (1, 2, 3):
        for p in range(a + 1):
            _, rep = equivalence.sample_wigner_extension(3, p, a - p, int(rng.integers(2**31)))
            wigner.append(rep.lhs if rep.passed else math.inf)
    _record(4, worst_orth <= 1e-9 and least_generic > 1e-6 and max(wigner) <= 1e-9,
            f"orthogonal residual max {worst_orth:.1e}, generic residual min {least_generic:.2e}, "
            f"Wigner offset error max {max(wigner):.1e}")


def test_criterion_5_state_map_compatibility():
    rng = np.random.default_rng(5)
    failures = 0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        p, q = int(rng.integers(1, 4)), int(rng.integers(0, 3))
        phi = duality.random_duality_map(n, p, q, rng)
        w = duality.StateMap(tuple(rng.dirichlet(np.ones(p))))
        H, rho = random_hermitian(n, rng), random_state(n, rng)
        t = float(rng.uniform(0, 2))
        ok = (duality.verify_born_rule(phi, w, H, rho, 1e-8).passed
              and duality.verify_time_dynamics(phi, w, H, rho, t, 1e-8).passed)
        failures += not ok
    _record(5, failures == 0, f"100 instances, {failures} failing")


def test_criterion_6_approximate_audits():
    rng = np.random.default_rng(6)
    counts = {"eigenvalue": 0, "partition": 0, "dynamics": 0, "compose": 0, "epsilon": 0}
    for i in range(100):
        n = int(rng.integers(1, 4))
        p, q = ARITIES[int(rng.integers(len(ARITIES)))]
        s = (0.01, 0.05)[i % 2]
        k = approx.ConstantK(1.0) if rng.random() < 0.5 else approx.NormScaled(float(rng.uniform(0.5, 2)))
        phi = approx.ApproxDuality.additive(duality.random_duality_map(n, p, q, rng), s,
                                            int(rng.integers(2**31)), k=k)
        H = random_hermitian(n, rng)
        counts["eigenvalue"] += not all(r.passed for r in approx.eigenvalue_bound(phi, H))
        delta = operator_norm(phi(H)) + float(rng.uniform(0, 1))
        counts["partition"] += not approx.partition_bound(phi, H, float(rng.uniform(0.1, 2)), delta).passed
        counts["dynamics"] += not approx.dynamics_bound(phi, None, H, random_state(phi.m, rng),
                                                        float(rng.uniform(0, 4))).passed
        outer = approx.ApproxDuality.additive(duality.random_duality_map(phi.m, 1, int(rng.integers(2)), rng),
                                              (0.01, 0.05)[(i // 2) % 2], int(rng.integers(2**31)),
                                              k=approx.NormScaled(1.0))
        comp = approx.compose_approx(outer, phi)
        counts["compose"] += not all(approx.audit_defect(comp, random_hermitian(n, rng)).passed for _ in range(3))
        counts["epsilon"] += comp.epsilon != phi.epsilon + outer.epsilon
    _record(6, not any(counts.values()),
            "100 perturbations, failures " + ", ".join(f"{k} {v}" for k, v in counts.items()))


def test_criterion_7_kramers_wannier():
    ising._broken_histogram.cache_clear()
    t0 = time.perf_counter()
    Ks = np.linspace(0.01, 5, 500)
    involution = max(abs(ising.dual_coupling(ising.dual_coupling(K)) - K) for K in Ks)
    kstar = ising.self_dual_coupling()
    shapes = [(r, c) for r in range(1, 26) for c in range(1, 26) if r * c <= ising.MAX_SITES]
    rz = max(ising.kw_relation_residual(ising.IsingLattice(r, c), kstar)[1] for r, c in shapes)
    trend = [ising.kw_relation_residual(ising.IsingLattice(s, s), 0.3)[0] for s in (2, 3, 4, 5)]
    decreasing = all(a > b for a, b in zip(trend, trend[1:]))
    lat = ising.IsingLattice(4, 4)
    series = max(abs(ising.expansion_leading_terms(K, 16, regime) / ising.partition_at(lat, K) - 1)
                 for K, regime in [(1.0, "low"), (1.5, "low"), (2.0, "low"), (3.0, "low"),
                                   (0.05, "high"), (0.1, "high"), (0.15, "high"), (0.2, "high")])
    cli_code = main(["kw", "--lattice", "5x5", "--seed", "1"])
    elapsed = time.perf_counter() - t0
    ok = (involution <= 1e-12 and abs(kstar - 0.4406868) <= 1e-7 and rz <= 1e-9 and decreasing
          and series <= 0.05 and cli_code == 0 and elapsed < 60)
    _record(7, ok,
            f"involution {involution:.1e}, K* {kstar:.10f}, residual_Z max {rz:.1e} over {len(shapes)} lattices, "
            f"residual_f {' > '.join(f'{v:.4f}' for v in trend)}, series error max {series:.3f}, "
            f"{elapsed:.2f}s (limit 60s)")


def test_criterion_8_determinism(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    csvs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [main(["suite", "--seed", "20240101", "--json", str(j), "--csv", str(c)])
             for j, c in zip(paths, csvs)]
    same = paths[0].read_bytes() == paths[1].read_bytes() and csvs[0].read_bytes() == csvs[1].read_bytes()
    _record(8, same and codes == [0, 0], f"suite exit codes {codes}, reports byte-identical: {same}")
