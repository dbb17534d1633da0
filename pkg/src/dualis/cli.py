"""Command-line verification harness: ``dualis <command> [options]``.

Exit codes: 0 when every check passes, 1 when some check fails (reports are
still written), 2 on bad input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import approx, duality, equivalence, ising, opscore
from .errors import DualisError, NonConvergence, NonRealRoot
from .reports import Report
from .serialize import dumps

SCHEMA = "dualis/1"
DEFAULT_SEED = 20240101
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Raised for anything that should end with exit code 2."""


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def _digest(inputs: dict) -> str:
    return hashlib.sha256(dumps(inputs, indent=0).encode()).hexdigest()[:16]


class Collector:
    def __init__(self):
        self.records: List[dict] = []

    def add(self, name: str, report: Report, **inputs) -> None:
        self.records.append({
            "name": name,
            "inputs_digest": _digest(inputs),
            "lhs": float(report.lhs),
            "rhs": float(report.rhs),
            "pass": bool(report.passed),
        })

    def flag(self, name: str, ok: bool, lhs: float = 0.0, rhs: float = 0.0, **inputs) -> None:
        self.add(name, Report(name, bool(ok), lhs, rhs), **inputs)

    def report(self, command: str, config: dict) -> dict:
        recs = sorted(self.records, key=lambda r: r["name"])
        passed = sum(r["pass"] for r in recs)
        return {
            "schema": SCHEMA,
            "command": command,
            "config": config,
            "records": recs,
            "summary": {"total": len(recs), "passed": passed, "failed": len(recs) - passed},
        }


def _child_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def _tol(args, default: float) -> float:
    return args.tol if args.tol is not None else default


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def suite_verify_map(args, out: Collector) -> None:
    maps = _input_maps(args)
    tol = _tol(args, 1e-8)
    for label, phi, rng in maps:
        A = opscore.random_hermitian(phi.n, rng)
        B = opscore.random_hermitian(phi.n, rng)
        out.add(f"{label}/spectral_axiom", duality.verify_spectral_axiom(phi, A, tol), map=label)
        w = rng.dirichlet(np.ones(3))
        C = opscore.HermitianOperator(A.matrix - 0.5 * B.matrix)
        mix = [(float(w[0]), A), (float(w[1]), B), (float(w[2]), C)]
        out.add(f"{label}/convexity_identity", duality.verify_convexity_identity(phi, mix, tol), map=label)
        out.add(f"{label}/projector_lemmas", duality.verify_projector_lemmas(phi, rng, max(tol, 1e-9)),
                map=label)
        if phi.p >= 1:
            sm = duality.StateMap(tuple(rng.dirichlet(np.ones(phi.p))))
            rho = opscore.random_state(phi.n, rng)
            out.add(f"{label}/born_rule", duality.verify_born_rule(phi, sm, A, rho, tol), map=label)
            t = float(rng.uniform(0, 2))
            out.add(f"{label}/time_dynamics", duality.verify_time_dynamics(phi, sm, A, rho, t, tol),
                    map=label, t=t)
            img = duality.apply_state_map(phi, sm, rho)
            gap = abs(opscore.von_neumann_entropy(img) - opscore.von_neumann_entropy(rho) - sm.entropy())
            out.flag(f"{label}/state_map_entropy", gap <= 1e-9, gap, 1e-9, map=label)
        outer = duality.random_duality_map(phi.m, 1, int(rng.integers(0, 2)), rng)
        comp = duality.compose_exact(outer, phi)
        direct = outer(phi(A)).matrix
        dev = float(np.max(np.abs(comp(A).matrix - direct)))
        bound = 1e-9 * max(1.0, float(np.max(np.abs(direct))))
        out.flag(f"{label}/composition", dev <= bound, dev, bound, map=label)


def _input_maps(args) -> List[Tuple[str, duality.DualityMap, np.random.Generator]]:
    if getattr(args, "input", None):
        data = _load_json(args.input)
        items = data if isinstance(data, list) else [data]
        maps = []
        for i, item in enumerate(items):
            try:
                phi = duality.DualityMap.from_json(item)
            except (DualisError, ValueError, TypeError, KeyError, AttributeError) as exc:
                raise InputError(f"{args.input}: entry {i}: {exc}") from exc
            maps.append((f"input/{i}", phi, _child_rng(args.seed, 999, i)))
        return maps
    maps = []
    for n in args.dims:
        for p, q in args.arities:
            for i in range(args.count):
                rng = _child_rng(args.seed, n, p, q, i)
                phi = duality.random_duality_map(n, p, q, rng)
                maps.append((f"n={n}/p={p},q={q}/i={i}", phi, rng))
    return maps


def suite_equivalence(args, out: Collector) -> None:
    tol = _tol(args, 1e-8)
    grid = equivalence.charge_grid()
    for label, phi, rng in _input_maps(args):
        A = opscore.random_hermitian(phi.n, rng)
        out.add(f"{label}/thermal_axiom", equivalence.verify_thermal_axiom(phi, A, grid, tol), map=label)
        ent = equivalence.derive_entropic_map(phi)
        states = [opscore.random_state(phi.n, rng) for _ in range(3)]
        audit = equivalence.verify_entropic_axioms(ent, None, states, seed=int(rng.integers(2**32)))
        worst = max(r.residual for r in audit.offsets)
        out.flag(f"{label}/entropic_offset", audit.passed, worst, equivalence.ENTROPY_TOL, map=label)
        # converse: a spectrum pushed off proportionality must break the partition equality
        lam = opscore.eigvalsh(A)
        bad = np.repeat(phi.f(A) * lam, phi.alpha)
        bad[int(rng.integers(bad.size))] += 1e-3
        rep = equivalence.partition_equality(lam, bad, phi.f(A), phi.alpha, grid, tol)
        out.flag(f"{label}/converse_detects_fault", not rep.passed, rep.lhs, tol, map=label)

    for alpha in (1, 2, 3):
        _, rep = equivalence.sample_wigner_extension(3, alpha - 1, 1, _child_rng(args.seed, 77, alpha))
        out.add(f"wigner/alpha={alpha}", rep, alpha=alpha)

    for i in range(5):
        rng = _child_rng(args.seed, 55, i)
        n = 4
        V = opscore.random_unitary(n, rng)
        k = int(rng.integers(1, n))
        r1 = V[:, :k] @ np.diag(rng.dirichlet(np.ones(k))) @ V[:, :k].conj().T
        r2 = V[:, k:] @ np.diag(rng.dirichlet(np.ones(n - k))) @ V[:, k:].conj().T
        res = equivalence.mixture_entropy_residual([(0.5, r1), (0.5, r2)])
        out.flag(f"mixture/orthogonal/i={i}", abs(res) <= 1e-9, abs(res), 1e-9, i=i)
        g1, g2 = opscore.random_state(n, rng), opscore.random_state(n, rng)
        res = equivalence.mixture_entropy_residual([(0.5, g1), (0.5, g2)])
        out.flag(f"mixture/generic/i={i}", res > 1e-6, res, 1e-6, i=i)

    for i in range(10):
        rng = _child_rng(args.seed, 66, i)
        d = int(rng.integers(1, 9))
        spec = _spaced_spectrum(rng, d)
        try:
            got = equivalence.reconstruct_spectrum(equivalence.power_sums(spec, d), d)
            err = float(np.max(np.abs(got - spec)))
        except (NonRealRoot, NonConvergence):
            err = math.inf
        out.flag(f"recover/i={i}", err <= 1e-6, err, 1e-6, d=d)
    out.add("peel/duplicated", equivalence.verify_peel_linf([1, 2], [1, 1, 2, 2], 1.0, (2, 1), 8))
    flipped = equivalence.verify_peel_linf([1, 2], [1, 1, 2, -2], 1.0, (2, 1), 8)
    out.flag("peel/sign_flip_detected", not flipped.passed, flipped.lhs, flipped.rhs)


def _spaced_spectrum(rng: np.random.Generator, d: int, gap: float = 0.05) -> np.ndarray:
    while True:
        s = np.sort(rng.uniform(-5, 5, d))
        if d == 1 or np.min(np.diff(s)) >= gap:
            return s


def suite_approx(args, out: Collector) -> None:
    for label, phi, rng in _input_maps(args):
        for s in (0.01, 0.05):
            tag = f"{label}/s={s}"
            H = opscore.random_hermitian(phi.n, rng)
            k = approx.NormScaled(1.0) if rng.random() < 0.5 else approx.ConstantK(1.0)
            ap = approx.ApproxDuality.additive(phi, s, seed=int(rng.integers(2**32)), k=k,
                                               eta=float(rng.uniform(0, 0.1)))
            out.add(f"{tag}/defect", approx.audit_defect(ap, H), map=label, s=s)
            eig = approx.eigenvalue_bound(ap, H)
            worst = max(eig, key=lambda r: r.lhs - r.rhs)
            out.flag(f"{tag}/eigenvalues", all(eig), worst.lhs, worst.rhs, map=label, s=s)
            beta = float(rng.uniform(0.1, 2.0))
            delta = float(rng.uniform(0.5, 3.0)) * opscore.operator_norm(ap(H))
            out.add(f"{tag}/partition", approx.partition_bound(ap, H, beta, delta), map=label, s=s)
            rho = opscore.random_state(phi.m, rng)
            t = float(rng.uniform(0, 4))
            out.add(f"{tag}/dynamics", approx.dynamics_bound(ap, None, H, rho, t), map=label, s=s)
            outer = approx.ApproxDuality.additive(
                duality.random_duality_map(phi.m, 1, 0, rng), 0.02, seed=int(rng.integers(2**32)))
            comp = approx.compose_approx(outer, ap)
            out.add(f"{tag}/composition_defect", approx.audit_defect(comp, H), map=label, s=s)
            out.flag(f"{tag}/epsilon_additive", comp.epsilon == ap.epsilon + outer.epsilon,
                     comp.epsilon, ap.epsilon + outer.epsilon, map=label, s=s)
            if phi.f(H) > 0:
                other = duality.DualityMap(phi.n, phi.p, phi.q, opscore.random_unitary(phi.m, rng),
                                           duality.Constant(abs(phi.f(H)) * float(rng.uniform(0.5, 2))))
                out.add(f"{tag}/similar_maps", approx.similar_map_bound(phi, other, H), map=label)
            out.add(f"{tag}/same_map_two_inputs",
                    approx.same_map_two_inputs_bound(phi, H, opscore.random_hermitian(phi.n, rng)),
                    map=label)


def suite_kw(args, out: Collector, rows_out: Optional[list] = None) -> None:
    lat = args.lattice
    Ks = args.K
    for K in Ks:
        inv = abs(ising.dual_coupling(ising.dual_coupling(K)) - K)
        out.flag(f"kw/involution/K={K!r}", inv <= 1e-12, inv, 1e-12, K=K)
    kstar = ising.self_dual_coupling()
    out.flag("kw/self_dual_point", abs(kstar - 0.4406868) <= 1e-7, abs(kstar - 0.4406868), 1e-7)
    _, rz = ising.kw_relation_residual(lat, kstar)
    out.flag(f"kw/self_dual_residual_Z/{lat.rows}x{lat.cols}", rz <= 1e-9, rz, 1e-9)
    side = max(lat.rows, lat.cols)
    sizes = [s for s in range(2, side + 1) if s * s <= ising.MAX_SITES]
    trend = [ising.kw_relation_residual(ising.IsingLattice(s, s), 0.3)[0] for s in sizes]
    for a, b, s in zip(trend, trend[1:], sizes[1:]):
        out.flag(f"kw/residual_f_decreases/{s - 1}->{s}", b < a, b, a)
    for K, regime in ((2.0, "low"), (0.1, "high")):
        est = ising.expansion_leading_terms(K, lat.N, regime)
        rel = abs(est / ising.partition_at(lat, K) - 1)
        out.flag(f"kw/expansion_{regime}/{lat.rows}x{lat.cols}", rel <= 0.05, rel, 0.05, K=K)
    phi, tmap = ising.kw_duality_map(1.0, 0.5)
    H = np.diag([-1.0, 1.0])
    out.add("kw/map_spectral_axiom", duality.verify_spectral_axiom(phi, H, 1e-8))
    out.add("kw/map_thermal_axiom", equivalence.verify_thermal_axiom(phi, H, equivalence.charge_grid()))
    cond = abs(1.0 * tmap(0.5) - ising.dual_coupling(0.5))
    out.flag("kw/temperature_map_condition", cond <= 1e-12, cond, 1e-12)
    if rows_out is not None:
        rows_out.extend(ising.kw_sweep(lat, Ks))


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

def fixture_values(seed: int) -> Dict[str, Dict[str, object]]:
    """Golden values for every module; deterministic given ``seed``."""
    rng = lambda *k: _child_rng(seed, 4242, *k)  # noqa: E731
    sy = np.array([[0, -1j], [1j, 0]])
    H6 = opscore.random_hermitian(6, rng(1))
    rho4 = opscore.random_state(4, rng(2))
    U4 = opscore.random_unitary(4, rng(3))
    phi = duality.random_duality_map(3, 1, 1, rng(4))
    A3 = opscore.random_hermitian(3, rng(5))
    lat2 = ising.IsingLattice(2, 2)
    hist = ising.enumerate_energies(lat2)
    ap = approx.ApproxDuality.additive(duality.DualityMap.canonical(2), 0.01, seed=int(rng(6).integers(2**32)))
    return {
        "opscore": {
            "entropy_diag": opscore.von_neumann_entropy(np.diag([0.25, 0.75])),
            "expm_diag": list(np.diag(opscore.expm_hermitian(np.diag([0.0, 1.0]), -1.0).matrix).real),
            "block_embed_conj_sigma_y_imag": list(opscore.block_embed(sy, 0, 1).matrix.imag.ravel()),
            "seeded_hermitian_spectrum": list(opscore.eigvalsh(H6)),
            "seeded_state_entropy": opscore.von_neumann_entropy(rho4),
            "seeded_unitary_abs00": float(abs(U4[0, 0])),
        },
        "duality": {
            "apply_scaled_embed": list(np.diag(duality.DualityMap.canonical(2, 1, 1, duality.Constant(2.0))(
                np.diag([1.0, 3.0])).matrix).real),
            "composed_constant": duality.compose_exact(
                duality.DualityMap.canonical(2, f=duality.Constant(3.0)),
                duality.DualityMap.canonical(2, f=duality.Constant(2.0))).f.constant_value,
            "seeded_map_image_spectrum": list(opscore.eigvalsh(phi(A3))),
            "seeded_map_scale": phi.f(A3),
        },
        "equivalence": {
            "power_sums_123": list(equivalence.power_sums([1, 2, 3], 3).sums),
            "reconstruct_6_14_36": list(equivalence.reconstruct_spectrum(
                equivalence.PowerSumSequence((1, 1), (6, 14, 36)), 3)),
            "thermal_identity_diag01": 1 + math.exp(-1),
            "mixture_identical_halves": equivalence.mixture_entropy_residual(
                [(0.5, np.eye(2) / 2), (0.5, np.eye(2) / 2)]),
            "seeded_mixture_residual": equivalence.mixture_entropy_residual(
                [(0.3, rho4), (0.7, opscore.random_state(4, rng(7)))]),
        },
        "approx": {
            "defect_scale_001": approx.defect(ap, np.diag([1.0, -0.5])),
            "similar_maps_rhs": approx.similar_map_bound(
                duality.DualityMap.canonical(2), duality.DualityMap.canonical(2, f=duality.Constant(4.0)),
                np.diag([1.0, 0.0])).rhs,
            "seeded_dynamics_lhs": approx.dynamics_bound(ap, None, np.diag([1.0, -1.0]),
                                                         opscore.random_state(2, rng(8)), 2.0).lhs,
        },
        "ising": {
            "hist_2x2_energies": list(hist.energies),
            "hist_2x2_counts": list(hist.counts),
            "dual_coupling_05": ising.dual_coupling(0.5),
            "self_dual": ising.self_dual_coupling(),
            "kw_scale_J1_b05": duality.KramersWannier(1.0, 0.5).constant_value,
            "residual_f_2x2_K03": ising.kw_relation_residual(lat2, 0.3)[0],
            "Z_2x2_Kstar": ising.partition_at(lat2, ising.SELF_DUAL_K),
        },
    }


def _compare(expected, got, path: str, rtol: float, problems: List[str]) -> None:
    if isinstance(expected, list):
        if not isinstance(got, list) or len(got) != len(expected):
            problems.append(f"{path}: length or type differs")
            return
        for i, (e, g) in enumerate(zip(expected, got)):
            _compare(e, g, f"{path}[{i}]", rtol, problems)
        return
    e, g = float(expected), float(got)
    if not abs(e - g) <= rtol * max(1.0, abs(e)):
        problems.append(f"{path}: expected {e!r}, got {g!r}")


def run_fixtures(args) -> int:
    folder = Path(args.dir)
    values = fixture_values(args.seed)
    if args.action == "generate":
        folder.mkdir(parents=True, exist_ok=True)
        for module, vals in sorted(values.items()):
            doc = {"schema": SCHEMA, "module": module, "seed": int(args.seed),
                   "values": dict(sorted(vals.items()))}
            (folder / f"{module}.json").write_text(dumps(doc))
        print(f"wrote {len(values)} fixture files to {folder}")
        return EXIT_OK
    problems: List[str] = []
    for module, vals in sorted(values.items()):
        path = folder / f"{module}.json"
        if not path.is_file():
            raise InputError(f"missing fixture file {path}")
        doc = _load_json(path)
        stored = doc.get("values") if isinstance(doc, dict) else None
        if not isinstance(stored, dict):
            raise InputError(f"{path}: no 'values' object")
        for name, got in sorted(vals.items()):
            if name not in stored:
                problems.append(f"{module}.{name}: missing from fixture")
                continue
            try:
                _compare(stored[name], got, f"{module}.{name}", args.fixture_rtol, problems)
            except (TypeError, ValueError):
                problems.append(f"{module}.{name}: not numeric")
    for p in problems:
        print(f"MISMATCH {p}")
    print(f"fixtures: {len(problems)} mismatching field(s)")
    return EXIT_FAIL if problems else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _int_list(text: str) -> List[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("dimensions must be positive integers")
    return vals


def _arity_list(text: str) -> List[Tuple[int, int]]:
    out = []
    for item in text.split(","):
        try:
            p, q = (int(x) for x in item.split(":"))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"arity must look like p:q, got {item!r}") from exc
        if p < 0 or q < 0 or p + q < 1:
            raise argparse.ArgumentTypeError(f"arity {item!r} needs p, q >= 0 and p + q >= 1")
        out.append((p, q))
    return out


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _couplings(text: str) -> List[float]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if item in ("self-dual", "kstar"):
            out.append(ising.self_dual_coupling())
            continue
        try:
            K = float(item)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad coupling {item!r}") from exc
        if not K > 0:
            raise argparse.ArgumentTypeError("couplings must be positive")
        out.append(K)
    return out


def _lattice(text: str) -> ising.IsingLattice:
    try:
        return ising.IsingLattice.parse(text)
    except DualisError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def _default_seed() -> int:
    env = os.environ.get("DUALIS_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise InputError(f"DUALIS_SEED must be an integer, got {env!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $DUALIS_SEED)")
    common.add_argument("--json", dest="json_path", default=None, help="write the JSON report here")
    common.add_argument("--csv", dest="csv_path", default=None, help="write sweep CSV here")
    common.add_argument("--tol", type=_positive_float, default=None, help="override check tolerance")
    common.add_argument("--dims", type=_int_list, default=[2, 3, 4], help="source dimensions, e.g. 2,4")
    common.add_argument("--arities", type=_arity_list, default=[(1, 0), (0, 1), (1, 1), (2, 1)],
                        help="arities p:q, e.g. 1:0,1:1")
    common.add_argument("--count", type=int, default=2, help="random maps per (dim, arity)")
    common.add_argument("--input", default=None, help="JSON file with one or more duality maps")

    parser = _Parser(prog="dualis", description="Verify duality maps between quantum systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("verify-map", parents=[common], help="axioms, state map and composition")
    sub.add_parser("equivalence", parents=[common], help="thermal and entropic characterisations")
    sub.add_parser("approx-audit", parents=[common], help="approximate-duality bounds")
    kw = sub.add_parser("kw", parents=[common], help="Kramers-Wannier checks and sweeps")
    kw.add_argument("--K", type=_couplings, default=[0.3, ising.SELF_DUAL_K],
                    help="couplings, comma separated; 'self-dual' means the exact fixed point")
    kw.add_argument("--lattice", type=_lattice, default=ising.IsingLattice(4, 4), help="e.g. 4x4")
    rec = sub.add_parser("recover-spectrum", parents=[common], help="spectrum from power sums")
    rec.add_argument("--moments", type=_float_list, default=None, help="m_1,...,m_P")
    rec.add_argument("--d", type=int, default=None, help="number of eigenvalues (default: P)")
    rec.add_argument("--alpha", default="1/1", help="duplication factor x/y")
    suite = sub.add_parser("suite", parents=[common], help="every suite in one report")
    suite.add_argument("--K", type=_couplings, default=[0.3, ising.SELF_DUAL_K])
    suite.add_argument("--lattice", type=_lattice, default=ising.IsingLattice(4, 4))
    fx = sub.add_parser("fixtures", parents=[common], help="golden-file fixtures")
    fx.add_argument("action", choices=["generate", "check"])
    fx.add_argument("--dir", default="fixtures", help="fixture directory")
    fx.add_argument("--fixture-rtol", type=_positive_float, default=1e-9)
    return parser


def _load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def _parse_alpha(text: str) -> Tuple[int, int]:
    try:
        x, _, y = text.partition("/")
        a = (int(x), int(y or 1))
    except ValueError as exc:
        raise InputError(f"alpha must look like x/y, got {text!r}") from exc
    if a[0] < 1 or a[1] < 1:
        raise InputError("alpha must be positive")
    return a


def run_recover(args, out: Collector) -> List[float]:
    if args.input:
        try:
            ps = equivalence.PowerSumSequence.from_json(_load_json(args.input))
        except DualisError as exc:
            raise InputError(str(exc)) from exc
    elif args.moments:
        try:
            ps = equivalence.PowerSumSequence(_parse_alpha(args.alpha), tuple(args.moments))
        except DualisError as exc:
            raise InputError(str(exc)) from exc
    else:
        raise InputError("give --moments or --input")
    d = args.d if args.d is not None else ps.P
    if not 1 <= d <= ps.P:
        raise InputError(f"--d must be between 1 and {ps.P}")
    try:
        spec = equivalence.reconstruct_spectrum(ps, d)
    except (NonRealRoot, NonConvergence) as exc:
        out.flag("recover/roots", False, math.inf, 0.0)
        print(f"recovery failed: {exc}", file=sys.stderr)
        return []
    x, y = ps.alpha
    redo = equivalence.power_sums(spec, ps.P).sums
    worst = 0.0
    ok = True
    for k, (m, r) in enumerate(zip(ps.sums, redo)):
        target = m * y / x
        gap = abs(r - target)
        if k < d:
            ok &= gap <= 1e-6 * max(1.0, abs(target))
        worst = max(worst, gap / max(1.0, abs(target)))
    out.flag("recover/power_sums_match", ok, worst, 1e-6, moments=list(ps.sums), d=d)
    return [float(v) for v in spec]


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    t0 = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        if args.count < 1:
            raise InputError("--count must be positive")
        if args.command == "fixtures":
            return run_fixtures(args)

        out = Collector()
        sweep: list = []
        printed: Optional[List[float]] = None
        if args.command == "verify-map":
            suite_verify_map(args, out)
        elif args.command == "equivalence":
            suite_equivalence(args, out)
        elif args.command == "approx-audit":
            suite_approx(args, out)
        elif args.command == "kw":
            suite_kw(args, out, sweep)
        elif args.command == "recover-spectrum":
            printed = run_recover(args, out)
        elif args.command == "suite":
            suite_verify_map(args, out)
            suite_equivalence(args, out)
            suite_approx(args, out)
            suite_kw(args, out, sweep)
    except InputError as exc:
        print(f"dualis: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DualisError as exc:
        print(f"dualis: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    config = {
        "seed": int(args.seed),
        "dims": list(args.dims),
        "arities": [list(a) for a in args.arities],
        "count": int(args.count),
        "tol": args.tol,
    }
    if args.command in ("kw", "suite"):
        config["K"] = list(args.K)
        config["lattice"] = f"{args.lattice.rows}x{args.lattice.cols}"
    report = out.report(args.command, config)
    if printed is not None:
        report["spectrum"] = printed
        if printed:
            print(" ".join(f"{v:.10g}" for v in printed))
    _write(args.json_path, dumps(report))
    if args.json_path:
        meta = {"wall_time_s": time.perf_counter() - t0,
                "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        _write(args.json_path + ".meta.json", dumps(meta))
    if sweep:
        text = ising.sweep_csv(sweep)
        _write(args.csv_path, text)
    for r in report["records"]:
        if not r["pass"]:
            print(f"FAIL {r['name']}: lhs={r['lhs']:.6g} rhs={r['rhs']:.6g}")
    s = report["summary"]
    print(f"{args.command}: {s['passed']}/{s['total']} checks passed")
    return EXIT_OK if s["failed"] == 0 else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
