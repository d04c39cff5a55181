"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""
from __future__ import annotations

import math
import time

import numpy as np

from spinsat import analysis, cnf, ising
from spinsat.anneal import Schedule, anneal, batch_anneal, trajectory_csv
from spinsat.cli import derive_seed, main as cli_main
from spinsat.cnf import generate_random_3sat, parse_dimacs_file
from spinsat.ising import GADGET_CORRECTED, GADGET_PAPER_LITERAL, exhaustive_core_minima
from spinsat.satcore import backbone, brute_force_models, enumerate_models


def check(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[criterion {num:02d}] {name}: {status}{suffix}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def small_formula_suite():
    """200 deterministic random formulas with n <= 5, m <= 8."""
    for i in range(200):
        n = 3 + i % 3
        m = 1 + i % 8
        yield generate_random_3sat(n, m, seed=9000 + i)


def equivalence_violations(f, gadget_mode) -> int:
    """Count ground-state equivalence breaks for one formula and mode."""
    H = ising.compile(f, gadget_mode=gadget_mode)
    minima = exhaustive_core_minima(H)
    normalized = [value - H.energy_floor for value in minima]
    best = min(normalized)
    models = set(brute_force_models(f).models)
    n = f.num_vars
    argmin = {
        tuple(bool((k >> v) & 1) for v in range(n))
        for k, value in enumerate(normalized)
        if value == best
    }
    if models:
        return int(best != 0 or argmin != models)
    return int(not best > 0)


def test_criterion_01_parser_fidelity(uf20_paths):
    start = time.perf_counter()
    ratios = []
    for path in uf20_paths:
        f = parse_dimacs_file(path)
        assert (f.num_vars, f.num_clauses) == (20, 91)
        ratios.append(cnf.clause_ratio(f))
    elapsed = time.perf_counter() - start
    ok = all(r == 4.55 for r in ratios) and elapsed < 1.0
    check(1, "parser fidelity (n=20, m=91, ratio 4.55)", ok,
          f"{len(uf20_paths)} files in {elapsed:.3f}s")


def test_criterion_02_ground_state_equivalence():
    start = time.perf_counter()
    failures = sum(
        equivalence_violations(f, GADGET_CORRECTED) for f in small_formula_suite()
    )
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 30.0
    check(2, "ground-state equivalence on 200 random formulas", ok,
          f"violations={failures}, {elapsed:.1f}s")


def test_criterion_03_clause_polynomial_oracle():
    import itertools

    from spinsat.cnf import Clause, Literal

    patterns = [signs for k in (3, 2) for signs in itertools.product((1, -1), repeat=k)]
    assert len(patterns) == 12
    mismatches = 0
    for signs in patterns:
        clause = Clause(tuple(Literal(v, s) for v, s in enumerate(signs)))
        poly = ising.clause_polynomial(clause)
        for spins in itertools.product((-1, 1), repeat=len(signs)):
            violated = not any(spins[lit.var] == lit.sign for lit in clause.literals)
            if poly.evaluate(spins) != int(violated):
                mismatches += 1
    check(3, "clause polynomial equals violation indicator", mismatches == 0,
          f"{len(patterns)} sign patterns, mismatches={mismatches}")


def test_criterion_04_gadget_correction_regression():
    literal_violations = 0
    corrected_violations = 0
    for f in small_formula_suite():
        literal_violations += equivalence_violations(f, GADGET_PAPER_LITERAL)
        corrected_violations += equivalence_violations(f, GADGET_CORRECTED)
    ok = literal_violations >= 1 and corrected_violations == 0
    check(4, "paper-literal gadget demonstrably breaks ground states", ok,
          f"literal violations={literal_violations}/200, corrected={corrected_violations}/200")


def test_criterion_05_backbone_consistency(uf20_formulas):
    worst_scan = 0.0
    equal_checked = 0
    for f in uf20_formulas:
        start = time.perf_counter()
        exact_models = brute_force_models(f)
        worst_scan = max(worst_scan, time.perf_counter() - start)
        exact = backbone(exact_models, f.num_vars)
        capped = backbone(enumerate_models(f, cap=120), f.num_vars)
        assert set(exact.fixed_vars) <= set(capped.fixed_vars), f.source_name
        if len(exact_models.models) <= 120:
            equal_checked += 1
            assert capped.fixed_vars == exact.fixed_vars, f.source_name
            assert capped.exact
    ok = worst_scan < 5.0
    check(5, "capped backbone consistent with exhaustive scan", ok,
          f"{equal_checked}/{len(uf20_formulas)} instances below cap, worst scan {worst_scan:.2f}s")


def test_criterion_06_slack_window(uf20_formulas):
    values = []
    for f in uf20_formulas[:10]:
        models = brute_force_models(f).models
        assert models, f.source_name
        values.append(sum(cnf.mean_slack(f, m) for m in models) / len(models))
    ok = all(1.50 <= v <= 1.90 for v in values)
    check(6, "mean slack over exact models within [1.50, 1.90]", ok,
          f"min={min(values):.3f}, max={max(values):.3f}")


def test_criterion_07_annealing_determinism(uf20_formulas):
    sched = Schedule()
    pairs = [(ising.compile(f), f) for f in uf20_formulas[:3]]
    seeds = [derive_seed(0, f.source_name) for _, f in pairs]
    first = [trajectory_csv(t) for t in batch_anneal(pairs, sched, seeds, workers=1)]
    second = [trajectory_csv(t) for t in batch_anneal(pairs, sched, seeds, workers=1)]
    parallel = [trajectory_csv(t) for t in batch_anneal(pairs, sched, seeds, workers=3)]
    ok = first == second == parallel
    check(7, "trajectory CSVs byte-identical across runs and serial/parallel", ok,
          f"{len(pairs)} instances, {sched.steps} steps")


def test_criterion_08_cooling_behavior(uf20_formulas):
    start = time.perf_counter()
    sched = Schedule()
    instances = [(ising.compile(f), f) for f in uf20_formulas[:10]]
    head_len = math.ceil(0.2 * (sched.steps + 1))
    cooling_ok = True
    energies, magnetizations = [], []
    for H, f in instances:
        heads, tails = [], []
        for k in range(20):
            traj = anneal(H, f, sched, seed=derive_seed(k, f.source_name))
            heads.append(float(np.mean(traj.energy_logic[:head_len])))
            tails.append(analysis.tail_mean(traj.energy_logic))
            energies.append(analysis.tail_mean(traj.energy_logic))
            magnetizations.append(analysis.tail_mean(np.abs(traj.magnetization)))
        if not np.mean(tails) < np.mean(heads):
            cooling_ok = False
    rho = analysis.pearson(energies, magnetizations)
    elapsed = time.perf_counter() - start
    ok = cooling_ok and rho < 0 and elapsed < 60.0
    check(8, "cooling lowers energy and energy anti-correlates with |M|", ok,
          f"cooling={cooling_ok}, rho(E_f,|M_f|)={rho:+.3f} over 200 runs, {elapsed:.1f}s")


def test_criterion_09_beta_fit_correctness():
    temps = np.geomspace(0.05, 1.0, 500)
    errors = []
    for beta, amplitude in ((0.0, 1.0), (0.003, 1.0), (0.5, 2.0)):
        fit = analysis.fit_beta(temps, amplitude * temps**(-beta))
        errors.append(abs(fit.beta - beta))
    ok = all(err <= 1e-9 for err in errors)
    check(9, "power-law exponent recovered from synthetic data", ok,
          f"max |dbeta| = {max(errors):.2e}")


def test_criterion_10_statistics_oracles():
    rho_err = abs(analysis.pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8)
    tail_err = abs(analysis.tail_mean(list(range(100)), 0.2) - 89.5)
    rows = [_summary_row(1.0), _summary_row(3.0)]
    mean, sd = analysis.aggregate(rows)["final_energy_logic"]
    agg_err = max(abs(mean - 2.0), abs(sd - math.sqrt(2)))
    worst = max(rho_err, tail_err, agg_err)
    check(10, "pearson/tail_mean/aggregate match hand values", worst <= 1e-12,
          f"worst abs error = {worst:.2e}")


def _summary_row(energy: float) -> analysis.InstanceSummary:
    return analysis.InstanceSummary(
        instance="x", seed=0, sat=True, alpha_ratio=4.55,
        final_energy_h=energy, final_energy_logic=energy,
        final_abs_magnetization=0.5, backbone_capped=10, backbone_exact=10,
        backbone_exact_flag=True, mean_slack=1.7, beta=None, beta_r2=None,
        t0=2.5, alpha=0.999, steps=6000,
    )


def test_criterion_11_report_layout(uf20_paths, tmp_path, capsys):
    outdir = tmp_path / "out"
    inputs = [str(p) for p in uf20_paths[:10]]
    assert cli_main(["run", *inputs, "--outdir", str(outdir)]) == 0
    capsys.readouterr()
    assert cli_main(["report", str(outdir / analysis.SUMMARY_FILENAME), "--outdir", str(outdir)]) == 0
    printed = capsys.readouterr().out
    required = (
        "Observable", "Mean", "Std. Dev.",
        "Final Energy <E_f>", "Residual clause tension",
        "Final Magnetization <|M_f|>", "Near-complete ordering",
        "Backbone Size <b>", "Moderate rigidity",
        "Correlation matrix", "E_final", "|M_final|", "Backbone",
    )
    missing = [text for text in required if text not in printed]
    check(11, "report emits aggregate and correlation tables in expected layout",
          not missing, f"missing={missing}" if missing else "all row labels present")
