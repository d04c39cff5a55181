from __future__ import annotations

import itertools

import numpy as np
import pytest

from spinsat.cnf import Formula, generate_random_3sat, logical_energy, parse_dimacs
from spinsat.satcore import ModelSet, backbone, brute_force_models, enumerate_models, solve


def reference_models(f: Formula) -> set[tuple[bool, ...]]:
    # Tiny independent oracle: direct product enumeration + literal checks.
    out = set()
    for a in itertools.product((False, True), repeat=f.num_vars):
        ok = True
        for clause in f.clauses:
            if not any(
                (lit.sign > 0) == a[lit.var] for lit in clause.literals
            ):
                ok = False
                break
        if ok:
            out.add(a)
    return out


def test_solve_contradiction_unsat():
    f = parse_dimacs("p cnf 1 2\n1 0\n-1 0")
    assert solve(f) is None


def test_solve_uf20_all_sat(uf20_formulas):
    for f in uf20_formulas:
        model = solve(f)
        assert model is not None
        assert logical_energy(f, model) == 0


def test_solve_agrees_with_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(120):
        n = int(rng.integers(3, 13))
        m = int(rng.integers(1, 4 * n))
        f = generate_random_3sat(n, m, seed=int(rng.integers(10**6)))
        expected = reference_models(f) if n <= 10 else set(brute_force_models(f).models)
        model = solve(f)
        assert (model is not None) == bool(expected)
        if model is not None:
            assert logical_energy(f, model) == 0


def test_solve_deterministic(uf20_formulas):
    f = uf20_formulas[0]
    assert solve(f) == solve(f)


def test_enumerate_two_var_clause():
    f = parse_dimacs("p cnf 2 1\n1 2 0")
    ms = enumerate_models(f, cap=10)
    assert len(ms.models) == 3
    assert not ms.truncated
    assert set(ms.models) == {(True, False), (False, True), (True, True)}


def test_enumerate_unsat_empty():
    f = parse_dimacs("p cnf 1 2\n1 0\n-1 0")
    ms = enumerate_models(f, cap=10)
    assert ms.models == ()
    assert not ms.truncated


def test_enumerate_cap_validation():
    with pytest.raises(ValueError):
        enumerate_models(Formula(3, ()), cap=0)


def test_enumerate_equals_brute_force_when_uncapped():
    rng = np.random.default_rng(23)
    for _ in range(40):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(max(2, n - 2), 4 * n))
        f = generate_random_3sat(n, m, seed=int(rng.integers(10**6)))
        ms = enumerate_models(f, cap=1 << n)
        bf = brute_force_models(f)
        assert set(ms.models) == set(bf.models)
        assert not ms.truncated
        assert len(set(ms.models)) == len(ms.models)


def test_enumerate_truncation_flag():
    # No clauses: every assignment is a model, so a low cap must truncate.
    f = Formula(4, ())
    ms = enumerate_models(f, cap=5)
    assert len(ms.models) == 5
    assert ms.truncated
    full = enumerate_models(f, cap=16)
    assert len(full.models) == 16
    assert not full.truncated


def test_backbone_single_model():
    ms = ModelSet(((True, False, True),), truncated=False, cap=10)
    report = backbone(ms, 3)
    assert report.size == 3
    assert report.normalized == 1.0
    assert report.exact


def test_backbone_two_models():
    ms = ModelSet(((True, True), (True, False)), truncated=False, cap=10)
    report = backbone(ms, 2)
    assert report.fixed_vars == ((0, True),)
    assert report.size == 1
    assert report.normalized == 0.5


def test_backbone_empty_errors():
    with pytest.raises(ValueError):
        backbone(ModelSet((), truncated=False, cap=10), 3)


def test_backbone_order_invariant():
    models = [(True, False, True), (True, True, True), (True, False, False)]
    a = backbone(ModelSet(tuple(models), False, 10), 3)
    b = backbone(ModelSet(tuple(reversed(models)), False, 10), 3)
    assert a.fixed_vars == b.fixed_vars


def test_backbone_truncation_overestimates():
    # Dropping models can only freeze more variables, never fewer.
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = generate_random_3sat(7, int(rng.integers(7, 25)), seed=int(rng.integers(10**6)))
        bf = brute_force_models(f)
        if len(bf.models) < 3:
            continue
        full = backbone(bf, 7)
        cut = ModelSet(bf.models[:2], truncated=True, cap=2)
        partial = backbone(cut, 7)
        assert set(full.fixed_vars) <= set(partial.fixed_vars)
        assert not partial.exact


def test_backbone_exact_flag_tracks_truncation():
    f = Formula(4, ())
    truncated = enumerate_models(f, cap=3)
    assert not backbone(truncated, 4).exact


def test_brute_force_examples():
    f = parse_dimacs("p cnf 3 1\n1 2 3 0")
    assert len(brute_force_models(f).models) == 7
    f2 = parse_dimacs("p cnf 2 2\n1 0\n2 0")
    assert brute_force_models(f2).models == ((True, True),)


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_models(Formula(25, ()))


def test_brute_force_matches_reference_oracle():
    rng = np.random.default_rng(31)
    for _ in range(30):
        n = int(rng.integers(3, 9))
        f = generate_random_3sat(n, int(rng.integers(1, 4 * n)), seed=int(rng.integers(10**6)))
        assert set(brute_force_models(f).models) == reference_models(f)


def test_uf20_capped_vs_exact_backbone(uf20_formulas):
    # Heavier sweep lives in the acceptance suite; spot-check two instances.
    for f in uf20_formulas[:2]:
        exact = backbone(brute_force_models(f), f.num_vars)
        capped = backbone(enumerate_models(f, cap=120), f.num_vars)
        assert set(exact.fixed_vars) <= set(capped.fixed_vars)


def test_enumeration_order_deterministic(uf20_formulas):
    f = uf20_formulas[0]
    assert enumerate_models(f, cap=20).models == enumerate_models(f, cap=20).models


def test_solver_handles_formula_without_variables():
    empty = Formula(0, ())
    assert solve(empty) == ()
    ms = enumerate_models(empty, cap=4)
    assert ms.models == ((),)
    assert not ms.truncated
