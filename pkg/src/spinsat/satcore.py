"""Complete SAT solving, capped model enumeration, and backbone extraction.

The solver is a deterministic DPLL: unit propagation, pure-literal
elimination, and branching on the lowest-index unassigned variable with the
true branch first. Determinism matters more than heuristic strength at the
benchmark scale (20 variables), because enumeration order and therefore all
downstream artifacts must be reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnf import Assignment, Formula, logical_energy

__all__ = [
    "ModelSet",
    "BackboneReport",
    "solve",
    "enumerate_models",
    "backbone",
    "brute_force_models",
    "BRUTE_FORCE_MAX_VARS",
]

BRUTE_FORCE_MAX_VARS = 24


@dataclass(frozen=True)
class ModelSet:
    """A set of satisfying assignments, possibly cut off at ``cap`` models."""

    models: tuple[Assignment, ...]
    truncated: bool
    cap: int


@dataclass(frozen=True)
class BackboneReport:
    """Variables forced to a single value across every model in a ModelSet.

    ``exact`` is False when the report was computed from a truncated model
    set; in that case the reported backbone can only overestimate the true
    one (fewer models means more variables look frozen).
    """

    fixed_vars: tuple[tuple[int, bool], ...]
    size: int
    normalized: float
    exact: bool


def _int_clauses(f: Formula) -> list[list[int]]:
    # Signed 1-based literals, the native currency of the DPLL core.
    return [[lit.to_dimacs() for lit in c.literals] for c in f.clauses]


def _propagate(clauses: list[list[int]], assign: dict[int, bool]) -> str:
    """Apply unit propagation and pure-literal elimination to a fixpoint.

    Returns "sat" when every clause is satisfied, "conflict" on an empty
    clause, "open" otherwise. ``assign`` is mutated in place.
    """
    while True:
        changed = False
        all_satisfied = True
        pos_occurs: set[int] = set()
        neg_occurs: set[int] = set()
        for clause in clauses:
            satisfied = False
            unassigned: list[int] = []
            for lit in clause:
                val = assign.get(abs(lit))
                if val is None:
                    unassigned.append(lit)
                elif (lit > 0) == val:
                    satisfied = True
                    break
            if satisfied:
                continue
            all_satisfied = False
            if not unassigned:
                return "conflict"
            if len(unassigned) == 1:
                unit = unassigned[0]
                assign[abs(unit)] = unit > 0
                changed = True
            else:
                for lit in unassigned:
                    (pos_occurs if lit > 0 else neg_occurs).add(abs(lit))
        if all_satisfied:
            return "sat"
        if changed:
            continue
        pure_true = sorted(pos_occurs - neg_occurs)
        pure_false = sorted(neg_occurs - pos_occurs)
        if pure_true or pure_false:
            for v in pure_true:
                assign[v] = True
            for v in pure_false:
                assign[v] = False
            continue
        return "open"


def _dpll(clauses: list[list[int]], assign: dict[int, bool], num_vars: int) -> bool:
    status = _propagate(clauses, assign)
    if status == "sat":
        return True
    if status == "conflict":
        return False
    branch_var = next(v for v in range(1, num_vars + 1) if v not in assign)
    for value in (True, False):
        child = dict(assign)
        child[branch_var] = value
        if _dpll(clauses, child, num_vars):
            assign.clear()
            assign.update(child)
            return True
    return False


def _solve_int(clauses: list[list[int]], num_vars: int) -> Assignment | None:
    assign: dict[int, bool] = {}
    if not _dpll(clauses, assign, num_vars):
        return None
    # Variables left unassigned are unconstrained; complete them as False.
    return tuple(assign.get(v, False) for v in range(1, num_vars + 1))


def solve(f: Formula) -> Assignment | None:
    """Find one satisfying assignment, or None when the formula is UNSAT."""
    return _solve_int(_int_clauses(f), f.num_vars)


def _blocking_clause(model: Assignment) -> list[int]:
    return [-(v + 1) if value else (v + 1) for v, value in enumerate(model)]


def enumerate_models(f: Formula, cap: int = 120) -> ModelSet:
    """Enumerate up to ``cap`` distinct models via blocking clauses.

    After each model the clause forbidding exactly that assignment is added
    and the solver reruns, so enumeration order follows the deterministic
    branching order. ``truncated`` is True iff a further model exists beyond
    the cap.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    clauses = _int_clauses(f)
    models: list[Assignment] = []
    while len(models) < cap:
        model = _solve_int(clauses, f.num_vars)
        if model is None:
            return ModelSet(tuple(models), truncated=False, cap=cap)
        models.append(model)
        clauses.append(_blocking_clause(model))
    truncated = _solve_int(clauses, f.num_vars) is not None
    return ModelSet(tuple(models), truncated=truncated, cap=cap)


def backbone(ms: ModelSet, num_vars: int) -> BackboneReport:
    """Variables taking one fixed value across all models in ``ms``."""
    if not ms.models:
        raise ValueError("backbone undefined for an empty model set (UNSAT)")
    fixed: list[tuple[int, bool]] = []
    for v in range(num_vars):
        first = ms.models[0][v]
        if all(model[v] == first for model in ms.models[1:]):
            fixed.append((v, first))
    return BackboneReport(
        fixed_vars=tuple(fixed),
        size=len(fixed),
        normalized=len(fixed) / num_vars,
        exact=not ms.truncated,
    )


def brute_force_models(f: Formula) -> ModelSet:
    """Exact model set by exhaustive scan of all 2^n assignments.

    Assignment index bit v holds the value of variable v. The scan evaluates
    every clause against all assignments at once with bit arithmetic, which
    keeps a full 2^20 sweep under a second; the result is identical to
    filtering assignments on a zero unsatisfied-clause count.
    """
    n = f.num_vars
    if n > BRUTE_FORCE_MAX_VARS:
        raise ValueError(f"exhaustive scan limited to {BRUTE_FORCE_MAX_VARS} variables")
    size = 1 << n
    indices = np.arange(size, dtype=np.uint32)
    unsat_counts = np.zeros(size, dtype=np.int32)
    for clause in f.clauses:
        satisfied = np.zeros(size, dtype=bool)
        for lit in clause.literals:
            bit = ((indices >> np.uint32(lit.var)) & np.uint32(1)).astype(bool)
            satisfied |= bit if lit.sign > 0 else ~bit
        unsat_counts += ~satisfied
    model_indices = np.nonzero(unsat_counts == 0)[0]
    if model_indices.size:
        bits = (model_indices[:, None] >> np.arange(n, dtype=np.uint32)) & 1
        models = tuple(tuple(bool(b) for b in row) for row in bits)
    else:
        models = ()
    return ModelSet(models, truncated=False, cap=size)


def model_count_check(f: Formula, ms: ModelSet) -> bool:
    """Sanity helper: every member of ``ms`` satisfies ``f``."""
    return all(logical_energy(f, model) == 0 for model in ms.models)
