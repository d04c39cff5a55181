"""Compile CNF formulas into pairwise Ising Hamiltonians.

The mapping sends variable v to spin s_v in {-1, +1} with true <-> +1. Each
clause contributes the product of its literal-false factors (1 - t*s)/2,
which is 1 exactly on assignments violating the clause and 0 otherwise, so
the summed energy of a core configuration equals its unsatisfied-clause
count. Three-literal clauses produce a cubic monomial, reduced to pairwise
form with one ancilla spin per clause.

Gadget modes
------------
``corrected`` (default): the cubic spin monomial is rewritten over 0/1
variables, the product x_i*x_p is replaced by a fresh Boolean ancilla w with
the penalty K*(x_i x_p - 2 x_i w - 2 x_p w + 3 w), which is 0 iff w equals
the product and at least K otherwise, and the result is converted back to
spins. Minimizing over each ancilla then reproduces the clause energy
exactly for every core configuration provided K >= the cubic coefficient
magnitude (k_factor >= 8, well below the default 20).

``paper-literal``: applies the penalty K*(3 - a*s_i - a*s_p - s_i*s_p)
verbatim. This form does NOT pin the ancilla to the spin product (it charges
4K on configurations with s_i != s_p regardless of a, and prefers a = -1
when s_i = s_p = -1), so ground states need not coincide with satisfying
assignments. It is kept only so the defect can be demonstrated and is never
the default.

Coefficients are exact dyadic rationals (Fraction) end to end; floats appear
only in CSV cells and in the annealing fast path.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np

from .cnf import Assignment, Clause, Formula

__all__ = [
    "GADGET_CORRECTED",
    "GADGET_PAPER_LITERAL",
    "GadgetRecord",
    "Hamiltonian",
    "ClausePolynomial",
    "SpinState",
    "spins_to_assignment",
    "assignment_to_spins",
    "clause_polynomial",
    "compile",
    "hamiltonian_energy",
    "hamiltonian_energy_exact",
    "delta_energy",
    "magnetization",
    "exhaustive_core_minima",
    "export_csv",
    "import_csv",
]

GADGET_CORRECTED = "corrected"
GADGET_PAPER_LITERAL = "paper-literal"

# Spin vector over core + ancilla spins; entries are +1 or -1.
SpinState = np.ndarray

FLOAT_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), FLOAT_FMT)


class GadgetRecord(NamedTuple):
    ancilla_index: int
    parent_i: int
    parent_j: int
    penalty_weight: Fraction


@dataclass(eq=True)
class ClausePolynomial:
    """Multilinear spin polynomial of a single clause.

    ``terms`` maps a sorted tuple of spin indices (degree 0..3) to its exact
    coefficient. Spins square to 1, so products of factors sharing a
    variable reduce by symmetric difference of index sets.
    """

    terms: dict[tuple[int, ...], Fraction]

    def evaluate(self, spins: Sequence[int]) -> Fraction:
        total = Fraction(0)
        for key, coeff in self.terms.items():
            prod = 1
            for idx in key:
                prod *= spins[idx]
            total += coeff * prod
        return total

    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)


def spins_to_assignment(s: Sequence[int], core_count: int) -> Assignment:
    """Read the first ``core_count`` spins as truth values (+1 -> True)."""
    if len(s) < core_count:
        raise ValueError(f"spin state of length {len(s)} has no {core_count} core spins")
    return tuple(int(s[i]) > 0 for i in range(core_count))


def assignment_to_spins(a: Sequence[bool]) -> SpinState:
    """Inverse of spins_to_assignment over the core block."""
    return np.array([1 if value else -1 for value in a], dtype=np.int8)


def clause_polynomial(c: Clause) -> ClausePolynomial:
    """Exact multilinear expansion of the clause-violation indicator.

    For literals with polarities t_1..t_k over distinct variables the
    product of (1 - t_i s_i)/2 factors expands to a degree-k polynomial; for
    k=3 the constant is 1/8, linear terms -t_i/8, quadratic +t_i t_j/8 and
    the cubic -t_1 t_2 t_3 / 8. Clauses longer than 3 literals or with a
    repeated variable are rejected.
    """
    k = len(c.literals)
    if k > 3:
        raise ValueError(f"clause length {k} > 3 not supported")
    if len(set(c.variables)) != k:
        raise ValueError("clause repeats a variable; expansion would not be multilinear")
    terms: dict[tuple[int, ...], Fraction] = {(): Fraction(1)}
    for lit in c.literals:
        factor = {(): Fraction(1, 2), (lit.var,): Fraction(-lit.sign, 2)}
        merged: dict[tuple[int, ...], Fraction] = {}
        for key_a, coeff_a in terms.items():
            for key_b, coeff_b in factor.items():
                key = tuple(sorted(set(key_a) ^ set(key_b)))
                merged[key] = merged.get(key, Fraction(0)) + coeff_a * coeff_b
        terms = {key: coeff for key, coeff in merged.items() if coeff != 0}
    return ClausePolynomial(terms)


def _corrected_substitution(
    c: Fraction, i: int, p: int, q: int, a: int, penalty: Fraction
) -> dict[tuple[int, ...], Fraction]:
    """Pairwise terms replacing c * s_i s_p s_q with ancilla spin ``a``.

    Derived by mapping to 0/1 variables, substituting the product ancilla
    with its exact penalty, and mapping back to spins.
    """
    quarter = penalty / 4
    half = penalty / 2
    terms = {
        (): c + 3 * quarter,
        (a,): 2 * c + half,
        (i,): -c - quarter,
        (p,): -c - quarter,
        (q,): c,
        tuple(sorted((a, q))): 2 * c,
        tuple(sorted((i, p))): -c + quarter,
        tuple(sorted((i, q))): -c,
        tuple(sorted((p, q))): -c,
        tuple(sorted((a, i))): -half,
        tuple(sorted((a, p))): -half,
    }
    return terms


def _paper_literal_substitution(
    c: Fraction, i: int, p: int, q: int, a: int, penalty: Fraction
) -> dict[tuple[int, ...], Fraction]:
    """Literal penalty form K*(3 - a s_i - a s_p - s_i s_p); not product-exact."""
    return {
        (): 3 * penalty,
        tuple(sorted((a, q))): c,
        tuple(sorted((a, i))): -penalty,
        tuple(sorted((a, p))): -penalty,
        tuple(sorted((i, p))): -penalty,
    }


@dataclass(eq=True)
class Hamiltonian:
    """Pairwise spin energy: offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j.

    Core spins occupy indices [0, core_count); ancilla spins follow. The
    object is immutable by convention after compile; the float views used by
    the annealer are cached lazily.

    ``energy_floor`` is the analytic minimum constant (sum of per-clause
    gadgetized minima), so energy - energy_floor is 0 exactly on satisfying
    configurations under the corrected gadget. With the paper-literal gadget
    the floor is only a lower bound and the zero test is not reliable.
    """

    offset: Fraction
    fields: tuple[Fraction, ...]
    couplings: dict[tuple[int, int], Fraction]
    core_count: int
    ancillas: tuple[GadgetRecord, ...]
    source: str = ""
    energy_floor: Fraction = Fraction(0)
    gadget_mode: str = GADGET_CORRECTED
    k_factor: Fraction = Fraction(20)

    @property
    def num_spins(self) -> int:
        return len(self.fields)

    @cached_property
    def float_offset(self) -> float:
        return float(self.offset)

    @cached_property
    def float_floor(self) -> float:
        return float(self.energy_floor)

    @cached_property
    def float_fields(self) -> tuple[float, ...]:
        return tuple(float(h) for h in self.fields)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        """Per-spin (neighbor, J) pairs in ascending neighbor order."""
        neighbors: list[list[tuple[int, float]]] = [[] for _ in range(self.num_spins)]
        for (i, j), coeff in self.couplings.items():
            jf = float(coeff)
            neighbors[i].append((j, jf))
            neighbors[j].append((i, jf))
        return tuple(tuple(sorted(entry)) for entry in neighbors)

    def sorted_couplings(self) -> list[tuple[tuple[int, int], Fraction]]:
        return sorted(self.couplings.items())


def _check_spins(H: Hamiltonian, s: Sequence[int]) -> None:
    if len(s) != H.num_spins:
        raise ValueError(f"spin state length {len(s)} != {H.num_spins} spins")


def compile(
    f: Formula,
    k_factor: float | Fraction = 20,
    gadget_mode: str = GADGET_CORRECTED,
) -> Hamiltonian:
    """Compile a formula (clause lengths <= 3) into a pairwise Hamiltonian.

    One ancilla spin is allocated per clause with a cubic term, bound to the
    variables of the clause's first two literals; the penalty weight is
    k_factor times the cubic coefficient magnitude (k_factor/8 per
    three-literal clause). Tautological clauses expand to the zero
    polynomial and contribute nothing.
    """
    if gadget_mode not in (GADGET_CORRECTED, GADGET_PAPER_LITERAL):
        raise ValueError(f"unknown gadget mode {gadget_mode!r}")
    k_frac = Fraction(k_factor)
    if k_frac <= 0:
        raise ValueError("k_factor must be positive")
    if gadget_mode == GADGET_CORRECTED and k_frac < 8:
        warnings.warn(
            "k_factor below 8 cannot pin ancillas to the spin product; "
            "ground states may no longer match satisfying assignments",
            stacklevel=2,
        )

    n = f.num_vars
    offset = Fraction(0)
    fields: dict[int, Fraction] = {}
    couplings: dict[tuple[int, int], Fraction] = {}
    gadgets: list[GadgetRecord] = []
    floor = Fraction(0)
    next_ancilla = n

    for clause in f.clauses:
        if len(clause.literals) > 3:
            raise ValueError(f"clause length {len(clause.literals)} > 3 not supported")
        if clause.is_tautological:
            continue
        poly = clause_polynomial(clause)
        local = dict(poly.terms)
        cubic_key = next((key for key in local if len(key) == 3), None)
        if cubic_key is not None:
            c = local.pop(cubic_key)
            i = clause.literals[0].var
            p = clause.literals[1].var
            q = clause.literals[2].var
            a = next_ancilla
            next_ancilla += 1
            penalty = k_frac * abs(c)
            gadgets.append(GadgetRecord(a, i, p, penalty))
            substitute = (
                _corrected_substitution
                if gadget_mode == GADGET_CORRECTED
                else _paper_literal_substitution
            )
            for key, coeff in substitute(c, i, p, q, a, penalty).items():
                local[key] = local.get(key, Fraction(0)) + coeff
        floor += _local_minimum(local)
        for key, coeff in local.items():
            if coeff == 0:
                continue
            if len(key) == 0:
                offset += coeff
            elif len(key) == 1:
                fields[key[0]] = fields.get(key[0], Fraction(0)) + coeff
            else:
                couplings[key] = couplings.get(key, Fraction(0)) + coeff

    num_spins = next_ancilla
    field_vec = tuple(fields.get(i, Fraction(0)) for i in range(num_spins))
    couplings = {key: coeff for key, coeff in couplings.items() if coeff != 0}
    return Hamiltonian(
        offset=offset,
        fields=field_vec,
        couplings=couplings,
        core_count=n,
        ancillas=tuple(gadgets),
        source=f.source_name,
        energy_floor=floor,
        gadget_mode=gadget_mode,
        k_factor=k_frac,
    )


def _local_minimum(terms: dict[tuple[int, ...], Fraction]) -> Fraction:
    """Exact minimum of a small spin polynomial over its own variables."""
    variables = sorted({idx for key in terms for idx in key})
    if not variables:
        return terms.get((), Fraction(0))
    best: Fraction | None = None
    for values in product((-1, 1), repeat=len(variables)):
        local = dict(zip(variables, values))
        total = Fraction(0)
        for key, coeff in terms.items():
            prod = 1
            for idx in key:
                prod *= local[idx]
            total += coeff * prod
        if best is None or total < best:
            best = total
    return best


def hamiltonian_energy(H: Hamiltonian, s: Sequence[int]) -> float:
    """Raw energy offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j as a float.

    Terms are summed in ascending index order so repeated evaluation is
    bit-identical regardless of coupling storage order.
    """
    _check_spins(H, s)
    total = H.float_offset
    for i, h in enumerate(H.float_fields):
        if h:
            total += h * s[i]
    for (i, j), coeff in sorted(H.couplings.items()):
        total += float(coeff) * s[i] * s[j]
    return total


def hamiltonian_energy_exact(H: Hamiltonian, s: Sequence[int]) -> Fraction:
    """Exact rational energy of a spin state."""
    _check_spins(H, s)
    total = H.offset
    for i, h in enumerate(H.fields):
        if h:
            total += h * s[i]
    for (i, j), coeff in H.couplings.items():
        total += coeff * (s[i] * s[j])
    return total


def delta_energy(H: Hamiltonian, s: Sequence[int], i: int) -> float:
    """Energy change from flipping spin ``i``: -2 s_i (h_i + sum_j J_ij s_j).

    Neighbors are visited in ascending index order; the summation order is
    fixed so trajectories replay bit-identically.
    """
    if not 0 <= i < H.num_spins:
        raise ValueError(f"spin index {i} out of range")
    acc = H.float_fields[i]
    for j, jf in H.adjacency[i]:
        acc += jf * s[j]
    return -2.0 * s[i] * acc


def magnetization(s: Sequence[int], core_count: int) -> float:
    """Mean of the core spins only; ancilla spins never contribute."""
    if core_count < 1:
        raise ValueError("need at least one core spin")
    if core_count > len(s):
        raise ValueError(f"core_count {core_count} exceeds spin state length {len(s)}")
    return sum(int(s[i]) for i in range(core_count)) / core_count


def exhaustive_core_minima(H: Hamiltonian, max_spins: int = 22) -> list[Fraction]:
    """Exact min-over-ancillas energy for every core configuration.

    Entry k is the minimum of the raw Hamiltonian energy over all ancilla
    settings when core spin v is +1 iff bit v of k is set. All arithmetic is
    integer (coefficients are rescaled by their common denominator), so the
    returned Fractions are exact.
    """
    N = H.num_spins
    if N > max_spins:
        raise ValueError(f"exhaustive evaluation limited to {max_spins} spins")
    denoms = [H.offset.denominator]
    denoms += [h.denominator for h in H.fields]
    denoms += [c.denominator for c in H.couplings.values()]
    scale = 1
    for d in denoms:
        scale = scale * d // math.gcd(scale, d)
    magnitude = abs(H.offset) + sum(abs(h) for h in H.fields)
    magnitude += sum(abs(c) for c in H.couplings.values())
    if magnitude * scale >= 1 << 62:
        raise ValueError(
            "coefficients do not fit the integer evaluation grid; "
            "use a dyadic k_factor"
        )

    size = 1 << N
    indices = np.arange(size, dtype=np.int64)
    spins = [np.where((indices >> v) & 1 == 1, 1, -1).astype(np.int64) for v in range(N)]
    energies = np.full(size, int(H.offset * scale), dtype=np.int64)
    for v, h in enumerate(H.fields):
        if h:
            energies += int(h * scale) * spins[v]
    for (i, j), coeff in H.couplings.items():
        energies += int(coeff * scale) * (spins[i] * spins[j])

    n_core = H.core_count
    per_core = energies.reshape(1 << (N - n_core), 1 << n_core).min(axis=0)
    return [Fraction(int(value), scale) for value in per_core]


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

_NODE_HEADER = "spin_id,kind,label,h"
_EDGE_HEADER = "spin_i,spin_j,J"
_META_KEYS = ("offset", "core_count", "energy_floor", "gadget_mode", "k_factor", "source")


def _ancilla_label(record: GadgetRecord) -> str:
    return f"x{record.parent_i + 1}*x{record.parent_j + 1}"


def export_csv(H: Hamiltonian) -> tuple[str, str]:
    """Serialize to (node table, edge table) CSV text.

    Node rows are ordered by spin id, edge rows by (i, j); ids are 1-based.
    The node table carries offset, core count, floor, gadget mode, k_factor
    and source as '#' metadata comments; offset-like values are written as
    exact fraction strings, coefficient cells as floats with 17 significant
    digits (exact for dyadic rationals).
    """
    by_ancilla = {g.ancilla_index: g for g in H.ancillas}
    node_lines = [
        f"# offset = {H.offset}",
        f"# core_count = {H.core_count}",
        f"# energy_floor = {H.energy_floor}",
        f"# gadget_mode = {H.gadget_mode}",
        f"# k_factor = {H.k_factor}",
        f"# source = {H.source}",
        _NODE_HEADER,
    ]
    for idx in range(H.num_spins):
        if idx < H.core_count:
            kind, label = "core", f"x{idx + 1}"
        else:
            kind, label = "ancilla", _ancilla_label(by_ancilla[idx])
        node_lines.append(f"{idx + 1},{kind},{label},{_fmt(float(H.fields[idx]))}")
    edge_lines = [_EDGE_HEADER]
    for (i, j), coeff in H.sorted_couplings():
        edge_lines.append(f"{i + 1},{j + 1},{_fmt(float(coeff))}")
    return "\n".join(node_lines) + "\n", "\n".join(edge_lines) + "\n"


def _parse_metadata(lines: list[str]) -> dict[str, str]:
    meta: dict[str, str] = {}
    for line in lines:
        body = line[1:].strip()
        if "=" not in body:
            raise ValueError(f"malformed metadata comment {line!r}")
        key, _, value = body.partition("=")
        meta[key.strip()] = value.strip()
    missing = [key for key in _META_KEYS if key not in meta]
    if missing:
        raise ValueError(f"missing metadata: {', '.join(missing)}")
    return meta


def import_csv(nodes_text: str, edges_text: str) -> Hamiltonian:
    """Rebuild a Hamiltonian from node/edge tables produced by export_csv."""
    lines = [line for line in nodes_text.splitlines() if line.strip()]
    meta_lines = [line for line in lines if line.startswith("#")]
    data_lines = [line for line in lines if not line.startswith("#")]
    meta = _parse_metadata(meta_lines)
    if not data_lines or data_lines[0] != _NODE_HEADER:
        raise ValueError("node table missing header row")

    core_count = int(meta["core_count"])
    k_factor = Fraction(meta["k_factor"])
    fields: list[Fraction] = []
    ancillas: list[GadgetRecord] = []
    for row_no, line in enumerate(data_lines[1:]):
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed node row {line!r}")
        spin_id, kind, label, h_text = parts
        if int(spin_id) != row_no + 1:
            raise ValueError(f"node rows out of order at {line!r}")
        index = row_no
        if kind == "core":
            if index >= core_count:
                raise ValueError(f"core spin {spin_id} beyond core_count {core_count}")
        elif kind == "ancilla":
            if index < core_count:
                raise ValueError(f"ancilla spin {spin_id} inside the core block")
            try:
                left, right = label.split("*")
                parent_i = int(left.lstrip("x")) - 1
                parent_j = int(right.lstrip("x")) - 1
            except ValueError as exc:
                raise ValueError(f"malformed ancilla label {label!r}") from exc
            # Every gadget reduces a cubic term of magnitude 1/8.
            ancillas.append(GadgetRecord(index, parent_i, parent_j, k_factor / 8))
        else:
            raise ValueError(f"unknown node kind {kind!r}")
        fields.append(Fraction(float(h_text)))
    if len(fields) < core_count:
        raise ValueError("fewer node rows than core_count")

    couplings: dict[tuple[int, int], Fraction] = {}
    edge_lines = [line for line in edges_text.splitlines() if line.strip()]
    if not edge_lines or edge_lines[0] != _EDGE_HEADER:
        raise ValueError("edge table missing header row")
    for line in edge_lines[1:]:
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"malformed edge row {line!r}")
        i = int(parts[0]) - 1
        j = int(parts[1]) - 1
        if i == j:
            raise ValueError(f"self-loop on spin {i + 1}")
        if not (0 <= i < len(fields) and 0 <= j < len(fields)):
            raise ValueError(f"edge ({i + 1},{j + 1}) out of range")
        if i > j:
            i, j = j, i
        if (i, j) in couplings:
            raise ValueError(f"duplicate edge ({i + 1},{j + 1})")
        couplings[(i, j)] = Fraction(float(parts[2]))

    return Hamiltonian(
        offset=Fraction(meta["offset"]),
        fields=tuple(fields),
        couplings=couplings,
        core_count=core_count,
        ancillas=tuple(ancillas),
        source=meta["source"],
        energy_floor=Fraction(meta["energy_floor"]),
        gadget_mode=meta["gadget_mode"],
        k_factor=k_factor,
    )
