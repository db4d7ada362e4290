"""Shared fixtures: random model generators and enumeration oracles.

The oracles here are deliberately independent of the message-passing
implementations: joint probabilities come from routing a complete
assignment through the circuit and multiplying local parameters, and
marginals/completions from exhaustive enumeration over those joints.
"""

from __future__ import annotations

from itertools import product
from random import Random

import pytest

from csdd.circuit import Circuit, FALSE, LITERAL, TRUE, Vtree, compile_formula, model_count, multiplicity_report
from csdd.credal import IntervalCredalSet, enumerate_vertices, normalize_reachable
from csdd.formula import Formula, Var, conj, disj
from csdd.params import CsddParams, PsddParams


# ---------------------------------------------------------------------------
# random generators


def random_vtree(rng: Random, n: int) -> Vtree:
    variables = list(range(1, n + 1))
    rng.shuffle(variables)

    def build(vs):
        if len(vs) == 1:
            return vs[0]
        k = rng.randint(1, len(vs) - 1)
        return (build(vs[:k]), build(vs[k:]))

    return Vtree(build(variables))


def random_formula(rng: Random, n_vars: int, depth: int) -> Formula:
    if depth == 0 or rng.random() < 0.3:
        v = Var(rng.randint(1, n_vars))
        return v if rng.random() < 0.5 else ~v
    parts = [random_formula(rng, n_vars, depth - 1) for _ in range(rng.randint(2, 3))]
    return conj(parts) if rng.random() < 0.5 else disj(parts)


def random_circuit(
    rng: Random,
    n_vars: int,
    singly: bool,
    max_elements: int | None = None,
    max_tries: int = 200,
) -> Circuit:
    """Non-trivial random circuit of the requested connectivity."""
    for _ in range(max_tries):
        vtree = random_vtree(rng, n_vars)
        formula = random_formula(rng, n_vars, depth=rng.randint(2, 3))
        circuit = compile_formula(formula, vtree, share=not singly)
        count = model_count(circuit)
        if not 0 < count < 2 ** n_vars:
            continue
        if max_elements is not None:
            widest = max(
                (len(node.elements) for node in circuit.nodes if node.elements), default=0
            )
            if widest > max_elements:
                continue
        if singly != multiplicity_report(circuit).singly_connected:
            continue
        return circuit
    raise RuntimeError("could not generate a suitable random circuit")


def random_csdd_params(rng: Random, circuit: Circuit, max_width: float) -> CsddParams:
    """Random reachable interval tables with well-separated-from-0/1 bounds."""
    false = circuit.false_ids()
    table = {}
    for nid in circuit.parameterized_ids():
        node = circuit.nodes[nid]
        if node.kind == TRUE:
            p = rng.uniform(0.15, 0.85)
            lo = max(0.05, p - rng.uniform(0, max_width))
            hi = min(0.95, p + rng.uniform(0, max_width))
            table[nid] = IntervalCredalSet((lo, 1.0 - hi), (hi, 1.0 - lo))
            continue
        k = len(node.elements)
        free = [i for i, (_, s) in enumerate(node.elements) if s not in false]
        weights = [rng.uniform(0.2, 1.0) if i in free else 0.0 for i in range(k)]
        total = sum(weights)
        point = [w / total for w in weights]
        lower = [0.0] * k
        upper = [0.0] * k
        for i in free:
            lower[i] = max(0.4 * point[i], point[i] - rng.uniform(0, max_width))
            upper[i] = min(1.0, point[i] + rng.uniform(0, max_width))
        table[nid] = normalize_reachable(lower, upper)
    return CsddParams(table)


def random_psdd_params(rng: Random, circuit: Circuit) -> PsddParams:
    false = circuit.false_ids()
    table = {}
    for nid in circuit.parameterized_ids():
        node = circuit.nodes[nid]
        if node.kind == TRUE:
            p = rng.uniform(0.1, 0.9)
            table[nid] = (p, 1.0 - p)
            continue
        k = len(node.elements)
        free = [i for i, (_, s) in enumerate(node.elements) if s not in false]
        weights = [rng.uniform(0.2, 1.0) if i in free else 0.0 for i in range(k)]
        total = sum(weights)
        table[nid] = tuple(w / total for w in weights)
    return PsddParams(table)


def oracle_size(params: CsddParams) -> int:
    from csdd.credal import CredalSetError

    size = 1
    try:
        for cs in params.table.values():
            size *= len(enumerate_vertices(cs))
    except CredalSetError:  # a local set too wide to enumerate
        return 2 ** 62
    return size


def random_credal_instance(
    rng: Random,
    n_vars: int,
    singly: bool,
    max_width: float,
    max_elements: int | None = None,
    combo_cap: int = 2000,
):
    """(circuit, params) pair small enough for the exhaustive oracle."""
    for _ in range(200):
        circuit = random_circuit(rng, n_vars, singly, max_elements=max_elements)
        params = random_csdd_params(rng, circuit, max_width)
        if oracle_size(params) <= combo_cap:
            return circuit, params
    raise RuntimeError("could not generate an oracle-sized instance")


# ---------------------------------------------------------------------------
# enumeration oracles (independent of the message-passing code)


def brute_joint(circuit: Circuit, params: PsddParams, assignment: dict[int, bool]) -> float:
    """Joint probability by multiplying parameters along the realized tree."""

    def walk(nid: int) -> float:
        node = circuit.nodes[nid]
        if node.kind == FALSE:
            return 0.0
        if node.kind == LITERAL:
            return 1.0 if assignment[node.var] == node.polarity else 0.0
        if node.kind == TRUE:
            pmf = params.table[nid]
            return pmf[0] if assignment[node.var] else pmf[1]
        theta = params.table.get(nid)
        if theta is None:
            return 0.0
        total = 0.0
        for (p, s), t in zip(node.elements, theta):
            vp = walk(p)
            if vp > 0.0:
                return vp * walk(s) * t
        return total

    return walk(circuit._root(None))


def brute_marginal(circuit: Circuit, params: PsddParams, evidence: dict[int, bool]) -> float:
    free = [v for v in range(1, circuit.vtree.var_count + 1) if v not in evidence]
    total = 0.0
    for values in product((False, True), repeat=len(free)):
        assignment = dict(evidence)
        assignment.update(zip(free, values))
        total += brute_joint(circuit, params, assignment)
    return total


def brute_map(circuit: Circuit, params: PsddParams, evidence: dict[int, bool]):
    free = [v for v in range(1, circuit.vtree.var_count + 1) if v not in evidence]
    best, arg = -1.0, None
    for values in product((False, True), repeat=len(free)):
        assignment = dict(evidence)
        assignment.update(zip(free, values))
        p = brute_joint(circuit, params, assignment)
        if p > best:
            best, arg = p, assignment
    return best, arg


# ---------------------------------------------------------------------------
# shared fixtures


@pytest.fixture(scope="session")
def squares():
    from csdd.fixtures import squares_fixture

    return squares_fixture()


@pytest.fixture(scope="session")
def squares_counts(squares):
    from csdd.fixtures import squares_dataset
    from csdd.learn import collect_counts

    return collect_counts(squares.circuit, squares_dataset())


@pytest.fixture(scope="session")
def squares_idm(squares, squares_counts):
    from csdd.learn import idm_estimate

    return idm_estimate(squares.circuit, squares_counts, 1.0)


@pytest.fixture(scope="session")
def squares_ml(squares, squares_counts):
    from csdd.learn import ml_estimate

    return ml_estimate(squares.circuit, squares_counts)
