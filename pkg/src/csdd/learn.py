"""Datasets, context statistics and parameter estimators.

Counting routes every instance from the root: at each decision node the
unique element whose prime the instance satisfies is incremented and the
walk recurses into both the prime and the sub.  A node reached through
several contexts (shared structure) accumulates counts across all of them.

Three estimators turn counts into parameter tables: maximum likelihood,
Bayesian smoothing with a symmetric prior of total mass ``s`` spread over
the feasible states, and interval estimates ``[n/(N+s), (n+s)/(N+s)]``
tightened to reachable form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .circuit import Circuit, DECISION, FALSE, LITERAL, TRUE
from .credal import IntervalCredalSet, normalize_reachable
from .params import CsddParams, PsddParams

__all__ = [
    "LearnError",
    "Dataset",
    "ContextCounts",
    "collect_counts",
    "ml_estimate",
    "bayes_estimate",
    "idm_estimate",
    "load_dataset",
]


class LearnError(ValueError):
    """Inconsistent data or an estimator precondition failure."""


@dataclass
class Dataset:
    """Complete Boolean rows with positive multiplicities.

    ``variables[i]`` names vtree variable ``i + 1``; each row is a value
    tuple in that order.
    """

    variables: tuple[str, ...]
    rows: list[tuple[tuple[bool, ...], int]]

    def __post_init__(self) -> None:
        width = len(self.variables)
        for values, count in self.rows:
            if len(values) != width:
                raise LearnError(f"row width {len(values)} != {width} variables")
            if count < 1:
                raise LearnError(f"row counts must be >= 1, got {count}")

    @property
    def total(self) -> int:
        return sum(count for _, count in self.rows)

    def assignments(self) -> Iterable[tuple[dict[int, bool], int]]:
        for values, count in self.rows:
            yield {i + 1: bool(v) for i, v in enumerate(values)}, count


@dataclass
class ContextCounts:
    """Per-node sufficient statistics.

    ``counts[nid]`` is a per-state vector: one entry per element of a
    decision node, or (var true, var false) for a TRUE terminal.
    ``totals[nid]`` is the number of instance visits (the context total).
    """

    counts: dict[int, list[int]]
    totals: dict[int, int]
    dropped: int = 0

    def state_count(self, nid: int) -> int:
        return len(self.counts[nid])


def _feasible_reachable(circuit: Circuit, root: int) -> set[int]:
    # nodes with at least one context free of false subs
    false = circuit.false_ids()
    reach = {root}
    for nid in reversed(circuit.cone(root)):
        if nid not in reach:
            continue
        for p, s in circuit.nodes[nid].elements:
            reach.add(p)
            if s not in false:
                reach.add(s)
    return reach


def collect_counts(circuit: Circuit, dataset: Dataset, strict: bool = True) -> ContextCounts:
    """Route every instance through the circuit and tally element choices.

    Rows inconsistent with the circuit raise in strict mode and are
    dropped (counted in ``dropped``) otherwise.
    """
    root = circuit._root(None)
    if len(dataset.variables) != circuit.vtree.var_count:
        raise LearnError(
            f"dataset has {len(dataset.variables)} variables, circuit {circuit.vtree.var_count}"
        )
    counts: dict[int, list[int]] = {}
    totals: dict[int, int] = {}
    for nid in circuit.parameterized_ids(root):
        node = circuit.nodes[nid]
        counts[nid] = [0, 0] if node.kind == TRUE else [0] * len(node.elements)
        totals[nid] = 0
    dropped = 0
    nodes = circuit.nodes
    cone = circuit.cone(root)
    truth = [False] * (max(cone) + 1)
    for assignment, count in dataset.assignments():
        for nid in cone:  # one truth pass per row, reused while routing
            node = nodes[nid]
            if node.kind == FALSE:
                truth[nid] = False
            elif node.kind == TRUE:
                truth[nid] = True
            elif node.kind == LITERAL:
                truth[nid] = assignment[node.var] == node.polarity
            else:
                truth[nid] = any(truth[p] and truth[s] for p, s in node.elements)
        if not truth[root]:
            if strict:
                raise LearnError(f"row {assignment} is inconsistent with the circuit")
            dropped += count
            continue
        stack = [root]
        while stack:
            nid = stack.pop()
            node = nodes[nid]
            if node.kind == TRUE:
                totals[nid] += count
                counts[nid][0 if assignment[node.var] else 1] += count
            elif node.kind == DECISION:
                totals[nid] += count
                for idx, (p, s) in enumerate(node.elements):
                    if truth[p]:
                        counts[nid][idx] += count
                        stack.append(p)
                        stack.append(s)
                        break
                else:  # primes partition the left space; cannot happen
                    raise LearnError(f"no prime of node {nid} matched a consistent row")
    return ContextCounts(counts, totals, dropped)


def _forbidden(circuit: Circuit, nid: int) -> tuple[bool, ...]:
    node = circuit.nodes[nid]
    if node.kind == TRUE:
        return (False, False)
    false = circuit.false_ids()
    return tuple(s in false for _, s in node.elements)


def ml_estimate(circuit: Circuit, counts: ContextCounts) -> PsddParams:
    """Relative frequencies per context.  Every feasible context must occur.

    Nodes whose contexts are all infeasible (under a false sub) get a
    uniform placeholder; no query can reach them.
    """
    feasible = _feasible_reachable(circuit, circuit._root(None))
    table: dict[int, tuple[float, ...]] = {}
    for nid, vector in counts.counts.items():
        forbidden = _forbidden(circuit, nid)
        total = counts.totals[nid]
        if total == 0:
            if nid in feasible:
                raise LearnError(
                    f"node {nid} has an empty context (no data reaches it); "
                    "maximum likelihood is undefined there, use a prior"
                )
            free = [i for i, bad in enumerate(forbidden) if not bad]
            table[nid] = tuple(1.0 / len(free) if not bad else 0.0 for bad in forbidden)
            continue
        table[nid] = tuple(c / total for c in vector)
    params = PsddParams(table)
    params.validate(circuit)
    return params


def bayes_estimate(circuit: Circuit, counts: ContextCounts, ess: float) -> PsddParams:
    """Symmetric-prior smoothing: ``(n_i + s/k') / (N + s)``.

    The prior mass ``s`` spreads over the feasible states only, so states
    with a false sub keep probability exactly zero.
    """
    if ess <= 0:
        raise LearnError("equivalent sample size must be positive")
    table: dict[int, tuple[float, ...]] = {}
    for nid, vector in counts.counts.items():
        forbidden = _forbidden(circuit, nid)
        free = sum(1 for bad in forbidden if not bad)
        total = counts.totals[nid]
        table[nid] = tuple(
            0.0 if bad else (c + ess / free) / (total + ess)
            for c, bad in zip(vector, forbidden)
        )
    params = PsddParams(table)
    params.validate(circuit)
    return params


def idm_estimate(circuit: Circuit, counts: ContextCounts, ess: float) -> CsddParams:
    """Interval estimates ``[n/(N+s), (n+s)/(N+s)]`` per feasible state.

    States with a false sub get [0, 0]; the result is tightened to
    reachable form, which never changes the feasible set.
    """
    if ess <= 0:
        raise LearnError("equivalent sample size must be positive")
    table: dict[int, IntervalCredalSet] = {}
    for nid, vector in counts.counts.items():
        forbidden = _forbidden(circuit, nid)
        total = counts.totals[nid]
        lower = tuple(0.0 if bad else c / (total + ess) for c, bad in zip(vector, forbidden))
        upper = tuple(0.0 if bad else (c + ess) / (total + ess) for c, bad in zip(vector, forbidden))
        table[nid] = normalize_reachable(lower, upper)
    params = CsddParams(table)
    params.validate(circuit)
    return params


def load_dataset(source) -> Dataset:
    """Read a dataset file (see the formats module for the grammar)."""
    from . import formats

    return formats.read_dataset(source)
