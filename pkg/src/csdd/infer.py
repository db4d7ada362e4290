"""Inference over point and credal parameter tables.

Precise queries (probability of evidence, most probable completion) are
single bottom-up passes.  Credal queries replace each decision-node sum
with a local linear program over the node's credal set:

* lower/upper probability of evidence is exact for every topology;
* lower/upper conditional probability of a single variable runs the
  evidence pass inside a sign test that is bisected over [0, 1];
* robustness checks whether one most-probable completion stays optimal
  for every parameter table between the bounds.

On circuits with shared structure the conditional and robustness passes
may optimize one shared credal set toward different extreme points in
different subproblems.  The result is then an outer bound: never tighter
than the truth.  Every query records which extreme point each local
program used, and an exactness certificate inspects shared nodes for
divergent choices; a brute-force refinement enumerates the flagged nodes'
extreme points to recover the exact value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

from .circuit import (
    Circuit,
    ConnectivityReport,
    DECISION,
    FALSE,
    LITERAL,
    TRUE,
    is_consistent,
)
from .credal import (
    IntervalCredalSet,
    _max_fast,
    _max_ratio_vertex,
    _min_fast,
    enumerate_vertices,
)
from .params import CsddParams, PsddParams

__all__ = [
    "InferenceError",
    "Query",
    "InferenceTrace",
    "ExactnessCertificate",
    "ConditionalResult",
    "RobustnessVerdict",
    "EXACT",
    "POSSIBLY_OUTER",
    "ROBUST",
    "WEAKLY_ROBUST",
    "NOT_ROBUST",
    "marginal",
    "joint_probability",
    "map_query",
    "lower_marginal",
    "upper_marginal",
    "conditional_sign",
    "lower_conditional",
    "upper_conditional",
    "credal_map_upper",
    "robustness",
    "exactness_certificate",
    "strong_extension_oracle",
    "brute_force_exact",
]

ZERO_TOL = 1e-12        # numerical zero for sign decisions
TIE_REL = 1e-12         # relative tolerance for max ties
V_TOL = 1e-9            # robustness verdict threshold on V - 1
DEFAULT_BISECTION_TOL = 1e-6
ORACLE_CAP = 10 ** 6
ORACLE_VAR_LIMIT = 16

EXACT = "exact"
POSSIBLY_OUTER = "possibly_outer"
ROBUST = "robust"
WEAKLY_ROBUST = "weakly_robust"
NOT_ROBUST = "not_robust"

MIN, MAX = 0, 1


class InferenceError(ValueError):
    """Invalid query (inconsistent evidence, bad target, guard overrun)."""


@dataclass(frozen=True)
class Query:
    """A reusable query description for the oracle and brute-force paths.

    ``kind`` is one of ``marginal``, ``conditional`` (lower conditional of
    ``target``), ``map`` or ``robustness``.  Assignments are stored as
    sorted (var, value) tuples so queries hash.
    """

    kind: str
    evidence: tuple[tuple[int, bool], ...]
    target: tuple[int, bool] | None = None
    xstar: tuple[tuple[int, bool], ...] | None = None

    @classmethod
    def make(cls, kind, evidence: Mapping[int, bool], target=None, xstar=None) -> "Query":
        return cls(
            kind,
            tuple(sorted((int(v), bool(b)) for v, b in evidence.items())),
            None if target is None else (int(target[0]), bool(target[1])),
            None if xstar is None else tuple(sorted((int(v), bool(b)) for v, b in xstar.items())),
        )

    @property
    def evidence_dict(self) -> dict[int, bool]:
        return dict(self.evidence)

    @property
    def xstar_dict(self) -> dict[int, bool] | None:
        return None if self.xstar is None else dict(self.xstar)


class InferenceTrace:
    """Per-query record of the extreme point every local program used.

    ``uses[node]`` holds the distinct optimizing points seen for that
    node's credal set; a node whose value did not pin any point (e.g. an
    unobserved terminal) records nothing.  ``sigma[(node, element)]``
    stores the sibling marginal consumed by a conditional pass.
    """

    def __init__(self) -> None:
        self.uses: dict[int, list[tuple[float, ...]]] = {}
        self.sigma: dict[tuple[int, int], tuple[str, float]] = {}

    def record(self, nid: int, point: tuple[float, ...] | None) -> None:
        if point is None:
            return
        seen = self.uses.setdefault(nid, [])
        for other in seen:
            if all(abs(a - b) <= ZERO_TOL for a, b in zip(other, point)):
                return
        seen.append(tuple(point))

    def conflicted(self, multiplicity: Mapping[int, int]) -> tuple[int, ...]:
        return tuple(
            nid
            for nid, points in sorted(self.uses.items())
            if multiplicity.get(nid, 1) > 1 and len(points) > 1
        )


@dataclass(frozen=True)
class ExactnessCertificate:
    status: str
    conflicted: tuple[int, ...] = ()

    @property
    def is_exact(self) -> bool:
        return self.status == EXACT


def exactness_certificate(trace: InferenceTrace, report: ConnectivityReport) -> ExactnessCertificate:
    """Exact unless a shared node's credal set was pinned to two extreme points.

    Singly connected circuits have no shared nodes, hence always come out
    exact.
    """
    conflicted = trace.conflicted(report.multiplicity)
    return ExactnessCertificate(POSSIBLY_OUTER if conflicted else EXACT, conflicted)


@dataclass
class ConditionalResult:
    value: float
    iterations: int
    bracket: tuple[float, float]
    trace: InferenceTrace | None
    certificate: ExactnessCertificate | None


@dataclass
class RobustnessVerdict:
    value: float
    label: str
    attaining: tuple[tuple[tuple[int, bool], ...], ...]
    trace: InferenceTrace | None
    certificate: ExactnessCertificate | None


# ---------------------------------------------------------------------------
# precise queries


def _check_evidence(circuit: Circuit, evidence: Mapping[int, bool]) -> None:
    for var in evidence:
        if not 1 <= var <= circuit.vtree.var_count:
            raise InferenceError(f"evidence variable {var} is not in the circuit")


def marginal(circuit: Circuit, params: PsddParams, evidence: Mapping[int, bool]) -> float:
    """Probability of the (partial) evidence under the point table."""
    _check_evidence(circuit, evidence)
    root = circuit._root(None)
    values: dict[int, float] = {}
    nodes = circuit.nodes
    for nid in circuit.cone(root):
        node = nodes[nid]
        if node.kind == FALSE:
            values[nid] = 0.0
        elif node.kind == LITERAL:
            val = evidence.get(node.var)
            values[nid] = 1.0 if val is None or val == node.polarity else 0.0
        elif node.kind == TRUE:
            val = evidence.get(node.var)
            pmf = params.table[nid]
            values[nid] = 1.0 if val is None else (pmf[0] if val else pmf[1])
        else:
            theta = params.table.get(nid)
            if theta is None:  # unsatisfiable decision node, no distribution
                values[nid] = 0.0
            else:
                values[nid] = math.fsum(
                    values[p] * values[s] * t for (p, s), t in zip(node.elements, theta)
                )
    return values[root]


def joint_probability(circuit: Circuit, params: PsddParams, assignment: Mapping[int, bool]) -> float:
    """Probability of a complete assignment."""
    if len(assignment) != circuit.vtree.var_count:
        raise InferenceError("joint probability needs a complete assignment")
    return marginal(circuit, params, assignment)


def map_query(
    circuit: Circuit, params: PsddParams, evidence: Mapping[int, bool]
) -> tuple[float, dict[int, bool]]:
    """Most probable completion of the unobserved variables.

    Returns ``(P(x*, e), x*)``; ties break toward the lowest element index
    and toward the true state of a terminal.  Requires consistent evidence.
    """
    _check_evidence(circuit, evidence)
    root = circuit._root(None)
    nodes = circuit.nodes
    values: dict[int, float] = {}
    choice: dict[int, int] = {}
    for nid in circuit.cone(root):
        node = nodes[nid]
        if node.kind == FALSE:
            values[nid] = 0.0
        elif node.kind == LITERAL:
            val = evidence.get(node.var)
            values[nid] = 1.0 if val is None or val == node.polarity else 0.0
        elif node.kind == TRUE:
            pmf = params.table[nid]
            val = evidence.get(node.var)
            if val is None:
                values[nid] = max(pmf)
                choice[nid] = 0 if pmf[0] >= pmf[1] else 1
            else:
                values[nid] = pmf[0] if val else pmf[1]
        else:
            theta = params.table.get(nid)
            if theta is None:
                values[nid] = 0.0
                continue
            best, arg = 0.0, None
            for idx, ((p, s), t) in enumerate(zip(node.elements, theta)):
                cand = values[p] * values[s] * t
                if arg is None or cand > best:
                    best, arg = cand, idx
            values[nid] = best
            choice[nid] = arg
    if values[root] <= 0.0:
        raise InferenceError("evidence has zero probability under the table")
    assignment = dict(evidence)
    stack = [root]
    while stack:
        nid = stack.pop()
        node = nodes[nid]
        if node.kind == DECISION:
            p, s = node.elements[choice[nid]]
            stack.append(p)
            stack.append(s)
        elif node.kind == LITERAL and node.var not in evidence:
            assignment[node.var] = node.polarity
        elif node.kind == TRUE and node.var not in evidence:
            assignment[node.var] = choice[nid] == 0
    return values[root], assignment


# ---------------------------------------------------------------------------
# credal evidence passes


class _Sweep:
    """One lower or upper evidence pass: per-node value and pinned point."""

    __slots__ = ("sense", "evidence", "values", "vertices")

    def __init__(self, sense: int, evidence: Mapping[int, bool], size: int) -> None:
        self.sense = sense
        self.evidence = evidence
        self.values = [0.0] * size
        self.vertices: list[tuple[float, ...] | None] = [None] * size


def _credal_sweep(
    circuit: Circuit, params: CsddParams, evidence: Mapping[int, bool], sense: int
) -> _Sweep:
    sweep = _Sweep(sense, evidence, len(circuit.nodes))
    values = sweep.values
    vertices = sweep.vertices
    table = params.table
    opt = _min_fast if sense == MIN else _max_fast
    for nid in circuit.cone(None):
        node = circuit.nodes[nid]
        if node.kind == FALSE:
            values[nid] = 0.0
        elif node.kind == LITERAL:
            val = evidence.get(node.var)
            values[nid] = 1.0 if val is None or val == node.polarity else 0.0
        elif node.kind == TRUE:
            val = evidence.get(node.var)
            if val is None:
                values[nid] = 1.0
            else:
                state = 0 if val else 1
                coeffs = (1.0, 0.0) if state == 0 else (0.0, 1.0)
                value, point = opt(table[nid], coeffs)
                values[nid] = value
                vertices[nid] = point
        else:
            coeffs = [values[p] * values[s] for p, s in node.elements]
            if any(coeffs):
                value, point = opt(table[nid], coeffs)
                values[nid] = value
                vertices[nid] = point
            else:
                values[nid] = 0.0
    return sweep


def lower_marginal(
    circuit: Circuit,
    params: CsddParams,
    evidence: Mapping[int, bool],
    trace: InferenceTrace | None = None,
) -> float:
    """Exact lower probability of the evidence, any topology."""
    _check_evidence(circuit, evidence)
    sweep = _credal_sweep(circuit, params, evidence, MIN)
    if trace is not None:
        for nid, point in enumerate(sweep.vertices):
            trace.record(nid, point)
    return sweep.values[circuit._root(None)]


def upper_marginal(
    circuit: Circuit,
    params: CsddParams,
    evidence: Mapping[int, bool],
    trace: InferenceTrace | None = None,
) -> float:
    """Exact upper probability of the evidence, any topology."""
    _check_evidence(circuit, evidence)
    sweep = _credal_sweep(circuit, params, evidence, MAX)
    if trace is not None:
        for nid, point in enumerate(sweep.vertices):
            trace.record(nid, point)
    return sweep.values[circuit._root(None)]


def _mark_chain(
    trace: InferenceTrace,
    circuit: Circuit,
    start: int,
    low: _Sweep,
    up: _Sweep,
    sense: int,
) -> None:
    """Record the extreme points that realize one node's swept value.

    For a lower value, elements whose contribution vanishes only because a
    child's lower bound is zero pin that child too (the zero must be
    attained); contributions that are zero for every member are free.
    """
    sweep = low if sense == MIN else up
    stack = [start]
    seen = set()
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        node = circuit.nodes[nid]
        if node.kind == TRUE:
            trace.record(nid, sweep.vertices[nid])
        elif node.kind == DECISION:
            trace.record(nid, sweep.vertices[nid])
            for p, s in node.elements:
                vp, vs = sweep.values[p], sweep.values[s]
                if vp > 0.0 and vs > 0.0:
                    stack.append(p)
                    stack.append(s)
                elif sense == MIN:
                    if vp == 0.0 and up.values[p] > 0.0:
                        stack.append(p)
                    elif vp > 0.0 and vs == 0.0 and up.values[s] > 0.0:
                        stack.append(s)


# ---------------------------------------------------------------------------
# conditional queries


class _ConditionalEngine:
    """Shared machinery for the sign test at a given threshold.

    Sibling evidence bounds are computed once; each threshold evaluation
    only walks the nodes containing the queried variable.
    """

    def __init__(
        self,
        circuit: Circuit,
        params: CsddParams,
        var: int,
        val: bool,
        evidence: Mapping[int, bool],
    ) -> None:
        if var in evidence:
            raise InferenceError(f"queried variable {var} appears in the evidence")
        _check_evidence(circuit, evidence)
        _check_evidence(circuit, {var: val})
        if not is_consistent(circuit, evidence):
            raise InferenceError("evidence violates circuit constraints")
        self.circuit = circuit
        self.params = params
        self.var = var
        self.val = bool(val)
        self.evidence = dict(evidence)
        self.root = circuit._root(None)
        self.low = _credal_sweep(circuit, params, evidence, MIN)
        self.up = _credal_sweep(circuit, params, evidence, MAX)
        vtree = circuit.vtree
        self.spine = [
            nid
            for nid in circuit.cone(self.root)
            if vtree.contains_var(circuit.nodes[nid].vtree, var)
        ]
        # per spine decision node: (credal set, [(query-side child, sibling child)])
        self.plan: dict[int, tuple[IntervalCredalSet, list[tuple[int, int]]]] = {}
        for nid in self.spine:
            node = circuit.nodes[nid]
            if node.kind != DECISION or nid not in params.table:
                continue
            left = vtree.contains_var(vtree.left(node.vtree), var)
            pairs = [(p, s) if left else (s, p) for p, s in node.elements]
            self.plan[nid] = (params.table[nid], pairs)

    def value_at(self, mu: float, trace: InferenceTrace | None = None) -> float:
        """Root message of the threshold test; positive iff the lower
        conditional exceeds ``mu``."""
        circuit = self.circuit
        low_values, up_values = self.low.values, self.up.values
        msg: dict[int, float] = {}
        for nid in self.spine:
            node = circuit.nodes[nid]
            if node.kind == FALSE:
                msg[nid] = 0.0
            elif node.kind == LITERAL:
                msg[nid] = (1.0 - mu) if node.polarity == self.val else -mu
            elif node.kind == TRUE:
                cs = self.params.table[nid]
                state = 0 if self.val else 1
                lx, ux = cs.lower[state], cs.upper[state]
                lnot, unot = cs.lower[1 - state], cs.upper[1 - state]
                value = min((1.0 - mu) * lx - mu * unot, (1.0 - mu) * ux - mu * lnot)
                msg[nid] = value
                if trace is not None:
                    # the minimum pins the member with the smaller target mass
                    point = (lx, unot) if state == 0 else (unot, lx)
                    trace.record(nid, point)
            elif nid not in self.plan:
                msg[nid] = 0.0  # unsatisfiable decision node
            else:
                cs, pairs = self.plan[nid]
                coeffs = []
                for idx, (u_child, w_child) in enumerate(pairs):
                    mu_msg = msg[u_child]
                    w_node = circuit.nodes[w_child]
                    if w_node.kind == FALSE:
                        sigma = 0.0
                        direction = "lower"
                    elif mu_msg < 0.0:
                        sigma = up_values[w_child]
                        direction = "upper"
                    else:
                        sigma = low_values[w_child]
                        direction = "lower"
                    coeffs.append(mu_msg * sigma)
                    if trace is not None:
                        trace.sigma[(nid, idx)] = (direction, sigma)
                        if w_node.kind != FALSE:
                            _mark_chain(
                                trace,
                                circuit,
                                w_child,
                                self.low,
                                self.up,
                                MAX if direction == "upper" else MIN,
                            )
                value, point = _min_fast(cs, coeffs)
                msg[nid] = value
                if trace is not None:
                    trace.record(nid, point if any(coeffs) else None)
        return msg[self.root]

    def sign_at(self, mu: float) -> int:
        value = self.value_at(mu)
        if value > ZERO_TOL:
            return 1
        if value < -ZERO_TOL:
            return -1
        return 0


def conditional_sign(
    circuit: Circuit,
    params: CsddParams,
    mu: float,
    var: int,
    val: bool,
    evidence: Mapping[int, bool],
) -> int:
    """Sign of ``lower P(var=val | evidence) - mu`` (0 means numerical zero)."""
    return _ConditionalEngine(circuit, params, var, val, evidence).sign_at(mu)


def lower_conditional(
    circuit: Circuit,
    params: CsddParams,
    var: int,
    val: bool,
    evidence: Mapping[int, bool],
    tol: float = DEFAULT_BISECTION_TOL,
    want_certificate: bool = True,
) -> ConditionalResult:
    """Lower conditional probability of a single variable given evidence.

    Bisects the sign test until the bracket is narrower than ``tol`` and
    returns the bracket's left edge, so the answer never overshoots the
    true bound.  Exact on singly connected circuits up to ``tol``; an
    outer bound otherwise, flagged through the certificate.
    """
    if tol <= 0:
        raise InferenceError("tolerance must be positive")
    engine = _ConditionalEngine(circuit, params, var, val, evidence)
    iterations = 1
    lo, hi = 0.0, 1.0
    if engine.sign_at(0.0) <= 0:
        mu_hat, lo, hi = 0.0, 0.0, 0.0
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            iterations += 1
            if engine.sign_at(mid) > 0:
                lo = mid
            else:
                hi = mid
        mu_hat = lo
    trace = certificate = None
    if want_certificate:
        trace = InferenceTrace()
        engine.value_at(mu_hat, trace)
        certificate = exactness_certificate(trace, circuit.connectivity())
    return ConditionalResult(mu_hat, iterations, (lo, hi), trace, certificate)


def upper_conditional(
    circuit: Circuit,
    params: CsddParams,
    var: int,
    val: bool,
    evidence: Mapping[int, bool],
    tol: float = DEFAULT_BISECTION_TOL,
    want_certificate: bool = True,
) -> ConditionalResult:
    """Upper conditional via conjugacy with the complementary lower query."""
    inner = lower_conditional(circuit, params, var, not val, evidence, tol, want_certificate)
    return ConditionalResult(
        1.0 - inner.value, inner.iterations, inner.bracket, inner.trace, inner.certificate
    )


# ---------------------------------------------------------------------------
# credal MAP and robustness

Rep = tuple[tuple[int, bool], ...]


def _merge_reps(a: Sequence[Rep], b: Sequence[Rep], cap: int = 2) -> list[Rep]:
    out: list[Rep] = []
    for ra in a:
        for rb in b:
            merged = tuple(sorted(ra + rb))
            if merged not in out:
                out.append(merged)
            if len(out) >= cap:
                return out
    return out


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_REL * max(1.0, abs(a), abs(b))


class _CredalMap:
    """Upper completion bounds M(n) plus tie structure for backtracking."""

    __slots__ = ("values", "tied", "reps")

    def __init__(self, size: int) -> None:
        self.values = [0.0] * size
        self.tied: list[tuple[int, ...]] = [()] * size
        self.reps: list[list[Rep]] = [[] for _ in range(size)]


def _credal_map(circuit: Circuit, params: CsddParams, evidence: Mapping[int, bool]) -> _CredalMap:
    cm = _CredalMap(len(circuit.nodes))
    table = params.table
    for nid in circuit.cone(None):
        node = circuit.nodes[nid]
        if node.kind == FALSE:
            continue
        if node.kind == LITERAL:
            val = evidence.get(node.var)
            if val is None:
                cm.values[nid] = 1.0
                cm.reps[nid] = [((node.var, node.polarity),)]
            else:
                cm.values[nid] = 1.0 if val == node.polarity else 0.0
                cm.reps[nid] = [()]
        elif node.kind == TRUE:
            cs = table[nid]
            val = evidence.get(node.var)
            if val is None:
                up_true, up_false = cs.upper
                cm.values[nid] = max(up_true, up_false)
                states = []
                if _close(up_true, cm.values[nid]):
                    states.append(0)
                if _close(up_false, cm.values[nid]):
                    states.append(1)
                cm.tied[nid] = tuple(states)
                cm.reps[nid] = [((node.var, st == 0),) for st in states]
            else:
                cm.values[nid] = cs.upper[0 if val else 1]
                cm.reps[nid] = [()]
        else:
            cs = table.get(nid)
            if cs is None:
                continue
            best, cands = 0.0, []
            for idx, (p, s) in enumerate(node.elements):
                value = cs.upper[idx] * cm.values[p] * cm.values[s]
                cands.append(value)
                if value > best:
                    best = value
            tied = tuple(
                idx for idx, value in enumerate(cands) if value > 0.0 and _close(value, best)
            )
            cm.values[nid] = best
            cm.tied[nid] = tied
            reps: list[Rep] = []
            for idx in tied:
                p, s = node.elements[idx]
                for rep in _merge_reps(cm.reps[p], cm.reps[s]):
                    if rep not in reps:
                        reps.append(rep)
                    if len(reps) >= 2:
                        break
                if len(reps) >= 2:
                    break
            cm.reps[nid] = reps
    return cm


def credal_map_upper(circuit: Circuit, params: CsddParams, evidence: Mapping[int, bool]) -> float:
    """``max over completions x of upper P(x, evidence)``."""
    _check_evidence(circuit, evidence)
    return _credal_map(circuit, params, evidence).values[circuit._root(None)]


def _mark_map_chain(
    trace: InferenceTrace,
    circuit: Circuit,
    params: CsddParams,
    cm: _CredalMap,
    evidence: Mapping[int, bool],
    start: int,
) -> None:
    stack = [start]
    seen = set()
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        node = circuit.nodes[nid]
        if node.kind == TRUE:
            cs = params.table[nid]
            val = evidence.get(node.var)
            if val is None:
                states = cm.tied[nid]
                if len(states) == 1:
                    coeffs = (1.0, 0.0) if states[0] == 0 else (0.0, 1.0)
                    trace.record(nid, _max_fast(cs, coeffs)[1])
            elif cm.values[nid] > 0.0:
                coeffs = (1.0, 0.0) if val else (0.0, 1.0)
                trace.record(nid, _max_fast(cs, coeffs)[1])
        elif node.kind == DECISION:
            cs = params.table.get(nid)
            if cs is None:
                continue
            for idx in cm.tied[nid]:
                coeffs = tuple(1.0 if i == idx else 0.0 for i in range(cs.k))
                trace.record(nid, _max_fast(cs, coeffs)[1])
                p, s = node.elements[idx]
                stack.append(p)
                stack.append(s)


def _route(circuit: Circuit, assignment: Mapping[int, bool]) -> dict[int, int]:
    """Realized element index per decision node on the assignment's subtree."""
    root = circuit._root(None)
    truth: dict[int, bool] = {}
    for nid in circuit.cone(root):
        node = circuit.nodes[nid]
        if node.kind == FALSE:
            truth[nid] = False
        elif node.kind == TRUE:
            truth[nid] = True
        elif node.kind == LITERAL:
            truth[nid] = assignment[node.var] == node.polarity
        else:
            truth[nid] = any(truth[p] and truth[s] for p, s in node.elements)
    realized: dict[int, int] = {}
    stack = [root]
    while stack:
        nid = stack.pop()
        node = circuit.nodes[nid]
        if node.kind != DECISION or nid in realized:
            continue
        for idx, (p, s) in enumerate(node.elements):
            if truth[p]:
                realized[nid] = idx
                stack.append(p)
                stack.append(s)
                break
    return realized


def robustness(
    circuit: Circuit,
    params: CsddParams,
    evidence: Mapping[int, bool],
    xstar: Mapping[int, bool],
    want_certificate: bool = True,
) -> RobustnessVerdict:
    """Is ``xstar`` the most probable completion for every compatible table?

    Computes ``V = max over completions x, over tables, of
    P(x, e) / P(xstar, e)`` bottom-up; V is exact on singly connected
    circuits and an upper bound otherwise (robust verdicts are certain,
    non-robust ones may be conservative).  The verdict is robust when only
    ``xstar`` attains V = 1, weakly robust when the maximum is tied, and
    not robust otherwise (including inconsistent ``xstar``).
    """
    _check_evidence(circuit, evidence)
    _check_evidence(circuit, xstar)
    total = dict(evidence)
    for var, val in xstar.items():
        if var in evidence:
            raise InferenceError(f"variable {var} is both queried and observed")
        total[var] = bool(val)
    if len(total) != circuit.vtree.var_count:
        raise InferenceError("evidence and completion must cover all variables")
    if not is_consistent(circuit, total):
        return RobustnessVerdict(1.0, NOT_ROBUST, (), InferenceTrace() if want_certificate else None,
                                 ExactnessCertificate(EXACT) if want_certificate else None)
    cm = _credal_map(circuit, params, evidence)
    low_xe = _credal_sweep(circuit, params, total, MIN)
    realized = _route(circuit, total)
    table = params.table
    nodes = circuit.nodes

    values: dict[int, float] = {}
    reps: dict[int, list[Rep]] = {}
    # candidates kept for the certificate pass:
    #   ('A', j) stay on the realized branch, ('U', i, j, point) switch to i
    cands: dict[int, list[tuple[float, tuple]]] = {}

    def visit(nid: int) -> None:
        if nid in values:
            return
        node = nodes[nid]
        if node.kind == LITERAL:
            values[nid] = 1.0
            reps[nid] = [((node.var, node.polarity),)] if node.var in xstar else [()]
            return
        if node.kind == TRUE:
            if node.var not in xstar:
                values[nid] = 1.0
                reps[nid] = [()]
                return
            cs = table[nid]
            want_true = xstar[node.var]
            if want_true:
                l = cs.lower[0]
                flip = (1.0 - l) / l if l > 0 else math.inf
                point = (l, 1.0 - l)
            else:
                u = cs.upper[0]
                flip = u / (1.0 - u) if u < 1 else math.inf
                point = (u, 1.0 - u)
            value = max(1.0, flip)
            values[nid] = value
            rep_list: list[Rep] = []
            if _close(1.0, value):
                rep_list.append(((node.var, want_true),))
            if flip >= value or _close(flip, value):
                rep_list = _dedup_reps(rep_list + [((node.var, not want_true),)])
            reps[nid] = rep_list
            cands[nid] = [(flip, ("T", point))]
            return
        # realized decision node
        j = realized[nid]
        pj, sj = node.elements[j]
        visit(pj)
        visit(sj)
        cs = table[nid]
        local: list[tuple[float, tuple]] = []
        stay = values[pj] * values[sj]
        local.append((stay, ("A", j)))
        denom = low_xe.values[pj] * low_xe.values[sj]
        for i, (pi, si) in enumerate(node.elements):
            if i == j or cs.upper[i] <= 0.0:
                continue
            num = cm.values[pi] * cm.values[si]
            if num <= 0.0:
                continue
            if denom <= 0.0 or cs.lower[j] <= 0.0:
                local.append((math.inf, ("U", i, j, None)))
                continue
            ratio, point = _max_ratio_vertex(cs, i, j, num / denom)
            local.append((ratio, ("U", i, j, point)))
        best = max(value for value, _ in local)
        values[nid] = best
        rep_list = []
        for value, tag in local:
            if not (value == best or _close(value, best)):
                continue
            if tag[0] == "A":
                rep_list = _dedup_reps(rep_list + _merge_reps(reps[pj], reps[sj]))
            else:
                i = tag[1]
                pi, si = node.elements[i]
                rep_list = _dedup_reps(rep_list + _merge_reps(cm.reps[pi], cm.reps[si]))
        reps[nid] = rep_list
        cands[nid] = local

    root = circuit._root(None)
    visit(root)
    value = values[root]

    trace = certificate = None
    if want_certificate:
        trace = InferenceTrace()
        up_xe = _credal_sweep(circuit, params, total, MAX)
        stack = [root]
        marked = set()
        while stack:
            nid = stack.pop()
            if nid in marked:
                continue
            marked.add(nid)
            node = nodes[nid]
            best = values.get(nid)
            for cand_value, tag in cands.get(nid, ()):
                if not (cand_value >= best or _close(cand_value, best)):
                    continue
                if tag[0] == "T":
                    trace.record(nid, tag[1])
                elif tag[0] == "A":
                    p, s = node.elements[tag[1]]
                    stack.append(p)
                    stack.append(s)
                else:
                    _, i, j, point = tag
                    trace.record(nid, point)
                    pi, si = node.elements[i]
                    pj, sj = node.elements[j]
                    _mark_map_chain(trace, circuit, params, cm, evidence, pi)
                    _mark_map_chain(trace, circuit, params, cm, evidence, si)
                    _mark_chain(trace, circuit, pj, low_xe, up_xe, MIN)
                    _mark_chain(trace, circuit, sj, low_xe, up_xe, MIN)
        certificate = exactness_certificate(trace, circuit.connectivity())

    xrep = tuple(sorted((int(v), bool(b)) for v, b in xstar.items()))
    attaining = tuple(reps[root])
    if math.isinf(value) or value > 1.0 + V_TOL:
        label = NOT_ROBUST
    elif xrep not in attaining:
        label = NOT_ROBUST
    elif len(attaining) >= 2:
        label = WEAKLY_ROBUST
    else:
        label = ROBUST
    return RobustnessVerdict(value, label, attaining, trace, certificate)


def _dedup_reps(reps: Iterable[Rep], cap: int = 2) -> list[Rep]:
    out: list[Rep] = []
    for rep in reps:
        if rep not in out:
            out.append(rep)
        if len(out) >= cap:
            break
    return out


# ---------------------------------------------------------------------------
# oracles and brute force


def _functional(circuit: Circuit, params: PsddParams, query: Query) -> float:
    evidence = query.evidence_dict
    if query.kind == "marginal":
        return marginal(circuit, params, evidence)
    if query.kind == "conditional":
        var, val = query.target
        denom = marginal(circuit, params, evidence)
        if denom <= 0.0:
            raise InferenceError("conditional oracle hit zero evidence probability")
        num = marginal(circuit, params, {**evidence, var: val})
        return num / denom
    if query.kind == "map":
        return map_query(circuit, params, evidence)[0]
    if query.kind == "robustness":
        denom = joint_probability(circuit, params, {**evidence, **query.xstar_dict})
        if denom <= 0.0:
            raise InferenceError("robustness oracle hit zero completion probability")
        return map_query(circuit, params, evidence)[0] / denom
    raise InferenceError(f"unknown query kind {query.kind!r}")


def strong_extension_oracle(
    circuit: Circuit,
    params: CsddParams,
    query: Query,
    sense: str = "min",
    cap: int = ORACLE_CAP,
) -> float:
    """Exhaustive extremum over every combination of local extreme points.

    Exponential reference implementation used to validate the polynomial
    passes; guarded by a combination cap and a variable limit.
    """
    if circuit.vtree.var_count > ORACLE_VAR_LIMIT:
        raise InferenceError(f"oracle guarded at {ORACLE_VAR_LIMIT} variables")
    node_ids = circuit.parameterized_ids(None)
    vertex_lists = [enumerate_vertices(params.table[nid]) for nid in node_ids]
    combos = 1
    for lst in vertex_lists:
        combos *= len(lst)
        if combos > cap:
            raise InferenceError(f"oracle would enumerate more than {cap} tables")
    best = None
    better = min if sense == "min" else max
    for combo in product(*vertex_lists):
        table = PsddParams({nid: v.point for nid, v in zip(node_ids, combo)})
        value = _functional(circuit, table, query)
        best = value if best is None else better(best, value)
    return best


def _psdd_from_trace(
    circuit: Circuit, params: CsddParams, trace: InferenceTrace
) -> PsddParams:
    points = {nid: uses[0] for nid, uses in trace.uses.items() if uses}
    return params.select(points)


def brute_force_exact(
    circuit: Circuit,
    params: CsddParams,
    query: Query,
    result: ConditionalResult | RobustnessVerdict,
    cap: int = ORACLE_CAP,
    tol: float = 1e-12,
):
    """Exact refinement of a possibly-outer conditional or robustness result.

    Enumerates extreme points of the conflicted nodes, re-runs the query
    with those nodes pinned, and recurses if new conflicts appear; exact
    leaves are evaluated on the precise table the trace pinned.  Cost is
    exponential only in the number of conflicted credal sets.
    """
    if result.certificate is None:
        raise InferenceError("brute force needs a result carrying a certificate")
    if result.certificate.is_exact:
        # nothing to refine: the algorithm's own output stands
        return result.value if query.kind == "conditional" else result
    if query.kind == "conditional":
        return _brute_conditional(circuit, params, query, result, cap, tol)
    if query.kind == "robustness":
        return _brute_robustness(circuit, params, query, result, cap)
    raise InferenceError("brute force applies to conditional and robustness queries")


def _conflict_combos(params: CsddParams, conflicted: Sequence[int], cap: int):
    vertex_lists = [enumerate_vertices(params.table[nid]) for nid in conflicted]
    combos = 1
    for lst in vertex_lists:
        combos *= len(lst)
        if combos > cap:
            raise InferenceError(f"brute force would enumerate more than {cap} tables")
    return vertex_lists, combos


def _brute_conditional(circuit, params, query, result, cap, tol) -> float:
    if result.certificate.is_exact:
        if result.trace is not None and result.trace.uses:
            table = _psdd_from_trace(circuit, params, result.trace)
            return _functional(circuit, table, query)
        return result.value
    conflicted = result.certificate.conflicted
    vertex_lists, combos = _conflict_combos(params, conflicted, cap)
    var, val = query.target
    best = None
    for combo in product(*vertex_lists):
        pinned = params.pinned({nid: v.point for nid, v in zip(conflicted, combo)})
        res = lower_conditional(circuit, pinned, var, val, query.evidence_dict, tol=tol)
        value = _brute_conditional(circuit, pinned, query, res, max(1, cap // combos), tol)
        best = value if best is None else min(best, value)
    return best


def _brute_robustness(circuit, params, query, result, cap) -> RobustnessVerdict:
    if result.certificate.is_exact:
        return result
    conflicted = result.certificate.conflicted
    vertex_lists, combos = _conflict_combos(params, conflicted, cap)
    evidence, xstar = query.evidence_dict, query.xstar_dict
    best_value = 0.0
    attaining: list[Rep] = []
    for combo in product(*vertex_lists):
        pinned = params.pinned({nid: v.point for nid, v in zip(conflicted, combo)})
        res = robustness(circuit, pinned, evidence, xstar)
        leaf = _brute_robustness(circuit, pinned, query, res, max(1, cap // combos))
        if leaf.value > best_value and not _close(leaf.value, best_value):
            best_value = leaf.value
            attaining = list(leaf.attaining)
        elif _close(leaf.value, best_value):
            attaining = _dedup_reps(attaining + list(leaf.attaining), cap=4)
    xrep = tuple(sorted((int(v), bool(b)) for v, b in xstar.items()))
    if math.isinf(best_value) or best_value > 1.0 + V_TOL:
        label = NOT_ROBUST
    elif xrep not in attaining:
        label = NOT_ROBUST
    elif len(attaining) >= 2:
        label = WEAKLY_ROBUST
    else:
        label = ROBUST
    return RobustnessVerdict(best_value, label, tuple(attaining), None, ExactnessCertificate(EXACT))
