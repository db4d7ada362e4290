"""Vtrees and SDD circuits.

A vtree is a full binary tree whose leaves are the Boolean variables; it
fixes how every circuit node decomposes its variable set.  A circuit is an
append-only store of terminal and decision nodes, each tagged with the
vtree node it is normalized for.  Decision nodes are lists of
(prime, sub) element pairs whose primes partition the assignments of the
left vtree variables.  Node ids grow from the inputs toward the root, so
the id order is always a topological order.

The module also provides the structural analyses used by the inference
algorithms (context multiplicity, connectivity classification) and a small
apply/negate compiler that turns formulas into circuits normalized for a
given vtree.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from random import Random
from typing import Mapping, Sequence

from .formula import And, Const, Formula, Not, Or, Var

__all__ = [
    "Vtree",
    "SddNode",
    "Circuit",
    "ConnectivityReport",
    "CircuitBuilder",
    "CircuitError",
    "FALSE",
    "TRUE",
    "LITERAL",
    "DECISION",
    "SINGLY_CONNECTED",
    "MULTIPLY_CONNECTED",
    "evaluate",
    "enumerate_models",
    "model_count",
    "multiplicity_report",
    "topological_order",
    "compile_formula",
    "validate_structure",
    "validate_partitions",
    "is_consistent",
]


class CircuitError(ValueError):
    """Violation of vtree or circuit structural invariants."""


# node kinds
FALSE = 0
TRUE = 1
LITERAL = 2
DECISION = 3

SINGLY_CONNECTED = "singly_connected"
MULTIPLY_CONNECTED = "multiply_connected"

ENUMERATION_VAR_LIMIT = 24


class Vtree:
    """Full binary tree over variables ``1..n``.

    Node ids follow in-order positions: with ``n`` leaves there are
    ``2n - 1`` nodes, leaves sit at even ids and internal nodes at odd ids.
    Construct from a nested tuple structure, e.g. ``Vtree(((1, 2), (3, 4)))``.
    """

    def __init__(self, structure) -> None:
        kinds: list[tuple] = []

        def walk(shape) -> int:
            if isinstance(shape, int):
                kinds.append(("leaf", shape))
                return len(kinds) - 1
            if not (isinstance(shape, tuple) and len(shape) == 2):
                raise CircuitError(f"vtree structure nodes are ints or pairs, got {shape!r}")
            left = walk(shape[0])
            my = len(kinds)
            kinds.append(None)  # placeholder keeps in-order position
            right = walk(shape[1])
            kinds[my] = ("internal", left, right)
            return my

        self.root = walk(structure)
        count = len(kinds)
        self._var = [0] * count
        self._left = [-1] * count
        self._right = [-1] * count
        self._parent = [-1] * count
        self._mask = [0] * count
        self._leaf_of: dict[int, int] = {}
        for vid, entry in enumerate(kinds):
            if entry[0] == "leaf":
                var = entry[1]
                if var in self._leaf_of:
                    raise CircuitError(f"variable {var} appears twice in the vtree")
                self._var[vid] = var
                self._leaf_of[var] = vid
                self._mask[vid] = 1 << (var - 1)
            else:
                _, left, right = entry
                self._left[vid] = left
                self._right[vid] = right
                self._parent[left] = vid
                self._parent[right] = vid
        n = len(self._leaf_of)
        if set(self._leaf_of) != set(range(1, n + 1)):
            raise CircuitError("vtree variables must be exactly 1..n")
        # masks bottom-up; ids are in-order so children of an internal node
        # are not always smaller, walk explicitly
        def fill_mask(vid: int) -> int:
            if self._mask[vid]:
                return self._mask[vid]
            m = fill_mask(self._left[vid]) | fill_mask(self._right[vid])
            self._mask[vid] = m
            return m

        fill_mask(self.root)
        self.var_count = n
        self.node_count = count

    @classmethod
    def balanced(cls, n: int) -> "Vtree":
        def build(lo: int, hi: int):
            if lo == hi:
                return lo
            mid = (lo + hi) // 2
            return (build(lo, mid), build(mid + 1, hi))

        if n < 1:
            raise CircuitError("vtree needs at least one variable")
        return cls(build(1, n))

    @classmethod
    def right_linear(cls, n: int) -> "Vtree":
        shape: object = n
        for var in range(n - 1, 0, -1):
            shape = (var, shape)
        return cls(shape)

    def is_leaf(self, vid: int) -> bool:
        return self._left[vid] < 0

    def var(self, vid: int) -> int:
        return self._var[vid]

    def left(self, vid: int) -> int:
        return self._left[vid]

    def right(self, vid: int) -> int:
        return self._right[vid]

    def parent(self, vid: int) -> int:
        return self._parent[vid]

    def mask(self, vid: int) -> int:
        return self._mask[vid]

    def leaf_of(self, var: int) -> int:
        return self._leaf_of[var]

    def contains_var(self, vid: int, var: int) -> bool:
        return bool(self._mask[vid] >> (var - 1) & 1)

    def vars_under(self, vid: int) -> tuple[int, ...]:
        mask = self._mask[vid]
        return tuple(v for v in range(1, self.var_count + 1) if mask >> (v - 1) & 1)

    def structure(self):
        """Nested tuple form, inverse of the constructor."""

        def walk(vid: int):
            if self.is_leaf(vid):
                return self._var[vid]
            return (walk(self._left[vid]), walk(self._right[vid]))

        return walk(self.root)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vtree) and self.structure() == other.structure()

    def __hash__(self) -> int:
        return hash(self.structure())

    def __repr__(self) -> str:
        return f"Vtree({self.structure()!r})"


@dataclass(frozen=True, slots=True)
class SddNode:
    """One circuit node; ``elements`` is empty unless ``kind == DECISION``."""

    id: int
    kind: int
    vtree: int
    var: int = 0
    polarity: bool = True
    elements: tuple[tuple[int, int], ...] = ()

    @property
    def is_terminal(self) -> bool:
        return self.kind != DECISION


@dataclass(frozen=True)
class ConnectivityReport:
    multiplicity: dict[int, int]
    classification: str
    multi_nodes: tuple[int, ...]

    @property
    def singly_connected(self) -> bool:
        return self.classification == SINGLY_CONNECTED


class Circuit:
    """Append-only node store over a fixed vtree.

    Terminals are created fresh on every call (the same literal may appear
    many times, each occurrence its own node).  Decision nodes are unique
    per (vtree node, element list): re-adding an existing one returns the
    stored id.  Circuits are immutable once built; every read operation is
    safe to run concurrently.
    """

    def __init__(self, vtree: Vtree) -> None:
        self.vtree = vtree
        self.nodes: list[SddNode] = []
        self.root: int | None = None
        self._decision_cache: dict[tuple, int] = {}
        self._connectivity: ConnectivityReport | None = None
        self._false_ids: frozenset[int] | None = None
        self._cone_cache: dict[int, list[int]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, nid: int) -> SddNode:
        if not 0 <= nid < len(self.nodes):
            raise CircuitError(f"unknown node id {nid}")
        return self.nodes[nid]

    def _add(self, node: SddNode) -> int:
        self.nodes.append(node)
        return node.id

    def add_false(self, leaf_vtree: int) -> int:
        self._check_leaf(leaf_vtree)
        return self._add(SddNode(len(self.nodes), FALSE, leaf_vtree, self.vtree.var(leaf_vtree)))

    def add_true(self, leaf_vtree: int) -> int:
        self._check_leaf(leaf_vtree)
        return self._add(SddNode(len(self.nodes), TRUE, leaf_vtree, self.vtree.var(leaf_vtree)))

    def add_literal(self, var: int, polarity: bool) -> int:
        leaf = self.vtree.leaf_of(var)
        return self._add(SddNode(len(self.nodes), LITERAL, leaf, var, bool(polarity)))

    def _check_leaf(self, vid: int) -> None:
        if not 0 <= vid < self.vtree.node_count or not self.vtree.is_leaf(vid):
            raise CircuitError(f"vtree node {vid} is not a leaf")

    def add_decision(self, vtree_id: int, elements: Sequence[tuple[int, int]]) -> int:
        if self.vtree.is_leaf(vtree_id):
            raise CircuitError(f"vtree node {vtree_id} is a leaf; decision nodes need an internal node")
        elements = tuple((int(p), int(s)) for p, s in elements)
        if not elements:
            raise CircuitError("decision node needs at least one element")
        key = (vtree_id, elements)
        hit = self._decision_cache.get(key)
        if hit is not None:
            return hit
        nid = len(self.nodes)
        vl, vr = self.vtree.left(vtree_id), self.vtree.right(vtree_id)
        for p, s in elements:
            if p >= nid or s >= nid:
                raise CircuitError("element ids must precede their decision node")
            if self.nodes[p].vtree != vl:
                raise CircuitError(f"prime {p} not normalized for vtree node {vl}")
            if self.nodes[s].vtree != vr:
                raise CircuitError(f"sub {s} not normalized for vtree node {vr}")
            if self.nodes[p].kind == FALSE:
                raise CircuitError("false primes are not allowed")
        self._decision_cache[key] = nid
        return self._add(SddNode(nid, DECISION, vtree_id, elements=elements))

    def set_root(self, nid: int) -> None:
        self.node(nid)
        self.root = nid
        self._connectivity = None

    def _root(self, root: int | None) -> int:
        nid = self.root if root is None else root
        if nid is None:
            raise CircuitError("circuit has no root")
        return nid

    def cone(self, root: int | None = None) -> list[int]:
        """Ids of all nodes reachable from the root, ascending (= topological)."""
        nid = self._root(root)
        cached = self._cone_cache.get(nid)
        if cached is not None:
            return cached
        seen = {nid}
        stack = [nid]
        while stack:
            node = self.nodes[stack.pop()]
            for p, s in node.elements:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        result = sorted(seen)
        self._cone_cache[nid] = result
        return result

    def false_ids(self, root: int | None = None) -> frozenset[int]:
        """Nodes whose sentence is unsatisfiable.

        In normalized form the false constant below an internal vtree node
        is a decision chain, not a terminal; those chains carry no
        distribution and their probability is identically zero.
        """
        if self._false_ids is None or root is not None:
            false: set[int] = set()
            for nid in self.cone(root):
                node = self.nodes[nid]
                if node.kind == FALSE:
                    false.add(nid)
                elif node.kind == DECISION and all(
                    p in false or s in false for p, s in node.elements
                ):
                    false.add(nid)
            ids = frozenset(false)
            if root is not None:
                return ids
            self._false_ids = ids
        return self._false_ids

    def parameterized_ids(self, root: int | None = None) -> list[int]:
        """Nodes carrying a distribution: TRUE terminals and satisfiable
        decision nodes (unsatisfiable ones induce no distribution)."""
        false = self.false_ids(root)
        return [
            nid
            for nid in self.cone(root)
            if self.nodes[nid].kind in (TRUE, DECISION) and nid not in false
        ]

    def extract(self, root: int) -> "Circuit":
        """Copy the root's cone into a fresh, densely numbered circuit."""
        out = Circuit(self.vtree)
        remap: dict[int, int] = {}
        for nid in self.cone(root):
            node = self.nodes[nid]
            if node.kind == FALSE:
                remap[nid] = out.add_false(node.vtree)
            elif node.kind == TRUE:
                remap[nid] = out.add_true(node.vtree)
            elif node.kind == LITERAL:
                remap[nid] = out.add_literal(node.var, node.polarity)
            else:
                remap[nid] = out.add_decision(
                    node.vtree, tuple((remap[p], remap[s]) for p, s in node.elements)
                )
        out.set_root(remap[root])
        return out

    def connectivity(self) -> ConnectivityReport:
        if self._connectivity is None:
            self._connectivity = multiplicity_report(self)
        return self._connectivity


def evaluate(circuit: Circuit, node_id: int, assignment: Mapping[int, bool]) -> bool:
    """Truth of the node's sentence under a complete assignment of its variables."""
    node = circuit.node(node_id)
    vtree = circuit.vtree
    for var in vtree.vars_under(node.vtree):
        if var not in assignment:
            raise CircuitError(f"assignment is missing variable {var}")
    memo: dict[int, bool] = {}

    def walk(nid: int) -> bool:
        hit = memo.get(nid)
        if hit is not None:
            return hit
        n = circuit.nodes[nid]
        if n.kind == FALSE:
            value = False
        elif n.kind == TRUE:
            value = True
        elif n.kind == LITERAL:
            value = bool(assignment[n.var]) == n.polarity
        else:
            value = False
            for p, s in n.elements:
                if walk(p):
                    value = walk(s)
                    break
        memo[nid] = value
        return value

    return walk(node_id)


def enumerate_models(circuit: Circuit, node_id: int) -> set[tuple[bool, ...]]:
    """All satisfying complete assignments of the node, by exhaustive evaluation.

    Models are value tuples ordered by ascending variable id over
    ``circuit.vtree.vars_under(node.vtree)``.  Guarded against blow-up.
    """
    node = circuit.node(node_id)
    scope = circuit.vtree.vars_under(node.vtree)
    if len(scope) > ENUMERATION_VAR_LIMIT:
        raise CircuitError(f"refusing to enumerate over {len(scope)} > {ENUMERATION_VAR_LIMIT} variables")
    models = set()
    for values in product((False, True), repeat=len(scope)):
        if evaluate(circuit, node_id, dict(zip(scope, values))):
            models.add(values)
    return models


def model_count(circuit: Circuit, node_id: int | None = None) -> int:
    """Number of models over the node's variables, via one bottom-up pass."""
    nid = circuit._root(node_id)
    counts: dict[int, int] = {}
    for i in circuit.cone(nid):
        n = circuit.nodes[i]
        if n.kind == FALSE:
            counts[i] = 0
        elif n.kind == TRUE:
            counts[i] = 2
        elif n.kind == LITERAL:
            counts[i] = 1
        else:
            counts[i] = sum(counts[p] * counts[s] for p, s in n.elements)
    return counts[nid]


def multiplicity_report(circuit: Circuit, root: int | None = None) -> ConnectivityReport:
    """Context counts per node and the singly/multiply connected verdict.

    A node's multiplicity is the number of distinct root-to-node element
    paths; the root has multiplicity one.
    """
    nid = circuit._root(root)
    cone = circuit.cone(nid)
    mult = {i: 0 for i in cone}
    mult[nid] = 1
    for i in reversed(cone):
        m = mult[i]
        if m == 0:
            continue
        for p, s in circuit.nodes[i].elements:
            mult[p] += m
            mult[s] += m
    multi = tuple(i for i in cone if mult[i] > 1)
    cls = SINGLY_CONNECTED if not multi else MULTIPLY_CONNECTED
    return ConnectivityReport(mult, cls, multi)


def topological_order(circuit: Circuit, root: int | None = None) -> list[int]:
    """Node ids with every prime and sub preceding its decision node."""
    return circuit.cone(root)


def validate_structure(circuit: Circuit, root: int | None = None) -> None:
    """Check vtree normalization and id precedence over the root's cone."""
    vtree = circuit.vtree
    for nid in circuit.cone(root):
        node = circuit.nodes[nid]
        if node.kind == DECISION:
            if vtree.is_leaf(node.vtree):
                raise CircuitError(f"decision node {nid} tagged with a leaf vtree node")
            vl, vr = vtree.left(node.vtree), vtree.right(node.vtree)
            for p, s in node.elements:
                if p >= nid or s >= nid:
                    raise CircuitError(f"node {nid}: element ids do not precede it")
                if circuit.nodes[p].vtree != vl or circuit.nodes[s].vtree != vr:
                    raise CircuitError(f"node {nid}: children not normalized for its vtree split")
        else:
            if not vtree.is_leaf(node.vtree):
                raise CircuitError(f"terminal {nid} tagged with internal vtree node")


def validate_partitions(
    circuit: Circuit,
    root: int | None = None,
    exhaustive_limit: int = 16,
    samples: int = 64,
    seed: int = 0,
) -> None:
    """Check that every decision node's primes partition the left assignments.

    Exhaustive up to ``exhaustive_limit`` left states, sampled above.
    """
    vtree = circuit.vtree
    rng = Random(seed)
    for nid in circuit.cone(root):
        node = circuit.nodes[nid]
        if node.kind != DECISION:
            continue
        left_vars = vtree.vars_under(vtree.left(node.vtree))
        if 2 ** len(left_vars) <= exhaustive_limit:
            cases = product((False, True), repeat=len(left_vars))
        else:
            cases = (tuple(rng.random() < 0.5 for _ in left_vars) for _ in range(samples))
        for values in cases:
            assignment = dict(zip(left_vars, values))
            hits = sum(1 for p, _ in node.elements if evaluate(circuit, p, assignment))
            if hits != 1:
                raise CircuitError(
                    f"node {nid}: primes cover left assignment {values} {hits} times (want exactly 1)"
                )


def is_consistent(circuit: Circuit, evidence: Mapping[int, bool], root: int | None = None) -> bool:
    """Whether some model of the root extends the partial assignment."""
    nid = circuit._root(root)
    ok: dict[int, bool] = {}
    for i in circuit.cone(nid):
        n = circuit.nodes[i]
        if n.kind == FALSE:
            ok[i] = False
        elif n.kind == TRUE:
            ok[i] = True
        elif n.kind == LITERAL:
            val = evidence.get(n.var)
            ok[i] = val is None or bool(val) == n.polarity
        else:
            ok[i] = any(ok[p] and ok[s] for p, s in n.elements)
    return ok[nid]


_NEG = {FALSE: TRUE, TRUE: FALSE}
_TT = {FALSE: 0b00, TRUE: 0b11}  # bit 1: value at var=true, bit 0: at var=false


class CircuitBuilder:
    """Bottom-up compiler: literals combined through apply/negate.

    With ``share=True`` (default) structurally equal nodes are reused, which
    generally yields multiply connected circuits.  With ``share=False``
    every intermediate node is fresh and the result is tree-shaped, hence
    singly connected.
    """

    def __init__(self, vtree: Vtree, share: bool = True) -> None:
        self.vtree = vtree
        self.circuit = Circuit(vtree)
        self.share = share
        self._terminal_memo: dict[tuple, int] = {}
        self._apply_memo: dict[tuple, int] = {}
        self._negate_memo: dict[int, int] = {}
        self._constant_memo: dict[tuple, int] = {}
        self._is_false: dict[int, bool] = {}
        self._is_true: dict[int, bool] = {}

    # -- node constructors ------------------------------------------------

    def _terminal(self, leaf: int, tt: int) -> int:
        key = (leaf, tt)
        if self.share and key in self._terminal_memo:
            return self._terminal_memo[key]
        circuit = self.circuit
        if tt == 0b00:
            nid = circuit.add_false(leaf)
        elif tt == 0b11:
            nid = circuit.add_true(leaf)
        else:
            nid = circuit.add_literal(circuit.vtree.var(leaf), tt == 0b10)
        self._is_false[nid] = tt == 0b00
        self._is_true[nid] = tt == 0b11
        if self.share:
            self._terminal_memo[key] = nid
        return nid

    def literal(self, var: int, polarity: bool = True) -> int:
        return self._terminal(self.vtree.leaf_of(var), 0b10 if polarity else 0b01)

    def true_at(self, vid: int) -> int:
        key = (vid, True)
        if self.share and key in self._constant_memo:
            return self._constant_memo[key]
        if self.vtree.is_leaf(vid):
            nid = self._terminal(vid, 0b11)
        else:
            nid = self._decision(
                vid, [(self.true_at(self.vtree.left(vid)), self.true_at(self.vtree.right(vid)))]
            )
        if self.share:
            self._constant_memo[key] = nid
        return nid

    def false_at(self, vid: int) -> int:
        key = (vid, False)
        if self.share and key in self._constant_memo:
            return self._constant_memo[key]
        if self.vtree.is_leaf(vid):
            nid = self._terminal(vid, 0b00)
        else:
            nid = self._decision(
                vid, [(self.true_at(self.vtree.left(vid)), self.false_at(self.vtree.right(vid)))]
            )
        if self.share:
            self._constant_memo[key] = nid
        return nid

    def _decision(self, vid: int, elements: list[tuple[int, int]]) -> int:
        elements = sorted(elements)
        nid = self.circuit.add_decision(vid, elements)
        if nid not in self._is_false:
            self._is_false[nid] = all(self._is_false[s] for _, s in elements)
            self._is_true[nid] = all(self._is_true[s] for _, s in elements)
        return nid

    # -- boolean operations ------------------------------------------------

    def negate(self, a: int) -> int:
        if self.share and a in self._negate_memo:
            return self._negate_memo[a]
        node = self.circuit.node(a)
        if node.kind == DECISION:
            # without sharing the primes must be duplicated to stay tree-shaped
            result = self._decision(
                node.vtree,
                [
                    (p if self.share else self._copy(p), self.negate(s))
                    for p, s in node.elements
                ],
            )
        else:
            tt = _TT[node.kind] if node.kind in _TT else (0b10 if node.polarity else 0b01)
            result = self._terminal(node.vtree, tt ^ 0b11)
        if self.share:
            self._negate_memo[a] = result
            self._negate_memo[result] = a
        return result

    def _copy(self, a: int) -> int:
        """Fresh structural duplicate (used only when sharing is off)."""
        node = self.circuit.node(a)
        if node.kind == DECISION:
            return self._decision(
                node.vtree, [(self._copy(p), self._copy(s)) for p, s in node.elements]
            )
        tt = _TT[node.kind] if node.kind in _TT else (0b10 if node.polarity else 0b01)
        return self._terminal(node.vtree, tt)

    def apply(self, a: int, b: int, op: str) -> int:
        """Conjoin or disjoin two nodes; operands may sit at different vtree nodes."""
        if op not in ("and", "or"):
            raise CircuitError(f"unknown operation {op!r}")
        va = self.circuit.node(a).vtree
        vb = self.circuit.node(b).vtree
        if va != vb:
            join = self._join(va, vb)
            a = self._lift(a, join)
            b = self._lift(b, join)
        return self._apply(a, b, op)

    def _join(self, va: int, vb: int) -> int:
        seen = set()
        v = va
        while v != -1:
            seen.add(v)
            v = self.vtree.parent(v)
        v = vb
        while v not in seen:
            v = self.vtree.parent(v)
        return v

    def lift(self, a: int, target: int) -> int:
        """Re-normalize a node for an ancestor vtree node (same sentence)."""
        return self._lift(a, target)

    def _lift(self, a: int, target: int) -> int:
        if self._is_false[a]:
            return self.false_at(target)
        if self._is_true[a]:
            return self.true_at(target)
        v = self.circuit.node(a).vtree
        while v != target:
            parent = self.vtree.parent(v)
            if parent == -1:
                raise CircuitError("lift target is not an ancestor")
            if self.vtree.left(parent) == v:
                elements = [(a, self.true_at(self.vtree.right(parent)))]
                neg = self.negate(a)
                if not self._is_false[neg]:
                    elements.append((neg, self.false_at(self.vtree.right(parent))))
                a = self._decision(parent, elements)
            else:
                a = self._decision(parent, [(self.true_at(self.vtree.left(parent)), a)])
            v = parent
        return a

    def _apply(self, a: int, b: int, op: str) -> int:
        if a == b:
            return a if self.share else self._copy(a)
        key = (op, a, b) if a < b else (op, b, a)
        if self.share and key in self._apply_memo:
            return self._apply_memo[key]
        na, nb = self.circuit.node(a), self.circuit.node(b)
        if na.vtree != nb.vtree:
            raise CircuitError("apply operands must be normalized for the same vtree node")
        if na.kind != DECISION:
            ta = _TT[na.kind] if na.kind in _TT else (0b10 if na.polarity else 0b01)
            tb = _TT[nb.kind] if nb.kind in _TT else (0b10 if nb.polarity else 0b01)
            result = self._terminal(na.vtree, (ta & tb) if op == "and" else (ta | tb))
        else:
            raw: list[tuple[int, int]] = []
            for pa, sa in na.elements:
                for pb, sb in nb.elements:
                    prime = self._apply(pa, pb, "and")
                    if self._is_false[prime]:
                        continue
                    raw.append((prime, self._apply(sa, sb, op)))
            # compression: merge elements that share a sub
            by_sub: dict[int, int] = {}
            for prime, sub in raw:
                if sub in by_sub:
                    by_sub[sub] = self._apply(by_sub[sub], prime, "or")
                else:
                    by_sub[sub] = prime
            result = self._decision(na.vtree, [(p, s) for s, p in by_sub.items()])
        if self.share:
            self._apply_memo[key] = result
        return result

    # -- formula compilation -----------------------------------------------

    def compile(self, formula: Formula) -> int:
        missing = formula.variables() - set(range(1, self.vtree.var_count + 1))
        if missing:
            raise CircuitError(f"formula uses variables outside the vtree: {sorted(missing)}")
        if isinstance(formula, Const):
            return self.true_at(self.vtree.root) if formula.value else self.false_at(self.vtree.root)
        if isinstance(formula, Var):
            return self.literal(formula.var, True)
        if isinstance(formula, Not):
            return self.negate(self.compile(formula.child))
        if isinstance(formula, (And, Or)):
            op = "and" if isinstance(formula, And) else "or"
            acc = None
            for child in formula.children:
                nid = self.compile(child)
                acc = nid if acc is None else self.apply(acc, nid, op)
            if acc is None:
                return self.compile(Const(op == "and"))
            return acc
        raise CircuitError(f"unknown formula node {formula!r}")

    def finish(self, root: int) -> Circuit:
        """Garbage-collect into a fresh circuit holding only the root's cone."""
        return self.circuit.extract(root)


def compile_formula(formula: Formula, vtree: Vtree, share: bool = True) -> Circuit:
    """Compile a formula into a circuit normalized for the vtree.

    ``share=False`` produces a tree-shaped (singly connected) circuit.
    """
    builder = CircuitBuilder(vtree, share=share)
    root = builder.lift(builder.compile(formula), vtree.root)
    return builder.finish(root)
