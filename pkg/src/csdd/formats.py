"""Line-oriented readers and writers for the five artifact file formats.

All formats are plain UTF-8 text with LF newlines and are written in a
canonical form (nodes in topological order, single spaces, no trailing
whitespace) so that write -> read -> write is byte-identical.  Floats are
rendered with ``repr``: the shortest decimal that round-trips exactly.

vtree    ``c`` comments, ``vtree <count>``, then ``L <id> <var>`` and
         ``I <id> <left> <right>`` with children before parents.
sdd      ``sdd <count>``; ``F <id>``, ``T <id>``,
         ``L <id> <vtree> <literal>`` (negative literal = negation),
         ``D <id> <vtree> <k> <p1> <s1> ...``.
psdd     like sdd but ``T <id> <vtree> <var> <theta>`` and decision
         elements ``<p> <s> <theta>``.
csdd     like psdd with interval pairs ``<l> <u>`` instead of ``<theta>``.
dataset  CSV: header of variable names plus optional ``count`` column,
         0/1 cells.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable

from .circuit import (
    Circuit,
    FALSE,
    LITERAL,
    TRUE,
    Vtree,
    validate_partitions,
    validate_structure,
)
from .credal import IntervalCredalSet
from .learn import Dataset
from .params import CsddParams, PsddParams

__all__ = [
    "ParseError",
    "read_vtree", "write_vtree", "loads_vtree", "dumps_vtree",
    "read_sdd", "write_sdd", "loads_sdd", "dumps_sdd",
    "read_psdd", "write_psdd", "loads_psdd", "dumps_psdd",
    "read_csdd", "write_csdd", "loads_csdd", "dumps_csdd",
    "read_dataset", "write_dataset", "loads_dataset", "dumps_dataset",
]

SUM_TOL = 1e-9


class ParseError(ValueError):
    """Malformed input; carries the 1-based offending line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def _fmt(x: float) -> str:
    return repr(float(x))


def _lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line == "c" or line.startswith("c "):
            continue
        yield lineno, line.split()


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(lineno, f"{what}: expected an integer, got {tok!r}") from None


def _float(tok: str, lineno: int, what: str) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(lineno, f"{what}: expected a number, got {tok!r}") from None
    if math.isnan(value) or math.isinf(value):
        raise ParseError(lineno, f"{what}: {tok!r} is not finite")
    return value


# ---------------------------------------------------------------------------
# vtree


def dumps_vtree(vtree: Vtree) -> str:
    lines = [f"vtree {vtree.node_count}"]
    order: list[int] = []

    def post(vid: int) -> None:
        if not vtree.is_leaf(vid):
            post(vtree.left(vid))
            post(vtree.right(vid))
        order.append(vid)

    post(vtree.root)
    for vid in order:
        if vtree.is_leaf(vid):
            lines.append(f"L {vid} {vtree.var(vid)}")
        else:
            lines.append(f"I {vid} {vtree.left(vid)} {vtree.right(vid)}")
    return "\n".join(lines) + "\n"


def loads_vtree(text: str) -> Vtree:
    count = None
    entries: dict[int, tuple] = {}
    referenced: set[int] = set()
    for lineno, toks in _lines(text):
        if toks[0] == "vtree":
            if count is not None:
                raise ParseError(lineno, "duplicate vtree header")
            if len(toks) != 2:
                raise ParseError(lineno, "header is 'vtree <count>'")
            count = _int(toks[1], lineno, "node count")
        elif toks[0] == "L":
            if count is None:
                raise ParseError(lineno, "missing 'vtree <count>' header")
            if len(toks) != 3:
                raise ParseError(lineno, "leaf line is 'L <id> <var>'")
            vid = _int(toks[1], lineno, "node id")
            if vid in entries:
                raise ParseError(lineno, f"duplicate vtree node id {vid}")
            entries[vid] = ("L", _int(toks[2], lineno, "variable"), lineno)
        elif toks[0] == "I":
            if count is None:
                raise ParseError(lineno, "missing 'vtree <count>' header")
            if len(toks) != 4:
                raise ParseError(lineno, "internal line is 'I <id> <left> <right>'")
            vid = _int(toks[1], lineno, "node id")
            if vid in entries:
                raise ParseError(lineno, f"duplicate vtree node id {vid}")
            left = _int(toks[2], lineno, "left child")
            right = _int(toks[3], lineno, "right child")
            for child in (left, right):
                if child not in entries:
                    raise ParseError(lineno, f"child {child} not defined yet (children precede parents)")
                if child in referenced:
                    raise ParseError(lineno, f"node {child} already has a parent")
                referenced.add(child)
            entries[vid] = ("I", left, right, lineno)
        else:
            raise ParseError(lineno, f"unknown vtree line {toks[0]!r}")
    if count is None:
        raise ParseError(1, "missing 'vtree <count>' header")
    if len(entries) != count:
        raise ParseError(1, f"header declares {count} nodes, found {len(entries)}")
    roots = [vid for vid in entries if vid not in referenced]
    if len(roots) != 1:
        raise ParseError(1, f"expected a single root, found {len(roots)}")

    def build(vid: int):
        entry = entries[vid]
        if entry[0] == "L":
            return entry[1]
        return (build(entry[1]), build(entry[2]))

    try:
        return Vtree(build(roots[0]))
    except ValueError as exc:
        raise ParseError(1, str(exc)) from None


# ---------------------------------------------------------------------------
# sdd / psdd / csdd cores

_MODE_SDD, _MODE_PSDD, _MODE_CSDD = "sdd", "psdd", "csdd"


def _node_lines(circuit: Circuit, mode: str, psdd=None, csdd=None) -> list[str]:
    cone = circuit.cone(None)
    remap = {nid: i for i, nid in enumerate(cone)}
    lines = [f"{mode} {len(cone)}"]
    for nid in cone:
        node = circuit.nodes[nid]
        i = remap[nid]
        if node.kind == FALSE:
            lines.append(f"F {i}")
        elif node.kind == LITERAL:
            lit = node.var if node.polarity else -node.var
            lines.append(f"L {i} {node.vtree} {lit}")
        elif node.kind == TRUE:
            if mode == _MODE_SDD:
                lines.append(f"T {i}")
            elif mode == _MODE_PSDD:
                theta = psdd.table[nid][0]
                lines.append(f"T {i} {node.vtree} {node.var} {_fmt(theta)}")
            else:
                cs = csdd.table[nid]
                lines.append(f"T {i} {node.vtree} {node.var} {_fmt(cs.lower[0])} {_fmt(cs.upper[0])}")
        else:
            parts = [f"D {i} {node.vtree} {len(node.elements)}"]
            # unsatisfiable decision nodes carry no distribution: all-zero slots
            pmf = psdd.table.get(nid) if mode == _MODE_PSDD else None
            cs = csdd.table.get(nid) if mode == _MODE_CSDD else None
            for idx, (p, s) in enumerate(node.elements):
                parts.append(f"{remap[p]} {remap[s]}")
                if mode == _MODE_PSDD:
                    parts.append(_fmt(pmf[idx] if pmf is not None else 0.0))
                elif mode == _MODE_CSDD:
                    if cs is not None:
                        parts.append(f"{_fmt(cs.lower[idx])} {_fmt(cs.upper[idx])}")
                    else:
                        parts.append("0.0 0.0")
            lines.append(" ".join(parts))
    return lines


def dumps_sdd(circuit: Circuit) -> str:
    return "\n".join(_node_lines(circuit, _MODE_SDD)) + "\n"


def dumps_psdd(circuit: Circuit, params: PsddParams) -> str:
    params.validate(circuit)
    return "\n".join(_node_lines(circuit, _MODE_PSDD, psdd=params)) + "\n"


def dumps_csdd(circuit: Circuit, params: CsddParams) -> str:
    params.validate(circuit)
    return "\n".join(_node_lines(circuit, _MODE_CSDD, csdd=params)) + "\n"


class _PendingConstant:
    """A T/F line carries no vtree id; the leaf is pinned by first use."""

    __slots__ = ("kind", "lineno", "leaf", "node_id")

    def __init__(self, kind: int, lineno: int) -> None:
        self.kind = kind
        self.lineno = lineno
        self.leaf: int | None = None
        self.node_id: int | None = None


def _loads_circuit(text: str, vtree: Vtree, mode: str):
    count = None
    order: list[int] = []                     # file ids in appearance order
    raw: dict[int, tuple] = {}                # file id -> parsed record
    header = mode
    for lineno, toks in _lines(text):
        if toks[0] == header:
            if count is not None:
                raise ParseError(lineno, "duplicate header")
            if len(toks) != 2:
                raise ParseError(lineno, f"header is '{header} <count>'")
            count = _int(toks[1], lineno, "node count")
            continue
        if count is None:
            raise ParseError(lineno, f"missing '{header} <count>' header")
        kind = toks[0]
        if kind not in ("F", "T", "L", "D"):
            raise ParseError(lineno, f"unknown node line {kind!r}")
        fid = _int(toks[1], lineno, "node id")
        if fid in raw:
            raise ParseError(lineno, f"duplicate node id {fid}")
        if kind == "F":
            if len(toks) != 2:
                raise ParseError(lineno, "false line is 'F <id>'")
            raw[fid] = ("F", lineno)
        elif kind == "T":
            if mode == _MODE_SDD:
                if len(toks) != 2:
                    raise ParseError(lineno, "true line is 'T <id>'")
                raw[fid] = ("T", lineno)
            else:
                want = 5 if mode == _MODE_PSDD else 6
                if len(toks) != want:
                    raise ParseError(lineno, f"true line has {want} fields in a {mode} file")
                vid = _int(toks[2], lineno, "vtree id")
                var = _int(toks[3], lineno, "variable")
                numbers = [_float(t, lineno, "parameter") for t in toks[4:]]
                raw[fid] = ("Tp", lineno, vid, var, numbers)
        elif kind == "L":
            if len(toks) != 4:
                raise ParseError(lineno, "literal line is 'L <id> <vtree> <literal>'")
            vid = _int(toks[2], lineno, "vtree id")
            lit = _int(toks[3], lineno, "literal")
            if lit == 0:
                raise ParseError(lineno, "literal 0 is invalid")
            raw[fid] = ("L", lineno, vid, lit)
        else:
            step = {"sdd": 2, "psdd": 3, "csdd": 4}[mode]
            if len(toks) < 4:
                raise ParseError(lineno, "decision line is 'D <id> <vtree> <k> ...'")
            vid = _int(toks[2], lineno, "vtree id")
            k = _int(toks[3], lineno, "element count")
            if k < 1:
                raise ParseError(lineno, "decision nodes need at least one element")
            rest = toks[4:]
            if len(rest) != k * step:
                raise ParseError(lineno, f"expected {k * step} element fields, got {len(rest)}")
            elements = []
            numbers = []
            for e in range(k):
                chunk = rest[e * step:(e + 1) * step]
                p = _int(chunk[0], lineno, "prime id")
                s = _int(chunk[1], lineno, "sub id")
                for ref in (p, s):
                    if ref not in raw:
                        raise ParseError(lineno, f"forward reference to node {ref}")
                elements.append((p, s))
                numbers.extend(_float(t, lineno, "parameter") for t in chunk[2:])
            raw[fid] = ("D", lineno, vid, elements, numbers)
        order.append(fid)
    if count is None:
        raise ParseError(1, f"missing '{header} <count>' header")
    if len(order) != count:
        raise ParseError(1, f"header declares {count} nodes, found {len(order)}")

    # resolve the leaf vtree node of bare T/F lines from their use sites
    leaf_pin: dict[int, int] = {}
    for fid in order:
        rec = raw[fid]
        if rec[0] != "D":
            continue
        _, lineno, vid, elements, _ = rec
        if not 0 <= vid < vtree.node_count or vtree.is_leaf(vid):
            raise ParseError(lineno, f"vtree node {vid} is not internal")
        for ref, side in [(p, vtree.left(vid)) for p, _ in elements] + [
            (s, vtree.right(vid)) for _, s in elements
        ]:
            rec_ref = raw[ref]
            if rec_ref[0] in ("F", "T") and vtree.is_leaf(side):
                if ref not in leaf_pin:
                    leaf_pin[ref] = side
                elif leaf_pin[ref] != side:
                    raise ParseError(
                        rec_ref[1], f"constant node {ref} used under two different leaves"
                    )

    circuit = Circuit(vtree)
    point_table: dict[int, tuple[float, ...]] = {}
    credal_table: dict[int, IntervalCredalSet] = {}
    pending_decision: dict[int, tuple] = {}
    remap: dict[int, int] = {}
    for fid in order:
        rec = raw[fid]
        tag, lineno = rec[0], rec[1]
        if tag in ("F", "T"):
            leaf = leaf_pin.get(fid)
            if leaf is None:
                if vtree.var_count == 1:
                    leaf = vtree.root
                else:
                    raise ParseError(lineno, f"cannot infer the leaf of constant node {fid}")
            remap[fid] = circuit.add_false(leaf) if tag == "F" else circuit.add_true(leaf)
        elif tag == "Tp":
            _, _, vid, var, numbers = rec
            if not 0 <= vid < vtree.node_count or not vtree.is_leaf(vid):
                raise ParseError(lineno, f"vtree node {vid} is not a leaf")
            if vtree.var(vid) != var:
                raise ParseError(lineno, f"leaf {vid} holds variable {vtree.var(vid)}, not {var}")
            nid = circuit.add_true(vid)
            remap[fid] = nid
            if mode == _MODE_PSDD:
                theta = numbers[0]
                if not 0.0 <= theta <= 1.0:
                    raise ParseError(lineno, f"theta {theta} outside [0, 1]")
                point_table[nid] = (theta, 1.0 - theta)
            else:
                l, u = numbers
                if not 0.0 <= l <= u <= 1.0:
                    raise ParseError(lineno, f"invalid interval [{l}, {u}]")
                credal_table[nid] = IntervalCredalSet((l, 1.0 - u), (u, 1.0 - l))
        elif tag == "L":
            _, _, vid, lit = rec
            var = abs(lit)
            if var > vtree.var_count:
                raise ParseError(lineno, f"literal variable {var} outside the vtree")
            if vtree.leaf_of(var) != vid:
                raise ParseError(lineno, f"variable {var} lives at leaf {vtree.leaf_of(var)}, not {vid}")
            remap[fid] = circuit.add_literal(var, lit > 0)
        else:
            _, _, vid, elements, numbers = rec
            mapped = [(remap[p], remap[s]) for p, s in elements]
            try:
                nid = circuit.add_decision(vid, mapped)
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
            if nid != len(circuit.nodes) - 1:
                raise ParseError(lineno, "duplicate decision node (same vtree and elements)")
            remap[fid] = nid
            if mode != _MODE_SDD:
                pending_decision[nid] = (lineno, mapped, numbers)
    root_fid = order[-1]
    circuit.set_root(remap[root_fid])
    try:
        validate_structure(circuit)
        validate_partitions(circuit)
    except ValueError as exc:
        raise ParseError(raw[root_fid][1], str(exc)) from None
    if mode == _MODE_SDD:
        return circuit
    false = circuit.false_ids()
    for nid, (lineno, mapped, numbers) in pending_decision.items():
        if nid in false:
            if any(numbers):
                raise ParseError(lineno, "unsatisfiable node must carry all-zero parameters")
            continue
        if mode == _MODE_PSDD:
            theta = tuple(numbers)
            if abs(math.fsum(theta) - 1.0) > SUM_TOL:
                raise ParseError(lineno, f"element probabilities sum to {math.fsum(theta)}")
            for idx, ((_, s), t) in enumerate(zip(mapped, theta)):
                if s in false and t != 0.0:
                    raise ParseError(lineno, f"element {idx} has a false sub but theta={t}")
                if t < 0.0:
                    raise ParseError(lineno, f"element {idx} has negative theta")
            point_table[nid] = theta
        else:
            lower = tuple(numbers[0::2])
            upper = tuple(numbers[1::2])
            for idx, (l, u) in enumerate(zip(lower, upper)):
                if not 0.0 <= l <= u <= 1.0:
                    raise ParseError(lineno, f"element {idx}: invalid interval [{l}, {u}]")
                if mapped[idx][1] in false and (l, u) != (0.0, 0.0):
                    raise ParseError(lineno, f"element {idx} has a false sub but bounds [{l}, {u}]")
            try:
                credal_table[nid] = IntervalCredalSet(lower, upper)
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
    if mode == _MODE_PSDD:
        params = PsddParams(point_table)
    else:
        params = CsddParams(credal_table)
    try:
        params.validate(circuit)
    except ValueError as exc:
        raise ParseError(raw[root_fid][1], str(exc)) from None
    return circuit, params


def loads_sdd(text: str, vtree: Vtree) -> Circuit:
    return _loads_circuit(text, vtree, _MODE_SDD)


def loads_psdd(text: str, vtree: Vtree) -> tuple[Circuit, PsddParams]:
    return _loads_circuit(text, vtree, _MODE_PSDD)


def loads_csdd(text: str, vtree: Vtree) -> tuple[Circuit, CsddParams]:
    return _loads_circuit(text, vtree, _MODE_CSDD)


# ---------------------------------------------------------------------------
# dataset


def dumps_dataset(dataset: Dataset) -> str:
    lines = [",".join(list(dataset.variables) + ["count"])]
    for values, count in dataset.rows:
        lines.append(",".join("1" if v else "0" for v in values) + f",{count}")
    return "\n".join(lines) + "\n"


def loads_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(1, "missing header row")
    header = [h.strip() for h in lines[0].split(",")]
    has_count = header and header[-1] == "count"
    names = tuple(header[:-1] if has_count else header)
    if not names:
        raise ParseError(1, "no variable columns")
    if len(set(names)) != len(names):
        raise ParseError(1, "duplicate variable names")
    rows: list[tuple[tuple[bool, ...], int]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ParseError(lineno, f"expected {len(header)} cells, got {len(cells)}")
        values = []
        for name, cell in zip(names, cells):
            if cell not in ("0", "1"):
                raise ParseError(lineno, f"column {name}: expected 0 or 1, got {cell!r}")
            values.append(cell == "1")
        if has_count:
            count = _int(cells[-1], lineno, "count")
            if count < 1:
                raise ParseError(lineno, f"count must be >= 1, got {count}")
        else:
            count = 1
        rows.append((tuple(values), count))
    return Dataset(names, rows)


# ---------------------------------------------------------------------------
# path wrappers


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_vtree(path) -> Vtree:
    return loads_vtree(_read(path))


def write_vtree(vtree: Vtree, path) -> None:
    _write(path, dumps_vtree(vtree))


def read_sdd(path, vtree: Vtree) -> Circuit:
    return loads_sdd(_read(path), vtree)


def write_sdd(circuit: Circuit, path) -> None:
    _write(path, dumps_sdd(circuit))


def read_psdd(path, vtree: Vtree) -> tuple[Circuit, PsddParams]:
    return loads_psdd(_read(path), vtree)


def write_psdd(circuit: Circuit, params: PsddParams, path) -> None:
    _write(path, dumps_psdd(circuit, params))


def read_csdd(path, vtree: Vtree) -> tuple[Circuit, CsddParams]:
    return loads_csdd(_read(path), vtree)


def write_csdd(circuit: Circuit, params: CsddParams, path) -> None:
    _write(path, dumps_csdd(circuit, params))


def read_dataset(path) -> Dataset:
    return loads_dataset(_read(path))


def write_dataset(dataset: Dataset, path) -> None:
    _write(path, dumps_dataset(dataset))
