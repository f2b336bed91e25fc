"""Open ZX diagrams with mixed quantum/classical wires.

Diagrams are undirected open graphs of Z/X spiders, Hadamard boxes and
boundary nodes. Two evaluation semantics are provided:

* pure: every wire is a qubit wire of dimension 2; a Z spider with phase a
  denotes |0..0><0..0| + e^{ia}|1..1><1..1| and an X spider is the same
  conjugated by Hadamards on every leg.
* doubled: quantum wires have dimension 4 (a doubled qubit, index 2i+j for
  the pair (i, j) of left/conjugate copies), classical wires dimension 2.
  A spider with at least one classical leg ("bastard" spider) forces all
  legs to agree on a basis index i: quantum legs through the doubled basis
  effects |ii>, classical legs through |i>.  X-coloured bastard spiders are
  conjugated by the doubled Hadamard on their quantum legs only; their
  classical legs carry the outcome index in the standard basis.

Matrices are numpy arrays of shape (product of output dims, product of
input dims), the first boundary being the most significant index.  Diagram
equations hold up to a nonzero scalar, decided by ``equal_up_to_scalar``.

Values are immutable; all operations return new diagrams and are safe to
call from multiple threads.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi

_H2 = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_H4 = np.kron(_H2, _H2)


class DiagramError(Exception):
    """A diagram violates a structural invariant."""


class ArityMismatch(DiagramError):
    """Composition requires equal boundary arity."""


class WireKindMismatch(DiagramError):
    """Composition requires matching wire kinds at joined boundaries."""


class ClassicalWirePresent(DiagramError):
    """Pure evaluation is only defined for all-quantum diagrams."""


class DimensionMismatch(ValueError):
    """Matrices of different shape cannot be compared."""


class WireKind(Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"


class Direction(Enum):
    INPUT = "in"
    OUTPUT = "out"


class Colour(Enum):
    """Spider colour: Z is drawn green, X red."""

    Z = "Z"
    X = "X"


@dataclass(frozen=True, slots=True)
class Phase:
    """An angle in radians, normalized to [0, 2*pi); addition wraps."""

    value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value) % TWO_PI)

    def __add__(self, other: "Phase") -> "Phase":
        return Phase(self.value + other.value)

    def __repr__(self) -> str:
        return f"Phase({self.value!r})"


@dataclass(frozen=True, slots=True)
class ZSpider:
    phase: Phase = Phase(0.0)


@dataclass(frozen=True, slots=True)
class XSpider:
    phase: Phase = Phase(0.0)


@dataclass(frozen=True, slots=True)
class Hadamard:
    pass


@dataclass(frozen=True, slots=True)
class Boundary:
    direction: Direction
    kind: WireKind


Node = Union[ZSpider, XSpider, Hadamard, Boundary]


@dataclass(frozen=True, slots=True)
class Edge:
    """Undirected wire between two node ids (a <= b after normalization)."""

    a: int
    b: int
    kind: WireKind

    def __post_init__(self):
        if self.a > self.b:
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)

    def other(self, node_id: int) -> int:
        return self.b if node_id == self.a else self.a

    def sort_key(self):
        return (self.a, self.b, self.kind.value)


def _spider_colour(node: Node) -> Colour | None:
    if isinstance(node, ZSpider):
        return Colour.Z
    if isinstance(node, XSpider):
        return Colour.X
    return None


@dataclass(frozen=True)
class Diagram:
    """An open graph of spiders, Hadamard boxes and ordered boundaries."""

    nodes: tuple[tuple[int, Node], ...]
    edges: tuple[Edge, ...]
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda kv: kv[0])))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=Edge.sort_key)))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        problems = self.validate()
        if problems:
            raise DiagramError("; ".join(problems))

    @cached_property
    def node_map(self) -> dict[int, Node]:
        return dict(self.nodes)

    def node(self, node_id: int) -> Node:
        return self.node_map[node_id]

    def incident(self, node_id: int) -> list[Edge]:
        return [e for e in self.edges if e.a == node_id or e.b == node_id]

    def degree(self, node_id: int) -> int:
        d = 0
        for e in self.edges:
            if e.a == node_id:
                d += 1
            if e.b == node_id:
                d += 1
        return d

    def input_kinds(self) -> tuple[WireKind, ...]:
        return tuple(self.node_map[i].kind for i in self.inputs)

    def output_kinds(self) -> tuple[WireKind, ...]:
        return tuple(self.node_map[i].kind for i in self.outputs)

    def validate(self) -> list[str]:
        problems = []
        node_map = dict(self.nodes)
        if len(node_map) != len(self.nodes):
            problems.append("duplicate node ids")
        for e in self.edges:
            if e.a not in node_map or e.b not in node_map:
                problems.append(f"edge {e.a}-{e.b} references a missing node")
        boundary_ids = {i for i, n in self.nodes if isinstance(n, Boundary)}
        declared = set(self.inputs) | set(self.outputs)
        if boundary_ids != declared:
            problems.append("boundary nodes and input/output lists disagree")
        if len(declared) != len(self.inputs) + len(self.outputs):
            problems.append("a boundary appears twice in the input/output lists")
        for i in self.inputs:
            n = node_map.get(i)
            if not (isinstance(n, Boundary) and n.direction is Direction.INPUT):
                problems.append(f"input {i} is not an input boundary")
        for o in self.outputs:
            n = node_map.get(o)
            if not (isinstance(n, Boundary) and n.direction is Direction.OUTPUT):
                problems.append(f"output {o} is not an output boundary")
        for node_id, node in self.nodes:
            deg = self.degree(node_id)
            inc = self.incident(node_id)
            if isinstance(node, Hadamard):
                if deg != 2:
                    problems.append(f"Hadamard {node_id} has degree {deg}, wants 2")
                if any(e.kind is not WireKind.QUANTUM for e in inc):
                    problems.append(f"Hadamard {node_id} touches a classical wire")
            elif isinstance(node, Boundary):
                if deg != 1:
                    problems.append(f"boundary {node_id} has degree {deg}, wants 1")
                elif inc[0].kind is not node.kind:
                    problems.append(f"boundary {node_id} wire kind mismatch")
        return problems

    def __rshift__(self, other: "Diagram") -> "Diagram":
        return compose(self, other)

    def __matmul__(self, other: "Diagram") -> "Diagram":
        return tensor(self, other)


def build_diagram(
    nodes: Mapping[int, Node],
    edges: Iterable[tuple[int, int, WireKind]],
    inputs: Sequence[int] = (),
    outputs: Sequence[int] = (),
) -> Diagram:
    return Diagram(
        nodes=tuple(nodes.items()),
        edges=tuple(Edge(a, b, k) for a, b, k in edges),
        inputs=tuple(inputs),
        outputs=tuple(outputs),
    )


# ---------------------------------------------------------------------------
# Small constructors


def wire(kind: WireKind = WireKind.QUANTUM) -> Diagram:
    return build_diagram(
        {0: Boundary(Direction.INPUT, kind), 1: Boundary(Direction.OUTPUT, kind)},
        [(0, 1, kind)],
        inputs=[0],
        outputs=[1],
    )


def empty_diagram() -> Diagram:
    return build_diagram({}, [])


def spider(
    colour: Colour,
    n_in: int,
    n_out: int,
    phase: float = 0.0,
    in_kinds: Sequence[WireKind] | None = None,
    out_kinds: Sequence[WireKind] | None = None,
) -> Diagram:
    """A single spider with boundaries on every leg."""
    in_kinds = list(in_kinds) if in_kinds is not None else [WireKind.QUANTUM] * n_in
    out_kinds = list(out_kinds) if out_kinds is not None else [WireKind.QUANTUM] * n_out
    if len(in_kinds) != n_in or len(out_kinds) != n_out:
        raise DiagramError("leg kind lists do not match arities")
    node: Node = ZSpider(Phase(phase)) if colour is Colour.Z else XSpider(Phase(phase))
    nodes: dict[int, Node] = {0: node}
    edges = []
    inputs, outputs = [], []
    nid = 1
    for k in in_kinds:
        nodes[nid] = Boundary(Direction.INPUT, k)
        edges.append((0, nid, k))
        inputs.append(nid)
        nid += 1
    for k in out_kinds:
        nodes[nid] = Boundary(Direction.OUTPUT, k)
        edges.append((0, nid, k))
        outputs.append(nid)
        nid += 1
    return build_diagram(nodes, edges, inputs, outputs)


def hadamard_box() -> Diagram:
    return build_diagram(
        {
            0: Boundary(Direction.INPUT, WireKind.QUANTUM),
            1: Hadamard(),
            2: Boundary(Direction.OUTPUT, WireKind.QUANTUM),
        },
        [(0, 1, WireKind.QUANTUM), (1, 2, WireKind.QUANTUM)],
        inputs=[0],
        outputs=[2],
    )


def bell_state() -> Diagram:
    """The unnormalized |00>+|11> preparation: a phase-free Z spider 0->2."""
    return spider(Colour.Z, 0, 2)


def measurement_spider(colour: Colour) -> Diagram:
    """Quantum in, classical out: collapse against the colour's basis."""
    return spider(
        colour, 1, 1, in_kinds=[WireKind.QUANTUM], out_kinds=[WireKind.CLASSICAL]
    )


def encoding_spider(colour: Colour) -> Diagram:
    """Classical in, quantum out: re-prepare the colour's basis state."""
    return spider(
        colour, 1, 1, in_kinds=[WireKind.CLASSICAL], out_kinds=[WireKind.QUANTUM]
    )


# ---------------------------------------------------------------------------
# Composition


def _relabel(d: Diagram, offset: int) -> tuple[dict[int, Node], list[Edge], list[int], list[int]]:
    nodes = {i + offset: n for i, n in d.nodes}
    edges = [Edge(e.a + offset, e.b + offset, e.kind) for e in d.edges]
    return nodes, edges, [i + offset for i in d.inputs], [i + offset for i in d.outputs]


def tensor(left: Diagram, right: Diagram) -> Diagram:
    """Disjoint union; boundary orders concatenated left then right."""
    offset = (max((i for i, _ in left.nodes), default=-1)) + 1
    rnodes, redges, rins, routs = _relabel(right, offset)
    nodes = dict(left.nodes)
    nodes.update(rnodes)
    return Diagram(
        nodes=tuple(nodes.items()),
        edges=left.edges + tuple(redges),
        inputs=left.inputs + tuple(rins),
        outputs=left.outputs + tuple(routs),
    )


def compose(first: Diagram, second: Diagram) -> Diagram:
    """Plug ``first``'s outputs into ``second``'s inputs, pairwise in order."""
    if len(first.outputs) != len(second.inputs):
        raise ArityMismatch(
            f"cannot plug {len(first.outputs)} outputs into {len(second.inputs)} inputs"
        )
    if first.output_kinds() != second.input_kinds():
        raise WireKindMismatch("output wire kinds do not match input wire kinds")
    offset = (max((i for i, _ in first.nodes), default=-1)) + 1
    snodes, sedges, sins, souts = _relabel(second, offset)
    nodes = dict(first.nodes)
    nodes.update(snodes)
    edges = list(first.edges) + sedges
    fresh = offset + (max((i for i, _ in second.nodes), default=-1)) + 1

    def pop_incident(node_id: int) -> Edge:
        for idx, e in enumerate(edges):
            if e.a == node_id or e.b == node_id:
                return edges.pop(idx)
        raise DiagramError(f"boundary {node_id} has no wire")

    for o, i in zip(first.outputs, sins):
        e1 = pop_incident(o)
        if e1.a == i or e1.b == i:
            # The two boundaries are wired straight to each other: plugging
            # them closes a loop, kept as a phase-free spider with a self-loop
            # (its value is the wire dimension, matching the closed circle).
            loop = fresh
            fresh += 1
            nodes[loop] = ZSpider(Phase(0.0))
            edges.append(Edge(loop, loop, e1.kind))
        else:
            e2 = pop_incident(i)
            u = e1.other(o)
            v = e2.other(i)
            edges.append(Edge(u, v, e1.kind))
        del nodes[o]
        del nodes[i]

    return Diagram(
        nodes=tuple(nodes.items()),
        edges=tuple(edges),
        inputs=first.inputs,
        outputs=tuple(souts),
    )


def permute_outputs(d: Diagram, order: Sequence[int]) -> Diagram:
    """Reorder the output boundaries; entry k of ``order`` names the old
    position now appearing at position k."""
    if sorted(order) != list(range(len(d.outputs))):
        raise DiagramError("order must be a permutation of the output positions")
    return Diagram(
        nodes=d.nodes,
        edges=d.edges,
        inputs=d.inputs,
        outputs=tuple(d.outputs[k] for k in order),
    )


# ---------------------------------------------------------------------------
# Spider fusion


def _fusable_edge(d: Diagram) -> Edge | None:
    for e in d.edges:
        if e.a == e.b:
            continue
        ca = _spider_colour(d.node_map[e.a])
        cb = _spider_colour(d.node_map[e.b])
        if ca is not None and ca is cb:
            return e
    return None


def _fuse_once(d: Diagram, e: Edge) -> Diagram:
    """Merge spider e.b into e.a.

    Quantum wires between the pair contribute scalar 1 and vanish.  Classical
    wires between the pair also contribute scalar 1, but they force the merged
    spider to stay decohered: if dropping them would leave the merged spider
    with no classical legs at all, one classical self-loop is kept as the
    decoherence marker (the evaluator's bastard branch).
    """
    keep, drop = e.a, e.b
    a_node = d.node_map[keep]
    b_node = d.node_map[drop]
    phase = a_node.phase + b_node.phase
    merged: Node = ZSpider(phase) if isinstance(a_node, ZSpider) else XSpider(phase)
    nodes = dict(d.node_map)
    del nodes[drop]
    nodes[keep] = merged
    edges = []
    dropped_classical = False
    for edge in d.edges:
        a = keep if edge.a == drop else edge.a
        b = keep if edge.b == drop else edge.b
        if a == keep and b == keep and (edge.a != edge.b):
            # a wire between the two merged spiders
            if edge.kind is WireKind.CLASSICAL:
                dropped_classical = True
            continue
        edges.append(Edge(a, b, edge.kind))
    has_classical_leg = any(
        edge.kind is WireKind.CLASSICAL and (edge.a == keep or edge.b == keep)
        for edge in edges
    )
    if dropped_classical and not has_classical_leg:
        edges.append(Edge(keep, keep, WireKind.CLASSICAL))
    return Diagram(
        nodes=tuple(nodes.items()),
        edges=tuple(edges),
        inputs=d.inputs,
        outputs=d.outputs,
    )


def fusion_steps(d: Diagram) -> list[Diagram]:
    """The diagram followed by one entry per single spider fusion, to fixpoint."""
    steps = [d]
    while True:
        e = _fusable_edge(steps[-1])
        if e is None:
            return steps
        steps.append(_fuse_once(steps[-1], e))


def fuse_spiders(d: Diagram) -> Diagram:
    """Merge adjacent same-colour spiders until none remain adjacent."""
    return fusion_steps(d)[-1]


# ---------------------------------------------------------------------------
# Evaluation


def _pure_spider_tensor(colour: Colour, degree: int, phase: float) -> np.ndarray:
    if degree == 0:
        t = np.array(1.0 + cmath.exp(1j * phase), dtype=complex)
    else:
        t = np.zeros((2,) * degree, dtype=complex)
        t[(0,) * degree] = 1.0
        t[(1,) * degree] = cmath.exp(1j * phase)
    if colour is Colour.X:
        for _ in range(degree):
            t = np.tensordot(t, _H2, axes=([0], [0]))
    return t


def _doubled_spider_tensor(colour: Colour, kinds: Sequence[WireKind], phase: float) -> np.ndarray:
    if all(k is WireKind.QUANTUM for k in kinds):
        d = len(kinds)
        if d == 0:
            return np.array(abs(1.0 + cmath.exp(1j * phase)) ** 2, dtype=complex)
        t = np.zeros((4,) * d, dtype=complex)
        for a in (0, 1):
            for b in (0, 1):
                w = cmath.exp(1j * phase * a) * cmath.exp(-1j * phase * b)
                t[(2 * a + b,) * d] = w
    else:
        # Bastard spider: all legs agree on one basis index; any phase is
        # killed by the classical legs (the conjugate copy cancels it).
        shape = tuple(4 if k is WireKind.QUANTUM else 2 for k in kinds)
        t = np.zeros(shape, dtype=complex)
        for i in (0, 1):
            t[tuple(3 * i if k is WireKind.QUANTUM else i for k in kinds)] = 1.0
    if colour is Colour.X:
        for axis, k in enumerate(kinds):
            if k is WireKind.QUANTUM:
                t = np.moveaxis(np.tensordot(t, _H4, axes=([axis], [0])), -1, axis)
    return t


def _evaluate(d: Diagram, doubled: bool) -> np.ndarray:
    def dim(kind: WireKind) -> int:
        if not doubled:
            return 2
        return 4 if kind is WireKind.QUANTUM else 2

    if not doubled:
        if any(e.kind is WireKind.CLASSICAL for e in d.edges) or any(
            isinstance(n, Boundary) and n.kind is WireKind.CLASSICAL for _, n in d.nodes
        ):
            raise ClassicalWirePresent("pure evaluation needs an all-quantum diagram")

    # One einsum symbol (int) per edge; boundary-to-boundary edges become an
    # identity operand with two symbols, one consumed by each boundary.
    next_sym = 0
    edge_syms: dict[int, tuple[int, ...]] = {}
    operands: list[np.ndarray] = []
    subscripts: list[list[int]] = []
    boundary_sym: dict[int, int] = {}
    node_map = d.node_map

    for idx, e in enumerate(d.edges):
        a_bound = isinstance(node_map[e.a], Boundary)
        b_bound = isinstance(node_map[e.b], Boundary)
        if a_bound and b_bound:
            s1, s2 = next_sym, next_sym + 1
            next_sym += 2
            edge_syms[idx] = (s1, s2)
            operands.append(np.eye(dim(e.kind), dtype=complex))
            subscripts.append([s1, s2])
            boundary_sym[e.a] = s1
            boundary_sym[e.b] = s2
        else:
            s = next_sym
            next_sym += 1
            edge_syms[idx] = (s, s)
            if a_bound:
                boundary_sym[e.a] = s
            if b_bound:
                boundary_sym[e.b] = s

    for node_id, node in d.nodes:
        if isinstance(node, Boundary):
            continue
        legs: list[int] = []
        kinds: list[WireKind] = []
        for idx, e in enumerate(d.edges):
            syms = edge_syms[idx]
            if e.a == node_id and e.b == node_id:
                legs.extend(syms if syms[0] != syms[1] else (syms[0], syms[0]))
                kinds.extend([e.kind, e.kind])
            elif e.a == node_id or e.b == node_id:
                legs.append(syms[0])
                kinds.append(e.kind)
        if isinstance(node, Hadamard):
            operands.append(_H4 if doubled else _H2)
            subscripts.append(legs)
        elif isinstance(node, (ZSpider, XSpider)):
            colour = Colour.Z if isinstance(node, ZSpider) else Colour.X
            if doubled:
                t = _doubled_spider_tensor(colour, kinds, node.phase.value)
            else:
                t = _pure_spider_tensor(colour, len(kinds), node.phase.value)
            operands.append(t)
            subscripts.append(legs)

    out_list = [boundary_sym[o] for o in d.outputs] + [boundary_sym[i] for i in d.inputs]
    if not operands:
        value = np.array(1.0, dtype=complex)
    else:
        args: list = []
        for op, sub in zip(operands, subscripts):
            args.append(op)
            args.append(sub)
        args.append(out_list)
        value = np.einsum(*args, optimize=True)

    out_dims = [dim(k) for k in d.output_kinds()]
    in_dims = [dim(k) for k in d.input_kinds()]
    rows = math.prod(out_dims)
    cols = math.prod(in_dims)
    return np.asarray(value, dtype=complex).reshape(rows, cols)


def evaluate_pure(d: Diagram) -> np.ndarray:
    """Matrix of an all-quantum diagram under single-wire qubit semantics."""
    return _evaluate(d, doubled=False)


def evaluate_doubled(d: Diagram) -> np.ndarray:
    """Matrix under doubled semantics (quantum dim 4, classical dim 2)."""
    return _evaluate(d, doubled=True)


def doubled_matrix(u: np.ndarray) -> np.ndarray:
    """Lift a pure single-wire map to doubled semantics: u (x) conj(u)."""
    return np.kron(u, u.conj())


def equal_up_to_scalar(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff a = lambda * b entrywise for some nonzero complex lambda.

    lambda is fixed from the largest-magnitude entry pairing; the zero matrix
    compares equal only to the zero matrix.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    amax = np.abs(a).max(initial=0.0)
    bmax = np.abs(b).max(initial=0.0)
    if amax <= tol and bmax <= tol:
        return True
    if amax <= tol or bmax <= tol:
        return False
    p = np.unravel_index(np.argmax(np.abs(a) + np.abs(b)), a.shape)
    if b[p] == 0:
        return False
    lam = a[p] / b[p]
    if lam == 0:
        return False
    return bool(np.abs(a - lam * b).max() <= tol)


# ---------------------------------------------------------------------------
# Single-qubit unitaries as spider chains


def _z_rot(angle: float) -> np.ndarray:
    return np.array([[1, 0], [0, cmath.exp(1j * angle)]], dtype=complex)


def _x_rot(angle: float) -> np.ndarray:
    return _H2 @ _z_rot(angle) @ _H2


def euler_zxz(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (alpha, beta, gamma) with Z(alpha) X(beta) Z(gamma) ~ u.

    The product is proportional to u (global phase is not recovered; it is
    killed by doubling anyway). Input must be unitary.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-9):
        raise ValueError("matrix is not unitary within 1e-9")
    a00, a01, a10 = u[0, 0], u[0, 1], u[1, 0]
    if abs(a10) < 1e-12:
        return (float(np.angle(u[1, 1] / a00)) % TWO_PI, 0.0, 0.0)
    if abs(a00) < 1e-12:
        return (0.0, math.pi, float(np.angle(a01 / a10)) % TWO_PI)
    beta = 2.0 * math.atan2(abs(a10), abs(a00))
    t = (1.0 - cmath.exp(1j * beta)) / (1.0 + cmath.exp(1j * beta))
    alpha = (float(np.angle(a10 / a00)) - float(np.angle(t))) % TWO_PI
    gamma = (float(np.angle(a01 / a00)) - float(np.angle(t))) % TWO_PI
    return (alpha, beta, gamma)


def unitary_chain(u: np.ndarray) -> Diagram:
    """A 1->1 quantum diagram of Z/X spiders proportional to the unitary u."""
    alpha, beta, gamma = euler_zxz(u)
    d = spider(Colour.Z, 1, 1, gamma)
    if beta:
        d = d >> spider(Colour.X, 1, 1, beta)
    if alpha:
        d = d >> spider(Colour.Z, 1, 1, alpha)
    return d


# ---------------------------------------------------------------------------
# The measurement-unfolding equation


@dataclass(frozen=True)
class MeasurementEquation:
    """Both sides of the collapse identity, plus their fusion chains.

    ``unfolded`` prepares an entangled pair (phase-free cup with an identity
    "same" gate on the partner leg) and measures one leg against the colour's
    basis.  ``compact`` is the collapse-then-re-prepare reading: a classical
    outcome dot whose value is copied to the outcome wire and re-encoded on
    the partner.  Both evaluate, under doubled semantics, to the same matrix
    up to a nonzero scalar.
    """

    colour: Colour
    unfolded: Diagram
    compact: Diagram
    unfolded_steps: tuple[Diagram, ...]
    compact_steps: tuple[Diagram, ...]


def measurement_equation(colour: Colour) -> MeasurementEquation:
    unfolded = build_diagram(
        {
            0: ZSpider(Phase(0.0)),  # entangling cup
            1: ZSpider(Phase(0.0)),  # the identity "same" gate, basis-free
            2: ZSpider(Phase(0.0)) if colour is Colour.Z else XSpider(Phase(0.0)),
            3: Boundary(Direction.OUTPUT, WireKind.CLASSICAL),
            4: Boundary(Direction.OUTPUT, WireKind.QUANTUM),
        },
        [
            (0, 2, WireKind.QUANTUM),
            (0, 1, WireKind.QUANTUM),
            (1, 4, WireKind.QUANTUM),
            (2, 3, WireKind.CLASSICAL),
        ],
        outputs=[3, 4],
    )
    dot: Node = ZSpider(Phase(0.0)) if colour is Colour.Z else XSpider(Phase(0.0))
    compact = build_diagram(
        {
            0: dot,  # the measurement dot: classical outcome, copied
            1: dot,  # re-preparation on the partner wire
            2: Boundary(Direction.OUTPUT, WireKind.CLASSICAL),
            3: Boundary(Direction.OUTPUT, WireKind.QUANTUM),
        },
        [
            (0, 2, WireKind.CLASSICAL),
            (0, 1, WireKind.CLASSICAL),
            (1, 3, WireKind.QUANTUM),
        ],
        outputs=[2, 3],
    )
    return MeasurementEquation(
        colour=colour,
        unfolded=unfolded,
        compact=compact,
        unfolded_steps=tuple(fusion_steps(unfolded)),
        compact_steps=tuple(fusion_steps(compact)),
    )


# ---------------------------------------------------------------------------
# Canonical text format (documented in docs/diagram-format.md)


def diagram_to_text(d: Diagram) -> str:
    lines = ["zx {"]
    for node_id, node in d.nodes:
        if isinstance(node, ZSpider):
            lines.append(f"  node {node_id} Z {node.phase.value!r}")
        elif isinstance(node, XSpider):
            lines.append(f"  node {node_id} X {node.phase.value!r}")
        elif isinstance(node, Hadamard):
            lines.append(f"  node {node_id} H")
        else:
            lines.append(f"  node {node_id} {node.direction.value} {node.kind.value}")
    for e in d.edges:
        lines.append(f"  edge {e.a} {e.b} {e.kind.value}")
    lines.append("  inputs " + " ".join(str(i) for i in d.inputs))
    lines.append("  outputs " + " ".join(str(i) for i in d.outputs))
    lines.append("}")
    return "\n".join(lines) + "\n"


def diagram_from_text(text: str) -> Diagram:
    nodes: dict[int, Node] = {}
    edges: list[tuple[int, int, WireKind]] = []
    inputs: list[int] = []
    outputs: list[int] = []
    body = False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "zx {":
            body = True
            continue
        if line == "}":
            body = False
            continue
        if not body:
            raise DiagramError(f"unexpected line outside diagram block: {line!r}")
        parts = line.split()
        if parts[0] == "node":
            node_id = int(parts[1])
            tag = parts[2]
            if tag in ("Z", "X"):
                phase = Phase(float(parts[3])) if len(parts) > 3 else Phase(0.0)
                nodes[node_id] = ZSpider(phase) if tag == "Z" else XSpider(phase)
            elif tag == "H":
                nodes[node_id] = Hadamard()
            elif tag in ("in", "out"):
                nodes[node_id] = Boundary(
                    Direction.INPUT if tag == "in" else Direction.OUTPUT,
                    WireKind(parts[3]),
                )
            else:
                raise DiagramError(f"unknown node tag {tag!r}")
        elif parts[0] == "edge":
            edges.append((int(parts[1]), int(parts[2]), WireKind(parts[3])))
        elif parts[0] == "inputs":
            inputs = [int(p) for p in parts[1:]]
        elif parts[0] == "outputs":
            outputs = [int(p) for p in parts[1:]]
        else:
            raise DiagramError(f"unknown directive {parts[0]!r}")
    return build_diagram(nodes, edges, inputs, outputs)


def canonical_text(d: Diagram) -> str:
    """Text after a deterministic boundary-anchored relabeling.

    Relabels nodes by a breadth-first walk from the boundaries (inputs then
    outputs, edges ordered by kind and neighbor), so structurally identical
    small diagrams print identically. Not a full isomorphism check.
    """
    order: list[int] = []
    seen: set[int] = set()
    queue = list(d.inputs) + list(d.outputs)
    adjacency: dict[int, list[tuple[str, int]]] = {i: [] for i, _ in d.nodes}
    for e in d.edges:
        adjacency[e.a].append((e.kind.value, e.b))
        if e.a != e.b:
            adjacency[e.b].append((e.kind.value, e.a))
    while queue:
        cur = queue.pop(0)
        if cur in seen:
            continue
        seen.add(cur)
        order.append(cur)
        for _, nbr in sorted(adjacency[cur]):
            if nbr not in seen:
                queue.append(nbr)
    leftovers = sorted(i for i, _ in d.nodes if i not in seen)
    order.extend(leftovers)
    relabel = {old: new for new, old in enumerate(order)}
    remapped = build_diagram(
        {relabel[i]: n for i, n in d.nodes},
        [(relabel[e.a], relabel[e.b], e.kind) for e in d.edges],
        [relabel[i] for i in d.inputs],
        [relabel[i] for i in d.outputs],
    )
    return diagram_to_text(remapped)
