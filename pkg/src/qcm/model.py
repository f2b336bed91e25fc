"""Score abstract syntax: musical qubits, glossary, movements, sameness
links, gates, blobs and measurement events, plus validation and compilation
of measurement events to diagrams.

Scores are immutable value objects. Construction enforces local type
invariants (raising ValueError); ``check_score`` performs the cross-cutting
checks (reference resolution, wire typing, leader acyclicity, phase ranges)
and reports diagnostics with stable codes rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Union

import numpy as np

from . import zx

TWO_PI = 2.0 * math.pi


class DecisionPolicy(Enum):
    PERFORMER = "performer"
    THIRD_PARTY = "third-party"
    AUDIENCE = "audience"


class BasisColour(Enum):
    GREEN = "green"  # Z basis
    RED = "red"  # X basis


class SamenessScope(Enum):
    FULL = "full"
    NOTES = "notes"
    RHYTHM = "rhythm"
    SOUND = "sound"


STANDARD_KINDS = frozenset(
    {"identical", "alike", "inspired-by", "anticipates", "follows"}
)


@dataclass(frozen=True, slots=True)
class SamenessKind:
    name: str
    scope: SamenessScope = SamenessScope.FULL


@dataclass(frozen=True, slots=True)
class Note:
    pitch: int  # semitones from middle C
    duration: Fraction  # beats

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("note duration must be positive")


@dataclass(frozen=True, slots=True)
class Fragment:
    notes: tuple[Note, ...]

    def __post_init__(self):
        if not self.notes:
            raise ValueError("fragment must contain at least one note")


@dataclass(frozen=True, slots=True)
class VariableContent:
    name: str


@dataclass(frozen=True, slots=True)
class AbstractContent:
    text: str


BlobContent = Union[Fragment, VariableContent, AbstractContent]


@dataclass(frozen=True, slots=True)
class Blob:
    id: str
    qubit_id: str
    content: BlobContent
    phase: float | None = None  # position on the instrument's state disc


# --- gates ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class IdentityGate:
    pass


@dataclass(frozen=True, slots=True)
class SharpGate:
    n: int  # signed semitone count

    def __post_init__(self):
        if self.n == 0:
            raise ValueError("sharp(0) is the identity gate; write identity")


@dataclass(frozen=True, slots=True)
class HadamardGate:
    pass


@dataclass(frozen=True, slots=True)
class CustomGate:
    name: str


@dataclass(frozen=True, slots=True)
class VariableGate:
    name: str


GateOp = Union[IdentityGate, SharpGate, HadamardGate, CustomGate, VariableGate]


@dataclass(frozen=True, slots=True)
class Gate:
    op: GateOp
    lead: str | None = None  # tilt: the leading qubit id, if any


class GateNotApplicable(ValueError):
    pass


def apply_gate_to_fragment(op: GateOp, fragment: Fragment) -> Fragment:
    """Note-level action of a gate; only identity and sharp transpose notes."""
    if isinstance(op, IdentityGate):
        return fragment
    if isinstance(op, SharpGate):
        return Fragment(tuple(Note(n.pitch + op.n, n.duration) for n in fragment.notes))
    raise GateNotApplicable(f"{type(op).__name__} has no note-level action")


# --- links, events, entanglement ---------------------------------------------


@dataclass(frozen=True, slots=True)
class SamenessLink:
    id: str
    endpoints: tuple[tuple[str, str], tuple[str, str]]  # (qubit-id, blob-id) pairs
    kind: SamenessKind
    gate: Gate = Gate(IdentityGate())

    def __post_init__(self):
        (q1, b1), (q2, b2) = self.endpoints
        if q1 == q2 and b1 == b2:
            raise ValueError("link endpoints must differ in qubit or blob")
        if self.gate.lead is not None and self.gate.lead not in (q1, q2):
            raise ValueError("gate tilt must point at one of the endpoint qubits")


@dataclass(frozen=True, slots=True)
class MeasurementEvent:
    id: str
    movement_id: str
    measured: str
    colour: BasisColour
    influenced: str
    entanglement_id: str
    cue: int

    def __post_init__(self):
        if self.measured == self.influenced:
            raise ValueError("measured and influenced qubit must differ")
        if self.cue < 1:
            raise ValueError("cue is a 1-based ordinal")


PRESET_IDENTIFICATIONS = {
    "identity": ((1 + 0j, 0j), (0j, 1 + 0j)),
    "hadamard": tuple(tuple(v) for v in (np.array([[1, 1], [1, -1]]) / math.sqrt(2))),
}

Matrix2 = tuple[tuple[complex, complex], tuple[complex, complex]]


@dataclass(frozen=True, slots=True)
class Identification:
    """Either a named preset (identity, hadamard, or a glossary relation) or
    an explicit 2x2 unitary."""

    preset: str | None = None
    matrix: Matrix2 | None = None

    def __post_init__(self):
        if (self.preset is None) == (self.matrix is None):
            raise ValueError("give exactly one of preset or matrix")
        if self.matrix is not None and not _is_unitary(self.matrix):
            raise ValueError("identification matrix is not unitary within 1e-9")

    def resolve(self, glossary: "MetaGlossary") -> np.ndarray:
        if self.matrix is not None:
            return np.array(self.matrix, dtype=complex)
        if self.preset in PRESET_IDENTIFICATIONS:
            return np.array(PRESET_IDENTIFICATIONS[self.preset], dtype=complex)
        relation = glossary.relations.get(self.preset)
        if relation is None or relation.matrix is None:
            raise KeyError(f"identification {self.preset!r} has no matrix")
        return np.array(relation.matrix, dtype=complex)


def _is_unitary(m, tol: float = 1e-9) -> bool:
    a = np.array(m, dtype=complex)
    return a.shape == (2, 2) and bool(
        np.abs(a.conj().T @ a - np.eye(2)).max() <= tol
    )


@dataclass(frozen=True, slots=True)
class EntanglementSpec:
    id: str
    pair: tuple[str, str]
    identification: Identification = Identification(preset="identity")
    description: str = ""

    def __post_init__(self):
        if self.pair[0] == self.pair[1]:
            raise ValueError("entangled pair must be two distinct qubits")


@dataclass(frozen=True, slots=True)
class MusicalQubit:
    id: str
    instrument: str
    axis_z: tuple[str, str]  # (outcome-0 label, outcome-1 label)
    axis_x: tuple[str, str]  # (plus label, minus label)
    phase_range: tuple[float, float] = (0.0, TWO_PI)

    def __post_init__(self):
        labels = (*self.axis_z, *self.axis_x)
        if len(set(labels)) != 4:
            raise ValueError("the four eigenstate labels must be pairwise distinct")
        lo, hi = self.phase_range
        if not (0.0 <= lo <= hi <= TWO_PI):
            raise ValueError("phase range must be a nonempty interval within [0, 2*pi]")

    def labels(self, colour: BasisColour) -> tuple[str, str]:
        return self.axis_z if colour is BasisColour.GREEN else self.axis_x


# --- glossary and score -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class KindDef:
    description: str
    scope: SamenessScope = SamenessScope.FULL


@dataclass(frozen=True, slots=True)
class RelationDef:
    description: str
    matrix: Matrix2 | None = None


@dataclass(frozen=True)
class MetaGlossary:
    decision_policy: DecisionPolicy
    sameness_kinds: dict[str, KindDef] = field(default_factory=dict)
    relations: dict[str, RelationDef] = field(default_factory=dict)
    movement_notes: dict[str, str] = field(default_factory=dict)


MovementItem = Union[MeasurementEvent, SamenessLink, Blob]


@dataclass(frozen=True)
class Movement:
    id: str
    items: tuple[MovementItem, ...] = ()

    @property
    def events(self) -> tuple[MeasurementEvent, ...]:
        return tuple(
            sorted(
                (i for i in self.items if isinstance(i, MeasurementEvent)),
                key=lambda e: e.cue,
            )
        )

    @property
    def links(self) -> tuple[SamenessLink, ...]:
        return tuple(i for i in self.items if isinstance(i, SamenessLink))

    @property
    def blobs(self) -> tuple[Blob, ...]:
        return tuple(i for i in self.items if isinstance(i, Blob))


@dataclass(frozen=True)
class Score:
    title: str
    glossary: MetaGlossary
    qubits: tuple[MusicalQubit, ...] = ()
    entanglements: tuple[EntanglementSpec, ...] = ()
    movements: tuple[Movement, ...] = ()

    def qubit(self, qubit_id: str) -> MusicalQubit:
        return next(q for q in self.qubits if q.id == qubit_id)

    def entanglement(self, spec_id: str) -> EntanglementSpec:
        return next(e for e in self.entanglements if e.id == spec_id)

    @property
    def blobs(self) -> dict[str, Blob]:
        return {b.id: b for m in self.movements for b in m.blobs}


@dataclass(frozen=True, slots=True)
class Diagnostic:
    code: str
    message: str
    subject: str | None = None

    def __str__(self) -> str:
        where = f" [{self.subject}]" if self.subject else ""
        return f"{self.code}: {self.message}{where}"


class InvalidScore(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


# --- validation ---------------------------------------------------------------


def check_score(score: Score) -> list[Diagnostic]:
    """Cross-reference and wire-typing validation; empty list means valid."""
    out: list[Diagnostic] = []

    def bad(code: str, message: str, subject: str | None = None):
        out.append(Diagnostic(code, message, subject))

    qubit_ids = [q.id for q in score.qubits]
    _check_unique(out, qubit_ids, "qubit")
    spec_ids = [e.id for e in score.entanglements]
    _check_unique(out, spec_ids, "entanglement")
    movement_ids = [m.id for m in score.movements]
    _check_unique(out, movement_ids, "movement")
    blob_ids = [b.id for m in score.movements for b in m.blobs]
    _check_unique(out, blob_ids, "blob")
    event_ids = [e.id for m in score.movements for e in m.events]
    _check_unique(out, event_ids, "event")
    link_ids = [l.id for m in score.movements for l in m.links]
    _check_unique(out, link_ids, "link")

    qubits = set(qubit_ids)
    specs = {e.id: e for e in score.entanglements}
    blobs = set(blob_ids)

    if not score.movements:
        bad("NoMovements", "a score needs at least one movement")

    for name, rel in score.glossary.relations.items():
        if rel.matrix is not None and not _is_unitary(rel.matrix):
            bad("NonUnitaryRelation", "relation matrix is not unitary within 1e-9", name)
    for note_key in score.glossary.movement_notes:
        if note_key not in movement_ids:
            bad("UnknownMovement", "glossary note references no movement", note_key)

    for spec in score.entanglements:
        for q in spec.pair:
            if q not in qubits:
                bad("UnknownQubit", "entangled pair references unknown qubit", q)
        ident = spec.identification
        if ident.preset is not None and ident.preset not in PRESET_IDENTIFICATIONS:
            rel = score.glossary.relations.get(ident.preset)
            if rel is None:
                bad(
                    "UnresolvedGlossaryName",
                    "identification preset is not a glossary relation",
                    ident.preset,
                )
            elif rel.matrix is None:
                bad(
                    "RelationLacksMatrix",
                    "identification relation carries no matrix",
                    ident.preset,
                )

    for movement in score.movements:
        classical: set[str] = set()  # qubits already measured in this movement
        cues: set[int] = set()
        for item in movement.items:
            if isinstance(item, MeasurementEvent):
                if item.movement_id != movement.id:
                    bad(
                        "MovementMismatch",
                        f"event declares movement {item.movement_id!r}",
                        item.id,
                    )
                for q in (item.measured, item.influenced):
                    if q not in qubits:
                        bad("UnknownQubit", "measurement references unknown qubit", q)
                if item.cue in cues:
                    bad("CueConflict", "cue is not unique within the movement", item.id)
                cues.add(item.cue)
                spec = specs.get(item.entanglement_id)
                if spec is None:
                    bad(
                        "UnknownEntanglement",
                        "event references unknown entanglement",
                        item.entanglement_id,
                    )
                elif {item.measured, item.influenced} != set(spec.pair):
                    bad(
                        "EntanglementPairMismatch",
                        "event qubits are not the entangled pair",
                        item.id,
                    )
                classical.add(item.measured)
            elif isinstance(item, SamenessLink):
                link_qubits = []
                for q, b in item.endpoints:
                    if q not in qubits:
                        bad("UnknownQubit", "link endpoint references unknown qubit", q)
                    if b not in blobs:
                        bad("UnknownBlob", "link endpoint references unknown blob", b)
                    link_qubits.append(q)
                if item.kind.name not in STANDARD_KINDS:
                    if item.kind.name not in score.glossary.sameness_kinds:
                        bad(
                            "UnresolvedGlossaryName",
                            "custom sameness kind is not in the glossary",
                            item.kind.name,
                        )
                op = item.gate.op
                if isinstance(op, CustomGate):
                    if op.name not in score.glossary.relations:
                        bad(
                            "UnresolvedGlossaryName",
                            "custom gate is not a glossary relation",
                            op.name,
                        )
                if isinstance(op, HadamardGate):
                    fed_classical = [q for q in link_qubits if q in classical]
                    if fed_classical:
                        bad(
                            "ClassicalIntoHadamard",
                            "a Hadamard gate cannot follow a measurement's"
                            " classical output",
                            item.id,
                        )
                if item.gate.lead is not None:
                    (q1, _), (q2, _) = item.endpoints
                    if q1 == q2:
                        bad(
                            "SelfLead",
                            "a qubit cannot lead and follow the same link",
                            item.id,
                        )
            else:  # Blob
                if item.qubit_id not in qubits:
                    bad("UnknownQubit", "blob sits on unknown qubit", item.qubit_id)
                elif item.phase is not None:
                    lo, hi = score.qubit(item.qubit_id).phase_range
                    if not lo <= item.phase <= hi:
                        bad(
                            "PhaseOutOfRange",
                            f"phase {item.phase:g} outside [{lo:g}, {hi:g}]",
                            item.id,
                        )
        _check_leader_cycles(out, movement)

    return out


def _check_unique(out: list[Diagnostic], ids: list[str], what: str):
    seen: set[str] = set()
    for i in ids:
        if i in seen:
            out.append(Diagnostic("DuplicateId", f"duplicate {what} id", i))
        seen.add(i)


def _check_leader_cycles(out: list[Diagnostic], movement: Movement):
    edges: dict[str, set[str]] = {}
    for link in movement.links:
        if link.gate.lead is None:
            continue
        (q1, _), (q2, _) = link.endpoints
        if q1 == q2:
            continue  # reported as SelfLead above
        leader = link.gate.lead
        follower = q2 if leader == q1 else q1
        edges.setdefault(leader, set()).add(follower)

    visiting: set[str] = set()
    done: set[str] = set()

    def dfs(node: str) -> bool:
        if node in done:
            return False
        if node in visiting:
            return True
        visiting.add(node)
        for nxt in edges.get(node, ()):
            if dfs(nxt):
                return True
        visiting.discard(node)
        done.add(node)
        return False

    for start in list(edges):
        if dfs(start):
            out.append(
                Diagnostic(
                    "LeaderCycle",
                    "leader relation is cyclic within the movement",
                    movement.id,
                )
            )
            return


# --- compilation to diagrams --------------------------------------------------


def to_diagram(event: MeasurementEvent, score: Score) -> zx.Diagram:
    """The unfolded form of one measurement: entangling cup, identification
    gate on the pair's second leg, and a measurement spider of the event's
    colour on the measured leg. Outputs are ordered (classical outcome,
    quantum partner wire)."""
    diagnostics = check_score(score)
    if diagnostics:
        raise InvalidScore(diagnostics)
    spec = score.entanglement(event.entanglement_id)
    colour = zx.Colour.Z if event.colour is BasisColour.GREEN else zx.Colour.X
    ident = spec.identification
    if ident.preset == "identity":
        gate = zx.spider(zx.Colour.Z, 1, 1, 0.0)  # the "same" gate
    elif ident.preset == "hadamard":
        gate = zx.hadamard_box()
    else:
        gate = zx.unitary_chain(ident.resolve(score.glossary))
    d = zx.compose(zx.bell_state(), zx.tensor(zx.wire(), gate))
    meas = zx.measurement_spider(colour)
    if event.measured == spec.pair[0]:
        return zx.compose(d, zx.tensor(meas, zx.wire()))
    d = zx.compose(d, zx.tensor(zx.wire(), meas))
    return zx.permute_outputs(d, (1, 0))


# --- the "Bell" fixture ---------------------------------------------------------


DEFAULT_BELL_PANELS = (
    ("guitar", BasisColour.GREEN),
    ("piano", BasisColour.GREEN),
    ("guitar", BasisColour.RED),
    ("piano", BasisColour.RED),
)


def bell_score_fixture(
    panels: tuple[tuple[str, BasisColour], ...] = DEFAULT_BELL_PANELS,
) -> Score:
    """The four-movement two-qubit score with a fixed identification gate.

    The per-movement (measured qubit, colour) assignment is reconstructed as
    alternation starting from (guitar, green); pass ``panels`` to change it.
    """
    guitar = MusicalQubit(
        id="guitar",
        instrument="Actias Quantum Guitar",
        axis_z=("|0⟩", "|1⟩"),
        axis_x=("|+⟩", "|−⟩"),
        phase_range=(0.0, TWO_PI),
    )
    piano = MusicalQubit(
        id="piano",
        instrument="Grand Piano",
        axis_z=("Soft and Slow", "Strong and Fast"),
        axis_x=("Soft and Fast", "Strong and Slow"),
        phase_range=(0.0, math.pi),  # the mental qubit fills half the sphere
    )
    pair = EntanglementSpec(
        id="pair",
        pair=("guitar", "piano"),
        identification=Identification(preset="identity"),
        description="fixed identification of corresponding eigenstates",
    )
    movements = []
    notes = {}
    for k, (measured, colour) in enumerate(panels, start=1):
        influenced = "piano" if measured == "guitar" else "guitar"
        movement_id = f"m{k}"
        movements.append(
            Movement(
                id=movement_id,
                items=(
                    MeasurementEvent(
                        id=f"e{k}",
                        movement_id=movement_id,
                        measured=measured,
                        colour=colour,
                        influenced=influenced,
                        entanglement_id="pair",
                        cue=1,
                    ),
                ),
            )
        )
        notes[movement_id] = f"{measured} measured on the {colour.value} axis"
    glossary = MetaGlossary(
        decision_policy=DecisionPolicy.AUDIENCE,
        movement_notes=notes,
    )
    return Score(
        title="Bell",
        glossary=glossary,
        qubits=(guitar, piano),
        entanglements=(pair,),
        movements=tuple(movements),
    )
