"""Live performance sessions: the measurement protocol over a score.

A session walks a validated score movement by movement. For each scored
measurement the observer chooses a basis colour, triggers the collapse, and
the engine appends a Collapse event followed by one Instruction per qubit of
the entangled pair. The event log is append-only with monotone sequence
numbers; replaying the recorded actions against (score, seed) reproduces the
log exactly (timestamps excluded).

A session has one logical owner and applies actions strictly serially.
Independent sessions use independent rng streams.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

from . import sim
from .model import (
    BasisColour,
    DecisionPolicy,
    InvalidScore,
    MeasurementEvent,
    Movement,
    MusicalQubit,
    Score,
    check_score,
)
from .sim import SplitMix64, StateVector

LOG_SCHEMA_VERSION = 1

#: Marker inside a movement's glossary note that leaves the colour choice open.
OPEN_COLOUR_MARK = "colour: open"

Role = DecisionPolicy


class IllegalInState(Exception):
    pass


class UnauthorizedActor(Exception):
    pass


class ReplayDivergence(Exception):
    pass


class SessionStatus(Enum):
    AWAITING_CHOICE = "awaiting-choice"
    AWAITING_TRIGGER = "awaiting-trigger"
    COLLAPSED = "collapsed"
    FINISHED = "finished"


# --- actions -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ChooseBasis:
    qubit_id: str
    colour: BasisColour
    actor: Role


@dataclass(frozen=True, slots=True)
class TriggerMeasurement:
    actor: Role
    forced_outcome: int | None = None  # manual non-determinism injection


@dataclass(frozen=True, slots=True)
class AdvanceMovement:
    actor: Role


ObserverAction = Union[ChooseBasis, TriggerMeasurement, AdvanceMovement]


def action_to_record(action: ObserverAction) -> dict:
    if isinstance(action, ChooseBasis):
        return {
            "type": "choose-basis",
            "qubit": action.qubit_id,
            "colour": action.colour.value,
            "actor": action.actor.value,
        }
    if isinstance(action, TriggerMeasurement):
        rec = {"type": "trigger", "actor": action.actor.value}
        if action.forced_outcome is not None:
            rec["forced-outcome"] = action.forced_outcome
        return rec
    return {"type": "advance", "actor": action.actor.value}


def action_from_record(rec: dict) -> ObserverAction:
    actor = Role(rec["actor"])
    kind = rec["type"]
    if kind == "choose-basis":
        return ChooseBasis(rec["qubit"], BasisColour(rec["colour"]), actor)
    if kind == "trigger":
        return TriggerMeasurement(actor, rec.get("forced-outcome"))
    if kind == "advance":
        return AdvanceMovement(actor)
    raise ValueError(f"unknown action type {kind!r}")


# --- events --------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ActionAccepted:
    action: ObserverAction


@dataclass(frozen=True, slots=True)
class Collapse:
    qubit_id: str
    outcome_label: str
    probability: float


@dataclass(frozen=True, slots=True)
class Instruction:
    qubit_id: str
    instrument: str
    directive: str


@dataclass(frozen=True, slots=True)
class MovementStarted:
    movement_id: str


@dataclass(frozen=True, slots=True)
class SessionFinished:
    pass


EventPayload = Union[ActionAccepted, Collapse, Instruction, MovementStarted, SessionFinished]


@dataclass(frozen=True, slots=True)
class SessionEvent:
    seq: int
    ts: float | None
    payload: EventPayload


def event_to_record(event: SessionEvent, include_timestamp: bool = True) -> dict:
    rec: dict = {"v": LOG_SCHEMA_VERSION, "seq": event.seq}
    if include_timestamp:
        rec["ts"] = event.ts
    p = event.payload
    if isinstance(p, ActionAccepted):
        rec["kind"] = "action-accepted"
        rec["action"] = action_to_record(p.action)
    elif isinstance(p, Collapse):
        rec["kind"] = "collapse"
        rec["qubit"] = p.qubit_id
        rec["outcome"] = p.outcome_label
        rec["probability"] = p.probability
    elif isinstance(p, Instruction):
        rec["kind"] = "instruction"
        rec["qubit"] = p.qubit_id
        rec["instrument"] = p.instrument
        rec["directive"] = p.directive
    elif isinstance(p, MovementStarted):
        rec["kind"] = "movement-started"
        rec["movement"] = p.movement_id
    else:
        rec["kind"] = "session-finished"
    return rec


def events_to_jsonl(events, include_timestamps: bool = True) -> str:
    """Newline-delimited log export (schema v1, documented in docs/protocol.md)."""
    lines = [
        json.dumps(
            event_to_record(e, include_timestamp=include_timestamps),
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        for e in events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


# --- instruction map -----------------------------------------------------------


def _is_ket(label: str) -> bool:
    return label.startswith("|") and label.endswith("⟩")


def default_directive(qubit: MusicalQubit, label: str) -> str:
    """Ket-shaped labels are physical positions, everything else is played."""
    if _is_ket(label):
        return f"move {qubit.instrument.split()[0]} to the {label} position"
    return f"play {label}"


@dataclass(frozen=True)
class InstructionMap:
    """Total map (qubit-id, colour, outcome index) -> directive text."""

    entries: dict[tuple[str, BasisColour, int], str]

    @classmethod
    def from_score(cls, score: Score) -> "InstructionMap":
        entries = {}
        for q in score.qubits:
            for colour in BasisColour:
                for idx, label in enumerate(q.labels(colour)):
                    entries[(q.id, colour, idx)] = default_directive(q, label)
        return cls(entries)

    def directive(self, qubit_id: str, colour: BasisColour, index: int) -> str:
        return self.entries[(qubit_id, colour, index)]

    def outcome_index(self, qubit_id: str, directive: str) -> tuple[BasisColour, int]:
        for (q, colour, idx), text in self.entries.items():
            if q == qubit_id and text == directive:
                return colour, idx
        raise KeyError(f"no entry maps {directive!r} for {qubit_id!r}")

    def validate_total(self, score: Score):
        missing = [
            (q.id, colour.value, idx)
            for q in score.qubits
            for colour in BasisColour
            for idx in (0, 1)
            if (q.id, colour, idx) not in self.entries
        ]
        if missing:
            raise ValueError(f"instruction map is not total; missing {missing}")


# --- session -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SessionOptions:
    reprepare_each_movement: bool = True


class Session:
    """Mutable session state; one logical owner, actions applied serially."""

    def __init__(
        self,
        score: Score,
        seed: int,
        options: SessionOptions,
        instruction_map: InstructionMap,
        clock: Callable[[], float],
    ):
        self.score = score
        self.seed = seed
        self.options = options
        self.instruction_map = instruction_map
        self.clock = clock
        self.rng = SplitMix64(seed)
        self.event_log: list[SessionEvent] = []
        self.status = SessionStatus.AWAITING_CHOICE
        self.movement_idx = 0
        self.event_idx = 0
        self.chosen_colour: BasisColour | None = None
        self.state: StateVector | None = None
        self.state_pair: tuple[str, str] | None = None

    # -- derived views

    @property
    def current_movement(self) -> Movement | None:
        if self.movement_idx < len(self.score.movements):
            return self.score.movements[self.movement_idx]
        return None

    @property
    def current_event(self) -> MeasurementEvent | None:
        movement = self.current_movement
        if movement is None:
            return None
        events = movement.events
        if self.event_idx < len(events):
            return events[self.event_idx]
        return None

    @property
    def seq(self) -> int:
        return len(self.event_log)

    def colour_open(self, movement: Movement) -> bool:
        note = self.score.glossary.movement_notes.get(movement.id, "")
        return OPEN_COLOUR_MARK in note

    def allowed_colours(self, event: MeasurementEvent) -> tuple[BasisColour, ...]:
        movement = self.current_movement
        if movement is not None and self.colour_open(movement):
            return tuple(BasisColour)
        return (event.colour,)

    # -- internals

    def _append(self, payload: EventPayload) -> SessionEvent:
        event = SessionEvent(len(self.event_log) + 1, self.clock(), payload)
        self.event_log.append(event)
        return event

    def _prepare_state(self, event: MeasurementEvent, force: bool):
        spec = self.score.entanglement(event.entanglement_id)
        if not force and self.state is not None and self.state_pair == spec.pair:
            return
        u = spec.identification.resolve(self.score.glossary)
        self.state = sim.bell_pair_through(tuple(tuple(row) for row in u))
        self.state_pair = spec.pair

    def _enter_movement(self, started: list[SessionEvent]):
        movement = self.current_movement
        assert movement is not None
        started.append(self._append(MovementStarted(movement.id)))
        self.event_idx = 0
        self.chosen_colour = None
        self.status = SessionStatus.AWAITING_CHOICE
        event = self.current_event
        if event is not None:
            self._prepare_state(event, force=self.options.reprepare_each_movement)


def create_session(
    score: Score,
    seed: int,
    options: SessionOptions | None = None,
    instruction_map: InstructionMap | None = None,
    clock: Callable[[], float] = time.time,
) -> Session:
    """A fresh session in awaiting-choice state with the first movement open."""
    diagnostics = check_score(score)
    if diagnostics:
        raise InvalidScore(diagnostics)
    imap = instruction_map or InstructionMap.from_score(score)
    imap.validate_total(score)
    session = Session(score, seed, options or SessionOptions(), imap, clock)
    session._enter_movement([])
    return session


def legal_actions(session: Session) -> list[ObserverAction]:
    """Exactly the actions apply_action would accept, as templates."""
    actor = session.score.glossary.decision_policy
    if session.status is SessionStatus.FINISHED:
        return []
    if session.status is SessionStatus.AWAITING_TRIGGER:
        return [TriggerMeasurement(actor)]
    if session.status is SessionStatus.COLLAPSED:
        return [AdvanceMovement(actor)]
    event = session.current_event
    if event is None:  # movement with nothing to measure
        return [AdvanceMovement(actor)]
    return [
        ChooseBasis(event.measured, colour, actor)
        for colour in session.allowed_colours(event)
    ]


def apply_action(session: Session, action: ObserverAction) -> list[SessionEvent]:
    """Apply one observer action; returns the newly appended events.

    Raises UnauthorizedActor or IllegalInState without touching the log.
    """
    policy = session.score.glossary.decision_policy
    if action.actor is not policy:
        raise UnauthorizedActor(
            f"decision policy is {policy.value}; {action.actor.value} may not act"
        )
    if session.status is SessionStatus.FINISHED:
        raise IllegalInState("session is finished")

    if isinstance(action, ChooseBasis):
        return _apply_choose(session, action)
    if isinstance(action, TriggerMeasurement):
        return _apply_trigger(session, action)
    if isinstance(action, AdvanceMovement):
        return _apply_advance(session, action)
    raise IllegalInState(f"unknown action {action!r}")


def _apply_choose(session: Session, action: ChooseBasis) -> list[SessionEvent]:
    if session.status is not SessionStatus.AWAITING_CHOICE:
        raise IllegalInState(f"cannot choose a basis while {session.status.value}")
    event = session.current_event
    if event is None:
        raise IllegalInState("this movement has no measurement to configure")
    if action.qubit_id != event.measured:
        raise IllegalInState(
            f"movement {event.movement_id} measures {event.measured!r}"
        )
    if action.colour not in session.allowed_colours(event):
        raise IllegalInState(
            f"the score fixes this measurement to {event.colour.value}"
        )
    out = [session._append(ActionAccepted(action))]
    session.chosen_colour = action.colour
    session.status = SessionStatus.AWAITING_TRIGGER
    return out


def _colour_basis(qubit: MusicalQubit, colour: BasisColour) -> sim.MeasurementBasis:
    base = sim.z_basis() if colour is BasisColour.GREEN else sim.x_basis()
    return base.relabel(qubit.labels(colour))


def _partner_index(state: StateVector, partner_pos: int, basis: sim.MeasurementBasis) -> int:
    """The partner eigenstate of maximal overlap with its post-collapse state.

    The post-measurement joint state is a product, so the partner's Born
    probabilities read its pure state directly; exact for identifications
    mapping eigenstates to eigenstates, maximum-likelihood otherwise.
    """
    p0, p1 = sim.born_probabilities(state, partner_pos, basis)
    return 0 if p0 >= p1 else 1


def _apply_trigger(session: Session, action: TriggerMeasurement) -> list[SessionEvent]:
    if session.status is not SessionStatus.AWAITING_TRIGGER:
        raise IllegalInState(f"cannot trigger while {session.status.value}")
    event = session.current_event
    assert event is not None and session.chosen_colour is not None
    assert session.state is not None and session.state_pair is not None
    colour = session.chosen_colour
    measured_q = session.score.qubit(event.measured)
    basis = _colour_basis(measured_q, colour)
    measured_pos = session.state_pair.index(event.measured)

    if action.forced_outcome is None:
        outcome, post = sim.measure(session.state, measured_pos, basis, session.rng)
    else:
        if action.forced_outcome not in (0, 1):
            raise IllegalInState("forced outcome must be 0 or 1")
        outcome, post = sim.project_outcome(
            session.state, measured_pos, basis, action.forced_outcome
        )

    out = [session._append(ActionAccepted(action))]
    session.state = post
    out.append(
        session._append(Collapse(event.measured, outcome.label, outcome.probability))
    )
    for pos, qubit_id in enumerate(session.state_pair):
        qubit = session.score.qubit(qubit_id)
        if qubit_id == event.measured:
            idx = outcome.index
        else:
            idx = _partner_index(post, pos, _colour_basis(qubit, colour))
        directive = session.instruction_map.directive(qubit_id, colour, idx)
        out.append(session._append(Instruction(qubit_id, qubit.instrument, directive)))
    session.status = SessionStatus.COLLAPSED
    return out


def _apply_advance(session: Session, action: AdvanceMovement) -> list[SessionEvent]:
    movement = session.current_movement
    assert movement is not None
    if session.status is SessionStatus.AWAITING_CHOICE and session.current_event is not None:
        raise IllegalInState("a measurement is still pending in this movement")
    if session.status is SessionStatus.AWAITING_TRIGGER:
        raise IllegalInState("a triggered measurement is pending")

    out = [session._append(ActionAccepted(action))]
    if session.event_idx + 1 < len(movement.events):
        session.event_idx += 1
        session.chosen_colour = None
        session.status = SessionStatus.AWAITING_CHOICE
        event = session.current_event
        assert event is not None
        session._prepare_state(event, force=False)
        return out
    if session.movement_idx + 1 < len(session.score.movements):
        session.movement_idx += 1
        session._enter_movement(out)
        return out
    session.status = SessionStatus.FINISHED
    out.append(session._append(SessionFinished()))
    return out


# --- replay ---------------------------------------------------------------------


def replay(
    score: Score,
    seed: int,
    actions: list[ObserverAction],
    options: SessionOptions | None = None,
    instruction_map: InstructionMap | None = None,
    expected_log: list[SessionEvent] | None = None,
) -> Session:
    """Re-run recorded actions; with expected_log, verify byte-identical
    export (timestamps excluded) and raise ReplayDivergence otherwise."""
    session = create_session(score, seed, options, instruction_map)
    for action in actions:
        apply_action(session, action)
    if expected_log is not None:
        got = events_to_jsonl(session.event_log, include_timestamps=False)
        want = events_to_jsonl(expected_log, include_timestamps=False)
        if got != want:
            raise ReplayDivergence("replayed log differs from the recorded log")
    return session


# --- state snapshot (consumed by the service and UI) ------------------------------


def snapshot(session: Session) -> dict:
    """A JSON-ready view of the session: everything a console needs to render."""
    score = session.score
    event = session.current_event
    movement = session.current_movement
    return {
        "v": LOG_SCHEMA_VERSION,
        "status": session.status.value,
        "seed": session.seed,
        "seq": session.seq,
        "policy": score.glossary.decision_policy.value,
        "title": score.title,
        "movement": movement.id if movement else None,
        "movement-ordinal": session.movement_idx + 1,
        "movement-count": len(score.movements),
        "movement-note": score.glossary.movement_notes.get(movement.id) if movement else None,
        "current-event": (
            {
                "id": event.id,
                "measured": event.measured,
                "influenced": event.influenced,
                "colour": event.colour.value,
                "open-colour": session.colour_open(movement) if movement else False,
            }
            if event
            else None
        ),
        "chosen-colour": session.chosen_colour.value if session.chosen_colour else None,
        "qubits": [
            {
                "id": q.id,
                "instrument": q.instrument,
                "z-axis": list(q.axis_z),
                "x-axis": list(q.axis_x),
                "phase-range": list(q.phase_range),
            }
            for q in score.qubits
        ],
        "legal-actions": [action_to_record(a) for a in legal_actions(session)],
    }
