"""The .qcm textual score format: parser and canonical serializer.

The grammar is line-oriented with nested braces (normative reference:
docs/score-format.md). The parser never raises on malformed input; it
reports diagnostics with source spans and produces a Score only when there
are no errors. ``parse(serialize(score)) == score`` for every valid score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .model import (
    AbstractContent,
    BasisColour,
    Blob,
    BlobContent,
    CustomGate,
    DecisionPolicy,
    EntanglementSpec,
    Fragment,
    Gate,
    GateOp,
    HadamardGate,
    Identification,
    IdentityGate,
    KindDef,
    MeasurementEvent,
    MetaGlossary,
    Movement,
    MovementItem,
    MusicalQubit,
    Note,
    RelationDef,
    SamenessKind,
    SamenessLink,
    SamenessScope,
    Score,
    SharpGate,
    VariableContent,
    VariableGate,
    _is_unitary,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class SourceSpan:
    line: int  # 1-based
    column: int  # 1-based
    offset: int
    length: int


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, slots=True)
class ParseDiagnostic:
    severity: Severity
    message: str
    span: SourceSpan
    code: str

    def __str__(self) -> str:
        return (
            f"{self.span.line}:{self.span.column}: {self.severity.value}:"
            f" {self.message} [{self.code}]"
        )


@dataclass
class ParseResult:
    score: Score | None
    diagnostics: list[ParseDiagnostic]

    @property
    def ok(self) -> bool:
        return self.score is not None


# ---------------------------------------------------------------------------
# Lexer


class TokKind(Enum):
    STRING = "string"
    NUMBER = "number"
    IDENT = "ident"
    PUNCT = "punct"
    EOF = "eof"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokKind
    text: str
    value: object
    line: int
    column: int
    offset: int


_PUNCTS = ("->", "{", "}", "(", ")", "[", "]", ";", ":", ",", "/", "+", "-")
_DIGITS = "0123456789"


def _lex(text: str) -> tuple[list[Token], list[ParseDiagnostic]]:
    tokens: list[Token] = []
    diagnostics: list[ParseDiagnostic] = []
    i = 0
    line = 1
    line_start = 0
    n = len(text)

    def span_at(start: int, length: int) -> SourceSpan:
        return SourceSpan(line, start - line_start + 1, start, max(1, length))

    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = i
        if c == '"':
            i += 1
            out = []
            closed = False
            while i < n:
                ch = text[i]
                if ch == '"':
                    closed = True
                    i += 1
                    break
                if ch == "\n":
                    break
                if ch == "\\" and i + 1 < n:
                    esc = text[i + 1]
                    out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    i += 2
                else:
                    out.append(ch)
                    i += 1
            if not closed:
                diagnostics.append(
                    ParseDiagnostic(
                        Severity.ERROR,
                        "unterminated string",
                        span_at(start, i - start),
                        "UnterminatedString",
                    )
                )
            tokens.append(Token(TokKind.STRING, text[start:i], "".join(out), line, start - line_start + 1, start))
            continue
        if c in _DIGITS or (c in "+-" and i + 1 < n and text[i + 1] in _DIGITS):
            j = i + 1
            seen_dot = False
            while j < n and (text[j] in _DIGITS or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and text[j] in "eE" and j + 1 < n and (
                text[j + 1] in _DIGITS
                or (text[j + 1] in "+-" and j + 2 < n and text[j + 2] in _DIGITS)
            ):
                j += 2
                while j < n and text[j] in _DIGITS:
                    j += 1
                seen_dot = True
            raw = text[i:j]
            value: object = float(raw) if seen_dot else int(raw)
            tokens.append(Token(TokKind.NUMBER, raw, value, line, i - line_start + 1, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalpha() or text[j] in _DIGITS or text[j] in "_-."):
                j += 1
            raw = text[i:j]
            tokens.append(Token(TokKind.IDENT, raw, raw, line, i - line_start + 1, i))
            i = j
            continue
        matched = None
        for p in _PUNCTS:
            if text.startswith(p, i):
                matched = p
                break
        if matched:
            tokens.append(Token(TokKind.PUNCT, matched, matched, line, i - line_start + 1, i))
            i += len(matched)
            continue
        diagnostics.append(
            ParseDiagnostic(
                Severity.ERROR,
                f"unexpected character {c!r}",
                span_at(i, 1),
                "UnexpectedCharacter",
            )
        )
        i += 1

    tokens.append(Token(TokKind.EOF, "", None, line, max(1, n - line_start + 1), n))
    return tokens, diagnostics


# ---------------------------------------------------------------------------
# Parser


class _ParseError(Exception):
    def __init__(self, message: str, token: Token, code: str = "UnexpectedToken"):
        self.message = message
        self.token = token
        self.code = code
        super().__init__(message)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens, lex_diags = _lex(text)
        self.diagnostics: list[ParseDiagnostic] = list(lex_diags)
        self.pos = 0

    # -- token plumbing

    def cur(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.cur()
        if tok.kind is not TokKind.EOF:
            self.pos += 1
        return tok

    def at_punct(self, p: str) -> bool:
        t = self.cur()
        return t.kind is TokKind.PUNCT and t.text == p

    def at_ident(self, *names: str) -> bool:
        t = self.cur()
        return t.kind is TokKind.IDENT and (not names or t.text in names)

    def expect_punct(self, p: str) -> Token:
        if not self.at_punct(p):
            raise _ParseError(f"expected {p!r}", self.cur())
        return self.advance()

    def expect_ident(self, *names: str) -> Token:
        t = self.cur()
        if t.kind is not TokKind.IDENT or (names and t.text not in names):
            what = " or ".join(repr(n) for n in names) if names else "a name"
            raise _ParseError(f"expected {what}", t)
        return self.advance()

    def expect_string(self) -> str:
        t = self.cur()
        if t.kind is not TokKind.STRING:
            raise _ParseError("expected a quoted string", t)
        self.advance()
        return t.value

    def expect_number(self) -> float:
        t = self.cur()
        if t.kind is not TokKind.NUMBER:
            raise _ParseError("expected a number", t)
        self.advance()
        return float(t.value)

    def expect_int(self) -> int:
        t = self.cur()
        if t.kind is not TokKind.NUMBER or not isinstance(t.value, int):
            raise _ParseError("expected an integer", t)
        self.advance()
        return t.value

    # -- diagnostics

    def _span(self, tok: Token) -> SourceSpan:
        offset = min(tok.offset, len(self.text))
        return SourceSpan(tok.line, tok.column, offset, max(1, len(tok.text)))

    def error(self, message: str, tok: Token, code: str):
        self.diagnostics.append(
            ParseDiagnostic(Severity.ERROR, message, self._span(tok), code)
        )

    def warn(self, message: str, tok: Token, code: str):
        self.diagnostics.append(
            ParseDiagnostic(Severity.WARNING, message, self._span(tok), code)
        )

    def _recover(self, err: _ParseError):
        self.error(err.message, err.token, err.code)
        bad_line = err.token.line
        while True:
            t = self.cur()
            if t.kind is TokKind.EOF or t.line > bad_line:
                return
            if t.kind is TokKind.PUNCT and t.text == "}":
                return
            self.advance()

    # -- grammar

    def parse_score(self) -> Score | None:
        if self.cur().kind is TokKind.EOF:
            self.error("expected score header", self.cur(), "ExpectedScoreHeader")
            return None
        try:
            self.expect_ident("score")
            title = self.expect_string()
            self.expect_punct("{")
        except _ParseError as err:
            self.error("expected score header", err.token, "ExpectedScoreHeader")
            return None

        glossary: MetaGlossary | None = None
        qubits: list[MusicalQubit] = []
        entanglements: list[EntanglementSpec] = []
        movements: list[Movement] = []
        pending_events: list[dict] = []

        while not self.at_punct("}") and self.cur().kind is not TokKind.EOF:
            try:
                if self.at_ident("glossary"):
                    g = self.parse_glossary()
                    if glossary is not None:
                        self.error("glossary given twice", self.cur(), "DuplicateSection")
                    glossary = g
                elif self.at_ident("qubit"):
                    q = self.parse_qubit()
                    if q is not None:
                        qubits.append(q)
                elif self.at_ident("entangle"):
                    e = self.parse_entangle()
                    if e is not None:
                        entanglements.append(e)
                elif self.at_ident("movement"):
                    movements.append(self.parse_movement(pending_events))
                else:
                    raise _ParseError(
                        "expected glossary, qubit, entangle or movement", self.cur()
                    )
            except _ParseError as err:
                self._recover(err)
        if self.cur().kind is TokKind.EOF:
            self.error("missing closing '}'", self.cur(), "UnexpectedEnd")
        else:
            self.advance()
            trailing = self.cur()
            if trailing.kind is not TokKind.EOF:
                self.error("trailing input after score", trailing, "TrailingInput")

        if glossary is None:
            self.error("score needs a glossary with a policy", self.cur(), "MissingGlossary")

        for raw in pending_events:
            if raw["entanglement_id"] is None:
                if len(entanglements) == 1:
                    raw["entanglement_id"] = entanglements[0].id
                else:
                    self.error(
                        "event needs 'via <entanglement>' when the score has"
                        " more than one",
                        raw["token"],
                        "AmbiguousEntanglement",
                    )

        if any(d.severity is Severity.ERROR for d in self.diagnostics):
            return None

        resolved_movements = []
        for movement in movements:
            items = []
            for item in movement.items:
                if isinstance(item, dict):
                    items.append(
                        MeasurementEvent(
                            id=item["id"],
                            movement_id=movement.id,
                            measured=item["measured"],
                            colour=item["colour"],
                            influenced=item["influenced"],
                            entanglement_id=item["entanglement_id"],
                            cue=item["cue"],
                        )
                    )
                else:
                    items.append(item)
            resolved_movements.append(Movement(movement.id, tuple(items)))

        return Score(
            title=title,
            glossary=glossary,
            qubits=tuple(qubits),
            entanglements=tuple(entanglements),
            movements=tuple(resolved_movements),
        )

    def parse_glossary(self) -> MetaGlossary:
        self.expect_ident("glossary")
        self.expect_punct("{")
        policy: DecisionPolicy | None = None
        kinds: dict[str, KindDef] = {}
        relations: dict[str, RelationDef] = {}
        notes: dict[str, str] = {}
        while not self.at_punct("}") and self.cur().kind is not TokKind.EOF:
            try:
                if self.at_ident("policy"):
                    self.advance()
                    tok = self.expect_ident()
                    try:
                        policy = DecisionPolicy(tok.text)
                    except ValueError:
                        raise _ParseError(
                            "policy is performer, third-party or audience",
                            tok,
                            "BadPolicy",
                        ) from None
                elif self.at_ident("sameness"):
                    self.advance()
                    name = self.expect_ident().text
                    scope = SamenessScope.FULL
                    if self.at_ident("scope"):
                        self.advance()
                        scope = self._parse_scope()
                    kinds[name] = KindDef(self.expect_string(), scope)
                elif self.at_ident("relation"):
                    self.advance()
                    name = self.expect_ident().text
                    desc = self.expect_string()
                    matrix = self.parse_matrix() if self.at_punct("[") else None
                    relations[name] = RelationDef(desc, matrix)
                elif self.at_ident("note"):
                    self.advance()
                    key = self.expect_ident().text
                    notes[key] = self.expect_string()
                else:
                    raise _ParseError(
                        "expected policy, sameness, relation or note", self.cur()
                    )
            except _ParseError as err:
                self._recover(err)
        self.expect_punct("}")
        if policy is None:
            self.error("glossary must state a decision policy", self.cur(), "MissingPolicy")
            policy = DecisionPolicy.PERFORMER
        return MetaGlossary(
            decision_policy=policy,
            sameness_kinds=kinds,
            relations=relations,
            movement_notes=notes,
        )

    def _parse_scope(self) -> SamenessScope:
        tok = self.expect_ident()
        try:
            return SamenessScope(tok.text)
        except ValueError:
            raise _ParseError(
                "scope is full, notes, rhythm or sound", tok, "BadScope"
            ) from None

    def parse_qubit(self) -> MusicalQubit | None:
        self.expect_ident("qubit")
        id_tok = self.expect_ident()
        instrument = self.expect_string()
        self.expect_punct("{")
        axis_z = axis_x = None
        phase_range = (0.0, TWO_PI)
        phase_tok = None
        while not self.at_punct("}") and self.cur().kind is not TokKind.EOF:
            try:
                if self.at_ident("z-axis"):
                    self.advance()
                    axis_z = (self.expect_string(), self.expect_string())
                elif self.at_ident("x-axis"):
                    self.advance()
                    axis_x = (self.expect_string(), self.expect_string())
                elif self.at_ident("phase-range"):
                    phase_tok = self.advance()
                    phase_range = (self.expect_number(), self.expect_number())
                else:
                    raise _ParseError("expected z-axis, x-axis or phase-range", self.cur())
            except _ParseError as err:
                self._recover(err)
        self.expect_punct("}")
        if axis_z is None or axis_x is None:
            self.error("qubit needs z-axis and x-axis labels", id_tok, "MissingAxis")
            return None
        labels = (*axis_z, *axis_x)
        if len(set(labels)) != 4:
            self.error("the four eigenstate labels must differ", id_tok, "LabelClash")
            return None
        lo, hi = phase_range
        if not (0.0 <= lo <= hi <= TWO_PI):
            self.error(
                "phase range must be a nonempty interval within [0, 2*pi]",
                phase_tok or id_tok,
                "BadPhaseRange",
            )
            return None
        return MusicalQubit(id_tok.text, instrument, axis_z, axis_x, phase_range)

    def parse_matrix(self) -> tuple:
        self.expect_punct("[")
        row1 = (self.parse_complex(), self.parse_complex())
        self.expect_punct(";")
        row2 = (self.parse_complex(), self.parse_complex())
        self.expect_punct("]")
        return (row1, row2)

    def parse_complex(self) -> complex:
        re_tok = self.cur()
        re = self.expect_number()
        if self.at_ident("i"):
            self.advance()
            return complex(0.0, re)
        if self.at_punct("+") or self.at_punct("-"):
            sign = -1.0 if self.advance().text == "-" else 1.0
            im = self.expect_number()
            self.expect_ident("i")
            return complex(re, sign * im)
        # compact a+bi form: the signed imaginary lexes as one number glued
        # directly to the real part ("1.0+0.5i"); adjacency disambiguates it
        # from two separate matrix entries ("0.0 1.0i")
        nxt = self.cur()
        if (
            nxt.kind is TokKind.NUMBER
            and nxt.text[0] in "+-"
            and nxt.offset == re_tok.offset + len(re_tok.text)
            and self.peek().kind is TokKind.IDENT
            and self.peek().text == "i"
        ):
            im = self.expect_number()
            self.advance()
            return complex(re, im)
        return complex(re, 0.0)

    def parse_entangle(self) -> EntanglementSpec | None:
        self.expect_ident("entangle")
        id_tok = self.expect_ident()
        qa = self.expect_ident().text
        qb_tok = self.expect_ident()
        identification = Identification(preset="identity")
        if self.at_ident("gate"):
            gate_tok = self.advance()
            if self.at_punct("["):
                matrix = self.parse_matrix()
                if not _is_unitary(matrix):
                    self.error(
                        "identification matrix is not unitary within 1e-9",
                        gate_tok,
                        "NonUnitaryMatrix",
                    )
                    return None
                identification = Identification(matrix=matrix)
            else:
                identification = Identification(preset=self.expect_ident().text)
        description = self.expect_string() if self.cur().kind is TokKind.STRING else ""
        if qa == qb_tok.text:
            self.error("entangled pair must be two distinct qubits", qb_tok, "BadEntangledPair")
            return None
        return EntanglementSpec(id_tok.text, (qa, qb_tok.text), identification, description)

    def parse_movement(self, pending_events: list[dict]) -> Movement:
        self.expect_ident("movement")
        movement_id = self.expect_ident().text
        self.expect_punct("{")
        items: list = []
        auto_event = 0
        auto_cue = 0
        while not self.at_punct("}") and self.cur().kind is not TokKind.EOF:
            try:
                if self.at_ident("measure"):
                    auto_event += 1
                    auto_cue += 1
                    raw = self.parse_measure(movement_id, auto_event, auto_cue)
                    if raw is not None:
                        items.append(raw)
                        pending_events.append(raw)
                elif self.at_ident("link"):
                    link = self.parse_link()
                    if link is not None:
                        items.append(link)
                elif self.at_ident("blob"):
                    blob = self.parse_blob()
                    if blob is not None:
                        items.append(blob)
                else:
                    raise _ParseError("expected measure, link or blob", self.cur())
            except _ParseError as err:
                self._recover(err)
        self.expect_punct("}")
        return Movement(movement_id, tuple(items))

    def parse_measure(self, movement_id: str, auto_event: int, auto_cue: int) -> dict | None:
        head = self.expect_ident("measure")
        first = self.expect_ident()
        if self.at_ident() and self.cur().text != "basis":
            event_id = first.text
            measured = self.expect_ident().text
        else:
            event_id = f"{movement_id}.e{auto_event}"
            measured = first.text
        self.expect_ident("basis")
        colour_tok = self.expect_ident()
        try:
            colour = BasisColour(colour_tok.text)
        except ValueError:
            raise _ParseError("basis colour is green or red", colour_tok, "BadColour") from None
        self.expect_punct("->")
        influenced_tok = self.expect_ident()
        entanglement_id = None
        cue = auto_cue
        while self.at_ident("via", "cue"):
            if self.cur().text == "via":
                self.advance()
                entanglement_id = self.expect_ident().text
            else:
                cue_tok = self.advance()
                cue = self.expect_int()
                if cue < 1:
                    self.error("cue is a 1-based ordinal", cue_tok, "BadCue")
                    return None
        if measured == influenced_tok.text:
            self.error(
                "measured and influenced qubit must differ",
                influenced_tok,
                "MeasuredEqualsInfluenced",
            )
            return None
        return {
            "id": event_id,
            "measured": measured,
            "colour": colour,
            "influenced": influenced_tok.text,
            "entanglement_id": entanglement_id,
            "cue": cue,
            "token": head,
        }

    def parse_link(self) -> SamenessLink | None:
        self.expect_ident("link")
        id_tok = self.expect_ident()
        ep1 = self.parse_endpoint()
        ep2 = self.parse_endpoint()
        self.expect_ident("kind")
        kind_name = self.expect_ident().text
        scope = SamenessScope.FULL
        if self.at_ident("scope"):
            self.advance()
            scope = self._parse_scope()
        op: GateOp = IdentityGate()
        if self.at_ident("gate"):
            self.advance()
            op_or_none = self.parse_link_gate()
            if op_or_none is None:
                return None
            op = op_or_none
        lead = None
        if self.at_ident("lead"):
            self.advance()
            lead_tok = self.expect_ident()
            lead = lead_tok.text
            if lead not in (ep1[0], ep2[0]):
                self.error(
                    "lead must name one of the endpoint qubits", lead_tok, "BadLead"
                )
                return None
        if ep1 == ep2:
            self.error("link endpoints must differ", id_tok, "BadLinkEndpoints")
            return None
        return SamenessLink(id_tok.text, (ep1, ep2), SamenessKind(kind_name, scope), Gate(op, lead))

    def parse_endpoint(self) -> tuple[str, str]:
        qubit = self.expect_ident().text
        self.expect_punct(":")
        blob = self.expect_ident().text
        return (qubit, blob)

    def parse_link_gate(self) -> GateOp | None:
        tok = self.expect_ident()
        if tok.text == "identity":
            return IdentityGate()
        if tok.text == "H":
            return HadamardGate()
        if tok.text == "var":
            return VariableGate(self.expect_ident().text)
        if tok.text == "sharp":
            self.expect_punct("(")
            n = self.expect_int()
            self.expect_punct(")")
            if n == 0:
                self.error("sharp(0) is the identity gate; write identity", tok, "SharpZero")
                return None
            return SharpGate(n)
        return CustomGate(tok.text)

    def parse_blob(self) -> Blob | None:
        self.expect_ident("blob")
        blob_id = self.expect_ident().text
        qubit_id = self.expect_ident().text
        content = self.parse_blob_content()
        if content is None:
            return None
        phase = None
        if self.at_ident("phase"):
            self.advance()
            phase = self.expect_number()
        return Blob(blob_id, qubit_id, content, phase)

    def parse_blob_content(self) -> BlobContent | None:
        tok = self.expect_ident("notes", "var", "abstract")
        if tok.text == "var":
            return VariableContent(self.expect_ident().text)
        if tok.text == "abstract":
            return AbstractContent(self.expect_string())
        self.expect_punct("{")
        notes = []
        while True:
            note = self.parse_note()
            if note is None:
                return None
            notes.append(note)
            if self.at_punct(","):
                self.advance()
                continue
            break
        self.expect_punct("}")
        return Fragment(tuple(notes))

    def parse_note(self) -> Note | None:
        pitch = self.expect_int()
        self.expect_punct(":")
        num_tok = self.cur()
        num = self.expect_int()
        if self.at_punct("/"):
            self.advance()
            den = self.expect_int()
        else:
            den = 1
        if num <= 0 or den <= 0:
            self.error("note duration must be positive", num_tok, "BadDuration")
            return None
        return Note(pitch, Fraction(num, den))


def parse(text: str) -> ParseResult:
    """Parse a .qcm score. Never raises; errors imply score is None."""
    parser = _Parser(text)
    try:
        score = parser.parse_score()
    except _ParseError as err:  # defensive: grammar errors are caught earlier
        parser.error(err.message, err.token, err.code)
        score = None
    if any(d.severity is Severity.ERROR for d in parser.diagnostics):
        score = None
    return ParseResult(score, parser.diagnostics)


# ---------------------------------------------------------------------------
# Serializer


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _fmt_complex(z: complex) -> str:
    re, im = z.real, z.imag
    if im == 0:
        return _fmt_float(re)
    if re == 0:
        return f"{_fmt_float(im)}i"
    sign = "+" if im >= 0 else "-"
    return f"{_fmt_float(re)}{sign}{_fmt_float(abs(im))}i"


def _fmt_matrix(m) -> str:
    (a, b), (c, d) = m
    return f"[{_fmt_complex(a)} {_fmt_complex(b)}; {_fmt_complex(c)} {_fmt_complex(d)}]"


def _fmt_duration(d: Fraction) -> str:
    return str(d)


def serialize(score: Score) -> str:
    """Canonical text: stable ordering, byte-stable across runs."""
    lines: list[str] = [f"score {_quote(score.title)} {{"]
    g = score.glossary
    lines.append("  glossary {")
    lines.append(f"    policy {g.decision_policy.value}")
    for name in sorted(g.sameness_kinds):
        kd = g.sameness_kinds[name]
        lines.append(
            f"    sameness {name} scope {kd.scope.value} {_quote(kd.description)}"
        )
    for name in sorted(g.relations):
        rel = g.relations[name]
        entry = f"    relation {name} {_quote(rel.description)}"
        if rel.matrix is not None:
            entry += f" {_fmt_matrix(rel.matrix)}"
        lines.append(entry)
    for key in sorted(g.movement_notes):
        lines.append(f"    note {key} {_quote(g.movement_notes[key])}")
    lines.append("  }")

    for q in score.qubits:
        lines.append(f"  qubit {q.id} {_quote(q.instrument)} {{")
        lines.append(f"    z-axis {_quote(q.axis_z[0])} {_quote(q.axis_z[1])}")
        lines.append(f"    x-axis {_quote(q.axis_x[0])} {_quote(q.axis_x[1])}")
        lines.append(
            f"    phase-range {_fmt_float(q.phase_range[0])} {_fmt_float(q.phase_range[1])}"
        )
        lines.append("  }")

    for e in score.entanglements:
        ident = e.identification
        gate = ident.preset if ident.preset is not None else _fmt_matrix(ident.matrix)
        entry = f"  entangle {e.id} {e.pair[0]} {e.pair[1]} gate {gate}"
        if e.description:
            entry += f" {_quote(e.description)}"
        lines.append(entry)

    for m in score.movements:
        lines.append(f"  movement {m.id} {{")
        for item in m.items:
            lines.append("    " + _serialize_item(item))
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _serialize_item(item: MovementItem) -> str:
    if isinstance(item, MeasurementEvent):
        return (
            f"measure {item.id} {item.measured} basis {item.colour.value}"
            f" -> {item.influenced} via {item.entanglement_id} cue {item.cue}"
        )
    if isinstance(item, SamenessLink):
        (q1, b1), (q2, b2) = item.endpoints
        out = f"link {item.id} {q1}:{b1} {q2}:{b2} kind {item.kind.name}"
        if item.kind.scope is not SamenessScope.FULL:
            out += f" scope {item.kind.scope.value}"
        out += _serialize_gate(item.gate)
        return out
    blob = item
    out = f"blob {blob.id} {blob.qubit_id} {_serialize_content(blob.content)}"
    if blob.phase is not None:
        out += f" phase {_fmt_float(blob.phase)}"
    return out


def _serialize_gate(gate: Gate) -> str:
    op = gate.op
    out = ""
    if isinstance(op, SharpGate):
        out += f" gate sharp({op.n})"
    elif isinstance(op, HadamardGate):
        out += " gate H"
    elif isinstance(op, VariableGate):
        out += f" gate var {op.name}"
    elif isinstance(op, CustomGate):
        out += f" gate {op.name}"
    if gate.lead is not None:
        out += f" lead {gate.lead}"
    return out


def _serialize_content(content: BlobContent) -> str:
    if isinstance(content, VariableContent):
        return f"var {content.name}"
    if isinstance(content, AbstractContent):
        return f"abstract {_quote(content.text)}"
    notes = ", ".join(f"{n.pitch}:{_fmt_duration(n.duration)}" for n in content.notes)
    return f"notes {{ {notes} }}"
