"""Session host: the performance engine behind a documented wire protocol.

Transport is HTTP (stdlib ThreadingHTTPServer). Client-to-server messages
are JSON request/response POSTs; the server-to-client channel is a
persistent SSE stream of newline-delimited UTF-8 records with sequence-number
resume (``Last-Event-ID`` header or ``?after=N``). Message framing is
documented bit-exact in docs/protocol.md.

Per session, actions are applied under one lock in arrival order (first
action wins; losers see IllegalInState). Every accepted action is appended
to the session's journal file before it is broadcast, so restarting the host
on the same journal directory rebuilds identical sessions.
"""

from __future__ import annotations

import json
import queue
import re
import secrets
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import engine, lang, model, sim
from .engine import Session
from .model import Score

PROTOCOL_VERSION = 1


class UnknownSession(KeyError):
    pass


class InvalidScoreText(Exception):
    """The submitted score text failed to parse; carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__("score has errors")


@dataclass
class HostedSession:
    session_id: str
    score_text: str
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list["queue.Queue[dict | None]"] = field(default_factory=list)


class SessionHost:
    """Owns all live sessions, their journals and their subscribers."""

    def __init__(self, journal_dir: str | Path | None = None):
        self.journal_dir = Path(journal_dir) if journal_dir else None
        if self.journal_dir:
            self.journal_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, HostedSession] = {}
        if self.journal_dir:
            self._recover()

    # -- journal

    def _journal_path(self, session_id: str) -> Path | None:
        if self.journal_dir is None:
            return None
        return self.journal_dir / f"{session_id}.jsonl"

    def _journal_append(self, session_id: str, record: dict):
        path = self._journal_path(session_id)
        if path is None:
            return
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")

    def _recover(self):
        for path in sorted(self.journal_dir.glob("*.jsonl")):
            try:
                lines = path.read_text(encoding="utf-8").splitlines()
                head = json.loads(lines[0])
                if head.get("kind") != "create":
                    continue
                score = self._parse_score(head["score"])
                session = engine.create_session(score, head["seed"])
                for line in lines[1:]:
                    rec = json.loads(line)
                    if rec.get("kind") != "action":
                        continue
                    engine.apply_action(session, engine.action_from_record(rec["action"]))
                self._sessions[head["session"]] = HostedSession(
                    head["session"], head["score"], session
                )
            except Exception:
                # a torn or foreign file must not block the host
                continue

    @staticmethod
    def _parse_score(text: str) -> Score:
        result = lang.parse(text)
        if not result.ok:
            raise ValueError(
                "score does not parse: "
                + "; ".join(str(d) for d in result.diagnostics)
            )
        return result.score

    # -- operations

    def create(self, score_text: str, seed: int | None = None) -> tuple[str, int, dict]:
        result = lang.parse(score_text)
        if not result.ok:
            raise InvalidScoreText(result.diagnostics)
        if seed is None:
            seed = secrets.randbits(63)
        session = engine.create_session(result.score, seed)  # raises InvalidScore
        session_id = secrets.token_urlsafe(9)
        hosted = HostedSession(session_id, score_text, session)
        with self._lock:
            self._sessions[session_id] = hosted
        self._journal_append(
            session_id,
            {
                "kind": "create",
                "v": PROTOCOL_VERSION,
                "session": session_id,
                "seed": seed,
                "score": score_text,
            },
        )
        return session_id, seed, engine.snapshot(session)

    def get(self, session_id: str) -> HostedSession:
        with self._lock:
            hosted = self._sessions.get(session_id)
        if hosted is None:
            raise UnknownSession(session_id)
        return hosted

    def session_ids(self) -> list[dict]:
        with self._lock:
            hosted = list(self._sessions.values())
        out = []
        for h in hosted:
            with h.lock:
                out.append(
                    {
                        "session": h.session_id,
                        "title": h.session.score.title,
                        "status": h.session.status.value,
                        "seq": h.session.seq,
                    }
                )
        return out

    def apply(self, session_id: str, action: engine.ObserverAction) -> list[dict]:
        """Apply under the session lock; journal, then broadcast in order."""
        hosted = self.get(session_id)
        with hosted.lock:
            events = engine.apply_action(hosted.session, action)
            self._journal_append(
                session_id,
                {"kind": "action", "v": PROTOCOL_VERSION, "action": engine.action_to_record(action)},
            )
            records = [engine.event_to_record(e) for e in events]
            for sub in list(hosted.subscribers):
                for rec in records:
                    sub.put(rec)
        return records

    def state(self, session_id: str) -> dict:
        hosted = self.get(session_id)
        with hosted.lock:
            return engine.snapshot(hosted.session)

    def subscribe(self, session_id: str, after: int) -> "queue.Queue[dict | None]":
        """Backfill events with seq > after, then live events, gap-free."""
        hosted = self.get(session_id)
        sub: "queue.Queue[dict | None]" = queue.Queue()
        with hosted.lock:
            for event in hosted.session.event_log:
                if event.seq > after:
                    sub.put(engine.event_to_record(event))
            hosted.subscribers.append(sub)
        return sub

    def unsubscribe(self, session_id: str, sub) -> None:
        try:
            hosted = self.get(session_id)
        except UnknownSession:
            return
        with hosted.lock:
            if sub in hosted.subscribers:
                hosted.subscribers.remove(sub)


# ---------------------------------------------------------------------------
# HTTP layer


_ROUTE_ACTIONS = re.compile(r"^/sessions/([A-Za-z0-9_\-]+)/actions$")
_ROUTE_STATE = re.compile(r"^/sessions/([A-Za-z0-9_\-]+)/state$")
_ROUTE_EVENTS = re.compile(r"^/sessions/([A-Za-z0-9_\-]+)/events$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    host: SessionHost
    static_dir: Path | None = None

    # -- plumbing

    def log_message(self, *args):  # keep test output quiet
        pass

    def _send_json(self, status: int, payload: dict):
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error(self, status: int, code: str, message: str, extra: dict | None = None):
        payload = {"kind": "error", "v": PROTOCOL_VERSION, "code": code, "message": message}
        if extra:
            payload.update(extra)
        self._send_json(status, payload)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        return json.loads(raw.decode("utf-8"))

    # -- requests

    def do_POST(self):
        path = urlparse(self.path).path
        try:
            body = self._read_json()
        except (ValueError, UnicodeDecodeError):
            self._send_error(400, "BadRequest", "body is not valid JSON")
            return
        if path == "/sessions":
            self._create(body)
            return
        m = _ROUTE_ACTIONS.match(path)
        if m:
            self._action(m.group(1), body)
            return
        self._send_error(404, "UnknownRoute", f"no POST route {path!r}")

    def do_GET(self):
        url = urlparse(self.path)
        path = url.path
        if path == "/sessions":
            self._send_json(
                200,
                {"kind": "sessions", "v": PROTOCOL_VERSION, "sessions": self.host.session_ids()},
            )
            return
        if path == "/fixture":
            self._send_json(
                200,
                {
                    "kind": "fixture",
                    "v": PROTOCOL_VERSION,
                    "score": lang.serialize(model.bell_score_fixture()),
                },
            )
            return
        m = _ROUTE_STATE.match(path)
        if m:
            try:
                state = self.host.state(m.group(1))
            except UnknownSession:
                self._send_error(404, "UnknownSession", "no such session")
                return
            self._send_json(
                200,
                {"kind": "state", "v": PROTOCOL_VERSION, "session": m.group(1), "state": state},
            )
            return
        m = _ROUTE_EVENTS.match(path)
        if m:
            self._stream(m.group(1), url)
            return
        if self.static_dir is not None and (path == "/" or path.startswith("/ui")):
            self._static(path)
            return
        self._send_error(404, "UnknownRoute", f"no GET route {path!r}")

    # -- handlers

    def _create(self, body: dict):
        score_text = body.get("score")
        if not isinstance(score_text, str):
            self._send_error(400, "BadRequest", "create needs a 'score' text field")
            return
        seed = body.get("seed")
        if seed is not None and not isinstance(seed, int):
            self._send_error(400, "BadRequest", "'seed' must be an integer")
            return
        try:
            session_id, used_seed, state = self.host.create(score_text, seed)
        except InvalidScoreText as err:
            self._send_error(
                400,
                "InvalidScore",
                "score has errors",
                {"diagnostics": [str(d) for d in err.diagnostics]},
            )
            return
        except Exception as err:  # validation diagnostics from the engine
            self._send_error(400, "InvalidScore", str(err))
            return
        self._send_json(
            200,
            {
                "kind": "created",
                "v": PROTOCOL_VERSION,
                "session": session_id,
                "seed": used_seed,
                "state": state,
            },
        )

    def _action(self, session_id: str, body: dict):
        try:
            action = engine.action_from_record(body.get("action", {}))
        except (KeyError, ValueError) as err:
            self._send_error(400, "BadRequest", f"malformed action: {err}")
            return
        try:
            records = self.host.apply(session_id, action)
        except UnknownSession:
            self._send_error(404, "UnknownSession", "no such session")
            return
        except engine.UnauthorizedActor as err:
            self._send_error(403, "UnauthorizedActor", str(err))
            return
        except engine.IllegalInState as err:
            self._send_error(409, "IllegalInState", str(err))
            return
        except sim.ImpossibleOutcome as err:
            self._send_error(409, "ImpossibleOutcome", str(err))
            return
        self._send_json(
            200,
            {"kind": "event", "v": PROTOCOL_VERSION, "session": session_id, "events": records},
        )

    def _stream(self, session_id: str, url):
        query = parse_qs(url.query)
        after = 0
        if "after" in query:
            try:
                after = int(query["after"][0])
            except ValueError:
                self._send_error(400, "BadRequest", "'after' must be an integer")
                return
        last_id = self.headers.get("Last-Event-ID")
        if last_id is not None:
            try:
                after = int(last_id)
            except ValueError:
                pass
        try:
            sub = self.host.subscribe(session_id, after)
        except UnknownSession:
            self._send_error(404, "UnknownSession", "no such session")
            return
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream; charset=utf-8")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Connection", "close")
        self.end_headers()
        try:
            self.wfile.write(b": connected\n\n")
            self.wfile.flush()
            while True:
                try:
                    record = sub.get(timeout=15.0)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                if record is None:
                    break
                data = json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
                frame = f"id: {record['seq']}\ndata: {data}\n\n"
                self.wfile.write(frame.encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            self.host.unsubscribe(session_id, sub)

    def _static(self, path: str):
        rel = path.removeprefix("/ui").lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_error(404, "UnknownRoute", f"no static file {rel!r}")
            return
        ctype = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".map": "application/json",
            ".svg": "image/svg+xml",
        }.get(target.suffix, "application/octet-stream")
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    listen: str = "127.0.0.1:0",
    journal_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """A ready-to-run server; .server_address carries the bound port."""
    host_addr, _, port = listen.rpartition(":")
    handler = type(
        "BoundHandler",
        (_Handler,),
        {
            "host": SessionHost(journal_dir),
            "static_dir": Path(static_dir).resolve() if static_dir else None,
        },
    )
    server = ThreadingHTTPServer((host_addr or "127.0.0.1", int(port)), handler)
    server.daemon_threads = True
    return server
