/**
 * Console wiring: connect form, event subscription, optimistic-free updates.
 * Actions are confirmed only by server events; after each accepted action or
 * state-changing event the snapshot is refetched (one round trip).
 */

import { ServiceClient, ServiceError } from "./client.js";
import {
  applyEvent,
  fromSnapshot,
  type ActionRecord,
  type Colour,
  type ConsoleView,
  type EventRecord,
  type Role,
} from "./protocol.js";
import { renderActions, renderHeader, renderQubitDisc, renderTimeline } from "./views.js";

const app = document.getElementById("app")!;

interface Connection {
  client: ServiceClient;
  sessionId: string;
  role: Role;
  view: ConsoleView;
  connection: string;
  stop: () => void;
}

let current: Connection | null = null;
let inlineError = "";

function setError(message: string) {
  inlineError = message;
  render();
}

async function resync(conn: Connection) {
  conn.view = fromSnapshot(await conn.client.state(conn.sessionId), conn.view);
  render();
}

function onEvent(conn: Connection, event: EventRecord) {
  conn.view = applyEvent(conn.view, event);
  render();
  if (conn.view.stale) {
    void resync(conn).catch((err) => setError(String(err)));
  }
}

async function submit(action: ActionRecord) {
  if (!current) return;
  inlineError = "";
  try {
    await current.client.submit(current.sessionId, action);
    // resulting events arrive on the stream; the snapshot refresh follows
  } catch (err) {
    if (err instanceof ServiceError) {
      setError(`${err.code}: ${err.message}`);
      await resync(current).catch(() => {});
    } else {
      setError(String(err));
    }
  }
}

async function connect(baseUrl: string, sessionId: string, role: Role) {
  current?.stop();
  const client = new ServiceClient(baseUrl);
  const snapshot = await client.state(sessionId);
  const conn: Connection = {
    client,
    sessionId,
    role,
    view: fromSnapshot(snapshot),
    connection: "connecting",
    stop: () => {},
  };
  // backfill the whole timeline, then stay live
  conn.stop = client.subscribe(
    sessionId,
    0,
    (event) => onEvent(conn, event),
    (status) => {
      conn.connection = status;
      render();
      if (status === "connected") void resync(conn).catch(() => {});
    },
  );
  current = conn;
  inlineError = "";
  render();
}

async function createAndConnect(baseUrl: string, scoreText: string, role: Role) {
  const client = new ServiceClient(baseUrl);
  const created = await client.createSession(scoreText);
  await connect(baseUrl, created.session, role);
}

// --- rendering ---------------------------------------------------------------

function render() {
  app.replaceChildren();
  if (!current) {
    app.append(renderConnectForm());
    return;
  }
  const { view } = current;
  app.append(renderHeader(view, current.connection));
  if (inlineError) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = inlineError;
    app.append(banner);
  }
  const discs = document.createElement("div");
  discs.className = "discs";
  for (const qubit of view.snapshot.qubits) discs.append(renderQubitDisc(qubit, view));
  app.append(discs);
  app.append(
    renderActions(view, {
      choose: (qubit: string, colour: Colour) =>
        void submit({ type: "choose-basis", qubit, colour, actor: current!.role }),
      trigger: () => void submit({ type: "trigger", actor: current!.role }),
      advance: () => void submit({ type: "advance", actor: current!.role }),
    }),
  );
  app.append(renderTimeline(view));

  const leave = document.createElement("button");
  leave.className = "leave";
  leave.textContent = "leave session";
  leave.onclick = () => {
    current?.stop();
    current = null;
    render();
  };
  app.append(leave);
}

function renderConnectForm(): HTMLElement {
  const form = document.createElement("div");
  form.className = "connect-form";
  form.innerHTML = `
    <h1>Observer console</h1>
    <label>service <input id="base-url" value="${location.origin}" /></label>
    <label>role
      <select id="role">
        <option value="audience">audience</option>
        <option value="performer">performer</option>
        <option value="third-party">third-party</option>
      </select>
    </label>
    <div class="row">
      <button id="new-bell">new session from the built-in score</button>
    </div>
    <div class="row">
      <input id="session-id" placeholder="session id" />
      <button id="join">join</button>
    </div>
    <div class="row">
      <textarea id="score-text" rows="6" placeholder="...or paste a .qcm score"></textarea>
      <button id="new-custom">create from pasted score</button>
    </div>
    <div id="session-list" class="session-list"></div>
    <div id="form-error" class="error-banner" hidden></div>
  `;
  const value = (id: string) => (form.querySelector(`#${id}`) as HTMLInputElement).value;
  const role = () => (form.querySelector("#role") as HTMLSelectElement).value as Role;
  const showError = (err: unknown) => {
    const box = form.querySelector("#form-error") as HTMLElement;
    box.hidden = false;
    box.textContent =
      err instanceof ServiceError && err.diagnostics.length
        ? `${err.message}: ${err.diagnostics.join("; ")}`
        : String(err);
  };

  (form.querySelector("#new-bell") as HTMLButtonElement).onclick = async () => {
    try {
      const client = new ServiceClient(value("base-url"));
      const score = await client.fixtureScore();
      await createAndConnect(value("base-url"), score, role());
    } catch (err) {
      showError(err);
    }
  };
  (form.querySelector("#join") as HTMLButtonElement).onclick = () =>
    connect(value("base-url"), value("session-id"), role()).catch(showError);
  (form.querySelector("#new-custom") as HTMLButtonElement).onclick = () =>
    createAndConnect(
      value("base-url"),
      (form.querySelector("#score-text") as HTMLTextAreaElement).value,
      role(),
    ).catch(showError);

  void new ServiceClient(value("base-url"))
    .listSessions()
    .then((sessions) => {
      const list = form.querySelector("#session-list")!;
      for (const s of sessions) {
        const row = document.createElement("button");
        row.className = "session-row";
        row.textContent = `${s.session} — ${s.title} (${s.status}, seq ${s.seq})`;
        row.onclick = () => connect(value("base-url"), s.session, role()).catch(showError);
        list.append(row);
      }
    })
    .catch(() => {});
  return form;
}

render();
