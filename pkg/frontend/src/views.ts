/**
 * DOM rendering: state discs, instruction cards, timeline, action buttons.
 * Renderers are functions of the pure view model; they own no state.
 */

import {
  allowedColours,
  canAdvance,
  canTrigger,
  compassLabels,
  isHalfDisc,
  type Colour,
  type ConsoleView,
  type QubitInfo,
} from "./protocol.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svg(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** A 2-D disc projection of the qubit: full circle, or the right half when
 * the score restricts phases to half the sphere. */
export function renderQubitDisc(qubit: QubitInfo, view: ConsoleView): HTMLElement {
  const card = el("div", "qubit-card");
  card.append(el("h3", "qubit-title", qubit.instrument));

  const half = isHalfDisc(qubit);
  const size = 240;
  const c = size / 2;
  const r = size / 2 - 40;
  const root = svg("svg", {
    viewBox: `0 0 ${size} ${size}`,
    class: "disc" + (half ? " half" : ""),
    role: "img",
  });
  if (half) {
    root.append(
      svg("path", {
        d: `M ${c} ${c - r} A ${r} ${r} 0 0 1 ${c} ${c + r} Z`,
        class: "disc-face",
      }),
    );
  } else {
    root.append(svg("circle", { cx: `${c}`, cy: `${c}`, r: `${r}`, class: "disc-face" }));
  }
  root.append(
    svg("line", { x1: `${c}`, y1: `${c - r}`, x2: `${c}`, y2: `${c + r}`, class: "axis z" }),
    svg("line", {
      x1: half ? `${c}` : `${c - r}`,
      y1: `${c}`,
      x2: `${c + r}`,
      y2: `${c}`,
      class: "axis x",
    }),
  );

  const labels = compassLabels(qubit);
  const highlight = view.highlights[qubit.id];
  const points: { label: string; x: number; y: number; colour: Colour }[] = [
    { label: labels.north, x: c, y: c - r, colour: "green" },
    { label: labels.south, x: c, y: c + r, colour: "green" },
    { label: labels.east, x: c + r, y: c, colour: "red" },
    // the minus eigenstate projects onto the flat edge of a half disc
    { label: labels.west, x: half ? c : c - r, y: c, colour: "red" },
  ];
  for (const point of points) {
    const lit = highlight?.label === point.label;
    root.append(
      svg("circle", {
        cx: `${point.x}`,
        cy: `${point.y}`,
        r: lit ? "9" : "5",
        class: `eigen ${point.colour}${lit ? " lit" : ""}`,
      }),
    );
    const anchor = point.x > c ? "start" : point.x < c ? "end" : "middle";
    const dy = point.y < c ? -14 : point.y > c ? 22 : point.x === c && half ? 22 : 5;
    const dx = point.x > c ? 12 : point.x < c ? -12 : 0;
    const text = svg("text", {
      x: `${point.x + dx}`,
      y: `${point.y + dy}`,
      "text-anchor": anchor,
      class: `eigen-label${lit ? " lit" : ""}`,
    });
    text.textContent = point.label;
    root.append(text);
  }
  card.append(root as unknown as HTMLElement);

  const directive = view.instructions[qubit.id];
  const slot = el("div", "instruction" + (directive ? " active" : ""));
  slot.textContent = directive ?? "awaiting instruction";
  card.append(slot);
  return card;
}

export function renderTimeline(view: ConsoleView): HTMLElement {
  const list = el("ol", "timeline");
  for (const entry of view.timeline) {
    const item = el("li", `timeline-entry kind-${entry.kind}`);
    item.append(el("span", "seq", `#${entry.seq}`));
    item.append(el("span", `badge badge-${entry.badge}`, entry.badge));
    item.append(el("span", "text", entry.text));
    list.append(item);
  }
  return list;
}

export interface ActionHandlers {
  choose: (qubit: string, colour: Colour) => void;
  trigger: () => void;
  advance: () => void;
}

export function renderActions(view: ConsoleView, handlers: ActionHandlers): HTMLElement {
  const bar = el("div", "actions");
  const event = view.snapshot["current-event"];
  const colours = allowedColours(view);
  for (const colour of ["green", "red"] as Colour[]) {
    const button = el("button", `choose ${colour}`) as HTMLButtonElement;
    button.textContent =
      colour === "green" ? "measure green (Z)" : "measure red (X)";
    button.disabled = !event || !colours.includes(colour);
    button.onclick = () => event && handlers.choose(event.measured, colour);
    bar.append(button);
  }
  const trigger = el("button", "trigger") as HTMLButtonElement;
  trigger.textContent = "trigger collapse";
  trigger.disabled = !canTrigger(view);
  trigger.onclick = handlers.trigger;
  bar.append(trigger);

  const advance = el("button", "advance") as HTMLButtonElement;
  advance.textContent = view.finished ? "finished" : "next movement";
  advance.disabled = !canAdvance(view);
  advance.onclick = handlers.advance;
  bar.append(advance);
  return bar;
}

export function renderHeader(view: ConsoleView, connection: string): HTMLElement {
  const s = view.snapshot;
  const header = el("div", "session-header");
  header.append(el("h2", "title", s.title));
  const movement = s.movement
    ? `movement ${s["movement-ordinal"]}/${s["movement-count"]} (${s.movement})`
    : "no movement";
  header.append(el("span", "movement", movement));
  header.append(el("span", `status status-${s.status}`, s.status));
  header.append(el("span", `connection ${connection}`, connection));
  if (s["movement-note"]) header.append(el("p", "note", s["movement-note"]));
  const event = s["current-event"];
  if (event) {
    const colours = event["open-colour"] ? "open choice" : `scored ${event.colour}`;
    header.append(
      el(
        "p",
        "event-line",
        `measuring ${event.measured}, influencing ${event.influenced} (${colours})`,
      ),
    );
  }
  return header;
}
