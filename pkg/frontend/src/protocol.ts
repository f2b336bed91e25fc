/**
 * Wire types and the pure view-state core.
 *
 * The console never simulates quantum state: the view model is a pure
 * function of the last full state snapshot plus the session events received
 * since, and every rendered label traces back to a snapshot or event field.
 */

export type Colour = "green" | "red";
export type Role = "performer" | "third-party" | "audience";

export interface ActionRecord {
  type: "choose-basis" | "trigger" | "advance";
  actor: Role;
  qubit?: string;
  colour?: Colour;
  "forced-outcome"?: number;
}

export interface EventRecord {
  v: number;
  seq: number;
  ts?: number | null;
  kind: "movement-started" | "action-accepted" | "collapse" | "instruction" | "session-finished";
  movement?: string;
  action?: ActionRecord;
  qubit?: string;
  outcome?: string;
  probability?: number;
  instrument?: string;
  directive?: string;
}

export interface QubitInfo {
  id: string;
  instrument: string;
  "z-axis": [string, string];
  "x-axis": [string, string];
  "phase-range": [number, number];
}

export interface CurrentEventInfo {
  id: string;
  measured: string;
  influenced: string;
  colour: Colour;
  "open-colour": boolean;
}

export interface StateSnapshot {
  v: number;
  status: "awaiting-choice" | "awaiting-trigger" | "collapsed" | "finished";
  seed: number;
  seq: number;
  policy: Role;
  title: string;
  movement: string | null;
  "movement-ordinal": number;
  "movement-count": number;
  "movement-note": string | null;
  "current-event": CurrentEventInfo | null;
  "chosen-colour": Colour | null;
  qubits: QubitInfo[];
  "legal-actions": ActionRecord[];
}

// --- view model -------------------------------------------------------------

export interface Highlight {
  label: string;
  colour: Colour | null;
  directive: string | null;
}

export interface TimelineEntry {
  seq: number;
  text: string;
  badge: string; // actor role for actions, "engine" otherwise
  kind: EventRecord["kind"];
}

export interface ConsoleView {
  snapshot: StateSnapshot;
  lastSeq: number;
  timeline: TimelineEntry[];
  highlights: Record<string, Highlight | undefined>;
  instructions: Record<string, string | undefined>;
  /** an event implied a state-machine change; the snapshot needs refetching */
  stale: boolean;
  finished: boolean;
}

export function fromSnapshot(snapshot: StateSnapshot, previous?: ConsoleView): ConsoleView {
  // lastSeq tracks events applied to the view, not the snapshot's position:
  // a fresh console subscribes from 0 and backfills the whole timeline, and
  // replaying those events through applyEvent converges on the same state.
  return {
    snapshot,
    lastSeq: previous?.lastSeq ?? 0,
    timeline: previous?.timeline ?? [],
    highlights: previous?.highlights ?? {},
    instructions: previous?.instructions ?? {},
    stale: false,
    finished: snapshot.status === "finished",
  };
}

/** The eigenstate label of `qubit` referenced inside a directive, if any. */
export function labelInDirective(qubit: QubitInfo, directive: string): string | null {
  const labels = [...qubit["z-axis"], ...qubit["x-axis"]];
  // prefer the longest match so "Strong and Fast" beats a hypothetical "Fast"
  const hits = labels.filter((label) => directive.includes(label));
  hits.sort((a, b) => b.length - a.length);
  return hits[0] ?? null;
}

export function describeEvent(event: EventRecord): string {
  switch (event.kind) {
    case "movement-started":
      return `movement ${event.movement} begins`;
    case "action-accepted": {
      const a = event.action!;
      if (a.type === "choose-basis") return `basis ${a.colour} chosen for ${a.qubit}`;
      if (a.type === "trigger")
        return a["forced-outcome"] === undefined
          ? "measurement triggered"
          : `measurement triggered (outcome ${a["forced-outcome"]} injected)`;
      return "movement advanced";
    }
    case "collapse": {
      const pct = event.probability === undefined ? "" : ` (p=${event.probability.toFixed(3)})`;
      return `${event.qubit} collapsed to ${event.outcome}${pct}`;
    }
    case "instruction":
      return `${event.instrument}: ${event.directive}`;
    case "session-finished":
      return "session finished";
  }
}

export function applyEvent(view: ConsoleView, event: EventRecord): ConsoleView {
  if (event.seq <= view.lastSeq) return view; // replay of an already-seen record
  const badge =
    event.kind === "action-accepted" && event.action ? event.action.actor : "engine";
  const timeline = [
    ...view.timeline,
    { seq: event.seq, text: describeEvent(event), badge, kind: event.kind },
  ];
  let highlights = view.highlights;
  let instructions = view.instructions;
  let stale = view.stale;
  let finished = view.finished;

  switch (event.kind) {
    case "movement-started":
      highlights = {};
      instructions = {};
      stale = true;
      break;
    case "action-accepted":
      stale = true;
      break;
    case "collapse": {
      const colour = colourOfLabel(view.snapshot.qubits, event.qubit!, event.outcome!);
      highlights = {
        ...highlights,
        [event.qubit!]: { label: event.outcome!, colour, directive: null },
      };
      stale = true;
      break;
    }
    case "instruction": {
      instructions = { ...instructions, [event.qubit!]: event.directive };
      const qubit = view.snapshot.qubits.find((q) => q.id === event.qubit);
      if (qubit && !highlights[event.qubit!]) {
        const label = labelInDirective(qubit, event.directive!);
        if (label) {
          highlights = {
            ...highlights,
            [event.qubit!]: {
              label,
              colour: colourOfLabel([qubit], qubit.id, label),
              directive: event.directive!,
            },
          };
        }
      }
      break;
    }
    case "session-finished":
      finished = true;
      stale = true;
      break;
  }
  return { ...view, timeline, highlights, instructions, stale, finished, lastSeq: event.seq };
}

function colourOfLabel(qubits: QubitInfo[], qubitId: string, label: string): Colour | null {
  const qubit = qubits.find((q) => q.id === qubitId);
  if (!qubit) return null;
  if (qubit["z-axis"].includes(label)) return "green";
  if (qubit["x-axis"].includes(label)) return "red";
  return null;
}

// --- disc geometry ------------------------------------------------------------

export interface CompassLabels {
  north: string; // z outcome 0
  south: string; // z outcome 1
  east: string; // x outcome 0 (plus)
  west: string; // x outcome 1 (minus)
}

export function compassLabels(qubit: QubitInfo): CompassLabels {
  return {
    north: qubit["z-axis"][0],
    south: qubit["z-axis"][1],
    east: qubit["x-axis"][0],
    west: qubit["x-axis"][1],
  };
}

/** Half disc exactly when the declared phase range is [0, pi]. */
export function isHalfDisc(qubit: QubitInfo): boolean {
  const [lo, hi] = qubit["phase-range"];
  return Math.abs(lo) < 1e-9 && Math.abs(hi - Math.PI) < 1e-9;
}

// --- legality helpers -----------------------------------------------------------

export function allowedColours(view: ConsoleView): Colour[] {
  return view.snapshot["legal-actions"]
    .filter((a) => a.type === "choose-basis")
    .map((a) => a.colour!)
    .filter((c, i, arr) => arr.indexOf(c) === i);
}

export function canTrigger(view: ConsoleView): boolean {
  return view.snapshot["legal-actions"].some((a) => a.type === "trigger");
}

export function canAdvance(view: ConsoleView): boolean {
  return view.snapshot["legal-actions"].some((a) => a.type === "advance");
}
