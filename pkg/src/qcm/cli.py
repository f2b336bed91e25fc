"""The qcm command line tool.

Subcommands: check (parse + validate a score), verify-lemma (check the
measurement-unfolding identity in both bases), simulate (seeded headless
runs with summary statistics), export (journal to canonical event log),
fixture (print the built-in four-movement score), serve (run the session
host).

Exit codes: 0 success, 1 validation or verification failure, 2 I/O error.
Every randomized subcommand either takes --seed or generates one and prints
it, so published numbers are replayable.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from collections import Counter
from pathlib import Path

from . import engine, lang, model, service, sim, zx
from .sim import SplitMix64

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_IO = 2

CHSH_OPTIMAL_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_score(path: str, err) -> model.Score | None:
    try:
        text = _read_text(path)
    except OSError as exc:
        print(f"{path}: cannot read: {exc}", file=err)
        return None
    result = lang.parse(text)
    for d in result.diagnostics:
        print(f"{path}:{d}", file=err)
    if not result.ok:
        return None
    diagnostics = model.check_score(result.score)
    for d in diagnostics:
        print(f"{path}: {d}", file=err)
    if diagnostics:
        return None
    return result.score


def cmd_check(args, out=sys.stdout, err=sys.stderr) -> int:
    try:
        text = _read_text(args.path)
    except OSError as exc:
        print(f"{args.path}: cannot read: {exc}", file=err)
        return EXIT_IO
    result = lang.parse(text)
    for d in result.diagnostics:
        print(f"{args.path}:{d}", file=err)
    if not result.ok:
        return EXIT_FAIL
    diagnostics = model.check_score(result.score)
    for d in diagnostics:
        print(f"{args.path}: {d}", file=err)
    if diagnostics:
        return EXIT_FAIL
    print(f"{args.path}: ok", file=out)
    return EXIT_OK


def cmd_verify_lemma(args, out=sys.stdout, err=sys.stderr) -> int:
    """Check that measuring half an entangled pair equals the compact
    collapse-then-re-prepare notation, in both bases, up to scalar."""
    tol = args.tolerance
    print(f"measurement-unfolding identity check (tolerance {tol:g})", file=out)
    all_pass = True
    for colour, name in ((zx.Colour.Z, "green"), (zx.Colour.X, "red")):
        eq = zx.measurement_equation(colour)
        lhs = zx.evaluate_doubled(eq.unfolded)
        rhs = zx.evaluate_doubled(eq.compact)
        ok = zx.equal_up_to_scalar(lhs, rhs, tol)
        fused_ok = zx.equal_up_to_scalar(
            lhs, zx.evaluate_doubled(eq.unfolded_steps[-1]), tol
        )
        all_pass = all_pass and ok and fused_ok
        print(f"\nvariant {name} ({colour.value} measurement):", file=out)
        if args.verbose:
            print("  unfolded form:", file=out)
            print(_indent(zx.diagram_to_text(eq.unfolded)), file=out)
            for k, step in enumerate(eq.unfolded_steps[1:], start=1):
                print(f"  after fusion step {k}:", file=out)
                print(_indent(zx.diagram_to_text(step)), file=out)
            print("  compact form:", file=out)
            print(_indent(zx.diagram_to_text(eq.compact)), file=out)
            for k, step in enumerate(eq.compact_steps[1:], start=1):
                print(f"  compact after fusion step {k}:", file=out)
                print(_indent(zx.diagram_to_text(step)), file=out)
        print(
            f"  fusion chain: {len(eq.unfolded_steps) - 1} step(s) unfolded,"
            f" {len(eq.compact_steps) - 1} step(s) compact",
            file=out,
        )
        print(f"  unfolded == compact up to scalar: {'PASS' if ok else 'FAIL'}", file=out)
        print(f"  unfolded == own fused form:       {'PASS' if fused_ok else 'FAIL'}", file=out)
    if tol == 0:
        print(
            "\nnote: tolerance 0 demands exact numerical equality; it holds"
            " for the green variant, whose entries are exact integers",
            file=out,
        )
    print(f"\nresult: {'PASS' if all_pass else 'FAIL'}", file=out)
    return EXIT_OK if all_pass else EXIT_FAIL


def _indent(text: str, pad: str = "    ") -> str:
    return "\n".join(pad + line for line in text.rstrip("\n").split("\n"))


def _auto_drive(session, driver_rng) -> None:
    while True:
        legal = engine.legal_actions(session)
        if not legal:
            return
        action = legal[0]
        if isinstance(action, engine.ChooseBasis) and len(legal) > 1:
            action = legal[driver_rng.next_u64() % len(legal)]
        engine.apply_action(session, action)


def cmd_simulate(args, out=sys.stdout, err=sys.stderr) -> int:
    score = _load_score(args.path, err)
    if score is None:
        return EXIT_FAIL if Path(args.path).exists() else EXIT_IO
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    imap = engine.InstructionMap.from_score(score)

    log_fh = None
    if args.out:
        try:
            log_fh = open(args.out, "w", encoding="utf-8")
        except OSError as exc:
            print(f"{args.out}: cannot write: {exc}", file=err)
            return EXIT_IO

    outcome_counts: Counter = Counter()
    agreement: Counter = Counter()
    totals: Counter = Counter()
    driver_rng = SplitMix64(SplitMix64.derive(seed, 1 << 32))
    try:
        for run in range(args.trials):
            session = engine.create_session(
                score, SplitMix64.derive(seed, run), instruction_map=imap
            )
            _auto_drive(session, driver_rng if args.policy == "random" else _SCORED_FIRST)
            if log_fh:
                log_fh.write(engine.events_to_jsonl(session.event_log))
            _summarize_run(session, imap, outcome_counts, agreement, totals)
    finally:
        if log_fh:
            log_fh.close()

    per_movement = {}
    for movement in score.movements:
        m_id = movement.id
        if totals[m_id] == 0:
            continue
        per_movement[m_id] = {
            "runs": totals[m_id],
            "instruction-agreement": agreement[m_id] / totals[m_id],
            "outcome-counts": {
                label: count
                for (mid, label), count in sorted(outcome_counts.items())
                if mid == m_id
            },
        }

    matrix = {}
    bases = {"green": sim.z_basis(), "red": sim.x_basis()}
    for k, (n1, n2) in enumerate(
        (a, b) for a in ("green", "red") for b in ("green", "red")
    ):
        matrix[f"{n1}-{n2}"] = sim.correlation_experiment(
            bases[n1], bases[n2], args.trials, SplitMix64.derive(seed, (2 << 32) + k)
        )

    chsh = sim.chsh_value(
        CHSH_OPTIMAL_ANGLES, args.chsh_trials, SplitMix64.derive(seed, 3 << 32)
    )
    summary = {
        "seed": seed,
        "runs": args.trials,
        "policy": args.policy,
        "per-movement": per_movement,
        "agreement-frequencies": matrix,
        "chsh": {
            "angles": list(CHSH_OPTIMAL_ANGLES),
            "trials-per-setting": args.chsh_trials,
            "value": chsh,
        },
        "log": args.out,
    }
    json.dump(summary, out, indent=2, sort_keys=True)
    print(file=out)
    return EXIT_OK


class _ScoredFirst:
    """Driver rng that always picks the first (scored) choice."""

    def next_u64(self) -> int:
        return 0


_SCORED_FIRST = _ScoredFirst()


def _summarize_run(session, imap, outcome_counts, agreement, totals):
    movement_id = None
    colour = None
    measured = None
    indices = {}
    for event in session.event_log:
        p = event.payload
        if isinstance(p, engine.MovementStarted):
            movement_id = p.movement_id
            indices = {}
        elif isinstance(p, engine.ActionAccepted) and isinstance(p.action, engine.ChooseBasis):
            colour = p.action.colour
            measured = p.action.qubit_id
        elif isinstance(p, engine.Collapse):
            outcome_counts[(movement_id, p.outcome_label)] += 1
        elif isinstance(p, engine.Instruction):
            indices[p.qubit_id] = imap.outcome_index(p.qubit_id, p.directive)[1]
            if len(indices) == 2:
                totals[movement_id] += 1
                if len(set(indices.values())) == 1:
                    agreement[movement_id] += 1


def cmd_export(args, out=sys.stdout, err=sys.stderr) -> int:
    try:
        lines = _read_text(args.journal).splitlines()
    except OSError as exc:
        print(f"{args.journal}: cannot read: {exc}", file=err)
        return EXIT_IO
    try:
        head = json.loads(lines[0])
        if head.get("kind") != "create":
            raise ValueError("first journal record must be 'create'")
        result = lang.parse(head["score"])
        if not result.ok:
            raise ValueError("journal score does not parse")
        actions = [
            engine.action_from_record(json.loads(line)["action"])
            for line in lines[1:]
            if line.strip() and json.loads(line).get("kind") == "action"
        ]
        session = engine.replay(result.score, head["seed"], actions)
    except (ValueError, KeyError, IndexError) as exc:
        print(f"{args.journal}: malformed journal: {exc}", file=err)
        return EXIT_FAIL
    text = engine.events_to_jsonl(session.event_log, include_timestamps=False)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"{args.out}: cannot write: {exc}", file=err)
            return EXIT_IO
    else:
        out.write(text)
    return EXIT_OK


def cmd_fixture(args, out=sys.stdout, err=sys.stderr) -> int:
    text = lang.serialize(model.bell_score_fixture())
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"{args.out}: cannot write: {exc}", file=err)
            return EXIT_IO
    else:
        out.write(text)
    return EXIT_OK


def cmd_serve(args, out=sys.stdout, err=sys.stderr) -> int:
    try:
        server = service.make_server(args.listen, args.journal_dir, args.static_dir)
    except OSError as exc:
        print(f"cannot listen on {args.listen}: {exc}", file=err)
        return EXIT_IO
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", file=out, flush=True)
    if args.static_dir:
        print(f"console at http://{host}:{port}/ui/", file=out, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcm", description="Quantum Concept Music toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a .qcm score")
    p.add_argument("path")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser(
        "verify-lemma",
        help="verify the measurement-unfolding identity (green and red)",
    )
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--verbose", action="store_true", help="print the diagram chains")
    p.set_defaults(fn=cmd_verify_lemma)

    p = sub.add_parser("simulate", help="run seeded headless sessions of a score")
    p.add_argument("path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--chsh-trials", type=int, default=20_000)
    p.add_argument("--out", default=None, help="write the event logs to this file")
    p.add_argument("--policy", choices=("scored", "random"), default="scored")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("export", help="replay a session journal to a canonical event log")
    p.add_argument("journal")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("fixture", help="print the built-in four-movement score")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_fixture)

    p = sub.add_parser("serve", help="run the session host")
    p.add_argument("--listen", default="127.0.0.1:8765")
    p.add_argument("--journal-dir", default=None)
    p.add_argument("--static-dir", default=None, help="serve the console from this directory")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
