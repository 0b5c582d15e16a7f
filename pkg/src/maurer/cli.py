"""Command line front end.

Exit codes: 0 success, 1 parse or usage error, 2 a verification failed,
3 the check does not apply to the given parameters.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .bta import format_thread, parse_thread, residuals
from .errors import InvalidParams, MaurerError, ParseError, SizeExceeded, ThresholdExceeded
from .execution import Status, computation, format_trace
from .isa import format_isa, parse_isa, validate_dm_regions
from .machine import (
    DEFAULT_MAX_STATES, UNDEF, Verdict, check_coincidence, computed_regions, dump_state,
    parse_state, state_digest,
)
from .reduce import (
    bc_free_actions, reduce_instruction_set, reduce_to_zero, verify_reduction_equivalence,
    verify_zero_reduction,
)
from .tpfc import (
    ExtTransformation, TpfcParams, all_transformations, count_transformations, ext_cells,
    format_transformation, incompleteness_check, parse_transformation, synthesize_complete,
    synthesize_zero_ou, verify_membership, witness_params,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NA = 0, 1, 2, 3


@dataclass
class RunReport:
    command: str
    params: dict
    verdicts: list[tuple[str, str, str]] = field(default_factory=list)
    counts: dict[str, str] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    def add(self, v: Verdict, name: str | None = None) -> None:
        self.verdicts.append((name or v.check, v.status, v.detail))

    def count(self, name: str, value) -> None:
        self.counts[name] = str(value)

    def exit_code(self) -> int:
        statuses = {s for _, s, _ in self.verdicts}
        if "Fail" in statuses:
            return EXIT_FAIL
        if statuses and statuses == {"NotApplicable"}:
            return EXIT_NA
        return EXIT_OK

    def render(self) -> str:
        # elapsed time is left out so that the text report is reproducible
        out = [f"command {self.command}"]
        out += [f"param {k} {v}" for k, v in self.params.items()]
        out += self.lines
        out += [f"count {k} {v}" for k, v in self.counts.items()]
        out += [f"{status} {name}: {detail}" for name, status, detail in self.verdicts]
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "command": self.command,
            "params": self.params,
            "verdicts": [{"check": n, "status": s, "detail": d} for n, s, d in self.verdicts],
            "counts": self.counts,
            "elapsed": round(self.elapsed * 1000),
        }, indent=2) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _emit(directory: str | None, name: str, text: str) -> None:
    if directory:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)


# --- subcommands ---------------------------------------------------------------

def cmd_simulate(args, report: RunReport) -> None:
    isa = parse_isa(_read(args.isa))
    thread = parse_thread(_read(args.thread))
    m = isa.machine
    if args.all_states:
        m.check_size(args.max_states)
        states = list(m.states())
    elif args.state:
        states = [parse_state(m, _read(args.state))]
    else:
        raise ParseError("give --state FILE or --all-states")
    lengths: dict[str, int] = {}
    for st in states:
        comp = computation(thread, m, st)
        tag = f"{comp.status.name} {comp.length}"
        lengths[tag] = lengths.get(tag, 0) + 1
        if args.trace:
            report.lines.append(format_trace(m, comp).rstrip("\n"))
        if len(states) == 1:
            report.lines.append(dump_state(m, comp.final).rstrip("\n"))
            report.lines.append(tag)
        else:
            final = "UNDEF" if comp.final is UNDEF else state_digest(m, comp.final)
            report.lines.append(f"{state_digest(m, st)} -> {final} {tag}")
    report.count("states", len(states))
    for tag, n in sorted(lengths.items()):
        report.count(tag.replace(" ", "_").lower(), n)


def _target(args) -> ExtTransformation | None:
    cells = ext_cells(args.aw, args.waf)
    if args.transformation:
        aw, wl, waf, t = parse_transformation(_read(args.transformation))
        if (aw, wl, waf) != (args.aw, args.wl, args.waf):
            raise ParseError(f"transformation file is for aw={aw} wl={wl} waf={'T' if waf else 'F'}")
        return t
    if args.family:
        try:
            return ExtTransformation.family(args.family, cells, args.wl, args.seed)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return None


def cmd_synthesize(args, report: RunReport) -> None:
    if args.waf and args.aw == 0:
        raise InvalidParams("a working area needs aw > 0")
    if args.all_transformations:
        cells = ext_cells(args.aw, args.waf)
        if (2**args.wl) ** cells > 16:
            raise SizeExceeded("--all-transformations is limited to 16 external states")
        passed = total = 0
        for t in all_transformations(cells, args.wl):
            w = synthesize_complete(args.aw, args.wl, args.waf, t)
            total += 1
            passed += bool(verify_membership(witness_params(w), w, t, args.max_states))
        report.count("transformations", total)
        report.count("passed", passed)
        report.add(Verdict("membership", passed == total, f"{passed}/{total} transformations"))
        return
    t = _target(args)
    if t is None:
        raise ParseError("give --transformation FILE, --family NAME or --all-transformations")
    if args.zero_ou:
        z = synthesize_zero_ou(args.aw, args.wl, args.waf, t, args.max_states)
        report.count("dm", len(z.isa.dm))
        report.count("selector_entries", len(z.selector))
        report.count("max_residuals", max(len(residuals(h)) for h in z.selector.values()))
        _emit(args.emit_dir, "isa.cfg", format_isa(z.isa))
        for key, h in sorted(z.selector.items()):
            _emit(args.emit_dir, f"thread_{''.join(map(str, key))}.txt", format_thread(h))
        for v in z.verdicts:
            report.add(v)
        return
    w = synthesize_complete(args.aw, args.wl, args.waf, t)
    params = witness_params(w)
    report.count("ous", params.ous)
    report.count("dm", params.iss)
    report.count("residuals", params.ssb)
    _emit(args.emit_dir, "isa.cfg", format_isa(w.isa))
    _emit(args.emit_dir, "thread.txt", format_thread(w.thread))
    _emit(args.emit_dir, "transformation.txt", format_transformation(args.aw, args.wl, args.waf, t))
    report.add(verify_membership(params, w, t, args.max_states))


def cmd_reduce(args, report: RunReport) -> None:
    isa = parse_isa(_read(args.isa))
    p = parse_thread(_read(args.thread))
    if isa.params.ous == 0:
        raise InvalidParams("the operating unit is already empty")
    if args.to_zero:
        z = reduce_to_zero(isa, p, args.max_states)
        report.count("dm", len(z.final.dm))
        report.count("selector_entries", len(z.selector))
        report.count("max_residuals", max(len(residuals(h)) for h in z.selector.values()))
        _emit(args.emit_dir, "isa.cfg", format_isa(z.final))
        for key, h in sorted(z.selector.items()):
            _emit(args.emit_dir, f"thread_{''.join(map(str, key))}.txt", format_thread(h))
        for v in verify_zero_reduction(z, p):
            report.add(v, f"selector {v.check}")
        return
    result = reduce_instruction_set(isa)
    plain = bc_free_actions(result, args.max_states) if args.optimize else frozenset()
    pair = (result.transform(p, 0, args.optimize), result.transform(p, 1, args.optimize))
    _emit(args.emit_dir, "isa.cfg", format_isa(result.reduced))
    for k in (0, 1):
        _emit(args.emit_dir, f"thread_{k}.txt", format_thread(pair[k]))
    rep = verify_reduction_equivalence(result, p, pair, args.max_states, plain=plain)
    for k, v in rep.counts.items():
        report.count(k, v)
    for v in rep.verdicts:
        report.add(v)


def cmd_count(args, report: RunReport) -> None:
    if args.grid:
        for aw in range(2, 9):
            for wl in range(2, 9):
                ems = 2 ** (aw - 1) * wl
                name = f"aw={aw} wl={wl}"
                try:
                    params = TpfcParams(aw, wl, ems // 2, 2**wl - 4, 2 ** (aw - 2), True)
                except InvalidParams as exc:
                    report.add(Verdict(name, False, str(exc), not_applicable=True))
                    continue
                report.add(_certificate_verdict(incompleteness_check(params)), name)
        return
    missing = [k for k in ("aw", "wl", "ous", "iss", "ssb") if getattr(args, k) is None]
    if missing:
        raise ParseError(f"missing --{' --'.join(missing)} (or use --grid)")
    report.count("transformations", count_transformations(args.aw, args.wl))
    cert = incompleteness_check(TpfcParams(args.aw, args.wl, args.ous, args.iss, args.ssb, args.waf))
    for k, v in cert.fields().items():
        report.count(k, v)
    for link, ok in cert.chain.items():
        report.lines.append(f"chain {link} {'holds' if ok else 'fails'}")
    report.lines.append(cert.verdict)
    report.add(_certificate_verdict(cert))


def _certificate_verdict(cert) -> Verdict:
    if not cert.applicable:
        return Verdict("incompleteness", False, "; ".join(cert.reasons), not_applicable=True)
    return Verdict("incompleteness", cert.incomplete, cert.verdict)


def cmd_regions(args, report: RunReport) -> None:
    isa = parse_isa(_read(args.isa))
    m = isa.machine
    for name, (ireg, oreg) in computed_regions(m, args.max_states).items():
        report.lines.append(f"{name} ireg {{{', '.join(map(str, sorted(ireg)))}}}"
                            f" oreg {{{', '.join(map(str, sorted(oreg)))}}}")
        report.add(check_coincidence(m, m.operations[name], ireg, oreg, args.max_states),
                   f"coincidence {name}")


def cmd_validate(args, report: RunReport) -> None:
    isa = parse_isa(_read(args.isa))
    report.count("states", isa.machine.n_states)
    report.count("dm", len(isa.dm))
    report.add(validate_dm_regions(isa, args.max_states, seed=args.seed))


# --- entry point ---------------------------------------------------------------

def _waf(text: str) -> bool:
    if text not in ("T", "F"):
        raise argparse.ArgumentTypeError("waf is T or F")
    return text == "T"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all random generation")
    common.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES,
                        help="bound for exhaustive loops (default 2^24)")
    common.add_argument("--out", help="also write the report as JSON to this file")

    parser = _Parser(prog="maurer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="apply a thread to an ISA")
    p.add_argument("isa")
    p.add_argument("thread")
    p.add_argument("--state", help="initial state file (element = value lines)")
    p.add_argument("--all-states", action="store_true")
    p.add_argument("--trace", action="store_true", help="print every configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synthesize", parents=[common], help="build a completeness witness")
    p.add_argument("--aw", type=int, required=True)
    p.add_argument("--wl", type=int, required=True)
    p.add_argument("--waf", type=_waf, default=False)
    p.add_argument("--transformation", help="transformation file")
    p.add_argument("--family", help="identity, swap, increment, constant or random")
    p.add_argument("--all-transformations", action="store_true")
    p.add_argument("--zero-ou", action="store_true", help="reduce the witness to an empty operating unit")
    p.add_argument("--emit-dir", help="directory for the ISA and thread files")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("reduce", parents=[common], help="remove operating unit bits")
    p.add_argument("isa")
    p.add_argument("thread")
    p.add_argument("--to-zero", action="store_true")
    p.add_argument("--optimize", action="store_true",
                   help="keep instructions that ignore the removed bit unsplit")
    p.add_argument("--emit-dir")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("count", parents=[common], help="incompleteness certificate")
    for name in ("aw", "wl", "ous", "iss", "ssb"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--waf", type=_waf, default=True)
    p.add_argument("--grid", action="store_true", help="aw in [2,8], wl in [2,8]")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("regions", parents=[common], help="computed input and output regions")
    p.add_argument("isa")
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("validate", parents=[common], help="check the strict load/store constraints")
    p.add_argument("isa")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", "out")}
    report = RunReport(args.command, params)
    start = time.perf_counter()
    try:
        args.func(args, report)
    except (ParseError, InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SizeExceeded, ThresholdExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except MaurerError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.elapsed = time.perf_counter() - start
    sys.stdout.write(report.render())
    if args.out:
        Path(args.out).write_text(report.to_json())
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
