"""Strict load/store Maurer instruction set architectures.

Data manipulation instructions are given as explicit tables.  A table maps
the contents of the operating unit and the load data registers (the only
elements such an instruction may read) to the new contents of a fixed list
of written elements, which must be drawn from the operating unit, the load
address, store data and store address registers, and the reply register.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InvalidParams, ParseError, RangeViolation, ThresholdExceeded
from .machine import (
    BOOL, DEFAULT_MAX_STATES, RR, Element, Kind, MaurerMachine, Operation, Verdict,
    data, input_region, la, ld, ou, output_region, sa, sd, verify_declared_regions,
)

DM_READABLE = frozenset({Kind.OU, Kind.LD})
DM_WRITABLE = frozenset({Kind.OU, Kind.LA, Kind.SD, Kind.SA, Kind.RR})


def load_name(n: int) -> str:
    return f"load:{n}"


def store_name(n: int) -> str:
    return f"store:{n}"


@dataclass(frozen=True)
class IsaParams:
    aw: int
    wl: int
    ous: int
    nrpl: int = 1
    nrps: int = 1

    def __post_init__(self):
        if self.aw < 0 or self.ous < 0:
            raise InvalidParams("aw and ous must be non-negative")
        if self.wl <= 0 or self.nrpl <= 0 or self.nrps <= 0:
            raise InvalidParams("wl, nrpl and nrps must be positive")

    @property
    def cells(self) -> int:
        return 2**self.aw

    def domains(self) -> dict[Element, Sequence]:
        words, addrs = range(2**self.wl), range(2**self.aw)
        doms: dict[Element, Sequence] = {}
        for i in range(self.cells):
            doms[data(i)] = words
        for i in range(self.ous):
            doms[ou(i)] = range(2)
        for n in range(self.nrpl):
            doms[ld(n)] = words
            doms[la(n)] = addrs
        for n in range(self.nrps):
            doms[sd(n)] = words
            doms[sa(n)] = addrs
        doms[RR] = BOOL
        return doms

    def dm_inputs(self) -> tuple[Element, ...]:
        """Key order of data manipulation tables."""
        return tuple(ou(i) for i in range(self.ous)) + tuple(ld(n) for n in range(self.nrpl))

    def dm_writable(self) -> set[Element]:
        return {e for e in self.domains() if e.kind in DM_WRITABLE}

    def n_states(self) -> int:
        n = 1
        for dom in self.domains().values():
            n *= len(dom)
        return n


@dataclass(frozen=True)
class DmSpec:
    """A data manipulation instruction as an explicit table."""

    name: str
    writes: tuple[Element, ...]
    table: Mapping[tuple, tuple] = field(compare=True)

    def __hash__(self):
        return hash((self.name, self.writes))

    def check(self, params: IsaParams) -> None:
        doms = params.domains()
        if RR not in self.writes:
            raise RangeViolation(f"{self.name}: the reply register must be written")
        if len(set(self.writes)) != len(self.writes):
            raise RangeViolation(f"{self.name}: duplicate written element")
        allowed = params.dm_writable()
        for e in self.writes:
            if e not in allowed:
                raise RangeViolation(f"{self.name}: {e} may not be written by data manipulation")
        keys = list(itertools.product(*(doms[e] for e in params.dm_inputs())))
        if len(self.table) != len(keys) or any(k not in self.table for k in keys):
            raise RangeViolation(f"{self.name}: table is not total over {params.dm_inputs()}")
        for key, row in self.table.items():
            if len(row) != len(self.writes):
                raise RangeViolation(f"{self.name}: row {key} has the wrong width")
            for e, v in zip(self.writes, row):
                dom = doms[e]
                if v not in dom or type(v) is not type(dom[0]):
                    raise RangeViolation(f"{self.name}: row {key} writes {v!r} to {e}")


def _lift(spec: DmSpec, pos: Mapping[Element, int], params: IsaParams) -> Operation:
    in_pos = tuple(pos[e] for e in params.dm_inputs())
    out_pos = tuple(pos[e] for e in spec.writes)
    table = spec.table

    def fn(st):
        row = table[tuple([st[p] for p in in_pos])]
        new = list(st)
        for p, v in zip(out_pos, row):
            new[p] = v
        return tuple(new)

    return Operation(spec.name, fn, frozenset(params.dm_inputs()), frozenset(spec.writes))


def _load_op(n: int, pos: Mapping[Element, int], params: IsaParams) -> Operation:
    base, p_ld, p_la, p_rr = pos[data(0)], pos[ld(n)], pos[la(n)], pos[RR]

    def fn(st):
        new = list(st)
        new[p_ld] = st[base + st[p_la]]
        new[p_rr] = True
        return tuple(new)

    cells = frozenset(data(i) for i in range(params.cells))
    return Operation(load_name(n), fn, cells | {la(n)}, frozenset({ld(n), RR}))


def _store_op(n: int, pos: Mapping[Element, int], params: IsaParams) -> Operation:
    base, p_sd, p_sa, p_rr = pos[data(0)], pos[sd(n)], pos[sa(n)], pos[RR]

    def fn(st):
        new = list(st)
        new[base + st[p_sa]] = st[p_sd]
        new[p_rr] = True
        return tuple(new)

    cells = frozenset(data(i) for i in range(params.cells))
    # the written cell is addressed by sa, so every cell is a potential input
    return Operation(store_name(n), fn, cells | {sd(n), sa(n)}, cells | {RR})


class LsIsa:
    """A strict load/store ISA together with its underlying Maurer machine."""

    def __init__(self, params: IsaParams, dm: Iterable[DmSpec]):
        self.params = params
        self.dm = tuple(dm)
        names = [d.name for d in self.dm]
        fixed = {load_name(n) for n in range(params.nrpl)} | {store_name(n) for n in range(params.nrps)}
        if len(set(names)) != len(names):
            raise InvalidParams("data manipulation names must be distinct")
        clash = set(names) & fixed
        if clash:
            raise InvalidParams(f"data manipulation names clash with load/store: {sorted(clash)}")
        for d in self.dm:
            d.check(params)
        doms = params.domains()
        pos = {e: i for i, e in enumerate(sorted(doms))}
        ops = [_load_op(n, pos, params) for n in range(params.nrpl)]
        ops += [_store_op(n, pos, params) for n in range(params.nrps)]
        ops += [_lift(d, pos, params) for d in self.dm]
        self.machine = MaurerMachine(doms, ops, {op.name: RR for op in ops})

    @property
    def dm_actions(self) -> set[str]:
        return {d.name for d in self.dm}

    @property
    def actions(self) -> set[str]:
        return self.machine.actions

    def dm_spec(self, name: str) -> DmSpec:
        for d in self.dm:
            if d.name == name:
                return d
        raise KeyError(name)

    def data_elements(self) -> list[Element]:
        return [data(i) for i in range(self.params.cells)]

    def __eq__(self, other):
        return isinstance(other, LsIsa) and (self.params, self.dm) == (other.params, other.dm)

    __hash__ = None


def build_isa(params: IsaParams, dm: Iterable[DmSpec] = ()) -> LsIsa:
    return LsIsa(params, dm)


def dm_table(params: IsaParams, writes: Sequence[Element], fn) -> dict[tuple, tuple]:
    """Tabulate ``fn(inputs) -> row`` over all contents of the readable elements.

    ``fn`` receives a dict from the readable elements to their values.
    """
    doms = params.domains()
    inputs = params.dm_inputs()
    table = {}
    for key in itertools.product(*(doms[e] for e in inputs)):
        row = fn(dict(zip(inputs, key)))
        table[key] = tuple(row[e] for e in writes) if isinstance(row, Mapping) else tuple(row)
    return table


def random_dm_spec(params: IsaParams, name: str, writes: Sequence[Element], seed: int) -> DmSpec:
    """Seeded random table writing ``writes`` (rr is always added)."""
    writes = tuple(writes)
    allowed = params.dm_writable()
    bad = [e for e in writes if e not in allowed]
    if bad:
        raise RangeViolation(f"cannot write {bad} from a data manipulation instruction")
    if RR not in writes:
        writes = writes + (RR,)
    doms = params.domains()
    rng = random.Random(seed)
    table = {}
    for key in itertools.product(*(doms[e] for e in params.dm_inputs())):
        table[key] = tuple(rng.choice(doms[e]) for e in writes)
    return DmSpec(name, writes, table)


def validate_dm_regions(isa: LsIsa, max_states: int = DEFAULT_MAX_STATES,
                        samples: int = 10_000, seed: int = 0) -> Verdict:
    """Check the strict region constraints on every data manipulation operation."""
    m = isa.machine
    exhaustive = m.n_states <= max_states
    for name in sorted(isa.dm_actions):
        op = m.operations[name]
        if exhaustive:
            oreg = output_region(m, op, max_states)
            ireg = input_region(m, op, max_states, oreg)
            for e in sorted(ireg):
                if e.kind not in DM_READABLE:
                    return Verdict("dm-regions", False, f"{name}: {e} in input region", e)
            for e in sorted(oreg):
                if e.kind not in DM_WRITABLE:
                    return Verdict("dm-regions", False, f"{name}: {e} in output region", e)
        else:
            v = verify_declared_regions(m, op, samples, seed)
            if not v:
                return Verdict("dm-regions", False, f"{name}: {v.detail}", v.counterexample, sampled=True)
    detail = f"{len(isa.dm)} data manipulation instructions"
    return Verdict("dm-regions", True, detail, sampled=not exhaustive)


# --- config files ------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "T" if v else "F"
    return str(v)


def _val(text: str, elem: Element):
    if elem.kind is Kind.RR:
        if text not in ("T", "F"):
            raise ParseError(f"expected T or F for rr, got {text!r}")
        return text == "T"
    return int(text)


def format_isa(isa: LsIsa) -> str:
    p = isa.params
    lines = [f"aw {p.aw}", f"wl {p.wl}", f"ous {p.ous}", f"nrpl {p.nrpl}", f"nrps {p.nrps}"]
    for d in isa.dm:
        lines.append(f"dm {d.name} writes {' '.join(map(str, d.writes))}")
        for key in sorted(d.table):
            lines.append(f"  {' '.join(map(_fmt, key))} -> {' '.join(map(_fmt, d.table[key]))}")
    return "\n".join(lines) + "\n"


_DM_RE = re.compile(r"^dm\s+(\S+)\s+(?:random\s+seed=(\d+)\s+)?writes((?:\s+\S+)*)$")


def parse_isa(text: str) -> LsIsa:
    fields: dict[str, int] = {}
    blocks: list[tuple[str, tuple[Element, ...], int | None, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if raw[:1].isspace():
            if not blocks or blocks[-1][2] is not None:
                raise ParseError(f"line {lineno}: table row outside an explicit dm block")
            blocks[-1][3].append(line.strip())
            continue
        if line.startswith("dm "):
            m = _DM_RE.match(line.strip())
            if m is None:
                raise ParseError(f"line {lineno}: bad dm header {raw!r}")
            writes = tuple(Element.parse(w) for w in m.group(3).split())
            seed = int(m.group(2)) if m.group(2) is not None else None
            blocks.append((m.group(1), writes, seed, []))
            continue
        key, _, value = line.partition(" ")
        if key not in ("aw", "wl", "ous", "nrpl", "nrps") or not value.strip().isdigit():
            raise ParseError(f"line {lineno}: unexpected {raw!r}")
        fields[key] = int(value)
    try:
        params = IsaParams(fields["aw"], fields["wl"], fields["ous"],
                           fields.get("nrpl", 1), fields.get("nrps", 1))
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]}") from exc
    inputs = params.dm_inputs()
    dm = []
    for name, writes, seed, rows in blocks:
        if seed is not None:
            dm.append(random_dm_spec(params, name, writes, seed))
            continue
        table = {}
        for row in rows:
            lhs, sep, rhs = row.partition("->")
            if not sep:
                raise ParseError(f"{name}: bad table row {row!r}")
            ins, outs = lhs.split(), rhs.split()
            if len(ins) != len(inputs) or len(outs) != len(writes):
                raise ParseError(f"{name}: row {row!r} has the wrong width")
            key = tuple(_val(t, e) for t, e in zip(ins, inputs))
            table[key] = tuple(_val(t, e) for t, e in zip(outs, writes))
        dm.append(DmSpec(name, writes, table))
    try:
        return LsIsa(params, dm)
    except RangeViolation as exc:
        raise ParseError(str(exc)) from exc
