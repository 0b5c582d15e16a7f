"""Finite Maurer machines.

States are plain tuples holding one value per memory element, in the
machine's canonical element order.  Operations are Python callables from
state tuples to state tuples, paired with the input and output regions they
declare.  Regions can be recomputed exhaustively from the semantics with
:func:`output_region` and :func:`input_region`.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import ParseError, ThresholdExceeded

DEFAULT_MAX_STATES = 2**24


class Kind(IntEnum):
    DATA = 0
    OU = 1
    LD = 2
    LA = 3
    SD = 4
    SA = 5
    RR = 6


_KIND_NAMES = {
    Kind.DATA: "data", Kind.OU: "ou", Kind.LD: "ld", Kind.LA: "la",
    Kind.SD: "sd", Kind.SA: "sa", Kind.RR: "rr",
}
_NAME_KINDS = {v: k for k, v in _KIND_NAMES.items()}
_ELEMENT_RE = re.compile(r"^([a-z]+)(?:\[(\d+)\])?$")


@dataclass(frozen=True, order=True)
class Element:
    kind: Kind
    index: int = 0

    def __str__(self) -> str:
        if self.kind is Kind.RR:
            return "rr"
        return f"{_KIND_NAMES[self.kind]}[{self.index}]"

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str) -> Element:
        m = _ELEMENT_RE.match(text.strip())
        if m is None or m.group(1) not in _NAME_KINDS:
            raise ParseError(f"bad memory element {text!r}")
        kind = _NAME_KINDS[m.group(1)]
        if (kind is Kind.RR) != (m.group(2) is None):
            raise ParseError(f"bad memory element {text!r}")
        return cls(kind, int(m.group(2) or 0))


def data(i: int) -> Element:
    return Element(Kind.DATA, i)


def ou(i: int) -> Element:
    return Element(Kind.OU, i)


def ld(i: int) -> Element:
    return Element(Kind.LD, i)


def la(i: int) -> Element:
    return Element(Kind.LA, i)


def sd(i: int) -> Element:
    return Element(Kind.SD, i)


def sa(i: int) -> Element:
    return Element(Kind.SA, i)


RR = Element(Kind.RR)
BOOL = (False, True)


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNDEF"

    def __reduce__(self):
        return (_Undefined, ())


UNDEF = _Undefined()
"""The undefined state produced by deadlock or divergence."""

State = tuple


@dataclass(frozen=True, eq=False)
class Operation:
    name: str
    fn: Callable[[State], State]
    inputs: frozenset = frozenset()
    outputs: frozenset = frozenset()

    def __call__(self, state: State) -> State:
        return self.fn(state)


class MaurerMachine:
    """A finite Maurer machine with a full product state space."""

    def __init__(
        self,
        domains: Mapping[Element, Sequence],
        operations: Iterable[Operation],
        replies: Mapping[str, Element],
    ):
        self.memory: tuple[Element, ...] = tuple(sorted(domains))
        self.domains: tuple[tuple, ...] = tuple(tuple(domains[e]) for e in self.memory)
        self.position = {e: i for i, e in enumerate(self.memory)}
        self.operations: dict[str, Operation] = {op.name: op for op in operations}
        self.replies = dict(replies)
        for name in self.operations:
            reply = self.replies.get(name)
            if reply is None or set(self.domains[self.position[reply]]) != set(BOOL):
                raise ValueError(f"action {name} needs a Boolean reply element")
        for op in self.operations.values():
            if not (op.inputs | op.outputs) <= set(self.memory):
                raise ValueError(f"{op.name} declares regions outside the memory")

    @property
    def actions(self) -> set[str]:
        return set(self.operations)

    @property
    def n_states(self) -> int:
        return math.prod(len(d) for d in self.domains)

    def states(self) -> Iterator[State]:
        return itertools.product(*self.domains)

    def check_size(self, max_states: int = DEFAULT_MAX_STATES) -> None:
        if self.n_states > max_states:
            raise ThresholdExceeded(
                f"{self.n_states} states exceed the exhaustive limit of {max_states}"
            )

    def state(self, values: Mapping[Element, object]) -> State:
        """Build a state; every memory element must be given."""
        missing = set(self.memory) - set(values)
        if missing:
            raise ValueError(f"missing values for {sorted(missing)}")
        st = tuple(values[e] for e in self.memory)
        self.validate(st)
        return st

    def validate(self, st: State) -> None:
        if len(st) != len(self.memory):
            raise ValueError("state has the wrong number of elements")
        for e, dom, v in zip(self.memory, self.domains, st):
            if v not in dom or type(v) is not type(dom[0]):
                raise ValueError(f"{e} = {v!r} is outside its range")

    def as_dict(self, st: State) -> dict[Element, object]:
        return dict(zip(self.memory, st))

    def restrict(self, st, elements: Sequence[Element]):
        if st is UNDEF:
            return UNDEF
        return tuple(st[self.position[e]] for e in elements)

    def random_state(self, rng: random.Random) -> State:
        return tuple(rng.choice(d) for d in self.domains)

    def elements(self, kind: Kind) -> list[Element]:
        return [e for e in self.memory if e.kind is kind]


# --- state dumps -------------------------------------------------------------

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "T" if v else "F"
    return str(v)


def dump_state(machine: MaurerMachine, st) -> str:
    if st is UNDEF:
        return "UNDEF\n"
    return "".join(f"{e} = {_fmt_value(v)}\n" for e, v in zip(machine.memory, st))


def parse_state(machine: MaurerMachine, text: str) -> State:
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, val = line.partition("=")
        if not sep:
            raise ParseError(f"expected 'element = value', got {raw!r}")
        elem = Element.parse(name)
        if elem not in machine.position:
            raise ParseError(f"{elem} is not part of this machine")
        val = val.strip()
        values[elem] = {"T": True, "F": False}[val] if val in ("T", "F") else int(val)
    try:
        return machine.state(values)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def state_digest(machine: MaurerMachine, st) -> str:
    return f"{fnv1a64(dump_state(machine, st).encode()):016x}"


# --- regions -----------------------------------------------------------------

def output_region(machine: MaurerMachine, op: Operation, max_states: int = DEFAULT_MAX_STATES) -> set[Element]:
    """Elements changed by ``op`` in at least one state."""
    machine.check_size(max_states)
    n = len(machine.memory)
    changed = [False] * n
    for st in machine.states():
        new = op(st)
        if new != st:
            for i in range(n):
                if new[i] != st[i]:
                    changed[i] = True
    return {e for e, c in zip(machine.memory, changed) if c}


def input_region(
    machine: MaurerMachine,
    op: Operation,
    max_states: int = DEFAULT_MAX_STATES,
    oreg: Iterable[Element] | None = None,
) -> set[Element]:
    """Elements whose content can influence the result on the output region.

    ``x`` is included iff two states differing only at ``x`` are mapped to
    states that differ somewhere on the output region.
    """
    machine.check_size(max_states)
    if oreg is None:
        oreg = output_region(machine, op, max_states)
    out_pos = [machine.position[e] for e in sorted(oreg)]
    if not out_pos:
        return set()
    # Group states by all elements but x; the projection of op onto oreg
    # must be constant within every group for x to be irrelevant.
    result = set()
    images = {st: tuple(op(st)[p] for p in out_pos) for st in machine.states()}
    for x, elem in enumerate(machine.memory):
        if len(machine.domains[x]) < 2:
            continue
        groups: dict[tuple, tuple] = {}
        for st, img in images.items():
            key = st[:x] + st[x + 1:]
            prev = groups.setdefault(key, img)
            if prev != img:
                result.add(elem)
                break
    return result


@dataclass
class Verdict:
    check: str
    passed: bool
    detail: str = ""
    counterexample: object = None
    sampled: bool = False
    not_applicable: bool = False

    @property
    def status(self) -> str:
        if self.not_applicable:
            return "NotApplicable"
        return "Pass" if self.passed else "Fail"

    def __bool__(self) -> bool:
        return self.passed


def verify_declared_regions(
    machine: MaurerMachine, op: Operation, samples: int, seed: int = 0
) -> Verdict:
    """Try to falsify the declared regions of ``op`` on random states."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    rng = random.Random(seed)
    outside_out = [i for i, e in enumerate(machine.memory) if e not in op.outputs]
    out_pos = [machine.position[e] for e in sorted(op.outputs)]
    free = [i for i, e in enumerate(machine.memory)
            if e not in op.inputs and len(machine.domains[i]) > 1]
    for _ in range(samples):
        st = machine.random_state(rng)
        new = op(st)
        for i in outside_out:
            if new[i] != st[i]:
                return Verdict("declared-regions", False,
                               f"{op.name} changes undeclared {machine.memory[i]}", st)
        if free:
            x = rng.choice(free)
            alt = rng.choice([v for v in machine.domains[x] if v != st[x]])
            st2 = st[:x] + (alt,) + st[x + 1:]
            new2 = op(st2)
            if any(new[p] != new2[p] for p in out_pos):
                return Verdict("declared-regions", False,
                               f"{op.name} depends on undeclared {machine.memory[x]}", (st, st2))
    return Verdict("declared-regions", True, f"{samples} samples", sampled=True)


def check_coincidence(
    machine: MaurerMachine,
    op: Operation,
    ireg: Iterable[Element],
    oreg: Iterable[Element],
    max_states: int = DEFAULT_MAX_STATES,
) -> Verdict:
    """States agreeing on ``ireg`` must be mapped to states agreeing on ``oreg``."""
    machine.check_size(max_states)
    in_pos = [machine.position[e] for e in sorted(ireg)]
    out_pos = [machine.position[e] for e in sorted(oreg)]
    seen: dict[tuple, tuple] = {}
    witness: dict[tuple, State] = {}
    for st in machine.states():
        key = tuple(st[p] for p in in_pos)
        new = op(st)
        img = tuple(new[p] for p in out_pos)
        prev = seen.setdefault(key, img)
        if prev != img:
            return Verdict("coincidence", False, f"{op.name}", (witness[key], st))
        witness.setdefault(key, st)
    return Verdict("coincidence", True, f"{op.name}: {machine.n_states} states")


def computed_regions(
    machine: MaurerMachine, max_states: int = DEFAULT_MAX_STATES
) -> dict[str, tuple[set[Element], set[Element]]]:
    """Exact (ireg, oreg) for every operation of ``machine``."""
    out = {}
    for name, op in sorted(machine.operations.items()):
        oreg = output_region(machine, op, max_states)
        out[name] = (input_region(machine, op, max_states, oreg), oreg)
    return out

