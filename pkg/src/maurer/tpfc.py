"""Thread powered function classes.

:func:`synthesize_complete` builds, for any transformation ``T`` of the
external memory, an ISA with five data manipulation instructions and an
eight-state thread that achieves ``T``: copy every external cell into the
operating unit, apply ``T`` there in one instruction, copy everything back.
:func:`incompleteness_check` evaluates the counting argument that bounds
what small operating units can achieve.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping

from .bignat import BigNat
from .bta import ThreadHandle, parse_thread, residuals
from .errors import (
    InvalidParams, MilestoneError, NonContiguousDomain, ParseError, SizeExceeded,
)
from .execution import Executor, Status, computation
from .isa import DmSpec, IsaParams, LsIsa, build_isa, dm_table
from .machine import DEFAULT_MAX_STATES, RR, UNDEF, Element, Kind, Verdict, data, la, ld, ou, sa, sd

DEFAULT_MAX_TABLE = 2**20


def bn(bits: Mapping[Element, int]) -> int:
    """Value of a contiguous run of operating unit bits, lowest index least significant."""
    if not bits:
        return 0
    idx = sorted(e.index for e in bits)
    if any(e.kind is not Kind.OU for e in bits) or idx[-1] - idx[0] + 1 != len(idx):
        raise NonContiguousDomain(f"not a contiguous operating unit range: {sorted(bits)}")
    lo = idx[0]
    return sum(v << (e.index - lo) for e, v in bits.items())


def count_transformations(aw: int, wl: int) -> BigNat:
    """Number of transformations of the data memory states, in closed form."""
    return BigNat.pow2(2 ** (2**aw * wl + aw) * wl)


# --- external memory transformations -------------------------------------------

def ext_cells(aw: int, waf: bool) -> int:
    return 2 ** (aw - 1) if waf else 2**aw


@dataclass(frozen=True)
class ExtTransformation:
    """Total map on the states of ``cells`` memory cells of ``wl`` bits."""

    cells: int
    wl: int
    table: Mapping[tuple, tuple] = field(hash=False)

    def __post_init__(self):
        words = range(2**self.wl)
        states = list(ext_states(self.cells, self.wl))
        if len(self.table) != len(states):
            raise ValueError("transformation table is not total")
        for s in states:
            out = self.table.get(s)
            if out is None or len(out) != self.cells or any(v not in words for v in out):
                raise ValueError(f"bad image for {s}")

    def __call__(self, state: tuple) -> tuple:
        return self.table[state]

    @classmethod
    def from_function(cls, cells: int, wl: int, fn: Callable[[tuple], tuple]) -> ExtTransformation:
        _check_table(cells, wl)
        return cls(cells, wl, {s: tuple(fn(s)) for s in ext_states(cells, wl)})

    @classmethod
    def identity(cls, cells: int, wl: int) -> ExtTransformation:
        return cls.from_function(cells, wl, lambda s: s)

    @classmethod
    def swap(cls, cells: int, wl: int, i: int = 0, j: int = 1) -> ExtTransformation:
        def fn(s):
            out = list(s)
            out[i], out[j] = s[j], s[i]
            return out
        return cls.from_function(cells, wl, fn)

    @classmethod
    def increment(cls, cells: int, wl: int) -> ExtTransformation:
        return cls.from_function(cells, wl, lambda s: [(v + 1) % 2**wl for v in s])

    @classmethod
    def constant(cls, cells: int, wl: int, value: int = 0) -> ExtTransformation:
        return cls.from_function(cells, wl, lambda s: [value] * cells)

    @classmethod
    def random(cls, cells: int, wl: int, seed: int) -> ExtTransformation:
        _check_table(cells, wl)
        rng = random.Random(seed)
        states = list(ext_states(cells, wl))
        return cls(cells, wl, {s: rng.choice(states) for s in states})

    @classmethod
    def family(cls, name: str, cells: int, wl: int, seed: int = 0) -> ExtTransformation:
        makers = {
            "identity": lambda: cls.identity(cells, wl),
            "swap": lambda: cls.swap(cells, wl),
            "increment": lambda: cls.increment(cells, wl),
            "constant": lambda: cls.constant(cells, wl),
            "random": lambda: cls.random(cells, wl, seed),
        }
        if name not in makers:
            raise ValueError(f"unknown transformation family {name!r}; pick one of {sorted(makers)}")
        return makers[name]()


def _check_table(cells: int, wl: int, max_table: int = DEFAULT_MAX_TABLE) -> None:
    if (2**wl) ** cells > max_table:
        raise SizeExceeded(f"{cells} cells of {wl} bits have more than {max_table} states")


def ext_states(cells: int, wl: int) -> Iterator[tuple]:
    return itertools.product(range(2**wl), repeat=cells)


def all_transformations(cells: int, wl: int) -> Iterator[ExtTransformation]:
    states = list(ext_states(cells, wl))
    for images in itertools.product(states, repeat=len(states)):
        yield ExtTransformation(cells, wl, dict(zip(states, images)))


def format_transformation(aw: int, wl: int, waf: bool, t: ExtTransformation) -> str:
    lines = [f"{aw} {wl} {'T' if waf else 'F'}"]
    for s in sorted(t.table):
        lines.append(f"{' '.join(map(str, s))} -> {' '.join(map(str, t.table[s]))}")
    return "\n".join(lines) + "\n"


def parse_transformation(text: str) -> tuple[int, int, bool, ExtTransformation]:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ParseError("empty transformation file")
    head = lines[0].split()
    if len(head) != 3 or head[2] not in ("T", "F"):
        raise ParseError(f"bad header {lines[0]!r}; expected 'aw wl waf'")
    aw, wl, waf = int(head[0]), int(head[1]), head[2] == "T"
    cells = ext_cells(aw, waf)
    table = {}
    for ln in lines[1:]:
        lhs, sep, rhs = ln.partition("->")
        if not sep:
            raise ParseError(f"bad line {ln!r}")
        src, dst = tuple(map(int, lhs.split())), tuple(map(int, rhs.split()))
        if len(src) != cells or len(dst) != cells:
            raise ParseError(f"line {ln!r} does not have {cells} cells per state")
        if src in table:
            raise ParseError(f"duplicate line for {src}")
        table[src] = dst
    try:
        return aw, wl, waf, ExtTransformation(cells, wl, table)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


# --- the completeness construction -----------------------------------------------

@dataclass(frozen=True)
class TpfcParams:
    aw: int
    wl: int
    ous: int
    iss: int
    ssb: int
    waf: bool

    def __post_init__(self):
        if self.aw < 0 or self.ous < 0:
            raise InvalidParams("aw and ous must be non-negative")
        if self.wl <= 0 or self.iss <= 0 or self.ssb <= 0:
            raise InvalidParams("wl, iss and ssb must be positive")
        if self.waf and self.aw == 0:
            raise InvalidParams("a working area needs aw > 0")


@dataclass(frozen=True)
class Layout:
    """Where the construction keeps its data words and its cell counter."""

    cells: int
    wl: int
    counter_bits: int

    @property
    def data_bits(self) -> int:
        return self.cells * self.wl

    @property
    def ous(self) -> int:
        return self.data_bits + self.counter_bits

    def slot(self, i: int) -> list[Element]:
        return [ou(j) for j in range(i * self.wl, (i + 1) * self.wl)]

    def counter(self) -> list[Element]:
        return [ou(j) for j in range(self.data_bits, self.ous)]


@dataclass
class CompletenessWitness:
    isa: LsIsa
    thread: ThreadHandle
    target: ExtTransformation
    waf: bool
    layout: Layout | None = None


COMPLETENESS_THREAD = """\
X = init . Y
Y = YL <prel> YT
YL = load:0 . YP
YP = postl . Y
YT = trf . Z
Z = ZS <pres> Fin
ZS = store:0 . Z
Fin = stop
"""


def _bits_of(value: int, elems: list[Element]) -> dict[Element, int]:
    return {e: (value >> k) & 1 for k, e in enumerate(elems)}


def _value(v: Mapping[Element, int], elems: list[Element]) -> int:
    return bn({e: v[e] for e in elems})


def completeness_dm(params: IsaParams, lay: Layout, t: ExtTransformation) -> list[DmSpec]:
    """The five data manipulation instructions of the construction.

    Deviations from a literal reading, both needed for the construction to
    work as a strict ISA: ``postl`` stores into the slot of the cell that was
    just loaded (``counter - 1``, since ``prel`` already advanced the counter),
    and on counter overflow ``prel``/``pres`` clear the address and data
    registers they write instead of keeping them, so that no register other
    than the load data register is read.
    """
    ctr = lay.counter()
    n = lay.cells
    slots = [lay.slot(i) for i in range(n)]
    data_bits = [ou(j) for j in range(lay.data_bits)]
    all_ou = data_bits + ctr

    def init(v):
        return {**_bits_of(0, ctr), RR: True}

    def prel(v):
        c = _value(v, ctr)
        if c < n:
            return {**_bits_of(c + 1, ctr), la(0): c, RR: True}
        return {**{e: v[e] for e in ctr}, la(0): 0, RR: False}

    def postl(v):
        c = _value(v, ctr)
        out = {e: v[e] for e in data_bits}
        if 1 <= c <= n:
            out.update(_bits_of(v[ld(0)], slots[c - 1]))
        return {**out, RR: True}

    def pres(v):
        c = _value(v, ctr)
        if c < n:
            return {**_bits_of(c + 1, ctr), sa(0): c, sd(0): _value(v, slots[c]), RR: True}
        return {**{e: v[e] for e in ctr}, sa(0): 0, sd(0): 0, RR: False}

    def trf(v):
        image = t(tuple(_value(v, s) for s in slots))
        out = _bits_of(0, ctr)
        for word, s in zip(image, slots):
            out.update(_bits_of(word, s))
        return {**out, RR: True}

    specs = [
        ("init", ctr + [RR], init),
        ("prel", ctr + [la(0), RR], prel),
        ("postl", data_bits + [RR], postl),
        ("pres", ctr + [sa(0), sd(0), RR], pres),
        ("trf", all_ou + [RR], trf),
    ]
    return [DmSpec(name, tuple(w), dm_table(params, w, fn)) for name, w, fn in specs]


def synthesize_complete(
    aw: int, wl: int, waf: bool, t: ExtTransformation, max_table: int = DEFAULT_MAX_TABLE
) -> CompletenessWitness:
    if waf and aw == 0:
        raise InvalidParams("a working area needs aw > 0")
    cells = ext_cells(aw, waf)
    if (t.cells, t.wl) != (cells, wl):
        raise InvalidParams(f"transformation must act on {cells} cells of {wl} bits")
    lay = Layout(cells, wl, aw if waf else aw + 1)
    n_ext = 2 ** (cells * wl)
    rows = 2 ** (lay.ous + wl)
    if n_ext > max_table or rows > max_table:
        raise SizeExceeded(f"{n_ext} external states / {rows} table rows exceed {max_table}")
    params = IsaParams(aw, wl, lay.ous, 1, 1)
    isa = build_isa(params, completeness_dm(params, lay, t))
    return CompletenessWitness(isa, parse_thread(COMPLETENESS_THREAD), t, waf, lay)


def witness_params(w: CompletenessWitness) -> TpfcParams:
    p = w.isa.params
    return TpfcParams(p.aw, p.wl, p.ous, len(w.isa.dm), len(residuals(w.thread)), w.waf)


def verify_membership(
    params: TpfcParams,
    witness: CompletenessWitness,
    t: ExtTransformation | None = None,
    max_states: int = DEFAULT_MAX_STATES,
) -> Verdict:
    """Does the witness show that ``t`` lies in the class with these parameters?"""
    t = t or witness.target
    isa, p = witness.isa, witness.thread
    ip = isa.params
    name = "membership"
    if (ip.aw, ip.wl, ip.ous, ip.nrpl, ip.nrps) != (params.aw, params.wl, params.ous, 1, 1):
        return Verdict(name, False, f"ISA parameters {ip} do not match {params}")
    if len(isa.dm) != params.iss:
        return Verdict(name, False, f"{len(isa.dm)} data manipulation instructions, need {params.iss}")
    n_res = len(residuals(p))
    if n_res > params.ssb:
        return Verdict(name, False, f"thread has {n_res} states, bound is {params.ssb}")
    m = isa.machine
    m.check_size(max_states)
    ext = [data(i) for i in range(ext_cells(params.aw, params.waf))]
    ex = Executor(p, m)
    for st in m.states():
        final = ex.apply(st)
        if final is UNDEF or m.restrict(final, ext) != t(m.restrict(st, ext)):
            return Verdict(name, False, "wrong external memory result", st)
    return Verdict(name, True, f"{m.n_states} states")


def computation_lengths(witness: CompletenessWitness) -> set[int | None]:
    ex = Executor(witness.thread, witness.isa.machine)
    return {steps for _, _, steps in ex.outcomes(witness.isa.machine.states())}


def trace_invariant_check(witness: CompletenessWitness, st: tuple) -> Verdict:
    """Replay one computation and check the facts that hold at each loop head.

    Milestones are the configurations whose residual is ``X``, ``Y``, ``Z``
    or ``stop``.  With ``n`` external cells they are: ``X`` at 0, ``Y`` at
    1 .. n+1 with the first ``i-1`` slots holding copied cells, ``Z`` at
    n+2 .. 2n+2 with the stored prefix equal to the image, ``stop`` at 2n+3.
    """
    lay = witness.layout
    if lay is None:
        raise ValueError("witness has no layout to check against")
    m = witness.isa.machine
    n = lay.cells
    ext = [data(i) for i in range(n)]
    src = m.restrict(st, ext)
    image = witness.target(src)
    comp = computation(witness.thread, m, st)
    heads = [(str(v), s) for v, s in comp.path if str(v) in ("X", "Y", "Z", "Fin")]

    def counter(s):
        return bn(dict(zip(lay.counter(), m.restrict(s, lay.counter()))))

    def slot(s, j):
        return bn(dict(zip(lay.slot(j), m.restrict(s, lay.slot(j)))))

    expected = ["X"] + ["Y"] * (n + 1) + ["Z"] * (n + 1) + ["Fin"]
    for i, (var, s) in enumerate(heads):
        if i >= len(expected) or var != expected[i]:
            raise MilestoneError(i, f"residual {var}, expected {expected[i] if i < len(expected) else 'end'}")
        if var == "Y":
            if counter(s) != i - 1:
                raise MilestoneError(i, f"counter {counter(s)}, expected {i - 1}")
            for j in range(i - 1):
                if slot(s, j) != src[j]:
                    raise MilestoneError(i, f"slot {j} holds {slot(s, j)}, cell held {src[j]}")
        elif var == "Z":
            c = i - (n + 2)
            if counter(s) != c:
                raise MilestoneError(i, f"counter {counter(s)}, expected {c}")
            if c == 0 and any(slot(s, j) != image[j] for j in range(n)):
                raise MilestoneError(i, "operating unit does not hold the transformed image")
            for j in range(c):
                if s[m.position[ext[j]]] != image[j]:
                    raise MilestoneError(i, f"cell {j} not yet transformed")
        elif var == "Fin" and m.restrict(s, ext) != image:
            raise MilestoneError(i, "final external memory differs from the image")
    if len(heads) != len(expected) or comp.status is not Status.CONVERGED:
        raise MilestoneError(len(heads), f"run ended after {len(heads)} milestones ({comp.status.name})")
    return Verdict("milestones", True, f"{len(heads)} milestones, {comp.length} steps")


# --- operating unit of size zero --------------------------------------------------

@dataclass
class ZeroOuWitness:
    base: CompletenessWitness
    isa: LsIsa
    selector: dict[tuple[int, ...], ThreadHandle]
    verdicts: list[Verdict]

    @property
    def passed(self) -> bool:
        return all(self.verdicts)


def synthesize_zero_ou(aw: int, wl: int, waf: bool, t: ExtTransformation,
                       max_states: int = DEFAULT_MAX_STATES) -> ZeroOuWitness:
    """Completeness with an empty operating unit, by repeated reduction.

    Only the smallest parameter point is allowed; every further bit of
    operating unit multiplies the instruction count by four.
    """
    from .reduce import reduce_to_zero

    if (aw, wl, waf) != (0, 1, False):
        raise SizeExceeded("zero operating unit synthesis is limited to aw=0, wl=1")
    base = synthesize_complete(aw, wl, waf, t)
    z = reduce_to_zero(base.isa, base.thread, max_states)
    ous = base.isa.params.ous
    params = TpfcParams(aw, wl, 0, 5 * 4**ous, 8 * 6**ous, waf)
    verdicts = []
    for key, thread in sorted(z.selector.items()):
        w = CompletenessWitness(z.final, thread, t, waf)
        v = verify_membership(params, w, t, max_states)
        v.check = f"membership ou={''.join(map(str, key))}"
        verdicts.append(v)
    return ZeroOuWitness(base, z.final, z.selector, verdicts)


# --- counting ------------------------------------------------------------------

@dataclass
class IncompletenessCertificate:
    params: TpfcParams
    ems: int
    total_transformations: BigNat
    per_instruction_ops: BigNat
    per_thread_bound: BigNat
    applicable_threads_bound: int
    thread_majorant: int
    achievable_bound: BigNat
    applicable: bool
    reasons: list[str]
    chain: dict[str, bool]

    @property
    def incomplete(self) -> bool:
        return self.applicable and self.achievable_bound < self.total_transformations

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "NOT-APPLICABLE"
        return "INCOMPLETE" if self.incomplete else "UNDECIDED"

    def fields(self) -> dict[str, str]:
        return {
            "ems": str(self.ems),
            "total_transformations": str(self.total_transformations),
            "per_instruction_ops": str(self.per_instruction_ops),
            "per_thread_bound": str(self.per_thread_bound),
            "applicable_threads_bound": str(self.applicable_threads_bound),
            "thread_majorant": str(self.thread_majorant),
            "achievable_bound": str(self.achievable_bound),
        }


def incompleteness_check(params: TpfcParams) -> IncompletenessCertificate:
    """Exact evaluation of the counting argument against completeness.

    With ``h = ems // 2``: at most ``(2^h)^(2^h)`` operations per
    instruction, hence at most that to the power ``2^h`` transformations per
    thread, times the number of threads.  The thread count is taken as
    ``2^ems`` when the thread bound ``((iss+2)*ssb^2+2)^ssb`` does not exceed
    it and as the thread bound itself otherwise.
    """
    aw, wl, ous, iss, ssb = params.aw, params.wl, params.ous, params.iss, params.ssb
    reasons = []
    if not params.waf:
        reasons.append("requires a working area (waf=T)")
    if aw <= 1:
        reasons.append("requires aw > 1")
    ems = 2 ** max(aw - 1, 0) * wl
    h = ems // 2
    if 2 * ous > ems:
        reasons.append(f"ous={ous} exceeds ems/2 (ems={ems})")
    if iss > 2**h:
        reasons.append(f"iss={iss} exceeds 2^(ems/2)")
    total = BigNat.pow2(ems * 2**ems)
    per_instruction = BigNat.pow2(h * 2**h)
    per_thread = BigNat.pow2(h * 2**h * 2**h)
    threads = ((iss + 2) * ssb**2 + 2) ** ssb
    majorant = ((iss + 4) * ssb**2) ** ssb
    chain = {"threads <= majorant": threads <= majorant}
    if wl > 1 and iss <= 2**wl - 4 and 0 < ssb and aw >= 2 and ssb <= 2 ** (aw - 2):
        chain["majorant <= 2^ems"] = majorant <= 2**ems
    few_threads = threads <= 2**ems
    chain["threads <= 2^ems"] = few_threads
    achievable = per_thread * (2**ems if few_threads else threads)
    chain["achievable < total"] = achievable < total
    return IncompletenessCertificate(
        params=params,
        ems=ems,
        total_transformations=total,
        per_instruction_ops=per_instruction,
        per_thread_bound=per_thread,
        applicable_threads_bound=threads,
        thread_majorant=majorant,
        achievable_bound=achievable,
        applicable=not reasons,
        reasons=reasons,
        chain=chain,
    )
