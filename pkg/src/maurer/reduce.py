"""Operating unit size reduction.

Removing the top operating unit bit ``bc`` from a strict load/store ISA is
compensated for by splitting every data manipulation instruction ``a`` into
four: ``a(k)`` behaves like ``a`` with ``bc`` fixed to ``k``, and ``a~(k)``
only replies with the value ``a`` would have left in ``bc``.  A thread is
transformed into one thread per initial value of ``bc`` that keeps track of
the missing bit in its control state.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .bta import Branch, LinearSpec, Rhs, ThreadHandle, Var, residuals
from .errors import InvalidParams, UnknownAction
from .execution import Executor, Status, computation, trace
from .isa import DmSpec, LsIsa, build_isa
from .machine import (
    DEFAULT_MAX_STATES, RR, UNDEF, Element, Verdict, input_region, ou, output_region,
)


def fixed_name(action: str, k: int) -> str:
    return f"{action}({k})"


def bar_name(action: str, k: int) -> str:
    return f"{action}~({k})"


@dataclass
class ReductionResult:
    original: LsIsa
    reduced: LsIsa
    instr_map: dict[str, tuple[str, str, str, str]]
    missing: Element

    def transform(self, p: ThreadHandle, k: int, optimize: bool = False) -> ThreadHandle:
        plain = bc_free_actions(self) if optimize else frozenset()
        return transform_thread(p, k, self.original.dm_actions, plain, self.original.actions)


def reduce_instruction_set(isa: LsIsa) -> ReductionResult:
    params = isa.params
    if params.ous == 0:
        raise InvalidParams("the operating unit is already empty")
    top = params.ous - 1
    bc = ou(top)
    small = dataclasses.replace(params, ous=top)
    dm: list[DmSpec] = []
    instr_map = {}
    for spec in isa.dm:
        keep = [i for i, e in enumerate(spec.writes) if e != bc]
        writes = tuple(spec.writes[i] for i in keep)
        bc_col = spec.writes.index(bc) if bc in spec.writes else None
        fixed: dict[int, dict] = {0: {}, 1: {}}
        bars: dict[int, dict] = {0: {}, 1: {}}
        for key in _keys(small):
            for k in (0, 1):
                row = spec.table[key[:top] + (k,) + key[top:]]
                fixed[k][key] = tuple(row[i] for i in keep)
                new_bc = k if bc_col is None else row[bc_col]
                bars[k][key] = (new_bc == 1,)
        names = (fixed_name(spec.name, 0), fixed_name(spec.name, 1),
                 bar_name(spec.name, 0), bar_name(spec.name, 1))
        instr_map[spec.name] = names
        dm += [DmSpec(names[0], writes, fixed[0]), DmSpec(names[1], writes, fixed[1]),
               DmSpec(names[2], (RR,), bars[0]), DmSpec(names[3], (RR,), bars[1])]
    return ReductionResult(isa, build_isa(small, dm), instr_map, bc)


def _keys(params):
    doms = params.domains()
    return itertools.product(*(doms[e] for e in params.dm_inputs()))


def bc_free_actions(result: ReductionResult, max_states: int = DEFAULT_MAX_STATES) -> frozenset[str]:
    """Data manipulation actions that neither read nor write the missing bit.

    Only these may be kept as single steps by the optimized transformation:
    an action that writes the bit without reading it still changes which
    transformed copy must continue.
    """
    m = result.original.machine
    out = set()
    for name in result.original.dm_actions:
        op = m.operations[name]
        oreg = output_region(m, op, max_states)
        ireg = input_region(m, op, max_states, oreg)
        if result.missing not in ireg | oreg:
            out.add(name)
    return frozenset(out)


def transform_thread(
    p: ThreadHandle,
    k: int,
    dm_actions: Iterable[str],
    plain: Iterable[str] = (),
    actions: Iterable[str] | None = None,
) -> ThreadHandle:
    """The transformed thread for initial missing-bit value ``k``.

    Every equation yields its copies for both bit values, since a branch on
    the missing bit switches between them.  Only the part reachable from
    the root is kept.
    """
    dm_actions, plain = set(dm_actions), set(plain)
    if actions is not None:
        unknown = p.spec.actions() - set(actions)
        if unknown:
            raise UnknownAction(f"not an action of the original ISA: {sorted(unknown)}")
    eqs: dict[Var, Rhs] = {}
    for x, rhs in p.spec.items():
        for j in (0, 1):
            xj = x.derive(j)
            if not isinstance(rhs, Branch):
                eqs[xj] = rhs
            elif rhs.action not in dm_actions:
                eqs[xj] = Branch(rhs.left.derive(j), rhs.action, rhs.right.derive(j))
            elif rhs.action in plain:
                eqs[xj] = Branch(rhs.left.derive(j), fixed_name(rhs.action, j), rhs.right.derive(j))
            else:
                x1, x2 = x.derive(j, 1), x.derive(j, 2)
                a = fixed_name(rhs.action, j)
                eqs[xj] = Branch(x1, bar_name(rhs.action, j), x2)
                eqs[x1] = Branch(rhs.left.derive(1), a, rhs.right.derive(1))
                eqs[x2] = Branch(rhs.left.derive(0), a, rhs.right.derive(0))
    full = ThreadHandle(p.root.derive(k), LinearSpec(eqs))
    return ThreadHandle(full.root, LinearSpec({v: eqs[v] for v in full.reachable()}))


# --- verification --------------------------------------------------------------

def pair_set(h: ThreadHandle, isa: LsIsa, states: Iterable[tuple]) -> set[tuple]:
    """``{(S|data, (h . S)|data)}`` with UNDEF kept as UNDEF."""
    m = isa.machine
    cells = isa.data_elements()
    ex = Executor(h, m)
    return {(m.restrict(st, cells), m.restrict(final, cells)) for st, final, _ in ex.outcomes(states)}


@dataclass
class ReductionReport:
    verdicts: list[Verdict] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def __bool__(self) -> bool:
        return self.passed


def _drop(st: tuple, pos: int) -> tuple:
    return st[:pos] + st[pos + 1:]


def verify_reduction_equivalence(
    result: ReductionResult,
    p: ThreadHandle,
    pair: tuple[ThreadHandle, ThreadHandle],
    max_states: int = DEFAULT_MAX_STATES,
    lockstep: bool = True,
    plain: Iterable[str] = (),
) -> ReductionReport:
    """Exhaustively compare data memory behaviour before and after reduction.

    Besides the two set equalities this checks the step bound per initial
    state and, when ``lockstep`` is set, replays every run side by side to
    confirm that control and state stay aligned and that the two split
    instructions deliver the missing bit and the original reply.
    """
    H, Hr = result.original, result.reduced
    m, mr = H.machine, Hr.machine
    m.check_size(max_states)
    bc_pos = m.position[result.missing]
    cells = H.data_elements()
    report = ReductionReport()
    ex = Executor(p, m)
    red_ex = [Executor(pair[0], mr), Executor(pair[1], mr)]
    orig_pairs = {0: set(), 1: set()}
    step_ok, worst = True, (0, 0)
    for st in m.states():
        k = st[bc_pos]
        final, steps = ex.run(st)
        small = _drop(st, bc_pos)
        rfinal, rsteps = red_ex[k].run(small)
        orig_pairs[k].add((m.restrict(st, cells), m.restrict(final, cells)))
        if (steps is None) != (rsteps is None):
            step_ok = False
        elif steps is not None:
            if rsteps > 2 * steps:
                step_ok = False
            if steps and rsteps * worst[1] > worst[0] * steps:
                worst = (rsteps, steps)
    for k in (0, 1):
        red_pairs = {(mr.restrict(s, cells), mr.restrict(f, cells))
                     for s, f, _ in red_ex[k].outcomes(mr.states())}
        same = red_pairs == orig_pairs[k]
        report.counts[f"pairs_k{k}"] = len(orig_pairs[k])
        report.counts[f"pairs_reduced_k{k}"] = len(red_pairs)
        report.verdicts.append(Verdict(f"equivalence k={k}", same,
                                       f"{len(orig_pairs[k])} vs {len(red_pairs)} pairs"))
    n_dm, n_red = len(H.dm), len(Hr.dm)
    report.counts.update(dm=n_dm, dm_reduced=n_red)
    report.verdicts.append(Verdict("instructions 4x", n_red == 4 * n_dm, f"{n_red} = 4*{n_dm}"))
    res = len(residuals(p))
    for k in (0, 1):
        rk = len(residuals(pair[k]))
        report.counts[f"residuals_k{k}"] = rk
        report.verdicts.append(Verdict(f"states 6x k={k}", rk <= 6 * res, f"{rk} <= 6*{res}"))
    report.counts["residuals"] = res
    report.verdicts.append(Verdict("steps 2x", step_ok, f"worst ratio {worst[0]}/{worst[1]}"))
    if lockstep:
        bad = None
        for st in m.states():
            problem = lockstep_replay(result, p, pair[st[bc_pos]], st, plain)
            if problem:
                bad = (st, problem)
                break
        report.verdicts.append(Verdict("lockstep facts", bad is None,
                                       bad[1] if bad else f"{m.n_states} runs replayed",
                                       bad[0] if bad else None))
    return report


def lockstep_replay(result: ReductionResult, p: ThreadHandle, pk: ThreadHandle,
                    st: tuple, plain: Iterable[str] = ()) -> str | None:
    """Replay one run on both machines; return a description of the first mismatch."""
    H, Hr = result.original, result.reduced
    m, mr = H.machine, Hr.machine
    bc_pos = m.position[result.missing]
    rr_pos, rr_pos_r = m.position[RR], mr.position[RR]
    dm, plain = H.dm_actions, set(plain)
    orig = computation(p, m, st)
    red = computation(pk, mr, _drop(st, bc_pos))
    if (orig.status is Status.CONVERGED) != (red.status is Status.CONVERGED):
        return f"original {orig.status.name}, reduced {red.status.name}"
    # a reduced lasso may close earlier than the original one, so follow it
    # for as many steps as the original path can need
    red_path = trace(pk, mr, _drop(st, bc_pos), 2 * len(orig.path))
    # positions in the reduced path that are not the middle of a split step
    marks = [j for j, (v, _) in enumerate(red_path) if v.path[-1][1] == 0]
    n = min(len(orig.path), len(marks))
    for i in range(n):
        var, s_i = orig.path[i]
        j = marks[i]
        rvar, rs = red_path[j]
        b = s_i[bc_pos]
        if rvar != var.derive(b):
            return f"step {i}: control {rvar} is not {var.derive(b)}"
        # rr sorts last in both memories
        if _drop(s_i, bc_pos)[:-1] != rs[:-1]:
            return f"step {i}: states differ outside rr"
        if i + 1 < len(orig.path):
            action = p.spec[var].action
            if action in dm and action not in plain:
                if j + 2 >= len(red_path):
                    return f"step {i}: reduced run ends inside a split step"
                nxt = orig.path[i + 1][1]
                reply_bar = red_path[j + 1][1][rr_pos_r]
                reply_fix = red_path[j + 2][1][rr_pos_r]
                if reply_bar != (nxt[bc_pos] == 1):
                    return f"step {i}: {bar_name(action, b)} replied {reply_bar}"
                if reply_fix != nxt[rr_pos]:
                    return f"step {i}: {fixed_name(action, b)} replied {reply_fix}"
    return None


# --- iterated reduction ----------------------------------------------------------

@dataclass
class ZeroReduction:
    original: LsIsa
    final: LsIsa
    selector: dict[tuple[int, ...], ThreadHandle]
    chain: list[ReductionResult]


def reduce_to_zero(isa: LsIsa, p: ThreadHandle, max_states: int = DEFAULT_MAX_STATES) -> ZeroReduction:
    """Reduce the operating unit to nothing.

    The selector is keyed by the initial operating unit contents
    ``(ou[0], ..., ou[ous-1])``.
    """
    isa.machine.check_size(max_states)
    threads: dict[tuple[int, ...], ThreadHandle] = {(): p}
    cur = isa
    chain = []
    for _ in range(isa.params.ous):
        res = reduce_instruction_set(cur)
        chain.append(res)
        threads = {
            (k,) + key: res.transform(t, k)
            for key, t in threads.items()
            for k in (0, 1)
        }
        cur = res.reduced
    return ZeroReduction(isa, cur, threads, chain)


def verify_zero_reduction(z: ZeroReduction, p: ThreadHandle) -> list[Verdict]:
    m = z.original.machine
    ou_elems = [ou(i) for i in range(z.original.params.ous)]
    groups: dict[tuple, list] = {}
    for st in m.states():
        groups.setdefault(m.restrict(st, ou_elems), []).append(st)
    out = []
    for key, thread in sorted(z.selector.items()):
        want = pair_set(p, z.original, groups[key])
        got = pair_set(thread, z.final, z.final.machine.states())
        out.append(Verdict(f"ou={''.join(map(str, key)) or '-'}", want == got,
                           f"{len(want)} vs {len(got)} pairs"))
    return out


def single_thread_sufficiency(result: ReductionResult, p: ThreadHandle,
                              max_states: int = DEFAULT_MAX_STATES) -> ThreadHandle | None:
    """One transformed thread covering every initial value of the missing bit.

    Requires that the first action of ``p`` does not read the missing bit.
    The candidate copies are checked exhaustively against the unsplit pair
    set and the first one that matches is returned; None if the hypothesis
    fails or neither copy matches.
    """
    rhs = p.rhs
    if not isinstance(rhs, Branch):
        return None
    m = result.original.machine
    op = m.operations.get(rhs.action)
    if op is None:
        raise UnknownAction(rhs.action)
    if result.missing in input_region(m, op, max_states):
        return None
    want = pair_set(p, result.original, m.states())
    for k in (0, 1):
        cand = result.transform(p, k)
        if pair_set(cand, result.reduced, result.reduced.machine.states()) == want:
            return cand
    return None
