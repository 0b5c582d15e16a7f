"""Applying threads to Maurer machines.

Divergence is decided exactly: the configuration space (residual, state) is
finite, so a computation that revisits a configuration never terminates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .bta import KIND_BRANCH, KIND_STOP, ThreadHandle, Var
from .errors import StepCapExceeded, UnknownAction
from .machine import UNDEF, MaurerMachine, State, state_digest

DEFAULT_STEP_CAP = 10**6


class Status(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    DEADLOCKED = "deadlocked"


@dataclass
class Computation:
    path: list[tuple[Var, State]]
    status: Status
    # number of steps for a converged run; for a divergent run the length of
    # the lasso prefix up to the first repeated configuration
    length: int

    @property
    def final(self):
        if self.status is Status.CONVERGED:
            return self.path[-1][1]
        return UNDEF


def _check_actions(h: ThreadHandle, machine: MaurerMachine) -> None:
    missing = {a for a in h.compiled.actions if a is not None} - machine.actions
    if missing:
        raise UnknownAction(f"thread uses actions unknown to the machine: {sorted(missing)}")


def step_once(cfg: tuple[ThreadHandle, State], machine: MaurerMachine):
    """One step of the step relation, or None from stop/dead residuals."""
    h, st = cfg
    rhs = h.spec[h.root]
    if not hasattr(rhs, "action"):
        return None
    op = machine.operations.get(rhs.action)
    if op is None:
        raise UnknownAction(rhs.action)
    new = op(st)
    reply = new[machine.position[machine.replies[rhs.action]]]
    return h.at(rhs.left if reply else rhs.right), new


def computation(
    h: ThreadHandle, machine: MaurerMachine, st: State, step_cap: int = DEFAULT_STEP_CAP
) -> Computation:
    _check_actions(h, machine)
    c = h.compiled
    ops = [machine.operations[a] if a else None for a in c.actions]
    reply_pos = [machine.position[machine.replies[a]] if a else -1 for a in c.actions]
    i = 0
    path = [(c.variables[0], st)]
    seen = {(0, st)}
    while c.kinds[i] == KIND_BRANCH:
        if len(path) > step_cap:
            raise StepCapExceeded(f"no verdict after {step_cap} steps")
        st = ops[i](st)
        i = c.left[i] if st[reply_pos[i]] else c.right[i]
        cfg = (i, st)
        path.append((c.variables[i], st))
        if cfg in seen:
            return Computation(path, Status.DIVERGED, len(path) - 1)
        seen.add(cfg)
    status = Status.CONVERGED if c.kinds[i] == KIND_STOP else Status.DEADLOCKED
    return Computation(path, status, len(path) - 1)


def trace(h: ThreadHandle, machine: MaurerMachine, st: State, steps: int) -> list[tuple[Var, State]]:
    """The first ``steps`` steps of the full path, without cycle detection."""
    _check_actions(h, machine)
    c = h.compiled
    i = 0
    path = [(c.variables[0], st)]
    while c.kinds[i] == KIND_BRANCH and len(path) <= steps:
        a = c.actions[i]
        st = machine.operations[a].fn(st)
        i = c.left[i] if st[machine.position[machine.replies[a]]] else c.right[i]
        path.append((c.variables[i], st))
    return path


def apply_thread(h: ThreadHandle, machine: MaurerMachine, st, step_cap: int = DEFAULT_STEP_CAP):
    """The state reached by applying ``h`` to ``machine`` from ``st``, or UNDEF."""
    if st is UNDEF:
        return UNDEF
    return computation(h, machine, st, step_cap).final


def format_trace(machine: MaurerMachine, comp: Computation) -> str:
    lines = [f"{i} {var} {state_digest(machine, st)}" for i, (var, st) in enumerate(comp.path)]
    if comp.status is Status.CONVERGED:
        lines.append(f"CONVERGED {comp.length}")
    else:
        lines.append(f"{comp.status.name} {comp.length}")
    return "\n".join(lines) + "\n"


class Executor:
    """Runs one thread on one machine from many initial states.

    Outcomes are memoized per configuration, so runs that merge (for example
    after the thread overwrites garbage registers) are only simulated once.
    Each outcome is ``(final_state_or_UNDEF, steps)`` where ``steps`` is
    ``None`` unless the run converged.
    """

    def __init__(self, h: ThreadHandle, machine: MaurerMachine, step_cap: int = DEFAULT_STEP_CAP):
        _check_actions(h, machine)
        self.thread = h
        self.machine = machine
        self.step_cap = step_cap
        c = h.compiled
        self._c = c
        self._fns = [machine.operations[a].fn if a else None for a in c.actions]
        self._reply = [machine.position[machine.replies[a]] if a else -1 for a in c.actions]
        self._memo: dict[tuple[int, State], tuple] = {}

    def run(self, st: State, start: int = 0) -> tuple:
        memo = self._memo
        cfg = (start, st)
        if cfg in memo:
            return memo[cfg]
        kinds, left, right = self._c.kinds, self._c.left, self._c.right
        fns, reply = self._fns, self._reply
        path = []
        on_path = set()
        i = start
        while True:
            cfg = (i, st)
            hit = memo.get(cfg)
            if hit is not None:
                result = hit
                break
            if cfg in on_path:
                result = (UNDEF, None)
                break
            kind = kinds[i]
            if kind != KIND_BRANCH:
                result = (st, 0) if kind == KIND_STOP else (UNDEF, None)
                memo[cfg] = result
                break
            path.append(cfg)
            on_path.add(cfg)
            if len(path) > self.step_cap:
                raise StepCapExceeded(f"no verdict after {self.step_cap} steps")
            st = fns[i](st)
            i = left[i] if st[reply[i]] else right[i]
        final, steps = result
        if steps is None:
            for p in path:
                memo[p] = result
        else:
            n = len(path)
            for j, p in enumerate(path):
                memo[p] = (final, steps + n - j)
        return memo[path[0]] if path else result

    def apply(self, st: State):
        return self.run(st)[0]

    def outcomes(self, states: Iterable[State]) -> Iterable[tuple[State, object, int | None]]:
        for st in states:
            final, steps = self.run(st)
            yield st, final, steps
