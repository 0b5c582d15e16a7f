"""Regular threads: basic thread algebra with linear recursive specifications.

A thread is given as a :class:`ThreadHandle`, i.e. a root variable together
with a :class:`LinearSpec` whose right-hand sides are ``stop``, ``dead`` or a
postconditional ``Y <a> Z``.  Closed terms built from :data:`STOP`,
:data:`DEAD` and :class:`Post` can be turned into handles with
:func:`linearize`.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Union

from .errors import ParseError

_VAR_RE = re.compile(r"([A-Za-z][A-Za-z0-9]*)((?:'*_\d+)*)$")
_SUFFIX_RE = re.compile(r"('*)_(\d+)")


@dataclass(frozen=True, order=True)
class Var:
    """Recursion variable.

    ``path`` records the derivations applied to ``base``; each entry is a
    ``(subscript, primes)`` pair, so ``Var("X").derive(0, 1)`` prints as
    ``X'_0``.  Derived names of distinct variables never collide.
    """

    base: str
    path: tuple[tuple[int, int], ...] = ()

    def derive(self, subscript: int, primes: int = 0) -> Var:
        return Var(self.base, self.path + ((subscript, primes),))

    def __str__(self) -> str:
        return self.base + "".join("'" * p + f"_{k}" for k, p in self.path)

    @classmethod
    def parse(cls, text: str) -> Var:
        m = _VAR_RE.match(text.strip())
        if m is None:
            raise ParseError(f"bad variable name {text!r}")
        path = tuple((int(k), len(p)) for p, k in _SUFFIX_RE.findall(m.group(2)))
        return cls(m.group(1), path)


# --- terms -------------------------------------------------------------------

@dataclass(frozen=True)
class Stop:
    def __repr__(self) -> str:
        return "S"


@dataclass(frozen=True)
class Dead:
    def __repr__(self) -> str:
        return "D"


STOP = Stop()
DEAD = Dead()


@dataclass(frozen=True)
class Post:
    """Postconditional composition ``left <action> right``."""

    left: "Term"
    action: str
    right: "Term"

    def __repr__(self) -> str:
        return f"({self.left!r} <{self.action}> {self.right!r})"


@dataclass(frozen=True)
class Ref:
    var: Var


def prefix(action: str, term: "Term") -> Post:
    """Action prefixing ``action . term``."""
    return Post(term, action, term)


# --- linear specifications ---------------------------------------------------

@dataclass(frozen=True)
class Branch:
    """Right-hand side ``left <action> right`` of a linear equation."""

    left: Var
    action: str
    right: Var


Rhs = Union[Stop, Dead, Branch]


class LinearSpec(Mapping[Var, Rhs]):
    """Immutable finite map from variables to linear right-hand sides."""

    def __init__(self, equations: Mapping[Var, Rhs]):
        eqs = dict(equations)
        if not eqs:
            raise ValueError("a linear specification needs at least one equation")
        for var, rhs in eqs.items():
            if isinstance(rhs, Branch):
                for target in (rhs.left, rhs.right):
                    if target not in eqs:
                        raise ValueError(f"{var} refers to undefined variable {target}")
            elif not isinstance(rhs, (Stop, Dead)):
                raise TypeError(f"not a linear right-hand side: {rhs!r}")
        self._eqs = eqs
        self._hash = hash(frozenset(eqs.items()))

    def __getitem__(self, var: Var) -> Rhs:
        return self._eqs[var]

    def __iter__(self) -> Iterator[Var]:
        return iter(self._eqs)

    def __len__(self) -> int:
        return len(self._eqs)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearSpec):
            return NotImplemented
        return self._hash == other._hash and self._eqs == other._eqs

    def __repr__(self) -> str:
        return f"LinearSpec({self._eqs!r})"

    def actions(self) -> set[str]:
        return {rhs.action for rhs in self._eqs.values() if isinstance(rhs, Branch)}


@dataclass(frozen=True)
class Compiled:
    """Index-based view of a handle used by the simulators."""

    variables: tuple[Var, ...]
    kinds: tuple[int, ...]          # 0 stop, 1 dead, 2 branch
    actions: tuple[str | None, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]


KIND_STOP, KIND_DEAD, KIND_BRANCH = 0, 1, 2


@dataclass(frozen=True)
class ThreadHandle:
    """The thread ``<root | spec>``."""

    root: Var
    spec: LinearSpec

    def __post_init__(self):
        if self.root not in self.spec:
            raise ValueError(f"root {self.root} has no equation")

    def at(self, var: Var) -> ThreadHandle:
        return ThreadHandle(var, self.spec)

    @property
    def rhs(self) -> Rhs:
        return self.spec[self.root]

    def reachable(self) -> list[Var]:
        """Variables reachable from the root, in breadth-first order."""
        seen = {self.root: None}
        queue = deque([self.root])
        while queue:
            rhs = self.spec[queue.popleft()]
            if isinstance(rhs, Branch):
                for nxt in (rhs.left, rhs.right):
                    if nxt not in seen:
                        seen[nxt] = None
                        queue.append(nxt)
        return list(seen)

    @cached_property
    def compiled(self) -> Compiled:
        # the root is always index 0
        order = self.reachable()
        index = {v: i for i, v in enumerate(order)}
        kinds, actions, left, right = [], [], [], []
        for v in order:
            rhs = self.spec[v]
            if isinstance(rhs, Branch):
                kinds.append(KIND_BRANCH)
                actions.append(rhs.action)
                left.append(index[rhs.left])
                right.append(index[rhs.right])
            else:
                kinds.append(KIND_STOP if isinstance(rhs, Stop) else KIND_DEAD)
                actions.append(None)
                left.append(-1)
                right.append(-1)
        return Compiled(tuple(order), tuple(kinds), tuple(actions), tuple(left), tuple(right))

    def __str__(self) -> str:
        return format_thread(self)


STOP_HANDLE = ThreadHandle(Var("S"), LinearSpec({Var("S"): STOP}))
DEAD_HANDLE = ThreadHandle(Var("D"), LinearSpec({Var("D"): DEAD}))


def residuals(h: ThreadHandle) -> set[ThreadHandle]:
    """Reachable residual threads; all stop (dead) residuals count as one."""
    out = set()
    for v in h.reachable():
        rhs = h.spec[v]
        if isinstance(rhs, Stop):
            out.add(STOP_HANDLE)
        elif isinstance(rhs, Dead):
            out.add(DEAD_HANDLE)
        else:
            out.add(h.at(v))
    return out


def project(n: int, h: ThreadHandle) -> Stop | Dead | Post:
    """Approximation of ``h`` up to depth ``n``.

    Shared sub-approximations are returned as the same object, so the result
    is a DAG of size at most ``n * card(spec)``.
    """
    memo: dict[tuple[Var, int], Stop | Dead | Post] = {}

    def go(v: Var, depth: int):
        if depth == 0:
            return DEAD
        key = (v, depth)
        if key not in memo:
            rhs = h.spec[v]
            if isinstance(rhs, Branch):
                memo[key] = Post(go(rhs.left, depth - 1), rhs.action, go(rhs.right, depth - 1))
            else:
                memo[key] = rhs
        return memo[key]

    return go(h.root, n)


def bisimilar(h1: ThreadHandle, h2: ThreadHandle) -> bool:
    """Decide equality of two regular threads.

    Both residual graphs are deterministic, so it suffices to explore the
    pairs reachable from the two roots and check that paired equations have
    the same shape and action.
    """
    seen = {(h1.root, h2.root)}
    queue = deque(seen)
    while queue:
        v1, v2 = queue.popleft()
        r1, r2 = h1.spec[v1], h2.spec[v2]
        if isinstance(r1, Branch) and isinstance(r2, Branch):
            if r1.action != r2.action:
                return False
            for pair in ((r1.left, r2.left), (r1.right, r2.right)):
                if pair not in seen:
                    seen.add(pair)
                    queue.append(pair)
        elif type(r1) is not type(r2):
            return False
    return True


Term = Union[Stop, Dead, Post, ThreadHandle]


def linearize(term: Term, base: str = "X") -> ThreadHandle:
    """Turn a closed term into an equivalent linear specification.

    Structurally equal subterms share one equation.  Embedded handles are
    copied in with their variables renamed apart.
    """
    if isinstance(term, ThreadHandle):
        return term
    eqs: dict[Var, Rhs] = {}
    names: dict[object, Var] = {}
    counter = 0

    def fresh() -> Var:
        nonlocal counter
        v = Var(f"{base}{counter}")
        counter += 1
        return v

    def embed(h: ThreadHandle) -> Var:
        rename = {v: fresh() for v in h.reachable()}
        for old, new in rename.items():
            rhs = h.spec[old]
            if isinstance(rhs, Branch):
                rhs = Branch(rename[rhs.left], rhs.action, rename[rhs.right])
            eqs[new] = rhs
        return rename[h.root]

    def go(t: Term) -> Var:
        if t in names:
            return names[t]
        if isinstance(t, ThreadHandle):
            v = embed(t)
        elif isinstance(t, Post):
            v = fresh()
            names[t] = v
            eqs[v] = Branch(go(t.left), t.action, go(t.right))
            return v
        elif isinstance(t, (Stop, Dead)):
            v = fresh()
            eqs[v] = t
        else:
            raise TypeError(f"not a closed thread term: {t!r}")
        names[t] = v
        return v

    root = go(term)
    return ThreadHandle(root, LinearSpec(eqs))


def handle(equations: Mapping[str, str] | str, root: str | None = None) -> ThreadHandle:
    """Convenience constructor from the textual equation format."""
    if isinstance(equations, str):
        return parse_thread(equations)
    text = "\n".join(f"{k} = {v}" for k, v in equations.items())
    if root is not None:
        text = f"root {root}\n" + text
    return parse_thread(text)


# --- textual format ----------------------------------------------------------

_BRANCH_RE = re.compile(r"^(\S+)\s*<([^<>]+)>\s*(\S+)$")
_PREFIX_RE = re.compile(r"^(\S+)\s+\.\s+(\S+)$")


def parse_thread(text: str) -> ThreadHandle:
    root = None
    eqs: dict[Var, Rhs] = {}
    first = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("root "):
            root = Var.parse(line[5:])
            continue
        lhs, sep, rhs_text = line.partition("=")
        if not sep:
            raise ParseError(f"line {lineno}: expected an equation, got {raw!r}")
        var = Var.parse(lhs)
        rhs_text = rhs_text.strip()
        if rhs_text == "stop":
            rhs: Rhs = STOP
        elif rhs_text == "dead":
            rhs = DEAD
        elif m := _BRANCH_RE.match(rhs_text):
            rhs = Branch(Var.parse(m.group(1)), m.group(2).strip(), Var.parse(m.group(3)))
        elif m := _PREFIX_RE.match(rhs_text):
            target = Var.parse(m.group(2))
            rhs = Branch(target, m.group(1), target)
        else:
            raise ParseError(f"line {lineno}: cannot parse right-hand side {rhs_text!r}")
        if var in eqs:
            raise ParseError(f"line {lineno}: duplicate equation for {var}")
        eqs[var] = rhs
        first = first or var
    if first is None:
        raise ParseError("no equations")
    try:
        return ThreadHandle(root or first, LinearSpec(eqs))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def format_thread(h: ThreadHandle) -> str:
    """Canonical text: root equation first, the rest in variable order."""
    def line(v: Var) -> str:
        rhs = h.spec[v]
        if isinstance(rhs, Stop):
            body = "stop"
        elif isinstance(rhs, Dead):
            body = "dead"
        else:
            body = f"{rhs.left} <{rhs.action}> {rhs.right}"
        return f"{v} = {body}"

    rest = sorted(v for v in h.spec if v != h.root)
    return "\n".join([line(h.root)] + [line(v) for v in rest]) + "\n"


def random_thread(
    rng,
    actions: list[str],
    size: int,
    first_action: str | None = None,
    p_stop: float = 0.2,
    p_dead: float = 0.05,
) -> ThreadHandle:
    """Random linear specification with ``size`` equations rooted at ``X0``."""
    names = [Var(f"X{i}") for i in range(size)]
    eqs: dict[Var, Rhs] = {}
    for i, v in enumerate(names):
        r = rng.random()
        if i == 0 and first_action is not None:
            eqs[v] = Branch(rng.choice(names), first_action, rng.choice(names))
        elif r < p_stop:
            eqs[v] = STOP
        elif r < p_stop + p_dead:
            eqs[v] = DEAD
        else:
            eqs[v] = Branch(rng.choice(names), rng.choice(actions), rng.choice(names))
    return ThreadHandle(names[0], LinearSpec(eqs))
