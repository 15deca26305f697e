"""Parsing, normalisation and structural analysis of modal mu-calculus formulas.

The core representation is negation normal form: negation occurs only on
propositions.  Normalised formulas are clean (binder names pairwise distinct
and distinct from proposition names), irredundant (every bound variable occurs
free in its body) and right-nested across ``&`` and ``|``.

Besides the surface grammar this module provides the unfolding closure of a
formula, alternation levels/depth of the closure items, and the fragment
checks (guarded / clean / irredundant / weakly aconjunctive) that the
satisfiability pipeline relies on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional

DEFAULT_ACTION = "_"


# ---------------------------------------------------------------------------
# Core AST (negation normal form)
# ---------------------------------------------------------------------------

class Formula:
    """Base class of NNF formulas; equality and hashing use the printed form."""

    __slots__ = ("_str", "_hash")

    def _render(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        s = getattr(self, "_str", None)
        if s is None:
            s = self._render()
            object.__setattr__(self, "_str", s)
        return s

    def __repr__(self) -> str:
        return str(self)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, Formula) and type(other) is type(self) and str(other) == str(self)

    def __hash__(self) -> int:
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash((type(self).__name__, str(self)))
            object.__setattr__(self, "_hash", h)
        return h

    def __lt__(self, other: "Formula") -> bool:
        return str(self) < str(other)


class Bot(Formula):
    __slots__ = ()

    def _render(self):
        return "false"


class Top(Formula):
    __slots__ = ()

    def _render(self):
        return "true"


class Prop(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _render(self):
        return self.name


class NegProp(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _render(self):
        return "~" + self.name


class Var(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _render(self):
        return self.name


class And(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def _render(self):
        return " & ".join(_paren(c, _PREC_AND) for c in flatten_and(self))


class Or(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def _render(self):
        return " | ".join(_paren(c, _PREC_OR) for c in flatten_or(self))


class Diamond(Formula):
    __slots__ = ("action", "arg")

    def __init__(self, action: str, arg: Formula):
        object.__setattr__(self, "action", action)
        object.__setattr__(self, "arg", arg)

    def _render(self):
        label = "" if self.action == DEFAULT_ACTION else self.action
        return "<%s> %s" % (label, _paren(self.arg, _PREC_UNARY))


class Box(Formula):
    __slots__ = ("action", "arg")

    def __init__(self, action: str, arg: Formula):
        object.__setattr__(self, "action", action)
        object.__setattr__(self, "arg", arg)

    def _render(self):
        label = "" if self.action == DEFAULT_ACTION else self.action
        return "[%s] %s" % (label, _paren(self.arg, _PREC_UNARY))


class Mu(Formula):
    __slots__ = ("var", "arg")

    def __init__(self, var: str, arg: Formula):
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "arg", arg)

    def _render(self):
        return "mu %s. %s" % (self.var, self.arg)


class Nu(Formula):
    __slots__ = ("var", "arg")

    def __init__(self, var: str, arg: Formula):
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "arg", arg)

    def _render(self):
        return "nu %s. %s" % (self.var, self.arg)


_PREC_BINDER = 0
_PREC_IFF = 1
_PREC_IMPLIES = 2
_PREC_OR = 3
_PREC_AND = 4
_PREC_UNARY = 5


def _prec(f: Formula) -> int:
    if isinstance(f, (Mu, Nu)):
        return _PREC_BINDER
    if isinstance(f, Or):
        return _PREC_OR
    if isinstance(f, And):
        return _PREC_AND
    return _PREC_UNARY


def _paren(f: Formula, ctx: int) -> str:
    s = str(f)
    return "(" + s + ")" if _prec(f) < ctx else s


def flatten_and(f: Formula) -> list:
    parts = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.right)
            stack.append(g.left)
        else:
            parts.append(g)
    return parts


def flatten_or(f: Formula) -> list:
    parts = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Or):
            stack.append(g.right)
            stack.append(g.left)
        else:
            parts.append(g)
    return parts


def and_of(parts: Iterable[Formula]) -> Formula:
    """Right-nested conjunction of the given parts (must be nonempty)."""
    parts = list(parts)
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def or_of(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


@lru_cache(maxsize=None)
def free_vars(f: Formula) -> frozenset:
    if isinstance(f, Var):
        return frozenset((f.name,))
    if isinstance(f, (And, Or)):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Diamond, Box)):
        return free_vars(f.arg)
    if isinstance(f, (Mu, Nu)):
        return free_vars(f.arg) - {f.var}
    return frozenset()


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformula occurrences of f, preorder (a tree may repeat)."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        if isinstance(g, (And, Or)):
            stack.append(g.right)
            stack.append(g.left)
        elif isinstance(g, (Diamond, Box, Mu, Nu)):
            stack.append(g.arg)


def substitute(f: Formula, var: str, g: Formula) -> Formula:
    """Replace free occurrences of var by g (no capture in clean formulas)."""
    if isinstance(f, Var):
        return g if f.name == var else f
    if isinstance(f, And):
        return And(substitute(f.left, var, g), substitute(f.right, var, g))
    if isinstance(f, Or):
        return Or(substitute(f.left, var, g), substitute(f.right, var, g))
    if isinstance(f, Diamond):
        return Diamond(f.action, substitute(f.arg, var, g))
    if isinstance(f, Box):
        return Box(f.action, substitute(f.arg, var, g))
    if isinstance(f, Mu):
        return f if f.var == var else Mu(f.var, substitute(f.arg, var, g))
    if isinstance(f, Nu):
        return f if f.var == var else Nu(f.var, substitute(f.arg, var, g))
    return f


def actions_of(f: Formula) -> frozenset:
    acts = set()
    for g in subformulas(f):
        if isinstance(g, (Diamond, Box)):
            acts.add(g.action)
    return frozenset(acts)


def propositions_of(f: Formula) -> frozenset:
    props = set()
    for g in subformulas(f):
        if isinstance(g, (Prop, NegProp)):
            props.add(g.name)
    return frozenset(props)


# ---------------------------------------------------------------------------
# Surface syntax
# ---------------------------------------------------------------------------

class Surface:
    """Input-level formulas: full negation, implications and CTL shorthands."""

    __slots__ = ()

    def __str__(self):
        return _render_surface(self, 0)

    def __repr__(self):
        return str(self)

    def __eq__(self, other):
        return type(other) is type(self) and str(other) == str(self)

    def __hash__(self):
        return hash((type(self).__name__, str(self)))


@dataclass(frozen=True, repr=False, eq=False)
class STrue(Surface):
    pass


@dataclass(frozen=True, repr=False, eq=False)
class SFalse(Surface):
    pass


@dataclass(frozen=True, repr=False, eq=False)
class SName(Surface):
    name: str


@dataclass(frozen=True, repr=False, eq=False)
class SNot(Surface):
    arg: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SAnd(Surface):
    left: Surface
    right: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SOr(Surface):
    left: Surface
    right: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SImplies(Surface):
    left: Surface
    right: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SIff(Surface):
    left: Surface
    right: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SDiamond(Surface):
    action: Optional[str]
    arg: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SBox(Surface):
    action: Optional[str]
    arg: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SMu(Surface):
    var: str
    arg: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SNu(Surface):
    var: str
    arg: Surface


@dataclass(frozen=True, repr=False, eq=False)
class SCtl(Surface):
    op: str  # AG | AF | EF | EG
    arg: Surface


_SURF_PREC = {
    SIff: _PREC_IFF,
    SImplies: _PREC_IMPLIES,
    SOr: _PREC_OR,
    SAnd: _PREC_AND,
}


def _sprec(f: Surface) -> int:
    if isinstance(f, (SMu, SNu)):
        return _PREC_BINDER
    return _SURF_PREC.get(type(f), _PREC_UNARY)


def _sparen(f: Surface, ctx: int) -> str:
    s = _render_surface(f, 0)
    return "(" + s + ")" if _sprec(f) < ctx else s


def _render_surface(f: Surface, ctx: int) -> str:
    if isinstance(f, STrue):
        return "true"
    if isinstance(f, SFalse):
        return "false"
    if isinstance(f, SName):
        return f.name
    if isinstance(f, SNot):
        return "~" + _sparen(f.arg, _PREC_UNARY)
    if isinstance(f, SAnd):
        return "%s & %s" % (_sparen(f.left, _PREC_AND), _sparen(f.right, _PREC_AND))
    if isinstance(f, SOr):
        return "%s | %s" % (_sparen(f.left, _PREC_OR), _sparen(f.right, _PREC_OR))
    if isinstance(f, SImplies):
        return "%s => %s" % (_sparen(f.left, _PREC_IMPLIES + 1), _sparen(f.right, _PREC_IMPLIES))
    if isinstance(f, SIff):
        return "%s <=> %s" % (_sparen(f.left, _PREC_IFF + 1), _sparen(f.right, _PREC_IFF))
    if isinstance(f, SDiamond):
        return "<%s> %s" % (f.action or "", _sparen(f.arg, _PREC_UNARY))
    if isinstance(f, SBox):
        return "[%s] %s" % (f.action or "", _sparen(f.arg, _PREC_UNARY))
    if isinstance(f, SMu):
        return "mu %s. %s" % (f.var, _render_surface(f.arg, 0))
    if isinstance(f, SNu):
        return "nu %s. %s" % (f.var, _render_surface(f.arg, 0))
    if isinstance(f, SCtl):
        return "%s %s" % (f.op, _sparen(f.arg, _PREC_UNARY))
    raise TypeError(f)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__("%d:%d: %s" % (line, column, message))
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<comment>#[^\n]*)|(?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)"
    r"|(?P<op><=>|=>|[&|~<>\[\]().])"
)

_KEYWORDS = {"true", "false", "mu", "nu", "AG", "AF", "EF", "EG"}


class _Tokens:
    def __init__(self, text: str):
        self.toks = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError("unexpected character %r" % text[pos], line, col)
            value = m.group(0)
            if m.lastgroup not in ("ws", "comment"):
                self.toks.append((value, m.lastgroup, line, col))
            for ch in value:
                if ch == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            pos = m.end()
        self.toks.append(("", "eof", line, col))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        if t[1] != "eof":
            self.i += 1
        return t

    def expect(self, value: str):
        t = self.next()
        if t[0] != value:
            raise ParseError("expected %r, found %r" % (value, t[0] or "end of input"), t[2], t[3])
        return t


def parse(text: str) -> Surface:
    """Parse one formula in the surface grammar ('#' starts a comment line)."""
    toks = _Tokens(text)
    f = _parse_iff(toks)
    t = toks.peek()
    if t[1] != "eof":
        raise ParseError("unexpected %r after formula" % t[0], t[2], t[3])
    _check_names(f)
    return f


def _parse_iff(toks) -> Surface:
    left = _parse_implies(toks)
    if toks.peek()[0] == "<=>":
        toks.next()
        return SIff(left, _parse_iff(toks))
    return left


def _parse_implies(toks) -> Surface:
    left = _parse_or(toks)
    if toks.peek()[0] == "=>":
        toks.next()
        return SImplies(left, _parse_implies(toks))
    return left


def _parse_or(toks) -> Surface:
    out = _parse_and(toks)
    while toks.peek()[0] == "|":
        toks.next()
        out = SOr(out, _parse_and(toks))
    return out


def _parse_and(toks) -> Surface:
    out = _parse_unary(toks)
    while toks.peek()[0] == "&":
        toks.next()
        out = SAnd(out, _parse_unary(toks))
    return out


def _parse_unary(toks) -> Surface:
    value, kind, line, col = toks.peek()
    if value == "~":
        toks.next()
        return SNot(_parse_unary(toks))
    if value == "<":
        toks.next()
        action = None
        if toks.peek()[1] == "ident":
            action = toks.next()[0]
        toks.expect(">")
        return SDiamond(action, _parse_unary(toks))
    if value == "[":
        toks.next()
        action = None
        if toks.peek()[1] == "ident":
            action = toks.next()[0]
        toks.expect("]")
        return SBox(action, _parse_unary(toks))
    if value in ("mu", "nu"):
        toks.next()
        var = toks.next()
        if var[1] != "ident" or var[0] in _KEYWORDS:
            raise ParseError("expected variable name after %r" % value, var[2], var[3])
        toks.expect(".")
        body = _parse_iff(toks)
        return SMu(var[0], body) if value == "mu" else SNu(var[0], body)
    if value in ("AG", "AF", "EF", "EG"):
        toks.next()
        return SCtl(value, _parse_unary(toks))
    if value == "true":
        toks.next()
        return STrue()
    if value == "false":
        toks.next()
        return SFalse()
    if kind == "ident":
        toks.next()
        return SName(value)
    if value == "(":
        toks.next()
        f = _parse_iff(toks)
        toks.expect(")")
        return f
    raise ParseError("unexpected %r" % (value or "end of input"), line, col)


def _check_names(f: Surface) -> None:
    """Reject identifiers used both as a binder and as a proposition."""
    binders = set()
    props = set()

    def walk(g: Surface, bound: frozenset):
        if isinstance(g, SName):
            (binders if g.name in bound else props).add(g.name)
        elif isinstance(g, (SMu, SNu)):
            binders.add(g.var)
            walk(g.arg, bound | {g.var})
        elif isinstance(g, SNot):
            walk(g.arg, bound)
        elif isinstance(g, (SAnd, SOr, SImplies, SIff)):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, (SDiamond, SBox, SCtl)):
            walk(g.arg, bound)

    walk(f, frozenset())
    clash = binders & props
    if clash:
        name = sorted(clash)[0]
        raise ParseError("identifier %r is used both as a fixpoint variable and as a proposition" % name, 1, 1)


# ---------------------------------------------------------------------------
# Normalisation
# ---------------------------------------------------------------------------

class _FreshNames:
    def __init__(self, used: set):
        self.used = set(used)
        self.counter = {}

    def fresh(self, stem: str) -> str:
        if stem not in self.used:
            self.used.add(stem)
            return stem
        n = self.counter.get(stem, 0)
        while True:
            n += 1
            cand = "%s%d" % (stem, n)
            if cand not in self.used:
                self.counter[stem] = n
                self.used.add(cand)
                return cand


def _surface_idents(f: Surface) -> set:
    names = set()

    def walk(g):
        if isinstance(g, SName):
            names.add(g.name)
        elif isinstance(g, (SMu, SNu)):
            names.add(g.var)
            walk(g.arg)
        elif isinstance(g, SNot):
            walk(g.arg)
        elif isinstance(g, (SAnd, SOr, SImplies, SIff)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (SDiamond, SBox, SCtl)):
            walk(g.arg)

    walk(f)
    return names


def _desugar(f: Surface, actions: list, fresh: _FreshNames) -> Surface:
    """Expand =>, <=> and the CTL shorthands; leaves ~, &, |, modalities, binders."""
    if isinstance(f, SNot):
        return SNot(_desugar(f.arg, actions, fresh))
    if isinstance(f, SAnd):
        return SAnd(_desugar(f.left, actions, fresh), _desugar(f.right, actions, fresh))
    if isinstance(f, SOr):
        return SOr(_desugar(f.left, actions, fresh), _desugar(f.right, actions, fresh))
    if isinstance(f, SImplies):
        return SOr(SNot(_desugar(f.left, actions, fresh)), _desugar(f.right, actions, fresh))
    if isinstance(f, SIff):
        left = _desugar(f.left, actions, fresh)
        right = _desugar(f.right, actions, fresh)
        return SAnd(SOr(SNot(left), right), SOr(SNot(right), left))
    if isinstance(f, SDiamond):
        return SDiamond(f.action, _desugar(f.arg, actions, fresh))
    if isinstance(f, SBox):
        return SBox(f.action, _desugar(f.arg, actions, fresh))
    if isinstance(f, SMu):
        return SMu(f.var, _desugar(f.arg, actions, fresh))
    if isinstance(f, SNu):
        return SNu(f.var, _desugar(f.arg, actions, fresh))
    if isinstance(f, SCtl):
        arg = _desugar(f.arg, actions, fresh)
        var = fresh.fresh("X")
        if f.op == "AG":
            body = arg
            for s in [SBox(a, SName(var)) for a in actions]:
                body = SAnd(body, s)
            return SNu(var, body)
        if f.op == "AF":
            body = arg
            for s in [SBox(a, SName(var)) for a in actions]:
                body = SOr(body, s)
            return SMu(var, body)
        if f.op == "EF":
            body = arg
            for s in [SDiamond(a, SName(var)) for a in actions]:
                body = SOr(body, s)
            return SMu(var, body)
        if f.op == "EG":
            body = arg
            for s in [SDiamond(a, SName(var)) for a in actions]:
                body = SAnd(body, s)
            return SNu(var, body)
        raise ValueError("unknown shorthand %r" % f.op)
    return f


class NormalizeError(ValueError):
    pass


def _to_nnf(f: Surface, neg: bool, bound: frozenset) -> Formula:
    """Push negations to the propositions; binder duality flips mu/nu."""
    if isinstance(f, STrue):
        return Bot() if neg else Top()
    if isinstance(f, SFalse):
        return Top() if neg else Bot()
    if isinstance(f, SName):
        if f.name in bound:
            return Var(f.name)
        return NegProp(f.name) if neg else Prop(f.name)
    if isinstance(f, SNot):
        return _to_nnf(f.arg, not neg, bound)
    if isinstance(f, SAnd):
        l = _to_nnf(f.left, neg, bound)
        r = _to_nnf(f.right, neg, bound)
        return Or(l, r) if neg else And(l, r)
    if isinstance(f, SOr):
        l = _to_nnf(f.left, neg, bound)
        r = _to_nnf(f.right, neg, bound)
        return And(l, r) if neg else Or(l, r)
    if isinstance(f, SDiamond):
        action = f.action or DEFAULT_ACTION
        arg = _to_nnf(f.arg, neg, bound)
        return Box(action, arg) if neg else Diamond(action, arg)
    if isinstance(f, SBox):
        action = f.action or DEFAULT_ACTION
        arg = _to_nnf(f.arg, neg, bound)
        return Diamond(action, arg) if neg else Box(action, arg)
    if isinstance(f, (SMu, SNu)):
        body = _to_nnf(f.arg, neg, bound | {f.var})
        is_mu = isinstance(f, SMu)
        if neg:
            is_mu = not is_mu
        return Mu(f.var, body) if is_mu else Nu(f.var, body)
    raise TypeError(f)


def _nnf_vars(f: Surface, neg: bool, flipped: frozenset, bound: frozenset) -> None:
    """Reject bound variables in negative polarity (non-monotone input)."""
    if isinstance(f, SName):
        if f.name in bound and (neg != (f.name in flipped)):
            raise NormalizeError("variable %s occurs under negation" % f.name)
    elif isinstance(f, SNot):
        _nnf_vars(f.arg, not neg, flipped, bound)
    elif isinstance(f, (SAnd, SOr)):
        _nnf_vars(f.left, neg, flipped, bound)
        _nnf_vars(f.right, neg, flipped, bound)
    elif isinstance(f, (SDiamond, SBox)):
        _nnf_vars(f.arg, neg, flipped, bound)
    elif isinstance(f, (SMu, SNu)):
        flip = flipped | {f.var} if neg else flipped - {f.var}
        _nnf_vars(f.arg, neg, flip, bound | {f.var})


def _drop_redundant(f: Formula) -> Formula:
    if isinstance(f, And):
        return And(_drop_redundant(f.left), _drop_redundant(f.right))
    if isinstance(f, Or):
        return Or(_drop_redundant(f.left), _drop_redundant(f.right))
    if isinstance(f, Diamond):
        return Diamond(f.action, _drop_redundant(f.arg))
    if isinstance(f, Box):
        return Box(f.action, _drop_redundant(f.arg))
    if isinstance(f, (Mu, Nu)):
        body = _drop_redundant(f.arg)
        if f.var not in free_vars(body):
            return body
        return Mu(f.var, body) if isinstance(f, Mu) else Nu(f.var, body)
    return f


def _reassociate(f: Formula) -> Formula:
    if isinstance(f, And):
        return and_of([_reassociate(p) for p in flatten_and(f)])
    if isinstance(f, Or):
        return or_of([_reassociate(p) for p in flatten_or(f)])
    if isinstance(f, Diamond):
        return Diamond(f.action, _reassociate(f.arg))
    if isinstance(f, Box):
        return Box(f.action, _reassociate(f.arg))
    if isinstance(f, Mu):
        return Mu(f.var, _reassociate(f.arg))
    if isinstance(f, Nu):
        return Nu(f.var, _reassociate(f.arg))
    return f


def _make_clean(f: Formula, fresh: _FreshNames, env: dict) -> Formula:
    if isinstance(f, Var):
        return Var(env[f.name])
    if isinstance(f, And):
        return And(_make_clean(f.left, fresh, env), _make_clean(f.right, fresh, env))
    if isinstance(f, Or):
        return Or(_make_clean(f.left, fresh, env), _make_clean(f.right, fresh, env))
    if isinstance(f, Diamond):
        return Diamond(f.action, _make_clean(f.arg, fresh, env))
    if isinstance(f, Box):
        return Box(f.action, _make_clean(f.arg, fresh, env))
    if isinstance(f, (Mu, Nu)):
        new = fresh.fresh(f.var)
        body = _make_clean(f.arg, fresh, dict(env, **{f.var: new}))
        return Mu(new, body) if isinstance(f, Mu) else Nu(new, body)
    return f


def normalize(f: Surface) -> Formula:
    """Surface formula -> clean, irredundant NNF core formula.

    Shorthands: AG p = nu X. p & [a]X conjoined over every action occurring in
    the input (the anonymous action when there is none); AF/EF/EG analogously
    with | and <a>.  Implications expand before negations are pushed.
    """
    idents = _surface_idents(f)
    fresh = _FreshNames(idents)
    actions = sorted(a for a in _surface_actions(f) if a is not None)
    if not actions:
        actions = [None]
    sugar_free = _desugar(f, actions, fresh)
    _nnf_vars(sugar_free, False, frozenset(), frozenset())
    nnf = _to_nnf(sugar_free, False, frozenset())
    nnf = _drop_redundant(nnf)
    nnf = _reassociate(nnf)
    # binder names must avoid proposition names as well
    clean_fresh = _FreshNames(propositions_of(nnf))
    return _make_clean(nnf, clean_fresh, {})


def _surface_actions(f: Surface) -> set:
    acts = set()

    def walk(g):
        if isinstance(g, (SDiamond, SBox)):
            acts.add(g.action)
            walk(g.arg)
        elif isinstance(g, SNot):
            walk(g.arg)
        elif isinstance(g, (SAnd, SOr, SImplies, SIff)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (SMu, SNu, SCtl)):
            walk(g.arg)

    walk(f)
    return acts


def parse_formula(text: str) -> Formula:
    """parse + normalize in one step."""
    return normalize(parse(text))


def size(f: Formula) -> int:
    """Number of AST nodes."""
    return sum(1 for _ in subformulas(f))


# ---------------------------------------------------------------------------
# Binder environment helpers
# ---------------------------------------------------------------------------

def binder_map(f: Formula) -> dict:
    """var name -> binding fixpoint literal (as written in f); f must be clean."""
    out = {}
    for g in subformulas(f):
        if isinstance(g, (Mu, Nu)):
            if g.var in out:
                raise ValueError("formula is not clean: duplicate binder %s" % g.var)
            out[g.var] = g
    return out


def mu_variables(f: Formula) -> frozenset:
    return frozenset(g.var for g in subformulas(f) if isinstance(g, Mu))


# ---------------------------------------------------------------------------
# Unfolding closure with provenance
# ---------------------------------------------------------------------------

class ClosureItem:
    """One closure member: a closed formula with its unfolding provenance.

    ``base`` is a subformula of the root as written and ``chain`` lists the
    fixpoint literals unfolded to close it, innermost first.  Applying the
    chain to the base reproduces ``formula``.  ``level`` is the alternation
    level derived from the chain (0 for non-deferrals).
    """

    __slots__ = ("formula", "base", "chain", "level", "carries_mu")

    def __init__(self, formula: Formula, base: Formula, chain: tuple, level: int, carries_mu: bool):
        self.formula = formula
        self.base = base
        self.chain = chain
        self.level = level
        self.carries_mu = carries_mu

    def __str__(self):
        return str(self.formula)

    def __repr__(self):
        return "<item %s>" % self.formula

    def __eq__(self, other):
        return isinstance(other, ClosureItem) and other.formula == self.formula

    def __hash__(self):
        return hash(self.formula)

    def __lt__(self, other):
        return self.formula < other.formula


def chain_level(chain: tuple) -> int:
    """Alternation level of an unfolding chain (innermost entry first).

    Levels grow with the number of fixpoint alternations in the chain and are
    odd exactly for chains classified as least-fixpoint deferrals.
    """
    lvl = lvl_mu = lvl_nu = 0
    for _var, lit in chain:
        if isinstance(lit, Mu):
            lvl, lvl_mu, lvl_nu = lvl_mu + 1, lvl_mu, lvl_mu + 1
        else:
            lvl, lvl_mu, lvl_nu = lvl_nu, lvl_nu + 1, lvl_nu
    return lvl


def chain_level_reference(chain: tuple) -> int:
    """Recursive restatement of chain_level, kept as a cross-check oracle."""

    def rec(i: int):
        if i == 0:
            return 0, 0, 0
        lvl, lvl_mu, lvl_nu = rec(i - 1)
        _var, lit = chain[i - 1]
        if isinstance(lit, Mu):
            return lvl_mu + 1, lvl_mu, lvl_mu + 1
        return lvl_nu, lvl_nu + 1, lvl_nu

    return rec(len(chain))[0]


def apply_chain(base: Formula, chain: tuple) -> Formula:
    f = base
    for var, lit in chain:
        f = substitute(f, var, lit)
        # close the substituted literal with the remaining (outer) entries:
        # handled implicitly because later substitutions rewrite the copy too
    return f


class Closure:
    """Unfolding closure of a clean, closed NNF formula.

    Items are identified by their closed formula; each carries the provenance
    of its first construction (breadth-first from the root).  The closure has
    at most ``size(root)`` members.
    """

    def __init__(self, root: Formula):
        if free_vars(root):
            raise ValueError("closure requires a closed formula")
        self.root_formula = root
        self.mu_vars = mu_variables(root)
        self._items: dict = {}
        self.root = self._add(root, ())
        queue = [self.root]
        seen = {self.root.formula}
        while queue:
            item = queue.pop(0)
            for succ in self.expansions(item):
                if succ.formula not in seen:
                    seen.add(succ.formula)
                    queue.append(succ)
        self.items = sorted(self._items.values())

    # -- construction -----------------------------------------------------

    def _add(self, base: Formula, chain: tuple) -> ClosureItem:
        if isinstance(base, (Mu, Nu)):
            # canonical decomposition of a fixpoint literal: its own variable
            # plus the self-unfolding entry, on top of whatever closes it
            if not free_vars(base):
                chain = ()
            chain = ((base.var, base),) + chain
            base = Var(base.var)
        elif not free_vars(base):
            chain = ()
        formula = apply_chain(base, chain)
        existing = self._items.get(formula)
        if existing is not None:
            return existing
        carries = isinstance(base, Var) or bool(free_vars(base) & self.mu_vars)
        item = ClosureItem(formula, base, chain, chain_level(chain), carries)
        self._items[formula] = item
        return item

    def expansions(self, item: ClosureItem) -> list:
        """Successor items under the applicable decomposition rule."""
        base = item.base
        if isinstance(base, Var):
            lit = item.chain[0][1]
            return [self._add(lit.arg, item.chain)]
        if isinstance(base, And):
            return [self._add(base.left, item.chain), self._add(base.right, item.chain)]
        if isinstance(base, Or):
            return [self._add(base.left, item.chain), self._add(base.right, item.chain)]
        if isinstance(base, (Diamond, Box)):
            return [self._add(base.arg, item.chain)]
        return []

    # -- views --------------------------------------------------------------

    def __iter__(self) -> Iterator[ClosureItem]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, formula: Formula) -> bool:
        return formula in self._items

    def item(self, formula: Formula) -> ClosureItem:
        return self._items[formula]

    def formulas(self) -> set:
        return set(self._items.keys())

    # -- structure used by the tracking automaton ---------------------------

    def and_parts(self, item: ClosureItem):
        base = item.base
        return self._add(base.left, item.chain), self._add(base.right, item.chain)

    def or_parts(self, item: ClosureItem):
        base = item.base
        return self._add(base.left, item.chain), self._add(base.right, item.chain)

    def modal_arg(self, item: ClosureItem) -> ClosureItem:
        return self._add(item.base.arg, item.chain)

    def unfolding(self, item: ClosureItem) -> ClosureItem:
        assert isinstance(item.base, Var) and item.chain[0][0] == item.base.name
        lit = item.chain[0][1]
        return self._add(lit.arg, item.chain)

    def cluster_parts(self, item: ClosureItem):
        """For a conjunction in the special diamonds-plus-box shape, return
        (diamond arg items, box arg item, action); otherwise None.

        Only conjunctions where at least two parts still carry a pending least
        fixpoint are treated as atomic clusters; everything else splits by the
        ordinary conjunction rule.
        """
        base = item.base
        if not isinstance(base, And):
            return None
        parts = flatten_and(base)
        if not all(isinstance(p, (Diamond, Box)) for p in parts):
            return None
        diamonds = [p for p in parts if isinstance(p, Diamond)]
        boxes = [p for p in parts if isinstance(p, Box)]
        if len(boxes) != 1 or not diamonds:
            return None
        action = boxes[0].action
        if any(d.action != action for d in diamonds):
            return None
        dia_args = sorted(str(d.arg) for d in diamonds)
        box_args = sorted(str(g) for g in flatten_or(boxes[0].arg))
        if dia_args != box_args:
            return None
        relevant = sum(
            1 for p in parts if isinstance(p, Var) or free_vars(p) & self.mu_vars
        )
        if relevant < 2:
            return None
        dia_items = [self._add(d.arg, item.chain) for d in diamonds]
        box_item = self._add(boxes[0].arg, item.chain)
        return dia_items, box_item, action

    def fork_sensitive(self, item: ClosureItem) -> bool:
        """Whether a conjunction-split edge into this item keeps its level.

        Splitting a conjunction forks the tracked formula; only the side that
        can still regenerate a pending least fixpoint (directly free mu
        variable, or a fixpoint literal itself) retains a deferral level, so
        the fork stays deterministic inside compartments.
        """
        return item.carries_mu


def closure(f: Formula) -> Closure:
    """The unfolding closure of a normalized closed formula."""
    return Closure(f)


def alternation_level(item: ClosureItem) -> int:
    return item.level


def alternation_depth(f: Formula) -> int:
    """Maximal alternation level over the closure (0 without deferrals)."""
    cl = f if isinstance(f, Closure) else Closure(f)
    return max((it.level for it in cl), default=0)


# ---------------------------------------------------------------------------
# Fragment checks
# ---------------------------------------------------------------------------

@dataclass
class FragmentReport:
    guarded: bool
    clean: bool
    irredundant: bool
    weakly_aconjunctive: bool
    offending: Optional[Formula]
    alternation_depth: int

    @property
    def ok(self) -> bool:
        return self.guarded and self.clean and self.irredundant and self.weakly_aconjunctive

    def describe(self) -> str:
        fails = [
            name
            for name, flag in [
                ("guarded", self.guarded),
                ("clean", self.clean),
                ("irredundant", self.irredundant),
                ("weakly-aconjunctive", self.weakly_aconjunctive),
            ]
            if not flag
        ]
        if not fails:
            return "ok (alternation depth %d)" % self.alternation_depth
        return "violates: %s (at %s)" % (", ".join(fails), self.offending)


def _check_guarded(f: Formula) -> Optional[Formula]:
    """Return an offending binder if some variable occurs unguarded."""

    def walk(g: Formula, unguarded: frozenset) -> bool:
        if isinstance(g, Var):
            return g.name in unguarded
        if isinstance(g, (And, Or)):
            return walk(g.left, unguarded) or walk(g.right, unguarded)
        if isinstance(g, (Diamond, Box)):
            return walk(g.arg, frozenset())
        if isinstance(g, (Mu, Nu)):
            return walk(g.arg, unguarded | {g.var})
        return False

    for g in subformulas(f):
        if isinstance(g, (Mu, Nu)) and walk(g.arg, frozenset({g.var})):
            return g
    return None


def _check_clean(f: Formula) -> Optional[Formula]:
    seen = set()
    props = propositions_of(f) | free_vars(f)
    for g in subformulas(f):
        if isinstance(g, (Mu, Nu)):
            if g.var in seen or g.var in props:
                return g
            seen.add(g.var)
    return None


def _check_irredundant(f: Formula) -> Optional[Formula]:
    for g in subformulas(f):
        if isinstance(g, (Mu, Nu)) and g.var not in free_vars(g.arg):
            return g
    return None


def _check_weakly_aconjunctive(f: Formula) -> Optional[Formula]:
    """Return an offending conjunction, or None if every conjunction is fine.

    A conjunction is acceptable when at most one conjunct still carries a
    pending least fixpoint (a directly free mu variable), or when it has the
    shape  inactive* & <a>p1 & ... & <a>pn & [a](p1 | ... | pn).
    """
    mu_vars = mu_variables(f)

    def active(part: Formula) -> bool:
        return bool(free_vars(part) & mu_vars)

    def cluster_split_ok(parts) -> bool:
        # inactive prefix, then diamonds, then a box over exactly the diamond
        # arguments; several prefix/diamond splits may have to be tried
        if not isinstance(parts[-1], Box):
            return False
        box = parts[-1]
        for i in range(len(parts) - 1):
            if not all(not active(p) for p in parts[:i]):
                break
            diamonds = parts[i:-1]
            if not diamonds or not all(
                isinstance(d, Diamond) and d.action == box.action for d in diamonds
            ):
                continue
            if sorted(str(d.arg) for d in diamonds) == sorted(
                str(p) for p in flatten_or(box.arg)
            ):
                return True
        return False

    for g in subformulas(f):
        if not isinstance(g, And):
            continue
        parts = flatten_and(g)
        if sum(1 for p in parts if active(p)) <= 1:
            continue
        if not cluster_split_ok(parts):
            return g
    return None


def check_fragment(f: Formula) -> FragmentReport:
    """Fragment report for a core (preferably normalized) formula."""
    bad_guard = _check_guarded(f)
    bad_clean = _check_clean(f)
    bad_irr = _check_irredundant(f)
    bad_weak = _check_weakly_aconjunctive(f) if bad_clean is None else None
    offending = bad_guard or bad_clean or bad_irr or bad_weak
    depth = 0
    if bad_clean is None and not free_vars(f):
        depth = alternation_depth(f)
    return FragmentReport(
        guarded=bad_guard is None,
        clean=bad_clean is None,
        irredundant=bad_irr is None,
        weakly_aconjunctive=bad_weak is None if bad_clean is None else False,
        offending=offending,
        alternation_depth=depth,
    )
