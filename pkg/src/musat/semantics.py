"""Finite Kripke structures and a fixpoint-iteration model checker.

This is the certification side of the solver: extracted models are replayed
here, independently of the game pipeline, by plain Kleene iteration of the
fixpoint semantics.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Iterable, Tuple

from .formula import (
    And,
    Bot,
    Box,
    Diamond,
    Formula,
    Mu,
    NegProp,
    Nu,
    Or,
    Prop,
    Top,
    Var,
    free_vars,
)


class KripkeModel:
    """States 0..n-1 with labelled edges and a propositional valuation."""

    def __init__(
        self,
        num_states: int,
        relations: Dict[str, Iterable[Tuple[int, int]]],
        valuation: Dict[str, Iterable[int]],
        root: int = 0,
    ):
        if num_states <= 0:
            raise ValueError("a model needs at least one state")
        if not (0 <= root < num_states):
            raise ValueError("root state out of range")
        self.num_states = num_states
        self.root = root
        self.relations = {}
        for action, pairs in relations.items():
            pairs = frozenset(pairs)
            for u, v in pairs:
                if not (0 <= u < num_states and 0 <= v < num_states):
                    raise ValueError("edge (%d,%d) out of range" % (u, v))
            self.relations[action] = pairs
        self.valuation = {}
        for prop, states in valuation.items():
            states = frozenset(states)
            if any(not (0 <= s < num_states) for s in states):
                raise ValueError("valuation of %r out of range" % prop)
            self.valuation[prop] = states

    def successors(self, state: int, action: str) -> FrozenSet[int]:
        return frozenset(v for (u, v) in self.relations.get(action, ()) if u == state)

    def __eq__(self, other):
        return (
            isinstance(other, KripkeModel)
            and other.num_states == self.num_states
            and other.root == self.root
            and {a: p for a, p in other.relations.items() if p}
            == {a: p for a, p in self.relations.items() if p}
            and {p: s for p, s in other.valuation.items() if s}
            == {p: s for p, s in self.valuation.items() if s}
        )

    def __repr__(self):
        return "<KripkeModel states=%d root=%d>" % (self.num_states, self.root)

    # -- serialisation ------------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form; parsing it back is exact."""
        lines = ["states: %d" % self.num_states, "root: %d" % self.root]
        for prop in sorted(p for p, s in self.valuation.items() if s):
            members = " ".join(str(s) for s in sorted(self.valuation[prop]))
            lines.append("prop %s: %s" % (prop, members))
        for action in sorted(a for a, p in self.relations.items() if p):
            edges = " ".join("%d->%d" % e for e in sorted(self.relations[action]))
            lines.append("action %s: %s" % (action, edges))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "KripkeModel":
        num_states = root = None
        relations: Dict[str, set] = {}
        valuation: Dict[str, set] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(":")
            head = head.strip()
            rest = rest.strip()
            if head == "states":
                num_states = int(rest)
            elif head == "root":
                root = int(rest)
            elif head.startswith("prop "):
                valuation[head[5:].strip()] = {int(t) for t in rest.split()} if rest else set()
            elif head.startswith("action "):
                pairs = set()
                for tok in rest.split():
                    u, _, v = tok.partition("->")
                    pairs.add((int(u), int(v)))
                relations[head[7:].strip()] = pairs
            else:
                raise ValueError("unrecognised model line: %r" % raw)
        if num_states is None or root is None:
            raise ValueError("model text needs 'states:' and 'root:' lines")
        return cls(num_states, relations, valuation, root)


def evaluate(f: Formula, model: KripkeModel, interpretation: Dict[str, FrozenSet[int]] = None) -> FrozenSet[int]:
    """States satisfying f; fixpoints by Kleene iteration."""
    env = dict(interpretation or {})
    missing = free_vars(f) - set(env)
    if missing:
        raise ValueError("unbound variables: %s" % ", ".join(sorted(missing)))
    return _eval(f, model, env)


def _eval(f: Formula, m: KripkeModel, env: dict) -> FrozenSet[int]:
    all_states = frozenset(range(m.num_states))
    if isinstance(f, Bot):
        return frozenset()
    if isinstance(f, Top):
        return all_states
    if isinstance(f, Prop):
        return m.valuation.get(f.name, frozenset())
    if isinstance(f, NegProp):
        return all_states - m.valuation.get(f.name, frozenset())
    if isinstance(f, Var):
        return env[f.name]
    if isinstance(f, And):
        return _eval(f.left, m, env) & _eval(f.right, m, env)
    if isinstance(f, Or):
        return _eval(f.left, m, env) | _eval(f.right, m, env)
    if isinstance(f, Diamond):
        arg = _eval(f.arg, m, env)
        return frozenset(s for s in all_states if m.successors(s, f.action) & arg)
    if isinstance(f, Box):
        arg = _eval(f.arg, m, env)
        return frozenset(s for s in all_states if m.successors(s, f.action) <= arg)
    if isinstance(f, (Mu, Nu)):
        current = frozenset() if isinstance(f, Mu) else all_states
        while True:
            env2 = dict(env)
            env2[f.var] = current
            nxt = _eval(f.arg, m, env2)
            if nxt == current:
                return current
            current = nxt
    raise TypeError(f)


def satisfies(model: KripkeModel, f: Formula) -> bool:
    """Whether the model's root satisfies the closed formula f."""
    if free_vars(f):
        raise ValueError("satisfies needs a closed formula")
    return model.root in evaluate(f, model, {})
