"""Omega-automata with transition priorities.

Parity automata here carry their priorities on transitions; a run is accepting
when the highest priority it passes infinitely often is even.  Büchi automata
are the special case with priorities {1, 2}, the accepting transitions being
those of priority 2.

The module provides the compartment-based limit-determinism test, the
permutation-based determinization of limit-deterministic Büchi automata, the
conversion of limit-deterministic parity automata to Büchi automata,
complementation of deterministic automata, and brute-force acceptance oracles
over lasso words used throughout the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx


def _key(x) -> str:
    return str(x)


class ParityAutomaton:
    """Nondeterministic parity automaton with priorities on transitions."""

    def __init__(self, alphabet: Iterable, transitions: Iterable[tuple], initial, states: Iterable = None):
        self.initial = initial
        self.priority: Dict[tuple, int] = {}
        self._succ: Dict[tuple, list] = {}
        state_set = {initial}
        for source, letter, target, priority in transitions:
            if priority < 0:
                raise ValueError("priorities must be non-negative")
            triple = (source, letter, target)
            old = self.priority.get(triple)
            if old is not None and old != priority:
                raise ValueError("conflicting priorities for transition %r" % (triple,))
            if old is None:
                self.priority[triple] = priority
                self._succ.setdefault((source, letter), []).append(target)
            state_set.add(source)
            state_set.add(target)
        if states is not None:
            state_set.update(states)
        self.states = sorted(state_set, key=_key)
        self.alphabet = tuple(sorted(set(alphabet), key=_key))
        for lst in self._succ.values():
            lst.sort(key=_key)

    # -- basic views ---------------------------------------------------------

    def successors(self, state, letter) -> list:
        return self._succ.get((state, letter), [])

    def transitions(self) -> Iterable[tuple]:
        for (source, letter, target), priority in sorted(
            self.priority.items(), key=lambda kv: (_key(kv[0][0]), _key(kv[0][1]), _key(kv[0][2]))
        ):
            yield source, letter, target, priority

    @property
    def index(self) -> int:
        return max(self.priority.values(), default=0)

    def priorities(self) -> set:
        return set(self.priority.values())

    def is_deterministic(self) -> bool:
        return all(len(v) <= 1 for v in self._succ.values())

    def is_buchi(self) -> bool:
        return self.priorities() <= {1, 2}

    def accepting_transitions(self) -> list:
        return [t for t, p in self.priority.items() if p == 2]

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self):
        return "<ParityAutomaton states=%d letters=%d index=%d>" % (
            len(self.states),
            len(self.alphabet),
            self.index,
        )

    # -- serialisation ---------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "alphabet": [str(a) for a in self.alphabet],
            "states": [str(s) for s in self.states],
            "initial": str(self.initial),
            "transitions": [
                {"source": str(s), "letter": str(a), "target": str(t), "priority": p}
                for s, a, t, p in self.transitions()
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ParityAutomaton":
        doc = json.loads(text)
        return cls(
            alphabet=doc["alphabet"],
            transitions=[
                (t["source"], t["letter"], t["target"], t["priority"]) for t in doc["transitions"]
            ],
            initial=doc["initial"],
            states=doc["states"],
        )

    def to_dot(self, name: str = "automaton") -> str:
        lines = ["digraph %s {" % name, "  rankdir=LR;", '  init [shape=point, label=""];']
        index = {s: "s%d" % i for i, s in enumerate(self.states)}
        for s in self.states:
            lines.append('  %s [shape=ellipse, label="%s"];' % (index[s], _dot_escape(str(s))))
        lines.append("  init -> %s;" % index[self.initial])
        for s, a, t, p in self.transitions():
            lines.append('  %s -> %s [label="%s,%d"];' % (index[s], index[t], _dot_escape(str(a)), p))
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


# ---------------------------------------------------------------------------
# Reachability, compartments, limit determinism
# ---------------------------------------------------------------------------

def reachable(aut: ParityAutomaton, starts: Iterable, max_priority: Optional[int] = None) -> set:
    """States reachable from starts, optionally via priority <= max_priority only."""
    seen = set(starts)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for a in aut.alphabet:
            for u in aut.successors(v, a):
                if max_priority is not None and aut.priority[(v, a, u)] > max_priority:
                    continue
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
    return seen


def compartment(aut: ParityAutomaton, transition: tuple) -> set:
    """States reachable from the transition's target via priorities no larger.

    The transition must have even priority.
    """
    priority = aut.priority[transition]
    if priority % 2 != 0:
        raise ValueError("compartments are defined for even-priority transitions")
    return reachable(aut, [transition[2]], max_priority=priority)


def _internally_deterministic(aut: ParityAutomaton, states: set, max_priority: int) -> bool:
    for v in states:
        for a in aut.alphabet:
            inside = [u for u in aut.successors(v, a) if aut.priority[(v, a, u)] <= max_priority]
            if len(inside) > 1:
                return False
    return True


def is_limit_deterministic(aut: ParityAutomaton) -> bool:
    """Every compartment is internally deterministic (polynomial check)."""
    checked = set()
    for (s, a, t), p in aut.priority.items():
        if p % 2 != 0:
            continue
        if (p, t) in checked:
            continue
        checked.add((p, t))
        if not _internally_deterministic(aut, reachable(aut, [t], max_priority=p), p):
            return False
    return True


def prune_non_cyclic_accepting(ba: ParityAutomaton) -> ParityAutomaton:
    """Demote accepting transitions that are on no cycle (fire at most once)."""
    if not ba.is_buchi():
        raise ValueError("expects a Büchi automaton (priorities within {1,2})")
    transitions = []
    for s, a, t, p in ba.transitions():
        if p == 2 and s not in reachable(ba, [t]):
            p = 1
        transitions.append((s, a, t, p))
    return ParityAutomaton(ba.alphabet, transitions, ba.initial, ba.states)


# ---------------------------------------------------------------------------
# Permutation determinization of limit-deterministic Büchi automata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PermutationState:
    """Subset of still-nondeterministic states plus an age-ordered list of
    deterministically tracked states (oldest first, no repetitions)."""

    subset: frozenset
    perm: tuple

    def __str__(self):
        inner = ",".join(sorted((str(s) for s in self.subset)))
        perm = ",".join(str(s) for s in self.perm)
        return "({%s},[%s])" % (inner, perm)

    def __lt__(self, other):
        return str(self) < str(other)


def partial_permutations(universe: Iterable) -> List[tuple]:
    """All non-repetitive ordered lists over the universe (for small sets)."""
    import itertools

    items = sorted(universe, key=_key)
    out = []
    for r in range(len(items) + 1):
        out.extend(itertools.permutations(items, r))
    return out


class PermutationDeterminizer:
    """Step function of the determinization of a limit-deterministic BA.

    Exposes the transition structure one step at a time so callers can expand
    only the reachable part; `automaton()` materialises it.
    """

    def __init__(self, ba: ParityAutomaton):
        if not ba.is_buchi():
            raise ValueError("determinization expects a Büchi automaton")
        if not is_limit_deterministic(ba):
            raise ValueError("input automaton is not limit-deterministic")
        self.ba = ba
        self.accepting = set(ba.accepting_transitions())
        targets = {t for (_, _, t) in self.accepting}
        self.tracked = reachable(ba, targets)
        self.untracked = set(ba.states) - self.tracked
        self.q = len(self.tracked)
        for v in self.tracked:
            for a in ba.alphabet:
                if len(ba.successors(v, a)) > 1:
                    raise ValueError("state %r is not deterministic inside the tracked part" % (v,))

    def initial(self) -> PermutationState:
        u0 = self.ba.initial
        if u0 in self.tracked:
            return PermutationState(frozenset(), (u0,))
        return PermutationState(frozenset((u0,)), ())

    def step(self, state: PermutationState, letter) -> Tuple[PermutationState, int]:
        ba = self.ba
        subset = frozenset(
            u for v in state.subset for u in ba.successors(v, letter) if u in self.untracked
        )
        # step 1: unique successors of the tracked entries, None when the
        # trace dies
        trace: List[Optional[object]] = []
        for v in state.perm:
            succ = ba.successors(v, letter)
            trace.append(succ[0] if succ else None)
        # step 2: later duplicates die
        seen = set()
        for i, w in enumerate(trace):
            if w is None:
                continue
            if w in seen:
                trace[i] = None
            else:
                seen.add(w)
        removed = next((i + 1 for i, w in enumerate(trace) if w is None), self.q + 1)
        # step 3: compact
        perm = [w for w in trace if w is not None]
        # step 4: newly tracked states enter at the end, in canonical order
        entering = {
            u
            for v in state.subset
            for u in ba.successors(v, letter)
            if u in self.tracked and u not in seen
        }
        perm.extend(sorted(entering, key=_key))
        new_state = PermutationState(subset, tuple(perm))
        # oldest index whose entry just passed an accepting transition
        active = self.q + 1
        for i in range(min(len(state.perm), len(perm))):
            if (state.perm[i], letter, perm[i]) in self.accepting:
                active = i + 1
                break
        if removed > len(perm) and active == self.q + 1:
            priority = 1
        elif removed <= active:
            priority = 2 * (self.q - removed) + 3
        else:
            priority = 2 * (self.q - active) + 2
        return new_state, priority

    def automaton(self) -> ParityAutomaton:
        init = self.initial()
        transitions = []
        seen = {init}
        queue = [init]
        while queue:
            g = queue.pop()
            for a in self.ba.alphabet:
                h, p = self.step(g, a)
                transitions.append((g, a, h, p))
                if h not in seen:
                    seen.add(h)
                    queue.append(h)
        return ParityAutomaton(self.ba.alphabet, transitions, init, seen)


def determinize_ldba(ba: ParityAutomaton) -> ParityAutomaton:
    """Deterministic parity automaton equivalent to a limit-deterministic BA."""
    return PermutationDeterminizer(ba).automaton()


# ---------------------------------------------------------------------------
# Parity to Büchi for limit-deterministic automata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Leveled:
    """Copy of a state committed to a maximal even priority (the level)."""

    state: object
    level: int

    def __str__(self):
        return "%s@%d" % (self.state, self.level)

    def __lt__(self, other):
        return str(self) < str(other)


def pa_to_ba(pa: ParityAutomaton) -> ParityAutomaton:
    """Büchi automaton with the same language; limit-determinism is preserved.

    Already-Büchi inputs pass through unchanged.  Runs guess the point from
    which no priority above some even level occurs, and the level copies then
    accept on transitions that hit that priority exactly.
    """
    if pa.is_buchi():
        return pa
    transitions = []
    seen = {pa.initial}
    queue = [pa.initial]
    while queue:
        v = queue.pop()
        plain = not isinstance(v, Leveled)
        outs = []
        if plain:
            for a in pa.alphabet:
                for w in pa.successors(v, a):
                    p = pa.priority[(v, a, w)]
                    outs.append((a, w, 1))
                    if p % 2 == 0:
                        outs.append((a, Leveled(w, p // 2), 1))
        else:
            for a in pa.alphabet:
                for w in pa.successors(v.state, a):
                    p = pa.priority[(v.state, a, w)]
                    if p <= 2 * v.level:
                        outs.append((a, Leveled(w, v.level), 2 if p == 2 * v.level else 1))
        for a, w, pr in outs:
            transitions.append((v, a, w, pr))
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return ParityAutomaton(pa.alphabet, transitions, pa.initial, seen)


def determinize_ldpa(pa: ParityAutomaton) -> ParityAutomaton:
    """Determinize a limit-deterministic parity automaton via its BA form."""
    if not is_limit_deterministic(pa):
        raise ValueError("input automaton is not limit-deterministic")
    return determinize_ldba(prune_non_cyclic_accepting(pa_to_ba(pa)))


# ---------------------------------------------------------------------------
# Complementation of deterministic automata
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sink:
    def __str__(self):
        return "sink"

    def __lt__(self, other):
        return str(self) < str(other)


def totalize_dpa(dpa: ParityAutomaton) -> ParityAutomaton:
    """Complete the transition function with a rejecting sink if needed."""
    if not dpa.is_deterministic():
        raise ValueError("totalize expects a deterministic automaton")
    missing = [
        (s, a) for s in dpa.states for a in dpa.alphabet if not dpa.successors(s, a)
    ]
    if not missing:
        return dpa
    sink = Sink()
    transitions = list(dpa.transitions())
    for s, a in missing:
        transitions.append((s, a, sink, 1))
    for a in dpa.alphabet:
        transitions.append((sink, a, sink, 1))
    return ParityAutomaton(dpa.alphabet, transitions, dpa.initial, list(dpa.states) + [sink])


def complement_dpa(dpa: ParityAutomaton) -> ParityAutomaton:
    """Complement a deterministic parity automaton by shifting priorities down."""
    if not dpa.is_deterministic():
        raise ValueError("complementation expects a deterministic automaton")
    total = totalize_dpa(dpa)
    if total.priorities() and min(total.priorities()) < 1:
        raise ValueError("complementation needs priorities >= 1")
    transitions = [(s, a, t, p - 1) for s, a, t, p in total.transitions()]
    return ParityAutomaton(total.alphabet, transitions, total.initial, total.states)


# ---------------------------------------------------------------------------
# Lasso-word acceptance oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LassoWord:
    """Ultimately periodic word prefix·loop^ω."""

    prefix: tuple
    loop: tuple

    def __post_init__(self):
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def letter(self, i: int):
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]

    def __str__(self):
        return "%s(%s)^w" % ("".join(map(str, self.prefix)), "".join(map(str, self.loop)))


def dpa_accepts_lasso(dpa: ParityAutomaton, word: LassoWord) -> bool:
    """Run the unique run; accept iff the eventual cycle's top priority is even.

    A run that dies (missing transition) rejects.
    """
    if not dpa.is_deterministic():
        raise ValueError("dpa_accepts_lasso expects a deterministic automaton")
    state = dpa.initial
    for a in word.prefix:
        nxt = dpa.successors(state, a)
        if not nxt:
            return False
        state = nxt[0]
    loop = word.loop
    seen = {}
    priorities: List[int] = []
    pos = 0
    while True:
        config = (state, pos)
        if config in seen:
            cycle = priorities[seen[config]:]
            return max(cycle) % 2 == 0
        seen[config] = len(priorities)
        a = loop[pos]
        nxt = dpa.successors(state, a)
        if not nxt:
            return False
        priorities.append(dpa.priority[(state, a, nxt[0])])
        state = nxt[0]
        pos = (pos + 1) % len(loop)


def npa_accepts_lasso(npa: ParityAutomaton, word: LassoWord) -> bool:
    """Whether some run over the lasso is accepting (small automata only).

    Builds the product of the automaton with the lasso's positions and looks,
    for each even priority, for a reachable cycle of transitions no heavier
    that passes the priority itself.
    """
    plen, llen = len(word.prefix), len(word.loop)
    total = plen + llen

    def advance(i: int) -> int:
        return i + 1 if i + 1 < total else plen

    product = nx.MultiDiGraph()
    start = (npa.initial, 0)
    product.add_node(start)
    stack = [start]
    while stack:
        v, i = stack.pop()
        a = word.letter(i)
        for u in npa.successors(v, a):
            node = (u, advance(i))
            if node not in product:
                product.add_node(node)
                stack.append(node)
            product.add_edge((v, i), node, priority=npa.priority[(v, a, u)])

    evens = sorted({p for p in npa.priorities() if p % 2 == 0}, reverse=True)
    for top in evens:
        sub = nx.MultiDiGraph(
            (s, t, {"priority": d["priority"]})
            for s, t, d in product.edges(data=True)
            if d["priority"] <= top
        )
        for scc in nx.strongly_connected_components(sub):
            hit = any(
                d["priority"] == top
                for s, t, d in sub.edges(data=True)
                if s in scc and t in scc
            )
            if hit and any(node in product for node in scc):
                return True
    return False


def language_sample_equal(
    left: ParityAutomaton,
    right: ParityAutomaton,
    words: Sequence[LassoWord],
    left_deterministic: bool = False,
    right_deterministic: bool = True,
) -> Optional[LassoWord]:
    """First sampled lasso on which the two automata disagree, if any."""
    for w in words:
        a = dpa_accepts_lasso(left, w) if left_deterministic else npa_accepts_lasso(left, w)
        b = dpa_accepts_lasso(right, w) if right_deterministic else npa_accepts_lasso(right, w)
        if a != b:
            return w
    return None
