"""Pattern parsing and automata.

The pattern dialect is a small POSIX-like subset: literals, ``.`` (any
letter), named classes (``N`` with ``classes={"N": "ACGT"}``), bracket
classes ``[AC]``, grouping with alternation ``(A|D)``, and the postfix
operators ``*``, ``+``, ``?``, ``{k}``, ``{k,}``, ``{k,l}``.

A pattern ``W`` is compiled into the minimal DFA of ``A* W`` so that the
automaton is in a final state exactly when an occurrence of ``W`` ends at the
current position (overlapping occurrences are all counted).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence


class PatternSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class EmptyLanguageError(ValueError):
    pass


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Literal:
    letter: str


@dataclass(frozen=True)
class CharClass:
    letters: frozenset


@dataclass(frozen=True)
class Concat:
    items: tuple


@dataclass(frozen=True)
class Alternation:
    options: tuple


@dataclass(frozen=True)
class Repeat:
    node: object
    min: int
    max: int | None  # None: unbounded


@dataclass(frozen=True)
class Star:
    node: object


@dataclass(frozen=True)
class Epsilon:
    pass


class _Parser:
    def __init__(self, text, alphabet, classes):
        self.text = text
        self.pos = 0
        self.alphabet = list(alphabet)
        self.letters = set(self.alphabet)
        self.classes = {}
        for name, members in (classes or {}).items():
            if name in self.letters:
                raise ValueError(f"class name {name!r} collides with an alphabet letter")
            members = frozenset(members)
            bad = members - self.letters
            if bad:
                raise ValueError(f"class {name!r} uses letters outside the alphabet: {sorted(bad)}")
            self.classes[name] = members

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else None

    def error(self, msg):
        raise PatternSyntaxError(msg, self.pos)

    def parse(self):
        node = self.alternation()
        if self.pos != len(self.text):
            self.error(f"unexpected {self.peek()!r}")
        return node

    def alternation(self):
        options = [self.concat()]
        while self.peek() == "|":
            self.pos += 1
            options.append(self.concat())
        return options[0] if len(options) == 1 else Alternation(tuple(options))

    def concat(self):
        items = []
        while self.peek() is not None and self.peek() not in "|)":
            items.append(self.postfix())
        if not items:
            return Epsilon()
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def postfix(self):
        node = self.atom()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                node = Star(node)
            elif c == "+":
                self.pos += 1
                node = Repeat(node, 1, None)
            elif c == "?":
                self.pos += 1
                node = Repeat(node, 0, 1)
            elif c == "{":
                node = self.braces(node)
            else:
                return node

    def number(self):
        start = self.pos
        while self.peek() is not None and self.peek().isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected a number")
        return int(self.text[start:self.pos])

    def braces(self, node):
        start = self.pos
        self.pos += 1
        lo = self.number()
        hi: int | None = lo
        if self.peek() == ",":
            self.pos += 1
            hi = None if self.peek() == "}" else self.number()
        if self.peek() != "}":
            self.error("expected '}'")
        self.pos += 1
        if hi is not None and hi < lo:
            self.pos = start
            self.error(f"bad repeat bounds {{{lo},{hi}}}")
        return Repeat(node, lo, hi)

    def atom(self):
        c = self.peek()
        if c is None:
            self.error("unexpected end of pattern")
        if c == "(":
            self.pos += 1
            node = self.alternation()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return node
        if c == "[":
            self.pos += 1
            members = set()
            while self.peek() not in ("]", None):
                ch = self.peek()
                if ch in self.classes:
                    members |= self.classes[ch]
                elif ch in self.letters:
                    members.add(ch)
                else:
                    self.error(f"letter {ch!r} is not in the alphabet")
                self.pos += 1
            if self.peek() != "]" or not members:
                self.error("bad bracket class")
            self.pos += 1
            return CharClass(frozenset(members))
        if c == ".":
            self.pos += 1
            return CharClass(frozenset(self.letters))
        if c in self.classes:
            self.pos += 1
            return CharClass(self.classes[c])
        if c in self.letters:
            self.pos += 1
            return Literal(c)
        if c in "*+?{":
            self.error(f"nothing to repeat before {c!r}")
        self.error(f"letter {c!r} is not in the alphabet")


def parse_pattern(text: str, alphabet: Sequence[str], classes: Mapping[str, str] | None = None):
    """Parse ``text`` into an AST over ``alphabet``."""
    if not text:
        raise PatternSyntaxError("empty pattern", 0)
    return _Parser(text.replace(" ", ""), alphabet, classes).parse()


# --------------------------------------------------------------------------
# NFA (Thompson) and subset construction


class _Nfa:
    def __init__(self):
        self.eps: list[list[int]] = []
        self.moves: list[list[tuple[frozenset, int]]] = []

    def new(self) -> int:
        self.eps.append([])
        self.moves.append([])
        return len(self.eps) - 1

    def build(self, node) -> tuple[int, int]:
        """Return (entry, exit) states of a fragment for ``node``."""
        if isinstance(node, Literal):
            s, t = self.new(), self.new()
            self.moves[s].append((frozenset(node.letter), t))
            return s, t
        if isinstance(node, CharClass):
            s, t = self.new(), self.new()
            self.moves[s].append((node.letters, t))
            return s, t
        if isinstance(node, Epsilon):
            s = self.new()
            return s, s
        if isinstance(node, Concat):
            s, t = self.build(node.items[0])
            for item in node.items[1:]:
                s2, t2 = self.build(item)
                self.eps[t].append(s2)
                t = t2
            return s, t
        if isinstance(node, Alternation):
            s, t = self.new(), self.new()
            for opt in node.options:
                s2, t2 = self.build(opt)
                self.eps[s].append(s2)
                self.eps[t2].append(t)
            return s, t
        if isinstance(node, Star):
            s, t = self.new(), self.new()
            s2, t2 = self.build(node.node)
            self.eps[s] += [s2, t]
            self.eps[t2] += [s2, t]
            return s, t
        if isinstance(node, Repeat):
            parts = [node.node] * node.min
            s = t = self.new()
            for part in parts:
                s2, t2 = self.build(part)
                self.eps[t].append(s2)
                t = t2
            if node.max is None:
                s2, t2 = self.build(Star(node.node))
                self.eps[t].append(s2)
                t = t2
            else:
                end = self.new()
                self.eps[t].append(end)
                for _ in range(node.max - node.min):
                    s2, t2 = self.build(node.node)
                    self.eps[t].append(s2)
                    self.eps[t2].append(end)
                    t = t2
                t = end
            return s, t
        raise TypeError(f"unknown AST node {node!r}")

    def closure(self, states) -> frozenset:
        stack = list(states)
        seen = set(states)
        while stack:
            s = stack.pop()
            for t in self.eps[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)


# --------------------------------------------------------------------------
# DFA


@dataclass(frozen=True)
class Dfa:
    """Complete DFA; ``delta[q][i]`` is the target of state q on ``alphabet[i]``."""

    alphabet: tuple
    delta: tuple  # tuple of tuples of int
    start: int
    finals: frozenset
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {a: i for i, a in enumerate(self.alphabet)})

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def step(self, q: int, letter: str) -> int:
        return self.delta[q][self.index[letter]]

    def run(self, word: str, q: int | None = None) -> int:
        q = self.start if q is None else q
        for a in word:
            q = self.delta[q][self.index[a]]
        return q

    def accepts(self, word: str) -> bool:
        return self.run(word) in self.finals


def _subset_construction(ast, alphabet) -> Dfa:
    nfa = _Nfa()
    loop = nfa.new()
    nfa.moves[loop].append((frozenset(alphabet), loop))
    s, t = nfa.build(ast)
    nfa.eps[loop].append(s)
    start = nfa.closure([loop])
    ids = {start: 0}
    order = [start]
    delta = []
    i = 0
    while i < len(order):
        cur = order[i]
        row = []
        for a in alphabet:
            nxt = [dst for st in cur for letters, dst in nfa.moves[st] if a in letters]
            target = nfa.closure(nxt)
            if target not in ids:
                ids[target] = len(order)
                order.append(target)
            row.append(ids[target])
        delta.append(tuple(row))
        i += 1
    finals = frozenset(k for k, S in enumerate(order) if t in S)
    return Dfa(tuple(alphabet), tuple(delta), 0, finals)


def _hopcroft(delta, n_letters, initial_blocks) -> list[int]:
    """Coarsest stable refinement of ``initial_blocks``; returns block ids."""
    n = len(delta)
    inverse = [[[] for _ in range(n)] for _ in range(n_letters)]
    for q in range(n):
        for a in range(n_letters):
            inverse[a][delta[q][a]].append(q)
    blocks = [set(b) for b in initial_blocks if b]
    block_of = [0] * n
    for i, b in enumerate(blocks):
        for q in b:
            block_of[q] = i
    work = set(range(len(blocks)))
    while work:
        splitter = blocks[work.pop()].copy()
        for a in range(n_letters):
            pre = set()
            for q in splitter:
                pre.update(inverse[a][q])
            touched = {}
            for q in pre:
                touched.setdefault(block_of[q], set()).add(q)
            for bi, inside in touched.items():
                block = blocks[bi]
                if len(inside) == len(block):
                    continue
                outside = block - inside
                blocks[bi] = inside
                blocks.append(outside)
                ni = len(blocks) - 1
                for q in outside:
                    block_of[q] = ni
                if bi in work or len(inside) > len(outside):
                    work.add(ni)
                    if bi not in work and len(inside) <= len(outside):
                        work.add(bi)
                else:
                    work.add(bi)
    return block_of


def _quotient(dfa_delta, start, finals, block_of, alphabet, labels=None):
    """Quotient automaton renumbered by BFS from the start block."""
    n_letters = len(alphabet)
    rep = {}
    for q, b in enumerate(block_of):
        rep.setdefault(b, q)
    ids = {block_of[start]: 0}
    order = [block_of[start]]
    i = 0
    while i < len(order):
        q = rep[order[i]]
        for a in range(n_letters):
            b = block_of[dfa_delta[q][a]]
            if b not in ids:
                ids[b] = len(order)
                order.append(b)
        i += 1
    delta = tuple(
        tuple(ids[block_of[dfa_delta[rep[b]][a]]] for a in range(n_letters)) for b in order
    )
    new_finals = frozenset(ids[b] for b in order if rep[b] in finals)
    new_labels = None
    if labels is not None:
        new_labels = tuple(labels[rep[b]] for b in order)
    return Dfa(tuple(alphabet), delta, 0, new_finals), new_labels


def minimize(dfa: Dfa) -> Dfa:
    """Hopcroft minimization with canonical BFS numbering."""
    finals = set(dfa.finals)
    blocks = [finals, set(range(dfa.n_states)) - finals]
    block_of = _hopcroft(dfa.delta, len(dfa.alphabet), blocks)
    return _quotient(dfa.delta, dfa.start, dfa.finals, block_of, dfa.alphabet)[0]


def build_min_dfa(ast, alphabet: Sequence[str]) -> Dfa:
    """Minimal DFA recognizing ``A* L(ast)``."""
    dfa = minimize(_subset_construction(ast, list(alphabet)))
    if not dfa.finals:
        raise EmptyLanguageError("pattern matches no word")
    return dfa


def compile_pattern(text: str, alphabet: Sequence[str], classes=None) -> Dfa:
    return build_min_dfa(parse_pattern(text, alphabet, classes), alphabet)


# --------------------------------------------------------------------------
# Order-m automata


@dataclass(frozen=True)
class OrderMDfa:
    """DFA whose states remember the last ``m`` letters.

    ``backmap[q]`` is the unique m-letter context reaching ``q`` or ``None``
    for transient states (only reachable by words shorter than ``m``).
    """

    dfa: Dfa
    m: int
    backmap: tuple

    @property
    def chain_states(self) -> list[int]:
        """States reachable by words of length >= m, in state order."""
        if self.m == 0:
            return list(range(self.dfa.n_states))
        return [q for q, ctx in enumerate(self.backmap) if ctx is not None]


def make_order_m(dfa: Dfa, m: int) -> OrderMDfa:
    """Product with the de Bruijn automaton on A^m, minimized per context."""
    if m < 0:
        raise ValueError("order must be non-negative")
    if m == 0:
        return OrderMDfa(dfa, 0, tuple([""] * dfa.n_states))
    alphabet = dfa.alphabet
    start = (dfa.start, "")
    ids = {start: 0}
    order = [start]
    delta = []
    i = 0
    while i < len(order):
        q, w = order[i]
        row = []
        for k, a in enumerate(alphabet):
            nxt = (dfa.delta[q][k], (w + a)[-m:])
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            row.append(ids[nxt])
        delta.append(tuple(row))
        i += 1
    finals = {ids[s] for s in order if s[0] in dfa.finals}
    labels = [w if len(w) == m else None for _, w in order]
    groups: dict = {}
    for k, s in enumerate(order):
        groups.setdefault((k in finals, labels[k]), set()).add(k)
    block_of = _hopcroft(delta, len(alphabet), list(groups.values()))
    quot, new_labels = _quotient(delta, 0, finals, block_of, alphabet, labels)
    return OrderMDfa(quot, m, new_labels)


def is_non_m_ambiguous(autom: OrderMDfa, max_len: int | None = None) -> bool:
    """Brute-force check: every word of length >= m reaching q ends with backmap[q].

    Enumerates all words of length ``m .. max_len`` (default ``m + R``) from
    the start state, which covers every reachable state/suffix combination.
    """
    dfa, m = autom.dfa, autom.m
    if m == 0:
        return True
    max_len = max_len if max_len is not None else m + dfa.n_states
    frontier = {(dfa.start, "")}
    seen = set()
    for length in range(1, max_len + 1):
        nxt = set()
        for q, w in frontier:
            for k, a in enumerate(dfa.alphabet):
                nxt.add((dfa.delta[q][k], (w + a)[-m:]))
        frontier = nxt - seen if length > m else nxt
        for q, w in nxt:
            if length >= m and autom.backmap[q] != w:
                return False
        seen |= nxt
        if not frontier:
            break
    return True


# --------------------------------------------------------------------------
# Scanning and export


def scan(dfa: Dfa, sequence: str) -> list[int]:
    """1-based end positions of pattern occurrences in ``sequence``."""
    q = dfa.start
    out = []
    index = dfa.index
    for i, a in enumerate(sequence, start=1):
        try:
            q = dfa.delta[q][index[a]]
        except KeyError:
            raise ValueError(f"letter {a!r} at position {i} is not in the alphabet") from None
        if q in dfa.finals:
            out.append(i)
    return out


def to_dot(dfa: Dfa, name: str = "dfa", backmap=None) -> str:
    """Graphviz text; parallel edges are merged into one comma-labelled edge."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for q in range(dfa.n_states):
        shape = "doublecircle" if q in dfa.finals else "circle"
        label = str(q)
        if backmap is not None and backmap[q]:
            label += f"\\n{backmap[q]}"
        lines.append(f'  {q} [shape={shape}, label="{label}"];')
    lines.append(f"  __start -> {dfa.start};")
    for q in range(dfa.n_states):
        edges: dict = {}
        for k, a in enumerate(dfa.alphabet):
            edges.setdefault(dfa.delta[q][k], []).append(a)
        for t, letters in edges.items():
            lines.append(f'  {q} -> {t} [label="{",".join(letters)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_dot(text: str) -> Dfa:
    """Inverse of :func:`to_dot` (for round-tripping exported automata)."""
    import re

    finals, delta, start = set(), {}, 0
    alphabet: list = []
    for line in text.splitlines():
        line = line.strip()
        m = re.match(r'^(\d+) \[shape=(\w+)', line)
        if m:
            q = int(m.group(1))
            delta.setdefault(q, {})
            if m.group(2) == "doublecircle":
                finals.add(q)
            continue
        m = re.match(r"^__start -> (\d+);", line)
        if m:
            start = int(m.group(1))
            continue
        m = re.match(r'^(\d+) -> (\d+) \[label="([^"]*)"\];', line)
        if m:
            q, t = int(m.group(1)), int(m.group(2))
            for a in m.group(3).split(","):
                delta.setdefault(q, {})[a] = t
                if a not in alphabet:
                    alphabet.append(a)
    alphabet_t = tuple(sorted(alphabet, key=lambda a: alphabet.index(a)))
    rows = tuple(tuple(delta[q][a] for a in alphabet_t) for q in sorted(delta))
    return Dfa(alphabet_t, rows, start, frozenset(finals))
