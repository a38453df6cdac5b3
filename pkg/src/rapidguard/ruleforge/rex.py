"""Backtracking-free regex engine for signature string patterns.

The rule language deliberately supports a small regex dialect: byte
literals, ``.``, character classes, alternation, grouping, and
bounded/unbounded repetition. Backreferences, lookaround, anchors, and
lazy quantifiers are rejected at parse time, so every pattern compiles
to a plain Thompson NFA and matching never backtracks. This is what
makes scan cost predictable regardless of what a rule author writes.

Matching semantics are longest-match-at-offset over bytes: for a start
offset the engine reports the length of the longest substring the
pattern can match there (POSIX-style, not Perl first-alternative).
Patterns that can match the empty string are rejected, so every match
has length >= 1 and occurrence counts are well defined.

The scanner runs a lazily materialized DFA: NFA state sets are interned
to integer ids and byte transitions are cached as they are first taken,
so repeated scans of similar inputs approach DFA speed.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_REPEAT = 256

_ALL_BYTES = (1 << 256) - 1
_NEWLINE_BIT = 1 << 0x0A

_CLASS_SHORTHANDS = {
    "d": "0123456789",
    "w": "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ_abcdefghijklmnopqrstuvwxyz",
    "s": " \t\n\r\x0b\x0c",
}

_SIMPLE_ESCAPES = {
    "n": 0x0A,
    "t": 0x09,
    "r": 0x0D,
    "f": 0x0C,
    "v": 0x0B,
    "a": 0x07,
}

_METACHARS = set(".*+?()[]{}|/\\^$-")


class RegexSyntaxError(ValueError):
    """Pattern is outside the supported dialect or malformed."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at pattern offset {pos})")
        self.pos = pos


# --- AST ---------------------------------------------------------------


@dataclass(frozen=True)
class ByteSet:
    mask: int  # 256-bit membership mask


@dataclass(frozen=True)
class Seq:
    parts: tuple


@dataclass(frozen=True)
class Alt:
    options: tuple


@dataclass(frozen=True)
class Rep:
    child: object
    lo: int
    hi: int | None  # None = unbounded


def _mask_of(chars: str) -> int:
    mask = 0
    for ch in chars:
        mask |= 1 << ord(ch)
    return mask


def nullable(node) -> bool:
    """True when the node can match the empty string."""
    if isinstance(node, ByteSet):
        return False
    if isinstance(node, Seq):
        return all(nullable(p) for p in node.parts)
    if isinstance(node, Alt):
        return any(nullable(o) for o in node.options)
    if isinstance(node, Rep):
        return node.lo == 0 or nullable(node.child)
    raise TypeError(f"unknown node {node!r}")


def fold_case(node):
    """Return a copy with ASCII letters matching both cases (nocase)."""
    if isinstance(node, ByteSet):
        mask = node.mask
        for b in range(0x41, 0x5B):  # A-Z
            if mask >> b & 1:
                mask |= 1 << (b + 0x20)
        for b in range(0x61, 0x7B):  # a-z
            if mask >> b & 1:
                mask |= 1 << (b - 0x20)
        return ByteSet(mask)
    if isinstance(node, Seq):
        return Seq(tuple(fold_case(p) for p in node.parts))
    if isinstance(node, Alt):
        return Alt(tuple(fold_case(o) for o in node.options))
    if isinstance(node, Rep):
        return Rep(fold_case(node.child), node.lo, node.hi)
    raise TypeError(f"unknown node {node!r}")


# --- Parser ------------------------------------------------------------


class _Parser:
    def __init__(self, pattern: str):
        self.pat = pattern
        self.pos = 0

    def error(self, message: str) -> RegexSyntaxError:
        return RegexSyntaxError(message, self.pos)

    def peek(self) -> str | None:
        return self.pat[self.pos] if self.pos < len(self.pat) else None

    def take(self) -> str:
        ch = self.pat[self.pos]
        self.pos += 1
        return ch

    def parse(self):
        node = self.parse_alt()
        if self.pos != len(self.pat):
            raise self.error(f"unexpected {self.pat[self.pos]!r}")
        return node

    def parse_alt(self):
        options = [self.parse_seq()]
        while self.peek() == "|":
            self.take()
            options.append(self.parse_seq())
        return options[0] if len(options) == 1 else Alt(tuple(options))

    def parse_seq(self):
        parts = []
        while self.peek() not in (None, "|", ")"):
            parts.append(self.parse_repeat())
        if len(parts) == 1:
            return parts[0]
        return Seq(tuple(parts))

    def parse_repeat(self):
        atom = self.parse_atom()
        ch = self.peek()
        if ch == "*":
            self.take()
            node = Rep(atom, 0, None)
        elif ch == "+":
            self.take()
            node = Rep(atom, 1, None)
        elif ch == "?":
            self.take()
            node = Rep(atom, 0, 1)
        elif ch == "{":
            node = Rep(atom, *self.parse_bounds())
        else:
            return atom
        if self.peek() in ("*", "+", "?"):
            raise self.error(
                "quantifier follows quantifier; lazy and possessive "
                "forms are not supported"
            )
        return node

    def parse_bounds(self) -> tuple[int, int | None]:
        start = self.pos
        self.take()  # {
        digits = ""
        while self.peek() and self.peek().isdigit():
            digits += self.take()
        if not digits:
            self.pos = start
            raise self.error("malformed {m,n} bound")
        lo = int(digits)
        hi: int | None = lo
        if self.peek() == ",":
            self.take()
            digits = ""
            while self.peek() and self.peek().isdigit():
                digits += self.take()
            hi = int(digits) if digits else None
        if self.peek() != "}":
            raise self.error("malformed {m,n} bound: missing }")
        self.take()
        if hi is not None and (hi < lo or hi > MAX_REPEAT):
            raise self.error(f"repeat bound must satisfy m <= n <= {MAX_REPEAT}")
        if lo > MAX_REPEAT:
            raise self.error(f"repeat bound must be <= {MAX_REPEAT}")
        return lo, hi

    def parse_atom(self):
        ch = self.peek()
        if ch is None:
            raise self.error("pattern ended unexpectedly")
        if ch == "(":
            self.take()
            if self.peek() == "?":
                self.take()
                if self.peek() != ":":
                    raise self.error(
                        "only (?:...) groups are supported; lookaround and "
                        "named groups are outside the dialect"
                    )
                self.take()
            node = self.parse_alt()
            if self.peek() != ")":
                raise self.error("unbalanced parenthesis")
            self.take()
            return node
        if ch == "[":
            return self.parse_class()
        if ch == ".":
            self.take()
            return ByteSet(_ALL_BYTES & ~_NEWLINE_BIT)
        if ch == "\\":
            return self.parse_escape()
        if ch in "*+?{":
            raise self.error(f"quantifier {ch!r} with nothing to repeat")
        if ch in ")|]^$":
            if ch in "^$":
                raise self.error("anchors are not supported in this dialect")
            raise self.error(f"unexpected {ch!r}")
        self.take()
        return self.literal_node(ch)

    def literal_node(self, ch: str):
        encoded = ch.encode("utf-8")
        if len(encoded) == 1:
            return ByteSet(1 << encoded[0])
        return Seq(tuple(ByteSet(1 << b) for b in encoded))

    def parse_escape(self):
        self.take()  # backslash
        ch = self.peek()
        if ch is None:
            raise self.error("dangling backslash")
        self.take()
        if ch in _CLASS_SHORTHANDS:
            return ByteSet(_mask_of(_CLASS_SHORTHANDS[ch]))
        if ch in "DWS":
            return ByteSet(_ALL_BYTES & ~_mask_of(_CLASS_SHORTHANDS[ch.lower()]))
        if ch in _SIMPLE_ESCAPES:
            return ByteSet(1 << _SIMPLE_ESCAPES[ch])
        if ch == "x":
            return ByteSet(1 << self.parse_hex_byte())
        if ch in _METACHARS:
            return ByteSet(1 << ord(ch))
        if ch == "b" or ch.isdigit():
            raise self.error(
                "word boundaries and backreferences are not supported"
            )
        raise self.error(f"unknown escape \\{ch}")

    def parse_hex_byte(self) -> int:
        digits = self.pat[self.pos : self.pos + 2]
        if len(digits) != 2 or any(c not in "0123456789abcdefABCDEF" for c in digits):
            raise self.error("\\x requires two hex digits")
        self.pos += 2
        return int(digits, 16)

    def parse_class(self):
        self.take()  # [
        negate = False
        if self.peek() == "^":
            negate = True
            self.take()
        mask = 0
        first = True
        while True:
            ch = self.peek()
            if ch is None:
                raise self.error("unterminated character class")
            if ch == "]" and not first:
                self.take()
                break
            lo_mask, lo_byte = self.parse_class_item()
            if lo_byte is not None and self.peek() == "-" and self.pat[
                self.pos + 1 : self.pos + 2
            ] not in ("]", ""):
                self.take()  # -
                hi_mask, hi_byte = self.parse_class_item()
                if hi_byte is None:
                    raise self.error("class range endpoint must be a single byte")
                if hi_byte < lo_byte:
                    raise self.error("reversed class range")
                for b in range(lo_byte, hi_byte + 1):
                    mask |= 1 << b
            else:
                mask |= lo_mask
            first = False
        if negate:
            mask = _ALL_BYTES & ~mask
        if mask == 0:
            raise self.error("empty character class")
        return ByteSet(mask)

    def parse_class_item(self) -> tuple[int, int | None]:
        """Returns (mask, byte) where byte is set only for single-byte items."""
        ch = self.take()
        if ch == "\\":
            esc = self.peek()
            if esc is None:
                raise self.error("dangling backslash in class")
            self.take()
            if esc in _CLASS_SHORTHANDS:
                return _mask_of(_CLASS_SHORTHANDS[esc]), None
            if esc in "DWS":
                return _ALL_BYTES & ~_mask_of(_CLASS_SHORTHANDS[esc.lower()]), None
            if esc in _SIMPLE_ESCAPES:
                b = _SIMPLE_ESCAPES[esc]
                return 1 << b, b
            if esc == "x":
                b = self.parse_hex_byte()
                return 1 << b, b
            if esc in _METACHARS or esc == "]":
                return 1 << ord(esc), ord(esc)
            raise self.error(f"unknown escape \\{esc} in class")
        code = ord(ch)
        if code > 0x7F:
            raise self.error("non-ASCII characters in classes are not supported")
        return 1 << code, code


def parse(pattern: str):
    """Parse a pattern into its AST, rejecting anything off-dialect."""
    return _Parser(pattern).parse()


# --- NFA compilation and scanning ---------------------------------------


class _Nfa:
    def __init__(self):
        self.edges: list[list[tuple[int, int]]] = []  # state -> [(mask, target)]
        self.eps: list[list[int]] = []

    def state(self) -> int:
        self.edges.append([])
        self.eps.append([])
        return len(self.edges) - 1

    def add_edge(self, src: int, mask: int, dst: int) -> None:
        self.edges[src].append((mask, dst))

    def add_eps(self, src: int, dst: int) -> None:
        self.eps[src].append(dst)


def _build(nfa: _Nfa, node) -> tuple[int, int]:
    """Thompson construction; returns (entry, exit) states."""
    if isinstance(node, ByteSet):
        a, b = nfa.state(), nfa.state()
        nfa.add_edge(a, node.mask, b)
        return a, b
    if isinstance(node, Seq):
        if not node.parts:
            a = nfa.state()
            return a, a
        entry, cur = _build(nfa, node.parts[0])
        for part in node.parts[1:]:
            nxt_entry, nxt_exit = _build(nfa, part)
            nfa.add_eps(cur, nxt_entry)
            cur = nxt_exit
        return entry, cur
    if isinstance(node, Alt):
        a, b = nfa.state(), nfa.state()
        for option in node.options:
            entry, exit_ = _build(nfa, option)
            nfa.add_eps(a, entry)
            nfa.add_eps(exit_, b)
        return a, b
    if isinstance(node, Rep):
        a, b = nfa.state(), nfa.state()
        cur = a
        for _ in range(node.lo):
            entry, exit_ = _build(nfa, node.child)
            nfa.add_eps(cur, entry)
            cur = exit_
        if node.hi is None:
            entry, exit_ = _build(nfa, node.child)
            nfa.add_eps(cur, entry)
            nfa.add_eps(exit_, entry)
            nfa.add_eps(cur, b)
            nfa.add_eps(exit_, b)
        else:
            nfa.add_eps(cur, b)
            for _ in range(node.hi - node.lo):
                entry, exit_ = _build(nfa, node.child)
                nfa.add_eps(cur, entry)
                nfa.add_eps(exit_, b)
                cur = exit_
            nfa.add_eps(cur, b)
        return a, b
    raise TypeError(f"unknown node {node!r}")


class CompiledRegex:
    """A pattern compiled to an NFA with a lazily cached DFA on top."""

    def __init__(self, node, nocase: bool = False):
        if nullable(node):
            raise RegexSyntaxError("pattern can match the empty string", 0)
        if nocase:
            node = fold_case(node)
        self.node = node
        nfa = _Nfa()
        self._nfa = nfa
        self._start, self._accept = _build(nfa, node)
        start_set = self._closure({self._start})
        self._sets: dict[frozenset, int] = {}
        self._set_list: list[frozenset] = []
        self._accepting: list[bool] = []
        self._trans: dict[tuple[int, int], int] = {}
        self._start_id = self._intern(start_set)
        self._first_table = self._first_byte_table(start_set)

    def _closure(self, states: set[int]) -> frozenset:
        stack = list(states)
        seen = set(states)
        eps = self._nfa.eps
        while stack:
            s = stack.pop()
            for t in eps[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    def _intern(self, stateset: frozenset) -> int:
        sid = self._sets.get(stateset)
        if sid is None:
            sid = len(self._set_list)
            self._sets[stateset] = sid
            self._set_list.append(stateset)
            self._accepting.append(self._accept in stateset)
        return sid

    def _first_byte_table(self, start_set: frozenset) -> bytes:
        mask = 0
        for s in start_set:
            for edge_mask, _ in self._nfa.edges[s]:
                mask |= edge_mask
        return bytes(1 if mask >> b & 1 else 0 for b in range(256))

    def _step(self, sid: int, byte: int) -> int:
        key = (sid, byte)
        nxt = self._trans.get(key)
        if nxt is None:
            out: set[int] = set()
            bit = 1 << byte
            edges = self._nfa.edges
            for s in self._set_list[sid]:
                for mask, dst in edges[s]:
                    if mask & bit:
                        out.add(dst)
            nxt = self._intern(self._closure(out)) if out else -1
            self._trans[key] = nxt
        return nxt

    def longest_at(self, data: bytes, offset: int) -> int | None:
        """Length of the longest match starting at offset, or None."""
        sid = self._start_id
        best = None
        pos = offset
        n = len(data)
        while pos < n:
            sid = self._step(sid, data[pos])
            if sid < 0:
                break
            pos += 1
            if self._accepting[sid]:
                best = pos - offset
        return best

    def find_all(self, data: bytes) -> list[tuple[int, int]]:
        """All (offset, length) longest matches, one per matching offset."""
        out = []
        marks = data.translate(self._first_table)
        i = marks.find(1)
        while i >= 0:
            length = self.longest_at(data, i)
            if length is not None:
                out.append((i, length))
            i = marks.find(1, i + 1)
        return out


def compile_pattern(pattern: str, nocase: bool = False) -> CompiledRegex:
    return CompiledRegex(parse(pattern), nocase=nocase)
