"""Parser for the YARA-subset signature rule language.

Grammar (EBNF, also documented in docs/rule-language.md):

    file       = { rule } ;
    rule       = "rule" IDENT "{" meta strings? cond "}" ;
    meta       = "meta" ":" { IDENT "=" metavalue } ;
    metavalue  = STRING | INT | "true" | "false" ;
    strings    = "strings" ":" { STRING_ID "=" pattern { modifier } } ;
    pattern    = STRING | REGEX | HEX ;
    modifier   = "nocase" ;
    cond       = "condition" ":" orexpr ;
    orexpr     = andexpr { "or" andexpr } ;
    andexpr    = notexpr { "and" notexpr } ;
    notexpr    = "not" notexpr | primary ;
    primary    = "(" orexpr ")" | STRING_ID | COUNT_ID cmp INT | ofexpr ;
    ofexpr     = ("any" | "all" | INT) "of" ("them" | "(" idlist ")") ;
    cmp        = "<" | "<=" | "==" | ">=" | ">" ;

Text strings support \\" \\\\ \\n \\t \\r \\xHH escapes; regex literals
are delimited by slashes; hex strings are brace-enclosed byte pairs
with ?? wildcards. // and /* */ comments are skipped anywhere.
"""

from __future__ import annotations

from datetime import date

from . import rex
from .errors import (
    InvalidHex,
    InvalidMeta,
    InvalidRegex,
    MissingMeta,
    RuleSyntaxError,
    UndeclaredString,
)
from .model import (
    REQUIRED_META_KEYS,
    And,
    CountCmp,
    Not,
    OfExpr,
    Or,
    Rule,
    StringPattern,
    StringRef,
    condition_string_ids,
)

_KEYWORDS = {
    "rule", "meta", "strings", "condition", "nocase",
    "and", "or", "not", "any", "all", "of", "them", "true", "false",
}

_CMP_OPS = ("<=", ">=", "==", "<", ">")

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")

_HEX_DIGITS = set("0123456789abcdefABCDEF")

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind: str, value, line: int, col: int):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r})"


class _Scanner:
    """Lazy tokenizer. The parser pulls tokens one at a time and can
    switch into raw reads for hex bodies, which keeps the lexer free of
    section-dependent modes."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self._peeked: _Token | None = None

    def error(self, message: str, expected: tuple[str, ...] = ()) -> RuleSyntaxError:
        return RuleSyntaxError(message, self.line, self.col, expected)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_trivia(self) -> None:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance()
            elif text.startswith("//", self.pos):
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
            elif text.startswith("/*", self.pos):
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated /* comment")
                self._advance(end + 2 - self.pos)
            else:
                return

    def peek(self) -> _Token:
        if self._peeked is None:
            self._peeked = self._lex()
        return self._peeked

    def next(self) -> _Token:
        tok = self.peek()
        self._peeked = None
        return tok

    def expect(self, kind: str, expected_desc: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise RuleSyntaxError(
                f"unexpected {_describe(tok)}",
                tok.line,
                tok.col,
                (expected_desc or kind,),
            )
        return self.next()

    def _lex(self) -> _Token:
        self._skip_trivia()
        line, col = self.line, self.col
        text = self.text
        if self.pos >= len(text):
            return _Token("EOF", None, line, col)
        ch = text[self.pos]
        if ch in _IDENT_START:
            start = self.pos
            while self.pos < len(text) and text[self.pos] in _IDENT_CONT:
                self._advance()
            word = text[start : self.pos]
            if word in _KEYWORDS:
                return _Token(word.upper(), word, line, col)
            return _Token("IDENT", word, line, col)
        if ch in "$#":
            self._advance()
            start = self.pos
            while self.pos < len(text) and text[self.pos] in _IDENT_CONT:
                self._advance()
            name = text[start : self.pos]
            if not name:
                raise RuleSyntaxError(
                    f"{ch!r} must be followed by an identifier", line, col
                )
            kind = "STRING_ID" if ch == "$" else "COUNT_ID"
            return _Token(kind, "$" + name, line, col)
        if ch.isdigit() or (ch == "-" and text[self.pos + 1 : self.pos + 2].isdigit()):
            start = self.pos
            self._advance()
            while self.pos < len(text) and text[self.pos].isdigit():
                self._advance()
            return _Token("INT", int(text[start : self.pos]), line, col)
        if ch == '"':
            return _Token("STRING", self._lex_text_string(), line, col)
        if ch == "/":
            return _Token("REGEX", self._lex_regex(), line, col)
        for op in _CMP_OPS:
            if text.startswith(op, self.pos):
                self._advance(len(op))
                return _Token("CMP", op, line, col)
        singles = {"{": "LBRACE", "}": "RBRACE", "(": "LPAREN", ")": "RPAREN",
                   ":": "COLON", ",": "COMMA", "=": "EQ"}
        if ch in singles:
            self._advance()
            return _Token(singles[ch], ch, line, col)
        raise RuleSyntaxError(f"unexpected character {ch!r}", line, col)

    def _lex_text_string(self) -> str:
        self._advance()  # opening quote
        out: list[str] = []
        text = self.text
        while True:
            if self.pos >= len(text) or text[self.pos] == "\n":
                raise self.error("unterminated string literal")
            ch = text[self.pos]
            if ch == '"':
                self._advance()
                return "".join(out)
            if ch == "\\":
                self._advance()
                esc = text[self.pos : self.pos + 1]
                if esc in _ESCAPES:
                    out.append(_ESCAPES[esc])
                    self._advance()
                elif esc == "x":
                    digits = text[self.pos + 1 : self.pos + 3]
                    if len(digits) != 2 or any(d not in _HEX_DIGITS for d in digits):
                        raise self.error("\\x escape requires two hex digits")
                    out.append(chr(int(digits, 16)))
                    self._advance(3)
                else:
                    raise self.error(f"unknown escape \\{esc}")
            else:
                out.append(ch)
                self._advance()

    def _lex_regex(self) -> str:
        self._advance()  # opening slash
        out: list[str] = []
        text = self.text
        while True:
            if self.pos >= len(text) or text[self.pos] == "\n":
                raise self.error("unterminated regex literal")
            ch = text[self.pos]
            if ch == "/":
                self._advance()
                return "".join(out)
            if ch == "\\":
                nxt = text[self.pos + 1 : self.pos + 2]
                if nxt == "/":
                    out.append("/")
                    self._advance(2)
                    continue
                out.append(ch)
                self._advance()
                if self.pos < len(text):
                    out.append(text[self.pos])
                    self._advance()
            else:
                out.append(ch)
                self._advance()

    def read_hex_items(self) -> tuple:
        """Raw read of a hex string body; the opening { is consumed."""
        items: list[int | None] = []
        text = self.text
        while True:
            self._skip_trivia()
            if self.pos >= len(text):
                raise InvalidHex(
                    f"line {self.line}: unterminated hex string"
                )
            ch = text[self.pos]
            if ch == "}":
                self._advance()
                break
            if ch == "?":
                if text[self.pos + 1 : self.pos + 2] != "?":
                    raise InvalidHex(
                        f"line {self.line}: wildcard must be written as ??"
                    )
                items.append(None)
                self._advance(2)
                continue
            pair = text[self.pos : self.pos + 2]
            if len(pair) == 2 and all(c in _HEX_DIGITS for c in pair):
                items.append(int(pair, 16))
                self._advance(2)
                continue
            raise InvalidHex(
                f"line {self.line}, column {self.col}: expected a two-digit "
                f"hex byte or ??, found {ch!r}"
            )
        if not items:
            raise InvalidHex(f"line {self.line}: hex string must contain at least one byte")
        return tuple(items)


def _describe(tok: _Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    return f"{tok.kind} {tok.value!r}" if tok.value is not None else tok.kind


class _Parser:
    def __init__(self, source: str):
        self.scanner = _Scanner(source)

    # rule = "rule" IDENT "{" meta strings? cond "}"
    def parse_rule(self) -> Rule:
        sc = self.scanner
        sc.expect("RULE", "'rule'")
        name_tok = sc.expect("IDENT", "rule name")
        name = name_tok.value
        sc.expect("LBRACE", "'{'")
        sc.expect("META", "'meta'")
        sc.expect("COLON", "':'")
        meta = self._parse_meta(name)
        strings: list[StringPattern] = []
        if sc.peek().kind == "STRINGS":
            sc.next()
            sc.expect("COLON", "':'")
            strings = self._parse_strings()
        sc.expect("CONDITION", "'condition'")
        sc.expect("COLON", "':'")
        condition = self._parse_or()
        sc.expect("RBRACE", "'}'")
        declared = {p.id for p in strings}
        for sid in sorted(condition_string_ids(condition)):
            if sid not in declared:
                raise UndeclaredString(name, sid)
        check_required_meta(name, meta)
        return Rule(
            name=name,
            meta=tuple(sorted(meta.items())),
            strings=tuple(strings),
            condition=condition,
        )

    def _parse_meta(self, rule_name: str) -> dict:
        sc = self.scanner
        meta: dict[str, object] = {}
        while sc.peek().kind == "IDENT":
            key = sc.next().value
            sc.expect("EQ", "'='")
            tok = sc.peek()
            if tok.kind == "STRING":
                meta[key] = sc.next().value
            elif tok.kind == "INT":
                meta[key] = sc.next().value
            elif tok.kind in ("TRUE", "FALSE"):
                meta[key] = sc.next().kind == "TRUE"
            else:
                raise RuleSyntaxError(
                    f"unexpected {_describe(tok)}",
                    tok.line,
                    tok.col,
                    ("string", "integer", "true", "false"),
                )
        if not meta:
            raise MissingMeta(rule_name, REQUIRED_META_KEYS)
        return meta

    def _parse_strings(self) -> list[StringPattern]:
        sc = self.scanner
        out: list[StringPattern] = []
        seen: set[str] = set()
        while sc.peek().kind == "STRING_ID":
            id_tok = sc.next()
            sid = id_tok.value
            if sid in seen:
                raise RuleSyntaxError(
                    f"string {sid} declared twice", id_tok.line, id_tok.col
                )
            seen.add(sid)
            sc.expect("EQ", "'='")
            tok = sc.peek()
            if tok.kind == "STRING":
                sc.next()
                pattern = StringPattern(sid, "text", tok.value)
            elif tok.kind == "REGEX":
                sc.next()
                _check_regex(sid, tok.value)
                pattern = StringPattern(sid, "regex", tok.value)
            elif tok.kind == "LBRACE":
                sc.next()
                pattern = StringPattern(sid, "hex", sc.read_hex_items())
            else:
                raise RuleSyntaxError(
                    f"unexpected {_describe(tok)}",
                    tok.line,
                    tok.col,
                    ("string literal", "regex literal", "hex string"),
                )
            while sc.peek().kind == "NOCASE":
                mod_tok = sc.next()
                if pattern.kind == "hex":
                    raise RuleSyntaxError(
                        "nocase cannot apply to hex strings",
                        mod_tok.line,
                        mod_tok.col,
                    )
                pattern = StringPattern(sid, pattern.kind, pattern.body, nocase=True)
            if pattern.kind == "text" and not pattern.body:
                raise RuleSyntaxError(
                    "text pattern must be non-empty", id_tok.line, id_tok.col
                )
            out.append(pattern)
        return out

    # condition expression, precedence: or < and < not < primary
    def _parse_or(self):
        children = [self._parse_and()]
        while self.scanner.peek().kind == "OR":
            self.scanner.next()
            children.append(self._parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def _parse_and(self):
        children = [self._parse_not()]
        while self.scanner.peek().kind == "AND":
            self.scanner.next()
            children.append(self._parse_not())
        return children[0] if len(children) == 1 else And(tuple(children))

    def _parse_not(self):
        if self.scanner.peek().kind == "NOT":
            self.scanner.next()
            return Not(self._parse_not())
        return self._parse_primary()

    def _parse_primary(self):
        sc = self.scanner
        tok = sc.peek()
        if tok.kind == "LPAREN":
            sc.next()
            inner = self._parse_or()
            sc.expect("RPAREN", "')'")
            return inner
        if tok.kind == "STRING_ID":
            sc.next()
            return StringRef(tok.value)
        if tok.kind == "COUNT_ID":
            sc.next()
            op_tok = sc.expect("CMP", "comparison operator")
            n_tok = sc.expect("INT", "integer")
            return CountCmp(tok.value, op_tok.value, n_tok.value)
        if tok.kind in ("ANY", "ALL", "INT"):
            sc.next()
            quorum = tok.value if tok.kind == "INT" else tok.kind.lower()
            sc.expect("OF", "'of'")
            nxt = sc.peek()
            if nxt.kind == "THEM":
                sc.next()
                return OfExpr(quorum, None)
            sc.expect("LPAREN", "'them' or '('")
            ids = [sc.expect("STRING_ID", "string id").value]
            while sc.peek().kind == "COMMA":
                sc.next()
                ids.append(sc.expect("STRING_ID", "string id").value)
            sc.expect("RPAREN", "')'")
            return OfExpr(quorum, tuple(ids))
        raise RuleSyntaxError(
            f"unexpected {_describe(tok)}",
            tok.line,
            tok.col,
            ("'('", "$id", "#id", "'any'", "'all'", "'not'", "N of (...)"),
        )


def _check_regex(string_id: str, body: str) -> None:
    try:
        node = rex.parse(body)
    except rex.RegexSyntaxError as exc:
        raise InvalidRegex(f"string {string_id}: {exc}") from exc
    if rex.nullable(node):
        raise InvalidRegex(
            f"string {string_id}: regex can match the empty string"
        )


def check_required_meta(rule_name: str, meta: dict) -> None:
    missing = tuple(k for k in REQUIRED_META_KEYS if k not in meta)
    if missing:
        raise MissingMeta(rule_name, missing)
    if not isinstance(meta["description"], str) or not meta["description"]:
        raise InvalidMeta(f"rule {rule_name!r}: description must be a non-empty string")
    if not isinstance(meta["category"], str) or not meta["category"]:
        raise InvalidMeta(f"rule {rule_name!r}: category must be a non-empty string")
    severity = meta["severity"]
    if isinstance(severity, bool) or not isinstance(severity, int) or not 0 <= severity <= 5:
        raise InvalidMeta(
            f"rule {rule_name!r}: severity must be an integer in [0, 5], got {severity!r}"
        )
    created = meta["created"]
    if not isinstance(created, str):
        raise InvalidMeta(f"rule {rule_name!r}: created must be an ISO-8601 date string")
    try:
        date.fromisoformat(created)
    except ValueError as exc:
        raise InvalidMeta(
            f"rule {rule_name!r}: created must be an ISO-8601 date, got {created!r}"
        ) from exc


def parse_rule(source: str) -> Rule:
    """Parse exactly one rule; trailing content is a syntax error."""
    parser = _Parser(source)
    rule = parser.parse_rule()
    trailing = parser.scanner.peek()
    if trailing.kind != "EOF":
        raise RuleSyntaxError(
            f"unexpected {_describe(trailing)} after rule",
            trailing.line,
            trailing.col,
            ("end of input",),
        )
    return rule


def parse_rules(source: str) -> list[Rule]:
    """Parse a rule file containing zero or more rules."""
    parser = _Parser(source)
    rules: list[Rule] = []
    while parser.scanner.peek().kind != "EOF":
        rules.append(parser.parse_rule())
    return rules


# --- Canonical rendering -------------------------------------------------


def _render_meta_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return '"' + _escape_text(value) + '"'


def _escape_text(value: str) -> str:
    out: list[str] = []
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20:
            out.append(f"\\x{ord(ch):02x}")
        else:
            out.append(ch)
    return "".join(out)


def _render_pattern(pattern: StringPattern) -> str:
    if pattern.kind == "text":
        body = '"' + _escape_text(pattern.body) + '"'
    elif pattern.kind == "regex":
        body = "/" + pattern.body.replace("/", "\\/") + "/"
    else:
        parts = ["??" if b is None else f"{b:02X}" for b in pattern.body]
        body = "{ " + " ".join(parts) + " }"
    if pattern.nocase:
        body += " nocase"
    return body


def _render_condition(node) -> str:
    if isinstance(node, StringRef):
        return node.string_id
    if isinstance(node, CountCmp):
        return f"#{node.string_id[1:]} {node.op} {node.value}"
    if isinstance(node, OfExpr):
        target = "them" if node.ids is None else "(" + ", ".join(node.ids) + ")"
        return f"{node.quorum} of {target}"
    if isinstance(node, Not):
        return f"not {_render_condition(node.child)}"
    if isinstance(node, And):
        return "(" + " and ".join(_render_condition(c) for c in node.children) + ")"
    if isinstance(node, Or):
        return "(" + " or ".join(_render_condition(c) for c in node.children) + ")"
    raise TypeError(f"unknown condition node {node!r}")


def render_rule(rule: Rule) -> str:
    """Render a rule to canonical source. parse(render(r)) == r, and the
    canonical text is what package fingerprints are computed over."""
    lines = [f"rule {rule.name} {{", "  meta:"]
    for key, value in rule.meta:
        lines.append(f"    {key} = {_render_meta_value(value)}")
    if rule.strings:
        lines.append("  strings:")
        for pattern in rule.strings:
            lines.append(f"    {pattern.id} = {_render_pattern(pattern)}")
    lines.append("  condition:")
    lines.append(f"    {_render_condition(rule.condition)}")
    lines.append("}")
    return "\n".join(lines)
