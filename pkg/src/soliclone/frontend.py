"""Tolerant structural parsing of Solidity sources and fragment extraction.

The parser recovers top-level declarations, member signatures, and
brace-matched bodies.  Statement-level constructs inside bodies are kept as
opaque raw lines, so anything from the 0.5 - 0.8 language era passes through
without aborting a corpus run.  It is deliberately not a full expression
parser: clone detection happens on normalized lines, and demographics only
need declaration counts.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BinaryOrEmptyInput, UnbalancedBraces

__all__ = [
    "SourceFile",
    "FunctionDecl",
    "ContractDecl",
    "ParsedUnit",
    "Fragment",
    "DemographicsReport",
    "read_source",
    "discover_sources",
    "parse_source",
    "extract_fragments",
    "corpus_demographics",
]

DEFAULT_MIN_LINES = 10
DEFAULT_MAX_LINES = 2500

FREE_FUNCTION_CONTRACT = "<file>"

_VISIBILITIES = ("public", "external", "internal", "private")
_MUTABILITIES = ("pure", "view", "payable")

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_PRAGMA_RE = re.compile(r"solidity\s*([^;]+);")
_USING_RE = re.compile(r"using\s+([\w$.]+)\s+for\s+([^;{]+);")
_TOP_KEYWORD_RE = re.compile(
    r"\b(pragma|import|abstract|contract|library|interface|function|"
    r"constructor|fallback|receive|struct|enum|error|type|using)\b"
)
_VAR_KEYWORD_STRIP_RE = re.compile(
    r"\b(public|private|internal|constant|immutable|override|virtual)\b"
)


@dataclass
class SourceFile:
    """One corpus file: path, full text, and its newline-delimited lines."""

    path: str
    text: str

    def __post_init__(self) -> None:
        self._lines = self.text.split("\n")

    @property
    def lines(self) -> list[str]:
        return self._lines

    @property
    def line_count(self) -> int:
        return len(self._lines)


@dataclass
class FunctionDecl:
    name: str  # "" for constructor/fallback/receive
    kind: str  # function | constructor | fallback | receive | modifier
    params: list[tuple[str, str]]  # (name or "", type text)
    visibility: str  # public | external | internal | private | unspecified
    mutability: str  # pure | view | payable | nonpayable
    body_span: tuple[int, int] | None  # 1-based inclusive, None when abstract
    body_lines: list[str]

    @property
    def display_name(self) -> str:
        if self.kind in ("function", "modifier"):
            return self.name
        return f"<{self.kind}>"


@dataclass
class ContractDecl:
    name: str
    kind: str  # contract | library | interface
    span: tuple[int, int]
    bases: list[str] = field(default_factory=list)
    state_vars: list[tuple[str, str, str]] = field(default_factory=list)
    functions: list[FunctionDecl] = field(default_factory=list)
    events: list[tuple[str, list[str]]] = field(default_factory=list)
    modifiers: list[tuple[str, list[str]]] = field(default_factory=list)
    usings: list[tuple[str, str]] = field(default_factory=list)
    # struct/enum names declared inside; used to tell apart user value types
    # from contract-type references during model extraction.
    type_names: set[str] = field(default_factory=set)
    modifier_defs: list[FunctionDecl] = field(default_factory=list)


@dataclass
class ParsedUnit:
    source: SourceFile
    pragma_versions: list[str]
    declarations: list[ContractDecl]
    # file-level struct/enum names (0.6+ allows them outside contracts)
    type_names: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class Fragment:
    """An extracted function body, the unit of clone comparison."""

    id: str
    file: str
    contract: str
    function: str
    function_kind: str
    span: tuple[int, int]
    lines: tuple[str, ...]


@dataclass(frozen=True)
class DemographicsReport:
    total_files: int = 0
    contracts: int = 0
    libraries: int = 0
    interfaces: int = 0
    events: int = 0
    modifiers: int = 0

    def __add__(self, other: "DemographicsReport") -> "DemographicsReport":
        return DemographicsReport(
            self.total_files + other.total_files,
            self.contracts + other.contracts,
            self.libraries + other.libraries,
            self.interfaces + other.interfaces,
            self.events + other.events,
            self.modifiers + other.modifiers,
        )


def fragment_id(file: str, span: tuple[int, int]) -> str:
    # Zero-padded so lexicographic id order equals (file, start, end) order.
    return f"{file}:{span[0]:06d}-{span[1]:06d}"


# ---------------------------------------------------------------------------
# source loading


def read_source(path: Path | str, relative_to: Path | str | None = None) -> SourceFile:
    """Load one .sol file, rejecting binary or empty content.

    Raises BinaryOrEmptyInput for zero-byte files, NUL bytes, or text that
    is not valid UTF-8; such files are skipped (and reported) by corpus runs.
    """
    p = Path(path)
    data = p.read_bytes()
    if not data:
        raise BinaryOrEmptyInput(f"{p}: empty file")
    if b"\x00" in data:
        raise BinaryOrEmptyInput(f"{p}: binary content")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise BinaryOrEmptyInput(f"{p}: not UTF-8 ({exc})") from None
    rel = str(p.relative_to(relative_to)) if relative_to is not None else str(p)
    return SourceFile(path=rel.replace("\\", "/"), text=text)


def discover_sources(root: Path | str) -> list[Path]:
    """All .sol files under ``root``, sorted by relative path."""
    root = Path(root)
    return sorted(p for p in root.rglob("*.sol") if p.is_file())


# ---------------------------------------------------------------------------
# masking: blank out comments and string interiors so structural scanning
# (braces, keywords) cannot be fooled by their content


def _mask(text: str) -> str:
    out = list(text)
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            if j == -1:
                j = n
            for k in range(i, j):
                out[k] = " "
            i = j
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            end = n if j == -1 else j + 2
            for k in range(i, end):
                if out[k] != "\n":
                    out[k] = " "
            i = end
        elif c in "\"'":
            j = i + 1
            while j < n and text[j] not in (c, "\n"):
                j += 2 if text[j] == "\\" else 1
            for k in range(i + 1, min(j, n)):
                if out[k] != "\n":
                    out[k] = " "
            i = min(j + 1, n)
        else:
            i += 1
    return "".join(out)


class _Scanner:
    """Shared cursor helpers over the masked text of one file."""

    def __init__(self, source: SourceFile):
        self.source = source
        self.raw = source.text
        self.masked = _mask(source.text)
        self.n = len(self.masked)
        self._line_starts = [0]
        for m in re.finditer("\n", self.raw):
            self._line_starts.append(m.end())

    def line_of(self, offset: int) -> int:
        return bisect.bisect_right(self._line_starts, offset)

    def check_balance(self) -> None:
        depth = 0
        for ch in self.masked:
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth < 0:
                    raise UnbalancedBraces(f"{self.source.path}: stray '}}'")
        if depth != 0:
            raise UnbalancedBraces(f"{self.source.path}: {depth} unclosed brace(s)")

    def match_brace(self, open_pos: int) -> int:
        """Offset of the '}' matching the '{' at ``open_pos``."""
        depth = 0
        for i in range(open_pos, self.n):
            ch = self.masked[i]
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return i
        raise UnbalancedBraces(f"{self.source.path}: unmatched '{{'")

    def match_paren(self, open_pos: int) -> int:
        depth = 0
        for i in range(open_pos, self.n):
            ch = self.masked[i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    return i
        raise UnbalancedBraces(f"{self.source.path}: unmatched '('")

    def skip_statement(self, pos: int, limit: int) -> int:
        """Advance past one ';'-terminated construct, or a brace block if one
        opens first.  Returns the offset just after it."""
        i = pos
        while i < limit:
            ch = self.masked[i]
            if ch == ";":
                return i + 1
            if ch == "{":
                return self.match_brace(i) + 1
            if ch == "(":
                i = self.match_paren(i) + 1
                continue
            i += 1
        return limit


# ---------------------------------------------------------------------------
# parsing


def parse_source(file: SourceFile) -> ParsedUnit:
    """Parse one source file into declarations.

    Tolerant by design: unknown constructs are skipped, bodies are kept as
    raw lines.  Raises UnbalancedBraces when the file's brace structure never
    closes; the caller skips and reports such files.
    """
    sc = _Scanner(file)
    sc.check_balance()
    unit = ParsedUnit(source=file, pragma_versions=[], declarations=[])
    free_functions: list[FunctionDecl] = []
    free_span: list[int] = []

    i = 0
    while i < sc.n:
        m = _TOP_KEYWORD_RE.search(sc.masked, i)
        if m is None:
            break
        word = m.group(1)
        if word == "pragma":
            end = sc.skip_statement(m.end(), sc.n)
            pm = _PRAGMA_RE.search(sc.masked, m.end(), end)
            if pm:
                constraint = " ".join(pm.group(1).split())
                if constraint:
                    unit.pragma_versions.append(constraint)
            i = end
        elif word == "import":
            i = sc.skip_statement(m.end(), sc.n)
        elif word == "abstract":
            i = m.end()
        elif word in ("contract", "library", "interface"):
            decl, i = _parse_declaration(sc, word, m.start(), m.end())
            if decl is not None:
                unit.declarations.append(decl)
            else:
                i = m.end()
        elif word in ("function", "constructor", "fallback", "receive"):
            fn, i = _parse_function(sc, word, m.start(), m.end(), sc.n)
            if fn is not None:
                free_functions.append(fn)
                if fn.body_span:
                    free_span.extend(fn.body_span)
            else:
                i = m.end()
        elif word in ("struct", "enum"):
            name_m = _IDENT_RE.match(sc.masked, _skip_ws(sc, m.end()))
            if name_m:
                unit.type_names.add(name_m.group(0))
            i = sc.skip_statement(m.end(), sc.n)
        else:  # error / type / using at file level
            i = sc.skip_statement(m.end(), sc.n)

    if free_functions:
        span = (min(free_span), max(free_span)) if free_span else (1, 1)
        unit.declarations.append(
            ContractDecl(
                name=FREE_FUNCTION_CONTRACT,
                kind="contract",
                span=span,
                functions=free_functions,
            )
        )
    return unit


def _skip_ws(sc: _Scanner, pos: int) -> int:
    while pos < sc.n and sc.masked[pos].isspace():
        pos += 1
    return pos


def _parse_declaration(
    sc: _Scanner, kind: str, start: int, after_kw: int
) -> tuple[ContractDecl | None, int]:
    p = _skip_ws(sc, after_kw)
    name_m = _IDENT_RE.match(sc.masked, p)
    if name_m is None:
        return None, after_kw
    name = name_m.group(0)
    open_pos = sc.masked.find("{", name_m.end())
    semi_pos = sc.masked.find(";", name_m.end())
    if open_pos == -1 or (semi_pos != -1 and semi_pos < open_pos):
        # declaration without a body (forward-ish); skip it
        return None, (semi_pos + 1 if semi_pos != -1 else name_m.end())
    header = sc.masked[name_m.end():open_pos]
    bases: list[str] = []
    is_m = re.search(r"\bis\b", header)
    if is_m:
        for part in _split_top_level(header[is_m.end():], ","):
            bm = _IDENT_RE.match(part.strip())
            if bm and bm.group(0) not in bases:
                bases.append(bm.group(0))
    close_pos = sc.match_brace(open_pos)
    decl = ContractDecl(
        name=name,
        kind=kind,
        span=(sc.line_of(start), sc.line_of(close_pos)),
        bases=bases,
    )
    _parse_members(sc, decl, open_pos + 1, close_pos)
    return decl, close_pos + 1


_MEMBER_WORDS = (
    "function",
    "constructor",
    "fallback",
    "receive",
    "event",
    "modifier",
    "using",
    "struct",
    "enum",
    "error",
    "type",
)


def _parse_members(sc: _Scanner, decl: ContractDecl, start: int, end: int) -> None:
    p = start
    while p < end:
        p = _skip_ws(sc, p)
        if p >= end:
            break
        ch = sc.masked[p]
        if ch == ";":
            p += 1
            continue
        m = _IDENT_RE.match(sc.masked, p)
        if m is None:
            p += 1
            continue
        word = m.group(0)
        if word in ("function", "constructor", "fallback", "receive"):
            fn, p = _parse_function(sc, word, p, m.end(), end)
            if fn is None:
                p = max(p, m.end())
            else:
                decl.functions.append(fn)
        elif word == "event":
            p = _parse_event(sc, decl, m.end(), end)
        elif word == "modifier":
            p = _parse_modifier(sc, decl, p, m.end(), end)
        elif word == "using":
            um = _USING_RE.match(sc.masked, p)
            if um:
                decl.usings.append((um.group(1), " ".join(um.group(2).split())))
                p = um.end()
            else:
                p = sc.skip_statement(m.end(), end)
        elif word in ("struct", "enum"):
            nm = _IDENT_RE.match(sc.masked, _skip_ws(sc, m.end()))
            if nm:
                decl.type_names.add(nm.group(0))
            p = sc.skip_statement(m.end(), end)
        elif word in ("error", "type"):
            p = sc.skip_statement(m.end(), end)
        else:
            p = _parse_state_var(sc, decl, p, end)


def _parse_function(
    sc: _Scanner, word: str, start: int, after_kw: int, limit: int
) -> tuple[FunctionDecl | None, int]:
    kind = "function" if word == "function" else word
    name = ""
    p = _skip_ws(sc, after_kw)
    if kind == "function":
        nm = _IDENT_RE.match(sc.masked, p)
        if nm:
            name = nm.group(0)
            p = _skip_ws(sc, nm.end())
        else:
            kind = "fallback"  # 0.5-era unnamed function
    if p >= limit or sc.masked[p] != "(":
        return None, p
    close = sc.match_paren(p)
    params = _parse_params(sc.masked[p + 1:close])

    # header between the parameter list and the body/terminator; parenthesised
    # chunks (modifier args, returns clause) are skipped while scanning
    header_parts: list[str] = []
    q = close + 1
    body_open = -1
    while q < limit:
        ch = sc.masked[q]
        if ch == "(":
            q = sc.match_paren(q) + 1
            continue
        if ch == "{":
            body_open = q
            break
        if ch == ";":
            break
        header_parts.append(ch)
        q += 1
    header_tokens = set("".join(header_parts).split())
    visibility = next((v for v in _VISIBILITIES if v in header_tokens), "unspecified")
    mutability = next((mu for mu in _MUTABILITIES if mu in header_tokens), "nonpayable")

    if body_open == -1:
        return (
            FunctionDecl(name, kind, params, visibility, mutability, None, []),
            min(q + 1, limit),
        )
    body_close = sc.match_brace(body_open)
    span = (sc.line_of(start), sc.line_of(body_close))
    body_lines = sc.source.lines[span[0] - 1:span[1]]
    fn = FunctionDecl(name, kind, params, visibility, mutability, span, body_lines)
    return fn, body_close + 1


def _parse_event(sc: _Scanner, decl: ContractDecl, pos: int, limit: int) -> int:
    p = _skip_ws(sc, pos)
    nm = _IDENT_RE.match(sc.masked, p)
    if nm is None:
        return sc.skip_statement(pos, limit)
    p = _skip_ws(sc, nm.end())
    types: list[str] = []
    if p < limit and sc.masked[p] == "(":
        close = sc.match_paren(p)
        types = [t for _, t in _parse_params(sc.masked[p + 1:close])]
        p = close + 1
    decl.events.append((nm.group(0), types))
    return sc.skip_statement(p, limit)


def _parse_modifier(
    sc: _Scanner, decl: ContractDecl, start: int, pos: int, limit: int
) -> int:
    p = _skip_ws(sc, pos)
    nm = _IDENT_RE.match(sc.masked, p)
    if nm is None:
        return sc.skip_statement(pos, limit)
    name = nm.group(0)
    p = _skip_ws(sc, nm.end())
    params: list[tuple[str, str]] = []
    if p < limit and sc.masked[p] == "(":
        close = sc.match_paren(p)
        params = _parse_params(sc.masked[p + 1:close])
        p = close + 1
    decl.modifiers.append((name, [t for _, t in params]))
    # keep the body so modifier fragments can be extracted when enabled
    q = p
    while q < limit and sc.masked[q] not in "{;":
        q += 1
    if q < limit and sc.masked[q] == "{":
        body_close = sc.match_brace(q)
        span = (sc.line_of(start), sc.line_of(body_close))
        decl.modifier_defs.append(
            FunctionDecl(
                name,
                "modifier",
                params,
                "unspecified",
                "nonpayable",
                span,
                sc.source.lines[span[0] - 1:span[1]],
            )
        )
        return body_close + 1
    return min(q + 1, limit)


def _parse_state_var(sc: _Scanner, decl: ContractDecl, start: int, limit: int) -> int:
    end = sc.skip_statement(start, limit)
    stmt = sc.masked[start:end]
    if stmt.endswith("}"):
        return end  # block construct we do not model; keep it opaque
    stmt = stmt.rstrip(";")
    left = _split_initializer(stmt)
    nm = re.search(r"([A-Za-z_$][\w$]*)\s*$", left)
    if nm is None:
        return end
    name = nm.group(1)
    rest = left[:nm.start()]
    visibility = "internal"
    for v in ("public", "private", "internal"):
        if re.search(rf"\b{v}\b", rest):
            visibility = v
            break
    type_text = " ".join(_VAR_KEYWORD_STRIP_RE.sub(" ", rest).split())
    if not type_text or name in _MEMBER_WORDS:
        return end
    decl.state_vars.append((name, type_text, visibility))
    return end


def _split_initializer(stmt: str) -> str:
    """Text before a top-level '=' (ignoring ==, =>, <=, >=, !=)."""
    depth = 0
    for i, ch in enumerate(stmt):
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "=" and depth == 0:
            prev = stmt[i - 1] if i else ""
            nxt = stmt[i + 1] if i + 1 < len(stmt) else ""
            if prev not in "=!<>" and nxt not in "=>":
                return stmt[:i]
    return stmt


def _split_top_level(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


_PARAM_DROP = {"memory", "storage", "calldata", "indexed", "payable"}


def _parse_params(text: str) -> list[tuple[str, str]]:
    params: list[tuple[str, str]] = []
    for part in _split_top_level(text, ","):
        part = " ".join(part.split())
        if not part:
            continue
        words = part.split(" ")
        words = [w for w in words if w not in _PARAM_DROP]
        if not words:
            continue
        rebuilt = " ".join(words)
        name = ""
        nm = re.search(r"\s([A-Za-z_$][\w$]*)$", rebuilt)
        if nm and not rebuilt[:nm.start()].rstrip().endswith(("=>", ",", "(")):
            name = nm.group(1)
            type_text = rebuilt[:nm.start()].strip()
        else:
            type_text = rebuilt
        params.append((name, type_text))
    return params


# ---------------------------------------------------------------------------
# fragments and demographics


def extract_fragments(
    unit: ParsedUnit,
    min_lines: int = DEFAULT_MIN_LINES,
    max_lines: int = DEFAULT_MAX_LINES,
    include_modifiers: bool = False,
) -> list[Fragment]:
    """One fragment per function body whose line count is inside the window.

    Interface declarations never yield fragments; modifier bodies are
    included only when ``include_modifiers`` is set.
    """
    if min_lines > max_lines:
        raise ValueError(f"min_lines {min_lines} > max_lines {max_lines}")
    frags: list[Fragment] = []
    for decl in unit.declarations:
        if decl.kind == "interface":
            continue
        pool = list(decl.functions)
        if include_modifiers:
            pool.extend(decl.modifier_defs)
        for fn in pool:
            if fn.body_span is None:
                continue
            if not (min_lines <= len(fn.body_lines) <= max_lines):
                continue
            frags.append(
                Fragment(
                    id=fragment_id(unit.source.path, fn.body_span),
                    file=unit.source.path,
                    contract=decl.name,
                    function=fn.display_name,
                    function_kind=fn.kind,
                    span=fn.body_span,
                    lines=tuple(fn.body_lines),
                )
            )
    frags.sort(key=lambda f: (f.file, f.span[0]))
    return frags


def corpus_demographics(units: list[ParsedUnit]) -> DemographicsReport:
    report = DemographicsReport(total_files=len(units))
    for unit in units:
        for decl in unit.declarations:
            extra = DemographicsReport(
                contracts=1 if decl.kind == "contract" else 0,
                libraries=1 if decl.kind == "library" else 0,
                interfaces=1 if decl.kind == "interface" else 0,
                events=len(decl.events),
                modifiers=len(decl.modifiers),
            )
            report = report + extra
    return report
