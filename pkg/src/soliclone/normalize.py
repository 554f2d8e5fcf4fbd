"""Clone-type normalization pipelines over extracted fragments.

Five modes share three stages: pretty-printing to canonical token lines,
filtering of structural noise, and identifier renaming (blind or
consistent).  Every stage is a pure function on lines and idempotent, so a
normalized fragment re-normalizes to itself.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import UnterminatedComment, UnterminatedString
from .frontend import Fragment

__all__ = [
    "NormalizationMode",
    "NormalizedFragment",
    "MODE_NAMES",
    "tokenize",
    "pretty_print",
    "pretty_print_text",
    "filter_lines",
    "blind_rename",
    "consistent_rename",
    "normalize",
    "preserved_tokens",
]

# clone type -> (filter_enabled, rename)
_TYPE_TABLE = {
    "T1": (False, "none"),
    "T2": (True, "blind"),
    "T2c": (True, "consistent"),
    "T3_1": (True, "blind"),
    "T3_2c": (True, "consistent"),
}

# CLI spelling -> clone type
MODE_NAMES = {"t1": "T1", "t2": "T2", "t2c": "T2c", "t3-1": "T3_1", "t3-2c": "T3_2c"}

EXACT_TYPES = ("T1", "T2", "T2c")
NEAR_MISS_TYPES = ("T3_1", "T3_2c")


@dataclass(frozen=True)
class NormalizationMode:
    clone_type: str
    filter_enabled: bool
    rename: str  # none | blind | consistent

    def __post_init__(self) -> None:
        expected = _TYPE_TABLE.get(self.clone_type)
        if expected is None:
            raise ValueError(f"unknown clone type {self.clone_type!r}")
        if (self.filter_enabled, self.rename) != expected:
            raise ValueError(
                f"{self.clone_type} requires filter_enabled={expected[0]}, "
                f"rename={expected[1]!r}"
            )

    @classmethod
    def for_type(cls, clone_type: str) -> "NormalizationMode":
        if clone_type in MODE_NAMES:
            clone_type = MODE_NAMES[clone_type]
        if clone_type not in _TYPE_TABLE:
            raise ValueError(f"unknown clone type {clone_type!r}")
        filt, rename = _TYPE_TABLE[clone_type]
        return cls(clone_type, filt, rename)

    @property
    def cli_name(self) -> str:
        return {v: k for k, v in MODE_NAMES.items()}[self.clone_type]


@dataclass(frozen=True)
class NormalizedFragment:
    source: str  # Fragment id
    mode: NormalizationMode
    norm_lines: tuple[str, ...]


# ---------------------------------------------------------------------------
# tokenizer

_MULTI_OPS = sorted(
    [
        "<<=", ">>=", "**", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
        "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>", "=>",
        "->", ":=",
    ],
    key=len,
    reverse=True,
)
_IDENT_START = re.compile(r"[A-Za-z_$]")
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER_RE = re.compile(r"0[xX][0-9a-fA-F_]+|\d[\d_]*(\.\d[\d_]*)?([eE][+-]?\d+)?")


def tokenize(text: str) -> list[str]:
    """Split source text into tokens, dropping comments.

    Raises UnterminatedComment / UnterminatedString when a block comment or
    string literal never closes; the fragment is then excluded from analysis.
    """
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            i = n if j == -1 else j + 1
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            if j == -1:
                raise UnterminatedComment("block comment never closes")
            i = j + 2
        elif c in "\"'":
            j = i + 1
            while j < n and text[j] not in (c, "\n"):
                j += 2 if text[j] == "\\" else 1
            if j >= n or text[j] != c:
                raise UnterminatedString("string literal never closes")
            tokens.append(text[i:j + 1])
            i = j + 1
        elif _IDENT_START.match(c):
            m = _IDENT_RE.match(text, i)
            tokens.append(m.group(0))
            i = m.end()
        elif c.isdigit():
            m = _NUMBER_RE.match(text, i)
            tokens.append(m.group(0))
            i = m.end()
        else:
            for op in _MULTI_OPS:
                if text.startswith(op, i):
                    tokens.append(op)
                    i += len(op)
                    break
            else:
                tokens.append(c)
                i += 1
    return tokens


def _is_identifier(tok: str) -> bool:
    return bool(_IDENT_RE.fullmatch(tok))


def _is_literal(tok: str) -> bool:
    return tok[0].isdigit() or tok[0] in "\"'"


# ---------------------------------------------------------------------------
# stages


def _is_canonical(lines) -> bool:
    return all(pretty_print_text(line) == [line] for line in lines)


def pretty_print(frag: Fragment) -> list[str]:
    # Already-canonical lines pass through unchanged.  Joining them first
    # would fuse a filtered header (no trailing '{') into the next statement,
    # and re-normalizing must be a fixed point.
    if _is_canonical(frag.lines):
        return list(frag.lines)
    return pretty_print_text("\n".join(frag.lines))


def pretty_print_text(text: str) -> list[str]:
    """Canonical line form: comments gone, one statement or brace per line,
    tokens separated by single spaces."""
    lines: list[str] = []
    cur: list[str] = []
    for tok in tokenize(text):
        if tok == ";":
            cur.append(tok)
            lines.append(" ".join(cur))
            cur = []
        elif tok in ("{", "}"):
            if cur:
                lines.append(" ".join(cur))
                cur = []
            lines.append(tok)
        else:
            cur.append(tok)
    if cur:
        lines.append(" ".join(cur))
    return lines


_FILTERED_TOKENS = frozenset(
    ["public", "private", "internal", "external", "pure", "view", "payable"]
)


def _line_tokens(line: str) -> list[str]:
    # pretty-printed lines re-tokenize exactly; naive space-splitting would
    # break string literals containing spaces
    return tokenize(line)


def filter_lines(lines: list[str]) -> list[str]:
    """Drop brace-only lines and emit statements; strip visibility and
    mutability tokens everywhere.  Expects pretty-printed input."""
    out: list[str] = []
    for line in lines:
        toks = _line_tokens(line)
        if not toks:
            continue
        if all(t in ("{", "}") for t in toks):
            continue
        if toks[0] == "emit":
            continue
        kept = [t for t in toks if t not in _FILTERED_TOKENS]
        if kept:
            out.append(" ".join(kept))
    return out


_preserved_cache: frozenset[str] | None = None


def preserved_tokens(path: Path | str | None = None) -> frozenset[str]:
    """The keyword/built-in set renaming leaves alone, from the data file."""
    global _preserved_cache
    if path is None and _preserved_cache is not None:
        return _preserved_cache
    if path is None:
        text = (
            resources.files("soliclone").joinpath("data/preserved_tokens.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    toks = set()
    for raw in text.splitlines():
        entry = raw.split("#", 1)[0].strip()
        if entry:
            toks.add(entry)
    result = frozenset(toks)
    if path is None:
        _preserved_cache = result
    return result


def _rename(lines: list[str], blind: bool, preserved: frozenset[str]) -> list[str]:
    mapping: dict[str, str] = {}
    out: list[str] = []
    for line in lines:
        new: list[str] = []
        prev = ""
        for tok in _line_tokens(line):
            if _is_literal(tok):
                new.append("L")
            elif _is_identifier(tok):
                if tok in preserved or prev == ".":
                    new.append(tok)
                elif blind:
                    new.append("X")
                else:
                    if tok not in mapping:
                        mapping[tok] = f"X{len(mapping) + 1}"
                    new.append(mapping[tok])
            else:
                new.append(tok)
            prev = tok
        out.append(" ".join(new))
    return out


def blind_rename(lines: list[str], preserved: frozenset[str] | None = None) -> list[str]:
    """Every user identifier becomes "X"; literals become "L"."""
    return _rename(lines, True, preserved or preserved_tokens())


def consistent_rename(
    lines: list[str], preserved: frozenset[str] | None = None
) -> list[str]:
    """User identifiers become "X1", "X2", ... by order of first occurrence."""
    return _rename(lines, False, preserved or preserved_tokens())


def normalize(frag: Fragment, mode: NormalizationMode) -> NormalizedFragment:
    """Full pipeline for one fragment under one mode."""
    lines = pretty_print(frag)
    if mode.filter_enabled:
        lines = filter_lines(lines)
    if mode.rename == "blind":
        lines = blind_rename(lines)
    elif mode.rename == "consistent":
        lines = consistent_rename(lines)
    return NormalizedFragment(source=frag.id, mode=mode, norm_lines=tuple(lines))
