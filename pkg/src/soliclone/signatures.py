"""Canonical function-signature forms shared by categorization and models."""

from __future__ import annotations

import re

from .frontend import FunctionDecl

__all__ = ["canonical_type", "canonical_signature"]

_ALIASES = {"uint": "uint256", "int": "int256", "byte": "bytes1"}
_DROPPED = {"memory", "storage", "calldata", "indexed", "payable"}
_TOKEN_RE = re.compile(r"[A-Za-z_$][\w$]*|=>|\S")


def canonical_type(type_text: str) -> str:
    """Lowercased type text with elementary aliases resolved and data
    locations dropped, e.g. "uint[] calldata" -> "uint256[]"."""
    out: list[str] = []
    for tok in _TOKEN_RE.findall(type_text):
        if tok in _DROPPED:
            continue
        out.append(_ALIASES.get(tok, tok).lower())
    return "".join(out)


def canonical_signature(fn: FunctionDecl) -> str:
    """e.g. "transfer(address,uint256)"; constructor/fallback/receive keep
    their kind tag as the name."""
    if fn.kind in ("function", "modifier"):
        name = fn.name.lower()
    else:
        name = f"<{fn.kind}>"
    params = ",".join(canonical_type(t) for _, t in fn.params)
    return f"{name}({params})"
