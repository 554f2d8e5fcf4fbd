"""Domain categorization of clone classes via signature and keyword rules.

Classes whose minimum similarity reaches the eligibility floor are matched
against an ordered rule list: first by canonical-signature fingerprints of
the class representative's contract, then by keyword hints found in the
representative's text.  Everything else is Uncategorized.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .engine import CloneClass
from .errors import InvalidRuleFile
from .frontend import Fragment, ParsedUnit
from .signatures import canonical_signature

__all__ = [
    "DomainCategory",
    "CategoryRule",
    "CategoryReport",
    "ClassEvidence",
    "ELIGIBILITY_FLOOR",
    "load_rules",
    "load_sidecar",
    "signature_fingerprint",
    "fragment_keywords",
    "build_class_evidence",
    "categorize_class",
    "accumulate_categories",
]

ELIGIBILITY_FLOOR = 70
_MIN_KEYWORD_HITS = 2
_DEFAULT_SIGNATURE_HITS = 3

_WORD_RE = re.compile(r"[A-Za-z_$][\w$]*")


class DomainCategory(str, Enum):
    TOKEN_MANAGEMENT = "TokenManagement"
    ARITHMETIC_OPERATIONS = "ArithmeticOperations"
    EXCHANGES = "Exchanges"
    FINANCE = "Finance"
    DATA_ORACLES = "DataOracles"
    MARKETPLACE = "Marketplace"
    GAMING = "Gaming"
    SECURITY = "Security"
    UNCATEGORIZED = "Uncategorized"


@dataclass(frozen=True)
class CategoryRule:
    category: DomainCategory
    order: int
    required_signatures: frozenset[str]
    keyword_hints: frozenset[str]
    min_signature_hits: int = _DEFAULT_SIGNATURE_HITS


@dataclass
class CategoryReport:
    category: DomainCategory
    accumulated_size: int
    min_similarity: int
    max_similarity: int
    class_ids: list[int]


@dataclass(frozen=True)
class ClassEvidence:
    """What categorization sees of a class representative."""

    signatures: frozenset[str]
    keywords: frozenset[str]


# ---------------------------------------------------------------------------
# rule file


def load_rules(path: Path | str | None = None) -> list[CategoryRule]:
    """Parse the category rule file (the packaged default when no path)."""
    if path is None:
        text = (
            resources.files("soliclone").joinpath("data/default_rules.txt")
            .read_text(encoding="utf-8")
        )
        origin = "<default rules>"
    else:
        p = Path(path)
        if not p.is_file():
            raise InvalidRuleFile(f"rule file not found: {p}")
        text = p.read_text(encoding="utf-8")
        origin = str(p)

    rules: list[CategoryRule] = []
    seen: set[DomainCategory] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) < 2:
            raise InvalidRuleFile(f"{origin}:{lineno}: expected 'category | index | ...'")
        try:
            category = DomainCategory(fields[0])
        except ValueError:
            raise InvalidRuleFile(
                f"{origin}:{lineno}: unknown category {fields[0]!r}"
            ) from None
        if category is DomainCategory.UNCATEGORIZED:
            raise InvalidRuleFile(f"{origin}:{lineno}: Uncategorized is the fallback")
        if category in seen:
            raise InvalidRuleFile(
                f"{origin}:{lineno}: duplicate rule for {category.value} "
                "with conflicting order"
            )
        seen.add(category)
        try:
            order = int(fields[1])
        except ValueError:
            raise InvalidRuleFile(f"{origin}:{lineno}: bad index {fields[1]!r}") from None

        sigs: set[str] = set()
        kws: set[str] = set()
        hits = _DEFAULT_SIGNATURE_HITS
        for fld in fields[2:]:
            for item in fld.split():
                if item.startswith("sig:"):
                    sigs.add(item[4:].lower())
                elif item.startswith("kw:"):
                    kws.add(item[3:].lower())
                elif item.startswith("hits:"):
                    try:
                        hits = int(item[5:])
                    except ValueError:
                        raise InvalidRuleFile(
                            f"{origin}:{lineno}: bad hits {item!r}"
                        ) from None
                else:
                    raise InvalidRuleFile(f"{origin}:{lineno}: unknown item {item!r}")
        if not sigs and not kws:
            raise InvalidRuleFile(
                f"{origin}:{lineno}: rule needs sig: or kw: entries"
            )
        if hits < 1:
            raise InvalidRuleFile(f"{origin}:{lineno}: hits must be >= 1")
        rules.append(
            CategoryRule(category, order, frozenset(sigs), frozenset(kws), hits)
        )
    rules.sort(key=lambda r: r.order)
    return rules


def load_sidecar(path: Path | str) -> dict[str, list[str]]:
    """Optional per-file metadata: JSON object mapping corpus-relative paths
    to lists of free-text tags that become extra keyword evidence."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise InvalidRuleFile(f"{path}: sidecar must be a JSON object")
    return {str(k): [str(t) for t in v] for k, v in data.items()}


# ---------------------------------------------------------------------------
# evidence


def signature_fingerprint(frag: Fragment, unit: ParsedUnit) -> set[str]:
    """Canonical signatures of the fragment's function and every sibling in
    its enclosing contract."""
    decl = next((d for d in unit.declarations if d.name == frag.contract), None)
    if decl is None:
        return set()
    sigs = {canonical_signature(fn) for fn in decl.functions}
    sigs.update(canonical_signature(fn) for fn in decl.modifier_defs)
    return sigs


def fragment_keywords(
    frag: Fragment, sidecar: Mapping[str, list[str]] | None = None
) -> set[str]:
    words = {w.lower() for w in _WORD_RE.findall("\n".join(frag.lines))}
    if sidecar:
        for tag in sidecar.get(frag.file, []):
            words.update(w.lower() for w in _WORD_RE.findall(tag))
    return words


def build_class_evidence(
    cls: CloneClass,
    fragments: Mapping[str, Fragment],
    units: Mapping[str, ParsedUnit],
    sidecar: Mapping[str, list[str]] | None = None,
) -> ClassEvidence:
    rep = fragments[cls.representative]
    return ClassEvidence(
        signatures=frozenset(signature_fingerprint(rep, units[rep.file])),
        keywords=frozenset(fragment_keywords(rep, sidecar)),
    )


# ---------------------------------------------------------------------------
# categorization


def categorize_class(
    cls: CloneClass,
    rules: Sequence[CategoryRule],
    evidence: ClassEvidence,
    eligibility_floor: int = ELIGIBILITY_FLOOR,
) -> DomainCategory:
    """First signature rule to reach its hit count wins; otherwise the rule
    with the most keyword hits (at least two).  Ineligible or unmatched
    classes are Uncategorized."""
    if cls.min_similarity < eligibility_floor:
        return DomainCategory.UNCATEGORIZED
    for rule in rules:
        if rule.required_signatures:
            matched = len(rule.required_signatures & evidence.signatures)
            if matched >= rule.min_signature_hits:
                return rule.category
    best: CategoryRule | None = None
    best_hits = 0
    for rule in rules:
        hits = len(rule.keyword_hints & evidence.keywords)
        if hits >= _MIN_KEYWORD_HITS and hits > best_hits:
            best, best_hits = rule, hits
    return best.category if best else DomainCategory.UNCATEGORIZED


def accumulate_categories(
    classes: Sequence[CloneClass],
    rules: Sequence[CategoryRule],
    evidence_by_class: Mapping[int, ClassEvidence],
    eligibility_floor: int = ELIGIBILITY_FLOOR,
) -> list[CategoryReport]:
    """Group classes by category; one report per non-empty category, ordered
    by accumulated member count descending."""
    grouped: dict[DomainCategory, list[CloneClass]] = {}
    for cls in classes:
        cat = categorize_class(
            cls, rules, evidence_by_class[cls.id], eligibility_floor
        )
        grouped.setdefault(cat, []).append(cls)

    rank = {r.category: r.order for r in rules}
    reports = [
        CategoryReport(
            category=cat,
            accumulated_size=sum(len(c.members) for c in cs),
            min_similarity=min(c.min_similarity for c in cs),
            max_similarity=max(c.max_similarity for c in cs),
            class_ids=sorted(c.id for c in cs),
        )
        for cat, cs in grouped.items()
    ]
    reports.sort(
        key=lambda r: (
            -r.accumulated_size,
            rank.get(r.category, len(rank) + 1),
            r.category.value,
        )
    )
    return reports
