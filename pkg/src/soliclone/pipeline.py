"""Shared plumbing that wires corpus loading, normalization, and detection."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from . import categorize as cat
from .engine import CloneClass, CloneConfig, ClonePair, build_classes, detect_pairs
from .errors import SolicloneError
from .frontend import (
    Fragment,
    ParsedUnit,
    corpus_demographics,
    discover_sources,
    extract_fragments,
    parse_source,
    read_source,
)
from .normalize import NormalizationMode, NormalizedFragment, normalize

__all__ = ["SkippedFile", "CorpusIndex", "load_corpus", "DetectionResult",
           "normalize_fragments", "run_detection", "categorize_classes"]


@dataclass(frozen=True)
class SkippedFile:
    path: str
    error: str


@dataclass
class CorpusIndex:
    root: Path
    units: dict[str, ParsedUnit] = field(default_factory=dict)
    fragments: dict[str, Fragment] = field(default_factory=dict)
    fragment_order: list[str] = field(default_factory=list)
    skipped: list[SkippedFile] = field(default_factory=list)
    functions_seen: int = 0  # bodies found, including those outside the window

    def demographics(self):
        return corpus_demographics(list(self.units.values()))


def load_corpus(
    root: Path | str,
    min_lines: int,
    max_lines: int,
    include_modifiers: bool = False,
    files: Sequence[Path] | None = None,
) -> CorpusIndex:
    """Parse every .sol file under ``root`` (or the explicit list), skipping
    and recording unreadable or unbalanced files."""
    root = Path(root)
    index = CorpusIndex(root=root)
    for path in files if files is not None else discover_sources(root):
        try:
            src = read_source(path, relative_to=root)
            unit = parse_source(src)
        except SolicloneError as exc:
            rel = str(Path(path).relative_to(root)).replace("\\", "/")
            index.skipped.append(SkippedFile(rel, f"{type(exc).__name__}: {exc}"))
            continue
        index.units[src.path] = unit
        for decl in unit.declarations:
            index.functions_seen += sum(
                1 for fn in decl.functions if fn.body_span is not None
            )
        for frag in extract_fragments(unit, min_lines, max_lines, include_modifiers):
            index.fragments[frag.id] = frag
            index.fragment_order.append(frag.id)
    return index


def normalize_fragments(
    index: CorpusIndex, mode: NormalizationMode
) -> tuple[list[NormalizedFragment], list[SkippedFile]]:
    """Normalize all fragments; fragments whose text fails to tokenize are
    excluded and reported."""
    normed: list[NormalizedFragment] = []
    excluded: list[SkippedFile] = []
    for fid in index.fragment_order:
        try:
            normed.append(normalize(index.fragments[fid], mode))
        except SolicloneError as exc:
            excluded.append(SkippedFile(fid, f"{type(exc).__name__}: {exc}"))
    return normed, excluded


@dataclass
class DetectionResult:
    config: CloneConfig
    normalized: list[NormalizedFragment]
    excluded: list[SkippedFile]
    pairs: list[ClonePair]
    classes: list[CloneClass]


def run_detection(index: CorpusIndex, cfg: CloneConfig) -> DetectionResult:
    cfg.validate()
    normed, excluded = normalize_fragments(index, cfg.mode)
    pairs = detect_pairs(normed, cfg)
    classes = build_classes(pairs, index.fragments)
    return DetectionResult(cfg, normed, excluded, pairs, classes)


def categorize_classes(
    index: CorpusIndex,
    classes: Sequence[CloneClass],
    rules: Sequence[cat.CategoryRule],
    sidecar: Mapping[str, list[str]] | None = None,
) -> tuple[list[cat.CategoryReport], dict[int, cat.DomainCategory]]:
    evidence = {
        c.id: cat.build_class_evidence(c, index.fragments, index.units, sidecar)
        for c in classes
    }
    reports = cat.accumulate_categories(classes, rules, evidence)
    assigned = {
        cid: report.category for report in reports for cid in report.class_ids
    }
    return reports, assigned
