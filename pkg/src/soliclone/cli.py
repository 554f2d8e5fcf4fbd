"""Command-line driver: demographics, detect, categorize, model, full.

Exit codes: 0 success, 2 corpus error, 3 configuration error, 4 rule-file
error, 5 model-target error.  Diagnostics go to stderr; machine-readable
reports are JSON files with stable key order, written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import categorize as cat
from . import model as mod
from .engine import CloneConfig
from .errors import (
    InvalidConfig,
    InvalidRuleFile,
    SolicloneError,
    UnknownRoot,
    UnknownTarget,
)
from .frontend import DEFAULT_MAX_LINES, DEFAULT_MIN_LINES, DemographicsReport
from .normalize import MODE_NAMES, NormalizationMode
from .pipeline import CorpusIndex, DetectionResult, load_corpus, run_detection, categorize_classes

EXIT_OK = 0
EXIT_CORPUS = 2
EXIT_CONFIG = 3
EXIT_RULES = 4
EXIT_TARGET = 5

ALL_MODES = ("t1", "t2", "t2c", "t3-1", "t3-2c")
_MODEL_MODE = "t3-2c"  # richest mode; drives categorize/model in `full`


class CorpusError(SolicloneError):
    pass


@dataclass
class RunConfig:
    corpus_root: str = "."
    mode: str = "t1"
    max_diff_threshold: int | None = None  # None -> per-mode default
    min_lines: int = DEFAULT_MIN_LINES
    max_lines: int = DEFAULT_MAX_LINES
    rule_file: str | None = None
    output_dir: str = "soliclone-out"
    metadata_file: str | None = None
    include_modifiers: bool = False

    def to_dict(self) -> dict:
        return {
            "corpus_root": self.corpus_root,
            "mode": self.mode,
            "max_diff_threshold": self.threshold_for(self.mode),
            "min_lines": self.min_lines,
            "max_lines": self.max_lines,
            "rule_file": self.rule_file,
            "output_dir": self.output_dir,
            "metadata_file": self.metadata_file,
            "include_modifiers": self.include_modifiers,
        }

    def threshold_for(self, mode_name: str) -> int:
        if self.max_diff_threshold is not None:
            return self.max_diff_threshold
        return 0 if mode_name in ("t1", "t2", "t2c") else 30

    def clone_config(self, mode_name: str) -> CloneConfig:
        mode = NormalizationMode.for_type(mode_name)
        cfg = CloneConfig(
            mode=mode,
            max_diff_threshold=self.threshold_for(mode_name),
            min_lines=self.min_lines,
            max_lines=self.max_lines,
        )
        cfg.validate()
        return cfg


_CONFIG_KEYS = {
    "corpus_root": str,
    "mode": str,
    "max_diff_threshold": int,
    "min_lines": int,
    "max_lines": int,
    "rule_file": str,
    "output_dir": str,
    "metadata_file": str,
    "include_modifiers": bool,
}


def _parse_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InvalidConfig(f"config file not found: {p}")
    values: dict = {}
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"{p}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise InvalidConfig(f"{p}:{lineno}: unknown key {key!r}")
        typ = _CONFIG_KEYS[key]
        if typ is int:
            try:
                values[key] = int(value)
            except ValueError:
                raise InvalidConfig(f"{p}:{lineno}: {key} wants an integer") from None
        elif typ is bool:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise InvalidConfig(f"{p}:{lineno}: {key} wants a boolean")
            values[key] = value.lower() in ("true", "1", "yes")
        else:
            values[key] = value
    return values


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for key, value in _parse_config_file(args.config).items():
            setattr(cfg, key, value)
    flag_map = {
        "corpus": "corpus_root",
        "mode": "mode",
        "threshold": "max_diff_threshold",
        "min_lines": "min_lines",
        "max_lines": "max_lines",
        "rules": "rule_file",
        "out": "output_dir",
        "metadata": "metadata_file",
    }
    for flag, attr in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "include_modifiers", False):
        cfg.include_modifiers = True
    if cfg.mode not in MODE_NAMES:
        raise InvalidConfig(
            f"unknown mode {cfg.mode!r}; expected one of {', '.join(ALL_MODES)}"
        )
    for name in ("max_diff_threshold", "min_lines", "max_lines"):
        value = getattr(cfg, name)
        if value is None:
            continue
        try:
            setattr(cfg, name, int(value))
        except (TypeError, ValueError):
            raise InvalidConfig(f"{name} wants an integer, got {value!r}") from None
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_index(cfg: RunConfig) -> CorpusIndex:
    root = Path(cfg.corpus_root)
    if not root.is_dir() or not os.access(root, os.R_OK):
        raise CorpusError(f"corpus root not readable: {root}")
    return load_corpus(
        root, cfg.min_lines, cfg.max_lines, include_modifiers=cfg.include_modifiers
    )


def _demographics_dict(report: DemographicsReport) -> dict:
    return {
        "total_files": report.total_files,
        "contracts": report.contracts,
        "libraries": report.libraries,
        "interfaces": report.interfaces,
        "events": report.events,
        "modifiers": report.modifiers,
    }


def _skipped_list(index: CorpusIndex) -> list[dict]:
    return [{"path": s.path, "error": s.error} for s in index.skipped]


def _fragment_index(index: CorpusIndex, ids: set[str]) -> dict:
    out = {}
    for fid in sorted(ids):
        f = index.fragments[fid]
        out[fid] = {
            "file": f.file,
            "contract": f.contract,
            "function": f.function,
            "function_kind": f.function_kind,
            "span": list(f.span),
            "line_count": len(f.lines),
        }
    return out


def _detection_reports(
    cfg: RunConfig, mode_name: str, index: CorpusIndex, det: DetectionResult
) -> tuple[dict, dict]:
    run_cfg = dict(cfg.to_dict(), mode=mode_name,
                   max_diff_threshold=cfg.threshold_for(mode_name))
    pairs_doc = {
        "config": run_cfg,
        "pairs": [
            {"a": p.a, "b": p.b, "similarity": p.similarity} for p in det.pairs
        ],
        "excluded_fragments": [
            {"fragment": s.path, "error": s.error} for s in det.excluded
        ],
    }
    touched = {m for c in det.classes for m in c.members}
    classes_doc = {
        "config": run_cfg,
        "classes": [
            {
                "id": c.id,
                "members": list(c.members),
                "min_similarity": c.min_similarity,
                "max_similarity": c.max_similarity,
                "representative": c.representative,
            }
            for c in det.classes
        ],
        "fragments": _fragment_index(index, touched),
    }
    return pairs_doc, classes_doc


def _size_histogram(det: DetectionResult) -> dict[str, int]:
    hist: dict[str, int] = {}
    for c in det.classes:
        key = str(len(c.members))
        hist[key] = hist.get(key, 0) + 1
    return dict(sorted(hist.items(), key=lambda kv: int(kv[0])))


def _category_doc(cfg: RunConfig, mode_name: str, reports) -> dict:
    return {
        "config": dict(cfg.to_dict(), mode=mode_name,
                       max_diff_threshold=cfg.threshold_for(mode_name)),
        "categories": [
            {
                "category": r.category.value,
                "accumulated_size": r.accumulated_size,
                "min_similarity": r.min_similarity,
                "max_similarity": r.max_similarity,
                "class_ids": r.class_ids,
            }
            for r in reports
        ],
    }


# ---------------------------------------------------------------------------
# summaries (stdout)


def _print_demographics(report: DemographicsReport) -> None:
    header = ("Total Sol Files", "Contracts", "Libraries", "Interfaces",
              "Events", "Modifiers")
    values = (report.total_files, report.contracts, report.libraries,
              report.interfaces, report.events, report.modifiers)
    widths = [max(len(h), len(str(v))) for h, v in zip(header, values)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    print("  ".join(str(v).ljust(w) for v, w in zip(values, widths)))


def _print_detection_table(cfg: RunConfig, rows: dict[str, DetectionResult]) -> None:
    modes = list(rows)
    label_w = len("Max diff threshold")
    col_w = [max(len(m), 6) for m in modes]
    print("".ljust(label_w) + "  " + "  ".join(
        m.ljust(w) for m, w in zip(modes, col_w)))
    for label, fn in (
        ("Clone Pairs", lambda d: len(d.pairs)),
        ("Clone Classes", lambda d: len(d.classes)),
        ("Max diff threshold", lambda d: f"{d.config.max_diff_threshold}%"),
    ):
        cells = [str(fn(rows[m])) for m in modes]
        print(label.ljust(label_w) + "  " + "  ".join(
            c.ljust(w) for c, w in zip(cells, col_w)))


def _print_categories(reports) -> None:
    print(f"{'S.no':<5} {'Category':<22} {'Cluster Size':<13} Similarity(Min/Max)")
    for i, r in enumerate(reports, 1):
        print(f"{i:<5} {r.category.value:<22} {r.accumulated_size:<13} "
              f"{r.min_similarity}%/{r.max_similarity}%")


# ---------------------------------------------------------------------------
# commands


def cmd_demographics(cfg: RunConfig) -> int:
    index = _load_index(cfg)
    report = index.demographics()
    out = Path(cfg.output_dir)
    _write_json(out / "demographics.json", {
        "config": cfg.to_dict(),
        "demographics": _demographics_dict(report),
        "skipped_files": _skipped_list(index),
    })
    _print_demographics(report)
    for s in index.skipped:
        print(f"skipped {s.path}: {s.error}", file=sys.stderr)
    return EXIT_OK


def _detect_one(cfg: RunConfig, index: CorpusIndex, mode_name: str,
                out: Path) -> DetectionResult:
    det = run_detection(index, cfg.clone_config(mode_name))
    pairs_doc, classes_doc = _detection_reports(cfg, mode_name, index, det)
    _write_json(out / mode_name / "pairs.json", pairs_doc)
    _write_json(out / mode_name / "classes.json", classes_doc)
    return det


def cmd_detect(cfg: RunConfig) -> int:
    cfg.clone_config(cfg.mode)  # validate before touching the corpus
    index = _load_index(cfg)
    det = _detect_one(cfg, index, cfg.mode, Path(cfg.output_dir))
    _print_detection_table(cfg, {cfg.mode: det})
    for s in index.skipped:
        print(f"skipped {s.path}: {s.error}", file=sys.stderr)
    return EXIT_OK


def cmd_categorize(cfg: RunConfig) -> int:
    cfg.clone_config(cfg.mode)
    rules = cat.load_rules(cfg.rule_file)
    sidecar = cat.load_sidecar(cfg.metadata_file) if cfg.metadata_file else None
    index = _load_index(cfg)
    out = Path(cfg.output_dir)
    det = _detect_one(cfg, index, cfg.mode, out)
    reports, _ = categorize_classes(index, det.classes, rules, sidecar)
    _write_json(out / f"categories_{cfg.mode}.json",
                _category_doc(cfg, cfg.mode, reports))
    _print_categories(reports)
    return EXIT_OK


def _model_outputs(out: Path, models: list[mod.StructuralModel]) -> None:
    for m in models:
        _write_text(out / "models" / f"{m.category.value}.dot", mod.render_dot(m))
        _write_text(out / "models" / f"{m.category.value}.json", mod.model_to_json(m))
    mergeable = [m for m in models
                 if m.category is not cat.DomainCategory.UNCATEGORIZED]
    if mergeable:
        mm = mod.merge_models(mergeable)
        _write_text(out / "models" / "metamodel.dot", mod.render_dot(mm))
        _write_text(out / "models" / "metamodel.json", mod.metamodel_to_json(mm))


def _models_from_categories(index, det, reports, assigned) -> list[mod.StructuralModel]:
    by_id = {c.id: c for c in det.classes}
    models = []
    for report in reports:
        if report.category is cat.DomainCategory.UNCATEGORIZED:
            continue
        best = min(
            (by_id[cid] for cid in report.class_ids),
            key=lambda c: (-len(c.members), c.id),
        )
        rep = index.fragments[best.representative]
        models.append(
            mod.extract_model(index.units[rep.file], rep.contract, report.category)
        )
    return models


def cmd_model(cfg: RunConfig, class_id: int | None, root: str | None) -> int:
    cfg.clone_config(cfg.mode)
    rules = cat.load_rules(cfg.rule_file)
    index = _load_index(cfg)
    out = Path(cfg.output_dir)

    if root is not None:
        for path in sorted(index.units):
            unit = index.units[path]
            if any(d.name == root for d in unit.declarations):
                m = mod.extract_model(unit, root, cat.DomainCategory.UNCATEGORIZED)
                _write_text(out / "models" / f"{root}.dot", mod.render_dot(m))
                _write_text(out / "models" / f"{root}.json", mod.model_to_json(m))
                print(f"model written for contract {root} from {path}")
                return EXIT_OK
        raise UnknownRoot(f"contract {root!r} not found in corpus")

    det = _detect_one(cfg, index, cfg.mode, out)
    reports, assigned = categorize_classes(index, det.classes, rules)

    if class_id is not None:
        by_id = {c.id: c for c in det.classes}
        if class_id not in by_id:
            raise UnknownTarget(
                f"unknown class id {class_id}; "
                f"{len(by_id)} classes exist for mode {cfg.mode}"
            )
        cls = by_id[class_id]
        rep = index.fragments[cls.representative]
        category = assigned.get(class_id, cat.DomainCategory.UNCATEGORIZED)
        m = mod.extract_model(index.units[rep.file], rep.contract, category)
        _write_text(out / "models" / f"class_{class_id}.dot", mod.render_dot(m))
        _write_text(out / "models" / f"class_{class_id}.json", mod.model_to_json(m))
        print(f"model written for class {class_id} ({category.value})")
        return EXIT_OK

    models = _models_from_categories(index, det, reports, assigned)
    _model_outputs(out, models)
    print(f"{len(models)} category model(s) written")
    return EXIT_OK


def cmd_full(cfg: RunConfig) -> int:
    rules = cat.load_rules(cfg.rule_file)
    sidecar = cat.load_sidecar(cfg.metadata_file) if cfg.metadata_file else None
    out = Path(cfg.output_dir)
    timing: dict[str, float] = {}

    t0 = time.monotonic()
    index = _load_index(cfg)
    timing["parse"] = round(time.monotonic() - t0, 3)

    t0 = time.monotonic()
    demo = index.demographics()
    _write_json(out / "demographics.json", {
        "config": cfg.to_dict(),
        "demographics": _demographics_dict(demo),
        "skipped_files": _skipped_list(index),
    })
    timing["demographics"] = round(time.monotonic() - t0, 3)

    detections: dict[str, DetectionResult] = {}
    for mode_name in ALL_MODES:
        t0 = time.monotonic()
        detections[mode_name] = _detect_one(cfg, index, mode_name, out)
        timing[f"detect_{mode_name}"] = round(time.monotonic() - t0, 3)

    t0 = time.monotonic()
    per_mode_categories = {}
    for mode_name in ALL_MODES:
        reports, assigned = categorize_classes(
            index, detections[mode_name].classes, rules, sidecar
        )
        per_mode_categories[mode_name] = (reports, assigned)
        _write_json(out / f"categories_{mode_name}.json",
                    _category_doc(cfg, mode_name, reports))
    timing["categorize"] = round(time.monotonic() - t0, 3)

    t0 = time.monotonic()
    reports, assigned = per_mode_categories[_MODEL_MODE]
    models = _models_from_categories(
        index, detections[_MODEL_MODE], reports, assigned
    )
    _model_outputs(out, models)
    timing["model"] = round(time.monotonic() - t0, 3)

    run_report = {
        "config": cfg.to_dict(),
        "demographics": _demographics_dict(demo),
        "functions_with_bodies": index.functions_seen,
        "fragments_in_window": len(index.fragments),
        "modes": {
            m: {
                "max_diff_threshold": d.config.max_diff_threshold,
                "pairs": len(d.pairs),
                "classes": len(d.classes),
                "class_size_histogram": _size_histogram(d),
                "excluded_fragments": len(d.excluded),
            }
            for m, d in detections.items()
        },
        "categories": _category_doc(cfg, _MODEL_MODE,
                                    per_mode_categories[_MODEL_MODE][0])["categories"],
        "skipped_files": _skipped_list(index),
        "timing_seconds": timing,
    }
    _write_json(out / "run_report.json", run_report)

    _print_demographics(demo)
    print()
    _print_detection_table(cfg, detections)
    print()
    _print_categories(per_mode_categories[_MODEL_MODE][0])
    for s in index.skipped:
        print(f"skipped {s.path}: {s.error}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soliclone",
        description="Mine near-miss code clones and domain models from a "
                    "Solidity corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("demographics", "count declarations across the corpus"),
        ("detect", "detect clone pairs and classes for one mode"),
        ("categorize", "assign clone classes to domain categories"),
        ("model", "reverse-engineer structural models"),
        ("full", "demographics + all five modes + categories + models"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--corpus", help="corpus root directory")
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--min-lines", dest="min_lines",
                       help="smallest fragment size (lines)")
        p.add_argument("--max-lines", dest="max_lines",
                       help="largest fragment size (lines)")
        p.add_argument("--include-modifiers", action="store_true",
                       help="extract modifier bodies as fragments too")
        if name in ("detect", "categorize", "model"):
            p.add_argument("--mode", help="t1 | t2 | t2c | t3-1 | t3-2c")
            p.add_argument("--threshold",
                           help="max difference threshold percentage")
        if name in ("categorize", "model", "full"):
            p.add_argument("--rules", help="category rule file")
            p.add_argument("--metadata", help="per-file metadata sidecar (JSON)")
        if name == "model":
            p.add_argument("--class-id", dest="class_id",
                           help="model one clone class")
            p.add_argument("--root", dest="root",
                           help="model one contract by name")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _build_run_config(args)
        if args.command == "model":
            if args.mode is None:
                cfg.mode = _MODEL_MODE
            class_id = None
            if args.class_id is not None:
                try:
                    class_id = int(args.class_id)
                except ValueError:
                    raise InvalidConfig(
                        f"--class-id wants an integer, got {args.class_id!r}"
                    ) from None
            if class_id is not None and args.root is not None:
                raise InvalidConfig("--class-id and --root are exclusive")
            return cmd_model(cfg, class_id, args.root)
        if args.command == "demographics":
            return cmd_demographics(cfg)
        if args.command == "detect":
            return cmd_detect(cfg)
        if args.command == "categorize":
            return cmd_categorize(cfg)
        return cmd_full(cfg)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORPUS
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidRuleFile as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RULES
    except (UnknownRoot, UnknownTarget) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TARGET


if __name__ == "__main__":
    sys.exit(main())
