"""Structural models reverse-engineered from representative contracts.

A model holds the root contract plus everything it inherits, uses, or
references within the same unit: entities with attributes and operations,
and generalization / using / dependency relations.  Models render as
deterministic DOT and as JSON dictionaries with stable ordering; per-category
models merge into a metamodel that records entities shared across
categories.
"""

from __future__ import annotations

import json
import re
from collections.abc import Sequence
from dataclasses import dataclass

from .categorize import DomainCategory
from .errors import UnknownRoot
from .frontend import ContractDecl, ParsedUnit
from .signatures import canonical_signature

__all__ = [
    "Entity",
    "StructuralModel",
    "MetaModel",
    "extract_model",
    "merge_models",
    "render_dot",
    "model_to_dict",
    "metamodel_to_dict",
    "model_to_json",
    "metamodel_to_json",
]

_ELEMENTARY_RE = re.compile(
    r"(uint|int|bytes)\d*$|^(address|bool|string|byte|var|fixed|ufixed|"
    r"mapping|function)$"
)
_TYPE_IDENT_RE = re.compile(r"[A-Za-z_$][\w$]*")


@dataclass(frozen=True)
class Entity:
    name: str
    kind: str  # contract | library | interface
    attributes: tuple[tuple[str, str], ...]  # (name, raw type text)
    operations: tuple[tuple[str, str], ...]  # (canonical signature, visibility)
    external: bool = False


@dataclass
class StructuralModel:
    category: DomainCategory
    entities: list[Entity]
    relations: list[tuple[str, str, str]]  # (from, to, generalization|using|dependency)


@dataclass
class MetaModel:
    models: list[StructuralModel]
    shared_entities: list[tuple[str, tuple[str, ...]]]  # (entity, categories)
    cross_refs: list[tuple[str, str, str]]  # (category a, category b, via entity)


def _contract_type_refs(decl: ContractDecl, unit: ParsedUnit) -> list[str]:
    """Identifiers used as types in state variables or parameters that are
    not elementary types and not struct/enum names of the unit."""
    texts = [t for _, t, _ in decl.state_vars]
    for fn in decl.functions:
        texts.extend(t for _, t in fn.params)
    refs: list[str] = []
    local_types = decl.type_names | unit.type_names
    for text in texts:
        for tok in _TYPE_IDENT_RE.findall(text):
            if _ELEMENTARY_RE.match(tok):
                continue
            if tok in ("memory", "storage", "calldata", "payable", "constant"):
                continue
            if tok in local_types or tok == decl.name:
                continue
            if tok not in refs:
                refs.append(tok)
    return refs


def extract_model(
    unit: ParsedUnit, root: str, category: DomainCategory
) -> StructuralModel:
    """Model the ``root`` contract and its in-unit closure.

    Bases become generalization edges, using-for directives become using
    edges, and contract-typed state variables or parameters become
    dependency edges; targets not declared in the unit appear as external
    entities.
    """
    decls = {d.name: d for d in unit.declarations}
    if root not in decls:
        raise UnknownRoot(
            f"unknown contract {root!r} in {unit.source.path}; "
            f"available: {', '.join(sorted(decls)) or '(none)'}"
        )

    visited: list[str] = []
    external: list[str] = []
    relations: set[tuple[str, str, str]] = set()
    queue = [root]
    while queue:
        name = queue.pop(0)
        if name in visited:
            continue
        visited.append(name)
        decl = decls[name]

        def link(target: str, kind: str) -> None:
            if kind == "dependency" and any(
                (name, target) == (s, t) for s, t, _ in relations
            ):
                return  # a generalization/using edge already covers the pair
            relations.add((name, target, kind))
            if target in decls:
                if target not in visited and target not in queue:
                    queue.append(target)
            elif target not in external:
                external.append(target)

        for base in decl.bases:
            link(base, "generalization")
        for lib, _target in decl.usings:
            link(lib, "using")
        for ref in _contract_type_refs(decl, unit):
            link(ref, "dependency")

    entities = [
        Entity(
            name=n,
            kind=decls[n].kind,
            attributes=tuple((v, t) for v, t, _ in decls[n].state_vars),
            operations=tuple(
                (canonical_signature(fn), fn.visibility) for fn in decls[n].functions
            ),
        )
        for n in visited
    ]
    entities.extend(
        Entity(name=n, kind="contract", attributes=(), operations=(), external=True)
        for n in external
    )
    entities.sort(key=lambda e: e.name)
    return StructuralModel(
        category=category,
        entities=entities,
        relations=sorted(relations),
    )


def merge_models(models: Sequence[StructuralModel]) -> MetaModel:
    """Union of per-category models with shared entities and cross-category
    references by exact entity-name match."""
    cats = [m.category for m in models]
    if DomainCategory.UNCATEGORIZED in cats:
        raise ValueError("Uncategorized models cannot join the metamodel")
    if len(set(cats)) != len(cats):
        raise ValueError("each model must carry a distinct category")

    by_entity: dict[str, set[str]] = {}
    for m in models:
        for e in m.entities:
            by_entity.setdefault(e.name, set()).add(m.category.value)
    shared = [
        (name, tuple(sorted(cs)))
        for name, cs in sorted(by_entity.items())
        if len(cs) >= 2
    ]
    cross: list[tuple[str, str, str]] = []
    for name, cs in shared:
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                cross.append((cs[i], cs[j], name))
    cross.sort()
    return MetaModel(
        models=sorted(models, key=lambda m: m.category.value),
        shared_entities=shared,
        cross_refs=cross,
    )


# ---------------------------------------------------------------------------
# DOT rendering

_VIS_MARK = {
    "public": "+",
    "external": "+",
    "internal": "#",
    "private": "-",
    "unspecified": "~",
}


def _escape_record(text: str) -> str:
    for ch in "\\{}|<>":
        text = text.replace(ch, "\\" + ch)
    return text.replace('"', '\\"')


def _entity_label(e: Entity) -> str:
    title = e.name if e.kind == "contract" else f"{e.name} ({e.kind})"
    if e.external:
        title += " (external)"
    attrs = "".join(
        _escape_record(f"{n} : {t}") + "\\l" for n, t in e.attributes
    )
    ops = "".join(
        _escape_record(_VIS_MARK.get(vis, "~") + " " + sig) + "\\l"
        for sig, vis in e.operations
    )
    return "{" + _escape_record(title) + "|" + attrs + "|" + ops + "}"


_EDGE_STYLE = {
    "generalization": "[arrowhead=empty]",
    "using": "[style=dashed, arrowhead=open, label=\"using\"]",
    "dependency": "[style=dashed, arrowhead=open, label=\"dependency\"]",
}


def _node_stmt(node_id: str, e: Entity, indent: str) -> str:
    style = ", style=dashed" if e.external else ""
    return f'{indent}"{node_id}" [label="{_entity_label(e)}"{style}];'


def _model_body(m: StructuralModel, prefix: str, indent: str) -> list[str]:
    out = [
        _node_stmt(prefix + e.name, e, indent)
        for e in sorted(m.entities, key=lambda e: e.name)
    ]
    out.extend(
        f'{indent}"{prefix}{s}" -> "{prefix}{t}" {_EDGE_STYLE[kind]};'
        for s, t, kind in sorted(m.relations)
    )
    return out


def render_dot(model: StructuralModel | MetaModel) -> str:
    """Deterministic DOT text: record nodes, empty-triangle generalization
    arrows, dashed using/dependency edges, everything sorted by name."""
    if isinstance(model, StructuralModel):
        lines = [
            f'digraph "{model.category.value}" {{',
            "  graph [rankdir=BT];",
            "  node [shape=record, fontname=Helvetica];",
            "  edge [fontname=Helvetica];",
        ]
        lines.extend(_model_body(model, "", "  "))
        lines.append("}")
        return "\n".join(lines) + "\n"

    lines = [
        'digraph "MetaModel" {',
        "  graph [rankdir=BT, compound=true];",
        "  node [shape=record, fontname=Helvetica];",
        "  edge [fontname=Helvetica];",
    ]
    for m in sorted(model.models, key=lambda m: m.category.value):
        cat = m.category.value
        lines.append(f'  subgraph "cluster_{cat}" {{')
        lines.append(f'    label="{cat}";')
        lines.extend(_model_body(m, f"{cat}::", "    "))
        lines.append("  }")
    for ca, cb, name in sorted(model.cross_refs):
        lines.append(
            f'  "{ca}::{name}" -> "{cb}::{name}" '
            f'[style=dotted, dir=none, label="shared: {name}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON mirrors


def _entity_to_dict(e: Entity) -> dict:
    return {
        "name": e.name,
        "kind": e.kind,
        "external": e.external,
        "attributes": [{"name": n, "type": t} for n, t in e.attributes],
        "operations": [
            {"signature": sig, "visibility": vis} for sig, vis in e.operations
        ],
    }


def model_to_dict(m: StructuralModel) -> dict:
    return {
        "category": m.category.value,
        "entities": [
            _entity_to_dict(e) for e in sorted(m.entities, key=lambda e: e.name)
        ],
        "relations": [
            {"from": s, "to": t, "kind": k} for s, t, k in sorted(m.relations)
        ],
    }


def metamodel_to_dict(mm: MetaModel) -> dict:
    return {
        "models": [
            model_to_dict(m)
            for m in sorted(mm.models, key=lambda m: m.category.value)
        ],
        "shared_entities": [
            {"entity": name, "categories": list(cats)}
            for name, cats in mm.shared_entities
        ],
        "cross_refs": [
            {"category_a": a, "category_b": b, "via": v} for a, b, v in mm.cross_refs
        ],
    }


def model_to_json(m: StructuralModel) -> str:
    return json.dumps(model_to_dict(m), indent=2, sort_keys=True) + "\n"


def metamodel_to_json(mm: MetaModel) -> str:
    return json.dumps(metamodel_to_dict(mm), indent=2, sort_keys=True) + "\n"
