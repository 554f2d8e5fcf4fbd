"""Near-miss clone mining and domain-model extraction for Solidity corpora."""

from .categorize import (
    CategoryReport,
    CategoryRule,
    DomainCategory,
    accumulate_categories,
    categorize_class,
    load_rules,
    signature_fingerprint,
)
from .engine import (
    CloneClass,
    CloneConfig,
    ClonePair,
    build_classes,
    detect_pairs,
    select_representative,
    similarity,
)
from .frontend import (
    ContractDecl,
    DemographicsReport,
    Fragment,
    FunctionDecl,
    ParsedUnit,
    SourceFile,
    corpus_demographics,
    extract_fragments,
    parse_source,
)
from .model import (
    MetaModel,
    StructuralModel,
    extract_model,
    merge_models,
    render_dot,
)
from .normalize import (
    NormalizationMode,
    NormalizedFragment,
    blind_rename,
    consistent_rename,
    filter_lines,
    normalize,
    pretty_print,
)

__version__ = "0.1.0"
