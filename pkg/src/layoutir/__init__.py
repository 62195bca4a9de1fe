"""Constraint-driven layout toolkit.

Parse layout constraints from an intermediate representation, mine them from
layout corpora, place elements on a discrete grid, and score the results.
"""

__version__ = "0.1.0"

from .corpus import (
    Box,
    CorpusStats,
    ElementTreeNode,
    LayoutDoc,
    compute_stats,
    doc_from_json,
    doc_to_json,
    extract_groups,
    flatten_elements,
    load_layout_jsonl,
    save_layout_jsonl,
)
from .errors import LayoutIrError
from .grid import GRIDS, RICO_GRID, WEBUI_GRID, GridSpec
from .ir import IrRoot, flatten_constraints, ir_accuracy, ir_equal, parse_ir, print_ir
from .metrics import (
    EvalReport,
    alignment,
    docsim,
    evaluate,
    hierarchy_consistency,
    max_iou,
    overlap,
    pos_size_consistency,
    type_consistency,
    unique_match,
)
from .placer import PlacerConfig, place, place_samples, sample_topk
from .render import RenderStyle, render_svg, style_for
from .sampledocs import make_demo_doc, make_demo_docs
from .seq import (
    ConstraintSeq,
    LayoutSeq,
    compile_constraints,
    constraints_to_ir,
    decode_layout,
    encode_layout,
    parse_constraint_tokens,
    parse_layout_tokens,
    render_constraint_tokens,
    render_layout_tokens,
)
from .synth import SynthParams, SynthResult, doc_rng, synthesize_ir
from .vocab import RICO_VOCAB, VOCABS, WEBUI_VOCAB, TypeVocabulary, vocab_for

__all__ = [
    "Box",
    "ConstraintSeq",
    "CorpusStats",
    "ElementTreeNode",
    "EvalReport",
    "GRIDS",
    "GridSpec",
    "IrRoot",
    "LayoutDoc",
    "LayoutIrError",
    "LayoutSeq",
    "PlacerConfig",
    "RICO_GRID",
    "RICO_VOCAB",
    "RenderStyle",
    "SynthParams",
    "SynthResult",
    "TypeVocabulary",
    "VOCABS",
    "WEBUI_GRID",
    "WEBUI_VOCAB",
    "__version__",
    "alignment",
    "compile_constraints",
    "compute_stats",
    "constraints_to_ir",
    "decode_layout",
    "doc_from_json",
    "doc_rng",
    "doc_to_json",
    "docsim",
    "encode_layout",
    "evaluate",
    "extract_groups",
    "flatten_constraints",
    "flatten_elements",
    "hierarchy_consistency",
    "ir_accuracy",
    "ir_equal",
    "load_layout_jsonl",
    "make_demo_doc",
    "make_demo_docs",
    "max_iou",
    "overlap",
    "parse_constraint_tokens",
    "parse_ir",
    "parse_layout_tokens",
    "place",
    "place_samples",
    "pos_size_consistency",
    "print_ir",
    "render_constraint_tokens",
    "render_layout_tokens",
    "render_svg",
    "sample_topk",
    "save_layout_jsonl",
    "style_for",
    "synthesize_ir",
    "type_consistency",
    "unique_match",
    "vocab_for",
]
