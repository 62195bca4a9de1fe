"""IR synthesis: extraction rules, sampling behavior, and determinism."""

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings

from layoutir.corpus import Box, ElementTreeNode, LayoutDoc
from layoutir.errors import NoTypedElementsError
from layoutir.ir import (
    HierarchyAtom,
    PosAtom,
    SizeAtom,
    TypeAtom,
    flatten_constraints,
    parse_ir,
    print_ir,
)
from layoutir.seq import parse_layout_tokens
from layoutir.synth import (
    SynthParams,
    build_synthetic_dataset,
    discard_elements,
    doc_rng,
    hierarchy_const,
    position_const,
    sample_const,
    size_const,
    synth_record,
    synthesize_ir,
)
from layoutir.vocab import VOCABS, WEBUI_VOCAB

from .strategies import layout_docs

W = H = 120.0

ALL_ON = SynthParams(discard_rate=0.0, keep_prob_pos=1.0, keep_prob_size=1.0, keep_prob_hier=1.0)


def box_at(cx, cy, w=10.0, h=10.0):
    return Box(cx - w / 2, cy - h / 2, w, h)


# --- threshold rules -----------------------------------------------------------

@pytest.mark.parametrize(
    "cx,cy,want",
    [
        (0.2 * W, 0.5 * H, "left"),
        (0.8 * W, 0.5 * H, "right"),
        (0.5 * W, 0.1 * H, "top"),
        (0.5 * W, 0.9 * H, "bottom"),
        (0.5 * W, 0.5 * H, None),
        (0.1 * W, 0.1 * H, "top"),  # vertical wins in corners
        (0.1 * W, 0.9 * H, "bottom"),
        (0.25 * W, 0.5 * H, None),  # threshold is strict
        (0.5 * W, 0.25 * H, None),
        (0.5 * W, 0.75 * H, None),
    ],
)
def test_position_const(cx, cy, want):
    assert position_const(box_at(cx, cy), W, H) == want


def test_position_const_clips_outside_boxes():
    assert position_const(Box(-40, 50, 50, 20), W, H) == "left"


@pytest.mark.parametrize(
    "w,h,want",
    [
        (W, H, "large"),  # full canvas
        (12, 6, "small"),  # 0.5% of area
        (60, 48, None),  # 20%
        (24, 30, "small"),  # exactly 5%: inclusive
        (72, 80, "large"),  # exactly 40%: inclusive
        (73, 80, "large"),
    ],
)
def test_size_const(w, h, want):
    assert size_const(Box(0, 0, w, h), W, H) == want


def test_threshold_overrides():
    assert position_const(box_at(0.3 * W, 0.5 * H), W, H, pos_margin=0.35) == "left"
    assert size_const(Box(0, 0, 60, 48), W, H, size_large_min=0.2) == "large"


# --- discarding -----------------------------------------------------------------

def test_discard_zero_rate_keeps_all():
    kept, discarded = discard_elements(10, 0.0, np.random.default_rng(0))
    assert kept == list(range(10))
    assert discarded == []


def test_discard_is_deterministic():
    a = discard_elements(50, 0.3, np.random.default_rng(7))
    b = discard_elements(50, 0.3, np.random.default_rng(7))
    assert a == b


def test_discard_rate_monte_carlo():
    rng = np.random.default_rng(42)
    total = kept_n = 0
    for _ in range(1000):
        kept, _ = discard_elements(10, 0.5, rng)
        kept_n += len(kept)
        total += 10
    assert abs(kept_n / total - 0.5) < 0.02


def test_discard_never_empties():
    rng = np.random.default_rng(3)
    for _ in range(500):
        kept, _ = discard_elements(3, 0.9, rng)
        assert kept


def test_discard_empty_input_rejected():
    with pytest.raises(NoTypedElementsError):
        discard_elements(0, 0.5, np.random.default_rng(0))


# --- constraint subset sampling ----------------------------------------------------

ATOMS = [
    TypeAtom("title"),
    PosAtom("title", "top"),
    SizeAtom("image", "large"),
    HierarchyAtom((("image", None, None),), 3),
    TypeAtom("image"),
]


def test_sample_const_identity_at_one():
    out = sample_const(ATOMS, ALL_ON, np.random.default_rng(0))
    assert out == ATOMS


def test_sample_const_types_only_at_zero():
    params = SynthParams(keep_prob_pos=0.0, keep_prob_size=0.0, keep_prob_hier=0.0)
    out = sample_const(ATOMS, params, np.random.default_rng(0))
    assert out == [TypeAtom("title"), TypeAtom("image")]


def test_sample_const_monte_carlo():
    params = SynthParams(keep_prob_pos=0.7, keep_prob_size=0.2, keep_prob_hier=0.5)
    rng = np.random.default_rng(11)
    counts = Counter()
    n = 5000
    for _ in range(n):
        for atom in sample_const(ATOMS, params, rng):
            counts[type(atom).__name__] += 1
    assert counts["TypeAtom"] == 2 * n
    assert abs(counts["PosAtom"] / n - 0.7) < 0.03
    assert abs(counts["SizeAtom"] / n - 0.2) < 0.03
    assert abs(counts["HierarchyAtom"] / n - 0.5) < 0.03


def test_hierarchy_const_merges():
    sig_a = (("image", None, None), ("title", None, None))
    sig_b = (("link", "bottom", None),)
    atoms = hierarchy_const([sig_a, sig_b, sig_a, sig_a])
    assert atoms == [
        HierarchyAtom(sig_a, 3),
        HierarchyAtom(sig_b, 1),
    ]


# --- whole-document synthesis --------------------------------------------------------

def typed(etype, box):
    return ElementTreeNode(tag="div", box=box, etype=etype)


def make_doc(children, doc_id="doc", domain="webui", w=W, h=H):
    root = ElementTreeNode(tag="page", box=Box(0, 0, w, h), children=list(children))
    return LayoutDoc(doc_id=doc_id, domain=domain, canvas_w=w, canvas_h=h, root=root)


def title_descriptions_doc():
    return make_doc(
        [
            typed("title", Box(13, 0, 93, 10)),
            typed("description", Box(13, 40, 93, 12)),
            typed("description", Box(13, 60, 93, 12)),
        ]
    )


def test_full_extraction_matches_reference_ir():
    doc = title_descriptions_doc()
    result = synthesize_ir(doc, ALL_ON)
    want = parse_ir(
        '[ [e:title [prop:position "top"] ] [e:description [prop:repeat "2"] ] ]', WEBUI_VOCAB
    )
    assert flatten_constraints(result.ir) == flatten_constraints(want)
    assert result.discarded == ()


def test_synthesized_ir_round_trips():
    doc = title_descriptions_doc()
    result = synthesize_ir(doc, ALL_ON)
    vocab = VOCABS[doc.domain]
    assert parse_ir(print_ir(result.ir), vocab) == result.ir


def test_group_doc_yields_hierarchy():
    items = []
    for k in range(3):
        l = 25 + 22 * k  # keep item centers in the middle zone so signatures match
        items.append(
            ElementTreeNode(
                tag="li",
                box=Box(l, 80, 20, 30),
                children=[typed("image", Box(l, 80, 20, 20)), typed("link", Box(l, 102, 20, 6))],
            )
        )
    doc = make_doc([typed("title", Box(10, 0, 100, 10)), ElementTreeNode(tag="ul", box=Box(25, 80, 64, 30), children=items)])
    result = synthesize_ir(doc, ALL_ON)
    atoms = flatten_constraints(result.ir)
    hier = [a for a in atoms if isinstance(a, HierarchyAtom)]
    assert len(hier) == 1
    assert hier[0].repeat == 3
    assert tuple(m[0] for m in hier[0].members) == ("image", "link")


def test_synthesis_deterministic_for_fixed_seed():
    doc = title_descriptions_doc()
    params = SynthParams(seed=123)
    a = synthesize_ir(doc, params)
    b = synthesize_ir(doc, params)
    assert a == b
    c = synthesize_ir(doc, SynthParams(seed=124))
    d = synthesize_ir(doc, SynthParams(seed=125))
    # Different seeds eventually differ somewhere; don't insist on these two.
    assert (c, d) == (synthesize_ir(doc, SynthParams(seed=124)), synthesize_ir(doc, SynthParams(seed=125)))


@given(layout_docs())
@settings(max_examples=150, deadline=None)
def test_synthesized_irs_parse_and_print(doc):
    params = SynthParams(seed=5)
    result = synthesize_ir(doc, params)
    vocab = VOCABS[doc.domain]
    assert parse_ir(print_ir(result.ir), vocab) == result.ir


# --- monotonicity under shared seed ---------------------------------------------------

def expanded_types(atoms):
    out = Counter()
    for atom, n in atoms.items():
        if isinstance(atom, TypeAtom):
            out[atom.etype] += n
        elif isinstance(atom, HierarchyAtom):
            for et, _, _ in atom.members:
                out[et] += atom.repeat * n
    return out


def only(atoms, kind):
    return Counter({a: c for a, c in atoms.items() if isinstance(a, kind)})


@given(layout_docs())
@settings(max_examples=100, deadline=None)
def test_lower_annotation_probs_only_shrink(doc):
    hi = SynthParams(seed=9, discard_rate=0.2, keep_prob_pos=0.9, keep_prob_size=0.9, keep_prob_hier=1.0)
    lo = SynthParams(seed=9, discard_rate=0.2, keep_prob_pos=0.3, keep_prob_size=0.1, keep_prob_hier=1.0)
    a = flatten_constraints(synthesize_ir(doc, hi).ir)
    b = flatten_constraints(synthesize_ir(doc, lo).ir)
    assert expanded_types(a) == expanded_types(b)
    assert only(a, HierarchyAtom) == only(b, HierarchyAtom)
    assert not (only(b, PosAtom) - only(a, PosAtom))
    assert not (only(b, SizeAtom) - only(a, SizeAtom))


@given(layout_docs())
@settings(max_examples=100, deadline=None)
def test_lower_hierarchy_prob_only_dissolves_groups(doc):
    hi = SynthParams(seed=9, discard_rate=0.2, keep_prob_pos=0.0, keep_prob_size=0.0, keep_prob_hier=0.9)
    lo = SynthParams(seed=9, discard_rate=0.2, keep_prob_pos=0.0, keep_prob_size=0.0, keep_prob_hier=0.2)
    a = flatten_constraints(synthesize_ir(doc, hi).ir)
    b = flatten_constraints(synthesize_ir(doc, lo).ir)
    assert expanded_types(a) == expanded_types(b)
    assert not (only(b, HierarchyAtom) - only(a, HierarchyAtom))


# --- dataset records -------------------------------------------------------------

def test_record_flags_exactly_the_discarded():
    doc = title_descriptions_doc()
    params = SynthParams(discard_rate=0.4, seed=2)
    rec = synth_record(doc, params)
    result = synthesize_ir(doc, params)
    seq = parse_layout_tokens(rec["layout_seq"], WEBUI_VOCAB)
    flagged = sorted(el.etype for el in seq.elements() if el.completed)
    from layoutir.corpus import flatten_elements

    flat = flatten_elements(doc)
    want = sorted(flat[i].etype for i in result.discarded)
    assert flagged == want


def test_dataset_builder_streams_and_skips():
    docs = [title_descriptions_doc() for _ in range(5)]
    for i, d in enumerate(docs):
        d.doc_id = f"doc{i}"
    docs.insert(2, make_doc([ElementTreeNode(tag="div", box=Box(0, 0, 10, 10))], doc_id="untyped"))
    records = list(build_synthetic_dataset(docs, SynthParams(seed=1)))
    assert len(records) == 5
    assert [r["id"] for r in records] == ["doc0", "doc1", "doc2", "doc3", "doc4"]
    for rec in records:
        assert set(rec) == {"id", "ir", "constraint_seq", "layout_seq", "params"}
        assert rec["params"]["seed"] == 1


def test_doc_rng_independent_of_order():
    a = doc_rng(7, "x").random(3)
    _ = doc_rng(7, "y").random(3)
    b = doc_rng(7, "x").random(3)
    assert np.array_equal(a, b)


def test_params_validation():
    with pytest.raises(ValueError):
        SynthParams(discard_rate=1.0)
    with pytest.raises(ValueError):
        SynthParams(keep_prob_pos=1.5)
    with pytest.raises(ValueError):
        SynthParams(size_small_max=0.5, size_large_min=0.4)
    again = SynthParams.from_json(SynthParams(seed=3).to_json())
    assert again == SynthParams(seed=3)
