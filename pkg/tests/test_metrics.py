"""Metric oracles: hand arithmetic, brute-force matching, and closed-loop soundness."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from layoutir.corpus import Box, ElementTreeNode, LayoutDoc, flatten_elements
from layoutir.errors import (
    EmptyLayoutError,
    EmptySetError,
    LengthMismatchError,
    MissingGroupStructureError,
)
from layoutir.grid import GRIDS
from layoutir.ir import parse_ir
from layoutir.metrics import (
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
from layoutir.seq import LayoutElementTok, LayoutSeq, decode_layout
from layoutir.synth import SynthParams, synthesize_ir
from layoutir.vocab import WEBUI_VOCAB

from .strategies import layout_docs

ALL_ON = SynthParams(
    discard_rate=0.0, keep_prob_pos=1.0, keep_prob_size=1.0, keep_prob_hier=1.0
)


def node(tag="div", box=(0, 0, 10, 10), etype=None, children=(), attrs=None):
    return ElementTreeNode(
        tag=tag, box=Box(*box), etype=etype, children=tuple(children), attrs=attrs or {}
    )


def page(children, w=100.0, h=100.0, domain="webui", doc_id="m1"):
    root = node(tag="page", box=(0, 0, w, h), children=children)
    return LayoutDoc(doc_id=doc_id, domain=domain, canvas_w=w, canvas_h=h, root=root)


def el(etype, box, completed=False):
    attrs = {"complete": "1"} if completed else {}
    return node(box=box, etype=etype, attrs=attrs)


# --- alignment ---------------------------------------------------------------------

def test_alignment_shared_left_edge_is_zero():
    doc = page([el("text", (10, k * 20, 5 + 3 * k, 10)) for k in range(4)])
    assert alignment(doc) == 0.0


def test_alignment_hand_case():
    # Left edges 0.10 and 0.12 normalized; every other axis pair is farther.
    doc = page([el("text", (10, 0, 10, 10)), el("text", (12, 40, 20, 30))])
    assert alignment(doc) == pytest.approx(0.02, abs=1e-12)


def test_alignment_single_element_is_zero():
    assert alignment(page([el("title", (3, 4, 5, 6))])) == 0.0


def test_alignment_empty_raises():
    with pytest.raises(EmptyLayoutError):
        alignment(page([node(tag="div", box=(0, 0, 9, 9))]))


def test_alignment_scale_invariant():
    boxes = [(7, 13, 20, 11), (31, 29, 24, 17), (61, 59, 18, 23)]
    a = page([el("text", b) for b in boxes], w=100, h=100)
    b = page(
        [el("text", tuple(v * 3 for v in bx)) for bx in boxes], w=300, h=300
    )
    assert alignment(a) == pytest.approx(alignment(b), rel=1e-12)


# --- overlap -----------------------------------------------------------------------

def test_overlap_disjoint_is_zero():
    doc = page([el("text", (0, 0, 10, 10)), el("text", (50, 50, 10, 10))])
    assert overlap(doc) == 0.0


def test_overlap_identical_pair_is_half():
    doc = page([el("text", (10, 10, 30, 20)), el("image", (10, 10, 30, 20))])
    assert overlap(doc) == pytest.approx(0.5, abs=1e-12)


def test_overlap_nested_half_area_is_third():
    doc = page([el("text", (0, 0, 20, 20)), el("image", (0, 0, 20, 10))])
    assert overlap(doc) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_overlap_excludes_background():
    doc = page(
        [
            el("background image", (0, 0, 100, 100)),
            el("text", (0, 0, 10, 10)),
            el("text", (50, 50, 10, 10)),
        ]
    )
    assert overlap(doc) == 0.0


def test_overlap_only_background_is_zero():
    doc = page([el("background image", (0, 0, 100, 100))])
    assert overlap(doc) == 0.0


def test_overlap_empty_raises():
    with pytest.raises(EmptyLayoutError):
        overlap(page([node(tag="div", box=(0, 0, 9, 9))]))


def test_overlap_triple_stack():
    # Three identical boxes: 3 pairwise intersections over 3 areas.
    doc = page([el("text", (10, 10, 20, 20)) for _ in range(3)])
    assert overlap(doc) == pytest.approx(1.0, abs=1e-12)


# --- max_iou -----------------------------------------------------------------------

def _iou(a, b):
    li, ti = max(a[0], b[0]), max(a[1], b[1])
    ri = min(a[0] + a[2], b[0] + b[2])
    bi = min(a[1] + a[3], b[1] + b[3])
    inter = max(ri - li, 0) * max(bi - ti, 0)
    union = a[2] * a[3] + b[2] * b[3] - inter
    return inter / union if union > 0 else 0.0


def brute_max_iou(gen: LayoutDoc, ref: LayoutDoc) -> float:
    def norm(doc):
        out = {}
        for fe in flatten_elements(doc):
            box = (
                fe.box.l / doc.canvas_w,
                fe.box.t / doc.canvas_h,
                fe.box.w / doc.canvas_w,
                fe.box.h / doc.canvas_h,
            )
            out.setdefault(fe.etype, []).append(box)
        return out

    g, r = norm(gen), norm(ref)
    ng = sum(len(v) for v in g.values())
    nr = sum(len(v) for v in r.values())
    total = 0.0
    for etype in set(g) & set(r):
        small, large = sorted([g[etype], r[etype]], key=len)
        best = 0.0
        for perm in itertools.permutations(range(len(large)), len(small)):
            best = max(best, sum(_iou(small[i], large[j]) for i, j in enumerate(perm)))
        total += best
    return total / max(ng, nr)


def random_doc(rng, doc_id):
    types = ["text", "image", "button"]
    children = []
    for etype in types:
        for _ in range(int(rng.integers(0, 4))):
            l, t = rng.uniform(0, 70, 2)
            w, h = rng.uniform(5, 28, 2)
            children.append(el(etype, (l, t, min(w, 100 - l), min(h, 100 - t))))
    if not children:
        children.append(el("text", (10, 10, 20, 20)))
    return page(children, doc_id=doc_id)


def test_max_iou_identical_is_one():
    doc = random_doc(np.random.default_rng(7), "a")
    assert max_iou(doc, doc) == pytest.approx(1.0, abs=1e-12)


def test_max_iou_type_disjoint_is_zero():
    a = page([el("text", (0, 0, 10, 10))])
    b = page([el("image", (0, 0, 10, 10))])
    assert max_iou(a, b) == 0.0


def test_max_iou_unequal_counts_normalized_by_larger():
    a = page([el("text", (0, 0, 10, 10)), el("text", (50, 50, 10, 10))])
    b = page([el("text", (0, 0, 10, 10))])
    assert max_iou(a, b) == pytest.approx(0.5, abs=1e-12)


def test_max_iou_empty_raises():
    a = page([el("text", (0, 0, 10, 10))])
    empty = page([node(tag="div", box=(0, 0, 9, 9))])
    with pytest.raises(EmptyLayoutError):
        max_iou(a, empty)
    with pytest.raises(EmptyLayoutError):
        max_iou(empty, a)


def test_max_iou_matches_brute_force_and_symmetric():
    rng = np.random.default_rng(42)
    for k in range(60):
        a = random_doc(rng, f"a{k}")
        b = random_doc(rng, f"b{k}")
        got = max_iou(a, b)
        assert got == pytest.approx(brute_max_iou(a, b), abs=1e-9)
        assert got == pytest.approx(max_iou(b, a), abs=1e-12)


# --- docsim / unique_match ---------------------------------------------------------

def test_docsim_self_value_single_element():
    doc = page([el("text", (25, 25, 50, 50))])
    assert docsim(doc, doc) == pytest.approx(0.5, abs=1e-12)  # sqrt(0.25 area)


def test_docsim_type_disjoint_is_zero():
    a = page([el("text", (0, 0, 10, 10))])
    b = page([el("image", (0, 0, 10, 10))])
    assert docsim(a, b) == 0.0


def test_docsim_empty_raises():
    a = page([el("text", (0, 0, 10, 10))])
    empty = page([node(tag="div", box=(0, 0, 9, 9))])
    with pytest.raises(EmptySetError):
        docsim(a, empty)


def test_docsim_self_preference_on_random_fixture():
    rng = np.random.default_rng(3)
    docs = [random_doc(rng, f"d{k}") for k in range(20)]
    for i, x in enumerate(docs):
        self_score = docsim(x, x)
        for j, y in enumerate(docs):
            if i != j:
                assert self_score >= docsim(x, y) - 1e-12


def test_docsim_symmetric():
    rng = np.random.default_rng(11)
    for k in range(20):
        a, b = random_doc(rng, "a"), random_doc(rng, "b")
        assert docsim(a, b) == pytest.approx(docsim(b, a), abs=1e-12)


def test_unique_match_identical_generations():
    rng = np.random.default_rng(5)
    train = [random_doc(rng, f"t{k}") for k in range(4)]
    gens = [train[2]] * 5
    assert unique_match(gens, train) == pytest.approx(1.0 / 5.0)


def test_unique_match_distinct_retrievals():
    rng = np.random.default_rng(6)
    train = [random_doc(rng, f"t{k}") for k in range(5)]
    assert unique_match(train, train) == 1.0  # each retrieves itself


def test_unique_match_empty_raises():
    doc = page([el("text", (0, 0, 10, 10))])
    with pytest.raises(EmptySetError):
        unique_match([], [doc])
    with pytest.raises(EmptySetError):
        unique_match([doc], [])


# --- type consistency --------------------------------------------------------------

def test_type_consistency_counting_oracle():
    ir = parse_ir('[ [e:link [prop:repeat "5"] ] ]', WEBUI_VOCAB)
    doc = page([el("link", (0, k * 12, 10, 10)) for k in range(3)])
    assert type_consistency(ir, doc) == pytest.approx(0.6)


def test_type_consistency_extra_elements_do_not_hurt():
    ir = parse_ir("[ [e:title] ]", WEBUI_VOCAB)
    doc = page([el("title", (0, 0, 50, 10))] + [el("text", (0, 20 + k * 12, 40, 8)) for k in range(3)])
    assert type_consistency(ir, doc) == 1.0


def test_type_consistency_ignores_completed():
    ir = parse_ir("[ [e:title] ]", WEBUI_VOCAB)
    doc = page([el("title", (0, 0, 50, 10), completed=True)])
    assert type_consistency(ir, doc) == 0.0


def test_type_consistency_counts_group_members():
    ir = parse_ir('[ [group [prop:repeat "2"] [item [e:image] [e:link] ] ] ]', WEBUI_VOCAB)
    doc = page(
        [
            el("image", (0, 0, 10, 10)),
            el("image", (20, 0, 10, 10)),
            el("link", (0, 12, 10, 4)),
            el("link", (20, 12, 10, 4)),
        ]
    )
    assert type_consistency(ir, doc) == 1.0
    short = page([el("image", (0, 0, 10, 10)), el("link", (0, 12, 10, 4))])
    assert type_consistency(ir, short) == pytest.approx(0.5)


# --- pos/size consistency ----------------------------------------------------------

def test_pos_size_no_atoms_is_one():
    ir = parse_ir("[ [e:title] ]", WEBUI_VOCAB)
    doc = page([el("text", (40, 40, 10, 10))])
    assert pos_size_consistency(ir, doc) == 1.0


def test_pos_size_top_satisfied():
    # y-center at 0.1 of canvas height passes the top threshold.
    ir = parse_ir('[ [e:title [prop:position "top"] ] ]', WEBUI_VOCAB)
    doc = page([el("title", (40, 5, 20, 10))])
    assert pos_size_consistency(ir, doc) == 1.0


def test_pos_size_top_at_bottom_unsatisfied():
    ir = parse_ir('[ [e:title [prop:position "top"] ] ]', WEBUI_VOCAB)
    doc = page([el("title", (40, 85, 20, 10))])
    assert pos_size_consistency(ir, doc) == 0.0


def test_pos_size_same_element_serves_both_kinds():
    ir = parse_ir('[ [e:title [prop:position "top"] [prop:size "small"] ] ]', WEBUI_VOCAB)
    doc = page([el("title", (40, 2, 20, 10))])  # area 2% -> small, center top
    assert pos_size_consistency(ir, doc) == 1.0


def test_pos_size_claiming_within_kind():
    # Two top constraints, one qualifying element: half satisfied.
    ir = parse_ir('[ [e:title [prop:position "top"] [prop:repeat "2"] ] ]', WEBUI_VOCAB)
    doc = page([el("title", (40, 2, 20, 10)), el("title", (40, 45, 20, 10))])
    assert pos_size_consistency(ir, doc) == pytest.approx(0.5)


def test_pos_size_ignores_completed():
    ir = parse_ir('[ [e:title [prop:position "top"] ] ]', WEBUI_VOCAB)
    doc = page([el("title", (40, 2, 20, 10), completed=True)])
    assert pos_size_consistency(ir, doc) == 0.0


def test_pos_size_respects_params():
    # With a huge small threshold, a 20% element counts as small.
    ir = parse_ir('[ [e:text [prop:size "small"] ] ]', WEBUI_VOCAB)
    doc = page([el("text", (30, 30, 50, 40))])
    assert pos_size_consistency(ir, doc) == 0.0
    loose = SynthParams(size_small_max=0.25)
    assert pos_size_consistency(ir, doc, loose) == 1.0


# --- hierarchy consistency ----------------------------------------------------------

def group_page(n_items=3, member_types=("image", "link"), completed_member=None):
    # Members sit in the middle band of a 120x200 canvas: no pos label extracts.
    items = []
    for k in range(n_items):
        l = 25 + 22 * k
        members = []
        for m, etype in enumerate(member_types):
            completed = etype == completed_member
            members.append(el(etype, (l, 90 + m * 12, 20, 8), completed=completed))
        items.append(node(tag="li", box=(l, 88, 20, 24), children=members))
    ul = node(tag="ul", box=(20, 86, 75, 30), children=[*items])
    return page([ul], w=120, h=200)


def test_hierarchy_no_atoms_is_one():
    ir = parse_ir("[ [e:title] ]", WEBUI_VOCAB)
    assert hierarchy_consistency(ir, page([el("title", (0, 0, 10, 10))])) == 1.0


def test_hierarchy_full_match():
    ir = parse_ir('[ [group [prop:repeat "3"] [item [e:image] [e:link] ] ] ]', WEBUI_VOCAB)
    assert hierarchy_consistency(ir, group_page(3)) == 1.0


def test_hierarchy_partial_match():
    ir = parse_ir('[ [group [prop:repeat "3"] [item [e:image] [e:link] ] ] ]', WEBUI_VOCAB)
    assert hierarchy_consistency(ir, group_page(2)) == pytest.approx(2.0 / 3.0)


def test_hierarchy_missing_groups_raises():
    ir = parse_ir('[ [group [prop:repeat "2"] [item [e:image] ] ] ]', WEBUI_VOCAB)
    flat_doc = page([el("image", (0, 0, 10, 10)), el("image", (20, 0, 10, 10))])
    with pytest.raises(MissingGroupStructureError):
        hierarchy_consistency(ir, flat_doc)


def test_hierarchy_member_annotations_enforced():
    ir = parse_ir(
        '[ [group [prop:repeat "3"] [item [e:image [prop:position "top"] ] [e:link] ] ] ]',
        WEBUI_VOCAB,
    )
    # Fixture members sit mid-canvas: pos=top never matches.
    assert hierarchy_consistency(ir, group_page(3)) == 0.0


def test_hierarchy_completed_members_invisible():
    # Doc items carry a completed link; an image-only signature still matches.
    ir = parse_ir('[ [group [prop:repeat "3"] [item [e:image] ] ] ]', WEBUI_VOCAB)
    doc = group_page(3, completed_member="link")
    assert hierarchy_consistency(ir, doc) == 1.0


def test_hierarchy_extra_member_breaks_match():
    ir = parse_ir('[ [group [prop:repeat "3"] [item [e:image] ] ] ]', WEBUI_VOCAB)
    assert hierarchy_consistency(ir, group_page(3)) == 0.0  # items are (image, link)


def test_hierarchy_atoms_do_not_claim_items():
    # An unannotated signature also accepts items matched by an annotated one.
    ir = parse_ir(
        '[ [group [prop:repeat "3"] [item [e:image] [e:link] ] ]'
        ' [group [prop:repeat "3"] [item [e:image [prop:size "small"] ] [e:link] ] ] ]',
        WEBUI_VOCAB,
    )
    assert hierarchy_consistency(ir, group_page(3)) == 1.0


def test_hierarchy_counts_decoded_item_blocks():
    grid = GRIDS["webui"]
    tok = lambda et, l, t: LayoutElementTok(et, l, t, 20, 8)
    seq = LayoutSeq(
        ungrouped=(),
        groups=tuple((tok("image", 20 + 30 * k, 60), tok("link", 20 + 30 * k, 70)) for k in range(3)),
    )
    doc = decode_layout(seq, grid, (1200.0, 1200.0))
    ir = parse_ir('[ [group [prop:repeat "3"] [item [e:image] [e:link] ] ] ]', WEBUI_VOCAB)
    assert hierarchy_consistency(ir, doc) == 1.0


# --- closed loop --------------------------------------------------------------------

def test_closed_loop_fixtures():
    docs = [group_page(3), page([el("title", (13, 2, 60, 10)), el("text", (13, 40, 60, 12))])]
    for doc in docs:
        ir = synthesize_ir(doc, ALL_ON).ir
        assert type_consistency(ir, doc) == 1.0
        assert pos_size_consistency(ir, doc) == 1.0
        assert hierarchy_consistency(ir, doc) == 1.0


@settings(max_examples=60, deadline=None)
@given(layout_docs(allow_completed=False))
def test_closed_loop_property(doc):
    ir = synthesize_ir(doc, ALL_ON).ir
    assert type_consistency(ir, doc) == 1.0
    assert pos_size_consistency(ir, doc) == 1.0
    assert hierarchy_consistency(ir, doc) == 1.0


@settings(max_examples=60, deadline=None)
@given(layout_docs(allow_completed=False))
def test_completed_additions_never_lower_consistency(doc):
    ir = synthesize_ir(doc, ALL_ON).ir
    extra = el("icon" if doc.domain == "webui" else "text", (1, 1, 5, 5), completed=True)
    padded = LayoutDoc(
        doc_id=doc.doc_id,
        domain=doc.domain,
        canvas_w=doc.canvas_w,
        canvas_h=doc.canvas_h,
        root=ElementTreeNode(
            tag=doc.root.tag,
            box=doc.root.box,
            etype=doc.root.etype,
            children=list(doc.root.children) + [extra],
            attrs=doc.root.attrs,
        ),
    )
    assert type_consistency(ir, padded) >= type_consistency(ir, doc)
    assert pos_size_consistency(ir, padded) >= pos_size_consistency(ir, doc)
    assert hierarchy_consistency(ir, padded) >= hierarchy_consistency(ir, doc)


# --- evaluate -----------------------------------------------------------------------

def eval_fixture():
    rng = np.random.default_rng(9)
    docs = [random_doc(rng, f"e{k}") for k in range(4)] + [group_page(3)]
    pairs = [(synthesize_ir(d, ALL_ON).ir, d) for d in docs]
    return docs, pairs


def test_evaluate_self_pairs():
    docs, pairs = eval_fixture()
    report = evaluate(pairs, refs=docs, train_set=docs)
    assert report.miou == pytest.approx(1.0, abs=1e-12)
    assert report.type_cons == 1.0
    assert report.pos_size_cons == 1.0
    assert report.hier_cons == 1.0
    assert report.um == 1.0
    assert report.n["pairs"] == 5
    assert report.n["hier_pairs"] == 1


def test_evaluate_means_match_elementwise():
    docs, pairs = eval_fixture()
    report = evaluate(pairs)
    assert report.align == pytest.approx(float(np.mean([alignment(d) for d in docs])))
    assert report.overlap == pytest.approx(float(np.mean([overlap(d) for d in docs])))
    assert report.miou is None
    assert report.um is None


def test_evaluate_hier_null_without_group_constraints():
    doc = page([el("title", (0, 0, 50, 10))])
    ir = parse_ir("[ [e:title] ]", WEBUI_VOCAB)
    report = evaluate([(ir, doc)])
    assert report.hier_cons is None
    assert report.n["hier_pairs"] == 0


def test_evaluate_refs_length_mismatch():
    docs, pairs = eval_fixture()
    with pytest.raises(LengthMismatchError):
        evaluate(pairs, refs=docs[:-1])


def test_evaluate_empty_raises():
    with pytest.raises(EmptySetError):
        evaluate([])


def test_eval_report_json_round_trip():
    docs, pairs = eval_fixture()
    report = evaluate(pairs, refs=docs, train_set=docs)
    blob = report.to_json()
    assert "fid" not in blob
    assert EvalReport.from_json(blob) == report
    assert math.isfinite(blob["align"])
