"""Pipeline driver: one binary, one subcommand per stage, JSONL in and out.

Records stream one line at a time (no whole-corpus residency). A failing
record is reported as a single diagnostic line naming the record and does
not stop the run; the exit code is 1 if anything failed, 2 on usage errors.
Every run that writes an output file also writes a `<name>.manifest.json`
beside it (subcommand, parameters, input digests, version, seed) so outputs
stay attributable. Manifests carry no timestamps, keeping reruns
byte-identical.

`--jobs N` maps records across N worker processes; output order is the
input order regardless of completion order. `LAYOUTIR_LOG` sets the
diagnostics level (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Iterator

from . import __version__
from .corpus import (
    CorpusStats,
    LayoutDoc,
    compute_stats,
    doc_from_json,
    doc_to_json,
)
from .errors import LayoutIrError
from .grid import GRIDS, GridSpec
from .ir import parse_ir, print_ir
from .metrics import evaluate
from .placer import PlacerConfig, place, place_samples
from .render import RenderStyle, render_svg, style_for
from .seq import (
    compile_constraints,
    decode_layout,
    encode_layout,
    parse_constraint_tokens,
    parse_layout_tokens,
    render_constraint_tokens,
    render_layout_tokens,
)
from .synth import SynthParams, synthesize_ir
from .vocab import vocab_for

log = logging.getLogger("layoutir")

# A worker maps one (lineno, line) to (record_id, out_line | None, error | None).
Worker = Callable[[tuple[int, str]], tuple[str, str | None, str | None]]


@dataclass(frozen=True)
class RunManifest:
    """Provenance sidecar written beside every produced output file."""

    subcommand: str
    params: dict
    inputs: dict
    version: str
    seed: int | None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path: Path, args: argparse.Namespace, skip={"in_path", "out"}) -> None:
    params = {
        k: v for k, v in sorted(vars(args).items())
        if k not in skip and k != "func" and not k.startswith("_")
    }
    inputs = {}
    if getattr(args, "in_path", None):
        inputs[str(args.in_path)] = _sha256(args.in_path)
    for extra in ("refs", "train", "stats"):
        p = getattr(args, extra, None)
        if p:
            inputs[str(p)] = _sha256(p)
    manifest = RunManifest(
        subcommand=args.subcommand,
        params=params,
        inputs=inputs,
        version=__version__,
        seed=getattr(args, "seed", None),
    )
    side = out_path / "manifest.json" if out_path.is_dir() else out_path.with_name(
        out_path.name + ".manifest.json"
    )
    side.write_text(manifest.to_json())


def _read_lines(path: str) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fp:
        for i, raw in enumerate(fp, start=1):
            line = raw.strip()
            if line:
                yield i, line


def _diag(record_id: str, err: str) -> None:
    print(f"record {record_id}: {err}".replace("\n", " "), file=sys.stderr)


def _map_records(
    pairs: Iterable[tuple[int, str]], worker: Worker, jobs: int
) -> Iterator[tuple[str, str | None, str | None]]:
    if jobs <= 1:
        yield from map(worker, pairs)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(worker, pairs, chunksize=64)


def _run_stream(args: argparse.Namespace, worker: Worker) -> int:
    """Drive a record-wise subcommand: map, write, diagnose, manifest."""
    failures = 0
    out_fp = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for record_id, out_line, err in _map_records(
            _read_lines(args.in_path), worker, args.jobs
        ):
            if err is not None:
                failures += 1
                _diag(record_id, err)
                continue
            if out_line is not None:
                out_fp.write(out_line + "\n")
    finally:
        if args.out:
            out_fp.close()
    if args.out:
        _write_manifest(Path(args.out), args)
    return 1 if failures else 0


def _record_id(lineno: int, obj: dict) -> str:
    rid = obj.get("id") or obj.get("doc_id")
    return str(rid) if rid else f"line {lineno}"


_DATA_ERRORS = (LayoutIrError, ValueError, KeyError, json.JSONDecodeError)


@dataclass(frozen=True)
class _JsonWorker:
    """Picklable record worker: parse JSON, run body, report errors by id."""

    body: Callable[[dict, int], dict | None]

    def __call__(self, pair: tuple[int, str]) -> tuple[str, str | None, str | None]:
        lineno, line = pair
        rid = f"line {lineno}"
        try:
            obj = json.loads(line)
            rid = _record_id(lineno, obj)
            out = self.body(obj, lineno)
            return rid, None if out is None else json.dumps(out, sort_keys=True), None
        except _DATA_ERRORS as e:
            return rid, None, f"{type(e).__name__}: {e}"


@dataclass(frozen=True)
class _IrLineWorker:
    """Per-line IR syntax check against one domain vocabulary."""

    domain: str

    def __call__(self, pair: tuple[int, str]) -> tuple[str, str | None, str | None]:
        lineno, line = pair
        try:
            parse_ir(line, vocab_for(self.domain))
            return f"line {lineno}", None, None
        except _DATA_ERRORS as e:
            return f"line {lineno}", None, f"{type(e).__name__}: {e}"


# --- per-record bodies (top level so they pickle for --jobs) -----------------

def _synth_body(params: SynthParams, obj: dict, lineno: int) -> dict:
    doc = doc_from_json(obj, lineno)
    res = synthesize_ir(doc, params)
    return {
        "id": doc.doc_id,
        "domain": doc.domain,
        "canvas": [doc.canvas_w, doc.canvas_h],
        "ir": print_ir(res.ir),
        "discarded": list(res.discarded),
    }


def _compile_body(default_domain: str, obj: dict, lineno: int) -> dict:
    vocab = vocab_for(obj.get("domain", default_domain))
    cs = compile_constraints(parse_ir(obj["ir"], vocab))
    obj["constraints"] = render_constraint_tokens(cs)
    return obj


def _encode_body(grid: GridSpec, obj: dict, lineno: int) -> dict:
    doc = doc_from_json(obj, lineno)
    seq = encode_layout(doc, grid)
    return {
        "id": doc.doc_id,
        "domain": doc.domain,
        "canvas": [doc.canvas_w, doc.canvas_h],
        "layout": render_layout_tokens(seq),
    }


def _decode_body(
    grid: GridSpec, domain: str, canvas: tuple[float, float] | None, obj: dict, lineno: int
) -> dict:
    dom = obj.get("domain", domain)
    seq = parse_layout_tokens(obj["layout"], vocab_for(dom))
    extent = canvas or tuple(obj.get("canvas") or (float(grid.w_bins), float(grid.h_bins)))
    doc = decode_layout(seq, grid, extent, dom)
    out = doc_to_json(doc)
    out["id"] = str(obj.get("id", f"line {lineno}"))
    return out


def _place_body(
    cfg: PlacerConfig, domain: str, stats: CorpusStats | None, sample: bool,
    obj: dict, lineno: int,
) -> dict:
    dom = obj.get("domain", domain)
    if "constraints" in obj:
        cs = parse_constraint_tokens(obj["constraints"], vocab_for(dom))
    else:
        cs = compile_constraints(parse_ir(obj["ir"], vocab_for(dom)))
        obj["constraints"] = render_constraint_tokens(cs)
    if sample:
        seqs = place_samples(cs, cfg, stats)
        obj["layouts"] = [render_layout_tokens(s) for s in seqs]
    else:
        obj["layout"] = render_layout_tokens(place(cs, cfg, stats))
    return obj


def _render_body(out_dir: Path, style: RenderStyle | None, obj: dict, lineno: int) -> None:
    doc = doc_from_json(obj, lineno)
    st = style or style_for(vocab_for(doc.domain))
    (out_dir / f"{doc.doc_id}.svg").write_text(render_svg(doc, st), encoding="utf-8")
    return None


# --- aggregate subcommands ----------------------------------------------------

def _cmd_eval(args: argparse.Namespace) -> int:
    failures = 0
    gen_pairs: list[tuple] = []
    for lineno, line in _read_lines(args.in_path):
        rid = f"line {lineno}"
        try:
            obj = json.loads(line)
            rid = _record_id(lineno, obj)
            dom = obj.get("domain", args.domain)
            grid = GRIDS[dom]
            seq = parse_layout_tokens(obj["layout"], vocab_for(dom))
            canvas = tuple(obj.get("canvas") or (float(grid.w_bins), float(grid.h_bins)))
            doc = decode_layout(seq, grid, canvas, dom)
            gen_pairs.append((parse_ir(obj["ir"], vocab_for(dom)), doc))
        except (LayoutIrError, ValueError, KeyError, json.JSONDecodeError) as e:
            failures += 1
            _diag(rid, f"{type(e).__name__}: {e}")
    refs = _load_docs(args.refs) if args.refs else None
    train = _load_docs(args.train) if args.train else None
    try:
        report = evaluate(gen_pairs, refs, train)
    except LayoutIrError as e:
        _diag("evaluate", f"{type(e).__name__}: {e}")
        return 1
    text = json.dumps(report.to_json(), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        _write_manifest(Path(args.out), args)
    else:
        print(text)
    return 1 if failures else 0


def _load_docs(path: str) -> list[LayoutDoc]:
    docs = []
    for lineno, line in _read_lines(path):
        docs.append(doc_from_json(json.loads(line), lineno))
    return docs


def _cmd_stats(args: argparse.Namespace) -> int:
    grid = GRIDS[args.domain]
    docs = (doc_from_json(json.loads(line), no) for no, line in _read_lines(args.in_path))
    try:
        stats = compute_stats(docs, args.domain, grid)
    except LayoutIrError as e:
        _diag("stats", f"{type(e).__name__}: {e}")
        return 1
    text = json.dumps(stats.to_json(), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        _write_manifest(Path(args.out), args)
    else:
        print(text)
    return 0


# --- wiring -------------------------------------------------------------------

def _add_io(sp: argparse.ArgumentParser, out: bool = True) -> None:
    sp.add_argument("--in", dest="in_path", required=True, help="input JSONL")
    if out:
        sp.add_argument("--out", default=None, help="output path (default stdout)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--seed", type=int, default=0, help="base RNG seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="layoutir", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("validate-ir", help="parse IR lines, report failures")
    _add_io(sp, out=False)
    sp.add_argument("--domain", choices=sorted(GRIDS), default="webui")
    sp.set_defaults(out=None)

    sp = sub.add_parser("synth", help="derive IRs from layout documents")
    _add_io(sp)
    sp.add_argument("--r", type=float, default=0.1, help="element discard rate")
    sp.add_argument("--p-pos", type=float, default=0.5)
    sp.add_argument("--p-size", type=float, default=0.3)
    sp.add_argument("--p-hier", type=float, default=0.8)

    sp = sub.add_parser("compile", help="IR records to constraint token text")
    _add_io(sp)
    sp.add_argument("--domain", choices=sorted(GRIDS), default="webui")

    sp = sub.add_parser("encode", help="layout documents to token sequences")
    _add_io(sp)
    sp.add_argument("--grid", choices=sorted(GRIDS), default="webui")

    sp = sub.add_parser("decode", help="token sequences to layout documents")
    _add_io(sp)
    sp.add_argument("--grid", choices=sorted(GRIDS), default="webui")
    sp.add_argument("--domain", default=None, help="default: same as --grid")
    sp.add_argument("--canvas-w", type=float, default=None)
    sp.add_argument("--canvas-h", type=float, default=None)

    sp = sub.add_parser("place", help="constraint records to layout sequences")
    _add_io(sp)
    sp.add_argument("--grid", choices=sorted(GRIDS), default="webui")
    sp.add_argument("--domain", default=None, help="default: same as --grid")
    sp.add_argument("--k", type=int, default=1, help="top-k sampling width")
    sp.add_argument("--samples", type=int, default=0, help="0 = deterministic")
    sp.add_argument("--stats", default=None, help="corpus stats JSON for sizes")
    sp.add_argument("--no-completion", action="store_true")

    sp = sub.add_parser("eval", help="score generated layouts against their IRs")
    _add_io(sp)
    sp.add_argument("--domain", choices=sorted(GRIDS), default="webui")
    sp.add_argument("--refs", default=None, help="reference corpus JSONL")
    sp.add_argument("--train", default=None, help="retrieval corpus JSONL")

    sp = sub.add_parser("render", help="layout documents to SVG files")
    _add_io(sp, out=False)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.set_defaults(out=None)

    sp = sub.add_parser("stats", help="corpus geometry and co-occurrence stats")
    _add_io(sp)
    sp.add_argument("--domain", choices=sorted(GRIDS), default="webui")
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("LAYOUTIR_LOG", "WARNING"))
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "validate-ir":
            return _run_stream(args, _IrLineWorker(args.domain))
        if args.subcommand == "synth":
            params = SynthParams(
                discard_rate=args.r,
                keep_prob_pos=args.p_pos,
                keep_prob_size=args.p_size,
                keep_prob_hier=args.p_hier,
                seed=args.seed,
            )
            return _run_stream(args, _JsonWorker(partial(_synth_body, params)))
        if args.subcommand == "compile":
            return _run_stream(args, _JsonWorker(partial(_compile_body, args.domain)))
        if args.subcommand == "encode":
            return _run_stream(args, _JsonWorker(partial(_encode_body, GRIDS[args.grid])))
        if args.subcommand == "decode":
            canvas = None
            if args.canvas_w and args.canvas_h:
                canvas = (args.canvas_w, args.canvas_h)
            body = partial(_decode_body, GRIDS[args.grid], args.domain or args.grid, canvas)
            return _run_stream(args, _JsonWorker(body))
        if args.subcommand == "place":
            cfg = PlacerConfig(
                grid=GRIDS[args.grid],
                k=args.k,
                n_samples=args.samples or 1,
                completion_enabled=not args.no_completion,
                seed=args.seed,
            )
            stats = None
            if args.stats:
                stats = CorpusStats.from_json(json.loads(Path(args.stats).read_text()))
            body = partial(
                _place_body, cfg, args.domain or args.grid, stats, args.samples > 0
            )
            return _run_stream(args, _JsonWorker(body))
        if args.subcommand == "eval":
            return _cmd_eval(args)
        if args.subcommand == "render":
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            style = None if args.scale == 1.0 else RenderStyle(scale=args.scale)
            code = _run_stream(args, _JsonWorker(partial(_render_body, out_dir, style)))
            _write_manifest(out_dir, args)
            return code
        if args.subcommand == "stats":
            return _cmd_stats(args)
    except OSError as e:
        print(f"layoutir: {e}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled subcommand {args.subcommand}")


if __name__ == "__main__":
    sys.exit(main())
