"""Command-line entry point.

Subcommands cover the full pipeline: dataset generation (``gen``), single
simulations (``sim``), rendering (``render``), event mining (``mine``),
candidate scoring (``eval``, ``select``), CMA-ES refinement (``search``),
and key-path config edits (``edit``).

Exit codes: 0 success, 1 domain error (bad config, divergence, format
mismatch; one reason line on stderr), 2 usage error (bad flags or paths;
synopsis on stderr). Every subcommand is a pure function of its flags and
seed: no clock, no hidden state.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .errors import SceneError
from . import formats
from .datagen import SamplingRanges, generate_dataset, validate_manifest
from .events import mine_events, render_description
from .metrics import ReferenceArtifacts, evaluate
from .render import (
    build_camera,
    render_flow,
    render_masks,
    visibility_series,
)
from .scene import SHAPES, parse_config, serialize_config, validate
from .search import best_of_k, cmaes_search
from .simulate import simulate


def _load_config(path: Path):
    return parse_config(path.read_text("utf-8"))


def _require_paths(parser, *paths: Path) -> None:
    for p in paths:
        if not p.exists():
            parser.error(f"path does not exist: {p}")


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_gen(args, parser) -> int:
    ranges = SamplingRanges.from_file(args.ranges) if args.ranges else None
    if args.ranges:
        _require_paths(parser, Path(args.ranges))
    manifest = generate_dataset(args.n, ranges, args.out, args.seed)
    print(f"accepted={len(manifest.accepted)} attempts={len(manifest.records)}")
    for reason, count in sorted(manifest.rejections.items()):
        print(f"rejected.{reason}={count}")
    print(f"manifest_sha256={manifest.content_hash}")
    return 0


def _cmd_sim(args, parser) -> int:
    path = Path(args.config)
    _require_paths(parser, path)
    config = _load_config(path)
    trace = simulate(config, duration=args.duration, fps=args.fps)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    formats.write_trace(out, trace)
    print(f"frames={len(trace.frames)} contacts={len(trace.contacts)} trace={out}")
    return 0


def _cmd_render(args, parser) -> int:
    path = Path(args.config)
    _require_paths(parser, path)
    config = _load_config(path)
    trace = simulate(config)
    cam = build_camera(config.camera, args.width, args.height)
    masks = render_masks(trace, cam)
    flows = render_flow(trace, cam, masks=masks)
    out = Path(args.out)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    (out / "flow").mkdir(parents=True, exist_ok=True)
    (out / "depth").mkdir(parents=True, exist_ok=True)
    depths = masks.depths
    for i, frame in enumerate(masks.frame_indices):
        formats.write_mask(out / "masks" / f"{frame:03d}.pgm", masks.ids[i])
        formats.write_depth(out / "depth" / f"{frame:03d}.ddep", depths[i])
    for i, pair in enumerate(flows.pair_indices):
        formats.write_flow(out / "flow" / f"{pair:03d}.dflo", flows.flows[i])
    print(f"frames={len(masks.frame_indices)} flow_pairs={len(flows.pair_indices)} out={out}")
    return 0


def _cmd_mine(args, parser) -> int:
    path = Path(args.config)
    _require_paths(parser, path)
    config = _load_config(path)
    trace = simulate(config)
    if args.artifacts:
        art = Path(args.artifacts)
        _require_paths(parser, art / "masks")
        mask_files = sorted((art / "masks").glob("*.pgm"))
        ids = np.stack([formats.read_mask(p) for p in mask_files])
        vis = np.stack(
            [np.bincount(frame.ravel(), minlength=len(config.objects) + 1)[1:] for frame in ids]
        )
    else:
        cam = build_camera(config.camera)
        masks = render_masks(trace, cam)
        vis = visibility_series(masks, len(config.objects))
    events = mine_events(trace, vis)
    description = render_description(events, config, args.seed, visibility=vis)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_events(out / "events.ndrec", events)
    (out / "description.txt").write_text(description.text, encoding="utf-8")
    print(f"events={len(events)} description_chars={len(description.text)} out={out}")
    return 0


def _cmd_eval(args, parser) -> int:
    pred_path = Path(args.pred)
    ref_dir = Path(args.ref_dir)
    _require_paths(parser, pred_path, ref_dir)
    ref = ReferenceArtifacts.from_dir(ref_dir)
    ref_config = None
    if args.ref_config:
        _require_paths(parser, Path(args.ref_config))
        ref_config = _load_config(Path(args.ref_config))
    pred = _load_config(pred_path)
    report = evaluate(pred, ref, ref_config=ref_config)
    sys.stdout.write(report.to_record())
    return 0


def _cmd_select(args, parser) -> int:
    cand_dir = Path(args.candidates_dir)
    ref_dir = Path(args.ref_dir)
    _require_paths(parser, cand_dir, ref_dir)
    files = sorted(cand_dir.glob("*.txt"))
    if not files:
        parser.error(f"no candidate .txt files in {cand_dir}")
    texts = [f.read_text("utf-8") for f in files]
    ref = ReferenceArtifacts.from_dir(ref_dir)
    result = best_of_k(texts, ref)
    for score, f in zip(result.scores, files):
        print(
            f"candidate={score.index} file={f.name} fitness={score.fitness!r} "
            f"iou_full={score.iou_full!r} epe_full={score.epe_full!r}"
        )
    print(f"best_index={result.best_index} best_file={files[result.best_index].name}")
    print(f"best_at_1={result.best_at_1!r}")
    print(f"best_at_k={result.best_at_k!r}")
    return 0


def _cmd_search(args, parser) -> int:
    init_path = Path(args.init)
    ref_dir = Path(args.ref_dir)
    _require_paths(parser, init_path, ref_dir)
    ranges = None
    if args.ranges:
        _require_paths(parser, Path(args.ranges))
        ranges = SamplingRanges.from_file(args.ranges)
    init = _load_config(init_path)
    ref = ReferenceArtifacts.from_dir(ref_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "search_log.ndrec"
    started = time.perf_counter()
    with open(log_path, "w", encoding="utf-8") as log_file:

        def on_generation(stats):
            line = stats.to_record()
            log_file.write(line + "\n")
            log_file.flush()
            print(line)

        best, log = cmaes_search(
            init,
            ref,
            popsize=args.pop,
            generations=args.gens,
            seed=args.seed,
            ranges=ranges,
            on_generation=on_generation,
        )
    runtime = time.perf_counter() - started
    (out / "refined.yaml").write_text(serialize_config(best), encoding="utf-8")
    print(f"best_fitness={log[-1].best_fitness!r}" if log else "best_fitness=nan")
    print(f"runtime_seconds={runtime:.1f}")
    print(f"refined={out / 'refined.yaml'}")
    return 0


def _apply_set(doc: list, assignment: str) -> None:
    key_path, sep, raw_value = assignment.partition("=")
    if not sep:
        raise SceneError(f"--set needs key.path=value, got {assignment!r}")
    segments = key_path.split(".")
    value = yaml.safe_load(raw_value)

    object_entries = [e for e in doc if isinstance(e, dict) and e.get("type") in SHAPES]
    if segments[0] == "objects":
        if len(segments) < 3:
            raise SceneError(f"{key_path}: expected objects.<index>.<field...>")
        try:
            target = object_entries[int(segments[1])]
        except (ValueError, IndexError):
            raise SceneError(f"{key_path}: no object at index {segments[1]!r}") from None
        rest = segments[2:]
    elif segments[0] in ("camera", "gravity"):
        matches = [e for e in doc if isinstance(e, dict) and e.get("type") == segments[0]]
        if not matches:
            raise SceneError(f"{key_path}: no {segments[0]} entry")
        target = matches[0]
        rest = segments[1:]
    else:
        raise SceneError(f"{key_path}: must start with objects.<i>, camera, or gravity")

    node = target
    for seg in rest[:-1]:
        node = node[int(seg)] if isinstance(node, list) else node.get(seg)
        if node is None:
            raise SceneError(f"{key_path}: no field {seg!r}")
    leaf = rest[-1]
    try:
        if isinstance(node, list):
            node[int(leaf)] = value
        else:
            if leaf not in node:
                raise SceneError(f"{key_path}: no field {leaf!r}")
            node[leaf] = value
    except (ValueError, IndexError):
        raise SceneError(f"{key_path}: bad leaf {leaf!r}") from None


def _cmd_edit(args, parser) -> int:
    path = Path(args.config)
    _require_paths(parser, path)
    doc = yaml.safe_load(path.read_text("utf-8"))
    if not isinstance(doc, list):
        raise SceneError("config must be a YAML sequence of entries")
    for assignment in args.set:
        _apply_set(doc, assignment)
    edited = yaml.safe_dump(doc, sort_keys=False)
    config = parse_config(edited)
    violations = validate(config)
    if violations:
        raise SceneError(f"edited config invalid: {violations[0]}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_config(config), encoding="utf-8")
    print(f"wrote {out}")
    return 0


def _cmd_validate(args, parser) -> int:
    out = Path(args.dataset)
    _require_paths(parser, out)
    problems = validate_manifest(out, deep=not args.shallow)
    for p in problems:
        print(p, file=sys.stderr)
    print(f"problems={len(problems)}")
    return 1 if problems else 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="physcene", description="Scene-language physics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ranges", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("sim", help="simulate a config and dump the trace")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--fps", type=int, default=30)
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("render", help="render masks, depth, and flow")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=480)
    p.add_argument("--height", type=int, default=320)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("mine", help="mine events and render the description")
    p.add_argument("--config", required=True)
    p.add_argument("--artifacts", default=None, help="rendered scene dir (else re-render)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("eval", help="score a config against reference renders")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref-dir", required=True)
    p.add_argument("--ref-config", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("select", help="best-of-K over candidate texts")
    p.add_argument("--candidates-dir", required=True)
    p.add_argument("--ref-dir", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("search", help="CMA-ES refinement of a config")
    p.add_argument("--init", required=True)
    p.add_argument("--ref-dir", required=True)
    p.add_argument("--pop", type=int, default=128)
    p.add_argument("--gens", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ranges", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("edit", help="apply key-path assignments to a config")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", required=True, metavar="KEY.PATH=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("validate", help="re-check a generated dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--shallow", action="store_true")
    p.set_defaults(func=_cmd_validate)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, parser)
    except SystemExit as exc:  # parser.error inside a subcommand
        return int(exc.code or 0)
    except SceneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    entry()
