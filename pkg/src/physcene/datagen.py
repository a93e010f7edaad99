"""Scene sampling, rejection filters, and dataset emission.

A dataset directory looks like::

    out/
      manifest.jsonl          record lines + trailing sha256 line
      00000/
        config.yaml           canonical scene text
        masks/000.pgm ...     one id mask per trace frame
        flow/000.dflo ...     the 10 stride-3 sampled flow fields
        events.ndrec          mined events, one JSON record per line
        description.txt       templated prose description

Sampling is driven entirely by a master seed: attempt k uses
``SeedSequence([master_seed, k])`` for the scene and
``SeedSequence([master_seed, k, 1])`` for the description templates, so
records are reproducible individually and the whole manifest is
content-hash stable. Rejected attempts stay in the manifest with their
reason (overlap, offscreen, too_small, or diverged).

Filters, applied in order, mirror the dataset-cleaning rules:
(i) any two bodies (or a body and the ground) overlapping at t=0;
(ii) more than one object with zero visible pixels in every frame;
(iii) any object that does appear but never reaches 8000 pixels in a frame
(never-visible objects are governed by rule (ii), not (iii)).
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import DivergenceError, SceneError
from . import formats
from .events import mine_events, render_description
from .render import (
    build_camera,
    render_flow,
    render_masks,
    sampled_pair_indices,
    visibility_series,
)
from .scene import (
    CameraSpec,
    GravitySpec,
    ObjectSpec,
    SceneConfig,
    SHAPES,
    parse_config,
    serialize_config,
    validate,
)
from .simulate import detect_initial_overlap, simulate

MIN_PIXELS = 8000

_RANGE_FIELDS = (
    "radius",
    "half_extent",
    "cylinder_height",
    "mass",
    "slide_friction",
    "roll_friction",
    "damping",
    "position_xy",
    "position_z",
    "velocity",
    "angular_velocity",
    "camera_height",
    "camera_pitch",
    "fovy",
    "gravity_z",
)


@dataclass(frozen=True)
class SamplingRanges:
    """Uniform sampling bounds plus the structural distribution knobs."""

    radius: tuple[float, float] = (0.1, 0.5)
    half_extent: tuple[float, float] = (0.1, 1.0)
    cylinder_height: tuple[float, float] = (0.2, 1.2)
    mass: tuple[float, float] = (0.2, 3.0)
    slide_friction: tuple[float, float] = (0.1, 1.2)
    roll_friction: tuple[float, float] = (0.0, 0.5)
    damping: tuple[float, float] = (-9.0, 0.0)
    position_xy: tuple[float, float] = (-5.0, 5.0)
    position_z: tuple[float, float] = (0.1, 2.5)
    velocity: tuple[float, float] = (-5.0, 5.0)
    angular_velocity: tuple[float, float] = (-6.0, 6.0)
    camera_height: tuple[float, float] = (1.5, 4.0)
    camera_pitch: tuple[float, float] = (20.0, 70.0)
    fovy: tuple[float, float] = (35.0, 60.0)
    gravity_z: tuple[float, float] = (-12.0, -4.0)
    object_counts: tuple[tuple[int, float], ...] = ((1, 0.25), (2, 0.25), (3, 0.25), (4, 0.25))
    shape_weights: tuple[tuple[str, float], ...] = tuple((s, 1.0 / 3.0) for s in SHAPES)
    upright_prob: float = 0.5
    holdout_enabled: bool = True
    holdout: tuple[tuple[str, ...], ...] = (
        ("box", "box", "box", "box"),
        ("sphere", "sphere", "sphere", "sphere"),
        ("cylinder", "cylinder", "cylinder", "cylinder"),
        ("box", "box", "sphere", "sphere"),
    )

    def __post_init__(self):
        for name in _RANGE_FIELDS:
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise SceneError(f"range {name}: min {lo} exceeds max {hi}")
        if not 0.0 <= self.upright_prob <= 1.0:
            raise SceneError("upright_prob must be in [0, 1]")

    @classmethod
    def from_yaml(cls, text: str) -> "SamplingRanges":
        raw = yaml.safe_load(text) or {}
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SceneError(f"unknown range keys {sorted(unknown)}")
        kwargs = {}
        for key, value in raw.items():
            if key in _RANGE_FIELDS:
                kwargs[key] = (float(value[0]), float(value[1]))
            elif key == "object_counts":
                kwargs[key] = tuple(sorted((int(k), float(v)) for k, v in value.items()))
            elif key == "shape_weights":
                kwargs[key] = tuple((s, float(value[s])) for s in SHAPES if s in value)
            elif key == "holdout":
                kwargs[key] = tuple(tuple(sorted(combo)) for combo in value)
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "SamplingRanges":
        return cls.from_yaml(Path(path).read_text("utf-8"))

    def to_yaml(self) -> str:
        doc: dict = {name: list(getattr(self, name)) for name in _RANGE_FIELDS}
        doc["object_counts"] = {int(k): float(v) for k, v in self.object_counts}
        doc["shape_weights"] = {s: float(w) for s, w in self.shape_weights}
        doc["upright_prob"] = self.upright_prob
        doc["holdout_enabled"] = self.holdout_enabled
        doc["holdout"] = [list(c) for c in self.holdout]
        return yaml.safe_dump(doc, sort_keys=False)


def default_ranges() -> SamplingRanges:
    """The packaged default ranges (data/default_ranges.yaml)."""
    text = resources.files("physcene.data").joinpath("default_ranges.yaml").read_text("utf-8")
    return SamplingRanges.from_yaml(text)


def local_ranges(config: SceneConfig, fraction: float = 0.1, base: SamplingRanges | None = None) -> SamplingRanges:
    """Sampling box centered on a config's own values, for local refinement.

    Each category interval spans the config's values padded on both sides by
    ``fraction`` of the default category width. This is the trust region a
    CMA-ES warm start expects: the best-of-K winner lands near the optimum,
    and the search should explore its neighborhood, not the full generative
    prior. Categories the config does not use keep the base interval.
    """
    if base is None:
        base = default_ranges()
    if fraction <= 0.0:
        raise SceneError("fraction must be positive")

    values: dict[str, list[float]] = {name: [] for name in _RANGE_FIELDS}
    for obj in config.objects:
        if obj.radius is not None:
            values["radius"].append(obj.radius)
        if obj.height is not None:
            values["cylinder_height"].append(obj.height)
        if obj.size is not None:
            values["half_extent"].extend(obj.size)
        values["mass"].append(obj.mass)
        values["slide_friction"].append(obj.friction[0])
        values["roll_friction"].append(obj.friction[1])
        values["damping"].append(obj.damping)
        values["position_xy"].extend(obj.position[:2])
        values["position_z"].append(obj.position[2])
        values["velocity"].extend(obj.linear_velocity)
        values["angular_velocity"].extend(obj.angular_velocity)
    values["camera_height"].append(config.camera.height)
    values["camera_pitch"].append(config.camera.pitch)
    values["fovy"].append(config.camera.fovy)
    values["gravity_z"].append(config.gravity.gz)

    positive = {"radius", "half_extent", "cylinder_height", "mass"}
    nonneg = {"slide_friction", "roll_friction"}
    kwargs = {}
    for name in _RANGE_FIELDS:
        base_lo, base_hi = getattr(base, name)
        vals = values[name]
        if not vals:
            kwargs[name] = (base_lo, base_hi)
            continue
        pad = fraction * (base_hi - base_lo) / 2.0
        lo, hi = min(vals) - pad, max(vals) + pad
        if name in positive:
            lo = max(lo, 1e-2)
        elif name in nonneg:
            lo = max(lo, 0.0)
        elif name == "gravity_z":
            hi = min(hi, -1e-6)
        elif name == "fovy":
            lo, hi = max(lo, 1.0), min(hi, 179.0)
        kwargs[name] = (lo, max(hi, lo))
    return SamplingRanges(
        **kwargs,
        object_counts=base.object_counts,
        shape_weights=base.shape_weights,
        upright_prob=base.upright_prob,
        holdout_enabled=base.holdout_enabled,
        holdout=base.holdout,
    )


def slot_bounds(layout, ranges: SamplingRanges) -> list[tuple[float, float]]:
    """Sampling interval per flattened slot (orientation slots span [-1, 1])."""
    bounds = []
    table = {
        "height": ranges.cylinder_height,
        "physics.mass": ranges.mass,
        "physics.friction.0": ranges.slide_friction,
        "physics.friction.1": ranges.roll_friction,
        "physics.damping": ranges.damping,
        "camera.height": ranges.camera_height,
        "camera.pitch": ranges.camera_pitch,
        "camera.fovy": ranges.fovy,
        "gravity.gz": ranges.gravity_z,
    }
    for slot in layout.slots:
        p = slot.path
        if p in table:
            bounds.append(table[p])
        elif p == "radius":
            bounds.append(ranges.radius)
        elif p.startswith("size."):
            bounds.append(ranges.half_extent)
        elif p.startswith("state.position."):
            bounds.append(ranges.position_z if p.endswith(".2") else ranges.position_xy)
        elif p.startswith("state.orientation."):
            bounds.append((-1.0, 1.0))
        elif p.startswith("state.linear_velocity."):
            bounds.append(ranges.velocity)
        elif p.startswith("state.angular_velocity."):
            bounds.append(ranges.angular_velocity)
        else:
            raise SceneError(f"no sampling range for slot {p!r}")
    return bounds


# ---------------------------------------------------------------------------
# sampling


def _uniform(rng, lo_hi) -> float:
    lo, hi = lo_hi
    return float(rng.uniform(lo, hi))


def _random_quat(rng) -> tuple[float, float, float, float]:
    q = rng.standard_normal(4)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        return (1.0, 0.0, 0.0, 0.0)
    return tuple(float(v / n) for v in q)


def _sample_shapes(rng, ranges: SamplingRanges) -> list[str]:
    counts = [c for c, _ in ranges.object_counts]
    weights = np.array([w for _, w in ranges.object_counts])
    n = int(rng.choice(counts, p=weights / weights.sum()))
    names = [s for s, _ in ranges.shape_weights]
    sw = np.array([w for _, w in ranges.shape_weights])
    holdout = {tuple(sorted(c)) for c in ranges.holdout} if ranges.holdout_enabled else set()
    for _ in range(1000):
        shapes = [str(s) for s in rng.choice(names, size=n, p=sw / sw.sum())]
        if tuple(sorted(shapes)) not in holdout:
            return shapes
    raise SceneError("could not sample a non-held-out shape combination")


def sample_config(ranges: SamplingRanges, rng_seed) -> SceneConfig:
    """Draw one scene; deterministic given the seed (int, SeedSequence, or Generator)."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    shapes = _sample_shapes(rng, ranges)
    counters: Counter = Counter()
    objects = []
    for shape in shapes:
        name = f"{shape}_{counters[shape]}"
        counters[shape] += 1
        geom: dict = {}
        if shape == "sphere":
            geom["radius"] = _uniform(rng, ranges.radius)
        elif shape == "cylinder":
            geom["radius"] = _uniform(rng, ranges.radius)
            geom["height"] = _uniform(rng, ranges.cylinder_height)
        else:
            geom["size"] = tuple(_uniform(rng, ranges.half_extent) for _ in range(3))
        if shape != "sphere" and rng.uniform() < ranges.upright_prob:
            quat = (1.0, 0.0, 0.0, 0.0)
        else:
            quat = _random_quat(rng)
        objects.append(
            ObjectSpec(
                shape=shape,
                name=name,
                position=(
                    _uniform(rng, ranges.position_xy),
                    _uniform(rng, ranges.position_xy),
                    _uniform(rng, ranges.position_z),
                ),
                orientation=quat,
                linear_velocity=tuple(_uniform(rng, ranges.velocity) for _ in range(3)),
                angular_velocity=tuple(_uniform(rng, ranges.angular_velocity) for _ in range(3)),
                mass=_uniform(rng, ranges.mass),
                friction=(_uniform(rng, ranges.slide_friction), _uniform(rng, ranges.roll_friction)),
                damping=_uniform(rng, ranges.damping),
                **geom,
            )
        )
    camera = CameraSpec.at_height(
        _uniform(rng, ranges.camera_height),
        _uniform(rng, ranges.camera_pitch),
        _uniform(rng, ranges.fovy),
    )
    gravity = GravitySpec(vector=(0.0, 0.0, _uniform(rng, ranges.gravity_z)))
    config = SceneConfig(objects=tuple(objects), camera=camera, gravity=gravity)
    assert not validate(config)
    return config


# ---------------------------------------------------------------------------
# filters


@dataclass(frozen=True)
class FilterResult:
    accepted: bool
    reason: str | None = None  # overlap | offscreen | too_small
    detail: str = ""


def filter_scene(config: SceneConfig, trace, masks) -> FilterResult:
    """Apply the three rejection rules in order; first failure wins."""
    overlaps = detect_initial_overlap(config)
    if overlaps:
        a, b = overlaps[0]
        return FilterResult(False, "overlap", f"{a} overlaps {b} at t=0")

    vis = masks if isinstance(masks, np.ndarray) else visibility_series(masks, len(config.objects))
    peak = vis.max(axis=0)
    never = [name for name, p in zip(config.names, peak) if p == 0]
    if len(never) > 1:
        return FilterResult(False, "offscreen", f"never visible: {', '.join(never)}")

    small = [name for name, p in zip(config.names, peak) if 0 < p < MIN_PIXELS]
    if small:
        return FilterResult(False, "too_small", f"peak below {MIN_PIXELS} px: {', '.join(small)}")
    return FilterResult(True)


# ---------------------------------------------------------------------------
# dataset emission


@dataclass
class DatasetManifest:
    out_dir: Path
    records: list[dict]
    content_hash: str
    rejections: dict[str, int] = field(default_factory=dict)

    @property
    def accepted(self) -> list[dict]:
        return [r for r in self.records if r["status"] == "accepted"]


def _scene_hash(paths: list[Path]) -> str:
    digest = hashlib.sha256()
    for p in paths:
        digest.update(p.name.encode("utf-8"))
        digest.update(p.read_bytes())
    return digest.hexdigest()


def _emit_scene(scene_dir: Path, config, trace, masks, flows, events, description) -> list[Path]:
    scene_dir.mkdir(parents=True, exist_ok=True)
    (scene_dir / "masks").mkdir(exist_ok=True)
    (scene_dir / "flow").mkdir(exist_ok=True)
    written = []

    cfg_path = scene_dir / "config.yaml"
    cfg_path.write_text(serialize_config(config), encoding="utf-8")
    written.append(cfg_path)
    for i in range(len(masks.frame_indices)):
        p = scene_dir / "masks" / f"{masks.frame_indices[i]:03d}.pgm"
        formats.write_mask(p, masks.ids[i])
        written.append(p)
    for i, pair in enumerate(flows.pair_indices):
        p = scene_dir / "flow" / f"{pair:03d}.dflo"
        formats.write_flow(p, flows.flows[i])
        written.append(p)
    ev_path = scene_dir / "events.ndrec"
    formats.write_events(ev_path, events)
    written.append(ev_path)
    desc_path = scene_dir / "description.txt"
    desc_path.write_text(description.text, encoding="utf-8")
    written.append(desc_path)
    return written


def generate_dataset(
    n: int,
    ranges: SamplingRanges | None,
    out_dir,
    master_seed: int,
    max_attempts: int | None = None,
) -> DatasetManifest:
    """Generate scenes until ``n`` acceptances; returns the written manifest."""
    if ranges is None:
        ranges = default_ranges()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if max_attempts is None:
        max_attempts = 60 * n + 200

    records: list[dict] = []
    rejections: Counter = Counter()
    accepted = 0
    attempt = 0
    while accepted < n:
        if attempt >= max_attempts:
            raise SceneError(
                f"gave up after {attempt} attempts with {accepted}/{n} accepted; "
                "rejection rate too high for these ranges"
            )
        seed_seq = np.random.SeedSequence([master_seed, attempt])
        config = sample_config(ranges, np.random.default_rng(seed_seq))
        # Canonicalize before simulating: artifacts must be reproducible from
        # the 6-significant-digit config.yaml, not the full-precision sample.
        config = parse_config(serialize_config(config))

        overlaps = detect_initial_overlap(config)
        if overlaps:
            result = FilterResult(False, "overlap", f"{overlaps[0][0]} overlaps {overlaps[0][1]} at t=0")
        else:
            try:
                trace = simulate(config)
            except DivergenceError:
                result = FilterResult(False, "diverged", "simulation diverged")
            else:
                cam = build_camera(config.camera)
                masks = render_masks(trace, cam)
                vis = visibility_series(masks, len(config.objects))
                result = filter_scene(config, trace, vis)

        if not result.accepted:
            rejections[result.reason] += 1
            records.append(
                {"seed": attempt, "status": "rejected", "reason": result.reason, "detail": result.detail}
            )
            attempt += 1
            continue

        flows = render_flow(trace, cam, pair_indices=sampled_pair_indices(trace), masks=masks)
        events = mine_events(trace, vis)
        desc_seed = int(np.random.SeedSequence([master_seed, attempt, 1]).generate_state(1)[0])
        description = render_description(events, config, desc_seed, visibility=vis)

        scene_id = f"{accepted:05d}"
        written = _emit_scene(out / scene_id, config, trace, masks, flows, events, description)
        records.append(
            {
                "seed": attempt,
                "status": "accepted",
                "id": scene_id,
                "desc_seed": desc_seed,
                "config": f"{scene_id}/config.yaml",
                "masks": f"{scene_id}/masks",
                "flow": f"{scene_id}/flow",
                "events": f"{scene_id}/events.ndrec",
                "description": f"{scene_id}/description.txt",
                "n_frames": len(masks.frame_indices),
                "hash": _scene_hash(written),
            }
        )
        accepted += 1
        attempt += 1

    content_hash = formats.write_manifest(out / "manifest.jsonl", records)
    return DatasetManifest(out_dir=out, records=records, content_hash=content_hash, rejections=dict(rejections))


def validate_manifest(out_dir, deep: bool = True) -> list[str]:
    """Re-check a dataset; returns a list of problems (empty = valid).

    Shallow checks: manifest hash, file existence, config re-parse, record
    hash against on-disk bytes. Deep checks additionally re-simulate and
    re-render each accepted scene, re-apply the filters, and compare the
    mask files bitwise.
    """


    out = Path(out_dir)
    problems: list[str] = []
    try:
        records, _ = formats.read_manifest(out / "manifest.jsonl")
    except (OSError, formats.FormatError) as exc:
        return [str(exc)]

    for rec in records:
        if rec["status"] != "accepted":
            continue
        scene_id = rec["id"]
        scene_dir = out / scene_id
        paths = [out / rec["config"], out / rec["events"], out / rec["description"]]
        mask_files = sorted((scene_dir / "masks").glob("*.pgm"))
        flow_files = sorted((scene_dir / "flow").glob("*.dflo"))
        for p in paths:
            if not p.exists():
                problems.append(f"{scene_id}: missing {p.name}")
        if len(mask_files) != rec["n_frames"]:
            problems.append(f"{scene_id}: expected {rec['n_frames']} masks, found {len(mask_files)}")
        if problems:
            continue

        try:
            config = parse_config((out / rec["config"]).read_text("utf-8"))
        except SceneError as exc:
            problems.append(f"{scene_id}: config does not re-parse: {exc}")
            continue
        written = [out / rec["config"], *mask_files, *flow_files, out / rec["events"], out / rec["description"]]
        if _scene_hash(written) != rec["hash"]:
            problems.append(f"{scene_id}: content hash mismatch")
            continue
        if not deep:
            continue

        trace = simulate(config)
        cam = build_camera(config.camera)
        masks = render_masks(trace, cam)
        vis = visibility_series(masks, len(config.objects))
        result = filter_scene(config, trace, vis)
        if not result.accepted:
            problems.append(f"{scene_id}: filters no longer accept ({result.reason})")
        for i, p in enumerate(mask_files):
            if not np.array_equal(formats.read_mask(p), masks.ids[i]):
                problems.append(f"{scene_id}: mask {p.name} differs from re-render")
                break
    return problems
