"""Evaluation measures: mask IoU, flow end-point error, composition, MAE.

Conventions:

* IoU is binary foreground IoU: both id maps are binarized to "any object"
  (ground/background excluded) before intersecting. When both foregrounds
  are empty the frame scores 1.0 (both agree nothing is there). Per-object
  IoU is available separately as a diagnostic.
* EPE is the mean over all pixels of the Euclidean norm of the flow
  difference (backgrounds are zero-flow by construction, so they are
  included).
* "First frame" means frame 0; "full sequence" averages the 10 stride-3
  sampled frames, the same frames a downstream model sees.
* ``evaluate`` never raises on a bad candidate: configs that fail to
  validate or simulate get a worst-case report (IoU 0, EPE equal to the
  mean reference flow magnitude, composition false) so batch scoring and
  best-of-K stay total.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CompositionError, ConfigError, SceneError, ShapeError
from .scene import SceneConfig, parse_config, validate
from . import formats

MAE_CATEGORIES = ("damping", "roll_friction", "slide_friction", "position", "velocity")


# ---------------------------------------------------------------------------
# raster metrics


def _check_stacks(pred: np.ndarray, ref: np.ndarray, frames) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred)
    ref = np.asarray(ref)
    if pred.shape != ref.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {ref.shape}")
    if frames is not None:
        idx = list(frames)
        if any(i < 0 or i >= pred.shape[0] for i in idx):
            raise ShapeError(f"frame index out of range for stack of {pred.shape[0]}")
        pred = pred[idx]
        ref = ref[idx]
    return pred, ref


def mask_iou(pred: np.ndarray, ref: np.ndarray, frames=None) -> float:
    """Mean binary foreground IoU over the frame set (default: all frames)."""
    pred, ref = _check_stacks(pred, ref, frames)
    if pred.ndim == 2:
        pred, ref = pred[None], ref[None]
    scores = []
    for a, b in zip(pred > 0, ref > 0):
        union = np.logical_or(a, b).sum()
        if union == 0:
            scores.append(1.0)
        else:
            scores.append(float(np.logical_and(a, b).sum()) / float(union))
    return float(np.mean(scores))


def per_object_iou(pred: np.ndarray, ref: np.ndarray, object_id: int, frames=None) -> float:
    """Diagnostic single-id IoU with the same empty-empty = 1.0 convention."""
    pred, ref = _check_stacks(pred, ref, frames)
    if pred.ndim == 2:
        pred, ref = pred[None], ref[None]
    scores = []
    for a, b in zip(pred == object_id, ref == object_id):
        union = np.logical_or(a, b).sum()
        scores.append(1.0 if union == 0 else float(np.logical_and(a, b).sum()) / float(union))
    return float(np.mean(scores))


def flow_epe(pred: np.ndarray, ref: np.ndarray, frames=None) -> float:
    """Mean end-point error in pixels over the frame set (default: all)."""
    pred, ref = _check_stacks(pred, ref, frames)
    if pred.ndim == 3:
        pred, ref = pred[None], ref[None]
    diff = pred.astype(np.float64) - ref.astype(np.float64)
    epe = np.sqrt((diff ** 2).sum(axis=-1))
    return float(epe.reshape(epe.shape[0], -1).mean(axis=1).mean())


def mean_flow_magnitude(flows: np.ndarray) -> float:
    flows = np.asarray(flows, dtype=np.float64)
    if flows.ndim == 3:
        flows = flows[None]
    mag = np.sqrt((flows ** 2).sum(axis=-1))
    return float(mag.reshape(mag.shape[0], -1).mean(axis=1).mean())


# ---------------------------------------------------------------------------
# config-space metrics


def composition_accuracy(pred: SceneConfig, ref: SceneConfig) -> bool:
    """True iff the multisets of shape kinds match."""
    return Counter(pred.shapes) == Counter(ref.shapes)


def _matched_pairs(pred: SceneConfig, ref: SceneConfig):
    pairs = []
    for shape in sorted(set(ref.shapes)):
        key = lambda o: (o.position[0], o.position[1])  # noqa: E731
        p = sorted((o for o in pred.objects if o.shape == shape), key=key)
        r = sorted((o for o in ref.objects if o.shape == shape), key=key)
        pairs.extend(zip(p, r))
    return pairs


def param_mae(pred: SceneConfig, ref: SceneConfig) -> dict[str, float]:
    """Per-category mean absolute error over composition-matched object pairs.

    Within each shape kind both sides are sorted by initial x then y and
    paired in order; position and velocity are the mean of per-axis
    absolute differences.
    """
    if not composition_accuracy(pred, ref):
        raise CompositionError("object composition differs; MAE undefined")
    pairs = _matched_pairs(pred, ref)
    if not pairs:
        return {k: 0.0 for k in MAE_CATEGORIES}
    acc = {k: 0.0 for k in MAE_CATEGORIES}
    for p, r in pairs:
        acc["damping"] += abs(p.damping - r.damping)
        acc["roll_friction"] += abs(p.friction[1] - r.friction[1])
        acc["slide_friction"] += abs(p.friction[0] - r.friction[0])
        acc["position"] += sum(abs(a - b) for a, b in zip(p.position, r.position)) / 3.0
        acc["velocity"] += sum(abs(a - b) for a, b in zip(p.linear_velocity, r.linear_velocity)) / 3.0
    n = len(pairs)
    return {k: v / n for k, v in acc.items()}


# ---------------------------------------------------------------------------
# reference artifacts and the evaluation report


@dataclass(frozen=True)
class ReferenceArtifacts:
    """Sampled-frame reference renders a candidate is scored against."""

    masks: np.ndarray  # (10, H, W) uint8 ids at the sampled frames
    flows: np.ndarray  # (10, H, W, 2) float32 at the sampled pairs
    frame_indices: tuple[int, ...]
    config: SceneConfig | None = None

    @property
    def image_size(self) -> tuple[int, int]:
        return self.masks.shape[2], self.masks.shape[1]  # (W, H)

    @classmethod
    def from_config(cls, config: SceneConfig, width: int = 480, height: int = 320) -> "ReferenceArtifacts":
        from .render import render_scene_artifacts

        _, masks, flows = render_scene_artifacts(config, width, height)
        return cls(
            masks=masks.ids,
            flows=flows.flows,
            frame_indices=masks.frame_indices,
            config=config,
        )

    @classmethod
    def from_dir(cls, path) -> "ReferenceArtifacts":
        """Load a dataset scene directory (config.yaml, masks/, flow/)."""
        path = Path(path)
        flow_files = sorted((path / "flow").glob("*.dflo"))
        if not flow_files:
            raise FileNotFoundError(f"{path}: no flow/*.dflo files")
        indices = tuple(int(f.stem) for f in flow_files)
        masks = np.stack([formats.read_mask(path / "masks" / f"{i:03d}.pgm") for i in indices])
        flows = np.stack([formats.read_flow(f) for f in flow_files])
        config = None
        cfg_path = path / "config.yaml"
        if cfg_path.exists():
            config = parse_config(cfg_path.read_text("utf-8"))
        return cls(masks=masks, flows=flows, frame_indices=indices, config=config)


@dataclass(frozen=True)
class EvalReport:
    iou_first_frame: float
    iou_full_sequence: float
    epe_first_frame: float
    epe_full_sequence: float
    composition_correct: bool
    param_mae: dict[str, float] | None = None

    def __post_init__(self):
        if self.param_mae is not None and not self.composition_correct:
            raise ValueError("param_mae requires composition_correct")

    def to_record(self) -> str:
        """Flat key=value lines, one metric per line."""
        lines = [
            f"iou_first_frame={self.iou_first_frame!r}",
            f"iou_full_sequence={self.iou_full_sequence!r}",
            f"epe_first_frame={self.epe_first_frame!r}",
            f"epe_full_sequence={self.epe_full_sequence!r}",
            f"composition_correct={str(self.composition_correct).lower()}",
        ]
        if self.param_mae is not None:
            for key in MAE_CATEGORIES:
                lines.append(f"param_mae.{key}={self.param_mae[key]!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_record(cls, text: str) -> "EvalReport":
        fields: dict[str, float] = {}
        mae: dict[str, float] = {}
        comp = False
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition("=")
            if key == "composition_correct":
                comp = value == "true"
            elif key.startswith("param_mae."):
                mae[key.split(".", 1)[1]] = float(value)
            else:
                fields[key] = float(value)
        return cls(
            iou_first_frame=fields["iou_first_frame"],
            iou_full_sequence=fields["iou_full_sequence"],
            epe_first_frame=fields["epe_first_frame"],
            epe_full_sequence=fields["epe_full_sequence"],
            composition_correct=comp,
            param_mae=mae or None,
        )


def worst_case_report(ref: ReferenceArtifacts) -> EvalReport:
    """Score assigned to candidates that fail to parse, validate, or simulate."""
    return EvalReport(
        iou_first_frame=0.0,
        iou_full_sequence=0.0,
        epe_first_frame=mean_flow_magnitude(ref.flows[0]),
        epe_full_sequence=mean_flow_magnitude(ref.flows),
        composition_correct=False,
        param_mae=None,
    )


def score_renders(pred: SceneConfig, ref: ReferenceArtifacts) -> tuple[float, float, float, float]:
    """(iou_first, iou_full, epe_first, epe_full) for a valid, simulable pred.

    Raises SceneError subclasses (invalid config, divergence, frame-schedule
    mismatch) instead of falling back; ``evaluate`` adds the fallback.
    """
    from .render import build_camera, render_flow, render_masks, sampled_frame_indices, sampled_pair_indices
    from .simulate import simulate

    violations = validate(pred)
    if violations:
        raise ConfigError(f"invalid candidate: {violations[0]}")
    trace = simulate(pred)
    width, height = ref.image_size
    cam = build_camera(pred.camera, width, height)
    frames = sampled_frame_indices(trace)
    if frames != tuple(ref.frame_indices):
        raise ShapeError(f"frame schedule {frames} does not match reference {tuple(ref.frame_indices)}")
    masks = render_masks(trace, cam, frames=frames)
    flows = render_flow(trace, cam, pair_indices=sampled_pair_indices(trace), masks=masks)
    return (
        mask_iou(masks.ids[:1], ref.masks[:1]),
        mask_iou(masks.ids, ref.masks),
        flow_epe(flows.flows[:1], ref.flows[:1]),
        flow_epe(flows.flows, ref.flows),
    )


def evaluate(pred: SceneConfig, ref: ReferenceArtifacts, ref_config: SceneConfig | None = None) -> EvalReport:
    """Re-simulate and render ``pred``, then score it against the reference.

    Total over arbitrary candidates: any parse/validation/simulation failure
    yields the worst-case report instead of raising.
    """
    if ref_config is None:
        ref_config = ref.config
    try:
        iou_first, iou_full, epe_first, epe_full = score_renders(pred, ref)
    except SceneError:
        return worst_case_report(ref)

    composition = False
    mae = None
    if ref_config is not None:
        composition = composition_accuracy(pred, ref_config)
        if composition:
            mae = param_mae(pred, ref_config)
    return EvalReport(
        iou_first_frame=iou_first,
        iou_full_sequence=iou_full,
        epe_first_frame=epe_first,
        epe_full_sequence=epe_full,
        composition_correct=composition,
        param_mae=mae,
    )
