"""Ray-cast rendering: id masks, depth, and analytic optical flow.

The camera is an ideal pinhole at ``(0, -2, h)`` pitched down, with square
pixels, ``focal_px = (H/2) / tan(fovy/2)`` and the principal point at the
image center. Images are indexed ``[row, col]`` with pixel centers at
``index + 0.5``; world +x maps to image right.

``id_map`` holds 0 for background and ground (the ground still writes a
finite depth; sky depth is +inf) and ``i + 1`` for object ``i``.

Flow is exact rigid-motion flow, not an estimate: each hit point is pulled
into the body frame at frame k, advanced with the frame k+1 pose, and
re-projected; the flow vector is the pixel displacement. Ground/background
pixels get zero flow. A 1 s 30 FPS trace yields 29 inter-frame fields, and
every third one (pairs 0, 3, ..., 27) forms the 10-field evaluation sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .scene import CameraSpec, SceneConfig
from .simulate import SimTrace

DEFAULT_WIDTH = 480
DEFAULT_HEIGHT = 320
FLOW_SAMPLE_STRIDE = 3

_EPS = 1e-9


# ---------------------------------------------------------------------------
# camera


@dataclass(frozen=True)
class CameraModel:
    width: int
    height: int
    focal: float
    cx: float
    cy: float
    position: tuple[float, float, float]
    right: tuple[float, float, float]
    forward: tuple[float, float, float]
    down: tuple[float, float, float]


def build_camera(spec: CameraSpec, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT) -> CameraModel:
    pitch = math.radians(spec.pitch)
    focal = (height / 2.0) / math.tan(math.radians(spec.fovy) / 2.0)
    return CameraModel(
        width=width,
        height=height,
        focal=focal,
        cx=width / 2.0,
        cy=height / 2.0,
        position=tuple(float(v) for v in spec.position),
        right=(1.0, 0.0, 0.0),
        forward=(0.0, math.cos(pitch), -math.sin(pitch)),
        down=(0.0, -math.sin(pitch), -math.cos(pitch)),
    )


def project(cam: CameraModel, points: np.ndarray):
    """World points -> (u, v, forward depth, in-front flag)."""
    p = np.asarray(points, dtype=np.float64) - np.asarray(cam.position)
    zf = p @ np.asarray(cam.forward)
    valid = zf > _EPS
    safe = np.where(valid, zf, 1.0)
    u = cam.cx + cam.focal * (p @ np.asarray(cam.right)) / safe
    v = cam.cy + cam.focal * (p @ np.asarray(cam.down)) / safe
    return u, v, zf, valid


def pixel_rays(cam: CameraModel) -> np.ndarray:
    """Unit ray directions through every pixel center, shape (H, W, 3)."""
    jj = (np.arange(cam.width) + 0.5 - cam.cx) / cam.focal
    ii = (np.arange(cam.height) + 0.5 - cam.cy) / cam.focal
    right = np.asarray(cam.right)
    down = np.asarray(cam.down)
    fwd = np.asarray(cam.forward)
    dirs = fwd[None, None, :] + jj[None, :, None] * right[None, None, :] + ii[:, None, None] * down[None, None, :]
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    return dirs


# ---------------------------------------------------------------------------
# ray / primitive intersections (vectorized over rays; t = +inf on miss)


def _ray_sphere(o, dirs, c, r):
    oc = np.asarray(o) - np.asarray(c)
    b = dirs @ oc
    disc = b * b - (oc @ oc - r * r)
    hit = disc >= 0.0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    t0 = -b - sq
    t1 = -b + sq
    t = np.where(t0 > _EPS, t0, t1)
    return np.where(hit & (t > _EPS), t, np.inf)


def _ray_box(o, dirs, c, R, half):
    ob = (np.asarray(o) - np.asarray(c)) @ R
    db = dirs @ R
    half = np.asarray(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / db
        t1 = (-half - ob) * inv
        t2 = (half - ob) * inv
    near = np.minimum(t1, t2)
    far = np.maximum(t1, t2)
    parallel = np.abs(db) < 1e-12
    inside_slab = np.abs(ob) <= half
    near = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), near)
    far = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), far)
    tmin = near.max(axis=-1)
    tmax = far.min(axis=-1)
    hit = (tmax >= np.maximum(tmin, _EPS)) & (tmax > _EPS)
    t = np.where(tmin > _EPS, tmin, tmax)
    return np.where(hit, t, np.inf)


def _ray_cylinder(o, dirs, c, R, r, hh):
    ob = (np.asarray(o) - np.asarray(c)) @ R
    db = dirs @ R
    t_best = np.full(dirs.shape[:-1], np.inf)

    a = db[..., 0] ** 2 + db[..., 1] ** 2
    b = ob[0] * db[..., 0] + ob[1] * db[..., 1]
    cc = ob[0] ** 2 + ob[1] ** 2 - r * r
    disc = b * b - a * cc
    ok = (disc >= 0.0) & (a > 1e-14)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sign in (-1.0, 1.0):
            t = (-b + sign * sq) / a
            z = ob[2] + t * db[..., 2]
            good = ok & (t > _EPS) & (np.abs(z) <= hh) & (t < t_best)
            t_best = np.where(good, t, t_best)

    dz = db[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        for zcap in (hh, -hh):
            t = (zcap - ob[2]) / dz
            x = ob[0] + t * db[..., 0]
            y = ob[1] + t * db[..., 1]
            good = (np.abs(dz) > 1e-14) & (t > _EPS) & (x * x + y * y <= r * r) & (t < t_best)
            t_best = np.where(good, t, t_best)
    return t_best


def _intersect(kind, params, Rnp, c, o, dirs):
    if kind == geo.SPHERE:
        return _ray_sphere(o, dirs, c, params[0])
    if kind == geo.BOX:
        return _ray_box(o, dirs, c, Rnp, params)
    return _ray_cylinder(o, dirs, c, Rnp, params[0], params[1])


def _pixel_rect(cam: CameraModel, c, radius):
    """Conservative pixel bounding rect of a bounding sphere, or None/full."""
    p = np.asarray(c) - np.asarray(cam.position)
    zf = float(p @ np.asarray(cam.forward))
    if zf - radius < 0.05:
        return (0, cam.height, 0, cam.width) if zf + radius > 0.0 else None
    x = float(p @ np.asarray(cam.right))
    y = float(p @ np.asarray(cam.down))
    us, vs = [], []
    for num_off in (-radius, radius):
        for den_off in (-radius, radius):
            us.append(cam.cx + cam.focal * (x + num_off) / (zf + den_off))
            vs.append(cam.cy + cam.focal * (y + num_off) / (zf + den_off))
    j0 = max(int(math.floor(min(us))) - 2, 0)
    j1 = min(int(math.ceil(max(us))) + 2, cam.width)
    i0 = max(int(math.floor(min(vs))) - 2, 0)
    i1 = min(int(math.ceil(max(vs))) + 2, cam.height)
    if i0 >= i1 or j0 >= j1:
        return None
    return (i0, i1, j0, j1)


# ---------------------------------------------------------------------------
# frame products


@dataclass(frozen=True)
class FrameArtifacts:
    frame_index: int
    id_map: np.ndarray
    depth: np.ndarray
    flow: np.ndarray | None = None


@dataclass
class MaskMaps:
    """Object-id and ray-depth maps for a set of trace frames."""

    frame_indices: tuple[int, ...]
    ids: np.ndarray  # (F, H, W) uint8
    ray_t: np.ndarray  # (F, H, W) float64, +inf = sky
    camera: CameraModel
    dirs: np.ndarray  # (H, W, 3)

    @property
    def depths(self) -> np.ndarray:
        """Forward (optical-axis) depth in meters; +inf for sky."""
        fwd_factor = self.dirs @ np.asarray(self.camera.forward)
        return self.ray_t * fwd_factor[None, :, :]

    def frame(self, frame_index: int, flow: np.ndarray | None = None) -> FrameArtifacts:
        i = self.frame_indices.index(frame_index)
        return FrameArtifacts(frame_index, self.ids[i], self.depths[i], flow)

    def index_of(self, frame_index: int) -> int:
        return self.frame_indices.index(frame_index)


@dataclass
class FlowMaps:
    """Inter-frame pixel flow for pairs (k, k+1) of the trace."""

    pair_indices: tuple[int, ...]
    flows: np.ndarray  # (P, H, W, 2) float32
    stride: int = FLOW_SAMPLE_STRIDE

    @property
    def sampled_pair_indices(self) -> tuple[int, ...]:
        return tuple(p for p in self.pair_indices if p % self.stride == 0)

    @property
    def sampled(self) -> np.ndarray:
        keep = [i for i, p in enumerate(self.pair_indices) if p % self.stride == 0]
        return self.flows[keep]


def flow_pair_count(trace: SimTrace) -> int:
    """Video frames are trace snapshots 0..F-2, so F-2 consecutive pairs."""
    return max(len(trace.frames) - 2, 0)


def sampled_pair_indices(trace: SimTrace, stride: int = FLOW_SAMPLE_STRIDE) -> tuple[int, ...]:
    return tuple(range(0, flow_pair_count(trace), stride))


def sampled_frame_indices(trace: SimTrace, stride: int = FLOW_SAMPLE_STRIDE) -> tuple[int, ...]:
    """Mask frames aligned with the sampled flow pairs."""
    return sampled_pair_indices(trace, stride)


# ---------------------------------------------------------------------------
# rendering


def _frame_bodies(trace: SimTrace, frame_index: int):
    _, state = trace.frames[frame_index]
    out = []
    for i, obj in enumerate(trace.config.objects):
        kind, params = geo.body_geometry(obj)
        Rnp = np.asarray(geo.quat_to_mat3(tuple(state.orientations[i])))
        c = state.positions[i]
        out.append((kind, params, Rnp, c, geo.bounding_radius(kind, params)))
    return out


def render_masks(trace: SimTrace, cam: CameraModel, frames=None) -> MaskMaps:
    """Ray-cast id and depth maps for the requested trace frames (default all)."""
    if frames is None:
        frames = range(len(trace.frames))
    frames = tuple(int(f) for f in frames)
    dirs = pixel_rays(cam)
    o = np.asarray(cam.position)
    dz = dirs[:, :, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ground_t = np.where(dz < -1e-12, -o[2] / dz, np.inf)

    ids = np.zeros((len(frames), cam.height, cam.width), dtype=np.uint8)
    ray_t = np.empty((len(frames), cam.height, cam.width), dtype=np.float64)
    for fi, frame_index in enumerate(frames):
        t_buf = ground_t.copy()
        id_buf = ids[fi]
        for obj_id, (kind, params, Rnp, c, radius) in enumerate(_frame_bodies(trace, frame_index), start=1):
            rect = _pixel_rect(cam, c, radius)
            if rect is None:
                continue
            i0, i1, j0, j1 = rect
            t = _intersect(kind, params, Rnp, c, cam.position, dirs[i0:i1, j0:j1])
            closer = t < t_buf[i0:i1, j0:j1]
            if closer.any():
                t_buf[i0:i1, j0:j1] = np.where(closer, t, t_buf[i0:i1, j0:j1])
                region = id_buf[i0:i1, j0:j1]
                region[closer] = obj_id
        ray_t[fi] = t_buf
    return MaskMaps(frame_indices=frames, ids=ids, ray_t=ray_t, camera=cam, dirs=dirs)


def _flow_for_pair(trace: SimTrace, masks: MaskMaps, pair: int) -> np.ndarray:
    cam = masks.camera
    mi = masks.index_of(pair)
    ids = masks.ids[mi]
    ray_t = masks.ray_t[mi]
    flow = np.zeros((cam.height, cam.width, 2), dtype=np.float32)
    _, state_k = trace.frames[pair]
    _, state_k1 = trace.frames[pair + 1]
    o = np.asarray(cam.position)
    for i in range(len(trace.config.objects)):
        sel = ids == i + 1
        if not sel.any():
            continue
        rows, cols = np.nonzero(sel)
        t = ray_t[rows, cols]
        d = masks.dirs[rows, cols]
        X = o[None, :] + t[:, None] * d
        Rk = np.asarray(geo.quat_to_mat3(tuple(state_k.orientations[i])))
        Rk1 = np.asarray(geo.quat_to_mat3(tuple(state_k1.orientations[i])))
        Xb = (X - state_k.positions[i][None, :]) @ Rk
        X2 = Xb @ Rk1.T + state_k1.positions[i][None, :]
        u2, v2, _, in_front = project(masks.camera, X2)
        du = np.where(in_front, u2 - (cols + 0.5), 0.0)
        dv = np.where(in_front, v2 - (rows + 0.5), 0.0)
        flow[rows, cols, 0] = du.astype(np.float32)
        flow[rows, cols, 1] = dv.astype(np.float32)
    return flow


def render_flow(
    trace: SimTrace,
    cam: CameraModel,
    stride: int = FLOW_SAMPLE_STRIDE,
    pair_indices=None,
    masks: MaskMaps | None = None,
) -> FlowMaps:
    """Rigid-motion flow fields for frame pairs (k, k+1).

    By default computes every pair (29 for a 1 s 30 FPS trace); the
    ``sampled`` view keeps pairs 0, stride, 2*stride, ... (10 fields).
    """
    if pair_indices is None:
        pair_indices = range(flow_pair_count(trace))
    pair_indices = tuple(int(p) for p in pair_indices)
    needed = [p for p in pair_indices if masks is None or p not in masks.frame_indices]
    if masks is None:
        masks = render_masks(trace, cam, frames=pair_indices)
    elif needed:
        extra = render_masks(trace, cam, frames=needed)
        masks = MaskMaps(
            frame_indices=masks.frame_indices + extra.frame_indices,
            ids=np.concatenate([masks.ids, extra.ids]),
            ray_t=np.concatenate([masks.ray_t, extra.ray_t]),
            camera=cam,
            dirs=masks.dirs,
        )
    flows = np.stack([_flow_for_pair(trace, masks, p) for p in pair_indices]) if pair_indices else np.zeros(
        (0, cam.height, cam.width, 2), dtype=np.float32
    )
    return FlowMaps(pair_indices=pair_indices, flows=flows, stride=stride)


def visibility_series(masks: MaskMaps, n_objects: int) -> np.ndarray:
    """Per-frame pixel counts per object, shape (frames, objects)."""
    counts = np.zeros((len(masks.frame_indices), n_objects), dtype=np.int64)
    for fi in range(len(masks.frame_indices)):
        binc = np.bincount(masks.ids[fi].ravel(), minlength=n_objects + 1)
        counts[fi] = binc[1 : n_objects + 1]
    return counts


def render_scene_artifacts(config: SceneConfig, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT):
    """Simulate + render the evaluation sample: (trace, sampled masks, sampled flows)."""
    from .simulate import simulate

    trace = simulate(config)
    cam = build_camera(config.camera, width, height)
    frames = sampled_frame_indices(trace)
    masks = render_masks(trace, cam, frames=frames)
    flows = render_flow(trace, cam, pair_indices=sampled_pair_indices(trace), masks=masks)
    return trace, masks, flows
