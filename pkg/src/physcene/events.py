"""Rule-based event mining and templated motion descriptions.

``mine_events`` turns a simulation trace plus a per-frame visibility series
into discrete motion events:

* ``visibility_enter`` / ``visibility_leave`` at the first crossing of a
  pixel-count threshold (default 50 px, which ignores single-pixel flicker
  at silhouette edges) in each direction;
* ``stop`` at the start of the trailing run of frames whose combined speed
  ``|v| + r_eff * |omega|`` stays below 0.05 m/s (the suffix rule: a
  momentary dip below the threshold does not count as stopping);
* ``ground_contact`` / ``pair_collision`` copied from the trace's coalesced
  contact events.

``render_description`` expands events into prose using paraphrase templates
(three or more variants per sentence slot, in ``data/motion_templates.json``).
Template variants are drawn from the seed, so equal seeds give byte-identical
text. Two lines are fixed literals rather than templates so they stay machine
checkable: the ``Visible entities: ...`` list and the per-object
``visible in k/10 frames`` counts.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import MismatchError, ShapeError
from .scene import GROUND_NAME, SceneConfig, discretize_x, discretize_y, discretize_z
from .simulate import DEFAULT_FPS, SimTrace, initial_contact_pairs
from . import geometry as geo

VISIBILITY_THRESHOLD = 50  # px
STOP_EPS = 0.05  # m/s
SAMPLED_COUNT = 10

_fmt = lambda v: "%.6g" % (v + 0.0)  # noqa: E731


@dataclass(frozen=True)
class MotionEvent:
    kind: str  # visibility_enter | visibility_leave | stop | ground_contact | pair_collision
    time: float
    participants: tuple[str, ...]
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MotionDescription:
    text: str
    events: tuple[MotionEvent, ...]
    template_seed: int


def stop_frame(speeds, eps: float = STOP_EPS) -> int | None:
    """First index of the trailing below-eps run, or None if never stopping.

    Requires at least one earlier frame at or above eps (an object that never
    moved does not "stop"); a profile that ends above eps has no stop either.
    """
    n = len(speeds)
    f = n
    while f > 0 and speeds[f - 1] < eps:
        f -= 1
    if f == n:
        return None
    if not any(s >= eps for s in speeds[:f]):
        return None
    return f


def _combined_speeds(trace: SimTrace, obj_index: int) -> list[float]:
    obj = trace.config.objects[obj_index]
    kind, params = geo.body_geometry(obj)
    r_eff = geo.bounding_radius(kind, params)
    speeds = []
    for _, state in trace.frames:
        v = float(np.linalg.norm(state.linear_velocities[obj_index]))
        w = float(np.linalg.norm(state.angular_velocities[obj_index]))
        speeds.append(v + r_eff * w)
    return speeds


def mine_events(
    trace: SimTrace,
    visibility: np.ndarray,
    pixel_threshold: int = VISIBILITY_THRESHOLD,
    stop_eps: float = STOP_EPS,
) -> list[MotionEvent]:
    """Extract motion events; visibility is the (frames, objects) pixel-count array."""
    visibility = np.asarray(visibility)
    n_frames = len(trace.frames)
    names = trace.config.names
    if visibility.shape != (n_frames, len(names)):
        raise ShapeError(
            f"visibility shape {visibility.shape} does not match trace ({n_frames}, {len(names)})"
        )
    fps = trace.fps
    events: list[MotionEvent] = []

    for i, name in enumerate(names):
        seen = visibility[:, i] >= pixel_threshold
        enter = leave = None
        for f in range(1, n_frames):
            if enter is None and seen[f] and not seen[f - 1]:
                enter = f
            if leave is None and not seen[f] and seen[f - 1]:
                leave = f
        if enter is not None:
            events.append(
                MotionEvent("visibility_enter", enter / fps, (name,), {"pixels": int(visibility[enter, i])})
            )
        if leave is not None:
            events.append(
                MotionEvent("visibility_leave", leave / fps, (name,), {"pixels": int(visibility[leave - 1, i])})
            )

        speeds = _combined_speeds(trace, i)
        f = stop_frame(speeds, stop_eps)
        if f is not None:
            events.append(MotionEvent("stop", f / fps, (name,), {"speed": speeds[f - 1]}))

    # Contacts already present at t = 0 are initial conditions, not events;
    # drop their first-frame report but keep any later re-collision.
    initial = set(initial_contact_pairs(trace.config)) if trace.config is not None else set()
    first_frame_time = 1.0 / fps + 1e-9
    for c in trace.contacts:
        if c.participants in initial and c.time <= first_frame_time:
            continue
        kind = "ground_contact" if c.kind == "object_ground" else "pair_collision"
        events.append(MotionEvent(kind, c.time, c.participants, {"impulse": c.impulse}))

    events.sort(key=lambda e: (e.time, e.kind, e.participants))
    return events


# ---------------------------------------------------------------------------
# description rendering


def _load_templates() -> dict:
    raw = resources.files("physcene.data").joinpath("motion_templates.json").read_text("utf-8")
    return json.loads(raw)


def _shape_desc(obj, pick) -> str:
    if obj.shape == "sphere":
        return pick("sphere_desc").format(radius=_fmt(obj.radius))
    if obj.shape == "box":
        sx, sy, sz = obj.size
        return pick("box_desc").format(sx=_fmt(sx), sy=_fmt(sy), sz=_fmt(sz))
    return pick("cylinder_desc").format(radius=_fmt(obj.radius), height=_fmt(obj.height))


def _sampled_counts(visibility: np.ndarray, threshold: int) -> list[int]:
    """Visible-frame counts over the 10 evaluation frames."""
    vis = np.asarray(visibility)
    if vis.shape[0] == SAMPLED_COUNT:
        rows = vis
    elif vis.shape[0] >= 28:
        rows = vis[list(range(0, 29, 3))]
    else:
        idx = np.linspace(0, vis.shape[0] - 1, SAMPLED_COUNT).round().astype(int)
        rows = vis[idx]
    return [int((rows[:, i] >= threshold).sum()) for i in range(vis.shape[1])]


def _counts_from_events(events, names, fps: float = DEFAULT_FPS) -> list[int]:
    # No pixel series given: replay enter/leave toggles at the sampled times.
    counts = []
    sample_times = [3 * j / fps for j in range(SAMPLED_COUNT)]
    for name in names:
        toggles = sorted(
            (e.time, e.kind) for e in events if e.participants == (name,) and e.kind.startswith("visibility")
        )
        initial = True
        if toggles:
            initial = toggles[0][1] == "visibility_leave"
        k = 0
        for t in sample_times:
            state = initial
            for time, kind in toggles:
                if time <= t + 1e-9:
                    state = kind == "visibility_enter"
            k += state
        counts.append(k)
    return counts


def render_description(
    events,
    config: SceneConfig,
    seed: int,
    visibility: np.ndarray | None = None,
) -> MotionDescription:
    """Expand events into the templated prose description.

    ``visibility`` is the optional (frames, objects) pixel-count series used
    for exact visible-frame counts; without it the counts are reconstructed
    from the enter/leave events themselves.
    """
    names = set(config.names)
    for ev in events:
        for p in ev.participants:
            if p != GROUND_NAME and p not in names:
                raise MismatchError(f"event references unknown object {p!r}")

    templates = _load_templates()
    rng = random.Random(seed)

    def pick(slot: str) -> str:
        variants = templates[slot]
        return variants[rng.randrange(len(variants))]

    n = len(config.objects)
    count_phrase = "1 rigid object" if n == 1 else f"{n} rigid objects"
    parts: list[str] = [pick("opener").format(count_phrase=count_phrase)]

    for obj in config.objects:
        sentences = [pick("object_intro").format(name=obj.name, desc=_shape_desc(obj, pick), mass=_fmt(obj.mass))]
        x, y, z = obj.position
        sentences.append(pick("position").format(x=discretize_x(x), y=discretize_y(y), z=discretize_z(z)))
        speed = float(np.linalg.norm(obj.linear_velocity))
        if speed >= STOP_EPS:
            sentences.append(pick("speed_moving").format(speed="%.2f" % speed))
        else:
            sentences.append(pick("speed_rest"))
        own = [e for e in events if e.kind != "pair_collision" and e.participants[0] == obj.name]
        own.sort(key=lambda e: e.time)
        for ev in own:
            t = "%.1f" % ev.time
            if ev.kind == "ground_contact":
                sentences.append(pick("ground_contact").format(name=obj.name, time=t))
            else:
                sentences.append(pick(ev.kind).format(name=obj.name, time=t))
        parts.append(" ".join(sentences))

    if visibility is not None:
        counts = _sampled_counts(visibility, VISIBILITY_THRESHOLD)
    else:
        counts = _counts_from_events(events, config.names)
    visible_names = [n for n, k in zip(config.names, counts) if k > 0]
    obs = ["Observation Data: Visible entities: " + ", ".join(visible_names) + "."]
    for name, k in zip(config.names, counts):
        obs.append(f"{name} visible in {k}/{SAMPLED_COUNT} frames.")
    parts.append(" ".join(obs))

    collisions = sorted((e for e in events if e.kind == "pair_collision"), key=lambda e: e.time)
    if collisions:
        lines = [
            pick("pair_collision").format(a=e.participants[0], b=e.participants[1], time="%.1f" % e.time)
            for e in collisions
        ]
    else:
        lines = [pick("no_interactions")]
    parts.append("Dynamic Interactions: " + " ".join(lines))

    return MotionDescription(text="\n\n".join(parts), events=tuple(events), template_seed=seed)
