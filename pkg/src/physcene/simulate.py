"""Deterministic rigid-body simulation on the ground plane z = 0.

Integration is kick-drift-kick at ``dt = 1 / (fps * substeps)``: a velocity
half-step from forces, impulse-based contact resolution, a position drift,
then the trailing half-step. The splitting is exact for constant gravity,
so ballistic trajectories match the closed form to float precision.

Contacts are speculative: candidate pairs within a detection margin get a
velocity bound ``v_n >= -gap / dt`` so bodies stop at the surface instead
of penetrating; positional correction (Baumgarte, beta = 0.2) only engages
beyond a 1 mm slop. Restitution is a world constant, default 0 (perfectly
inelastic). Friction is Coulomb, with the pairwise maximum of the sliding
coefficients; rolling resistance opposes the tangential angular velocity
with torque bounded by coefficient * normal impulse * effective radius.

Two runs over the same config produce bitwise-equal traces: state lives in
plain Python floats updated in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import ConfigError, DivergenceError
from .scene import GROUND_NAME, SceneConfig, validate

DEFAULT_FPS = 30
DEFAULT_SUBSTEPS = 8
DEFAULT_DURATION = 1.0

POSITION_LIMIT = 1e4
CONTACT_MARGIN = 0.08
PENETRATION_SLOP = 1e-3
BAUMGARTE_BETA = 0.2
MAX_CORRECTION_SPEED = 4.0
SOLVER_ITERATIONS = 10
EVENT_REARM_FRAMES = 2  # frames of separation before a pair logs a new event
EVENT_IMPULSE_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# trace types


@dataclass(frozen=True)
class RigidState:
    """State of every body at one instant (row per object)."""

    positions: np.ndarray
    orientations: np.ndarray
    linear_velocities: np.ndarray
    angular_velocities: np.ndarray


@dataclass(frozen=True)
class ContactEvent:
    time: float
    kind: str  # "object_ground" | "object_object"
    participants: tuple[str, ...]
    impulse: float


@dataclass(frozen=True)
class SimTrace:
    frames: tuple[tuple[float, RigidState], ...]
    contacts: tuple[ContactEvent, ...]
    config: SceneConfig
    fps: int

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.frames)


# ---------------------------------------------------------------------------
# world construction (static tables first, then the dynamic snapshot)


class _Body:
    __slots__ = (
        "name", "kind", "params", "mass", "inv_mass", "inv_inertia_diag",
        "mu_slide", "mu_roll", "damp", "r_eff", "radius",
        "pos", "quat", "vel", "omega", "R", "inv_I",
    )


def _build_world(config: SceneConfig) -> list[_Body]:
    """Phase one: geometry, mass and material tables (no dynamic state)."""
    bodies = []
    for obj in config.objects:
        b = _Body()
        b.name = obj.name
        b.kind, b.params = geo.body_geometry(obj)
        b.mass = float(obj.mass)
        b.inv_mass = 1.0 / b.mass
        diag = geo.inertia_diagonal(b.kind, b.params, b.mass)
        b.inv_inertia_diag = (1.0 / diag[0], 1.0 / diag[1], 1.0 / diag[2])
        b.mu_slide = float(obj.friction[0])
        b.mu_roll = float(obj.friction[1])
        b.damp = 10.0 ** float(obj.damping)
        b.radius = geo.bounding_radius(b.kind, b.params)
        b.r_eff = b.radius
        bodies.append(b)
    return bodies


def _init_state(bodies: list[_Body], config: SceneConfig) -> None:
    """Phase two: write initial positions and velocities into the world."""
    for b, obj in zip(bodies, config.objects):
        b.pos = tuple(float(v) for v in obj.position)
        b.quat = tuple(float(v) for v in obj.orientation)
        b.vel = tuple(float(v) for v in obj.linear_velocity)
        b.omega = tuple(float(v) for v in obj.angular_velocity)
        _refresh_rotation(b)


def _refresh_rotation(b: _Body) -> None:
    b.R = geo.quat_to_mat3(b.quat)
    b.inv_I = geo.world_inv_inertia(b.R, b.inv_inertia_diag)


# ---------------------------------------------------------------------------
# contacts


class _Contact:
    __slots__ = ("a", "b", "point", "n", "s", "r_a", "r_b", "m_n", "mu", "lam_n", "f_acc", "v_target")

    def __init__(self, a, b, point, n, s):
        self.a = a
        self.b = b
        self.point = point
        self.n = n
        self.s = s


def _ground_contacts(b: _Body, out: list) -> None:
    if b.pos[2] - b.radius >= CONTACT_MARGIN:
        return
    up = (0.0, 0.0, 1.0)
    if b.kind == geo.SPHERE:
        r = b.params[0]
        s = b.pos[2] - r
        if s < CONTACT_MARGIN:
            out.append(_Contact(b, None, (b.pos[0], b.pos[1], b.pos[2] - r), up, s))
        return
    if b.kind == geo.BOX:
        hx, hy, hz = b.params
        for sx in (-hx, hx):
            for sy in (-hy, hy):
                for sz in (-hz, hz):
                    p = geo.add3(b.pos, geo.mat3_vec(b.R, (sx, sy, sz)))
                    if p[2] < CONTACT_MARGIN:
                        out.append(_Contact(b, None, p, up, p[2]))
        return
    r, hh = b.params
    axis = (b.R[0][2], b.R[1][2], b.R[2][2])
    az = axis[2]
    if abs(az) > 0.999:
        # standing on a cap: four rim points
        cap = geo.add3(b.pos, geo.scale3(axis, -hh if az > 0 else hh))
        u = geo.normalize3(geo.sub3((1.0, 0.0, 0.0), geo.scale3(axis, axis[0])), fallback=(0.0, 1.0, 0.0))
        v = geo.cross3(axis, u)
        for d in (u, geo.neg3(u), v, geo.neg3(v)):
            p = geo.add3(cap, geo.scale3(d, r))
            if p[2] < CONTACT_MARGIN:
                out.append(_Contact(b, None, p, up, p[2]))
        return
    if abs(az) < 0.01:
        # lying on its side: both ends of the contact line
        d = geo.normalize3((az * axis[0], az * axis[1], az * axis[2] - 1.0))
        for end in (geo.add3(b.pos, geo.scale3(axis, hh)), geo.add3(b.pos, geo.scale3(axis, -hh))):
            p = geo.add3(end, geo.scale3(d, r))
            if p[2] < CONTACT_MARGIN:
                out.append(_Contact(b, None, p, up, p[2]))
        return
    p = geo.support_world(b.kind, b.params, b.R, b.pos, (0.0, 0.0, -1.0))
    if p[2] < CONTACT_MARGIN:
        out.append(_Contact(b, None, p, up, p[2]))


def _sphere_shape_contact(sphere: _Body, other: _Body):
    """Contact with normal pushing the sphere away from the other body."""
    r = sphere.params[0]
    local = geo.mat3_T_vec(other.R, geo.sub3(sphere.pos, other.pos))
    if other.kind == geo.BOX:
        q, inside = geo.closest_on_box_local(local, other.params)
    else:
        q, inside = geo.closest_on_cylinder_local(local, other.params[0], other.params[1])
    q_world = geo.add3(other.pos, geo.mat3_vec(other.R, q))
    if inside:
        n = geo.normalize3(geo.sub3(q_world, sphere.pos))
        s = -(geo.norm3(geo.sub3(q_world, sphere.pos)) + r)
        return q_world, n, s
    dvec = geo.sub3(sphere.pos, q_world)
    dist = geo.norm3(dvec)
    if dist < 1e-12:
        return q_world, (0.0, 0.0, 1.0), -r
    return q_world, geo.scale3(dvec, 1.0 / dist), dist - r


def _pair_contact(a: _Body, b: _Body):
    """Single deepest contact between two bodies, or None when apart."""
    delta = geo.sub3(a.pos, b.pos)
    if geo.norm3(delta) > a.radius + b.radius + CONTACT_MARGIN:
        return None
    if a.kind == geo.SPHERE and b.kind == geo.SPHERE:
        ra, rb = a.params[0], b.params[0]
        d = geo.norm3(delta)
        n = geo.scale3(delta, 1.0 / d) if d > 1e-12 else (0.0, 0.0, 1.0)
        point = geo.add3(b.pos, geo.scale3(n, rb + 0.5 * (d - ra - rb)))
        return _Contact(a, b, point, n, d - ra - rb)
    if a.kind == geo.SPHERE:
        point, n, s = _sphere_shape_contact(a, b)
        return _Contact(a, b, point, n, s)
    if b.kind == geo.SPHERE:
        point, n, s = _sphere_shape_contact(b, a)
        return _Contact(a, b, point, geo.neg3(n), s)

    sup_a = lambda d: geo.support_world(a.kind, a.params, a.R, a.pos, d)  # noqa: E731
    sup_b = lambda d: geo.support_world(b.kind, b.params, b.R, b.pos, d)  # noqa: E731
    seed = delta if geo.norm3(delta) > 1e-12 else (1.0, 0.0, 0.0)
    dist, pa, pb = geo.gjk_distance(sup_a, sup_b, seed)
    if pa is not None and dist > 1e-7:
        if dist > CONTACT_MARGIN:
            return None
        n = geo.scale3(geo.sub3(pa, pb), 1.0 / dist)
        return _Contact(a, b, geo.scale3(geo.add3(pa, pb), 0.5), n, dist)
    hit = geo.epa_penetration(sup_a, sup_b)
    if hit is None:
        # degenerate overlap: fall back to a center-line pushout
        n = geo.normalize3(delta)
        return _Contact(a, b, geo.scale3(geo.add3(a.pos, b.pos), 0.5), n, -PENETRATION_SLOP)
    depth, n, point = hit
    return _Contact(a, b, point, n, -depth)


def _collect_contacts(bodies: list[_Body]) -> list[_Contact]:
    contacts: list[_Contact] = []
    for b in bodies:
        _ground_contacts(b, contacts)
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            c = _pair_contact(bodies[i], bodies[j])
            if c is not None and c.s < CONTACT_MARGIN:
                contacts.append(c)
    return contacts


# ---------------------------------------------------------------------------
# velocity-level solver


def _point_velocity(body: _Body, r):
    return geo.add3(body.vel, geo.cross3(body.omega, r))


def _prepare_contact(c: _Contact, dt: float, restitution: float) -> None:
    a, b = c.a, c.b
    c.r_a = geo.sub3(c.point, a.pos)
    c.r_b = geo.sub3(c.point, b.pos) if b is not None else (0.0, 0.0, 0.0)
    n = c.n
    k = a.inv_mass + geo.dot3(n, geo.cross3(geo.mat3_vec(a.inv_I, geo.cross3(c.r_a, n)), c.r_a))
    if b is not None:
        k += b.inv_mass + geo.dot3(n, geo.cross3(geo.mat3_vec(b.inv_I, geo.cross3(c.r_b, n)), c.r_b))
    c.m_n = 1.0 / k if k > 1e-12 else 0.0
    c.mu = max(a.mu_slide, b.mu_slide) if b is not None else a.mu_slide
    c.lam_n = 0.0
    c.f_acc = (0.0, 0.0, 0.0)

    if c.s > 0.0:
        target = -c.s / dt  # speculative: may close the gap, no further
    elif -c.s > PENETRATION_SLOP:
        target = min(BAUMGARTE_BETA * (-c.s - PENETRATION_SLOP) / dt, MAX_CORRECTION_SPEED)
    else:
        target = 0.0
    if restitution > 0.0:
        v_rel = _point_velocity(a, c.r_a)
        if b is not None:
            v_rel = geo.sub3(v_rel, _point_velocity(b, c.r_b))
        v_n0 = geo.dot3(c.n, v_rel)
        if v_n0 < -1e-2:
            target = max(target, -restitution * v_n0)
    c.v_target = target


def _apply_impulse(body: _Body, imp, r) -> None:
    body.vel = geo.add3(body.vel, geo.scale3(imp, body.inv_mass))
    body.omega = geo.add3(body.omega, geo.mat3_vec(body.inv_I, geo.cross3(r, imp)))


def _solve_contacts(bodies, contacts, dt, restitution) -> dict:
    """Sequential impulses; returns accumulated normal impulse per pair key."""
    if not contacts:
        return {}
    for c in contacts:
        _prepare_contact(c, dt, restitution)

    for _ in range(SOLVER_ITERATIONS):
        for c in contacts:
            a, b = c.a, c.b
            v_rel = _point_velocity(a, c.r_a)
            if b is not None:
                v_rel = geo.sub3(v_rel, _point_velocity(b, c.r_b))
            v_n = geo.dot3(c.n, v_rel)
            new_lam = max(c.lam_n + c.m_n * (c.v_target - v_n), 0.0)
            d_lam = new_lam - c.lam_n
            if d_lam != 0.0:
                c.lam_n = new_lam
                imp = geo.scale3(c.n, d_lam)
                _apply_impulse(a, imp, c.r_a)
                if b is not None:
                    _apply_impulse(b, geo.neg3(imp), c.r_b)
            if c.mu <= 0.0 or c.lam_n <= 0.0:
                continue
            v_rel = _point_velocity(a, c.r_a)
            if b is not None:
                v_rel = geo.sub3(v_rel, _point_velocity(b, c.r_b))
            v_t = geo.sub3(v_rel, geo.scale3(c.n, geo.dot3(c.n, v_rel)))
            vt = geo.norm3(v_t)
            if vt < 1e-9:
                continue
            t_hat = geo.scale3(v_t, 1.0 / vt)
            k = a.inv_mass + geo.dot3(t_hat, geo.cross3(geo.mat3_vec(a.inv_I, geo.cross3(c.r_a, t_hat)), c.r_a))
            if b is not None:
                k += b.inv_mass + geo.dot3(t_hat, geo.cross3(geo.mat3_vec(b.inv_I, geo.cross3(c.r_b, t_hat)), c.r_b))
            if k < 1e-12:
                continue
            # friction impulse opposes the tangential relative velocity
            f_new = geo.add3(c.f_acc, geo.scale3(t_hat, -vt / k))
            f_max = c.mu * c.lam_n
            fn = geo.norm3(f_new)
            if fn > f_max:
                f_new = geo.scale3(f_new, f_max / fn)
            d_f = geo.sub3(f_new, c.f_acc)
            c.f_acc = f_new
            _apply_impulse(a, d_f, c.r_a)
            if b is not None:
                _apply_impulse(b, geo.neg3(d_f), c.r_b)

    impulses: dict = {}
    for c in contacts:
        if c.lam_n <= 0.0:
            continue
        _apply_rolling(c.a, c)
        if c.b is not None:
            _apply_rolling(c.b, c)
        if c.b is None:
            key = (c.a.name, GROUND_NAME)
        else:
            key = (c.a.name, c.b.name)
        impulses[key] = impulses.get(key, 0.0) + c.lam_n
    return impulses


def _apply_rolling(body: _Body, c: _Contact) -> None:
    """Rolling resistance: bounded angular impulse opposing tangential spin."""
    if body.mu_roll <= 0.0:
        return
    w_t = geo.sub3(body.omega, geo.scale3(c.n, geo.dot3(c.n, body.omega)))
    wt = geo.norm3(w_t)
    if wt < 1e-9:
        return
    u = geo.scale3(w_t, -1.0 / wt)
    rate = geo.dot3(u, geo.mat3_vec(body.inv_I, u))
    if rate < 1e-12:
        return
    budget = body.mu_roll * c.lam_n * body.r_eff
    L = min(budget, wt / rate)
    body.omega = geo.add3(body.omega, geo.mat3_vec(body.inv_I, geo.scale3(u, L)))


# ---------------------------------------------------------------------------
# integration


def _half_kick(bodies: list[_Body], gz: float, half_dt: float) -> None:
    for b in bodies:
        cv = b.damp * b.inv_mass
        b.vel = (
            b.vel[0] - half_dt * cv * b.vel[0],
            b.vel[1] - half_dt * cv * b.vel[1],
            b.vel[2] + half_dt * (gz - cv * b.vel[2]),
        )
        if b.damp != 0.0:
            torque = geo.scale3(b.omega, -b.damp)
            b.omega = geo.add3(b.omega, geo.scale3(geo.mat3_vec(b.inv_I, torque), half_dt))


def _drift(bodies: list[_Body], dt: float) -> None:
    for b in bodies:
        b.pos = geo.add3(b.pos, geo.scale3(b.vel, dt))
        b.quat = geo.quat_integrate(b.quat, b.omega, dt)
        _refresh_rotation(b)


def _snapshot(bodies: list[_Body]) -> RigidState:
    return RigidState(
        positions=np.array([b.pos for b in bodies], dtype=np.float64),
        orientations=np.array([b.quat for b in bodies], dtype=np.float64),
        linear_velocities=np.array([b.vel for b in bodies], dtype=np.float64),
        angular_velocities=np.array([b.omega for b in bodies], dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# public entry points


def simulate(
    config: SceneConfig,
    duration: float = DEFAULT_DURATION,
    fps: int = DEFAULT_FPS,
    substeps: int = DEFAULT_SUBSTEPS,
    restitution: float = 0.0,
) -> SimTrace:
    """Run the scene for ``duration`` seconds; snapshots at the frame rate.

    Raises ConfigError for invalid configs and DivergenceError when any
    position coordinate exceeds 1e4 m.
    """
    violations = validate(config)
    if violations:
        raise ConfigError("; ".join(str(v) for v in violations))

    bodies = _build_world(config)
    _init_state(bodies, config)
    gz = config.gravity.gz
    dt = 1.0 / (fps * substeps)
    half_dt = 0.5 * dt
    n_frames = round(duration * fps)

    frames: list[tuple[float, RigidState]] = [(0.0, _snapshot(bodies))]
    events: list[ContactEvent] = []
    last_active: dict = {}

    for frame in range(1, n_frames + 1):
        frame_impulse: dict = {}
        for _ in range(substeps):
            _half_kick(bodies, gz, half_dt)
            contacts = _collect_contacts(bodies)
            impulses = _solve_contacts(bodies, contacts, dt, restitution)
            _drift(bodies, dt)
            _half_kick(bodies, gz, half_dt)
            for key, lam in impulses.items():
                frame_impulse[key] = frame_impulse.get(key, 0.0) + lam

        for b in bodies:
            if max(abs(b.pos[0]), abs(b.pos[1]), abs(b.pos[2])) > POSITION_LIMIT:
                raise DivergenceError(f"{b.name} position exceeded {POSITION_LIMIT:g} m at frame {frame}")

        t = frame / fps
        for key in sorted(frame_impulse):
            if frame_impulse[key] < EVENT_IMPULSE_FLOOR:
                continue
            prev = last_active.get(key)
            if prev is None or frame - prev > EVENT_REARM_FRAMES:
                kind = "object_ground" if key[1] == GROUND_NAME else "object_object"
                events.append(ContactEvent(time=t, kind=kind, participants=key, impulse=frame_impulse[key]))
            last_active[key] = frame

        frames.append((t, _snapshot(bodies)))

    return SimTrace(frames=tuple(frames), contacts=tuple(events), config=config, fps=fps)


def initial_contact_pairs(config: SceneConfig, gap_tol: float = PENETRATION_SLOP) -> list[tuple[str, str]]:
    """Pairs already touching (separation <= gap_tol) in the initial state.

    Contact events involving these pairs at the very first frame describe the
    starting configuration, not something that happened.
    """
    return detect_initial_overlap(config, threshold=-gap_tol)


def detect_initial_overlap(config: SceneConfig, threshold: float = 1e-4) -> list[tuple[str, str]]:
    """Object pairs (or object/ground pairs) with separation below -threshold at t = 0."""
    bodies = _build_world(config)
    _init_state(bodies, config)
    overlaps: list[tuple[str, str]] = []
    for b in bodies:
        if geo.lowest_point_z(b.kind, b.params, b.R, b.pos) < -threshold:
            overlaps.append((b.name, GROUND_NAME))
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            c = _pair_contact(bodies[i], bodies[j])
            if c is not None and c.s < -threshold:
                overlaps.append((bodies[i].name, bodies[j].name))
    return overlaps
