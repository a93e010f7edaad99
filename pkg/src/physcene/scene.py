"""Scene-configuration language: types, parsing, validation, canonical text.

A scene is a YAML sequence of typed entries, one per rigid body plus exactly
one ``camera`` and one ``gravity`` entry:

    - type: box
      name: box_0
      size: [1.0, 0.5, 0.4]
      state:
        angular_velocity: [0, 0, 0]
        linear_velocity: [4.3, 2.5, 0.0]
        orientation: [0.97, 0.0, 0.0, 0.23]
        position: [-5.0, -0.3, 0.4]
      physics:
        friction: [1.1, 0.3]
        mass: 1.0
        damping: -4
    - type: camera
      fovy: 45
      orientation: 45
      position: [0, -2, 3.5]
    - type: gravity
      gravity: [0, 0, -7.0]

Conventions:

* ``size`` holds box half-extents in meters; spheres use ``radius`` and
  cylinders ``radius`` plus ``height`` (full length along the body z axis).
* ``orientation`` is a quaternion ``[w, x, y, z]``; it is re-normalized to
  unit length on parse (near-zero norm is a domain error).
* ``friction`` slot 0 is the sliding coefficient, slot 1 the rolling one.
* ``damping`` is a signed exponent: the drag coefficient is ``10**damping``,
  applied as force ``-10**damping * v`` and torque ``-10**damping * omega``.
* the camera is positioned at ``(0, -2, h)`` and only pitches (the YAML key
  ``orientation`` holds the pitch in degrees); ``fovy`` is the vertical
  field of view in degrees.
* gravity must point straight down: ``[0, 0, g_z]`` with ``g_z < 0``.
* unknown keys are rejected rather than ignored.

``serialize_config`` emits canonical text: fixed key order (as above),
2-space indentation, reals formatted to 6 significant digits. Value-equal
configs therefore serialize to byte-identical documents.

Model answers arrive wrapped in ``<think>...</think>\\n\\n<answer>...</answer>``;
``extract_answer`` splits that wire format.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigSyntaxError, DomainError, LayoutError, SchemaError, TagError

SHAPES = ("sphere", "box", "cylinder")
DEFAULT_MAX_OBJECTS = 6
GROUND_NAME = "ground"

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ObjectSpec:
    """One rigid body: shape + geometry, initial state, physical properties."""

    shape: str
    name: str
    radius: float | None = None
    height: float | None = None
    size: tuple[float, float, float] | None = None
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    linear_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angular_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mass: float = 1.0
    friction: tuple[float, float] = (0.5, 0.1)
    damping: float = -6.0


@dataclass(frozen=True)
class CameraSpec:
    """Pinhole camera at (0, -2, h), pitched down by ``pitch`` degrees."""

    position: tuple[float, float, float] = (0.0, -2.0, 3.5)
    pitch: float = 45.0
    fovy: float = 45.0

    @property
    def height(self) -> float:
        return self.position[2]

    @classmethod
    def at_height(cls, height: float, pitch: float = 45.0, fovy: float = 45.0) -> "CameraSpec":
        return cls(position=(0.0, -2.0, float(height)), pitch=float(pitch), fovy=float(fovy))


@dataclass(frozen=True)
class GravitySpec:
    """Uniform gravity, constrained to point straight down."""

    vector: tuple[float, float, float] = (0.0, 0.0, -9.81)

    @property
    def gz(self) -> float:
        return self.vector[2]


@dataclass(frozen=True)
class SceneConfig:
    objects: tuple[ObjectSpec, ...]
    camera: CameraSpec
    gravity: GravitySpec

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.objects)

    @property
    def shapes(self) -> tuple[str, ...]:
        return tuple(o.shape for o in self.objects)

    def object_by_name(self, name: str) -> ObjectSpec:
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(name)


@dataclass(frozen=True)
class Violation:
    """A single validation failure: which field, which rule."""

    path: str
    rule: str

    def __str__(self) -> str:
        return f"{self.path}: {self.rule}"


# ---------------------------------------------------------------------------
# basic value helpers


def unit_quat(q, eps: float = 1e-12):
    """Normalize a quaternion; already-unit inputs pass through bitwise."""
    n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]
    if n2 < eps:
        raise DomainError("orientation quaternion has near-zero norm")
    if abs(n2 - 1.0) <= 4e-12:
        return (float(q[0]), float(q[1]), float(q[2]), float(q[3]))
    n = math.sqrt(n2)
    return (float(q[0]) / n, float(q[1]) / n, float(q[2]) / n, float(q[3]) / n)


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise SchemaError(f"{where}: number must be finite")
    return v


def _vec(value, n: int, where: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise SchemaError(f"{where}: expected a sequence of {n} numbers")
    return tuple(_real(v, f"{where}[{i}]") for i, v in enumerate(value))


def _require_keys(entry: dict, required: tuple, where: str) -> None:
    missing = [k for k in required if k not in entry]
    if missing:
        raise SchemaError(f"{where}: missing keys {missing}")
    extra = sorted(set(entry) - set(required))
    if extra:
        raise SchemaError(f"{where}: unknown keys {extra}")


# ---------------------------------------------------------------------------
# parsing


def _parse_object(entry: dict, where: str) -> ObjectSpec:
    shape = entry["type"]
    geom_keys = {"sphere": ("radius",), "cylinder": ("radius", "height"), "box": ("size",)}[shape]
    _require_keys(entry, ("type", "name") + geom_keys + ("state", "physics"), where)

    name = entry["name"]
    if not isinstance(name, str):
        raise SchemaError(f"{where}.name: expected a string")

    state = entry["state"]
    if not isinstance(state, dict):
        raise SchemaError(f"{where}.state: expected a mapping")
    _require_keys(state, ("angular_velocity", "linear_velocity", "orientation", "position"), f"{where}.state")
    physics = entry["physics"]
    if not isinstance(physics, dict):
        raise SchemaError(f"{where}.physics: expected a mapping")
    _require_keys(physics, ("friction", "mass", "damping"), f"{where}.physics")

    kwargs = {}
    if "radius" in geom_keys:
        kwargs["radius"] = _real(entry["radius"], f"{where}.radius")
    if "height" in geom_keys:
        kwargs["height"] = _real(entry["height"], f"{where}.height")
    if "size" in geom_keys:
        kwargs["size"] = _vec(entry["size"], 3, f"{where}.size")

    return ObjectSpec(
        shape=shape,
        name=name,
        position=_vec(state["position"], 3, f"{where}.state.position"),
        orientation=unit_quat(_vec(state["orientation"], 4, f"{where}.state.orientation")),
        linear_velocity=_vec(state["linear_velocity"], 3, f"{where}.state.linear_velocity"),
        angular_velocity=_vec(state["angular_velocity"], 3, f"{where}.state.angular_velocity"),
        mass=_real(physics["mass"], f"{where}.physics.mass"),
        friction=_vec(physics["friction"], 2, f"{where}.physics.friction"),
        damping=_real(physics["damping"], f"{where}.physics.damping"),
        **kwargs,
    )


def parse_config(text: str, max_objects: int = DEFAULT_MAX_OBJECTS) -> SceneConfig:
    """Parse scene YAML into a validated SceneConfig.

    Raises ConfigSyntaxError for malformed YAML, SchemaError for structural
    problems, DomainError when values violate scene invariants.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigSyntaxError(f"not a YAML document: {exc}") from exc
    if not isinstance(doc, list):
        raise SchemaError("top level must be a sequence of typed entries")

    objects: list[ObjectSpec] = []
    camera = None
    gravity = None
    for i, entry in enumerate(doc):
        where = f"entry[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected a mapping with a 'type' key")
        kind = entry.get("type")
        if kind in SHAPES:
            objects.append(_parse_object(entry, f"objects[{len(objects)}]"))
        elif kind == "camera":
            if camera is not None:
                raise SchemaError("duplicate camera entry")
            _require_keys(entry, ("type", "fovy", "orientation", "position"), where)
            camera = CameraSpec(
                position=_vec(entry["position"], 3, f"{where}.position"),
                pitch=_real(entry["orientation"], f"{where}.orientation"),
                fovy=_real(entry["fovy"], f"{where}.fovy"),
            )
        elif kind == "gravity":
            if gravity is not None:
                raise SchemaError("duplicate gravity entry")
            _require_keys(entry, ("type", "gravity"), where)
            gravity = GravitySpec(vector=_vec(entry["gravity"], 3, f"{where}.gravity"))
        else:
            raise SchemaError(f"{where}: unknown type {kind!r}")

    if camera is None:
        raise SchemaError("missing camera entry")
    if gravity is None:
        raise SchemaError("missing gravity entry")

    config = SceneConfig(objects=tuple(objects), camera=camera, gravity=gravity)
    violations = validate(config, max_objects=max_objects)
    if violations:
        raise DomainError("; ".join(str(v) for v in violations))
    return config


# ---------------------------------------------------------------------------
# validation


def _check_vec(value, n: int, path: str, out: list) -> bool:
    if not isinstance(value, tuple) or len(value) != n:
        out.append(Violation(path, f"must be a tuple of {n} reals"))
        return False
    if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in value):
        out.append(Violation(path, "components must be finite reals"))
        return False
    return True


def validate(config: SceneConfig, max_objects: int = DEFAULT_MAX_OBJECTS) -> list[Violation]:
    """Collect every domain violation in the config (empty list = valid)."""
    out: list[Violation] = []
    n = len(config.objects)
    if not 1 <= n <= max_objects:
        out.append(Violation("objects", f"object count must be between 1 and {max_objects}, got {n}"))

    seen: set[str] = set()
    for i, obj in enumerate(config.objects):
        p = f"objects[{i}]"
        if obj.shape not in SHAPES:
            out.append(Violation(f"{p}.type", f"unknown shape {obj.shape!r}"))
            continue
        if not isinstance(obj.name, str) or not _NAME_RE.match(obj.name):
            out.append(Violation(f"{p}.name", "name must be an identifier"))
        elif obj.name in seen:
            out.append(Violation(f"{p}.name", f"duplicate name {obj.name!r}"))
        else:
            seen.add(obj.name)

        if obj.shape == "sphere":
            if obj.radius is None or not (isinstance(obj.radius, (int, float)) and obj.radius > 0):
                out.append(Violation(f"{p}.radius", "sphere radius must be positive"))
            if obj.height is not None or obj.size is not None:
                out.append(Violation(p, "sphere takes only a radius"))
        elif obj.shape == "cylinder":
            if obj.radius is None or not (isinstance(obj.radius, (int, float)) and obj.radius > 0):
                out.append(Violation(f"{p}.radius", "cylinder radius must be positive"))
            if obj.height is None or not (isinstance(obj.height, (int, float)) and obj.height > 0):
                out.append(Violation(f"{p}.height", "cylinder height must be positive"))
            if obj.size is not None:
                out.append(Violation(p, "cylinder takes radius and height, not size"))
        else:
            if not _check_vec(obj.size, 3, f"{p}.size", out):
                pass
            elif min(obj.size) <= 0:
                out.append(Violation(f"{p}.size", "half-extents must be positive"))
            if obj.radius is not None or obj.height is not None:
                out.append(Violation(p, "box takes only a size triple"))

        _check_vec(obj.position, 3, f"{p}.state.position", out)
        _check_vec(obj.linear_velocity, 3, f"{p}.state.linear_velocity", out)
        _check_vec(obj.angular_velocity, 3, f"{p}.state.angular_velocity", out)
        if _check_vec(obj.orientation, 4, f"{p}.state.orientation", out):
            norm = math.sqrt(sum(c * c for c in obj.orientation))
            if abs(norm - 1.0) > 1e-6:
                out.append(Violation(f"{p}.state.orientation", f"quaternion norm must be 1, got {norm:.8f}"))
        if not (isinstance(obj.mass, (int, float)) and math.isfinite(obj.mass) and obj.mass > 0):
            out.append(Violation(f"{p}.physics.mass", "mass must be positive"))
        if _check_vec(obj.friction, 2, f"{p}.physics.friction", out):
            if obj.friction[0] < 0 or obj.friction[1] < 0:
                out.append(Violation(f"{p}.physics.friction", "coefficients must be non-negative"))
        if not (isinstance(obj.damping, (int, float)) and math.isfinite(obj.damping)):
            out.append(Violation(f"{p}.physics.damping", "damping exponent must be a finite real"))

    cam = config.camera
    if _check_vec(cam.position, 3, "camera.position", out):
        if cam.position[0] != 0.0:
            out.append(Violation("camera.position", "x must be 0"))
        if cam.position[1] != -2.0:
            out.append(Violation("camera.position", "y must be -2"))
    if not (isinstance(cam.fovy, (int, float)) and 0.0 < cam.fovy < 180.0):
        out.append(Violation("camera.fovy", "fovy must be in (0, 180) degrees"))
    if not (isinstance(cam.pitch, (int, float)) and math.isfinite(cam.pitch)):
        out.append(Violation("camera.orientation", "pitch must be a finite real"))

    if _check_vec(config.gravity.vector, 3, "gravity", out):
        gx, gy, gz = config.gravity.vector
        if gx != 0.0 or gy != 0.0:
            out.append(Violation("gravity", "x and y components must be 0"))
        if not gz < 0.0:
            out.append(Violation("gravity", "z component must be strictly negative"))

    return out


# ---------------------------------------------------------------------------
# canonical serialization


def _fmt(x) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # collapse -0.0
    s = "%.6g" % x
    # YAML 1.1 resolves exponent forms as floats only with a decimal point
    if "e" in s and "." not in s:
        s = s.replace("e", ".0e")
    return s


def _fmt_vec(vec) -> str:
    return "[" + ", ".join(_fmt(v) for v in vec) + "]"


def serialize_config(config: SceneConfig) -> str:
    """Emit canonical YAML (fixed key order, 6 significant digits, 2-space indent)."""
    lines: list[str] = []
    for obj in config.objects:
        lines.append(f"- type: {obj.shape}")
        lines.append(f"  name: {obj.name}")
        if obj.shape == "sphere":
            lines.append(f"  radius: {_fmt(obj.radius)}")
        elif obj.shape == "cylinder":
            lines.append(f"  radius: {_fmt(obj.radius)}")
            lines.append(f"  height: {_fmt(obj.height)}")
        else:
            lines.append(f"  size: {_fmt_vec(obj.size)}")
        lines.append("  state:")
        lines.append(f"    angular_velocity: {_fmt_vec(obj.angular_velocity)}")
        lines.append(f"    linear_velocity: {_fmt_vec(obj.linear_velocity)}")
        lines.append(f"    orientation: {_fmt_vec(unit_quat(obj.orientation))}")
        lines.append(f"    position: {_fmt_vec(obj.position)}")
        lines.append("  physics:")
        lines.append(f"    friction: {_fmt_vec(obj.friction)}")
        lines.append(f"    mass: {_fmt(obj.mass)}")
        lines.append(f"    damping: {_fmt(obj.damping)}")
    cam = config.camera
    lines.append("- type: camera")
    lines.append(f"  fovy: {_fmt(cam.fovy)}")
    lines.append(f"  orientation: {_fmt(cam.pitch)}")
    lines.append(f"  position: {_fmt_vec(cam.position)}")
    lines.append("- type: gravity")
    lines.append(f"  gravity: {_fmt_vec(config.gravity.vector)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# answer-tag wire format


def extract_answer(text: str) -> tuple[str | None, str]:
    """Split ``<think>...</think>`` + ``<answer>...</answer>`` wire format.

    Returns (reasoning or None, answer payload), both stripped. Raises
    TagError when the answer pair is missing or tags interleave.
    """
    a_open = text.find("<answer>")
    if a_open < 0:
        raise TagError("no <answer> tag")
    a_close = text.find("</answer>", a_open + 8)
    if a_close < 0:
        raise TagError("unbalanced <answer> tag")
    if 0 <= text.find("<answer>", a_open + 8, a_close):
        raise TagError("interleaved <answer> tags")
    answer = text[a_open + 8 : a_close].strip()

    reasoning = None
    t_open = text.find("<think>", 0, a_open)
    if t_open >= 0:
        t_close = text.find("</think>", t_open + 7)
        if t_close < 0 or t_close > a_open:
            raise TagError("unbalanced or interleaved <think> tag")
        reasoning = text[t_open + 7 : t_close].strip()
    return reasoning, answer


# ---------------------------------------------------------------------------
# parameter flattening

GLOBAL_PATHS = ("camera.height", "camera.pitch", "camera.fovy", "gravity.gz")

_STATE_PATHS = tuple(
    [f"state.position.{i}" for i in range(3)]
    + [f"state.orientation.{i}" for i in range(4)]
    + [f"state.linear_velocity.{i}" for i in range(3)]
    + [f"state.angular_velocity.{i}" for i in range(3)]
)
_PHYSICS_PATHS = ("physics.mass", "physics.friction.0", "physics.friction.1", "physics.damping")


def object_slot_paths(shape: str) -> tuple[str, ...]:
    """Slot order for one object: geometry, then state, then physics."""
    if shape == "sphere":
        geom: tuple[str, ...] = ("radius",)
    elif shape == "cylinder":
        geom = ("radius", "height")
    elif shape == "box":
        geom = ("size.0", "size.1", "size.2")
    else:
        raise LayoutError(f"unknown shape {shape!r}")
    return geom + _STATE_PATHS + _PHYSICS_PATHS


@dataclass(frozen=True)
class SlotSpec:
    """Addresses one scalar: object index (None = global) + field path."""

    object_index: int | None
    path: str


@dataclass(frozen=True)
class ParamLayout:
    """Shapes and names are carried here, not in the value vector."""

    shapes: tuple[str, ...]
    names: tuple[str, ...]
    slots: tuple[SlotSpec, ...]

    def __len__(self) -> int:
        return len(self.slots)


@dataclass
class ParamVector:
    values: np.ndarray
    layout: ParamLayout
    frozen_mask: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.frozen_mask = np.asarray(self.frozen_mask, dtype=bool)
        if self.values.shape != (len(self.layout),) or self.frozen_mask.shape != self.values.shape:
            raise LayoutError(
                f"vector of {self.values.shape} values does not fit layout of {len(self.layout)} slots"
            )


def _object_slot_value(obj: ObjectSpec, path: str) -> float:
    head, _, rest = path.partition(".")
    if head == "radius":
        return float(obj.radius)
    if head == "height":
        return float(obj.height)
    if head == "size":
        return float(obj.size[int(rest)])
    if head == "state":
        field, _, idx = rest.partition(".")
        return float(getattr(obj, field)[int(idx)])
    if head == "physics":
        field, _, idx = rest.partition(".")
        if field == "friction":
            return float(obj.friction[int(idx)])
        return float(getattr(obj, field))
    raise LayoutError(f"unknown slot path {path!r}")


def flatten_parameters(config: SceneConfig) -> ParamVector:
    """Flatten continuous parameters into one vector (one box = 20 slots,
    spheres 18, cylinders 19, plus camera h/pitch/fovy and gravity g_z)."""
    slots: list[SlotSpec] = []
    values: list[float] = []
    for i, obj in enumerate(config.objects):
        for path in object_slot_paths(obj.shape):
            slots.append(SlotSpec(i, path))
            values.append(_object_slot_value(obj, path))
    cam = config.camera
    for path, value in zip(GLOBAL_PATHS, (cam.height, cam.pitch, cam.fovy, config.gravity.gz)):
        slots.append(SlotSpec(None, path))
        values.append(float(value))
    layout = ParamLayout(shapes=config.shapes, names=config.names, slots=tuple(slots))
    return ParamVector(np.array(values), layout, np.zeros(len(values), dtype=bool))


def unflatten_parameters(vector: ParamVector) -> SceneConfig:
    """Rebuild a SceneConfig; quaternion slots are re-normalized.

    Total over arbitrary real vectors so searched points always produce a
    config: a degenerate (near-zero) quaternion falls back to identity.
    """
    layout = vector.layout
    values = np.asarray(vector.values, dtype=np.float64)
    if values.shape != (len(layout),):
        raise LayoutError("value count does not match layout")

    per_object: list[dict] = [dict() for _ in layout.shapes]
    global_values: dict[str, float] = {}
    for slot, value in zip(layout.slots, values):
        if slot.object_index is None:
            global_values[slot.path] = float(value)
        else:
            per_object[slot.object_index][slot.path] = float(value)

    objects = []
    for i, (shape, name) in enumerate(zip(layout.shapes, layout.names)):
        fields = per_object[i]
        expected = object_slot_paths(shape)
        if set(fields) != set(expected):
            raise LayoutError(f"object {name!r}: slot set does not match shape {shape!r}")
        q = tuple(fields[f"state.orientation.{k}"] for k in range(4))
        n2 = sum(c * c for c in q)
        q = (1.0, 0.0, 0.0, 0.0) if n2 < 1e-12 else unit_quat(q)
        kwargs: dict = {}
        if shape == "sphere":
            kwargs["radius"] = fields["radius"]
        elif shape == "cylinder":
            kwargs["radius"] = fields["radius"]
            kwargs["height"] = fields["height"]
        else:
            kwargs["size"] = tuple(fields[f"size.{k}"] for k in range(3))
        objects.append(
            ObjectSpec(
                shape=shape,
                name=name,
                position=tuple(fields[f"state.position.{k}"] for k in range(3)),
                orientation=q,
                linear_velocity=tuple(fields[f"state.linear_velocity.{k}"] for k in range(3)),
                angular_velocity=tuple(fields[f"state.angular_velocity.{k}"] for k in range(3)),
                mass=fields["physics.mass"],
                friction=(fields["physics.friction.0"], fields["physics.friction.1"]),
                damping=fields["physics.damping"],
                **kwargs,
            )
        )
    camera = CameraSpec.at_height(
        global_values["camera.height"], global_values["camera.pitch"], global_values["camera.fovy"]
    )
    gravity = GravitySpec(vector=(0.0, 0.0, global_values["gravity.gz"]))
    return SceneConfig(objects=tuple(objects), camera=camera, gravity=gravity)


# ---------------------------------------------------------------------------
# spatial discretization (categorical bins for text descriptions)

X_BIN_LABELS = (
    "far left",
    "moderately left",
    "slightly left",
    "near center",
    "slightly right",
    "moderately right",
    "far right",
)

Y_BIN_LABELS = (
    "far in the foreground",
    "in the foreground",
    "slightly in the foreground",
    "at mid depth",
    "slightly in the background",
    "in the background",
    "far in the background",
)

Z_BIN_LABELS = ("close to the surface", "low above the surface", "high above the surface")

_XY_EDGES = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)


def _bin7(v: float, labels: tuple) -> str:
    if not math.isfinite(v):
        raise DomainError("coordinate must be finite")
    for edge, label in zip(_XY_EDGES, labels):
        if v < edge:
            return label
    return labels[6]


def discretize_x(x: float) -> str:
    """Seven left/right bins; boundaries belong to the bin on their right."""
    return _bin7(x, X_BIN_LABELS)


def discretize_y(y: float) -> str:
    """Same seven-bin thresholds as x, labeled foreground/background."""
    return _bin7(y, Y_BIN_LABELS)


def discretize_z(z: float) -> str:
    """Three height bins: < 0.6 on ground, 0.6..1.5 low, >= 1.5 high."""
    if not math.isfinite(z):
        raise DomainError("coordinate must be finite")
    if z < 0.6:
        return Z_BIN_LABELS[0]
    if z < 1.5:
        return Z_BIN_LABELS[1]
    return Z_BIN_LABELS[2]
