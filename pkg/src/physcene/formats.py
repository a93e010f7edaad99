"""On-disk artifact formats.

* mask: binary portable graymap (P5), 8 bit, pixel value = object id
  (0 = ground/background).
* flow: magic ``DFLO``, then width and height as little-endian uint32, then
  row-major (dx, dy) pairs of little-endian float32.
* depth: magic ``DDEP``, same header, one float32 per pixel (+inf = sky).
* trace: magic ``DTRC`` — frame count, object count (uint32), object names
  (uint32 length + UTF-8), then per frame a float64 time followed by 13
  float64 per object: position(3), quaternion wxyz(4), linear velocity(3),
  angular velocity(3).
* events: one JSON object per line with keys kind, time, participants,
  payload (``.ndrec``).
* manifest: JSON record lines followed by one ``sha256:<hex>`` line hashing
  every preceding byte.

All readers validate magic/shape and raise ``FormatError`` on mismatch.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SceneError


class FormatError(SceneError):
    """Raised when a file does not match its declared format."""


# ---------------------------------------------------------------------------
# masks (P5 PGM)


def write_mask(path, ids: np.ndarray) -> None:
    ids = np.asarray(ids)
    if ids.ndim != 2 or ids.dtype != np.uint8:
        raise FormatError("mask must be a 2-d uint8 array")
    h, w = ids.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(ids.tobytes())


def read_mask(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a P5 graymap")
    # header: magic, width, height, maxval as whitespace-separated tokens
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"{path}: bad graymap header") from exc
    if maxval != 255:
        raise FormatError(f"{path}: expected 8-bit graymap, maxval {maxval}")
    raster = data[pos : pos + w * h]
    if len(raster) != w * h:
        raise FormatError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w)


# ---------------------------------------------------------------------------
# flow / depth


def _write_grid(path, magic: bytes, array: np.ndarray, channels: int) -> None:
    shape = array.shape
    if channels == 1:
        h, w = shape
    else:
        h, w = shape[0], shape[1]
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", w, h))
        fh.write(array.astype("<f4", copy=False).tobytes())


def _read_grid(path, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic, expected {magic!r}")
    w, h = struct.unpack("<II", data[4:12])
    count = w * h * channels
    body = np.frombuffer(data[12:], dtype="<f4")
    if body.size != count:
        raise FormatError(f"{path}: expected {count} floats, found {body.size}")
    if channels == 1:
        return body.reshape(h, w)
    return body.reshape(h, w, channels)


def write_flow(path, flow: np.ndarray) -> None:
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise FormatError("flow must be (H, W, 2)")
    _write_grid(path, b"DFLO", flow, 2)


def read_flow(path) -> np.ndarray:
    return _read_grid(path, b"DFLO", 2)


def write_depth(path, depth: np.ndarray) -> None:
    depth = np.asarray(depth)
    if depth.ndim != 2:
        raise FormatError("depth must be (H, W)")
    _write_grid(path, b"DDEP", depth, 1)


def read_depth(path) -> np.ndarray:
    return _read_grid(path, b"DDEP", 1)


# ---------------------------------------------------------------------------
# simulation trace


@dataclass(frozen=True)
class TraceData:
    """Kinematic trace as stored on disk (no contacts, no config)."""

    names: tuple[str, ...]
    times: np.ndarray  # (F,)
    states: np.ndarray  # (F, N, 13): pos3, quat4, linvel3, angvel3


def write_trace(path, trace) -> None:
    """Dump a SimTrace's kinematics; contact events live in the .ndrec sidecar."""
    names = trace.config.names
    frames = trace.frames
    with open(path, "wb") as fh:
        fh.write(b"DTRC")
        fh.write(struct.pack("<II", len(frames), len(names)))
        for name in names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        for t, state in frames:
            fh.write(struct.pack("<d", t))
            block = np.concatenate(
                [
                    state.positions,
                    state.orientations,
                    state.linear_velocities,
                    state.angular_velocities,
                ],
                axis=1,
            )
            fh.write(block.astype("<f8", copy=False).tobytes())


def read_trace(path) -> TraceData:
    data = Path(path).read_bytes()
    if data[:4] != b"DTRC":
        raise FormatError(f"{path}: bad magic, expected b'DTRC'")
    n_frames, n_objects = struct.unpack("<II", data[4:12])
    pos = 12
    names = []
    for _ in range(n_objects):
        (ln,) = struct.unpack("<I", data[pos : pos + 4])
        pos += 4
        names.append(data[pos : pos + ln].decode("utf-8"))
        pos += ln
    times = np.empty(n_frames)
    states = np.empty((n_frames, n_objects, 13))
    stride = 8 + n_objects * 13 * 8
    for f in range(n_frames):
        if pos + stride > len(data):
            raise FormatError(f"{path}: truncated at frame {f}")
        (times[f],) = struct.unpack("<d", data[pos : pos + 8])
        states[f] = np.frombuffer(data[pos + 8 : pos + stride], dtype="<f8").reshape(n_objects, 13)
        pos += stride
    return TraceData(names=tuple(names), times=times, states=states)


# ---------------------------------------------------------------------------
# event records


def write_events(path, events) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(
                json.dumps(
                    {
                        "kind": ev.kind,
                        "time": ev.time,
                        "participants": list(ev.participants),
                        "payload": dict(ev.payload),
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")


def read_events(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{line_no + 1}: bad record") from exc
            missing = {"kind", "time", "participants", "payload"} - rec.keys()
            if missing:
                raise FormatError(f"{path}:{line_no + 1}: missing {sorted(missing)}")
            records.append(rec)
    return records


# ---------------------------------------------------------------------------
# dataset manifest


def manifest_bytes(records) -> bytes:
    """Record lines plus the trailing content-hash line."""
    body = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in records).encode("utf-8")
    digest = hashlib.sha256(body).hexdigest()
    return body + f"sha256:{digest}\n".encode("ascii")


def write_manifest(path, records) -> str:
    blob = manifest_bytes(records)
    Path(path).write_bytes(blob)
    return blob.decode("utf-8").rsplit("sha256:", 1)[1].strip()


def read_manifest(path) -> tuple[list[dict], str]:
    """Parse records and verify the trailing hash; returns (records, hash)."""
    data = Path(path).read_bytes()
    head, _, tail = data.rpartition(b"sha256:")
    if not tail:
        raise FormatError(f"{path}: missing trailing hash line")
    stated = tail.strip().decode("ascii")
    actual = hashlib.sha256(head).hexdigest()
    if stated != actual:
        raise FormatError(f"{path}: content hash mismatch")
    records = []
    for line in head.decode("utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records, stated
