"""Shared builders for the test suite.

Most tests construct configs through these helpers instead of YAML text so
that schema details live in one place; YAML-specific behavior is exercised
with inline documents in test_scene.py.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from physcene import (
    CameraSpec,
    GravitySpec,
    ObjectSpec,
    ReferenceArtifacts,
    SceneConfig,
    build_camera,
    formats,
    render_flow,
    render_masks,
    serialize_config,
    simulate,
    validate,
)
from physcene.render import sampled_frame_indices, sampled_pair_indices


def sphere(name="sphere_0", radius=0.4, position=(0.0, 0.5, 0.4), velocity=(0.0, 0.0, 0.0),
           angular=(0.0, 0.0, 0.0), mass=1.0, friction=(0.5, 0.1), damping=-6.0,
           orientation=(1.0, 0.0, 0.0, 0.0)):
    return ObjectSpec(shape="sphere", name=name, radius=radius, position=position,
                      orientation=orientation, linear_velocity=velocity,
                      angular_velocity=angular, mass=mass, friction=friction, damping=damping)


def box(name="box_0", size=(0.3, 0.3, 0.3), position=(0.0, 0.5, 0.3), velocity=(0.0, 0.0, 0.0),
        angular=(0.0, 0.0, 0.0), mass=1.0, friction=(0.5, 0.1), damping=-6.0,
        orientation=(1.0, 0.0, 0.0, 0.0)):
    return ObjectSpec(shape="box", name=name, size=size, position=position,
                      orientation=orientation, linear_velocity=velocity,
                      angular_velocity=angular, mass=mass, friction=friction, damping=damping)


def cylinder(name="cylinder_0", radius=0.3, height=0.6, position=(0.0, 0.5, 0.3),
             velocity=(0.0, 0.0, 0.0), angular=(0.0, 0.0, 0.0), mass=1.0,
             friction=(0.5, 0.1), damping=-6.0, orientation=(1.0, 0.0, 0.0, 0.0)):
    return ObjectSpec(shape="cylinder", name=name, radius=radius, height=height,
                      position=position, orientation=orientation, linear_velocity=velocity,
                      angular_velocity=angular, mass=mass, friction=friction, damping=damping)


def scene(*objects, camera=None, gz=-9.8):
    cam = camera if camera is not None else CameraSpec.at_height(3.0, 45.0, 45.0)
    cfg = SceneConfig(objects=tuple(objects), camera=cam, gravity=GravitySpec(vector=(0.0, 0.0, gz)))
    problems = validate(cfg)
    assert not problems, problems
    return cfg


# gravity tiny but valid: keeps mid-air bodies effectively ballistic-free
MICRO_GRAVITY = -1e-9


def write_reference_dir(config: SceneConfig, out: Path,
                        width: int = 480, height: int = 320) -> ReferenceArtifacts:
    """Lay out config.yaml + sampled masks/ and flow/ the way datagen does."""
    trace = simulate(config)
    cam = build_camera(config.camera, width, height)
    frames = sampled_frame_indices(trace)
    masks = render_masks(trace, cam, frames=frames)
    flows = render_flow(trace, cam, pair_indices=sampled_pair_indices(trace), masks=masks)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(serialize_config(config), "utf-8")
    (out / "masks").mkdir(exist_ok=True)
    (out / "flow").mkdir(exist_ok=True)
    for k, idx in enumerate(masks.frame_indices):
        formats.write_mask(out / "masks" / f"{idx:03d}.pgm", masks.ids[k])
    for k, idx in enumerate(flows.pair_indices):
        formats.write_flow(out / "flow" / f"{idx:03d}.dflo", flows.flows[k])
    return ReferenceArtifacts(masks=masks.ids, flows=flows.flows,
                              frame_indices=masks.frame_indices, config=config)


@pytest.fixture(scope="session")
def rolling_sphere_config():
    return scene(sphere(velocity=(1.0, 0.5, 0.0)))


@pytest.fixture(scope="session")
def rolling_sphere_trace(rolling_sphere_config):
    return simulate(rolling_sphere_config)


@pytest.fixture(scope="session")
def two_body_config():
    return scene(
        sphere("sphere_0", radius=0.45, position=(-0.8, 0.6, 0.45), velocity=(1.2, 0.3, 0.0)),
        sphere("sphere_1", radius=0.35, position=(0.9, 0.9, 0.8), velocity=(-1.0, 0.0, 0.5), mass=1.5),
    )
