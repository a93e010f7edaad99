"""Sampling, rejection filtering, and dataset directory emission.

Sampling determinism and range containment are checked against the
declared bounds; the three rejection rules are driven with synthetic
visibility matrices so each boundary (one vs two never-visible objects,
7999 vs 8000 peak pixels) is hit exactly; dataset runs are compared by
manifest content hash across repeats and validated from a cold re-read.
"""

import dataclasses

import numpy as np
import pytest

from conftest import box, scene, sphere
from physcene import SceneError, flatten_parameters, simulate
from physcene.datagen import (
    MIN_PIXELS,
    DatasetManifest,
    FilterResult,
    SamplingRanges,
    default_ranges,
    filter_scene,
    generate_dataset,
    local_ranges,
    sample_config,
    slot_bounds,
    validate_manifest,
)
from physcene.scene import validate


TEST_RANGES = SamplingRanges(
    radius=(0.4, 0.5),
    half_extent=(0.35, 0.45),
    cylinder_height=(0.7, 0.9),
    mass=(0.5, 2.0),
    position_xy=(-0.5, 0.5),
    position_z=(0.8, 1.4),
    velocity=(-1.0, 1.0),
    angular_velocity=(-2.0, 2.0),
    camera_height=(2.0, 2.4),
    camera_pitch=(40.0, 50.0),
    fovy=(50.0, 60.0),
    gravity_z=(-10.0, -9.0),
    object_counts=((1, 0.5), (2, 0.5)),
    upright_prob=1.0,
)


class TestSamplingRanges:
    def test_packaged_defaults_match_the_dataclass(self):
        assert default_ranges() == SamplingRanges()

    def test_yaml_round_trip(self):
        assert SamplingRanges.from_yaml(TEST_RANGES.to_yaml()) == TEST_RANGES
        assert SamplingRanges.from_yaml(SamplingRanges().to_yaml()) == SamplingRanges()

    def test_unknown_keys_rejected(self):
        with pytest.raises(SceneError, match="unknown range keys"):
            SamplingRanges.from_yaml("bounce: [0, 1]\n")

    def test_inverted_range_rejected(self):
        with pytest.raises(SceneError, match="min 2.0 exceeds max"):
            SamplingRanges(mass=(2.0, 0.5))

    def test_upright_prob_bounds(self):
        with pytest.raises(SceneError, match="upright_prob"):
            SamplingRanges(upright_prob=1.5)


class TestSampleConfig:
    def test_deterministic_per_seed(self):
        a = sample_config(TEST_RANGES, 7)
        b = sample_config(TEST_RANGES, 7)
        c = sample_config(TEST_RANGES, 8)
        assert a == b
        assert a != c

    def test_values_stay_inside_the_declared_bounds(self):
        r = TEST_RANGES
        for seed in range(30):
            cfg = sample_config(r, seed)
            assert 1 <= len(cfg.objects) <= 2
            for obj in cfg.objects:
                assert r.position_xy[0] <= obj.position[0] <= r.position_xy[1]
                assert r.position_xy[0] <= obj.position[1] <= r.position_xy[1]
                assert r.position_z[0] <= obj.position[2] <= r.position_z[1]
                assert r.mass[0] <= obj.mass <= r.mass[1]
                assert r.slide_friction[0] <= obj.friction[0] <= r.slide_friction[1]
                assert r.roll_friction[0] <= obj.friction[1] <= r.roll_friction[1]
                assert r.damping[0] <= obj.damping <= r.damping[1]
                if obj.radius is not None:
                    assert r.radius[0] <= obj.radius <= r.radius[1]
                if obj.size is not None:
                    for h in obj.size:
                        assert r.half_extent[0] <= h <= r.half_extent[1]
                for v in obj.linear_velocity:
                    assert r.velocity[0] <= v <= r.velocity[1]
            assert r.camera_height[0] <= cfg.camera.height <= r.camera_height[1]
            assert r.fovy[0] <= cfg.camera.fovy <= r.fovy[1]
            assert r.gravity_z[0] <= cfg.gravity.gz <= r.gravity_z[1]
            assert validate(cfg) == []

    def test_names_count_per_shape(self):
        r = dataclasses.replace(
            TEST_RANGES,
            object_counts=((4, 1.0),),
            shape_weights=(("sphere", 0.5), ("box", 0.5)),
            holdout_enabled=False,
        )
        for seed in range(10):
            cfg = sample_config(r, seed)
            for shape in ("sphere", "box"):
                expect = [f"{shape}_{i}" for i in range(cfg.shapes.count(shape))]
                assert [n for n, s in zip(cfg.names, cfg.shapes) if s == shape] == expect

    def test_upright_probability_extremes(self):
        flat = dataclasses.replace(
            TEST_RANGES, object_counts=((2, 1.0),),
            shape_weights=(("box", 1.0),), upright_prob=1.0, holdout_enabled=False,
        )
        tilted = dataclasses.replace(flat, upright_prob=0.0)
        identity = (1.0, 0.0, 0.0, 0.0)
        for seed in range(10):
            assert all(o.orientation == identity for o in sample_config(flat, seed).objects)
        tilted_quats = [o.orientation for s in range(10) for o in sample_config(tilted, s).objects]
        assert sum(q != identity for q in tilted_quats) == len(tilted_quats)

    def test_holdout_combinations_are_excluded(self):
        r = dataclasses.replace(
            TEST_RANGES,
            object_counts=((2, 1.0),),
            shape_weights=(("sphere", 0.5), ("box", 0.5)),
            holdout=(("sphere", "sphere"),),
            holdout_enabled=True,
        )
        for seed in range(40):
            shapes = tuple(sorted(sample_config(r, seed).shapes))
            assert shapes != ("sphere", "sphere")

    def test_exhausted_holdout_raises(self):
        r = dataclasses.replace(
            TEST_RANGES,
            object_counts=((2, 1.0),),
            shape_weights=(("sphere", 1.0),),
            holdout=(("sphere", "sphere"),),
            holdout_enabled=True,
        )
        with pytest.raises(SceneError, match="non-held-out"):
            sample_config(r, 0)

    def test_disabled_holdout_allows_the_combination(self):
        r = dataclasses.replace(
            TEST_RANGES,
            object_counts=((2, 1.0),),
            shape_weights=(("sphere", 1.0),),
            holdout=(("sphere", "sphere"),),
            holdout_enabled=False,
        )
        assert tuple(sorted(sample_config(r, 0).shapes)) == ("sphere", "sphere")


@pytest.fixture(scope="module")
def clean():
    cfg = scene(
        sphere(position=(0.0, 0.5, 0.4)),
        box(position=(1.5, 0.8, 0.3)),
    )
    return cfg, simulate(cfg)


class TestFilterScene:
    def visibility(self, frames, *peaks):
        vis = np.zeros((frames, len(peaks)), dtype=int)
        for i, p in enumerate(peaks):
            vis[frames // 2, i] = p
        return vis

    def test_clean_scene_accepted(self, clean):
        cfg, trace = clean
        vis = self.visibility(31, MIN_PIXELS, MIN_PIXELS + 500)
        assert filter_scene(cfg, trace, vis) == FilterResult(True)

    def test_overlap_is_checked_first(self, clean):
        _, trace = clean
        cfg = scene(
            sphere("sphere_0", position=(0.0, 0.5, 2.0), radius=0.4),
            sphere("sphere_1", position=(0.3, 0.5, 2.0), radius=0.4),
        )
        # both objects also never visible, but overlap wins
        result = filter_scene(cfg, trace, self.visibility(31, 0, 0))
        assert not result.accepted
        assert result.reason == "overlap"
        assert "sphere_0 overlaps sphere_1" in result.detail

    def test_single_never_visible_object_is_tolerated(self, clean):
        cfg, trace = clean
        result = filter_scene(cfg, trace, self.visibility(31, 0, MIN_PIXELS))
        assert result.accepted

    def test_two_never_visible_objects_rejected(self, clean):
        cfg, trace = clean
        result = filter_scene(cfg, trace, self.visibility(31, 0, 0))
        assert result == FilterResult(False, "offscreen", "never visible: sphere_0, box_0")

    def test_peak_pixel_boundary(self, clean):
        cfg, trace = clean
        at = filter_scene(cfg, trace, self.visibility(31, MIN_PIXELS, MIN_PIXELS))
        below = filter_scene(cfg, trace, self.visibility(31, MIN_PIXELS - 1, MIN_PIXELS))
        assert at.accepted
        assert not below.accepted
        assert below.reason == "too_small"
        assert "sphere_0" in below.detail

    def test_small_beats_offscreen_only_when_visible(self, clean):
        cfg, trace = clean
        # one never-visible (allowed) plus one too small -> too_small
        result = filter_scene(cfg, trace, self.visibility(31, 0, 500))
        assert result.reason == "too_small"
        assert "box_0" in result.detail


class TestLocalRanges:
    def test_intervals_cover_the_config_with_padding(self):
        cfg = scene(sphere(position=(0.3, 0.6, 0.4), velocity=(1.0, 0.5, 0.0)))
        base = SamplingRanges()
        local = local_ranges(cfg, fraction=0.1, base=base)
        pad_xy = 0.1 * (base.position_xy[1] - base.position_xy[0]) / 2
        assert local.position_xy == pytest.approx((0.3 - pad_xy, 0.6 + pad_xy))
        assert local.radius[0] <= 0.4 <= local.radius[1]
        assert local.velocity[0] <= 0.0 and local.velocity[1] >= 1.0
        assert local.camera_pitch[0] <= 45.0 <= local.camera_pitch[1]

    def test_unused_categories_keep_the_base_interval(self):
        cfg = scene(sphere())
        local = local_ranges(cfg, fraction=0.1)
        assert local.cylinder_height == SamplingRanges().cylinder_height
        assert local.half_extent == SamplingRanges().half_extent

    def test_physical_clamps(self):
        cfg = scene(sphere(radius=0.012, position=(0.0, 0.5, 0.012),
                           friction=(0.0, 0.0), velocity=(0.0, 0.0, 0.0)))
        local = local_ranges(cfg, fraction=0.5)
        assert local.radius[0] >= 1e-2
        assert local.slide_friction[0] >= 0.0
        assert local.roll_friction[0] >= 0.0
        assert local.gravity_z[1] <= -1e-6

    def test_structural_knobs_come_from_the_base(self):
        cfg = scene(sphere())
        local = local_ranges(cfg, fraction=0.2, base=TEST_RANGES)
        assert local.object_counts == TEST_RANGES.object_counts
        assert local.upright_prob == TEST_RANGES.upright_prob
        assert local.holdout == TEST_RANGES.holdout

    def test_nonpositive_fraction_rejected(self):
        with pytest.raises(SceneError, match="fraction"):
            local_ranges(scene(sphere()), fraction=0.0)


class TestSlotBounds:
    def test_every_slot_gets_its_category(self):
        from conftest import cylinder

        cfg = scene(
            sphere(position=(-1.5, 0.5, 0.4)),
            box(position=(0.0, 0.5, 0.3)),
            cylinder(position=(1.5, 0.5, 0.3)),
        )
        vec = flatten_parameters(cfg)
        r = SamplingRanges()
        bounds = slot_bounds(vec.layout, r)
        assert len(bounds) == len(vec.values) == 61
        by_path = dict(zip([s.path for s in vec.layout.slots], bounds))
        assert by_path["radius"] == r.radius
        assert by_path["size.0"] == r.half_extent
        assert by_path["height"] == r.cylinder_height
        assert by_path["state.position.0"] == r.position_xy
        assert by_path["state.position.2"] == r.position_z
        assert by_path["state.orientation.0"] == (-1.0, 1.0)
        assert by_path["state.linear_velocity.1"] == r.velocity
        assert by_path["state.angular_velocity.2"] == r.angular_velocity
        assert by_path["physics.mass"] == r.mass
        assert by_path["physics.friction.0"] == r.slide_friction
        assert by_path["physics.friction.1"] == r.roll_friction
        assert by_path["physics.damping"] == r.damping
        assert by_path["camera.height"] == r.camera_height
        assert by_path["camera.pitch"] == r.camera_pitch
        assert by_path["camera.fovy"] == r.fovy
        assert by_path["gravity.gz"] == r.gravity_z


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "run"
    manifest = generate_dataset(2, TEST_RANGES, out, master_seed=5)
    return out, manifest


class TestGenerateDataset:
    def test_requested_count_is_accepted(self, dataset):
        _, manifest = dataset
        assert len(manifest.accepted) == 2
        assert [r["id"] for r in manifest.accepted] == ["00000", "00001"]

    def test_scene_directories_have_the_full_layout(self, dataset):
        out, manifest = dataset
        for rec in manifest.accepted:
            scene_dir = out / rec["id"]
            assert (scene_dir / "config.yaml").exists()
            masks = sorted(p.name for p in (scene_dir / "masks").glob("*.pgm"))
            flows = sorted(p.name for p in (scene_dir / "flow").glob("*.dflo"))
            assert masks == [f"{i:03d}.pgm" for i in range(31)]
            assert flows == [f"{i:03d}.dflo" for i in range(0, 29, 3)]
            assert (scene_dir / "events.ndrec").exists()
            assert (scene_dir / "description.txt").read_text("utf-8").startswith("The scene") or \
                (scene_dir / "description.txt").stat().st_size > 0
            assert rec["n_frames"] == 31

    def test_rejected_attempts_stay_in_the_manifest(self, dataset):
        _, manifest = dataset
        rejected = [r for r in manifest.records if r["status"] == "rejected"]
        assert len(rejected) == sum(manifest.rejections.values())
        for r in rejected:
            assert r["reason"] in {"overlap", "offscreen", "too_small", "diverged"}
            assert "id" not in r

    def test_same_seed_reproduces_the_content_hash(self, dataset, tmp_path):
        _, manifest = dataset
        again = generate_dataset(2, TEST_RANGES, tmp_path / "again", master_seed=5)
        assert again.content_hash == manifest.content_hash
        assert again.records == manifest.records

    def test_different_seed_changes_the_content(self, dataset, tmp_path):
        _, manifest = dataset
        other = generate_dataset(2, TEST_RANGES, tmp_path / "other", master_seed=6)
        assert other.content_hash != manifest.content_hash

    def test_impossible_ranges_give_up_with_a_clear_error(self, tmp_path):
        # every sample overlaps the ground: z range far below the radius
        hopeless = dataclasses.replace(
            TEST_RANGES, position_z=(0.05, 0.08),
            object_counts=((1, 1.0),), shape_weights=(("sphere", 1.0),),
        )
        with pytest.raises(SceneError, match="gave up"):
            generate_dataset(1, hopeless, tmp_path / "x", master_seed=0, max_attempts=5)

    def test_validate_manifest_accepts_a_fresh_run(self, dataset):
        out, _ = dataset
        assert validate_manifest(out, deep=False) == []
        assert validate_manifest(out, deep=True) == []

    def test_validate_manifest_catches_tampered_masks(self, dataset, tmp_path):
        out, _ = dataset
        import shutil

        copy = tmp_path / "tampered"
        shutil.copytree(out, copy)
        victim = copy / "00000" / "masks" / "000.pgm"
        data = bytearray(victim.read_bytes())
        data[-1] ^= 0xFF
        victim.write_bytes(bytes(data))
        problems = validate_manifest(copy, deep=False)
        assert problems and "hash mismatch" in problems[0]

    def test_validate_manifest_catches_missing_files(self, dataset, tmp_path):
        out, _ = dataset
        import shutil

        copy = tmp_path / "gutted"
        shutil.copytree(out, copy)
        (copy / "00001" / "description.txt").unlink()
        problems = validate_manifest(copy, deep=False)
        assert any("missing description.txt" in p for p in problems)

    def test_validate_manifest_catches_edited_manifest(self, dataset, tmp_path):
        out, _ = dataset
        import shutil

        copy = tmp_path / "edited"
        shutil.copytree(out, copy)
        mpath = copy / "manifest.jsonl"
        mpath.write_text(mpath.read_text("utf-8").replace("accepted", "ACCEPTED", 1), "utf-8")
        problems = validate_manifest(copy)
        assert problems

    def test_manifest_accessor(self, dataset):
        _, manifest = dataset
        assert isinstance(manifest, DatasetManifest)
        assert all(r["status"] == "accepted" for r in manifest.accepted)
