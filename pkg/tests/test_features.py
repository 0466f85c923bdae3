import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vlase import (
    CITYSCAPES_CLASSES,
    AugmentConfig,
    ClassMask,
    ConfigError,
    EdgeFeatureMap,
    InputError,
    apply_alpha,
    apply_mask,
    select_edge_pixels,
)

from conftest import random_map
from oracles import mask_oracle, select_oracle


class TestClassMask:
    def test_cityscapes_ordering(self):
        assert len(CITYSCAPES_CLASSES) == 19
        assert CITYSCAPES_CLASSES[0] == "road"
        assert CITYSCAPES_CLASSES[10] == "sky"
        assert CITYSCAPES_CLASSES[13] == "car"
        assert CITYSCAPES_CLASSES[18] == "bicycle"

    def test_presets(self):
        assert ClassMask.all_classes(19).keep == tuple(range(19))
        assert ClassMask.static().keep == tuple(range(11))
        assert ClassMask.building_sky().keep == (2, 10)
        assert ClassMask.vegetation_sky().keep == (8, 10)
        assert ClassMask.vegetation_building_sky().keep == (2, 8, 10)
        assert ClassMask.remove("car").keep == tuple(i for i in range(19) if i != 13)

    def test_parse(self):
        assert ClassMask.parse("ALL", 5).keep == (0, 1, 2, 3, 4)
        assert ClassMask.parse("static").keep == ClassMask.static().keep
        assert ClassMask.parse("veg_sky").keep == (8, 10)
        assert ClassMask.parse("remove:sky").keep == tuple(
            i for i in range(19) if i != 10
        )
        assert ClassMask.parse("remove:0", 4).keep == (1, 2, 3)
        assert ClassMask.parse("0,5,7").keep == (0, 5, 7)
        assert ClassMask.parse("0+5+7").keep == (0, 5, 7)
        with pytest.raises(ConfigError):
            ClassMask.parse("nonsense")

    def test_empty_mask_rejected(self):
        with pytest.raises(ConfigError):
            ClassMask(())

    def test_duplicates_rejected(self):
        with pytest.raises(ConfigError):
            ClassMask((1, 1, 2))

    def test_keep_is_sorted(self):
        assert ClassMask((7, 2, 4)).keep == (2, 4, 7)


class TestAugmentConfig:
    def test_validation(self):
        mask = ClassMask.all_classes(3)
        with pytest.raises(ConfigError):
            AugmentConfig(mask=mask, threshold=0.0)
        with pytest.raises(ConfigError):
            AugmentConfig(mask=mask, threshold=1.5)
        with pytest.raises(ConfigError):
            AugmentConfig(mask=mask, alpha=-0.1)
        assert AugmentConfig(mask=mask).alpha == 0.1  # default class weight
        assert AugmentConfig(mask=mask).threshold == 0.5

    def test_feature_dim(self):
        mask = ClassMask((0, 2))
        assert AugmentConfig(mask=mask).feature_dim == 4
        assert AugmentConfig(mask=mask, spatial_enabled=False).feature_dim == 2


class TestEdgeFeatureMap:
    def test_canonical_order_and_readonly(self):
        fmap = EdgeFeatureMap.from_pixels(
            "a", 4, 4, 2, [(3, 1, [0.5, 0.5]), (0, 0, [0.1, 0.9]), (1, 1, [0.2, 0.3])]
        )
        assert fmap.xs.tolist() == [0, 1, 3]
        assert fmap.ys.tolist() == [0, 1, 1]
        assert not fmap.probs.flags.writeable

    def test_rejects_duplicates(self):
        with pytest.raises(InputError):
            EdgeFeatureMap.from_pixels("a", 4, 4, 1, [(1, 1, [0.5]), (1, 1, [0.2])])

    def test_rejects_out_of_bounds(self):
        with pytest.raises(InputError):
            EdgeFeatureMap.from_pixels("a", 4, 4, 1, [(4, 0, [0.5])])
        with pytest.raises(InputError):
            EdgeFeatureMap.from_pixels("a", 4, 4, 1, [(0, -1, [0.5])])

    def test_rejects_bad_probs(self):
        with pytest.raises(InputError):
            EdgeFeatureMap.from_pixels("a", 4, 4, 1, [(0, 0, [1.5])])

    def test_empty_map(self):
        fmap = EdgeFeatureMap.from_pixels("a", 4, 4, 3, [])
        assert len(fmap) == 0
        assert fmap.probs.shape == (0, 3)

    def test_from_dense(self):
        dense = np.zeros((2, 3, 2))
        dense[1, 2] = [0.7, 0.1]
        dense[0, 0] = [0.0, 0.4]
        fmap = EdgeFeatureMap.from_dense("d", dense)
        assert len(fmap) == 2
        assert fmap.xs.tolist() == [0, 2]
        assert fmap.ys.tolist() == [0, 1]


class TestSelectEdgePixels:
    def test_all_zero_probs_selects_nothing(self, basic_cfg):
        fmap = EdgeFeatureMap.from_pixels(
            "z", 4, 4, 3, [(x, y, [0.0, 0.0, 0.0]) for x in range(4) for y in range(4)]
        )
        assert select_edge_pixels(fmap, basic_cfg).shape == (0, 5)

    def test_boundary_pixel_normalized_coords(self):
        fmap = EdgeFeatureMap.from_pixels("b", 2, 2, 1, [(0, 0, [1.0])])
        cfg = AugmentConfig(mask=ClassMask.all_classes(1), threshold=0.5)
        feats = select_edge_pixels(fmap, cfg)
        assert feats.tolist() == [[1.0, 0.0, 0.0]]

    def test_matches_enumeration_oracle(self, rng):
        for trial in range(25):
            fmap = random_map(rng, f"r{trial}", width=4, height=4, num_classes=3)
            cfg = AugmentConfig(mask=ClassMask.all_classes(3), threshold=0.5)
            got = select_edge_pixels(fmap, cfg)
            assert got.tolist() == select_oracle(fmap, cfg)

    def test_threshold_uses_only_kept_classes(self):
        # pixel is an edge only w.r.t. class 1; removing class 1 must drop it
        fmap = EdgeFeatureMap.from_pixels("k", 4, 4, 2, [(1, 1, [0.2, 0.9])])
        keep_both = AugmentConfig(mask=ClassMask.all_classes(2), threshold=0.5)
        drop_one = AugmentConfig(mask=ClassMask((0,)), threshold=0.5)
        assert select_edge_pixels(fmap, keep_both).shape[0] == 1
        assert select_edge_pixels(fmap, drop_one).shape[0] == 0

    def test_no_spatial_dim(self, rng):
        fmap = random_map(rng, num_classes=3)
        cfg = AugmentConfig(
            mask=ClassMask.all_classes(3), threshold=0.5, spatial_enabled=False
        )
        assert select_edge_pixels(fmap, cfg).shape[1] == 3

    def test_mask_out_of_range_is_config_error(self, rng):
        fmap = random_map(rng, num_classes=3)
        cfg = AugmentConfig(mask=ClassMask((0, 5)), threshold=0.5)
        with pytest.raises(ConfigError):
            select_edge_pixels(fmap, cfg)

    def test_monotone_in_threshold(self, rng):
        fmap = random_map(rng, num_pixels=30)
        mask = ClassMask.all_classes(3)
        counts = [
            select_edge_pixels(fmap, AugmentConfig(mask=mask, threshold=t)).shape[0]
            for t in (0.1, 0.3, 0.5, 0.7, 0.9)
        ]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] <= len(fmap)

    def test_spatial_components_in_unit_range(self, rng):
        for trial in range(10):
            fmap = random_map(rng, f"s{trial}", num_pixels=20)
            cfg = AugmentConfig(mask=ClassMask.all_classes(3), threshold=0.2)
            feats = select_edge_pixels(fmap, cfg)
            if feats.size:
                assert feats[:, -2:].min() >= 0.0
                assert feats[:, -2:].max() <= 1.0

    def test_output_preserves_pixel_order(self, rng):
        fmap = random_map(rng, num_pixels=25)
        cfg = AugmentConfig(mask=ClassMask.all_classes(3), threshold=0.3)
        feats = select_edge_pixels(fmap, cfg)
        kept = fmap.probs.astype(np.float64).max(axis=1) >= 0.3
        expected_x = fmap.xs[kept].astype(np.float64) / fmap.width
        assert np.array_equal(feats[:, -2], expected_x)


class TestApplyAlpha:
    def test_alpha_one_zeroes_spatial(self):
        out = apply_alpha(np.array([0.6, 0.2, 0.3, 0.7]), 1.0)
        assert out.tolist() == [0.6, 0.2, 0.0, 0.0]

    def test_alpha_zero_zeroes_classes(self):
        out = apply_alpha(np.array([0.6, 0.2, 0.3, 0.7]), 0.0)
        assert out.tolist() == [0.0, 0.0, 0.3, 0.7]

    def test_alpha_half_halves_everything(self):
        feat = np.array([0.6, 0.2, 0.3, 0.7])
        assert np.array_equal(apply_alpha(feat, 0.5), feat / 2.0)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_complementary_weights_reconstruct(self, alpha):
        feat = np.array([0.6, 0.2, 0.25, 0.125, 0.3, 0.7])
        total = apply_alpha(feat, alpha) + apply_alpha(feat, 1.0 - alpha)
        assert np.allclose(total, feat, atol=1e-12)

    def test_batch_form(self):
        batch = np.array([[0.5, 0.5, 1.0, 1.0], [1.0, 0.0, 0.5, 0.25]])
        out = apply_alpha(batch, 0.25)
        assert np.allclose(out[:, :2], batch[:, :2] * 0.25)
        assert np.allclose(out[:, 2:], batch[:, 2:] * 0.75)

    def test_requires_spatial_components(self):
        with pytest.raises(InputError):
            apply_alpha(np.array([0.5]), 0.1)


class TestApplyMask:
    def test_all_mask_is_identity(self, rng):
        fmap = random_map(rng, num_pixels=15)
        assert apply_mask(fmap, ClassMask.all_classes(3)) == fmap

    def test_remove_car_drops_column(self, rng):
        fmap = random_map(rng, num_classes=19, num_pixels=10)
        reduced = apply_mask(fmap, ClassMask.remove("car"))
        assert reduced.num_classes == 18
        expected = np.delete(np.asarray(fmap.probs), 13, axis=1)
        assert np.array_equal(reduced.probs, expected)

    def test_matches_projection_oracle(self, rng):
        fmap = random_map(rng, num_classes=19, num_pixels=12)
        reduced = apply_mask(fmap, ClassMask.static())
        assert reduced.probs.tolist() == [
            [pytest.approx(v) for v in row]
            for row in mask_oracle(fmap, ClassMask.static().keep)
        ]

    def test_keeps_subthreshold_pixels(self):
        fmap = EdgeFeatureMap.from_pixels("p", 4, 4, 2, [(0, 0, [0.1, 0.9])])
        reduced = apply_mask(fmap, ClassMask((0,)))
        assert len(reduced) == 1  # thresholding is select's job

    def test_mask_then_select_equals_select_then_project(self, rng):
        for trial in range(10):
            fmap = random_map(rng, f"m{trial}", num_classes=5, num_pixels=20)
            mask = ClassMask((0, 2, 4))
            via_masked_map = select_edge_pixels(
                apply_mask(fmap, mask),
                AugmentConfig(mask=ClassMask.all_classes(3), threshold=0.5),
            )
            direct = select_edge_pixels(
                fmap, AugmentConfig(mask=mask, threshold=0.5)
            )
            assert np.array_equal(via_masked_map, direct)

    def test_out_of_range_mask(self, rng):
        fmap = random_map(rng, num_classes=3)
        with pytest.raises(ConfigError):
            apply_mask(fmap, ClassMask((0, 7)))
