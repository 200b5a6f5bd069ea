import math
from collections import Counter

import cv2
import numpy as np
import pytest
from pydantic import ValidationError

from Tracking.Domain import pairgen
from Tracking.Domain.errors import DegenerateBoxError, EmptyPoolError
from Tracking.Domain.geometry import Box
from Tracking.Domain.image_domain_enum import ImageDomain
from Tracking.Domain.pairgen import AugmentationConfig, DetectionRecord, SamplerConfig

NO_OPS = AugmentationConfig(p_grayscale=0, p_hflip=0, p_noise=0, p_blur=0, p_rotate=0)


def raster(seed: int = 0, size: tuple[int, int] = (256, 256)) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 256, (*size, 3), dtype=np.uint8)


def records(dataset: str, domain: ImageDomain, count: int = 3) -> list[DetectionRecord]:
    return [
        DetectionRecord(image=f"{dataset}/{i:04d}.jpg", boxes=[[10, 10, 20, 20], [50, 50, 30, 10]], domain=domain, dataset=dataset)
        for i in range(count)
    ]


def default_pools() -> dict[str, list[DetectionRecord]]:
    pools = {name: records(name, ImageDomain.OPEN_AIR) for name in pairgen.OPEN_AIR_DATASETS}
    pools.update({name: records(name, ImageDomain.UNDERWATER) for name in pairgen.UNDERWATER_DATASETS})
    return pools


# crops

def test_crop_region_is_centered_square():
    x1, y1, side = pairgen.crop_region(Box(x=100, y=100, w=20, h=20), 2.0)
    assert (x1, y1, side) == (90.0, 90.0, 40.0)


def test_template_target_occupies_central_quarter():
    image = raster(size=(480, 640))
    target = Box(x=300, y=200, w=40, h=40)
    _, mapped = pairgen.crop_patch(image, target, 2.0, 128)
    assert mapped.as_list() == pytest.approx([32, 32, 64, 64])
    assert mapped.area == pytest.approx(128 * 128 / 4)


def test_search_box_scales_with_crop_not_target():
    for side in (10, 40, 90):
        _, _, search_box = pairgen.crop_pair(raster(size=(480, 640)), Box(x=200, y=200, w=side, h=side))
        assert search_box.as_list() == pytest.approx([96, 96, 64, 64])


def test_corner_target_is_padded_with_crop_means():
    image = raster(3, size=(200, 200))
    target = Box(x=0, y=0, w=20, h=20)
    x1, y1, side = pairgen.crop_region(target, 4.0)
    means = pairgen._channel_means(image, x1, y1, side)
    patch, _ = pairgen.crop_patch(image, target, 4.0, 256)
    np.testing.assert_allclose(patch[0, 0], np.round(means), atol=1)
    np.testing.assert_allclose(patch[10, 100], np.round(means), atol=1)


def test_search_box_round_trip():
    rng = np.random.default_rng(5)
    image = raster(size=(480, 640))
    for _ in range(50):
        target = Box(x=float(rng.uniform(50, 500)), y=float(rng.uniform(50, 350)), w=float(rng.uniform(10, 80)), h=float(rng.uniform(10, 80)))
        _, _, search_box = pairgen.crop_pair(image, target)
        back = pairgen.search_to_image(search_box, target, 4.0, 256)
        assert back.as_list() == pytest.approx(target.as_list(), abs=0.5)


def smooth_raster(size: tuple[int, int] = (240, 320)) -> np.ndarray:
    yy, xx = np.mgrid[0:size[0], 0:size[1]].astype(np.float64)
    channels = [
        127.5 + 100 * np.sin(xx / 23.0) * np.cos(yy / 31.0),
        127.5 + 100 * np.cos((xx + yy) / 41.0),
        127.5 + 100 * np.sin(yy / 17.0),
    ]
    return np.clip(np.stack(channels, axis=-1), 0, 255).astype(np.uint8)


def test_crop_pair_is_scale_invariant():
    image = smooth_raster()
    target = Box(x=140, y=100, w=30, h=30)
    doubled = cv2.resize(image, (image.shape[1] * 2, image.shape[0] * 2), interpolation=cv2.INTER_LINEAR)
    big_target = Box(x=2 * target.x, y=2 * target.y, w=2 * target.w, h=2 * target.h)

    template, search, search_box = pairgen.crop_pair(image, target)
    big_template, big_search, big_search_box = pairgen.crop_pair(doubled, big_target)
    for small, big in ((template, big_template), (search, big_search)):
        diff = np.abs(small.astype(np.float64) - big.astype(np.float64)) / 255.0
        assert diff.mean() < 2 / 255
    assert big_search_box.as_list() == pytest.approx(search_box.as_list())


def test_crop_pair_shapes_and_errors():
    template, search, _ = pairgen.crop_pair(raster(), Box(x=100, y=100, w=30, h=20))
    assert template.shape == (128, 128, 3)
    assert search.shape == (256, 256, 3)
    with pytest.raises(DegenerateBoxError):
        pairgen.crop_pair(raster(), Box(x=300, y=300, w=10, h=10))
    with pytest.raises(ValueError):
        pairgen.crop_pair(raster(), Box(x=100, y=100, w=30, h=20), template_factor=1.0)


# augmentation

def test_no_ops_is_identity():
    search = raster()
    box = Box(x=10, y=20, w=30, h=40)
    out, out_box, applied = pairgen.augment(search, box, NO_OPS, 123)
    np.testing.assert_array_equal(out, search)
    assert out is not search
    assert out_box == box
    assert applied == []


def test_hflip_mirrors_box():
    config = NO_OPS.model_copy(update={"p_hflip": 1.0})
    search = raster()
    out, box, applied = pairgen.augment(search, Box(x=10, y=10, w=50, h=50), config, 0)
    assert box == Box(x=196, y=10, w=50, h=50)
    assert applied == ["hflip"]
    np.testing.assert_array_equal(out, search[:, ::-1])


def test_all_ops_apply_in_order():
    config = AugmentationConfig(p_grayscale=1, p_hflip=1, p_noise=1, p_blur=1, p_rotate=1)
    out, box, applied = pairgen.augment(raster(), Box(x=100, y=100, w=50, h=50), config, 9)
    assert applied == list(pairgen.OP_ORDER)
    assert out.shape == (256, 256, 3)
    assert out.dtype == np.uint8
    assert not box.is_degenerate


def test_rotation_keeps_box_inside_raster():
    config = NO_OPS.model_copy(update={"p_rotate": 1.0})
    for seed in range(20):
        _, box, applied = pairgen.augment(raster(), Box(x=200, y=200, w=50, h=50), config, seed)
        assert applied == ["rotate"]
        assert box.x >= 0 and box.y >= 0
        assert box.x2 <= 256 and box.y2 <= 256


def test_augmentation_is_reproducible():
    config = AugmentationConfig(p_noise=0.5, p_rotate=0.5)
    for seed in range(10):
        a = pairgen.augment(raster(), Box(x=50, y=50, w=60, h=40), config, seed)
        b = pairgen.augment(raster(), Box(x=50, y=50, w=60, h=40), config, seed)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1:] == b[1:]


def op_frequencies(trials: int) -> tuple[dict[str, float], list[float]]:
    config = AugmentationConfig()
    counts: Counter[str] = Counter()
    angles = []
    for seed in range(trials):
        plan = pairgen.plan_augmentation(config, seed)
        counts.update(plan.ops())
        angles.append(plan.angle)
    return {name: counts[name] / trials for name in pairgen.OP_ORDER}, angles


def test_op_frequencies_and_angles():
    frequencies, angles = op_frequencies(20_000)
    expected = dict(zip(pairgen.OP_ORDER, AugmentationConfig().probabilities()))
    for name, value in frequencies.items():
        assert abs(value - expected[name]) < 0.02
    assert 0.0 <= min(angles) and max(angles) <= 10.0


@pytest.mark.slow
def test_op_frequencies_over_many_draws():
    frequencies, angles = op_frequencies(100_000)
    for name, expected in zip(pairgen.OP_ORDER, (0.10, 0.15, 0.05, 0.05, 0.05)):
        assert abs(frequencies[name] - expected) < 0.02
    assert 0.0 <= min(angles) and max(angles) <= 10.0


def test_augmentation_config_validation():
    with pytest.raises(ValidationError):
        AugmentationConfig(p_hflip=1.5)
    with pytest.raises(ValidationError):
        AugmentationConfig(rotate_range=(10, 0))
    with pytest.raises(ValidationError):
        AugmentationConfig(blur_kernel=4)


# sampling

def test_two_dataset_weights():
    pools = {"a": records("a", ImageDomain.OPEN_AIR), "b": records("b", ImageDomain.UNDERWATER)}
    sampler = SamplerConfig(weights={"a": 2.0, "b": 1.0}, epoch_size=30_000)
    counts = Counter(spec.dataset for spec in pairgen.sample_epoch(pools, sampler, 1))
    assert abs(counts["a"] - 20_000) <= 0.02 * 20_000
    assert abs(counts["b"] - 10_000) <= 0.02 * 10_000


def test_default_datasets_draw_two_to_one():
    manifest = pairgen.sample_epoch(default_pools(), SamplerConfig(epoch_size=30_000), 0)
    counts = Counter(spec.domain for spec in manifest)
    ratio = counts[ImageDomain.OPEN_AIR] / counts[ImageDomain.UNDERWATER]
    assert abs(ratio - 2.0) <= 0.05 * 2.0
    assert pairgen.domain_ratio(SamplerConfig().weights, SamplerConfig().domains) == 2.0


def test_rebalance_hits_target_ratio():
    sampler = SamplerConfig()
    weights = {"lasot": 3.0, "got10k": 3.0, "ruod": 1.0}
    rebalanced = pairgen.rebalance_weights(weights, sampler.domains, 2.0)
    assert pairgen.domain_ratio(rebalanced, sampler.domains) == pytest.approx(2.0)
    assert rebalanced["ruod"] == 1.0
    assert pairgen.domain_ratio({"lasot": 1.0}, sampler.domains) == math.inf


def test_sample_epoch_is_deterministic():
    sampler = SamplerConfig(epoch_size=200)
    assert pairgen.sample_epoch(default_pools(), sampler, 4) == pairgen.sample_epoch(default_pools(), sampler, 4)
    assert pairgen.sample_epoch(default_pools(), sampler, 4) != pairgen.sample_epoch(default_pools(), sampler, 5)


def test_unknown_dataset_uses_default_weight_and_record_domain():
    pools = {"deepfish": records("deepfish", ImageDomain.UNDERWATER)}
    manifest = pairgen.sample_epoch(pools, SamplerConfig(epoch_size=10), 0)
    assert {spec.dataset for spec in manifest} == {"deepfish"}
    assert {spec.domain for spec in manifest} == {ImageDomain.UNDERWATER}


def test_empty_pool():
    with pytest.raises(EmptyPoolError):
        pairgen.sample_epoch({}, SamplerConfig(), 0)
    with pytest.raises(EmptyPoolError):
        pairgen.sample_epoch({"lasot": records("lasot", ImageDomain.OPEN_AIR)}, SamplerConfig(weights={"lasot": 0.0, "ruod": 1.0}), 0)


def test_manifest_entry_regenerates_identically():
    image = raster(7, size=(300, 400))
    pools = {"ruod": [DetectionRecord(image="x.jpg", boxes=[[100, 80, 60, 40]], domain="underwater", dataset="ruod")]}
    for spec in pairgen.sample_epoch(pools, SamplerConfig(epoch_size=5), 2):
        first = pairgen.build_pair(image, spec.box, spec.seed)
        again = pairgen.build_pair(image, spec.box, spec.seed)
        np.testing.assert_array_equal(first.template, again.template)
        np.testing.assert_array_equal(first.search, again.search)
        assert first.search_box == again.search_box
        assert first.applied_ops == again.applied_ops


def test_detection_record_rejects_degenerate_boxes():
    with pytest.raises(ValidationError):
        DetectionRecord(image="a.jpg", boxes=[[0, 0, 0, 5]], domain="open-air", dataset="coco")


def test_coco_to_records():
    coco = {
        "images": [{"id": 1, "file_name": "a.jpg", "width": 100, "height": 100}, {"id": 2, "file_name": "b.jpg"}],
        "annotations": [
            {"image_id": 1, "bbox": [90, 90, 20, 20], "iscrowd": 0},
            {"image_id": 1, "bbox": [0, 0, 50, 50], "iscrowd": 1},
            {"image_id": 2, "bbox": [5, 5, 0.5, 10]},
            {"image_id": 3, "bbox": [5, 5, 10, 10]},
        ],
    }
    converted = pairgen.coco_to_records(coco, "data/ruod", ImageDomain.UNDERWATER, "ruod")
    assert len(converted) == 1
    assert converted[0].image_path == "data/ruod/a.jpg"
    assert converted[0].boxes == [Box(x=90, y=90, w=10, h=10)]
    assert converted[0].to_wire() == {"image": "data/ruod/a.jpg", "boxes": [[90, 90, 10, 10]], "domain": "underwater", "dataset": "ruod"}
