"""End-to-end smoke test for the iifcn Python package."""

import math
import os
import tempfile

import numpy as np

import iifcn


def test_admissibility():
    assert iifcn.admissible(252, 5)
    assert iifcn.bottleneck_extent(252, 5) == 4
    assert not iifcn.admissible(688, 5)
    assert iifcn.nearest_admissible(688, 5) == 700
    assert iifcn.nearest_admissible(956, 5) == 956


def test_synth_dataset():
    data = iifcn.synth_dataset(3, 20, 20, seed=7)
    again = iifcn.synth_dataset(3, 20, 20, seed=7)
    assert len(data) == 3
    for (img, mask), (img2, mask2) in zip(data, again):
        assert img.shape == (20, 20, 3) and img.dtype == np.uint8
        assert mask.shape == (20, 20) and mask.dtype == np.uint8
        assert set(np.unique(mask)) <= {0, 255}
        assert mask.any(), "synthetic masks are never empty"
        assert np.array_equal(img, img2) and np.array_equal(mask, mask2)
    other = iifcn.synth_dataset(1, 20, 20, seed=8)[0]
    assert not np.array_equal(other[0], data[0][0])


def test_model_and_checkpoint():
    model = iifcn.Model(blocks=1, widths=[4], seed=1)
    assert model.parameter_count() > 0

    img = iifcn.synth_dataset(1, 20, 20, seed=7)[0][0]
    prob = model.infer(img)
    assert prob.shape == (20, 20)
    assert prob.min() >= 0.0 and prob.max() <= 1.0
    assert np.array_equal(prob, model.infer(img)), "inference is deterministic"

    odd = iifcn.synth_dataset(1, 21, 19, seed=7)[0][0]
    assert model.infer(odd).shape == (21, 19), "inadmissible sizes are padded and cropped"

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.ckpt")
        model.save(path)
        loaded = iifcn.load_model(path)
        assert loaded.parameter_count() == model.parameter_count()
        assert np.array_equal(loaded.infer(img), prob)


def test_losses():
    mask = np.zeros((12, 12), dtype=np.uint8)
    mask[3:9, 3:9] = 255
    weights, p = iifcn.reweight_filter(mask)
    assert weights.shape == (12, 12)
    assert 0.0 < p < 1.0
    assert abs(weights.sum() - 144.0) < 1e-9

    a = np.zeros((8, 8))
    a[:, :4] = 1.0
    b = 1.0 - a
    assert iifcn.jaccard_loss(a, a) == 0.0
    disjoint = iifcn.jaccard_loss(a, b, k=1.1, mode="literal")
    assert abs(disjoint - math.log10(1 / 0.1 + 1 - 1 / 1.1)) < 1e-12
    assert abs(disjoint - 1.00394) < 1e-3
    assert iifcn.jaccard_loss(a, b, mode="soft") > 0.0

    soft = np.full((4, 4), 0.2)
    soft[0, 0] = 0.9
    hard = iifcn.harden(soft)
    assert set(np.unique(hard)) <= {0.0, 1.0}
    assert hard[0, 0] == 1.0 and hard[1, 1] == 0.0
    assert np.array_equal(iifcn.harden(hard), hard)


def test_metrics():
    gt = np.zeros((4, 4))
    gt[0, :3] = 1.0
    pred = np.zeros((4, 4))
    pred[0, :2] = 1.0
    pred[0, 3] = 1.0

    masked = iifcn.threshold_mask(np.array([[0.85, 0.8, 0.75]]), t=0.8)
    assert masked.tolist() == [[1.0, 0.0, 0.0]]

    report = iifcn.evaluate(pred, gt)
    assert report["tp"] == 2 and report["fp"] == 1 and report["fn"] == 1
    assert abs(report["jaccard"] - 0.5) < 1e-12
    assert abs(report["dice"] - 2 / 3) < 1e-12
    assert set(report) == {
        "tp", "fp", "tn", "fn",
        "sensitivity", "specificity", "accuracy", "dice", "jaccard",
    }


def test_refine():
    img, mask = iifcn.synth_dataset(1, 24, 24, seed=3)[0]
    gt = (mask > 0).astype(float)
    rng = np.random.default_rng(5)
    prob = np.where(gt > 0, 0.85, 0.15)
    flips = rng.random(prob.shape) < 0.08
    prob = np.where(flips, 1.0 - prob, prob)

    refined = iifcn.refine(img, prob, iterations=10, max_side=64)
    assert refined.shape == (24, 24) and refined.dtype == np.uint8
    assert set(np.unique(refined)) <= {0, 255}

    base = iifcn.evaluate(iifcn.threshold_mask(prob, t=0.8), gt)
    after = iifcn.evaluate((refined > 0).astype(float), gt)
    assert after["jaccard"] > base["jaccard"], "refinement cleans the noise"

    try:
        iifcn.refine(img, prob[:-1])
    except ValueError as e:
        assert "sizes differ" in str(e)
    else:
        raise AssertionError("size mismatch should raise")


def test_augment_pair():
    img, mask = iifcn.synth_dataset(1, 20, 20, seed=9)[0]
    out_img, out_mask = iifcn.augment_pair(img, mask, seed=3)
    assert out_img.shape == img.shape and out_mask.shape == mask.shape
    assert set(np.unique(out_mask)) <= {0, 255}
    again_img, again_mask = iifcn.augment_pair(img, mask, seed=3)
    assert np.array_equal(out_img, again_img) and np.array_equal(out_mask, again_mask)
    other_img, _ = iifcn.augment_pair(img, mask, seed=4)
    different = any(
        not np.array_equal(iifcn.augment_pair(img, mask, seed=s)[0], img)
        for s in range(20)
    )
    assert different, "some seed must transform the image"
    del other_img


def main():
    tests = [
        test_admissibility,
        test_synth_dataset,
        test_model_and_checkpoint,
        test_losses,
        test_metrics,
        test_refine,
        test_augment_pair,
    ]
    for test in tests:
        test()
        print(f"{test.__name__}: ok")
    print("smoke: all checks passed")


if __name__ == "__main__":
    main()
