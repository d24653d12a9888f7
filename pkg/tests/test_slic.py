import collections
import math

import numpy as np
import pytest

from powerslic.slic import (
    SlicParams,
    color_gradient,
    color_gradient_field,
    connected_components,
    init_centers,
    post_process,
    run_assignment,
    slic_distance_sq,
)

# ---------------------------------------------------------------------------
# oracles (independent re-implementations used only by the tests)


def _window_assign_oracle(lab, centers, h, m, labels, dists):
    """Literal per-pixel window sweep with strict-less updates."""
    height, width = labels.shape
    hw = math.ceil(h) - 1
    w = (h * h) / (m * m)
    for i in range(centers.shape[0]):
        cxr = math.floor(centers[i, 0] + 0.5)
        cyr = math.floor(centers[i, 1] + 0.5)
        for y in range(max(cyr - hw, 0), min(cyr + hw, height - 1) + 1):
            for x in range(max(cxr - hw, 0), min(cxr + hw, width - 1) + 1):
                dx = x - centers[i, 0]
                dy = y - centers[i, 1]
                dl = lab[y, x, 0] - centers[i, 2]
                da = lab[y, x, 1] - centers[i, 3]
                db = lab[y, x, 2] - centers[i, 4]
                d = (dx * dx + dy * dy) + w * ((dl * dl + da * da) + db * db)
                if d < dists[y, x]:
                    dists[y, x] = d
                    labels[y, x] = i


def _kmeans_oracle(lab, centers, m, h, iters):
    """Unwindowed 5D k-means: full nearest-center assignment each pass."""
    height, width = lab.shape[:2]
    labels = np.zeros((height, width), dtype=int)
    centers = centers.copy()
    w = (h * h) / (m * m)
    for it in range(iters + 1):
        for y in range(height):
            for x in range(width):
                best, bi = math.inf, -1
                for i in range(centers.shape[0]):
                    d = (
                        (x - centers[i, 0]) ** 2
                        + (y - centers[i, 1]) ** 2
                        + w
                        * (
                            (lab[y, x, 0] - centers[i, 2]) ** 2
                            + (lab[y, x, 1] - centers[i, 3]) ** 2
                            + (lab[y, x, 2] - centers[i, 4]) ** 2
                        )
                    )
                    if d < best:
                        best, bi = d, i
                labels[y, x] = bi
        if it == iters:
            break
        move = 0.0
        for i in range(centers.shape[0]):
            ys, xs = np.nonzero(labels == i)
            if xs.size:
                new = np.array(
                    [
                        xs.mean(),
                        ys.mean(),
                        lab[ys, xs, 0].mean(),
                        lab[ys, xs, 1].mean(),
                        lab[ys, xs, 2].mean(),
                    ]
                )
                move += abs(new[0] - centers[i, 0]) + abs(new[1] - centers[i, 1])
                centers[i] = new
        if move == 0.0:
            break
    return labels


def _flood_fill_oracle(labels):
    """BFS 4-connected components in discovery order."""
    height, width = labels.shape
    comp = -np.ones((height, width), dtype=int)
    nc = 0
    for sy in range(height):
        for sx in range(width):
            if comp[sy, sx] >= 0:
                continue
            queue = collections.deque([(sy, sx)])
            comp[sy, sx] = nc
            while queue:
                y, x = queue.popleft()
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if (
                        0 <= ny < height
                        and 0 <= nx < width
                        and comp[ny, nx] < 0
                        and labels[ny, nx] == labels[y, x]
                    ):
                        comp[ny, nx] = nc
                        queue.append((ny, nx))
            nc += 1
    return comp, nc


def _gradient_oracle(lab, x, y):
    height, width = lab.shape[:2]
    if not (1 <= x <= width - 2 and 1 <= y <= height - 2):
        return math.inf
    gx = sum((lab[y, x + 1, c] - lab[y, x - 1, c]) ** 2 for c in range(3))
    gy = sum((lab[y + 1, x, c] - lab[y - 1, x, c]) ** 2 for c in range(3))
    return gx + gy


# ---------------------------------------------------------------------------
# distance and gradient


def test_distance_pure_spatial():
    c = np.array([0.0, 0.0, 5.0, 1.0, -2.0])
    for h, m in [(5, 10), (20, 3), (7, 7)]:
        assert slic_distance_sq((3, 4), (5.0, 1.0, -2.0), c, h, m) == pytest.approx(25)


def test_distance_weighted_color():
    c = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
    d = slic_distance_sq((3, 4), (1.0, 0.0, 0.0), c, h=20, m=10)
    assert d == pytest.approx(25 + 4 * 1)


def test_distance_h_equals_m_is_plain_5d(rng):
    p_xy = rng.random(2) * 10
    p_lab = rng.random(3) * 10
    c = rng.random(5) * 10
    d = slic_distance_sq(p_xy, p_lab, c, h=6.5, m=6.5)
    full = np.sum((np.concatenate([p_xy, p_lab]) - c) ** 2)
    assert d == pytest.approx(full, rel=1e-12)


def test_gradient_constant_zero():
    lab = np.ones((5, 5, 3)) * 7.0
    assert color_gradient(lab, 2, 2) == 0.0


def test_gradient_linear_ramp():
    lab = np.zeros((5, 6, 3))
    lab[..., 0] = np.arange(6)[None, :]
    assert color_gradient(lab, 2, 2) == pytest.approx(4.0)


def test_gradient_boundary_is_inf():
    lab = np.zeros((4, 4, 3))
    assert color_gradient(lab, 0, 2) == math.inf
    assert color_gradient(lab, 2, 3) == math.inf


def test_gradient_random_matches_oracle(rng):
    lab = rng.random((5, 5, 3)) * 100
    field = color_gradient_field(lab)
    for y in range(5):
        for x in range(5):
            want = _gradient_oracle(lab, x, y)
            assert color_gradient(lab, x, y) == pytest.approx(want, rel=1e-12)
            if math.isinf(want):
                assert math.isinf(field[y, x])
            else:
                assert field[y, x] == pytest.approx(want, rel=1e-12)


# ---------------------------------------------------------------------------
# initialization


def test_init_grid_positions_20x20_k100():
    lab = np.zeros((20, 20, 3))
    centers = init_centers(lab, 100)
    assert centers.shape == (100, 5)
    # h = 2, offset 1: columns 1,3,...,19 row-major
    expected = [(x, y) for y in range(1, 20, 2) for x in range(1, 20, 2)]
    got = [(int(c[0]), int(c[1])) for c in centers]
    assert got == expected


def test_init_constant_image_keeps_grid():
    lab = np.full((15, 12, 3), 3.0)
    k = 6
    centers = init_centers(lab, k)
    n = 15 * 12
    h = math.sqrt(n / k)
    off = math.floor(h / 2)
    expected = []
    ys = [int(math.floor(off + j * h + 0.5)) for j in range(15)]
    xs = [int(math.floor(off + i * h + 0.5)) for i in range(12)]
    ys = [y for y in ys if y <= 14]
    xs = [x for x in xs if x <= 11]
    for y in ys:
        for x in xs:
            expected.append((x, y))
    assert [(c[0], c[1]) for c in centers] == expected[:k]


def test_init_center_moves_off_bright_pixel():
    lab = np.zeros((9, 9, 3))
    # k=9 -> h=3, grid at (1,1),(4,1),... ; put a bright spike next to (4,4)
    lab[4, 5, 0] = 50.0
    centers = init_centers(lab, 9)
    grad = color_gradient_field(lab)
    # oracle: exhaustive evaluation of the 9 candidates around (4,4)
    cands = [(4 + dx, 4 + dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
    best = min(cands, key=lambda p: (grad[p[1], p[0]],))
    assert grad[4, 4] > grad[best[1], best[0]]
    center = centers[4]
    assert grad[int(center[1]), int(center[0])] == min(
        grad[y, x] for x, y in cands
    )


def test_init_appends_extra_centers_at_low_gradient():
    lab = np.zeros((8, 12, 3))
    k = 3  # h = sqrt(96/3) = 5.66 -> only 2 grid positions fit
    centers = init_centers(lab, k)
    assert centers.shape == (3, 5)
    positions = {(c[0], c[1]) for c in centers}
    assert len(positions) == 3


def test_init_rejects_bad_k():
    lab = np.zeros((4, 4, 3))
    with pytest.raises(ValueError):
        init_centers(lab, 0)
    with pytest.raises(ValueError):
        init_centers(lab, 17)


# ---------------------------------------------------------------------------
# run_assignment


def test_constant_image_reproduces_grid_tiling():
    lab = np.full((8, 8, 3), 2.0)
    params = SlicParams(k=4, m=10.0)
    res = run_assignment(lab, params)
    # h=4, centers at (2,2),(6,2),(2,6),(6,6); nearest-center tiling
    centers = init_centers(lab, 4)
    expected = np.empty((8, 8), dtype=int)
    for y in range(8):
        for x in range(8):
            d = [
                (x - centers[i, 0]) ** 2 + (y - centers[i, 1]) ** 2
                for i in range(4)
            ]
            expected[y, x] = int(np.argmin(d))
    assert np.array_equal(res.labels, expected)
    assert res.residual == 0.0


def test_constant_image_converges_by_second_iteration():
    lab = np.full((20, 20, 3), 1.0)
    res = run_assignment(lab, SlicParams(k=100, m=10.0))
    assert res.residual == 0.0
    # converged labels = nearest grid center, ties to the lower index
    centers = init_centers(lab, 100)
    xs, ys = np.arange(20), np.arange(20)
    d = (xs[None, :, None] - centers[None, None, :, 0]) ** 2 + (
        ys[:, None, None] - centers[None, None, :, 1]
    ) ** 2
    assert np.array_equal(res.labels, np.argmin(d, axis=2))


def test_two_region_image_splits_at_halves():
    rgbish = np.zeros((8, 12, 3))
    lab = rgbish.copy()
    lab[:, 6:, 0] = 100.0
    res = run_assignment(lab, SlicParams(k=2, m=10.0))
    expected = np.zeros((8, 12), dtype=int)
    expected[:, 6:] = 1
    assert np.array_equal(res.labels, expected)
    # oracle: plain 2-center k-means from the same initialization
    centers0 = init_centers(lab, 2)
    h = math.sqrt(96 / 2)
    oracle = _kmeans_oracle(lab, centers0, 10.0, h, iters=10)
    assert np.array_equal(res.labels, oracle)


def test_max_iters_zero_is_single_pass(rng):
    lab = rng.random((10, 12, 3)) * 60
    params = SlicParams(k=6, m=10.0, max_iters=0)
    res = run_assignment(lab, params)
    centers = init_centers(lab, 6)
    h = math.sqrt(120 / 6)
    labels = np.full((10, 12), -1, dtype=int)
    dists = np.full((10, 12), np.inf)
    _window_assign_oracle(lab, centers, h, 10.0, labels, dists)
    # fallback: unreached pixels go to the globally nearest center
    for y in range(10):
        for x in range(12):
            if labels[y, x] < 0:
                d = [
                    slic_distance_sq((x, y), lab[y, x], centers[i], h, 10.0)
                    for i in range(6)
                ]
                labels[y, x] = int(np.argmin(d))
    assert np.array_equal(res.labels, labels)
    assert np.array_equal(res.centers, centers)


def test_assignment_is_total(rng):
    for trial in range(5):
        lab = rng.random((13, 17, 3)) * 80
        k = int(rng.integers(1, 30))
        res = run_assignment(lab, SlicParams(k=k, m=10.0))
        assert res.labels.min() >= 0
        assert res.labels.max() < k
        assert np.all(np.isfinite(res.dists))


def test_windowed_matches_oracle_multi_iteration(rng):
    lab = rng.random((9, 11, 3)) * 50
    params = SlicParams(k=5, m=8.0, max_iters=3)
    res = run_assignment(lab, params)

    # replay the same loop with the oracle sweep
    centers = init_centers(lab, 5)
    h = math.sqrt(99 / 5)
    labels = np.full((9, 11), -1, dtype=int)
    dists = np.full((9, 11), np.inf)
    _window_assign_oracle(lab, centers, h, 8.0, labels, dists)
    for it in range(1, 4):
        new = centers.copy()
        residual = 0.0
        for i in range(5):
            ys, xs = np.nonzero(labels == i)
            if xs.size:
                upd = np.array(
                    [
                        xs.mean(),
                        ys.mean(),
                        lab[ys, xs, 0].mean(),
                        lab[ys, xs, 1].mean(),
                        lab[ys, xs, 2].mean(),
                    ]
                )
                residual += abs(upd[0] - new[i, 0]) + abs(upd[1] - new[i, 1])
                new[i] = upd
        centers = new
        if residual <= 0.0:
            break
        if it < 3:
            dists[:] = np.inf
            _window_assign_oracle(lab, centers, h, 8.0, labels, dists)
    for y in range(9):
        for x in range(11):
            if labels[y, x] < 0:
                d = [
                    slic_distance_sq((x, y), lab[y, x], centers[i], h, 8.0)
                    for i in range(5)
                ]
                labels[y, x] = int(np.argmin(d))
    assert np.array_equal(res.labels, labels)
    assert np.allclose(res.centers, centers, rtol=0, atol=1e-12)


# ---------------------------------------------------------------------------
# connected components and post-processing


def test_components_single_label():
    comps = connected_components(np.zeros((5, 8), dtype=int))
    assert len(comps) == 1
    assert comps[0].size == 40


def test_components_checkerboard():
    y, x = np.indices((4, 4))
    labels = (x + y) % 2
    comps = connected_components(labels)
    assert len(comps) == 16
    assert all(c.size == 1 for c in comps)


def test_components_rejects_unassigned():
    with pytest.raises(ValueError):
        connected_components(np.array([[0, -1], [0, 0]]))


def test_components_match_flood_fill(rng):
    for trial in range(10):
        labels = rng.integers(0, 3, size=(8, 8))
        comps = connected_components(labels)
        oracle, nc = _flood_fill_oracle(labels)
        assert len(comps) == nc
        for cid, pix in enumerate(comps):
            ys, xs = np.divmod(pix, 8)
            assert np.all(oracle[ys, xs] == cid)


def test_post_process_absorbs_small_component():
    labels = np.zeros((20, 20), dtype=int)
    labels[5:15, 5:15] = 1
    labels[0, 0:2] = 2  # 2-pixel blob, threshold N/(2k) = 400/200 = 2
    out = post_process(labels, 100)
    assert np.all(out[0, 0:2] == 0)
    assert np.array_equal(out == 1, labels == 1)


def test_post_process_fixed_point():
    labels = np.zeros((10, 10), dtype=int)
    labels[:, 5:] = 1
    out = post_process(labels, 2)
    assert np.array_equal(out, labels)


def test_post_process_single_label_unchanged():
    labels = np.full((6, 6), 3, dtype=int)
    assert np.array_equal(post_process(labels, 4), labels)


def test_post_process_enforces_size_bound(rng):
    for trial in range(10):
        labels = rng.integers(0, 6, size=(16, 16))
        k = 6
        out = post_process(labels, k)
        thr = 256 / (2 * k)
        comps = connected_components(out)
        assert all(c.size > thr for c in comps)
        assert np.unique(out).size <= np.unique(labels).size
        # merging only relabels: the map stays total
        assert out.min() >= 0


def test_post_process_merge_prefers_longest_shared_boundary():
    # component 2 touches label 0 on three sides and label 1 on one side
    labels = np.zeros((5, 5), dtype=int)
    labels[2, 2] = 2
    labels[2, 3:] = 1
    labels[3:, :] = 1
    out = post_process(labels, 12)  # threshold 25/24 ~ 1.04 -> singleton merges
    assert out[2, 2] == 0
