import csv
import re

import numpy as np
import pytest

from powerslic import image
from powerslic.cli import main
from powerslic.gbpd import load_diagram, rasterize


@pytest.fixture
def scene(tmp_path, rng):
    """A 24x24 two-region image with matching boundary ground truth."""
    rgb = np.empty((24, 24, 3))
    rgb[:, :12] = [0.25, 0.3, 0.35]
    rgb[:, 12:] = [0.7, 0.65, 0.6]
    rgb += rng.random((24, 24, 3)) * 0.02
    path = tmp_path / "scene.png"
    image.write_rgb(path, rgb)

    gt = np.zeros((24, 24), dtype=int)
    gt[:, 11:13] = 1
    image.write_labels(tmp_path / "scene.gt0.png", gt)
    gt2 = np.zeros((24, 24), dtype=int)
    gt2[:, 12] = 1
    image.write_labels(tmp_path / "scene.gt1.png", gt2)
    return path


# ---------------------------------------------------------------------------
# segment


def test_segment_writes_labels_and_reports(scene, tmp_path, capsys):
    out = tmp_path / "labels.png"
    code = main(
        ["segment", str(scene), "--method", "slic", "--k", "4", "--out", str(out)]
    )
    assert code == 0
    printed = capsys.readouterr().out
    assert re.match(r"k_out=\d+ time_ms=\d+\.\d{3}\n", printed)
    labels = image.read_labels(out)
    assert labels.shape == (24, 24)
    assert labels.max() < 4
    k_out = int(printed.split()[0].split("=")[1])
    assert np.unique(labels).size == k_out


def test_segment_power_writes_diagram(scene, tmp_path, capsys):
    out = tmp_path / "labels.png"
    dia = tmp_path / "cells.json"
    code = main(
        [
            "segment", str(scene),
            "--method", "power",
            "--k", "6",
            "--out", str(out),
            "--diagram", str(dia),
        ]
    )
    assert code == 0
    diagram = load_diagram(dia)
    assert (diagram.ref_width, diagram.ref_height) == (24, 24)
    k_out = int(capsys.readouterr().out.split()[0].split("=")[1])
    assert len(diagram.cells) == k_out


def test_segment_optimal_counts_match_supplies(scene, tmp_path):
    out = tmp_path / "labels.png"
    code = main(
        ["segment", str(scene), "--method", "optimal", "--k", "4", "--out", str(out)]
    )
    assert code == 0
    labels = image.read_labels(out)
    assert labels.min() >= 0 and labels.max() < 4


def test_segment_diagram_flag_rejected_for_slic(scene, tmp_path):
    code = main(
        [
            "segment", str(scene),
            "--method", "slic",
            "--k", "4",
            "--out", str(tmp_path / "x.png"),
            "--diagram", str(tmp_path / "d.json"),
        ]
    )
    assert code == 1


def test_segment_missing_input_is_io_error(tmp_path):
    code = main(
        [
            "segment", str(tmp_path / "nope.png"),
            "--method", "slic",
            "--k", "4",
            "--out", str(tmp_path / "x.png"),
        ]
    )
    assert code == 2


def test_segment_oversized_k_is_usage_error(scene, tmp_path):
    code = main(
        [
            "segment", str(scene),
            "--method", "slic",
            "--k", "100000",
            "--out", str(tmp_path / "x.png"),
        ]
    )
    assert code == 1


def test_unknown_method_is_usage_error(scene, tmp_path):
    code = main(
        [
            "segment", str(scene),
            "--method", "watershed",
            "--k", "4",
            "--out", str(tmp_path / "x.png"),
        ]
    )
    assert code == 1


# ---------------------------------------------------------------------------
# noise


def test_noise_zero_variance_preserves_pixels(scene, tmp_path):
    out = tmp_path / "noisy.png"
    assert main(["noise", str(scene), "--sigma2", "0", "--out", str(out)]) == 0
    assert np.array_equal(image.read_rgb(scene), image.read_rgb(out))


def test_noise_fixed_seed_is_byte_identical(scene, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    for out in (a, b):
        code = main(
            ["noise", str(scene), "--sigma2", "0.01", "--seed", "7", "--out", str(out)]
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_noise_seeds_differ(scene, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    main(["noise", str(scene), "--sigma2", "0.01", "--seed", "1", "--out", str(a)])
    main(["noise", str(scene), "--sigma2", "0.01", "--seed", "2", "--out", str(b)])
    assert a.read_bytes() != b.read_bytes()


def test_noise_high_variance_touches_most_pixels(tmp_path, rng):
    rgb = rng.random((100, 100, 3)) * 0.4 + 0.3
    src = tmp_path / "flat.png"
    image.write_rgb(src, rgb)
    out = tmp_path / "noisy.png"
    assert main(["noise", str(src), "--sigma2", "0.3", "--out", str(out)]) == 0
    before = image.read_rgb(src)
    after = image.read_rgb(out)
    changed = np.any(before != after, axis=2).mean()
    assert changed > 0.99


# ---------------------------------------------------------------------------
# eval


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_eval_row_count_and_header(scene, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        [
            "eval", str(scene.parent),
            "--methods", "slic,power",
            "--k", "4",
            "--csv", str(out),
        ]
    )
    assert code == 0
    raw = out.read_text().splitlines()
    assert raw[0] == "image,method,k,k_out,sigma2,seed,br,bp,co,runtime_ms"
    rows = _read_csv(out)
    assert len(rows) == 3
    for row in rows[1:]:
        assert row[0] == "scene"
        assert row[1] in ("power", "slic")
        assert int(row[3]) <= 4
        assert 0.0 <= float(row[6]) <= 1.0
        assert 0.0 <= float(row[7]) <= 1.0
        assert float(row[8]) > 0
        assert float(row[9]) > 0
    assert [r[1] for r in rows[1:]] == ["power", "slic"]


def test_eval_is_deterministic_across_thread_counts(scene, tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("POWERSLIC_THREADS", threads)
        out = tmp_path / f"sweep{threads}.csv"
        code = main(
            [
                "eval", str(scene.parent),
                "--methods", "slic,power,optimal",
                "--k", "3,5",
                "--sigma2", "0,0.01",
                "--csv", str(out),
            ]
        )
        assert code == 0
        outs.append([row[:9] for row in _read_csv(out)])
    assert outs[0] == outs[1]


def test_eval_empty_directory_is_io_error(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["eval", str(empty), "--k", "4", "--csv", str(tmp_path / "x.csv")])
    assert code == 2


def test_eval_unknown_method_is_usage_error(scene, tmp_path):
    code = main(
        [
            "eval", str(scene.parent),
            "--methods", "slic,magic",
            "--k", "4",
            "--csv", str(tmp_path / "x.csv"),
        ]
    )
    assert code == 1


def test_eval_bad_thread_env_is_usage_error(scene, tmp_path, monkeypatch):
    monkeypatch.setenv("POWERSLIC_THREADS", "many")
    code = main(
        [
            "eval", str(scene.parent),
            "--methods", "slic",
            "--k", "4,8",
            "--csv", str(tmp_path / "x.csv"),
        ]
    )
    assert code == 1


def test_eval_rows_sorted(scene, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        [
            "eval", str(scene.parent),
            "--methods", "power,slic",
            "--k", "6,3",
            "--sigma2", "0.01,0",
            "--csv", str(out),
        ]
    )
    assert code == 0
    rows = _read_csv(out)[1:]
    keys = [(r[0], r[1], int(r[2]), float(r[4])) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 8


# ---------------------------------------------------------------------------
# upscale


def _write_diagram(scene, tmp_path):
    dia = tmp_path / "cells.json"
    main(
        [
            "segment", str(scene),
            "--method", "power",
            "--k", "4",
            "--out", str(tmp_path / "seg.png"),
            "--diagram", str(dia),
        ]
    )
    return dia


def test_upscale_factor_one_matches_stored_raster(scene, tmp_path):
    dia = _write_diagram(scene, tmp_path)
    out = tmp_path / "up1.png"
    assert main(["upscale", str(dia), "--factor", "1", "--out", str(out)]) == 0
    labels = image.read_labels(out)
    assert np.array_equal(labels, rasterize(load_diagram(dia), 24, 24))


def test_upscale_factor_two_downsamples_back(scene, tmp_path):
    dia = _write_diagram(scene, tmp_path)
    up1 = tmp_path / "up1.png"
    up2 = tmp_path / "up2.png"
    main(["upscale", str(dia), "--factor", "1", "--out", str(up1)])
    main(["upscale", str(dia), "--factor", "2", "--out", str(up2)])
    high = image.read_labels(up2)
    assert high.shape == (48, 48)
    assert np.array_equal(high[::2, ::2], image.read_labels(up1))


def test_upscale_one_cell_is_constant(tmp_path):
    from powerslic.gbpd import Diagram, DiagramCell, save_diagram

    d = Diagram(
        cells=(DiagramCell(site=np.array([2.0, 2.0]), matrix=np.eye(2), weight=0.0),),
        ref_width=6,
        ref_height=4,
    )
    dia = tmp_path / "one.json"
    save_diagram(d, dia)
    out = tmp_path / "up.png"
    assert main(["upscale", str(dia), "--factor", "2.5", "--out", str(out)]) == 0
    labels = image.read_labels(out)
    assert labels.shape == (10, 15)
    assert np.all(labels == 0)


def test_upscale_rejects_bad_factor(scene, tmp_path):
    dia = _write_diagram(scene, tmp_path)
    code = main(["upscale", str(dia), "--factor", "0", "--out", str(tmp_path / "x.png")])
    assert code == 1


def test_upscale_malformed_diagram_is_io_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["upscale", str(bad), "--factor", "2", "--out", str(tmp_path / "x.png")])
    assert code == 2


def test_help_exits_clean():
    assert main(["--help"]) == 0
