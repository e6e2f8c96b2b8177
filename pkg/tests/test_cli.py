"""End-to-end command-line interface checks."""
import json

import numpy as np
import pytest

from levelseg.cli import RunManifest, main
from levelseg.metrics import dice
from levelseg.volumes import load_mask, load_volume


@pytest.fixture(scope="module")
def phantom_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("phantom")
    assert main(["phantom", "easy", "--out", str(out)]) == 0
    return out


def test_phantom_outputs(phantom_dir):
    names = {p.name for p in phantom_dir.iterdir()}
    assert {"volume.json", "volume.raw", "truth_left.json", "truth_left.raw",
            "truth_right.json", "truth_right.raw", "spec.json"} <= names
    vol = load_volume(phantom_dir / "volume.json")
    assert vol.dims == (80, 80, 41)


def test_phantom_deterministic(phantom_dir, tmp_path):
    assert main(["phantom", "easy", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "volume.raw").read_bytes() == (phantom_dir / "volume.raw").read_bytes()


def test_phantom_bad_spec(tmp_path):
    bad = tmp_path / "spec.json"
    bad.write_text("{broken")
    assert main(["phantom", "--spec", str(bad), "--out", str(tmp_path / "out")]) == 1


def test_segment_end_to_end(phantom_dir, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main([
        "segment",
        "--input", str(phantom_dir / "volume.json"),
        "--seed-left", "22,40,20",
        "--seed-right", "57,40,20",
        "--model", "gmfd1",
        "--nmax", "250",
        "--sigma", "1.75",
        "--out", str(out),
    ])
    assert rc == 0
    for name in ("left.mask.json", "right.mask.json", "merged.mask.json",
                 "left.contours.csv", "right.contours.csv",
                 "manifest.json", "timing.json"):
        assert (out / name).exists(), name

    left = load_mask(out / "left.mask.json")
    truth = load_mask(phantom_dir / "truth_left.json")
    assert dice(left, truth) >= 0.90

    timing = json.loads((out / "timing.json").read_text())
    assert timing["sides"]["left"]["iterations"] == 250
    merged = load_mask(out / "merged.mask.json")
    right = load_mask(out / "right.mask.json")
    assert np.array_equal(merged.values, left.values | right.values)

    header = (out / "left.contours.csv").read_text().splitlines()[0]
    assert header == "slice,i,j"


def test_manifest_round_trip(phantom_dir, tmp_path):
    out = tmp_path / "run"
    main([
        "segment", "--input", str(phantom_dir / "volume.json"),
        "--seed-left", "22,40,20", "--seed-right", "57,40,20",
        "--model", "classical", "--nmax", "5", "--out", str(out),
    ])
    text = (out / "manifest.json").read_text()
    manifest = RunManifest.from_json(text)
    assert manifest.to_json() == text
    assert manifest.model == "classical"
    assert manifest.seed_left == (22, 40, 20)


def test_segment_gmfd2_logs_parabolic_dt(phantom_dir, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main([
        "segment", "--input", str(phantom_dir / "volume.json"),
        "--seed-left", "22,40,20", "--seed-right", "57,40,20",
        "--model", "gmfd2", "--nmax", "2", "--out", str(out),
    ])
    assert rc == 0
    assert "0.25*dx^2" in capsys.readouterr().err


def test_segment_missing_seed_is_usage_error(phantom_dir, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main([
            "segment", "--input", str(phantom_dir / "volume.json"),
            "--seed-left", "22,40,20",
            "--model", "gmfd1", "--nmax", "5", "--out", str(tmp_path / "x"),
        ])
    assert exc.value.code == 2


def test_segment_bad_seed_format(phantom_dir, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main([
            "segment", "--input", str(phantom_dir / "volume.json"),
            "--seed-left", "22,40", "--seed-right", "57,40,20",
            "--model", "gmfd1", "--nmax", "5", "--out", str(tmp_path / "x"),
        ])
    assert exc.value.code == 2


def test_segment_seed_outside_tissue(phantom_dir, tmp_path, capsys):
    rc = main([
        "segment", "--input", str(phantom_dir / "volume.json"),
        "--seed-left", "40,12,20",  # bone region
        "--seed-right", "57,40,20",
        "--model", "gmfd1", "--nmax", "5", "--out", str(tmp_path / "x"),
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_metrics_self(phantom_dir, capsys):
    rc = main(["metrics", str(phantom_dir / "truth_left.json"),
               str(phantom_dir / "truth_left.json")])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["dice"] == 1.0
    assert doc["hausdorff"] == 0.0


def test_metrics_disjoint_distances_error(phantom_dir, capsys):
    rc = main(["metrics", str(phantom_dir / "truth_left.json"),
               str(phantom_dir / "truth_right.json")])
    # disjoint but nonempty: valid report with dice 0
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["dice"] == 0.0
    assert doc["hausdorff"] > 0


def test_metrics_missing_file(tmp_path, capsys):
    rc = main(["metrics", str(tmp_path / "a.json"), str(tmp_path / "b.json")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
