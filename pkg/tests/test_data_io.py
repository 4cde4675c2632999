# tests/test_data_io.py

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from data.datasets import load_csv, load_problem, synth
from data.model_file import TrainingMetadata, load_model, read_model_file, save_model
from data.writers import FIT_PATH_COLUMNS, HISTORY_COLUMNS, write_breakpoints, write_fit_path, write_history, write_report
from errors import DataFormatError, InfeasibleProblemError, ModelFileError
from network.model import forward
from network.training import EpochRecord
from shared_types import DeepSplineNet, Layer, LinearSpline

EXAMPLE_MODEL = Path(__file__).resolve().parent.parent / "docs" / "model_example.json"


def write_lines(path, *lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def random_net(rng, arch):
    layers = []
    for fan_in, width in zip(arch[:-1], arch[1:]):
        acts = tuple(
            LinearSpline(
                b1=rng.standard_normal(),
                b2=rng.standard_normal(),
                knots=tuple(np.sort(rng.uniform(-2, 2, 3))),
                coeffs=tuple(rng.standard_normal(3)),
            )
            for _ in range(width)
        )
        w = rng.standard_normal((width, fan_in))
        layers.append(Layer(weights=w / np.linalg.norm(w, axis=1)[:, None], activations=acts))
    return DeepSplineNet(layers)


# --------------------------
# CSV ingestion
# --------------------------

def test_load_csv_with_header(tmp_path):
    path = write_lines(tmp_path / "d.csv", "x1,x2,y", "0.5,1,2", "1.5,-1,0")
    data = load_csv(path, 2, 1)
    assert data.names == ["x1", "x2", "y"]
    assert data.inputs.shape == (2, 2)
    assert data.targets[:, 0].tolist() == [2.0, 0.0]


def test_load_csv_without_header(tmp_path):
    path = write_lines(tmp_path / "d.csv", "0,1", "1,3")
    data = load_csv(path, 1, 1)
    assert data.names is None
    assert len(data) == 2


def test_bad_cell_reports_line(tmp_path):
    path = write_lines(tmp_path / "d.csv", "x,y", "0,1", "1,abc")
    with pytest.raises(DataFormatError) as info:
        load_csv(path, 1, 1)
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_ragged_row(tmp_path):
    path = write_lines(tmp_path / "d.csv", "0,1", "1,2,3")
    with pytest.raises(DataFormatError) as info:
        load_csv(path, 1, 1)
    assert info.value.line == 2


def test_non_finite_value(tmp_path):
    path = write_lines(tmp_path / "d.csv", "x,y", "0,nan")
    with pytest.raises(DataFormatError):
        load_csv(path, 1, 1)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_csv(tmp_path / "nope.csv", 1, 1)


def test_header_only_file(tmp_path):
    path = write_lines(tmp_path / "d.csv", "x,y")
    with pytest.raises(DataFormatError):
        load_csv(path, 1, 1)


def test_load_problem_merges_and_sorts(tmp_path):
    path = write_lines(tmp_path / "p.csv", "x,y", "2,1", "0,0", "2,1")
    p = load_problem(path)
    assert p.x.tolist() == [0.0, 2.0]


def test_load_problem_conflicting_duplicates(tmp_path):
    path = write_lines(tmp_path / "p.csv", "0,0", "0,1")
    with pytest.raises(InfeasibleProblemError):
        load_problem(path)


# --------------------------
# Synthetic tasks
# --------------------------

def test_synth_hinge_values():
    data = synth("hinge", 5)
    assert data.inputs[:, 0].tolist() == [-1.0, 0.0, 1.0, 2.0, 3.0]
    assert data.targets[:, 0].tolist() == [3.0, 2.0, 1.0, 2.0, 3.0]


def test_synth_sine_grid():
    data = synth("sine", 5)
    assert data.inputs[1, 0] == 0.25
    assert data.targets[1, 0] == pytest.approx(1.0)


def test_synth_is_seeded():
    a = synth("spiral2d", 50, noise_sd=0.05, seed=4)
    b = synth("spiral2d", 50, noise_sd=0.05, seed=4)
    assert np.array_equal(a.inputs, b.inputs)
    assert set(np.unique(a.targets)) == {-1.0, 1.0}
    assert not np.array_equal(a.inputs, synth("spiral2d", 50, noise_sd=0.05, seed=5).inputs)


def test_synth_step_and_noise():
    clean = synth("step", 11)
    assert clean.targets[:, 0].tolist() == [0.0] * 6 + [1.0] * 5
    noisy = synth("step", 11, noise_sd=0.1, seed=1)
    assert not np.array_equal(noisy.targets, clean.targets)


@pytest.mark.parametrize("kind,n", [("circle", 10), ("sine", 0)])
def test_synth_rejects_bad_arguments(kind, n):
    with pytest.raises(ValueError):
        synth(kind, n)


# --------------------------
# Model files
# --------------------------

def test_model_round_trip_is_exact(rng, tmp_path):
    net = random_net(rng, [3, 4, 2])
    path = tmp_path / "m.json"
    save_model(net, path, TrainingMetadata(lam=0.01, seed=7))
    back = load_model(path)
    for a, b in zip(net.layers, back.layers):
        assert np.array_equal(a.weights, b.weights)
        assert a.activations == b.activations
        assert a.normalized == b.normalized
    x = rng.uniform(-1, 1, (50, 3))
    assert np.array_equal(forward(back, x)[0], forward(net, x)[0])
    meta = read_model_file(path).metadata
    assert (meta.lam, meta.seed, meta.rng) == (0.01, 7, "PCG64")


def test_unknown_schema_version(rng, tmp_path):
    path = tmp_path / "m.json"
    save_model(random_net(rng, [1, 2, 1]), path)
    raw = json.loads(path.read_text())
    raw["schema_version"] = 99
    path.write_text(json.dumps(raw))
    with pytest.raises(ModelFileError):
        load_model(path)


def test_malformed_json(tmp_path):
    path = write_lines(tmp_path / "m.json", '{"schema_version": 1,')
    with pytest.raises(ModelFileError):
        load_model(path)


def test_schema_violation(tmp_path):
    path = write_lines(tmp_path / "m.json", json.dumps({"schema_version": 1, "nodes": [1, 1]}))
    with pytest.raises(ModelFileError):
        load_model(path)


def test_nodes_must_match_layers(rng, tmp_path):
    path = tmp_path / "m.json"
    save_model(random_net(rng, [1, 2, 1]), path)
    raw = json.loads(path.read_text())
    raw["nodes"] = [1, 3, 1]
    path.write_text(json.dumps(raw))
    with pytest.raises(ModelFileError):
        load_model(path)


def test_example_model_computes_hinge():
    net = load_model(EXAMPLE_MODEL)
    xs = np.linspace(-3, 5, 81)[:, None]
    y, _ = forward(net, xs)
    assert np.allclose(y, np.maximum(xs, 2 - xs), atol=1e-12)


# --------------------------
# Writers
# --------------------------

def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_write_history(tmp_path):
    history = [EpochRecord(0, 1.5, 0.0, 2.0, 3.5, 4), EpochRecord(1, 0.1, 0.0, 1.0, 1.1, 2)]
    write_history(history, tmp_path / "h.csv")
    rows = read_csv(tmp_path / "h.csv")
    assert rows[0] == HISTORY_COLUMNS
    assert rows[1] == ["0", "1.5", "0.0", "2.0", "3.5", "4"]
    assert float(rows[2][4]) == 1.1


def test_write_breakpoints(tmp_path):
    s = LinearSpline(knots=(0.0, 1.0), coeffs=(1.0, -2.0))
    write_breakpoints(s, -1.0, 2.0, tmp_path / "b.csv")
    rows = read_csv(tmp_path / "b.csv")
    assert rows[0] == ["x", "f"]
    assert [float(r[0]) for r in rows[1:]] == [-1.0, 0.0, 1.0, 2.0]
    assert [float(r[1]) for r in rows[1:]] == [0.0, 0.0, 1.0, 0.0]


def test_write_fit_path(tmp_path):
    write_fit_path([{"lambda": 0.1, "rss": 2.0, "tv2": 1.0, "knots": 3}], tmp_path / "f.csv")
    rows = read_csv(tmp_path / "f.csv")
    assert rows == [FIT_PATH_COLUMNS, ["0.1", "2.0", "1.0", "3"]]


def test_write_report(tmp_path):
    write_report({"tv2": 2.0, "knot_count": 1}, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == {"knot_count": 1, "tv2": 2.0}
