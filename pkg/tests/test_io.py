import numpy as np
import pytest

from zygosity import io
from zygosity.models.dataset import PairedDataset
from zygosity.pairing import Parcellation


@pytest.mark.parametrize("name", ["m.txt", "m.bin", "m.f64"])
def test_matrix_round_trip(tmp_path, rng, name):
    M = rng.normal(size=(7, 4))
    path = tmp_path / name
    io.write_matrix(path, M)
    np.testing.assert_array_equal(io.read_matrix(path), M)
    assert io.read_matrix_header(path) == (7, 4)


def test_binary_layout(tmp_path):
    path = tmp_path / "m.bin"
    io.write_matrix(path, np.array([[1.0, 2.0], [3.0, 4.0]]))
    raw = path.read_bytes()
    assert len(raw) == 16 + 4 * 8
    assert np.frombuffer(raw[:16], "<u8").tolist() == [2, 2]
    assert np.frombuffer(raw[16:], "<f8").tolist() == [1.0, 2.0, 3.0, 4.0]


def test_memmap_read(tmp_path, rng):
    M = rng.normal(size=(5, 3))
    path = tmp_path / "m.bin"
    io.write_matrix(path, M)
    mm = io.read_matrix(path, mmap=True)
    assert isinstance(mm, np.memmap)
    np.testing.assert_array_equal(np.asarray(mm), M)


def test_explicit_binary_flag(tmp_path, rng):
    M = rng.normal(size=(2, 2))
    path = tmp_path / "m.dat"
    io.write_matrix(path, M, binary=True)
    np.testing.assert_array_equal(io.read_matrix(path, binary=True), M)


@pytest.mark.parametrize("text", ["3\n1 2 3\n", "2 2\n1 2 3\n", "a b\n", "2 1\n1 x\n"])
def test_bad_text_matrix(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(io.FormatError):
        io.read_matrix(path)


def test_truncated_binary(tmp_path):
    path = tmp_path / "m.bin"
    io.write_matrix(path, np.ones((3, 3)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(io.FormatError):
        io.read_matrix(path)


def test_parcellation_round_trip(tmp_path):
    parc = Parcellation.from_labels([1, 2, 2, 3])
    path = tmp_path / "parc.txt"
    io.write_parcellation(path, parc)
    back = io.read_parcellation(path)
    np.testing.assert_array_equal(back.labels, parc.labels)
    assert back.n_regions == 3


def test_parcellation_errors(tmp_path):
    path = tmp_path / "parc.txt"
    path.write_text("1\nfoo\n")
    with pytest.raises(io.FormatError):
        io.read_parcellation(path)
    path.write_text("1\n3\n")
    with pytest.raises(ValueError):
        io.read_parcellation(path)


def test_features_round_trip(tmp_path, rng):
    data = PairedDataset(rng.uniform(-1, 1, (6, 3)), [1, 0, 1, 1, 0, 0])
    path = tmp_path / "f.csv"
    io.write_features(path, data)
    assert path.read_text().splitlines()[0] == "region_1,region_2,region_3,label"
    back = io.read_features(path)
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.T, data.T)


def test_features_without_header(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("0.5,0.25,1\n-0.1,0.3,0\n")
    data = io.read_features(path)
    assert data.X.shape == (2, 2)
    np.testing.assert_array_equal(data.T, [1, 0])


def test_append_feature_rows(tmp_path):
    path = tmp_path / "f.csv"
    io.append_feature_row(path, [0.1, 0.2], 1)
    io.append_feature_row(path, [0.3, 0.4], 0)
    lines = path.read_text().splitlines()
    assert lines[0] == "region_1,region_2,label" and len(lines) == 3
    assert io.read_features(path).X.shape == (2, 2)


@pytest.mark.parametrize("text", ["a,label\n", "0.1,2\n", "0.1,1\n0.2\n", "1.5,1\n"])
def test_bad_features(tmp_path, text):
    path = tmp_path / "f.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        io.read_features(path)
