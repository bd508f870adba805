import numpy as np
import pytest

from commute_embed.dataset import VoxelMask
from commute_embed.errors import InputError
from commute_embed.maps import gray_levels, label_volume, read_pgm, write_label_maps, write_pgm


def test_gray_levels():
    assert gray_levels(1).tolist() == [128]
    assert gray_levels(2).tolist() == [128, 255]
    assert gray_levels(4).tolist() == [128, 255, 208, 160]


def test_pgm_round_trip(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    write_pgm(img, tmp_path / "a.pgm")
    assert (tmp_path / "a.pgm").read_bytes()[:11] == b"P5\n4 3\n255\n"
    np.testing.assert_array_equal(read_pgm(tmp_path / "a.pgm"), img)


def test_label_maps(tmp_path):
    mask = VoxelMask(np.arange(3), np.array([[0, 0, 0], [1, 0, 0], [1, 1, 1]]), (2, 2, 2))
    paths = write_label_maps([0, 1, 2], mask, tmp_path, "c", 3)
    assert [p.name for p in paths] == ["c_slice000.pgm", "c_slice001.pgm"]
    np.testing.assert_array_equal(read_pgm(paths[0]), [[128, 255], [0, 0]])
    np.testing.assert_array_equal(read_pgm(paths[1]), [[0, 0], [0, 160]])


def test_label_volume_checks():
    mask = VoxelMask(np.array([0, 5]), np.array([[0, 0, 0], [1, 0, 0]]), (2, 1, 1))
    with pytest.raises(InputError):
        label_volume([0, 1], mask)


def test_read_pgm_rejects_ascii(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(InputError):
        read_pgm(tmp_path / "a.pgm")
