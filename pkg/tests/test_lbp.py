import numpy as np
import pytest

from ltm_texture import LbpVariant, extract_lbp, lbp_image
from ltm_texture._validation import ValidationError
from ltm_texture.lbp import KINDS

from oracles import lbp_patch_oracle


def test_constant_olbp_is_255():
    codes = lbp_image(np.full((6, 7), 42), "olbp")
    assert codes.shape == (4, 5)
    assert np.all(codes == 255)


def test_constant_cslbp_is_zero():
    assert np.all(lbp_image(np.full((5, 5), 42), LbpVariant("cslbp", 0.0)) == 0)


@pytest.mark.parametrize("kind", KINDS)
def test_single_patch_matches_scalar_formula(kind):
    rng = np.random.default_rng(sum(map(ord, kind)))
    for _ in range(50):
        patch = rng.integers(0, 256, (3, 3))
        assert lbp_image(patch, kind)[0, 0] == lbp_patch_oracle(patch, kind)


def test_cslbp_threshold():
    rng = np.random.default_rng(0)
    for _ in range(50):
        patch = rng.integers(0, 256, (3, 3))
        assert lbp_image(patch, LbpVariant("cslbp", 20.0))[0, 0] == lbp_patch_oracle(patch, "cslbp", 20.0)


def test_neighbour_order_east_first():
    patch = np.zeros((3, 3))
    patch[1, 2] = 10  # east only -> bit 0
    patch[1, 1] = 5
    assert lbp_image(patch, "olbp")[0, 0] == 1
    patch[1, 2] = 0
    patch[0, 1] = 10  # north -> bit 2
    assert lbp_image(patch, "olbp")[0, 0] == 4


@pytest.mark.parametrize("kind", KINDS)
def test_mass_and_range(kind):
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (17, 23))
    fv = extract_lbp(img, kind)
    assert fv.total == 15 * 21
    assert fv.bin_count == (256 if kind == "olbp" else 16)
    if kind != "olbp":
        assert lbp_image(img, kind).max() <= 15


def test_olbp_shift_invariant():
    rng = np.random.default_rng(4)
    img = rng.integers(0, 200, (20, 20))
    assert np.array_equal(lbp_image(img, "olbp"), lbp_image(img + 55, "olbp"))


def test_too_small_and_bad_variant():
    with pytest.raises(ValidationError):
        extract_lbp(np.zeros((2, 5)), "olbp")
    with pytest.raises(ValidationError):
        LbpVariant("ltp")
    with pytest.raises(ValidationError):
        LbpVariant("cslbp", -1.0)


def test_aliases():
    assert LbpVariant("CS-LDP").kind == "csldp"
    assert LbpVariant("XCS-LBP").display_name == "XCS-LBP"
