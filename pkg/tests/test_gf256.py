import numpy as np
import pytest

from cloudvault.gf256 import (
    REDUCTION_POLY,
    affine_transform,
    build_sbox,
    gf_add,
    gf_inv,
    gf_mul,
    gf_pow,
    mul_table,
    xtime,
)


def carryless_mul(a: int, b: int) -> int:
    product = 0
    for i in range(8):
        if b >> i & 1:
            product ^= a << i
    for bit in range(14, 7, -1):
        if product >> bit & 1:
            product ^= REDUCTION_POLY << (bit - 8)
    return product


def test_xtime_chain():
    values = [0x57]
    for _ in range(4):
        values.append(xtime(values[-1]))
    assert values == [0x57, 0xAE, 0x47, 0x8E, 0x07]


def test_known_products():
    assert gf_mul(0x57, 0x83) == 0xC1
    assert gf_mul(0x57, 0x13) == 0xFE
    assert gf_add(0x57, 0x83) == 0xD4


def test_mul_matches_carryless_reference_exhaustively():
    for a in range(256):
        for b in range(256):
            assert gf_mul(a, b) == carryless_mul(a, b)


def test_xtime_is_mul_by_two():
    assert all(xtime(a) == gf_mul(a, 2) for a in range(256))


def test_every_nonzero_element_has_inverse():
    for a in range(1, 256):
        assert gf_mul(a, gf_inv(a)) == 1
    assert gf_inv(0) == 0


def test_pow_group_order():
    assert all(gf_pow(a, 255) == 1 for a in range(1, 256))


def test_sbox_known_entries_and_bijection():
    tables = build_sbox()
    assert tables.forward[0x00] == 0x63
    assert tables.forward[0x53] == 0xED
    assert tables.inverse[0xED] == 0x53
    assert sorted(tables.forward.tolist()) == list(range(256))
    assert np.array_equal(tables.inverse[tables.forward], np.arange(256))


def test_sbox_is_affine_of_inverse():
    forward = build_sbox().forward
    assert all(forward[x] == affine_transform(gf_inv(x)) for x in range(256))


def test_tables_are_read_only():
    with pytest.raises(ValueError):
        build_sbox().forward[0] = 0
    with pytest.raises(ValueError):
        mul_table(3)[0] = 1


@pytest.mark.parametrize("c", [0x02, 0x03, 0x09, 0x0B, 0x0D, 0x0E])
def test_mul_table_rows(c):
    table = mul_table(c)
    assert all(int(table[x]) == gf_mul(x, c) for x in range(256))
