"""
Arithmetic in GF(2^8) with the Rijndael reduction polynomial x^8+x^4+x^3+x+1.
✓ Scalar field operations (add, xtime, mul, inverse) on ints 0-255
✓ S-box and inverse S-box computed from the field inverse + affine map
✓ Cached numpy multiplication tables for the vectorised cipher core
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np

FieldElement = int

REDUCTION_POLY = 0x11B
AFFINE_CONSTANT = 0x63

# spot checks applied to every freshly built S-box
_KNOWN_SBOX_ENTRIES = {0x00: 0x63, 0x53: 0xED}


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a ^ b


def xtime(a: FieldElement) -> FieldElement:
    """Multiply by x, reducing when the degree-7 coefficient overflows."""
    a <<= 1
    if a & 0x100:
        a ^= REDUCTION_POLY
    return a & 0xFF


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    """Shift-and-add multiplication over xtime."""
    product = 0
    while b:
        if b & 1:
            product ^= a
        a = xtime(a)
        b >>= 1
    return product


def gf_pow(a: FieldElement, exponent: int) -> FieldElement:
    result = 1
    while exponent:
        if exponent & 1:
            result = gf_mul(result, a)
        a = gf_mul(a, a)
        exponent >>= 1
    return result


def gf_inv(a: FieldElement) -> FieldElement:
    """Multiplicative inverse; inv(0) is 0 by convention so the S-box is total."""
    if a == 0:
        return 0
    # a^254 = a^-1 since the multiplicative group has order 255
    return gf_pow(a, 254)


def _rotl8(b: int, shift: int) -> int:
    return ((b << shift) | (b >> (8 - shift))) & 0xFF


def affine_transform(b: FieldElement) -> FieldElement:
    return b ^ _rotl8(b, 1) ^ _rotl8(b, 2) ^ _rotl8(b, 3) ^ _rotl8(b, 4) ^ AFFINE_CONSTANT


class SboxTables(NamedTuple):
    forward: np.ndarray
    inverse: np.ndarray


@lru_cache(maxsize=None)
def build_sbox() -> SboxTables:
    forward = np.array([affine_transform(gf_inv(x)) for x in range(256)], dtype=np.uint8)
    inverse = np.empty(256, dtype=np.uint8)
    inverse[forward] = np.arange(256, dtype=np.uint8)

    for x, expected in _KNOWN_SBOX_ENTRIES.items():
        if forward[x] != expected:
            raise RuntimeError(f"S-box self-check failed at 0x{x:02x}")

    forward.setflags(write=False)
    inverse.setflags(write=False)
    return SboxTables(forward=forward, inverse=inverse)


@lru_cache(maxsize=None)
def mul_table(c: FieldElement) -> np.ndarray:
    """Row c of the multiplication table: mul_table(c)[x] == gf_mul(x, c)."""
    table = np.array([gf_mul(x, c) for x in range(256)], dtype=np.uint8)
    table.setflags(write=False)
    return table
