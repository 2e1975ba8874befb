import struct

import numpy as np
import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from cloudvault.aes_core import (
    KeySize,
    add_round_key,
    bytes_to_state,
    decrypt_block,
    decrypt_blocks,
    encrypt_block,
    encrypt_blocks,
    encrypt_words,
    expand_key,
    inv_mix_columns,
    inv_shift_rows,
    inv_sub_bytes,
    mix_columns,
    round_constants,
    shift_rows,
    state_to_bytes,
    sub_bytes,
)
from cloudvault.errors import BlockSizeError, KeySizeError

PLAINTEXT = bytes.fromhex("00112233445566778899aabbccddeeff")
KNOWN_ANSWERS = [
    (bytes(range(16)), "69c4e0d86a7b0430d8cdb78070b4c55a"),
    (bytes(range(24)), "dda97ca4864cdfe06eaf70a0ec0d7191"),
    (bytes(range(32)), "8ea2b7ca516745bfeafc49904b496089"),
]
KEY_LENGTHS = (16, 24, 32)


def oracle_ecb(key: bytes, data: bytes) -> bytes:
    encryptor = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return encryptor.update(data) + encryptor.finalize()


@pytest.fixture
def np_rng():
    return np.random.default_rng(2024)


def random_states(np_rng, n=1000):
    return np_rng.integers(0, 256, size=(n, 4, 4), dtype=np.uint8)


# ---------- state and schedule --------------------------------------------- #
def test_state_is_column_major():
    s = bytes_to_state(bytes(range(16)))
    assert s[1][0] == 1
    assert s[0][1] == 4
    assert state_to_bytes(s) == bytes(range(16))


def test_block_size_enforced():
    with pytest.raises(BlockSizeError):
        bytes_to_state(bytes(15))
    with pytest.raises(BlockSizeError):
        encrypt_blocks(bytes(17), expand_key(bytes(16)))


@pytest.mark.parametrize("length,rounds", [(16, 11), (24, 13), (32, 15)])
def test_round_key_counts(length, rounds):
    ks = expand_key(bytes(length))
    assert len(ks) == rounds
    assert all(len(rk) == 16 for rk in ks.round_keys)


@pytest.mark.parametrize("length", [0, 15, 17, 31, 33])
def test_bad_key_lengths(length):
    with pytest.raises(KeySizeError):
        expand_key(bytes(length))


def test_explicit_size_must_match():
    with pytest.raises(KeySizeError):
        expand_key(bytes(16), KeySize.AES256)
    assert KeySize.for_key(bytes(24)) is KeySize.AES192


def test_round_constants():
    assert round_constants(10) == [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]


def test_aes128_schedule_vector():
    ks = expand_key(bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"))
    assert ks.round_keys[1][:4] == bytes.fromhex("a0fafe17")
    assert ks.round_keys[-1] == bytes.fromhex("d014f9a8c9ee2589e13f0cc8b6630ca6")


# ---------- transforms ----------------------------------------------------- #
def test_mix_columns_vector():
    s = bytes_to_state(bytes.fromhex("d4bf5d30") + bytes(12))
    assert state_to_bytes(mix_columns(s))[:4] == bytes.fromhex("046681e5")


def test_transform_inverse_laws(np_rng):
    s = random_states(np_rng)
    rk = random_states(np_rng, 1)[0]
    assert np.array_equal(inv_sub_bytes(sub_bytes(s)), s)
    assert np.array_equal(inv_shift_rows(shift_rows(s)), s)
    assert np.array_equal(inv_mix_columns(mix_columns(s)), s)
    assert np.array_equal(add_round_key(add_round_key(s, rk), rk), s)


def test_shift_rows_rotates_row_r_by_r():
    s = bytes_to_state(bytes(range(16)))
    shifted = shift_rows(s)
    for r in range(4):
        assert shifted[r].tolist() == np.roll(s[r], -r).tolist()


# ---------- cipher --------------------------------------------------------- #
@pytest.mark.parametrize("key,expected", KNOWN_ANSWERS)
def test_known_answers(key, expected):
    ks = expand_key(key)
    ct = encrypt_block(PLAINTEXT, ks)
    assert ct.hex() == expected
    assert decrypt_block(ct, ks) == PLAINTEXT


@pytest.mark.parametrize("length", KEY_LENGTHS)
def test_matches_independent_implementation(length, np_rng):
    # 10^4 (key, block) pairs overall: 3 sizes x 34 keys x 100 blocks
    for _ in range(34):
        key = np_rng.bytes(length)
        data = np_rng.bytes(16 * 100)
        assert encrypt_blocks(data, expand_key(key)) == oracle_ecb(key, data)


@pytest.mark.parametrize("length", KEY_LENGTHS)
def test_single_and_batched_agree(length, np_rng):
    ks = expand_key(np_rng.bytes(length))
    data = np_rng.bytes(16 * 8)
    singles = b"".join(encrypt_block(data[i:i + 16], ks) for i in range(0, len(data), 16))
    assert encrypt_blocks(data, ks) == singles


@pytest.mark.parametrize("length", KEY_LENGTHS)
def test_decrypt_inverts_encrypt(length, np_rng):
    ks = expand_key(np_rng.bytes(length))
    data = np_rng.bytes(16 * 1000)
    assert decrypt_blocks(encrypt_blocks(data, ks), ks) == data


@pytest.mark.parametrize("length", KEY_LENGTHS)
def test_word_path_matches_block_path(length, np_rng):
    ks = expand_key(np_rng.bytes(length))
    for _ in range(200):
        block = np_rng.bytes(16)
        words = encrypt_words(*struct.unpack(">4I", block), ks)
        assert struct.pack(">4I", *words) == encrypt_block(block, ks)


def test_word_path_known_answers():
    for key, expected in KNOWN_ANSWERS:
        words = encrypt_words(*struct.unpack(">4I", PLAINTEXT), expand_key(key))
        assert struct.pack(">4I", *words).hex() == expected


def test_encryption_is_injective(np_rng):
    ks = expand_key(np_rng.bytes(32))
    blocks = {np_rng.bytes(16) for _ in range(10_000)}
    data = b"".join(blocks)
    ct = encrypt_blocks(data, ks)
    assert len({ct[i:i + 16] for i in range(0, len(ct), 16)}) == len(blocks)


def test_empty_batch():
    ks = expand_key(bytes(16))
    assert encrypt_blocks(b"", ks) == b""
    assert decrypt_blocks(b"", ks) == b""


def flipped_fraction(a: bytes, b: bytes) -> float:
    diff = np.unpackbits(np.frombuffer(a, np.uint8) ^ np.frombuffer(b, np.uint8))
    return diff.sum() / diff.size


def test_plaintext_avalanche(np_rng):
    ks = expand_key(np_rng.bytes(16))
    base = bytearray(np_rng.bytes(16 * 1000))
    flipped = bytearray(base)
    for i in range(1000):
        bit = int(np_rng.integers(128))
        flipped[16 * i + bit // 8] ^= 0x80 >> (bit % 8)
    fraction = flipped_fraction(encrypt_blocks(bytes(base), ks), encrypt_blocks(bytes(flipped), ks))
    assert 0.45 <= fraction <= 0.55


def test_key_avalanche(np_rng):
    block = np_rng.bytes(16)
    fractions = []
    for _ in range(1000):
        key = bytearray(np_rng.bytes(16))
        reference = encrypt_block(block, expand_key(bytes(key)))
        bit = int(np_rng.integers(128))
        key[bit // 8] ^= 0x80 >> (bit % 8)
        fractions.append(flipped_fraction(reference, encrypt_block(block, expand_key(bytes(key)))))
    assert 0.45 <= float(np.mean(fractions)) <= 0.55
