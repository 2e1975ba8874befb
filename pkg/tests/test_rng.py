import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from cloudvault.errors import ParameterError, ReseedRequiredError, SeedingError
from cloudvault.rng import (
    SEED_LENGTH,
    DrbgState,
    FixedEntropy,
    OsEntropy,
    expand_seed,
    from_seed_hex,
    generate,
    seed,
)

ENTROPY = bytes(range(48))


def test_output_is_aes256_ctr_keystream():
    encryptor = Cipher(algorithms.AES(ENTROPY[:32]), modes.CTR(ENTROPY[32:48])).encryptor()
    expected = encryptor.update(bytes(64)) + encryptor.finalize()
    assert generate(seed(ENTROPY), 64) == expected


def test_same_seed_same_stream():
    assert seed(ENTROPY).generate(100) == seed(ENTROPY).generate(100)
    assert seed(ENTROPY).generate(32) != seed(bytes(48)).generate(32)


def test_counter_advances_per_block():
    state = seed(ENTROPY)
    start = state.counter
    first = state.generate(5)
    second = state.generate(5)
    assert first != second
    assert state.counter == start + 2
    assert state.bytes_emitted == 10
    assert state.blocks_generated == 2


def test_block_aligned_requests_concatenate():
    a, b = seed(ENTROPY), seed(ENTROPY)
    assert a.generate(16) + a.generate(16) == b.generate(32)


def test_zero_and_negative_requests():
    state = seed(ENTROPY)
    assert state.generate(0) == b""
    with pytest.raises(ParameterError):
        state.generate(-1)


def test_reseed_interval_enforced():
    state = DrbgState(ENTROPY, reseed_interval=4)
    state.generate(64)
    with pytest.raises(ReseedRequiredError):
        state.generate(1)
    state.reseed(bytes(48))
    assert state.epoch == 1
    assert len(state.generate(16)) == 16


def test_short_entropy_rejected():
    with pytest.raises(SeedingError):
        seed(bytes(47))


def test_fixed_entropy_replays_then_runs_dry():
    source = FixedEntropy(ENTROPY)
    state = DrbgState.from_source(source)
    assert state.key == ENTROPY[:32]
    with pytest.raises(SeedingError):
        source.read(1)


def test_os_entropy_states_differ():
    a = DrbgState.from_source(OsEntropy())
    b = DrbgState.from_source(OsEntropy())
    assert a.generate(32) != b.generate(32)


def test_expand_seed_binds_label():
    assert len(expand_seed(b"\x01")) == SEED_LENGTH
    assert expand_seed(b"\x01", b"a") == expand_seed(b"\x01", b"a")
    assert expand_seed(b"\x01", b"a") != expand_seed(b"\x01", b"b")
    assert expand_seed(b"\x01", b"a") != expand_seed(b"\x02", b"a")
    with pytest.raises(SeedingError):
        expand_seed(b"")


def test_from_seed_hex():
    assert from_seed_hex("00ff", b"x").generate(16) == from_seed_hex("00ff", b"x").generate(16)
    assert len(from_seed_hex(None).generate(8)) == 8
    with pytest.raises(ParameterError):
        from_seed_hex("xyz")


def test_randbelow_and_randbits_ranges(rng):
    draws = [rng.randbelow(10) for _ in range(500)]
    assert set(draws) == set(range(10))
    assert all(0 <= rng.randbits(13) < 1 << 13 for _ in range(200))
    assert rng.randbits(0) == 0
    with pytest.raises(ParameterError):
        rng.randbelow(0)


def test_monobit_balance():
    stream = DrbgState(ENTROPY).generate(125_000)
    ones = sum(bin(byte).count("1") for byte in stream)
    assert 0.49 <= ones / 1_000_000 <= 0.51
