"""
AES-256-CTR deterministic random bit generator.
✓ Seeded from 48 bytes of entropy (32-byte key + 16-byte counter)
✓ Counter strictly increases; never reused inside one seeding epoch
✓ Entropy comes through a narrow source interface so tests can pin seeds

A DrbgState has a single owner. Parallel work needs independently seeded
instances.
"""

import secrets
from typing import Optional, Protocol

from .aes_core import BLOCK_SIZE, expand_key
from .block_modes import cmac_tag, ctr_keystream
from .errors import ParameterError, ReseedRequiredError, SeedingError

SEED_LENGTH = 48
RESEED_INTERVAL = 1 << 20  # blocks per epoch

_MASK128 = (1 << 128) - 1


class EntropySource(Protocol):
    def read(self, n: int) -> bytes:
        ...


class OsEntropy:
    def read(self, n: int) -> bytes:
        return secrets.token_bytes(n)


class FixedEntropy:
    """Replays fixed bytes; used for --seed runs and tests."""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.offset = 0

    def read(self, n: int) -> bytes:
        chunk = self.data[self.offset:self.offset + n]
        if len(chunk) < n:
            raise SeedingError(f"fixed entropy exhausted: wanted {n} bytes, {len(chunk)} left")
        self.offset += n
        return chunk


def expand_seed(seed: bytes, label: bytes = b"") -> bytes:
    """Stretch a short test seed into SEED_LENGTH bytes bound to a context label."""
    if not seed:
        raise SeedingError("seed must not be empty")
    zero_key = bytes(BLOCK_SIZE)
    blocks = [
        cmac_tag(bytes([i]) + len(label).to_bytes(2, "big") + label + seed, zero_key)
        for i in range(SEED_LENGTH // BLOCK_SIZE)
    ]
    return b"".join(blocks)


class DrbgState:
    def __init__(self, entropy: bytes, reseed_interval: int = RESEED_INTERVAL):
        self.reseed_interval = reseed_interval
        self.epoch = 0
        self._load(entropy)

    def _load(self, entropy: bytes) -> None:
        if len(entropy) < SEED_LENGTH:
            raise SeedingError(f"need at least {SEED_LENGTH} bytes of entropy, got {len(entropy)}")
        self.key = bytes(entropy[:32])
        self.counter = int.from_bytes(entropy[32:48], "big")
        self.epoch_start = self.counter
        self.blocks_generated = 0
        self.bytes_emitted = 0
        self._schedule = expand_key(self.key)

    @classmethod
    def from_source(cls, source: EntropySource, **kwargs) -> "DrbgState":
        return cls(source.read(SEED_LENGTH), **kwargs)

    def reseed(self, entropy: bytes) -> None:
        self._load(entropy)
        self.epoch += 1

    def generate(self, n: int) -> bytes:
        if n < 0:
            raise ParameterError("byte count must be non-negative")
        if n == 0:
            return b""
        nblocks = -(-n // BLOCK_SIZE)
        if self.blocks_generated + nblocks > self.reseed_interval:
            raise ReseedRequiredError(
                f"reseed required after {self.reseed_interval} blocks in one epoch"
            )
        stream = ctr_keystream(self._schedule, self.counter, nblocks)
        self.counter = (self.counter + nblocks) & _MASK128
        self.blocks_generated += nblocks
        self.bytes_emitted += n
        return stream[:n]

    def randbits(self, k: int) -> int:
        if k <= 0:
            return 0
        value = int.from_bytes(self.generate(-(-k // 8)), "big")
        return value >> (-k % 8)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ParameterError("upper bound must be positive")
        k = n.bit_length()
        while True:
            r = self.randbits(k)
            if r < n:
                return r


def seed(entropy: bytes, reseed_interval: int = RESEED_INTERVAL) -> DrbgState:
    return DrbgState(entropy, reseed_interval=reseed_interval)


def generate(state: DrbgState, n: int) -> bytes:
    return state.generate(n)


def from_seed_hex(seed_hex: Optional[str], label: bytes = b"") -> DrbgState:
    """Deterministic DRBG for a hex test seed; OS entropy when no seed is given."""
    if seed_hex is None:
        return DrbgState.from_source(OsEntropy())
    try:
        raw = bytes.fromhex(seed_hex)
    except ValueError as e:
        raise ParameterError(f"--seed must be hex: {e}") from e
    return DrbgState(expand_seed(raw, label))
