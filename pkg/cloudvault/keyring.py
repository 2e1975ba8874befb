"""
Multi-account key store with rotation history.
✓ Up to max_accounts named zones (five by default)
✓ Rotation appends a generation and never deletes old ones
✓ Fingerprint lookup across every account and generation
✓ Deterministic line-oriented text file, written atomically with 0600 permissions

Keyrings are values: every operation returns a new Keyring.
"""

import logging
import os
import re
import tempfile
import time
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple, Union

from pydantic import ValidationError

from .envelope import fingerprint
from .errors import (
    AccountNameError,
    AccountNotFoundError,
    DuplicateAccountError,
    FormatError,
    KeygenError,
    KeyringParseError,
    QuotaExceededError,
    StorageError,
)
from .rng import DrbgState
from .rsa import PRIVATE_FIELDS, key_fields, keygen, parse_hex
from .schemas import (
    Account,
    KeyGeneration,
    Keyring,
    RsaPrivateKey,
    RsaPublicKey,
    check_account_name,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_MAX_ACCOUNTS = 5
DEFAULT_BITS = 2048

PathLike = Union[str, Path]


@lru_cache(maxsize=1024)
def _fingerprint_of(n: int, e: int) -> bytes:
    return fingerprint(RsaPublicKey(n=n, e=e))


def generation_fingerprint(gen: KeyGeneration) -> bytes:
    return _fingerprint_of(gen.public.n, gen.public.e)


def iter_generations(kr: Keyring) -> Iterator[Tuple[Account, int, KeyGeneration]]:
    for account in kr.accounts:
        for index, gen in enumerate(account.generations):
            yield account, index, gen


def get_account(kr: Keyring, name: str) -> Account:
    for account in kr.accounts:
        if account.name == name:
            return account
    raise AccountNotFoundError(f"no account named {name!r}")


def active_public(kr: Keyring, name: str) -> RsaPublicKey:
    return get_account(kr, name).active.public


def _new_generation(kr: Keyring, bits: int, rng: DrbgState, test_mode: bool, created: Optional[int]) -> KeyGeneration:
    public, private = keygen(bits, rng, test_mode=test_mode)
    fp = _fingerprint_of(public.n, public.e)
    if any(generation_fingerprint(gen) == fp for _, _, gen in iter_generations(kr)):
        raise KeygenError("new key collides with an existing fingerprint")
    return KeyGeneration(
        public=public,
        private=private,
        created=int(time.time()) if created is None else created,
    )


# ---------- operations ----------------------------------------------------- #
def create_account(
    kr: Keyring,
    name: str,
    bits: int,
    rng: DrbgState,
    max_accounts: int = DEFAULT_MAX_ACCOUNTS,
    test_mode: bool = False,
    created: Optional[int] = None,
) -> Keyring:
    check_account_name(name)
    if any(account.name == name for account in kr.accounts):
        raise DuplicateAccountError(f"account {name!r} already exists")
    if len(kr.accounts) >= max_accounts:
        raise QuotaExceededError(
            f"account limit reached ({max_accounts}); the default of five accounts per client "
            "can be raised with --max-accounts"
        )
    gen = _new_generation(kr, bits, rng, test_mode, created)
    account = Account(name=name, generations=[gen], active_index=0)
    logger.info("✅ Created account %r (fingerprint %s)", name, generation_fingerprint(gen).hex())
    return Keyring(accounts=[*kr.accounts, account], format_version=kr.format_version)


def rotate(
    kr: Keyring,
    name: str,
    bits: int,
    rng: DrbgState,
    test_mode: bool = False,
    created: Optional[int] = None,
) -> Keyring:
    account = get_account(kr, name)
    gen = _new_generation(kr, bits, rng, test_mode, created)
    generations = [*account.generations, gen]
    rotated = Account(name=name, generations=generations, active_index=len(generations) - 1)
    logger.info("🔄 Rotated account %r to generation %d", name, rotated.active_index)
    return Keyring(
        accounts=[rotated if a.name == name else a for a in kr.accounts],
        format_version=kr.format_version,
    )


def find_private_by_fingerprint(kr: Keyring, fp: bytes) -> Optional[RsaPrivateKey]:
    fp = bytes(fp)
    for _, _, gen in iter_generations(kr):
        if generation_fingerprint(gen) == fp:
            return gen.private
    return None


def audit(kr: Keyring) -> List[str]:
    """Consistency problems in the keyring; empty when healthy."""
    problems, seen = [], {}
    for account, index, gen in iter_generations(kr):
        fp = generation_fingerprint(gen)
        where = f"{account.name}[{index}]"
        if fp in seen:
            problems.append(f"{where} shares fingerprint {fp.hex()} with {seen[fp]}")
        else:
            seen[fp] = where
        found = find_private_by_fingerprint(kr, fp)
        if found is None or fingerprint(found.public) != fp:
            problems.append(f"{where} fingerprint {fp.hex()} does not resolve to its own key")
    return problems


# ---------- text format ---------------------------------------------------- #
def dumps(kr: Keyring) -> str:
    lines = [f"version={kr.format_version}"]
    for account in kr.accounts:
        lines.append(f"account={account.name}")
        lines.append(f"active={account.active_index}")
        for i, gen in enumerate(account.generations):
            for field, value in key_fields(gen.private).items():
                lines.append(f"key.{i}.{field}={value}")
            lines.append(f"key.{i}.created={gen.created}")
    return "\n".join(lines) + "\n"


_KEY_LINE = re.compile(r"^key\.(0|[1-9][0-9]*)\.([a-z]+)$")
_DECIMAL = re.compile(r"^(0|[1-9][0-9]*)$")


class _AccountDraft:
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.active: Optional[int] = None
        self.keys: Dict[int, Dict[str, int]] = {}

    def build(self) -> Account:
        if self.active is None:
            raise KeyringParseError(self.line, f"account {self.name!r} has no active= line")
        if sorted(self.keys) != list(range(len(self.keys))):
            raise KeyringParseError(self.line, f"account {self.name!r} has non-contiguous generations")
        try:
            generations = []
            for i in range(len(self.keys)):
                fields = self.keys[i]
                missing = [f for f in (*PRIVATE_FIELDS, "created") if f not in fields]
                if missing:
                    raise KeyringParseError(self.line, f"key.{i} of {self.name!r} lacks {', '.join(missing)}")
                private = RsaPrivateKey(**{f: fields[f] for f in PRIVATE_FIELDS})
                generations.append(
                    KeyGeneration(public=private.public, private=private, created=fields["created"])
                )
            return Account(name=self.name, generations=generations, active_index=self.active)
        except ValidationError as e:
            raise KeyringParseError(self.line, f"invalid account {self.name!r}: {e}") from e


def loads(text: str) -> Keyring:
    drafts: List[_AccountDraft] = []
    version_seen = False
    for lineno, raw in enumerate(text.split("\n"), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise KeyringParseError(lineno, "expected key=value")

        if not version_seen:
            if key != "version":
                raise KeyringParseError(lineno, "file must start with version=")
            if value != str(FORMAT_VERSION):
                raise KeyringParseError(lineno, f"unsupported keyring version {value!r}")
            version_seen = True
            continue

        if key == "account":
            try:
                check_account_name(value)
            except AccountNameError as e:
                raise KeyringParseError(lineno, str(e)) from e
            if any(d.name == value for d in drafts):
                raise AccountNameError(f"keyring line {lineno}: duplicate account name {value!r}")
            drafts.append(_AccountDraft(value, lineno))
            continue

        if not drafts:
            raise KeyringParseError(lineno, f"{key!r} appears before any account=")
        draft = drafts[-1]

        if key == "active":
            if not _DECIMAL.match(value) or draft.active is not None:
                raise KeyringParseError(lineno, "bad or repeated active= line")
            draft.active = int(value)
            continue

        match = _KEY_LINE.match(key)
        if not match or match.group(2) not in (*PRIVATE_FIELDS, "created"):
            raise KeyringParseError(lineno, f"unknown entry {key!r}")
        index, field = int(match.group(1)), match.group(2)
        fields = draft.keys.setdefault(index, {})
        if field in fields:
            raise KeyringParseError(lineno, f"duplicate {key!r}")
        if field == "created":
            if not _DECIMAL.match(value):
                raise KeyringParseError(lineno, "created must be a decimal UNIX time")
            fields[field] = int(value)
        else:
            try:
                fields[field] = parse_hex(value)
            except FormatError as e:
                raise KeyringParseError(lineno, str(e)) from e

    if not version_seen:
        raise KeyringParseError(1, "empty keyring file")

    accounts, owners = [], {}
    for draft in drafts:
        account = draft.build()
        for index, gen in enumerate(account.generations):
            fp = generation_fingerprint(gen)
            if fp in owners:
                raise KeyringParseError(
                    draft.line, f"{account.name}[{index}] repeats the key of {owners[fp]} (fingerprint {fp.hex()})"
                )
            owners[fp] = f"{account.name}[{index}]"
        accounts.append(account)
    return Keyring(accounts=accounts, format_version=FORMAT_VERSION)


def save(kr: Keyring, path: PathLike) -> None:
    path = Path(path)
    data = dumps(kr).encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".keyring-")
        try:
            os.fchmod(fd, 0o600)
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
    except OSError as e:
        raise StorageError(f"cannot write keyring {path}: {e}") from e
    logger.info("💾 Saved keyring with %d account(s) to %s", len(kr.accounts), path)


def load(path: PathLike) -> Keyring:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot read keyring {path}: {e}") from e
    kr = loads(text)
    logger.info("Loaded keyring with %d account(s) from %s", len(kr.accounts), path)
    return kr


def load_or_empty(path: PathLike) -> Keyring:
    if not Path(path).exists():
        return Keyring()
    return load(path)
