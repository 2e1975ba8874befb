import math
import unicodedata
from typing import List

from pydantic import BaseModel, Field, root_validator, validator

from .errors import AccountNameError

MAX_ACCOUNT_NAME_BYTES = 64


def check_account_name(name: str) -> str:
    encoded = name.encode("utf-8")
    if not 1 <= len(encoded) <= MAX_ACCOUNT_NAME_BYTES:
        raise AccountNameError(
            f"account name must be 1-{MAX_ACCOUNT_NAME_BYTES} UTF-8 bytes, got {len(encoded)}"
        )
    if any(unicodedata.category(ch) == "Cc" for ch in name):
        raise AccountNameError("account name must not contain control characters")
    return name


# ---------- RSA keys ------------------------------------------------------- #
class RsaPublicKey(BaseModel):
    n: int
    e: int

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def _check_exponent(cls, values):
        n, e = values["n"], values["e"]
        if n % 2 == 0:
            raise ValueError("modulus must be odd")
        if e % 2 == 0 or not 2 < e < n:
            raise ValueError("public exponent must be odd with 2 < e < n")
        return values

    @property
    def bits(self) -> int:
        return self.n.bit_length()

    @property
    def modulus_bytes(self) -> int:
        return (self.bits + 7) // 8


class RsaPrivateKey(BaseModel):
    n: int
    e: int
    d: int
    p: int
    q: int

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def _check_factors(cls, values):
        n, e, d, p, q = (values[k] for k in ("n", "e", "d", "p", "q"))
        if p * q != n:
            raise ValueError("n != p*q")
        if (e * d) % math.lcm(p - 1, q - 1) != 1:
            raise ValueError("d is not the inverse of e modulo lcm(p-1, q-1)")
        return values

    @property
    def public(self) -> RsaPublicKey:
        return RsaPublicKey(n=self.n, e=self.e)

    @property
    def modulus_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8


# ---------- keyring -------------------------------------------------------- #
class KeyGeneration(BaseModel):
    public: RsaPublicKey
    private: RsaPrivateKey
    created: int = Field(..., ge=0, description="UNIX seconds")

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def _check_pair(cls, values):
        if values["private"].public != values["public"]:
            raise ValueError("private key does not match public key")
        return values


class Account(BaseModel):
    name: str
    generations: List[KeyGeneration]
    active_index: int = 0

    class Config:
        frozen = True

    @validator("name")
    def _valid_name(cls, name):
        return check_account_name(name)

    @root_validator(skip_on_failure=True)
    def _check_active(cls, values):
        generations = values["generations"]
        if not generations:
            raise ValueError("an account holds at least one key generation")
        if not 0 <= values["active_index"] < len(generations):
            raise ValueError(f"active index {values['active_index']} out of range")
        return values

    @property
    def active(self) -> KeyGeneration:
        return self.generations[self.active_index]


class Keyring(BaseModel):
    accounts: List[Account] = []
    format_version: int = 1

    class Config:
        frozen = True

    @validator("accounts")
    def _unique_names(cls, accounts):
        names = [a.name for a in accounts]
        if len(names) != len(set(names)):
            raise ValueError("account names must be unique")
        return accounts


# ---------- CSP status API ------------------------------------------------- #
class ObjectInfo(BaseModel):
    name: str
    size: int


class HealthReport(BaseModel):
    status: str
    backend: str
    objects: int
    stored_bytes: int
    timestamp: float
