import logging
import sys
from functools import lru_cache
from typing import Optional, Tuple

from pydantic import BaseModel, BaseSettings, Field, validator

from .errors import ParameterError

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


class Settings(BaseSettings):
    keyring_path: str = Field("./keyring.cvlt-keys", env="CVLT_KEYRING")
    server: Optional[str] = Field(None, env="CVLT_SERVER")
    max_accounts: int = Field(5, ge=1, env="CVLT_MAX_ACCOUNTS")
    test_mode: bool = Field(False, env="CVLT_TEST_MODE")
    log_level: str = Field("WARNING", env="CVLT_LOG_LEVEL")

    @validator("log_level")
    def _known_level(cls, v):
        v = v.upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {v!r}")
        return v


@lru_cache()
def get_settings() -> Settings:
    return Settings()


class CliConfig(BaseModel):
    """Per-invocation configuration: flags layered over the environment."""

    keyring_path: str
    server: Optional[str] = None
    seed: Optional[str] = None
    max_accounts: int = Field(5, ge=1)
    test_mode: bool = False

    @validator("seed")
    def _seed_is_hex(cls, v):
        if v is not None:
            try:
                if not bytes.fromhex(v):
                    raise ValueError
            except ValueError:
                raise ValueError("--seed must be a non-empty hex string") from None
        return v

    @validator("test_mode", always=True)
    def _seed_implies_test_mode(cls, v, values):
        return v or values.get("seed") is not None

    @classmethod
    def resolve(
        cls,
        settings: Settings,
        keyring_path: Optional[str] = None,
        server: Optional[str] = None,
        seed: Optional[str] = None,
        max_accounts: Optional[int] = None,
    ) -> "CliConfig":
        return cls(
            keyring_path=keyring_path or settings.keyring_path,
            server=server or settings.server,
            seed=seed,
            max_accounts=settings.max_accounts if max_accounts is None else max_accounts,
            test_mode=settings.test_mode,
        )

    def require_server(self) -> str:
        if not self.server:
            raise ParameterError("no CSP address; pass --server HOST:PORT or set CVLT_SERVER")
        return self.server


def parse_address(addr: str) -> Tuple[str, int]:
    """`host:port`, with IPv6 hosts bracketed as `[::1]:9000`."""
    host, sep, port = addr.rpartition(":")
    if not sep or not host:
        raise ParameterError(f"address {addr!r} is not host:port")
    if host.startswith("[") and host.endswith("]"):
        host = host[1:-1]
    elif ":" in host:
        raise ParameterError(f"IPv6 address {addr!r} must be bracketed, e.g. [::1]:9000")
    if not port.isdigit() or not 0 <= int(port) <= 65535:
        raise ParameterError(f"bad port in address {addr!r}")
    return host, int(port)


def configure_logging(level: str = "WARNING") -> None:
    log = logging.getLogger("cloudvault")
    for handler in list(log.handlers):
        log.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    log.addHandler(handler)
    log.setLevel(level.upper())
