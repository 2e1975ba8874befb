"""
Error hierarchy shared by every layer.
✓ One root (CloudVaultError) so the CLI can map failures to exit codes
✓ Crypto failures never say *why* an envelope was rejected beyond format vs integrity
"""

from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CRYPTO = 2
EXIT_IO = 3
EXIT_NETWORK = 4


class CloudVaultError(Exception):
    exit_code = EXIT_USAGE


# ---------- usage ---------------------------------------------------------- #
class UsageError(CloudVaultError):
    exit_code = EXIT_USAGE


class ParameterError(UsageError, ValueError):
    pass


class ObjectNameError(UsageError, ValueError):
    pass


class AccountNameError(UsageError, ValueError):
    pass


class DuplicateAccountError(UsageError):
    pass


class QuotaExceededError(UsageError):
    pass


class AccountNotFoundError(UsageError, LookupError):
    pass


# ---------- crypto --------------------------------------------------------- #
class CryptoError(CloudVaultError):
    exit_code = EXIT_CRYPTO


class BlockSizeError(CryptoError, ValueError):
    pass


class KeySizeError(CryptoError, ValueError):
    pass


class PaddingError(CryptoError):
    pass


class FormatError(CryptoError):
    pass


class IntegrityError(CryptoError):
    MESSAGE = "integrity check failed: object was modified or is not addressed to this keyring"

    def __init__(self, message: Optional[str] = None):
        super().__init__(message or self.MESSAGE)


class UnwrapError(CryptoError):
    pass


class CapacityError(CryptoError):
    pass


class KeyNotFoundError(CryptoError, LookupError):
    pass


class SeedingError(CryptoError):
    pass


class ReseedRequiredError(CryptoError):
    pass


class KeygenError(CryptoError):
    pass


# ---------- file I/O ------------------------------------------------------- #
class StorageError(CloudVaultError):
    exit_code = EXIT_IO


class KeyringParseError(StorageError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"keyring line {line}: {message}")


# ---------- network -------------------------------------------------------- #
class NetworkError(CloudVaultError):
    exit_code = EXIT_NETWORK


class StartupError(NetworkError):
    pass


class RemoteError(NetworkError):
    status = None


class ObjectNotFoundError(RemoteError, LookupError):
    pass


class BadRequestError(RemoteError):
    pass


class ServerError(RemoteError):
    pass
