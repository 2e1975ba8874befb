"""
cvlt: client-side encrypted cloud storage.
✓ Key management: keygen, accounts, rotate, export
✓ Local envelopes: seal, open, verify
✓ CSP round trips: put, get, list, delete, serve

Exit codes: 0 ok, 1 usage, 2 crypto/integrity, 3 file I/O, 4 network.
Payloads only ever go to files; stdout carries listings and OK/FAILED.
"""

import logging
import sys
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from . import csp, envelope
from . import keyring as keyring_ops
from .config import CliConfig, configure_logging, get_settings
from .errors import EXIT_CRYPTO, EXIT_USAGE, CloudVaultError, ParameterError, StorageError
from .rng import DrbgState, from_seed_hex
from .rsa import dump_key, load_public_key
from .schemas import Keyring, RsaPublicKey
from .storage import make_backend

logger = logging.getLogger(__name__)

SUITES = {
    "aes256": envelope.Suite.AES256_CBC_CMAC128,
    "aes128": envelope.Suite.AES128_CBC_CMAC128,
    "aes192": envelope.Suite.AES192_CBC_CMAC128,
}


class VaultError(click.ClickException):
    def __init__(self, error: CloudVaultError):
        super().__init__(str(error))
        self.exit_code = error.exit_code

    def show(self, file=None) -> None:
        click.echo(f"error: {self.format_message()}", err=True)


class VaultGroup(click.Group):
    """Maps click usage errors to exit 1 and CloudVaultError to its own exit code."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_USAGE
            raise
        except CloudVaultError as e:
            raise VaultError(e) from e


# ---------- helpers -------------------------------------------------------- #
def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e.strerror or e}") from e


def _write(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror or e}") from e


def _generations(kr: Keyring) -> int:
    return sum(len(a.generations) for a in kr.accounts)


def _rng(cfg: CliConfig, command: str, kr: Keyring) -> DrbgState:
    # label keeps seeded invocations distinct per command and keyring state
    return from_seed_hex(cfg.seed, f"{command}:{_generations(kr)}".encode())


def _created(cfg: CliConfig) -> Optional[int]:
    return 0 if cfg.seed is not None else None


def _recipient(kr: Keyring, account: Optional[str], recipient: Optional[str]) -> RsaPublicKey:
    if (account is None) == (recipient is None):
        raise ParameterError("give exactly one of --account or --recipient")
    if recipient is not None:
        return load_public_key(_read(recipient).decode("utf-8", errors="replace"))
    return keyring_ops.active_public(kr, account)


def _seal(cfg: CliConfig, command: str, plaintext: bytes, account, recipient, suite: str) -> bytes:
    kr = keyring_ops.load_or_empty(cfg.keyring_path)
    pub = _recipient(kr, account, recipient)
    return envelope.seal(plaintext, pub, _rng(cfg, command, kr), SUITES[suite])


account_option = click.option("--account", "-a", help="Seal to this account's active key.")
recipient_option = click.option("--recipient", "-r", help="Seal to an exported public key file instead.")
suite_option = click.option("--suite", type=click.Choice(sorted(SUITES)), default="aes256", show_default=True)


# ---------- group ---------------------------------------------------------- #
@click.group(cls=VaultGroup)
@click.option("--keyring", "keyring_path", help="Keyring file [env CVLT_KEYRING].")
@click.option("--server", help="CSP address HOST:PORT [env CVLT_SERVER].")
@click.option("--seed", help="Hex seed for deterministic runs (test mode).")
@click.option("--max-accounts", type=int, help="Account limit for keygen (default 5).")
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logs.")
@click.pass_context
def cli(ctx, keyring_path, server, seed, max_accounts, verbose):
    try:
        settings = get_settings()
        configure_logging({0: settings.log_level, 1: "INFO"}.get(verbose, "DEBUG"))
        ctx.obj = CliConfig.resolve(
            settings, keyring_path=keyring_path, server=server, seed=seed, max_accounts=max_accounts
        )
    except ValidationError as e:
        raise click.UsageError(e.errors()[0]["msg"]) from e


# ---------- keys ----------------------------------------------------------- #
@cli.command()
@click.option("--account", "-a", required=True)
@click.option("--bits", type=int, default=keyring_ops.DEFAULT_BITS, show_default=True)
@click.pass_obj
def keygen(cfg: CliConfig, account, bits):
    """Create an account with a fresh RSA keypair."""
    kr = keyring_ops.load_or_empty(cfg.keyring_path)
    kr = keyring_ops.create_account(
        kr, account, bits, _rng(cfg, "keygen", kr),
        max_accounts=cfg.max_accounts, test_mode=cfg.test_mode, created=_created(cfg),
    )
    keyring_ops.save(kr, cfg.keyring_path)
    fp = keyring_ops.generation_fingerprint(keyring_ops.get_account(kr, account).active)
    click.echo(f"✅ created account {account} ({bits}-bit, fingerprint {fp.hex()})", err=True)


@cli.command()
@click.pass_obj
def accounts(cfg: CliConfig):
    """List accounts, generation counts and active fingerprints."""
    kr = keyring_ops.load_or_empty(cfg.keyring_path)
    for account in kr.accounts:
        fp = keyring_ops.generation_fingerprint(account.active)
        click.echo(f"{account.name}\tgenerations={len(account.generations)}\tactive={fp.hex()}")
    for problem in keyring_ops.audit(kr):
        click.echo(f"warning: {problem}", err=True)


@cli.command()
@click.option("--account", "-a", required=True)
@click.option("--bits", type=int, help="Modulus size; defaults to the current active key's.")
@click.pass_obj
def rotate(cfg: CliConfig, account, bits):
    """Append a new active key generation; old ones stay for decryption."""
    kr = keyring_ops.load(cfg.keyring_path)
    current = keyring_ops.get_account(kr, account)
    bits = bits or current.active.public.bits
    kr = keyring_ops.rotate(
        kr, account, bits, _rng(cfg, "rotate", kr), test_mode=cfg.test_mode, created=_created(cfg)
    )
    keyring_ops.save(kr, cfg.keyring_path)
    fp = keyring_ops.generation_fingerprint(keyring_ops.get_account(kr, account).active)
    click.echo(f"🔄 rotated {account}, new fingerprint {fp.hex()}", err=True)


@cli.command()
@click.option("--account", "-a", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_obj
def export(cfg: CliConfig, account, out_path):
    """Write an account's active public key for a separate sender."""
    kr = keyring_ops.load(cfg.keyring_path)
    _write(out_path, dump_key(keyring_ops.active_public(kr, account)).encode("ascii"))


# ---------- envelopes ------------------------------------------------------ #
@cli.command()
@account_option
@recipient_option
@suite_option
@click.option("--in", "in_path", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_obj
def seal(cfg: CliConfig, account, recipient, suite, in_path, out_path):
    """Encrypt a file into a .cvlt envelope."""
    _write(out_path, _seal(cfg, "seal", _read(in_path), account, recipient, suite))


@cli.command("open")
@click.option("--in", "in_path", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_obj
def open_(cfg: CliConfig, in_path, out_path):
    """Decrypt an envelope with whichever keyring generation it names."""
    blob = _read(in_path)
    _write(out_path, envelope.open(blob, keyring_ops.load(cfg.keyring_path)))


@cli.command()
@click.option("--in", "in_path", required=True)
@click.pass_obj
def verify(cfg: CliConfig, in_path):
    """Check an envelope's integrity without decrypting it."""
    blob = _read(in_path)
    if envelope.verify_only(blob, keyring_ops.load(cfg.keyring_path)):
        click.echo("OK")
    else:
        click.echo("FAILED")
        sys.exit(EXIT_CRYPTO)


# ---------- CSP ------------------------------------------------------------ #
@cli.command()
@account_option
@recipient_option
@suite_option
@click.option("--name", "-n", required=True, help="Object name on the CSP.")
@click.option("--in", "in_path", required=True)
@click.pass_obj
def put(cfg: CliConfig, account, recipient, suite, name, in_path):
    """Seal a file and upload the envelope."""
    server = cfg.require_server()
    sealed = _seal(cfg, "put", _read(in_path), account, recipient, suite)
    csp.client_put(server, name, sealed)
    click.echo(f"☁️ stored {name} ({len(sealed)} bytes sealed)", err=True)


@cli.command()
@click.option("--name", "-n", required=True)
@click.option("--out", "out_path", required=True)
@click.pass_obj
def get(cfg: CliConfig, name, out_path):
    """Download an envelope and open it."""
    server = cfg.require_server()
    kr = keyring_ops.load(cfg.keyring_path)
    _write(out_path, envelope.open(csp.client_get(server, name), kr))


@cli.command("list")
@click.pass_obj
def list_(cfg: CliConfig):
    """List object names stored on the CSP."""
    for name in csp.client_list(cfg.require_server()):
        click.echo(name)


@cli.command()
@click.option("--name", "-n", required=True)
@click.pass_obj
def delete(cfg: CliConfig, name):
    """Remove an object from the CSP."""
    csp.client_delete(cfg.require_server(), name)


@cli.command()
@click.option("--addr", required=True, help="Listen address HOST:PORT.")
@click.option("--backend", type=click.Choice(["mem", "dir"]), default="mem", show_default=True)
@click.option("--root", type=click.Path(file_okay=False), help="Storage directory for --backend dir.")
@click.option("--http-addr", help="Also serve the read-only status API on HOST:PORT.")
def serve(addr, backend, root, http_addr):
    """Run the cloud service provider."""
    if backend == "dir" and not root:
        raise ParameterError("--backend dir needs --root PATH")
    store = make_backend(backend, root)
    try:
        csp.serve(addr, store, http_addr=http_addr)
    except KeyboardInterrupt:
        logger.info("CSP stopped")


def main() -> None:
    cli(prog_name="cvlt")
