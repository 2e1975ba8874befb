import time

import pytest
from click.testing import CliRunner

from cloudvault import keyring as keyring_ops
from cloudvault.cli import cli
from cloudvault.errors import IntegrityError

SEED = "c10d5eed"


class Vault:
    """One client: a keyring file plus a working directory."""

    def __init__(self, root, seed=SEED, server=None):
        self.root = root
        self.keyring = root / "keys.cvlt-keys"
        self.seed = seed
        self.server = server
        self.runner = CliRunner()

    def __call__(self, *args):
        base = ["--keyring", str(self.keyring)]
        if self.seed:
            base += ["--seed", self.seed]
        if self.server:
            base += ["--server", self.server]
        return self.runner.invoke(cli, [*base, *map(str, args)])

    def file(self, name, data=None):
        path = self.root / name
        if data is not None:
            path.write_bytes(data)
        return path


@pytest.fixture
def vault(tmp_path):
    v = Vault(tmp_path)
    assert v("keygen", "--account", "alice", "--bits", 512).exit_code == 0
    return v


def test_keygen_and_accounts(vault):
    result = vault("accounts")
    assert result.exit_code == 0
    name, generations, active = result.stdout.strip().split("\t")
    assert name == "alice"
    assert generations == "generations=1"
    fp = keyring_ops.generation_fingerprint(
        keyring_ops.get_account(keyring_ops.load(vault.keyring), "alice").active
    )
    assert active == f"active={fp.hex()}"


def test_sixth_account_exits_with_quota_message(vault):
    for i in range(4):
        assert vault("keygen", "--account", f"zone{i}", "--bits", 512).exit_code == 0
    result = vault("keygen", "--account", "zone4", "--bits", 512)
    assert result.exit_code == 1
    assert "account limit" in result.stderr
    result = vault("--max-accounts", 6, "keygen", "--account", "zone4", "--bits", 512)
    assert result.exit_code == 0


def test_512_bit_keys_need_test_mode(tmp_path):
    result = Vault(tmp_path, seed=None)("keygen", "--account", "a", "--bits", 512)
    assert result.exit_code == 1


def test_seal_open_round_trip(vault):
    data = bytes(range(256)) * 10
    vault.file("plain.bin", data)
    assert vault("seal", "--account", "alice", "--in", vault.file("plain.bin"), "--out", vault.file("p.cvlt")).exit_code == 0
    assert vault("open", "--in", vault.file("p.cvlt"), "--out", vault.file("back.bin")).exit_code == 0
    assert vault.file("back.bin").read_bytes() == data
    assert data not in vault.file("p.cvlt").read_bytes()


@pytest.mark.parametrize("suite", ["aes128", "aes192"])
def test_seal_with_suite(vault, suite):
    vault.file("m", b"message")
    assert vault("seal", "-a", "alice", "--suite", suite, "--in", vault.file("m"), "--out", vault.file("m.cvlt")).exit_code == 0
    assert vault("open", "--in", vault.file("m.cvlt"), "--out", vault.file("m.out")).exit_code == 0
    assert vault.file("m.out").read_bytes() == b"message"


def test_verify_and_tamper(vault):
    vault.file("m", b"important numbers")
    vault("seal", "-a", "alice", "--in", vault.file("m"), "--out", vault.file("m.cvlt"))
    result = vault("verify", "--in", vault.file("m.cvlt"))
    assert (result.exit_code, result.stdout) == (0, "OK\n")

    sealed = bytearray(vault.file("m.cvlt").read_bytes())
    sealed[-20] ^= 0x40
    vault.file("m.cvlt", bytes(sealed))
    result = vault("verify", "--in", vault.file("m.cvlt"))
    assert (result.exit_code, result.stdout) == (2, "FAILED\n")
    result = vault("open", "--in", vault.file("m.cvlt"), "--out", vault.file("m.out"))
    assert result.exit_code == 2
    assert IntegrityError.MESSAGE in result.stderr
    assert not vault.file("m.out").exists()


def test_rotation_keeps_old_envelopes_readable(vault):
    vault.file("m", b"sealed before rotation")
    vault("seal", "-a", "alice", "--in", vault.file("m"), "--out", vault.file("old.cvlt"))
    assert vault("rotate", "--account", "alice").exit_code == 0
    assert "generations=2" in vault("accounts").stdout
    assert vault("open", "--in", vault.file("old.cvlt"), "--out", vault.file("m.out")).exit_code == 0
    assert vault.file("m.out").read_bytes() == b"sealed before rotation"


def test_export_and_seal_to_recipient(vault, tmp_path):
    assert vault("export", "--account", "alice", "--out", vault.file("alice.pub")).exit_code == 0
    sender = Vault(tmp_path / "sender", seed="01")
    sender.root.mkdir()
    sender.file("note", b"for alice only")
    result = sender("seal", "--recipient", vault.file("alice.pub"), "--in", sender.file("note"), "--out", sender.file("note.cvlt"))
    assert result.exit_code == 0
    assert vault("open", "--in", sender.file("note.cvlt"), "--out", vault.file("note")).exit_code == 0
    assert vault.file("note").read_bytes() == b"for alice only"
    result = sender("open", "--in", sender.file("note.cvlt"), "--out", sender.file("x"))
    assert result.exit_code == 3


def test_exit_codes(vault):
    assert vault("open", "--in", vault.file("missing"), "--out", vault.file("x")).exit_code == 3
    vault.file("m", b"x")
    assert vault("seal", "--in", vault.file("m"), "--out", vault.file("x")).exit_code == 1
    assert vault("--no-such-flag").exit_code == 1
    assert vault("keygen").exit_code == 1
    assert vault("put", "-a", "alice", "--name", "n", "--in", vault.file("missing")).exit_code == 1
    assert vault("serve", "--addr", "127.0.0.1:0", "--backend", "dir").exit_code == 1
    vault.file("junk", b"not an envelope at all")
    assert vault("open", "--in", vault.file("junk"), "--out", vault.file("x")).exit_code == 2


def test_bad_seed_is_a_usage_error(tmp_path):
    assert Vault(tmp_path, seed="zz")("accounts").exit_code == 1


def test_seeded_transcript_is_reproducible(tmp_path):
    outputs = []
    for run in ("one", "two"):
        v = Vault(tmp_path / run)
        v.root.mkdir()
        v.file("m", b"reproducible")
        assert v("keygen", "-a", "alice", "--bits", 512).exit_code == 0
        assert v("keygen", "-a", "bob", "--bits", 512).exit_code == 0
        assert v("seal", "-a", "bob", "--in", v.file("m"), "--out", v.file("m.cvlt")).exit_code == 0
        outputs.append((v.keyring.read_bytes(), v.file("m.cvlt").read_bytes()))
    assert outputs[0] == outputs[1]


# ---------- through the CSP ------------------------------------------------ #
def test_put_get_list_delete(vault, server):
    vault.server = server.addr
    vault.file("doc", b"quarterly report")
    assert vault("put", "-a", "alice", "--name", "reports/q3", "--in", vault.file("doc")).exit_code == 0
    assert vault("list").stdout == "reports/q3\n"
    assert vault("get", "--name", "reports/q3", "--out", vault.file("doc.out")).exit_code == 0
    assert vault.file("doc.out").read_bytes() == b"quarterly report"
    assert vault("delete", "--name", "reports/q3").exit_code == 0
    assert vault("get", "--name", "reports/q3", "--out", vault.file("gone")).exit_code == 4


def test_corrupted_object_on_disk(vault, dir_server):
    vault.server = dir_server.addr
    vault.file("doc", b"x" * 100)
    vault("put", "-a", "alice", "--name", "doc", "--in", vault.file("doc"))
    path = dir_server.backend.path_for("doc")
    stored = bytearray(path.read_bytes())
    stored[len(stored) // 2] ^= 0x01
    path.write_bytes(bytes(stored))
    result = vault("get", "--name", "doc", "--out", vault.file("doc.out"))
    assert result.exit_code == 2


def test_unreachable_server(vault):
    vault.server = "127.0.0.1:1"
    vault.file("doc", b"x")
    assert vault("put", "-a", "alice", "--name", "doc", "--in", vault.file("doc")).exit_code == 4
    assert vault("list").exit_code == 4


@pytest.mark.slow
@pytest.mark.parametrize("size", [0, 10 * 1024 * 1024])
def test_large_round_trip(vault, server, size):
    vault.server = server.addr
    payload = bytes(range(256)) * (size // 256)
    vault.file("big", payload)
    start = time.perf_counter()
    assert vault("put", "-a", "alice", "--name", "big", "--in", vault.file("big")).exit_code == 0
    assert vault("get", "--name", "big", "--out", vault.file("big.out")).exit_code == 0
    assert time.perf_counter() - start < 60
    assert vault.file("big.out").read_bytes() == payload
