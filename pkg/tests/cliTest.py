import json
import os

import pytest

from pyredactlib.chainFile import ChainFile
from pyredactlib.cli import ENV_SECRET_KEY, main
from pyredactlib.governanceConfig import credential_hash


@pytest.fixture(autouse=True)
def no_secret_key_env(monkeypatch):
    monkeypatch.delenv(ENV_SECRET_KEY, raising=False)


@pytest.fixture
def keys(tmp_path):
    prefix = str(tmp_path / "authority")
    assert main(["keygen", "--bits", "64", "--seed", "1", "--out", prefix]) == 0
    return prefix + ".pub.json", prefix + ".key.json"


def write_json(path, data):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f)
    return str(path)


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


def build_cli_chain(tmp_path, keys, governance=None, secret=False):
    chain_path = str(tmp_path / "demo.chain")
    argv = ["chain", "init", "--chain", chain_path, "--key", keys[0]]
    if governance:
        argv += ["--governance", governance]
    if secret:
        argv += ["--secret-key", keys[1]]
    assert main(argv) == 0
    for height in (1, 2):
        for index in range(3):
            seed = str(height * 10 + index)
            assert main(["tx", "add", "--chain", chain_path, "--payload", f"tx-{height}-{index}", "--seed", seed]) == 0
        assert main(["block", "seal", "--chain", chain_path, "--timestamp", str(height * 100)]) == 0
    return chain_path


def tx_hex(chain_path, height=1, index=0):
    return ChainFile().load(chain_path).blocks[height].transactions[index].tx_id.hex()


def test_keygen_is_deterministic(tmp_path, capsys):
    first, second = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["keygen", "--bits", "64", "--seed", "3", "--out", first]) == 0
    assert main(["keygen", "--bits", "64", "--seed", "3", "--out", second]) == 0
    assert read_bytes(first + ".key.json") == read_bytes(second + ".key.json")
    assert read_bytes(first + ".pub.json") == read_bytes(second + ".pub.json")
    assert "경고" in capsys.readouterr().out
    assert main(["keygen", "--bits", "64", "--seed", "3", "--out", first]) == 2


def test_keygen_rejects_unsupported_bits(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["keygen", "--bits", "13", "--out", str(tmp_path / "k")])
    assert excinfo.value.code == 2


def test_central_lifecycle(tmp_path, keys, capsys, monkeypatch):
    chain_path = build_cli_chain(tmp_path, keys)
    assert ChainFile().load(chain_path).height == 2
    hashes_before = ChainFile().load(chain_path).block_hashes()
    target = tx_hex(chain_path)

    assert main(["redact", "propose", "--chain", chain_path, "--block", "1", "--tx", target,
                 "--proposer", "node-0", "--payload", "redacted"]) == 0
    assert "req-0001: 상태 approved" in capsys.readouterr().out

    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001"]) == 3
    monkeypatch.setenv(ENV_SECRET_KEY, keys[1])
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001"]) == 0

    chain = ChainFile().load(chain_path)
    assert chain.block_hashes() == hashes_before
    assert chain.blocks[1].transactions[0].payload == b"redacted"
    assert main(["chain", "verify", "--chain", chain_path]) == 0

    files = [chain_path, chain_path + ".requests", chain_path + ".governance"]
    before = [read_bytes(path) for path in files]
    capsys.readouterr()
    assert main(["redact", "audit", "--chain", chain_path, "--tx", target]) == 0
    out = capsys.readouterr().out
    assert "req-0001" in out and "버전 2" in out
    assert main(["redact", "tally", "--chain", chain_path, "--request", "req-0001"]) == 0
    assert main(["chain", "verify", "--chain", chain_path]) == 0
    assert [read_bytes(path) for path in files] == before

    with open(chain_path + ".requests", "r", encoding="utf-8") as f:
        registry = json.load(f)
    assert registry["requests"][0]["state"] == "executed"


def test_erase_request(tmp_path, keys):
    chain_path = build_cli_chain(tmp_path, keys)
    target = tx_hex(chain_path, 2, 1)
    assert main(["redact", "propose", "--chain", chain_path, "--block", "2", "--tx", target,
                 "--proposer", "node-0", "--erase"]) == 0
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001",
                 "--secret-key", keys[1]]) == 0
    assert ChainFile().load(chain_path).blocks[2].transactions[1].payload == b""
    assert main(["chain", "verify", "--chain", chain_path]) == 0


def test_reused_seed_is_refused(tmp_path, keys):
    chain_path = build_cli_chain(tmp_path, keys)
    pending_path = chain_path + ".pending"
    assert main(["tx", "add", "--chain", chain_path, "--payload", "fresh", "--seed", "99"]) == 0
    before = read_bytes(pending_path)
    assert main(["tx", "add", "--chain", chain_path, "--payload", "fresh", "--seed", "99"]) == 2
    assert main(["tx", "add", "--chain", chain_path, "--payload", "tx-1-0", "--seed", "10"]) == 2
    assert read_bytes(pending_path) == before


def test_interrupted_seal_is_cleaned_up(tmp_path, keys):
    chain_path = build_cli_chain(tmp_path, keys)
    pending_path = chain_path + ".pending"
    assert main(["tx", "add", "--chain", chain_path, "--payload", "late", "--seed", "77"]) == 0
    pending = read_bytes(pending_path)
    assert main(["block", "seal", "--chain", chain_path, "--timestamp", "300"]) == 0
    sealed = read_bytes(chain_path)

    with open(pending_path, "wb") as f:
        f.write(pending)
    assert main(["block", "seal", "--chain", chain_path, "--timestamp", "400"]) == 0
    assert not os.path.exists(pending_path)
    assert read_bytes(chain_path) == sealed


def test_interrupted_execute_is_completed(tmp_path, keys):
    chain_path = build_cli_chain(tmp_path, keys)
    requests_path = chain_path + ".requests"
    assert main(["redact", "propose", "--chain", chain_path, "--block", "1", "--tx", tx_hex(chain_path),
                 "--proposer", "node-0", "--payload", "redacted"]) == 0
    registry_before = read_bytes(requests_path)
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001",
                 "--secret-key", keys[1]]) == 0
    chain_after = read_bytes(chain_path)

    # 체인만 저장되고 등록부는 이전 상태로 남은 경우
    with open(requests_path, "wb") as f:
        f.write(registry_before)
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001"]) == 0
    assert read_bytes(chain_path) == chain_after
    with open(requests_path, "r", encoding="utf-8") as f:
        registry = json.load(f)
    assert registry["requests"][0]["state"] == "executed"
    assert len(ChainFile().load(chain_path).blocks[1].header.redaction_meta) == 1
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001"]) == 3


def test_public_trapdoor_voting(tmp_path, keys, capsys):
    governance = write_json(tmp_path / "public.json", {
        "mode": "publicTrapdoor", "quorum": "1/2", "votingWindow": 10, "voters": ["alice", "bob", "carol"]})
    assert main(["chain", "init", "--chain", str(tmp_path / "nokey.chain"), "--key", keys[0],
                 "--governance", governance]) == 3
    chain_path = build_cli_chain(tmp_path, keys, governance=governance, secret=True)
    target = tx_hex(chain_path)
    requests_path = chain_path + ".requests"

    assert main(["redact", "propose", "--chain", chain_path, "--block", "1", "--tx", target,
                 "--proposer", "alice", "--payload", "first"]) == 0
    assert main(["redact", "vote", "--chain", chain_path, "--request", "req-0001", "--voter", "bob", "--reject"]) == 0
    assert main(["redact", "vote", "--chain", chain_path, "--request", "req-0001", "--voter", "carol",
                 "--reject"]) == 0
    assert main(["redact", "vote", "--chain", chain_path, "--request", "req-0001", "--voter", "bob",
                 "--approve"]) == 3

    before = read_bytes(requests_path)
    capsys.readouterr()
    assert main(["redact", "tally", "--chain", chain_path, "--request", "req-0001"]) == 0
    assert "rejected" in capsys.readouterr().out
    assert read_bytes(requests_path) == before
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001"]) == 3

    assert main(["redact", "propose", "--chain", chain_path, "--block", "1", "--tx", target,
                 "--proposer", "alice", "--payload", "second"]) == 0
    for voter in ("alice", "bob"):
        assert main(["redact", "vote", "--chain", chain_path, "--request", "req-0002", "--voter", voter,
                     "--approve"]) == 0
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0002"]) == 0
    assert ChainFile().load(chain_path).blocks[1].transactions[0].payload == b"second"
    assert main(["chain", "verify", "--chain", chain_path]) == 0


def test_consortium_threshold(tmp_path, keys):
    share_prefix = str(tmp_path / "authority")
    assert main(["key", "split", "--secret-key", keys[1], "--threshold", "3", "--count", "5", "--seed", "9",
                 "--out", share_prefix]) == 0
    shares = [f"{share_prefix}.share{i}.json" for i in range(1, 6)]
    assert all(os.path.exists(path) for path in shares)

    governance = write_json(tmp_path / "consortium.json", {"mode": "consortium", "threshold": 3, "shareCount": 5})
    chain_path = build_cli_chain(tmp_path, keys, governance=governance)
    assert main(["redact", "propose", "--chain", chain_path, "--block", "2", "--tx", tx_hex(chain_path, 2, 0),
                 "--proposer", "node-1", "--payload", "redacted"]) == 0

    chain_before = read_bytes(chain_path)
    requests_before = read_bytes(chain_path + ".requests")
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001",
                 "--share", shares[0], "--share", shares[3]]) == 4
    assert read_bytes(chain_path) == chain_before
    assert read_bytes(chain_path + ".requests") == requests_before
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001"]) == 3

    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001",
                 "--share", shares[1], "--share", shares[3], "--share", shares[4]]) == 0
    assert main(["chain", "verify", "--chain", chain_path]) == 0


def test_oversight_veto(tmp_path, keys):
    governance = write_json(tmp_path / "oversight.json", {
        "mode": "central", "oversightEnabled": True, "oversightCredentialHash": credential_hash("s3cret")})
    chain_path = build_cli_chain(tmp_path, keys, governance=governance)
    good = tmp_path / "good.token"
    good.write_text("s3cret\n", encoding="utf-8")
    bad = tmp_path / "bad.token"
    bad.write_text("guess\n", encoding="utf-8")

    assert main(["redact", "propose", "--chain", chain_path, "--block", "1", "--tx", tx_hex(chain_path),
                 "--proposer", "node-0", "--payload", "redacted"]) == 0
    assert main(["redact", "veto", "--chain", chain_path, "--request", "req-0001",
                 "--credential-file", str(bad)]) == 3
    assert main(["redact", "veto", "--chain", chain_path, "--request", "req-0001",
                 "--credential-file", str(good)]) == 0
    assert main(["redact", "execute", "--chain", chain_path, "--request", "req-0001",
                 "--secret-key", keys[1]]) == 3
    assert ChainFile().load(chain_path).blocks[1].transactions[0].version == 1


def test_verify_detects_tampering(tmp_path, keys, capsys):
    chain_path = build_cli_chain(tmp_path, keys)
    with open(chain_path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    index = next(i for i, line in enumerate(lines) if json.loads(line).get("type") == "tx")
    record = json.loads(lines[index])
    record["payload"] = b"tampered".hex()
    lines[index] = json.dumps(record, separators=(",", ":"))
    with open(chain_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

    capsys.readouterr()
    assert main(["chain", "verify", "--chain", chain_path]) == 4
    assert record["txId"] in capsys.readouterr().out

    with open(chain_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines[:2] + [lines[2][:-3]]) + "\n")
    assert main(["chain", "verify", "--chain", chain_path]) == 2


def test_usage_errors(tmp_path, keys):
    chain_path = str(tmp_path / "demo.chain")
    assert main(["chain", "init", "--chain", chain_path, "--key", keys[0]]) == 0
    assert main(["chain", "init", "--chain", chain_path, "--key", keys[0]]) == 2
    assert main(["tx", "add", "--chain", chain_path]) == 2
    assert main(["block", "seal", "--chain", chain_path, "--timestamp", "1"]) == 2
    assert main(["chain", "verify", "--chain", str(tmp_path / "missing.chain")]) == 2

    lock_path = chain_path + ".lock"
    with open(lock_path, "w", encoding="utf-8") as f:
        f.write("999")
    assert main(["tx", "add", "--chain", chain_path, "--payload", "x"]) == 2
    os.remove(lock_path)
    assert main(["tx", "add", "--chain", chain_path, "--payload", "x"]) == 0


def test_log_file(tmp_path, keys):
    log_path = str(tmp_path / "run.log")
    assert main(["--log-file", log_path, "chain", "init", "--chain", str(tmp_path / "demo.chain"),
                 "--key", keys[0]]) == 0
    with open(log_path, "r", encoding="utf-8") as f:
        assert "pyredactlib.ledger - INFO" in f.read()


def test_cf_demo(capsys):
    assert main(["cf", "demo", "--bits-per-prime", "12", "--message", "1011", "--new-message", "0110",
                 "--seed", "4"]) == 0
    assert "일치" in capsys.readouterr().out
    assert main(["cf", "demo", "--message", "10", "--new-message", "101"]) == 2


def test_sim_run_writes_reports(tmp_path, capsys):
    out_dir = str(tmp_path / "report")
    assert main(["sim", "run", "--config", "simDemo", "--out", out_dir]) == 0
    assert os.path.exists(os.path.join(out_dir, "report.txt"))
    with open(os.path.join(out_dir, "report.jsonl"), "r", encoding="utf-8") as f:
        summary = json.loads(f.readline())
    assert summary["safe"] is True and summary["converged"] is True

    capsys.readouterr()
    assert main(["sim", "run", "--config", "simTargetedDrop"]) == 0
    assert "경고" in capsys.readouterr().out
    assert main(["sim", "run", "--config", "simAdversary"]) == 0
    assert main(["sim", "run", "--config", str(tmp_path / "missing.json")]) == 2
