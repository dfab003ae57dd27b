import copy
import hashlib
import random

import pytest

from pyredactlib.ledger import Ledger, RedactionRejection, RedactionStamp, Transaction
from pyredactlib.merkleTree import MerkleTree
from pyredactlib.redactErrors import (
    AuthorizationError,
    IntegrityError,
    NotFoundError,
    ParameterError,
    SizeError,
)

from chainHelpers import build_chain


def snapshot(chain):
    return [(block.block_hash, block.header.merkle_root,
             [(tx.tx_id, tx.payload, tx.r, tx.ch_digest, tx.version, tx.redaction_count) for tx in block.transactions],
             len(block.header.redaction_meta))
            for block in chain.blocks]


def test_genesis_chain_is_valid(ledger, key64):
    chain = ledger.new_chain(key64)
    assert chain.height == 0
    assert not chain.key.has_trapdoor
    assert ledger.validate_chain(chain).ok


def test_built_chain_is_valid(ledger, key64):
    chain = build_chain(ledger, key64)
    assert chain.height == 10
    assert sum(len(block.transactions) for block in chain.blocks) == 30
    assert ledger.validate_chain(chain).ok


def test_redaction_is_bit_exact(ledger, key64):
    chain = build_chain(ledger, key64)
    before = snapshot(chain)
    target = chain.blocks[4].transactions[1]
    stamp = ledger.redact_transaction(chain, key64.tk, 4, target.tx_id, b"redacted", "req-0001")
    after = snapshot(chain)

    assert [item[0] for item in before] == [item[0] for item in after]
    assert [item[1] for item in before] == [item[1] for item in after]
    for height, (old, new) in enumerate(zip(before, after)):
        for tx_index, (old_tx, new_tx) in enumerate(zip(old[2], new[2])):
            if (height, tx_index) == (4, 1):
                assert old_tx[0] == new_tx[0] and old_tx[3] == new_tx[3]
                assert new_tx[1] == b"redacted" and new_tx[2] != old_tx[2]
                assert (new_tx[4], new_tx[5]) == (2, 1)
            else:
                assert old_tx == new_tx
    assert after[4][3] == 1
    assert stamp.old_payload_commitment == hashlib.sha256(b"tx-4-1").digest()
    assert stamp.approved_at == chain.height
    assert ledger.validate_chain(chain).ok


def test_edit_without_adapt_fails_validation(ledger, key64):
    chain = build_chain(ledger, key64)
    target = chain.blocks[6].transactions[2]
    target.payload = b"tampered"
    report = ledger.validate_chain(chain)
    assert not report.ok
    assert report.height == 6
    assert report.tx_id == target.tx_id


def test_redaction_needs_trapdoor(ledger, key64):
    chain = build_chain(ledger, key64, blocks=2)
    before = snapshot(chain)
    tx_id = chain.blocks[1].transactions[0].tx_id
    with pytest.raises(AuthorizationError):
        ledger.redact_transaction(chain, None, 1, tx_id, b"x", "req-0001")
    assert snapshot(chain) == before


def test_wrong_trapdoor_leaves_chain_untouched(ledger, key64):
    chain = build_chain(ledger, key64, blocks=2)
    before = snapshot(chain)
    tx_id = chain.blocks[2].transactions[0].tx_id
    wrong = key64.tk % (key64.params.q - 1) + 1
    with pytest.raises(IntegrityError):
        ledger.redact_transaction(chain, wrong, 2, tx_id, b"x", "req-0001")
    assert snapshot(chain) == before


def test_unknown_targets(ledger, key64):
    chain = build_chain(ledger, key64, blocks=1)
    with pytest.raises(NotFoundError):
        ledger.redact_transaction(chain, key64.tk, 5, bytes(16), b"x", "req-0001")
    with pytest.raises(NotFoundError):
        ledger.redact_transaction(chain, key64.tk, 1, bytes(16), b"x", "req-0001")
    with pytest.raises(NotFoundError):
        chain.find_transaction(bytes(16))


def test_erase_and_repeated_redaction(ledger, key64):
    chain = build_chain(ledger, key64, blocks=3)
    tx_id = chain.blocks[2].transactions[0].tx_id
    ledger.redact_transaction(chain, key64.tk, 2, tx_id, b"first", "req-0001")
    ledger.erase_transaction(chain, key64.tk, 2, tx_id, "req-0002")
    _, tx = chain.find_transaction(tx_id)
    assert tx.payload == b""
    assert (tx.version, tx.redaction_count) == (3, 2)
    history = ledger.audit_history(chain, tx_id)
    assert [stamp.request_id for stamp in history] == ["req-0001", "req-0002"]
    assert history[1].old_payload_commitment == hashlib.sha256(b"first").digest()
    assert ledger.validate_chain(chain).ok


def test_seal_rejects_bad_input(ledger, key64):
    rng = random.Random(4)
    chain = ledger.new_chain(key64)
    with pytest.raises(ParameterError):
        ledger.seal_block(chain, [], 1)
    tx = ledger.create_transaction(key64, b"a", rng)
    with pytest.raises(ParameterError):
        ledger.seal_block(chain, [tx, tx], 1)
    with pytest.raises(ParameterError):
        ledger.seal_block(chain, [tx], -1)
    broken = copy.copy(tx)
    broken.payload = b"b"
    with pytest.raises(IntegrityError, match=tx.tx_id.hex()):
        ledger.seal_block(chain, [broken], 1)
    ledger.seal_block(chain, [tx], 1)
    with pytest.raises(ParameterError):
        ledger.seal_block(chain, [tx], 2)
    assert chain.height == 1


def test_payload_size_cap(chamHash, key64):
    small = Ledger(chamHashService=chamHash, max_payload_bytes=8)
    rng = random.Random(5)
    small.create_transaction(key64, b"12345678", rng)
    with pytest.raises(SizeError):
        small.create_transaction(key64, b"123456789", rng)


def test_empty_payload_is_allowed(ledger, key64):
    tx = ledger.create_transaction(key64, b"", random.Random(6))
    assert ledger.check_transaction(key64, tx) is None


def test_stamp_before_block_height_is_invalid(ledger, key64):
    chain = build_chain(ledger, key64, blocks=3)
    tx_id = chain.blocks[3].transactions[0].tx_id
    stamp = ledger.redact_transaction(chain, key64.tk, 3, tx_id, b"x", "req-0001")
    stamp.approved_at = 2
    report = ledger.validate_chain(chain)
    assert not report.ok and report.tx_id == tx_id


def test_missing_stamp_is_detected(ledger, key64):
    chain = build_chain(ledger, key64, blocks=2)
    tx_id = chain.blocks[1].transactions[0].tx_id
    ledger.redact_transaction(chain, key64.tk, 1, tx_id, b"x", "req-0001")
    chain.blocks[1].header.redaction_meta.clear()
    report = ledger.validate_chain(chain)
    assert not report.ok and report.height == 1 and report.tx_id == tx_id


def test_replica_checks(ledger, chainFile, key64):
    chain = build_chain(ledger, key64, blocks=2)
    replica = chainFile.copy_chain(chain)
    tx_id = chain.blocks[1].transactions[0].tx_id
    _, original = replica.find_transaction(tx_id)
    original = copy.copy(original)

    stamp = ledger.redact_transaction(chain, key64.tk, 1, tx_id, b"v2", "req-0001")
    _, redacted = chain.find_transaction(tx_id)

    forged = Transaction(tx_id, b"forged", original.r, original.ch_digest, 2, 1)
    assert ledger.check_redaction(replica, 1, forged) == RedactionRejection.CHAMELEON_MISMATCH
    assert ledger.check_redaction(replica, 9, redacted) == RedactionRejection.UNKNOWN_BLOCK
    assert ledger.check_redaction(replica, 2, redacted) == RedactionRejection.UNKNOWN_TX
    assert ledger.check_redaction(replica, 1, original) == RedactionRejection.VERSION_REGRESSION

    ledger.apply_redaction(replica, 1, copy.copy(redacted), stamp)
    assert chainFile.dumps(replica) == chainFile.dumps(chain)
    assert ledger.check_redaction(replica, 1, original) == RedactionRejection.VERSION_REGRESSION

    ledger.redact_transaction(chain, key64.tk, 1, tx_id, b"v3", "req-0002")
    ledger.redact_transaction(chain, key64.tk, 1, tx_id, b"v4", "req-0003")
    _, latest = chain.find_transaction(tx_id)
    assert ledger.check_redaction(replica, 1, latest) == RedactionRejection.VERSION_GAP
    with pytest.raises(IntegrityError):
        ledger.apply_redaction(replica, 1, copy.copy(latest), stamp)
    assert ledger.validate_chain(replica).ok


def test_apply_rejects_mismatched_stamp(ledger, chainFile, key64):
    chain = build_chain(ledger, key64, blocks=1)
    replica = chainFile.copy_chain(chain)
    tx_id = chain.blocks[1].transactions[0].tx_id
    ledger.redact_transaction(chain, key64.tk, 1, tx_id, b"v2", "req-0001")
    _, redacted = chain.find_transaction(tx_id)
    bad_stamp = RedactionStamp(bytes(16), bytes(32), "req-0001", 1)
    with pytest.raises(IntegrityError):
        ledger.apply_redaction(replica, 1, copy.copy(redacted), bad_stamp)
    assert replica.find_transaction(tx_id)[1].version == 1


def test_merkle_inclusion_survives_redaction(ledger, key64):
    chain = build_chain(ledger, key64, blocks=1, per_block=5)
    block = chain.blocks[1]
    tx = block.transactions[3]
    ledger.redact_transaction(chain, key64.tk, 1, tx.tx_id, b"gone", "req-0001")
    tree = MerkleTree([item.ch_digest for item in block.transactions])
    assert MerkleTree.verify_proof(tx.ch_digest, tree.proof(3), block.header.merkle_root)


def test_validation_report_describe(ledger, key64):
    chain = build_chain(ledger, key64, blocks=1)
    tx = chain.blocks[1].transactions[0]
    tx.r = (tx.r + 1) % key64.params.q
    report = ledger.validate_chain(chain)
    assert tx.tx_id.hex() in report.describe()


def test_identity_redaction_keeps_randomness(ledger, key64):
    chain = build_chain(ledger, key64, blocks=2)
    tx = chain.blocks[2].transactions[2]
    old_r, old_payload = tx.r, tx.payload
    stamp = ledger.redact_transaction(chain, key64.tk, 2, tx.tx_id, old_payload, "req-0001")
    assert (tx.payload, tx.r) == (old_payload, old_r)
    assert (tx.version, tx.redaction_count) == (2, 1)
    assert chain.blocks[2].header.redaction_meta == [stamp]
    assert stamp.old_payload_commitment == hashlib.sha256(old_payload).digest()
    assert ledger.validate_chain(chain).ok


def test_toy_key_transaction_digest(ledger, toy_key):
    payload = next(candidate for candidate in (f"payload-{i}".encode("utf-8") for i in range(1000))
                   if int(hashlib.sha256(candidate).hexdigest(), 16) % 11 == 5)
    tx = ledger.create_transaction(toy_key.public(), payload, random.Random(0), r=7, tx_id=bytes(16))
    assert tx.ch_digest == 16
    assert ledger.check_transaction(toy_key, tx) is None


def test_apply_rejects_stamp_for_other_version(ledger, chainFile, key64):
    chain = build_chain(ledger, key64, blocks=1)
    replica = chainFile.copy_chain(chain)
    tx_id = chain.blocks[1].transactions[0].tx_id
    stamp = ledger.redact_transaction(chain, key64.tk, 1, tx_id, b"v2", "req-0001")
    _, redacted = chain.find_transaction(tx_id)
    stale = RedactionStamp(tx_id, hashlib.sha256(b"v2").digest(), "req-0001", stamp.approved_at)
    with pytest.raises(IntegrityError, match="stamp-mismatch"):
        ledger.apply_redaction(replica, 1, copy.copy(redacted), stale)
    assert replica.find_transaction(tx_id)[1].version == 1
    assert replica.blocks[1].header.redaction_meta == []

    ledger.apply_redaction(replica, 1, copy.copy(redacted), stamp)
    assert chainFile.dumps(replica) == chainFile.dumps(chain)
