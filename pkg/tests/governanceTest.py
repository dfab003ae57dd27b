import json
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
import hypothesis.strategies as st

from pyredactlib.governance import Governance, RedactionRequest, RequestState, Vote
from pyredactlib.governanceConfig import GovernanceConfig, GovernanceMode, credential_hash
from pyredactlib.redactErrors import (
    AuthorizationError,
    ConfigError,
    GovernanceError,
    IntegrityError,
    NotFoundError,
    ParseError,
)

from chainHelpers import build_chain

VOTERS = ["node-0", "node-1", "node-2", "node-3", "node-4"]
TOKEN = "oversight-token"


@pytest.fixture
def chain(ledger, key64):
    return build_chain(ledger, key64, blocks=3, seed=5)


def public_governance(ledger, key64, voters=VOTERS, window=5):
    config = GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR, quorum=Fraction(1, 2), voting_window=window,
                              public_trapdoor=key64.tk, voters=voters)
    return Governance(config, ledgerService=ledger)


def central_governance(ledger, oversight=False):
    config = GovernanceConfig(mode=GovernanceMode.CENTRAL, oversight_enabled=oversight,
                              oversight_credential_hash=credential_hash(TOKEN) if oversight else "")
    return Governance(config, ledgerService=ledger)


def target(chain, height=1, index=0):
    return chain.blocks[height].transactions[index].tx_id


def test_three_of_five_approvals_pass(ledger, key64, chain):
    governance = public_governance(ledger, key64)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    assert request.state == RequestState.OPEN
    assert request.request_id == "req-0001"
    for voter in VOTERS[:2]:
        governance.cast_vote(request.request_id, voter, True, 3)
    assert governance.tally(request.request_id, 3) == RequestState.OPEN
    governance.cast_vote(request.request_id, "node-2", True, 3)
    assert governance.tally(request.request_id, 3) == RequestState.APPROVED
    assert request.approved_at == 3

    governance.execute_redaction(request.request_id, chain)
    assert request.state == RequestState.EXECUTED
    assert chain.find_transaction(target(chain))[1].payload == b"redacted"
    assert ledger.validate_chain(chain).ok


def test_tie_is_rejected(ledger, key64, chain):
    governance = public_governance(ledger, key64, voters=VOTERS[:4])
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    governance.cast_vote(request.request_id, "node-0", True, 3)
    governance.cast_vote(request.request_id, "node-1", True, 3)
    governance.cast_vote(request.request_id, "node-2", False, 3)
    assert governance.tally(request.request_id, 3) == RequestState.OPEN
    governance.cast_vote(request.request_id, "node-3", False, 3)
    assert governance.tally(request.request_id, 3) == RequestState.REJECTED
    with pytest.raises(GovernanceError):
        governance.execute_redaction(request.request_id, chain)


def test_rejection_decided_before_window_closes(ledger, key64, chain):
    governance = public_governance(ledger, key64)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    for voter in VOTERS[:3]:
        governance.cast_vote(request.request_id, voter, False, 3)
    assert governance.outcome(request, 3) == RequestState.REJECTED
    assert request.state == RequestState.OPEN


def test_voting_window(ledger, key64, chain):
    governance = public_governance(ledger, key64, window=5)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    assert request.opened_at == 3
    governance.cast_vote(request.request_id, "node-0", True, 8)
    with pytest.raises(GovernanceError):
        governance.cast_vote(request.request_id, "node-1", True, 9)
    assert governance.tally(request.request_id, 8) == RequestState.OPEN
    assert governance.tally(request.request_id, 9) == RequestState.REJECTED


def test_vote_rules(ledger, key64, chain):
    governance = public_governance(ledger, key64)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    governance.cast_vote(request.request_id, "node-1", True, 3)
    with pytest.raises(GovernanceError):
        governance.cast_vote(request.request_id, "node-1", False, 3)
    assert request.votes["node-1"] == Vote.APPROVE
    with pytest.raises(AuthorizationError):
        governance.cast_vote(request.request_id, "mallory", True, 3)
    with pytest.raises(NotFoundError):
        governance.cast_vote("req-9999", "node-1", True, 3)


def test_unregistered_proposer_is_refused(ledger, key64, chain):
    governance = public_governance(ledger, key64)
    with pytest.raises(AuthorizationError):
        governance.open_request(chain, 1, target(chain), b"redacted", "mallory")
    assert governance.requests == {}


def test_open_request_checks_target(ledger, chain):
    governance = central_governance(ledger)
    with pytest.raises(NotFoundError):
        governance.open_request(chain, 1, bytes(16), b"x", "node-0")
    with pytest.raises(NotFoundError):
        governance.open_request(chain, 7, target(chain), b"x", "node-0")
    governance.open_request(chain, 1, target(chain), b"x", "node-0", request_id="req-0001")
    with pytest.raises(GovernanceError):
        governance.open_request(chain, 1, target(chain), b"y", "node-0", request_id="req-0001")
    assert governance.open_request(chain, 1, target(chain), b"z", "node-0").request_id == "req-0002"


def test_central_mode_needs_trapdoor(ledger, key64, chain):
    governance = central_governance(ledger)
    request = governance.open_request(chain, 2, target(chain, 2, 1), b"redacted", "node-0")
    assert request.state == RequestState.APPROVED
    with pytest.raises(AuthorizationError):
        governance.execute_redaction(request.request_id, chain)
    stamp = governance.execute_redaction(request.request_id, chain, trapdoor=key64.tk)
    assert stamp.request_id == request.request_id
    assert request.state == RequestState.EXECUTED
    with pytest.raises(GovernanceError):
        governance.execute_redaction(request.request_id, chain, trapdoor=key64.tk)


def test_oversight_veto(ledger, key64, chain):
    governance = central_governance(ledger, oversight=True)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    with pytest.raises(AuthorizationError):
        governance.oversight_veto(request.request_id, "wrong-token")
    with pytest.raises(AuthorizationError):
        governance.oversight_veto(request.request_id, None)
    assert governance.oversight_veto(request.request_id, TOKEN) == RequestState.VETOED
    with pytest.raises(GovernanceError):
        governance.execute_redaction(request.request_id, chain, trapdoor=key64.tk)
    assert chain.find_transaction(target(chain))[1].version == 1


def test_executed_request_cannot_be_vetoed(ledger, key64, chain):
    governance = central_governance(ledger, oversight=True)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    governance.execute_redaction(request.request_id, chain, trapdoor=key64.tk)
    with pytest.raises(GovernanceError):
        governance.oversight_veto(request.request_id, TOKEN)
    assert request.state == RequestState.EXECUTED


def test_veto_requires_oversight(ledger, chain):
    governance = central_governance(ledger)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    with pytest.raises(AuthorizationError):
        governance.oversight_veto(request.request_id, TOKEN)


def test_consortium_threshold(ledger, secretShare, chainFile, key64, chain):
    config = GovernanceConfig(mode=GovernanceMode.CONSORTIUM, threshold=3, share_count=5)
    governance = Governance(config, ledgerService=ledger, secretShareService=secretShare)
    shares = secretShare.split_trapdoor(key64.tk, 3, 5, key64.params.q, random.Random(12))
    request = governance.open_request(chain, 2, target(chain, 2), b"redacted", "node-0")
    before = chainFile.dumps(chain)

    with pytest.raises(AuthorizationError):
        governance.execute_redaction(request.request_id, chain, shares=[])
    with pytest.raises(IntegrityError):
        governance.execute_redaction(request.request_id, chain, shares=shares[:2])
    assert chainFile.dumps(chain) == before
    assert request.state == RequestState.APPROVED

    governance.execute_redaction(request.request_id, chain, shares=[shares[4], shares[0], shares[2]])
    assert request.state == RequestState.EXECUTED
    assert ledger.validate_chain(chain).ok


def test_public_trapdoor_needs_configured_trapdoor(ledger, chain):
    config = GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR, voters=["node-0"])
    governance = Governance(config, ledgerService=ledger)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    governance.cast_vote(request.request_id, "node-0", True, 3)
    assert governance.tally(request.request_id, 3) == RequestState.APPROVED
    with pytest.raises(ConfigError):
        governance.execute_redaction(request.request_id, chain)


def test_record_execution(ledger, chain):
    governance = central_governance(ledger)
    request = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    governance.record_execution(request.request_id, 4)
    assert request.state == RequestState.EXECUTED
    assert request.history[-1] == "executed@4"
    with pytest.raises(GovernanceError):
        governance.record_execution(request.request_id, 5)


def test_registry_save_and_load(ledger, key64, chain, tmp_path):
    governance = public_governance(ledger, key64)
    request = governance.open_request(chain, 1, target(chain), b"", "node-0")
    governance.cast_vote(request.request_id, "node-3", False, 3)
    path = str(tmp_path / "demo.chain.requests")
    governance.save(path)

    restored = public_governance(ledger, key64)
    restored.load(path)
    assert restored.to_dict() == governance.to_dict()
    loaded = restored.get_request(request.request_id)
    assert loaded.is_erase
    assert loaded.votes == {"node-3": Vote.REJECT}
    assert restored.open_request(chain, 1, target(chain), b"x", "node-1").request_id == "req-0002"

    fresh = public_governance(ledger, key64)
    fresh.load(str(tmp_path / "missing.requests"))
    assert fresh.requests == {}


def test_registry_rejects_bad_files(ledger, key64, tmp_path):
    governance = public_governance(ledger, key64)
    path = tmp_path / "bad.requests"
    path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
    with pytest.raises(ParseError):
        governance.load(str(path))
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ParseError):
        governance.load(str(path))


def test_config_validation():
    with pytest.raises(ConfigError):
        GovernanceConfig(mode=GovernanceMode.CONSORTIUM, threshold=4, share_count=3).validate()
    with pytest.raises(ConfigError):
        GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR, quorum=Fraction(0), voters=["a"]).validate()
    with pytest.raises(ConfigError):
        GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR, quorum=Fraction(3, 2), voters=["a"]).validate()
    with pytest.raises(ConfigError):
        GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR).validate()
    with pytest.raises(ConfigError):
        GovernanceConfig(voters=["a", "a"]).validate()
    with pytest.raises(ConfigError):
        GovernanceConfig(oversight_enabled=True).validate()
    with pytest.raises(ConfigError):
        GovernanceConfig.from_dict({"mode": "dictatorship"})
    with pytest.raises(ConfigError):
        GovernanceConfig.from_dict({"quorum": "1/0"})


def test_config_round_trip(key64, tmp_path):
    config = GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR, quorum=Fraction(2, 3), voting_window=4,
                              oversight_enabled=True, oversight_credential_hash=credential_hash(TOKEN),
                              public_trapdoor=key64.tk, voters=VOTERS)
    assert GovernanceConfig.from_dict(config.to_dict()).to_dict() == config.to_dict()

    path = str(tmp_path / "governance.json")
    assert config.save(path) == path
    loaded = GovernanceConfig().load(path)
    assert loaded.to_dict() == config.to_dict()
    assert loaded.config_file_path == path
    assert loaded.check_credential(TOKEN)
    assert not loaded.check_credential("other")

    with pytest.raises(ConfigError):
        GovernanceConfig().load(str(tmp_path / "missing.json"))


def test_bundled_config_loads():
    config = GovernanceConfig().load()
    assert config.mode == GovernanceMode.CENTRAL
    assert config.voters == ["node-0", "node-1", "node-2"]


def test_close_expired_requests(ledger, key64, chain):
    governance = public_governance(ledger, key64, window=2)
    first = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    second = governance.open_request(chain, 2, target(chain, 2), b"redacted", "node-1", current_height=5)
    governance.cast_vote(first.request_id, "node-0", True, 3)
    assert governance.close_expired(5) == []
    assert governance.close_expired(6) == [first.request_id]
    assert first.state == RequestState.REJECTED
    assert first.history[-1] == "rejected@6"
    assert second.state == RequestState.OPEN
    assert governance.close_expired(8) == [second.request_id]
    assert governance.close_expired(20) == []


def test_record_decision(ledger, key64, chain):
    replica = public_governance(ledger, key64, window=2)
    replica.open_request(chain, 1, target(chain), b"redacted", "node-0", request_id="req-0001")
    assert replica.record_decision("req-0001", RequestState.REJECTED, 6)
    assert not replica.record_decision("req-0001", RequestState.APPROVED, 7)
    assert not replica.record_decision("req-0404", RequestState.REJECTED, 7)
    assert replica.get_request("req-0001").history == ["open@3", "rejected@6"]


def test_new_request_after_veto(ledger, key64, chain):
    governance = central_governance(ledger, oversight=True)
    first = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    governance.oversight_veto(first.request_id, TOKEN)
    second = governance.open_request(chain, 1, target(chain), b"redacted", "node-0")
    assert second.request_id == "req-0002"
    assert second.state == RequestState.APPROVED
    governance.execute_redaction(second.request_id, chain, trapdoor=key64.tk)
    assert first.state == RequestState.VETOED
    assert chain.find_transaction(target(chain))[1].payload == b"redacted"
    assert ledger.validate_chain(chain).ok


OUTCOME_RANK = {RequestState.REJECTED: 0, RequestState.OPEN: 1, RequestState.APPROVED: 2}


@given(votes=st.lists(st.sampled_from([None, Vote.APPROVE, Vote.REJECT]), min_size=1, max_size=9),
       quorum=st.fractions(min_value=Fraction(1, 10), max_value=Fraction(1), max_denominator=10),
       height=st.integers(min_value=0, max_value=10),
       data=st.data())
def test_extra_approval_never_lowers_outcome(votes, quorum, height, data):
    assume(any(vote != Vote.APPROVE for vote in votes))
    voters = [f"node-{i}" for i in range(len(votes))]
    config = GovernanceConfig(mode=GovernanceMode.PUBLIC_TRAPDOOR, quorum=quorum, voting_window=5, voters=voters)
    governance = Governance(config)
    cast = {voter: vote for voter, vote in zip(voters, votes) if vote is not None}
    before = RedactionRequest("req-0001", 1, bytes(16), b"x", "node-0", 0, votes=dict(cast))
    index = data.draw(st.sampled_from([i for i, vote in enumerate(votes) if vote != Vote.APPROVE]))
    cast[voters[index]] = Vote.APPROVE
    after = RedactionRequest("req-0001", 1, bytes(16), b"x", "node-0", 0, votes=cast)
    assert OUTCOME_RANK[governance.outcome(after, height)] >= OUTCOME_RANK[governance.outcome(before, height)]
