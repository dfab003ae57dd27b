#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
netSim 모듈 - simpy 기반의 결정적 허가형 네트워크 시뮬레이션

봉인자 하나가 블록을 봉인해 방송하고, 예정된 수정 요청을 제안/투표/실행합니다.
노드마다 simpy.Store 수신함을 두며 같은 논리 시각의 메시지는 보낸 순서대로 처리됩니다.
정직한 노드는 검증한 메시지로만 복제본을 바꾸며, 수정 결과는 다음 순서로 확인합니다.
    1. 카멜레온 검증 (트랩도어 없이 만든 위조 차단)
    2. 버전 단조성 (되돌리기 공격 차단)
    3. 로컬 거버넌스 복제본에서의 승인 여부
모르는 블록에 대한 수정 결과를 받으면 봉인자에게서 전체 복제본을 다시 받습니다.
"""

import copy
import hashlib
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import simpy

from pyredactlib.canonical import dump_record
from pyredactlib.chainFile import ChainFile
from pyredactlib.chamHash import ChamHash, ChameleonKeyPair
from pyredactlib.governance import Governance, RequestState
from pyredactlib.governanceConfig import GovernanceMode
from pyredactlib.ledger import Chain, Ledger, RedactionStamp, Transaction
from pyredactlib.redactErrors import ConfigError, RedactError
from pyredactlib.secretShare import SecretShare, TrapdoorShare
from pyredactlib.simConfig import AdversaryBehavior, AdversarySpec, MessageKind, ScheduledRedaction, SimConfig

logger = logging.getLogger(__name__)

UNAPPROVED = "unapproved"


class NodeRole(Enum):
    SEALER = "sealer"
    VOTER = "voter"
    OBSERVER = "observer"
    ADVERSARY = "adversary"


@dataclass
class SimMessage:
    kind: MessageKind
    payload: dict
    sender: str
    logical_time: int


class SimNode:
    """시뮬레이션 노드 하나. 로컬 체인 복제본과 거버넌스 복제본, 수신함을 가집니다."""

    def __init__(self, env: simpy.Environment, node_id: str, role: NodeRole, chain: Chain,
                 governance: Optional[Governance] = None, adversary: Optional[AdversarySpec] = None):
        self.env = env
        self.node_id = node_id
        self.role = role
        self.chain = chain
        self.governance = governance
        self.adversary = adversary
        self.inbox = simpy.Store(env)
        self.share: Optional[TrapdoorShare] = None
        self.accepted_versions: Dict[bytes, int] = {}
        # 공격자 전용: 마지막으로 관찰한 수정 직전의 트랜잭션
        self.captured: Optional[dict] = None
        self.acted = False

    @property
    def honest(self) -> bool:
        return self.role != NodeRole.ADVERSARY


@dataclass(frozen=True)
class RejectedMessage:
    node: str
    sender: str
    kind: str
    ref: str
    reason: str


@dataclass(frozen=True)
class DroppedMessage:
    node: str
    kind: str
    ref: str


@dataclass(frozen=True)
class ResyncEvent:
    node: str
    source: str
    at: int


@dataclass
class Divergence:
    """기준 복제본과 다른 노드. height/tx_id 는 첫 차이 위치, missed 는 그 노드가 놓친 메시지."""
    node: str
    height: Optional[int]
    tx_id: Optional[bytes]
    missed: List[str] = field(default_factory=list)


@dataclass
class SimReport:
    """
    시뮬레이션 결과.
    같은 설정과 시드면 to_records() / dumps() 결과가 바이트 단위로 같습니다.
    """
    seed: int
    mode: str
    sealer: str
    adversaries: List[str]
    node_heights: Dict[str, int]
    node_digests: Dict[str, str]
    requests: Dict[str, str]
    executed: List[str]
    rejections: List[RejectedMessage]
    dropped: List[DroppedMessage]
    attacks: List[str]
    divergences: List[Divergence]
    resyncs: List[ResyncEvent]
    violations: List[str]

    @property
    def safe(self) -> bool:
        return not self.violations

    @property
    def converged(self) -> bool:
        return not self.divergences

    def adversary_rejections(self) -> List[RejectedMessage]:
        return [item for item in self.rejections if item.sender in self.adversaries]

    def rejected_requests(self) -> List[str]:
        return [request_id for request_id, state in self.requests.items()
                if state != RequestState.EXECUTED.value]

    def to_records(self) -> List[dict]:
        records = [{
            "type": "simSummary",
            "seed": self.seed,
            "mode": self.mode,
            "sealer": self.sealer,
            "safe": self.safe,
            "converged": self.converged,
            "executed": list(self.executed),
            "notExecuted": self.rejected_requests(),
            "divergenceCount": len(self.divergences),
        }]
        for node_id, digest in self.node_digests.items():
            records.append({"type": "node", "node": node_id, "height": self.node_heights[node_id], "digest": digest})
        for request_id, state in self.requests.items():
            records.append({"type": "request", "requestId": request_id, "state": state})
        for item in self.rejections:
            records.append({"type": "rejection", "node": item.node, "sender": item.sender, "kind": item.kind,
                            "ref": item.ref, "reason": item.reason})
        for item in self.dropped:
            records.append({"type": "drop", "node": item.node, "kind": item.kind, "ref": item.ref})
        for attack in self.attacks:
            records.append({"type": "attack", "detail": attack})
        for item in self.divergences:
            records.append({"type": "divergence", "node": item.node, "height": item.height,
                            "txId": None if item.tx_id is None else item.tx_id.hex(), "missed": list(item.missed)})
        for item in self.resyncs:
            records.append({"type": "resync", "node": item.node, "source": item.source, "at": item.at})
        for violation in self.violations:
            records.append({"type": "violation", "detail": violation})
        return records

    def dumps(self) -> str:
        """체인 파일과 같은 한 줄 JSON 레코드 형식."""
        return "".join(dump_record(record) + "\n" for record in self.to_records())

    def to_text(self) -> str:
        lines = [
            f"시뮬레이션 결과 (시드 {self.seed}, 모드 {self.mode}, 봉인자 {self.sealer})",
            f"  안전성: {'유지' if self.safe else '위반'}",
            f"  수렴: {'예' if self.converged else '아니오'} (불일치 노드 {len(self.divergences)}개)",
            f"  실행된 수정: {', '.join(self.executed) or '없음'}",
            f"  실행되지 않은 요청: {', '.join(self.rejected_requests()) or '없음'}",
            f"  거부된 메시지: {len(self.rejections)}개 (공격자 발신 {len(self.adversary_rejections())}개)",
            f"  유실된 메시지: {len(self.dropped)}개",
            "  노드별 최종 체인:",
        ]
        for node_id, digest in self.node_digests.items():
            lines.append(f"    {node_id}: 높이 {self.node_heights[node_id]}, sha256 {digest}")
        for item in self.divergences:
            location = "높이 차이" if item.height is None else f"높이 {item.height}"
            if item.tx_id is not None:
                location += f", tx {item.tx_id.hex()}"
            lines.append(f"  불일치: {item.node} ({location}), 놓친 메시지: {', '.join(item.missed) or '없음'}")
        for attack in self.attacks:
            lines.append(f"  공격: {attack}")
        for violation in self.violations:
            lines.append(f"  안전성 위반: {violation}")
        return "\n".join(lines) + "\n"


class SimRun:
    """
    시뮬레이션 한 번의 실행 상태.
    실행마다 새로 만들어지므로 서로 다른 실행은 변경 가능한 상태를 공유하지 않습니다.
    """

    def __init__(self, simService: "NetSim", config: SimConfig):
        self.sim = simService
        self.config = config
        self.env = simpy.Environment()
        self.rng = random.Random(config.seed)
        self.fault_rng = random.Random(f"fault-{config.seed}")

        self.governance_config = config.effective_governance()
        self.keypair: ChameleonKeyPair = simService.chamHash.keygen(config.security_bits, rng=self.rng)
        if self.governance_config.mode == GovernanceMode.PUBLIC_TRAPDOOR:
            self.governance_config.public_trapdoor = self.keypair.tk

        self.nodes: List[SimNode] = []
        voters = self.governance_config.voters
        for node_id in config.honest_ids():
            if node_id == config.sealer:
                role = NodeRole.SEALER
            else:
                role = NodeRole.VOTER if node_id in voters else NodeRole.OBSERVER
            self.nodes.append(SimNode(self.env, node_id, role, self._new_replica(), self._new_governance()))
        for node_id, spec in zip(config.adversary_ids(), config.adversaries):
            self.nodes.append(SimNode(self.env, node_id, NodeRole.ADVERSARY, self._new_replica(), adversary=spec))
        self._by_id = {node.node_id: node for node in self.nodes}
        self.sealer = self._by_id[config.sealer]

        if self.governance_config.mode == GovernanceMode.CONSORTIUM:
            shares = simService.secretShare.split_trapdoor(
                self.keypair.tk, self.governance_config.threshold, self.governance_config.share_count,
                self.keypair.params.q, self.rng)
            for share, voter in zip(shares, voters):
                self._by_id[voter].share = share

        self.schedule: Dict[int, List[ScheduledRedaction]] = {}
        for redaction in config.redactions:
            self.schedule.setdefault(redaction.at_height, []).append(redaction)
        self.policy: Dict[str, bool] = {}
        self.pending_shares: Dict[str, List[TrapdoorShare]] = {}

        self.executed: List[str] = []
        self.rejections: List[RejectedMessage] = []
        self.dropped: List[DroppedMessage] = []
        self.attacks: List[str] = []
        self.resyncs: List[ResyncEvent] = []
        self.violations: List[str] = []

    def _new_replica(self) -> Chain:
        return self.sim.ledger.new_chain(self.keypair)

    def _new_governance(self) -> Governance:
        config = copy.deepcopy(self.governance_config)
        return Governance(config, ledgerService=self.sim.ledger, secretShareService=self.sim.secretShare)

    def node(self, node_id: str) -> SimNode:
        return self._by_id[node_id]

    def honest_nodes(self) -> List[SimNode]:
        """봉인자를 맨 앞에 둔 정직한 노드 목록."""
        return [self.sealer] + [node for node in self.nodes if node.honest and node is not self.sealer]

    # ---- 네트워크 ----

    @staticmethod
    def _message_ref(kind: MessageKind, payload: dict) -> str:
        if kind == MessageKind.NEW_BLOCK:
            return f"block-{payload['records'][0]['height']}"
        return str(payload.get("requestId", ""))

    def _is_dropped(self, receiver: SimNode, kind: MessageKind) -> bool:
        fault = self.config.fault
        if fault.is_none or kind not in fault.drop_kinds:
            return False
        if fault.drop_targets and receiver.node_id not in fault.drop_targets:
            return False
        return self.fault_rng.random() < float(fault.drop_rate)

    def _send(self, sender: SimNode, kind: MessageKind, payload: dict,
              targets: Optional[Sequence[str]] = None) -> None:
        for receiver in self.nodes:
            if receiver is sender or (targets is not None and receiver.node_id not in targets):
                continue
            if self._is_dropped(receiver, kind):
                ref = self._message_ref(kind, payload)
                self.dropped.append(DroppedMessage(receiver.node_id, kind.value, ref))
                logger.debug(f"메시지 유실: {kind.value} {ref} → {receiver.node_id}")
                continue
            receiver.inbox.put(SimMessage(kind, payload, sender.node_id, int(self.env.now)))

    def _reject(self, node: SimNode, message: SimMessage, reason: str) -> None:
        ref = self._message_ref(message.kind, message.payload)
        self.rejections.append(RejectedMessage(node.node_id, message.sender, message.kind.value, ref, reason))
        logger.warning(f"{node.node_id}: {message.sender} 의 {message.kind.value} ({ref}) 거부 - {reason}")

    def _track_versions(self, node: SimNode, txs: Sequence[Transaction]) -> None:
        for tx in txs:
            previous = node.accepted_versions.get(tx.tx_id, 0)
            if tx.version < previous:
                self.violations.append(f"{node.node_id}: tx {tx.tx_id.hex()} 버전 감소 {previous} → {tx.version}")
            node.accepted_versions[tx.tx_id] = max(previous, tx.version)

    def _resync(self, node: SimNode, source: SimNode) -> None:
        self.sim.resync(node, source)
        self.resyncs.append(ResyncEvent(node.node_id, source.node_id, int(self.env.now)))
        self._track_versions(node, [tx for block in node.chain.blocks for tx in block.transactions])

    # ---- 봉인자 ----

    def _sealer_process(self):
        sealer = self.sealer
        for height in range(1, self.config.blocks_to_seal + 1):
            yield self.env.timeout(1)
            txs = [self.sim.ledger.create_transaction(sealer.chain.key, f"tx-{height}-{index}".encode("utf-8"), self.rng)
                   for index in range(self.config.txs_per_block)]
            block = self.sim.ledger.seal_block(sealer.chain, txs, int(self.env.now))
            self._track_versions(sealer, txs)
            # 투표 기간이 끝난 요청은 이 블록과 함께 결과를 알림
            decided = sealer.governance.close_expired(block.height)
            decisions = [{"requestId": request_id, "state": sealer.governance.get_request(request_id).state.value}
                         for request_id in decided]
            self._send(sealer, MessageKind.NEW_BLOCK,
                       {"records": self.sim.chainFile.block_records(block), "decided": decisions})
            for decision in decisions:
                logger.info(f"투표 기간 종료: 요청 {decision['requestId']} → {decision['state']}")
                if decision["state"] == RequestState.APPROVED.value:
                    self._execute(decision["requestId"])
            for redaction in self.schedule.get(height, []):
                self._propose(redaction)

    def _propose(self, redaction: ScheduledRedaction) -> None:
        sealer = self.sealer
        tx = sealer.chain.block_at(redaction.block_height).transactions[redaction.tx_index]
        request = sealer.governance.open_request(sealer.chain, redaction.block_height, tx.tx_id,
                                                 redaction.new_payload, sealer.node_id)
        self.policy[request.request_id] = redaction.approve
        self._send(sealer, MessageKind.REDACTION_PROPOSAL, {
            "requestId": request.request_id,
            "blockHeight": request.block_height,
            "txId": request.tx_id.hex(),
            "newPayload": request.new_payload.hex(),
            "proposer": request.proposer,
            "openedAt": request.opened_at,
        })
        mode = self.governance_config.mode
        if mode == GovernanceMode.CENTRAL:
            if redaction.approve:
                self._execute(request.request_id, trapdoor=self.keypair.tk)
        elif mode == GovernanceMode.PUBLIC_TRAPDOOR:
            self._vote(sealer, request.request_id)
        elif redaction.approve and sealer.share is not None:
            self._collect_share(request.request_id, sealer.share)

    def _execute(self, request_id: str, trapdoor: Optional[int] = None,
                 shares: Optional[Sequence[TrapdoorShare]] = None) -> None:
        sealer = self.sealer
        try:
            stamp = sealer.governance.execute_redaction(request_id, sealer.chain, trapdoor=trapdoor, shares=shares)
        except RedactError as e:
            logger.warning(f"봉인자의 요청 {request_id} 실행 실패: {e}")
            return
        request = sealer.governance.get_request(request_id)
        _, tx = sealer.chain.find_transaction(request.tx_id)
        self._track_versions(sealer, [tx])
        self.executed.append(request_id)
        self._send(sealer, MessageKind.REDACTION_EXECUTED, {
            "requestId": request_id,
            "blockHeight": request.block_height,
            "tx": self.sim.chainFile.tx_to_record(tx),
            "stamp": self.sim.chainFile.stamp_to_record(stamp),
        })

    def _vote(self, node: SimNode, request_id: str) -> None:
        approve = self.policy.get(request_id, False)
        try:
            node.governance.cast_vote(request_id, node.node_id, approve, node.chain.height)
        except RedactError as e:
            logger.warning(f"{node.node_id}: 요청 {request_id} 투표 실패 - {e}")
            return
        self._send(node, MessageKind.VOTE, {"requestId": request_id, "voter": node.node_id, "approve": approve})
        if node is self.sealer:
            self._sealer_tally(request_id)

    def _sealer_tally(self, request_id: str) -> None:
        state = self.sealer.governance.tally(request_id, self.sealer.chain.height)
        if state == RequestState.APPROVED:
            self._execute(request_id)

    def _collect_share(self, request_id: str, share: TrapdoorShare) -> None:
        collected = self.pending_shares.setdefault(request_id, [])
        if any(item.index == share.index for item in collected):
            return
        collected.append(share)
        request = self.sealer.governance.get_request(request_id)
        if len(collected) >= self.governance_config.threshold and request.state == RequestState.APPROVED:
            self._execute(request_id, shares=list(collected))

    # ---- 정직한 노드 ----

    def _node_process(self, node: SimNode):
        while True:
            message = yield node.inbox.get()
            if node.honest:
                self._handle(node, message)
            else:
                self._handle_adversary(node, message)

    def _handle(self, node: SimNode, message: SimMessage) -> None:
        if message.kind == MessageKind.NEW_BLOCK:
            self._on_new_block(node, message)
        elif message.kind == MessageKind.REDACTION_PROPOSAL:
            self._on_proposal(node, message)
        elif message.kind == MessageKind.VOTE:
            self._on_vote(node, message)
        else:
            self._on_executed(node, message)

    def _on_new_block(self, node: SimNode, message: SimMessage) -> None:
        if message.sender != self.sealer.node_id:
            self._reject(node, message, "not-sealer")
            return
        block = self.sim.chainFile.block_from_records(message.payload["records"])
        if block.height <= node.chain.height:
            return
        if block.height > node.chain.height + 1:
            self._resync(node, self.sealer)
            return
        report = self.sim.ledger.validate_block(node.chain.key, block, node.chain.tip)
        if not report.ok:
            self._reject(node, message, report.reason)
            return
        node.chain.blocks.append(block)
        self._track_versions(node, block.transactions)
        for decision in message.payload.get("decided", []):
            node.governance.record_decision(decision["requestId"], RequestState(decision["state"]), block.height)

    def _on_proposal(self, node: SimNode, message: SimMessage) -> None:
        payload = message.payload
        if payload["proposer"] != message.sender:
            self._reject(node, message, "proposer-mismatch")
            return
        try:
            node.governance.open_request(node.chain, payload["blockHeight"], bytes.fromhex(payload["txId"]),
                                         bytes.fromhex(payload["newPayload"]), payload["proposer"],
                                         current_height=payload["openedAt"], request_id=payload["requestId"])
        except RedactError as e:
            self._reject(node, message, str(e))
            return
        request_id = payload["requestId"]
        mode = self.governance_config.mode
        if mode == GovernanceMode.PUBLIC_TRAPDOOR and node.node_id in self.governance_config.voters:
            self._vote(node, request_id)
        elif mode == GovernanceMode.CONSORTIUM and node.share is not None and self.policy.get(request_id, False):
            # 지분은 봉인자에게만 보냄
            self._send(node, MessageKind.VOTE,
                       {"requestId": request_id, "voter": node.node_id, "approve": True, "share": node.share.to_dict()},
                       targets=[self.sealer.node_id])

    def _on_vote(self, node: SimNode, message: SimMessage) -> None:
        payload = message.payload
        request_id = payload["requestId"]
        if payload["voter"] != message.sender:
            self._reject(node, message, "voter-mismatch")
            return
        request = node.governance.requests.get(request_id)
        if request is None:
            self._reject(node, message, "unknown-request")
            return
        if "share" in payload:
            if node is self.sealer and request.state == RequestState.APPROVED:
                self._collect_share(request_id, TrapdoorShare.from_dict(payload["share"]))
            return
        if request.state != RequestState.OPEN:
            logger.debug(f"{node.node_id}: 이미 결정된 요청 {request_id} 에 대한 늦은 투표 무시")
            return
        try:
            node.governance.cast_vote(request_id, payload["voter"], payload["approve"], node.chain.height)
        except RedactError as e:
            self._reject(node, message, str(e))
            return
        if node is self.sealer:
            self._sealer_tally(request_id)

    def _on_executed(self, node: SimNode, message: SimMessage) -> None:
        payload = message.payload
        block_height = payload["blockHeight"]
        if block_height > node.chain.height:
            if node is self.sealer:
                self._reject(node, message, "unknown-block")
            else:
                self._resync(node, self.sealer)
            return
        try:
            tx = self.sim.chainFile.tx_from_record(payload["tx"])
            stamp = self.sim.chainFile.stamp_from_record(payload["stamp"])
        except RedactError as e:
            self._reject(node, message, f"malformed: {e}")
            return
        rejection = self.sim.ledger.check_redaction(node.chain, block_height, tx)
        if rejection is not None:
            self._reject(node, message, rejection.value)
            return
        request_id = payload["requestId"]
        request = node.governance.requests.get(request_id)
        if (request is None or request.tx_id != tx.tx_id or request.new_payload != tx.payload
                or stamp.request_id != request_id
                or node.governance.tally(request_id, node.chain.height) != RequestState.APPROVED):
            self._reject(node, message, UNAPPROVED)
            return
        try:
            self.sim.ledger.apply_redaction(node.chain, block_height, tx, stamp)
        except RedactError as e:
            self._reject(node, message, str(e))
            return
        node.governance.record_execution(request_id, node.chain.height)
        self._track_versions(node, [tx])
        if message.sender in self.config.adversary_ids():
            self.violations.append(f"{node.node_id}: 공격자 {message.sender} 의 수정 결과를 받아들임")

    # ---- 공격자 ----

    def _handle_adversary(self, node: SimNode, message: SimMessage) -> None:
        chain = node.chain
        if message.kind == MessageKind.NEW_BLOCK:
            block = self.sim.chainFile.block_from_records(message.payload["records"])
            if block.height == chain.height + 1:
                chain.blocks.append(block)
            at_height = node.adversary.at_height or self.config.blocks_to_seal
            if block.height == at_height and not node.acted:
                node.acted = True
                self._attack(node)
        elif message.kind == MessageKind.REDACTION_EXECUTED:
            payload = message.payload
            if payload["blockHeight"] > chain.height:
                return
            block = chain.blocks[payload["blockHeight"]]
            tx = self.sim.chainFile.tx_from_record(payload["tx"])
            local = block.find(tx.tx_id)
            if local is None:
                return
            node.captured = {
                "requestId": payload["requestId"],
                "blockHeight": payload["blockHeight"],
                "tx": self.sim.chainFile.tx_to_record(local),
                "stamp": payload["stamp"],
            }
            local.payload, local.r = tx.payload, tx.r
            local.version, local.redaction_count = tx.version, tx.redaction_count
            block.header.redaction_meta.append(self.sim.chainFile.stamp_from_record(payload["stamp"]))

    def _attack(self, node: SimNode) -> None:
        if node.chain.height < 1:
            return
        behavior = node.adversary.behavior
        honest_ids = [item.node_id for item in self.nodes if item.honest]
        if behavior == AdversaryBehavior.FORGE_REDACTION_WITHOUT_KEY:
            target = node.chain.blocks[1].transactions[0]
            forged = Transaction(target.tx_id, f"forged by {node.node_id}".encode("utf-8"), target.r,
                                 target.ch_digest, target.version + 1, target.redaction_count + 1)
            stamp = RedactionStamp(target.tx_id, hashlib.sha256(target.payload).digest(),
                                   f"forged-{node.node_id}", node.chain.height)
            payload = {
                "requestId": stamp.request_id,
                "blockHeight": 1,
                "tx": self.sim.chainFile.tx_to_record(forged),
                "stamp": self.sim.chainFile.stamp_to_record(stamp),
            }
        else:
            if node.captured is not None:
                payload = node.captured
            else:
                target = node.chain.blocks[1].transactions[0]
                stamp = RedactionStamp(target.tx_id, hashlib.sha256(target.payload).digest(),
                                       f"replay-{node.node_id}", node.chain.height)
                payload = {
                    "requestId": stamp.request_id,
                    "blockHeight": 1,
                    "tx": self.sim.chainFile.tx_to_record(target),
                    "stamp": self.sim.chainFile.stamp_to_record(stamp),
                }
        self.attacks.append(f"{node.node_id}:{behavior.value}:{payload['tx']['txId']}@{int(self.env.now)}")
        logger.info(f"공격자 {node.node_id} 행동: {behavior.value}")
        self._send(node, MessageKind.REDACTION_EXECUTED, payload, targets=honest_ids)

    # ---- 실행 ----

    def execute(self) -> SimReport:
        """이벤트 루프를 끝까지 돌리고 결과를 만듭니다."""
        for node in self.nodes:
            self.env.process(self._node_process(node))
        self.env.process(self._sealer_process())
        self.env.run()

        honest = self.honest_nodes()
        for node in honest:
            report = self.sim.ledger.validate_chain(node.chain)
            if not report.ok:
                self.violations.append(f"{node.node_id}: {report.describe()}")
        divergences = self.sim.divergence_check(honest, self.dropped)
        for item in divergences:
            logger.warning(f"복제본 불일치: {item.node} (높이 {item.height})")
        return SimReport(
            seed=self.config.seed,
            mode=self.governance_config.mode.value,
            sealer=self.sealer.node_id,
            adversaries=self.config.adversary_ids(),
            node_heights={node.node_id: node.chain.height for node in honest},
            node_digests={node.node_id: self.sim.chainFile.digest(node.chain) for node in honest},
            requests={request_id: request.state.value
                      for request_id, request in self.sealer.governance.requests.items()},
            executed=list(self.executed),
            rejections=list(self.rejections),
            dropped=list(self.dropped),
            attacks=list(self.attacks),
            divergences=divergences,
            resyncs=list(self.resyncs),
            violations=list(self.violations),
        )


class NetSim:
    """
    네트워크 시뮬레이션 서비스 클래스.
    설정 검증, 실행, 공격자 주입, 불일치 진단, 복제본 재동기화를 담당합니다.
    """

    def __init__(self, chamHashService: ChamHash = None, ledgerService: Ledger = None,
                 chainFileService: ChainFile = None, secretShareService: SecretShare = None):
        """
        클래스 초기화

        Args:
            chamHashService: 카멜레온 해시 서비스 (기본값: None, 새로 생성)
            ledgerService: 레저 서비스 (기본값: None, chamHashService 로 새로 생성)
            chainFileService: 체인 파일 서비스 (기본값: None, 새로 생성)
            secretShareService: 비밀 분산 서비스 (기본값: None, 새로 생성)
        """
        self.chamHash = chamHashService if chamHashService else ChamHash()
        self.ledger = ledgerService if ledgerService else Ledger(chamHashService=self.chamHash)
        self.chainFile = chainFileService if chainFileService else ChainFile()
        self.secretShare = secretShareService if secretShareService else SecretShare()

    def build_run(self, config: SimConfig) -> SimRun:
        """
        설정을 검증하고 실행 준비를 마친 SimRun 을 만듭니다.

        Raises:
            ConfigError: 설정 오류 (이벤트 실행 전)
        """
        config.validate()
        return SimRun(self, config)

    def run_simulation(self, config: SimConfig) -> SimReport:
        """
        시뮬레이션을 실행합니다. 같은 설정과 시드면 같은 보고서가 나옵니다.

        Args:
            config: 시뮬레이션 설정

        Returns:
            SimReport

        Raises:
            ConfigError: 설정 오류
        """
        run = self.build_run(config)
        report = run.execute()
        logger.info(f"시뮬레이션 완료 (시드 {config.seed}, 안전성 {report.safe}, 수렴 {report.converged})")
        return report

    def inject_adversary(self, config: SimConfig, behavior: Union[str, AdversaryBehavior],
                         at_height: Optional[int] = None) -> SimConfig:
        """
        공격자 노드를 추가한 새 설정을 돌려줍니다. 원래 설정은 바뀌지 않습니다.

        Raises:
            ConfigError: 알 수 없는 행동 또는 설정 오류
        """
        try:
            behavior = AdversaryBehavior(behavior)
        except ValueError:
            raise ConfigError(f"알 수 없는 공격자 행동입니다: {behavior!r}")
        injected = config.copy()
        injected.adversaries.append(AdversarySpec(behavior, at_height))
        injected.validate()
        return injected

    def _first_difference(self, reference: Chain, chain: Chain) -> Tuple[Optional[int], Optional[bytes]]:
        for ref_block, block in zip(reference.blocks, chain.blocks):
            for ref_tx, tx in zip(ref_block.transactions, block.transactions):
                if self.chainFile.tx_to_record(ref_tx) != self.chainFile.tx_to_record(tx):
                    return ref_block.height, ref_tx.tx_id
            if self.chainFile.block_records(ref_block) != self.chainFile.block_records(block):
                stamps = ref_block.header.redaction_meta
                return ref_block.height, stamps[-1].tx_id if stamps else None
        return None, None

    def divergence_check(self, nodes: Sequence[SimNode],
                         dropped: Optional[Sequence[DroppedMessage]] = None) -> List[Divergence]:
        """
        첫 노드를 기준으로 직렬화한 복제본을 비교합니다.
        다른 노드마다 첫 차이 위치와 그 노드가 놓친 메시지를 보고합니다.
        """
        if not nodes:
            return []
        reference = nodes[0]
        reference_text = self.chainFile.dumps(reference.chain)
        divergences = []
        for node in nodes[1:]:
            if self.chainFile.dumps(node.chain) == reference_text:
                continue
            height, tx_id = self._first_difference(reference.chain, node.chain)
            missed = [f"{item.kind}:{item.ref}" for item in dropped or [] if item.node == node.node_id]
            divergences.append(Divergence(node.node_id, height, tx_id, missed))
        return divergences

    def resync(self, node: SimNode, source: SimNode) -> None:
        """source 의 체인과 거버넌스 등록부를 통째로 복사합니다."""
        node.chain = self.chainFile.copy_chain(source.chain)
        if node.governance is not None and source.governance is not None:
            node.governance.load_dict(source.governance.to_dict())
        logger.info(f"{node.node_id} 복제본을 {source.node_id} 에서 재동기화")
