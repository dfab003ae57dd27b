#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
governance 모듈 - 누가 adapt 를 호출할 수 있는지 결정하는 수정 요청 상태 기계

세 가지 권한 모델을 지원합니다.
    - CENTRAL: 요청은 열리자마자 승인되고, 실행에는 중앙 기관의 트랩도어가 필요
    - CONSORTIUM: 요청은 열리자마자 승인되고, 실행 시 지분을 모아 트랩도어를 복원
    - PUBLIC_TRAPDOOR: 등록 투표자의 투표로 승인되어야 공개 트랩도어로 실행 가능
감독 거부권이 켜져 있으면 승인된 요청을 실행 전에 거부(Vetoed)할 수 있습니다.

상태 전이: Open → {Approved, Rejected}, Approved → {Executed, Vetoed}
"""

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from pyredactlib.canonical import bytes_to_hex, hex_to_bytes, write_text_atomic
from pyredactlib.governanceConfig import GovernanceConfig, GovernanceMode
from pyredactlib.ledger import Chain, Ledger, RedactionStamp
from pyredactlib.redactErrors import (
    AuthorizationError,
    ConfigError,
    GovernanceError,
    NotFoundError,
    ParseError,
)
from pyredactlib.secretShare import SecretShare, TrapdoorShare

logger = logging.getLogger(__name__)

REGISTRY_FORMAT = "pyredactlib-requests"


class RequestState(Enum):
    OPEN = "open"
    APPROVED = "approved"
    REJECTED = "rejected"
    EXECUTED = "executed"
    VETOED = "vetoed"


class Vote(Enum):
    APPROVE = "approve"
    REJECT = "reject"


ALLOWED_TRANSITIONS = {
    RequestState.OPEN: {RequestState.APPROVED, RequestState.REJECTED},
    RequestState.APPROVED: {RequestState.EXECUTED, RequestState.VETOED},
}


@dataclass
class RedactionRequest:
    """
    수정 요청 하나. votes 는 투표자당 한 표이며 history 는 상태 전이 기록입니다.
    new_payload 가 빈 바이트열이면 삭제 요청입니다.
    """
    request_id: str
    block_height: int
    tx_id: bytes
    new_payload: bytes
    proposer: str
    opened_at: int
    votes: Dict[str, Vote] = field(default_factory=dict)
    state: RequestState = RequestState.OPEN
    approved_at: Optional[int] = None
    history: List[str] = field(default_factory=list)

    @property
    def approvals(self) -> int:
        return sum(1 for vote in self.votes.values() if vote == Vote.APPROVE)

    @property
    def is_erase(self) -> bool:
        return self.new_payload == b""

    def to_dict(self) -> dict:
        return {
            "requestId": self.request_id,
            "blockHeight": self.block_height,
            "txId": bytes_to_hex(self.tx_id),
            "newPayload": bytes_to_hex(self.new_payload),
            "proposer": self.proposer,
            "openedAt": self.opened_at,
            "approvedAt": self.approved_at,
            "state": self.state.value,
            "votes": {voter: vote.value for voter, vote in self.votes.items()},
            "history": list(self.history),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RedactionRequest":
        try:
            return cls(
                request_id=str(data["requestId"]),
                block_height=int(data["blockHeight"]),
                tx_id=hex_to_bytes(data["txId"]),
                new_payload=hex_to_bytes(data["newPayload"]),
                proposer=str(data["proposer"]),
                opened_at=int(data["openedAt"]),
                approved_at=data.get("approvedAt"),
                state=RequestState(data["state"]),
                votes={voter: Vote(vote) for voter, vote in data.get("votes", {}).items()},
                history=list(data.get("history", [])),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise ParseError(f"수정 요청 레코드 형식 오류: {e}")


class Governance:
    """
    거버넌스 서비스 클래스.
    수정 요청 등록부를 관리하고, 모드별 게이트를 통과한 요청만 ledger 로 넘깁니다.
    """

    def __init__(self, config: GovernanceConfig = None, ledgerService: Ledger = None,
                 secretShareService: SecretShare = None):
        """
        클래스 초기화

        Args:
            config: 거버넌스 설정 (기본값: None, 기본 설정 사용)
            ledgerService: 레저 서비스 (기본값: None, 새로 생성)
            secretShareService: 비밀 분산 서비스 (기본값: None, 새로 생성)
        """
        self.config = config if config else GovernanceConfig()
        self.config.validate()
        self.ledger = ledgerService if ledgerService else Ledger()
        self.secretShare = secretShareService if secretShareService else SecretShare()
        self.requests: Dict[str, RedactionRequest] = {}
        self._counter = 0
        self._lock = threading.RLock()

    @property
    def mode(self) -> GovernanceMode:
        return self.config.mode

    def get_request(self, request_id: str) -> RedactionRequest:
        request = self.requests.get(request_id)
        if request is None:
            raise NotFoundError(f"수정 요청 {request_id} 이 없습니다.")
        return request

    def _transition(self, request: RedactionRequest, new_state: RequestState, height: Optional[int]) -> None:
        if new_state not in ALLOWED_TRANSITIONS.get(request.state, set()):
            raise GovernanceError(f"요청 {request.request_id}: {request.state.value} → {new_state.value} 전이는 허용되지 않습니다.")
        request.state = new_state
        if new_state == RequestState.APPROVED:
            request.approved_at = height
        request.history.append(new_state.value if height is None else f"{new_state.value}@{height}")
        logger.info(f"요청 {request.request_id} 상태 변경: {new_state.value}")

    def _next_request_id(self) -> str:
        while True:
            self._counter += 1
            request_id = f"req-{self._counter:04d}"
            if request_id not in self.requests:
                return request_id

    def open_request(self, chain: Chain, block_height: int, tx_id: bytes, new_payload: bytes, proposer: str,
                     current_height: Optional[int] = None, request_id: Optional[str] = None) -> RedactionRequest:
        """
        수정 요청을 엽니다. CENTRAL/CONSORTIUM 모드에서는 바로 Approved 가 됩니다.

        Args:
            chain: 대상 체인 (트랜잭션 존재 확인용)
            block_height: 트랜잭션이 있는 블록 높이
            tx_id: 대상 트랜잭션
            new_payload: 새 페이로드 (빈 바이트열이면 삭제)
            proposer: 제안자 노드 id
            current_height: 현재 높이 (기본값: None, 체인 높이)
            request_id: 요청 id (기본값: None, req-0001 형식으로 발급)

        Returns:
            생성된 RedactionRequest

        Raises:
            NotFoundError: 대상 트랜잭션이 없는 경우
            AuthorizationError: PUBLIC_TRAPDOOR 모드에서 제안자가 등록 투표자가 아닌 경우
            GovernanceError: 이미 있는 request_id
        """
        if chain.block_at(block_height).find(tx_id) is None:
            raise NotFoundError(f"높이 {block_height} 블록에 트랜잭션 {tx_id.hex()} 이 없습니다.")
        if self.mode == GovernanceMode.PUBLIC_TRAPDOOR and proposer not in self.config.voters:
            logger.warning(f"등록되지 않은 제안자 {proposer} 의 요청 거부")
            raise AuthorizationError(f"{proposer} 는 등록 투표자가 아니므로 수정을 제안할 수 없습니다.")
        self.ledger.check_payload(new_payload)
        height = chain.height if current_height is None else current_height
        with self._lock:
            if request_id is None:
                request_id = self._next_request_id()
            elif request_id in self.requests:
                raise GovernanceError(f"이미 존재하는 요청 id 입니다: {request_id}")
            request = RedactionRequest(request_id, block_height, tx_id, new_payload, proposer, height)
            request.history.append(f"open@{height}")
            self.requests[request_id] = request
            logger.info(f"수정 요청 {request_id} 생성 (tx {tx_id.hex()}, 제안자 {proposer})")
            if self.mode != GovernanceMode.PUBLIC_TRAPDOOR:
                self._transition(request, RequestState.APPROVED, height)
        return request

    def window_closed(self, request: RedactionRequest, current_height: int) -> bool:
        return current_height > request.opened_at + self.config.voting_window

    def cast_vote(self, request_id: str, voter: str, approve: bool, current_height: int) -> RequestState:
        """
        투표를 기록합니다. 결과 판정은 tally 가 합니다.

        Raises:
            NotFoundError: 요청이 없는 경우
            AuthorizationError: 등록되지 않은 투표자
            GovernanceError: 요청이 Open 이 아니거나, 중복 투표, 투표 기간 경과
        """
        with self._lock:
            request = self.get_request(request_id)
            if request.state != RequestState.OPEN:
                raise GovernanceError(f"요청 {request_id} 은 {request.state.value} 상태라 투표할 수 없습니다.")
            if voter not in self.config.voters:
                raise AuthorizationError(f"{voter} 는 등록 투표자가 아닙니다.")
            if voter in request.votes:
                logger.warning(f"중복 투표 거부: {voter} → {request_id}")
                raise GovernanceError(f"{voter} 는 이미 요청 {request_id} 에 투표했습니다.")
            if self.window_closed(request, current_height):
                logger.warning(f"투표 기간 경과로 거부: {voter} → {request_id} (높이 {current_height})")
                raise GovernanceError(f"요청 {request_id} 의 투표 기간이 지났습니다 (높이 {current_height}).")
            request.votes[voter] = Vote.APPROVE if approve else Vote.REJECT
            logger.debug(f"투표 기록: {voter} → {request_id} ({request.votes[voter].value})")
            return request.state

    def outcome(self, request: RedactionRequest, current_height: int) -> RequestState:
        """
        요청 상태를 바꾸지 않고 현재 집계 결과를 계산합니다.
        찬성 수가 정족수 × 등록 투표자 수를 엄격히 넘어야 승인이며 동률은 거부입니다.
        결과가 이미 확정되면 투표 기간 전에도 판정합니다.
        """
        if request.state != RequestState.OPEN:
            return request.state
        voter_count = len(self.config.voters)
        needed = self.config.quorum * voter_count
        approvals = request.approvals
        if Fraction(approvals) > needed:
            return RequestState.APPROVED
        if self.window_closed(request, current_height):
            return RequestState.REJECTED
        remaining = voter_count - len(request.votes)
        if Fraction(approvals + remaining) <= needed:
            return RequestState.REJECTED
        return RequestState.OPEN

    def tally(self, request_id: str, current_height: int) -> RequestState:
        """
        투표를 집계해 상태를 확정합니다. 아직 결정할 수 없으면 Open 을 유지합니다.

        Returns:
            집계 후 요청 상태
        """
        with self._lock:
            request = self.get_request(request_id)
            result = self.outcome(request, current_height)
            if result != request.state:
                self._transition(request, result, current_height)
                logger.info(f"요청 {request_id} 집계: 찬성 {request.approvals} / 등록 {len(self.config.voters)}, "
                            f"정족수 {self.config.quorum}")
            return request.state

    def close_expired(self, current_height: int) -> List[str]:
        """
        투표 기간이 끝난 Open 요청을 모두 집계해 확정합니다.

        Returns:
            이번 호출로 상태가 바뀐 요청 id 목록 (생성 순서)
        """
        decided = []
        with self._lock:
            for request in self.requests.values():
                if request.state == RequestState.OPEN and self.window_closed(request, current_height):
                    self.tally(request.request_id, current_height)
                    decided.append(request.request_id)
        return decided

    def record_decision(self, request_id: str, state: RequestState, height: int) -> bool:
        """
        다른 노드가 확정한 집계 결과를 이 등록부에 반영합니다 (복제본 경로).
        이미 Open 이 아닌 요청은 건드리지 않습니다.

        Returns:
            상태를 바꿨으면 True
        """
        with self._lock:
            request = self.requests.get(request_id)
            if request is None or request.state != RequestState.OPEN:
                return False
            self._transition(request, state, height)
            return True

    def oversight_veto(self, request_id: str, credential: Optional[str]) -> RequestState:
        """
        감독 기관이 승인된 요청을 실행 전에 거부합니다. 거부된 요청은 다시 실행될 수 없습니다.

        Raises:
            AuthorizationError: 거부권이 꺼져 있거나 자격 증명이 틀린 경우
            GovernanceError: Approved 가 아닌 요청 (실행된 요청은 소급 거부 불가)
        """
        if not self.config.oversight_enabled:
            raise AuthorizationError("감독 거부권이 설정되어 있지 않습니다.")
        if not self.config.check_credential(credential):
            logger.error(f"요청 {request_id} 거부 시도: 감독 자격 증명 불일치")
            raise AuthorizationError("감독 자격 증명이 올바르지 않습니다.")
        with self._lock:
            request = self.get_request(request_id)
            if request.state == RequestState.EXECUTED:
                raise GovernanceError(f"요청 {request_id} 은 이미 실행되었으므로 거부할 수 없습니다.")
            if request.state != RequestState.APPROVED:
                raise GovernanceError(f"요청 {request_id} 은 {request.state.value} 상태라 거부할 수 없습니다.")
            self._transition(request, RequestState.VETOED, None)
            return request.state

    def _authority_trapdoor(self, chain: Chain, trapdoor: Optional[int],
                            shares: Optional[Sequence[TrapdoorShare]]) -> int:
        if self.mode == GovernanceMode.CENTRAL:
            if trapdoor is None:
                raise AuthorizationError("CENTRAL 모드 실행에는 중앙 기관의 트랩도어가 필요합니다.")
            return trapdoor
        if self.mode == GovernanceMode.CONSORTIUM:
            if not shares:
                raise AuthorizationError("CONSORTIUM 모드 실행에는 트랩도어 지분이 필요합니다.")
            if len(shares) < self.config.threshold:
                logger.warning(f"지분 {len(shares)}개로 실행 시도 (임계값 {self.config.threshold})")
            return self.secretShare.reconstruct_trapdoor(shares, chain.q)
        if self.config.public_trapdoor is None:
            raise ConfigError("PUBLIC_TRAPDOOR 모드인데 publicTrapdoor 가 설정되어 있지 않습니다.")
        return self.config.public_trapdoor

    def execute_redaction(self, request_id: str, chain: Chain, trapdoor: Optional[int] = None,
                          shares: Optional[Sequence[TrapdoorShare]] = None) -> RedactionStamp:
        """
        승인된 요청을 ledger.redact_transaction 으로 실행합니다.

        Args:
            request_id: 실행할 요청 id
            chain: 대상 체인
            trapdoor: CENTRAL 모드의 트랩도어
            shares: CONSORTIUM 모드의 지분 목록

        Returns:
            추가된 RedactionStamp

        Raises:
            GovernanceError: 요청이 Approved 상태가 아닌 경우
            AuthorizationError: 모드별 권한 자료가 없는 경우
            IntegrityError: 틀린 트랩도어 (요청은 Approved 로 남고 체인은 그대로)
        """
        with self._lock:
            request = self.get_request(request_id)
            if request.state != RequestState.APPROVED:
                logger.error(f"요청 {request_id} 실행 거부: 상태 {request.state.value}")
                raise GovernanceError(f"요청 {request_id} 은 {request.state.value} 상태라 실행할 수 없습니다.")
            tk = self._authority_trapdoor(chain, trapdoor, shares)
            approved_at = request.approved_at if request.approved_at is not None else chain.height
            stamp = self.ledger.redact_transaction(chain, tk, request.block_height, request.tx_id,
                                                   request.new_payload, request.request_id, approved_at)
            self._transition(request, RequestState.EXECUTED, chain.height)
            return stamp

    def record_execution(self, request_id: str, height: int) -> None:
        """
        다른 노드가 실행한 요청을 이 등록부에도 Executed 로 기록합니다 (복제본 경로).

        Raises:
            GovernanceError: 요청이 Approved 상태가 아닌 경우
        """
        with self._lock:
            self._transition(self.get_request(request_id), RequestState.EXECUTED, height)

    def to_dict(self) -> dict:
        return {
            "format": REGISTRY_FORMAT,
            "counter": self._counter,
            "requests": [request.to_dict() for request in self.requests.values()],
        }

    def save(self, file_path: str) -> None:
        """요청 등록부를 JSON 파일로 원자적으로 저장합니다."""
        write_text_atomic(file_path, json.dumps(self.to_dict(), indent=4, ensure_ascii=False) + "\n")

    def load(self, file_path: str) -> None:
        """
        요청 등록부를 불러옵니다. 파일이 없으면 빈 등록부로 시작합니다.

        Raises:
            ParseError: 형식 오류
        """
        if not os.path.exists(file_path):
            self.requests = {}
            self._counter = 0
            return
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"요청 등록부 JSON 파싱 실패: {e.msg}", e.lineno)
        self.load_dict(data)

    def load_dict(self, data: dict) -> None:
        if not isinstance(data, dict) or data.get("format") != REGISTRY_FORMAT:
            raise ParseError("요청 등록부 형식이 아닙니다.")
        requests = [RedactionRequest.from_dict(item) for item in data.get("requests", [])]
        with self._lock:
            self.requests = {request.request_id: request for request in requests}
            self._counter = int(data.get("counter", len(requests)))
