#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
ledger 모듈 - 카멜레온 해시 트랜잭션, 블록 연결, 체인 검증, 수정(redaction) 절차

트랜잭션마다 카멜레온 다이제스트를 두고 그 위는 일반 SHA-256 머클 트리와 헤더 해시로 연결합니다.
수정은 트랩도어로 새 난수 r' 을 계산해 (payload, r) 을 (payload', r') 로 바꾸므로
머클 루트와 모든 block_hash 가 비트 단위로 그대로 유지됩니다.
수정 이력은 원본 페이로드의 SHA-256 커밋만 남기는 RedactionStamp 로 헤더에 추가됩니다.
"""

import hashlib
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from pyredactlib.canonical import encode_bytes, encode_int
from pyredactlib.chamHash import ChamHash, ChameleonKeyPair
from pyredactlib.merkleTree import EMPTY_ROOT, MerkleTree
from pyredactlib.randomSource import RandomSource
from pyredactlib.redactErrors import IntegrityError, NotFoundError, ParameterError, SizeError

logger = logging.getLogger(__name__)

TX_ID_BYTES = 16
HASH_BYTES = 32
DEFAULT_MAX_PAYLOAD = 1 << 20
ZERO_HASH = b"\x00" * HASH_BYTES


class RedactionRejection(Enum):
    """다른 노드가 보낸 수정 결과를 거부한 이유."""
    UNKNOWN_BLOCK = "unknown-block"
    UNKNOWN_TX = "unknown-tx"
    CHAMELEON_MISMATCH = "chameleon-mismatch"
    VERSION_REGRESSION = "version-regression"
    VERSION_GAP = "version-gap"
    STAMP_MISMATCH = "stamp-mismatch"


@dataclass
class Transaction:
    """페이로드와 카멜레온 난수/다이제스트를 가진 트랜잭션. version = 1 + redaction_count."""
    tx_id: bytes
    payload: bytes
    r: int
    ch_digest: int
    version: int = 1
    redaction_count: int = 0


@dataclass
class RedactionStamp:
    """실행된 수정 한 건의 감사 기록. 원본 페이로드 대신 SHA-256 커밋만 보관합니다."""
    tx_id: bytes
    old_payload_commitment: bytes
    request_id: str
    approved_at: int


@dataclass
class BlockHeader:
    height: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    redaction_meta: List[RedactionStamp] = field(default_factory=list)

    def canonical_encoding(self) -> bytes:
        """블록 해시 대상 인코딩. redaction_meta 는 포함하지 않습니다."""
        return (encode_int(self.height) + encode_bytes(self.prev_hash)
                + encode_bytes(self.merkle_root) + encode_int(self.timestamp))

    @property
    def block_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_encoding()).digest()


@dataclass
class Block:
    header: BlockHeader
    transactions: List[Transaction] = field(default_factory=list)

    @property
    def height(self) -> int:
        return self.header.height

    @property
    def block_hash(self) -> bytes:
        return self.header.block_hash

    def find(self, tx_id: bytes) -> Optional[Transaction]:
        for tx in self.transactions:
            if tx.tx_id == tx_id:
                return tx
        return None

    def stamps_for(self, tx_id: bytes) -> List[RedactionStamp]:
        return [stamp for stamp in self.header.redaction_meta if stamp.tx_id == tx_id]


@dataclass
class Chain:
    """
    체인 전체. blocks[0] 은 제네시스 블록이고, key 는 체인 공용 카멜레온 공개 키입니다.
    """
    key: ChameleonKeyPair
    blocks: List[Block] = field(default_factory=list)

    @property
    def genesis(self) -> Block:
        return self.blocks[0]

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.height

    @property
    def q(self) -> int:
        return self.key.params.q

    def block_at(self, height: int) -> Block:
        if not 0 <= height < len(self.blocks):
            raise NotFoundError(f"높이 {height} 의 블록이 없습니다.")
        return self.blocks[height]

    def block_hashes(self) -> List[bytes]:
        return [block.block_hash for block in self.blocks]

    def find_transaction(self, tx_id: bytes) -> Tuple[Block, Transaction]:
        """
        tx_id 로 트랜잭션과 그 블록을 찾습니다.

        Raises:
            NotFoundError: 해당 트랜잭션이 없는 경우
        """
        for block in self.blocks:
            tx = block.find(tx_id)
            if tx is not None:
                return block, tx
        raise NotFoundError(f"트랜잭션 {tx_id.hex()} 을 찾을 수 없습니다.")


@dataclass(frozen=True)
class ValidationReport:
    """체인 검증 결과. 실패하면 첫 실패 위치(높이, tx_id)와 이유를 담습니다."""
    ok: bool
    height: Optional[int] = None
    tx_id: Optional[bytes] = None
    reason: str = ""

    def describe(self) -> str:
        if self.ok:
            return "체인 검증 성공"
        location = f"높이 {self.height}"
        if self.tx_id is not None:
            location += f", tx {self.tx_id.hex()}"
        return f"체인 검증 실패 ({location}): {self.reason}"


class Ledger:
    """
    레저 서비스 클래스.
    트랜잭션 생성, 블록 봉인, 수정, 검증, 감사 조회를 담당합니다.
    체인 변경(seal, redact)은 하나의 잠금으로 직렬화됩니다.
    """

    def __init__(self, chamHashService: ChamHash = None, max_payload_bytes: int = DEFAULT_MAX_PAYLOAD):
        """
        클래스 초기화

        Args:
            chamHashService: 카멜레온 해시 서비스 (제공되지 않으면 새로 생성)
            max_payload_bytes: 페이로드 최대 크기 (기본값: 1 MiB)
        """
        self.chamHash = chamHashService if chamHashService else ChamHash()
        self.max_payload_bytes = max_payload_bytes
        self._lock = threading.RLock()

    def new_chain(self, key: ChameleonKeyPair, timestamp: int = 0) -> Chain:
        """제네시스 블록만 있는 체인을 만듭니다. 트랩도어는 체인에 들어가지 않습니다."""
        genesis = Block(BlockHeader(0, ZERO_HASH, EMPTY_ROOT, timestamp))
        logger.info(f"새 체인 생성 (공개 키 지문 {self.chamHash.fingerprint(key)})")
        return Chain(key.public(), [genesis])

    def check_payload(self, payload: bytes) -> None:
        if not isinstance(payload, bytes):
            raise ParameterError("페이로드는 bytes 여야 합니다.")
        if len(payload) > self.max_payload_bytes:
            raise SizeError(f"페이로드 크기 {len(payload)} 바이트가 한도 {self.max_payload_bytes} 를 넘었습니다.")

    def create_transaction(self, key: ChameleonKeyPair, payload: bytes, rng: RandomSource,
                           r: Optional[int] = None, tx_id: Optional[bytes] = None) -> Transaction:
        """
        난수 r 을 뽑아 계층 카멜레온 다이제스트를 계산한 버전 1 트랜잭션을 만듭니다.

        Args:
            key: 체인 공개 키
            payload: 페이로드 (빈 바이트열 허용)
            rng: 난수 소스
            r: 직접 지정할 난수 (기본값: None, rng 에서 샘플링)
            tx_id: 직접 지정할 16바이트 식별자 (기본값: None, rng 에서 생성)

        Raises:
            SizeError: 페이로드가 한도를 넘은 경우
        """
        self.check_payload(payload)
        if r is None:
            r = self.chamHash.sample_randomness(key.params.q, rng)
        if tx_id is None:
            tx_id = rng.randbytes(TX_ID_BYTES)
        if len(tx_id) != TX_ID_BYTES:
            raise ParameterError(f"tx_id 는 {TX_ID_BYTES}바이트여야 합니다.")
        digest, _ = self.chamHash.layered_hash(key, payload, r)
        logger.debug(f"트랜잭션 {tx_id.hex()} 생성")
        return Transaction(tx_id, payload, r, digest)

    def check_transaction(self, key: ChameleonKeyPair, tx: Transaction) -> Optional[str]:
        """트랜잭션 자체 불변식 검사. 문제가 없으면 None, 있으면 이유 문자열."""
        if len(tx.tx_id) != TX_ID_BYTES:
            return "tx_id 길이 오류"
        if len(tx.payload) > self.max_payload_bytes:
            return "페이로드 크기 초과"
        e = self.chamHash.message_scalar(tx.payload, key.params.q)
        if not self.chamHash.verify(key, e, tx.r, tx.ch_digest):
            return "카멜레온 해시 검증 실패"
        if tx.redaction_count < 0 or tx.version != 1 + tx.redaction_count:
            return "version 과 redaction_count 가 맞지 않음"
        return None

    def seal_block(self, chain: Chain, txs: Sequence[Transaction], timestamp: int) -> Block:
        """
        트랜잭션 목록으로 블록을 봉인해 체인 끝에 붙입니다 (작업 증명 없음).

        Raises:
            ParameterError: 빈 블록, 음수 timestamp, 중복 tx_id
            IntegrityError: 유효하지 않은 트랜잭션 (해당 tx_id 를 메시지에 포함)
        """
        if not txs:
            raise ParameterError("빈 블록은 봉인할 수 없습니다.")
        if not isinstance(timestamp, int) or timestamp < 0:
            raise ParameterError(f"timestamp 는 0 이상의 정수여야 합니다: {timestamp}")
        seen = set()
        for tx in txs:
            reason = self.check_transaction(chain.key, tx)
            if reason is not None:
                logger.error(f"봉인 거부: 트랜잭션 {tx.tx_id.hex()} - {reason}")
                raise IntegrityError(f"유효하지 않은 트랜잭션 {tx.tx_id.hex()}: {reason}")
            if tx.tx_id in seen:
                raise ParameterError(f"중복 tx_id {tx.tx_id.hex()}")
            seen.add(tx.tx_id)
        with self._lock:
            for tx in txs:
                if any(block.find(tx.tx_id) for block in chain.blocks):
                    raise ParameterError(f"체인에 이미 있는 tx_id {tx.tx_id.hex()}")
            tree = MerkleTree([tx.ch_digest for tx in txs])
            header = BlockHeader(chain.height + 1, chain.tip.block_hash, tree.root, timestamp)
            block = Block(header, list(txs))
            chain.blocks.append(block)
        logger.info(f"블록 {header.height} 봉인 완료 (트랜잭션 {len(txs)}개, 해시 {block.block_hash.hex()})")
        return block

    def redact_transaction(self, chain: Chain, trapdoor: Optional[int], block_height: int, tx_id: bytes,
                           new_payload: bytes, request_id: str,
                           approved_at: Optional[int] = None) -> RedactionStamp:
        """
        트랜잭션을 제자리에서 수정합니다.
        adapt 로 r' 을 구해 (payload, r) 을 (new_payload, r') 로 바꾸고 스탬프를 남깁니다.
        실패하면 체인은 전혀 바뀌지 않습니다.

        Args:
            chain: 대상 체인
            trapdoor: 트랩도어 값 tk
            block_height: 트랜잭션이 있는 블록 높이
            tx_id: 트랜잭션 식별자
            new_payload: 새 페이로드
            request_id: 거버넌스 요청 식별자
            approved_at: 승인 높이 (기본값: None, 현재 체인 높이)

        Returns:
            추가된 RedactionStamp

        Raises:
            NotFoundError: 블록/트랜잭션이 없는 경우
            AuthorizationError: 트랩도어가 없는 경우
            IntegrityError: 계산된 r' 이 검증을 통과하지 못한 경우 (잘못된 트랩도어)
        """
        self.check_payload(new_payload)
        with self._lock:
            block = chain.block_at(block_height)
            tx = block.find(tx_id)
            if tx is None:
                raise NotFoundError(f"높이 {block_height} 블록에 트랜잭션 {tx_id.hex()} 이 없습니다.")
            q = chain.q
            keypair = chain.key.with_trapdoor(trapdoor)
            e_old = self.chamHash.message_scalar(tx.payload, q)
            e_new = self.chamHash.message_scalar(new_payload, q)
            r_new = self.chamHash.adapt(keypair, e_old, tx.r, e_new)
            if not self.chamHash.verify(chain.key, e_new, r_new, tx.ch_digest):
                logger.error(f"트랜잭션 {tx_id.hex()} 수정 중단: adapt 사후조건 실패")
                raise IntegrityError(f"트랜잭션 {tx_id.hex()}: 계산한 r' 이 기존 다이제스트를 재현하지 못했습니다.")
            stamp = RedactionStamp(
                tx_id=tx_id,
                old_payload_commitment=hashlib.sha256(tx.payload).digest(),
                request_id=request_id,
                approved_at=chain.height if approved_at is None else approved_at,
            )
            tx.payload = new_payload
            tx.r = r_new
            tx.redaction_count += 1
            tx.version += 1
            block.header.redaction_meta.append(stamp)
        logger.info(f"트랜잭션 {tx_id.hex()} 수정 완료 (요청 {request_id}, 버전 {tx.version})")
        return stamp

    def check_redaction(self, chain: Chain, block_height: int, tx: Transaction) -> Optional[RedactionRejection]:
        """
        다른 노드가 실행한 수정 결과를 받아들일 수 있는지 검사합니다 (트랩도어 불필요).
        카멜레온 검증을 먼저, 버전 단조성(되돌리기 방어)을 다음으로 확인합니다.

        Returns:
            문제가 없으면 None, 있으면 거부 사유
        """
        if not 0 <= block_height < len(chain.blocks):
            return RedactionRejection.UNKNOWN_BLOCK
        local = chain.blocks[block_height].find(tx.tx_id)
        if local is None:
            return RedactionRejection.UNKNOWN_TX
        if tx.ch_digest != local.ch_digest or self.check_transaction(chain.key, tx) is not None:
            return RedactionRejection.CHAMELEON_MISMATCH
        if tx.version <= local.version:
            return RedactionRejection.VERSION_REGRESSION
        if tx.version != local.version + 1:
            # 중간 수정을 놓친 복제본은 스탬프 수가 맞지 않게 되므로 받지 않음
            return RedactionRejection.VERSION_GAP
        return None

    def apply_redaction(self, chain: Chain, block_height: int, tx: Transaction, stamp: RedactionStamp) -> None:
        """
        검증된 수정 결과를 복제본에 반영합니다.

        Raises:
            IntegrityError: check_redaction 이 거부했거나 스탬프가 직전 페이로드와 맞지 않는 경우 (복제본은 그대로)
        """
        with self._lock:
            reason = self.check_redaction(chain, block_height, tx)
            block = chain.blocks[block_height] if reason is None else None
            local = block.find(tx.tx_id) if block is not None else None
            # 스탬프는 이 복제본이 가진 직전 페이로드를 가리켜야 함
            if local is not None and (stamp.tx_id != tx.tx_id
                                      or stamp.old_payload_commitment != hashlib.sha256(local.payload).digest()):
                reason = RedactionRejection.STAMP_MISMATCH
            if reason is not None:
                raise IntegrityError(f"트랜잭션 {tx.tx_id.hex()} 수정 반영 거부: {reason.value}")
            local.payload = tx.payload
            local.r = tx.r
            local.version = tx.version
            local.redaction_count = tx.redaction_count
            block.header.redaction_meta.append(stamp)
        logger.debug(f"트랜잭션 {tx.tx_id.hex()} 수정 반영 (버전 {tx.version})")

    def erase_transaction(self, chain: Chain, trapdoor: Optional[int], block_height: int, tx_id: bytes,
                          request_id: str, approved_at: Optional[int] = None) -> RedactionStamp:
        """페이로드를 빈 바이트열로 바꾸는 삭제형 수정."""
        return self.redact_transaction(chain, trapdoor, block_height, tx_id, b"", request_id, approved_at)

    def validate_block(self, key: ChameleonKeyPair, block: Block, prev_block: Optional[Block]) -> ValidationReport:
        """
        블록 하나를 이전 블록 기준으로 검증합니다.
        순서: 연결 → 트랜잭션(순서대로) → 머클 루트 → 스탬프
        """
        header = block.header
        height = header.height
        if prev_block is None:
            if height != 0 or header.prev_hash != ZERO_HASH or header.merkle_root != EMPTY_ROOT:
                return ValidationReport(False, height, None, "제네시스 헤더 오류")
            if block.transactions or header.redaction_meta:
                return ValidationReport(False, height, None, "제네시스 블록은 비어 있어야 함")
            return ValidationReport(True)
        if height != prev_block.height + 1:
            return ValidationReport(False, height, None, "높이가 연속되지 않음")
        if header.prev_hash != prev_block.block_hash:
            return ValidationReport(False, height, None, "prev_hash 가 이전 블록 해시와 다름")
        if not block.transactions:
            return ValidationReport(False, height, None, "빈 블록")
        for tx in block.transactions:
            reason = self.check_transaction(key, tx)
            if reason is None and tx.redaction_count != len(block.stamps_for(tx.tx_id)):
                reason = "redaction_count 와 스탬프 수가 다름"
            if reason is not None:
                return ValidationReport(False, height, tx.tx_id, reason)
        if MerkleTree([tx.ch_digest for tx in block.transactions]).root != header.merkle_root:
            return ValidationReport(False, height, None, "머클 루트 불일치")
        for stamp in header.redaction_meta:
            if block.find(stamp.tx_id) is None:
                return ValidationReport(False, height, stamp.tx_id, "스탬프가 가리키는 트랜잭션이 블록에 없음")
            if len(stamp.old_payload_commitment) != HASH_BYTES:
                return ValidationReport(False, height, stamp.tx_id, "스탬프 커밋 길이 오류")
            # 수정은 블록이 봉인된 뒤에만 승인될 수 있음
            if stamp.approved_at < height:
                return ValidationReport(False, height, stamp.tx_id, "스탬프 승인 높이가 블록 높이보다 낮음")
        return ValidationReport(True)

    def validate_chain(self, chain: Chain) -> ValidationReport:
        """
        연결, 머클 루트, 모든 트랜잭션의 카멜레온 검증, 스탬프 일관성을 확인합니다.
        예외를 던지지 않고 첫 실패 위치를 담은 보고서를 돌려줍니다.
        """
        if not chain.blocks:
            return ValidationReport(False, None, None, "블록이 없음")
        seen = set()
        prev_block = None
        for index, block in enumerate(chain.blocks):
            if block.height != index:
                return ValidationReport(False, block.height, None, "높이가 연속되지 않음")
            report = self.validate_block(chain.key, block, prev_block)
            if not report.ok:
                logger.warning(report.describe())
                return report
            for tx in block.transactions:
                if tx.tx_id in seen:
                    return ValidationReport(False, block.height, tx.tx_id, "중복 tx_id")
                seen.add(tx.tx_id)
            prev_block = block
        return ValidationReport(True)

    def audit_history(self, chain: Chain, tx_id: bytes) -> List[RedactionStamp]:
        """
        트랜잭션의 수정 스탬프를 실행 순서대로 돌려줍니다.

        Raises:
            NotFoundError: 트랜잭션이 없는 경우
        """
        block, _ = chain.find_transaction(tx_id)
        return list(block.stamps_for(tx_id))
