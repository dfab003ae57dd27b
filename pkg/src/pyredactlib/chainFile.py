#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
chainFile 모듈 - 체인 파일 직렬화와 원자적 저장, 잠금 파일 관리

파일 형식 (한 줄에 레코드 하나):
    1번째 줄: {"format":"pyredactlib-chain","version":1,"p":..,"q":..,"g":..,"y":..}
    이후 블록마다 block 레코드, 그 블록의 tx 레코드들, 그 블록의 stamp 레코드들
모든 레코드는 type 필드가 맨 앞이고 필드 순서가 고정되어 있어 비트 단위 왕복이 보장됩니다.
"""

import hashlib
import logging
import os
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Sequence

from pyredactlib.canonical import (
    bytes_to_hex,
    dump_record,
    hex_to_bytes,
    hex_to_int,
    int_to_hex,
    load_record,
    write_text_atomic,
)
from pyredactlib.chamHash import ChameleonKeyPair, GroupParams
from pyredactlib.ledger import Block, BlockHeader, Chain, RedactionStamp, Transaction
from pyredactlib.redactErrors import ChainLockedError, NotFoundError, ParameterError, ParseError

logger = logging.getLogger(__name__)

CHAIN_FORMAT = "pyredactlib-chain"
CHAIN_FORMAT_VERSION = 1
LOCK_SUFFIX = ".lock"

HEADER_FIELDS = ["format", "version", "p", "q", "g", "y"]
BLOCK_FIELDS = ["type", "height", "prevHash", "merkleRoot", "timestamp"]
TX_FIELDS = ["type", "txId", "payload", "r", "chDigest", "version", "redactionCount"]
STAMP_FIELDS = ["type", "txId", "oldPayloadCommitment", "requestId", "approvedAt"]


def _expect_fields(record: Dict, fields: List[str], line_no: int) -> None:
    if list(record.keys()) != fields:
        raise ParseError(f"필드 구성이 올바르지 않습니다: {list(record.keys())} (기대값: {fields})", line_no)


def _expect_int(value, label: str, line_no: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ParseError(f"{label} 는 0 이상의 정수여야 합니다: {value!r}", line_no)
    return value


class ChainFile:
    """
    체인 파일 서비스 클래스.
    Chain 객체와 줄 단위 JSON 텍스트 사이의 변환, 원자적 저장, 잠금을 담당합니다.
    """

    def tx_to_record(self, tx: Transaction) -> Dict:
        return {
            "type": "tx",
            "txId": bytes_to_hex(tx.tx_id),
            "payload": bytes_to_hex(tx.payload),
            "r": int_to_hex(tx.r),
            "chDigest": int_to_hex(tx.ch_digest),
            "version": tx.version,
            "redactionCount": tx.redaction_count,
        }

    def tx_from_record(self, record: Dict, line_no: int = None) -> Transaction:
        _expect_fields(record, TX_FIELDS, line_no)
        return Transaction(
            tx_id=hex_to_bytes(record["txId"]),
            payload=hex_to_bytes(record["payload"]),
            r=hex_to_int(record["r"]),
            ch_digest=hex_to_int(record["chDigest"]),
            version=_expect_int(record["version"], "version", line_no),
            redaction_count=_expect_int(record["redactionCount"], "redactionCount", line_no),
        )

    def block_records(self, block: Block) -> List[Dict]:
        """블록 하나를 block, tx..., stamp... 순서의 레코드 목록으로 만듭니다."""
        header = block.header
        records = [{
            "type": "block",
            "height": header.height,
            "prevHash": bytes_to_hex(header.prev_hash),
            "merkleRoot": bytes_to_hex(header.merkle_root),
            "timestamp": header.timestamp,
        }]
        records.extend(self.tx_to_record(tx) for tx in block.transactions)
        records.extend(self.stamp_to_record(stamp) for stamp in header.redaction_meta)
        return records

    def dumps(self, chain: Chain) -> str:
        """체인을 정규 텍스트로 직렬화합니다. 같은 체인은 항상 같은 바이트가 됩니다."""
        params = chain.key.params
        lines = [dump_record({
            "format": CHAIN_FORMAT,
            "version": CHAIN_FORMAT_VERSION,
            "p": int_to_hex(params.p),
            "q": int_to_hex(params.q),
            "g": int_to_hex(params.g),
            "y": int_to_hex(chain.key.hk),
        })]
        for block in chain.blocks:
            lines.extend(dump_record(record) for record in self.block_records(block))
        return "\n".join(lines) + "\n"

    def _parse_header(self, line: str) -> ChameleonKeyPair:
        record = load_record(line, 1)
        if record.get("format") != CHAIN_FORMAT:
            raise ParseError("체인 파일 형식 헤더가 없습니다.", 1)
        if record.get("version") != CHAIN_FORMAT_VERSION:
            raise ParseError(f"지원하지 않는 체인 파일 버전입니다: {record.get('version')!r}", 1)
        _expect_fields(record, HEADER_FIELDS, 1)
        try:
            params = GroupParams(hex_to_int(record["p"]), hex_to_int(record["q"]), hex_to_int(record["g"]))
            key = ChameleonKeyPair(params, hex_to_int(record["y"]))
            key.validate()
        except ParseError as e:
            raise ParseError(str(e), 1)
        except ParameterError as e:
            raise ParseError(f"체인 공개 키 불변식 위반: {e}", 1)
        return key

    def _read_record(self, blocks: List[Block], record: Dict, line_no: Optional[int]) -> None:
        kind = record.get("type")
        current = blocks[-1] if blocks else None
        if kind == "block":
            _expect_fields(record, BLOCK_FIELDS, line_no)
            blocks.append(Block(BlockHeader(
                height=_expect_int(record["height"], "height", line_no),
                prev_hash=hex_to_bytes(record["prevHash"]),
                merkle_root=hex_to_bytes(record["merkleRoot"]),
                timestamp=_expect_int(record["timestamp"], "timestamp", line_no),
            )))
        elif kind == "tx":
            if current is None or current.header.redaction_meta:
                raise ParseError("tx 레코드는 block 레코드 다음, stamp 레코드 앞에 와야 합니다.", line_no)
            current.transactions.append(self.tx_from_record(record, line_no))
        elif kind == "stamp":
            if current is None:
                raise ParseError("stamp 레코드 앞에 block 레코드가 없습니다.", line_no)
            current.header.redaction_meta.append(self.stamp_from_record(record, line_no))
        else:
            raise ParseError(f"알 수 없는 레코드 유형입니다: {kind!r}", line_no)

    def stamp_to_record(self, stamp: RedactionStamp) -> Dict:
        return {
            "type": "stamp",
            "txId": bytes_to_hex(stamp.tx_id),
            "oldPayloadCommitment": bytes_to_hex(stamp.old_payload_commitment),
            "requestId": stamp.request_id,
            "approvedAt": stamp.approved_at,
        }

    def stamp_from_record(self, record: Dict, line_no: int = None) -> RedactionStamp:
        _expect_fields(record, STAMP_FIELDS, line_no)
        if not isinstance(record["requestId"], str):
            raise ParseError("requestId 는 문자열이어야 합니다.", line_no)
        return RedactionStamp(
            tx_id=hex_to_bytes(record["txId"]),
            old_payload_commitment=hex_to_bytes(record["oldPayloadCommitment"]),
            request_id=record["requestId"],
            approved_at=_expect_int(record["approvedAt"], "approvedAt", line_no),
        )

    def block_from_records(self, records: Sequence[Dict]) -> Block:
        """block_records 의 역변환. 네트워크로 받은 블록 복원에 씁니다."""
        blocks: List[Block] = []
        for record in records:
            self._read_record(blocks, record, None)
        if len(blocks) != 1:
            raise ParseError(f"블록 레코드는 정확히 하나여야 합니다 (받은 개수 {len(blocks)}).")
        return blocks[0]

    def loads(self, text: str) -> Chain:
        """
        정규 텍스트에서 체인을 복원합니다. 검증(validate_chain)은 하지 않습니다.

        Raises:
            ParseError: 형식 오류 (줄 번호 포함)
        """
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise ParseError("빈 체인 파일입니다.", 1)
        chain = Chain(self._parse_header(lines[0]))
        for line_no, line in enumerate(lines[1:], start=2):
            record = load_record(line, line_no)
            try:
                self._read_record(chain.blocks, record, line_no)
            except ParseError as e:
                if e.line_no is None:
                    raise ParseError(str(e), line_no)
                raise
        if not chain.blocks:
            raise ParseError("제네시스 블록이 없습니다.", len(lines))
        return chain

    def save(self, chain: Chain, file_path: str) -> None:
        """체인을 임시 파일에 쓴 뒤 교체하는 방식으로 저장합니다."""
        write_text_atomic(file_path, self.dumps(chain))
        logger.debug(f"체인 저장 완료: {file_path} (높이 {chain.height})")

    def load(self, file_path: str) -> Chain:
        """
        체인 파일을 불러옵니다.

        Raises:
            NotFoundError: 파일이 없는 경우
            ParseError: 형식 오류
        """
        if not os.path.exists(file_path):
            raise NotFoundError(f"체인 파일을 찾을 수 없습니다: {file_path}")
        with open(file_path, "r", encoding="utf-8", newline="") as f:
            return self.loads(f.read())

    def copy_chain(self, chain: Chain) -> Chain:
        """직렬화 왕복으로 완전히 독립된 사본을 만듭니다."""
        return self.loads(self.dumps(chain))

    def digest(self, chain: Chain) -> str:
        """직렬화한 체인의 SHA-256 (16진수). 복제본 비교용."""
        return hashlib.sha256(self.dumps(chain).encode("utf-8")).hexdigest()

    def dump_transactions(self, txs: Sequence[Transaction]) -> str:
        """대기 중인 트랜잭션 목록을 tx 레코드 줄들로 만듭니다."""
        return "".join(dump_record(self.tx_to_record(tx)) + "\n" for tx in txs)

    def load_transactions(self, text: str) -> List[Transaction]:
        txs = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            record = load_record(line, line_no)
            if record.get("type") != "tx":
                raise ParseError(f"tx 레코드가 아닙니다: {record.get('type')!r}", line_no)
            txs.append(self.tx_from_record(record, line_no))
        return txs

    @contextmanager
    def lock(self, file_path: str) -> Iterator[str]:
        """
        체인 파일 옆에 <경로>.lock 파일을 배타적으로 만들어 동시 변경을 막습니다.

        Raises:
            ChainLockedError: 다른 프로세스가 이미 잠금을 가진 경우
        """
        lock_path = file_path + LOCK_SUFFIX
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ChainLockedError(f"체인 파일이 잠겨 있습니다: {lock_path}")
        try:
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            yield lock_path
        finally:
            if os.path.exists(lock_path):
                os.remove(lock_path)
