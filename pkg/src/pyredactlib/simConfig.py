#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
simConfig 모듈 - 네트워크 시뮬레이션 설정을 관리하는 기능 제공
노드 수, 시드, 봉인할 블록 수, 수정 일정, 거버넌스, 장애 모델, 공격자 구성을
camelCase 키의 JSON 파일로 저장하고 불러옵니다.
"""

import copy
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional

from pyredactlib.canonical import write_text_atomic
from pyredactlib.chamHash import SUPPORTED_SECURITY_BITS
from pyredactlib.governanceConfig import GovernanceConfig, GovernanceMode
from pyredactlib.redactErrors import ConfigError


class MessageKind(Enum):
    NEW_BLOCK = "NewBlock"
    REDACTION_PROPOSAL = "RedactionProposal"
    VOTE = "Vote"
    REDACTION_EXECUTED = "RedactionExecuted"


class AdversaryBehavior(Enum):
    """
    공격자 행동.

    - FORGE_REDACTION_WITHOUT_KEY: 트랩도어 없이 페이로드만 바꾸고 r 을 그대로 둔 수정 방송
    - REPLAY_OLD_VERSION: 수정 전 버전의 트랜잭션을 다시 방송 (되돌리기 공격)
    """
    FORGE_REDACTION_WITHOUT_KEY = "forge_redaction_without_key"
    REPLAY_OLD_VERSION = "replay_old_version"


def honest_node_id(index: int) -> str:
    return f"node-{index}"


def adversary_node_id(index: int) -> str:
    return f"adv-{index}"


@dataclass
class ScheduledRedaction:
    """
    예정된 수정 요청. at_height 블록을 봉인한 직후 봉인자가 제안합니다.
    approve 가 False 면 투표자들이 반대하거나 지분을 내지 않습니다.
    """
    at_height: int
    block_height: int
    tx_index: int = 0
    new_payload: bytes = b""
    approve: bool = True

    def to_dict(self) -> dict:
        return {
            "atHeight": self.at_height,
            "blockHeight": self.block_height,
            "txIndex": self.tx_index,
            "newPayload": self.new_payload.decode("utf-8"),
            "approve": self.approve,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScheduledRedaction":
        return cls(
            at_height=int(data["atHeight"]),
            block_height=int(data["blockHeight"]),
            tx_index=int(data.get("txIndex", 0)),
            new_payload=str(data.get("newPayload", "")).encode("utf-8"),
            approve=bool(data.get("approve", True)),
        )


@dataclass
class FaultModel:
    """
    메시지 유실 모델. drop_targets 가 비어 있으면 모든 수신 노드가 대상입니다.
    drop_rate 가 0 이면 장애 없음(none) 입니다.
    """
    drop_rate: Fraction = Fraction(0)
    drop_kinds: List[MessageKind] = field(default_factory=lambda: [MessageKind.REDACTION_EXECUTED])
    drop_targets: List[str] = field(default_factory=list)

    @property
    def is_none(self) -> bool:
        return self.drop_rate == 0

    def to_dict(self) -> dict:
        return {
            "dropRate": str(self.drop_rate),
            "dropKinds": [kind.value for kind in self.drop_kinds],
            "dropTargets": list(self.drop_targets),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FaultModel":
        fault = cls()
        fault.drop_rate = Fraction(str(data.get("dropRate", "0")))
        if "dropKinds" in data:
            fault.drop_kinds = [MessageKind(kind) for kind in data["dropKinds"]]
        fault.drop_targets = [str(target) for target in data.get("dropTargets", [])]
        return fault


@dataclass
class AdversarySpec:
    """공격자 노드 하나. at_height 블록을 받은 직후 행동합니다 (None 이면 마지막 블록)."""
    behavior: AdversaryBehavior
    at_height: Optional[int] = None

    def to_dict(self) -> dict:
        return {"behavior": self.behavior.value, "atHeight": self.at_height}

    @classmethod
    def from_dict(cls, data: dict) -> "AdversarySpec":
        at_height = data.get("atHeight")
        return cls(AdversaryBehavior(data["behavior"]), None if at_height is None else int(at_height))


class SimConfig:
    """
    시뮬레이션 설정 클래스.
    같은 시드와 장애 없음(none) 모델이면 실행 결과가 완전히 결정됩니다.
    """

    def __init__(self, node_count: int = 5, seed: int = 0, blocks_to_seal: int = 10, txs_per_block: int = 3,
                 security_bits: int = 64, redactions: Optional[List[ScheduledRedaction]] = None,
                 governance: Optional[GovernanceConfig] = None, fault: Optional[FaultModel] = None,
                 adversaries: Optional[List[AdversarySpec]] = None, sealer: str = "node-0",
                 config_file_path: str = "", default_file_name: str = "simDemo.json"):
        """
        클래스 초기화 및 기본 설정값 정의

        Args:
            node_count: 정직한 노드 수 (기본값: 5)
            seed: 난수 시드 (기본값: 0)
            blocks_to_seal: 봉인할 블록 수 (기본값: 10)
            txs_per_block: 블록당 트랜잭션 수 (기본값: 3)
            security_bits: 카멜레온 키 비트 크기 (기본값: 64, 테스트 전용 크기)
            redactions: 수정 일정 (기본값: None, 없음)
            governance: 거버넌스 설정 (기본값: None, CENTRAL)
            fault: 장애 모델 (기본값: None, 장애 없음)
            adversaries: 공격자 목록 (기본값: None, 없음)
            sealer: 봉인자 노드 id (기본값: "node-0")
            config_file_path: 설정 파일 경로 (기본값: 빈 문자열)
            default_file_name: 기본 파일명 (기본값: "simDemo.json")
        """
        self.node_count = node_count
        self.seed = seed
        self.blocks_to_seal = blocks_to_seal
        self.txs_per_block = txs_per_block
        self.security_bits = security_bits
        self.redactions = list(redactions) if redactions else []
        self.governance = governance if governance else GovernanceConfig()
        self.fault = fault if fault else FaultModel()
        self.adversaries = list(adversaries) if adversaries else []
        self.sealer = sealer

        self.config_file_path = config_file_path
        self.default_file_name = default_file_name

        script_dir = os.path.dirname(os.path.abspath(__file__))
        self.config_dir = os.path.join(script_dir, "ConfigFiles")
        self.default_file_path = os.path.join(self.config_dir, self.default_file_name)

    def honest_ids(self) -> List[str]:
        return [honest_node_id(i) for i in range(self.node_count)]

    def adversary_ids(self) -> List[str]:
        return [adversary_node_id(i) for i in range(len(self.adversaries))]

    def voters(self) -> List[str]:
        """등록 투표자. 설정에 없으면 정직한 노드 전체입니다."""
        return list(self.governance.voters) if self.governance.voters else self.honest_ids()

    def effective_governance(self) -> GovernanceConfig:
        """투표자 목록을 채운 거버넌스 설정 사본."""
        governance = copy.deepcopy(self.governance)
        governance.voters = self.voters()
        return governance

    def copy(self) -> "SimConfig":
        return copy.deepcopy(self)

    def validate(self) -> None:
        """
        이벤트를 하나라도 실행하기 전에 설정 전체를 확인합니다.

        Raises:
            ConfigError: 설정이 유효하지 않은 경우
        """
        if self.node_count < 1:
            raise ConfigError(f"노드 수는 1 이상이어야 합니다: {self.node_count}")
        if self.blocks_to_seal < 0 or self.txs_per_block < 1:
            raise ConfigError("blocksToSeal 은 0 이상, txsPerBlock 은 1 이상이어야 합니다.")
        if self.security_bits not in SUPPORTED_SECURITY_BITS:
            raise ConfigError(f"지원하지 않는 보안 비트 크기입니다: {self.security_bits}")
        honest = self.honest_ids()
        if self.sealer not in honest:
            raise ConfigError(f"봉인자 {self.sealer} 는 정직한 노드여야 합니다.")
        for redaction in self.redactions:
            if not 1 <= redaction.at_height <= self.blocks_to_seal:
                raise ConfigError(f"수정 제안 높이 {redaction.at_height} 가 [1, {self.blocks_to_seal}] 범위 밖입니다.")
            if not 1 <= redaction.block_height <= redaction.at_height:
                raise ConfigError(f"대상 블록 {redaction.block_height} 은 제안 높이 이전에 봉인되어야 합니다.")
            if not 0 <= redaction.tx_index < self.txs_per_block:
                raise ConfigError(f"트랜잭션 인덱스 {redaction.tx_index} 가 범위를 벗어났습니다.")
        try:
            self.effective_governance().validate()
        except ConfigError as e:
            raise ConfigError(f"거버넌스 설정 오류: {e}")
        voters = self.voters()
        if any(voter not in honest for voter in voters):
            raise ConfigError("등록 투표자는 정직한 노드 id 여야 합니다.")
        if self.governance.mode == GovernanceMode.CONSORTIUM and self.governance.share_count > len(voters):
            raise ConfigError(f"지분 개수 {self.governance.share_count} 가 투표자 수 {len(voters)} 보다 많습니다.")
        if self.governance.mode == GovernanceMode.PUBLIC_TRAPDOOR and self.sealer not in voters:
            raise ConfigError("PUBLIC_TRAPDOOR 모드에서는 제안자인 봉인자가 등록 투표자여야 합니다.")
        if not 0 <= self.fault.drop_rate <= 1:
            raise ConfigError(f"dropRate 는 [0, 1] 범위여야 합니다: {self.fault.drop_rate}")
        known = set(honest) | set(self.adversary_ids())
        for target in self.fault.drop_targets:
            if target not in known:
                raise ConfigError(f"알 수 없는 dropTargets 노드입니다: {target}")
        for spec in self.adversaries:
            if spec.at_height is not None and not 1 <= spec.at_height <= self.blocks_to_seal:
                raise ConfigError(f"공격 높이 {spec.at_height} 가 범위를 벗어났습니다.")

    def to_dict(self) -> dict:
        return {
            "nodeCount": self.node_count,
            "seed": self.seed,
            "blocksToSeal": self.blocks_to_seal,
            "txsPerBlock": self.txs_per_block,
            "securityBits": self.security_bits,
            "sealer": self.sealer,
            "redactions": [redaction.to_dict() for redaction in self.redactions],
            "governance": self.governance.to_dict(),
            "fault": self.fault.to_dict(),
            "adversaries": [spec.to_dict() for spec in self.adversaries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        """
        딕셔너리에서 설정을 만듭니다. 없는 키는 기본값을 씁니다.

        Raises:
            ConfigError: 값 형식 오류 또는 검증 실패
        """
        if not isinstance(data, dict):
            raise ConfigError("시뮬레이션 설정은 JSON 객체여야 합니다.")
        config = cls()
        try:
            config.node_count = int(data.get("nodeCount", config.node_count))
            config.seed = int(data.get("seed", config.seed))
            config.blocks_to_seal = int(data.get("blocksToSeal", config.blocks_to_seal))
            config.txs_per_block = int(data.get("txsPerBlock", config.txs_per_block))
            config.security_bits = int(data.get("securityBits", config.security_bits))
            config.sealer = str(data.get("sealer", config.sealer))
            config.redactions = [ScheduledRedaction.from_dict(item) for item in data.get("redactions", [])]
            if "governance" in data:
                governance_data = dict(data["governance"])
                governance_data.setdefault("voters", config.honest_ids())
                config.governance = GovernanceConfig.from_dict(governance_data)
            config.fault = FaultModel.from_dict(data.get("fault", {}))
            config.adversaries = [AdversarySpec.from_dict(item) for item in data.get("adversaries", [])]
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as e:
            raise ConfigError(f"시뮬레이션 설정 값 오류: {e}")
        config.validate()
        return config

    def resolve_path(self, name_or_path: Optional[str]) -> str:
        """경로가 없으면 ConfigFiles 안의 번들 설정 이름(.json 생략 가능)으로 찾습니다."""
        if not name_or_path:
            return self.default_file_path
        if os.path.exists(name_or_path):
            return name_or_path
        file_name = name_or_path if name_or_path.endswith(".json") else name_or_path + ".json"
        bundled = os.path.join(self.config_dir, file_name)
        if os.path.exists(bundled):
            return bundled
        raise ConfigError(f"시뮬레이션 설정 파일을 찾을 수 없습니다: {name_or_path}")

    def load(self, file_path: Optional[str] = None) -> "SimConfig":
        """
        JSON 파일(또는 번들 설정 이름)에서 설정 불러오기

        Raises:
            ConfigError: 파일이 없거나 형식/검증 오류
        """
        load_path = self.resolve_path(file_path)
        try:
            with open(load_path, "r", encoding="utf-8") as f:
                loaded_data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"설정 파일 JSON 파싱 실패 ({load_path}): {e.msg}")
        loaded = self.from_dict(loaded_data)
        for name in ("node_count", "seed", "blocks_to_seal", "txs_per_block", "security_bits", "sealer",
                     "redactions", "governance", "fault", "adversaries"):
            setattr(self, name, getattr(loaded, name))
        self.config_file_path = load_path
        return self

    def save(self, file_path: Optional[str] = None) -> str:
        save_path = file_path or self.default_file_path
        write_text_atomic(save_path, json.dumps(self.to_dict(), indent=4, ensure_ascii=False) + "\n")
        self.config_file_path = save_path
        return save_path
