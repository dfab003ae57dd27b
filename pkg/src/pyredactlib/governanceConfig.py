#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
governanceConfig 모듈 - 거버넌스 모드와 투표/임계값 설정을 관리하는 기능 제공
설정은 camelCase 키의 JSON 파일로 저장하고 불러옵니다.
"""

import hashlib
import hmac
import json
import os
from enum import Enum
from fractions import Fraction
from typing import List, Optional

from pyredactlib.canonical import hex_to_int, int_to_hex, write_text_atomic
from pyredactlib.redactErrors import ConfigError, ParseError


class GovernanceMode(Enum):
    """
    트랩도어 권한 모델.

    - CENTRAL: 중앙 기관 하나가 트랩도어를 보유
    - CONSORTIUM: 트랩도어를 (t, n) 비밀 분산으로 나눠 보유
    - PUBLIC_TRAPDOOR: 트랩도어는 공개, 실행은 투표 승인으로 제한
    """
    CENTRAL = "central"
    CONSORTIUM = "consortium"
    PUBLIC_TRAPDOOR = "publicTrapdoor"


def credential_hash(token: str) -> str:
    """감독 기관 자격 증명 토큰의 SHA-256 (16진수)."""
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


class GovernanceConfig:
    """
    거버넌스 설정 클래스.
    모드, 임계값, 정족수, 투표 기간, 감독 거부권, 등록 투표자 목록을 관리합니다.
    """

    def __init__(self, mode: GovernanceMode = GovernanceMode.CENTRAL, threshold: int = 2, share_count: int = 3,
                 quorum: Fraction = Fraction(1, 2), voting_window: int = 10, oversight_enabled: bool = False,
                 oversight_credential_hash: str = "", public_trapdoor: Optional[int] = None,
                 voters: Optional[List[str]] = None, config_file_path: str = "",
                 default_file_name: str = "governanceConfig.json"):
        """
        클래스 초기화 및 기본 설정값 정의

        Args:
            mode: 권한 모델 (기본값: CENTRAL)
            threshold: 복원 임계값 t (기본값: 2)
            share_count: 지분 개수 n (기본값: 3)
            quorum: 정족수 비율, (0, 1] (기본값: 1/2)
            voting_window: 투표 기간, 블록 높이 단위 (기본값: 10)
            oversight_enabled: 감독 거부권 사용 여부 (기본값: False)
            oversight_credential_hash: 감독 자격 증명의 SHA-256 16진수 (기본값: 빈 문자열)
            public_trapdoor: PUBLIC_TRAPDOOR 모드에서 공개되는 트랩도어 (기본값: None)
            voters: 등록 투표자 목록 (기본값: None, 빈 목록)
            config_file_path: 설정 파일 경로 (기본값: 빈 문자열)
            default_file_name: 기본 파일명 (기본값: "governanceConfig.json")
        """
        self.mode = mode
        self.threshold = threshold
        self.share_count = share_count
        self.quorum = Fraction(quorum)
        self.voting_window = voting_window
        self.oversight_enabled = oversight_enabled
        self.oversight_credential_hash = oversight_credential_hash
        self.public_trapdoor = public_trapdoor
        self.voters = list(voters) if voters else []

        self.config_file_path = config_file_path
        self.default_file_name = default_file_name

        script_dir = os.path.dirname(os.path.abspath(__file__))
        config_dir = os.path.join(script_dir, "ConfigFiles")
        self.default_file_path = os.path.join(config_dir, self.default_file_name)

    def validate(self) -> None:
        """
        모드별 불변식을 확인합니다.

        Raises:
            ConfigError: 설정이 유효하지 않은 경우
        """
        if len(set(self.voters)) != len(self.voters):
            raise ConfigError("등록 투표자 목록에 중복이 있습니다.")
        if self.mode == GovernanceMode.CONSORTIUM:
            if not 1 <= self.threshold <= self.share_count:
                raise ConfigError(f"임계값 조건 1 <= t <= n 위반: t={self.threshold}, n={self.share_count}")
        if self.mode == GovernanceMode.PUBLIC_TRAPDOOR:
            if not 0 < self.quorum <= 1:
                raise ConfigError(f"정족수는 (0, 1] 범위여야 합니다: {self.quorum}")
            if self.voting_window < 0:
                raise ConfigError(f"투표 기간은 0 이상이어야 합니다: {self.voting_window}")
            if not self.voters:
                raise ConfigError("PUBLIC_TRAPDOOR 모드에는 등록 투표자가 필요합니다.")
        if self.oversight_enabled:
            if len(self.oversight_credential_hash) != 64:
                raise ConfigError("감독 거부권을 쓰려면 oversightCredentialHash(SHA-256 16진수)가 필요합니다.")

    def check_credential(self, token: Optional[str]) -> bool:
        """감독 자격 증명 토큰이 설정된 해시와 일치하는지 확인합니다."""
        if not token or not self.oversight_credential_hash:
            return False
        return hmac.compare_digest(credential_hash(token), self.oversight_credential_hash)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "threshold": self.threshold,
            "shareCount": self.share_count,
            "quorum": str(self.quorum),
            "votingWindow": self.voting_window,
            "oversightEnabled": self.oversight_enabled,
            "oversightCredentialHash": self.oversight_credential_hash,
            "publicTrapdoor": None if self.public_trapdoor is None else int_to_hex(self.public_trapdoor),
            "voters": list(self.voters),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GovernanceConfig":
        """
        딕셔너리에서 설정을 만들고 검증합니다. 없는 키는 기본값을 씁니다.

        Raises:
            ConfigError: 값 형식이 잘못되었거나 검증에 실패한 경우
        """
        if not isinstance(data, dict):
            raise ConfigError("거버넌스 설정은 JSON 객체여야 합니다.")
        config = cls()
        try:
            if "mode" in data:
                config.mode = GovernanceMode(data["mode"])
            config.threshold = int(data.get("threshold", config.threshold))
            config.share_count = int(data.get("shareCount", config.share_count))
            config.quorum = Fraction(str(data.get("quorum", config.quorum)))
            config.voting_window = int(data.get("votingWindow", config.voting_window))
            config.oversight_enabled = bool(data.get("oversightEnabled", config.oversight_enabled))
            config.oversight_credential_hash = str(data.get("oversightCredentialHash", ""))
            trapdoor = data.get("publicTrapdoor")
            config.public_trapdoor = None if trapdoor is None else hex_to_int(trapdoor)
            config.voters = [str(voter) for voter in data.get("voters", [])]
        except (ValueError, TypeError, ZeroDivisionError, ParseError) as e:
            raise ConfigError(f"거버넌스 설정 값 오류: {e}")
        config.validate()
        return config

    def save(self, file_path: Optional[str] = None) -> str:
        """
        현재 설정을 JSON 파일로 저장

        Args:
            file_path: 저장할 파일 경로 (기본값: self.default_file_path)

        Returns:
            저장한 파일 경로
        """
        save_path = file_path or self.default_file_path
        write_text_atomic(save_path, json.dumps(self.to_dict(), indent=4, ensure_ascii=False) + "\n")
        self.config_file_path = save_path
        return save_path

    def load(self, file_path: Optional[str] = None) -> "GovernanceConfig":
        """
        JSON 파일에서 설정 불러오기

        Args:
            file_path: 불러올 파일 경로 (기본값: self.default_file_path)

        Raises:
            ConfigError: 파일이 없거나 형식/검증 오류
        """
        load_path = file_path or self.default_file_path
        if not os.path.exists(load_path):
            raise ConfigError(f"설정 파일을 찾을 수 없습니다: {load_path}")
        try:
            with open(load_path, "r", encoding="utf-8") as f:
                loaded_data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"설정 파일 JSON 파싱 실패 ({load_path}): {e.msg}")
        loaded = self.from_dict(loaded_data)
        self.__dict__.update({k: v for k, v in loaded.__dict__.items()
                              if k not in ("config_file_path", "default_file_name", "default_file_path")})
        self.config_file_path = load_path
        return self
