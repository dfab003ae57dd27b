#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
secretShare 모듈 - 트랩도어의 (t, n) 샤미르 비밀 분산

위수 q 정수체 위의 t-1 차 다항식 f(x) 를 만들고 f(0) = tk, i 번째 지분 = f(i) 로 둡니다.
임의의 t 개 지분으로 0 에서 라그랑주 보간하면 tk 가 복원됩니다.
t 개보다 적은 지분으로는 잘못된 값이 나오며, 호출자는 이를 알 수 없으므로
adapt 사후조건 검사(IntegrityError)가 최종 방어선이 됩니다.
"""

import json
import logging
from dataclasses import dataclass
from typing import List, Sequence

from Crypto.Util.number import inverse

from pyredactlib.canonical import hex_to_int, int_to_hex, write_text_atomic
from pyredactlib.randomSource import RandomSource, sample_below
from pyredactlib.redactErrors import ParameterError, ParseError

logger = logging.getLogger(__name__)

SHARE_TYPE = "trapdoorShare"


@dataclass(frozen=True)
class TrapdoorShare:
    index: int
    value: int
    q: int

    def to_dict(self) -> dict:
        return {"type": SHARE_TYPE, "index": self.index, "value": int_to_hex(self.value), "q": int_to_hex(self.q)}

    @classmethod
    def from_dict(cls, record: dict) -> "TrapdoorShare":
        if not isinstance(record, dict) or record.get("type") != SHARE_TYPE:
            raise ParseError("트랩도어 지분 레코드가 아닙니다.")
        index = record.get("index")
        if not isinstance(index, int) or isinstance(index, bool) or index < 1:
            raise ParseError(f"지분 인덱스가 올바르지 않습니다: {index!r}")
        try:
            q = hex_to_int(record["q"])
            value = hex_to_int(record["value"])
        except KeyError as e:
            raise ParseError(f"지분 필드가 없습니다: {e}")
        if value >= q:
            raise ParseError("지분 값이 q 이상입니다.")
        return cls(index, value, q)


class SecretShare:
    """트랩도어 분산/복원과 지분 파일 입출력 서비스."""

    @staticmethod
    def _evaluate(coeffs: Sequence[int], x: int, q: int) -> int:
        # 호너 방식
        result = 0
        for coeff in reversed(coeffs):
            result = (result * x + coeff) % q
        return result

    def split_trapdoor(self, tk: int, t: int, n: int, q: int, rng: RandomSource) -> List[TrapdoorShare]:
        """
        트랩도어를 n 개 지분으로 나눕니다. 같은 시드의 rng 이면 같은 지분이 나옵니다.

        Args:
            tk: 분산할 트랩도어 (0 <= tk < q)
            t: 복원 임계값
            n: 지분 개수
            q: 소수 위수 (체의 크기)
            rng: 다항식 계수용 난수 소스

        Returns:
            index 1..n 의 TrapdoorShare 목록

        Raises:
            ParameterError: 1 <= t <= n < q 가 아니거나 tk 범위 오류
        """
        if not 1 <= t <= n:
            raise ParameterError(f"임계값 조건 1 <= t <= n 위반: t={t}, n={n}")
        if n >= q:
            raise ParameterError(f"지분 개수 n={n} 은 q 보다 작아야 합니다.")
        if not 0 <= tk < q:
            raise ParameterError("트랩도어가 [0, q-1] 범위를 벗어났습니다.")
        coeffs = [tk] + [sample_below(q, rng) for _ in range(t - 1)]
        shares = [TrapdoorShare(i, self._evaluate(coeffs, i, q), q) for i in range(1, n + 1)]
        logger.info(f"트랩도어를 ({t}, {n}) 지분으로 분산했습니다.")
        return shares

    def reconstruct_trapdoor(self, shares: Sequence[TrapdoorShare], q: int) -> int:
        """
        0 에서의 라그랑주 보간으로 트랩도어를 복원합니다.
        지분이 임계값보다 적어도 값을 돌려주며, 그 값은 틀린 트랩도어입니다.

        Args:
            shares: 서로 다른 인덱스의 지분 목록 (1개 이상)
            q: 소수 위수

        Returns:
            복원된 값

        Raises:
            ParameterError: 지분이 없거나 인덱스 중복, 다른 q 의 지분 혼입
        """
        if not shares:
            raise ParameterError("복원할 지분이 없습니다.")
        indices = [share.index for share in shares]
        if len(set(indices)) != len(indices):
            raise ParameterError(f"중복된 지분 인덱스가 있습니다: {sorted(indices)}")
        if any(share.q != q for share in shares):
            raise ParameterError("다른 위수 q 로 만든 지분이 섞여 있습니다.")
        secret = 0
        for share in shares:
            numerator, denominator = 1, 1
            for other in shares:
                if other.index == share.index:
                    continue
                numerator = numerator * (-other.index) % q
                denominator = denominator * (share.index - other.index) % q
            secret = (secret + share.value * numerator * inverse(denominator, q)) % q
        logger.debug(f"지분 {len(shares)}개로 트랩도어 복원 시도")
        return secret

    def save_share(self, share: TrapdoorShare, file_path: str) -> None:
        write_text_atomic(file_path, json.dumps(share.to_dict(), indent=4) + "\n")

    def load_share(self, file_path: str) -> TrapdoorShare:
        """
        지분 파일을 불러옵니다.

        Raises:
            ParseError: 파일이 없거나 형식이 잘못된 경우
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                record = json.load(f)
        except FileNotFoundError:
            raise ParseError(f"지분 파일을 찾을 수 없습니다: {file_path}")
        except json.JSONDecodeError as e:
            raise ParseError(f"지분 파일 JSON 파싱 실패: {e.msg}", e.lineno)
        return TrapdoorShare.from_dict(record)
