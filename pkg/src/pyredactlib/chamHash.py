#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
chamHash 모듈 - 이산로그 기반 카멜레온 해시
키 생성, 해시, 검증, 트랩도어 충돌 계산(adapt), SHA-256 계층 합성 기능 제공

해시 형태는 h = g^e * y^r mod p (Krawczyk-Rabin) 이며, p = 2q + 1 인 안전 소수의
위수 q 부분군에서 동작합니다.
이 구성은 충돌 하나만 공개되어도 트랩도어가 드러나는(key-exposing) 약한 충돌 저항(w-CR)
수준이며, 트랩도어 보호는 governance 모듈의 권한 모델이 담당합니다.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import NewType, Optional, Tuple

import gmpy2
from Crypto.Math.Primality import COMPOSITE, miller_rabin_test, test_probable_prime
from Crypto.Util.number import inverse, sieve_base

from pyredactlib.canonical import encode_int, hex_to_int, int_to_hex, write_text_atomic
from pyredactlib.randomSource import RandomSource, make_rng, randfunc_of, sample_below
from pyredactlib.redactErrors import (
    AuthorizationError,
    GenerationError,
    ParameterError,
    ParseError,
    RangeError,
)

logger = logging.getLogger(__name__)

Randomness = NewType("Randomness", int)
ChameleonDigest = NewType("ChameleonDigest", int)
MessageScalar = NewType("MessageScalar", int)

SUPPORTED_SECURITY_BITS = (64, 256, 2048, 3072)
INSECURE_BIT_LIMIT = 64
PRIMALITY_ROUNDS = 128
SIEVE_PRIMES = sieve_base[1:257]

PUBLIC_KEY_TYPE = "chameleonPublicKey"
SECRET_KEY_TYPE = "chameleonSecretKey"


class CollisionResistance(Enum):
    """
    카멜레온 해시 충돌 저항 수준.

    - WEAK: 트랩도어 없이 충돌을 찾기 어려움 (w-CR)
    - ENHANCED: 공개된 충돌이 없는 해시값에 대해 충돌 불가 (e-CR)
    - STANDARD: 대상 메시지의 충돌이 공개된 적 없으면 충돌 불가 (s-CR)
    - FULL: 해시-메시지 쌍 단위의 충돌 불가 (f-CR)
    """
    WEAK = "w-CR"
    ENHANCED = "e-CR"
    STANDARD = "s-CR"
    FULL = "f-CR"


def _powmod(base: int, exponent: int, modulus: int) -> int:
    return int(gmpy2.powmod(base, exponent, modulus))


def is_probable_prime(candidate: int, rounds: int = PRIMALITY_ROUNDS, randfunc=None) -> bool:
    """
    Miller-Rabin 확률적 소수 판정.

    Args:
        candidate: 판정할 정수
        rounds: 반복 횟수 (기본값: 128)
        randfunc: 밑 선택용 바이트 난수 함수 (기본값: None, pycryptodome 기본 소스)

    Returns:
        소수일 가능성이 높으면 True
    """
    if candidate < 2:
        return False
    return miller_rabin_test(candidate, rounds, randfunc=randfunc) != COMPOSITE


@dataclass(frozen=True)
class GroupParams:
    """안전 소수 p = 2q + 1 과 위수 q 부분군의 생성원 g."""
    p: int
    q: int
    g: int

    def validate(self) -> None:
        """
        모든 불변식을 확인합니다.

        Raises:
            ParameterError: 소수성, p = 2q + 1, 생성원 조건 중 하나라도 어긋난 경우
        """
        if self.p != 2 * self.q + 1:
            raise ParameterError("p = 2q + 1 관계가 성립하지 않습니다.")
        if not is_probable_prime(self.q) or not is_probable_prime(self.p):
            raise ParameterError("p 와 q 는 모두 소수여야 합니다.")
        if not 1 < self.g < self.p or _powmod(self.g, self.q, self.p) != 1:
            raise ParameterError("g 는 위수 q 부분군의 1이 아닌 원소여야 합니다.")

    def is_member(self, value: int) -> bool:
        """value 가 위수 q 부분군의 원소인지 확인합니다."""
        return 1 <= value < self.p and _powmod(value, self.q, self.p) == 1

    @property
    def bits(self) -> int:
        return self.q.bit_length()


@dataclass(frozen=True)
class ChameleonKeyPair:
    """
    공개 해시 키 hk = g^tk mod p 와 (선택적) 비밀 트랩도어 tk.
    tk 가 None 이면 공개 키만 담고 있는 상태입니다.
    """
    params: GroupParams
    hk: int
    tk: Optional[int] = None

    @property
    def has_trapdoor(self) -> bool:
        return self.tk is not None

    @property
    def insecure(self) -> bool:
        """데스크 규모(64비트 이하) 파라미터 여부. 테스트 전용입니다."""
        return self.params.bits <= INSECURE_BIT_LIMIT

    def public(self) -> "ChameleonKeyPair":
        return ChameleonKeyPair(self.params, self.hk)

    def with_trapdoor(self, tk: int) -> "ChameleonKeyPair":
        """같은 공개 키에 다른 트랩도어 값을 붙인 키 쌍을 만듭니다. 검증은 하지 않습니다."""
        return ChameleonKeyPair(self.params, self.hk, tk)

    def validate(self) -> None:
        """
        키 쌍 불변식을 확인합니다.

        Raises:
            ParameterError: 그룹 파라미터, hk, tk 중 하나라도 어긋난 경우
        """
        self.params.validate()
        if not self.params.is_member(self.hk) or self.hk == 1:
            raise ParameterError("hk 는 부분군의 1이 아닌 원소여야 합니다.")
        if self.tk is not None:
            if not 1 <= self.tk <= self.params.q - 1:
                raise ParameterError("tk 는 [1, q-1] 범위여야 합니다.")
            if _powmod(self.params.g, self.tk, self.params.p) != self.hk:
                raise ParameterError("hk = g^tk mod p 관계가 성립하지 않습니다.")


class ChamHash:
    """
    이산로그 카멜레온 해시 서비스.
    키 생성부터 트랩도어 충돌 계산, 키 파일 입출력까지 담당합니다.
    """

    ATTAINED_LEVEL = CollisionResistance.WEAK

    def __init__(self, max_attempts_per_bit: int = 2000):
        """
        클래스 초기화

        Args:
            max_attempts_per_bit: 비트당 소수 탐색 시도 한도 (기본값: 2000)
        """
        self.max_attempts_per_bit = max_attempts_per_bit

    # ---- 키 생성 ----

    def generate_params(self, security_bits: int, rng: RandomSource) -> GroupParams:
        """
        security_bits 비트의 소수 q 와 안전 소수 p = 2q + 1 을 찾습니다.

        Args:
            security_bits: q 의 비트 길이
            rng: 난수 소스

        Returns:
            GroupParams

        Raises:
            GenerationError: 시도 한도 안에 안전 소수를 찾지 못한 경우
        """
        randfunc = randfunc_of(rng)
        top_bit = 1 << (security_bits - 1)
        max_attempts = self.max_attempts_per_bit * security_bits
        for attempt in range(max_attempts):
            q = rng.getrandbits(security_bits) | top_bit | 1
            p = 2 * q + 1
            if any(q % s == 0 or p % s == 0 for s in SIEVE_PRIMES):
                continue
            if test_probable_prime(q, randfunc) == COMPOSITE:
                continue
            if test_probable_prime(p, randfunc) == COMPOSITE:
                continue
            if not (is_probable_prime(q, randfunc=randfunc) and is_probable_prime(p, randfunc=randfunc)):
                continue
            g = self._find_generator(p, q, rng)
            logger.debug(f"{security_bits}비트 안전 소수 탐색 성공 (시도 {attempt + 1}회)")
            return GroupParams(p, q, g)
        logger.error(f"{security_bits}비트 안전 소수를 {max_attempts}회 안에 찾지 못했습니다.")
        raise GenerationError(f"{security_bits}비트 그룹 파라미터 생성 실패 ({max_attempts}회 시도)")

    def _find_generator(self, p: int, q: int, rng: RandomSource) -> int:
        # [2, p-2] 원소의 제곱은 1이 아닌 이차 잉여이므로 위수가 q
        h = 2 + sample_below(p - 3, rng)
        return h * h % p

    def keygen(self, security_bits: int, seed: Optional[int] = None,
               rng: Optional[RandomSource] = None) -> ChameleonKeyPair:
        """
        보안 매개변수를 받아 공개 해시 키와 비밀 트랩도어 키를 생성합니다.

        Args:
            security_bits: q 의 비트 길이 (64, 256, 2048, 3072 중 하나, 64는 테스트 전용)
            seed: 재현 가능한 생성을 위한 시드 (기본값: None, 안전한 난수 사용)
            rng: 직접 지정할 난수 소스 (seed 보다 우선)

        Returns:
            ChameleonKeyPair

        Raises:
            ParameterError: 지원하지 않는 비트 크기
            GenerationError: 소수 탐색 실패
        """
        if security_bits not in SUPPORTED_SECURITY_BITS:
            raise ParameterError(f"지원하지 않는 보안 비트 크기입니다: {security_bits} "
                                 f"(지원: {', '.join(str(b) for b in SUPPORTED_SECURITY_BITS)})")
        rng = rng if rng is not None else make_rng(seed)
        params = self.generate_params(security_bits, rng)
        tk = 1 + sample_below(params.q - 1, rng)
        keypair = ChameleonKeyPair(params, _powmod(params.g, tk, params.p), tk)
        if keypair.insecure:
            logger.warning(f"{security_bits}비트 키는 테스트 전용이며 안전하지 않습니다.")
        logger.info(f"카멜레온 키 쌍 생성 완료 (q {security_bits}비트, 지문 {self.fingerprint(keypair)})")
        return keypair

    # ---- 해시 / 검증 / 충돌 ----

    def _check_scalar(self, value: int, q: int, label: str) -> None:
        if not isinstance(value, int) or not 0 <= value < q:
            raise RangeError(f"{label} 값이 [0, q-1] 범위를 벗어났습니다: {value}")

    def hash(self, key: ChameleonKeyPair, e: MessageScalar, r: Randomness) -> ChameleonDigest:
        """
        h = g^e * hk^r mod p 를 계산합니다.

        Args:
            key: 공개 키 (트랩도어 불필요)
            e: 메시지 스칼라
            r: 난수

        Returns:
            카멜레온 다이제스트

        Raises:
            RangeError: e 또는 r 이 [0, q-1] 범위를 벗어난 경우
        """
        params = key.params
        self._check_scalar(e, params.q, "e")
        self._check_scalar(r, params.q, "r")
        return ChameleonDigest(_powmod(params.g, e, params.p) * _powmod(key.hk, r, params.p) % params.p)

    def verify(self, key: ChameleonKeyPair, e: MessageScalar, r: Randomness, h: ChameleonDigest) -> bool:
        """hash(key, e, r) == h 여부. 범위를 벗어난 입력은 예외 대신 False 를 반환합니다."""
        try:
            return self.hash(key, e, r) == h
        except RangeError:
            return False

    def adapt(self, keypair: ChameleonKeyPair, e_old: MessageScalar, r_old: Randomness,
              e_new: MessageScalar) -> Randomness:
        """
        같은 해시값을 만드는 새 난수를 계산합니다.
        r_new = (e_old - e_new) * tk^-1 + r_old mod q

        Args:
            keypair: 트랩도어가 포함된 키 쌍
            e_old: 기존 메시지 스칼라
            r_old: 기존 난수
            e_new: 새 메시지 스칼라

        Returns:
            hash(e_new, r_new) == hash(e_old, r_old) 를 만족하는 r_new

        Raises:
            AuthorizationError: 트랩도어가 없거나 0인 경우
            RangeError: 스칼라 범위 오류
        """
        q = keypair.params.q
        if keypair.tk is None or keypair.tk % q == 0:
            raise AuthorizationError("트랩도어 없이 충돌을 계산할 수 없습니다.")
        self._check_scalar(e_old, q, "e_old")
        self._check_scalar(r_old, q, "r_old")
        self._check_scalar(e_new, q, "e_new")
        return Randomness(((e_old - e_new) * inverse(keypair.tk % q, q) + r_old) % q)

    @staticmethod
    def message_scalar(message: bytes, q: int) -> MessageScalar:
        """SHA-256(message) 를 빅엔디언 정수로 읽어 q 로 나눈 나머지. 모든 모듈이 쓰는 정규 인코딩."""
        return MessageScalar(int.from_bytes(hashlib.sha256(message).digest(), "big") % q)

    def layered_hash(self, key: ChameleonKeyPair, message: bytes,
                     r: Randomness) -> Tuple[ChameleonDigest, MessageScalar]:
        """
        임의 길이 메시지를 SHA-256 으로 먼저 줄인 뒤 카멜레온 해시를 적용합니다.

        Returns:
            (다이제스트, 메시지 스칼라) 튜플
        """
        e = self.message_scalar(message, key.params.q)
        return self.hash(key, e, r), e

    def sample_randomness(self, q: int, rng: RandomSource) -> Randomness:
        """[0, q-1] 에서 균등한 난수를 뽑습니다."""
        return Randomness(sample_below(q, rng))

    def extract_trapdoor(self, key: ChameleonKeyPair, e1: MessageScalar, r1: Randomness,
                         e2: MessageScalar, r2: Randomness) -> int:
        """
        공개된 충돌 한 쌍에서 트랩도어를 복원합니다 (키 노출 문제).
        tk = (e1 - e2) / (r2 - r1) mod q

        Raises:
            ParameterError: r1 == r2 라서 정보가 없는 경우
        """
        q = key.params.q
        if (r2 - r1) % q == 0:
            raise ParameterError("r 값이 같은 쌍으로는 트랩도어를 복원할 수 없습니다.")
        return (e1 - e2) * inverse((r2 - r1) % q, q) % q

    # ---- 키 파일 ----

    def fingerprint(self, key: ChameleonKeyPair) -> str:
        """정규 공개 키 인코딩의 SHA-256 앞 8바이트 (16진수)."""
        params = key.params
        encoded = encode_int(params.p) + encode_int(params.q) + encode_int(params.g) + encode_int(key.hk)
        return hashlib.sha256(encoded).digest()[:8].hex()

    def key_to_dict(self, key: ChameleonKeyPair, include_secret: bool = False) -> dict:
        record = {
            "type": SECRET_KEY_TYPE if include_secret else PUBLIC_KEY_TYPE,
            "insecure": key.insecure,
            "p": int_to_hex(key.params.p),
            "q": int_to_hex(key.params.q),
            "g": int_to_hex(key.params.g),
            "y": int_to_hex(key.hk),
        }
        if include_secret:
            if key.tk is None:
                raise AuthorizationError("트랩도어가 없는 키는 비밀 키 파일로 저장할 수 없습니다.")
            record["x"] = int_to_hex(key.tk)
        return record

    def key_from_dict(self, record: dict) -> ChameleonKeyPair:
        """
        키 레코드를 읽고 불변식을 검증합니다.

        Raises:
            ParseError: 필드 누락, 형식 오류, 불변식 위반
        """
        key_type = record.get("type")
        if key_type not in (PUBLIC_KEY_TYPE, SECRET_KEY_TYPE):
            raise ParseError(f"알 수 없는 키 유형입니다: {key_type!r}")
        try:
            params = GroupParams(hex_to_int(record["p"]), hex_to_int(record["q"]), hex_to_int(record["g"]))
            tk = hex_to_int(record["x"]) if key_type == SECRET_KEY_TYPE else None
            key = ChameleonKeyPair(params, hex_to_int(record["y"]), tk)
        except KeyError as e:
            raise ParseError(f"키 필드가 없습니다: {e}")
        try:
            key.validate()
        except ParameterError as e:
            raise ParseError(f"키 불변식 위반: {e}")
        return key

    def save_key(self, key: ChameleonKeyPair, file_path: str, include_secret: bool = False) -> None:
        """
        키를 JSON 텍스트 파일로 저장합니다 (파일 하나에 키 하나).

        Args:
            key: 저장할 키
            file_path: 저장 경로
            include_secret: 트랩도어 포함 여부
        """
        text = json.dumps(self.key_to_dict(key, include_secret), indent=4) + "\n"
        write_text_atomic(file_path, text)
        logger.info(f"{'비밀' if include_secret else '공개'} 키 저장 완료: {file_path}")

    def load_key(self, file_path: str) -> ChameleonKeyPair:
        """
        키 파일을 불러옵니다.

        Raises:
            ParseError: 파일이 없거나 형식이 잘못된 경우
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                record = json.load(f)
        except FileNotFoundError:
            raise ParseError(f"키 파일을 찾을 수 없습니다: {file_path}")
        except json.JSONDecodeError as e:
            raise ParseError(f"키 파일 JSON 파싱 실패: {e.msg}", e.lineno)
        if not isinstance(record, dict):
            raise ParseError("키 파일은 JSON 객체여야 합니다.")
        return self.key_from_dict(record)
