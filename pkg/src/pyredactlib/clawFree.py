#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
clawFree 모듈 - claw-free 트랩도어 순열 쌍으로 만든 일반형 카멜레온 해시
Blum 정수 n = p'q' 의 이차 잉여 위에서 f0(x) = x^2, f1(x) = 4x^2 (mod n) 쌍을 사용

데스크 규모 전용 백엔드입니다. chamHash 의 이산로그 구성을 교차 검증하고
순열 합성 순서(m[1] 먼저, m[k] 마지막)를 확인하는 용도로 씁니다.
메시지는 고정 길이 k 비트로 부호화되므로 접미사 충돌이 생기지 않습니다.
"""

import logging
from dataclasses import dataclass
from math import gcd
from typing import List, Optional, Tuple

from Crypto.Util.number import inverse
from sympy.ntheory import jacobi_symbol, legendre_symbol
from sympy.ntheory.modular import crt

from pyredactlib.chamHash import is_probable_prime
from pyredactlib.randomSource import RandomSource, make_rng, sample_below
from pyredactlib.redactErrors import (
    AuthorizationError,
    DomainError,
    GenerationError,
    IntegrityError,
    ParameterError,
)

logger = logging.getLogger(__name__)

MIN_BITS_PER_PRIME = 8


@dataclass(frozen=True)
class BitMessage:
    """고정 길이 비트 메시지. bits[0] 이 m[1] 입니다."""
    bits: Tuple[int, ...]

    @classmethod
    def from_string(cls, text: str) -> "BitMessage":
        if any(ch not in "01" for ch in text):
            raise ParameterError(f"비트 문자열은 0과 1로만 이루어져야 합니다: {text!r}")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def from_int(cls, value: int, k: int) -> "BitMessage":
        """value 를 k 비트 빅엔디언 비트열로 만듭니다 (m[1] 이 최상위 비트)."""
        if not 0 <= value < (1 << k):
            raise ParameterError(f"{value} 는 {k}비트로 표현할 수 없습니다.")
        return cls(tuple((value >> (k - 1 - i)) & 1 for i in range(k)))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class ClawFreePair:
    """
    Blum 정수 n 과 고정 메시지 길이 k, 그리고 (선택적) 소인수분해 트랩도어.
    factors 가 None 이면 공개 부분만 가진 상태입니다.
    """
    n: int
    k: int
    factors: Optional[Tuple[int, int]] = None

    @property
    def has_trapdoor(self) -> bool:
        return self.factors is not None

    def public(self) -> "ClawFreePair":
        return ClawFreePair(self.n, self.k)


class ClawFree:
    """claw-free 순열 쌍 기반 카멜레온 해시 서비스."""

    def __init__(self, max_attempts: int = 100000):
        self.max_attempts = max_attempts

    # ---- 키 ----

    @staticmethod
    def _check_blum_prime(value: int) -> None:
        if not is_probable_prime(value):
            raise ParameterError(f"{value} 는 소수가 아닙니다.")
        if value % 4 != 3:
            raise ParameterError(f"{value} 는 4로 나눈 나머지가 3이 아니므로 Blum 소수가 아닙니다.")

    def from_factors(self, p: int, q: int, k: int) -> ClawFreePair:
        """
        주어진 두 소수로 검증된 ClawFreePair 를 만듭니다.

        Args:
            p: 첫 번째 소수 (p mod 4 = 3)
            q: 두 번째 소수 (q mod 4 = 3)
            k: 메시지 비트 길이

        Raises:
            ParameterError: 소수/Blum 조건 위반, p == q, k < 1
        """
        self._check_blum_prime(p)
        self._check_blum_prime(q)
        if p == q:
            raise ParameterError("두 소수는 서로 달라야 합니다.")
        if k < 1:
            raise ParameterError("메시지 길이 k 는 1 이상이어야 합니다.")
        return ClawFreePair(p * q, k, (p, q))

    def _blum_prime(self, bits: int, rng: RandomSource) -> int:
        top_bit = 1 << (bits - 1)
        for _ in range(self.max_attempts):
            candidate = rng.getrandbits(bits) | top_bit | 3
            if is_probable_prime(candidate):
                return candidate
        raise GenerationError(f"{bits}비트 Blum 소수를 {self.max_attempts}회 안에 찾지 못했습니다.")

    def cf_keygen(self, bits_per_prime: int, k: int, rng: Optional[RandomSource] = None,
                  seed: Optional[int] = None) -> ClawFreePair:
        """
        Blum 정수와 트랩도어를 생성합니다. 시드가 같으면 같은 n 이 나옵니다.

        Args:
            bits_per_prime: 소수 하나의 비트 길이 (8 이상)
            k: 메시지 비트 길이
            rng: 난수 소스 (seed 보다 우선)
            seed: 재현용 시드

        Raises:
            ParameterError: bits_per_prime < 8
            GenerationError: 소수 탐색 실패
        """
        if bits_per_prime < MIN_BITS_PER_PRIME:
            raise ParameterError(f"소수 비트 길이는 {MIN_BITS_PER_PRIME} 이상이어야 합니다: {bits_per_prime}")
        rng = rng if rng is not None else make_rng(seed)
        p = self._blum_prime(bits_per_prime, rng)
        q = self._blum_prime(bits_per_prime, rng)
        while q == p:
            q = self._blum_prime(bits_per_prime, rng)
        pair = self.from_factors(p, q, k)
        logger.info(f"claw-free 쌍 생성 완료 (n {pair.n.bit_length()}비트, k={k})")
        return pair

    # ---- 정의역 ----

    def in_domain(self, pair: ClawFreePair, x: int) -> bool:
        """
        x 가 n 의 이차 잉여인지 확인합니다.
        트랩도어가 없으면 야코비 기호(필요조건)로만 판정합니다.
        """
        if not 0 < x < pair.n or gcd(x, pair.n) != 1:
            return False
        if pair.factors is not None:
            p, q = pair.factors
            return legendre_symbol(x % p, p) == 1 and legendre_symbol(x % q, q) == 1
        return jacobi_symbol(x, pair.n) == 1

    @staticmethod
    def residues(n: int) -> List[int]:
        """n 의 이차 잉여 전체 목록. 데스크 규모 전용 전수 열거입니다."""
        return sorted({x * x % n for x in range(1, n) if gcd(x, n) == 1})

    def sample_domain(self, pair: ClawFreePair, rng: RandomSource) -> int:
        """균등한 단원 x 를 뽑아 x^2 mod n 을 돌려줍니다."""
        while True:
            x = 1 + sample_below(pair.n - 1, rng)
            if gcd(x, pair.n) == 1:
                return x * x % pair.n

    # ---- 순열 ----

    @staticmethod
    def f0(pair: ClawFreePair, x: int) -> int:
        return x * x % pair.n

    @staticmethod
    def f1(pair: ClawFreePair, x: int) -> int:
        return 4 * x * x % pair.n

    def _principal_sqrt(self, pair: ClawFreePair, y: int) -> int:
        # p = 3 mod 4 이면 y^((p+1)/4) 가 이차 잉여인 제곱근
        p, q = pair.factors
        root_p = pow(y % p, (p + 1) // 4, p)
        root_q = pow(y % q, (q + 1) // 4, q)
        root, _ = crt([p, q], [root_p, root_q])
        return int(root)

    def f0_inverse(self, pair: ClawFreePair, y: int) -> int:
        return self._principal_sqrt(pair, y)

    def f1_inverse(self, pair: ClawFreePair, y: int) -> int:
        return self._principal_sqrt(pair, y * inverse(4, pair.n) % pair.n)

    # ---- 해시 / 충돌 ----

    def _check_length(self, pair: ClawFreePair, m: BitMessage) -> None:
        if len(m) != pair.k:
            raise ParameterError(f"메시지 길이 {len(m)} 가 고정 길이 k={pair.k} 와 다릅니다.")

    def cf_hash(self, pair: ClawFreePair, m: BitMessage, r: int) -> int:
        """
        f_{m[k]} ∘ ... ∘ f_{m[1]}(r) 을 계산합니다. m[1] 이 먼저 적용됩니다.

        Raises:
            ParameterError: 메시지 길이가 k 와 다른 경우
            DomainError: r 이 이차 잉여가 아닌 경우
        """
        self._check_length(pair, m)
        if not self.in_domain(pair, r):
            raise DomainError(f"r={r} 은 n 의 이차 잉여가 아닙니다.")
        value = r
        for bit in m.bits:
            value = self.f1(pair, value) if bit else self.f0(pair, value)
        return value

    def cf_adapt(self, pair: ClawFreePair, m_old: BitMessage, r_old: int, m_new: BitMessage) -> int:
        """
        새 메시지 m_new 에 대해 같은 해시를 만드는 r_new 를 계산합니다.
        해시값에 m_new 의 역함수를 m[k] 부터 m[1] 순서로 적용합니다.

        Raises:
            AuthorizationError: 트랩도어가 없는 경우
            IntegrityError: 소인수분해가 n 과 맞지 않거나 사후조건 검사 실패
        """
        if pair.factors is None:
            raise AuthorizationError("소인수분해 트랩도어 없이 충돌을 계산할 수 없습니다.")
        self._check_length(pair, m_new)
        p, q = pair.factors
        if p * q != pair.n or p % 4 != 3 or q % 4 != 3:
            logger.error("claw-free 트랩도어가 공개 모듈러스와 일치하지 않습니다.")
            raise IntegrityError("소인수분해가 n 과 일치하지 않습니다.")
        target = self.cf_hash(pair, m_old, r_old)
        value = target
        for bit in reversed(m_new.bits):
            value = self.f1_inverse(pair, value) if bit else self.f0_inverse(pair, value)
        try:
            consistent = self.cf_hash(pair, m_new, value) == target
        except DomainError:
            consistent = False
        if not consistent:
            logger.error("claw-free 충돌 사후조건 검사 실패")
            raise IntegrityError("계산한 r_new 가 같은 해시값을 만들지 않습니다.")
        return value

    def find_claw(self, pair: ClawFreePair, rng: RandomSource) -> Tuple[int, int]:
        """트랩도어로 f0(x) = f1(y) 인 claw (x, y) 를 만듭니다."""
        if pair.factors is None:
            raise AuthorizationError("트랩도어 없이 claw 를 만들 수 없습니다.")
        x = self.sample_domain(pair, rng)
        return x, self.f1_inverse(pair, self.f0(pair, x))

    def search_claw(self, pair: ClawFreePair, attempts: int, rng: RandomSource) -> Optional[Tuple[int, int]]:
        """트랩도어 없이 무작위로 claw 를 찾습니다. 한도 안에 못 찾으면 None."""
        public = pair.public()
        for _ in range(attempts):
            x = self.sample_domain(pair, rng)
            y = self.sample_domain(pair, rng)
            if self.f0(public, x) == self.f1(public, y):
                return x, y
        return None
