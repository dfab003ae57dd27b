#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
randomSource 모듈 - 난수 소스 생성과 편향 없는 정수 샘플링
시드가 주어지면 재현 가능한 random.Random, 없으면 secrets.SystemRandom을 사용
"""

import random
import secrets
from typing import Optional, Union

RandomSource = Union[random.Random, secrets.SystemRandom]


def make_rng(seed: Optional[int] = None) -> RandomSource:
    """
    난수 소스를 생성합니다.

    Args:
        seed: 결정적 모드용 시드 (기본값: None, 암호학적으로 안전한 소스 사용)

    Returns:
        getrandbits / randbytes 를 제공하는 난수 소스
    """
    if seed is None:
        return secrets.SystemRandom()
    return random.Random(seed)


def sample_below(bound: int, rng: RandomSource) -> int:
    """
    [0, bound-1] 구간에서 균등하게 정수를 뽑습니다.
    최소 비트 폭으로 뽑고 범위를 벗어나면 버리는 거절 샘플링이라 모듈로 편향이 없습니다.

    Args:
        bound: 상한 (배타적, 1 이상)
        rng: 난수 소스

    Returns:
        0 <= x < bound 인 정수
    """
    if bound < 1:
        raise ValueError(f"상한은 1 이상이어야 합니다: {bound}")
    if bound == 1:
        return 0
    width = (bound - 1).bit_length()
    while True:
        candidate = rng.getrandbits(width)
        if candidate < bound:
            return candidate


def randfunc_of(rng: RandomSource):
    """pycryptodome 의 randfunc(n) 인터페이스로 감싼 함수를 반환합니다."""
    return rng.randbytes
