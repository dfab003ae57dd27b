#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
redactErrors 모듈 - pyredactlib 전체에서 사용하는 예외 계층 정의
각 예외는 CLI 종료 코드(exit_code)를 함께 가지고 있어 cli 모듈이 그대로 사용함
"""


class RedactError(Exception):
    """pyredactlib 예외의 최상위 클래스."""

    exit_code = 2


class ParameterError(RedactError, ValueError):
    """잘못된 매개변수 (비트 크기, t/n, 중복 인덱스 등)."""


class RangeError(ParameterError):
    """스칼라 값이 [0, q-1] 범위를 벗어난 경우."""


class DomainError(ParameterError):
    """claw-free 입력이 정의역(이차 잉여)에 속하지 않는 경우."""


class SizeError(ParameterError):
    """페이로드가 설정된 최대 크기를 초과한 경우."""


class GenerationError(RedactError):
    """소수 탐색 시도 횟수를 모두 소진한 경우."""


class ConfigError(RedactError):
    """거버넌스/시뮬레이션 설정이 유효하지 않은 경우."""


class ParseError(RedactError):
    """
    체인/키/지분/요청 파일 파싱 실패.

    Args:
        message: 오류 메시지
        line_no: 문제가 발생한 줄 번호 (1부터 시작, 모르면 None)
    """

    def __init__(self, message: str, line_no: int = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"{line_no}번째 줄: {message}"
        super().__init__(message)


class NotFoundError(RedactError, LookupError):
    """존재하지 않는 트랜잭션/블록/요청."""


class AuthorizationError(RedactError):
    """트랩도어 누락, 거버넌스 게이트 미충족 등 권한 오류."""

    exit_code = 3


class GovernanceError(AuthorizationError):
    """중복 투표, 투표 기간 경과, 허용되지 않는 상태 전이."""


class IntegrityError(RedactError):
    """adapt 사후조건 실패 또는 체인 검증 실패."""

    exit_code = 4


class ChainLockedError(RedactError):
    """다른 명령이 같은 체인 파일의 잠금을 가지고 있는 경우."""
