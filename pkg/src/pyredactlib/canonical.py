#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
canonical 모듈 - 비트 단위로 재현되는 정규 인코딩
정수는 소문자 16진수(앞자리 0 없음), 바이너리는 4바이트 빅엔디언 길이 접두사를 사용
"""

import json
import os
import tempfile
import struct
from typing import Any, Dict

from pyredactlib.redactErrors import ParseError


def int_to_hex(value: int) -> str:
    """정수를 정규 16진수 문자열로 변환합니다. 0은 "0"."""
    if value < 0:
        raise ValueError(f"음수는 인코딩할 수 없습니다: {value}")
    return format(value, "x")


def hex_to_int(text: str) -> int:
    """
    정규 16진수 문자열을 정수로 변환합니다.

    Raises:
        ParseError: 정규 형식이 아닌 경우 (대문자, 앞자리 0, 빈 문자열 등)
    """
    if not isinstance(text, str) or not text:
        raise ParseError(f"16진수 정수가 아닙니다: {text!r}")
    try:
        value = int(text, 16)
    except ValueError:
        raise ParseError(f"16진수 정수가 아닙니다: {text!r}")
    if int_to_hex(value) != text:
        raise ParseError(f"정규 16진수 형식이 아닙니다: {text!r}")
    return value


def bytes_to_hex(data: bytes) -> str:
    return data.hex()


def hex_to_bytes(text: str) -> bytes:
    if not isinstance(text, str):
        raise ParseError(f"16진수 바이트열이 아닙니다: {text!r}")
    try:
        data = bytes.fromhex(text)
    except ValueError:
        raise ParseError(f"16진수 바이트열이 아닙니다: {text!r}")
    if data.hex() != text:
        raise ParseError(f"정규 16진수 형식이 아닙니다: {text!r}")
    return data


def int_to_bytes(value: int) -> bytes:
    """최소 길이 빅엔디언 바이트. 0은 빈 바이트열."""
    return value.to_bytes((value.bit_length() + 7) // 8, "big")


def encode_bytes(data: bytes) -> bytes:
    """길이 접두사(4바이트 빅엔디언) + 원본 바이트."""
    return struct.pack(">I", len(data)) + data


def encode_int(value: int) -> bytes:
    return encode_bytes(int_to_bytes(value))


def dump_record(record: Dict[str, Any]) -> str:
    """
    레코드를 한 줄짜리 JSON 텍스트로 만듭니다.
    필드 순서는 딕셔너리 삽입 순서를 그대로 따릅니다.
    """
    return json.dumps(record, separators=(",", ":"), ensure_ascii=True)


def load_record(line: str, line_no: int = None) -> Dict[str, Any]:
    """
    한 줄짜리 JSON 레코드를 읽습니다.

    Raises:
        ParseError: JSON 객체가 아닌 경우
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON 파싱 실패: {e.msg}", line_no)
    if not isinstance(record, dict):
        raise ParseError("레코드는 JSON 객체여야 합니다.", line_no)
    return record


def write_text_atomic(file_path: str, text: str) -> None:
    """
    텍스트를 임시 파일에 쓴 뒤 os.replace 로 교체합니다.
    중간에 중단되어도 기존 파일은 그대로 남습니다.

    Args:
        file_path: 대상 파일 경로
        text: 기록할 내용
    """
    directory = os.path.dirname(os.path.abspath(file_path))
    fd, temp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(temp_path, file_path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
