#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
merkleTree 모듈 - 카멜레온 다이제스트를 잎으로 쓰는 머클 트리
잎 노드는 SHA-256(정규 인코딩된 다이제스트), 내부 노드는 SHA-256(정규 인코딩된 왼쪽 || 정규 인코딩된 오른쪽)
홀수 개로 남은 마지막 노드는 복제하지 않고 다음 단계로 그대로 올라갑니다.
"""

import hashlib
from typing import List, Sequence, Tuple

from pyredactlib.canonical import encode_bytes, encode_int

EMPTY_ROOT = b"\x00" * 32

# (형제 노드 해시, 형제가 오른쪽이면 True)
ProofStep = Tuple[bytes, bool]


def _sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class MerkleTree:
    """
    머클 트리 클래스.
    잎 목록을 받아 모든 단계를 계산해 두고 루트와 포함 증명을 제공합니다.
    """

    def __init__(self, leaves: Sequence[int]):
        """
        클래스 초기화

        Args:
            leaves: 트랜잭션 순서대로 나열한 카멜레온 다이제스트 목록
        """
        self.leaves = list(leaves)
        self.levels: List[List[bytes]] = []
        self._build()

    @staticmethod
    def leaf_hash(digest: int) -> bytes:
        return _sha256(encode_int(digest))

    @staticmethod
    def node_hash(left: bytes, right: bytes) -> bytes:
        """두 자식 해시를 각각 길이 접두사로 인코딩해 이어 붙인 뒤 해시합니다."""
        return _sha256(encode_bytes(left) + encode_bytes(right))

    def _build(self):
        if not self.leaves:
            return
        level = [self.leaf_hash(leaf) for leaf in self.leaves]
        self.levels.append(level)
        while len(level) > 1:
            next_level = [self.node_hash(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
            if len(level) % 2 == 1:
                next_level.append(level[-1])
            level = next_level
            self.levels.append(level)

    @property
    def root(self) -> bytes:
        """32바이트 루트. 잎이 없으면 0으로 채운 32바이트."""
        if not self.levels:
            return EMPTY_ROOT
        return self.levels[-1][0]

    def proof(self, index: int) -> List[ProofStep]:
        """
        index 번째 잎의 포함 증명을 만듭니다.
        홀수 승격으로 형제가 없는 단계는 증명에서 빠집니다.

        Raises:
            IndexError: 범위를 벗어난 index
        """
        if not 0 <= index < len(self.leaves):
            raise IndexError(f"잎 인덱스 범위 오류: {index}")
        steps = []
        position = index
        for level in self.levels[:-1]:
            sibling = position ^ 1
            if sibling < len(level):
                steps.append((level[sibling], sibling > position))
            position //= 2
        return steps

    @classmethod
    def verify_proof(cls, leaf: int, proof: List[ProofStep], root: bytes) -> bool:
        """잎 다이제스트와 증명으로 루트를 다시 계산해 비교합니다."""
        node = cls.leaf_hash(leaf)
        for sibling, sibling_is_right in proof:
            node = cls.node_hash(node, sibling) if sibling_is_right else cls.node_hash(sibling, node)
        return node == root
