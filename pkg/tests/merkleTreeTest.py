import hashlib

import pytest
from hypothesis import given
import hypothesis.strategies as st

from pyredactlib.canonical import encode_bytes, encode_int
from pyredactlib.merkleTree import EMPTY_ROOT, MerkleTree


def sha(data):
    return hashlib.sha256(data).digest()


def node(left, right):
    return sha(encode_bytes(left) + encode_bytes(right))


def test_empty_tree_root():
    assert MerkleTree([]).root == EMPTY_ROOT == bytes(32)


def test_single_leaf_root_is_leaf_hash():
    assert MerkleTree([7]).root == sha(encode_int(7))


def test_internal_node_encodes_children():
    a, b = sha(encode_int(1)), sha(encode_int(2))
    assert MerkleTree([1, 2]).root == sha(b"\x00\x00\x00\x20" + a + b"\x00\x00\x00\x20" + b)
    assert MerkleTree([1, 2]).root != sha(a + b)


def test_odd_node_is_promoted():
    a, b, c = (sha(encode_int(v)) for v in (1, 2, 3))
    assert MerkleTree([1, 2, 3]).root == node(node(a, b), c)


def test_order_matters():
    assert MerkleTree([1, 2]).root != MerkleTree([2, 1]).root


@given(st.lists(st.integers(min_value=0, max_value=2 ** 256), min_size=1, max_size=17))
def test_every_leaf_has_a_valid_proof(leaves):
    tree = MerkleTree(leaves)
    for index, leaf in enumerate(leaves):
        assert MerkleTree.verify_proof(leaf, tree.proof(index), tree.root)


def test_proof_rejects_wrong_leaf():
    tree = MerkleTree([10, 20, 30, 40, 50])
    assert not MerkleTree.verify_proof(31, tree.proof(2), tree.root)


def test_proof_index_out_of_range():
    with pytest.raises(IndexError):
        MerkleTree([1, 2]).proof(2)
