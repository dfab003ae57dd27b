import os
import sys

import hypothesis
import pytest

# 현재 스크립트의 디렉토리 path 가져오기
current_dir = os.path.dirname(os.path.abspath(__file__))
# 프로젝트 루트의 src 디렉토리 추가
project_root = os.path.abspath(os.path.join(current_dir, "..", "src"))

if project_root not in sys.path:
    sys.path.insert(0, project_root)

from pyredactlib.chamHash import ChamHash, ChameleonKeyPair, GroupParams
from pyredactlib.chainFile import ChainFile
from pyredactlib.ledger import Ledger
from pyredactlib.secretShare import SecretShare

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def chamHash():
    return ChamHash()


@pytest.fixture
def ledger(chamHash):
    return Ledger(chamHashService=chamHash)


@pytest.fixture
def chainFile():
    return ChainFile()


@pytest.fixture
def secretShare():
    return SecretShare()


@pytest.fixture
def toy_key():
    """p=23, q=11, g=2, tk=3 인 손 계산용 키 (hk = 8)."""
    return ChameleonKeyPair(GroupParams(23, 11, 2), 8, 3)


@pytest.fixture(scope="session")
def key64():
    return ChamHash().keygen(64, seed=2024)


@pytest.fixture(scope="session")
def key256():
    return ChamHash().keygen(256, seed=7)
