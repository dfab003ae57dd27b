#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
헤더 모듈 - pyredactlib 서비스 인스턴스 관리
프로세스 안에서 한 번만 만들어지는 서비스 인스턴스들을 연결합니다.
"""

import os
from typing import Optional

from pyredactlib.chainFile import ChainFile
from pyredactlib.chamHash import ChamHash
from pyredactlib.clawFree import ClawFree
from pyredactlib.governance import Governance
from pyredactlib.governanceConfig import GovernanceConfig
from pyredactlib.ledger import Ledger
from pyredactlib.netSim import NetSim
from pyredactlib.secretShare import SecretShare


class Header:
    """
    pyredactlib 의 헤더 클래스
    각 서비스를 초기화하고 서로의 의존성을 주입합니다.
    """
    _instance = None

    @classmethod
    def get_instance(cls):
        """싱글톤 패턴을 구현한 인스턴스 접근 메소드"""
        if cls._instance is None:
            cls._instance = Header()
        return cls._instance

    def __init__(self):
        self.configDir = os.path.join(os.path.dirname(__file__), "ConfigFiles")
        self.governanceConfigPath = os.path.join(self.configDir, "governanceConfig.json")

        self.chamHash = ChamHash()
        self.clawFree = ClawFree()
        self.ledger = Ledger(chamHashService=self.chamHash)
        self.chainFile = ChainFile()
        self.secretShare = SecretShare()
        self.netSim = NetSim(chamHashService=self.chamHash, ledgerService=self.ledger,
                             chainFileService=self.chainFile, secretShareService=self.secretShare)

    def governance(self, config_path: Optional[str] = None) -> Governance:
        """
        설정 파일로 Governance 서비스를 만듭니다. 요청 등록부는 체인마다 따로이므로 공유하지 않습니다.

        Args:
            config_path: 거버넌스 설정 파일 경로 (기본값: None, 번들 기본 설정)

        Returns:
            Governance 인스턴스
        """
        config = GovernanceConfig().load(config_path or self.governanceConfigPath)
        return Governance(config, ledgerService=self.ledger, secretShareService=self.secretShare)
