#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
pyredactlib Package
Redactable-blockchain toolkit built on chameleon hashing.
"""

__version__ = '0.1.0'

from pyredactlib.redactErrors import (
    AuthorizationError,
    ChainLockedError,
    ConfigError,
    GovernanceError,
    IntegrityError,
    NotFoundError,
    ParameterError,
    ParseError,
    RedactError,
)
from pyredactlib.chamHash import ChamHash, ChameleonKeyPair, GroupParams
from pyredactlib.clawFree import BitMessage, ClawFree, ClawFreePair
from pyredactlib.merkleTree import MerkleTree
from pyredactlib.ledger import Block, BlockHeader, Chain, Ledger, RedactionStamp, Transaction
from pyredactlib.chainFile import ChainFile
from pyredactlib.secretShare import SecretShare, TrapdoorShare
from pyredactlib.governanceConfig import GovernanceConfig, GovernanceMode
from pyredactlib.governance import Governance, RedactionRequest, RequestState
from pyredactlib.simConfig import SimConfig
from pyredactlib.netSim import NetSim, SimReport
from pyredactlib.header import Header
