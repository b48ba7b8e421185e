"""Greedy miner-seeking peer selection: simulator, constructions and analysis."""

from .graph import EdgeRecord, GameParams, NodeInfo, PeerGraph, TieRule
from .kernels import BACKEND

__all__ = ["EdgeRecord", "GameParams", "NodeInfo", "PeerGraph", "TieRule", "BACKEND"]
__version__ = "0.1.0"
