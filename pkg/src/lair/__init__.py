"""Algebraic multigrid with local approximate ideal restriction for
nonsymmetric sparse systems."""
from .hierarchy import Hierarchy, SetupConfig, setup, vcycle
from .krylov import SolveConfig, SolveReport, gmres
from .strength_split import CfSplitting, StrengthGraph, classical_soc, rs_first_pass
from .transfer import RestrictionConfig, TransferPair, lair_restriction

__all__ = ['Hierarchy', 'SetupConfig', 'setup', 'vcycle', 'SolveConfig',
           'SolveReport', 'gmres', 'CfSplitting', 'StrengthGraph', 'classical_soc',
           'rs_first_pass', 'RestrictionConfig', 'TransferPair', 'lair_restriction']
