"""Priority-aware consortium consensus: leader election, block building,
peer-prediction review and a deterministic scenario simulator."""
from .core import Block, BlockStatus, ChainState, NodeProfile, Transaction, TxClass, validate_block
from .errors import PriorityChainError

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockStatus",
    "ChainState",
    "NodeProfile",
    "PriorityChainError",
    "Transaction",
    "TxClass",
    "validate_block",
]
