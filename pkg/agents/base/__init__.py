from .agent import BaseAgent
from .state import AgentState

__all__ = [
    'BaseAgent',
    'AgentState',
]
