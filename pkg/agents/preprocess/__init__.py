from .agent import PreprocessAgent

__all__ = ['PreprocessAgent']
