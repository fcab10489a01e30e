from enum import Enum


class AgentState(Enum):
    """代理状态：idle → running → completed / error，cleanup 后回到 idle"""
    IDLE = "idle"
    RUNNING = "running"
    COMPLETED = "completed"
    ERROR = "error"

    @property
    def finished(self) -> bool:
        """任务已结束（成功或失败）"""
        return self in (AgentState.COMPLETED, AgentState.ERROR)
