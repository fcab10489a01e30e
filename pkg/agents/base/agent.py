from abc import ABC, abstractmethod
from typing import Any, Dict, Optional
import logging
from .state import AgentState


class BaseAgent(ABC):
    """Agent基类，提供流水线各阶段共有的状态管理、校验与日志功能"""

    def __init__(self, name: str, config: Optional[Dict] = None):
        """
        初始化Agent

        Args:
            name: Agent名称
            config: Agent配置参数（通常包含 run_config）
        """
        self.name = name
        self.config = config or {}
        self.state = AgentState.IDLE
        self.logger = logging.getLogger(self.name)

    @abstractmethod
    def execute(self, task: Dict[str, Any]) -> Any:
        """
        执行Agent的主要任务

        Args:
            task: 任务描述字典

        Returns:
            任务执行结果
        """
        pass

    @abstractmethod
    def _validate_impl(self, data: Any) -> bool:
        """
        具体的验证实现

        Args:
            data: 待验证的数据

        Raises:
            ValueError: 验证失败时抛出
        """
        pass

    def require(self, task: Dict[str, Any], *fields: str) -> None:
        """检查任务中必须存在的字段"""
        for field in fields:
            if field not in task:
                raise ValueError(f"缺少必要字段：{field}")

    def run(self, task: Dict[str, Any]) -> Any:
        """
        带状态跟踪地执行任务：idle → running → completed / error

        Args:
            task: 任务描述字典

        Returns:
            execute 的结果
        """
        self._validate_impl(task)
        self.update_state(AgentState.RUNNING)
        try:
            result = self.execute(task)
        except Exception as e:
            self.log_error(f"{self.name} failed: {str(e)}")
            raise
        self.update_state(AgentState.COMPLETED)
        return result

    def update_state(self, new_state: AgentState) -> None:
        """
        更新Agent状态

        Args:
            new_state: 新状态
        """
        old_state = self.state
        self.state = new_state
        self.logger.debug(f"State changed from {old_state.value} to {new_state.value}")

    def log_error(self, error: str) -> None:
        """
        记录错误日志

        Args:
            error: 错误信息
        """
        self.logger.error(error)
        self.update_state(AgentState.ERROR)

    def cleanup(self) -> None:
        """清理Agent资源"""
        self.update_state(AgentState.IDLE)
