import os
from typing import Any, Dict, Optional, Tuple

from config.config import RunConfig
from utils.errors import DimMismatch, EvalToolkitError
from utils.workers import ordered_map
from ..base import BaseAgent
from .radar import InputVariant, Tesseract, preprocess_frame, read_tensor, write_tensor

TENSOR_SUFFIX = ".rt4d"


class PreprocessAgent(BaseAgent):
    """预处理代理，把目录中的 4D 张量逐帧转换为模型输入张量"""

    def __init__(self, name: str = "PreprocessAgent", config: Optional[Dict[str, Any]] = None):
        super().__init__(name, config)
        self.run_config: RunConfig = self.config.get("run_config") or RunConfig()

    def _validate_impl(self, task: Dict[str, Any]) -> bool:
        self.require(task, "input_dir", "output_dir")
        if not os.path.isdir(task["input_dir"]):
            raise ValueError(f"输入目录不存在：{task['input_dir']}")
        InputVariant(task.get("variant", self.run_config.variant))
        return True

    def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """执行预处理任务

        单个文件损坏不会中断整批处理，其余帧照常写出。

        Args:
            task: 包含以下字段的字典：
                - input_dir: 4D 张量目录（*.rt4d）
                - output_dir: 输出目录
                - variant: 5ch / 66ch，缺省取配置

        Returns:
            Dict[str, Any]: written（已写出的文件）与 errors（(路径, 错误) 列表）
        """
        variant = InputVariant(task.get("variant", self.run_config.variant))
        output_dir = task["output_dir"]
        os.makedirs(output_dir, exist_ok=True)

        names = sorted(n for n in os.listdir(task["input_dir"]) if n.endswith(TENSOR_SUFFIX))
        self.logger.info(f"开始预处理 {len(names)} 帧 ({variant.value})")

        jobs = [(os.path.join(task["input_dir"], n), os.path.join(output_dir, n)) for n in names]
        outcomes = ordered_map(
            lambda job: self._process_one(job, variant),
            jobs,
            threads=self.run_config.threads,
            desc="preprocess",
            progress=self.run_config.progress,
        )

        written = [out for out, error in outcomes if error is None]
        errors = [(src, error) for (src, _), (_, error) in zip(jobs, outcomes) if error is not None]
        for path, error in errors:
            self.logger.error(f"预处理失败 {path}: {error}")
        self.logger.info(f"预处理完成: {len(written)} 成功, {len(errors)} 失败")
        return {"written": written, "errors": errors}

    def _process_one(self, job: Tuple[str, str], variant: InputVariant) -> Tuple[str, Optional[str]]:
        src, dst = job
        grid = self.run_config.grid
        try:
            tensor, _ = read_tensor(src)
            if not isinstance(tensor, Tesseract):
                raise DimMismatch(f"expected a 4D tesseract, got {type(tensor).__name__}")
            tensor.validate(grid)
            write_tensor(preprocess_frame(tensor, grid, variant), dst, grid)
        except EvalToolkitError as e:
            return dst, str(e) if e.path else f"{src}: {e}"
        except OSError as e:
            return dst, f"{src}: {e}"
        return dst, None
