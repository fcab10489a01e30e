from typing import Any, Dict, Optional

from config.config import RunConfig
from data.captions import read_captions
from agents.preprocess.radar import read_tensor
from utils.errors import DimMismatch
from ..base import BaseAgent
from .norms import TokenMatrix, layer_norm, norm_mismatch_check
from .swap_test import swap_test

DIAGNOSTICS = ("norms", "swap")


def _read_tokens(path: str) -> TokenMatrix:
    tensor, _ = read_tensor(path)
    if not isinstance(tensor, TokenMatrix):
        raise DimMismatch("embedding dump must be a 2D token matrix", path=path)
    return tensor


class DiagnosticsAgent(BaseAgent):
    """诊断代理：投影 token 范数失配检查与输入替换（swap）测试"""

    def __init__(self, name: str = "DiagnosticsAgent", config: Optional[Dict[str, Any]] = None):
        super().__init__(name, config)
        self.run_config: RunConfig = self.config.get("run_config") or RunConfig()

    def _validate_impl(self, task: Dict[str, Any]) -> bool:
        self.require(task, "kind")
        if task["kind"] not in DIAGNOSTICS:
            raise ValueError(f"不支持的诊断类型：{task['kind']}")
        if task["kind"] == "norms":
            self.require(task, "tokens", "reference")
        else:
            self.require(task, "real", "zeros", "noise")
        return True

    def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """执行诊断任务

        Args:
            task: 包含以下字段的字典：
                - kind: norms 或 swap
                - tokens / reference: 投影 token 与参考嵌入的 RT4D 文件（norms）
                - real / zeros / noise: 三种输入下的描述文件（swap）

        Returns:
            Dict[str, Any]: norms 返回 raw 与 after_layer_norm 两份 NormReport；
            swap 返回 blindness（BlindnessReport）
        """
        if task["kind"] == "norms":
            return self._norms(task["tokens"], task["reference"])
        return self._swap(task["real"], task["zeros"], task["noise"])

    def _norms(self, tokens_path: str, reference_path: str) -> Dict[str, Any]:
        cfg = self.run_config
        tokens = _read_tokens(tokens_path)
        reference = _read_tokens(reference_path)
        raw = norm_mismatch_check(tokens, reference, cfg.norm_threshold)
        self.logger.info(
            f"token 平均范数 {raw.mean_l2:.4f}，参考 {raw.reference_mean_l2:.4f}，比值 {raw.ratio:.3f}")

        after = None
        if tokens.data.shape[1] >= 2:
            after = norm_mismatch_check(layer_norm(tokens, cfg.layer_norm_eps), reference, cfg.norm_threshold)
            self.logger.info(f"LayerNorm 之后比值 {after.ratio:.3f}")
        else:
            self.logger.warning("d < 2，跳过 LayerNorm 对照")
        return {"raw": raw, "after_layer_norm": after}

    def _swap(self, real: str, zeros: str, noise: str) -> Dict[str, Any]:
        report = swap_test(read_captions(real), read_captions(zeros), read_captions(noise),
                           self.run_config.identical_threshold)
        self.logger.info(
            f"swap 测试 {report.frame_count} 条描述：全零输入相同 {report.identical_fraction_zero:.3f}，"
            f"噪声输入相同 {report.identical_fraction_noise:.3f}")
        return {"blindness": report}
