import logging
from typing import Any, Dict, Optional

from config.config import RunConfig
from data.manifest import Manifest, load_manifest
from data.validators import ManifestValidator
from agents.preprocess import PreprocessAgent
from agents.captioning.agent import CaptionAgent
from agents.parsing.agent import ParseAgent
from agents.evaluation.agent import EvaluationAgent
from agents.diagnostics.agent import DiagnosticsAgent


class Orchestrator:
    """协调器，按一次运行的配置组装各阶段代理"""

    def __init__(self, run_config: Optional[RunConfig] = None):
        """初始化协调器

        Args:
            run_config: 有效运行配置，缺省使用默认值
        """
        self.logger = logging.getLogger(__name__)
        self.run_config = run_config or RunConfig()
        shared = {"run_config": self.run_config}

        # 初始化各个代理
        self.preprocess_agent = PreprocessAgent(config=shared)
        self.caption_agent = CaptionAgent(config=shared)
        self.parse_agent = ParseAgent(config=shared)
        self.evaluation_agent = EvaluationAgent(config=shared)
        self.diagnostics_agent = DiagnosticsAgent(config=shared)

        self.logger.info(f"协调器初始化完成 (config {self.run_config.config_hash()[:12]})")

    def preprocess(self, input_dir: str, output_dir: str, variant: Optional[str] = None) -> Dict[str, Any]:
        """把张量目录预处理为模型输入"""
        task = {"input_dir": input_dir, "output_dir": output_dir}
        if variant:
            task["variant"] = variant
        return self.preprocess_agent.run(task)

    def generate_gt(self, labels: str, output: str, manifest: Optional[str] = None,
                    caption_format: Optional[str] = None) -> Dict[str, Any]:
        """由标注生成真值描述文件"""
        task = {"labels": labels, "output": output, "manifest": manifest}
        if caption_format:
            task["format"] = caption_format
        return self.caption_agent.run(task)

    def parse(self, captions: str, output: str, caption_format: Optional[str] = None) -> Dict[str, Any]:
        """解析描述文件并写出结构化预测"""
        return self.parse_agent.run({"captions": captions, "output": output, "format": caption_format})

    def evaluate(self, gt: str, pred: Optional[str] = None, pred_parsed: Optional[str] = None,
                 manifest: Optional[str] = None) -> Dict[str, Any]:
        """评估预测描述

        Args:
            gt: 真值描述文件
            pred: 模型输出描述文件
            pred_parsed: 已解析的预测文件（与 pred 二选一）
            manifest: 清单路径，给定时输出分层结果

        Returns:
            Dict[str, Any]: 以描述格式为键的评估结果
        """
        try:
            self.logger.info("开始评估...")
            results = self.evaluation_agent.run(
                {"gt": gt, "pred": pred, "pred_parsed": pred_parsed, "manifest": manifest})
            self.logger.info(f"评估完成: {', '.join(results) or '无结果'}")
            return results
        except Exception as e:
            self.logger.error(f"评估失败: {str(e)}")
            raise

    def diagnose_norms(self, tokens: str, reference: str) -> Dict[str, Any]:
        """token 范数失配诊断（含 LayerNorm 之后的对照）"""
        return self.diagnostics_agent.run({"kind": "norms", "tokens": tokens, "reference": reference})

    def swap_test(self, real: str, zeros: str, noise: str) -> Dict[str, Any]:
        """输入替换测试"""
        return self.diagnostics_agent.run({"kind": "swap", "real": real, "zeros": zeros, "noise": noise})

    def validate_manifest(self, path: str) -> Manifest:
        """加载清单并做完整校验

        Raises:
            MalformedManifest: 清单未通过一致性检查（strict 模式）
        """
        manifest = load_manifest(path, self.run_config.strict_manifest)
        if not ManifestValidator().validate(manifest):
            self.logger.warning(f"{path}: 清单一致性检查未通过")
        return manifest

    def cleanup(self):
        """清理资源"""
        self.logger.info("清理协调器资源...")

        # 清理各个代理的资源
        for agent in (self.preprocess_agent, self.caption_agent, self.parse_agent,
                      self.evaluation_agent, self.diagnostics_agent):
            if agent.state.finished:
                self.logger.debug(f"{agent.name} 结束状态: {agent.state.value}")
            agent.cleanup()

        self.logger.info("协调器资源清理完成")
