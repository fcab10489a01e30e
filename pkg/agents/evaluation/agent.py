from typing import Any, Dict, List, Optional

from config.config import RunConfig
from data.captions import captions_by_key, read_captions, read_predictions
from data.manifest import check_frames_resolve, frame_sort_key, load_manifest
from agents.captioning.generators import CaptionFormat
from agents.parsing.agent import ParseAgent
from agents.parsing.prediction import ParsedPrediction, ParseStatus
from utils.errors import KeyMismatch, MalformedRecord
from utils.workers import ordered_map
from ..base import BaseAgent
from .metrics import FrameEval, aggregate, match_frame, per_class_metrics, stratify


def _check_keys(pred_keys, gt_keys, what: str) -> None:
    missing = sorted(set(gt_keys) - set(pred_keys), key=frame_sort_key)
    extra = sorted(set(pred_keys) - set(gt_keys), key=frame_sort_key)
    if missing or extra:
        raise KeyMismatch(
            f"{what}: {len(missing)} frames without prediction {missing[:5]}, "
            f"{len(extra)} predictions without ground truth {extra[:5]}")


class EvaluationAgent(BaseAgent):
    """评估代理，把预测描述与真值描述逐帧匹配并汇总指标"""

    def __init__(self, name: str = "EvaluationAgent", config: Optional[Dict[str, Any]] = None):
        super().__init__(name, config)
        self.run_config: RunConfig = self.config.get("run_config") or RunConfig()
        self.parser = ParseAgent(config={"run_config": self.run_config})

    def _validate_impl(self, task: Dict[str, Any]) -> bool:
        self.require(task, "gt")
        if not task.get("pred") and not task.get("pred_parsed"):
            raise ValueError("缺少必要字段：pred 或 pred_parsed")
        # 解析结果文件不记录描述格式，只能对应单一格式
        if task.get("pred_parsed") and self.run_config.caption_format == "both":
            raise ValueError("pred_parsed 需要指定单一描述格式（prose 或 structured）")
        return True

    def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """执行评估任务

        Args:
            task: 包含以下字段的字典：
                - gt: 真值描述文件
                - pred: 模型输出描述文件（与 pred_parsed 二选一）
                - pred_parsed: 已解析的预测文件
                - manifest: 清单路径（可选），给定时输出分层结果

        Returns:
            Dict[str, Any]: 以描述格式为键的结果，每项含 overall、per_class、strata 与 evals
        """
        cfg = self.run_config
        gt_records = read_captions(task["gt"])
        if task.get("pred_parsed"):
            parsed = {}
            for p in read_predictions(task["pred_parsed"]):
                if p.frame_key in parsed:
                    raise MalformedRecord(f"duplicate prediction for {p.frame_key}", path=task["pred_parsed"])
                parsed[p.frame_key] = p
            pred_records = None
        else:
            parsed = None
            pred_records = read_captions(task["pred"])

        manifest_path = task.get("manifest") or cfg.manifest_path
        manifest = load_manifest(manifest_path, cfg.strict_manifest) if manifest_path else None

        formats = list(CaptionFormat) if cfg.caption_format == "both" else [CaptionFormat(cfg.caption_format)]
        results: Dict[str, Any] = {}
        for fmt in formats:
            gt_by_key = captions_by_key(gt_records, fmt)
            if not gt_by_key:
                self.logger.warning(f"真值文件中没有 {fmt.value} 描述，跳过")
                continue
            keys = sorted(gt_by_key, key=frame_sort_key)
            if pred_records is not None:
                pred_by_key = captions_by_key(pred_records, fmt)
                _check_keys(pred_by_key, keys, fmt.value)
                predictions = self.parser.parse_records([pred_by_key[k] for k in keys])
            else:
                _check_keys(parsed, keys, fmt.value)
                predictions = [parsed[k] for k in keys]
            gts = self.parser.parse_records([gt_by_key[k] for k in keys])
            self._warn_gt(gts)

            if manifest is not None:
                check_frames_resolve(manifest, keys)
            evals = self.evaluate(predictions, gts)
            results[fmt.value] = self._summarise(evals, manifest)
            overall = results[fmt.value]["overall"]
            self.logger.info(
                f"{fmt.value}: {len(evals)} 帧, F1={overall.f1:.3f}, "
                f"P={overall.precision:.3f}, R={overall.recall:.3f}")
        return results

    def evaluate(self, predictions: List[ParsedPrediction], gts: List[ParsedPrediction]) -> List[FrameEval]:
        """逐帧匹配，gts 为同序的真值解析结果"""
        cfg = self.run_config
        return ordered_map(
            lambda pair: match_frame(pair[0], pair[1].objects, cfg.oov_mode, pair[1].stated_count),
            list(zip(predictions, gts)),
            threads=cfg.threads,
            desc="match",
            progress=cfg.progress,
        )

    def _summarise(self, evals: List[FrameEval], manifest) -> Dict[str, Any]:
        cfg = self.run_config
        strata = {}
        if manifest is not None:
            strata = {key: stratify(evals, manifest, key, cfg.class_level) for key in cfg.stratify_keys}
        return {
            "overall": aggregate(evals, cfg.class_level),
            "per_class": per_class_metrics(evals, self.parser.vocabulary),
            "strata": strata,
            "evals": evals,
        }

    def _warn_gt(self, gts: List[ParsedPrediction]) -> None:
        bad = [g.frame_key for g in gts if g.status is not ParseStatus.OK]
        if bad:
            self.logger.warning(f"{len(bad)} 条真值描述未能完整解析，例如 {bad[:5]}")
