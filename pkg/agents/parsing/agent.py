from typing import Any, Dict, List, Optional

from config.config import RunConfig
from data.captions import CaptionRecord, read_captions, write_predictions
from agents.captioning.generators import CaptionFormat
from utils.workers import ordered_map
from ..base import BaseAgent
from .prediction import ParsedPrediction, ParseStatus
from .prose import parse_prose
from .structured import parse_structured
from .vocabulary import DEFAULT_VOCABULARY, ClassVocabulary, load_vocabulary


class ParseAgent(BaseAgent):
    """解析代理，把模型输出（或真值）描述解析为结构化预测"""

    def __init__(self, name: str = "ParseAgent", config: Optional[Dict[str, Any]] = None):
        super().__init__(name, config)
        self.run_config: RunConfig = self.config.get("run_config") or RunConfig()
        self.vocabulary: ClassVocabulary = (
            load_vocabulary(self.run_config.vocabulary_path)
            if self.run_config.vocabulary_path else DEFAULT_VOCABULARY
        )

    def _validate_impl(self, task: Dict[str, Any]) -> bool:
        self.require(task, "captions", "output")
        if task.get("format") is not None:
            CaptionFormat(task["format"])
        return True

    def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """执行解析任务

        Args:
            task: 包含以下字段的字典：
                - captions: 描述文件路径
                - output: 解析结果输出路径
                - format: 只解析该格式的记录，缺省解析全部

        Returns:
            Dict[str, Any]: predictions 与按状态的计数
        """
        records = read_captions(task["captions"])
        fmt = task.get("format")
        if fmt is not None:
            records = [r for r in records if r.format is CaptionFormat(fmt)]
        predictions = self.parse_records(records)
        write_predictions(task["output"], predictions)

        counts = {status.value: 0 for status in ParseStatus}
        for p in predictions:
            counts[p.status.value] += 1
        self.logger.info(f"解析完成 {len(predictions)} 条: {counts}")
        return {"predictions": predictions, "status_counts": counts}

    def parse_record(self, record: CaptionRecord) -> ParsedPrediction:
        """按记录自身的格式选择解析器"""
        cfg = self.run_config
        parser = parse_prose if record.format is CaptionFormat.PROSE else parse_structured
        return parser(record.text, self.vocabulary, record.frame_key,
                      max_scan_chars=cfg.max_scan_chars, max_objects=cfg.max_objects)

    def parse_records(self, records: List[CaptionRecord]) -> List[ParsedPrediction]:
        return ordered_map(self.parse_record, records, threads=self.run_config.threads,
                           desc="parse", progress=self.run_config.progress)
