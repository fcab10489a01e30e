from typing import Any, Dict, List, Optional

from config.config import RunConfig
from data.captions import CaptionRecord, write_captions
from data.labels import read_labels
from data.manifest import check_frames_resolve, frame_sort_key, load_manifest
from agents.parsing.vocabulary import DEFAULT_VOCABULARY, load_vocabulary
from ..base import BaseAgent
from .generators import CaptionFormat, generate
from .geometry import frame_scene


class CaptionAgent(BaseAgent):
    """描述生成代理，把 3D 标注转换为真值描述"""

    def __init__(self, name: str = "CaptionAgent", config: Optional[Dict[str, Any]] = None):
        super().__init__(name, config)
        self.run_config: RunConfig = self.config.get("run_config") or RunConfig()
        self.vocabulary = (
            load_vocabulary(self.run_config.vocabulary_path)
            if self.run_config.vocabulary_path else DEFAULT_VOCABULARY
        )

    def _validate_impl(self, task: Dict[str, Any]) -> bool:
        self.require(task, "labels", "output")
        fmt = task.get("format", self.run_config.caption_format)
        if fmt not in ("prose", "structured", "both"):
            raise ValueError(f"不支持的描述格式：{fmt}")
        return True

    def formats(self, fmt: str) -> List[CaptionFormat]:
        return list(CaptionFormat) if fmt == "both" else [CaptionFormat(fmt)]

    def execute(self, task: Dict[str, Any]) -> Dict[str, Any]:
        """执行真值描述生成任务

        Args:
            task: 包含以下字段的字典：
                - labels: 标注文件路径
                - output: 描述文件输出路径
                - manifest: 清单路径（可选），给定时校验每帧都属于清单
                - format: prose / structured / both，缺省取配置

        Returns:
            Dict[str, Any]: records（写出的描述）与 oov_labels（被剔除的词表外标注数）
        """
        cfg = self.run_config
        labels = read_labels(task["labels"])
        manifest_path = task.get("manifest") or cfg.manifest_path
        if manifest_path:
            check_frames_resolve(load_manifest(manifest_path, cfg.strict_manifest), labels)

        formats = self.formats(task.get("format", cfg.caption_format))
        records: List[CaptionRecord] = []
        oov_labels = 0
        for key in sorted(labels, key=frame_sort_key):
            scene = frame_scene(labels[key], cfg.top_k, cfg.fov_az_deg, cfg.fov_range_m, self.vocabulary)
            oov_labels += scene.oov_count
            for fmt in formats:
                caption = generate(fmt, scene.objects, scene.total_count, key,
                                   cfg.sector_edges_deg, cfg.fov_az_deg)
                records.append(CaptionRecord(key, fmt, caption.text))

        if oov_labels:
            self.logger.warning(f"{oov_labels} 个标注的类别不在词表中，已剔除")
        write_captions(task["output"], records)
        self.logger.info(f"真值描述生成完成: {len(labels)} 帧, {len(records)} 条")
        return {"records": records, "oov_labels": oov_labels}
