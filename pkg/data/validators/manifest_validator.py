import logging
from typing import Dict, List, Optional, Tuple


class ManifestValidator:
    """清单验证器，负责检查序列记录与划分总数"""

    def __init__(self, config: Optional[Dict] = None):
        self.config = config or {}
        self.logger = logging.getLogger(self.__class__.__name__)

    def validate(self, manifest) -> bool:
        """
        验证整份清单

        Args:
            manifest: 待验证的清单

        Returns:
            验证是否通过
        """
        try:
            # 检查完整性
            if not self._check_completeness(manifest):
                self.logger.error("Manifest completeness check failed")
                return False

            # 检查一致性
            if not self._check_consistency(manifest):
                self.logger.error("Manifest consistency check failed")
                return False

            # 检查有效性
            for seq in manifest.sequences:
                problems = self.check_sequence(seq)
                if problems:
                    self.logger.error(f"Sequence {seq.seq_id} invalid: {'; '.join(problems)}")
                    return False

            return True

        except Exception as e:
            self.logger.error(f"Validation error: {str(e)}")
            return False

    def _check_completeness(self, manifest) -> bool:
        """清单需带 schema 版本，且每条记录字段齐全"""
        if manifest.schema_version is None:
            return False
        required_fields = ["seq_id", "frame_count", "object_count", "weather",
                           "road", "time_of_day", "split", "zero_shot_weather"]
        return all(
            all(getattr(seq, name, None) is not None for name in required_fields)
            for seq in manifest.sequences
        )

    def _check_consistency(self, manifest) -> bool:
        """序列号唯一，声明的划分总数与逐序列求和一致"""
        ids = [seq.seq_id for seq in manifest.sequences]
        if len(ids) != len(set(ids)):
            return False
        return not self.check_totals(manifest)

    def check_sequence(self, seq) -> List[str]:
        """
        检查单条序列记录的取值

        Args:
            seq: SequenceMeta

        Returns:
            问题描述列表，为空表示通过
        """
        problems = []
        if seq.seq_id < 0:
            problems.append(f"seq_id must be non-negative, got {seq.seq_id}")
        if seq.frame_count <= 0:
            problems.append(f"frame_count must be > 0, got {seq.frame_count}")
        if seq.object_count < 0:
            problems.append(f"object_count must be >= 0, got {seq.object_count}")
        if not seq.road:
            problems.append("road must not be empty")
        return problems

    def check_totals(self, manifest) -> List[Tuple]:
        """
        比较声明的划分总帧数与逐序列帧数之和

        Returns:
            (划分, 声明值, 实际值) 列表，仅包含不一致的划分
        """
        actual = manifest.split_totals()
        return [
            (split, declared, actual[split])
            for split, declared in manifest.declared_totals.items()
            if declared != actual[split]
        ]
