from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from agents.captioning.geometry import BearingSector


class ParseStatus(Enum):
    """解析状态"""
    OK = "ok"
    PARTIAL = "partial"
    UNPARSED = "unparsed"


@dataclass(frozen=True)
class PredObject:
    """从描述文本中解析出的单个物体

    sector 只来自自然语言描述，azimuth_deg 只来自结构化描述。
    """
    class_name: str
    range_m: Optional[float] = None
    azimuth_deg: Optional[float] = None
    sector: Optional[BearingSector] = None

    @property
    def has_spatial(self) -> bool:
        return self.range_m is not None or self.azimuth_deg is not None or self.sector is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class": self.class_name,
            "range_m": self.range_m,
            "azimuth_deg": self.azimuth_deg,
            "sector": self.sector.value if self.sector is not None else None,
        }


@dataclass(frozen=True)
class ParsedPrediction:
    """一条模型描述的解析结果"""
    frame_key: str
    objects: List[PredObject] = field(default_factory=list)
    status: ParseStatus = ParseStatus.UNPARSED
    raw_length: int = 0
    stated_count: Optional[int] = None
    oov_count: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frame_key": self.frame_key,
            "status": self.status.value,
            "raw_length": self.raw_length,
            "stated_count": self.stated_count,
            "oov_count": self.oov_count,
            "objects": [obj.to_dict() for obj in self.objects],
        }


def finish(frame_key: str, objects: List[PredObject], raw_length: int, degraded: bool,
           stated_count: Optional[int] = None, oov_count: int = 0) -> ParsedPrediction:
    """按对象完整性确定状态：每个对象都带空间字段且未降级时为 Ok"""
    if degraded or any(not obj.has_spatial for obj in objects):
        status = ParseStatus.PARTIAL
    else:
        status = ParseStatus.OK
    return ParsedPrediction(frame_key, objects, status, raw_length, stated_count, oov_count)


def unparsed(frame_key: str, raw_length: int, stated_count: Optional[int] = None,
             oov_count: int = 0) -> ParsedPrediction:
    return ParsedPrediction(frame_key, [], ParseStatus.UNPARSED, raw_length, stated_count, oov_count)
