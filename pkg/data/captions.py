import json
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

from agents.captioning.generators import CaptionFormat
from agents.captioning.geometry import BearingSector
from agents.parsing.prediction import ParsedPrediction, ParseStatus, PredObject
from utils.errors import MalformedRecord
from .manifest import parse_frame_key
from .text_io import iter_lines

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CaptionRecord:
    """描述文件中的一行：帧键、格式与描述文本"""
    frame_key: str
    format: CaptionFormat
    text: str


def read_captions(path: str) -> List[CaptionRecord]:
    """
    读取描述文件：每行 `frame_key<TAB>format<TAB>caption_text`

    模型输出使用同一格式；缺少文本列视为空描述。

    Raises:
        MalformedRecord: 帧键或格式无效，或同一帧同一格式重复
    """
    records: List[CaptionRecord] = []
    seen = set()
    for lineno, raw in iter_lines(path):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t", 2)
        if len(parts) < 2:
            raise MalformedRecord("expected frame_key<TAB>format<TAB>caption", path=path, line=lineno)
        key, fmt = parts[0], parts[1].strip()
        try:
            parse_frame_key(key)
        except MalformedRecord as e:
            raise MalformedRecord(e.message, path=path, line=lineno)
        try:
            caption_format = CaptionFormat(fmt.lower())
        except ValueError:
            raise MalformedRecord(f"unknown caption format {fmt!r}", path=path, line=lineno)
        if (key, caption_format) in seen:
            raise MalformedRecord(f"duplicate {caption_format.value} caption for {key}",
                                  path=path, line=lineno)
        seen.add((key, caption_format))
        records.append(CaptionRecord(key, caption_format, parts[2] if len(parts) == 3 else ""))
    logger.info(f"Loaded captions {path}: {len(records)} records")
    return records


def captions_by_key(records: Iterable[CaptionRecord],
                    fmt: Optional[CaptionFormat] = None) -> Dict[str, CaptionRecord]:
    """按帧键索引描述，fmt 给定时只保留该格式"""
    return {r.frame_key: r for r in records if fmt is None or r.format is fmt}


def write_captions(path: str, records: Iterable[CaptionRecord]) -> None:
    """
    写出描述文件

    Raises:
        MalformedRecord: 描述文本包含制表符或换行
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            if "\t" in r.text or "\n" in r.text or "\r" in r.text:
                raise MalformedRecord(f"caption for {r.frame_key} contains a tab or newline", path=path)
            f.write(f"{r.frame_key}\t{r.format.value}\t{r.text}\n")


def write_predictions(path: str, predictions: Iterable[ParsedPrediction]) -> None:
    """写出解析结果，每行一个 JSON 记录"""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for p in predictions:
            f.write(json.dumps(p.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n")


def _optional_number(obj: dict, key: str, path: str, line: int) -> Optional[float]:
    value = obj.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedRecord(f"{key} must be a number or null", path=path, line=line)
    return float(value)


def _parse_pred_object(obj, path: str, line: int) -> PredObject:
    if not isinstance(obj, dict) or not isinstance(obj.get("class"), str):
        raise MalformedRecord("object needs a string 'class'", path=path, line=line)
    sector = obj.get("sector")
    try:
        sector = BearingSector(sector) if sector is not None else None
    except ValueError:
        raise MalformedRecord(f"unknown sector {sector!r}", path=path, line=line)
    return PredObject(
        class_name=obj["class"],
        range_m=_optional_number(obj, "range_m", path, line),
        azimuth_deg=_optional_number(obj, "azimuth_deg", path, line),
        sector=sector,
    )


def read_predictions(path: str) -> List[ParsedPrediction]:
    """
    读取解析结果文件

    Raises:
        MalformedRecord: JSON 无效或字段缺失，附带文件与行号
    """
    predictions: List[ParsedPrediction] = []
    for lineno, raw in iter_lines(path):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
            key = record["frame_key"]
            status = ParseStatus(record["status"])
            objects = record.get("objects", [])
            stated = record.get("stated_count")
            stated = int(stated) if stated is not None else None
            raw_length = int(record.get("raw_length", 0))
            oov_count = int(record.get("oov_count", 0))
        except (ValueError, KeyError, TypeError) as e:
            raise MalformedRecord(f"invalid prediction record: {e}", path=path, line=lineno)
        if not isinstance(objects, list):
            raise MalformedRecord("objects must be an array", path=path, line=lineno)
        predictions.append(ParsedPrediction(
            frame_key=key,
            objects=[_parse_pred_object(o, path, lineno) for o in objects],
            status=status,
            raw_length=raw_length,
            stated_count=stated,
            oov_count=oov_count,
        ))
    return predictions
