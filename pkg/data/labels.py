import json
import logging
import math
from typing import Dict, List, Mapping, Sequence

from agents.captioning.geometry import Box3D
from utils.errors import MalformedRecord
from .manifest import parse_frame_key
from .text_io import iter_lines

logger = logging.getLogger(__name__)

BOX_FIELDS = ("x", "y", "z", "l", "w", "h")


def _number(record: Mapping, key: str, path: str, line: int) -> float:
    value = record.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedRecord(f"field {key!r} must be a number, got {value!r}", path=path, line=line)
    value = float(value)
    if not math.isfinite(value):
        raise MalformedRecord(f"field {key!r} must be finite", path=path, line=line)
    return value


def _parse_box(record, path: str, line: int) -> Box3D:
    if not isinstance(record, dict):
        raise MalformedRecord(f"box must be an object, got {type(record).__name__}", path=path, line=line)
    label = record.get("class")
    if not isinstance(label, str):
        raise MalformedRecord("box is missing a string 'class'", path=path, line=line)
    values = {key: _number(record, key, path, line) for key in BOX_FIELDS}
    yaw = _number(record, "yaw", path, line) if "yaw" in record else 0.0
    box = Box3D(label, yaw=yaw, **values)
    problems = box.problems()
    if problems:
        raise MalformedRecord("; ".join(problems), path=path, line=line)
    return box


def read_labels(path: str) -> Dict[str, List[Box3D]]:
    """
    读取标注文件：每行 `frame_key<TAB>[{"class":...,"x":...,...}, ...]`

    Returns:
        帧键 → 标注框列表，保持文件顺序

    Raises:
        MalformedRecord: 行格式、帧键或标注框字段无效，附带文件与行号
    """
    frames: Dict[str, List[Box3D]] = {}
    for lineno, raw in iter_lines(path):
        text = raw.rstrip("\r\n")
        if not text.strip():
            continue
        key, sep, body = text.partition("\t")
        if not sep:
            raise MalformedRecord("expected frame_key<TAB>boxes", path=path, line=lineno)
        try:
            parse_frame_key(key)
        except MalformedRecord as e:
            raise MalformedRecord(e.message, path=path, line=lineno)
        if key in frames:
            raise MalformedRecord(f"duplicate frame {key}", path=path, line=lineno)
        try:
            records = json.loads(body)
        except ValueError as e:
            raise MalformedRecord(f"invalid box list: {e}", path=path, line=lineno)
        if not isinstance(records, list):
            raise MalformedRecord("box list must be an array", path=path, line=lineno)
        frames[key] = [_parse_box(r, path, lineno) for r in records]
    logger.info(f"Loaded labels {path}: {len(frames)} frames")
    return frames


def write_labels(path: str, frames: Mapping[str, Sequence[Box3D]]) -> None:
    """按给定顺序写出标注文件"""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for key, boxes in frames.items():
            payload = [
                {"class": b.class_label, "x": b.x, "y": b.y, "z": b.z,
                 "l": b.l, "w": b.w, "h": b.h, "yaw": b.yaw}
                for b in boxes
            ]
            f.write(f"{key}\t{json.dumps(payload, separators=(',', ':'))}\n")
