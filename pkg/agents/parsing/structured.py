import json
import math
import re
from typing import Any, List, Optional, Tuple

from config.config import MAX_OBJECTS, MAX_SCAN_CHARS
from .prediction import ParsedPrediction, PredObject, finish, unparsed
from .vocabulary import DEFAULT_VOCABULARY, ClassVocabulary

# 字符串字面量（未闭合时延伸到文本末尾）或花括号，保证线性扫描
_STRING = r'"(?:[^"\\]|\\.)*(?:"|\\?\Z)'
_BRACE_TOKENS = re.compile(_STRING + r"|[{}]", re.S)
_TRAILING_COMMA = re.compile(r"(" + _STRING + r")|,\s*([}\]])", re.S)
_OBJECTS_ARRAY = re.compile(r'"objects"\s*:\s*\[')
_WHITESPACE = re.compile(r"\s*")

AZIMUTH_KEYS = ("azimuth_deg", "azimuth", "az")
RANGE_KEYS = ("range_m", "range", "distance")

_decoder = json.JSONDecoder()


def balanced_region(text: str, start: int) -> Optional[int]:
    """返回从 start 处 '{' 开始的配平区域的结束位置（不含），未配平返回 None"""
    depth = 0
    for token in _BRACE_TOKENS.finditer(text, start):
        symbol = token.group()
        if symbol == "{":
            depth += 1
        elif symbol == "}":
            depth -= 1
            if depth == 0:
                return token.end()
    return None


def _strip_trailing_commas(region: str) -> str:
    return _TRAILING_COMMA.sub(lambda m: m.group(1) or m.group(2), region)


def _loads(region: str) -> Tuple[bool, Any]:
    for candidate in (region, _strip_trailing_commas(region)):
        try:
            return True, json.loads(candidate)
        except (ValueError, RecursionError):
            continue
    return False, None


def _recover_prefix(region: str) -> Optional[List[Any]]:
    """
    截断恢复：定位 "objects" 数组并逐个解码元素，遇到无法解码的元素即停止

    Returns:
        已解码的元素；找不到 objects 数组时返回 None
    """
    match = _OBJECTS_ARRAY.search(region)
    if match is None:
        return None
    items: List[Any] = []
    pos = match.end()
    while True:
        pos = _WHITESPACE.match(region, pos).end()
        if pos >= len(region):
            return items
        if region[pos] == "]":
            return items
        try:
            item, pos = _decoder.raw_decode(region, pos)
        except (ValueError, RecursionError):
            return items
        items.append(item)
        pos = _WHITESPACE.match(region, pos).end()
        if pos < len(region) and region[pos] == ",":
            pos += 1
        elif pos >= len(region) or region[pos] != "]":
            return items


def coerce_number(value: Any) -> Optional[float]:
    """接受整数、小数与数字字符串；布尔值与非有限值视为无效"""
    if isinstance(value, bool):
        return None
    if not isinstance(value, (int, float, str)):
        return None
    try:
        number = float(value.strip() if isinstance(value, str) else value)
    except (ValueError, OverflowError):
        return None
    return number if math.isfinite(number) else None


def _field(item: dict, keys: Tuple[str, ...]) -> Tuple[bool, Optional[float]]:
    for key in keys:
        if key in item:
            return True, coerce_number(item[key])
    return False, None


def parse_structured(text: str, vocabulary: Optional[ClassVocabulary] = None, frame_key: str = "",
                     max_scan_chars: int = MAX_SCAN_CHARS,
                     max_objects: int = MAX_OBJECTS) -> ParsedPrediction:
    """
    宽松解析结构化描述

    取第一个 '{' 起的配平区域，容忍前后文字、尾逗号、数字字符串与缺失字段；
    数组被截断时保留完整解析的前缀对象。任何输入都不会抛出异常。

    Args:
        text: 模型输出
        vocabulary: 类别词表
        frame_key: 帧键
        max_scan_chars: 区域起点之后最多检查的字符数
        max_objects: 最多保留的对象数

    Returns:
        ParsedPrediction: 无配平区域或缺少 objects 键时为 Unparsed
    """
    vocabulary = vocabulary or DEFAULT_VOCABULARY
    raw_length = len(text)
    start = text.find("{")
    if start < 0:
        return unparsed(frame_key, raw_length)

    window = text[start:start + max_scan_chars]
    end = balanced_region(window, 0)
    degraded = end is None and raw_length - start > max_scan_chars
    region = window[:end] if end is not None else window

    ok, data = _loads(region)
    if ok:
        if not isinstance(data, dict) or not isinstance(data.get("objects"), list):
            return unparsed(frame_key, raw_length)
        items = data["objects"]
    else:
        recovered = _recover_prefix(region)
        if recovered is None:
            return unparsed(frame_key, raw_length)
        items = recovered
        degraded = True

    if len(items) > max_objects:
        items = items[:max_objects]
        degraded = True

    objects: List[PredObject] = []
    oov_count = 0
    for item in items:
        if not isinstance(item, dict) or not isinstance(item.get("class"), str):
            degraded = True
            continue
        name = vocabulary.normalize_class(item["class"])
        if name is None:
            oov_count += 1
            continue
        has_az, azimuth = _field(item, AZIMUTH_KEYS)
        has_range, range_m = _field(item, RANGE_KEYS)
        if range_m is not None and range_m < 0:
            range_m = None
        if azimuth is not None and abs(azimuth) > 180:
            azimuth = None
        if not (has_az and has_range) or azimuth is None or range_m is None:
            degraded = True
        objects.append(PredObject(name, range_m=range_m, azimuth_deg=azimuth))

    return finish(frame_key, objects, raw_length, degraded, oov_count=oov_count)
