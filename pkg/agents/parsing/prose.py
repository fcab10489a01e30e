import math
import re
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from config.config import MAX_OBJECTS, MAX_SCAN_CHARS
from agents.captioning.geometry import SECTOR_PHRASES, BearingSector
from .prediction import ParsedPrediction, PredObject, finish, unparsed
from .vocabulary import DEFAULT_VOCABULARY, ClassVocabulary

_PHRASE_TO_SECTOR: Dict[str, BearingSector] = {phrase: sector for sector, phrase in SECTOR_PHRASES.items()}


def _words(phrase: str) -> str:
    return r"\s+".join(re.escape(word) for word in phrase.split())


@lru_cache(maxsize=16)
def _scanner(forms: Tuple[str, ...]) -> "re.Pattern":
    """按词表表面形式构造单遍扫描的主正则，各备选项均按长度降序"""
    phrases = sorted(_PHRASE_TO_SECTOR, key=len, reverse=True)
    return re.compile(
        r"(?P<count>\bthere\s+(?:are|is)\s+(?P<n>\d{1,9}|no)\s+objects?\b)"
        r"|(?<![a-z0-9])(?P<cls>" + "|".join(_words(f) for f in forms) + r")(?![a-z0-9])"
        r"|\bat\s+(?P<range>\d{1,9}(?:\.\d{1,9})?)\s*(?:m|meters?|metres?)(?![a-z])"
        r"|\b(?P<bearing>" + "|".join(_words(p) for p in phrases) + r")\b"
        r"|(?P<delim>[,;!?\n]|\.(?!\d))",
        re.IGNORECASE | re.ASCII,
    )


class _ProseState:
    """扫描状态：已打开的对象、当前子句中的对象与悬空的方位短语"""

    def __init__(self):
        self.objects: List[Dict] = []
        self.clause_obj: Optional[int] = None
        self.pending_sector: Optional[BearingSector] = None
        self.clause_orphan = False
        self.oov_count = 0

    def open(self, name: str) -> None:
        self.objects.append({"class": name, "range": None, "sector": self.pending_sector})
        self.pending_sector = None
        self.clause_obj = len(self.objects) - 1

    def bearing(self, sector: BearingSector) -> None:
        if self.clause_obj is not None:
            current = self.objects[self.clause_obj]
            if current["sector"] is None:
                current["sector"] = sector
            else:
                self.clause_orphan = True
        elif self.pending_sector is None:
            self.pending_sector = sector
        else:
            self.clause_orphan = True

    def range(self, value: float) -> None:
        if self.objects and self.objects[-1]["range"] is None and (
                self.clause_obj is not None or self.pending_sector is None):
            self.objects[-1]["range"] = value
        else:
            self.clause_orphan = True

    def end_clause(self) -> None:
        # 子句内有空间描述却没有可识别类别，记为一次词表外提及
        if self.pending_sector is not None:
            self.clause_orphan = True
        if self.clause_orphan:
            self.oov_count += 1
        self.clause_obj = None
        self.pending_sector = None
        self.clause_orphan = False


def parse_prose(text: str, vocabulary: Optional[ClassVocabulary] = None, frame_key: str = "",
                max_scan_chars: int = MAX_SCAN_CHARS,
                max_objects: int = MAX_OBJECTS) -> ParsedPrediction:
    """
    容错解析自然语言描述

    从左到右扫描：类别提及打开新对象；其后最近的 `at <数字> m` 作为距离；
    同一子句内的方位短语作为扇区。开头的数量句只记录到 stated_count。

    Args:
        text: 模型输出
        vocabulary: 类别词表
        frame_key: 帧键
        max_scan_chars: 最多扫描的字符数
        max_objects: 最多保留的对象数

    Returns:
        ParsedPrediction: 既无类别也无数量句时为 Unparsed
    """
    vocabulary = vocabulary or DEFAULT_VOCABULARY
    raw_length = len(text)
    degraded = raw_length > max_scan_chars
    pattern = _scanner(tuple(vocabulary.surface_forms()))

    state = _ProseState()
    stated_count: Optional[int] = None
    saw_count = False
    for match in pattern.finditer(text, 0, max_scan_chars):
        kind = match.lastgroup
        if kind == "count":
            if not saw_count and not state.objects:
                n = match.group("n").lower()
                stated_count = 0 if n == "no" else int(n)
                saw_count = True
        elif kind == "cls":
            if len(state.objects) >= max_objects:
                degraded = True
                break
            name = vocabulary.normalize_class(match.group("cls"))
            if name is not None:
                state.open(name)
        elif kind == "range":
            value = float(match.group("range"))
            if math.isfinite(value):
                state.range(value)
        elif kind == "bearing":
            phrase = " ".join(match.group("bearing").lower().split())
            state.bearing(_PHRASE_TO_SECTOR[phrase])
        else:
            state.end_clause()
    state.end_clause()

    if not state.objects and not saw_count:
        return unparsed(frame_key, raw_length, oov_count=state.oov_count)
    objects = [PredObject(o["class"], range_m=o["range"], sector=o["sector"]) for o in state.objects]
    return finish(frame_key, objects, raw_length, degraded, stated_count, state.oov_count)
