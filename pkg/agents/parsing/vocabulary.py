import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from data.text_io import iter_lines
from utils.errors import MalformedRecord

logger = logging.getLogger(__name__)

DEFAULT_CLASSES: Tuple[str, ...] = (
    "sedan",
    "bus or truck",
    "motorcycle",
    "bicycle",
    "pedestrian",
    "pedestrian group",
    "bicycle group",
)

DEFAULT_SYNONYMS: Dict[str, str] = {
    "car": "sedan",
    "automobile": "sedan",
    "bus": "bus or truck",
    "buses": "bus or truck",
    "truck": "bus or truck",
    "lorry": "bus or truck",
    "bus/truck": "bus or truck",
    "motorbike": "motorcycle",
    "bike": "bicycle",
    "cyclist": "bicycle",
    "person": "pedestrian",
    "group of pedestrians": "pedestrian group",
    "crowd": "pedestrian group",
    "group of bicycles": "bicycle group",
    "group of cyclists": "bicycle group",
}

_ARTICLE = re.compile(r"^(?:a|an|the)\s+")
_SPACES = re.compile(r"\s+")


def _fold(surface: str) -> str:
    text = _SPACES.sub(" ", str(surface).strip().lower())
    return _ARTICLE.sub("", text)


@dataclass(frozen=True)
class ClassVocabulary:
    """规范类别表与同义词映射

    canonical 的顺序即报告中按类别分表的顺序；同义词表对规范名闭合（每个规范名映射到自身）。
    """
    canonical: Tuple[str, ...] = DEFAULT_CLASSES
    synonyms: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SYNONYMS))

    def __post_init__(self):
        table = {name: name for name in self.canonical}
        for surface, target in self.synonyms.items():
            if target not in table:
                raise ValueError(f"synonym {surface!r} maps to unknown class {target!r}")
            table[_fold(surface)] = target
        object.__setattr__(self, "_table", table)

    def __contains__(self, name: str) -> bool:
        return name in self.canonical

    def normalize_class(self, surface: str) -> Optional[str]:
        """把表面形式规范化为类别名，None 表示词表外类别"""
        text = _fold(surface)
        if not text:
            return None
        hit = self._table.get(text)
        if hit is None and text.endswith("s"):
            hit = self._table.get(text[:-1])
        return hit

    def surface_forms(self) -> List[str]:
        """全部可识别的表面形式（含复数），按长度降序，供文本扫描使用"""
        forms = set()
        for surface in self._table:
            forms.add(surface)
            forms.add(surface + "s")
        return sorted(forms, key=lambda s: (-len(s), s))

    def class_order(self, name: str) -> int:
        try:
            return self.canonical.index(name)
        except ValueError:
            return len(self.canonical)


def normalize_class(surface: str, vocabulary: Optional[ClassVocabulary] = None) -> Optional[str]:
    """
    类别名规范化：大小写不敏感，去掉冠词和复数 s，再查同义词表

    Args:
        surface: 文本中的类别写法
        vocabulary: 类别词表，缺省为 7 类默认词表

    Returns:
        规范类别名；词表外类别返回 None
    """
    return (vocabulary or DEFAULT_VOCABULARY).normalize_class(surface)


def load_vocabulary(path: str) -> ClassVocabulary:
    """
    加载词表文件：每行 `canonical|synonym|synonym...`，`#` 开头为注释

    Raises:
        MalformedRecord: 规范名非小写、表面形式重复或行为空
    """
    canonical: List[str] = []
    synonyms: Dict[str, str] = {}
    seen: Dict[str, int] = {}
    for lineno, raw in iter_lines(path):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = [_SPACES.sub(" ", p.strip()) for p in text.split("|")]
        name = parts[0]
        if not name or name != name.lower():
            raise MalformedRecord(f"canonical class must be non-empty lowercase: {name!r}",
                                  path=path, line=lineno)
        for position, surface in enumerate(parts):
            key = _fold(surface)
            if not key:
                continue
            if key in seen:
                raise MalformedRecord(f"surface form {surface!r} already defined on line {seen[key]}",
                                      path=path, line=lineno)
            seen[key] = lineno
            if position > 0:
                synonyms[key] = name
        canonical.append(name)
    if not canonical:
        raise MalformedRecord("vocabulary defines no classes", path=path)
    logger.info(f"Loaded vocabulary {path}: {len(canonical)} classes")
    return ClassVocabulary(tuple(canonical), synonyms)


DEFAULT_VOCABULARY = ClassVocabulary()
