import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple, Type, TypeVar, Union

from utils.errors import (
    DuplicateSequence,
    MalformedManifest,
    MalformedRecord,
    SplitTotalMismatch,
    UnknownEnumValue,
    UnknownSequence,
)
from .validators.manifest_validator import ManifestValidator

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FIELD_COUNT = 8


class Weather(Enum):
    """天气标签，定义顺序即报告中的分组顺序"""
    NORMAL = "normal"
    RAIN = "rain"
    SLEET = "sleet"
    FOG = "fog"
    LIGHT_SNOW = "light_snow"
    HEAVY_SNOW = "heavy_snow"

    @property
    def label(self) -> str:
        return "".join(part.capitalize() for part in self.value.split("_"))


class TimeOfDay(Enum):
    """采集时段"""
    DAY = "day"
    NIGHT = "night"

    @property
    def label(self) -> str:
        return self.value.capitalize()


class Split(Enum):
    """序列级数据划分"""
    TRAIN = "train"
    VAL = "val"
    TEST = "test"

    @property
    def label(self) -> str:
        return self.value.capitalize()


E = TypeVar("E", bound=Enum)


def parse_enum(enum_cls: Type[E], raw: Union[str, E], path: Optional[str] = None,
               line: Optional[int] = None) -> E:
    """大小写不敏感地解析枚举值，接受 light_snow / LightSnow / light snow 等写法

    Raises:
        UnknownEnumValue: 取值不在枚举中
    """
    if isinstance(raw, enum_cls):
        return raw
    key = str(raw).strip().lower().replace(" ", "").replace("-", "").replace("_", "")
    for member in enum_cls:
        if member.value.replace("_", "") == key:
            return member
    raise UnknownEnumValue(f"unknown {enum_cls.__name__} value: {raw!r}", path=path, line=line)


@dataclass(frozen=True)
class SequenceMeta:
    """单个序列的元数据"""
    seq_id: int
    frame_count: int
    object_count: int
    weather: Weather
    road: str
    time_of_day: TimeOfDay
    split: Split
    zero_shot_weather: bool

    def attribute(self, key: str):
        """按分层键取分组值"""
        if key not in ("weather", "time_of_day", "road", "split", "zero_shot_weather"):
            raise ValueError(f"unsupported stratify key: {key}")
        return getattr(self, key)


@dataclass(frozen=True)
class Manifest:
    """数据集清单，加载后不可变，可在并发读者之间共享"""
    sequences: Tuple[SequenceMeta, ...] = ()
    schema_version: int = SCHEMA_VERSION
    declared_totals: Dict[Split, int] = field(default_factory=dict)
    total_mismatches: Tuple[Tuple[Split, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_index", {s.seq_id: s for s in self.sequences})

    def __len__(self) -> int:
        return len(self.sequences)

    def get(self, seq_id: int) -> SequenceMeta:
        """按序列号取元数据

        Raises:
            UnknownSequence: 序列号不在清单中
        """
        try:
            return self._index[int(seq_id)]
        except (KeyError, ValueError, TypeError):
            raise UnknownSequence(f"sequence {seq_id!r} not in manifest")

    def __contains__(self, seq_id) -> bool:
        return seq_id in self._index

    def sequences_of_split(self, split: Union[str, Split]) -> List[SequenceMeta]:
        split = parse_enum(Split, split)
        return sorted((s for s in self.sequences if s.split is split), key=lambda s: s.seq_id)

    def split_totals(self) -> Dict[Split, int]:
        """按划分汇总帧数（由逐序列帧数求和得到）"""
        totals = {split: 0 for split in Split}
        for seq in self.sequences:
            totals[seq.split] += seq.frame_count
        return totals


def parse_frame_key(frame_key: str) -> Tuple[int, int]:
    """解析 `<seq>_<frame>` 形式的帧键

    Raises:
        MalformedRecord: 帧键格式错误
    """
    seq, sep, frame = str(frame_key).strip().partition("_")
    if not sep or not seq.isdigit() or not frame.isdigit():
        raise MalformedRecord(f"malformed frame key: {frame_key!r}")
    return int(seq), int(frame)


def format_frame_key(seq_id: int, frame_index: int) -> str:
    return f"{int(seq_id)}_{int(frame_index)}"


def frame_sort_key(frame_key: str) -> Tuple[int, int]:
    return parse_frame_key(frame_key)


def _parse_int(raw: str, name: str, path: str, line: int) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise MalformedManifest(f"{name} is not an integer: {raw!r}", path=path, line=line)


def _parse_record(parts: List[str], path: str, line: int) -> SequenceMeta:
    seq_id, frames, objects, weather, road, time, split, zero_shot = parts
    zero_shot = zero_shot.strip()
    if zero_shot not in ("0", "1"):
        raise UnknownEnumValue(f"zero_shot must be 0 or 1, got {zero_shot!r}", path=path, line=line)
    return SequenceMeta(
        seq_id=_parse_int(seq_id, "seq_id", path, line),
        frame_count=_parse_int(frames, "frame_count", path, line),
        object_count=_parse_int(objects, "object_count", path, line),
        weather=parse_enum(Weather, weather, path, line),
        road=road.strip(),
        time_of_day=parse_enum(TimeOfDay, time, path, line),
        split=parse_enum(Split, split, path, line),
        zero_shot_weather=zero_shot == "1",
    )


def _parse_pragma(body: str, path: str, line: int, declared: Dict[Split, int]) -> Optional[int]:
    """解析 `#@` 开头的指令行，返回 schema 版本（若该行声明了版本）"""
    parts = [p.strip() for p in body.split("|")]
    if parts[0] == "schema" and len(parts) == 2:
        return _parse_int(parts[1], "schema", path, line)
    if parts[0] == "total" and len(parts) == 3:
        declared[parse_enum(Split, parts[1], path, line)] = _parse_int(parts[2], "total", path, line)
        return None
    raise MalformedManifest(f"unknown manifest directive: #@{body}", path=path, line=line)


def load_manifest(path: str, strict: bool = False) -> Manifest:
    """加载并校验清单文件

    Args:
        path: 清单文件路径（UTF-8，每行一个序列，`#` 开头为注释）
        strict: 为 True 时声明的划分总帧数与逐序列求和不一致将报错

    Returns:
        Manifest: 校验通过的清单

    Raises:
        MalformedManifest: 语法错误或字段无效
        DuplicateSequence: 序列号重复
        UnknownEnumValue: 枚举取值未知
        SplitTotalMismatch: strict 模式下总帧数不一致
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise MalformedManifest(f"cannot read manifest: {e}", path=path)

    validator = ManifestValidator()
    sequences: List[SequenceMeta] = []
    seen: Dict[int, int] = {}
    declared: Dict[Split, int] = {}
    schema_version = SCHEMA_VERSION

    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#@"):
            version = _parse_pragma(text[2:], path, lineno, declared)
            if version is not None:
                schema_version = version
            continue
        if text.startswith("#"):
            continue

        parts = text.split("|")
        if len(parts) != FIELD_COUNT:
            raise MalformedManifest(
                f"expected {FIELD_COUNT} fields, got {len(parts)}", path=path, line=lineno)
        meta = _parse_record(parts, path, lineno)
        if meta.seq_id in seen:
            raise DuplicateSequence(
                f"seq_id {meta.seq_id} already defined on line {seen[meta.seq_id]}",
                path=path, line=lineno)
        problems = validator.check_sequence(meta)
        if problems:
            raise MalformedManifest("; ".join(problems), path=path, line=lineno)
        seen[meta.seq_id] = lineno
        sequences.append(meta)

    if schema_version != SCHEMA_VERSION:
        raise MalformedManifest(f"unsupported schema version {schema_version}", path=path)

    manifest = Manifest(tuple(sequences), schema_version, declared)
    mismatches = validator.check_totals(manifest)
    for split, expected, actual in mismatches:
        message = f"declared {split.value} total {expected} differs from per-sequence sum {actual}"
        if strict:
            raise SplitTotalMismatch(message, path=path)
        logger.warning(f"{path}: {message}")

    logger.info(f"Loaded manifest {path}: {len(sequences)} sequences")
    return Manifest(tuple(sequences), schema_version, declared, tuple(mismatches))


def dump_manifest(manifest: Manifest) -> str:
    """规范化序列化：指令行、按划分与序列号排序的记录"""
    out = [f"#@schema|{manifest.schema_version}"]
    for split in Split:
        if split in manifest.declared_totals:
            out.append(f"#@total|{split.value}|{manifest.declared_totals[split]}")
    split_order = {split: i for i, split in enumerate(Split)}
    for s in sorted(manifest.sequences, key=lambda s: (split_order[s.split], s.seq_id)):
        out.append("|".join([
            str(s.seq_id), str(s.frame_count), str(s.object_count), s.weather.value,
            s.road, s.time_of_day.value, s.split.value, "1" if s.zero_shot_weather else "0",
        ]))
    return "\n".join(out) + "\n"


def frames_of_split(manifest: Manifest, split: Union[str, Split]) -> List[Tuple[int, int]]:
    """列出某划分的全部帧，按序列号升序、帧序号升序"""
    frames: List[Tuple[int, int]] = []
    for seq in manifest.sequences_of_split(split):
        frames.extend((seq.seq_id, i) for i in range(seq.frame_count))
    return frames


def weather_of_frame(manifest: Manifest, seq_id: Union[int, str]) -> Weather:
    """返回序列（或帧键所属序列）的天气标签

    Raises:
        UnknownSequence: 序列不在清单中
    """
    if isinstance(seq_id, str) and "_" in seq_id:
        seq_id = parse_frame_key(seq_id)[0]
    return manifest.get(seq_id).weather


def sequence_of(manifest: Manifest, frame_key: str) -> SequenceMeta:
    return manifest.get(parse_frame_key(frame_key)[0])


def check_frames_resolve(manifest: Manifest, frame_keys: Iterable[str]) -> None:
    """确认每个帧键都能解析到唯一序列

    Raises:
        UnknownSequence: 有帧不属于清单中的任何序列
    """
    for key in frame_keys:
        seq = sequence_of(manifest, key)
        frame_index = parse_frame_key(key)[1]
        if frame_index >= seq.frame_count:
            raise UnknownSequence(
                f"frame {key} beyond sequence {seq.seq_id} length {seq.frame_count}")
