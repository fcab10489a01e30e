import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from config.config import FOV_AZ_DEG, SECTOR_EDGES_DEG
from .geometry import SceneObject, bearing_sector


class CaptionFormat(Enum):
    """描述格式"""
    PROSE = "prose"
    STRUCTURED = "structured"


@dataclass(frozen=True)
class GtCaption:
    """真值描述"""
    frame_key: str
    format: CaptionFormat
    text: str
    object_count_total: int


def round_half_away(value: float) -> int:
    """四舍五入到整数，.5 远离零：0.5 → 1，-0.5 → -1"""
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def _check_counts(objs: Sequence[SceneObject], total_count: int) -> None:
    if total_count < len(objs):
        raise ValueError(f"total_count {total_count} < described objects {len(objs)}")


def gen_prose(objs: Sequence[SceneObject], total_count: int, frame_key: str = "",
              edges: Sequence[float] = SECTOR_EDGES_DEG,
              fov_az_deg: float = FOV_AZ_DEG) -> GtCaption:
    """
    生成自然语言描述

    模板：`There are {N} objects. Closest: a {class} {bearing phrase} at {R} m, ...`，
    N=1 时为 `There is 1 object.`，N=0 时为 `There are no objects.`

    Args:
        objs: 已按距离排序的 top-k 物体
        total_count: 视场内物体总数（top-k 之前）
        frame_key: 帧键
    """
    _check_counts(objs, total_count)
    if total_count == 0:
        text = "There are no objects."
    else:
        head = "There is 1 object." if total_count == 1 else f"There are {total_count} objects."
        parts = [
            f"a {o.class_name} {bearing_sector(o.azimuth_deg, edges, fov_az_deg).phrase} "
            f"at {round_half_away(o.range_m)} m"
            for o in objs
        ]
        text = f"{head} Closest: {', '.join(parts)}." if parts else head
    return GtCaption(frame_key, CaptionFormat.PROSE, text, total_count)


def gen_structured(objs: Sequence[SceneObject], total_count: int, frame_key: str = "") -> GtCaption:
    """
    生成紧凑的结构化描述：`{"objects":[{"class":...,"azimuth_deg":int,"range_m":int}]}`

    键顺序固定，整数按远离零方向取整，不含多余空白。
    """
    _check_counts(objs, total_count)
    payload = {
        "objects": [
            {
                "class": o.class_name,
                "azimuth_deg": round_half_away(o.azimuth_deg),
                "range_m": round_half_away(o.range_m),
            }
            for o in objs
        ]
    }
    text = json.dumps(payload, separators=(",", ":"), ensure_ascii=False)
    return GtCaption(frame_key, CaptionFormat.STRUCTURED, text, total_count)


def generate(fmt: CaptionFormat, objs: Sequence[SceneObject], total_count: int, frame_key: str = "",
             edges: Sequence[float] = SECTOR_EDGES_DEG, fov_az_deg: float = FOV_AZ_DEG) -> GtCaption:
    if fmt is CaptionFormat.PROSE:
        return gen_prose(objs, total_count, frame_key, edges, fov_az_deg)
    return gen_structured(objs, total_count, frame_key)
