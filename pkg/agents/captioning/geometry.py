import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

from config.config import FOV_AZ_DEG, FOV_RANGE_M, SECTOR_EDGES_DEG, TOP_K
from utils.errors import OutOfFov
from agents.parsing.vocabulary import DEFAULT_VOCABULARY, ClassVocabulary

logger = logging.getLogger(__name__)


class BearingSector(Enum):
    """7 个方位扇区，定义顺序从左到右"""
    FAR_LEFT = "far_left"
    LEFT = "left"
    SLIGHTLY_LEFT = "slightly_left"
    AHEAD = "ahead"
    SLIGHTLY_RIGHT = "slightly_right"
    RIGHT = "right"
    FAR_RIGHT = "far_right"

    @property
    def phrase(self) -> str:
        return SECTOR_PHRASES[self]

    @property
    def mirror(self) -> "BearingSector":
        return _MIRROR[self]

    @property
    def order(self) -> int:
        return list(BearingSector).index(self)


SECTOR_PHRASES = {
    BearingSector.FAR_LEFT: "far to the left",
    BearingSector.LEFT: "to the left",
    BearingSector.SLIGHTLY_LEFT: "slightly to the left",
    BearingSector.AHEAD: "straight ahead",
    BearingSector.SLIGHTLY_RIGHT: "slightly to the right",
    BearingSector.RIGHT: "to the right",
    BearingSector.FAR_RIGHT: "far to the right",
}

_MIRROR = {
    BearingSector.FAR_LEFT: BearingSector.FAR_RIGHT,
    BearingSector.LEFT: BearingSector.RIGHT,
    BearingSector.SLIGHTLY_LEFT: BearingSector.SLIGHTLY_RIGHT,
    BearingSector.AHEAD: BearingSector.AHEAD,
    BearingSector.SLIGHTLY_RIGHT: BearingSector.SLIGHTLY_LEFT,
    BearingSector.RIGHT: BearingSector.LEFT,
    BearingSector.FAR_RIGHT: BearingSector.FAR_LEFT,
}


def bearing_sector(azimuth_deg: float, edges: Sequence[float] = SECTOR_EDGES_DEG,
                   fov_az_deg: float = FOV_AZ_DEG) -> BearingSector:
    """
    方位角映射到扇区，正角度为左

    判定基于 |azimuth|：|a| < e1 为正前方，e1 ≤ |a| < e2 为稍偏，e2 ≤ |a| < e3 为偏，
    e3 ≤ |a| ≤ fov 为远偏；符号决定左右，因此 sector(-a) 恰为 sector(a) 的镜像。

    Raises:
        OutOfFov: |azimuth| 超出视场
    """
    magnitude = abs(azimuth_deg)
    if not magnitude <= fov_az_deg:
        raise OutOfFov(f"azimuth {azimuth_deg} deg outside ±{fov_az_deg} deg")
    inner, middle, outer = edges
    if magnitude < inner:
        return BearingSector.AHEAD
    left = azimuth_deg > 0
    if magnitude < middle:
        return BearingSector.SLIGHTLY_LEFT if left else BearingSector.SLIGHTLY_RIGHT
    if magnitude < outer:
        return BearingSector.LEFT if left else BearingSector.RIGHT
    return BearingSector.FAR_LEFT if left else BearingSector.FAR_RIGHT


@dataclass(frozen=True)
class Box3D:
    """3D 标注框，x 前 y 左 z 上（米），yaw 为弧度"""
    class_label: str
    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    yaw: float = 0.0

    def problems(self) -> List[str]:
        issues = []
        if not self.class_label or not self.class_label.strip():
            issues.append("class must be non-empty")
        for name in ("l", "w", "h"):
            if not getattr(self, name) > 0:
                issues.append(f"{name} must be > 0")
        for name in ("x", "y", "z", "yaw"):
            if not math.isfinite(getattr(self, name)):
                issues.append(f"{name} must be finite")
        return issues


@dataclass(frozen=True)
class SceneObject:
    """极坐标下的场景物体：规范类别、地平面距离（米）与方位角（度，左正右负）"""
    class_name: str
    range_m: float
    azimuth_deg: float

    @property
    def sector(self) -> Optional[BearingSector]:
        """视场内物体的方位扇区，视场外为 None"""
        try:
            return bearing_sector(self.azimuth_deg)
        except OutOfFov:
            return None


def to_polar(box: Box3D, vocabulary: Optional[ClassVocabulary] = None) -> SceneObject:
    """
    标注框转极坐标物体

    距离取地平面距离 √(x²+y²)，方位角 atan2(y, x)。类别按词表规范化；
    词表外的标签保留小写原文，由 frame_scene 统计并剔除。
    """
    vocabulary = vocabulary or DEFAULT_VOCABULARY
    name = vocabulary.normalize_class(box.class_label) or box.class_label.strip().lower()
    return SceneObject(
        class_name=name,
        range_m=math.hypot(box.x, box.y),
        azimuth_deg=math.degrees(math.atan2(box.y, box.x)),
    )


def fov_filter(objs: Iterable[SceneObject], az_limit_deg: float = FOV_AZ_DEG,
               range_limit_m: float = FOV_RANGE_M) -> List[SceneObject]:
    """保留 |azimuth| ≤ az_limit 且 range ≤ range_limit 的物体（边界包含在内），保持输入顺序"""
    if az_limit_deg <= 0 or range_limit_m <= 0:
        raise ValueError("FOV limits must be positive")
    return [o for o in objs if abs(o.azimuth_deg) <= az_limit_deg and o.range_m <= range_limit_m]


def topk_key(obj: SceneObject) -> Tuple[float, float, str, float]:
    return (obj.range_m, abs(obj.azimuth_deg), obj.class_name, obj.azimuth_deg)


def select_topk(objs: Iterable[SceneObject], k: int = TOP_K) -> List[SceneObject]:
    """
    按距离升序取最近的 k 个物体

    并列时依次按 |azimuth|、类别名、azimuth 排序，结果与输入顺序无关。
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return sorted(objs, key=topk_key)[:k]


@dataclass(frozen=True)
class FrameScene:
    """一帧的描述对象：top-k 物体、视场内物体总数、被剔除的词表外标签数"""
    objects: List[SceneObject]
    total_count: int
    oov_count: int = 0


def frame_scene(boxes: Iterable[Box3D], top_k: int = TOP_K, az_limit_deg: float = FOV_AZ_DEG,
                range_limit_m: float = FOV_RANGE_M,
                vocabulary: Optional[ClassVocabulary] = None) -> FrameScene:
    """标注框 → 极坐标 → 视场过滤 → top-k，词表外类别不参与计数"""
    vocabulary = vocabulary or DEFAULT_VOCABULARY
    polar = [to_polar(b, vocabulary) for b in boxes]
    known = [o for o in polar if o.class_name in vocabulary]
    visible = fov_filter(known, az_limit_deg, range_limit_m)
    return FrameScene(select_topk(visible, top_k), len(visible), len(polar) - len(known))
