import math
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from data.manifest import Manifest, sequence_of
from agents.parsing.prediction import ParsedPrediction, ParseStatus
from agents.parsing.vocabulary import ClassVocabulary, DEFAULT_VOCABULARY
from utils.errors import EmptyEvaluation, InvariantViolation
from .matching import Pair, group_by_class, match_class

OOV_MODES = ("drop", "penalize")


@dataclass(frozen=True)
class FrameEval:
    """单帧评估结果"""
    frame_key: str
    tp: int
    pred_count: int
    gt_count: int
    matched_pairs: List[Pair] = field(default_factory=list)
    hallucinated_count: int = 0
    range_abs_errors: List[float] = field(default_factory=list)
    az_abs_errors: List[float] = field(default_factory=list)
    sector_hits: int = 0
    sector_total: int = 0
    pred_class_count: int = 0
    hallucinated_class_count: int = 0
    # 类别 → (预测数, 真值数, 命中数)
    per_class: Dict[str, Tuple[int, int, int]] = field(default_factory=dict)
    count_abs_error: Optional[int] = None
    status: Optional[ParseStatus] = None


@dataclass(frozen=True)
class AggregateMetrics:
    """微平均汇总指标

    MAE 与方位准确率在没有可比对象对时为 None（报告中渲染为 ---）。
    """
    precision: float
    recall: float
    f1: float
    range_mae_m: Optional[float]
    azimuth_mae_deg: Optional[float]
    bearing_acc: Optional[float]
    hallucination_rate: float
    frame_count: int
    tp: int = 0
    pred_count: int = 0
    gt_count: int = 0
    hallucination_instance: float = 0.0
    hallucination_class: float = 0.0
    class_level: bool = False
    precision_undefined: bool = False
    recall_undefined: bool = False
    count_mae: Optional[float] = None
    unparsed_frames: int = 0


@dataclass(frozen=True)
class ClassMetrics:
    """单个类别的 P/R/F1"""
    precision: float
    recall: float
    f1: float
    tp: int
    pred_count: int
    gt_count: int


def match_frame(pred: ParsedPrediction, gt: Sequence[Any], oov_mode: str = "drop",
                gt_stated_count: Optional[int] = None) -> FrameEval:
    """
    单帧按类别多重集匹配

    每个类别配对 min(pred_c, gt_c) 个对象（一维最优距离匹配）；双方都有距离时记 |Δrange|，
    都有方位角时记 |Δazimuth|，都有扇区时记扇区命中。幻觉数为类别不在本帧任何真值中的预测数。

    Args:
        pred: 预测解析结果
        gt: 真值物体（通常来自解析后的真值描述）
        oov_mode: drop 忽略词表外提及；penalize 把每个词表外提及计为一个幻觉预测
        gt_stated_count: 真值描述声明的物体总数，用于数量误差

    Returns:
        FrameEval: 单帧评估结果
    """
    if oov_mode not in OOV_MODES:
        raise ValueError(f"unsupported oov mode: {oov_mode}")
    pred_groups = group_by_class(pred.objects)
    gt_groups = group_by_class(gt)

    pairs: List[Pair] = []
    per_class: Dict[str, Tuple[int, int, int]] = {}
    for name in sorted(set(pred_groups) | set(gt_groups)):
        p_objs = pred_groups.get(name, [])
        g_objs = gt_groups.get(name, [])
        matched = match_class(p_objs, g_objs)
        if len(matched) != min(len(p_objs), len(g_objs)):
            raise InvariantViolation(f"{pred.frame_key}: class {name} matched {len(matched)} of "
                                     f"{len(p_objs)} predictions and {len(g_objs)} ground-truth objects")
        pairs.extend(matched)
        per_class[name] = (len(p_objs), len(g_objs), len(matched))

    range_errors = [abs(p.range_m - g.range_m) for p, g in pairs
                    if p.range_m is not None and g.range_m is not None]
    az_errors = [abs(p.azimuth_deg - g.azimuth_deg) for p, g in pairs
                 if p.azimuth_deg is not None and g.azimuth_deg is not None]
    sector_pairs = [(p.sector, g.sector) for p, g in pairs
                    if p.sector is not None and getattr(g, "sector", None) is not None]

    oov = pred.oov_count if oov_mode == "penalize" else 0
    hallucinated = sum(len(objs) for name, objs in pred_groups.items() if name not in gt_groups)
    hallucinated_classes = sum(1 for name in pred_groups if name not in gt_groups)

    count_error = None
    if pred.stated_count is not None and gt_stated_count is not None:
        count_error = abs(pred.stated_count - gt_stated_count)

    return FrameEval(
        frame_key=pred.frame_key,
        tp=len(pairs),
        pred_count=len(pred.objects) + oov,
        gt_count=len(gt),
        matched_pairs=pairs,
        hallucinated_count=hallucinated + oov,
        range_abs_errors=range_errors,
        az_abs_errors=az_errors,
        sector_hits=sum(1 for p, g in sector_pairs if p is g),
        sector_total=len(sector_pairs),
        pred_class_count=len(pred_groups) + oov,
        hallucinated_class_count=hallucinated_classes + oov,
        per_class=per_class,
        count_abs_error=count_error,
        status=pred.status,
    )


def _ratio(num: float, den: float, empty: float) -> float:
    return num / den if den > 0 else empty


def f1_score(precision: float, recall: float) -> float:
    total = precision + recall
    return 2 * precision * recall / total if total > 0 else 0.0


def _mean(values: List[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def hallucination_rate(evals: Sequence[FrameEval], class_level: bool = False) -> float:
    """
    幻觉率：实例级为 Σ幻觉预测数 / Σ预测数；类别级为 Σ幻觉类别数 / Σ预测类别数

    没有任何预测时为 0。

    Raises:
        EmptyEvaluation: 评估列表为空
    """
    if not evals:
        raise EmptyEvaluation("no frames to evaluate")
    if class_level:
        return _ratio(sum(e.hallucinated_class_count for e in evals),
                      sum(e.pred_class_count for e in evals), 0.0)
    return _ratio(sum(e.hallucinated_count for e in evals), sum(e.pred_count for e in evals), 0.0)


def aggregate(evals: Sequence[FrameEval], class_level: bool = False) -> AggregateMetrics:
    """
    微平均汇总：P = Σtp/Σpred，R = Σtp/Σgt，MAE 为全部匹配对误差的均值

    无预测时 P 记为 0 并标记；无真值时 R 记为 1 并标记。

    Raises:
        EmptyEvaluation: 评估列表为空
    """
    if not evals:
        raise EmptyEvaluation("no frames to evaluate")
    tp = sum(e.tp for e in evals)
    pred_count = sum(e.pred_count for e in evals)
    gt_count = sum(e.gt_count for e in evals)
    precision = _ratio(tp, pred_count, 0.0)
    recall = _ratio(tp, gt_count, 1.0)

    sector_total = sum(e.sector_total for e in evals)
    instance = hallucination_rate(evals, class_level=False)
    class_rate = hallucination_rate(evals, class_level=True)
    return AggregateMetrics(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        range_mae_m=_mean([x for e in evals for x in e.range_abs_errors]),
        azimuth_mae_deg=_mean([x for e in evals for x in e.az_abs_errors]),
        bearing_acc=sum(e.sector_hits for e in evals) / sector_total if sector_total else None,
        hallucination_rate=class_rate if class_level else instance,
        frame_count=len(evals),
        tp=tp,
        pred_count=pred_count,
        gt_count=gt_count,
        hallucination_instance=instance,
        hallucination_class=class_rate,
        class_level=class_level,
        precision_undefined=pred_count == 0,
        recall_undefined=gt_count == 0,
        count_mae=_mean([float(e.count_abs_error) for e in evals if e.count_abs_error is not None]),
        unparsed_frames=sum(1 for e in evals if e.status is ParseStatus.UNPARSED),
    )


def per_class_metrics(evals: Sequence[FrameEval],
                      vocabulary: Optional[ClassVocabulary] = None) -> "OrderedDict[str, ClassMetrics]":
    """按类别汇总 P/R/F1，顺序按词表，词表外类别按名称排在最后"""
    vocabulary = vocabulary or DEFAULT_VOCABULARY
    totals: Dict[str, List[int]] = {}
    for e in evals:
        for name, (p, g, t) in e.per_class.items():
            acc = totals.setdefault(name, [0, 0, 0])
            acc[0] += p
            acc[1] += g
            acc[2] += t
    result: "OrderedDict[str, ClassMetrics]" = OrderedDict()
    for name in sorted(totals, key=lambda n: (vocabulary.class_order(n), n)):
        p, g, t = totals[name]
        precision = _ratio(t, p, 0.0)
        recall = _ratio(t, g, 1.0)
        result[name] = ClassMetrics(precision, recall, f1_score(precision, recall), t, p, g)
    return result


def _group_order(value: Any) -> Tuple:
    if isinstance(value, Enum):
        return (list(type(value)).index(value), "")
    if isinstance(value, bool):
        return (int(value), "")
    return (0, str(value))


def group_label(value: Any) -> str:
    """分组值的显示名：枚举用其标签，布尔值渲染为 yes/no"""
    if isinstance(value, Enum):
        return getattr(value, "label", value.value)
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def stratify(evals: Iterable[FrameEval], manifest: Manifest, key: str = "weather",
             class_level: bool = False) -> "OrderedDict[Any, AggregateMetrics]":
    """
    按序列属性分组汇总

    Args:
        evals: 单帧评估结果
        manifest: 数据集清单
        key: weather / time_of_day / road / split / zero_shot_weather

    Returns:
        分组值 → 汇总指标；枚举按定义顺序，道路按名称，布尔值 False 在前

    Raises:
        UnknownSequence: 帧不属于清单中的任何序列
    """
    groups: Dict[Any, List[FrameEval]] = {}
    for e in evals:
        value = sequence_of(manifest, e.frame_key).attribute(key)
        groups.setdefault(value, []).append(e)
    ordered: "OrderedDict[Any, AggregateMetrics]" = OrderedDict()
    for value in sorted(groups, key=_group_order):
        ordered[value] = aggregate(groups[value], class_level)
    return ordered
