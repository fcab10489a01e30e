import logging
import math
from dataclasses import dataclass

import numpy as np

from config.config import LAYER_NORM_EPS, NORM_THRESHOLD
from utils.errors import DimMismatch, NonFiniteInput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenMatrix:
    """n 个 token × d 维的嵌入矩阵（float32）"""
    data: np.ndarray

    def validate(self) -> None:
        """
        Raises:
            DimMismatch: 不是非空二维矩阵
            NonFiniteInput: 存在 NaN 或 Inf
        """
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DimMismatch(f"token matrix must be non-empty 2D, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise NonFiniteInput("token matrix contains non-finite values")


@dataclass(frozen=True)
class NormStats:
    """逐 token L2 范数统计"""
    mean_l2: float
    std_l2: float
    min_l2: float
    max_l2: float
    count: int


@dataclass(frozen=True)
class NormReport:
    """范数失配诊断结果，flagged 表示 ratio 超出 [1/threshold, threshold]"""
    mean_l2: float
    std_l2: float
    min_l2: float
    max_l2: float
    reference_mean_l2: float
    ratio: float
    flagged: bool
    threshold: float


def token_norms(tokens: TokenMatrix) -> np.ndarray:
    tokens.validate()
    data = tokens.data.astype(np.float64)
    return np.sqrt(np.einsum("ij,ij->i", data, data))


def token_norm_stats(tokens: TokenMatrix) -> NormStats:
    """
    逐 token 欧氏范数的均值、标准差（总体）、最小值与最大值

    Raises:
        NonFiniteInput: 矩阵含非有限值
    """
    norms = token_norms(tokens)
    return NormStats(
        mean_l2=float(norms.mean()),
        std_l2=float(norms.std()),
        min_l2=float(norms.min()),
        max_l2=float(norms.max()),
        count=int(norms.size),
    )


def norm_mismatch_check(tokens: TokenMatrix, reference: TokenMatrix,
                        threshold: float = NORM_THRESHOLD) -> NormReport:
    """
    比较投影 token 与参考嵌入的平均 L2 范数

    Args:
        tokens: 投影输出 token
        reference: 语言模型原生嵌入（抽样）
        threshold: 比值阈值，ratio > threshold 或 ratio < 1/threshold 时标记

    Raises:
        DimMismatch: 两个矩阵维度 d 不同
        NonFiniteInput: 矩阵含非有限值
    """
    if tokens.data.ndim == 2 and reference.data.ndim == 2 and tokens.data.shape[1] != reference.data.shape[1]:
        raise DimMismatch(
            f"token dim {tokens.data.shape[1]} != reference dim {reference.data.shape[1]}")
    stats = token_norm_stats(tokens)
    ref = token_norm_stats(reference)
    if ref.mean_l2 > 0:
        ratio = stats.mean_l2 / ref.mean_l2
    else:
        ratio = 1.0 if stats.mean_l2 == 0 else math.inf
    flagged = ratio > threshold or ratio < 1.0 / threshold
    if flagged:
        logger.warning(f"Token norm mismatch: ratio {ratio:.3f} outside [1/{threshold}, {threshold}]")
    return NormReport(stats.mean_l2, stats.std_l2, stats.min_l2, stats.max_l2,
                      ref.mean_l2, ratio, flagged, threshold)


def layer_norm(tokens: TokenMatrix, eps: float = LAYER_NORM_EPS) -> TokenMatrix:
    """
    参考 LayerNorm：逐 token 减均值、除以 √(方差 + eps)，增益 1、偏置 0

    以 float64 计算，输出 float32。

    Raises:
        DimMismatch: d < 2
        NonFiniteInput: 矩阵含非有限值
    """
    tokens.validate()
    if tokens.data.shape[1] < 2:
        raise DimMismatch(f"layer_norm needs d >= 2, got {tokens.data.shape[1]}")
    x = tokens.data.astype(np.float64)
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True) + eps
    return TokenMatrix(((x - mu) * var ** -0.5).astype(np.float32))
