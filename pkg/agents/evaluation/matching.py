import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

Pair = Tuple[Any, Any]


def _sector(obj) -> Optional[Any]:
    return getattr(obj, "sector", None)


def object_sort_key(obj) -> Tuple:
    """确定性排序键：有距离的在前按距离升序，再按方位角与扇区"""
    range_m = getattr(obj, "range_m", None)
    azimuth = getattr(obj, "azimuth_deg", None)
    sector = _sector(obj)
    return (
        range_m is None, range_m if range_m is not None else 0.0,
        azimuth is None, azimuth if azimuth is not None else 0.0,
        sector.order if sector is not None else -1,
    )


def monotone_assignment(a: Sequence[float], b: Sequence[float]) -> List[Tuple[int, int]]:
    """
    两个升序序列之间的一维最优匹配，匹配 min(len(a), len(b)) 对

    一维 |Δ| 代价下总存在不交叉的最优匹配，因此只需在保序匹配中做动态规划；
    两边数量相等时即为按序配对。

    Returns:
        (a 下标, b 下标) 列表，两个下标均严格递增
    """
    if len(a) > len(b):
        return [(i, j) for j, i in monotone_assignment(b, a)]
    m, n = len(a), len(b)
    if m == n:
        return [(i, i) for i in range(m)]

    # dp[i][j]: a 的前 i 个全部匹配到 b 的前 j 个中的最小代价
    dp = [[math.inf] * (n + 1) for _ in range(m + 1)]
    for j in range(n + 1):
        dp[0][j] = 0.0
    for i in range(1, m + 1):
        for j in range(i, n + 1):
            skip = dp[i][j - 1]
            take = dp[i - 1][j - 1] + abs(a[i - 1] - b[j - 1])
            dp[i][j] = skip if skip <= take else take

    pairs: List[Tuple[int, int]] = []
    i, j = m, n
    while i > 0:
        if j > i and dp[i][j] == dp[i][j - 1]:
            j -= 1
        else:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
    pairs.reverse()
    return pairs


def match_class(preds: Sequence[Any], gts: Sequence[Any]) -> List[Pair]:
    """
    同一类别内的预测与真值配对，共 min(len(preds), len(gts)) 对

    先对双方带距离的对象做一维最优匹配，剩余对象（含无距离对象）再按排序键依次配对。
    结果与输入顺序无关。
    """
    preds = sorted(preds, key=object_sort_key)
    gts = sorted(gts, key=object_sort_key)
    ranged_p = [i for i, p in enumerate(preds) if p.range_m is not None]
    ranged_g = [j for j, g in enumerate(gts) if g.range_m is not None]

    pairs: List[Tuple[int, int]] = [
        (ranged_p[i], ranged_g[j])
        for i, j in monotone_assignment(
            [preds[i].range_m for i in ranged_p], [gts[j].range_m for j in ranged_g])
    ]
    used_p = {i for i, _ in pairs}
    used_g = {j for _, j in pairs}
    rest_p = [i for i in range(len(preds)) if i not in used_p]
    rest_g = [j for j in range(len(gts)) if j not in used_g]
    pairs.extend(zip(rest_p, rest_g))
    pairs.sort()
    return [(preds[i], gts[j]) for i, j in pairs]


def group_by_class(objs: Sequence[Any]) -> Dict[str, List[Any]]:
    groups: Dict[str, List[Any]] = {}
    for obj in objs:
        groups.setdefault(obj.class_name, []).append(obj)
    return groups
