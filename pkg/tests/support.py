"""
测试共用的路径、随机场景与计时工具
"""
import os
import time
from typing import Callable, List

import numpy as np

from agents.captioning.geometry import SceneObject
from agents.parsing.vocabulary import DEFAULT_CLASSES

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURE_MANIFEST = os.path.join(ROOT_DIR, "data", "fixtures", "kradar_manifest.txt")
FIXTURES_DIR = os.path.join(ROOT_DIR, "tests", "fixtures")
EVAL_A_GT = os.path.join(FIXTURES_DIR, "eval_a", "gt.tsv")
EVAL_A_PRED = os.path.join(FIXTURES_DIR, "eval_a", "pred.tsv")


def write_text(path: str, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


def write_bytes(path: str, data: bytes) -> str:
    with open(path, "wb") as f:
        f.write(data)
    return path


def read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def random_scene(rng: np.random.Generator, max_objects: int = 8,
                 range_limit: float = 80.0, az_limit: float = 53.0) -> List[SceneObject]:
    """视场内的随机场景，0 ~ max_objects 个物体"""
    n = int(rng.integers(0, max_objects + 1))
    return [
        SceneObject(
            class_name=DEFAULT_CLASSES[int(rng.integers(0, len(DEFAULT_CLASSES)))],
            range_m=float(rng.uniform(0.5, range_limit)),
            azimuth_deg=float(rng.uniform(-az_limit, az_limit)),
        )
        for _ in range(n)
    ]


def best_time(func: Callable[[], object], repeats: int = 3) -> float:
    """多次运行取最短墙钟时间（秒）"""
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)
