from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1,
                desc: Optional[str] = None, progress: bool = False) -> List[R]:
    """按输入顺序并行执行逐帧任务

    结果顺序只取决于输入顺序，与线程数无关，因此 --threads 不会改变输出字节。
    numpy 的大数组运算会释放 GIL，线程池足以利用多核。

    Args:
        func: 逐项处理函数，必须是纯函数
        items: 待处理项
        threads: 工作线程数，1 表示在当前线程顺序执行
        desc: 进度条描述
        progress: 是否显示 tqdm 进度条

    Returns:
        与输入一一对应的结果列表
    """
    items = list(items)
    bar = tqdm(total=len(items), desc=desc, disable=not progress)
    results: List[R] = []
    try:
        if threads <= 1:
            for item in items:
                results.append(func(item))
                bar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for result in pool.map(func, items):
                    results.append(result)
                    bar.update(1)
    finally:
        bar.close()
    return results
