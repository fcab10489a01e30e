import logging
import sys

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(level: str = "INFO") -> None:
    """配置根日志记录器

    日志统一写到 stderr，stdout 与输出文件只承载结果数据。

    Args:
        level: 日志级别名称，如 INFO、DEBUG
    """
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))

    # 清除现有的处理器，避免重复输出
    root_logger.handlers = []
    root_logger.addHandler(console_handler)
