from typing import Iterator, Tuple, Type

from utils.errors import InputFormatError, MalformedRecord


def iter_lines(path: str, error: Type[InputFormatError] = MalformedRecord) -> Iterator[Tuple[int, str]]:
    """
    逐行读取 UTF-8 文本文件，产出 (行号, 行内容)

    按字节读入后逐行解码，解码失败时报告的行号即为出错行。
    行尾的换行符保留，由调用方剥离。

    Raises:
        error: 某行不是合法 UTF-8，附带文件与行号
    """
    with open(path, "rb") as f:
        for lineno, raw in enumerate(f, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise error(f"invalid UTF-8 byte 0x{raw[e.start]:02x} at column {e.start + 1}",
                            path=path, line=lineno)
            yield lineno, text
