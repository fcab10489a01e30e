from typing import Optional


class EvalToolkitError(Exception):
    """工具包异常基类

    每个异常族携带一个 CLI 退出码，并可附带出错的文件路径与行号。
    """

    exit_code = 4

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.path = path
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        if self.path and self.line is not None:
            return f"{self.path}:{self.line}: {self.message}"
        if self.path:
            return f"{self.path}: {self.message}"
        return self.message


# 输入格式错误，退出码 2
class InputFormatError(EvalToolkitError, ValueError):
    exit_code = 2


class MalformedManifest(InputFormatError):
    pass


class DuplicateSequence(InputFormatError):
    pass


class UnknownEnumValue(InputFormatError):
    pass


class SplitTotalMismatch(InputFormatError):
    pass


class UnknownSequence(InputFormatError, LookupError):
    pass


class BadMagic(InputFormatError):
    pass


class DimMismatch(InputFormatError):
    pass


class TruncatedFile(InputFormatError):
    pass


class InvalidTensor(InputFormatError):
    pass


class NonFiniteInput(InputFormatError):
    pass


class MalformedRecord(InputFormatError):
    pass


class KeyMismatch(InputFormatError):
    pass


class OutOfFov(InputFormatError):
    pass


class EmptyEvaluation(InputFormatError):
    pass


# 配置错误，退出码 3
class ConfigError(EvalToolkitError, ValueError):
    exit_code = 3


class NonPositiveRange(ConfigError):
    pass


# 内部不变量被破坏，退出码 4
class InvariantViolation(EvalToolkitError, RuntimeError):
    exit_code = 4
