from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, List, Optional, Sequence
import csv
import json
import math
import os
from datetime import datetime

from config.config import RunConfig

MISSING = "---"


def format_value(value: Any, digits: int = 3) -> str:
    """表格中的数值：None 渲染为 ---，浮点保留 digits 位"""
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if not math.isfinite(value):
            return "inf" if value > 0 else MISSING
        return f"{value:.{digits}f}"
    return str(value)


def jsonable(value: Any) -> Any:
    """把非有限浮点转换为字符串，保证输出是合法 JSON"""
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def markdown_table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


class BaseReportGenerator(ABC):
    """报告生成器基类

    输出文件名由报告类型与目标名决定；只有 stamp 为真时才附加时间戳，
    否则同样的配置与输入重复运行得到逐字节相同的文件。
    """

    def __init__(self, output_dir: str = "reports", run_config: Optional[RunConfig] = None,
                 stamp: Optional[bool] = None):
        self.output_dir = output_dir
        self.run_config = run_config or RunConfig()
        self.stamp = self.run_config.stamp if stamp is None else stamp
        self.timestamp = datetime.now().strftime("%Y%m%d_%H%M%S") if self.stamp else None
        self.written: List[str] = []
        self._ensure_output_dir()

    def _ensure_output_dir(self) -> None:
        """确保输出目录存在"""
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)

    @abstractmethod
    def generate(self, data: Dict[str, Any], target: str) -> str:
        """
        生成报告

        Args:
            data: 报告数据
            target: 目标名（输出文件名的一部分）

        Returns:
            主报告文件路径
        """
        pass

    def metadata(self) -> Dict[str, Any]:
        """嵌入每份报告的有效配置与配置哈希"""
        meta: Dict[str, Any] = {
            "config": self.run_config.to_dict(),
            "config_hash": self.run_config.config_hash(),
        }
        if self.timestamp:
            meta["generated_at"] = self.timestamp
        return meta

    def config_section(self) -> str:
        """报告末尾的运行配置小节"""
        lines = ["## 运行配置", "", f"- config_hash: `{self.run_config.config_hash()}`"]
        if self.timestamp:
            lines.append(f"- generated_at: {self.timestamp}")
        for key, value in self.run_config.to_dict().items():
            lines.append(f"- {key}: {value}")
        return "\n".join(lines) + "\n"

    def _path(self, target: str, report_type: str, ext: str) -> str:
        stem = f"{report_type}_{target}"
        if self.timestamp:
            stem += f"_{self.timestamp}"
        return os.path.join(self.output_dir, stem + ext)

    def _save_report(self, content: str, target: str, report_type: str) -> str:
        """
        保存 Markdown 报告

        Args:
            content: 报告内容
            target: 目标名
            report_type: 报告类型

        Returns:
            报告文件路径
        """
        filepath = self._path(target, report_type, ".md")
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        self.written.append(filepath)
        return filepath

    def _save_json(self, payload: Dict[str, Any], target: str, report_type: str) -> str:
        filepath = self._path(target, report_type, ".json")
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        self.written.append(filepath)
        return filepath

    def _save_jsonl(self, records: Iterable[Dict[str, Any]], target: str, report_type: str) -> str:
        filepath = self._path(target, report_type, ".jsonl")
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                f.write(json.dumps(jsonable(record), sort_keys=True, ensure_ascii=False) + "\n")
        self.written.append(filepath)
        return filepath

    def _save_csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]],
                  target: str, report_type: str) -> str:
        """写出 RFC 4180 CSV（CRLF 行尾，必要时加引号）"""
        filepath = self._path(target, report_type, ".csv")
        with open(filepath, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
        self.written.append(filepath)
        return filepath
