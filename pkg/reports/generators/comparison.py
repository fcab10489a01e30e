import json
import os
from typing import Any, Dict, List, Tuple

from data.text_io import iter_lines
from utils.errors import MalformedRecord
from .base import BaseReportGenerator, format_value, markdown_table
from .detection import OVERALL, table_one

MetricsFile = Tuple[Dict[str, Any], List[Dict[str, Any]]]


def read_metrics_records(path: str) -> MetricsFile:
    """
    读取评估命令写出的 JSONL 指标文件

    Returns:
        (meta, records)：meta 为首行元数据，records 为 (format, group, metric, value) 记录

    Raises:
        MalformedRecord: 行不是合法 JSON 或缺少字段
    """
    meta: Dict[str, Any] = {}
    records: List[Dict[str, Any]] = []
    for lineno, line in iter_lines(path):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as e:
            raise MalformedRecord(f"invalid JSON: {e}", path=path, line=lineno)
        if not isinstance(obj, dict):
            raise MalformedRecord("expected a JSON object", path=path, line=lineno)
        if "meta" in obj:
            meta = obj["meta"]
            continue
        if not {"format", "group", "metric", "value"} <= set(obj):
            raise MalformedRecord("record needs format, group, metric and value", path=path, line=lineno)
        records.append(obj)
    return meta, records


def _label(path: str) -> str:
    name = os.path.basename(path)
    for suffix in (".jsonl", ".json"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    if name.startswith("metrics_"):
        name = name[len("metrics_"):]
    return name


class ComparisonReportGenerator(BaseReportGenerator):
    """多配置对比报告：每个指标文件的每种描述格式占一列，逐行标出最优值"""

    def generate(self, data: Dict[str, Any], target: str) -> str:
        """
        生成对比报告

        Args:
            data: 指标文件路径 → (meta, records)，按给定顺序排列各列
            target: 目标名

        Returns:
            Markdown 报告文件路径
        """
        columns: List[str] = []
        overall: Dict[str, Dict[str, Any]] = {}
        weather: Dict[str, Dict[str, Dict[str, Any]]] = {}
        hashes: List[List[str]] = []
        single = len(data) == 1

        for path, (meta, records) in data.items():
            formats = []
            for rec in records:
                if rec["format"] not in formats:
                    formats.append(rec["format"])
            for fmt in formats:
                column = fmt if single else f"{_label(path)}:{fmt}"
                columns.append(column)
                overall[column] = {}
                weather[column] = {}
                for rec in records:
                    if rec["format"] != fmt:
                        continue
                    if rec["group"] == OVERALL:
                        overall[column][rec["metric"]] = rec["value"]
                    elif rec["group"].startswith("weather="):
                        group = rec["group"].split("=", 1)[1]
                        weather[column].setdefault(group, {})[rec["metric"]] = rec["value"]
            hashes.append([_label(path), str(meta.get("config_hash", "")),
                           str(meta.get("pooling", "")), str(meta.get("hallucination", "")),
                           str(meta.get("oov_mode", ""))])

        content = f"# {target} 指标对比\n\n"
        content += "## 1. 总体指标\n\n" + table_one(columns, overall, mark_best=not single)

        groups: List[str] = []
        for column in columns:
            for group in weather[column]:
                if group not in groups:
                    groups.append(group)
        if groups:
            content += "\n## 2. 按天气的 F1 与幻觉率\n\n"
            header = ["Weather"]
            for column in columns:
                header += [f"{column} F1", f"{column} Halluc."]
            rows = []
            csv_rows = []
            for group in groups:
                row = [group]
                csv_row = [group]
                for column in columns:
                    values = weather[column].get(group, {})
                    row += [format_value(values.get("f1")), format_value(values.get("hallucination_rate"))]
                    csv_row += ["" if values.get(k) is None else repr(float(values[k]))
                                for k in ("f1", "hallucination_rate")]
                rows.append(row)
                csv_rows.append(csv_row)
            content += markdown_table(header, rows)
            csv_header = ["weather"]
            for column in columns:
                csv_header += [f"{column}_f1", f"{column}_hallucination"]
            self._save_csv(csv_header, csv_rows, target, "comparison_weather")

        content += "\n## 来源\n\n" + markdown_table(
            ["Source", "config_hash", "Pooling", "Hallucination", "OOV"], hashes)
        content += "\n" + self.config_section()
        return self._save_report(content, target, "comparison")
