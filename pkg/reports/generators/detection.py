from typing import Any, Dict, List, Optional, Sequence, Tuple

from agents.evaluation.metrics import AggregateMetrics, ClassMetrics, group_label
from .base import BaseReportGenerator, format_value, markdown_table

# (行名, 指标字段, 越大越好)
TABLE_ROWS: Tuple[Tuple[str, str, bool], ...] = (
    ("Class F1", "f1", True),
    ("Precision", "precision", True),
    ("Recall", "recall", True),
    ("Range MAE (m)", "range_mae_m", False),
    ("Bearing acc.", "bearing_acc", True),
    ("Azimuth MAE (deg)", "azimuth_mae_deg", False),
    ("Hallucination", "hallucination_rate", False),
)

AGGREGATE_FIELDS = (
    "precision", "recall", "f1", "range_mae_m", "azimuth_mae_deg", "bearing_acc",
    "hallucination_rate", "hallucination_instance", "hallucination_class",
    "frame_count", "tp", "pred_count", "gt_count", "count_mae", "unparsed_frames",
    "precision_undefined", "recall_undefined",
)
CLASS_FIELDS = ("precision", "recall", "f1", "tp", "pred_count", "gt_count")
STRATA_CSV_HEADER = (
    "format", "group", "frames", "precision", "recall", "f1", "range_mae_m",
    "azimuth_mae_deg", "bearing_acc", "hallucination_rate",
)


OVERALL = "overall"


def strata_group(key: str, value: Any) -> str:
    return f"{key}={group_label(value)}"


def class_group(name: str) -> str:
    return f"class={name}"


def metrics_records(results: Dict[str, Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    把评估结果展开为 (format, group, metric, value) 记录

    Args:
        results: EvaluationAgent 的输出，以描述格式为键

    Returns:
        记录列表，顺序确定：格式 → overall → 各分层 → 各类别
    """
    records: List[Dict[str, Any]] = []

    def emit(fmt: str, group: str, obj: Any, names: Sequence[str]) -> None:
        for name in names:
            records.append({"format": fmt, "group": group, "metric": name, "value": getattr(obj, name)})

    for fmt, result in results.items():
        emit(fmt, OVERALL, result["overall"], AGGREGATE_FIELDS)
        for key, groups in result["strata"].items():
            for value, metrics in groups.items():
                emit(fmt, strata_group(key, value), metrics, AGGREGATE_FIELDS)
        for name, metrics in result["per_class"].items():
            emit(fmt, class_group(name), metrics, CLASS_FIELDS)
    return records


def table_one(columns: Sequence[str], values: Dict[str, Dict[str, Any]], mark_best: bool = False) -> str:
    """按固定行集合渲染指标表，每列一个配置

    Args:
        columns: 列名
        values: 列名 → {指标字段: 值}
        mark_best: 为真时每行最优值加粗（至少两列有值时）
    """
    rows = []
    for label, metric, higher_is_better in TABLE_ROWS:
        cells = [values[col].get(metric) for col in columns]
        present = [v for v in cells if v is not None]
        best: Optional[float] = None
        if mark_best and len(present) >= 2:
            best = max(present) if higher_is_better else min(present)
        rendered = [
            f"**{format_value(v)}**" if best is not None and v is not None and format_value(v) == format_value(best)
            else format_value(v)
            for v in cells
        ]
        rows.append([label] + rendered)
    return markdown_table(["Metric"] + list(columns), rows)


def _aggregate_values(metrics: AggregateMetrics) -> Dict[str, Any]:
    return {name: getattr(metrics, name) for name in AGGREGATE_FIELDS}


class DetectionReportGenerator(BaseReportGenerator):
    """描述即检测评估报告：指标表、逐类别表、分层表、JSONL 记录与分层 CSV"""

    def generate(self, data: Dict[str, Any], target: str) -> str:
        """
        生成评估报告

        Args:
            data: EvaluationAgent 的输出，以描述格式（prose / structured）为键
            target: 目标名

        Returns:
            Markdown 报告文件路径
        """
        cfg = self.run_config
        formats = list(data)
        meta = dict(self.metadata())
        meta.update({
            "pooling": "micro",
            "hallucination": "class" if cfg.class_level else "instance",
            "oov_mode": cfg.oov_mode,
            "formats": formats,
        })
        self._save_jsonl([{"meta": meta}] + metrics_records(data), target, "metrics")

        for key in self._strata_keys(data):
            self._save_csv(STRATA_CSV_HEADER, self._strata_rows(data, key), target, key)

        content = f"# {target} 描述即检测评估\n\n"
        content += (f"- 汇总方式：micro\n- 幻觉率：{meta['hallucination']} 级\n"
                    f"- 词表外类别：{cfg.oov_mode}\n\n")
        content += "## 1. 总体指标\n\n"
        content += table_one(formats, {fmt: _aggregate_values(data[fmt]["overall"]) for fmt in formats})
        content += "\n" + self._counts_section(data)

        content += "\n## 2. 逐类别指标\n"
        for fmt in formats:
            content += f"\n### {fmt}\n\n" + self._class_table(data[fmt]["per_class"])

        section = 3
        for key in self._strata_keys(data):
            content += f"\n## {section}. 按 {key} 分层\n"
            for fmt in formats:
                groups = data[fmt]["strata"].get(key)
                if groups:
                    content += f"\n### {fmt}\n\n" + self._strata_table(groups)
            section += 1

        content += "\n" + self.config_section()
        return self._save_report(content, target, "metrics")

    @staticmethod
    def _strata_keys(data: Dict[str, Any]) -> List[str]:
        keys: List[str] = []
        for result in data.values():
            for key in result["strata"]:
                if key not in keys:
                    keys.append(key)
        return keys

    @staticmethod
    def _strata_rows(data: Dict[str, Any], key: str) -> List[List[str]]:
        rows = []
        for fmt, result in data.items():
            for value, m in result["strata"].get(key, {}).items():
                rows.append([fmt, group_label(value), str(m.frame_count)] + [
                    "" if v is None else repr(float(v))
                    for v in (m.precision, m.recall, m.f1, m.range_mae_m,
                              m.azimuth_mae_deg, m.bearing_acc, m.hallucination_rate)
                ])
        return rows

    @staticmethod
    def _counts_section(data: Dict[str, Any]) -> str:
        rows = []
        for fmt, result in data.items():
            m: AggregateMetrics = result["overall"]
            flags = []
            if m.precision_undefined:
                flags.append("P undefined")
            if m.recall_undefined:
                flags.append("R undefined")
            rows.append([fmt, str(m.frame_count), str(m.tp), str(m.pred_count), str(m.gt_count),
                         format_value(m.hallucination_instance), format_value(m.hallucination_class),
                         format_value(m.count_mae), str(m.unparsed_frames), ", ".join(flags) or "-"])
        return markdown_table(
            ["Format", "Frames", "TP", "Pred", "GT", "Halluc. (instance)", "Halluc. (class)",
             "Count MAE", "Unparsed", "Flags"], rows)

    @staticmethod
    def _class_table(per_class: Dict[str, ClassMetrics]) -> str:
        rows = [[name, format_value(m.precision), format_value(m.recall), format_value(m.f1),
                 str(m.tp), str(m.pred_count), str(m.gt_count)]
                for name, m in per_class.items()]
        return markdown_table(["Class", "Precision", "Recall", "F1", "TP", "Pred", "GT"], rows)

    @staticmethod
    def _strata_table(groups: Dict[Any, AggregateMetrics]) -> str:
        rows = [[group_label(value), str(m.frame_count), format_value(m.f1), format_value(m.precision),
                 format_value(m.recall), format_value(m.range_mae_m), format_value(m.bearing_acc),
                 format_value(m.azimuth_mae_deg), format_value(m.hallucination_rate)]
                for value, m in groups.items()]
        return markdown_table(
            ["Group", "Frames", "F1", "Precision", "Recall", "Range MAE (m)", "Bearing acc.",
             "Azimuth MAE (deg)", "Hallucination"], rows)
