from dataclasses import asdict
from typing import Any, Dict, Optional

from agents.diagnostics.norms import NormReport
from agents.diagnostics.swap_test import BlindnessReport
from .base import BaseReportGenerator, format_value, markdown_table


def _norm_rows(label: str, report: NormReport):
    return [label, format_value(report.mean_l2, 4), format_value(report.std_l2, 4),
            format_value(report.min_l2, 4), format_value(report.max_l2, 4),
            format_value(report.reference_mean_l2, 4), format_value(report.ratio, 4),
            "yes" if report.flagged else "no"]


class DiagnosticsReportGenerator(BaseReportGenerator):
    """诊断报告：token 范数失配与输入替换测试"""

    def generate(self, data: Dict[str, Any], target: str) -> str:
        """
        生成诊断报告

        Args:
            data: DiagnosticsAgent 的输出（raw/after_layer_norm 或 blindness）
            target: 目标名

        Returns:
            Markdown 报告文件路径
        """
        if "blindness" in data:
            return self._swap(data["blindness"], target)
        return self._norms(data["raw"], data.get("after_layer_norm"), target)

    def _norms(self, raw: NormReport, after: Optional[NormReport], target: str) -> str:
        payload = {"meta": self.metadata(), "raw": asdict(raw),
                   "after_layer_norm": asdict(after) if after else None}
        self._save_json(payload, target, "norms")

        rows = [_norm_rows("raw", raw)]
        if after is not None:
            rows.append(_norm_rows("after LayerNorm", after))
        content = f"# {target} token 范数诊断\n\n"
        content += f"阈值：ratio > {raw.threshold:g} 或 ratio < 1/{raw.threshold:g} 时标记\n\n"
        content += markdown_table(
            ["Tokens", "Mean L2", "Std L2", "Min L2", "Max L2", "Reference mean L2", "Ratio", "Flagged"], rows)
        if raw.flagged:
            verdict = "投影 token 范数与参考嵌入失配"
            if after is not None and not after.flagged:
                verdict += "，对输出施加 LayerNorm 后消除"
            content += f"\n结论：{verdict}。\n"
        else:
            content += "\n结论：未发现范数失配。\n"
        content += "\n" + self.config_section()
        return self._save_report(content, target, "norms")

    def _swap(self, report: BlindnessReport, target: str) -> str:
        summary = {k: v for k, v in asdict(report).items() if k != "frames"}
        self._save_json({"meta": self.metadata(), "blindness": summary}, target, "swap")
        self._save_csv(
            ["frame_key", "format", "identical_zero", "identical_noise", "distance_zero", "distance_noise"],
            [[f.frame_key, f.caption_format, int(f.identical_zero), int(f.identical_noise),
              repr(f.distance_zero), repr(f.distance_noise)] for f in report.frames],
            target, "swap")

        content = f"# {target} 输入替换测试\n\n"
        content += markdown_table(
            ["Input", "Identical fraction", "Mean normalized edit distance"],
            [["zeros", format_value(report.identical_fraction_zero), format_value(report.mean_norm_edit_distance_zero)],
             ["noise", format_value(report.identical_fraction_noise), format_value(report.mean_norm_edit_distance_noise)]])
        content += f"\n- 描述数：{report.frame_count}\n- 阈值：{report.threshold:g}\n"
        if report.flagged:
            content += "\n结论：替换输入后描述基本不变，模型未利用雷达输入。\n"
        else:
            content += "\n结论：描述随输入变化。\n"
        content += "\n" + self.config_section()
        return self._save_report(content, target, "swap")
