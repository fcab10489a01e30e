#!/usr/bin/env python
# -*- coding: utf-8 -*-

import argparse
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional

from dotenv import load_dotenv

from agents.orchestrator import Orchestrator
from config.config import MAX_OBJECTS, MAX_SCAN_CHARS, load_run_config
from data.manifest import Split
from reports.generators.comparison import ComparisonReportGenerator, read_metrics_records
from reports.generators.detection import DetectionReportGenerator
from reports.generators.diagnostics import DiagnosticsReportGenerator
from utils.errors import ConfigError, EmptyEvaluation, EvalToolkitError
from utils.logger import setup_logger

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 4


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value 配置文件，优先级高于环境变量")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="覆盖任意配置项，可重复")
    common.add_argument("--log-level", default=None, help="日志级别，默认 INFO")
    common.add_argument("--threads", type=int, default=None, help="逐帧并行的线程数")
    common.add_argument("--no-progress", action="store_true", help="关闭进度条")
    common.add_argument("--stamp", action="store_true", help="报告文件名与内容附加时间戳")
    common.add_argument("--top-k", type=int, default=None, help="每帧详细描述的物体数")
    common.add_argument("--format", dest="caption_format", choices=["prose", "structured", "both"],
                        default=None, help="描述格式")
    common.add_argument("--vocabulary", default=None, help="类别词表文件")
    common.add_argument("--class-level", action="store_true", help="幻觉率按类别而非实例计算")
    common.add_argument("--oov-mode", choices=["drop", "penalize"], default=None,
                        help="词表外类别：drop 忽略，penalize 计为幻觉")
    common.add_argument("--stratify", default=None,
                        help="分层键，逗号分隔：weather,time_of_day,road,split,zero_shot_weather")
    common.add_argument("--strict-manifest", action="store_true", help="清单声明总数不一致时报错")
    common.add_argument("--max-scan-chars", type=int, default=None,
                        help=f"解析器每条描述最多扫描的字符数，默认 {MAX_SCAN_CHARS}；超出部分不解析，状态记为 partial")
    common.add_argument("--max-objects", type=int, default=None,
                        help=f"解析器每条描述最多保留的对象数，默认 {MAX_OBJECTS}；超出时状态记为 partial")
    return common


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """解析命令行参数"""
    common = _common_options()
    parser = argparse.ArgumentParser(description="雷达场景描述的天气分层评估工具")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="4D 张量 → 模型输入张量")
    p.add_argument("--input-dir", required=True, help="*.rt4d 张量目录")
    p.add_argument("--output-dir", required=True, help="输出目录")
    p.add_argument("--variant", choices=["5ch", "66ch"], default=None, help="输入变体")

    p = sub.add_parser("gen-gt", parents=[common], help="由 3D 标注生成真值描述")
    p.add_argument("--labels", required=True, help="标注文件")
    p.add_argument("--output", required=True, help="描述文件输出路径")
    p.add_argument("--manifest", default=None, help="清单文件")

    p = sub.add_parser("parse", parents=[common], help="解析描述文件")
    p.add_argument("--captions", required=True, help="描述文件")
    p.add_argument("--output", required=True, help="解析结果 JSONL")

    p = sub.add_parser("eval", parents=[common], help="描述即检测评估")
    p.add_argument("--gt", required=True, help="真值描述文件")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--pred", help="模型输出描述文件")
    source.add_argument("--pred-parsed", help="parse 命令写出的解析结果")
    p.add_argument("--manifest", default=None, help="清单文件，给定时输出分层结果")
    p.add_argument("--output-dir", default="reports", help="输出目录，默认为 reports")
    p.add_argument("--name", default="eval", help="报告名")

    p = sub.add_parser("report", parents=[common], help="渲染一个或多个指标文件")
    p.add_argument("--metrics", nargs="+", required=True, help="eval 写出的 metrics_*.jsonl")
    p.add_argument("--output-dir", default="reports", help="输出目录，默认为 reports")
    p.add_argument("--name", default="report", help="报告名")

    p = sub.add_parser("diagnose-norms", parents=[common], help="token 范数失配诊断")
    p.add_argument("--tokens", required=True, help="投影 token 的 RT4D 文件")
    p.add_argument("--reference", required=True, help="参考嵌入的 RT4D 文件")
    p.add_argument("--output-dir", default="reports", help="输出目录，默认为 reports")
    p.add_argument("--name", default="diagnostics", help="报告名")

    p = sub.add_parser("swap-test", parents=[common], help="输入替换测试")
    p.add_argument("--real", required=True, help="真实输入下的描述")
    p.add_argument("--zeros", required=True, help="全零输入下的描述")
    p.add_argument("--noise", required=True, help="噪声输入下的描述")
    p.add_argument("--output-dir", default="reports", help="输出目录，默认为 reports")
    p.add_argument("--name", default="swap", help="报告名")

    p = sub.add_parser("validate-manifest", parents=[common], help="校验清单并输出划分统计")
    p.add_argument("--manifest", required=True, help="清单文件")

    return parser.parse_args(argv)


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """命令行参数 → 配置覆盖项；未指定的选项不出现，--set 优先于专用选项"""
    flags: Dict[str, Any] = {
        "threads": args.threads,
        "progress": False if args.no_progress else None,
        "stamp": True if args.stamp else None,
        "top_k": args.top_k,
        "caption_format": args.caption_format,
        "vocabulary_path": args.vocabulary,
        "class_level": True if args.class_level else None,
        "oov_mode": args.oov_mode,
        "stratify_keys": args.stratify,
        "strict_manifest": True if args.strict_manifest else None,
        "variant": getattr(args, "variant", None),
        "max_scan_chars": args.max_scan_chars,
        "max_objects": args.max_objects,
    }
    overrides: Dict[str, Any] = {key: value for key, value in flags.items() if value is not None}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    return overrides


def cmd_preprocess(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    result = orchestrator.preprocess(args.input_dir, args.output_dir)
    for path in result["written"]:
        print(path)
    return EXIT_INPUT if result["errors"] else EXIT_OK


def cmd_gen_gt(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    orchestrator.generate_gt(args.labels, args.output, args.manifest)
    return EXIT_OK


def cmd_parse(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    fmt = args.caption_format if args.caption_format in ("prose", "structured") else None
    result = orchestrator.parse(args.captions, args.output, fmt)
    print(" ".join(f"{k}={v}" for k, v in result["status_counts"].items()))
    return EXIT_OK


def cmd_eval(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    results = orchestrator.evaluate(args.gt, args.pred, args.pred_parsed, args.manifest)
    if not results:
        raise EmptyEvaluation(f"no captions of format {orchestrator.run_config.caption_format}", path=args.gt)
    generator = DetectionReportGenerator(args.output_dir, orchestrator.run_config)
    generator.generate(results, args.name)
    for path in generator.written:
        print(path)
    return EXIT_OK


def cmd_report(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    data = {path: read_metrics_records(path) for path in args.metrics}
    generator = ComparisonReportGenerator(args.output_dir, orchestrator.run_config)
    generator.generate(data, args.name)
    for path in generator.written:
        print(path)
    return EXIT_OK


def cmd_diagnose_norms(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    result = orchestrator.diagnose_norms(args.tokens, args.reference)
    generator = DiagnosticsReportGenerator(args.output_dir, orchestrator.run_config)
    generator.generate(result, args.name)
    for path in generator.written:
        print(path)
    return EXIT_OK


def cmd_swap_test(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    result = orchestrator.swap_test(args.real, args.zeros, args.noise)
    generator = DiagnosticsReportGenerator(args.output_dir, orchestrator.run_config)
    generator.generate(result, args.name)
    for path in generator.written:
        print(path)
    return EXIT_OK


def cmd_validate_manifest(orchestrator: Orchestrator, args: argparse.Namespace) -> int:
    manifest = orchestrator.validate_manifest(args.manifest)
    totals = manifest.split_totals()
    print(f"sequences\t{len(manifest)}")
    for split in Split:
        declared = manifest.declared_totals.get(split)
        line = f"{split.value}\t{len(manifest.sequences_of_split(split))}\t{totals[split]}"
        if declared is not None:
            line += f"\tdeclared={declared}"
        print(line)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Orchestrator, argparse.Namespace], int]] = {
    "preprocess": cmd_preprocess,
    "gen-gt": cmd_gen_gt,
    "parse": cmd_parse,
    "eval": cmd_eval,
    "report": cmd_report,
    "diagnose-norms": cmd_diagnose_norms,
    "swap-test": cmd_swap_test,
    "validate-manifest": cmd_validate_manifest,
}


def main(argv: Optional[List[str]] = None) -> int:
    """主函数，返回进程退出码"""
    # 加载 .env 中的 RADAR_EVAL_* 变量
    load_dotenv()

    # 解析命令行参数
    args = parse_args(argv)

    # 配置日志
    setup_logger(args.log_level or os.getenv("RADAR_EVAL_LOG_LEVEL", "INFO"))
    logger = logging.getLogger(__name__)

    try:
        config = load_run_config(args.config, config_overrides(args))
        orchestrator = Orchestrator(config)
        code = COMMANDS[args.command](orchestrator, args)
        orchestrator.cleanup()
        return code
    except EvalToolkitError as e:
        logger.error(str(e))
        return e.exit_code
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} 失败: {str(e)}")
        return EXIT_INPUT
    except Exception as e:
        logger.exception(f"{args.command} 发生内部错误: {str(e)}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
