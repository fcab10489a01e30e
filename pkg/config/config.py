import hashlib
import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
from dotenv import dotenv_values

from utils.errors import ConfigError

ENV_PREFIX = "RADAR_EVAL_"

# 雷达网格默认值：方位角来自雷达视场，距离与多普勒范围为声明的约定值
RANGE_MIN_M = float(os.getenv("RADAR_EVAL_RANGE_MIN_M", "0"))
RANGE_MAX_M = float(os.getenv("RADAR_EVAL_RANGE_MAX_M", "80"))
AZ_MIN_DEG = float(os.getenv("RADAR_EVAL_AZ_MIN_DEG", "-53"))
AZ_MAX_DEG = float(os.getenv("RADAR_EVAL_AZ_MAX_DEG", "53"))
DOPPLER_MIN_MPS = float(os.getenv("RADAR_EVAL_DOPPLER_MIN_MPS", "-32"))
DOPPLER_MAX_MPS = float(os.getenv("RADAR_EVAL_DOPPLER_MAX_MPS", "32"))

TESSERACT_SHAPE = (64, 256, 37, 107)

# 描述生成与评估默认值
TOP_K = 4
FOV_AZ_DEG = 53.0
FOV_RANGE_M = 80.0
SECTOR_EDGES_DEG = (7.5, 22.5, 40.0)
NORM_THRESHOLD = 2.0
LAYER_NORM_EPS = 1e-5
IDENTICAL_THRESHOLD = 0.5
MAX_SCAN_CHARS = 65536
MAX_OBJECTS = 256


@dataclass(frozen=True)
class RadarGridConfig:
    """雷达张量各物理轴的范围与分箱数

    所有坐标均采用分箱中心约定：min + (i + 0.5) * (max - min) / n。
    """
    range_min_m: float = RANGE_MIN_M
    range_max_m: float = RANGE_MAX_M
    az_min_deg: float = AZ_MIN_DEG
    az_max_deg: float = AZ_MAX_DEG
    doppler_min_mps: float = DOPPLER_MIN_MPS
    doppler_max_mps: float = DOPPLER_MAX_MPS
    doppler_bins: int = TESSERACT_SHAPE[0]
    range_bins: int = TESSERACT_SHAPE[1]
    elevation_bins: int = TESSERACT_SHAPE[2]
    azimuth_bins: int = TESSERACT_SHAPE[3]

    def validate(self) -> None:
        """检查每个轴 min < max 且分箱数 ≥ 1

        Raises:
            ConfigError: 网格配置无效
        """
        for name, lo, hi in (
            ("range", self.range_min_m, self.range_max_m),
            ("azimuth", self.az_min_deg, self.az_max_deg),
            ("doppler", self.doppler_min_mps, self.doppler_max_mps),
        ):
            if not np.isfinite(lo) or not np.isfinite(hi) or not lo < hi:
                raise ConfigError(f"grid {name} axis needs min < max, got {lo}..{hi}")
        for name in ("doppler_bins", "range_bins", "elevation_bins", "azimuth_bins"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"grid {name} must be >= 1")

    @property
    def tesseract_shape(self) -> Tuple[int, int, int, int]:
        return (self.doppler_bins, self.range_bins, self.elevation_bins, self.azimuth_bins)

    @property
    def cube_shape(self) -> Tuple[int, int, int]:
        return (self.doppler_bins, self.range_bins, self.azimuth_bins)

    def range_centers(self) -> np.ndarray:
        return _bin_centers(self.range_min_m, self.range_max_m, self.range_bins)

    def azimuth_centers(self) -> np.ndarray:
        return _bin_centers(self.az_min_deg, self.az_max_deg, self.azimuth_bins)

    def doppler_velocities(self) -> np.ndarray:
        return _bin_centers(self.doppler_min_mps, self.doppler_max_mps, self.doppler_bins)

    def to_sextuple(self) -> Tuple[float, ...]:
        return (self.range_min_m, self.range_max_m, self.az_min_deg,
                self.az_max_deg, self.doppler_min_mps, self.doppler_max_mps)

    @classmethod
    def from_sextuple(cls, values, **bins) -> "RadarGridConfig":
        """由 RT4D 元数据中的六元组与分箱数重建网格"""
        keys = ("range_min_m", "range_max_m", "az_min_deg", "az_max_deg",
                "doppler_min_mps", "doppler_max_mps")
        return cls(**{k: float(v) for k, v in zip(keys, values)}, **bins)


def _bin_centers(lo: float, hi: float, n: int) -> np.ndarray:
    step = (hi - lo) / n
    return lo + (np.arange(n, dtype=np.float64) + 0.5) * step


@dataclass(frozen=True)
class RunConfig:
    """一次运行的完整有效配置"""
    grid: RadarGridConfig = field(default_factory=RadarGridConfig)
    top_k: int = TOP_K
    fov_az_deg: float = FOV_AZ_DEG
    fov_range_m: float = FOV_RANGE_M
    sector_edges_deg: Tuple[float, float, float] = SECTOR_EDGES_DEG
    caption_format: str = "prose"
    variant: str = "5ch"
    vocabulary_path: Optional[str] = None
    class_level: bool = False
    oov_mode: str = "drop"
    stratify_keys: Tuple[str, ...] = ("weather",)
    norm_threshold: float = NORM_THRESHOLD
    layer_norm_eps: float = LAYER_NORM_EPS
    identical_threshold: float = IDENTICAL_THRESHOLD
    max_scan_chars: int = MAX_SCAN_CHARS
    max_objects: int = MAX_OBJECTS
    manifest_path: Optional[str] = None
    strict_manifest: bool = False
    # 以下为运行时设置，不影响输出内容，也不进入报告
    threads: int = 1
    progress: bool = True
    stamp: bool = False

    RUNTIME_KEYS = ("threads", "progress", "stamp")

    def validate(self) -> None:
        """检查配置取值与引用路径

        Raises:
            ConfigError: 配置无效
        """
        self.grid.validate()
        if self.top_k < 0:
            raise ConfigError(f"top_k must be >= 0, got {self.top_k}")
        if self.fov_az_deg <= 0 or self.fov_range_m <= 0:
            raise ConfigError("FOV limits must be positive")
        edges = self.sector_edges_deg
        if len(edges) != 3 or not 0 < edges[0] < edges[1] < edges[2] < self.fov_az_deg:
            raise ConfigError(f"sector edges must satisfy 0 < e1 < e2 < e3 < fov_az_deg, got {edges}")
        if self.caption_format not in ("prose", "structured", "both"):
            raise ConfigError(f"unsupported caption format: {self.caption_format}")
        if self.variant not in ("5ch", "66ch"):
            raise ConfigError(f"unsupported input variant: {self.variant}")
        if self.oov_mode not in ("drop", "penalize"):
            raise ConfigError(f"unsupported oov mode: {self.oov_mode}")
        for key in self.stratify_keys:
            if key not in STRATIFY_KEYS:
                raise ConfigError(f"unsupported stratify key: {key}")
        if self.norm_threshold <= 1.0:
            raise ConfigError("norm_threshold must be > 1")
        if self.layer_norm_eps <= 0:
            raise ConfigError("layer_norm_eps must be positive")
        if not 0.0 <= self.identical_threshold <= 1.0:
            raise ConfigError("identical_threshold must lie in [0, 1]")
        if self.max_scan_chars < 1 or self.max_objects < 1:
            raise ConfigError("parser limits must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for key in ("vocabulary_path", "manifest_path"):
            path = getattr(self, key)
            if path and not os.path.exists(path):
                raise ConfigError(f"{key} does not exist: {path}")

    def to_dict(self, include_runtime: bool = False) -> Dict[str, Any]:
        """返回扁平化的有效配置（键与配置文件一致）"""
        flat: Dict[str, Any] = {}
        for f in fields(self.grid):
            flat[f.name] = getattr(self.grid, f.name)
        for f in fields(self):
            if f.name == "grid":
                continue
            if not include_runtime and f.name in self.RUNTIME_KEYS:
                continue
            value = getattr(self, f.name)
            flat[f.name] = list(value) if isinstance(value, tuple) else value
        return flat

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


STRATIFY_KEYS = ("weather", "time_of_day", "road", "split", "zero_shot_weather")

_GRID_KEYS = {f.name for f in fields(RadarGridConfig)}
_RUN_KEYS = {f.name for f in fields(RunConfig) if f.name != "grid"}

_INT_KEYS = {"doppler_bins", "range_bins", "elevation_bins", "azimuth_bins",
             "top_k", "max_scan_chars", "max_objects", "threads"}
_BOOL_KEYS = {"class_level", "strict_manifest", "progress", "stamp"}
_FLOAT_TUPLE_KEYS = {"sector_edges_deg"}
_STR_TUPLE_KEYS = {"stratify_keys"}
_OPTIONAL_KEYS = {"vocabulary_path", "manifest_path"}
_FLOAT_KEYS = {"range_min_m", "range_max_m", "az_min_deg", "az_max_deg",
                "doppler_min_mps", "doppler_max_mps", "fov_az_deg", "fov_range_m",
                "norm_threshold", "layer_norm_eps", "identical_threshold"}


def _convert(key: str, value: Any) -> Any:
    """把配置文件/环境变量中的文本转换成字段类型"""
    if not isinstance(value, str):
        return value
    text = value.strip()
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _BOOL_KEYS:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if key in _FLOAT_TUPLE_KEYS:
            return tuple(float(part) for part in text.split(",") if part.strip())
        if key in _STR_TUPLE_KEYS:
            return tuple(part.strip() for part in text.split(",") if part.strip())
        if key in _OPTIONAL_KEYS:
            return text or None
        return text
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {value!r}")


def load_run_config(config_path: Optional[str] = None,
                    overrides: Optional[Mapping[str, Any]] = None,
                    environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """按优先级合并配置：默认值 < 环境变量 < 配置文件 < 命令行参数

    Args:
        config_path: 扁平 key=value 配置文件路径
        overrides: 命令行参数，值为 None 的键被忽略
        environ: 环境变量映射，默认为 os.environ

    Returns:
        RunConfig: 经过校验的有效配置

    Raises:
        ConfigError: 未知键、取值无效或配置文件不存在
    """
    environ = os.environ if environ is None else environ
    known = _GRID_KEYS | _RUN_KEYS
    values: Dict[str, Any] = {}

    for key in known:
        env_value = environ.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            values[key] = _convert(key, env_value)

    if config_path:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")
        for key, raw in dotenv_values(config_path).items():
            if key not in known:
                raise ConfigError(f"unknown config key: {key}", path=config_path)
            values[key] = _convert(key, raw if raw is not None else "")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        values[key] = _convert(key, value)

    grid_values = {k: v for k, v in values.items() if k in _GRID_KEYS}
    run_values = {k: v for k, v in values.items() if k in _RUN_KEYS}
    config = RunConfig(grid=replace(RadarGridConfig(), **grid_values), **run_values)
    config.validate()
    return config
