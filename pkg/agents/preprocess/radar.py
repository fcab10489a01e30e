import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from config.config import RadarGridConfig
from data.tensor_io import read_rt4d, write_rt4d
from agents.diagnostics.norms import TokenMatrix
from utils.errors import DimMismatch, InvalidTensor, NonPositiveRange

logger = logging.getLogger(__name__)


class InputVariant(Enum):
    """模型输入变体"""
    FIVE_CH = "5ch"
    SIXTY_SIX_CH = "66ch"

    @property
    def channels(self) -> int:
        return 5 if self is InputVariant.FIVE_CH else 66


FIVE_CH_SEMANTICS = (
    "total_r4_power", "mean_doppler_mps", "peak_doppler_mps", "range_m", "azimuth_deg",
)


def sixty_six_ch_semantics(doppler_bins: int = 64) -> Tuple[str, ...]:
    return tuple(f"doppler_bin_{i:02d}_r4_power" for i in range(doppler_bins)) + ("range_m", "azimuth_deg")


@dataclass(frozen=True)
class Tesseract:
    """4D 雷达功率张量，轴顺序 (Doppler, range, elevation, azimuth)"""
    data: np.ndarray

    def validate(self, grid: Optional[RadarGridConfig] = None) -> None:
        """检查形状与取值（有限且非负）

        Raises:
            DimMismatch: 形状与网格不符
            InvalidTensor: 存在非有限或负值
        """
        expected = (grid or RadarGridConfig()).tesseract_shape
        if self.data.shape != expected:
            raise DimMismatch(f"tesseract shape {self.data.shape} != {expected}")
        _check_power(self.data)


@dataclass(frozen=True)
class RACube:
    """俯仰维折叠后的 (Doppler, range, azimuth) 功率立方体"""
    data: np.ndarray

    def validate(self, grid: Optional[RadarGridConfig] = None) -> None:
        expected = (grid or RadarGridConfig()).cube_shape
        if self.data.shape != expected:
            raise DimMismatch(f"cube shape {self.data.shape} != {expected}")
        _check_power(self.data)


@dataclass(frozen=True)
class InputTensor:
    """模型输入张量，通道含义见 channel_semantics"""
    variant: InputVariant
    data: np.ndarray
    channel_semantics: Tuple[str, ...]


def _check_power(data: np.ndarray) -> None:
    if not np.isfinite(data).all():
        raise InvalidTensor("power tensor contains non-finite values")
    if (data < 0).any():
        raise InvalidTensor("power tensor contains negative values")


def read_tensor(path: str) -> Tuple[Union[Tesseract, RACube, InputTensor, TokenMatrix],
                                     RadarGridConfig]:
    """读取 RT4D 文件并按维度还原为对应类型

    Returns:
        (张量对象, 文件头中记录的网格)
    """
    data, sextuple = read_rt4d(path)
    if data.ndim == 2:
        return TokenMatrix(data), RadarGridConfig()
    if data.ndim == 4:
        d, r, e, a = data.shape
        grid = RadarGridConfig.from_sextuple(
            sextuple, doppler_bins=d, range_bins=r, elevation_bins=e, azimuth_bins=a)
        return Tesseract(data), grid
    lead, r, a = data.shape
    if lead in (5, 66):
        variant = InputVariant.FIVE_CH if lead == 5 else InputVariant.SIXTY_SIX_CH
        doppler_bins = 64 if lead == 5 else lead - 2
        grid = RadarGridConfig.from_sextuple(
            sextuple, doppler_bins=doppler_bins, range_bins=r, azimuth_bins=a)
        semantics = FIVE_CH_SEMANTICS if lead == 5 else sixty_six_ch_semantics(doppler_bins)
        return InputTensor(variant, data, semantics), grid
    grid = RadarGridConfig.from_sextuple(sextuple, doppler_bins=lead, range_bins=r, azimuth_bins=a)
    return RACube(data), grid


def write_tensor(tensor: Union[Tesseract, RACube, InputTensor, TokenMatrix], path: str,
                 grid: Optional[RadarGridConfig] = None) -> None:
    """写出张量，雷达张量在元数据区记录网格"""
    sextuple = (0.0,) * 6 if isinstance(tensor, TokenMatrix) else (grid or RadarGridConfig()).to_sextuple()
    write_rt4d(path, tensor.data, sextuple)


def elevation_max_project(tesseract: Tesseract) -> RACube:
    """沿俯仰轴取最大功率：out[d,r,a] = max_e in[d,r,e,a]"""
    return RACube(np.max(tesseract.data, axis=2))


def r4_gain(range_m: np.ndarray, range_max_m: float) -> np.ndarray:
    """R⁴ 补偿系数，按 range_max_m⁴ 归一化，在最大量程处恰为 1"""
    return (np.asarray(range_m, dtype=np.float64) / range_max_m) ** 4


def r4_compensate(cube: RACube, grid: RadarGridConfig) -> RACube:
    """R⁴ 距离补偿：out[d,r,a] = in[d,r,a] · (range_m(r) / range_max_m)⁴

    Raises:
        NonPositiveRange: 存在距离 ≤ 0 的分箱
    """
    ranges = grid.range_centers()
    if grid.range_max_m <= 0 or (ranges <= 0).any():
        raise NonPositiveRange(
            f"range bins must be positive, grid spans {grid.range_min_m}..{grid.range_max_m} m")
    gain = r4_gain(ranges, grid.range_max_m).astype(np.float32)
    return RACube(cube.data * gain[np.newaxis, :, np.newaxis])


def doppler_aggregate(cube: RACube, grid: RadarGridConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """多普勒聚合：总功率、功率加权平均速度、峰值速度

    零功率单元的平均速度与峰值速度均定义为 0；argmax 并列时取最低多普勒分箱。

    Returns:
        (total, mean_vel, peak_vel)，每个形状为 (range, azimuth)
    """
    power = cube.data
    velocities = grid.doppler_velocities()
    if power.shape[0] != velocities.shape[0]:
        raise DimMismatch(f"cube has {power.shape[0]} Doppler bins, grid declares {velocities.shape[0]}")

    total = power.sum(axis=0, dtype=np.float64)
    weighted = np.tensordot(velocities, power.astype(np.float64, copy=False), axes=(0, 0))
    occupied = total > 0
    mean_vel = np.zeros_like(total)
    np.divide(weighted, total, out=mean_vel, where=occupied)

    peak_vel = velocities[np.argmax(power, axis=0)]
    peak_vel = np.where(occupied, peak_vel, 0.0)

    return total.astype(np.float32), mean_vel.astype(np.float32), peak_vel.astype(np.float32)


def coordinate_channels(grid: RadarGridConfig) -> Tuple[np.ndarray, np.ndarray]:
    """距离（米）与方位角（度）坐标平面，形状 (range, azimuth)"""
    ranges = grid.range_centers()
    azimuths = grid.azimuth_centers()
    range_plane = np.broadcast_to(ranges[:, np.newaxis], (grid.range_bins, grid.azimuth_bins))
    az_plane = np.broadcast_to(azimuths[np.newaxis, :], (grid.range_bins, grid.azimuth_bins))
    return range_plane.astype(np.float32), az_plane.astype(np.float32)


def build_input(cube: RACube, grid: RadarGridConfig,
                variant: Union[str, InputVariant] = InputVariant.FIVE_CH) -> InputTensor:
    """补偿、聚合（或保留全部多普勒分箱）并追加坐标通道

    俯仰最大投影由调用方先行完成。
    """
    variant = InputVariant(variant)
    if cube.data.shape[1:] != (grid.range_bins, grid.azimuth_bins):
        raise DimMismatch(f"cube shape {cube.data.shape} does not match grid {grid.cube_shape}")
    compensated = r4_compensate(cube, grid)
    range_plane, az_plane = coordinate_channels(grid)

    if variant is InputVariant.FIVE_CH:
        total, mean_vel, peak_vel = doppler_aggregate(compensated, grid)
        data = np.stack([total, mean_vel, peak_vel, range_plane, az_plane])
        semantics = FIVE_CH_SEMANTICS
    else:
        data = np.concatenate(
            [compensated.data.astype(np.float32, copy=False), range_plane[np.newaxis], az_plane[np.newaxis]])
        semantics = sixty_six_ch_semantics(compensated.data.shape[0])
    return InputTensor(variant, data, semantics)


def preprocess_frame(tesseract: Tesseract, grid: RadarGridConfig,
                     variant: Union[str, InputVariant] = InputVariant.FIVE_CH) -> InputTensor:
    """完整预处理链：俯仰最大投影 → R⁴ 补偿 → 多普勒聚合 → 坐标通道"""
    return build_input(elevation_max_project(tesseract), grid, variant)
