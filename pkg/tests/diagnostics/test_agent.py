import os
import tempfile
import unittest

import numpy as np

from agents.base import AgentState
from agents.captioning.generators import CaptionFormat
from agents.diagnostics.agent import DiagnosticsAgent
from agents.diagnostics.norms import TokenMatrix
from agents.preprocess.radar import write_tensor
from config.config import RunConfig
from data.captions import CaptionRecord, write_captions
from data.tensor_io import write_rt4d
from utils.errors import DimMismatch


class TestDiagnosticsAgent(unittest.TestCase):
    """诊断代理测试"""

    def setUp(self):
        """测试前准备"""
        self.tmp = tempfile.TemporaryDirectory()
        self.agent = DiagnosticsAgent(config={"run_config": RunConfig(progress=False)})
        self.rng = np.random.default_rng(9)

    def tearDown(self):
        """测试后清理"""
        self.tmp.cleanup()

    def _path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def _tokens(self, name: str, n: int, d: int, scale: float) -> str:
        data = self.rng.normal(size=(n, d))
        data /= np.linalg.norm(data, axis=1, keepdims=True)
        write_tensor(TokenMatrix((data * scale).astype(np.float32)), self._path(name))
        return self._path(name)

    def test_norms(self):
        """测试投影 token 范数过大被标记，并给出 LayerNorm 对照"""
        result = self.agent.run({"kind": "norms",
                                 "tokens": self._tokens("tokens.rt4d", 16, 64, 40.0),
                                 "reference": self._tokens("ref.rt4d", 32, 64, 1.0)})
        raw, after = result["raw"], result["after_layer_norm"]
        self.assertAlmostEqual(raw.ratio, 40.0, places=3)
        self.assertTrue(raw.flagged)
        # LayerNorm 输出的 token 范数约为 √d
        self.assertAlmostEqual(after.mean_l2, 8.0, places=2)

    def test_norms_rejects_non_matrix(self):
        """测试非二维文件"""
        cube = self._path("cube.rt4d")
        write_rt4d(cube, np.zeros((4, 8, 8), dtype=np.float32), (0.0,) * 6)
        with self.assertRaises(DimMismatch):
            self.agent.run({"kind": "norms", "tokens": cube,
                            "reference": self._tokens("ref.rt4d", 4, 8, 1.0)})

    def test_swap(self):
        """测试输入替换"""
        real = [CaptionRecord(f"2_{i}", CaptionFormat.PROSE, f"There is a sedan ahead at {i + 5} m.")
                for i in range(4)]
        same = self._path("same.tsv")
        write_captions(self._path("real.tsv"), real)
        write_captions(same, real)
        result = self.agent.run({"kind": "swap", "real": self._path("real.tsv"), "zeros": same, "noise": same})
        report = result["blindness"]
        self.assertTrue(report.flagged)
        self.assertEqual(report.frame_count, 4)
        self.assertIs(self.agent.state, AgentState.COMPLETED)
        self.assertTrue(self.agent.state.finished)
        self.agent.cleanup()
        self.assertIs(self.agent.state, AgentState.IDLE)

    def test_unknown_kind(self):
        """测试未知诊断类型"""
        with self.assertRaises(ValueError):
            self.agent.run({"kind": "attention"})
        with self.assertRaises(ValueError):
            self.agent.run({"kind": "swap", "real": "a.tsv"})


if __name__ == '__main__':
    unittest.main()
