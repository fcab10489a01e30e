import os
import tempfile
import unittest

import numpy as np

from agents.preprocess import PreprocessAgent
from agents.preprocess.radar import InputTensor, InputVariant, Tesseract, read_tensor, write_tensor
from config.config import RadarGridConfig, RunConfig
from tests.support import write_text


class TestPreprocessAgent(unittest.TestCase):
    """预处理代理测试"""

    def setUp(self):
        """测试前准备"""
        self.tmp = tempfile.TemporaryDirectory()
        self.input_dir = os.path.join(self.tmp.name, "raw")
        self.output_dir = os.path.join(self.tmp.name, "out")
        os.makedirs(self.input_dir)
        self.grid = RadarGridConfig(doppler_bins=8, range_bins=10, elevation_bins=3, azimuth_bins=6)
        rng = np.random.default_rng(3)
        for name in ("18_0.rt4d", "18_1.rt4d"):
            data = rng.random(self.grid.tesseract_shape, dtype=np.float32)
            write_tensor(Tesseract(data), os.path.join(self.input_dir, name), self.grid)
        write_text(os.path.join(self.input_dir, "18_2.rt4d"), "not a tensor")
        write_text(os.path.join(self.input_dir, "notes.txt"), "ignored")

    def tearDown(self):
        """测试后清理"""
        self.tmp.cleanup()

    def _agent(self, threads: int = 1) -> PreprocessAgent:
        config = RunConfig(grid=self.grid, threads=threads, progress=False)
        return PreprocessAgent(config={"run_config": config})

    def test_corrupt_file_does_not_stop_batch(self):
        """测试损坏文件被记录而其余帧照常写出"""
        result = self._agent().run({"input_dir": self.input_dir, "output_dir": self.output_dir})
        self.assertEqual([os.path.basename(p) for p in result["written"]], ["18_0.rt4d", "18_1.rt4d"])
        self.assertEqual(len(result["errors"]), 1)
        self.assertTrue(result["errors"][0][0].endswith("18_2.rt4d"))

        tensor, grid = read_tensor(result["written"][0])
        self.assertIsInstance(tensor, InputTensor)
        self.assertIs(tensor.variant, InputVariant.FIVE_CH)
        self.assertEqual(tensor.data.shape, (5, 10, 6))
        self.assertEqual(grid.range_max_m, self.grid.range_max_m)

    def test_variant_from_task(self):
        """测试任务中指定 66ch 变体"""
        result = self._agent().run({"input_dir": self.input_dir, "output_dir": self.output_dir,
                                    "variant": "66ch"})
        tensor, _ = read_tensor(result["written"][1])
        self.assertEqual(tensor.data.shape, (10, 10, 6))

    def test_threads_do_not_change_output(self):
        """测试多线程输出与单线程逐字节一致"""
        single = self._agent(1).run({"input_dir": self.input_dir,
                                     "output_dir": os.path.join(self.tmp.name, "single")})
        multi = self._agent(4).run({"input_dir": self.input_dir,
                                    "output_dir": os.path.join(self.tmp.name, "multi")})
        for a, b in zip(single["written"], multi["written"]):
            with open(a, "rb") as fa, open(b, "rb") as fb:
                self.assertEqual(fa.read(), fb.read())

    def test_missing_input_dir(self):
        """测试输入目录不存在"""
        with self.assertRaises(ValueError):
            self._agent().run({"input_dir": os.path.join(self.tmp.name, "nope"),
                               "output_dir": self.output_dir})


if __name__ == '__main__':
    unittest.main()
