import os
import tempfile
import unittest

from data.manifest import (
    Split,
    TimeOfDay,
    Weather,
    check_frames_resolve,
    dump_manifest,
    frames_of_split,
    load_manifest,
    weather_of_frame,
)
from data.validators import ManifestValidator
from tests.support import FIXTURE_MANIFEST, write_text
from utils.errors import (
    DuplicateSequence,
    MalformedManifest,
    SplitTotalMismatch,
    UnknownEnumValue,
    UnknownSequence,
)


class TestManifest(unittest.TestCase):
    """数据集清单测试"""

    def setUp(self):
        """测试前准备"""
        self.tmp = tempfile.TemporaryDirectory()
        self.manifest = load_manifest(FIXTURE_MANIFEST)

    def tearDown(self):
        """测试后清理"""
        self.tmp.cleanup()

    def _write(self, text: str) -> str:
        return write_text(os.path.join(self.tmp.name, "manifest.txt"), text)

    def test_fixture_loads(self):
        """测试清单夹具加载"""
        self.assertEqual(len(self.manifest), 19)
        self.assertEqual(self.manifest.schema_version, 1)

    def test_split_totals(self):
        """测试划分总帧数"""
        totals = self.manifest.split_totals()
        self.assertEqual(totals[Split.VAL], 1790)
        self.assertEqual(totals[Split.TEST], 2387)
        # 发布的训练集总数与逐序列求和相差 3 帧，两者都保留
        self.assertEqual(totals[Split.TRAIN], 7488)
        self.assertEqual(self.manifest.declared_totals[Split.TRAIN], 7491)
        self.assertEqual(self.manifest.total_mismatches, ((Split.TRAIN, 7491, 7488),))
        self.assertEqual(len(self.manifest.sequences_of_split(Split.TRAIN)), 12)
        self.assertEqual(len(self.manifest.sequences_of_split("val")), 3)

    def test_strict_mode_rejects_total_mismatch(self):
        """测试 strict 模式下总数不一致报错"""
        with self.assertRaises(SplitTotalMismatch):
            load_manifest(FIXTURE_MANIFEST, strict=True)

    def test_zero_shot_sequence(self):
        """测试零样本天气序列"""
        seq = self.manifest.get(38)
        self.assertEqual(seq.frame_count, 597)
        self.assertIs(seq.weather, Weather.FOG)
        self.assertEqual(seq.road, "Mountain")
        self.assertIs(seq.time_of_day, TimeOfDay.DAY)
        self.assertIs(seq.split, Split.TEST)
        self.assertTrue(seq.zero_shot_weather)
        zero_shot = sorted(s.seq_id for s in self.manifest.sequences if s.zero_shot_weather)
        self.assertEqual(zero_shot, [38, 42])

    def test_duplicate_sequence(self):
        """测试重复序列号"""
        path = self._write("5|10|1|normal|Urban|day|train|0\n5|12|1|rain|Urban|day|val|0\n")
        with self.assertRaises(DuplicateSequence) as ctx:
            load_manifest(path)
        self.assertEqual(ctx.exception.line, 2)

    def test_unknown_weather(self):
        """测试未知天气"""
        path = self._write("5|10|1|hail|Urban|day|train|0\n")
        with self.assertRaises(UnknownEnumValue):
            load_manifest(path)

    def test_malformed_rows(self):
        """测试字段数与数值错误"""
        for text in ("5|10|1|normal|Urban|day|train\n",
                     "5|ten|1|normal|Urban|day|train|0\n",
                     "5|0|1|normal|Urban|day|train|0\n",
                     "#@bogus|1\n"):
            with self.subTest(text=text):
                with self.assertRaises(MalformedManifest):
                    load_manifest(self._write(text))

    def test_enum_spellings(self):
        """测试枚举的不同写法"""
        path = self._write("7|3|0|LightSnow|Urban|Night|Test|1\n8|3|0|heavy snow|Urban|day|test|0\n")
        manifest = load_manifest(path)
        self.assertIs(manifest.get(7).weather, Weather.LIGHT_SNOW)
        self.assertIs(manifest.get(8).weather, Weather.HEAVY_SNOW)

    def test_frames_of_split(self):
        """测试划分帧列表"""
        test_frames = frames_of_split(self.manifest, Split.TEST)
        self.assertEqual(len(test_frames), 2387)
        self.assertEqual({seq for seq, _ in test_frames}, {18, 38, 42, 46})
        self.assertEqual(test_frames[0], (18, 0))
        self.assertEqual(test_frames[-1], (46, 597))
        self.assertEqual(test_frames, sorted(test_frames))
        self.assertEqual(len(frames_of_split(self.manifest, "val")), 1790)

    def test_empty_manifest(self):
        """测试空清单"""
        manifest = load_manifest(self._write("# nothing here\n"))
        self.assertEqual(frames_of_split(manifest, Split.TEST), [])

    def test_weather_of_frame(self):
        """测试按序列查询天气"""
        self.assertIs(weather_of_frame(self.manifest, 46), Weather.HEAVY_SNOW)
        self.assertIs(weather_of_frame(self.manifest, 1), Weather.NORMAL)
        self.assertIs(weather_of_frame(self.manifest, "42_17"), Weather.LIGHT_SNOW)
        with self.assertRaises(UnknownSequence):
            weather_of_frame(self.manifest, 99)

    def test_check_frames_resolve(self):
        """测试帧键解析到序列"""
        check_frames_resolve(self.manifest, ["18_0", "18_593", "46_597"])
        with self.assertRaises(UnknownSequence):
            check_frames_resolve(self.manifest, ["18_594"])
        with self.assertRaises(UnknownSequence):
            check_frames_resolve(self.manifest, ["99_0"])

    def test_dump_is_idempotent(self):
        """测试规范化序列化幂等"""
        first = dump_manifest(self.manifest)
        reloaded = load_manifest(self._write(first))
        self.assertEqual(dump_manifest(reloaded), first)
        self.assertEqual(reloaded.sequences_of_split(Split.TEST), self.manifest.sequences_of_split(Split.TEST))

    def test_validator(self):
        """测试清单验证器"""
        validator = ManifestValidator()
        self.assertFalse(validator.validate(self.manifest))
        consistent = load_manifest(self._write("#@total|train|10\n5|10|1|normal|Urban|day|train|0\n"))
        self.assertTrue(validator.validate(consistent))
        self.assertEqual(validator.check_totals(consistent), [])


if __name__ == '__main__':
    unittest.main()
