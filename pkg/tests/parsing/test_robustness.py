import time
import unittest
from collections import Counter

import numpy as np

from agents.captioning.generators import gen_prose, gen_structured, round_half_away
from agents.captioning.geometry import select_topk
from agents.parsing.prediction import ParseStatus
from agents.parsing.prose import parse_prose
from agents.parsing.structured import parse_structured
from tests.support import best_time, random_scene

FUZZ_PIECES = [
    "{", "}", "[", "]", '"', "\\", ",", ":", " ", "\n", "\t", ".", "-", "5", "13.2",
    "objects", '"objects"', '"class"', "sedan", "truck", "bus or", "at", " m", "meters",
    "straight ahead", "far to the", "left", "There are", "no", "é", "中文", "\U0001f697",
]


class TestRoundTrip(unittest.TestCase):
    """生成后再解析的往返性质测试"""

    def test_random_scenes(self):
        """测试 1000 个随机场景的往返一致性"""
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        for _ in range(1000):
            scene = random_scene(rng)
            objs = select_topk(scene, 4)
            total = len(scene)

            prose = parse_prose(gen_prose(objs, total).text)
            self.assertIs(prose.status, ParseStatus.OK)
            self.assertEqual(prose.stated_count, total)
            self.assertEqual(Counter(o.class_name for o in prose.objects),
                             Counter(o.class_name for o in objs))
            for parsed, truth in zip(prose.objects, objs):
                self.assertEqual(parsed.class_name, truth.class_name)
                self.assertIs(parsed.sector, truth.sector)
                self.assertLessEqual(abs(parsed.range_m - truth.range_m), 0.5)

            structured = parse_structured(gen_structured(objs, total).text)
            self.assertIs(structured.status, ParseStatus.OK)
            self.assertEqual(
                [(o.class_name, o.azimuth_deg, o.range_m) for o in structured.objects],
                [(o.class_name, round_half_away(o.azimuth_deg), round_half_away(o.range_m)) for o in objs])
        self.assertLess(time.perf_counter() - start, 5.0)


class TestParserRobustness(unittest.TestCase):
    """解析器容错性测试"""

    def _random_text(self, rng: np.random.Generator) -> str:
        parts = []
        for _ in range(int(rng.integers(0, 40))):
            if rng.random() < 0.7:
                parts.append(FUZZ_PIECES[int(rng.integers(0, len(FUZZ_PIECES)))])
            else:
                code = int(rng.integers(1, 0xD7FF))
                parts.append(chr(code))
        return "".join(parts)

    def test_fuzz_never_raises(self):
        """测试 10000 个随机字符串只产生合法状态"""
        rng = np.random.default_rng(99)
        statuses = set(ParseStatus)
        for _ in range(10000):
            text = self._random_text(rng)
            for parser in (parse_prose, parse_structured):
                p = parser(text)
                self.assertIn(p.status, statuses)
                self.assertEqual(p.raw_length, len(text))
                if p.status is ParseStatus.UNPARSED:
                    self.assertEqual(p.objects, [])

    def test_deep_nesting(self):
        """测试深层嵌套不会触发递归错误"""
        for text in ("[" * 100000, "{" * 50000 + "}" * 50000):
            self.assertIs(parse_structured(text).status, ParseStatus.UNPARSED)
        # objects 数组已打开但没有完整元素
        opened = parse_structured('{"objects":' + "[" * 100000)
        self.assertIs(opened.status, ParseStatus.PARTIAL)
        self.assertEqual(opened.objects, [])

    def test_megabyte_inputs_are_fast(self):
        """测试 1 MB 对抗输入的解析耗时"""
        size = 1 << 20
        adversarial = [
            ("a sedan at " * (size // 11 + 1))[:size],
            ("at 1 m, " * (size // 8 + 1))[:size],
            "x" * size,
            '{"objects":[' + '{"class":"sedan","range_m":1},' * (size // 30),
            '{"' * (size // 2),
            "{" * size,
        ]
        for text in adversarial:
            for parser in (parse_prose, parse_structured):
                with self.subTest(parser=parser.__name__, head=text[:20]):
                    self.assertLess(best_time(lambda: parser(text)), 0.05)


if __name__ == '__main__':
    unittest.main()
