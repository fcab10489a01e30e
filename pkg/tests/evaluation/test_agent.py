import os
import tempfile
import unittest

import numpy as np

from agents.captioning.generators import CaptionFormat, gen_prose
from agents.captioning.geometry import SceneObject, select_topk
from agents.evaluation.agent import EvaluationAgent
from agents.parsing.agent import ParseAgent
from config.config import RunConfig
from data.captions import CaptionRecord, write_captions
from data.manifest import Split, Weather, format_frame_key, frames_of_split, load_manifest
from tests.support import EVAL_A_GT, EVAL_A_PRED, FIXTURE_MANIFEST, best_time, random_scene, write_text
from utils.errors import KeyMismatch


class TestEvaluationAgent(unittest.TestCase):
    """评估代理测试"""

    def setUp(self):
        """测试前准备"""
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        """测试后清理"""
        self.tmp.cleanup()

    def _agent(self, **overrides) -> EvaluationAgent:
        values = dict(progress=False, stratify_keys=("weather", "time_of_day"))
        values.update(overrides)
        return EvaluationAgent(config={"run_config": RunConfig(**values)})

    def test_prose_fixture(self):
        """测试自然语言描述的评估结果"""
        results = self._agent().run({"gt": EVAL_A_GT, "pred": EVAL_A_PRED, "manifest": FIXTURE_MANIFEST})
        self.assertEqual(list(results), ["prose"])
        overall = results["prose"]["overall"]
        self.assertEqual((overall.tp, overall.pred_count, overall.gt_count), (3, 5, 4))
        self.assertAlmostEqual(overall.precision, 0.6)
        self.assertAlmostEqual(overall.recall, 0.75)
        self.assertAlmostEqual(overall.f1, 2 / 3)
        self.assertAlmostEqual(overall.range_mae_m, 1.0)
        self.assertEqual(overall.bearing_acc, 1.0)
        self.assertIsNone(overall.azimuth_mae_deg)
        self.assertAlmostEqual(overall.hallucination_rate, 0.2)
        self.assertEqual(overall.count_mae, 1 / 3)

        weather = results["prose"]["strata"]["weather"]
        self.assertEqual(list(weather), [Weather.NORMAL, Weather.FOG, Weather.HEAVY_SNOW])
        self.assertEqual(weather[Weather.FOG].f1, 1.0)
        self.assertEqual(weather[Weather.HEAVY_SNOW].hallucination_rate, 1.0)
        self.assertTrue(weather[Weather.HEAVY_SNOW].recall_undefined)
        self.assertEqual(len(results["prose"]["strata"]["time_of_day"]), 2)

    def test_both_formats(self):
        """测试同时评估两种格式"""
        results = self._agent(caption_format="both").run({"gt": EVAL_A_GT, "pred": EVAL_A_PRED})
        self.assertEqual(list(results), ["prose", "structured"])
        structured = results["structured"]["overall"]
        self.assertEqual((structured.tp, structured.pred_count, structured.gt_count), (3, 3, 4))
        self.assertEqual(structured.precision, 1.0)
        self.assertAlmostEqual(structured.range_mae_m, 2 / 3)
        self.assertAlmostEqual(structured.azimuth_mae_deg, 1.0)
        self.assertIsNone(structured.bearing_acc)
        self.assertEqual(results["structured"]["strata"], {})

    def test_pred_parsed(self):
        """测试使用已解析的预测"""
        parsed = os.path.join(self.tmp.name, "pred.jsonl")
        ParseAgent(config={"run_config": RunConfig(progress=False)}).run(
            {"captions": EVAL_A_PRED, "output": parsed, "format": "structured"})
        agent = self._agent(caption_format="structured")
        from_parsed = agent.run({"gt": EVAL_A_GT, "pred_parsed": parsed})
        from_text = agent.run({"gt": EVAL_A_GT, "pred": EVAL_A_PRED})
        self.assertEqual(from_parsed["structured"]["overall"], from_text["structured"]["overall"])

        with self.assertRaises(ValueError):
            self._agent(caption_format="both").run({"gt": EVAL_A_GT, "pred_parsed": parsed})

    def test_key_mismatch(self):
        """测试预测与真值帧不一致"""
        pred = write_text(os.path.join(self.tmp.name, "pred.tsv"),
                          "18_0\tprose\tThere are no objects.\n99_1\tprose\tThere are no objects.\n")
        with self.assertRaises(KeyMismatch):
            self._agent().run({"gt": EVAL_A_GT, "pred": pred})

    def _write_split(self, rng: np.random.Generator):
        manifest = load_manifest(FIXTURE_MANIFEST)
        gt_records, pred_records = [], []
        for seq, index in frames_of_split(manifest, Split.TEST):
            key = format_frame_key(seq, index)
            scene = random_scene(rng)
            noisy = [SceneObject(o.class_name, o.range_m + float(rng.normal(0, 2)), o.azimuth_deg)
                     for o in scene if rng.random() < 0.8]
            noisy = [o for o in noisy if o.range_m > 0]
            gt_records.append(CaptionRecord(key, CaptionFormat.PROSE,
                                            gen_prose(select_topk(scene, 4), len(scene)).text))
            pred_records.append(CaptionRecord(key, CaptionFormat.PROSE,
                                              gen_prose(select_topk(noisy, 4), len(noisy)).text))
        gt_path = os.path.join(self.tmp.name, "split_gt.tsv")
        pred_path = os.path.join(self.tmp.name, "split_pred.tsv")
        write_captions(gt_path, gt_records)
        write_captions(pred_path, pred_records)
        return gt_path, pred_path

    def test_test_split_performance(self):
        """测试 2387 帧评估耗时"""
        gt_path, pred_path = self._write_split(np.random.default_rng(0))
        agent = self._agent()
        task = {"gt": gt_path, "pred": pred_path, "manifest": FIXTURE_MANIFEST}
        self.assertLess(best_time(lambda: agent.run(task), repeats=2), 2.0)
        results = agent.run(task)
        self.assertEqual(results["prose"]["overall"].frame_count, 2387)
        self.assertEqual(sum(m.frame_count for m in results["prose"]["strata"]["weather"].values()), 2387)

    def test_threads_do_not_change_results(self):
        """测试多线程结果与单线程一致"""
        gt_path, pred_path = self._write_split(np.random.default_rng(1))
        task = {"gt": gt_path, "pred": pred_path, "manifest": FIXTURE_MANIFEST}
        single = self._agent(threads=1).run(task)["prose"]
        multi = self._agent(threads=4).run(task)["prose"]
        self.assertEqual(single["overall"], multi["overall"])
        self.assertEqual(single["strata"], multi["strata"])
        self.assertEqual(single["per_class"], multi["per_class"])


if __name__ == '__main__':
    unittest.main()
