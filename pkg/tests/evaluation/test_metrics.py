import unittest

import numpy as np

from agents.captioning.geometry import BearingSector, SceneObject
from agents.evaluation.metrics import (
    FrameEval,
    aggregate,
    group_label,
    hallucination_rate,
    match_frame,
    per_class_metrics,
    stratify,
)
from agents.parsing.prediction import ParsedPrediction, ParseStatus, PredObject
from data.manifest import TimeOfDay, Weather, load_manifest
from tests.support import FIXTURE_MANIFEST
from utils.errors import EmptyEvaluation, UnknownSequence


def pred(frame_key: str, *objects: PredObject, oov_count: int = 0, stated_count=None) -> ParsedPrediction:
    return ParsedPrediction(frame_key, list(objects), ParseStatus.OK, 0, stated_count, oov_count)


def gt(*items) -> list:
    return [SceneObject(name, range_m, azimuth) for name, range_m, azimuth in items]


class TestMatchFrame(unittest.TestCase):
    """单帧匹配测试"""

    def test_multiset_example(self):
        """测试类别多重集交集"""
        e = match_frame(pred("1_0", PredObject("sedan", 10.0), PredObject("bus or truck", 20.0),
                             PredObject("bus or truck", 30.0)),
                        gt(("sedan", 11.0, 0.0), ("sedan", 25.0, 0.0), ("bus or truck", 33.0, 0.0)))
        self.assertEqual((e.tp, e.pred_count, e.gt_count), (2, 3, 3))
        self.assertEqual(len(e.matched_pairs), e.tp)
        self.assertEqual(e.hallucinated_count, 0)
        metrics = aggregate([e])
        self.assertAlmostEqual(metrics.precision, 2 / 3)
        self.assertAlmostEqual(metrics.recall, 2 / 3)

    def test_perfect_prediction(self):
        """测试完全正确的预测"""
        truth = gt(("sedan", 13.0, -9.0), ("pedestrian", 5.0, 0.0), ("bicycle", 30.0, 25.0))
        p = pred("1_0", *[PredObject(o.class_name, o.range_m, o.azimuth_deg, o.sector) for o in truth])
        e = match_frame(p, truth)
        self.assertEqual(e.tp, 3)
        self.assertEqual(e.hallucinated_count, 0)
        self.assertEqual(e.range_abs_errors, [0.0, 0.0, 0.0])
        self.assertEqual(e.az_abs_errors, [0.0, 0.0, 0.0])
        m = aggregate([e, e])
        self.assertEqual((m.precision, m.recall, m.f1, m.hallucination_rate), (1.0, 1.0, 1.0, 0.0))
        self.assertEqual((m.range_mae_m, m.azimuth_mae_deg, m.bearing_acc), (0.0, 0.0, 1.0))

    def test_range_errors_over_sorted_pairs(self):
        """测试距离误差按排序配对计算"""
        e = match_frame(pred("1_0", PredObject("sedan", 30.0), PredObject("sedan", 10.0)),
                        gt(("sedan", 12.0, 0.0), ("sedan", 28.0, 0.0)))
        self.assertEqual(sorted(e.range_abs_errors), [2.0, 2.0])

    def test_spatial_fields_only_when_both_sides_have_them(self):
        """测试方位角与扇区只在双方都有时计入"""
        e = match_frame(pred("1_0", PredObject("sedan", 10.0, sector=BearingSector.LEFT),
                             PredObject("bicycle", 20.0, azimuth_deg=-3.0)),
                        gt(("sedan", 10.0, 30.0), ("bicycle", 20.0, 1.0)))
        self.assertEqual(e.az_abs_errors, [4.0])
        self.assertEqual((e.sector_hits, e.sector_total), (1, 1))

        m = aggregate([match_frame(pred("1_0", PredObject("sedan", 10.0)), gt(("sedan", 12.0, 0.0)))])
        self.assertIsNone(m.azimuth_mae_deg)
        self.assertIsNone(m.bearing_acc)
        self.assertEqual(m.range_mae_m, 2.0)

    def test_hallucination(self):
        """测试幻觉率"""
        half = match_frame(pred("1_0", PredObject("sedan", 1.0), PredObject("pedestrian", 2.0)),
                           gt(("sedan", 1.0, 0.0)))
        self.assertEqual(hallucination_rate([half]), 0.5)

        no_gt = match_frame(pred("1_1", PredObject("sedan"), PredObject("bus or truck"), PredObject("bicycle")), [])
        self.assertEqual(hallucination_rate([no_gt]), 1.0)

        subset = match_frame(pred("1_2", PredObject("sedan", 3.0)), gt(("sedan", 3.0, 0.0), ("bicycle", 4.0, 0.0)))
        self.assertEqual(hallucination_rate([subset]), 0.0)

        empty = match_frame(pred("1_3"), gt(("sedan", 3.0, 0.0)))
        self.assertEqual(hallucination_rate([empty]), 0.0)

    def test_class_level_hallucination(self):
        """测试类别级幻觉率"""
        e = match_frame(pred("1_0", PredObject("pedestrian", 1.0), PredObject("pedestrian", 2.0),
                             PredObject("sedan", 3.0)),
                        gt(("sedan", 3.0, 0.0)))
        self.assertAlmostEqual(hallucination_rate([e]), 2 / 3)
        self.assertEqual(hallucination_rate([e], class_level=True), 0.5)
        m = aggregate([e], class_level=True)
        self.assertEqual(m.hallucination_rate, 0.5)
        self.assertAlmostEqual(m.hallucination_instance, 2 / 3)

    def test_oov_modes(self):
        """测试词表外提及的两种计分方式"""
        p = pred("1_0", PredObject("sedan", 3.0), oov_count=2)
        truth = gt(("sedan", 3.0, 0.0))
        dropped = match_frame(p, truth, "drop")
        penalized = match_frame(p, truth, "penalize")
        self.assertEqual((dropped.pred_count, dropped.hallucinated_count), (1, 0))
        self.assertEqual((penalized.pred_count, penalized.hallucinated_count), (3, 2))
        self.assertAlmostEqual(aggregate([penalized]).precision, 1 / 3)
        with self.assertRaises(ValueError):
            match_frame(p, truth, "ignore")

    def test_count_error(self):
        """测试声明数量误差"""
        e = match_frame(pred("1_0", stated_count=5), [], gt_stated_count=3)
        self.assertEqual(e.count_abs_error, 2)
        self.assertEqual(aggregate([e]).count_mae, 2.0)
        self.assertIsNone(match_frame(pred("1_0"), [], gt_stated_count=3).count_abs_error)

    def test_permutation_invariance(self):
        """测试预测对象顺序不影响指标"""
        rng = np.random.default_rng(21)
        names = ["sedan", "bicycle", "pedestrian"]
        objects = [PredObject(names[int(rng.integers(0, 3))], float(rng.uniform(1, 80)),
                              float(rng.uniform(-50, 50))) for _ in range(8)]
        truth = [SceneObject(names[int(rng.integers(0, 3))], float(rng.uniform(1, 80)),
                             float(rng.uniform(-50, 50))) for _ in range(6)]
        expected = aggregate([match_frame(pred("1_0", *objects), truth)])
        for _ in range(10):
            shuffled = [objects[i] for i in rng.permutation(len(objects))]
            self.assertEqual(aggregate([match_frame(pred("1_0", *shuffled), truth)]), expected)


class TestAggregate(unittest.TestCase):
    """汇总指标测试"""

    def test_micro_pooling(self):
        """测试微平均"""
        m = aggregate([FrameEval("1_0", 1, 2, 2), FrameEval("1_1", 1, 1, 2)])
        self.assertAlmostEqual(m.precision, 2 / 3)
        self.assertAlmostEqual(m.recall, 1 / 2)
        self.assertAlmostEqual(m.f1, 4 / 7)
        self.assertEqual(m.frame_count, 2)

    def test_degenerate_denominators(self):
        """测试分母为零的约定"""
        no_pred = aggregate([FrameEval("1_0", 0, 0, 3)])
        self.assertEqual((no_pred.precision, no_pred.recall, no_pred.f1), (0.0, 0.0, 0.0))
        self.assertTrue(no_pred.precision_undefined)
        self.assertFalse(no_pred.recall_undefined)

        nothing = aggregate([FrameEval("1_0", 0, 0, 0)])
        self.assertEqual(nothing.recall, 1.0)
        self.assertTrue(nothing.recall_undefined)
        self.assertEqual(nothing.hallucination_rate, 0.0)

        with self.assertRaises(EmptyEvaluation):
            aggregate([])
        with self.assertRaises(EmptyEvaluation):
            hallucination_rate([])

    def test_bounds_and_monotonicity(self):
        """测试取值范围与增加幻觉预测时精确率不升"""
        rng = np.random.default_rng(4)
        for _ in range(200):
            evals = []
            for i in range(int(rng.integers(1, 6))):
                p, g = int(rng.integers(0, 6)), int(rng.integers(0, 6))
                evals.append(FrameEval(f"1_{i}", int(rng.integers(0, min(p, g) + 1)), p, g,
                                       hallucinated_count=0, pred_class_count=p))
            m = aggregate(evals)
            for value in (m.precision, m.recall, m.f1, m.hallucination_rate):
                self.assertTrue(0.0 <= value <= 1.0)
            self.assertLessEqual(m.f1, max(m.precision, m.recall) + 1e-12)

            extra = FrameEval("2_0", 0, 1, 0, hallucinated_count=1, pred_class_count=1,
                              hallucinated_class_count=1)
            self.assertLessEqual(aggregate(evals + [extra]).precision, m.precision)

    def test_per_class_order(self):
        """测试按类别汇总的顺序"""
        e = match_frame(pred("1_0", PredObject("pedestrian", 1.0), PredObject("sedan", 2.0)),
                        gt(("sedan", 2.0, 0.0), ("sedan", 9.0, 0.0), ("bicycle", 4.0, 0.0)))
        per_class = per_class_metrics([e])
        self.assertEqual(list(per_class), ["sedan", "bicycle", "pedestrian"])
        self.assertEqual((per_class["sedan"].tp, per_class["sedan"].recall), (1, 0.5))
        self.assertEqual(per_class["pedestrian"].precision, 0.0)
        self.assertEqual(per_class["bicycle"].recall, 0.0)


class TestStratify(unittest.TestCase):
    """分层汇总测试"""

    def setUp(self):
        """测试前准备"""
        self.manifest = load_manifest(FIXTURE_MANIFEST)
        truth = gt(("sedan", 10.0, 0.0))
        self.evals = [
            match_frame(pred(key, PredObject("sedan", 10.0)), truth)
            for key in ("46_597", "18_0", "42_10", "38_3", "18_1")
        ]

    def test_by_weather(self):
        """测试按天气分组"""
        strata = stratify(self.evals, self.manifest)
        self.assertEqual(list(strata), [Weather.NORMAL, Weather.FOG, Weather.LIGHT_SNOW, Weather.HEAVY_SNOW])
        self.assertEqual(strata[Weather.NORMAL].frame_count, 2)
        self.assertEqual([group_label(k) for k in strata], ["Normal", "Fog", "LightSnow", "HeavySnow"])

    def test_by_time_of_day(self):
        """测试按时段分组"""
        strata = stratify(self.evals, self.manifest, "time_of_day")
        self.assertEqual(list(strata), [TimeOfDay.DAY, TimeOfDay.NIGHT])
        self.assertEqual(strata[TimeOfDay.DAY].frame_count, 4)

    def test_boolean_and_single_group(self):
        """测试布尔分组与单一分组"""
        strata = stratify(self.evals, self.manifest, "zero_shot_weather")
        self.assertEqual(list(strata), [False, True])
        self.assertEqual([group_label(k) for k in strata], ["no", "yes"])
        single = stratify(self.evals[1:2], self.manifest, "weather")
        self.assertEqual(single[Weather.NORMAL], aggregate(self.evals[1:2]))

    def test_unknown_sequence(self):
        """测试帧不在清单中"""
        stray = match_frame(pred("99_0"), [])
        with self.assertRaises(UnknownSequence):
            stratify(self.evals + [stray], self.manifest)


if __name__ == '__main__':
    unittest.main()
