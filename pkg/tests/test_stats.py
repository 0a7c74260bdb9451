import json
import math

import pytest

from gazesim.controller import Method, RobotAction
from gazesim.harness import TrialRecord
from gazesim.situation import SITUATIONS, ViewingSituation
from gazesim.stats import (
    SUMMARY_CSV_HEADER,
    CellStats,
    anova_two_way,
    bonferroni_pairwise,
    gaze_stats,
    overall_ratio,
    records_to_cells,
    success_ratio,
    to_jsonable,
    write_summary_csv,
)

CFOV = ViewingSituation.CFOV
NPFOV = ViewingSituation.NPFOV
FPFOV = ViewingSituation.FPFOV
OFOV = ViewingSituation.OFOV

_counter = [0]


def rec(method, situation, responded, gaze=None):
    _counter[0] += 1
    return TrialRecord(
        trial_id=_counter[0],
        method=method,
        situation=situation,
        responded=responded,
        responding_action=RobotAction.HT if responded else None,
        response_latency_s=1.0 if responded else None,
        gaze_time_s=(gaze if gaze is not None else 2.0) if responded else None,
        seed=_counter[0],
    )


def grid(success_counts, n):
    """Records for a full 4x4 design from per-cell success counts."""
    records = []
    for m in Method:
        for s in SITUATIONS:
            wins = success_counts[(m, s)]
            for i in range(n):
                records.append(rec(m, s, i < wins))
    return records


class TestSuccessRatio:
    def test_eleven_of_twelve(self):
        records = [rec(Method.M1, CFOV, i < 11) for i in range(12)]
        (cell,) = success_ratio(records)
        assert cell.n == 12
        assert cell.mean_success == pytest.approx(11.0 / 12.0)
        # Sample standard deviation of eleven ones and a zero.
        assert cell.sd_success == pytest.approx(0.2887, abs=5e-4)

    def test_cells_in_canonical_order(self):
        records = grid({(m, s): 1 for m in Method for s in SITUATIONS}, 2)
        cells = success_ratio(records)
        assert [(c.method, c.situation) for c in cells] == [
            (m, s) for m in Method for s in SITUATIONS
        ]

    def test_all_or_nothing_cells(self):
        records = [rec(Method.M2, OFOV, True) for _ in range(5)]
        (cell,) = success_ratio(records)
        assert cell.mean_success == 1.0
        assert cell.sd_success == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            success_ratio([])


class TestOverallRatio:
    def test_weights_situations_equally(self):
        counts = {
            (Method.M1, CFOV): 23,
            (Method.M1, NPFOV): 21,
            (Method.M1, FPFOV): 2,
            (Method.M1, OFOV): 2,
        }
        records = []
        for (m, s), wins in counts.items():
            records.extend(rec(m, s, i < wins) for i in range(25))
        # (0.92 + 0.84 + 0.08 + 0.08) / 4
        assert overall_ratio(records, Method.M1) == pytest.approx(0.48, abs=1e-12)

    def test_missing_situation_rejected(self):
        records = [rec(Method.M1, CFOV, True)]
        with pytest.raises(ValueError):
            overall_ratio(records, Method.M1)


class TestGazeStats:
    def test_population_moments(self):
        records = [
            rec(Method.M4, CFOV, True, gaze=1.0),
            rec(Method.M4, NPFOV, True, gaze=2.0),
            rec(Method.M4, OFOV, True, gaze=3.0),
            rec(Method.M4, FPFOV, False),
            rec(Method.M3, CFOV, True, gaze=9.0),
        ]
        mean, var = gaze_stats(records, Method.M4)
        assert mean == pytest.approx(2.0)
        assert var == pytest.approx(2.0 / 3.0)

    def test_single_success_has_zero_variance(self):
        records = [rec(Method.M3, CFOV, True, gaze=2.0)]
        mean, var = gaze_stats(records, Method.M3)
        assert (mean, var) == (2.0, 0.0)

    def test_no_successes_rejected(self):
        with pytest.raises(ValueError):
            gaze_stats([rec(Method.M3, CFOV, False)], Method.M3)


class TestAnova:
    def test_pure_method_effect_on_a_2x2_grid(self):
        cells = {
            (Method.M1, CFOV): [0.0, 0.0],
            (Method.M1, NPFOV): [0.0, 0.0],
            (Method.M2, CFOV): [1.0, 1.0],
            (Method.M2, NPFOV): [1.0, 1.0],
        }
        result = anova_two_way(cells)
        # SS_method = 2 (rows 0 and 1 around a grand mean of 0.5), zero
        # within-cell variance, so the F statistic diverges.
        assert result["method"]["F"] == math.inf
        assert result["method"]["p"] == 0.0
        assert result["method"]["eta_squared"] == pytest.approx(1.0)
        assert result["situation"]["F"] == 0.0
        assert result["situation"]["p"] == 1.0
        assert result["interaction"]["F"] == 0.0
        assert result["grand_mean"] == pytest.approx(0.5)

    def test_hand_computed_f(self):
        cells = {
            (Method.M1, CFOV): [1.0, 0.0],
            (Method.M1, NPFOV): [0.0, 0.0],
            (Method.M2, CFOV): [1.0, 1.0],
            (Method.M2, NPFOV): [1.0, 0.0],
        }
        result = anova_two_way(cells)
        # Row means 0.25 and 0.75, col means 0.75 and 0.25, grand 0.5:
        # SS_method = SS_situation = 4 * 0.25^2 * 2... worked out to 0.5 each,
        # SS_within = 0.5 + 0 + 0 + 0.5 = 1.0, df_within = 4, MS_within = 0.25.
        assert result["method"]["F"] == pytest.approx((0.5 / 1) / 0.25)
        assert result["situation"]["F"] == pytest.approx(2.0)
        assert result["method"]["df"] == [1, 4]
        assert 0.0 < result["method"]["p"] < 1.0

    def test_no_effect_at_all(self):
        cells = {
            (m, s): [1.0, 1.0]
            for m in (Method.M1, Method.M2)
            for s in (CFOV, NPFOV)
        }
        result = anova_two_way(cells)
        for name in ("method", "situation", "interaction"):
            assert result[name]["F"] == 0.0
            assert result[name]["p"] == 1.0
            assert result[name]["eta_squared"] == 0.0

    def test_full_grid_degrees_of_freedom(self):
        records = grid({(m, s): 6 for m in Method for s in SITUATIONS}, 12)
        result = anova_two_way(records_to_cells(records))
        assert result["method"]["df"] == [3, 176]
        assert result["situation"]["df"] == [3, 176]
        assert result["interaction"]["df"] == [9, 176]
        assert result["n_per_cell"] == 12

    def test_unbalanced_rejected(self):
        cells = {
            (Method.M1, CFOV): [1.0, 0.0],
            (Method.M1, NPFOV): [0.0],
            (Method.M2, CFOV): [1.0, 1.0],
            (Method.M2, NPFOV): [1.0, 0.0],
        }
        with pytest.raises(ValueError):
            anova_two_way(cells)

    def test_partial_crossing_rejected(self):
        cells = {
            (Method.M1, CFOV): [1.0, 0.0],
            (Method.M2, NPFOV): [1.0, 0.0],
        }
        with pytest.raises(ValueError):
            anova_two_way(cells)

    def test_single_observation_cells_rejected(self):
        cells = {
            (m, s): [1.0]
            for m in (Method.M1, Method.M2)
            for s in (CFOV, NPFOV)
        }
        with pytest.raises(ValueError):
            anova_two_way(cells)


class TestBonferroni:
    def test_clear_separation_is_significant(self):
        records = []
        records += [rec(Method.M1, CFOV, i < 10) for i in range(40)]
        records += [rec(Method.M4, CFOV, i < 38) for i in range(40)]
        (result,) = bonferroni_pairwise(records)
        assert result["pair"] == ["M1", "M4"]
        assert result["significant"]
        assert result["z"] < 0
        assert result["p_adj"] == pytest.approx(min(1.0, result["p_raw"] * 1))

    def test_equal_methods_are_not_significant(self):
        records = []
        records += [rec(Method.M3, CFOV, i < 20) for i in range(40)]
        records += [rec(Method.M4, CFOV, i < 20) for i in range(40)]
        (result,) = bonferroni_pairwise(records)
        assert result["z"] == pytest.approx(0.0)
        assert result["p_adj"] == 1.0
        assert not result["significant"]

    def test_six_pairs_for_four_methods(self):
        records = grid({(m, s): 3 for m in Method for s in SITUATIONS}, 6)
        results = bonferroni_pairwise(records)
        assert len(results) == 6
        pairs = {tuple(r["pair"]) for r in results}
        assert ("M1", "M2") in pairs and ("M3", "M4") in pairs

    def test_degenerate_pool_does_not_crash(self):
        records = []
        records += [rec(Method.M1, CFOV, True) for _ in range(10)]
        records += [rec(Method.M2, CFOV, True) for _ in range(10)]
        (result,) = bonferroni_pairwise(records)
        assert result["z"] == 0.0
        assert not result["significant"]

    def test_single_method_rejected(self):
        with pytest.raises(ValueError):
            bonferroni_pairwise([rec(Method.M1, CFOV, True)])


class TestSerialization:
    def test_to_jsonable_sentinels(self):
        blob = to_jsonable(
            {"a": math.inf, "b": -math.inf, "c": math.nan, "d": [1.5, math.inf], "e": "x"}
        )
        assert blob == {"a": "inf", "b": "-inf", "c": "nan", "d": [1.5, "inf"], "e": "x"}
        json.dumps(blob, allow_nan=False)

    def test_anova_with_inf_survives_json(self):
        cells = {
            (Method.M1, CFOV): [0.0, 0.0],
            (Method.M1, NPFOV): [0.0, 0.0],
            (Method.M2, CFOV): [1.0, 1.0],
            (Method.M2, NPFOV): [1.0, 1.0],
        }
        blob = to_jsonable(anova_two_way(cells))
        text = json.dumps(blob, allow_nan=False)
        assert json.loads(text)["method"]["F"] == "inf"

    def test_summary_csv(self, tmp_path):
        cells = [
            CellStats(Method.M1, CFOV, 12, 11.0 / 12.0, 0.2887),
            CellStats(Method.M2, OFOV, 12, 0.25, 0.4523),
        ]
        path = tmp_path / "summary.csv"
        write_summary_csv(path, cells)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == SUMMARY_CSV_HEADER
        assert lines[1].startswith("M1,CFOV,12,0.916667,")
        assert len(lines) == 3

    def test_cell_stats_validation(self):
        with pytest.raises(ValueError):
            CellStats(Method.M1, CFOV, 0, 0.5, 0.1)
        with pytest.raises(ValueError):
            CellStats(Method.M1, CFOV, 5, 1.5, 0.1)
