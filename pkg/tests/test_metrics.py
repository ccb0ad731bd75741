import numpy as np
import pytest

import oracles
from mmhate.errors import ValidationError
from mmhate.fusion import Label
from mmhate.metrics import (
    CSV_COLUMNS,
    ConfusionMatrix,
    MacroScores,
    ReportEntry,
    confusion,
    macro_scores,
    render_report,
)


class TestConfusion:
    def test_all_correct(self):
        cm = confusion([1, 0, 1, 0], [1, 0, 1, 0])
        assert (cm.fp, cm.fn) == (0, 0)
        assert (cm.tp, cm.tn) == (2, 2)

    def test_complement_predictions(self):
        cm = confusion([0, 1, 0, 1], [1, 0, 1, 0])
        assert (cm.tp, cm.tn) == (0, 0)
        assert (cm.fp, cm.fn) == (2, 2)

    def test_random_matches_tally_oracle(self):
        rng = np.random.default_rng(0)
        pred = rng.integers(0, 2, 200)
        true = rng.integers(0, 2, 200)
        cm = confusion(pred, true)
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == oracles.confusion_counts(pred, true)
        assert cm.total == 200

    def test_accepts_label_enums(self):
        cm = confusion([Label.HATE_SPEECH, Label.NOT_HATE_SPEECH], [1, 1])
        assert (cm.tp, cm.fn) == (1, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            confusion([1, 0], [1])


class TestMacroScores:
    def test_perfect_classifier(self):
        scores = macro_scores(ConfusionMatrix(tp=10, fp=0, tn=10, fn=0))
        assert scores.precision == scores.recall == scores.f1 == 1.0

    def test_worked_example_hand_computed(self):
        # tp 40, fp 10, tn 35, fn 15:
        #   pos P = 40/50 = 0.8      pos R = 40/55 = 0.727272...
        #   neg P = 35/50 = 0.7      neg R = 35/45 = 0.777777...
        # macro P = 0.75, macro R = 0.752525...
        # pos F1 = 2*0.8*(8/11)/(0.8 + 8/11) = 0.761904761904...
        # neg F1 = 2*0.7*(7/9)/(0.7 + 7/9) = 0.736842105263...
        cm = ConfusionMatrix(tp=40, fp=10, tn=35, fn=15)
        scores = macro_scores(cm)
        assert scores.precision == pytest.approx(0.75, abs=1e-9)
        assert scores.recall == pytest.approx(0.7525252525252525, abs=1e-9)
        pos = scores.per_class["hate_speech"]
        neg = scores.per_class["not_hate_speech"]
        assert pos.precision == pytest.approx(0.8, abs=1e-9)
        assert pos.recall == pytest.approx(40 / 55, abs=1e-9)
        assert neg.precision == pytest.approx(0.7, abs=1e-9)
        assert neg.recall == pytest.approx(35 / 45, abs=1e-9)
        assert pos.f1 == pytest.approx(0.7619047619047619, abs=1e-9)
        assert neg.f1 == pytest.approx(0.7368421052631579, abs=1e-9)
        assert scores.f1 == pytest.approx((pos.f1 + neg.f1) / 2, abs=1e-12)

    def test_single_class_predictor_on_balanced_set(self):
        # predict everything positive on a balanced set: pos F1 = 2/3, neg F1 = 0
        cm = confusion([1] * 10, [1] * 5 + [0] * 5)
        scores = macro_scores(cm)
        assert scores.per_class["hate_speech"].f1 == pytest.approx(2 / 3, abs=1e-12)
        assert scores.per_class["not_hate_speech"].f1 == 0.0
        assert scores.f1 == pytest.approx(1 / 3, abs=1e-12)

    def test_macro_f1_is_mean_of_class_f1s_not_f1_of_macros(self):
        rng = np.random.default_rng(1)
        found_difference = False
        for _ in range(50):
            counts = rng.integers(1, 40, size=4)
            cm = ConfusionMatrix(tp=int(counts[0]), fp=int(counts[1]), tn=int(counts[2]), fn=int(counts[3]))
            scores = macro_scores(cm)
            mean_f1 = (scores.per_class["hate_speech"].f1 + scores.per_class["not_hate_speech"].f1) / 2
            assert scores.f1 == pytest.approx(mean_f1, abs=1e-12)
            p, r = scores.precision, scores.recall
            f1_of_macros = 2 * p * r / (p + r) if p + r else 0.0
            if abs(f1_of_macros - scores.f1) > 1e-6:
                found_difference = True
        assert found_difference  # the two conventions genuinely differ on these matrices

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        pred = rng.integers(0, 2, 100)
        true = rng.integers(0, 2, 100)
        base = macro_scores(confusion(pred, true))
        for _ in range(100):
            order = rng.permutation(100)
            shuffled = macro_scores(confusion(pred[order], true[order]))
            assert shuffled == base

    def test_scores_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            counts = rng.integers(0, 30, size=4)
            if counts.sum() == 0:
                continue
            scores = macro_scores(ConfusionMatrix(*[int(c) for c in counts]))
            for value in (scores.precision, scores.recall, scores.f1):
                assert 0.0 <= value <= 1.0


class TestRenderReport:
    def test_percent_rendering_matches_reported_format(self):
        macro = MacroScores(precision=0.93, recall=0.9289, f1=0.9294, per_class={})
        entry = ReportEntry(run_id="mml", model_kind="fusion", split="test", macro=macro)
        text, csv_text = render_report([entry])
        assert "93.00" in text and "92.89" in text and "92.94" in text
        assert csv_text.splitlines()[0] == ",".join(CSV_COLUMNS)

    def test_rmse_rendering_four_decimals(self):
        entry = ReportEntry(run_id="emotion", model_kind="mtl_f2", split="test", rmse=(0.1846, 0.1124, 0.1431))
        text, _ = render_report([entry])
        assert "0.1846" in text and "0.1124" in text and "0.1431" in text

    def test_empty_entries_rejected(self):
        with pytest.raises(ValidationError):
            render_report([])
        with pytest.raises(ValidationError):
            ReportEntry(run_id="x", model_kind="y", split="test")

    def test_csv_roundtrip(self, tmp_path):
        from mmhate.metrics import parse_report_csv

        macro = MacroScores(precision=0.5, recall=0.25, f1=1 / 3, per_class={})
        entries = [
            ReportEntry(run_id="a", model_kind="fusion", split="test", macro=macro),
            ReportEntry(run_id="b", model_kind="mtl_f1", split="val", rmse=(0.1, 0.2, 0.3)),
        ]
        _, csv_text = render_report(entries)
        path = tmp_path / "report.csv"
        path.write_text(csv_text, encoding="utf-8")
        parsed = parse_report_csv(path)
        assert len(parsed) == 2
        assert parsed[0].macro.precision == pytest.approx(0.5, abs=1e-6)
        assert parsed[1].rmse == pytest.approx((0.1, 0.2, 0.3), abs=1e-6)
