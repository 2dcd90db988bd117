import json

import pytest

from biae.corpus import (Answer, DecisionLabel, DialogueInstance, HistoryTurn,
                         decision_label_of, iter_record_errors, load_dataset,
                         parse_record, subset_flags, to_record)
from biae.errors import SchemaError, ValidationError


class TestDecisionLabelOf:
    def test_yes(self):
        assert decision_label_of("Yes") is DecisionLabel.YES

    def test_irrelevant(self):
        assert decision_label_of("Irrelevant") is DecisionLabel.IRRELEVANT

    def test_follow_up_question_is_more(self):
        question = "Do you give your employer the correct notice?"
        assert decision_label_of(question) is DecisionLabel.MORE

    def test_case_and_whitespace_insensitive(self):
        assert decision_label_of("  nO ") is DecisionLabel.NO
        assert decision_label_of("YES") is DecisionLabel.YES

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            decision_label_of("   ")


class TestLoadDataset:
    def test_sample_loads_all_records(self, sample_path, sample_instances):
        raw = json.loads(sample_path.read_text())
        assert len(sample_instances) == len(raw)
        assert [i.utterance_id for i in sample_instances] == \
            [r["utterance_id"] for r in raw]

    def test_empty_array_gives_empty_list(self, tmp_path):
        p = tmp_path / "empty.json"
        p.write_text("[]")
        assert load_dataset(p) == []

    def test_missing_file_raises_io_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / "nope.json")

    def test_directory_resolution(self, tmp_path, sample_path):
        split_dir = tmp_path / "json"
        split_dir.mkdir()
        (split_dir / "sharc_dev.json").write_text(sample_path.read_text())
        assert len(load_dataset(tmp_path, "dev")) == 12

    def test_missing_field_names_record_and_field(self, sample_path):
        records = json.loads(sample_path.read_text())
        del records[2]["scenario"]
        with pytest.raises(SchemaError) as err:
            for r in records:
                parse_record(r)
        assert "utt-003" in str(err.value)
        assert "scenario" in str(err.value)

    def test_bad_answer_in_history(self):
        record = {
            "utterance_id": "x1", "tree_id": "t", "source_url": "u",
            "snippet": "Doc.", "question": "Q?", "scenario": "",
            "history": [{"follow_up_question": "Q?", "follow_up_answer": "Maybe"}],
            "answer": "Yes", "evidence": [],
        }
        with pytest.raises(SchemaError):
            parse_record(record)

    def test_gold_decision_derived_from_answer(self, sample_instances):
        by_id = {i.utterance_id: i for i in sample_instances}
        assert by_id["utt-001"].gold_decision is DecisionLabel.YES
        assert by_id["utt-002"].gold_decision is DecisionLabel.NO
        assert by_id["utt-003"].gold_decision is DecisionLabel.IRRELEVANT
        assert by_id["utt-004"].gold_decision is DecisionLabel.MORE

    def test_iter_record_errors_reports_all(self, sample_path, tmp_path):
        records = json.loads(sample_path.read_text())
        del records[0]["snippet"]
        del records[5]["answer"]
        p = tmp_path / "broken.json"
        p.write_text(json.dumps(records))
        errors = list(iter_record_errors(p))
        assert len(errors) == 2
        assert {index for index, _ in errors} == {0, 5}


class TestRoundTrip:
    def test_serialize_load_reproduces_fields(self, sample_path):
        for raw in json.loads(sample_path.read_text()):
            assert to_record(parse_record(raw)) == raw

    def test_unknown_extra_fields_preserved(self):
        record = {
            "utterance_id": "x2", "tree_id": "t", "source_url": "u",
            "snippet": "Doc.", "question": "Q?", "scenario": "",
            "history": [], "answer": "Yes", "evidence": [],
            "annotator_note": {"batch": 3},
        }
        instance = parse_record(record)
        assert instance.extra == {"annotator_note": {"batch": 3}}
        assert to_record(instance) == record


class TestSubsetFlags:
    def test_explicit_flags(self):
        instance = DialogueInstance(
            utterance_id="f1", tree_id="t", source_url="u",
            document="Plain rule text with no list.",
            question="Q?", scenario="", history=(),
            gold_answer="Yes", gold_decision=DecisionLabel.YES)
        flags = subset_flags(instance)
        assert flags == type(flags)(bullet_point=False, has_scenario=False,
                                    has_history=False)

    @pytest.mark.parametrize("line,expected", [
        ("* item", True),
        ("- item", True),
        ("• item", True),
        ("1. item", True),
        ("12) item", True),
        ("  * indented", True),
        ("1.5 million people", False),
        ("-5 degrees outside", False),
        ("no marker here", False),
    ])
    def test_bullet_detection(self, line, expected):
        instance = DialogueInstance(
            utterance_id="f2", tree_id="t", source_url="u",
            document=f"Intro line.\n{line}",
            question="Q?", scenario="", history=(),
            gold_answer="Yes", gold_decision=DecisionLabel.YES)
        assert subset_flags(instance).bullet_point is expected

    def test_partition_property_on_sample(self, sample_instances):
        flags = [subset_flags(i) for i in sample_instances]
        total = len(sample_instances)
        bullets = sum(f.bullet_point for f in flags)
        scenarios = sum(f.has_scenario for f in flags)
        histories = sum(f.has_history for f in flags)
        assert bullets + sum(not f.bullet_point for f in flags) == total
        assert scenarios + sum(not f.has_scenario for f in flags) == total
        assert histories + sum(not f.has_history for f in flags) == total


class TestHistoryTurn:
    def test_empty_question_rejected(self):
        with pytest.raises(ValidationError):
            HistoryTurn("", Answer.YES)

    def test_answer_parse(self):
        assert Answer.parse(" yes") is Answer.YES
        assert Answer.parse("NO") is Answer.NO
        with pytest.raises(ValidationError):
            Answer.parse("maybe")
