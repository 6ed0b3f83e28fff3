"""Wire grammar for layouts and NDJSON dataset round-trips."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenefix import (
    BBox,
    DatasetError,
    DuplicateIdError,
    FacingDirection,
    WireFormatError,
    generate_for_lmd,
    parse_wire_layout,
    read_dataset,
    serialize_wire_layout,
    write_dataset,
)
from scenefix.wire import (
    annotation_from_json,
    annotation_to_json,
    fmt_number,
    load_layouts,
    read_ndjson,
    sample_from_record,
    sample_to_record,
    write_ndjson,
)

from helpers import layout, obj, random_layout


class TestNumberFormat:
    @pytest.mark.parametrize(
        "value,text",
        [
            (0.25, "0.25"),
            (1.0, "1"),
            (0.0, "0"),
            (0.3001, "0.3"),
            (0.1239, "0.124"),
            (-0.0001, "0"),
            (0.5, "0.5"),
        ],
    )
    def test_formatting(self, value, text):
        assert fmt_number(value) == text

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_parses_back_within_half_grid_step(self, value):
        assert abs(float(fmt_number(value)) - value) <= 5e-4


class TestLayoutGrammar:
    def test_serialize_shape(self):
        lay = layout(
            obj("cat", oid=1, attrs=("red",), x=0.1, y=0.2, w=0.3, h=0.25,
                depth=0.5, facing=FacingDirection.LEFT),
        )
        text = serialize_wire_layout(lay)
        assert text == "[('red cat #1', [0.1, 0.2, 0.3, 0.25], 0.5, 'Left')]"

    def test_unknown_facing_serializes_bare(self):
        text = serialize_wire_layout(layout(obj("cat")))
        assert ", None)" in text

    def test_empty_layout(self):
        assert serialize_wire_layout(layout()) == "[]"
        assert parse_wire_layout("[]").objects == ()

    def test_parse_canonical(self):
        text = "[('red cat #1', [0.1, 0.2, 0.3, 0.25], 0.5, 'Left')]"
        lay = parse_wire_layout(text)
        o = lay.objects[0]
        assert o.name == "cat"
        assert o.attributes == ("red",)
        assert o.object_id == 1
        assert o.bbox == BBox(0.1, 0.2, 0.3, 0.25)
        assert o.depth == 0.5
        assert o.facing is FacingDirection.LEFT

    def test_parse_is_bracket_and_space_tolerant(self):
        for text in (
            "('cat #1', [0.1,0.2,0.3,0.25], 0.5, None)",
            "  [ ('cat #1',[0.1, 0.2 ,0.3,0.25] , 0.5 , None) ]  ",
        ):
            lay = parse_wire_layout(text)
            assert lay.objects[0].name == "cat"

    def test_multiword_name_with_attribute(self):
        lay = parse_wire_layout("[('large fire hydrant #3', [0, 0, 0.2, 0.2], 1, None)]")
        o = lay.objects[0]
        assert o.name == "fire hydrant"
        assert o.attributes == ("large",)
        assert o.depth == 1.0

    def test_attribute_word_alone_is_a_name(self):
        # peeling must stop before it would empty the name
        o = parse_wire_layout("[('red #1', [0, 0, 0.1, 0.1], 0.5, None)]").objects[0]
        assert o.name == "red"
        assert o.attributes == ()

    @pytest.mark.parametrize(
        "bad",
        [
            "[('cat', [0, 0, 0.1, 0.1], 0.5, None)]",  # no id
            "[('cat #1', [0, 0, 0.1], 0.5, None)]",  # bbox arity
            "[('cat #1', [0, 0, 0.1, 0.1], 0.5, 'Sideways')]",  # facing label
            "[('cat #1', [0, 0, 0.1, 0.1], 0.5, None) junk]",  # trailing junk
            "not a layout",
            "[('cat #1', [0, 0, 0.1, 0.1], abc, None)]",  # bad number
        ],
    )
    def test_malformed_text_rejected(self, bad):
        with pytest.raises(WireFormatError):
            parse_wire_layout(bad)

    def test_model_violations_propagate_as_model_errors(self):
        with pytest.raises(ValueError):
            parse_wire_layout("[('cat #1', [0, 0, 0.1, 0.1], 1.5, None)]")
        with pytest.raises(DuplicateIdError):
            parse_wire_layout(
                "[('cat #1', [0, 0, 0.1, 0.1], 0.5, None), "
                "('dog #1', [0.5, 0.5, 0.1, 0.1], 0.5, None)]"
            )

    def test_non_string_rejected(self):
        with pytest.raises(WireFormatError):
            parse_wire_layout(["not", "text"])

    @given(st.integers(min_value=0, max_value=10**9))
    @settings(max_examples=200, deadline=None)
    def test_grid_layout_round_trips_field_identical(self, seed):
        lay = random_layout(random.Random(seed))
        assert parse_wire_layout(serialize_wire_layout(lay)) == lay


class TestAnnotationJson:
    def test_round_trip(self):
        for sample in generate_for_lmd(25, seed=78):
            data = annotation_to_json(sample.annotation)
            json.dumps(data)  # must be plain JSON types
            assert annotation_from_json(data) == sample.annotation

    def test_bad_payload_rejected(self):
        with pytest.raises(WireFormatError):
            annotation_from_json({"mentions": "nope"})
        with pytest.raises(WireFormatError):
            annotation_from_json({})


class TestDatasetFiles:
    def test_write_read_round_trip(self, tmp_path):
        samples = generate_for_lmd(15, seed=78)
        path = str(tmp_path / "bench.ndjson")
        write_dataset(path, samples)
        assert read_dataset(path) == samples

    def test_ndjson_is_deterministic(self, tmp_path):
        samples = generate_for_lmd(10, seed=78)
        p1, p2 = str(tmp_path / "a.ndjson"), str(tmp_path / "b.ndjson")
        write_dataset(p1, samples)
        write_dataset(p2, samples)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_missing_field_reports_line(self, tmp_path):
        path = tmp_path / "broken.ndjson"
        good = sample_to_record(generate_for_lmd(1, seed=1)[0])
        bad = dict(good)
        del bad["prompt"]
        bad["id"] = "other"
        write_ndjson(str(path), [good, bad])
        with pytest.raises(DatasetError) as err:
            read_dataset(str(path))
        assert "line 2" in str(err.value)

    def test_invalid_json_line_rejected(self, tmp_path):
        path = tmp_path / "broken.ndjson"
        path.write_text('{"id": 1}\nnot json\n', encoding="utf-8")
        with pytest.raises(DatasetError):
            read_ndjson(str(path))

    def test_missing_file_is_dataset_error(self, tmp_path):
        with pytest.raises(DatasetError):
            read_ndjson(str(tmp_path / "absent.ndjson"))

    def test_prompt_annotation_mismatch_rejected(self, tmp_path):
        record = sample_to_record(generate_for_lmd(1, seed=1)[0])
        record["prompt"] = "a cat"
        with pytest.raises(DatasetError):
            sample_from_record(record, line=1)

    def test_load_layout_overrides(self, tmp_path):
        path = tmp_path / "layouts.ndjson"
        lay = layout(obj("cat", oid=1, depth=0.5))
        write_ndjson(
            str(path), [{"id": "s1", "layout": serialize_wire_layout(lay)}]
        )
        loaded = load_layouts(str(path))
        assert set(loaded) == {"s1"}
        assert loaded["s1"] == lay

    def test_load_layouts_needs_both_fields(self, tmp_path):
        path = tmp_path / "layouts.ndjson"
        write_ndjson(str(path), [{"id": "s1"}])
        with pytest.raises(DatasetError):
            load_layouts(str(path))
