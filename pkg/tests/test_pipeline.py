import io
import json

import numpy as np
import pytest

from tactus.errors import (EmptyChain, InvalidParameter, ParseError,
                           TypeMismatch, UnknownFormatVersion,
                           UnregisteredProcessor, UnserializableParameter)
from tactus.pipeline import (IdentityProcessor, OffsetProcessor,
                             ParallelProcessor, Pipeline, Processor,
                             ScaleProcessor, SequentialProcessor,
                             canonical_document, compose_parallel,
                             compose_sequential, load_pipeline, save_pipeline)


def test_identity_returns_input():
    data = np.array([1.0, 2.0, 3.0])
    assert IdentityProcessor().process(data) is data


def test_scale_processor():
    np.testing.assert_array_equal(ScaleProcessor(2).process([1, 2]), [2, 4])


def test_sequential_composes_left_to_right():
    # (1 * 2) * 3 = 6
    chain = compose_sequential([ScaleProcessor(2), ScaleProcessor(3)])
    np.testing.assert_array_equal(chain.process(np.array([1.0])), [6.0])
    # (3 * 2) + 1 = 7 vs (3 + 1) * 2 = 8: order matters
    assert compose_sequential([ScaleProcessor(2), OffsetProcessor(1)]).process(3) == 7
    assert compose_sequential([OffsetProcessor(1), ScaleProcessor(2)]).process(3) == 8


def test_sequential_singleton_equivalent_to_member():
    p = ScaleProcessor(5)
    chain = compose_sequential([p])
    assert chain.process(3) == p.process(3)


def test_sequential_matches_manual_composition():
    a, b = ScaleProcessor(2), OffsetProcessor(-1)
    chain = compose_sequential([a, b])
    for x in range(-3, 4):
        assert chain.process(x) == b.process(a.process(x))


def test_empty_chain_rejected():
    with pytest.raises(EmptyChain):
        compose_sequential([])
    with pytest.raises(EmptyChain):
        compose_parallel([])


def test_parallel_outputs_keep_member_order():
    par = compose_parallel([ScaleProcessor(2), ScaleProcessor(3)])
    out = par.process(2)
    assert [float(o) for o in out] == [4.0, 6.0]


def test_parallel_singleton():
    out = compose_parallel([IdentityProcessor()]).process("x")
    assert out == ["x"]


def test_parallel_worker_count_does_not_change_result():
    members = [ScaleProcessor(k) for k in range(1, 6)]
    one = ParallelProcessor(members, workers=1).process(7)
    four = ParallelProcessor(members, workers=4).process(7)
    assert [float(a) for a in one] == [float(b) for b in four]
    # every slot equals the member applied directly
    for member, result in zip(members, one):
        assert float(result) == float(member.process(7))


def test_process_is_pure():
    p = compose_sequential([ScaleProcessor(2), OffsetProcessor(3)])
    x = np.arange(5.0)
    np.testing.assert_array_equal(p.process(x), p.process(x))


def test_save_minimal_pipeline(tmp_path):
    path = tmp_path / "id.pipeline.json"
    pipeline = Pipeline(IdentityProcessor())
    written = save_pipeline(pipeline, path)
    assert written == path.stat().st_size
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1
    assert doc["root"] == {"kind": "identity", "params": {}}


def test_save_keeps_child_order(tmp_path):
    chain = compose_sequential(
        [ScaleProcessor(2), OffsetProcessor(1), ScaleProcessor(3)])
    path = tmp_path / "chain.pipeline.json"
    Pipeline(chain).save(path)
    doc = json.loads(path.read_text())
    kinds = [child["kind"] for child in doc["root"]["children"]]
    factors = [child["params"] for child in doc["root"]["children"]]
    assert kinds == ["scale", "offset", "scale"]
    assert factors == [{"factor": 2.0}, {"amount": 1.0}, {"factor": 3.0}]


def test_save_load_canonical_round_trip(tmp_path):
    pipeline = Pipeline(compose_sequential(
        [ScaleProcessor(2), compose_parallel([IdentityProcessor(),
                                              OffsetProcessor(4)])]))
    path = tmp_path / "p.pipeline.json"
    pipeline.save(path)
    reloaded = load_pipeline(path)
    second = tmp_path / "q.pipeline.json"
    reloaded.save(second)
    assert path.read_bytes() == second.read_bytes()


def test_loaded_pipeline_behaves_identically(tmp_path):
    pipeline = Pipeline(compose_sequential(
        [OffsetProcessor(1), ScaleProcessor(3), OffsetProcessor(-2)]))
    path = tmp_path / "p.pipeline.json"
    pipeline.save(path)
    reloaded = load_pipeline(path)
    for x in [np.array([0.0]), np.array([1.5, -2.0]), np.arange(4.0),
              np.array([100.0]), np.array([-7.0, 7.0, 0.5])]:
        np.testing.assert_array_equal(pipeline.process(x), reloaded.process(x))


def test_load_unknown_kind():
    doc = {"format_version": 1,
           "root": {"kind": "frobnicate", "params": {}}}
    with pytest.raises(UnregisteredProcessor):
        load_pipeline(io.StringIO(json.dumps(doc)))


def test_load_unknown_format_version():
    doc = {"format_version": 999, "root": {"kind": "identity", "params": {}}}
    with pytest.raises(UnknownFormatVersion):
        load_pipeline(io.StringIO(json.dumps(doc)))


def test_load_invalid_parameter_value():
    doc = {"format_version": 1,
           "root": {"kind": "framer", "params": {"frame_size": -1}}}
    with pytest.raises(InvalidParameter):
        load_pipeline(io.StringIO(json.dumps(doc)))


def test_load_unknown_parameter_name():
    doc = {"format_version": 1,
           "root": {"kind": "scale", "params": {"no_such": 1}}}
    with pytest.raises(InvalidParameter):
        load_pipeline(io.StringIO(json.dumps(doc)))


def test_load_rejects_garbage_and_missing_keys():
    with pytest.raises(ParseError):
        load_pipeline(io.StringIO("not json"))
    with pytest.raises(ParseError):
        load_pipeline(io.StringIO(json.dumps({"root": {}})))
    with pytest.raises(ParseError):
        load_pipeline(io.StringIO(json.dumps({"format_version": 1})))
    # children on a leaf kind
    doc = {"format_version": 1,
           "root": {"kind": "identity", "params": {},
                    "children": [{"kind": "identity", "params": {}}]}}
    with pytest.raises(ParseError):
        load_pipeline(io.StringIO(json.dumps(doc)))


def test_save_rejects_unregistered_instances(tmp_path):
    class Rogue(Processor):
        kind = "rogue"

        def process(self, data):
            return data

    with pytest.raises(UnregisteredProcessor):
        Pipeline(Rogue()).save(tmp_path / "x.json")


def test_save_rejects_unserializable_params(tmp_path):
    class Bad(ScaleProcessor):
        def params(self):
            return {"factor": object()}

    with pytest.raises(UnserializableParameter):
        Pipeline(Bad(1)).save(tmp_path / "x.json")


def test_canonical_document_sorted_keys():
    text = canonical_document({"b": 1, "a": {"d": 2, "c": 3}})
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')
    assert text.endswith("\n")


def test_pipeline_root_must_be_processor():
    with pytest.raises(TypeMismatch):
        Pipeline("not a processor")
