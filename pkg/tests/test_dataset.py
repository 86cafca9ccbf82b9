import json
from collections import Counter

import pytest

from hlsdse.analyzer import SourceFile, SourceUnit, analyze, count_hls_pragmas
from hlsdse.dataset import (NO_STRATEGY, RECORD_KEYS, FinetunePair, RecordMeta, concat_sources,
                            corpus_stats, denormalize_keys, dumps_records, emit_finetune_pairs,
                            load_records, loads_records, normalize_keys, to_record, write_pairs,
                            write_records)
from hlsdse.design_space import build_design_tree, enumerate_designs
from hlsdse.errors import (EmptyInput, IncompleteMeta, RecordParseError, SchemaViolation,
                           UnlabeledFront)
from hlsdse.metrics import DesignPoint, StrategyLabel, pareto_front, tertile_labels
from hlsdse.pragmas import insert_pragmas
from hlsdse.qor import QoRReport, analytic_evaluate, compute_aru

from conftest import U280, VADD, unit_of

RECORD_KEY_ORDER = [
    "File Path", "Part", "Avialable_BRAM_18K", "Avialable_LUT", "Avialable_DSP", "Avialable_FF",
    "TargetClockPeriod", "EstimatedClockPeriod", "Best-caseLatency", "Worst-caseLatency",
    "BRAM_18K", "LUT", "DSP", "FF", "design_id", "algo_name", "source_name", "is_pareto",
    "is_kernel", "code_length", "pragma_number", "top_function_name",
    "latency-resource-strategy", "source_code",
]


def _designs(unit, info, part=U280, hold=("fpipeline", "inline")):
    tree = build_design_tree(info, hold)
    pts = []
    for k, cfg in enumerate(enumerate_designs(tree)):
        rep = analytic_evaluate(info, cfg, part)
        p = DesignPoint(cfg, rep.worst_case_latency, compute_aru(rep, part), rep,
                        insert_pragmas(unit, info, cfg), str(k))
        pts.append(p)
    return pts


def _records(unit, info, part=U280):
    pts = _designs(unit, info, part)
    front = pareto_front(pts)
    labels = tertile_labels(front)
    recs = [to_record(p, part, RecordMeta(p.design_id, "toy", "unit", info.top_function,
                                          is_pareto=id(p) in labels, is_kernel=p.config.pragma_count == 0,
                                          strategy=labels.get(id(p)))) for p in pts]
    return pts, front, labels, recs


def test_schema_key_order():
    assert list(RECORD_KEYS) == RECORD_KEY_ORDER


def test_to_record_fields(toy):
    unit, info = toy
    _, front, labels, recs = _records(unit, info)
    assert len(recs) == 24
    for r in recs:
        assert list(r) == RECORD_KEY_ORDER
        text = "".join(f["file_content"] for f in r["source_code"])
        assert r["code_length"] == len(text)
        assert r["pragma_number"] == count_hls_pragmas(text)
        assert r["File Path"] == f"unit/toy/design_{r['design_id']}"
        assert r["Avialable_LUT"] == U280.lut
        if r["is_pareto"]:
            assert r["latency-resource-strategy"] in {s.value for s in StrategyLabel}
        else:
            assert r["latency-resource-strategy"] == NO_STRATEGY
    assert sum(r["is_kernel"] for r in recs) == 1
    assert sum(r["is_pareto"] for r in recs) == len(front)


def test_pareto_records_not_dominated(toy):
    unit, info = toy
    _, _, _, recs = _records(unit, info)
    loaded = loads_records(dumps_records(recs))
    for r, p in loaded:
        if r["is_pareto"]:
            assert not any(q.latency <= p.latency and q.aru <= p.aru
                           and (q.latency < p.latency or q.aru < p.aru) for _, q in loaded)


def test_to_record_requires_meta(toy):
    unit, info = toy
    p = _designs(unit, info)[0]
    with pytest.raises(IncompleteMeta, match="algo_name"):
        to_record(p, U280, RecordMeta("0", None, "src", "toy"))
    bare = DesignPoint(p.config, 1, 0.0, p.report)
    with pytest.raises(IncompleteMeta, match="source"):
        to_record(bare, U280, RecordMeta("0", "toy", "src", "toy"))
    failed = DesignPoint(p.config, 1, 0.0, QoRReport.failed("x"), p.source)
    with pytest.raises(IncompleteMeta, match="failed"):
        to_record(failed, U280, RecordMeta("0", "toy", "src", "toy"))


def test_zero_resource_design():
    unit = SourceUnit((SourceFile("k.c", "int f(int x) { return x; }\n"),))
    rep = QoRReport(0, 0, 0, 0, 0, 0, 10.0, 3.5)
    p = DesignPoint(None, 0, compute_aru(rep, U280), rep, unit, "0")
    r = to_record(p, U280, RecordMeta("0", "f", "s", "f", is_kernel=True))
    assert (r["BRAM_18K"], r["LUT"], r["DSP"], r["FF"]) == (0, 0, 0, 0)
    assert "ARU" not in r and "aru" not in r
    assert r["latency-resource-strategy"] == "none"


def test_reference_record_loads(reference_path):
    ((rec, pt),) = load_records(reference_path)
    assert list(rec) == RECORD_KEY_ORDER
    assert abs(pt.aru - 0.0038502) <= 1e-6
    assert pt.latency == 135246
    assert rec["latency-resource-strategy"] == "high-latency-low-resource"


def test_round_trip_byte_identical(tmp_path, toy, reference_path):
    unit, info = toy
    _, _, _, recs = _records(unit, info)
    path = tmp_path / "designs.json"
    write_records(path, recs)
    first = path.read_bytes()
    again = [r for r, _ in load_records(path)]
    write_records(path, again)
    assert path.read_bytes() == first
    assert json.loads(first)[0]["Avialable_BRAM_18K"] == U280.bram_18k
    # the published record survives the same cycle
    published = [r for r, _ in load_records(reference_path)]
    text = dumps_records(published)
    assert dumps_records([r for r, _ in loads_records(text)]) == text


def test_missing_and_extra_keys(reference_path):
    rec = json.loads(reference_path.read_text())[0]
    broken = dict(rec)
    del broken["Worst-caseLatency"]
    with pytest.raises(SchemaViolation) as exc:
        loads_records(json.dumps([broken]))
    assert exc.value.key == "Worst-caseLatency"
    extra = dict(rec, Available_LUT=1)
    with pytest.raises(SchemaViolation) as exc:
        loads_records(json.dumps([extra]))
    assert exc.value.key == "Available_LUT"
    with pytest.raises(SchemaViolation):
        loads_records("{}")


def test_parse_error_offset():
    text = '[{"File Path": "x",, }]'
    with pytest.raises(RecordParseError) as exc:
        loads_records(text)
    assert exc.value.offset == text.index(",,") + 1
    # offsets count bytes, not characters
    text2 = '["éé", oops]'
    with pytest.raises(RecordParseError) as exc:
        loads_records(text2)
    assert exc.value.offset == text2.encode().index(b"oops")


def test_normalized_keys_in_memory_only(tmp_path, reference_path):
    before = reference_path.read_bytes()
    ((rec, _),) = load_records(reference_path, normalize=True)
    assert "Available_LUT" in rec and "Avialable_LUT" not in rec
    assert reference_path.read_bytes() == before
    assert list(denormalize_keys(rec)) == RECORD_KEY_ORDER
    assert normalize_keys({"other": 1}) == {"other": 1}


def test_finetune_pairs_six_member_front():
    unit = unit_of(VADD)
    info = analyze(unit)
    pts = _designs(unit, info)
    front = pareto_front(pts)
    assert len(front) >= 6
    six = list(front)[:6]
    labels = tertile_labels(six)
    pairs = emit_finetune_pairs(unit, six, labels)
    assert len(pairs) == 6
    assert Counter(p.instruction for p in pairs) == {
        "optimize for high resource usage and low latency.": 2,
        "optimize for balanced resource usage and latency.": 2,
        "optimize for low resource usage and high latency.": 2,
    }
    for pair, p in zip(pairs, six):
        assert pair.input == concat_sources(unit)
        assert pair.output == concat_sources(p.source)
        assert count_hls_pragmas(pair.output) == p.config.pragma_count


def test_low_instruction_verbatim(toy):
    unit, info = toy
    p = _designs(unit, info)[5]
    (pair,) = emit_finetune_pairs(unit, [p], {id(p): StrategyLabel.LOW_RESOURCE_HIGH_LATENCY})
    assert pair.instruction == "optimize for low resource usage and high latency."


def test_finetune_errors(toy):
    unit, info = toy
    with pytest.warns(UserWarning, match="empty front"):
        assert emit_finetune_pairs(unit, [], {}) == []
    p = _designs(unit, info)[0]
    with pytest.raises(UnlabeledFront):
        emit_finetune_pairs(unit, [p], {})


def test_pairs_file(tmp_path):
    path = tmp_path / "pairs.jsonl"
    write_pairs(path, [FinetunePair("i", "a\nb", "c"), FinetunePair("j", "d", "e")])
    rows = [json.loads(l) for l in path.read_text().splitlines()]
    assert rows[0] == {"instruction": "i", "input": "a\nb", "output": "c"}
    assert len(rows) == 2


def _stub(algo, pragmas=0, length=100, pareto=False, source="s"):
    return {"algo_name": algo, "source_name": source, "pragma_number": pragmas,
            "code_length": length, "is_pareto": pareto}


def test_corpus_stats_examples():
    s = corpus_stats([_stub("aes", pragmas=7)])
    assert s.mean_pragmas == 7 and s.kernels == 1
    recs = [_stub("a")] * 3 + [_stub("b", pareto=True)] * 5
    s = corpus_stats(recs)
    assert sorted(s.design_counts.values()) == [3, 5]
    assert s.pareto_counts == {"s/b": 5}
    s = corpus_stats([_stub("a", length=100), _stub("a", length=300)])
    assert s.mean_code_length == 200
    assert "designs 2" in s.format()
    with pytest.raises(EmptyInput):
        corpus_stats([])


def test_write_is_atomic(tmp_path, toy, monkeypatch):
    unit, info = toy
    _, _, _, recs = _records(unit, info)
    path = tmp_path / "designs.json"
    write_records(path, recs[:2])
    good = path.read_bytes()

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr("hlsdse.dataset.os.replace", boom)
    with pytest.raises(OSError):
        write_records(path, recs)
    assert path.read_bytes() == good
