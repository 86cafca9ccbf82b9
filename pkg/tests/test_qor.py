import json
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hlsdse.analyzer import analyze
from hlsdse.errors import BackendUnavailable, InvalidReport, MalformedReport, NoResources, \
    UnknownPart
from hlsdse.pragmas import ON, PragmaConfig, enumerate_sites, partition, unroll
from hlsdse.qor import (DEFAULT_PARTS, AnalyticEvaluator, ExternalEvaluator, PartSpec, QoRReport,
                        analytic_evaluate, compute_aru, external_evaluate, get_part,
                        load_part_catalog, parse_report, render_report, synthesis_script)

from conftest import TOY_KERNELS, U280, ZU9, random_config, unit_of

REFERENCE = QoRReport(2897, 135246, 0, 3784, 0, 874, 10.0, 3.537)

ONE_STMT = "void f(int a[16]) {\n    for (int i = 0; i < 16; i++) {\n        a[i] = i;\n    }\n}\n"
TWO_STMT = ("void f(int a[16], int b[16]) {\n    for (int i = 0; i < 16; i++) {\n"
            "        a[i] = i;\n        b[i] = i;\n    }\n}\n")


def _cfg(info, **chosen):
    return PragmaConfig.from_mapping(enumerate_sites(info), {k.replace("__", ":"): v
                                                             for k, v in chosen.items()})


def test_aru_reference_record():
    aru = compute_aru(REFERENCE, ZU9)
    # hand arithmetic: (0/1824 + 3784/274080 + 0/2520 + 874/548160) / 4
    assert aru == pytest.approx(float(Fraction(1407, 365440)), abs=1e-15)
    assert abs(aru - 0.0038502) <= 1e-6


def test_aru_zero_usage_and_missing_class():
    assert compute_aru(QoRReport(1, 1), U280) == 0.0
    part = PartSpec("nodsp", 100, 1000, 0, 2000)
    rep = QoRReport(1, 1, bram_18k=50, lut=500, dsp=7, ff=1000)
    assert compute_aru(rep, part) == pytest.approx(0.5)


def test_aru_errors():
    with pytest.raises(NoResources):
        compute_aru(QoRReport(1, 1), PartSpec("empty", 0, 0, 0, 0))
    with pytest.raises(InvalidReport):
        compute_aru(QoRReport(1, 1, lut=-1), U280)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 10 ** 6), min_size=4, max_size=4),
       st.lists(st.integers(0, 10 ** 7), min_size=4, max_size=4).filter(any),
       st.fractions(0, 50, max_denominator=64))
def test_aru_homogeneous(used, avail, c):
    part = PartSpec("p", *avail)
    scaled = [u * c for u in used]
    exact = lambda us: sum(Fraction(u) / a for u, a in zip(us, avail) if a) / sum(1 for a in avail if a)
    assert exact(scaled) == c * exact(used)
    # the float implementation tracks the rational one
    rep = QoRReport(1, 1, *used)
    assert compute_aru(rep, part) == pytest.approx(float(exact(used)), rel=1e-12, abs=1e-15)


def test_part_catalog(tmp_path):
    p = tmp_path / "parts.txt"
    p.write_text("# name bram lut dsp ff clock\nmypart 10 20 30 40 5.0\n\n")
    cat = load_part_catalog(p)
    assert cat["mypart"] == PartSpec("mypart", 10, 20, 30, 40, 5.0)
    assert get_part("xczu9eg-ffvb1156-2-e") is DEFAULT_PARTS["xczu9eg-ffvb1156-2-e"]
    assert U280.bram_18k == 4032
    with pytest.raises(UnknownPart):
        get_part("nope")
    p.write_text("short 1 2\n")
    with pytest.raises(ValueError, match="6 fields"):
        load_part_catalog(p)


REPORT = """<?xml version="1.0" encoding="UTF-8"?>
<profile>
  <PerformanceEstimates>
    <SummaryOfTimingAnalysis>
      <unit>ns</unit>
      <TargetClockPeriod>10.00</TargetClockPeriod>
      <EstimatedClockPeriod>3.537</EstimatedClockPeriod>
    </SummaryOfTimingAnalysis>
    <SummaryOfOverallLatency>
      <Best-caseLatency>2897</Best-caseLatency>
      <Worst-caseLatency>135246</Worst-caseLatency>
    </SummaryOfOverallLatency>
  </PerformanceEstimates>
  <AreaEstimates>
    <Resources>
      <BRAM_18K>0</BRAM_18K>
      <DSP>0</DSP>
      <FF>874</FF>
      <LUT>3784</LUT>
    </Resources>
  </AreaEstimates>
</profile>
"""


def test_parse_report_echoes_fields():
    assert parse_report(REPORT) == REFERENCE


def test_parse_report_truncated():
    with pytest.raises(MalformedReport) as exc:
        parse_report(REPORT[:200])
    assert 0 < exc.value.offset <= 200


def test_parse_report_missing_latency():
    text = REPORT.replace("<Worst-caseLatency>135246</Worst-caseLatency>", "")
    rep = parse_report(text)
    assert not rep.ok and rep.reason == "no latency"
    rep = parse_report(REPORT.replace("<LUT>3784</LUT>", ""))
    assert not rep.ok and "lut" in rep.reason


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(0, 10 ** 9), st.integers(0, 10 ** 5),
       st.integers(0, 10 ** 7), st.floats(0.1, 100, allow_nan=False))
def test_render_parse_round_trip(a, b, r, lut, clk):
    rep = QoRReport(min(a, b), max(a, b), r, lut, r // 3, lut // 2, clk, clk * 0.35)
    assert parse_report(render_report(rep)) == rep


def test_analytic_single_loop_baseline():
    info = analyze(unit_of(ONE_STMT))
    rep = analytic_evaluate(info, PragmaConfig.all_off(enumerate_sites(info)), U280)
    assert (rep.worst_case_latency, rep.best_case_latency) == (16, 16)
    assert (rep.lut, rep.ff, rep.dsp, rep.bram_18k) == (10, 8, 0, 1)
    assert rep.estimated_clock_period == pytest.approx(3.5)


def test_analytic_unroll():
    info = analyze(unit_of(ONE_STMT))
    rep = analytic_evaluate(info, _cfg(info, **{"loop__f/L0__unroll": unroll(4)}), U280)
    assert (rep.worst_case_latency, rep.lut, rep.ff) == (4, 40, 32)


def test_analytic_pipeline():
    info = analyze(unit_of(ONE_STMT))
    rep = analytic_evaluate(info, _cfg(info, **{"loop__f/L0__pipeline": ON}), U280)
    assert rep.worst_case_latency == 1 + 15
    info2 = analyze(unit_of(TWO_STMT))
    rep2 = analytic_evaluate(info2, _cfg(info2, **{"loop__f/L0__pipeline": ON}), U280)
    assert rep2.worst_case_latency == 2 + 15


def test_analytic_partition_relieves_contention():
    src = ("void f(int a[16], int o[16]) {\n    for (int i = 0; i < 16; i++) {\n"
           "        o[i] = a[i] + a[(i + 1) % 16] + a[(i + 2) % 16] + a[(i + 3) % 16];\n    }\n}\n")
    info = analyze(unit_of(src))
    base = {"loop:f/L0:pipeline": ON, "loop:f/L0:unroll": unroll(2)}
    sites = enumerate_sites(info)
    slow = analytic_evaluate(info, PragmaConfig.from_mapping(sites, base), U280)
    fast = analytic_evaluate(info, PragmaConfig.from_mapping(
        sites, {**base, "array:f/a:dim1": partition("cyclic", 4)}), U280)
    # A = 4 accesses, u = 2: II = ceil(8/2) = 4 unpartitioned, ceil(8/8) = 1 at p = 4
    assert slow.worst_case_latency == 1 + 7 * 4
    assert fast.worst_case_latency == 1 + 7 * 1
    # one 18K block per array, times the effective partition factor
    assert (slow.bram_18k, fast.bram_18k) == (2, 5)


@pytest.mark.parametrize("idx", range(len(TOY_KERNELS)))
def test_analytic_unroll_monotone(idx):
    info = analyze(unit_of(TOY_KERNELS[idx]))
    rng = np.random.default_rng(idx)
    for _ in range(20):
        cfg = random_config(info, rng)
        for site, opt in zip(cfg.sites, cfg.settings):
            if site.kind.value != "unroll" or opt.kind != "unroll":
                continue
            tc = info.loop(site.target).trip_count
            if opt.factor * 2 > tc:
                continue
            bigger = cfg.with_setting(site.key, unroll(opt.factor * 2))
            a, b = analytic_evaluate(info, cfg, U280), analytic_evaluate(info, bigger, U280)
            assert b.worst_case_latency <= a.worst_case_latency
            assert b.lut >= a.lut and b.ff >= a.ff


def test_analytic_is_pure(multi):
    unit, info = multi
    cfg = random_config(info, np.random.default_rng(5))
    reps = {render_report(AnalyticEvaluator().evaluate(unit, analyze(unit), cfg, ZU9))
            for _ in range(3)}
    assert len(reps) == 1


# ---- external backend ----------------------------------------------------------------

def _adapter(tmp_path, body):
    script = tmp_path / "adapter.py"
    script.write_text("import os, shutil, sys, time\nworkdir = sys.argv[1]\n" + body)
    return f"{sys.executable} {script} {{workdir}}"


def test_external_copies_golden_report(tmp_path, toy):
    unit, info = toy
    golden = tmp_path / "golden.xml"
    golden.write_text(REPORT)
    cmd = _adapter(tmp_path, f"os.makedirs(os.path.join(workdir, 'proj/solution1/syn/report'))\n"
                             f"shutil.copy({str(golden)!r}, os.path.join(workdir, "
                             f"'proj/solution1/syn/report/csynth.xml'))\n")
    cfg = _cfg(info, **{"loop__toy/L0__pipeline": ON})
    wd = tmp_path / "work"
    rep = external_evaluate(wd, unit, info, cfg, cmd, ZU9, timeout=30)
    assert rep == REFERENCE
    assert "#pragma HLS pipeline" in (wd / "src" / "kernel.c").read_text()
    script = (wd / "script.tcl").read_text()
    assert "set_top toy" in script and "xczu9eg-ffvb1156-2-e" in script
    assert (wd / "adapter.log").exists()


def test_external_timeout(tmp_path, toy):
    unit, info = toy
    cmd = _adapter(tmp_path, "time.sleep(30)\n")
    rep = external_evaluate(tmp_path / "w", unit, info, PragmaConfig.all_off(enumerate_sites(info)),
                            cmd, ZU9, timeout=0.5)
    assert not rep.ok and rep.reason == "timeout"


def test_external_nonzero_exit_without_report(tmp_path, toy):
    unit, info = toy
    cmd = _adapter(tmp_path, "sys.exit(3)\n")
    with pytest.raises(BackendUnavailable, match="exited 3"):
        external_evaluate(tmp_path / "w", unit, info, PragmaConfig.all_off(enumerate_sites(info)),
                          cmd, ZU9, timeout=30)


def test_external_clean_exit_without_report(tmp_path, toy):
    unit, info = toy
    cmd = _adapter(tmp_path, "pass\n")
    rep = external_evaluate(tmp_path / "w", unit, info, PragmaConfig.all_off(enumerate_sites(info)),
                            cmd, ZU9, timeout=30)
    assert rep.reason == "no report"


def test_external_missing_adapter(tmp_path, toy):
    unit, info = toy
    with pytest.raises(BackendUnavailable, match="not found"):
        external_evaluate(tmp_path / "w", unit, info, PragmaConfig.all_off(enumerate_sites(info)),
                          "/nonexistent/synth-tool {workdir}", ZU9)


def test_external_evaluator_isolates_workdirs(tmp_path, toy):
    unit, info = toy
    cmd = _adapter(tmp_path, "open(os.path.join(workdir, 'csynth.xml'), 'w').write("
                             + json.dumps(REPORT) + ")\n")
    ev = ExternalEvaluator(cmd, tmp_path / "root", timeout=30)
    cfg = PragmaConfig.all_off(enumerate_sites(info))
    assert ev.evaluate(unit, info, cfg, ZU9) == REFERENCE
    assert ev.evaluate(unit, info, cfg, ZU9) == REFERENCE
    assert len(list((tmp_path / "root").iterdir())) == 2


def test_synthesis_script_lists_files(multi):
    unit, info = multi
    text = synthesis_script(unit, info.top_function, U280)
    assert "add_files src/defs.h" in text and "add_files src/top.c" in text
    assert "create_clock -period 10.0" in text
