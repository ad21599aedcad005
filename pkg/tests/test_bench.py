import json

import numpy as np
import pytest

from chromac import bench
from chromac.bench import BENCHMARKS, BenchReport, bench_one, load_benchmark, run_benchmarks
from chromac.types import PhysicalType as P


def rules_used(name):
    return set(load_benchmark(name).rules.values())


def input_types(name):
    return {n: t.phys for n, t in load_benchmark(name).input_types.items()}


def out_phys(name):
    tp = load_benchmark(name)
    return [t.phys for t in tp.output_types.values()]


def test_spaceconv_structure():
    assert input_types("spaceconv") == {"img": P.sRGB}
    assert out_phys("spaceconv") == [P.opRGB]


def test_colorblindness_structure():
    assert input_types("colorblindness") == {"img": P.sRGB, "deficiency": P.Matrix}
    assert {"Cast", "MatMul"} <= rules_used("colorblindness")
    assert out_phys("colorblindness") == [P.sRGB]


def test_adaptation_structure():
    assert sorted(input_types("adaptation").values(), key=str) == sorted([P.sRGB, P.Light, P.Light], key=str)
    assert "TriScale" in rules_used("adaptation")


def test_interpolation_structure():
    assert input_types("interpolation") == {"image1": P.sRGB, "image2": P.sRGB}
    assert {"TristimulusAdd", "TriScale"} <= rules_used("interpolation")


def test_mixing_structure():
    assert set(input_types("mixing").values()) == {P.Pigment}
    assert {"PgmtMix", "Reflect", "Cast"} <= rules_used("mixing")
    assert out_phys("mixing") == [P.sRGB]


def test_lab2hsv_structure():
    assert input_types("lab2hsv") == {"lab": P.LAB}
    assert out_phys("lab2hsv") == [P.HSV]


@pytest.mark.parametrize("name", BENCHMARKS)
def test_inputs_match_declared_shapes(name):
    tp = load_benchmark(name, 8)
    ins = bench.benchmark_inputs(name, tp, np.random.default_rng(0))
    assert {k: v.shape for k, v in ins.items()} == {k: t.erase() for k, t in tp.input_types.items()}


def test_report_row_invariants():
    r = bench_one("interpolation", 8, np.random.default_rng(0))
    assert r.status == "ok" and r.error is None
    assert r.deviation >= 0 and r.cost_opt <= r.cost_unopt
    assert json.loads(r.to_json())["name"] == "interpolation"


def test_failing_row_does_not_abort(monkeypatch):
    real = bench.load_benchmark

    def flaky(name, size=None):
        if name == "spaceconv":
            raise RuntimeError("boom")
        return real(name, size)

    monkeypatch.setattr(bench, "load_benchmark", flaky)
    reports = run_benchmarks(["spaceconv", "interpolation"], size=8, small_size=8, seed=0)
    assert [r.status for r in reports] == ["error", "ok"]
    assert "boom" in reports[0].error
    table = bench.format_table(reports)
    assert "spaceconv: RuntimeError: boom" in table


def test_seed_from_env(monkeypatch):
    monkeypatch.setenv("CHROMAC_SEED", "42")
    assert bench.seed_from_env() == 42
    monkeypatch.delenv("CHROMAC_SEED")
    assert bench.seed_from_env() == 0


def test_format_jsonl_one_line_per_row():
    rows = [BenchReport("a", 1), BenchReport("b", 2)]
    lines = bench.format_jsonl(rows).splitlines()
    assert [json.loads(x)["name"] for x in lines] == ["a", "b"]
