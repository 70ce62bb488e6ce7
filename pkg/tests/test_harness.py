import dataclasses
import json
import math

import numpy as np
import pytest

from conftest import load_bundled
from predsmc import bundled_scenario_path, load_scenario, read_trace, run, write_trace
from predsmc.errors import (
    AssumptionViolationError,
    ScenarioError,
    TraceFormatError,
    UncontrollableError,
)
from predsmc.plant import FaultSignal, UncertaintyModel


def minimal_doc(**overrides):
    doc = {
        "label": "test",
        "model": {
            "A11": [[-1.0]], "A12": [[1.0]], "A21": [[-3.0]], "A22": [[1.0]],
            "B1": [[1.0]], "D1": [[0.0, 0.0]], "D2": [[0.0, 0.0]],
        },
        "delay": {"a": 0.4, "b": 0.1, "c": 1.0},
        "fault": {"terms": []},
        "uncertainty": {"G": None, "delta_bar": 0.0},
        "observer": {"k1": 5.0, "k2": 2.0, "k3": 5.0, "k4": 2.0},
        "controller": {"S2": [[-5.0]], "rho": {"mode": "constant", "value": 2.0}},
        "sim": {"x0": [1.0, 0.4], "t_final": 2.0, "h": 0.001},
    }
    for key, value in overrides.items():
        head, _, tail = key.partition(".")
        if tail:
            doc[head][tail] = value
        else:
            doc[head] = value
    return doc


class TestLoadScenario:
    def test_bundled_nominal(self):
        scenario = load_scenario(bundled_scenario_path("nominal"))
        assert scenario.label == "nominal"
        assert scenario.fault.alpha == pytest.approx(0.3)
        assert scenario.delay.tau_max == pytest.approx(0.5)
        assert scenario.delay.r_bar == pytest.approx(0.1)
        assert scenario.uncertainty.delta_bar == 0.0
        assert scenario.cfg.rho_value == 2.0

    def test_bundled_uncertain(self):
        scenario = load_scenario(bundled_scenario_path("uncertain"))
        assert scenario.uncertainty.delta_bar == pytest.approx(1.0)
        assert scenario.cfg.rho_value == 5.0
        assert np.allclose(scenario.model.D1, [[0.4, 0.4]])

    def test_bundled_scheduled(self):
        scenario = load_scenario(bundled_scenario_path("uncertain_scheduled"))
        assert scenario.cfg.rho_mode == "scheduled"
        assert scenario.cfg.phi == pytest.approx(1.05)
        assert scenario.cfg.eta == pytest.approx(0.5)
        assert scenario.cfg.delta_bar == pytest.approx(1.0)
        assert scenario.cfg.r_bar == pytest.approx(0.1)

    def test_missing_key_names_path(self):
        doc = minimal_doc()
        del doc["model"]["A22"]
        with pytest.raises(ScenarioError, match="model.A22"):
            load_scenario(doc)

    def test_rate_bound_boundary(self):
        # |tau_dot| reaches 1.0: the delay-rate assumption requires r_bar < 1
        with pytest.raises(ScenarioError):
            load_scenario(minimal_doc(**{"delay": {"a": 0.6, "b": 0.5, "c": 2.0}}))
        with pytest.raises(ScenarioError):
            load_scenario(minimal_doc(**{"delay": {"a": 0.4, "b": 0.1, "c": 1.0, "r_bar": 1.0}}))

    def test_non_hurwitz_surface_rejected(self):
        with pytest.raises(ScenarioError, match="Hurwitz"):
            load_scenario(minimal_doc(**{"controller.S2": [[5.0]]}))

    def test_degenerate_input_channel_rejected(self):
        # B1 = 0 makes SB singular; the stacked-rank check rejects it first
        with pytest.raises(ScenarioError, match="full rank"):
            load_scenario(minimal_doc(**{"model.B1": [[0.0]]}))

    def test_uncontrollable_pair_rejected(self):
        doc = minimal_doc()
        doc["model"]["A12"] = [[0.0]]
        doc["model"]["A21"] = [[0.0]]
        doc["model"]["A22"] = [[-1.0]]
        doc["controller"]["S2"] = [[0.0]]
        with pytest.raises(UncontrollableError):
            load_scenario(doc)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ScenarioError):
            load_scenario(minimal_doc(**{"sim.x0": [1.0, 0.4, 0.0]}))

    def test_invalid_json_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ScenarioError, match="invalid JSON"):
            load_scenario(bad)

    def test_unknown_bundled_name(self):
        with pytest.raises(ScenarioError):
            bundled_scenario_path("no_such_scenario")


class TestRun:
    def test_zero_scenario_zero_trace(self):
        scenario = load_scenario(minimal_doc(**{"sim.x0": [0.0, 0.0]}))
        trace = run(scenario)
        for name in ("x1", "x2", "x_hat1", "x_hat2", "s", "u", "d_hat", "y"):
            assert np.all(getattr(trace, name) == 0.0), name
        assert np.all(trace.tau > 0.0)

    def test_trace_shapes_and_time_grid(self):
        scenario = load_scenario(minimal_doc())
        trace = run(scenario)
        assert len(trace) == 2001
        assert trace.t[0] == 0.0
        assert trace.t[-1] == pytest.approx(2.0)
        assert np.allclose(np.diff(trace.t), scenario.h)
        assert trace.x1.shape == (2001, 1)

    def test_decomposition_identity_every_row(self):
        trace = run(load_scenario(minimal_doc()))
        assert np.array_equal(trace.u, trace.u_d + trace.u_nom + trace.u_sm)

    def test_determinism(self):
        scenario = load_scenario(minimal_doc())
        a, b = run(scenario), run(scenario)
        for name in ("t", "x1", "x2", "u", "s", "xi_hat"):
            assert np.array_equal(getattr(a, name), getattr(b, name)), name

    def test_fault_bound_violation_aborts(self):
        scenario = load_scenario(minimal_doc())
        lying = FaultSignal(lambda t: np.array([0.2 * t]), alpha=0.05, m=1)
        scenario = dataclasses.replace(scenario, fault=lying)
        with pytest.raises(AssumptionViolationError, match="alpha"):
            run(scenario)

    def test_uncertainty_bound_violation_aborts(self):
        scenario = load_scenario(minimal_doc())
        lying = UncertaintyModel(lambda x, t: np.array([1.0, 0.0]), delta_bar=0.1, n_delta=2)
        scenario = dataclasses.replace(scenario, uncertainty=lying)
        with pytest.raises(AssumptionViolationError, match="delta_bar"):
            run(scenario)

    def test_refinement_consistency(self):
        # the explicit-Euler observer and ideal-sign switching are both O(h),
        # so agreement is expected at the chattering scale, not tighter
        scenario = load_bundled("nominal", t_final=4.0)
        end = run(scenario)
        half = run(dataclasses.replace(scenario, h=scenario.h / 2))
        x_end = np.hstack([end.x1[-1], end.x2[-1]])
        x_half = np.hstack([half.x1[-1], half.x2[-1]])
        assert np.linalg.norm(x_end - x_half) <= 5e-3

    def test_sliding_phase_free_decay(self):
        # once on the surface, x_hat2 follows its reduced dynamics to within
        # a small fraction of its value at the reach instant
        from predsmc.analysis import sliding_reach_time

        scenario = load_bundled("nominal", t_final=4.0)
        trace = run(scenario)
        t_star = sliding_reach_time(trace.t, trace.s, 0.01)
        k0 = int(round(t_star / scenario.h))
        a_bar = float((scenario.model.A22 - scenario.model.A21 @ scenario.cfg.S2)[0, 0])
        start = trace.x_hat2[k0, 0]
        steps = int(round(1.0 / scenario.h))
        predicted = start * np.exp(a_bar * (trace.t[k0 : k0 + steps] - trace.t[k0]))
        worst = np.max(np.abs(trace.x_hat2[k0 : k0 + steps, 0] - predicted))
        assert worst <= 0.02 * abs(start)


class TestTraceIO:
    def test_round_trip_exact(self, tmp_path):
        trace = run(load_scenario(minimal_doc(**{"sim.t_final": 0.5})))
        path = tmp_path / "trace.csv"
        write_trace(trace, path)
        back = read_trace(path)
        for name in ("t", "x1", "x2", "s", "u", "rho_used", "tau"):
            assert np.array_equal(getattr(trace, name), getattr(back, name)), name

    def test_header_and_row_count(self, tmp_path):
        trace = run(load_scenario(minimal_doc(**{"sim.t_final": 0.01})))
        path = tmp_path / "trace.csv"
        write_trace(trace, path)
        lines = path.read_text().splitlines()
        assert lines[0].split(",")[:3] == ["t", "x1", "x2"]
        assert len(lines) == len(trace) + 1

    def test_missing_column_rejected(self, tmp_path):
        trace = run(load_scenario(minimal_doc(**{"sim.t_final": 0.01})))
        path = tmp_path / "trace.csv"
        write_trace(trace, path)
        lines = path.read_text().splitlines()
        truncated = "\n".join(",".join(line.split(",")[:-1]) for line in lines)
        bad = tmp_path / "truncated.csv"
        bad.write_text(truncated + "\n")
        with pytest.raises(TraceFormatError, match="rho_used"):
            read_trace(bad)

    def test_unknown_column_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,bogus\n0.0,1.0\n")
        with pytest.raises(TraceFormatError):
            read_trace(bad)
