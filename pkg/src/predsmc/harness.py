"""Scenario loading, the single-rate closed-loop simulation engine, and trace I/O.

Per step the loop measures the delayed output, forwards it to the current
instant, computes the control from step-start information, then advances the
observer and the plant under a zero-order-hold input.  Identical scenarios
produce byte-identical trace files.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, control_law
from .errors import (
    AssumptionViolationError,
    DivergenceError,
    ScenarioError,
    TraceFormatError,
    UncontrollableError,
)
from .observer import ObserverGains, ObserverState, observer_step, reconstruct_fault
from .plant import (
    DelayProfile,
    FaultSignal,
    HistoryBuffer,
    PlantModel,
    UncertaintyModel,
    controllability_rank,
    measure_output,
    plant_step,
)
from .predictor import predict_x2

_BOUND_TOL = 1e-9  # slack on assumption monitors for roundoff

# (name, width key) in file order; width keys resolve against model dimensions.
_LAYOUT = (
    ("t", ""),
    ("x1", "np"),
    ("x2", "p"),
    ("x_hat1", "np"),
    ("x_hat2", "p"),
    ("tilde_x1", "np"),
    ("tilde_x2", "p"),
    ("xi_hat", "np"),
    ("d", "m"),
    ("d_hat", "m"),
    ("delta_norm", ""),
    ("y", "p"),
    ("tau", ""),
    ("s", "np"),
    ("u", "m"),
    ("u_d", "m"),
    ("u_nom", "m"),
    ("u_sm", "m"),
    ("rho_used", ""),
)
_SCALAR_COLUMNS = {name for name, kind in _LAYOUT if kind == ""}


@dataclass
class Trace:
    """Uniformly sampled record of every closed-loop signal.

    Scalar-per-sample signals are 1-D arrays; vector signals are (N, width).
    """

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x_hat1: np.ndarray
    x_hat2: np.ndarray
    tilde_x1: np.ndarray
    tilde_x2: np.ndarray
    xi_hat: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    delta_norm: np.ndarray
    y: np.ndarray
    tau: np.ndarray
    s: np.ndarray
    u: np.ndarray
    u_d: np.ndarray
    u_nom: np.ndarray
    u_sm: np.ndarray
    rho_used: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]

    def header(self) -> list[str]:
        names = []
        for name, kind in _LAYOUT:
            col = getattr(self, name)
            if kind == "" or col.shape[1] == 1:
                names.append(name)
            else:
                names.extend(f"{name}_{j}" for j in range(col.shape[1]))
        return names

    def truncate(self, n: int) -> "Trace":
        return Trace(**{name: getattr(self, name)[:n] for name, _ in _LAYOUT})


@dataclass(frozen=True)
class Scenario:
    """Everything needed for one reproducible closed-loop run."""

    model: PlantModel
    delay: DelayProfile
    fault: FaultSignal
    uncertainty: UncertaintyModel
    gains: ObserverGains
    cfg: ControllerConfig
    x0: np.ndarray
    t_final: float
    h: float
    label: str = ""

    def with_controller(self, **changes) -> "Scenario":
        """Derived scenario with controller fields replaced.

        Switching to scheduled mode wires the schedule's uncertainty and delay
        bounds from the scenario unless explicitly overridden.
        """
        if changes.get("rho_mode") == "scheduled":
            changes.setdefault("delta_bar", self.uncertainty.delta_bar)
            changes.setdefault("r_bar", self.delay.r_bar)
        return replace(self, cfg=replace(self.cfg, **changes))


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ScenarioError(f"{path}: {message}")


def _get(doc: dict, path: str, key: str, required: bool = True, default=None):
    if key not in doc:
        _expect(not required, f"{path}.{key}", "missing required key")
        return default
    return doc[key]


def _load_model(doc: dict) -> PlantModel:
    _expect(isinstance(doc, dict), "model", "must be an object of matrix blocks")
    blocks = {}
    for key in ("A11", "A12", "A21", "A22", "B1", "D1", "D2"):
        blocks[key] = _get(doc, "model", key)
    try:
        model = PlantModel(**blocks)
    except Exception as exc:
        raise ScenarioError(f"model: {exc}") from exc
    if np.linalg.matrix_rank(model.B) < model.m:
        raise ScenarioError("model.B1: stacked input matrix is not full rank")
    if controllability_rank(model.A, model.B) < model.n:
        raise UncontrollableError("model: stacked pair (A, B) is not controllable")
    return model


def _load_delay(doc: dict, t_final: float) -> DelayProfile:
    a = float(_get(doc, "delay", "a"))
    b = float(_get(doc, "delay", "b", required=False, default=0.0))
    c = float(_get(doc, "delay", "c", required=False, default=0.0))
    tau_max = _get(doc, "delay", "tau_max", required=False)
    r_bar = _get(doc, "delay", "r_bar", required=False)
    try:
        if b == 0.0 or c == 0.0:
            profile = DelayProfile.constant(a)
            if tau_max is not None or r_bar is not None:
                profile = DelayProfile(
                    profile.tau_fn, profile.tau_dot_fn,
                    tau_max=float(tau_max) if tau_max is not None else a,
                    r_bar=float(r_bar) if r_bar is not None else 0.0,
                )
        else:
            profile = DelayProfile.sinusoidal(
                a, b, c,
                tau_max=None if tau_max is None else float(tau_max),
                r_bar=None if r_bar is None else float(r_bar),
            )
    except Exception as exc:
        raise ScenarioError(f"delay: {exc}") from exc
    for t in np.linspace(0.0, t_final, 257):
        _expect(
            -_BOUND_TOL <= profile.tau(t) <= profile.tau_max + _BOUND_TOL,
            "delay.tau_max", f"tau({t:.4g}) = {profile.tau(t):.6g} outside [0, tau_max]",
        )
        _expect(
            abs(profile.tau_dot(t)) <= profile.r_bar + _BOUND_TOL,
            "delay.r_bar", f"|tau_dot({t:.4g})| = {abs(profile.tau_dot(t)):.6g} exceeds r_bar",
        )
    return profile


def _load_fault(doc: dict, m: int) -> FaultSignal:
    terms_doc = _get(doc, "fault", "terms", required=False, default=[])
    alpha = _get(doc, "fault", "alpha", required=False)
    if not terms_doc:
        return FaultSignal.zero(m)
    terms = []
    for i, term in enumerate(terms_doc):
        path = f"fault.terms[{i}]"
        _expect(isinstance(term, dict), path, "must be an object")
        kind = _get(term, path, "kind", required=False, default="sin")
        _expect(kind in ("sin", "cos"), f"{path}.kind", f"unknown kind {kind!r}")
        terms.append(
            (
                float(_get(term, path, "amp")),
                float(_get(term, path, "freq")),
                float(_get(term, path, "phase", required=False, default=0.0)),
                kind,
            )
        )
    try:
        return FaultSignal.sinusoids(terms, m=m, alpha=None if alpha is None else float(alpha))
    except Exception as exc:
        raise ScenarioError(f"fault: {exc}") from exc


def _load_uncertainty(doc: dict, n: int, n_delta: int) -> UncertaintyModel:
    G = _get(doc, "uncertainty", "G", required=False)
    delta_bar = _get(doc, "uncertainty", "delta_bar", required=False)
    if G is None:
        return UncertaintyModel.zero(n_delta)
    try:
        unc = UncertaintyModel.linear(G, None if delta_bar is None else float(delta_bar))
    except Exception as exc:
        raise ScenarioError(f"uncertainty: {exc}") from exc
    _expect(
        np.atleast_2d(np.asarray(G)).shape == (n_delta, n),
        "uncertainty.G", f"expected shape ({n_delta}, {n})",
    )
    return unc


def load_scenario(source) -> Scenario:
    """Build a fully validated Scenario from a JSON file path or parsed document."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"document: invalid JSON ({exc})") from exc
    else:
        doc = source
    _expect(isinstance(doc, dict), "document", "top level must be an object")

    sim = _get(doc, "document", "sim")
    t_final = float(_get(sim, "sim", "t_final"))
    h = float(_get(sim, "sim", "h"))
    _expect(h > 0.0, "sim.h", "step must be > 0")
    _expect(t_final > 0.0, "sim.t_final", "horizon must be > 0")

    model = _load_model(_get(doc, "document", "model"))
    delay = _load_delay(_get(doc, "document", "delay"), t_final)
    fault = _load_fault(_get(doc, "document", "fault", required=False, default={}), model.m)
    unc = _load_uncertainty(
        _get(doc, "document", "uncertainty", required=False, default={}), model.n, model.n_delta
    )

    obs_doc = _get(doc, "document", "observer")
    try:
        gains = ObserverGains(
            k1=float(_get(obs_doc, "observer", "k1")),
            k2=float(_get(obs_doc, "observer", "k2")),
            k3=float(_get(obs_doc, "observer", "k3")),
            k4=float(_get(obs_doc, "observer", "k4")),
            literal_signs=bool(
                _get(obs_doc, "observer", "literal_signs", required=False, default=False)
            ),
        )
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"observer: {exc}") from exc

    ctl_doc = _get(doc, "document", "controller")
    rho_doc = _get(ctl_doc, "controller", "rho")
    mode = _get(rho_doc, "controller.rho", "mode")
    kwargs: dict = {
        "S2": _get(ctl_doc, "controller", "S2"),
        "rho_mode": mode,
        "boundary_layer": float(
            _get(ctl_doc, "controller", "boundary_layer", required=False, default=0.0)
        ),
    }
    band = _get(ctl_doc, "controller", "band", required=False)
    if band is not None:
        kwargs["band"] = float(band)
    if mode == "constant":
        kwargs["rho_value"] = float(_get(rho_doc, "controller.rho", "value"))
    elif mode == "scheduled":
        kwargs.update(
            phi=float(_get(rho_doc, "controller.rho", "phi")),
            eta=float(_get(rho_doc, "controller.rho", "eta")),
            inflation=float(
                _get(rho_doc, "controller.rho", "inflation", required=False, default=1.2)
            ),
            delta_bar=unc.delta_bar,
            r_bar=delay.r_bar,
        )
    else:
        raise ScenarioError(f"controller.rho.mode: unknown mode {mode!r}")
    try:
        cfg = ControllerConfig(**kwargs)
        cfg.validate_with_model(model)
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"controller: {exc}") from exc

    x0 = np.asarray(_get(sim, "sim", "x0"), dtype=float)
    _expect(x0.shape == (model.n,), "sim.x0", f"expected {model.n} entries")

    return Scenario(
        model=model, delay=delay, fault=fault, uncertainty=unc, gains=gains, cfg=cfg,
        x0=x0, t_final=t_final, h=h,
        label=str(_get(doc, "document", "label", required=False, default="")),
    )


def bundled_scenario_path(name: str) -> Path:
    """Path to a scenario shipped with the package (e.g. "nominal", "uncertain")."""
    path = Path(str(importlib.resources.files("predsmc") / "scenarios" / f"{name}.json"))
    if not path.exists():
        raise ScenarioError(f"document: no bundled scenario named {name!r}")
    return path


def _alloc_trace(n_rows: int, model: PlantModel) -> Trace:
    widths = {"": None, "np": model.n - model.p, "p": model.p, "m": model.m}
    cols = {}
    for name, kind in _LAYOUT:
        if kind == "":
            cols[name] = np.zeros(n_rows)
        else:
            cols[name] = np.zeros((n_rows, widths[kind]))
    return Trace(**cols)


def _monitor_assumptions(scenario: Scenario, x, t: float, d, delta) -> None:
    delay, fault, unc = scenario.delay, scenario.fault, scenario.uncertainty
    tau = delay.tau(t)
    if not -_BOUND_TOL <= tau <= delay.tau_max + _BOUND_TOL:
        raise AssumptionViolationError(
            f"delay tau({t:.6g}) = {tau:.6g} outside [0, tau_max]", t=t
        )
    rate = abs(delay.tau_dot(t))
    if rate > delay.r_bar + _BOUND_TOL:
        raise AssumptionViolationError(
            f"delay rate |tau_dot({t:.6g})| = {rate:.6g} exceeds r_bar = {delay.r_bar}", t=t
        )
    d_norm = float(np.linalg.norm(d))
    if d_norm > fault.alpha + _BOUND_TOL:
        raise AssumptionViolationError(
            f"fault |d({t:.6g})| = {d_norm:.6g} exceeds alpha = {fault.alpha}", t=t
        )
    delta_norm = float(np.linalg.norm(delta))
    limit = unc.delta_bar * float(np.linalg.norm(x))
    if delta_norm > limit + _BOUND_TOL:
        raise AssumptionViolationError(
            f"uncertainty |delta(x, {t:.6g})| = {delta_norm:.6g} exceeds "
            f"delta_bar |x| = {limit:.6g}", t=t
        )


def run(scenario: Scenario) -> Trace:
    """Deterministic closed-loop simulation producing the full signal trace.

    Raises DivergenceError (carrying the partial trace) if any signal leaves
    the finite range, and AssumptionViolationError if an exogenous signal
    breaks its declared bound.
    """
    model, delay, fault, unc = (
        scenario.model, scenario.delay, scenario.fault, scenario.uncertainty
    )
    h = scenario.h
    n_steps = int(round(scenario.t_final / h))
    np_ = model.n - model.p

    depth = int(math.ceil(delay.tau_max / h)) + 2
    buf = HistoryBuffer(scenario.x0, t0=0.0, h=h, depth=depth)
    obs = ObserverState(x_hat_1=scenario.x0[:np_].copy(), xi_hat=np.zeros(np_))
    x = scenario.x0.copy()
    trace = _alloc_trace(n_steps + 1, model)

    for k in range(n_steps + 1):
        t = k * h
        d_k = fault.d(t)
        delta_k = unc.delta(x, t)
        try:
            _monitor_assumptions(scenario, x, t, d_k, delta_k)
        except AssumptionViolationError as exc:
            exc.trace = trace.truncate(k)
            raise

        y = measure_output(buf, t, delay, model)
        pred = predict_x2(y, buf, t, delay, model, h)
        dec = control_law(x[:np_], pred.x_hat_2, obs.xi_hat, t, delay, scenario.cfg, model)

        trace.t[k] = t
        trace.x1[k] = x[:np_]
        trace.x2[k] = x[np_:]
        trace.x_hat1[k] = obs.x_hat_1
        trace.x_hat2[k] = pred.x_hat_2
        trace.tilde_x1[k] = x[:np_] - obs.x_hat_1
        trace.tilde_x2[k] = x[np_:] - pred.x_hat_2
        trace.xi_hat[k] = obs.xi_hat
        trace.d[k] = d_k
        trace.d_hat[k] = reconstruct_fault(obs.xi_hat, model)
        trace.delta_norm[k] = np.linalg.norm(delta_k)
        trace.y[k] = y
        trace.tau[k] = pred.tau_used
        trace.s[k] = dec.s
        trace.u[k] = dec.u
        trace.u_d[k] = dec.u_d
        trace.u_nom[k] = dec.u_nom
        trace.u_sm[k] = dec.u_sm
        trace.rho_used[k] = dec.rho_used

        if k == n_steps:
            break
        try:
            obs = observer_step(obs, x[:np_], pred.x_hat_2, dec.u, model, scenario.gains, h)
            x = plant_step(model, x, t, h, dec.u, fault, unc)
        except DivergenceError as exc:
            raise DivergenceError(str(exc), t=t, trace=trace.truncate(k + 1)) from exc
        buf.append(x)

    return trace


def write_trace(trace: Trace, path) -> None:
    """CSV with one header row and full round-trip double precision."""
    path = Path(path)
    names = trace.header()
    lines = [",".join(names)]
    n = len(trace)
    columns = []
    for name, kind in _LAYOUT:
        col = getattr(trace, name)
        if kind == "":
            columns.append(col.reshape(n, 1))
        else:
            columns.append(col)
    flat = np.hstack(columns)
    for row in flat:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_trace(path) -> Trace:
    """Re-load a trace CSV written by write_trace."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
    if not header:
        raise TraceFormatError(f"{path}: empty trace file")
    names = header.split(",")
    widths: dict[str, int] = {}
    for col in names:
        base, _, idx = col.rpartition("_")
        if idx.isdigit() and base in {n for n, _ in _LAYOUT}:
            widths[base] = max(widths.get(base, 0), int(idx) + 1)
        else:
            if col not in {n for n, _ in _LAYOUT}:
                raise TraceFormatError(f"{path}: unknown column {col!r}")
            widths[col] = max(widths.get(col, 1), 1)
    missing = [n for n, _ in _LAYOUT if n not in widths]
    if missing:
        raise TraceFormatError(f"{path}: missing columns {missing}")
    expected = []
    for name, kind in _LAYOUT:
        if kind == "" or widths[name] == 1:
            expected.append(name)
        else:
            expected.extend(f"{name}_{j}" for j in range(widths[name]))
    if names != expected:
        raise TraceFormatError(f"{path}: column order does not match the trace layout")

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise TraceFormatError(
            f"{path}: {data.shape[1]} data columns but {len(names)} header names"
        )
    cols = {}
    offset = 0
    for name, kind in _LAYOUT:
        w = widths[name]
        block = data[:, offset : offset + w]
        cols[name] = block[:, 0] if kind == "" else block
        offset += w
    return Trace(**cols)
