"""Partitioned uncertain LTI plant, exogenous signal models, and the state history buffer.

The plant is split into a measured block x1 and an unmeasured block x2 whose
delayed value is the only output.  Faults enter through the input channel,
parametric uncertainty through a separate distribution matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, DivergenceError, DomainError, HistoryUnderflowError

_NODE_SNAP = 1e-9  # fraction of a step within which a query counts as on-grid


def _mat(value, name: str) -> np.ndarray:
    A = np.atleast_2d(np.asarray(value, dtype=float))
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name}: non-finite entries")
    return A


@dataclass(frozen=True)
class PlantModel:
    """Partitioned system matrices; x1 is measured, x2 is observed only after a delay."""

    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    B1: np.ndarray
    D1: np.ndarray
    D2: np.ndarray

    def __post_init__(self):
        for name in ("A11", "A12", "A21", "A22", "B1", "D1", "D2"):
            object.__setattr__(self, name, _mat(getattr(self, name), name))
        np_, p = self.A11.shape[0], self.A22.shape[0]
        checks = {
            "A11": (np_, np_),
            "A12": (np_, p),
            "A21": (p, np_),
            "A22": (p, p),
            "B1": (np_, self.B1.shape[1]),
            "D1": (np_, self.D1.shape[1]),
            "D2": (p, self.D1.shape[1]),
        }
        for name, shape in checks.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(
                    f"PlantModel.{name}: expected shape {shape}, got {getattr(self, name).shape}"
                )
        # Stacked forms, cached for the integration hot path.
        object.__setattr__(self, "A", np.block([[self.A11, self.A12], [self.A21, self.A22]]))
        object.__setattr__(
            self, "B", np.vstack([self.B1, np.zeros((p, self.B1.shape[1]))])
        )
        object.__setattr__(self, "D", np.vstack([self.D1, self.D2]))

    @property
    def n(self) -> int:
        return self.A11.shape[0] + self.A22.shape[0]

    @property
    def p(self) -> int:
        return self.A22.shape[0]

    @property
    def m(self) -> int:
        return self.B1.shape[1]

    @property
    def n_delta(self) -> int:
        return self.D1.shape[1]

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        np_ = self.n - self.p
        return x[:np_], x[np_:]


def controllability_rank(A: np.ndarray, B: np.ndarray) -> int:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


@dataclass(frozen=True)
class DelayProfile:
    """Known time-varying measurement delay with its rate bound."""

    tau_fn: Callable[[float], float]
    tau_dot_fn: Callable[[float], float]
    tau_max: float
    r_bar: float

    def __post_init__(self):
        if not 0.0 <= self.r_bar < 1.0:
            raise DomainError(f"DelayProfile: r_bar must lie in [0, 1), got {self.r_bar}")
        if self.tau_max < 0.0:
            raise DomainError(f"DelayProfile: tau_max must be >= 0, got {self.tau_max}")

    def tau(self, t: float) -> float:
        return float(self.tau_fn(t))

    def tau_dot(self, t: float) -> float:
        return float(self.tau_dot_fn(t))

    @classmethod
    def constant(cls, value: float) -> "DelayProfile":
        return cls(lambda t: value, lambda t: 0.0, tau_max=value, r_bar=0.0)

    @classmethod
    def sinusoidal(cls, a: float, b: float, c: float,
                   tau_max: float | None = None, r_bar: float | None = None) -> "DelayProfile":
        """tau(t) = a + b*sin(c*t); bounds default to the tight analytic values."""
        if tau_max is None:
            tau_max = a + abs(b)
        if r_bar is None:
            r_bar = abs(b * c)
        if a - abs(b) < 0.0:
            raise DomainError("DelayProfile: a - |b| < 0 makes the delay negative")
        return cls(
            lambda t: a + b * math.sin(c * t),
            lambda t: b * c * math.cos(c * t),
            tau_max=tau_max,
            r_bar=r_bar,
        )


@dataclass(frozen=True)
class FaultSignal:
    """Bounded actuator fault d(t) entering through the input channel."""

    d_fn: Callable[[float], np.ndarray]
    alpha: float
    m: int = 1

    def d(self, t: float) -> np.ndarray:
        return np.asarray(self.d_fn(t), dtype=float).reshape(self.m)

    @classmethod
    def zero(cls, m: int = 1) -> "FaultSignal":
        return cls(lambda t: np.zeros(m), alpha=0.0, m=m)

    @classmethod
    def sinusoids(cls, terms, m: int = 1, alpha: float | None = None) -> "FaultSignal":
        """Sum of sinusoid terms [(amp, freq, phase, kind)], kind in {sin, cos}, on channel 0."""
        parsed = []
        for amp, freq, phase, kind in terms:
            if kind not in ("sin", "cos"):
                raise DomainError(f"FaultSignal: unknown term kind {kind!r}")
            parsed.append((float(amp), float(freq), float(phase), kind))
        if alpha is None:
            alpha = sum(abs(a) for a, _, _, _ in parsed)

        def d_fn(t: float) -> np.ndarray:
            out = np.zeros(m)
            for a, w, ph, kind in parsed:
                f = math.sin if kind == "sin" else math.cos
                out[0] += a * f(w * t + ph)
            return out

        return cls(d_fn, alpha=float(alpha), m=m)


@dataclass(frozen=True)
class UncertaintyModel:
    """State-dependent parametric uncertainty with linear-growth bound |delta| <= delta_bar*|x|."""

    delta_fn: Callable[[np.ndarray, float], np.ndarray]
    delta_bar: float
    n_delta: int

    def delta(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(self.delta_fn(x, t), dtype=float).reshape(self.n_delta)

    @classmethod
    def zero(cls, n_delta: int) -> "UncertaintyModel":
        return cls(lambda x, t: np.zeros(n_delta), delta_bar=0.0, n_delta=n_delta)

    @classmethod
    def linear(cls, G, delta_bar: float | None = None) -> "UncertaintyModel":
        """delta(x, t) = G x; the bound defaults to the spectral norm of G."""
        Gm = _mat(G, "UncertaintyModel.G")
        gain = float(np.linalg.norm(Gm, 2))
        if delta_bar is None:
            delta_bar = gain
        elif gain > delta_bar * (1 + 1e-12):
            raise DomainError(
                f"UncertaintyModel: |G| = {gain:.6g} exceeds declared delta_bar = {delta_bar:.6g}"
            )
        return cls(lambda x, t: Gm @ x, delta_bar=float(delta_bar), n_delta=Gm.shape[0])


class HistoryBuffer:
    """Uniformly sampled full-state history with linear interpolation.

    Samples sit at t0 + k*h.  Construction pre-fills [t0 - depth*h, t0] with
    the initial state so that delayed lookups are defined from the start.
    """

    def __init__(self, x0: np.ndarray, t0: float, h: float, depth: int):
        if h <= 0.0:
            raise DomainError("HistoryBuffer: step must be positive")
        if depth < 0:
            raise DomainError("HistoryBuffer: depth must be >= 0")
        x0 = np.asarray(x0, dtype=float)
        self.h = float(h)
        self.t0 = float(t0) - depth * self.h
        self._n = x0.shape[0]
        self._data = np.empty((max(64, depth + 1), self._n))
        self._data[: depth + 1] = x0
        self._len = depth + 1

    def __len__(self) -> int:
        return self._len

    @property
    def t_oldest(self) -> float:
        return self.t0

    @property
    def t_latest(self) -> float:
        return self.t0 + (self._len - 1) * self.h

    def append(self, x: np.ndarray) -> None:
        if self._len == self._data.shape[0]:
            grown = np.empty((2 * self._data.shape[0], self._n))
            grown[: self._len] = self._data[: self._len]
            self._data = grown
        self._data[self._len] = x
        self._len += 1

    def _locate(self, t_query: float) -> tuple[int, float]:
        idx = (t_query - self.t0) / self.h
        if idx < -_NODE_SNAP or idx > (self._len - 1) + _NODE_SNAP:
            raise HistoryUnderflowError(
                f"history query t={t_query:.6g} outside stored window "
                f"[{self.t_oldest:.6g}, {self.t_latest:.6g}]"
            )
        i0 = int(math.floor(idx))
        i0 = min(max(i0, 0), self._len - 2) if self._len > 1 else 0
        frac = idx - i0
        return i0, min(max(frac, 0.0), 1.0)

    def sample(self, t_query: float) -> np.ndarray:
        """State at t_query: exact at sample nodes, linear between them."""
        i0, frac = self._locate(t_query)
        if frac < _NODE_SNAP:
            return self._data[i0].copy()
        if frac > 1.0 - _NODE_SNAP:
            return self._data[i0 + 1].copy()
        return (1.0 - frac) * self._data[i0] + frac * self._data[i0 + 1]

    def node_grid(self, t_from: float, t_to: float) -> tuple[np.ndarray, np.ndarray]:
        """Sample times and states at the grid nodes inside [t_from, t_to]."""
        j0 = int(math.ceil((t_from - self.t0) / self.h - _NODE_SNAP))
        j1 = int(math.floor((t_to - self.t0) / self.h + _NODE_SNAP))
        j0 = max(j0, 0)
        j1 = min(j1, self._len - 1)
        if j1 < j0:
            return np.empty(0), np.empty((0, self._n))
        times = self.t0 + self.h * np.arange(j0, j1 + 1)
        return times, self._data[j0 : j1 + 1]


def plant_derivative(model: PlantModel, x, u, d, delta) -> np.ndarray:
    """Right-hand side of the partitioned plant dynamics."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if x.shape != (model.n,):
        raise DimensionError(f"plant_derivative: state shape {x.shape} != ({model.n},)")
    if u.shape != (model.m,) or d.shape != (model.m,):
        raise DimensionError("plant_derivative: input/fault dimension mismatch")
    if delta.shape != (model.n_delta,):
        raise DimensionError("plant_derivative: uncertainty dimension mismatch")
    return model.A @ x + model.B @ (u + d) + model.D @ delta


def plant_step(model: PlantModel, x, t: float, h: float, u,
               fault: FaultSignal, unc: UncertaintyModel) -> np.ndarray:
    """One classical RK4 step with the control held constant over the step."""
    if h <= 0.0:
        raise DomainError("plant_step: step must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)

    def f(ts: float, xs: np.ndarray) -> np.ndarray:
        return plant_derivative(model, xs, u, fault.d(ts), unc.delta(xs, ts))

    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise DivergenceError(f"plant state non-finite after step at t={t:.6g}", t=t)
    return x_next


def sample_history(buf: HistoryBuffer, t_query: float) -> np.ndarray:
    """Interpolated full state at t_query (exact at stored timestamps)."""
    return buf.sample(t_query)


def measure_output(buf: HistoryBuffer, t: float, delay: DelayProfile,
                   model: PlantModel) -> np.ndarray:
    """Delayed measurement: the x2 block of the state at t - tau(t)."""
    tau = delay.tau(t)
    full = buf.sample(t - tau)
    return full[model.n - model.p :]
