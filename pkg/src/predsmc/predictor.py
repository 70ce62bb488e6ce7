"""Forwards the delayed measurement to the current instant.

The estimate solves z' = A22 z + A21 x1(theta) over the lookback window
[t - tau, t] starting from the measurement, which realizes the
variation-of-constants solution of the delay-free x2 dynamics.  A literal
quadrature evaluation of the same formula is kept as a cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matnum
from .errors import DomainError
from .plant import DelayProfile, HistoryBuffer, PlantModel, UncertaintyModel

_TIME_SNAP = 1e-12


@dataclass(frozen=True)
class PredictorOutput:
    x_hat_2: np.ndarray
    tau_used: float
    window_samples: int


def _rk4_weights(A22: np.ndarray, delta: float):
    """Propagator and forcing weights of one RK4 step of z' = A22 z + f(theta).

    For constant A22 the step is linear in (z, f0, f_mid, f1); collecting terms
    gives R = I + A + A^2/2 + A^3/6 + A^4/24 with A = delta*A22, and polynomial
    weights on the three forcing samples.
    """
    p = A22.shape[0]
    eye = np.eye(p)
    A = delta * A22
    A2 = A @ A
    A3 = A2 @ A
    A4 = A3 @ A
    R = eye + A + A2 / 2.0 + A3 / 6.0 + A4 / 24.0
    Wa = (delta / 6.0) * (eye + A + A2 / 2.0 + A3 / 4.0)
    Wm = (delta / 6.0) * (4.0 * eye + 2.0 * A + A2 / 2.0)
    Wb = (delta / 6.0) * eye
    return R, Wa, Wm, Wb


def _x1_at(buf: HistoryBuffer, model: PlantModel, theta: float) -> np.ndarray:
    return buf.sample(theta)[: model.n - model.p]


def _rk4_substep(z, theta: float, delta: float, buf, model, A22):
    R, Wa, Wm, Wb = _rk4_weights(A22, delta)
    f0 = model.A21 @ _x1_at(buf, model, theta)
    fm = model.A21 @ _x1_at(buf, model, theta + 0.5 * delta)
    f1 = model.A21 @ _x1_at(buf, model, theta + delta)
    return R @ z + Wa @ f0 + Wm @ fm + Wb @ f1


def predict_x2(y, buf: HistoryBuffer, t: float, delay: DelayProfile,
               model: PlantModel, h: float) -> PredictorOutput:
    """Current-time estimate of x2 by re-integrating over the lookback window.

    Substeps never exceed h and align with the history grid, so the piecewise
    linear x1 interpolant is smooth inside every substep.  A fractional first
    substep handles t - tau falling between samples.
    """
    tau = delay.tau(t)
    if tau < 0.0:
        raise DomainError(f"predict_x2: negative delay tau({t}) = {tau}")
    y = np.asarray(y, dtype=float).reshape(model.p)
    if tau <= _TIME_SNAP:
        return PredictorOutput(y.copy(), tau, 1)

    theta0 = t - tau
    times, states = buf.node_grid(theta0, t)
    # Grid nodes strictly inside the window; endpoints handled fractionally.
    snap = _TIME_SNAP * max(1.0, abs(t))
    inner = (times > theta0 + snap) & (times < t - snap)
    inner_t = times[inner]
    inner_x = states[inner]

    z = y.copy()
    steps = 0
    if inner_t.size == 0:
        z = _rk4_substep(z, theta0, tau, buf, model, model.A22)
        return PredictorOutput(z, tau, 2)

    # Fractional first substep from theta0 to the first grid node.
    delta0 = inner_t[0] - theta0
    if delta0 > snap:
        z = _rk4_substep(z, theta0, delta0, buf, model, model.A22)
        steps += 1

    n_full = inner_t.size - 1
    if n_full > 0:
        if model.p == 1:
            z = _scan_scalar(z, inner_x, model, h, n_full)
        else:
            R, Wa, Wm, Wb = _rk4_weights(model.A22, h)
            f = inner_x[:, : model.n - model.p] @ model.A21.T
            for j in range(n_full):
                fm = 0.5 * (f[j] + f[j + 1])
                z = R @ z + Wa @ f[j] + Wm @ fm + Wb @ f[j + 1]
        steps += n_full

    delta1 = t - inner_t[-1]
    if delta1 > snap:
        z = _rk4_substep(z, inner_t[-1], delta1, buf, model, model.A22)
        steps += 1
    return PredictorOutput(z, tau, steps + 1)


def _scan_scalar(z, inner_x, model: PlantModel, h: float, n_full: int) -> np.ndarray:
    """Vectorized window scan for scalar x2: z_{j+1} = r z_j + c_j summed in closed form."""
    a = h * float(model.A22[0, 0])
    r = 1.0 + a + a**2 / 2.0 + a**3 / 6.0 + a**4 / 24.0
    wa = (h / 6.0) * (1.0 + a + a**2 / 2.0 + a**3 / 4.0)
    wm = (h / 6.0) * (4.0 + 2.0 * a + a**2 / 2.0)
    wb = h / 6.0
    f = inner_x[:, : model.n - model.p] @ model.A21.ravel()
    fm = 0.5 * (f[:-1] + f[1:])
    c = wa * f[:-1] + wm * fm + wb * f[1:]
    powers = r ** np.arange(n_full - 1, -1, -1, dtype=float)
    return (r**n_full) * z + np.array([float(powers @ c)])


def predict_x2_direct(y, buf: HistoryBuffer, t: float, delay: DelayProfile,
                      model: PlantModel, refine: int = 4) -> PredictorOutput:
    """Literal quadrature form of the prediction, used as a cross-validation oracle.

    Trapezoidal quadrature with a matrix exponential at every node; each
    history interval is split `refine` times so the rule resolves the
    exponential kernel well below the cross-check tolerance.
    """
    tau = delay.tau(t)
    if tau < 0.0:
        raise DomainError(f"predict_x2_direct: negative delay tau({t}) = {tau}")
    y = np.asarray(y, dtype=float).reshape(model.p)
    if tau <= _TIME_SNAP:
        return PredictorOutput(y.copy(), tau, 1)

    theta0 = t - tau
    times, _ = buf.node_grid(theta0, t)
    snap = _TIME_SNAP * max(1.0, abs(t))
    knots = [theta0]
    knots.extend(tt for tt in times if theta0 + snap < tt < t - snap)
    knots.append(t)

    nodes = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        nodes.extend(lo + (hi - lo) * k / refine for k in range(refine))
    nodes.append(t)

    integral = np.zeros(model.p)
    g_prev = None
    for i, theta in enumerate(nodes):
        g = matnum.mat_exp(model.A22, t - theta) @ (model.A21 @ _x1_at(buf, model, theta))
        if i > 0:
            integral += 0.5 * (nodes[i] - nodes[i - 1]) * (g_prev + g)
        g_prev = g
    x_hat_2 = matnum.mat_exp(model.A22, tau) @ y + integral
    return PredictorOutput(x_hat_2, tau, len(knots))


def residual_bound(t: float, delay: DelayProfile, unc: UncertaintyModel,
                   model: PlantModel, sup_norm_x: float) -> float:
    """Upper bound on the prediction residual caused by parametric uncertainty:
    tau * delta_bar * |e^{A22 tau} D2| * sup|x| over the lookback window."""
    if sup_norm_x < 0.0:
        raise DomainError("residual_bound: sup_norm_x must be >= 0")
    tau = delay.tau(t)
    if tau < 0.0:
        raise DomainError(f"residual_bound: negative delay tau({t}) = {tau}")
    if tau == 0.0 or unc.delta_bar == 0.0:
        return 0.0
    gain = matnum.spectral_norm(matnum.mat_exp(model.A22, tau) @ model.D2)
    return tau * unc.delta_bar * gain * sup_norm_x
