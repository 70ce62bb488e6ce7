"""Super-twisting disturbance observer on the measured state block.

The injection drives the estimation error x1 - x_hat1 to zero in finite time;
the integral state xi_hat then equals the lumped disturbance (fault plus
matched uncertainty plus prediction-error leakage), from which the actuator
fault is reconstructed through the input-channel pseudo-inverse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import matnum
from .errors import DivergenceError, DomainError
from .plant import PlantModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObserverGains:
    """Positive injection gains.

    Gain sufficiency against the fault bound is not evaluated here; gains are
    taken as configuration, which is logged once per construction.

    With `literal_signs` the square-root and integral injection terms keep the
    sign they would have if the correction entered the error dynamics
    positively; that variant is destabilizing for this observer structure and
    exists only to demonstrate the difference.
    """

    k1: float
    k2: float
    k3: float
    k4: float
    literal_signs: bool = False

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"ObserverGains.{name} must be > 0")
        logger.info(
            "observer gains k1=%g k2=%g k3=%g k4=%g taken as given; "
            "sufficiency against the fault bound is not checked",
            self.k1, self.k2, self.k3, self.k4,
        )


@dataclass(frozen=True)
class ObserverState:
    x_hat_1: np.ndarray
    xi_hat: np.ndarray


def sta_injection(tilde_x1, gains: ObserverGains, xi_hat) -> np.ndarray:
    """Continuous super-twisting correction; the fractional term is 0 at tilde_x1 = 0."""
    e = np.asarray(tilde_x1, dtype=float)
    xi = np.asarray(xi_hat, dtype=float)
    nrm = float(np.linalg.norm(e))
    frac = e / np.sqrt(nrm) if nrm > 0.0 else np.zeros_like(e)
    sign = -1.0 if gains.literal_signs else 1.0
    return sign * gains.k1 * frac + gains.k2 * e + xi


def observer_step(state: ObserverState, x1, x_hat_2, u, model: PlantModel,
                  gains: ObserverGains, h: float) -> ObserverState:
    """One explicit Euler step with the error frozen at step start.

    Euler is deliberate: the unit-vector term is discontinuous, so multi-stage
    schemes across the switching surface are meaningless.
    """
    if h <= 0.0:
        raise DomainError("observer_step: step must be positive")
    x1 = np.asarray(x1, dtype=float)
    x_hat_2 = np.asarray(x_hat_2, dtype=float)
    u = np.asarray(u, dtype=float)

    tilde = x1 - state.x_hat_1
    nu = sta_injection(tilde, gains, state.xi_hat)
    x_hat_1 = state.x_hat_1 + h * (
        model.A11 @ state.x_hat_1 + model.A12 @ x_hat_2 + model.B1 @ u + nu
    )

    nrm = float(np.linalg.norm(tilde))
    unit = tilde / nrm if nrm > 0.0 else np.zeros_like(tilde)
    sign = -1.0 if gains.literal_signs else 1.0
    xi_hat = state.xi_hat + h * sign * (gains.k3 * unit + gains.k4 * tilde)

    if not (np.all(np.isfinite(x_hat_1)) and np.all(np.isfinite(xi_hat))):
        raise DivergenceError("observer state non-finite", t=None)
    return ObserverState(x_hat_1, xi_hat)


def reconstruct_fault(xi_hat, model: PlantModel) -> np.ndarray:
    """Map the lumped disturbance estimate back to the fault channel: B1^+ xi_hat."""
    xi = np.asarray(xi_hat, dtype=float)
    return matnum.pseudo_inverse(model.B1) @ xi
