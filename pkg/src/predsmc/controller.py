"""Sliding surface design, the three-term control law, and the switching-gain schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matnum
from .errors import (
    DimensionError,
    DomainError,
    NotHurwitzError,
    SingularMatrixError,
    UncontrollableError,
    UnsupportedDimensionError,
)
from .plant import DelayProfile, PlantModel


@dataclass(frozen=True)
class ControllerConfig:
    """Surface matrix plus switching-gain configuration.

    rho_mode "constant" uses rho_value; "scheduled" evaluates
    phi * delta_bar * (1 + r_bar) * |e^{A22 tau} D2| * inflation * |x_bar| + eta
    at every step.  The inflation factor covers the gap between the available
    state proxy (x1, x_hat2) and the true state norm.
    """

    S2: np.ndarray
    rho_mode: str = "constant"
    rho_value: float = 1.0
    phi: float = 1.05
    eta: float = 0.5
    delta_bar: float = 0.0
    r_bar: float = 0.0
    inflation: float = 1.2
    boundary_layer: float = 0.0  # 0 means ideal sign
    band: float | None = None  # sliding-band override for audits

    def __post_init__(self):
        object.__setattr__(self, "S2", np.atleast_2d(np.asarray(self.S2, dtype=float)))
        if self.rho_mode not in ("constant", "scheduled"):
            raise DomainError(f"ControllerConfig.rho_mode: unknown mode {self.rho_mode!r}")
        if self.rho_mode == "constant" and self.rho_value <= 0.0:
            raise DomainError("ControllerConfig.rho_value must be > 0")
        if self.rho_mode == "scheduled":
            if self.phi <= 1.0:
                raise DomainError("ControllerConfig.phi must be > 1")
            if self.eta <= 0.0:
                raise DomainError("ControllerConfig.eta must be > 0")
            if self.inflation <= 0.0:
                raise DomainError("ControllerConfig.inflation must be > 0")
        if self.boundary_layer < 0.0:
            raise DomainError("ControllerConfig.boundary_layer must be >= 0")

    def surface(self, model: PlantModel) -> np.ndarray:
        """S = [I  S2], the row map defining the sliding variable."""
        np_ = model.n - model.p
        if self.S2.shape != (np_, model.p):
            raise DimensionError(
                f"ControllerConfig.S2: expected shape ({np_}, {model.p}), got {self.S2.shape}"
            )
        return np.hstack([np.eye(np_), self.S2])

    def validate_with_model(self, model: PlantModel) -> None:
        """Check SB invertibility and stability of the reduced surface dynamics."""
        S = self.surface(model)
        SB = S @ model.B
        if SB.shape[0] != SB.shape[1]:
            raise DimensionError(
                f"ControllerConfig: SB is {SB.shape}, control law needs it square"
            )
        if abs(np.linalg.det(SB)) < 1e-12:
            raise SingularMatrixError("ControllerConfig: SB is singular")
        Abar22 = model.A22 - model.A21 @ self.S2
        try:
            matnum.solve_lyapunov(Abar22)
        except NotHurwitzError as exc:
            raise NotHurwitzError(
                "ControllerConfig: A22 - A21 S2 is not Hurwitz for this surface"
            ) from exc


@dataclass(frozen=True)
class ControlDecomposition:
    """Control value with its disturbance-rejection, nominal, and switching parts."""

    u: np.ndarray
    u_d: np.ndarray
    u_nom: np.ndarray
    u_sm: np.ndarray
    s: np.ndarray
    rho_used: float


def sliding_variable(x1, x_hat_2, cfg: ControllerConfig) -> np.ndarray:
    """s = x1 + S2 x_hat2."""
    x1 = np.asarray(x1, dtype=float)
    x_hat_2 = np.asarray(x_hat_2, dtype=float)
    return x1 + cfg.S2 @ x_hat_2


def design_surface(model: PlantModel, desired_eigenvalues) -> np.ndarray:
    """Pole placement for the reduced dynamics A22 - A21 S2.

    Only the scalar-channel cases are supported (p == 1 or n - p == 1); other
    shapes need a user-supplied S2.
    """
    desired = [complex(ev) for ev in np.atleast_1d(desired_eigenvalues)]
    if any(ev.real >= 0.0 for ev in desired):
        raise DomainError("design_surface: desired eigenvalues must have negative real part")
    np_, p = model.n - model.p, model.p
    if len(desired) != p:
        raise DimensionError(f"design_surface: need {p} eigenvalues, got {len(desired)}")

    if p == 1:
        a21 = model.A21.ravel()
        gram = float(a21 @ a21)
        if gram == 0.0:
            raise UncontrollableError("design_surface: A21 = 0, pair (A22, A21) uncontrollable")
        shift = float(model.A22[0, 0]) - desired[0].real
        if desired[0].imag != 0.0:
            raise DomainError("design_surface: scalar channel takes one real eigenvalue")
        S2 = (a21 * shift / gram).reshape(np_, 1)
    elif np_ == 1:
        ctrb = np.hstack([np.linalg.matrix_power(model.A22, k) @ model.A21 for k in range(p)])
        if np.linalg.matrix_rank(ctrb) < p:
            raise UncontrollableError("design_surface: pair (A22, A21) uncontrollable")
        char = np.real(np.poly(desired))
        q = np.zeros((p, p))
        for coef in char:
            q = q @ model.A22 + coef * np.eye(p)
        S2 = (np.eye(p)[-1] @ np.linalg.solve(ctrb, q)).reshape(1, p)
    else:
        raise UnsupportedDimensionError(
            f"design_surface: pole placement implemented for p == 1 or n - p == 1, "
            f"got p={p}, n-p={np_}"
        )

    achieved = np.poly(model.A22 - model.A21 @ S2)
    target = np.real(np.poly(desired))
    if np.max(np.abs(achieved - target)) > 1e-8 * max(1.0, np.max(np.abs(target))):
        raise DomainError("design_surface: placed characteristic polynomial check failed")
    return S2


def rho_schedule(x_bar, t: float, delay: DelayProfile, cfg: ControllerConfig,
                 model: PlantModel) -> float:
    """State-dependent switching gain sufficient for the sliding condition."""
    if cfg.rho_mode != "scheduled":
        raise DomainError("rho_schedule: controller is not in scheduled mode")
    tau = delay.tau(t)
    gain = matnum.spectral_norm(matnum.mat_exp(model.A22, tau) @ model.D2)
    norm_proxy = cfg.inflation * float(np.linalg.norm(np.asarray(x_bar, dtype=float)))
    return cfg.phi * cfg.delta_bar * (1.0 + cfg.r_bar) * gain * norm_proxy + cfg.eta


def control_law(x1, x_hat_2, xi_hat, t: float, delay: DelayProfile,
                cfg: ControllerConfig, model: PlantModel) -> ControlDecomposition:
    """Three-term law: disturbance rejection + equivalent control + switching term."""
    x1 = np.asarray(x1, dtype=float)
    x_hat_2 = np.asarray(x_hat_2, dtype=float)
    xi_hat = np.asarray(xi_hat, dtype=float)
    x_bar = np.concatenate([x1, x_hat_2])

    S = cfg.surface(model)
    SB = S @ model.B
    s = x1 + cfg.S2 @ x_hat_2

    if cfg.rho_mode == "constant":
        rho = cfg.rho_value
    else:
        rho = rho_schedule(x_bar, t, delay, cfg, model)

    if cfg.boundary_layer > 0.0:
        switching = np.clip(s / cfg.boundary_layer, -1.0, 1.0)
    else:
        switching = np.sign(s)  # sign(0) = 0 keeps the origin an equilibrium

    try:
        u_d = -matnum.pseudo_inverse(model.B1) @ xi_hat
        u_nom = -np.linalg.solve(SB, S @ model.A @ x_bar)
        u_sm = -rho * np.linalg.solve(SB, switching)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("control_law: SB is singular") from exc
    return ControlDecomposition(u_d + u_nom + u_sm, u_d, u_nom, u_sm, s, float(rho))
