"""Frequency cutoff, low/high data split, and the fast-rotation schedule.

The splitter Psi is a product of three plateau cutoffs,

    Psi(xi) = chi(|xi|/R) * (1 - chi(2|xi_h|/r)) * (1 - chi(2|xi3|/r)),

equal to 1 on the good set {r <= |xi_h|, |xi3|, |xi| <= R} and vanishing
outside the enlarged set with bounds (r/2, 2R).  The schedule ties the
cutoff radii to the Rossby parameter,

    R = K^(1/(beta*eta)) * eps^(-alpha/(beta*eta)),    r = R^(-beta),

where K is a config constant standing in for the non-constructive product of
analysis constants (default 1), and admissibility of alpha is governed by

    alpha_max = beta*eta / (11*beta*eta + 44 + 52*beta + 8*s)

together with two explicit exponent-positivity conditions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bumps import chi
from .spectral import (ConfigurationError, Grid, SpectralField, StateVector,
                       state_h0s_norm, y_norm)

__all__ = [
    "CutoffParams",
    "SplitReport",
    "psi",
    "psi_field_mask",
    "alpha_max",
    "exponent_margins",
    "schedule_parameters",
    "validate_resolution",
    "split_initial_data",
]


def psi(xi, r: float, R: float) -> np.ndarray:
    """The scalar cutoff Psi evaluated at frequency triples.

    xi may be a length-3 sequence or a tuple of broadcastable arrays
    (xi1, xi2, xi3).  Values lie in [0, 1].
    """
    if not 0 < r < R:
        raise ConfigurationError(f"need 0 < r < R, got r={r}, R={R}")
    x1, x2, x3 = xi
    xh = np.sqrt(np.asarray(x1) ** 2 + np.asarray(x2) ** 2)
    total = np.sqrt(xh**2 + np.asarray(x3) ** 2)
    return chi(total / R) * (1.0 - chi(2.0 * xh / r)) * (1.0 - chi(2.0 * np.abs(x3) / r))


def psi_field_mask(grid: Grid, r: float, R: float) -> np.ndarray:
    """Psi sampled on the grid's discrete frequencies, shape grid.shape."""
    m = psi((np.broadcast_to(grid.xi1, grid.shape),
             np.broadcast_to(grid.xi2, grid.shape),
             np.broadcast_to(grid.xi3, grid.shape)), r, R)
    return np.ascontiguousarray(m)


def alpha_max(beta: float, eta: float, s: float) -> float:
    """Admissible dissipation exponent bound for the schedule."""
    return beta * eta / (11.0 * beta * eta + 44.0 + 52.0 * beta + 8.0 * s)


def exponent_margins(alpha: float, beta: float, eta: float, s: float) -> tuple[float, float]:
    """The two exponent-positivity margins; the schedule is usable when both > 0.

    m1 = 1/4 - alpha*(3/4 + (7 + 8 beta + s)/(beta eta))
    m2 = 1/4 - alpha*(7/4 + (11 + 13 beta + 2 s)/(beta eta))
    """
    be = beta * eta
    m1 = 0.25 - alpha * (0.75 + (7.0 + 8.0 * beta + s) / be)
    m2 = 0.25 - alpha * (1.75 + (11.0 + 13.0 * beta + 2.0 * s) / be)
    return m1, m2


@dataclass(frozen=True)
class CutoffParams:
    """Cutoff radii plus the schedule bookkeeping that produced them."""

    r: float
    R: float
    beta: float
    eta: float
    s: float
    epsilon: float
    alpha: float
    schedule_constant: float = 1.0
    c0: float = 1.0
    alpha0: float = float("nan")
    alpha_admissible: bool = True
    margins: tuple[float, float] = (float("nan"), float("nan"))

    def __post_init__(self):
        if not 0 < self.r < self.R:
            raise ConfigurationError(f"need 0 < r < R, got r={self.r}, R={self.R}")

    @property
    def schedule_consistent(self) -> bool:
        """r = R^(-beta) to 1e-12 relative."""
        return abs(self.r - self.R ** (-self.beta)) <= 1e-12 * self.r

    def psi_mask(self, grid: Grid) -> np.ndarray:
        return psi_field_mask(grid, self.r, self.R)


def schedule_parameters(epsilon: float, alpha: float, beta: float, eta: float,
                        s: float, data_norm: float = 1.0,
                        schedule_constant: float = 1.0) -> CutoffParams:
    """Compute (R, r) from the fast-rotation schedule and flag admissibility.

    R = (schedule_constant * data_norm)^(1/(beta eta)) * eps^(-alpha/(beta eta)),
    r = R^(-beta).  The combined constant is a config input (the analysis
    constant it abbreviates is existential); data_norm is the measured
    initial-data norm C0 so sweeps can keep K * C0 fixed.
    """
    if not 0 < epsilon < 1:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")
    if alpha < 0:
        raise ConfigurationError("alpha must be >= 0")
    if beta < 1:
        raise ConfigurationError("beta must be >= 1")
    if eta <= 0 or s <= 0.5:
        raise ConfigurationError("need eta > 0 and s > 1/2")
    K = schedule_constant * data_norm
    if K <= 0:
        raise ConfigurationError("schedule constant must be positive")
    be = beta * eta
    R = K ** (1.0 / be) * epsilon ** (-alpha / be)
    r = R ** (-beta)
    if not r < R:
        raise ConfigurationError(
            f"schedule produced r = {r:.6g} >= R = {R:.6g}; increase the "
            "schedule constant or decrease epsilon")
    a0 = alpha_max(beta, eta, s)
    margins = exponent_margins(alpha, beta, eta, s)
    return CutoffParams(r=r, R=R, beta=beta, eta=eta, s=s, epsilon=epsilon,
                        alpha=alpha, schedule_constant=schedule_constant,
                        c0=data_norm, alpha0=a0,
                        alpha_admissible=bool(alpha <= a0), margins=margins)


def validate_resolution(grid: Grid, r: float):
    """The transition annulus must be resolved: 2 pi / box <= r / 4 per axis."""
    for name, box in (("box_h", grid.box_h), ("box_v", grid.box_v)):
        if 2.0 * np.pi / box > r / 4.0:
            raise ConfigurationError(
                f"frequency resolution 2*pi/{name} = {2*np.pi/box:.4g} exceeds "
                f"r/4 = {r/4:.4g}; enlarge the box or the cutoff radius")


@dataclass(frozen=True)
class SplitReport:
    """Measured size of the high/low split against the scheduled bound."""

    tilde_h0s: float
    y_norm: float
    r: float
    R: float
    beta: float
    eta: float
    bound_scale: float          # y_norm * R^(-beta*eta)
    empirical_cbar: float       # tilde_h0s / bound_scale


def split_initial_data(state: StateVector, cutoff: CutoffParams,
                       data_y_norm: float | None = None
                       ) -> tuple[StateVector, StateVector, SplitReport]:
    """Split U0 into the Psi-filtered part and the remainder.

    Both pieces are divergence-free whenever the input is (Psi is scalar).
    The report carries the measured remainder norm and the empirical constant
    in front of the scheduled bound y_norm * R^(-beta eta).
    """
    g = state.grid
    mask = cutoff.psi_mask(g)
    bar = StateVector(SpectralField(g, state.u.coeffs * mask),
                      SpectralField(g, state.b.coeffs * mask))
    tilde = state - bar
    tilde_norm = state_h0s_norm(tilde, cutoff.s)
    if data_y_norm is None:
        data_y_norm = float(np.hypot(y_norm(state.u, cutoff.s, cutoff.eta),
                                     y_norm(state.b, cutoff.s, cutoff.eta)))
    bound_scale = data_y_norm * cutoff.R ** (-cutoff.beta * cutoff.eta)
    report = SplitReport(tilde_h0s=tilde_norm, y_norm=data_y_norm,
                         r=cutoff.r, R=cutoff.R, beta=cutoff.beta, eta=cutoff.eta,
                         bound_scale=bound_scale,
                         empirical_cbar=tilde_norm / bound_scale if bound_scale > 0
                         else np.inf)
    return bar, tilde, report
