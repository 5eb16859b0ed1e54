"""Anisotropic periodic grid, Fourier transforms, and the norm zoo.

Conventions (fixed once, everything downstream relies on them):

* The domain is the periodic box [0, box_h)^2 x [0, box_v) sampled on an
  (n_h, n_h, n_v) grid; axis 0 and 1 are horizontal, axis 2 is vertical.
* Mode k on an axis with n points and period L carries the frequency
  xi = 2*pi*k/L with k in [-n/2, n/2), computed directly from the integer k
  (no accumulated rounding along the axis).
* Forward transform is the plain unscaled FFT, inverse carries the 1/N
  factor (numpy's default).  With that choice Parseval reads

      ||u||_{L^2}^2 = sum_k |u_hat(k)|^2 * (volume / N^2)

  and the factor ``volume / N**2`` is exposed as ``Grid.parseval_factor``.
* A SpectralField always stores 3 components; scalars live in component 0
  with the other two identically zero.
* Real physical fields correspond to Hermitian coefficient symmetry,
  u_hat(-k) = conj(u_hat(k)); every operation here preserves it.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Grid",
    "SpectralField",
    "StateVector",
    "NormReport",
    "ConfigurationError",
    "InvariantViolation",
    "DiagnosticWarning",
    "forward_transform",
    "inverse_transform",
    "to_physical",
    "scalar_field",
    "project_leray",
    "max_divergence",
    "is_divergence_free",
    "pressure_from_state",
    "gradient_part",
    "advect",
    "dealias",
    "l2_norm",
    "l2_inner",
    "weighted_l2",
    "aniso_sobolev_norm",
    "iso_sobolev_norm",
    "aniso_lebesgue_norm",
    "y_norm",
    "h_gradient_sq",
    "norm_report",
]


class ConfigurationError(ValueError):
    """Raised for shape/parameter mismatches detected before any compute."""


class InvariantViolation(ValueError):
    """Raised when an operation receives data violating its precondition."""


class DiagnosticWarning(UserWarning):
    """Non-fatal numerical caveat attached to a returned quantity."""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ROTMHD_THREADS", "1")))
    except ValueError:
        return 1


def fftn(a: np.ndarray) -> np.ndarray:
    return _fft.fftn(a, axes=(-3, -2, -1), workers=_workers())


def ifftn(a: np.ndarray) -> np.ndarray:
    return _fft.ifftn(a, axes=(-3, -2, -1), workers=_workers())


@dataclass(frozen=True)
class Grid:
    """Anisotropic periodic grid: n_h modes per horizontal axis, n_v vertical.

    box_h and box_v are the physical periods.  All derived arrays are cached
    and read-only; Grid instances hash by their four defining numbers and are
    safe to share across threads.
    """

    n_h: int
    n_v: int
    box_h: float = 2.0 * np.pi
    box_v: float = 2.0 * np.pi

    def __post_init__(self):
        for name, n in (("n_h", self.n_h), ("n_v", self.n_v)):
            if n < 4 or n % 2 != 0:
                raise ConfigurationError(f"{name} must be even and >= 4, got {n}")
        if not (self.box_h > 0 and self.box_v > 0):
            raise ConfigurationError("box lengths must be positive")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_h, self.n_h, self.n_v)

    @property
    def n_modes(self) -> int:
        return self.n_h * self.n_h * self.n_v

    @property
    def volume(self) -> float:
        return self.box_h * self.box_h * self.box_v

    @property
    def cell_volume(self) -> float:
        return self.volume / self.n_modes

    @property
    def parseval_factor(self) -> float:
        """||u||_{L^2}^2 = sum |u_hat|^2 * parseval_factor (unscaled-forward FFT)."""
        return self.volume / self.n_modes**2

    @staticmethod
    def _axis_frequencies(n: int, box: float) -> np.ndarray:
        k = np.fft.fftfreq(n, d=1.0 / n)  # exact integers as floats
        return 2.0 * np.pi * k / box      # literal 2*pi*k/box, one rounding

    @cached_property
    def xi1(self) -> np.ndarray:
        a = self._axis_frequencies(self.n_h, self.box_h).reshape(-1, 1, 1)
        a.flags.writeable = False
        return a

    @cached_property
    def xi2(self) -> np.ndarray:
        a = self._axis_frequencies(self.n_h, self.box_h).reshape(1, -1, 1)
        a.flags.writeable = False
        return a

    @cached_property
    def xi3(self) -> np.ndarray:
        a = self._axis_frequencies(self.n_v, self.box_v).reshape(1, 1, -1)
        a.flags.writeable = False
        return a

    @cached_property
    def xi_h_sq(self) -> np.ndarray:
        a = self.xi1**2 + self.xi2**2
        a.flags.writeable = False
        return a

    @cached_property
    def xi_sq(self) -> np.ndarray:
        a = self.xi_h_sq + self.xi3**2
        a.flags.writeable = False
        return a

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep |k| <= floor(n/3) per axis (Nyquist always cut)."""
        def keep(n):
            k = np.abs(np.fft.fftfreq(n, d=1.0 / n))
            return k <= n // 3
        kh = keep(self.n_h)
        kv = keep(self.n_v)
        m = kh[:, None, None] & kh[None, :, None] & kv[None, None, :]
        m.flags.writeable = False
        return m

    def mode_frequencies(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.xi1, self.xi2, self.xi3


def _as_coeffs(grid: Grid, arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr, dtype=complex)
    if a.shape != (3,) + grid.shape:
        raise ConfigurationError(
            f"coefficient array must have shape {(3,) + grid.shape}, got {a.shape}")
    return a


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a 3-component field; immutable after creation."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = _as_coeffs(self.grid, self.coeffs)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def copy_with(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def _same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ConfigurationError("fields live on different grids")
    return g


@dataclass(frozen=True)
class StateVector:
    """Velocity/magnetic pair (u, b) on a shared grid."""

    u: SpectralField
    b: SpectralField

    def __post_init__(self):
        _same_grid(self.u, self.b)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def as_stack(self) -> np.ndarray:
        """(6, n_h, n_h, n_v) view: components 0-2 velocity, 3-5 magnetic."""
        return np.concatenate([self.u.coeffs, self.b.coeffs], axis=0)

    @staticmethod
    def from_stack(grid: Grid, stack: np.ndarray) -> "StateVector":
        return StateVector(SpectralField(grid, stack[:3]), SpectralField(grid, stack[3:]))

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.u + other.u, self.b + other.b)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.u - other.u, self.b - other.b)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.u * scalar, self.b * scalar)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def forward_transform(grid: Grid, samples: np.ndarray) -> SpectralField:
    """Physical samples (3, n_h, n_h, n_v) -> SpectralField (unscaled FFT)."""
    a = np.asarray(samples)
    if a.shape != (3,) + grid.shape:
        raise ConfigurationError(
            f"sample array must have shape {(3,) + grid.shape}, got {a.shape}")
    return SpectralField(grid, fftn(a.astype(complex)))


def inverse_transform(field: SpectralField) -> np.ndarray:
    """SpectralField -> complex physical samples (inverse carries 1/N)."""
    return ifftn(field.coeffs)


def to_physical(field: SpectralField) -> np.ndarray:
    """Physical samples of a Hermitian-symmetric field, as a real array."""
    w = inverse_transform(field)
    scale = np.max(np.abs(w)) or 1.0
    if np.max(np.abs(w.imag)) > 1e-10 * scale:
        warnings.warn("field is not Hermitian-symmetric; imaginary part discarded",
                      DiagnosticWarning, stacklevel=2)
    return np.ascontiguousarray(w.real)


def scalar_field(grid: Grid, values: np.ndarray, spectral: bool = False) -> SpectralField:
    """Wrap a scalar (physical samples or coefficients) into component 0."""
    v = np.asarray(values)
    if v.shape != grid.shape:
        raise ConfigurationError(f"scalar must have shape {grid.shape}, got {v.shape}")
    c = np.zeros((3,) + grid.shape, dtype=complex)
    c[0] = v if spectral else fftn(v.astype(complex))
    return SpectralField(grid, c)


# ---------------------------------------------------------------------------
# differential / projection operators
# ---------------------------------------------------------------------------

def project_leray(field: SpectralField) -> SpectralField:
    """Mode-wise divergence-free projection u_hat -> u_hat - xi (xi.u_hat)/|xi|^2.

    The xi = 0 mode is left unchanged (mean flow decouples).
    """
    g = field.grid
    inv = np.zeros(g.shape)
    nz = g.xi_sq > 0
    inv[nz] = 1.0 / g.xi_sq[nz]
    dot = (g.xi1 * field.coeffs[0] + g.xi2 * field.coeffs[1]
           + g.xi3 * field.coeffs[2]) * inv
    out = field.coeffs.copy()
    out[0] -= g.xi1 * dot
    out[1] -= g.xi2 * dot
    out[2] -= g.xi3 * dot
    return SpectralField(g, out)


def max_divergence(field: SpectralField) -> float:
    """max_k |xi . u_hat(k)| / max_k |u_hat(k)| (0 for the zero field)."""
    g = field.grid
    div = np.abs(g.xi1 * field.coeffs[0] + g.xi2 * field.coeffs[1]
                 + g.xi3 * field.coeffs[2])
    scale = np.max(np.abs(field.coeffs))
    if scale == 0.0:
        return 0.0
    return float(np.max(div) / (scale * max(1.0, np.sqrt(np.max(g.xi_sq)))))


def is_divergence_free(field: SpectralField, tol: float = 1e-12) -> bool:
    return max_divergence(field) <= tol


def dealias(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, field.coeffs * field.grid.dealias_mask)


def _advection_products(u_phys: np.ndarray, v_phys: np.ndarray) -> np.ndarray:
    """Physical tensor products u_j v_i, shape (3, 3, ...): axis0=j, axis1=i."""
    return u_phys[:, None] * v_phys[None, :]


def advect(u: SpectralField, v: SpectralField, apply_dealias: bool = True) -> SpectralField:
    """u . grad v for divergence-free u, computed as div(u (x) v).

    Transform to physical space, multiply, transform back, then 2/3-dealias.
    """
    g = _same_grid(u, v)
    up = inverse_transform(u).real
    vp = inverse_transform(v).real
    prod_hat = fftn(_advection_products(up, vp))
    xi = (g.xi1, g.xi2, g.xi3)
    out = np.zeros((3,) + g.shape, dtype=complex)
    for i in range(3):
        acc = 1j * xi[0] * prod_hat[0, i]
        acc += 1j * xi[1] * prod_hat[1, i]
        acc += 1j * xi[2] * prod_hat[2, i]
        out[i] = acc
    if apply_dealias:
        out *= g.dealias_mask
    return SpectralField(g, out)


def gradient_part(field: SpectralField) -> SpectralField:
    """(I - P) v: the pure-gradient component removed by project_leray."""
    return field - project_leray(field)


def pressure_from_state(state: StateVector, epsilon: float,
                        apply_dealias: bool = True) -> SpectralField:
    """Pressure balancing the quadratic and Coriolis terms of the momentum
    equation, as a scalar SpectralField (component 0); the xi = 0 mode is 0.

    Defined so that grad p is exactly the gradient part that project_leray
    removes from the assembled momentum tendency
    -u.grad u + b.grad b + (u ^ e3)/epsilon (rotation sense fixed by the
    linear symbol).  Mode-wise,
    p_hat = -|xi|^-2 sum_ij xi_i xi_j (u_i u_j - b_i b_j)_hat
            + (i/eps) |xi|^-2 (xi_2 u_hat_1 - xi_1 u_hat_2).
    """
    if not (is_divergence_free(state.u, 1e-8) and is_divergence_free(state.b, 1e-8)):
        raise InvariantViolation("pressure_from_state requires divergence-free input")
    g = state.grid
    uu = advect(state.u, state.u, apply_dealias)
    bb = advect(state.b, state.b, apply_dealias)
    quad = uu.coeffs - bb.coeffs
    cor = np.zeros_like(quad)
    cor[0] = -state.u.coeffs[1] / epsilon
    cor[1] = state.u.coeffs[0] / epsilon
    forcing = quad + cor
    dot = g.xi1 * forcing[0] + g.xi2 * forcing[1] + g.xi3 * forcing[2]
    inv = np.zeros(g.shape)
    nz = g.xi_sq > 0
    inv[nz] = 1.0 / g.xi_sq[nz]
    # grad p = -(I - P) forcing  =>  i xi p_hat = -xi (xi.forcing)/|xi|^2
    p_hat = 1j * dot * inv
    out = np.zeros((3,) + g.shape, dtype=complex)
    out[0] = p_hat
    return SpectralField(g, out)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def weighted_l2(field: SpectralField, weight: np.ndarray) -> float:
    """sqrt( sum_k weight(k) |u_hat(k)|^2 * parseval_factor ), all components."""
    g = field.grid
    total = np.sum(weight * np.sum(np.abs(field.coeffs) ** 2, axis=0))
    return float(np.sqrt(total.real * g.parseval_factor))


def l2_norm(field: SpectralField) -> float:
    return weighted_l2(field, np.ones(field.grid.shape))


def l2_inner(a: SpectralField, b: SpectralField) -> float:
    """Real L^2 inner product <a, b> via Parseval."""
    g = _same_grid(a, b)
    s = np.sum(a.coeffs * np.conj(b.coeffs))
    return float(s.real * g.parseval_factor)


def h_gradient_sq(field: SpectralField, extra_weight: np.ndarray | None = None) -> float:
    """||grad_h u||_{L^2}^2, optionally with a Sobolev weight."""
    g = field.grid
    w = g.xi_h_sq if extra_weight is None else g.xi_h_sq * extra_weight
    return weighted_l2(field, w) ** 2


def aniso_sobolev_norm(field: SpectralField, s1: float, s2: float,
                       homogeneous_h: bool = False,
                       return_excluded: bool = False):
    """Anisotropic Sobolev norm with weight (1+|xi_h|^2)^s1 (1+xi3^2)^s2.

    With homogeneous_h=True the horizontal factor becomes |xi_h|^(2 s1); the
    xi_h = 0 column then contributes 0 for s1 > 0 and is excluded for s1 < 0
    (its L^2 mass is reported separately / warned about when nonzero).
    """
    g = field.grid
    wv = (1.0 + g.xi3**2) ** s2
    excluded = 0.0
    if homogeneous_h:
        wh = np.zeros(g.shape)
        nz = np.broadcast_to(g.xi_h_sq > 0, g.shape)
        wh[nz] = np.broadcast_to(g.xi_h_sq, g.shape)[nz] ** s1
        if s1 < 0:
            mass = np.sum(np.abs(field.coeffs) ** 2, axis=0)
            excluded = float(np.sqrt(np.sum(mass[~nz]) * g.parseval_factor))
            if excluded > 0 and not return_excluded:
                warnings.warn(
                    "homogeneous horizontal norm with s1 < 0: the xi_h = 0 column "
                    f"carries L^2 mass {excluded:.3e} and was excluded",
                    DiagnosticWarning, stacklevel=2)
    else:
        wh = (1.0 + g.xi_h_sq) ** s1
    value = weighted_l2(field, wh * wv)
    if return_excluded:
        return value, excluded
    return value


def iso_sobolev_norm(field: SpectralField, s: float) -> float:
    """Isotropic H^s norm with weight (1+|xi|^2)^s."""
    g = field.grid
    return weighted_l2(field, (1.0 + g.xi_sq) ** s)


def vertical_homogeneous_norm(field: SpectralField, s2: float,
                              return_excluded: bool = False):
    """L^2_h-based norm with weight |xi3|^(2 s2); xi3 = 0 plane excluded for s2 < 0."""
    g = field.grid
    w = np.zeros(g.shape)
    nz = np.broadcast_to(np.abs(g.xi3) > 0, g.shape)
    w[nz] = np.broadcast_to(g.xi3**2, g.shape)[nz] ** s2
    excluded = 0.0
    if s2 < 0:
        mass = np.sum(np.abs(field.coeffs) ** 2, axis=0)
        excluded = float(np.sqrt(np.sum(mass[~nz]) * g.parseval_factor))
    value = weighted_l2(field, w)
    if return_excluded:
        return value, excluded
    return value


def aniso_lebesgue_norm(field: SpectralField, q1, q2) -> float:
    """L^{q1}_h L^{q2}_v norm: vertical norm first, then horizontal.

    q1, q2 in {1, 2, 4, inf}; physical-space Riemann sums, with inf realized
    as the grid maximum.  The pointwise magnitude is the Euclidean norm over
    the 3 components.
    """
    allowed = {1, 2, 4, np.inf, "inf"}
    if q1 not in allowed or q2 not in allowed:
        raise ConfigurationError(f"q1, q2 must be in {{1,2,4,inf}}, got {q1}, {q2}")
    q1 = np.inf if q1 == "inf" else q1
    q2 = np.inf if q2 == "inf" else q2
    g = field.grid
    mag = np.sqrt(np.sum(np.abs(inverse_transform(field)) ** 2, axis=0))
    dv = g.box_v / g.n_v
    dh = (g.box_h / g.n_h) ** 2
    if q2 is np.inf:
        vert = np.max(mag, axis=2)
    else:
        vert = (np.sum(mag**q2, axis=2) * dv) ** (1.0 / q2)
    if q1 is np.inf:
        return float(np.max(vert))
    return float((np.sum(vert**q1) * dh) ** (1.0 / q1))


def y_norm(field: SpectralField, s: float, eta: float) -> float:
    """Initial-data norm: max of the three constituent norms of the
    intersection space (equivalent to the sum norm up to a factor 3;
    documented choice).

    Constituents: horizontal-homogeneous (-eta, s) norm, vertical-homogeneous
    -eta norm, and the inhomogeneous (eta, eta+s) norm.  Zero-frequency
    columns excluded from the homogeneous pieces are diagnosed via warnings.
    """
    if eta <= 0:
        raise ConfigurationError("eta must be positive")
    n1, exc1 = aniso_sobolev_norm(field, -eta, s, homogeneous_h=True,
                                  return_excluded=True)
    n2, exc2 = vertical_homogeneous_norm(field, -eta, return_excluded=True)
    n3 = aniso_sobolev_norm(field, eta, eta + s)
    if max(exc1, exc2) > 1e-13 * max(n1, n2, n3, 1e-300):
        warnings.warn(
            "y_norm: zero-frequency content excluded from homogeneous factors "
            f"(horizontal {exc1:.3e}, vertical {exc2:.3e})",
            DiagnosticWarning, stacklevel=2)
    return max(n1, n2, n3)


@dataclass(frozen=True)
class NormReport:
    """Bundle of norms of one field; see norm_report."""

    l2: float
    h0s: float
    hs1s2: dict
    aniso_lebesgue: dict

    def __post_init__(self):
        vals = [self.l2, self.h0s, *self.hs1s2.values(), *self.aniso_lebesgue.values()]
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise InvariantViolation("norm report contains non-finite or negative entries")


def norm_report(field: SpectralField, s: float,
                sigma_pairs=((0.0, 0.0),),
                q_pairs=((2, 2),)) -> NormReport:
    hs = {tuple(p): aniso_sobolev_norm(field, *p) for p in sigma_pairs}
    if (0.0, 0.0) not in hs:
        hs[(0.0, 0.0)] = aniso_sobolev_norm(field, 0.0, 0.0)
    leb = {tuple(p): aniso_lebesgue_norm(field, *p) for p in q_pairs}
    return NormReport(l2=l2_norm(field), h0s=aniso_sobolev_norm(field, 0.0, s),
                      hs1s2=hs, aniso_lebesgue=leb)


# state-level conveniences ---------------------------------------------------

def state_l2_sq(state: StateVector) -> float:
    return l2_norm(state.u) ** 2 + l2_norm(state.b) ** 2


def state_h0s_norm(state: StateVector, s: float) -> float:
    return float(np.hypot(aniso_sobolev_norm(state.u, 0.0, s),
                          aniso_sobolev_norm(state.b, 0.0, s)))


def state_h_gradient_sq(state: StateVector, s: float | None = None) -> float:
    if s is None:
        return h_gradient_sq(state.u) + h_gradient_sq(state.b)
    w = (1.0 + state.grid.xi3**2) ** s
    return h_gradient_sq(state.u, w) + h_gradient_sq(state.b, w)
