"""Dyadic frequency calculus and the empirical inequality harness.

The vertical/horizontal block operators slice a field by |xi3| (resp.
|xi_h|) into rings around 2^q using a fixed smooth bump pair (psi, phi):
psi is 1 on [0, 3/4] with support in [0, 4/3], and phi(z) = psi(z/2) - psi(z)
is supported in the ring [3/4, 8/3] and equals 1 on [4/3, 3/2].  Blocks two
apart are exactly disjoint in frequency and the family telescopes back to the
identity.

The harness half of the module does not prove anything: it evaluates both
sides of the dyadic inequalities (Bernstein, the three product laws, the
trilinear energy bounds) on concrete fields and reports the empirical
constants, which acceptance checks for boundedness and stability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bumps import plateau
from .spectral import (ConfigurationError, Grid, SpectralField, advect,
                       aniso_sobolev_norm, fftn, h_gradient_sq, ifftn,
                       inverse_transform, iso_sobolev_norm, l2_inner, l2_norm,
                       weighted_l2)

__all__ = [
    "BumpPair",
    "default_bumps",
    "DyadicLadder",
    "q_max",
    "dyadic_block",
    "low_pass",
    "dyadic_sobolev_norm",
    "bony_decompose",
    "ring_field",
    "ball_field",
    "BernsteinReport",
    "check_bernstein",
    "ProductLawReport",
    "check_product_law",
    "EnergyLemmaReport",
    "check_energy_lemma",
]


@dataclass(frozen=True)
class BumpPair:
    """The low-pass bump psi and ring bump phi(z) = psi(z/2) - psi(z)."""

    plateau_edge: float = 0.75
    support_edge: float = 4.0 / 3.0

    def psi(self, z):
        return plateau(z, self.plateau_edge, self.support_edge)

    def phi(self, z):
        z = np.asarray(z, dtype=float)
        return self.psi(z / 2.0) - self.psi(z)


_BUMPS = BumpPair()


def default_bumps() -> BumpPair:
    return _BUMPS


def _dir_freq(grid: Grid, direction: str) -> np.ndarray:
    if direction == "v":
        return np.broadcast_to(np.abs(grid.xi3), grid.shape)
    if direction == "h":
        return np.broadcast_to(np.sqrt(grid.xi_h_sq), grid.shape)
    raise ConfigurationError(f"direction must be 'h' or 'v', got {direction!r}")


def q_max(grid: Grid, direction: str) -> int:
    """Largest q whose ring still meets the grid's frequencies."""
    ximax = float(np.max(_dir_freq(grid, direction)))
    if ximax == 0.0:
        return -1
    return max(0, int(np.floor(np.log2(ximax / 0.75))))


def block_multiplier(grid: Grid, q: int, direction: str,
                     bumps: BumpPair = _BUMPS) -> np.ndarray:
    z = _dir_freq(grid, direction)
    if q == -1:
        return bumps.psi(z)
    return bumps.phi(z / 2.0**q)


def dyadic_block(field: SpectralField, q: int, direction: str = "v",
                 bumps: BumpPair = _BUMPS) -> SpectralField:
    """Frequency slice Delta_q in the given direction (q >= -1).

    Rings entirely beyond the grid's Nyquist frequency give the zero field.
    """
    if q < -1:
        raise ConfigurationError("q must be >= -1")
    m = block_multiplier(field.grid, q, direction, bumps)
    return SpectralField(field.grid, field.coeffs * m)


def low_pass(field: SpectralField, q: int, direction: str = "v",
             bumps: BumpPair = _BUMPS) -> SpectralField:
    """S_q = sum_{q' <= q-1} Delta_{q'}; telescopes to the multiplier psi(z/2^q)."""
    if q < 0:
        return SpectralField(field.grid, np.zeros_like(field.coeffs))
    z = _dir_freq(field.grid, direction)
    return SpectralField(field.grid, field.coeffs * bumps.psi(z / 2.0**q))


@dataclass(frozen=True)
class DyadicLadder:
    """All (j, q) blocks Delta^h_j Delta^v_q of one field, plus block norms."""

    source: SpectralField
    blocks: dict
    block_norms: dict

    @classmethod
    def build(cls, field: SpectralField, bumps: BumpPair = _BUMPS,
              keep_blocks: bool = True) -> "DyadicLadder":
        g = field.grid
        jm, qm = q_max(g, "h"), q_max(g, "v")
        zh = _dir_freq(g, "h")
        zv = _dir_freq(g, "v")
        blocks = {}
        norms = {}
        for j in range(-1, jm + 1):
            mh = bumps.psi(zh) if j == -1 else bumps.phi(zh / 2.0**j)
            if not np.any(mh):
                continue
            for q in range(-1, qm + 1):
                mv = bumps.psi(zv) if q == -1 else bumps.phi(zv / 2.0**q)
                m = mh * mv
                if not np.any(m):
                    continue
                norms[(j, q)] = weighted_l2(field, m * m)
                if keep_blocks:
                    blocks[(j, q)] = SpectralField(g, field.coeffs * m)
        return cls(source=field, blocks=blocks, block_norms=norms)

    def reconstruction_error(self) -> float:
        total = np.zeros_like(self.source.coeffs)
        for blk in self.blocks.values():
            total += blk.coeffs
        diff = SpectralField(self.source.grid, total - self.source.coeffs)
        denom = l2_norm(self.source)
        return l2_norm(diff) / denom if denom else 0.0


def dyadic_sobolev_norm(field: SpectralField, s1: float, s2: float,
                        bumps: BumpPair = _BUMPS) -> float:
    """Block route to the anisotropic Sobolev norm:
    ( sum_{j,q} 2^{2(j s1 + q s2)} ||Delta^h_j Delta^v_q u||_{L^2}^2 )^(1/2).
    """
    g = field.grid
    zh = _dir_freq(g, "h")
    zv = _dir_freq(g, "v")
    total = 0.0
    for j in range(-1, q_max(g, "h") + 1):
        mh = bumps.psi(zh) if j == -1 else bumps.phi(zh / 2.0**j)
        if not np.any(mh):
            continue
        for q in range(-1, q_max(g, "v") + 1):
            mv = bumps.psi(zv) if q == -1 else bumps.phi(zv / 2.0**q)
            m = mh * mv
            if not np.any(m):
                continue
            total += 4.0 ** (j * s1 + q * s2) * weighted_l2(field, m * m) ** 2
    return float(np.sqrt(total))


def _vertical_blocks_physical(field: SpectralField, qm: int,
                              bumps: BumpPair) -> list[np.ndarray]:
    zv = _dir_freq(field.grid, "v")
    out = []
    for q in range(-1, qm + 1):
        m = bumps.psi(zv) if q == -1 else bumps.phi(zv / 2.0**q)
        out.append(ifftn(field.coeffs * m))
    return out


def bony_decompose(u: SpectralField, v: SpectralField,
                   bumps: BumpPair = _BUMPS, apply_dealias: bool = True):
    """Vertical paraproduct split of the pointwise product uv.

    Returns (T(u, v), T(v, u), R(u, v)) with T(u, v) = sum_q S_{q-1} u
    Delta_q v and the remainder running over |q - q'| <= 1; the three pieces
    sum to the (dealiased) product.  Multi-component fields multiply
    componentwise.
    """
    if u.grid != v.grid:
        raise ConfigurationError("fields live on different grids")
    g = u.grid
    qm = q_max(g, "v")
    bu = _vertical_blocks_physical(u, qm, bumps)   # index 0 <-> q = -1
    bv = _vertical_blocks_physical(v, qm, bumps)
    # prefix[i] = S_{q}-type sum of blocks strictly below index i
    pref_u = [np.zeros_like(bu[0])]
    pref_v = [np.zeros_like(bv[0])]
    for i in range(len(bu)):
        pref_u.append(pref_u[-1] + bu[i])
        pref_v.append(pref_v[-1] + bv[i])

    t_uv = np.zeros_like(bu[0])
    t_vu = np.zeros_like(bu[0])
    rem = np.zeros_like(bu[0])
    for i in range(len(bu)):          # i = q + 1, block q = i - 1
        # S_{q-1} has blocks p <= q - 2, i.e. indices < i - 1
        low_u = pref_u[i - 1] if i >= 1 else np.zeros_like(bu[0])
        low_v = pref_v[i - 1] if i >= 1 else np.zeros_like(bv[0])
        t_uv += low_u * bv[i]
        t_vu += low_v * bu[i]
        for di in (-1, 0, 1):
            j = i + di
            if 0 <= j < len(bu):
                rem += bu[j] * bv[i]

    def wrap(arr):
        c = fftn(arr)
        if apply_dealias:
            c = c * g.dealias_mask
        return SpectralField(g, c)

    return wrap(t_uv), wrap(t_vu), wrap(rem)


# ---------------------------------------------------------------------------
# harness field builders
# ---------------------------------------------------------------------------

def _random_masked_field(grid: Grid, mask: np.ndarray, rng, ncomp_active: int = 1,
                         zero_mean: bool = True) -> SpectralField:
    samples = rng.normal(size=(3,) + grid.shape)
    coeffs = fftn(samples.astype(complex))
    if ncomp_active < 3:
        coeffs[ncomp_active:] = 0.0
    coeffs *= mask
    if zero_mean:
        coeffs[:, 0, 0, 0] = 0.0
    f = SpectralField(grid, coeffs)
    n = l2_norm(f)
    if n == 0.0:
        raise ConfigurationError("requested frequency band contains no grid modes")
    return f * (1.0 / n)


def ring_field(grid: Grid, lam: float, direction: str, rng,
               band=(0.75, 4.0 / 3.0), vector: bool = False) -> SpectralField:
    """Random unit-norm field with frequencies in the ring lam*band.

    direction 'v' keeps only xi_h = 0 columns (field varies along x3, d = 1);
    'h' keeps only xi3 = 0 (d = 2); 'iso' rings in |xi| on the full torus.
    """
    g = grid
    if direction == "iso":
        z = np.sqrt(np.broadcast_to(g.xi_sq, g.shape))
        mask = (z >= lam * band[0]) & (z <= lam * band[1])
    else:
        z = _dir_freq(g, direction)
        mask = (z >= lam * band[0]) & (z <= lam * band[1])
        if direction == "v":
            mask = mask & np.broadcast_to(g.xi_h_sq == 0, g.shape)
        else:
            mask = mask & np.broadcast_to(g.xi3 == 0, g.shape)
    return _random_masked_field(g, mask, rng, ncomp_active=3 if vector else 1)


def ball_field(grid: Grid, lam: float, direction: str, rng,
               radius: float = 1.0, vector: bool = False) -> SpectralField:
    """Random unit-norm field with frequencies in the ball of radius lam*radius."""
    g = grid
    if direction == "iso":
        z = np.sqrt(np.broadcast_to(g.xi_sq, g.shape))
        mask = z <= lam * radius
    else:
        z = _dir_freq(g, direction)
        mask = z <= lam * radius
        if direction == "v":
            mask = mask & np.broadcast_to(g.xi_h_sq == 0, g.shape)
        else:
            mask = mask & np.broadcast_to(g.xi3 == 0, g.shape)
    return _random_masked_field(g, mask, rng, ncomp_active=3 if vector else 1)


# ---------------------------------------------------------------------------
# inequality harness
# ---------------------------------------------------------------------------

def _lp_norm(field: SpectralField, p, direction: str) -> float:
    """L^p norm over the directions the field actually varies in.

    For 'v' fields (constant in x_h) this is the 1D L^p norm in x3 up to the
    constant cross-section factor, which is lambda-independent and therefore
    harmless for ratio reports.
    """
    g = field.grid
    mag = np.sqrt(np.sum(np.abs(inverse_transform(field)) ** 2, axis=0))
    dvol = g.cell_volume
    if p is np.inf or p == "inf":
        return float(np.max(mag))
    return float((np.sum(mag**p) * dvol) ** (1.0 / p))


def _directional_derivative_sup(field: SpectralField, k: int, direction: str,
                                p) -> float:
    """sup over |a| = k of ||d^a u||_{L^p}, derivatives along the active axes."""
    g = field.grid
    if direction == "v":
        combos = [(0, 0, k)]
    elif direction == "h":
        combos = [(k - i, i, 0) for i in range(k + 1)]
    else:
        combos = [(a, b, k - a - b) for a in range(k + 1) for b in range(k + 1 - a)]
    best = 0.0
    for (a, b, c) in combos:
        mult = (1j * g.xi1) ** a * (1j * g.xi2) ** b * (1j * g.xi3) ** c
        df = SpectralField(g, field.coeffs * mult)
        best = max(best, _lp_norm(df, p, direction))
    return best


@dataclass(frozen=True)
class BernsteinReport:
    lam: float
    k: int
    p: float
    q: float
    direction: str
    kind: str
    lhs: float
    rhs_band: float
    ratio: float
    lower_ratio: float | None = None


def check_bernstein(u: SpectralField, k: int, p, q, direction: str,
                    lam: float, kind: str = "ball") -> BernsteinReport:
    """Evaluate both sides of the band-limited derivative inequality.

    kind 'ball': lhs = sup_{|a|=k} ||d^a u||_{L^q} against
    lam^(k + d(1/p - 1/q)) ||u||_{L^p}.  kind 'ring' (p = q): additionally
    reports the lower ratio lam^k ||u||_{L^p} / lhs.
    """
    d = {"v": 1, "h": 2, "iso": 3}[direction]
    pv = np.inf if p in (np.inf, "inf") else float(p)
    qv = np.inf if q in (np.inf, "inf") else float(q)
    if kind == "ring" and pv != qv:
        raise ConfigurationError("ring variant requires p == q")
    if pv > qv:
        raise ConfigurationError("need p <= q")
    inv_p = 0.0 if pv is np.inf else 1.0 / pv
    inv_q = 0.0 if qv is np.inf else 1.0 / qv
    lhs = _directional_derivative_sup(u, k, direction, qv)
    base = _lp_norm(u, pv, direction)
    rhs = lam ** (k + d * (inv_p - inv_q)) * base
    lower = None
    if kind == "ring":
        lower = (lam**k * base) / lhs if lhs > 0 else np.inf
    return BernsteinReport(lam=lam, k=k, p=pv, q=qv, direction=direction,
                           kind=kind, lhs=lhs, rhs_band=rhs,
                           ratio=lhs / rhs if rhs > 0 else np.inf,
                           lower_ratio=lower)


@dataclass(frozen=True)
class ProductLawReport:
    variant: str
    exponents: tuple
    lhs_norm: float
    rhs_product: float
    empirical_c: float


def _product(u: SpectralField, v: SpectralField, apply_dealias: bool = True) -> SpectralField:
    g = u.grid
    w = fftn(inverse_transform(u) * inverse_transform(v))
    if apply_dealias:
        w = w * g.dealias_mask
    return SpectralField(g, w)


def check_product_law(u: SpectralField, v: SpectralField, variant: str,
                      **exps) -> ProductLawReport:
    """Evaluate one of the three product laws on a concrete pair.

    variant 'iso' (exponents s, t with s, t < 3/2, s + t > 0):
        ||uv||_{H^(s+t-3/2)} vs ||u||_{H^s} ||v||_{H^t} on the 3-torus.
    variant 'aniso' (s, t < 1, s + t > 0; sp, tp < 1/2, sp + tp > 0):
        ||uv||_{H^(s+t-1, sp+tp-1/2)} vs ||u||_{H^(s,sp)} ||v||_{H^(t,tp)}.
    variant 'uni' (sigma, sigmap < 1, sigma + sigmap > 0; s0 > 1/2,
        s1 <= s0, s0 + s1 > 0):
        ||uv||_{H^(sigma+sigmap-1, s1)} vs ||u||_{H^(sigma,s0)} ||v||_{H^(sigmap,s1)}.

    Constant-like inputs (the torus pathology) are the caller's problem; the
    harness builders only produce zero-mean band-limited fields.
    """
    if u.grid != v.grid:
        raise ConfigurationError("fields live on different grids")
    w = _product(u, v)
    if variant == "iso":
        s, t = exps["s"], exps["t"]
        if not (s < 1.5 and t < 1.5):
            raise ConfigurationError("iso law requires s, t < 3/2")
        if not s + t > 0:
            raise ConfigurationError("iso law requires s + t > 0")
        lhs = iso_sobolev_norm(w, s + t - 1.5)
        rhs = iso_sobolev_norm(u, s) * iso_sobolev_norm(v, t)
        key = (s, t)
    elif variant == "aniso":
        s, t, sp, tp = exps["s"], exps["t"], exps["sp"], exps["tp"]
        if not (s < 1 and t < 1):
            raise ConfigurationError("aniso law requires s, t < 1")
        if not s + t > 0:
            raise ConfigurationError("aniso law requires s + t > 0")
        if not (sp < 0.5 and tp < 0.5):
            raise ConfigurationError("aniso law requires s', t' < 1/2")
        if not sp + tp > 0:
            raise ConfigurationError("aniso law requires s' + t' > 0")
        lhs = aniso_sobolev_norm(w, s + t - 1.0, sp + tp - 0.5)
        rhs = aniso_sobolev_norm(u, s, sp) * aniso_sobolev_norm(v, t, tp)
        key = (s, t, sp, tp)
    elif variant == "uni":
        sg, sgp, s0, s1 = exps["sigma"], exps["sigmap"], exps["s0"], exps["s1"]
        if not (sg < 1 and sgp < 1):
            raise ConfigurationError("uni law requires sigma, sigma' < 1")
        if not sg + sgp > 0:
            raise ConfigurationError("uni law requires sigma + sigma' > 0")
        if not s0 > 0.5:
            raise ConfigurationError("uni law requires s0 > 1/2")
        if not s1 <= s0:
            raise ConfigurationError("uni law requires s1 <= s0")
        if not s0 + s1 > 0:
            raise ConfigurationError("uni law requires s0 + s1 > 0")
        lhs = aniso_sobolev_norm(w, sg + sgp - 1.0, s1)
        rhs = aniso_sobolev_norm(u, sg, s0) * aniso_sobolev_norm(v, sgp, s1)
        key = (sg, sgp, s0, s1)
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")
    return ProductLawReport(variant=variant, exponents=key, lhs_norm=lhs,
                            rhs_product=rhs,
                            empirical_c=lhs / rhs if rhs > 0 else np.inf)


@dataclass(frozen=True)
class EnergyLemmaReport:
    variant: str
    q: int
    s0: float
    s1: float
    lhs: float
    rhs: float
    empirical_dqc: float
    cancellation_advection: float
    cancellation_symmetric: float


def _h0s_and_grad(field: SpectralField, s: float) -> tuple[float, float]:
    n = aniso_sobolev_norm(field, 0.0, s)
    w = (1.0 + field.grid.xi3**2) ** s
    gn = np.sqrt(h_gradient_sq(field, w))
    return n, gn


def check_energy_lemma(u: SpectralField, v: SpectralField, w: SpectralField,
                       q: int, variant: str, s0: float, s1: float) -> EnergyLemmaReport:
    """Evaluate one trilinear energy bound at vertical block q.

    Variants: 'a9' / 'a12' bound |<Delta_q(u.grad v) | Delta_q v>| (w is
    ignored there, pass v); 'a10' / 'a13' bound the symmetric combination
    |<Delta_q(u.grad v)|Delta_q w> + <Delta_q(u.grad w)|Delta_q v>|.  The
    pair (a9, a10) requires s1 >= s0 > 1/2; (a12, a13) requires s1 < s0,
    s0 + s1 > 0.  Also reports the unlocalized exact cancellations.
    """
    if variant in ("a9", "a10"):
        if not (s0 > 0.5 and s1 >= s0):
            raise ConfigurationError(f"{variant} requires s1 >= s0 > 1/2")
    elif variant in ("a12", "a13"):
        if not (s0 > 0.5 and s1 < s0 and s0 + s1 > 0):
            raise ConfigurationError(f"{variant} requires s1 < s0, s0 + s1 > 0")
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")

    adv_v = advect(u, v)
    adv_w = advect(u, w)
    bq_adv_v = dyadic_block(adv_v, q, "v")
    bq_v = dyadic_block(v, q, "v")
    if variant in ("a9", "a12"):
        lhs = abs(l2_inner(bq_adv_v, bq_v))
    else:
        bq_adv_w = dyadic_block(adv_w, q, "v")
        bq_w = dyadic_block(w, q, "v")
        lhs = abs(l2_inner(bq_adv_v, bq_w) + l2_inner(bq_adv_w, bq_v))

    nu, gu = _h0s_and_grad(u, s0)
    nv, gv = _h0s_and_grad(v, s1)
    nw, gw = _h0s_and_grad(w, s1)
    if variant == "a9":
        rhs = gu * nv * gv + np.sqrt(nu * gu * nv) * gv**1.5
    elif variant == "a10":
        rhs = np.sqrt(gu * gv * gw) * (np.sqrt(nu * nv * gw)
                                       + np.sqrt(nu * gv * nw)
                                       + np.sqrt(gu * nv * nw))
    elif variant == "a12":
        rhs = (nu + gu) * nv * gv
    else:
        rhs = (nu + gu) * np.sqrt(nv * gv * nw * gw)

    scale_adv = l2_norm(adv_v) * l2_norm(v) + 1e-300
    canc_adv = abs(l2_inner(adv_v, v)) / scale_adv
    scale_sym = (l2_norm(adv_v) * l2_norm(w) + l2_norm(adv_w) * l2_norm(v) + 1e-300)
    canc_sym = abs(l2_inner(adv_v, w) + l2_inner(adv_w, v)) / scale_sym

    denom = 2.0 ** (-2.0 * q * s1) * rhs
    return EnergyLemmaReport(variant=variant, q=q, s0=s0, s1=s1, lhs=lhs, rhs=rhs,
                             empirical_dqc=lhs / denom if denom > 0 else np.inf,
                             cancellation_advection=canc_adv,
                             cancellation_symmetric=canc_sym)
