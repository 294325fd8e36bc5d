"""Space-time diagnostics: mixed Strichartz-type norms, collapsing (diagonal)
norms, quarter time derivatives, X^{s,b} norms and frequency projections."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import Grid, fourier_multiplier, japanese, time_fourier
from .potentials import check_exponents
from .trace import SpaceTimeTrace

__all__ = [
    "NormConfig",
    "NormReport",
    "SupApproximationWarning",
    "bracket_weight",
    "mixed_norm",
    "collapse_norm",
    "quarter_time_norm",
    "xsb_norm",
    "xsb_symbol",
    "xsb_from_coefficients",
    "spatial_coefficients",
    "smooth_cutoff",
    "projection_scale",
    "freq_projection",
    "composite_norms",
]

INF = float("inf")


class SupApproximationWarning(UserWarning):
    """The sup over offsets is taken over a strict subset of the lattice."""


@dataclass(frozen=True)
class NormConfig:
    alpha: float = 0.55
    beta_prime: float | None = None
    b: float = 0.48
    pq_pairs: tuple = ((2.0, 6.0), (INF, 2.0))
    collapse_weight_params: tuple = (0.0, 0.0, 0.0, 0.1)
    pad: int = 4
    windows: tuple = (0.25, 0.5, 1.0)

    def validate(self, beta: float) -> None:
        check_exponents(self.alpha, beta)
        bp = self.resolved_beta_prime(beta)
        if not beta < bp < 1:
            raise ValueError(f"beta < beta' < 1 violated: beta={beta}, beta'={bp}")

    def resolved_beta_prime(self, beta: float) -> float:
        return (beta + 1) / 2 if self.beta_prime is None else self.beta_prime


@dataclass
class NormReport:
    """Named non-negative norms for one time window."""

    T: float
    terms: dict = field(default_factory=dict)

    @property
    def nt_lambda(self) -> float:
        return self.terms["nt_lambda"]

    @property
    def nt_gamma_dot(self) -> float:
        return self.terms["nt_gamma_dot"]

    @property
    def nt_phi(self) -> float:
        return self.terms["nt_phi"]

    @property
    def script_n(self) -> float:
        return self.terms["script_n"]

    def row(self) -> dict:
        return {"T": self.T, **self.terms}


# ----------------------------------------------------------------------------
# weights


def bracket_weight(ax: float = 0.0, ay: float = 0.0) -> Callable:
    """Weight <xi>^ax <eta>^ay for kernels."""

    def w(xi, eta):
        return japanese(xi) ** ax * japanese(eta) ** ay

    return w


def _field_weight(alpha: float, half_homogeneous: bool = False) -> Callable:
    def w(xi):
        out = japanese(xi) ** alpha
        if half_homogeneous:
            out = japanese(xi) ** (alpha - 0.5) * np.sqrt(np.sqrt(np.sum(xi**2, axis=0)))
        return out

    return w


def _lp(values: np.ndarray, p: float, measure: float, axis: int) -> np.ndarray:
    if math.isinf(p):
        return np.max(values, axis=axis)
    return (np.sum(values**p, axis=axis) * measure) ** (1.0 / p)


def mixed_norm(
    grid: Grid,
    F: np.ndarray,
    dt: float,
    p: float,
    q: float,
    weight=None,
    order: str = "xy",
    y_fourier: bool = False,
) -> float:
    """||F||_{L^p(dt) L^q(dx) L^2(dy)} over samples F[j] at t_j = j dt (left Riemann rule).

    F has shape (M, n^d, n^d) for kernels or (M, n^d) for fields (no inner L^2).
    ``weight`` is a Fourier weight (callable or (ax, ay) exponents) applied first.
    ``order='yx'`` swaps the roles of x and y.  With ``y_fourier`` the last axis
    holds Fourier coefficients in y and the inner norm uses Plancherel.
    """
    F = np.asarray(F)
    if F.ndim == 2:
        G = F
        if weight is not None:
            w = _field_weight(weight) if not callable(weight) else weight
            G = fourier_multiplier(grid, G, w, kind="field")
        inner = np.abs(G)
    else:
        G = F if order == "xy" else np.swapaxes(F, -1, -2)
        if weight is not None:
            if y_fourier:
                raise ValueError("weights must be applied before passing Fourier-in-y data")
            w = bracket_weight(*weight) if not callable(weight) else weight
            G = fourier_multiplier(grid, G, w, kind="kernel")
        if y_fourier:
            inner = np.sqrt(np.sum(np.abs(G) ** 2, axis=-1) * grid.L**grid.d)
        else:
            inner = np.sqrt(np.sum(np.abs(G) ** 2, axis=-1) * grid.dV)
    spatial = _lp(inner, q, grid.dV, axis=-1)
    return float(_lp(spatial, p, dt, axis=0))


def _warn_subset(grid: Grid, n_offsets: int, exact: bool | None) -> None:
    if exact is None:
        exact = n_offsets == grid.size
    if not exact:
        warnings.warn(
            f"sup over offsets taken over {n_offsets} of {grid.size} lattice vectors",
            SupApproximationWarning,
            stacklevel=3,
        )


def collapse_norm(
    grid: Grid,
    slices: np.ndarray,
    dt: float,
    alpha: float,
    variant: str = "lambda",
    exact_sup: bool | None = None,
) -> float:
    """sup_w || W c(t) K(t, x, x+w) ||_{L^2(dt dx)}.

    slices: array (n_offsets, M, n^d).  W = <grad>^alpha ('lambda') or
    <grad>^(alpha-1/2) |grad|^(1/2) ('gamma').
    """
    slices = np.asarray(slices)
    _warn_subset(grid, slices.shape[0], exact_sup)
    w = _field_weight(alpha, half_homogeneous=(variant == "gamma"))
    vals = fourier_multiplier(grid, slices, w, kind="field")
    per = np.sqrt(np.sum(np.abs(vals) ** 2, axis=(1, 2)) * dt * grid.dV)
    return float(np.max(per)) if per.size else 0.0


def quarter_time_norm(
    grid: Grid, slices: np.ndarray, dt: float, pad: int = 4, exact_sup: bool | None = None, power: float = 0.25
) -> float:
    """sup_w || |d_t|^{1/4} (c(t) K(t, x, x+w)) ||_{L^2(dt dx)} via the multiplier |tau|^{1/4}."""
    slices = np.asarray(slices)
    _warn_subset(grid, slices.shape[0], exact_sup)
    best = 0.0
    for s in slices:
        spec = time_fourier(s, dt, pad)
        wt = np.abs(spec.tau)[:, None] ** (2 * power)
        val = float(np.sqrt(np.sum(spec.l2_weighted(wt)) * grid.dV))
        best = max(best, val)
    return best


def xsb_symbol(tau: np.ndarray, xisq: np.ndarray, etasq: np.ndarray, sign: str = "plus_plus") -> np.ndarray:
    """tau + |xi|^2 +/- |eta|^2."""
    s = {"plus_plus": 1.0, "plus_minus": -1.0}[sign]
    return tau + xisq + s * etasq


def spatial_coefficients(grid: Grid, snaps: np.ndarray) -> np.ndarray:
    """Coefficients c(xi, eta) with K = sum c e^{i(xi x + eta y)} (flattened, FFT order)."""
    return grid.fft(snaps, "xy") / grid.size**2


def xsb_norm(
    grid: Grid,
    snaps: np.ndarray,
    dt: float,
    b: float,
    sign: str = "plus_plus",
    weight=None,
    pad: int = 4,
    store_every: int = 1,
    coefficients: bool = False,
    chunk_elems: int = 1 << 22,
) -> float:
    """|| <tau + |xi|^2 +/- |eta|^2>^b F~ ||_{L^2} for c(t)F sampled at every step.

    ``snaps`` has shape (M, n^d, n^d) (or Fourier coefficients if ``coefficients``).
    """
    if store_every != 1:
        raise ValueError("xsb_norm needs kernel snapshots at every step (stride 1); stride > 1 aliases in tau")
    c = np.asarray(snaps) if coefficients else spatial_coefficients(grid, snaps)
    if weight is not None:
        w = bracket_weight(*weight) if not callable(weight) else weight
        xi = grid.kvec.reshape(grid.d, grid.size)
        c = c * w(xi[:, :, None], xi[:, None, :])
    M = c.shape[0]
    ksq = grid.ksq
    xisq = np.repeat(ksq, grid.size)
    etasq = np.tile(ksq, grid.size)
    return xsb_from_coefficients(c.reshape(M, -1), xisq, etasq, dt, b, sign, grid.L**grid.d, pad, chunk_elems)


def xsb_from_coefficients(
    coef: np.ndarray,
    xisq: np.ndarray,
    etasq: np.ndarray,
    dt: float,
    b: float,
    sign: str = "plus_plus",
    volume: float = 1.0,
    pad: int = 4,
    chunk_elems: int = 1 << 22,
) -> float:
    """X^b norm from time samples of Fourier coefficients, shape (M, J).

    ``volume`` is L^d; the spatial Plancherel factor is volume**2 for kernels.
    """
    M = coef.shape[0]
    flat = coef.reshape(M, -1)
    P = pad * M
    step = max(1, chunk_elems // P)
    tau = 2 * np.pi * np.fft.fftfreq(P, d=dt)
    dtau = 2 * np.pi / (P * dt)
    total = 0.0
    for start in range(0, flat.shape[1], step):
        sl = slice(start, start + step)
        ft = dt * np.fft.fft(flat[:, sl], n=P, axis=0)
        sig = xsb_symbol(tau[:, None], xisq[None, sl], etasq[None, sl], sign)
        total += float(np.sum((1.0 + sig**2) ** b * np.abs(ft) ** 2))
    return float(np.sqrt(total * dtau / (2 * np.pi) * volume**2))


def smooth_cutoff(r: np.ndarray) -> np.ndarray:
    """C-infinity function equal to 1 on [0, 1], 0 beyond 2."""
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    out[r <= 1] = 1.0
    mid = (r > 1) & (r < 2)
    a = np.exp(-1.0 / (2.0 - r[mid]))
    b = np.exp(-1.0 / (r[mid] - 1.0))
    out[mid] = a / (a + b)
    return out


def projection_scale(M: float) -> float:
    """2^I with 2^I < M <= 2^(I+1)."""
    if M < 1:
        raise ValueError("projection cutoff must satisfy M >= 1")
    return 2.0 ** (math.ceil(math.log2(M)) - 1)


def _projection_weight(mode: str, M: float, side: str):
    scale = projection_scale(M)
    sgn = {"xi_minus_eta": -1.0, "xi_plus_eta": 1.0}[mode]

    def w(xi, eta):
        low = smooth_cutoff(np.sqrt(np.sum((xi + sgn * eta) ** 2, axis=0)) / scale)
        return low if side == "low" else 1.0 - low

    return w


def freq_projection(grid: Grid, K: np.ndarray, mode: str, M: float, side: str = "low") -> np.ndarray:
    """Smooth projection phi(|xi -/+ eta| / 2^I) (low) or its complement (high)."""
    if side not in ("low", "high"):
        raise ValueError("side must be 'low' or 'high'")
    return fourier_multiplier(grid, K, _projection_weight(mode, M, side), kind="kernel")


# ----------------------------------------------------------------------------


def _fmt(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def composite_norms(trace: SpaceTimeTrace, cfg: NormConfig, T: float | None = None) -> NormReport:
    """N_T(Lambda), N_T-dot(Gamma), N_T(phi) and the script-N norm on the window [0, T)."""
    g = trace.grid
    m = trace.window_samples(T)
    dt = trace.dt
    a = cfg.alpha
    exact = trace.full_offsets()
    terms: dict[str, float] = {}

    stride = trace.store_every
    idx = np.nonzero(trace.snap_index < m)[0]
    lam = trace.lam_snaps[idx]
    gam = trace.gam_snaps[idx]
    dts = dt * stride

    nt_l = nt_g = 0.0
    for p, q in cfg.pq_pairs:
        orders = ("xy",) if q == 2 else ("xy", "yx")
        for o in orders:
            key = f"L{_fmt(p)}L{_fmt(q)}L2_{o}"
            vl = mixed_norm(g, lam, dts, p, q, (a, a), order=o)
            vg = mixed_norm(g, gam, dts, p, q, (a, a), order=o)
            terms[f"lam_{key}"] = vl
            terms[f"gam_{key}"] = vg
            nt_l += vl
            nt_g += vg
    with warnings.catch_warnings():
        if not exact:
            warnings.simplefilter("ignore", SupApproximationWarning)
        terms["lam_collapse"] = collapse_norm(g, trace.lam_diag[:, :m], dt, a, "lambda", exact)
        terms["lam_quarter"] = quarter_time_norm(g, trace.lam_diag[:, :m], dt, cfg.pad, exact)
        terms["gam_collapse"] = collapse_norm(g, trace.gam_diag[:, :m], dt, a, "gamma", exact)
        terms["lam_sym_collapse"] = collapse_norm(g, trace.lam_sym_diag[:, :m], dt, a, "lambda", exact)
        terms["lam_sym_quarter"] = quarter_time_norm(g, trace.lam_sym_diag[:, :m], dt, cfg.pad, exact)
    nt_l += terms["lam_collapse"] + terms["lam_quarter"]
    nt_g += terms["gam_collapse"]

    nt_p = 0.0
    for p, q in cfg.pq_pairs:
        v = mixed_norm(g, trace.phi[:m], dt, p, q, a)
        terms[f"phi_L{_fmt(p)}L{_fmt(q)}"] = v
        nt_p += v

    terms.update(script_n_terms(trace, cfg, m))
    terms["nt_lambda"] = nt_l
    terms["nt_gamma_dot"] = nt_g
    terms["nt_phi"] = nt_p
    return NormReport(T=m * dt, terms=terms)


def script_n_terms(trace: SpaceTimeTrace, cfg: NormConfig, m: int) -> dict:
    """Constituents of the script-N norm; NaN when kernels are not stored at every step."""
    keys = ("sn_high_minus", "sn_high_plus", "sn_low_strichartz", "sn_xb", "sn_low_xb", "script_n",
            "gam_xb_plus_minus")
    if trace.store_every != 1:
        return {k: float("nan") for k in keys}
    g = trace.grid
    dt = trace.dt
    a, b = cfg.alpha, cfg.b
    beta = trace.spec.beta
    Mcut = float(trace.spec.bigN) ** cfg.resolved_beta_prime(beta)
    lam = trace.lam_snaps[:m]
    hi_m = freq_projection(g, lam, "xi_minus_eta", Mcut, "high")
    hi_p = freq_projection(g, lam, "xi_plus_eta", Mcut, "high")
    low = freq_projection(g, freq_projection(g, lam, "xi_minus_eta", Mcut, "low"), "xi_plus_eta", Mcut, "low")
    out = {}
    out["sn_high_minus"] = xsb_norm(g, hi_m, dt, b, weight=(a, a), pad=cfg.pad)
    out["sn_high_plus"] = xsb_norm(g, hi_p, dt, b, weight=(a, a), pad=cfg.pad)
    strich = 0.0
    for p, q in cfg.pq_pairs:
        for o in (("xy",) if q == 2 else ("xy", "yx")):
            strich += mixed_norm(g, low, dt, p, q, (a, a), order=o)
    out["sn_low_strichartz"] = strich
    out["sn_xb"] = xsb_norm(g, lam, dt, b, pad=cfg.pad)
    out["sn_low_xb"] = xsb_norm(g, low, dt, b, weight=(a, a), pad=cfg.pad) / float(trace.spec.bigN)
    out["gam_xb_plus_minus"] = xsb_norm(g, trace.gam_snaps[:m].conj(), dt, b, sign="plus_minus", pad=cfg.pad)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupApproximationWarning)
        sym_c = collapse_norm(g, trace.lam_sym_diag[:, :m], dt, a, "lambda")
        sym_q = quarter_time_norm(g, trace.lam_sym_diag[:, :m], dt, cfg.pad)
    out["script_n"] = (
        out["sn_high_minus"] + out["sn_high_plus"] + strich + sym_c + sym_q + out["sn_xb"] + out["sn_low_xb"]
    )
    return out
