"""Numerical probes of the linear space-time estimates.

Kernels F(t, x, y) in d = 3 are represented sparsely in y: a full set of
x-frequencies xi within a band |xi|_inf <= K, times a few random y-frequencies
eta_k.  Inner L^2(dy) norms then follow from Plancherel.  Time samples are
taken on a box [0, T_box) with the left Riemann rule used by the norms module.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from ..lattice import Grid, japanese, make_grid, time_fourier
from ..norms import mixed_norm, xsb_from_coefficients

__all__ = [
    "LemmaCheck",
    "ModeField",
    "trend_slope",
    "verify_duhamel",
    "duhamel",
    "duhamel_single_mode_ratio",
    "verify_strichartz",
    "verify_quartertime",
    "verify_sobolev_angle",
    "verify_mlogm",
    "mlogm_integral",
    "strichartz_q",
    "sobolev_q",
    "window_hat",
    "LEMMAS",
]

TREND_TOL = 0.25


@dataclass
class LemmaCheck:
    lemma_id: str
    ensemble_size: int
    ratios: dict  # resolution -> per-sample LHS/RHS
    max_ratio: dict
    trend_slope: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        finite = all(np.all(np.isfinite(r)) for r in self.ratios.values())
        ok = finite and abs(self.trend_slope) <= TREND_TOL
        if "spread" in self.extra:
            ok = ok and self.extra["spread"] < 2.0
        return bool(ok)

    def rows(self) -> list[dict]:
        out = []
        for res in sorted(self.ratios):
            for i, r in enumerate(self.ratios[res]):
                out.append({"lemma": self.lemma_id, "resolution": res, "sample": i, "ratio": float(r)})
        return out

    def summary(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "ensemble_size": self.ensemble_size,
            "max_ratio": {str(k): float(v) for k, v in sorted(self.max_ratio.items())},
            "trend_slope": float(self.trend_slope),
            "passed": self.passed,
            **{k: v for k, v in self.extra.items() if isinstance(v, (int, float, str, bool))},
        }


def trend_slope(max_ratio: dict) -> float:
    """Least-squares slope of log(max ratio) against log(resolution)."""
    keys = sorted(max_ratio)
    if len(keys) < 2:
        return 0.0
    x = np.log(np.asarray(keys, dtype=float))
    y = np.log(np.asarray([max_ratio[k] for k in keys], dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def window_hat(sigma: np.ndarray, T: float) -> np.ndarray:
    """|c^(sigma)| for the characteristic function of [0, T]."""
    sigma = np.asarray(sigma, dtype=float)
    out = np.full_like(sigma, T)
    nz = np.abs(sigma) > 1e-12
    out[nz] = 2 * np.abs(np.sin(sigma[nz] * T / 2)) / np.abs(sigma[nz])
    return out


def bump_envelope(t: np.ndarray, T: float) -> np.ndarray:
    """Smooth compactly supported bump on (0, T)."""
    u = 2 * np.asarray(t) / T - 1
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(1 - 1 / (1 - u[m] ** 2))
    return out


# ----------------------------------------------------------------------------


@dataclass
class ModeField:
    """F(t, x, y) = sum_k f_k(t, x) e^{i eta_k . y} with f_k given by x-Fourier coefficients.

    coef has shape (M, K, n^d): coefficient of e^{i(xi.x + eta_k.y)} at time t_j.
    """

    grid: Grid
    etas: np.ndarray  # (K, d) integer mode vectors
    coef: np.ndarray
    dt: float

    @property
    def unit(self) -> float:
        return 2 * np.pi / self.grid.L

    @property
    def eta_vec(self) -> np.ndarray:
        return self.etas * self.unit

    def xi_vec(self) -> np.ndarray:
        return self.grid.kvec.reshape(self.grid.d, self.grid.size)

    def symbols(self):
        """(|xi|^2, |eta_k|^2) broadcast to (K, n^d)."""
        xisq = np.broadcast_to(self.grid.ksq, (len(self.etas), self.grid.size))
        etasq = np.broadcast_to(np.sum(self.eta_vec**2, axis=1)[:, None], xisq.shape)
        return xisq, etasq

    def weighted(self, ax: float = 0.0, ay: float = 0.0, angle: float = 0.0) -> "ModeField":
        """Multiply by <xi>^ax <eta>^ay <xi + eta>^angle."""
        xi = self.xi_vec()[:, None, :]
        eta = self.eta_vec.T[:, :, None]
        w = japanese(xi) ** ax * japanese(eta) ** ay * japanese(xi + eta) ** angle
        return ModeField(self.grid, self.etas, self.coef * w[None], self.dt)

    def xspace(self) -> np.ndarray:
        """f_k(t, x) samples, shape (M, K, n^d)."""
        return self.grid.ifft(self.coef, "x") * self.grid.size

    def mixed_norm(self, p: float, q: float) -> float:
        fx = np.swapaxes(self.xspace(), 1, 2)  # (M, n^d, K)
        return mixed_norm(self.grid, fx, self.dt, p, q, y_fourier=True)

    def xsb(self, b: float, pad: int = 4) -> float:
        xisq, etasq = self.symbols()
        M = self.coef.shape[0]
        return xsb_from_coefficients(
            self.coef.reshape(M, -1), xisq.ravel(), etasq.ravel(), self.dt, b, "plus_plus",
            self.grid.L**self.grid.d, pad,
        )

    def l2_at(self, j: int = 0) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coef[j]) ** 2) * self.grid.L ** (2 * self.grid.d)))

    def diagonal(self, z: np.ndarray) -> np.ndarray:
        """x -> F(t, x, x + z) for a lattice offset z, shape (M, n^d)."""
        fx = self.xspace()
        x = self.grid.points
        zz = np.asarray(z, dtype=float) * self.grid.dx
        phase = np.exp(1j * (x + zz) @ self.eta_vec.T)  # (n^d, K)
        return np.einsum("mkx,xk->mx", fx, phase)


def _dyadic_bands(K: int) -> list[int]:
    """1, 2, 4, ... up to K (K included)."""
    out = [1]
    while out[-1] * 2 < K:
        out.append(out[-1] * 2)
    if out[-1] != K:
        out.append(K)
    return out


def _random_etas(rng: np.random.Generator, d: int, K: int, count: int) -> np.ndarray:
    seen: set = set()
    out = []
    while len(out) < count:
        e = tuple(int(v) for v in rng.integers(-K, K + 1, size=d))
        if e not in seen:
            seen.add(e)
            out.append(e)
    return np.array(out)


@dataclass(frozen=True)
class Resolution:
    """Spatial grid, band limit and time step tied to a refinement level n."""

    n: int
    L: float = 2 * np.pi
    d: int = 3
    band_fraction: float = 0.25
    n_eta: int = 4
    nu_max: float = 20.0

    @property
    def grid(self) -> Grid:
        return make_grid(self.d, self.n, self.L)

    @property
    def band(self) -> int:
        return max(1, int(self.n * self.band_fraction))

    @property
    def omega_max(self) -> float:
        return 2 * self.d * (self.band * 2 * np.pi / self.L) ** 2

    def dt(self, safety: float = 1.5) -> float:
        """Time step whose tau-Nyquist exceeds the largest symbol by a safety factor."""
        return np.pi / (safety * (self.omega_max + self.nu_max))


def _box_modes(d: int, band: int) -> np.ndarray:
    """Integer modes of [-band, band]^d in lexicographic order, shape (P, d)."""
    axis = np.arange(-band, band + 1)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _place(grid: Grid, modes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Scatter values (K, P) given on integer modes into FFT-ordered arrays (K, n^d)."""
    out = np.zeros(values.shape[:-1] + (grid.size,), dtype=values.dtype)
    out[..., grid.flat_index(modes)] = values
    return out


def random_mode_field(
    rng: np.random.Generator,
    res: Resolution,
    times: np.ndarray,
    dt: float,
    kind: str = "modulated",
    T: float = 0.5,
    T_src: float = 1.0,
    etas: np.ndarray | None = None,
    band: int | None = None,
) -> ModeField:
    """Band-limited random kernels with flat spectrum and random phases.

    Random numbers are drawn in a fixed mode order, so the same generator state
    and band give the same continuous kernel on every grid that resolves it.

    kind:
      modulated : smooth envelope on (0, T_src) times e^{i tau t} with tau = -omega + nu, nu random
      free      : free evolution c(t) e^{-it(|xi|^2+|eta|^2)} of random data, windowed to [0, T)
      concentrated : as free, with aligned phases (data concentrated at a point in x)
    """
    g = res.grid
    band = res.band if band is None else band
    if etas is None:
        etas = _random_etas(rng, g.d, band, res.n_eta)
    modes = _box_modes(g.d, band)
    K = len(etas)
    if kind == "concentrated":
        vals = np.ones((K, len(modes)), complex)
    else:
        vals = np.exp(2j * np.pi * rng.random((K, len(modes))))
    amp = _place(g, modes, vals)
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * g.L ** (2 * g.d))
    mf = ModeField(g, etas, np.zeros((len(times), K, g.size), complex), dt)
    xisq, etasq = mf.symbols()
    omega = xisq + etasq
    t = times[:, None, None]
    if kind == "modulated":
        nu = _place(g, modes, rng.uniform(-res.nu_max, res.nu_max, size=(K, len(modes))))
        mf.coef = bump_envelope(t, T_src) * np.exp(1j * (nu - omega)[None] * t) * amp[None]
    elif kind in ("free", "concentrated"):
        mf.coef = ((t >= 0) & (t < T - 1e-12)) * np.exp(-1j * omega[None] * t) * amp[None]
    else:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    return mf


def _sample_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, i])


# ----------------------------------------------------------------------------
# Duhamel / X^b energy estimate


def duhamel(mf: ModeField, T: float) -> ModeField:
    """int c(t-s) e^{-i(t-s)(|xi|^2+|eta|^2)} F(s) ds by the trapezoid rule on the sample grid."""
    dt = mf.dt
    lags = int(round(T / dt))
    xisq, etasq = mf.symbols()
    omega = xisq + etasq
    out = np.zeros_like(mf.coef)
    M = mf.coef.shape[0]
    for k in range(min(lags, M - 1) + 1):
        w = 0.5 if k in (0, lags) else 1.0
        out[k:] += (w * dt) * np.exp(-1j * k * dt * omega)[None] * mf.coef[: M - k]
    return ModeField(mf.grid, mf.etas, out, dt)


def duhamel_single_mode_ratio(omega: float, tau0: float, b: float, T: float, width: float, tau_max: float) -> float:
    """Closed-form ratio for F = g(t) e^{i tau0 t} with a Gaussian envelope g of the given width.

    |F~|^2 is a Gaussian of std 1/width around tau0; Lambda~ = c^(sigma) F~.
    """
    def spec(tau):
        return np.exp(-((tau - tau0) ** 2) * width**2)

    def num(tau):
        s = tau + omega
        return (1 + s * s) ** b * window_hat(np.array([s]), T)[0] ** 2 * spec(tau)

    def den(tau):
        s = tau + omega
        return (1 + s * s) ** (b - 1) * spec(tau)

    lo, hi = tau0 - 12 / width, tau0 + 12 / width
    lo, hi = max(lo, -tau_max), min(hi, tau_max)
    pts = [-omega] if lo < -omega < hi else None
    a = integrate.quad(num, lo, hi, points=pts, limit=400)[0]
    c = integrate.quad(den, lo, hi, points=pts, limit=400)[0]
    return math.sqrt(a / c)


def verify_duhamel(
    b: float = 0.45,
    resolutions: Sequence[int] = (12, 16),
    ensemble: int = 50,
    seed: int = 0,
    T: float = 0.5,
    T_src: float = 1.0,
) -> LemmaCheck:
    """Ratio || Duhamel(F) ||_{X^b} / || F ||_{X^{b-1}} over random band-limited F."""
    if not 0 < b < 1:
        raise ValueError("b must satisfy 0 < b < 1")
    ratios = {}
    for n in resolutions:
        res = Resolution(n)
        dt = res.dt()
        M = int(math.ceil((T_src + T) / dt)) + 1
        times = np.arange(M) * dt
        r = []
        for i in range(ensemble):
            rng = _sample_rng(seed, i)
            F = random_mode_field(rng, res, times, dt, "modulated", T, T_src)
            lhs = duhamel(F, T).xsb(b)
            rhs = F.xsb(b - 1)
            r.append(lhs / rhs)
        ratios[n] = np.asarray(r)
    mx = {k: float(np.max(v)) for k, v in ratios.items()}
    return LemmaCheck("duhamel", ensemble, ratios, mx, trend_slope(mx), {"b": b, "T": T})


# ----------------------------------------------------------------------------
# Strichartz-type embedding X^delta -> L^p L^q L^2


def strichartz_q(delta: float, p: float) -> float:
    """q solving 2/p + 3/q = (5 - 4 delta)/2."""
    rhs = (5 - 4 * delta) / 2 - 2 / p
    if rhs <= 0:
        raise ValueError(f"no admissible q for delta={delta}, p={p}")
    return 3 / rhs


def verify_strichartz(
    delta: float = 0.4,
    p: float = 4.0,
    q: float | None = None,
    resolutions: Sequence[int] = (12, 16),
    ensemble: int = 50,
    seed: int = 0,
    T: float = 0.5,
    T_src: float = 1.0,
) -> LemmaCheck:
    """Ratio ||F||_{L^p L^q L^2} / ||F||_{X^delta} over modulated, free and concentrated ensembles."""
    if q is None:
        q = strichartz_q(delta, p)
    if abs(2 / p + 3 / q - (5 - 4 * delta) / 2) > 1e-12:
        raise ValueError(
            f"exponent relation 2/p + 3/q = (5-4 delta)/2 violated; admissible q for delta={delta}, "
            f"p={p} is {strichartz_q(delta, p)!r}"
        )
    ratios = {}
    kinds = ("modulated", "free", "concentrated")
    for n in resolutions:
        res = Resolution(n)
        dt = res.dt()
        M = int(math.ceil(max(T, T_src) / dt)) + 1
        times = np.arange(M) * dt
        r = []
        for i in range(ensemble):
            rng = _sample_rng(seed, i)
            F = random_mode_field(rng, res, times, dt, kinds[i % 3], T, T_src)
            r.append(F.mixed_norm(p, q) / F.xsb(delta))
        ratios[n] = np.asarray(r)
    mx = {k: float(np.max(v)) for k, v in ratios.items()}
    return LemmaCheck("strichartz", ensemble, ratios, mx, trend_slope(mx), {"delta": delta, "p": p, "q": q})


# ----------------------------------------------------------------------------
# quarter time derivative of the collapsed solution


def _offsets(grid: Grid, stride: int | None = None) -> np.ndarray:
    stride = stride or max(1, grid.n // 4)
    axis = np.arange(0, grid.n, stride)
    mesh = np.meshgrid(*([axis] * grid.d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def quarter_lhs(sol: ModeField, offsets: np.ndarray, pad: int = 4) -> float:
    """sup_z || |d_t|^{1/4} Lambda(t, x, x+z) ||_{L^2(dt dx)}.

    The time transform is linear, so it is taken once on the eta components
    and the collapse to x -> (x, x+z) is applied per offset in tau space.
    """
    g = sol.grid
    sp = time_fourier(sol.xspace(), sol.dt, pad)  # (P, K, n^d)
    w = np.abs(sp.tau) ** 0.5 * sp.dtau / (2 * np.pi) * g.dV
    x = g.points
    best = 0.0
    for z in offsets:
        phase = np.exp(1j * (x + np.asarray(z) * g.dx) @ sol.eta_vec.T)  # (n^d, K)
        sl = np.einsum("pkx,xk->px", sp.values, phase)
        best = max(best, math.sqrt(float(np.sum(w[:, None] * np.abs(sl) ** 2))))
    return best


def quarter_rhs(data: ModeField | None, F: ModeField | None, alpha: float, eps: float) -> float:
    out = 0.0
    if data is not None:
        out += data.weighted(alpha, alpha).l2_at(0)
    if F is not None:
        out += F.weighted(alpha, alpha).xsb(-(1 + eps) / 2)
        out += F.weighted(alpha, alpha - 0.5).xsb(-(1 + 2 * eps) / 4)
    return out


def quarter_solution(data: ModeField | None, F: ModeField | None, T: float, res_grid: Grid, dt: float, M: int,
                     etas=None) -> ModeField:
    """c(t) e^{-it Delta} Lambda_0 + int c(t-s) e^{-i(t-s) Delta} F(s) ds on M samples."""
    times = np.arange(M) * dt
    parts = []
    if data is not None:
        xisq, etasq = data.symbols()
        win = ((times >= 0) & (times < T - 1e-12))[:, None, None]
        parts.append(ModeField(res_grid, data.etas, win * np.exp(-1j * (xisq + etasq)[None] * times[:, None, None])
                               * data.coef[0][None], dt))
    if F is not None:
        parts.append(duhamel(F, T))
    out = parts[0]
    for p_ in parts[1:]:
        out = ModeField(res_grid, out.etas, out.coef + p_.coef, dt)
    return out


def verify_quartertime(
    resolutions: Sequence[int] = (12, 16),
    ensemble: int = 50,
    seed: int = 0,
    alpha: float = 0.6,
    eps: float = 0.05,
    T: float = 0.5,
    T_src: float = 1.0,
) -> LemmaCheck:
    """sup_z || |d_t|^{1/4} Lambda(t,x,x+z) || against data and source norms.

    Each sample is band limited at a random dyadic scale up to the grid cutoff,
    so the ensemble covers all frequency scales the grid can represent.
    """
    ratios = {}
    for n in resolutions:
        res = Resolution(n)
        g = res.grid
        dt = res.dt()
        M = int(math.ceil((T_src + T) / dt)) + 1
        times = np.arange(M) * dt
        offs = _offsets(g)
        r = []
        for i in range(ensemble):
            rng = _sample_rng(seed, i)
            case = i % 3  # data only, source only, both
            data = F = None
            band = int(rng.choice(_dyadic_bands(res.band)))
            etas = _random_etas(rng, g.d, band, res.n_eta)
            if case in (0, 2):
                kind = "concentrated" if i % 2 else "free"
                data = random_mode_field(rng, res, times[:1], dt, kind, T, T_src, etas, band)
            if case in (1, 2):
                F = random_mode_field(rng, res, times, dt, "modulated", T, T_src, etas, band)
            sol = quarter_solution(data, F, T, g, dt, M)
            r.append(quarter_lhs(sol, offs) / quarter_rhs(data, F, alpha, eps))
        ratios[n] = np.asarray(r)
    mx = {k: float(np.max(v)) for k, v in ratios.items()}
    return LemmaCheck("quartertime", ensemble, ratios, mx, trend_slope(mx), {"alpha": alpha, "eps": eps, "T": T})


# ----------------------------------------------------------------------------
# Sobolev at an angle


def sobolev_q(p: float, alpha: float, d: int = 3) -> float:
    """q with 1/q = 1/p - alpha/d."""
    inv = 1 / p - alpha / d
    if inv <= 0:
        raise ValueError("alpha too large for a finite Sobolev exponent")
    return 1 / inv


def angle_ratio(F: ModeField, p: float, q: float, alpha: float) -> float:
    return F.mixed_norm(1.0, q) / F.weighted(angle=alpha).mixed_norm(1.0, p)


def verify_sobolev_angle(
    p: float = 2.0,
    alpha: float = 0.6,
    q: float | None = None,
    resolutions: Sequence[int] = (12, 16),
    ensemble: int = 50,
    seed: int = 0,
) -> LemmaCheck:
    """||F||_{L^q(dx) L^2(dy)} / ||<grad_x + grad_y>^alpha F||_{L^p(dx) L^2(dy)}."""
    if q is None:
        q = sobolev_q(p, alpha)
    ratios = {}
    for n in resolutions:
        res = Resolution(n)
        g = res.grid
        r = []
        for i in range(ensemble):
            rng = _sample_rng(seed, i)
            kind = ("flat", "diagonal", "concentrated")[i % 3]
            F = random_static_field(rng, res, kind)
            r.append(angle_ratio(F, p, q, alpha))
        ratios[n] = np.asarray(r)
    mx = {k: float(np.max(v)) for k, v in ratios.items()}
    return LemmaCheck("sobolev_angle", ensemble, ratios, mx, trend_slope(mx), {"p": p, "q": q, "alpha": alpha})


def random_static_field(rng: np.random.Generator, res: Resolution, kind: str = "flat") -> ModeField:
    """Time-independent kernels (a single sample with unit time measure).

    flat: random phases; concentrated: aligned phases (point mass in x);
    diagonal: coefficients depend on xi + eta through a narrow Gaussian, so F concentrates near x = y.
    """
    g = res.grid
    etas = _random_etas(rng, g.d, res.band, max(res.n_eta, 8) if kind == "diagonal" else res.n_eta)
    modes = _box_modes(g.d, res.band)
    K = len(etas)
    if kind == "flat":
        vals = np.exp(2j * np.pi * rng.random((K, len(modes))))
    elif kind == "concentrated":
        vals = np.ones((K, len(modes)), complex)
    elif kind == "diagonal":
        zeta = modes[None, :, :] + etas[:, None, :]
        vals = np.exp(-np.sum(zeta**2, axis=-1) / 2.0).astype(complex)
    else:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    amp = _place(g, modes, vals)
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * g.L ** (2 * g.d))
    return ModeField(g, etas, amp[None], 1.0)


# ----------------------------------------------------------------------------
# the M log M integral


def mlogm_integral(M: float, A: float, tol: float = 1e-8) -> float:
    """int_{|eta| < M} d eta / (1 + |A + |eta|^2|) in three dimensions (radial quadrature)."""
    def f(r):
        return 4 * np.pi * r * r / (1 + abs(A + r * r))

    pts = [math.sqrt(-A)] if A < 0 and math.sqrt(-A) < M else None
    val, err = integrate.quad(f, 0.0, M, points=pts, epsabs=0.0, epsrel=tol, limit=500)
    if not np.isfinite(val) or err > max(1e-6 * abs(val), 1e-10):
        raise RuntimeError(f"quadrature did not converge for M={M}, A={A}")
    return float(val)


def verify_mlogm(M_list: Sequence[float] = (2, 4, 8, 16, 32, 64), A_list: Sequence[float] | None = None) -> LemmaCheck:
    """sup over A of the integral divided by M log M, for each M.

    The default A set scans A = -s M^2 for s in [0, 1.5] (the maximizer sits
    near the sphere |eta|^2 = -A inside the ball) plus a few positive values.
    """
    ratios = {}
    arg = {}
    for M in M_list:
        if A_list is None:
            As = np.concatenate([-np.linspace(0.0, 1.5, 61) * M * M, [1.0, M, M * M, 10 * M * M]])
        else:
            As = np.asarray(A_list, dtype=float)
        vals = np.array([mlogm_integral(M, A) for A in As]) / (M * math.log(M))
        ratios[M] = vals
        arg[M] = float(As[int(np.argmax(vals))])
    mx = {k: float(np.max(v)) for k, v in ratios.items()}
    spread = max(mx.values()) / min(mx.values())
    return LemmaCheck(
        "mlogm", len(next(iter(ratios.values()))), ratios, mx, trend_slope(mx), {"spread": spread, "argmax_A": arg}
    )


LEMMAS: dict[str, Callable[..., LemmaCheck]] = {
    "duhamel": verify_duhamel,
    "strichartz": verify_strichartz,
    "quartertime": verify_quartertime,
    "sobolev_angle": verify_sobolev_angle,
    "mlogm": verify_mlogm,
}
