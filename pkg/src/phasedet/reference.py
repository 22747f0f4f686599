"""Ground-truth curves for the free-particle scenarios.

Exact Schrodinger amplitudes (hbar = m = 1), the large-t closed forms that
follow from summing particle phases, a method-of-images solution for the
hard wall, an independent Crank-Nicolson propagator, and the metrics used
to compare a simulated profile against any of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import DEFAULT_PHI0, SIGMA_X0

SQRT_2PI = math.sqrt(2.0 * math.pi)


# -- exact free packets -------------------------------------------------------

def psi_single_exact(x, t, x0=0.0, v0=5.0, sigma_x0=SIGMA_X0):
    """Free Gaussian packet of initial width ``sigma_x0`` and mean velocity
    ``v0`` released from ``x0`` at t = 0."""
    if not sigma_x0 > 0:
        raise ValueError("sigma_x0 must be positive")
    x = np.asarray(x, dtype=float)
    s2 = sigma_x0 * sigma_x0
    a = 1.0 + 1j * t / (2.0 * s2)
    u = x - x0 - v0 * t
    norm = (2.0 * math.pi * s2) ** -0.25 / np.sqrt(a)
    return norm * np.exp(-u * u / (4.0 * s2 * a) + 1j * v0 * (x - x0) - 0.5j * v0 * v0 * t)


def width_single(t, sigma_x0=SIGMA_X0):
    return np.sqrt(sigma_x0 ** 2 + t * t / (4.0 * sigma_x0 ** 2))


def density_single_exact(x, t, x0=0.0, v0=5.0, sigma_x0=SIGMA_X0):
    s = width_single(t, sigma_x0)
    u = np.asarray(x, dtype=float) - x0 - v0 * t
    return np.exp(-u * u / (2.0 * s * s)) / (SQRT_2PI * s)


def psi_two_exact(x, t, x1=-20.0, x2=20.0, v0=5.0, sigma_x0=SIGMA_X0):
    """Right-mover from ``x1`` plus left-mover from ``x2``, each at |v| = v0."""
    return (psi_single_exact(x, t, x1, v0, sigma_x0)
            + psi_single_exact(x, t, x2, -v0, sigma_x0)) / math.sqrt(2.0)


def density_two_exact(x, t, x1=-20.0, x2=20.0, v0=5.0, sigma_x0=SIGMA_X0):
    return np.abs(psi_two_exact(x, t, x1, x2, v0, sigma_x0)) ** 2


def _overlap_t0(a, ka, b, kb, sigma_x0):
    """<psi_a|psi_b> for two packets of equal width; conserved in time."""
    s2 = sigma_x0 ** 2
    m = 0.5 * (a + b)
    dk = kb - ka
    mag = math.exp(-(a - b) ** 2 / (8.0 * s2) - 0.5 * s2 * dk * dk)
    return mag * complex(math.cos(dk * m + ka * a - kb * b), math.sin(dk * m + ka * a - kb * b))


def psi_wall_image(x, t, x0=-20.0, v0=5.0, sigma_x0=SIGMA_X0, wall_x=0.0):
    """Odd superposition of the packet and its mirror image; vanishes at
    the wall for every t. Normalized on the half line x < wall_x."""
    if x0 >= wall_x:
        raise ValueError("packet must start left of the wall")
    x_img = 2.0 * wall_x - x0
    psi = (psi_single_exact(x, t, x0, v0, sigma_x0)
           - psi_single_exact(x, t, x_img, -v0, sigma_x0))
    # half-line norm of the odd combination is 1 - Re<psi|image>
    ov = _overlap_t0(x0, v0, x_img, -v0, sigma_x0)
    return psi / math.sqrt(1.0 - ov.real)


def density_wall_image(x, t, x0=-20.0, v0=5.0, sigma_x0=SIGMA_X0, wall_x=0.0):
    x = np.asarray(x, dtype=float)
    if np.any(x > wall_x):
        raise ValueError("image solution is defined on x <= wall_x")
    dens = np.abs(psi_wall_image(x, t, x0, v0, sigma_x0, wall_x)) ** 2
    return np.where(x == wall_x, 0.0, dens)


# -- large-t closed forms from phase summation ----------------------------------

def channel_amplitude(x, t, x0, v0, sign=1.0, weight=1.0, phi0=DEFAULT_PHI0):
    """sqrt(N/dx) * exp(i phi) for particles released from ``x0`` with mean
    velocity ``v0`` that reach ``x`` at time ``t`` on a straight path of
    length |x - x0| (x0 may be a mirror image).

    ``weight`` is the share of the particle budget the source receives.
    """
    if t <= 0:
        raise ValueError("large-t forms need t > 0")
    x = np.asarray(x, dtype=float)
    v = (x - x0) / t
    n_over_dx = weight * np.exp(-0.5 * (v - v0) ** 2) / (SQRT_2PI * t)
    phase = (x - x0) ** 2 / (2.0 * t) + phi0
    return sign * np.sqrt(n_over_dx) * np.exp(1j * phase)


def density_single_approx(x, t, x0=0.0, v0=5.0, delta_x=1.0):
    """Expected recorded count in a bin of width ``delta_x``; divide by
    ``delta_x`` for a density."""
    if t <= 0:
        raise ValueError("t must be positive")
    u = np.asarray(x, dtype=float) - x0 - v0 * t
    return delta_x / (SQRT_2PI * t) * np.exp(-u * u / (2.0 * t * t))


def two_channel_amplitudes(x, t, x1=-20.0, x2=20.0, v0=5.0, phi0=DEFAULT_PHI0):
    return (channel_amplitude(x, t, x1, v0, weight=0.5, phi0=phi0),
            channel_amplitude(x, t, x2, -v0, weight=0.5, phi0=phi0))


def density_two_approx(x, t, x1=-20.0, x2=20.0, v0=5.0, delta_x=1.0, phi0=DEFAULT_PHI0):
    a1, a2 = two_channel_amplitudes(x, t, x1, x2, v0, phi0)
    return delta_x * np.abs(a1 + a2) ** 2


def wall_channel_amplitudes(x, t, x0=-20.0, v0=5.0, wall_x=0.0, phi0=DEFAULT_PHI0):
    x = np.asarray(x, dtype=float)
    if np.any(x > wall_x):
        raise ValueError("wall approximation is defined on x <= wall_x")
    direct = channel_amplitude(x, t, x0, v0, phi0=phi0)
    # reflected particles travel |x_img - x| with x_img the mirror source;
    # their phase carries the extra pi, i.e. an overall minus sign
    reflected = channel_amplitude(x, t, 2.0 * wall_x - x0, -v0, sign=-1.0, phi0=phi0)
    return direct, reflected


def density_wall_approx(x, t, x0=-20.0, v0=5.0, delta_x=1.0, wall_x=0.0, phi0=DEFAULT_PHI0):
    a1, a2 = wall_channel_amplitudes(x, t, x0, v0, wall_x, phi0)
    dens = delta_x * np.abs(a1 + a2) ** 2
    return np.where(np.asarray(x) == wall_x, 0.0, dens)


def poisson_variance(amplitudes) -> np.ndarray:
    """Variance of |sum_k a_k|**2 when each channel count is Poisson.

    With a_k = sqrt(N_k) exp(i phi_k), d|A|^2/dN_k = Re(conj(A) a_k)/N_k, so
    var = sum_k (Re(conj(A) a_k))**2 / N_k. For a single channel this is N.
    """
    amps = [np.asarray(a) for a in amplitudes]
    total = sum(amps)
    var = np.zeros(total.shape)
    for a in amps:
        n = np.abs(a) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(n > 0, np.real(np.conj(total) * a) ** 2 / n, 0.0)
        var += term
    return var


# -- Crank-Nicolson -----------------------------------------------------------

class NotConverged(RuntimeError):
    pass


@njit(cache=True)
def _cn_steps(psi, r, cprime, inv, steps):
    n = psi.size
    d = np.empty_like(psi)
    for _ in range(steps):
        # right-hand side (1 - i dt H / 2) psi with zero Dirichlet ends
        d[0] = (1.0 - 2.0 * r) * psi[0] + r * psi[1]
        for i in range(1, n - 1):
            d[i] = (1.0 - 2.0 * r) * psi[i] + r * (psi[i - 1] + psi[i + 1])
        d[n - 1] = (1.0 - 2.0 * r) * psi[n - 1] + r * psi[n - 2]
        # Thomas sweep against the pre-eliminated left-hand side
        d[0] = d[0] * inv[0]
        for i in range(1, n):
            d[i] = (d[i] + r * d[i - 1]) * inv[i]
        psi[n - 1] = d[n - 1]
        for i in range(n - 2, -1, -1):
            psi[i] = d[i] - cprime[i] * psi[i + 1]
    return psi


def crank_nicolson_evolve(psi0, dt: float, dx: float, steps: int) -> np.ndarray:
    """Propagate ``psi0`` under H = -1/2 d^2/dx^2 for ``steps`` steps.

    The grid holds interior points only; the amplitude is pinned to zero one
    step beyond either end (a hard wall sits just past the last point).
    """
    psi = np.array(psi0, dtype=np.complex128)
    n = psi.size
    if n < 2 or steps == 0:
        return psi
    r = 1j * dt / (4.0 * dx * dx)
    # left-hand side: diagonal 1 + 2r, off-diagonals -r; diagonally dominant
    diag = 1.0 + 2.0 * r
    cprime = np.empty(n, dtype=np.complex128)
    inv = np.empty(n, dtype=np.complex128)
    inv[0] = 1.0 / diag
    cprime[0] = -r * inv[0]
    for i in range(1, n):
        inv[i] = 1.0 / (diag + r * cprime[i - 1])
        cprime[i] = -r * inv[i]
    return _cn_steps(psi, r, cprime, inv, int(steps))


@dataclass
class WallSolution:
    x: np.ndarray
    times: list[float]
    density: dict[float, np.ndarray]
    norm_drift: float
    refinement_change: float = float("nan")


def wall_numeric(times, x0=-20.0, v0=5.0, sigma_x0=SIGMA_X0, x_left=-80.0,
                 dx=0.005, dt=1e-3, wall_x=0.0) -> WallSolution:
    """Crank-Nicolson wall solution on (x_left, wall_x) sampled at ``times``."""
    n = int(round((wall_x - x_left) / dx)) - 1
    x = x_left + dx * np.arange(1, n + 1)
    psi = psi_single_exact(x, 0.0, x0, v0, sigma_x0)
    norm0 = np.sum(np.abs(psi) ** 2) * dx
    out, t_now, drift = {}, 0.0, 0.0
    for t in sorted(times):
        steps = int(round((t - t_now) / dt))
        psi = crank_nicolson_evolve(psi, dt, dx, steps)
        t_now += steps * dt
        out[t] = np.abs(psi) ** 2 / norm0
        drift = max(drift, abs(np.sum(np.abs(psi) ** 2) * dx / norm0 - 1.0))
    return WallSolution(x, sorted(times), out, drift)


def wall_numeric_checked(times, tol=1e-3, **kw) -> WallSolution:
    """:func:`wall_numeric` plus a halving test: the coarse solution is
    compared with one on a grid twice as fine in dx and dt, and flagged if
    they differ by more than ``tol`` anywhere."""
    dx = kw.pop("dx", 0.005)
    dt = kw.pop("dt", 1e-3)
    coarse = wall_numeric(times, dx=dx, dt=dt, **kw)
    fine = wall_numeric(times, dx=dx / 2, dt=dt / 2, **kw)
    change = 0.0
    for t in coarse.times:
        # fine grid contains every coarse node at odd indices
        change = max(change, float(np.max(np.abs(fine.density[t][1::2] - coarse.density[t]))))
    fine.refinement_change = change
    if change > tol:
        raise NotConverged(f"halving dx, dt changed the density by {change:.3g} > {tol:g}")
    return fine


# -- comparison ---------------------------------------------------------------

def fringe_visibility(x, y, lo=None, hi=None, period=None) -> float:
    """(max - min)/(max + min) of ``y`` on lo <= x <= hi.

    With ``period`` the window is cut into consecutive slices one period
    long and the median slice visibility is returned, so a slowly varying
    envelope does not count as fringe contrast.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = x.min() if lo is None else lo
    hi = x.max() if hi is None else hi
    sel = (x >= lo) & (x <= hi)

    def vis(v):
        top, bottom = v.max(), v.min()
        return 0.0 if top + bottom == 0 else (top - bottom) / (top + bottom)

    if period is None:
        return vis(y[sel])
    edges = np.arange(lo, hi + 1e-12, period)
    slices = [y[(x >= a) & (x < a + period)] for a in edges[:-1]]
    slices = [s for s in slices if s.size >= 2]
    if not slices:
        return vis(y[sel])
    return float(np.median([vis(s) for s in slices]))


def fringe_contrast(x, y, lo, hi, period) -> float:
    """Contrast of the fringe at ``period`` taken from its Fourier component,
    2|sum y exp(2 pi i x/period)| / sum y over lo <= x <= hi.

    Unlike max/min visibility it does not saturate when sparse data leave
    empty bins, so it tracks how far a pattern has built up.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (x >= lo) & (x <= hi)
    total = y[sel].sum()
    if total == 0:
        return 0.0
    return float(2.0 * abs(np.sum(y[sel] * np.exp(2j * np.pi * x[sel] / period))) / total)


@dataclass
class ComparisonReport:
    residuals: np.ndarray
    core: np.ndarray
    linf: float
    l2: float
    relative_l2: float
    chi2: float
    dof: int
    z: np.ndarray
    frac_z_above_3: float
    visibility: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "linf": self.linf,
            "l2": self.l2,
            "relative_l2": self.relative_l2,
            "chi2": self.chi2,
            "dof": self.dof,
            "core_bins": int(self.core.sum()),
            "frac_z_above_3": self.frac_z_above_3,
            **{f"visibility_{k}": v for k, v in self.visibility.items()},
        }


def compare(x, simulated, reference, total: int | None = None, delta_x: float | None = None,
            expected_variance=None, core_fraction=0.01, visibility_window=None,
            visibility_period=None) -> ComparisonReport:
    """Residual norms and Poisson z-scores of a simulated density against a
    reference density on the same bins.

    The core is where the reference exceeds ``core_fraction`` of its peak.
    z-scores need ``total`` and ``delta_x``; the per-bin variance (in counts)
    defaults to the expected raw count total*delta_x*reference, and can be
    overridden with ``expected_variance`` for multi-channel bins.
    """
    x = np.asarray(x, dtype=float)
    sim = np.asarray(simulated, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if sim.shape != ref.shape or sim.shape != x.shape:
        raise ValueError("simulated and reference must share the bin grid")
    resid = sim - ref
    peak = ref.max() if ref.size else 0.0
    core = ref > core_fraction * peak if peak > 0 else np.zeros(ref.shape, bool)
    step = delta_x if delta_x is not None else (x[1] - x[0] if x.size > 1 else 1.0)

    r_core = resid[core]
    linf = float(np.max(np.abs(resid))) if resid.size else 0.0
    l2 = float(np.sqrt(np.sum(r_core ** 2) * step))
    ref_l2 = float(np.sqrt(np.sum(ref[core] ** 2) * step))
    rel = l2 / ref_l2 if ref_l2 > 0 else 0.0

    z = np.zeros_like(sim)
    chi2, frac = float("nan"), float("nan")
    if total is not None and delta_x is not None and core.any():
        scale = total * delta_x
        var = scale * ref if expected_variance is None else np.asarray(expected_variance)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(var > 0, resid * scale / np.sqrt(var), 0.0)
        chi2 = float(np.sum(z[core] ** 2))
        frac = float(np.mean(np.abs(z[core]) > 3.0))

    vis = {}
    if visibility_window is not None:
        lo, hi = visibility_window
        vis["simulated"] = fringe_visibility(x, sim, lo, hi, visibility_period)
        vis["reference"] = fringe_visibility(x, ref, lo, hi, visibility_period)
    return ComparisonReport(resid, core, linf, l2, rel, chi2, int(core.sum()), z, frac, vis)
