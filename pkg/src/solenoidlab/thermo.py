"""Transfer-operator thermodynamics for the circle factor.

Collocation on a uniform periodic grid with piecewise-linear interpolation:
the weighted transfer operator L_psi h(x) = sum over the two inverse
branches of e^{psi(y)} h(y) becomes a sparse matrix with four entries per
row, power iteration on it and its transpose yields the pressure e^P,
the eigenfunction h and the invariant density rho, and the normalized
potential phi = psi - P + ln h - ln h o f closes the loop (L_phi 1 = 1,
L_phi^* nu = nu).  Everything downstream - Gibbs ratios over cylinders,
ball-mass regularity, large-deviation profiles, regular words, sampling -
reads off the resulting EquilibriumData.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .circle_map import PerturbationSpec, f_eval
from .symbolic import anchor_birkhoff_sums, inverse_branch, level_anchors, level_endpoints

__all__ = [
    "GridFunction",
    "EquilibriumData",
    "DeviationProfile",
    "SpectralConvergenceError",
    "nodes",
    "ball_mass",
    "mme_potential",
    "srb_potential",
    "transfer_apply",
    "transfer_adjoint_apply",
    "transfer_matrix",
    "solve_equilibrium",
    "measure_cdf",
    "cylinder_masses",
    "gibbs_ratio_stats",
    "upper_regularity_exponent",
    "large_deviation_profile",
    "regular_words",
    "sample",
]


class SpectralConvergenceError(Exception):
    """Power iteration failed to settle, signalling a missing spectral gap."""


@dataclass(frozen=True)
class GridFunction:
    """Real function on m uniform circle nodes with wraparound linear interpolation."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        m = vals.shape[0]
        if vals.ndim != 1 or m < 1024 or m & (m - 1):
            raise ValueError("grid size must be a power of two >= 2^10")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def __call__(self, x):
        return _interp_periodic(self.values, np.asarray(x, dtype=float))

    @classmethod
    def constant(cls, c: float, m: int) -> "GridFunction":
        return cls(np.full(m, float(c)))

    @classmethod
    def from_callable(cls, fn: Callable, m: int) -> "GridFunction":
        return cls(np.asarray(fn(np.arange(m) / m), dtype=float))


def _interp_periodic(values: np.ndarray, x):
    m = values.shape[0]
    t = (np.asarray(x, dtype=float) % 1.0) * m
    j = np.floor(t).astype(int) % m
    frac = t - np.floor(t)
    out = values[j] * (1.0 - frac) + values[(j + 1) % m] * frac
    return float(out) if np.ndim(x) == 0 else out


def nodes(m: int) -> np.ndarray:
    return np.arange(m) / m


def mme_potential(m: int) -> GridFunction:
    """Zero potential: equilibrium state is the measure of maximal entropy."""
    return GridFunction.constant(0.0, m)


def srb_potential(spec: PerturbationSpec, m: int) -> GridFunction:
    """Geometric potential -ln f', whose equilibrium state is the SRB measure."""
    _, fp = f_eval(spec, nodes(m))
    return GridFunction(-np.log(fp))


# ---------------------------------------------------------------------------
# transfer operator
# ---------------------------------------------------------------------------

def _preimage_data(spec: PerturbationSpec, m: int):
    """Preimage points of every node under both branches, with f' there."""
    x = nodes(m)
    ys = []
    fps = []
    for a in (0, 1):
        y, d = inverse_branch(spec, a, x)
        ys.append(y % 1.0)
        fps.append(1.0 / d)
    return x, ys, fps


def transfer_matrix(
    spec: PerturbationSpec, potential: GridFunction, twist: float = 0.0
) -> sp.csr_matrix:
    """Sparse collocation matrix of L_{potential + i twist ln f'}.

    Row i holds, for each inverse branch y of node i, the weight
    e^{potential(y)} (times the oscillatory factor when twist != 0) spread
    over the two grid nodes bracketing y.
    """
    m = potential.m
    _, ys, fps = _preimage_data(spec, m)
    dtype = complex if twist else float
    rows = np.tile(np.arange(m), 4)
    cols = np.empty(4 * m, dtype=int)
    data = np.empty(4 * m, dtype=dtype)
    for k, (y, fp) in enumerate(zip(ys, fps)):
        w = np.exp(potential(y))
        if twist:
            w = w * np.exp(1j * twist * np.log(fp))
        t = y * m
        j = np.floor(t).astype(int) % m
        frac = t - np.floor(t)
        sl = slice(2 * k * m, (2 * k + 1) * m)
        sr = slice((2 * k + 1) * m, (2 * k + 2) * m)
        cols[sl] = j
        data[sl] = w * (1.0 - frac)
        cols[sr] = (j + 1) % m
        data[sr] = w * frac
    return sp.csr_matrix((data, (rows, cols)), shape=(m, m))


def transfer_apply(
    spec: PerturbationSpec, potential: GridFunction, h: GridFunction
) -> GridFunction:
    """L_potential h on the shared grid: sum over the two preimages of each node."""
    if potential.m != h.m:
        raise ValueError("potential and h must share the grid size")
    _, ys, _ = _preimage_data(spec, potential.m)
    out = np.zeros(potential.m)
    for y in ys:
        out += np.exp(potential(y)) * h(y)
    return GridFunction(out)


def transfer_adjoint_apply(
    spec: PerturbationSpec, potential: GridFunction, rho: GridFunction
) -> GridFunction:
    """Discrete adjoint L*_potential acting on a density's grid values."""
    if potential.m != rho.m:
        raise ValueError("potential and rho must share the grid size")
    mat = transfer_matrix(spec, potential)
    return GridFunction(mat.T @ rho.values)


# ---------------------------------------------------------------------------
# equilibrium solve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumData:
    """Pressure, eigenfunction, invariant density, and normalized potential.

    density integrates to 1 and represents nu on the grid; phi satisfies
    L_phi 1 = 1 and L*_phi nu = nu up to discretization error; lyapunov is
    the nu-average of ln f' and dimension = -(integral of phi) / lyapunov.
    """

    spec: PerturbationSpec
    potential_psi: GridFunction
    pressure: float
    eigenfunction: GridFunction
    density: GridFunction
    phi: GridFunction
    lyapunov: float
    dimension: float

    @property
    def m(self) -> int:
        return self.density.m

    def integrate(self, values: np.ndarray) -> float:
        """Integral of a grid function against nu (periodic trapezoid)."""
        return float(np.mean(np.asarray(values) * self.density.values))


def solve_equilibrium(
    spec: PerturbationSpec,
    psi: GridFunction,
    m: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> EquilibriumData:
    """Leading eigendata of L_psi by simultaneous power iteration.

    Forward iteration gives the eigenfunction h and e^P, transpose iteration
    gives the invariant density; both are renormalized each sweep and the
    loop stops when successive Rayleigh estimates agree to tol.
    """
    if m is None:
        m = psi.m
    if m != psi.m:
        raise ValueError(f"psi lives on m={psi.m} but m={m} was requested")

    mat = transfer_matrix(spec, psi)
    mat_t = mat.T.tocsr()
    h = np.ones(m)
    rho = np.ones(m)
    lam_prev = np.inf
    for _ in range(max_iter):
        h_new = mat @ h
        rho_new = mat_t @ rho
        lam = float(h_new @ rho / (h @ rho))
        h = h_new / h_new.max()
        rho = rho_new / rho_new.mean()
        if abs(lam - lam_prev) < tol:
            break
        lam_prev = lam
    else:
        raise SpectralConvergenceError(
            f"power iteration did not converge in {max_iter} sweeps (tol {tol:.1e})"
        )

    if h.min() <= 0.0:
        raise SpectralConvergenceError("eigenfunction lost positivity")
    pressure = float(np.log(lam))

    x = nodes(m)
    fx, fp = f_eval(spec, x)
    log_h = np.log(h)
    phi_vals = psi.values - pressure + log_h - _interp_periodic(log_h, fx)

    # The adjoint iterate above is the conformal eigenmeasure of L_psi; the
    # invariant density is the fixed measure of the normalized operator, so
    # iterate the transpose of the phi-matrix itself (leading eigenvalue 1 up
    # to interpolation error) starting from the product guess h * rho.
    phi = GridFunction(phi_vals)
    mat_phi_t = transfer_matrix(spec, phi).T.tocsr()
    dens = h * rho
    dens /= dens.mean()
    for _ in range(max_iter):
        dens_new = mat_phi_t @ dens
        dens_new /= dens_new.mean()
        delta = np.max(np.abs(dens_new - dens))
        dens = dens_new
        if delta < tol:
            break
    else:
        raise SpectralConvergenceError(
            f"invariant-density iteration did not converge in {max_iter} sweeps"
        )

    density = GridFunction(dens)
    lyap = float(np.mean(np.log(fp) * dens))
    dim = -float(np.mean(phi_vals * dens)) / lyap

    return EquilibriumData(
        spec=spec,
        potential_psi=psi,
        pressure=pressure,
        eigenfunction=GridFunction(h),
        density=density,
        phi=phi,
        lyapunov=lyap,
        dimension=dim,
    )


# ---------------------------------------------------------------------------
# measure geometry
# ---------------------------------------------------------------------------

def _node_cdf(eq: EquilibriumData) -> tuple[np.ndarray, float]:
    """Raw node CDF of the piecewise-linear density and its total mass."""
    rho = eq.density.values
    m = eq.m
    seg = (rho + np.roll(rho, -1)) / (2.0 * m)
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    return cdf, float(cdf[-1])


def measure_cdf(eq: EquilibriumData, x) -> np.ndarray:
    """nu([0, x]) for x in [0, 1], exact for the piecewise-linear density."""
    cdf, total = _node_cdf(eq)
    m = eq.m
    rho = eq.density.values
    xv = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    t = xv * m
    j = np.minimum(np.floor(t).astype(int), m - 1)
    frac = t - j
    rho_next = rho[(j + 1) % m]
    local = (rho[j] * frac + 0.5 * (rho_next - rho[j]) * frac**2) / m
    out = (cdf[j] + local) / total
    return float(out) if np.ndim(x) == 0 else out


def ball_mass(eq: EquilibriumData, centers, r: float):
    """nu of the circular ball B(x, r), vectorized over centers."""
    c = np.asarray(centers, dtype=float)
    lo = (c - r) % 1.0
    hi = (c + r) % 1.0
    mass = measure_cdf(eq, hi) - measure_cdf(eq, lo)
    return np.where(mass < 0.0, mass + 1.0, mass)


def cylinder_masses(eq: EquilibriumData, n: int) -> np.ndarray:
    """nu of every level-n cylinder, lexicographic order (sums to 1 exactly)."""
    pts = level_endpoints(eq.spec, n)
    return np.diff(measure_cdf(eq, pts))


def _phi_birkhoff(eq: EquilibriumData, n: int) -> np.ndarray:
    phi = eq.phi
    return anchor_birkhoff_sums(eq.spec, n, lambda pts: phi(np.asarray(pts) % 1.0))


def _tau_birkhoff(eq: EquilibriumData, n: int) -> np.ndarray:
    spec = eq.spec
    return anchor_birkhoff_sums(
        eq.spec, n, lambda pts: np.log(f_eval(spec, np.asarray(pts) % 1.0)[1])
    )


def gibbs_ratio_stats(eq: EquilibriumData, n: int) -> tuple[float, float]:
    """Extremes over level-n cylinders of nu(U_w) / e^{S_n phi(anchor)}.

    Bounded distortion predicts both extremes stay within a constant of 1
    independent of n; for the linear maximal-entropy case they equal 1.
    """
    if not 1 <= n <= 16:
        raise ValueError("n must be in 1..16")
    masses = cylinder_masses(eq, n)
    weights = np.exp(_phi_birkhoff(eq, n))
    ratios = masses / weights
    return float(ratios.min()), float(ratios.max())


def upper_regularity_exponent(eq: EquilibriumData, radii: Sequence[float]) -> float:
    """Least-squares slope of ln sup_x nu(B(x, r)) against ln r.

    A positive slope certifies upper regularity at the scanned scales; the
    slope is 1 when the density is bounded above and below.
    """
    radii = np.asarray(list(radii), dtype=float)
    if radii.ndim != 1 or radii.size < 2:
        raise ValueError("need at least two radii")
    if np.any((radii <= 0.0) | (radii >= 0.5)) or np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be decreasing in (0, 1/2)")
    centers = nodes(eq.m)
    sup_mass = np.array([ball_mass(eq, centers, r).max() for r in radii])
    slope, _ = np.polyfit(np.log(radii), np.log(sup_mass), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# large deviations and regular words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationProfile:
    """nu-mass escaping the Birkhoff-average window, per block length."""

    epsilon: float
    entries: tuple[tuple[int, float], ...]
    fitted_rate: float


def _deviation_mask(eq: EquilibriumData, n: int, epsilon: float) -> np.ndarray:
    """True where the level-n anchor violates either regularity window."""
    s_tau = _tau_birkhoff(eq, n)
    s_phi = _phi_birkhoff(eq, n)
    bad_rate = np.abs(s_tau / n - eq.lyapunov) >= epsilon
    bad_dim = np.abs(s_phi / s_tau + eq.dimension) >= epsilon
    return bad_rate | bad_dim


def _birkhoff_at_points(eq: EquilibriumData, pts: np.ndarray, steps: int):
    """n-step Birkhoff sums of ln f' and of phi starting at the given points."""
    spec = eq.spec
    s_tau = np.zeros_like(pts)
    s_phi = np.zeros_like(pts)
    x = pts % 1.0
    for _ in range(steps):
        fx, fp = f_eval(spec, x)
        s_tau += np.log(fp)
        s_phi += eq.phi(x)
        x = fx
    return s_tau, s_phi


def _deviation_fraction_mc(
    eq: EquilibriumData, n: int, epsilon: float, samples: int, seed: int
) -> float:
    """Monte-Carlo escaping fraction for block lengths beyond the enumeration cap."""
    pts = sample(eq, samples, seed)
    s_tau, s_phi = _birkhoff_at_points(eq, pts, n)
    bad = (np.abs(s_tau / n - eq.lyapunov) >= epsilon) | (
        np.abs(s_phi / s_tau + eq.dimension) >= epsilon
    )
    return float(bad.mean())


def large_deviation_profile(
    eq: EquilibriumData,
    epsilon: float,
    n_list: Sequence[int],
    mc_samples: int = 200_000,
    seed: int = 0,
) -> DeviationProfile:
    """Escaping nu-mass fraction(n) over the requested block lengths.

    For n <= 16 every level-n cylinder is tested at its anchor and
    contributes its full nu-mass when the anchor's averages fall outside
    the epsilon windows; larger n fall back to seeded Monte Carlo over
    nu-samples.  The fitted rate regresses ln fraction on n over the
    positive entries (0 when fewer than two entries are positive).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    entries = []
    for n in n_list:
        if n <= 16:
            masses = cylinder_masses(eq, n)
            frac = float(masses[_deviation_mask(eq, n, epsilon)].sum())
        else:
            frac = _deviation_fraction_mc(eq, n, epsilon, mc_samples, seed)
        entries.append((n, frac))
    pos = [(n, f) for n, f in entries if f > 0.0]
    if len(pos) >= 2:
        ns = np.array([n for n, _ in pos], dtype=float)
        fr = np.log([f for _, f in pos])
        rate = float(np.polyfit(ns, fr, 1)[0])
    else:
        rate = 0.0
    return DeviationProfile(epsilon, tuple(entries), rate)


def regular_words(
    eq: EquilibriumData,
    n: int,
    epsilon: float,
    window: tuple[float, float] | None = None,
) -> tuple[np.ndarray, float]:
    """Indices of the 2^(n+1) words of length n + 1 passing both epsilon windows.

    A word is regular when the n-step Birkhoff averages at its cylinder
    anchor stay within epsilon of the global rate and dimension; window,
    when given, keeps only words whose cylinders meet the interval
    [window[0], window[1]].  Returns (lexicographic indices,
    e^{dim * lyap * n}), the second being the cardinality benchmark.
    """
    if not 1 <= n <= 15:
        raise ValueError("n must be in 1..15")
    anchors = level_anchors(eq.spec, n + 1)
    s_tau, s_phi = _birkhoff_at_points(eq, anchors, n)
    bad = (np.abs(s_tau / n - eq.lyapunov) >= epsilon) | (
        np.abs(s_phi / s_tau + eq.dimension) >= epsilon
    )
    good = ~bad
    if window is not None:
        lo, hi = window
        pts = level_endpoints(eq.spec, n + 1)
        overlap = (pts[:-1] < hi) & (pts[1:] > lo)
        good &= overlap
    benchmark = float(np.exp(eq.dimension * eq.lyapunov * n))
    return np.nonzero(good)[0], benchmark


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample(eq: EquilibriumData, count: int, seed: int) -> np.ndarray:
    """count i.i.d. draws from nu by inverting the piecewise-quadratic CDF."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    cdf, total = _node_cdf(eq)
    u = rng.random(count) * total
    rho = eq.density.values
    m = eq.m
    j = np.searchsorted(cdf, u, side="right") - 1
    j = np.clip(j, 0, m - 1)
    local = (u - cdf[j]) * m  # mass to absorb inside cell j, times m
    a = rho[j]
    b = rho[(j + 1) % m] - rho[j]
    # solve a t + b t^2 / 2 = local for t in [0, 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = np.sqrt(np.maximum(a * a + 2.0 * b * local, 0.0))
        t = np.where(np.abs(b) > 1e-12 * np.maximum(a, 1.0), (disc - a) / b, local / a)
    t = np.clip(t, 0.0, 1.0)
    return (j + t) / m
