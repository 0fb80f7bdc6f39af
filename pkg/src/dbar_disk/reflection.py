"""Sweeps of the reflection coefficient over the spectral parameter.

For the characteristic function of the disk the reflection coefficient
decays like ``|k|^{-3/2}`` with the closed-form leading term

    R_asym(k) = cos(2k - 3 pi / 4) / sqrt(pi k^3),    k > 0.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cgo import solve_cgo
from .errors import DbarError
from .fundamental import FundamentalBasis, solve_basis
from .parallel import parallel_map
from .picard import solve_cgo_iterative
from .potential import Phase, Potential, autotune, phase_factor, sample
from .spectral import FourierRange, PhysicalField, forward_transform, make_grid

log = logging.getLogger(__name__)


class Method(enum.Enum):
    FUNDAMENTAL = "fundamental"
    PICARD = "picard"


def r_asym(k: float) -> float:
    """Leading large-``k`` term of ``R`` for the characteristic function of the disk."""
    k = float(k)
    if not k > 0:
        raise ValueError(f"r_asym needs k > 0, got {k}")
    return math.cos(2.0 * k - 0.75 * math.pi) / math.sqrt(math.pi * k**3)


def _disk_integral(values: np.ndarray, grid) -> complex:
    """``int_disk f dA`` for grid values ``f`` via Chebyshev/Fourier quadrature."""
    g = PhysicalField(values * grid.r_points[:, None], grid)
    c0 = forward_transform(g, FourierRange.PSI1).coeffs[:, 0]
    m = np.arange(grid.n_r + 1)
    w = np.zeros(grid.n_r + 1)
    even = m % 2 == 0
    w[even] = 2.0 / (1.0 - m[even] ** 2)
    return complex(np.pi * (c0 @ w))


def rasym_integral(q: PhysicalField, k: complex, phi1: np.ndarray | None = None) -> complex:
    """Quadrature of ``R = conj((1/pi) int conj(q) e^{kz - conj(kz)} Phi1 dA)``.

    With ``Phi1 = 1`` (the default) this is the Born approximation; for
    ``q = 1`` and real ``k`` it equals ``J1(2k) / k``.  Validation helper only.
    """
    grid = q.grid
    if phi1 is None:
        phi1 = np.ones(grid.shape)
    f = np.conj(q.values) * phase_factor(complex(k), grid, Phase.BACKWARD) * phi1
    return complex(np.conj(_disk_integral(f, grid) / np.pi))


@dataclass(frozen=True)
class ResolutionPolicy:
    """Fixed ``(Nr, Nphi)``, or (``auto``) grown per ``k`` until the modulated potential is resolved."""

    n_r: int = 32
    n_phi: int = 64
    auto: bool = False
    threshold: float = 1e-13
    growth: float = 1.25
    max_points: int = 4_000_000

    def __post_init__(self):
        make_grid(self.n_r, self.n_phi)

    def resolve(self, potential: Potential, k: complex) -> tuple[int, int]:
        if not self.auto:
            return self.n_r, self.n_phi
        return autotune(
            potential, k, self.n_r, self.n_phi, self.threshold, self.max_points, self.growth
        )


@dataclass(frozen=True)
class ReflectionSample:
    k: complex
    R: complex | None
    method: Method
    resolution: tuple[int, int] | None = None
    steps: int | None = None
    residual: float | None = None
    error: dict | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ReflectionSweep:
    samples: list
    asym: list | None = None

    def __post_init__(self):
        mods = [abs(s.k) for s in self.samples]
        if any(b <= a for a, b in zip(mods, mods[1:])):
            raise ValueError("sweep samples must be strictly ordered by |k|")

    @property
    def k(self) -> np.ndarray:
        return np.array([s.k for s in self.samples])

    @property
    def R(self) -> np.ndarray:
        return np.array([np.nan if s.R is None else s.R for s in self.samples], dtype=complex)

    @property
    def failures(self) -> list:
        return [s for s in self.samples if not s.ok]


def _error_record(exc: Exception) -> dict:
    return {"type": type(exc).__name__, "message": str(exc)}


@dataclass(frozen=True)
class _PicardTask:
    potential: Potential
    policy: ResolutionPolicy
    tol: float
    max_steps: int

    def __call__(self, k: complex) -> ReflectionSample:
        try:
            n_r, n_phi = self.policy.resolve(self.potential, k)
            grid = make_grid(n_r, n_phi)
            sol, trace = solve_cgo_iterative(self.potential, k, grid, self.tol, self.max_steps)
        except DbarError as exc:
            return ReflectionSample(k, None, Method.PICARD, error=_error_record(exc))
        return ReflectionSample(
            k, sol.reflection, Method.PICARD, (n_r, n_phi), trace.steps, trace.deltas[-1]
        )


@dataclass(frozen=True)
class _FundamentalTask:
    basis: FundamentalBasis

    def __call__(self, k: complex) -> ReflectionSample:
        res = (self.basis.grid.n_r, self.basis.grid.n_phi)
        try:
            sol = solve_cgo(self.basis, k)
        except DbarError as exc:
            return ReflectionSample(k, None, Method.FUNDAMENTAL, res, error=_error_record(exc))
        residual = max(sol.diagnostics["conditions"].values())
        return ReflectionSample(k, sol.reflection, Method.FUNDAMENTAL, res, 0, residual)


def sweep(
    potential: Potential,
    k_grid,
    method: Method = Method.FUNDAMENTAL,
    policy: ResolutionPolicy | None = None,
    workers: int | None = 1,
    tol: float = 1e-10,
    max_steps: int = 100,
    with_asym: bool = False,
) -> ReflectionSweep:
    """Compute ``R(k)`` on ``k_grid`` (sorted here by ``|k|``).

    ``FUNDAMENTAL`` factorises the basis once (at the resolution the policy
    assigns to the largest ``|k|``) and only solves the small condition system
    per ``k``.  ``PICARD`` solves each ``k`` independently.  Failures are
    recorded per sample.
    """
    ks = sorted((complex(k) for k in k_grid), key=abs)
    if not ks:
        raise ValueError("empty k grid")
    policy = policy or ResolutionPolicy()
    method = Method(method)
    if method is Method.FUNDAMENTAL:
        try:
            n_r, n_phi = policy.resolve(potential, ks[-1])
            basis = solve_basis(sample(potential, make_grid(n_r, n_phi)))
        except DbarError as exc:
            err = _error_record(exc)
            samples = [ReflectionSample(k, None, method, error=err) for k in ks]
            return ReflectionSweep(samples, _asym(ks) if with_asym else None)
        task = _FundamentalTask(basis)
    else:
        task = _PicardTask(potential, policy, tol, max_steps)
    samples = []
    for k, out in zip(ks, parallel_map(task, ks, workers)):
        samples.append(out.value if out.ok else ReflectionSample(k, None, method, error=out.error))
    log.info("sweep of %d samples, %d failed", len(samples), sum(not s.ok for s in samples))
    return ReflectionSweep(samples, _asym(ks) if with_asym else None)


def _asym(ks) -> list:
    return [r_asym(k.real) if k.imag == 0 and k.real > 0 else None for k in ks]


@dataclass(frozen=True)
class AsymRow:
    k: float
    R: complex
    R_asym: float
    scaled_residual: float


def compare_asym(s: ReflectionSweep) -> list[AsymRow]:
    """Rows ``(k, R, R_asym, k^{5/2} (R - R_asym))`` for the successful real-``k`` samples."""
    rows = []
    for smp in s.samples:
        if not smp.ok or smp.k.imag != 0 or smp.k.real <= 0:
            continue
        k = smp.k.real
        ra = r_asym(k)
        rows.append(AsymRow(k, smp.R, ra, float(k**2.5 * abs(smp.R - ra))))
    return rows


@dataclass(frozen=True)
class EnvelopeFit:
    slope: float
    intercept: float
    peaks_k: np.ndarray = field(repr=False)
    peaks_abs: np.ndarray = field(repr=False)


def envelope_fit(k: np.ndarray, R: np.ndarray) -> EnvelopeFit:
    """Least-squares slope of ``log|R|`` against ``log k`` over the local maxima of ``|R|``.

    Each peak is refined by a parabola through ``log|R|`` at its three samples.
    """
    k = np.asarray(k, dtype=float)
    a = np.log(np.abs(np.asarray(R)))
    idx = [i for i in range(1, len(a) - 1) if a[i] >= a[i - 1] and a[i] > a[i + 1]]
    if len(idx) < 2:
        raise ValueError("need at least two interior peaks of |R|")
    pk, pa = [], []
    for i in idx:
        c = np.polyfit(k[i - 1 : i + 2], a[i - 1 : i + 2], 2)
        kp = -c[1] / (2 * c[0]) if c[0] < 0 else k[i]
        if not k[i - 1] <= kp <= k[i + 1]:
            kp = k[i]
        pk.append(kp)
        pa.append(np.polyval(c, kp))
    pk, pa = np.array(pk), np.array(pa)
    slope, intercept = np.polyfit(np.log(pk), pa, 1)
    return EnvelopeFit(float(slope), float(intercept), pk, np.exp(pa))
