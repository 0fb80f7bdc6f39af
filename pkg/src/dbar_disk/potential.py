"""Potentials supported on the closed unit disk."""

from __future__ import annotations

import enum
import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    MalformedHeaderError,
    NonFiniteError,
    ResolutionError,
    ShapeMismatchError,
)
from .spectral import FourierRange, Grid, PhysicalField, forward_transform, make_grid


class PotentialKind(enum.Enum):
    CHARACTERISTIC = "characteristic"
    RADIAL_PROFILE = "radial"
    SAMPLED = "sampled"


class Phase(enum.Enum):
    """``FORWARD`` multiplies by ``exp(conj(k z) - k z)``, ``BACKWARD`` by its inverse."""

    FORWARD = 1
    BACKWARD = -1


@dataclass(frozen=True, eq=False)
class Potential:
    """A potential ``q(r, phi)`` on the disk, identically zero outside.

    ``profile`` holds Chebyshev coefficients in ``l = 2r - 1`` for
    ``RADIAL_PROFILE``; ``samples`` holds the grid values for ``SAMPLED``.
    """

    kind: PotentialKind = PotentialKind.CHARACTERISTIC
    amplitude: complex = 1.0
    profile: np.ndarray | None = None
    samples: PhysicalField | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind is PotentialKind.RADIAL_PROFILE:
            if self.profile is None or len(self.profile) == 0:
                raise ValueError("RADIAL_PROFILE needs Chebyshev coefficients")
            if not np.all(np.isfinite(self.profile)):
                raise ValueError("profile coefficients must be finite")
        if self.kind is PotentialKind.SAMPLED and self.samples is None:
            raise ValueError("SAMPLED potential needs samples")

    @property
    def is_radial(self) -> bool:
        return self.kind is not PotentialKind.SAMPLED

    @property
    def sup_norm_bound(self) -> float:
        a = abs(self.amplitude)
        if self.kind is PotentialKind.CHARACTERISTIC:
            return a
        if self.kind is PotentialKind.RADIAL_PROFILE:
            return a * float(np.sum(np.abs(self.profile)))
        return a * float(np.abs(self.samples.values).max())


def characteristic(amplitude: complex = 1.0) -> Potential:
    return Potential(PotentialKind.CHARACTERISTIC, amplitude)


def radial_profile(cheb_coeffs, amplitude: complex = 1.0) -> Potential:
    return Potential(PotentialKind.RADIAL_PROFILE, amplitude, np.asarray(cheb_coeffs, dtype=complex))


def sample(p: Potential, grid: Grid) -> PhysicalField:
    """Evaluate ``q`` on every collocation point."""
    if p.kind is PotentialKind.CHARACTERISTIC:
        v = np.full(grid.shape, p.amplitude, dtype=complex)
    elif p.kind is PotentialKind.RADIAL_PROFILE:
        f = np.polynomial.chebyshev.chebval(grid.l_points, p.profile)
        v = p.amplitude * np.broadcast_to(f[:, None], grid.shape).astype(complex)
    else:
        if p.samples.grid != grid:
            raise ShapeMismatchError(
                f"sampled potential lives on {p.samples.grid.shape}, requested {grid.shape}"
            )
        v = p.amplitude * np.asarray(p.samples.values, dtype=complex)
    return PhysicalField(v, grid)


def fingerprint(q: PhysicalField) -> str:
    return hashlib.sha256(np.ascontiguousarray(q.values, dtype=complex).tobytes()).hexdigest()


# --- sampled-potential file ------------------------------------------------

_HEADER = re.compile(r"^dbar-potential v1 nr=(\d+) nphi=(\d+)\s*$")


def save_sampled(q: PhysicalField, path) -> Path:
    path = Path(path)
    g = q.grid
    lines = [f"dbar-potential v1 nr={g.n_r} nphi={g.n_phi}"]
    for j in range(g.n_r + 1):
        for i in range(g.n_phi):
            v = complex(q.values[j, i])
            lines.append(f"{j},{i},{v.real:.16e},{v.imag:.16e}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_sampled(path) -> Potential:
    """Read a potential written by :func:`save_sampled`."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise MalformedHeaderError(f"{path}: empty file")
    m = _HEADER.match(text[0])
    if m is None:
        raise MalformedHeaderError(f"{path}: bad header {text[0]!r}")
    try:
        grid = make_grid(int(m.group(1)), int(m.group(2)))
    except ValueError as exc:
        raise MalformedHeaderError(f"{path}: {exc}") from exc
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != grid.n_r * grid.n_phi + grid.n_phi:
        raise ShapeMismatchError(
            f"{path}: expected {(grid.n_r + 1) * grid.n_phi} samples, found {len(body)}"
        )
    v = np.empty(grid.shape, dtype=complex)
    seen = np.zeros(grid.shape, dtype=bool)
    for ln in body:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ShapeMismatchError(f"{path}: malformed row {ln!r}")
        j, i = int(parts[0]), int(parts[1])
        if not (0 <= j <= grid.n_r and 0 <= i < grid.n_phi) or seen[j, i]:
            raise ShapeMismatchError(f"{path}: index ({j},{i}) out of range or repeated")
        re_, im_ = float(parts[2]), float(parts[3])
        if not (math.isfinite(re_) and math.isfinite(im_)):
            raise NonFiniteError(f"{path}: non-finite sample at ({j},{i})")
        v[j, i] = complex(re_, im_)
        seen[j, i] = True
    return Potential(PotentialKind.SAMPLED, 1.0, samples=PhysicalField(v, grid))


# --- spectral-parameter modulation -----------------------------------------


def phase_factor(k: complex, grid: Grid, sign: Phase = Phase.FORWARD) -> np.ndarray:
    """``exp(+-(conj(k z) - k z))``; the exponent ``-2i Im(k z)`` is purely imaginary."""
    return np.exp(-2j * sign.value * np.imag(k * grid.z))


def phase_modulated(q: PhysicalField, k: complex, sign: Phase = Phase.FORWARD) -> PhysicalField:
    return PhysicalField(q.values * phase_factor(k, q.grid, sign), q.grid)


def modulation_tails(q: PhysicalField, k: complex) -> tuple[float, float]:
    """Relative size of the trailing Chebyshev row and Fourier column of ``q e^{conj(kz)-kz}``."""
    s = forward_transform(phase_modulated(q, k), FourierRange.PSI1)
    c = np.abs(s.coeffs)
    scale = c.max()
    if scale == 0:
        return 0.0, 0.0
    return float(c[-1].max() / scale), float(c[:, q.grid.n_phi // 2].max() / scale)


def resolution_check(p: Potential, k: complex, n_r: int, n_phi: int, threshold: float = 1e-13) -> bool:
    """True when the modulated potential's spectral tails fall below ``threshold``."""
    grid = make_grid(n_r, n_phi)
    return max(modulation_tails(sample(p, grid), k)) <= threshold


def _round_up(n: float, step: int) -> int:
    return int(step * -(-int(round(n)) // step))


def autotune(
    p: Potential,
    k: complex,
    n_r: int = 16,
    n_phi: int = 32,
    threshold: float = 1e-13,
    max_points: int = 4_000_000,
    growth: float = 2.0,
) -> tuple[int, int]:
    """Grow ``(Nr, Nphi)`` until :func:`resolution_check` passes.

    Each failing direction is scaled by ``growth`` (``Nr`` rounded up to a
    multiple of 8, ``Nphi`` to a multiple of 16).  Raises
    :class:`ResolutionError` once ``(Nr+1) * Nphi`` would exceed ``max_points``.
    """
    if growth <= 1:
        raise ValueError("growth must exceed 1")
    while (n_r + 1) * n_phi <= max_points:
        cheb_tail, fourier_tail = modulation_tails(sample(p, make_grid(n_r, n_phi)), k)
        if max(cheb_tail, fourier_tail) <= threshold:
            return n_r, n_phi
        if cheb_tail > threshold:
            n_r = _round_up(n_r * growth, 8)
        if fourier_tail > threshold:
            n_phi = _round_up(n_phi * growth, 16)
    raise ResolutionError(
        f"no resolution within {max_points} points resolves q*exp(conj(kz)-kz) for k={k}"
    )
