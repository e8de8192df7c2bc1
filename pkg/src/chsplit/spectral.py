"""Fourier collocation on the periodic square [-pi, pi)^2.

Transform convention (no 1/(2 pi)^2 on the forward side)::

    f_hat(k) = int f(x) exp(-i k.x) dx        ~ spacing^2 * sum_j f(x_j) exp(-i k.x_j)
    f(x)     = (2 pi)^-2 sum_k f_hat(k) exp(i k.x)

so that ``||f||_2^2 = (2 pi)^-2 sum_k |f_hat(k)|^2``.  Coefficient arrays are
stored in numpy FFT order: index ``j`` along an axis carries wavenumber
``fftfreq(n, 1/n)[j]``, i.e. ``0, 1, ..., n/2-1, -n/2, ..., -1``.

A :class:`RealField` produced from a :class:`SpectralField` remembers the exact
coefficients it came from, so ``forward(inverse(F))`` returns ``F`` bit for bit.
This matters for quantities weighted by ``exp(tau nu |k|^4)``: FFT round-off
at high wavenumbers would otherwise swamp them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi
AREA = TWO_PI**2

ZeroModeRule = Literal["identity", "annihilate"]


class NonFiniteFieldError(ValueError):
    pass


class HermitianSymmetryError(ValueError):
    pass


class MeanZeroError(ValueError):
    pass


class _Lattice(NamedTuple):
    k1: np.ndarray
    k2: np.ndarray
    ksq: np.ndarray
    phase: np.ndarray
    dealias: np.ndarray
    nyquist: np.ndarray
    mirror: tuple[np.ndarray, np.ndarray]


@lru_cache(maxsize=32)
def _lattice(n: int) -> _Lattice:
    k = np.fft.fftfreq(n, 1.0 / n)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    ksq = k1**2 + k2**2
    # nodes start at -pi, so the node DFT picks up exp(i k pi) = (-1)^k
    phase = np.where((k1 + k2) % 2 == 0, 1.0, -1.0)
    dealias = (np.abs(k1) <= n / 3.0) & (np.abs(k2) <= n / 3.0)
    nyquist = (k1 == -n // 2) | (k2 == -n // 2)
    idx = (-np.arange(n)) % n
    mirror = np.ix_(idx, idx)
    for a in (k1, k2, ksq, phase, dealias, nyquist):
        a.setflags(write=False)
    return _Lattice(k1, k2, ksq, phase, dealias, nyquist, mirror)


@dataclass(frozen=True)
class Grid2D:
    """Uniform n x n grid on the torus with its integer wavenumber lattice."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def weight(self) -> float:
        """Quadrature weight per node."""
        return self.spacing**2

    @property
    def nodes(self) -> np.ndarray:
        return -np.pi + self.spacing * np.arange(self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.nodes
        return np.meshgrid(x, x, indexing="ij")

    @property
    def k1(self) -> np.ndarray:
        return _lattice(self.n).k1

    @property
    def k2(self) -> np.ndarray:
        return _lattice(self.n).k2

    @property
    def ksq(self) -> np.ndarray:
        """|k|^2 on the lattice."""
        return _lattice(self.n).ksq

    @property
    def dealias_mask(self) -> np.ndarray:
        """True where |k_j| <= n/3 in both directions (two-thirds rule)."""
        return _lattice(self.n).dealias

    @property
    def nyquist_mask(self) -> np.ndarray:
        """True on the k_j = -n/2 row and column, which have no conjugate partner."""
        return _lattice(self.n).nyquist

    def index(self, k1: int, k2: int) -> tuple[int, int]:
        """Array index of wavenumber (k1, k2)."""
        half = self.n // 2
        for kj in (k1, k2):
            if not -half <= kj < half:
                raise IndexError(f"wavenumber {kj} outside [-{half}, {half})")
        return k1 % self.n, k2 % self.n


def _check_finite(values: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        j = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteFieldError(f"non-finite value {values[j]!r} at index {j}")


@dataclass(frozen=True, eq=False)
class RealField:
    """Nodal values of a real field; ``values[j1, j2]`` sits at ``(x_j1, x_j2)``."""

    grid: Grid2D
    values: np.ndarray
    _coeffs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        n = self.grid.n
        if v.shape != (n, n):
            raise ValueError(f"expected values of shape {(n, n)}, got {v.shape}")
        _check_finite(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self._coeffs is not None:
            c = np.array(self._coeffs, dtype=complex)
            c.setflags(write=False)
            object.__setattr__(self, "_coeffs", c)

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> RealField:
        x1, x2 = grid.mesh()
        return cls(grid, np.broadcast_to(fn(x1, x2), (grid.n, grid.n)))

    @classmethod
    def zeros(cls, grid: Grid2D) -> RealField:
        return cls(grid, np.zeros((grid.n, grid.n)))

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients ``f_hat(k)`` in numpy FFT order."""

    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        n = self.grid.n
        if c.shape != (n, n):
            raise ValueError(f"expected coefficients of shape {(n, n)}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __getitem__(self, k: tuple[int, int]) -> complex:
        return complex(self.coeffs[self.grid.index(*k)])

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) / AREA))

    def is_mean_zero(self, rtol: float = 1e-12) -> bool:
        # the zero mode contributes |c0| / (2 pi) to the L2 norm
        return abs(self.coeffs[0, 0]) / TWO_PI <= rtol * self.l2() or self.coeffs[0, 0] == 0

    def hermitian_defect(self) -> float:
        """max |F(-k) - conj F(k)| relative to max |F|."""
        c = self.coeffs
        scale = np.abs(c).max()
        if scale == 0:
            return 0.0
        return float(np.abs(c[_lattice(self.grid.n).mirror] - np.conj(c)).max() / scale)


def to_coeffs(values: np.ndarray) -> np.ndarray:
    """Array-level forward transform (no validation).

    Uses a real-input FFT and fills the negative-k2 half by Hermitian symmetry.
    """
    n = values.shape[0]
    half = np.fft.rfft2(values)
    full = np.empty((n, n), dtype=complex)
    full[:, : n // 2 + 1] = half
    rows = (-np.arange(n)) % n
    full[:, n // 2 + 1 :] = np.conj(half[rows, 1 : n // 2][:, ::-1])
    full *= _lattice(n).phase * (TWO_PI / n) ** 2
    return full


def to_values(coeffs: np.ndarray) -> np.ndarray:
    """Array-level inverse transform of Hermitian coefficients (real output)."""
    n = coeffs.shape[0]
    m = n // 2 + 1
    return np.fft.irfft2(coeffs[:, :m] * _lattice(n).phase[:, :m], s=(n, n)) * (n / TWO_PI) ** 2


# coefficients of a nodal field below this fraction of the largest one are FFT noise
ROUNDOFF_FLOOR = 64 * np.finfo(float).eps


def coeffs_of(f: RealField) -> np.ndarray:
    """Exact spectrum if ``f`` carries one, otherwise the node DFT.

    A node DFT has round-off noise on every mode; entries below
    ``ROUNDOFF_FLOOR`` times the largest coefficient are set to zero so that
    exponentially weighted sums (E1) see a trigonometric polynomial as one.
    """
    if f._coeffs is not None:
        return f._coeffs
    c = to_coeffs(f.values)
    a = np.abs(c)
    c[a <= ROUNDOFF_FLOOR * a.max()] = 0.0
    return c


def field_from_coeffs(grid: Grid2D, coeffs: np.ndarray) -> RealField:
    """Inverse transform without the symmetry and residue checks; keeps ``coeffs``."""
    return RealField(grid, to_values(coeffs), coeffs)


def forward(f: RealField) -> SpectralField:
    _check_finite(f.values)
    return SpectralField(f.grid, coeffs_of(f))


def inverse(F: SpectralField) -> RealField:
    n = F.grid.n
    defect = F.hermitian_defect()
    if defect > 1e-10:
        raise HermitianSymmetryError(f"coefficients are not Hermitian (relative defect {defect:.3e})")
    z = np.fft.ifft2(F.coeffs * _lattice(n).phase) * (n / TWO_PI) ** 2
    scale = np.abs(z).max()
    if scale > 0:
        residue = np.abs(z.imag).max() / scale
        if residue > 1e-12:
            raise HermitianSymmetryError(f"imaginary residue {residue:.3e} after inverse transform")
    return RealField(F.grid, z.real, F.coeffs)


_PROBE = Grid2D(16)


@dataclass(frozen=True)
class Multiplier:
    """Real, even Fourier multiplier ``m(k)`` with a rule for the zero mode.

    ``symbol`` maps the wavenumber arrays ``(k1, k2)`` to the values of ``m``.
    Only ``k != 0`` entries are ever used: the zero mode is either passed
    through unchanged (``"identity"``) or set to zero (``"annihilate"``).
    """

    symbol: Callable[[np.ndarray, np.ndarray], np.ndarray]
    zero_mode: ZeroModeRule = "identity"
    name: str = "m"

    def __post_init__(self):
        if self.zero_mode not in ("identity", "annihilate"):
            raise ValueError(f"zero_mode must be 'identity' or 'annihilate', got {self.zero_mode!r}")
        m = self.table(_PROBE)
        mirror = _lattice(_PROBE.n).mirror
        if not np.allclose(m[mirror], m, rtol=1e-14, atol=0.0):
            raise ValueError(f"multiplier {self.name} is not even in k; it would not preserve real fields")

    def table(self, grid: Grid2D) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.broadcast_to(self.symbol(grid.k1, grid.k2), (grid.n, grid.n)).astype(float)
        m[0, 0] = 1.0 if self.zero_mode == "identity" else 0.0
        bad = ~np.isfinite(m)
        if bad.any():
            j = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ValueError(f"multiplier {self.name} is not finite at k = ({grid.k1[j]:g}, {grid.k2[j]:g})")
        return m


def apply_multiplier(F: SpectralField, m: Multiplier) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * m.table(F.grid))


def laplacian() -> Multiplier:
    return Multiplier(lambda k1, k2: -(k1**2 + k2**2), "annihilate", "laplacian")


def fractional_gradient(s: float) -> Multiplier:
    """|grad|^s, i.e. |k|^s on k != 0."""
    return Multiplier(lambda k1, k2: (k1**2 + k2**2) ** (s / 2.0), "annihilate", f"|grad|^{s:g}")


def biharmonic_heat(beta: float) -> Multiplier:
    """exp(-beta Delta^2), i.e. exp(-beta |k|^4)."""
    return Multiplier(lambda k1, k2: np.exp(-beta * (k1**2 + k2**2) ** 2), "identity", f"exp(-{beta:g} D^2)")


def resolvent(beta: float) -> Multiplier:
    """(1 + beta Delta^2)^-1."""
    return Multiplier(lambda k1, k2: 1.0 / (1.0 + beta * (k1**2 + k2**2) ** 2), "identity", f"(1+{beta:g} D^2)^-1")


def lp_norm(f: RealField, p: float) -> float:
    """L^p norm by node quadrature; ``p = inf`` is the node maximum."""
    if p == np.inf:
        return float(np.abs(f.values).max())
    return float((f.grid.weight * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def sobolev_norm(f: RealField, s: float) -> float:
    """Inhomogeneous H^s norm with weights <k>^s."""
    c = coeffs_of(f)
    return float(np.sqrt(np.sum((1.0 + f.grid.ksq) ** s * np.abs(c) ** 2) / AREA))


def homogeneous_norm(f: RealField, s: float) -> float:
    """Homogeneous norm ||  |grad|^s f ||_2.  Negative s requires a mean-zero field."""
    F = SpectralField(f.grid, coeffs_of(f))
    if s < 0 and not F.is_mean_zero():
        raise MeanZeroError(f"homogeneous H^{s:g} norm needs a mean-zero field (mean = {f.mean():.3e})")
    ksq = f.grid.ksq.copy()
    ksq[0, 0] = 1.0
    w = ksq**s
    w[0, 0] = 0.0
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2) / AREA))


@dataclass(frozen=True)
class Norms:
    l2: float
    l4: float
    linf: float
    h1: float
    hs: float
    s: float
    hdot_neg1: float | None


def norms(f: RealField, s: float = 2.0, negative: bool = True) -> Norms:
    """All the norms the diagnostics use.

    ``hdot_neg1`` is only computed when ``negative`` is set, and raises
    :class:`MeanZeroError` if ``f`` has nonzero mean.
    """
    return Norms(
        l2=lp_norm(f, 2),
        l4=lp_norm(f, 4),
        linf=lp_norm(f, np.inf),
        h1=sobolev_norm(f, 1.0),
        hs=sobolev_norm(f, s),
        s=s,
        hdot_neg1=homogeneous_norm(f, -1.0) if negative else None,
    )


def project_mean_zero(f: RealField) -> RealField:
    values = f.values - f.values.mean()
    if f._coeffs is None:
        return RealField(f.grid, values)
    c = f._coeffs.copy()
    c[0, 0] = 0.0
    return RealField(f.grid, values, c)


def inner(f: RealField, g: RealField) -> float:
    """Node-quadrature L^2 inner product."""
    return float(f.grid.weight * np.sum(f.values * g.values))
