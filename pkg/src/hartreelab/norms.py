"""Discrete L2, Wiener, combined, derivative-graded and mode-summed norms.

All norms are Riemann sums under the transform convention fixed in
`grid`, so they converge to their continuum counterparts as the box and
resolution grow.  The combined norm is the sum

    ||f||_{L2 cap W} = ||f||_{L2} + ||f||_W,

which is the quantity the two-space estimates actually manipulate.

Two inequality checkers make the function-space estimates testable:
the pointwise-product bound on Wiener norms (with anti-aliasing
preconditions so the discrete product is exact) and the convolution
bound assembled from the kernel split.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grid import Field, SpectralField
from .kernel import KernelSpec, convolve, split_norms


def derivative_order(d: int, gamma: float) -> int:
    """Derivative depth of the graded norm: 2 in low dimension, 3 only
    for d = 3 with gamma below 1."""
    if d in (1, 2):
        return 2
    if d == 3:
        return 3 if gamma < 1.0 else 2
    raise ValueError(f"dimension must be 1, 2 or 3, got {d}")


@dataclass(frozen=True)
class YNormSpec:
    d: int
    gamma: float
    n: int = None

    def __post_init__(self):
        expected = derivative_order(self.d, self.gamma)
        if self.n is None:
            object.__setattr__(self, "n", expected)
        elif self.n != expected:
            raise ValueError(
                f"derivative order n={self.n} contradicts the rule value "
                f"{expected} for d={self.d}, gamma={self.gamma}"
            )


@dataclass(frozen=True)
class NormReport:
    l2: float
    wiener: float
    l2w: float
    y: float = None
    e: float = None

    def __post_init__(self):
        if any(v < 0 for v in (self.l2, self.wiener, self.l2w)):
            raise ValueError("norms must be nonnegative")


def l2_norm(f: Field) -> float:
    g = f.grid
    return float(np.sqrt(g.dx**g.d * np.sum(np.abs(f.values) ** 2)))


def l1_norm(f: Field) -> float:
    g = f.grid
    return float(g.dx**g.d * np.sum(np.abs(f.values)))


def wiener_norm(f: Field) -> float:
    """dxi^d sum |fhat|; the phase factors have modulus one, so the raw
    FFT moduli suffice."""
    g = f.grid
    scale = g.dxi**g.d * (2 * np.pi) ** (-g.d / 2) * g.dx**g.d
    return float(scale * np.sum(np.abs(np.fft.fftn(f.values))))


def l2w_norm(f: Field) -> float:
    return l2_norm(f) + wiener_norm(f)


def spectral_l2_norm(F: SpectralField) -> float:
    g = F.grid
    return float(np.sqrt(g.dxi**g.d * np.sum(np.abs(F.coefficients) ** 2)))


def norm_report(f: Field) -> NormReport:
    l2 = l2_norm(f)
    w = wiener_norm(f)
    return NormReport(l2=l2, wiener=w, l2w=l2 + w)


def multi_indices(d: int, max_order: int) -> list:
    """All multi-indices eta with |eta| <= max_order, lexicographic."""
    out = []
    for eta in itertools.product(range(max_order + 1), repeat=d):
        if sum(eta) <= max_order:
            out.append(eta)
    return out


def y_norm(f: Field, spec: YNormSpec) -> float:
    """Sum of combined norms of all derivatives up to order n."""
    from .grid import spectral_derivative

    if f.grid.d != spec.d:
        raise ValueError(f"field is {f.grid.d}D but norm spec is {spec.d}D")
    total = 0.0
    for eta in multi_indices(spec.d, spec.n):
        total += l2w_norm(spectral_derivative(f, eta))
    return total


def e_norm(amplitudes, spec: YNormSpec) -> float:
    """l1-over-modes of the graded norm; empty families have norm zero."""
    return float(sum(y_norm(a, spec) for a in amplitudes))


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    holds: bool


def spectral_tail_fraction(f: Field, cutoff_index: int) -> float:
    """Fraction of spectral L1 mass carried by |k| > cutoff per axis."""
    g = f.grid
    coef = np.abs(np.fft.fftn(f.values))
    total = coef.sum()
    if total == 0:
        return 0.0
    k = np.rint(np.fft.fftfreq(g.points) * g.points).astype(int)
    inside = np.abs(k) <= cutoff_index
    mask = inside.reshape([-1] + [1] * (g.d - 1))
    for ax in range(1, g.d):
        mask = mask & inside.reshape([-1 if a == ax else 1 for a in range(g.d)])
    return float(coef[~mask].sum() / total)


def check_algebra_bound(f: Field, g: Field, slack: float = 1e-10) -> BoundReport:
    """||f g||_W <= ||f||_W ||g||_W on alias-free pairs.

    Both factors must be band-limited to half the lattice so the sampled
    pointwise product carries no aliased content; pairs violating that
    are rejected rather than silently measured.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    cutoff = f.grid.points // 4 - 1
    for name, h in (("first", f), ("second", g)):
        if spectral_tail_fraction(h, cutoff) > 1e-12:
            raise ValueError(
                f"{name} factor has spectral mass above the anti-aliasing "
                f"cutoff |k| <= {cutoff}; the discrete product would alias"
            )
    lhs = wiener_norm(f * g)
    rhs = wiener_norm(f) * wiener_norm(g)
    return BoundReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1 + slack))


def check_hartree_bound(spec: KernelSpec, h: Field, slack: float = 1e-6) -> BoundReport:
    """||K * h||_W <= ||K1||_L1 ||h||_L1 + ||K2||_Linf ||h||_W."""
    k1_l1, k2_sup = split_norms(spec)
    lhs = wiener_norm(convolve(spec, h))
    rhs = k1_l1 * l1_norm(h) + k2_sup * wiener_norm(h)
    return BoundReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1 + slack))
