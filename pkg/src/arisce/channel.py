"""Channel generation for the simulated link: planar-array steering vectors,
the fixed line-of-sight surface-to-receiver link, and Rayleigh fading for the
direct and forward links."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with half-wavelength spacing, row-major indexing."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array geometry must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class Direction:
    """Propagation direction; horizontal angle in (0, pi), vertical in (-pi/2, pi/2).

    Boundary values are accepted so that test fixtures can pin the phase ramp.
    """

    horizontal: float
    vertical: float

    def __post_init__(self):
        if not 0.0 <= self.horizontal <= math.pi:
            raise ValueError(f"horizontal angle {self.horizontal} outside [0, pi]")
        if not -math.pi / 2 <= self.vertical <= math.pi / 2:
            raise ValueError(f"vertical angle {self.vertical} outside [-pi/2, pi/2]")


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence block: direct link h_d (K,), forward link b (M,),
    backward matrix g (M, K) whose column k is the surface-to-antenna-k channel,
    and the backward large-scale coefficient rho_g (linear power)."""

    h_d: np.ndarray
    b: np.ndarray
    g: np.ndarray
    rho_g: float

    def __post_init__(self):
        if self.rho_g <= 0:
            raise ValueError("rho_g must be positive")
        if self.g.ndim != 2:
            raise ValueError("backward matrix must be 2-D (M, K)")
        m, k = self.g.shape
        if self.b.shape != (m,) or self.h_d.shape != (k,):
            raise ValueError(
                f"inconsistent channel dimensions: g {self.g.shape}, b {self.b.shape}, h_d {self.h_d.shape}"
            )

    @property
    def num_elements(self) -> int:
        return self.g.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.g.shape[1]


def square_geometry(n: int) -> ArrayGeometry:
    """Square UPA holding n elements; n must be a perfect square."""
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"element count {n} is not a perfect square")
    return ArrayGeometry(side, side)


def steering_vector(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """Unit-modulus steering vector of the UPA, flattened row-major.

    Entry (p, q) is exp(j*pi*(p*u + q*v)) with u = sin(vertical)*cos(horizontal)
    and v = sin(vertical)*sin(horizontal).
    """
    u = math.sin(direction.vertical) * math.cos(direction.horizontal)
    v = math.sin(direction.vertical) * math.sin(direction.horizontal)
    p = np.arange(geom.rows)[:, None]
    q = np.arange(geom.cols)[None, :]
    return np.exp(1j * np.pi * (p * u + q * v)).ravel()


def gen_backward(
    ris_geom: ArrayGeometry,
    bs_geom: ArrayGeometry,
    rho_g: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rank-1 LoS backward matrix sqrt(rho_g) * a_ris * a_bs^H (shape M x K).

    Arrival and departure directions are drawn uniformly, horizontal over
    (0, pi) and vertical over (-pi/2, pi/2).
    """
    if rho_g <= 0:
        raise ValueError("rho_g must be positive")
    arrival = Direction(rng.uniform(0.0, np.pi), rng.uniform(-np.pi / 2, np.pi / 2))
    departure = Direction(rng.uniform(0.0, np.pi), rng.uniform(-np.pi / 2, np.pi / 2))
    a_r = steering_vector(ris_geom, arrival)
    a_t = steering_vector(bs_geom, departure)
    return math.sqrt(rho_g) * np.outer(a_r, a_t.conj())


def gen_rayleigh(dim: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) vector (unit average power per entry)."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / np.sqrt(2.0)


def large_scale(d: float) -> float:
    """Distance-based large-scale coefficient 1e-3 * d^-2 (linear power)."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return 1e-3 * d**-2


def gen_channel(
    ris_geom: ArrayGeometry,
    bs_geom: ArrayGeometry,
    rho_g: float,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw one coherence block: LoS backward matrix first, then Rayleigh
    direct and forward links.  Draw order is fixed for reproducibility."""
    g = gen_backward(ris_geom, bs_geom, rho_g, rng)
    h_d = gen_rayleigh(bs_geom.size, rng)
    b = gen_rayleigh(ris_geom.size, rng)
    return ChannelRealization(h_d=h_d, b=b, g=g, rho_g=rho_g)
