"""Training reflection patterns and closed-form variance predictions.

Implements the DFT-scaled pattern design that equalizes the backward link and
amplifies by a single scaling factor beta, the two benchmark pattern schemes
(conventional DFT and on-off), phase quantization, and the analytic estimation
variances the Monte Carlo harness is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SCHEME_PROPOSED = "proposed"
SCHEME_CONVENTIONAL_DFT = "conventional_dft"
SCHEME_ONOFF = "onoff"
SCHEMES = (SCHEME_PROPOSED, SCHEME_CONVENTIONAL_DFT, SCHEME_ONOFF)

# relative magnitude below which a backward-link entry is treated as zero
_SINGULAR_GUARD = 1e-12


@dataclass(frozen=True)
class NoiseProfile:
    """Thermal noise powers in watts: sigma1_sq at the surface, sigma2_sq at
    the receiver.  Zeros are tolerated only for noiseless limit checks."""

    sigma1_sq: float
    sigma2_sq: float

    def __post_init__(self):
        if self.sigma1_sq < 0 or self.sigma2_sq < 0:
            raise ValueError("noise powers must be nonnegative")


@dataclass(frozen=True)
class DftSubmatrix:
    """Columns 2..M+1 (1-indexed) of the N-point DFT matrix.

    Columns are mutually orthogonal with squared norm N and each is orthogonal
    to the all-ones vector; all entries are unit modulus.
    """

    values: np.ndarray

    @property
    def num_slots(self) -> int:
        return self.values.shape[0]

    @property
    def num_elements(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TrainingPlan:
    """N reflection patterns (rows of `patterns`, shape N x M), the scaling
    factor beta, a scheme tag, unit-modulus pilots, and the amplitude budget
    a_max every coefficient must respect."""

    patterns: np.ndarray
    beta: float
    scheme: str
    pilots: np.ndarray
    a_max: float = math.inf

    def __post_init__(self):
        if self.patterns.ndim != 2:
            raise ValueError("patterns must be a 2-D array (N, M)")
        n, m = self.patterns.shape
        if n < m + 1:
            raise ValueError(f"need at least M+1 = {m + 1} training slots, got {n}")
        if self.pilots.shape != (n,):
            raise ValueError("pilots must have one entry per training slot")
        moduli = np.abs(self.pilots)
        if moduli.max() > 1 + 1e-12 or moduli.min() < 1 - 1e-12:
            raise ValueError("pilots must be unit modulus")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not self.a_max >= 1.0:
            raise ValueError("a_max must be at least 1")
        if np.any(np.abs(self.patterns) > self.a_max * (1 + 1e-9)):
            raise ValueError("pattern amplitude exceeds a_max")

    @property
    def num_slots(self) -> int:
        return self.patterns.shape[0]

    @property
    def num_elements(self) -> int:
        return self.patterns.shape[1]


# the submatrix only depends on (N, M); reused across every Monte Carlo trial
_DFT_CACHE: dict[tuple[int, int], np.ndarray] = {}


def dft_submatrix(n_slots: int, m_elements: int) -> DftSubmatrix:
    """Columns 1..M (0-based) of the N-point DFT matrix, entry (r, c) =
    exp(-2j*pi*r*c/N).  Requires N >= M + 1 for identifiability."""
    if n_slots < m_elements + 1:
        raise ValueError(f"need n_slots >= m_elements + 1, got {n_slots} < {m_elements + 1}")
    values = _DFT_CACHE.get((n_slots, m_elements))
    if values is None:
        r = np.arange(n_slots)[:, None]
        c = np.arange(1, m_elements + 1)[None, :]
        values = np.exp(-2j * np.pi * r * c / n_slots)
        values.setflags(write=False)
        _DFT_CACHE[(n_slots, m_elements)] = values
    return DftSubmatrix(values)


def optimal_beta(a_max: float, rho_g: float, k_antennas: int, noise: NoiseProfile) -> float:
    """Variance-minimizing scaling factor min{a_max*sqrt(rho_g), sqrt(sigma2/(K*sigma1))}.

    The first branch is the amplitude cap implied by the constant-modulus
    backward link; the second is the unconstrained stationary point of the sum
    variance.  K = 1 recovers the single-antenna rule sqrt(sigma2/sigma1).
    """
    if a_max <= 0 or rho_g <= 0 or k_antennas < 1:
        raise ValueError("a_max, rho_g must be positive and k_antennas >= 1")
    if noise.sigma1_sq <= 0 or noise.sigma2_sq <= 0:
        raise ValueError("optimal_beta needs strictly positive noise powers")
    sigma1 = math.sqrt(noise.sigma1_sq)
    sigma2 = math.sqrt(noise.sigma2_sq)
    return min(a_max * math.sqrt(rho_g), math.sqrt(sigma2 / (k_antennas * sigma1)))


def proposed_patterns(
    g1: np.ndarray,
    beta: float,
    n_slots: int,
    a_max: float | None = None,
) -> TrainingPlan:
    """Patterns phi_n = beta * G1^{-H} f_n that turn each slot's effective row
    into a scaled DFT row.

    g1 is the backward link of the reference antenna; f_n are the columns of
    dft_submatrix read row-wise.  The resulting plan satisfies
    Phi^H Phi = N*diag(1, beta^2, ..., beta^2) and Psi Psi^H = M*beta^2*I.
    """
    g1 = np.asarray(g1)
    m = g1.shape[0]
    if beta <= 0:
        raise ValueError("beta must be positive")
    peak = np.max(np.abs(g1))
    if peak == 0 or np.min(np.abs(g1)) <= _SINGULAR_GUARD * peak:
        raise ValueError("backward link has a near-zero element; pattern inversion is ill-posed")
    f = dft_submatrix(n_slots, m).values
    # phi_n[m] = beta * conj(f[n, m]) / conj(g1[m])  (diagonal inverse of G1^H)
    patterns = beta * (f / g1[None, :]).conj()
    if a_max is not None:
        if np.any(np.abs(patterns) > a_max * (1 + 1e-9)):
            raise ValueError(
                f"pattern amplitude {np.max(np.abs(patterns)):.6g} exceeds a_max = {a_max:.6g}"
            )
    return TrainingPlan(
        patterns=patterns,
        beta=beta,
        scheme=SCHEME_PROPOSED,
        pilots=np.ones(n_slots, dtype=complex),
        a_max=math.inf if a_max is None else a_max,
    )


def conventional_dft_patterns(n_slots: int, m_elements: int) -> TrainingPlan:
    """Benchmark plan with unit amplitudes: phi_n^H equals the n-th row of the
    DFT submatrix (no channel equalization, no amplification)."""
    f = dft_submatrix(n_slots, m_elements).values
    return TrainingPlan(
        patterns=f.conj(),
        beta=1.0,
        scheme=SCHEME_CONVENTIONAL_DFT,
        pilots=np.ones(n_slots, dtype=complex),
        a_max=1.0,
    )


def onoff_patterns(n_slots: int, m_elements: int, amplitude: float = 1.0) -> TrainingPlan:
    """Benchmark plan that observes the direct link alone in slot 1, then
    switches on one element per slot at the given amplitude with zero phase.
    Slots beyond M+1 repeat the cycle."""
    if amplitude <= 0:
        raise ValueError("on amplitude must be positive")
    if n_slots < m_elements + 1:
        raise ValueError(f"need n_slots >= m_elements + 1, got {n_slots} < {m_elements + 1}")
    patterns = np.zeros((n_slots, m_elements), dtype=complex)
    for n in range(n_slots):
        pos = n % (m_elements + 1)
        if pos > 0:
            patterns[n, pos - 1] = amplitude
    return TrainingPlan(
        patterns=patterns,
        beta=amplitude,
        scheme=SCHEME_ONOFF,
        pilots=np.ones(n_slots, dtype=complex),
        a_max=max(1.0, amplitude),
    )


def quantize_phases(plan: TrainingPlan, bits: int) -> TrainingPlan:
    """Snap every coefficient phase to the nearest of the 2^bits uniform
    levels {2*pi*i/2^bits}, keeping amplitudes.  Exact midpoints resolve
    toward the lower (unwrapped) level, which makes the operation idempotent.
    """
    if bits < 1:
        raise ValueError("bits must be at least 1")
    levels = 2**bits
    step = 2 * np.pi / levels
    x = np.angle(plan.patterns) / step
    nearest = np.round(x)
    # entries already on a level pass through untouched (exact idempotency)
    on_level = np.abs(x - nearest) <= 1e-9
    idx = np.ceil(x - 0.5)
    quantized = np.abs(plan.patterns) * np.exp(1j * step * (idx % levels))
    return replace(plan, patterns=np.where(on_level, plan.patterns, quantized))


def predict_variance_sum(
    beta: float,
    m_elements: int,
    k_antennas: int,
    n_slots: int,
    noise: NoiseProfile,
    p_tx: float,
) -> float:
    """Closed-form sum of the estimation variances of the combined direct and
    forward estimates under the scaled-DFT design:

        (M*(K*s1*b^2 + s2/(K*b^2)) + M^2*s1/K + K*s2) / (P_T*N)

    with s1, s2 the noise powers.  K = 1 reduces to the single-antenna bound.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if p_tx <= 0 or m_elements < 1 or k_antennas < 1 or n_slots < 1:
        raise ValueError("m, k, n and p_tx must be positive")
    s1, s2 = noise.sigma1_sq, noise.sigma2_sq
    return (
        m_elements * (k_antennas * s1 * beta**2 + s2 / (k_antennas * beta**2))
        + m_elements**2 * s1 / k_antennas
        + k_antennas * s2
    ) / (p_tx * n_slots)


def predict_variance_elements(
    beta: float,
    m_elements: int,
    k_antennas: int,
    n_slots: int,
    noise: NoiseProfile,
    p_tx: float,
) -> tuple[float, float]:
    """Per-element estimation variances (eps_d, eps_b) for the direct and
    forward links: eps_d = (M*s1*b^2 + s2)/(P_T*N), eps_b = (M*s1 + s2/b^2)/(P_T*K*N).

    K*eps_d + M*eps_b equals predict_variance_sum for the same arguments.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if p_tx <= 0 or m_elements < 1 or k_antennas < 1 or n_slots < 1:
        raise ValueError("m, k, n and p_tx must be positive")
    s1, s2 = noise.sigma1_sq, noise.sigma2_sq
    eps_d = (m_elements * s1 * beta**2 + s2) / (p_tx * n_slots)
    eps_b = (m_elements * s1 + s2 / beta**2) / (p_tx * k_antennas * n_slots)
    return eps_d, eps_b
