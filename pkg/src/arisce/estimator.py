"""Forward signal model and the pilot-domain estimators.

The observation at antenna k stacks N training slots into
y_k = sqrt(P_T) * S * Phi_k * h_k + zbar_k with h_k = [h_dk; b], where row n of
Phi_k is [1, phi_n^H G_k] and zbar_k combines the reflected surface noise with
the receiver noise.  Its covariance C_z,k is diagonal with entries
sigma1^2 * ||phi_n^H G_k||^2 + sigma2^2, but not a scaled identity in general,
so the least-squares solve is whitened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .training import NoiseProfile, TrainingPlan

# condition-number ceiling for the whitened Gram matrix
_MAX_CONDITION = 1e12
# relative magnitude guard when dividing out backward-link coefficients
_DIVIDE_GUARD = 1e-12


@dataclass(frozen=True)
class ObservationSet:
    """Received pilot matrix Y (N x K) plus everything the estimator is
    allowed to know: the plan it assumes, the known backward matrix, the
    noise powers and the transmit power."""

    y: np.ndarray
    plan: TrainingPlan
    backward: np.ndarray
    noise: NoiseProfile
    p_tx: float

    def __post_init__(self):
        n, m = self.plan.patterns.shape
        if self.backward.shape[0] != m:
            raise ValueError("backward matrix rows must match pattern length")
        if self.y.shape != (n, self.backward.shape[1]):
            raise ValueError(
                f"observation shape {self.y.shape} inconsistent with plan/backward "
                f"({n} slots, {self.backward.shape[1]} antennas)"
            )

    @property
    def num_antennas(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class StackedModel:
    """Per-antenna linear model: Phi (N x (M+1), first column all ones), the
    compressed block-diagonal rows psi_rows (row n is phi_n^H G_k), the
    diagonal of the equivalent-noise covariance, and the pilot sequence."""

    phi: np.ndarray
    psi_rows: np.ndarray
    cz_diag: np.ndarray
    pilots: np.ndarray

    def __post_init__(self):
        n = self.phi.shape[0]
        if self.phi.shape[1] != self.psi_rows.shape[1] + 1:
            raise ValueError("phi must have one more column than psi_rows")
        if self.psi_rows.shape[0] != n or self.cz_diag.shape != (n,) or self.pilots.shape != (n,):
            raise ValueError("inconsistent stacked-model dimensions")
        if np.any(self.cz_diag < 0):
            raise ValueError("noise covariance diagonal must be nonnegative")


@dataclass(frozen=True)
class EstimateReport:
    """Combined estimates plus the per-antenna replicas they came from.
    Squared errors are None when the truth was not supplied."""

    h_d_hat: np.ndarray
    b_hat: np.ndarray
    per_antenna: np.ndarray
    predicted_cov_diag: np.ndarray | None = None
    sq_err_direct: float | None = None
    sq_err_forward: float | None = None


def synthesize_rx(
    truth: ChannelRealization,
    plan: TrainingPlan,
    noise: NoiseProfile,
    p_tx: float,
    rng: np.random.Generator,
    shared_ris_noise: bool = True,
) -> ObservationSet:
    """Simulate the received pilot matrix Y (N x K).

    For slot n and antenna k:
        y_k(n) = sqrt(P_T)*(h_dk + phi_n^H G_k b)*s(n) + phi_n^H G_k u(n) + z_k(n)

    with u(n) ~ CN(0, sigma1^2 I_M) the surface noise and z_k(n) ~ CN(0, sigma2^2).
    By default u(n) is drawn once per slot and shared by all K antennas (one
    physical surface).  With shared_ris_noise=False the surface noise is
    independent per antenna, which is the assumption under which the
    replica-combining variance predictions are exact; in that mode the
    reflected noise is drawn directly with its exact per-antenna law
    CN(0, sigma1^2*||phi_n^H G_k||^2).
    """
    if p_tx <= 0:
        raise ValueError("transmit power must be positive")
    if plan.num_elements != truth.num_elements:
        raise ValueError("plan and channel disagree on the number of surface elements")
    n_slots, m = plan.patterns.shape
    k = truth.num_antennas
    # rows[n, m, k] = conj(phi_{n,m}) * g_{m,k}; slice over k is phi_n^H G_k
    rows = plan.patterns.conj()[:, :, None] * truth.g[None, :, :]
    signal = truth.h_d[None, :] + np.einsum("nmk,m->nk", rows, truth.b)
    signal = math.sqrt(p_tx) * signal * plan.pilots[:, None]
    s1 = math.sqrt(noise.sigma1_sq / 2.0)
    if shared_ris_noise:
        u = s1 * (rng.standard_normal((n_slots, m)) + 1j * rng.standard_normal((n_slots, m)))
        reflected = np.einsum("nmk,nm->nk", rows, u)
    else:
        scale = np.sqrt(noise.sigma1_sq * np.einsum("nmk,nmk->nk", rows, rows.conj()).real / 2.0)
        reflected = scale * (rng.standard_normal((n_slots, k)) + 1j * rng.standard_normal((n_slots, k)))
    s2 = math.sqrt(noise.sigma2_sq / 2.0)
    z = s2 * (rng.standard_normal((n_slots, k)) + 1j * rng.standard_normal((n_slots, k)))
    return ObservationSet(y=signal + reflected + z, plan=plan, backward=truth.g, noise=noise, p_tx=p_tx)


def build_model(plan: TrainingPlan, g_k: np.ndarray, noise: NoiseProfile) -> StackedModel:
    """Stacked model for one antenna: Phi rows [1, phi_n^H G_k] and the
    diagonal noise covariance sigma1^2*||phi_n^H G_k||^2 + sigma2^2."""
    g_k = np.asarray(g_k)
    if g_k.shape != (plan.num_elements,):
        raise ValueError("g_k length must match the pattern length")
    psi_rows = plan.patterns.conj() * g_k[None, :]
    phi = np.empty((plan.num_slots, plan.num_elements + 1), dtype=complex)
    phi[:, 0] = 1.0
    phi[:, 1:] = psi_rows
    cz = noise.sigma1_sq * np.einsum("nm,nm->n", psi_rows, psi_rows.conj()).real + noise.sigma2_sq
    return StackedModel(phi=phi, psi_rows=psi_rows, cz_diag=cz, pilots=plan.pilots)


def _whitening_weights(cz_diag: np.ndarray) -> np.ndarray:
    """Inverse noise variances; a fully noiseless model degrades to the
    unweighted solve (any scaled identity gives the same LS solution)."""
    top = np.max(cz_diag)
    if top == 0.0:
        return np.ones_like(cz_diag)
    if np.any(cz_diag == 0.0):
        raise ValueError("mixed zero/nonzero slot noise is not supported by the whitened solve")
    return 1.0 / cz_diag


def _solve_whitened(phi: np.ndarray, weights: np.ndarray, rhs_vec: np.ndarray) -> np.ndarray:
    """Solve (Phi^H W Phi) x = Phi^H W rhs_vec with a conditioning guard on
    the Gram matrix (Hermitian eigenvalue ratio capped at 1e12)."""
    weighted = phi * weights[:, None]
    gram = phi.conj().T @ weighted
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 0 or eigs[-1] > _MAX_CONDITION * eigs[0]:
        raise ValueError(
            "whitened Gram matrix is rank deficient (condition number above 1e12); "
            "the training plan does not identify the channel"
        )
    return np.linalg.solve(gram, weighted.conj().T @ rhs_vec)


def ls_estimate(y_k: np.ndarray, model: StackedModel, p_tx: float) -> np.ndarray:
    """Whitened least-squares estimate of h_k = [h_dk; b], the minimum
    variance unbiased estimator for the stacked linear model:

        h_hat = (Phi^H S^H Cz^-1 S Phi)^-1 Phi^H S^H Cz^-1 y / sqrt(P_T)
    """
    if p_tx <= 0:
        raise ValueError("transmit power must be positive")
    weights = _whitening_weights(model.cz_diag)
    despread = model.pilots.conj() * y_k
    return _solve_whitened(model.phi, weights, despread) / math.sqrt(p_tx)


def fast_ls_estimate(y_k: np.ndarray, model: StackedModel, p_tx: float, beta: float) -> np.ndarray:
    """Reduced estimator for scaled-DFT plans, h_hat = (1/(N*sqrt(P_T))) *
    diag(1, 1/beta^2, ...) * Phi^H S^H y.

    Valid only when the equivalent noise is a scaled identity, which makes the
    whitening cancel; the correlation Phi^H S^H y is a DFT-type product, so a
    transform-based O(N log N) evaluation per antenna is possible.
    """
    if p_tx <= 0 or beta <= 0:
        raise ValueError("transmit power and beta must be positive")
    cz = model.cz_diag
    spread = np.max(cz) - np.min(cz)
    if spread > 1e-9 * np.max(cz):
        raise ValueError("reduced estimator requires a scaled-identity noise covariance")
    n = model.phi.shape[0]
    correlated = model.phi.conj().T @ (model.pilots.conj() * y_k)
    correlated[1:] /= beta**2
    return correlated / (n * math.sqrt(p_tx))


def combine_replicas(per_antenna: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Combine the K per-antenna estimates (rows of a K x (M+1) array): the
    direct link stacks the first entries, the forward link equally averages
    the K replicas of the trailing M entries."""
    per_antenna = np.atleast_2d(np.asarray(per_antenna))
    h_d_hat = per_antenna[:, 0].copy()
    b_hat = per_antenna[:, 1:].mean(axis=0)
    return h_d_hat, b_hat


def mmse_estimate(
    y_k: np.ndarray,
    model: StackedModel,
    p_tx: float,
    prior_var: np.ndarray | None = None,
) -> np.ndarray:
    """Bayesian linear estimate with independent CN(0, prior_var) priors:

        h_hat = C_p A^H (A C_p A^H + C_z)^-1 y,  A = sqrt(P_T) S Phi.

    Defaults to unit priors, matching unit-power Rayleigh links.
    """
    if p_tx <= 0:
        raise ValueError("transmit power must be positive")
    dim = model.phi.shape[1]
    if prior_var is None:
        prior_var = np.ones(dim)
    prior_var = np.asarray(prior_var, dtype=float)
    if prior_var.shape != (dim,) or np.any(prior_var <= 0):
        raise ValueError("prior variances must be positive, one per unknown")
    a = math.sqrt(p_tx) * model.pilots[:, None] * model.phi
    cp_ah = prior_var[:, None] * a.conj().T
    innovation = a @ cp_ah + np.diag(model.cz_diag.astype(complex))
    return cp_ah @ np.linalg.solve(innovation, y_k)


def estimate_covariance(model: StackedModel, p_tx: float) -> np.ndarray:
    """Estimation-error covariance (1/P_T) * (Phi^H Cz^-1 Phi)^-1.

    For scaled-DFT plans this equals ((M*s1*beta^2 + s2)/P_T) * (Phi^H Phi)^-1
    and is diagonal, attaining the per-element Fisher bound.
    """
    if p_tx <= 0:
        raise ValueError("transmit power must be positive")
    if np.any(model.cz_diag <= 0):
        raise ValueError("estimate covariance needs strictly positive slot noise")
    weights = 1.0 / model.cz_diag
    weighted = model.phi * weights[:, None]
    gram = model.phi.conj().T @ weighted
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 0 or eigs[-1] > _MAX_CONDITION * eigs[0]:
        raise ValueError("whitened Gram matrix is rank deficient (condition number above 1e12)")
    return np.linalg.solve(gram, np.eye(gram.shape[0], dtype=complex)) / p_tx


def cascaded_estimate(
    y_k: np.ndarray,
    plan: TrainingPlan,
    g_k: np.ndarray,
    noise: NoiseProfile,
    p_tx: float,
) -> np.ndarray:
    """Benchmark estimation route: whitened LS on the cascaded parameterization
    [h_dk; diag(g_k) b] with rows [1, phi_n^H], then removal of the known
    backward link by elementwise division.

    Algebraically identical to ls_estimate on the direct parameterization; the
    division carries the usual relative-magnitude guard.
    """
    g_k = np.asarray(g_k)
    peak = np.max(np.abs(g_k))
    if peak == 0 or np.min(np.abs(g_k)) <= _DIVIDE_GUARD * peak:
        raise ValueError("backward link has a near-zero element; cascade removal is ill-posed")
    n, m = plan.patterns.shape
    phi_casc = np.empty((n, m + 1), dtype=complex)
    phi_casc[:, 0] = 1.0
    phi_casc[:, 1:] = plan.patterns.conj()
    # physical noise statistics are unchanged by the reparameterization
    psi_rows = plan.patterns.conj() * g_k[None, :]
    cz = noise.sigma1_sq * np.einsum("nm,nm->n", psi_rows, psi_rows.conj()).real + noise.sigma2_sq
    weights = _whitening_weights(cz)
    h_casc = _solve_whitened(phi_casc, weights, plan.pilots.conj() * y_k) / math.sqrt(p_tx)
    h_casc[1:] /= g_k
    return h_casc


def _block_weights(cz: np.ndarray) -> np.ndarray:
    """Whitening weights per (slot, antenna); see _whitening_weights."""
    if cz.max() == 0.0:
        return np.ones_like(cz)
    if np.any(cz == 0.0):
        raise ValueError("mixed zero/nonzero slot noise is not supported by the whitened solve")
    return 1.0 / cz


def _block_condition_guard(gram: np.ndarray) -> None:
    eigs = np.linalg.eigvalsh(gram)
    if np.any(eigs[..., 0] <= 0) or np.any(eigs[..., -1] > _MAX_CONDITION * eigs[..., 0]):
        raise ValueError(
            "whitened Gram matrix is rank deficient (condition number above 1e12); "
            "the training plan does not identify the channel"
        )


def estimate_block(
    y: np.ndarray,
    plan: TrainingPlan,
    backward: np.ndarray,
    noise: NoiseProfile,
    p_tx: float,
    method: str = "ls",
    beta: float | None = None,
    prior_var: np.ndarray | None = None,
) -> np.ndarray:
    """Per-antenna estimates for a whole coherence block, rows k of the
    returned (K, M+1) array matching the single-antenna estimators applied to
    column k of y:

      * "ls"        -- ls_estimate on build_model(plan, g_k)
      * "fast"      -- fast_ls_estimate (requires beta)
      * "mmse"      -- mmse_estimate with the given priors
      * "cascaded"  -- cascaded_estimate (estimate the cascade, divide out g_k)

    The arithmetic is batched across antennas but is the same estimator; the
    plan passed here is the one the estimator assumes, which the caller may
    deliberately distinguish from the patterns the surface applied.
    """
    if p_tx <= 0:
        raise ValueError("transmit power must be positive")
    backward = np.asarray(backward)
    n_slots, m = plan.patterns.shape
    if backward.shape[0] != m or y.shape != (n_slots, backward.shape[1]):
        raise ValueError("observation/backward dimensions inconsistent with the plan")
    k = backward.shape[1]
    despread = plan.pilots.conj()[:, None] * y
    pat_conj = plan.patterns.conj()
    # ||phi_n^H G_k||^2 for all (n, k), hence the noise covariance diagonals
    row_power = np.abs(plan.patterns) ** 2 @ np.abs(backward) ** 2
    cz = noise.sigma1_sq * row_power + noise.sigma2_sq

    if method == "fast":
        if beta is None:
            raise ValueError("the reduced estimator needs the plan's beta")
        if beta <= 0:
            raise ValueError("beta must be positive")
        spread = cz.max(axis=0) - cz.min(axis=0)
        if np.any(spread > 1e-9 * cz.max(axis=0)):
            raise ValueError("reduced estimator requires a scaled-identity noise covariance")
        out = np.empty((k, m + 1), dtype=complex)
        out[:, 0] = despread.sum(axis=0)
        out[:, 1:] = (backward.conj() * (plan.patterns.T @ despread)).T / beta**2
        return out / (n_slots * math.sqrt(p_tx))

    if method == "cascaded":
        peak = np.max(np.abs(backward), axis=0)
        if np.any(peak == 0) or np.any(np.min(np.abs(backward), axis=0) <= _DIVIDE_GUARD * peak):
            raise ValueError("backward link has a near-zero element; cascade removal is ill-posed")
        phi_casc = np.concatenate([np.ones((n_slots, 1), dtype=complex), pat_conj], axis=1)
        w = _block_weights(cz)
        weighted = w.T[:, :, None] * phi_casc[None, :, :]
        gram = phi_casc.conj().T[None, :, :] @ weighted
        _block_condition_guard(gram)
        rhs = phi_casc.conj().T @ (w * despread)
        sol = np.linalg.solve(gram, rhs.T[..., None])[..., 0] / math.sqrt(p_tx)
        sol[:, 1:] /= backward.T
        return sol

    # phi_t[k] is antenna k's design matrix with rows [1, phi_n^H G_k]
    phi_t = np.empty((k, n_slots, m + 1), dtype=complex)
    phi_t[:, :, 0] = 1.0
    phi_t[:, :, 1:] = (pat_conj[:, :, None] * backward[None, :, :]).transpose(2, 0, 1)

    if method == "mmse":
        dim = m + 1
        if prior_var is None:
            prior_var = np.ones(dim)
        prior_var = np.asarray(prior_var, dtype=float)
        if prior_var.shape != (dim,) or np.any(prior_var <= 0):
            raise ValueError("prior variances must be positive, one per unknown")
        a = math.sqrt(p_tx) * plan.pilots[None, :, None] * phi_t
        a_conj_t = a.conj().transpose(0, 2, 1)
        innovation = (a * prior_var[None, None, :]) @ a_conj_t
        innovation[:, np.arange(n_slots), np.arange(n_slots)] += cz.T
        x = np.linalg.solve(innovation, y.T[..., None])
        return prior_var[None, :] * (a_conj_t @ x)[..., 0]

    if method != "ls":
        raise ValueError(f"unknown estimation method {method!r}")
    w = _block_weights(cz)
    phi_conj_t = phi_t.conj().transpose(0, 2, 1)
    gram = phi_conj_t @ (w.T[:, :, None] * phi_t)
    _block_condition_guard(gram)
    rhs = phi_conj_t @ (w * despread).T[:, :, None]
    return np.linalg.solve(gram, rhs)[..., 0] / math.sqrt(p_tx)


def make_report(
    per_antenna: np.ndarray,
    truth: ChannelRealization | None = None,
    predicted_cov_diag: np.ndarray | None = None,
) -> EstimateReport:
    """Assemble the combined estimates and, when the truth is supplied, the
    squared errors of the combined direct and forward estimates."""
    per_antenna = np.atleast_2d(np.asarray(per_antenna))
    h_d_hat, b_hat = combine_replicas(per_antenna)
    sq_d = sq_f = None
    if truth is not None:
        sq_d = float(np.sum(np.abs(truth.h_d - h_d_hat) ** 2))
        sq_f = float(np.sum(np.abs(truth.b - b_hat) ** 2))
    return EstimateReport(
        h_d_hat=h_d_hat,
        b_hat=b_hat,
        per_antenna=per_antenna,
        predicted_cov_diag=predicted_cov_diag,
        sq_err_direct=sq_d,
        sq_err_forward=sq_f,
    )
