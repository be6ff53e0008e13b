"""Monte Carlo experiment harness: sweep configuration, deterministic seeded
trials, CSV persistence, an invariant-check battery, and the command line.

dB conventions (also written into every CSV as comments):
  * beta sweeps:  grid values are 20*log10(beta)
  * power sweeps: grid values are dBm, P[W] = 10^((dBm - 30)/10)
  * a_max sweeps: grid values are 10*log10(a_max^2)
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import channel, estimator, training
from .training import NoiseProfile

# harness-level scheme tags: the three pattern schemes plus the Bayesian
# estimator variant of the proposed design
SCHEME_PROPOSED_MMSE = "proposed_mmse"
HARNESS_SCHEMES = training.SCHEMES + (SCHEME_PROPOSED_MMSE,)

SWEEP_VARIABLES = ("beta", "ptx", "amax")
RIS_NOISE_MODES = ("independent", "shared")

CSV_HEADER = (
    "scheme,sweep_var,sweep_value_db,mse_sum,mse_direct,mse_forward,"
    "pred_sum,pred_direct,pred_forward,trials,seed"
)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_amplitude(db: float) -> float:
    """Amplitude from a power-style dB value (a_max^2 in dB -> a_max)."""
    return 10.0 ** (db / 20.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep's parameters.  Defaults reproduce the reference setup:
    16-element square surface, 16-antenna square receiver, minimum training
    length, 50 m surface-receiver distance, -70/-80 dBm noise, 1e4 trials."""

    m: int = 16
    k: int = 16
    n: int = 17
    d_meters: float = 50.0
    sigma1_dbm: float = -70.0
    sigma2_dbm: float = -80.0
    trials: int = 10_000
    seed: int = 1
    schemes: tuple[str, ...] = (training.SCHEME_PROPOSED, training.SCHEME_CONVENTIONAL_DFT)
    sweep_variable: str = "beta"
    grid_db: tuple[float, ...] = tuple(float(x) for x in range(-30, 1))
    phase_bits: int | None = None
    a_max_db: float = math.inf
    ptx_dbm: float = 20.0
    ris_noise: str = "independent"
    workers: int = 1

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be at least 1")
        if self.n < self.m + 1:
            raise ValueError(f"need n >= m + 1 training slots, got n={self.n}, m={self.m}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.d_meters <= 0:
            raise ValueError("distance must be positive")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        for s in self.schemes:
            if s not in HARNESS_SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; valid: {', '.join(HARNESS_SCHEMES)}")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.sweep_variable!r}")
        if len(self.grid_db) == 0:
            raise ValueError("sweep grid must be nonempty")
        if list(self.grid_db) != sorted(self.grid_db):
            raise ValueError("sweep grid must be sorted ascending")
        if self.phase_bits is not None and self.phase_bits < 1:
            raise ValueError("phase_bits must be at least 1")
        if self.ris_noise not in RIS_NOISE_MODES:
            raise ValueError(f"ris_noise must be one of {RIS_NOISE_MODES}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def noise_profile(self) -> NoiseProfile:
        return NoiseProfile(dbm_to_watts(self.sigma1_dbm), dbm_to_watts(self.sigma2_dbm))

    def rho_g(self) -> float:
        return channel.large_scale(self.d_meters)

    def a_max(self) -> float:
        return db_to_amplitude(self.a_max_db)


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    sweep_var: str
    sweep_value_db: float
    mse_sum: float
    mse_direct: float
    mse_forward: float
    pred_sum: float | None
    pred_direct: float | None
    pred_forward: float | None
    trials: int
    seed: int
    beta_used: float
    # standard errors of the Monte Carlo means; not part of the CSV schema
    sem_sum: float = 0.0
    sem_direct: float = 0.0
    sem_forward: float = 0.0


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    rows: tuple[SweepRow, ...]
    clamped_events: int


def derive_rng(seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """Per-trial substream keyed only by (seed, point index, trial index), so
    any degree of trial parallelism reproduces the serial results."""
    return np.random.default_rng(np.random.SeedSequence([seed, point_index, trial_index]))


def _point_operating(cfg: ExperimentConfig, point_db: float) -> tuple[float, float, float, bool]:
    """Resolve one grid point into (beta, p_tx, a_max, clamped).

    beta comes from the grid on beta sweeps and from the optimal rule
    otherwise; it is clamped to the amplitude cap a_max*sqrt(rho_g) with a
    flag, never silently.
    """
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    if cfg.sweep_variable == "beta":
        p_tx = dbm_to_watts(cfg.ptx_dbm)
        a_max = cfg.a_max()
        beta = db_to_amplitude(point_db)
    elif cfg.sweep_variable == "ptx":
        p_tx = dbm_to_watts(point_db)
        a_max = cfg.a_max()
        beta = training.optimal_beta(a_max, rho, cfg.k, noise)
    else:  # amax
        p_tx = dbm_to_watts(cfg.ptx_dbm)
        a_max = db_to_amplitude(point_db)
        beta = training.optimal_beta(a_max, rho, cfg.k, noise)
    cap = a_max * math.sqrt(rho)
    clamped = beta > cap * (1 + 1e-12)
    if clamped:
        beta = cap
    return beta, p_tx, a_max, clamped


def _build_plan(cfg: ExperimentConfig, scheme: str, g1: np.ndarray, beta: float, a_max: float):
    if scheme in (training.SCHEME_PROPOSED, SCHEME_PROPOSED_MMSE):
        cap = None if math.isinf(a_max) else a_max
        return training.proposed_patterns(g1, beta, cfg.n, a_max=cap)
    if scheme == training.SCHEME_CONVENTIONAL_DFT:
        return training.conventional_dft_patterns(cfg.n, cfg.m)
    if scheme == training.SCHEME_ONOFF:
        return training.onoff_patterns(cfg.n, cfg.m, amplitude=1.0)
    raise ValueError(f"unknown scheme {scheme!r}")


def run_trial(
    cfg: ExperimentConfig,
    point_db: float,
    scheme: str,
    rng: np.random.Generator,
) -> tuple[float, float, bool]:
    """One independent trial at one grid point: draw a channel, build the
    scheme's plan, synthesize the pilots, estimate, and return the squared
    errors (||h_d - h_d_hat||^2, ||b - b_hat||^2) plus the clamped-beta flag.

    Phase quantization, when configured, is applied to the patterns the
    surface actually uses while the estimator keeps the designed plan, so the
    orthogonality loss shows up as estimation bias.
    """
    noise = cfg.noise_profile()
    beta, p_tx, a_max, clamped = _point_operating(cfg, point_db)
    truth = channel.gen_channel(
        channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), cfg.rho_g(), rng
    )
    plan = _build_plan(cfg, scheme, truth.g[:, 0], beta, a_max)
    applied = training.quantize_phases(plan, cfg.phase_bits) if cfg.phase_bits else plan
    obs = estimator.synthesize_rx(
        truth, applied, noise, p_tx, rng, shared_ris_noise=(cfg.ris_noise == "shared")
    )
    method = {
        training.SCHEME_PROPOSED: "fast",
        SCHEME_PROPOSED_MMSE: "mmse",
        training.SCHEME_CONVENTIONAL_DFT: "cascaded",
        training.SCHEME_ONOFF: "ls",
    }[scheme]
    per_antenna = estimator.estimate_block(
        obs.y, plan, truth.g, noise, p_tx, method=method, beta=beta
    )
    report = estimator.make_report(per_antenna, truth=truth)
    return report.sq_err_direct, report.sq_err_forward, clamped


def _run_chunk(cfg: ExperimentConfig, point_index: int, point_db: float, scheme: str,
               lo: int, hi: int) -> np.ndarray:
    out = np.empty((hi - lo, 2))
    for i, trial in enumerate(range(lo, hi)):
        rng = derive_rng(cfg.seed, point_index, trial)
        sq_d, sq_f, _ = run_trial(cfg, point_db, scheme, rng)
        out[i, 0] = sq_d
        out[i, 1] = sq_f
    return out


def _point_errors(cfg: ExperimentConfig, point_index: int, point_db: float, scheme: str,
                  pool: ProcessPoolExecutor | None) -> np.ndarray:
    """All trials' squared errors for one (point, scheme), in trial order.
    Chunks may run in parallel; the reduction order never changes."""
    if pool is None:
        return _run_chunk(cfg, point_index, point_db, scheme, 0, cfg.trials)
    chunk = max(200, math.ceil(cfg.trials / (4 * cfg.workers)))
    futures = [
        pool.submit(_run_chunk, cfg, point_index, point_db, scheme, lo, min(lo + chunk, cfg.trials))
        for lo in range(0, cfg.trials, chunk)
    ]
    return np.concatenate([f.result() for f in futures], axis=0)


def sweep(cfg: ExperimentConfig) -> SweepResult:
    """Run every (grid point, scheme) pair for cfg.trials independent trials
    and average the squared errors.  Deterministic given (config, seed)."""
    rows: list[SweepRow] = []
    clamped_events = 0
    noise = cfg.noise_profile()
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        for point_index, point_db in enumerate(cfg.grid_db):
            beta, p_tx, _, clamped = _point_operating(cfg, point_db)
            for scheme in cfg.schemes:
                scheme_clamped = clamped and scheme in (
                    training.SCHEME_PROPOSED, SCHEME_PROPOSED_MMSE
                )
                if scheme_clamped:
                    clamped_events += 1
                try:
                    errs = _point_errors(cfg, point_index, point_db, scheme, pool)
                except Exception as exc:
                    raise RuntimeError(
                        f"sweep aborted at scheme={scheme}, point={point_db} dB: {exc}"
                    ) from exc
                sums = errs.sum(axis=0)
                ddof = 1 if cfg.trials > 1 else 0
                root = math.sqrt(cfg.trials)
                pred_sum = pred_d = pred_f = None
                if scheme in (training.SCHEME_PROPOSED, SCHEME_PROPOSED_MMSE):
                    pred_sum = training.predict_variance_sum(beta, cfg.m, cfg.k, cfg.n, noise, p_tx)
                    pred_d, pred_f = training.predict_variance_elements(
                        beta, cfg.m, cfg.k, cfg.n, noise, p_tx
                    )
                rows.append(SweepRow(
                    scheme=_tagged(scheme, cfg.phase_bits),
                    sweep_var=cfg.sweep_variable,
                    sweep_value_db=float(point_db),
                    mse_sum=float((sums[0] + sums[1]) / cfg.trials),
                    mse_direct=float(sums[0] / (cfg.trials * cfg.k)),
                    mse_forward=float(sums[1] / (cfg.trials * cfg.m)),
                    pred_sum=pred_sum,
                    pred_direct=pred_d,
                    pred_forward=pred_f,
                    trials=cfg.trials,
                    seed=cfg.seed,
                    beta_used=beta,
                    sem_sum=float(np.std(errs[:, 0] + errs[:, 1], ddof=ddof) / root),
                    sem_direct=float(np.std(errs[:, 0], ddof=ddof) / (root * cfg.k)),
                    sem_forward=float(np.std(errs[:, 1], ddof=ddof) / (root * cfg.m)),
                ))
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(config=cfg, rows=tuple(rows), clamped_events=clamped_events)


def _tagged(scheme: str, phase_bits: int | None) -> str:
    return scheme if phase_bits is None else f"{scheme}_{phase_bits}bit"


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.17e}"


def write_csv(result: SweepResult, path) -> None:
    """Write one sweep as CSV: configuration comments, the header, then one
    row per (scheme, grid point) in full double precision."""
    cfg = result.config
    lines = [
        "# active-surface channel-estimation sweep",
        "# dB conventions: beta grid = 20*log10(beta); power grid = dBm; amax grid = 10*log10(a_max^2)",
        f"# m = {cfg.m}, k = {cfg.k}, n = {cfg.n}, d_meters = {cfg.d_meters}",
        f"# sigma1_dbm = {cfg.sigma1_dbm}, sigma2_dbm = {cfg.sigma2_dbm}, ptx_dbm = {cfg.ptx_dbm}",
        f"# a_max_db = {cfg.a_max_db}, phase_bits = {cfg.phase_bits}, ris_noise = {cfg.ris_noise}",
        f"# trials = {cfg.trials}, seed = {cfg.seed} (channel redrawn every trial)",
        f"# clamped_beta_events = {result.clamped_events}",
    ]
    for row in result.rows:
        if row.pred_sum is not None:
            lines.append(
                f"# beta_used: scheme = {row.scheme}, point = {row.sweep_value_db} -> {row.beta_used:.17e}"
            )
    lines.append(CSV_HEADER)
    for row in result.rows:
        lines.append(",".join([
            row.scheme,
            row.sweep_var,
            _fmt(row.sweep_value_db),
            _fmt(row.mse_sum),
            _fmt(row.mse_direct),
            _fmt(row.mse_forward),
            _fmt(row.pred_sum),
            _fmt(row.pred_direct),
            _fmt(row.pred_forward),
            str(row.trials),
            str(row.seed),
        ]))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# invariant-check battery (the `validate` subcommand)
# ---------------------------------------------------------------------------

def _check_dft_orthogonality(cfg, rng):
    f = training.dft_submatrix(cfg.n, cfg.m).values
    gram = f.conj().T @ f
    ok = np.allclose(gram, cfg.n * np.eye(cfg.m), atol=1e-10 * cfg.n)
    ok &= np.allclose(np.abs(f), 1.0, atol=1e-12)
    ok &= np.allclose(np.ones(cfg.n) @ f, 0.0, atol=1e-9 * cfg.n)
    return ok


def _check_plan_identities(cfg, rng):
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    beta = training.optimal_beta(cfg.a_max(), rho, cfg.k, noise)
    ok = True
    for _ in range(10):
        truth = channel.gen_channel(
            channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
        )
        plan = training.proposed_patterns(truth.g[:, 0], beta, cfg.n)
        target = cfg.n * np.diag([1.0] + [beta**2] * cfg.m)
        for ant in range(cfg.k):
            model = estimator.build_model(plan, truth.g[:, ant], noise)
            gram = model.phi.conj().T @ model.phi
            ok &= np.allclose(gram, target, rtol=1e-9, atol=1e-9 * cfg.n * max(beta**2, 1))
            norms = np.einsum("nm,nm->n", model.psi_rows, model.psi_rows.conj()).real
            ok &= np.allclose(norms, cfg.m * beta**2, rtol=1e-9)
    return ok


def _check_beta_range(cfg, rng):
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    ok = True
    for _ in range(100):
        a_max = float(rng.uniform(1.0, 1e4))
        k = int(rng.integers(1, 64))
        beta = training.optimal_beta(a_max, rho, k, noise)
        ok &= 0 < beta <= a_max * math.sqrt(rho) * (1 + 1e-12)
    return ok


def _check_covariance_diagonal(cfg, rng):
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    beta = training.optimal_beta(cfg.a_max(), rho, cfg.k, noise)
    p_tx = dbm_to_watts(cfg.ptx_dbm)
    truth = channel.gen_channel(
        channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
    )
    plan = training.proposed_patterns(truth.g[:, 0], beta, cfg.n)
    model = estimator.build_model(plan, truth.g[:, 0], noise)
    cov = estimator.estimate_covariance(model, p_tx)
    off = cov - np.diag(np.diag(cov))
    scale = (cfg.m * noise.sigma1_sq * beta**2 + noise.sigma2_sq) / (p_tx * cfg.n)
    expected = np.diag([scale] + [scale / beta**2] * cfg.m)
    return np.max(np.abs(off)) < 1e-10 * np.max(np.abs(np.diag(cov))) and np.allclose(
        cov, expected, rtol=1e-9
    )


def _check_noiseless_recovery(cfg, rng):
    zero = NoiseProfile(0.0, 0.0)
    rho = cfg.rho_g()
    p_tx = dbm_to_watts(cfg.ptx_dbm)
    beta = min(0.01, 0.5 * cfg.a_max() * math.sqrt(rho))
    truth = channel.gen_channel(
        channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
    )
    ok = True
    for scheme in training.SCHEMES:
        plan = _build_plan(cfg, scheme, truth.g[:, 0], beta, cfg.a_max())
        obs = estimator.synthesize_rx(truth, plan, zero, p_tx, rng)
        for ant in range(cfg.k):
            model = estimator.build_model(plan, truth.g[:, ant], zero)
            h = estimator.ls_estimate(obs.y[:, ant], model, p_tx)
            ref = np.concatenate([[truth.h_d[ant]], truth.b])
            ok &= np.max(np.abs(h - ref)) < 1e-10 * max(1.0, np.max(np.abs(ref)))
    return ok


def _check_fast_equivalence(cfg, rng):
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    beta = training.optimal_beta(cfg.a_max(), rho, cfg.k, noise)
    p_tx = dbm_to_watts(cfg.ptx_dbm)
    ok = True
    for _ in range(20):
        truth = channel.gen_channel(
            channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
        )
        plan = training.proposed_patterns(truth.g[:, 0], beta, cfg.n)
        obs = estimator.synthesize_rx(truth, plan, noise, p_tx, rng)
        for ant in range(min(cfg.k, 4)):
            model = estimator.build_model(plan, truth.g[:, ant], noise)
            a = estimator.ls_estimate(obs.y[:, ant], model, p_tx)
            b = estimator.fast_ls_estimate(obs.y[:, ant], model, p_tx, beta)
            ok &= np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.max(np.abs(a)))
    return ok


def _check_unbiasedness(cfg, rng):
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    beta = training.optimal_beta(cfg.a_max(), rho, cfg.k, noise)
    p_tx = dbm_to_watts(cfg.ptx_dbm)
    truth = channel.gen_channel(
        channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
    )
    plan = training.proposed_patterns(truth.g[:, 0], beta, cfg.n)
    model = estimator.build_model(plan, truth.g[:, 0], noise)
    ref = np.concatenate([[truth.h_d[0]], truth.b])
    acc = np.zeros(cfg.m + 1, dtype=complex)
    n_mc = max(cfg.trials, 100)
    for _ in range(n_mc):
        obs = estimator.synthesize_rx(truth, plan, noise, p_tx, rng)
        acc += estimator.ls_estimate(obs.y[:, 0], model, p_tx)
    std = np.sqrt(np.diag(estimator.estimate_covariance(model, p_tx)).real)
    return bool(np.all(np.abs(acc / n_mc - ref) < 5 * std / math.sqrt(n_mc) + 1e-12))


def _check_quantizer(cfg, rng):
    noise = cfg.noise_profile()
    rho = cfg.rho_g()
    beta = training.optimal_beta(cfg.a_max(), rho, cfg.k, noise)
    truth = channel.gen_channel(
        channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
    )
    plan = training.proposed_patterns(truth.g[:, 0], beta, cfg.n)
    ok = True
    for bits in (1, 2, 3):
        once = training.quantize_phases(plan, bits)
        twice = training.quantize_phases(once, bits)
        ok &= np.array_equal(once.patterns, twice.patterns)
        ok &= np.allclose(np.abs(once.patterns), np.abs(plan.patterns), rtol=1e-12)
    return ok


def _check_prediction_identity(cfg, rng):
    noise = cfg.noise_profile()
    p_tx = dbm_to_watts(cfg.ptx_dbm)
    ok = True
    for beta in np.geomspace(1e-3, 1.0, 7):
        eps = training.predict_variance_sum(beta, cfg.m, cfg.k, cfg.n, noise, p_tx)
        eps_d, eps_b = training.predict_variance_elements(beta, cfg.m, cfg.k, cfg.n, noise, p_tx)
        ok &= abs(cfg.k * eps_d + cfg.m * eps_b - eps) <= 1e-12 * eps
    return ok


def _check_ris_noise_sharing(cfg, rng):
    if cfg.k < 2:
        return True
    zero_rx = NoiseProfile(cfg.noise_profile().sigma1_sq, 0.0)
    rho = cfg.rho_g()
    beta = training.optimal_beta(cfg.a_max(), rho, cfg.k, noise=cfg.noise_profile())
    truth = channel.gen_channel(
        channel.square_geometry(cfg.m), channel.square_geometry(cfg.k), rho, rng
    )
    silent = channel.ChannelRealization(
        h_d=np.zeros(cfg.k, complex), b=np.zeros(cfg.m, complex), g=truth.g, rho_g=rho
    )
    plan = training.proposed_patterns(truth.g[:, 0], beta, cfg.n)
    n_mc = max(cfg.trials, 500)
    acc = 0.0
    for _ in range(n_mc):
        obs = estimator.synthesize_rx(silent, plan, zero_rx, 1.0, rng, shared_ris_noise=True)
        acc += obs.y[0, 0] * np.conj(obs.y[0, 1])
    rows0 = estimator.build_model(plan, truth.g[:, 0], zero_rx).psi_rows[0]
    rows1 = estimator.build_model(plan, truth.g[:, 1], zero_rx).psi_rows[0]
    expected = zero_rx.sigma1_sq * rows0 @ rows1.conj()
    return abs(acc / n_mc - expected) < 0.1 * abs(expected)


VALIDATION_CHECKS = (
    ("dft submatrix orthogonality", _check_dft_orthogonality),
    ("scaled-DFT plan identities (all antennas)", _check_plan_identities),
    ("optimal beta within amplitude cap", _check_beta_range),
    ("covariance diagonality and closed form", _check_covariance_diagonal),
    ("noiseless exact recovery (all schemes)", _check_noiseless_recovery),
    ("reduced estimator equals whitened LS", _check_fast_equivalence),
    ("LS unbiasedness (Monte Carlo)", _check_unbiasedness),
    ("phase quantizer idempotent, amplitude preserving", _check_quantizer),
    ("per-element variances sum to total", _check_prediction_identity),
    ("surface noise shared across antennas", _check_ris_noise_sharing),
)


def validate(cfg: ExperimentConfig) -> bool:
    """Run the invariant suite, print one pass/fail line per check."""
    all_ok = True
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2**32]))
    for name, check in VALIDATION_CHECKS:
        ok = bool(check(cfg, rng))
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all_ok


# ---------------------------------------------------------------------------
# configuration file and command line
# ---------------------------------------------------------------------------

_INT_KEYS = {"m", "k", "n", "trials", "seed", "phase_bits", "workers"}
_FLOAT_KEYS = {"d_meters", "sigma1_dbm", "sigma2_dbm", "a_max_db", "ptx_dbm"}
_STR_KEYS = {"sweep_variable", "ris_noise"}
_LIST_KEYS = {"schemes", "grid_db"}


def parse_config_file(path) -> dict:
    """Flat `key = value` lines with # comments; lists are comma separated."""
    overrides: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in _INT_KEYS:
                overrides[key] = int(value)
            elif key in _FLOAT_KEYS:
                overrides[key] = float(value)
            elif key in _STR_KEYS:
                overrides[key] = value
            elif key == "schemes":
                overrides[key] = tuple(s.strip() for s in value.split(",") if s.strip())
            elif key == "grid_db":
                overrides[key] = tuple(float(s) for s in value.split(",") if s.strip())
            else:
                raise ValueError(f"{path}:{lineno}: unknown configuration key {key!r}")
    return overrides


_SUBCOMMAND_DEFAULTS = {
    "sweep-beta": dict(
        sweep_variable="beta",
        grid_db=tuple(float(x) for x in range(-30, 1)),
        schemes=(training.SCHEME_PROPOSED, training.SCHEME_CONVENTIONAL_DFT),
        a_max_db=math.inf,
    ),
    "sweep-power": dict(
        sweep_variable="ptx",
        grid_db=tuple(float(x) for x in range(10, 41, 5)),
        schemes=(training.SCHEME_PROPOSED, training.SCHEME_CONVENTIONAL_DFT, training.SCHEME_ONOFF),
        a_max_db=20.0,
    ),
    "sweep-amax": dict(
        sweep_variable="amax",
        grid_db=tuple(float(x) for x in range(20, 61, 4)),
        schemes=(training.SCHEME_PROPOSED,),
        a_max_db=20.0,
    ),
    "validate": dict(),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arisce",
        description="Monte Carlo channel-estimation sweeps for an active reflecting surface",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("sweep-beta", "MSE versus the pattern scaling factor (grid in 20*log10(beta) dB)"),
        ("sweep-power", "MSE versus transmit power (grid in dBm)"),
        ("sweep-amax", "MSE versus the amplitude budget (grid in 10*log10(a_max^2) dB)"),
        ("validate", "run the invariant suite and print pass/fail per check"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
        p.add_argument("--seed", type=int, help="unsigned 64-bit experiment seed")
        p.add_argument("--phase-bits", type=int, dest="phase_bits",
                       help="quantize pattern phases to 2^bits levels at the surface")
        p.add_argument("--workers", type=int, help="parallel trial workers (results identical to serial)")
        if name != "validate":
            p.add_argument("--out", help="output CSV path (default sweep-<variable>.csv)")
            p.add_argument("--schemes", help="comma-separated scheme tags")
            p.add_argument("--grid", help="comma-separated grid values in dB")
            p.add_argument("--ptx-dbm", type=float, dest="ptx_dbm", help="transmit power for non-power sweeps")
            p.add_argument("--a-max-db", type=float, dest="a_max_db", help="amplitude budget a_max^2 in dB")
            p.add_argument("--ris-noise", dest="ris_noise", choices=RIS_NOISE_MODES,
                           help="surface-noise model across antennas (default independent)")
    return parser


def _assemble_config(args) -> ExperimentConfig:
    values = dict(_SUBCOMMAND_DEFAULTS[args.command])
    if args.config:
        values.update(parse_config_file(args.config))
    flag_names = ["trials", "seed", "phase_bits", "workers"]
    if args.command != "validate":
        flag_names += ["ptx_dbm", "a_max_db", "ris_noise"]
        if args.schemes is not None:
            values["schemes"] = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
        if args.grid is not None:
            values["grid_db"] = tuple(float(s) for s in args.grid.split(",") if s.strip())
    for name in flag_names:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    return ExperimentConfig(**values)


def cli(argv=None) -> int:
    """Entry point; exit code 0 on success, 1 on validation failure, 2 on
    usage or configuration errors."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code in (0, None) else 2
    try:
        cfg = _assemble_config(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        return 0 if validate(cfg) else 1
    out = args.out or f"sweep-{cfg.sweep_variable}.csv"
    result = sweep(cfg)
    write_csv(result, out)
    print(f"wrote {len(result.rows)} rows to {out} (clamped beta events: {result.clamped_events})")
    return 0


def main() -> int:
    return cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
