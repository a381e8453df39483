"""Sparse recovery solvers for underdetermined measurement systems.

Basis pursuit denoising (proximal gradient / iterative soft thresholding),
orthogonal matching pursuit, CoSaMP, relevance-vector Bayesian recovery,
and one-bit recovery via binary iterative hard thresholding, plus the sign
quantizer.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedError
from .matrices import MeasurementVector, SensingMatrix

__all__ = [
    "SolverOpts",
    "BayesOpts",
    "RecoveryResult",
    "BayesianResult",
    "SignVector",
    "basis_pursuit",
    "omp",
    "cosamp",
    "bayesian_recover",
    "one_bit_quantize",
    "biht_recover",
]


@dataclass(frozen=True)
class SolverOpts:
    """Generic solver options; None picks the per-solver default."""

    tol: float | None = None
    max_iter: int | None = None
    step: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class BayesOpts:
    tol: float = 1e-6
    max_iter: int = 500
    prune_threshold: float = 1e12
    ridge: float = 1e-10
    # minimum evidence gain to admit a new column; None means ln(n), the
    # usual complexity charge for picking the best of n candidate regressors
    add_penalty: float | None = None
    # known measurement-noise variance; None means estimate it jointly
    noise_variance: float | None = None


@dataclass(frozen=True)
class RecoveryResult:
    x_hat: np.ndarray
    iterations: int
    measurements_used: int
    converged: bool
    recovery_time: float
    objective_trace: np.ndarray


@dataclass(frozen=True)
class BayesianResult:
    base: RecoveryResult
    noise_variance_hat: float
    signal_variance_hat: np.ndarray
    hyper_a: np.ndarray
    hyper_b: float

    @property
    def x_hat(self) -> np.ndarray:
        return self.base.x_hat


@dataclass(frozen=True)
class SignVector:
    signs: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isin(self.signs, (-1.0, 1.0))):
            raise ValueError("sign vector entries must be +-1")

    def __len__(self) -> int:
        return self.signs.size


def _values(y) -> np.ndarray:
    if isinstance(y, MeasurementVector):
        return np.asarray(y.values, dtype=float)
    if isinstance(y, SignVector):
        return np.asarray(y.signs, dtype=float)
    return np.asarray(y, dtype=float)


def _largest_sq_singular_value(A: SensingMatrix, iters: int = 20, seed: int = 0) -> float:
    """Power iteration on A^T A for the squared spectral norm."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.n)
    v /= np.linalg.norm(v)
    est = 1.0
    for _ in range(iters):
        w = A.rmatvec(A.matvec(v))
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 1.0
        est = nrm
        v = w / nrm
    return est


def _soft(u: np.ndarray, thresh: float) -> np.ndarray:
    return np.sign(u) * np.maximum(np.abs(u) - thresh, 0.0)


def basis_pursuit(
    y, A: SensingMatrix, z: float = 0.0, opts: SolverOpts = SolverOpts()
) -> RecoveryResult:
    """Minimize ||y - Ax||_2^2 + z ||x||_1 by proximal gradient iteration.

    Step size 1/L with L the largest squared singular value of A (power
    iteration, 20 rounds, padded 5% for safety). Stops when the relative
    objective change drops below opts.tol (default 1e-8) or after
    opts.max_iter iterations (default 5000). The objective trace is
    nonincreasing.
    """
    if z < 0:
        raise ValueError("z must be >= 0")
    yv = _values(y)
    if yv.shape != (A.m,):
        raise ValueError("measurement length does not match A.m")
    tol = 1e-8 if opts.tol is None else opts.tol
    max_iter = 5000 if opts.max_iter is None else opts.max_iter
    t0 = time.perf_counter()
    # minimizing ||y-Ax||^2 + z|x|_1 is the half-scaled problem
    # 0.5||y-Ax||^2 + (z/2)|x|_1 for gradient purposes
    lips = 1.05 * _largest_sq_singular_value(A, seed=opts.seed)
    step = (1.0 / lips) if opts.step is None else opts.step
    x = np.zeros(A.n)
    resid = yv.copy()
    obj = float(resid @ resid)
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = A.rmatvec(resid)  # gradient of 0.5||y-Ax||^2 is -A^T r
        x_new = _soft(x + step * grad, step * z / 2.0)
        resid_new = yv - A.matvec(x_new)
        obj_new = float(resid_new @ resid_new) + z * float(np.abs(x_new).sum())
        if obj_new > obj:
            # step overshoot from an underestimated L; keep the previous iterate
            converged = True
            break
        x, resid = x_new, resid_new
        trace.append(obj_new)
        if obj > 0 and (obj - obj_new) <= tol * max(obj, 1e-30):
            obj = obj_new
            converged = True
            break
        obj = obj_new
    return RecoveryResult(
        x_hat=x,
        iterations=it,
        measurements_used=A.m,
        converged=converged,
        recovery_time=time.perf_counter() - t0,
        objective_trace=np.asarray(trace),
    )


def omp(y, A: SensingMatrix, k_or_tol) -> RecoveryResult:
    """Orthogonal matching pursuit with least-squares re-fit per iteration.

    k_or_tol: an int caps the support size; a float stops when the residual
    norm falls below tol * ||y||. The residual norm never increases.
    """
    yv = _values(y)
    if yv.shape != (A.m,):
        raise ValueError("measurement length does not match A.m")
    if isinstance(k_or_tol, (int, np.integer)) and not isinstance(k_or_tol, bool):
        k_max = int(k_or_tol)
        tol = 0.0
        if not 1 <= k_max <= A.m:
            raise ValueError("target sparsity must satisfy 1 <= k <= m")
    else:
        k_max = A.m
        tol = float(k_or_tol)
        if tol <= 0:
            raise ValueError("residual tolerance must be positive")
    t0 = time.perf_counter()
    dense = A.to_dense()
    col_norms = np.linalg.norm(dense, axis=0)
    col_norms[col_norms == 0.0] = 1.0
    support: list[int] = []
    x = np.zeros(A.n)
    resid = yv.copy()
    norm_y = float(np.linalg.norm(yv))
    trace = [float(np.linalg.norm(resid))]
    it = 0
    while len(support) < k_max:
        if trace[-1] <= max(tol * norm_y, 1e-14 * max(norm_y, 1.0)):
            break
        it += 1
        corr = np.abs(dense.T @ resid) / col_norms
        corr[support] = -1.0
        j = int(np.argmax(corr))
        support.append(j)
        sub = dense[:, support]
        coef, _, rank, _ = np.linalg.lstsq(sub, yv, rcond=None)
        if rank < len(support):
            warnings.warn("omp: selected columns are linearly dependent; "
                          "continuing with the pseudo-inverse fit", RuntimeWarning)
        resid = yv - sub @ coef
        trace.append(float(np.linalg.norm(resid)))
        x = np.zeros(A.n)
        x[support] = coef
    return RecoveryResult(
        x_hat=x,
        iterations=it,
        measurements_used=A.m,
        converged=trace[-1] <= max(tol * norm_y, 1e-8 * max(norm_y, 1.0)),
        recovery_time=time.perf_counter() - t0,
        objective_trace=np.asarray(trace),
    )


def cosamp(
    y, A: SensingMatrix, k: int, opts: SolverOpts = SolverOpts()
) -> RecoveryResult:
    """CoSaMP: merge the 2k strongest proxy indices, least-squares, prune to k."""
    yv = _values(y)
    if yv.shape != (A.m,):
        raise ValueError("measurement length does not match A.m")
    if not 1 <= k <= A.n:
        raise ValueError("need 1 <= k <= n")
    if k > A.m // 2:
        warnings.warn(f"cosamp: k={k} above the m/2 working regime (m={A.m})",
                      RuntimeWarning)
    tol = 1e-8 if opts.tol is None else opts.tol
    max_iter = 100 if opts.max_iter is None else opts.max_iter
    t0 = time.perf_counter()
    dense = A.to_dense()
    x = np.zeros(A.n)
    resid = yv.copy()
    norm_y = float(np.linalg.norm(yv))
    trace = [float(np.linalg.norm(resid))]
    converged = trace[-1] <= tol * max(norm_y, 1.0)
    it = 0
    while not converged and it < max_iter:
        it += 1
        proxy = np.abs(dense.T @ resid)
        candidates = np.argpartition(proxy, -min(2 * k, A.n))[-min(2 * k, A.n):]
        merged = np.union1d(candidates, np.flatnonzero(x))
        sub = dense[:, merged]
        coef, _, rank, _ = np.linalg.lstsq(sub, yv, rcond=None)
        if rank < merged.size:
            warnings.warn("cosamp: merged columns are linearly dependent; "
                          "continuing with the pseudo-inverse fit", RuntimeWarning)
        keep = np.argsort(np.abs(coef))[-k:]
        x = np.zeros(A.n)
        x[merged[keep]] = coef[keep]
        resid = yv - dense @ x
        rnorm = float(np.linalg.norm(resid))
        if rnorm <= tol * max(norm_y, 1.0):
            converged = True
        if rnorm >= trace[-1] * (1.0 - 1e-12) and it > 1:
            # no further progress
            trace.append(min(rnorm, trace[-1]))
            break
        trace.append(rnorm)
    return RecoveryResult(
        x_hat=x,
        iterations=it,
        measurements_used=A.m,
        converged=converged,
        recovery_time=time.perf_counter() - t0,
        objective_trace=np.asarray(trace),
    )


def bayesian_recover(
    y, A: SensingMatrix, opts: BayesOpts = BayesOpts()
) -> BayesianResult:
    """Sparse Bayesian recovery by grow-then-prune evidence maximization.

    Phase 1 grows an active set greedily: each iteration scores every
    column by its sparsity and quality factors (s_i, q_i) under the current
    posterior and applies whichever single action raises the marginal
    likelihood most (add, re-estimate a precision, or delete). Phase 2
    prunes: any active column whose exclusive evidence falls short of
    opts.add_penalty (default ln n, the complexity charge for picking the
    best of n candidate regressors) is removed, re-estimating the noise
    after each removal so an overfit low-SNR model unwinds. Phase 3
    polishes with the same action loop, with additions now required to
    clear the penalty.

    Posterior: Sigma = (b Phi^T Phi + diag(a))^-1 over the active set,
    mu = b Sigma Phi^T y; the noise precision b is re-estimated as
    (m - |S| + sum_j a_j Sigma_jj) / ||y - Phi mu||^2 every iteration,
    floored during selection so the modeled SNR never exceeds 20 dB, then
    re-estimated without the floor for the reported posterior. When
    opts.noise_variance is given, b is held fixed at its reciprocal
    instead. Inactive coefficients are exact zeros. The objective trace
    records the best penalized negative evidence seen so far and is
    nonincreasing.
    """
    yv = _values(y)
    if yv.shape != (A.m,):
        raise ValueError("measurement length does not match A.m")
    t0 = time.perf_counter()
    n, m = A.n, A.m
    norm_y2 = float(yv @ yv)

    def empty_result(iters: int, trace: list) -> BayesianResult:
        base = RecoveryResult(np.zeros(n), iters, m, True,
                              time.perf_counter() - t0,
                              np.asarray(trace if trace else [0.0]))
        nv = float(norm_y2 / m) if norm_y2 > 0 else 1e-12
        return BayesianResult(base, noise_variance_hat=nv,
                              signal_variance_hat=np.zeros(n),
                              hyper_a=np.full(n, np.inf),
                              hyper_b=float(1.0 / nv))

    if norm_y2 == 0.0:
        return empty_result(0, [])
    dense = A.to_dense()
    colsq = np.sum(dense**2, axis=0)
    usable = colsq > 0.0
    phi_y = dense.T @ yv
    b_known = None
    if opts.noise_variance is not None:
        b_known = float(np.clip(1.0 / max(opts.noise_variance, 1e-300),
                                1e-12, 1e12))
    b = m / norm_y2 if b_known is None else b_known
    add_bar = math.log(n) if opts.add_penalty is None else float(opts.add_penalty)

    # seed with the single column that explains the data best; if none beats
    # the all-noise model the empty solution is already optimal
    with np.errstate(divide="ignore", invalid="ignore"):
        quality = np.where(usable, phi_y**2 / np.maximum(colsq, 1e-300),
                           -np.inf)
    first = int(np.argmax(quality))
    excess = quality[first] - 1.0 / b
    if excess <= 0.0:
        return empty_result(0, [])
    active = [first]
    a_act = np.array([colsq[first] / excess])

    trace: list = []
    total_gain = 0.0
    iters = 0

    def push_trace() -> None:
        j = -(total_gain - add_bar * len(active))
        trace.append(min(trace[-1], j) if trace else j)

    # noise floor: the modeled SNR is capped at 20 dB during selection;
    # without it the evidence update absorbs noise into spurious columns
    # once the residual gets small, and the noise estimate runs away
    b_cap = 100.0 * m / norm_y2

    def posterior(floor: bool = True):
        nonlocal b
        phi_s = dense[:, active]
        hess = b * (phi_s.T @ phi_s) + np.diag(a_act)
        sigma = _stable_inverse(hess, opts.ridge)
        mu = b * (sigma @ (phi_s.T @ yv))
        if b_known is None:
            resid = yv - phi_s @ mu
            rss = float(resid @ resid)
            gamma_sum = float(np.sum(a_act * np.diag(sigma)))
            b = float(np.clip((m - len(active) + gamma_sum)
                              / max(rss, 1e-300), 1e-12, 1e12))
            if floor:
                b = min(b, b_cap)
        return phi_s, sigma, mu

    def factors(phi_s, sigma):
        """Sparsity/quality factors (S_i, Q_i) for every column, plus the
        exclusive versions (s_i, q_i) for columns already in the model."""
        proj = dense.T @ (phi_s @ sigma)
        cross = dense.T @ phi_s
        big_s = b * colsq - b * b * np.sum(proj * cross, axis=1)
        big_q = b * phi_y - b * b * (proj @ (phi_s.T @ yv))
        s_fac = big_s.copy()
        q_fac = big_q.copy()
        denom = a_act - big_s[active]
        safe = np.abs(denom) > 1e-12
        s_fac[active] = np.where(safe, a_act * big_s[active] / denom, np.inf)
        q_fac[active] = np.where(safe, a_act * big_q[active] / denom, 0.0)
        return big_s, big_q, s_fac, q_fac

    def action_step(barred: bool) -> float:
        """One greedy action; returns its evidence gain (-inf if converged)."""
        nonlocal a_act, total_gain
        phi_s, sigma, _ = posterior()
        big_s, big_q, s_fac, q_fac = factors(phi_s, sigma)
        in_model = np.zeros(n, dtype=bool)
        in_model[active] = True
        a_full = np.full(n, np.inf)
        a_full[active] = a_act
        theta = q_fac**2 - s_fac
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            pos_s = np.maximum(big_s, 1e-300)
            gain_add = np.where(
                usable & ~in_model & (theta > 0) & (big_s > 0),
                (big_q**2 - big_s) / pos_s
                + np.log(pos_s / np.maximum(big_q**2, 1e-300)),
                -np.inf)
            if barred:
                gain_add = np.where(gain_add > add_bar, gain_add, -np.inf)
            new_a = np.where(theta > 0,
                             s_fac**2 / np.maximum(theta, 1e-300), np.inf)
            delta_inv = 1.0 / new_a - 1.0 / a_full
            log_arg = np.maximum(1.0 + big_s * delta_inv, 1e-12)
            gain_re = np.where(
                in_model & (theta > 0) & np.isfinite(delta_inv)
                & (np.abs(delta_inv) > 1e-300),
                big_q**2 * delta_inv / log_arg - np.log(log_arg),
                -np.inf)
            gain_del = np.where(
                in_model & (theta <= 0) & (a_full > big_s),
                big_q**2 / np.where(a_full > big_s, big_s - a_full, -1.0)
                - np.log1p(-np.clip(big_s / np.where(a_full > 0, a_full, 1.0),
                                    -np.inf, 1 - 1e-12)),
                -np.inf)
        if len(active) <= 1:
            gain_del[:] = -np.inf
        gains = np.vstack([gain_add, gain_re, gain_del])
        gains[~np.isfinite(gains)] = -np.inf
        action, col = np.unravel_index(int(np.argmax(gains)), gains.shape)
        best = float(gains[action, col])
        if not np.isfinite(best) or best <= opts.tol:
            return -np.inf
        if action == 0:
            active.append(int(col))
            a_act = np.append(a_act, min(new_a[col], opts.prune_threshold))
        elif action == 1:
            a_act[active.index(int(col))] = min(new_a[col],
                                                opts.prune_threshold)
        else:
            pos = active.index(int(col))
            active.pop(pos)
            a_act = np.delete(a_act, pos)
        total_gain += best
        push_trace()
        return best

    converged = False
    for _ in range(opts.max_iter):
        iters += 1
        if action_step(barred=False) == -np.inf:
            converged = True
            break

    # backward elimination: drop the weakest column while its exclusive
    # evidence cannot pay the admission bar; the noise estimate recovers
    # as each deletion returns its share of the residual
    while active:
        iters += 1
        phi_s, sigma, _ = posterior()
        _, _, s_fac, q_fac = factors(phi_s, sigma)
        z2 = np.full(len(active), np.inf)
        for j, col in enumerate(active):
            s_j, q_j = s_fac[col], q_fac[col]
            if np.isfinite(s_j) and s_j > 0:
                r = q_j * q_j / s_j
                z2[j] = r - 1.0 - math.log(r) if r > 1.0 else 0.0
        worst = int(np.argmin(z2))
        if z2[worst] >= add_bar:
            break
        total_gain -= z2[worst]
        active.pop(worst)
        a_act = np.delete(a_act, worst)
        push_trace()
    if not active:
        return empty_result(iters, trace)

    for _ in range(opts.max_iter):
        iters += 1
        if action_step(barred=True) == -np.inf:
            break

    # one unfloored noise re-estimate, then a last posterior pass with it:
    # debiases the kept coefficients without feeding the uncapped estimate
    # back into model selection
    posterior(floor=False)
    phi_s, sigma, mu = posterior(floor=False)
    mu_full = np.zeros(n)
    sigma_diag_full = np.zeros(n)
    mu_full[active] = mu
    sigma_diag_full[active] = np.diag(sigma)
    hyper_a = np.full(n, np.inf)
    hyper_a[active] = a_act
    base = RecoveryResult(
        x_hat=mu_full,
        iterations=iters,
        measurements_used=m,
        converged=converged,
        recovery_time=time.perf_counter() - t0,
        objective_trace=np.asarray(trace if trace else [0.0]),
    )
    return BayesianResult(
        base=base,
        noise_variance_hat=float(max(1.0 / b, 1e-300)),
        signal_variance_hat=np.maximum(sigma_diag_full, 0.0),
        hyper_a=hyper_a,
        hyper_b=float(b),
    )


def _stable_inverse(hess: np.ndarray, ridge: float) -> np.ndarray:
    """Invert an SPD matrix, retrying with growing ridge regularization."""
    bump = 0.0
    scale = float(np.trace(hess)) / max(hess.shape[0], 1)
    for attempt in range(4):
        try:
            low = np.linalg.cholesky(hess + bump * np.eye(hess.shape[0]))
            inv_low = np.linalg.solve(low, np.eye(hess.shape[0]))
            return inv_low.T @ inv_low
        except np.linalg.LinAlgError:
            bump = ridge * scale * (10.0 ** attempt) if bump == 0.0 else bump * 100.0
    raise IllConditionedError("posterior covariance inversion failed after "
                              "ridge-stabilized retries")


def one_bit_quantize(y) -> SignVector:
    """Keep only measurement signs; the zero sample quantizes to +1."""
    yv = _values(y)
    if yv.size < 1:
        raise ValueError("need at least one measurement")
    signs = np.where(yv >= 0.0, 1.0, -1.0)
    return SignVector(signs=signs)


def _hard_threshold(x: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(x)
    if k >= x.size:
        return x.copy()
    keep = np.argpartition(np.abs(x), -k)[-k:]
    out[keep] = x[keep]
    return out


# multi-start schedule for biht_recover; restart diversity comes from sign
# dithering and the refinement stage perturbs around the first-stage average
BIHT_RESTARTS = 12
BIHT_REFINE_RESTARTS = 8
BIHT_DITHER_FLIP = 0.08
BIHT_REFINE_SPREAD = 0.5


def biht_recover(
    signs, A: SensingMatrix, k: int, opts: SolverOpts = SolverOpts()
) -> RecoveryResult:
    """Binary iterative hard thresholding from measurement signs only.

    Each inner run takes gradient steps on the one-sided sign-consistency
    loss (base step 1/m, folded with the matrix column scale so behaviour is
    invariant to the matrix normalization), hard-thresholds to the k largest
    magnitudes, and keeps the most consistent iterate. With only sign
    information the set of consistent k-sparse directions is wide, and a
    single descent lands on one of its edges. So: several sign-dithered
    restarts are run and their consistent endpoints averaged, the average is
    refined by a second round of perturbed restarts, and a final low-gain
    descent pulls the averaged point back onto a fully consistent
    neighbour. Output is scaled to unit l2 norm; the measurement magnitude
    is unrecoverable from signs alone. Deterministic given (signs, A, k,
    opts.seed).
    """
    s = signs.signs if isinstance(signs, SignVector) else np.asarray(signs, dtype=float)
    if s.shape != (A.m,):
        raise ValueError("sign vector length does not match A.m")
    if not np.all(np.isin(s, (-1.0, 1.0))):
        raise ValueError("signs must be +-1")
    if not 1 <= k <= A.n:
        raise ValueError("need 1 <= k <= n")
    max_iter = 300 if opts.max_iter is None else opts.max_iter
    step = (1.0 / A.m) if opts.step is None else opts.step
    col_scale = float(np.mean(A.column_norms()))
    if col_scale <= 0.0:
        raise IllConditionedError("sensing matrix has vanishing columns")
    base = step * math.sqrt(A.m) / col_scale
    t0 = time.perf_counter()

    def inconsistency(v: np.ndarray) -> int:
        return int(np.count_nonzero(s * A.matvec(v) < 0))

    def unit_topk(v: np.ndarray) -> np.ndarray | None:
        v = _hard_threshold(v, k)
        nrm = float(np.linalg.norm(v))
        return None if nrm == 0.0 else v / nrm

    trace: list[float] = []
    running_best = [None, np.inf]  # chronological best across every descent
    total_iters = 0

    def descend(x0: np.ndarray, gain_mult: float, iters: int) -> tuple[np.ndarray, int]:
        nonlocal total_iters
        x = x0.copy()
        best, best_bad = x.copy(), inconsistency(x)
        if best_bad < running_best[1]:
            running_best[0], running_best[1] = best.copy(), best_bad
        trace.append(float(running_best[1]))
        for _ in range(iters):
            if best_bad == 0:
                break
            r = s - np.where(A.matvec(x) >= 0.0, 1.0, -1.0)
            x = _hard_threshold(x + 0.5 * base * gain_mult * A.rmatvec(r), k)
            total_iters += 1
            bad = inconsistency(x)
            if bad < best_bad:
                best, best_bad = x.copy(), bad
            if best_bad < running_best[1]:
                running_best[0], running_best[1] = best.copy(), best_bad
            trace.append(float(running_best[1]))
        return best, best_bad

    x0 = unit_topk(A.rmatvec(s))
    if x0 is None:
        raise IllConditionedError("degenerate initialization: A^T s vanished")
    init_bad = inconsistency(x0)
    rng = np.random.default_rng(opts.seed)

    consistent: list[np.ndarray] = []
    for rr in range(BIHT_RESTARTS):
        if rr == 0:
            xi = x0
        else:
            dithered = s.copy()
            flips = rng.random(A.m) < BIHT_DITHER_FLIP
            dithered[flips] *= -1.0
            xi = unit_topk(A.rmatvec(dithered))
            if xi is None:
                continue
        sol, bad = descend(xi, 2.0, max_iter)
        if bad == 0:
            consistent.append(sol / float(np.linalg.norm(sol)))

    pool = consistent if consistent else [running_best[0]]
    center = unit_topk(np.mean(pool, axis=0))
    if center is None:
        center = pool[0] / float(np.linalg.norm(pool[0]))

    refined: list[np.ndarray] = [center]
    for _ in range(BIHT_REFINE_RESTARTS):
        pert = center + (BIHT_REFINE_SPREAD / math.sqrt(A.n)) * rng.standard_normal(A.n)
        xi = unit_topk(pert)
        if xi is None:
            continue
        sol, bad = descend(xi, 2.0, max_iter)
        if bad == 0:
            refined.append(sol / float(np.linalg.norm(sol)))
    center = unit_topk(np.mean(refined, axis=0)) if len(refined) > 1 else center

    final, final_bad = descend(center, 0.5, max_iter // 2)
    if final_bad > running_best[1]:
        final, final_bad = running_best[0], int(running_best[1])
    if final_bad > init_bad:  # never return worse consistency than the init
        final, final_bad = x0, init_bad
    x_hat = final / float(np.linalg.norm(final))
    return RecoveryResult(
        x_hat=x_hat,
        iterations=total_iters,
        measurements_used=A.m,
        converged=final_bad == 0,
        recovery_time=time.perf_counter() - t0,
        objective_trace=np.asarray(trace),
    )
