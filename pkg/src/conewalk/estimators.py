"""Estimators for the top Lyapunov exponent, coupling decay, the
asymptotic variance (three independent routes), aperiodicity evidence,
and moment regularity of the invariant measure.

All estimators are replica-parallel with deterministic seed splitting;
vectorized batches draw from one derived stream per estimator, so a
fixed (spec, seed, sizes) triple always reproduces the same numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .measures import MeasureSpec, sample_batch
from .posmat import AllowableMatrix, spectral_radius
from .simplex import barycenter, point_coords
from .walk import _batch_contraction, backward_invariant_batch, detect_contraction

__all__ = [
    "EstimateWithError",
    "LyapunovResult",
    "estimate_lyapunov",
    "CouplingCurve",
    "coupling_decay",
    "fit_geometric_envelope",
    "estimate_variance_direct",
    "SeriesVariance",
    "estimate_variance_series",
    "PsiEstimate",
    "estimate_psi",
    "MartingaleVariance",
    "variance_via_martingale",
    "AperiodicityReport",
    "aperiodicity_report",
    "invariant_regularity",
    "MomentSanity",
    "moment_sanity",
    "BatchedProducts",
]


@dataclass(frozen=True)
class EstimateWithError:
    """A Monte Carlo estimate with its standard error over replicas."""

    value: float
    std_error: float
    replicas: int
    method: str

    def agrees_with(self, other: "EstimateWithError", k: float = 3.0) -> bool:
        """Whether the two estimates differ by at most k combined errors."""
        band = k * float(np.hypot(self.std_error, other.std_error))
        return abs(self.value - other.value) <= band


def _mean_with_error(samples: np.ndarray, method: str) -> EstimateWithError:
    samples = np.asarray(samples, dtype=float)
    r = samples.size
    se = float(samples.std(ddof=1) / np.sqrt(r)) if r > 1 else 0.0
    return EstimateWithError(float(samples.mean()), se, r, method)


def _variance_with_error(samples: np.ndarray, scale: float, method: str) -> EstimateWithError:
    """Sample variance (scaled) with a moment-based standard error."""
    x = np.asarray(samples, dtype=float)
    r = x.size
    m = x.mean()
    dev2 = (x - m) ** 2
    var = dev2.sum() / (r - 1)
    se = float(np.sqrt(max(np.mean((dev2 - dev2.mean()) ** 2), 0.0) / r))
    return EstimateWithError(var * scale, se * scale, r, method)


# ---------------------------------------------------------------------
# Vectorized forward products
# ---------------------------------------------------------------------


class BatchedProducts:
    """Forward products A_n = Y_n ... Y_1 for a whole batch of replicas.

    State is the op-norm-normalized product per replica plus the log
    scale; every spectator functional of A_n is read off the pair.
    """

    def __init__(self, spec: MeasureSpec, seed: int, replicas: int, key: int = 0):
        self.spec = spec
        self.rng = rngmod.derived_stream(seed, 0xF0, key)
        self.replicas = int(replicas)
        d = spec.d
        self.P = np.broadcast_to(np.eye(d), (self.replicas, d, d)).copy()
        self.log_scale = np.zeros(self.replicas)
        self.n = 0

    def step(self) -> np.ndarray:
        """Advance all replicas one draw; returns the (R, d, d) draws."""
        mats = sample_batch(self.spec, self.rng, self.replicas)
        self.P = np.matmul(mats, self.P)
        scale = self.P.sum(axis=1).max(axis=1)
        self.P /= scale[:, None, None]
        self.log_scale += np.log(scale)
        self.n += 1
        return mats

    def run(self, n: int) -> None:
        for _ in range(n):
            self.step()

    # -- functionals of A_n ------------------------------------------------

    def column_sums(self) -> np.ndarray:
        return self.P.sum(axis=1)

    def log_norm(self) -> np.ndarray:
        return self.log_scale + np.log(self.column_sums().max(axis=1))

    def log_v(self) -> np.ndarray:
        cs = self.column_sums()
        return self.log_scale + np.log(np.maximum(cs.min(axis=1), 5e-324))

    def sigma(self, x) -> np.ndarray:
        xc = point_coords(x)
        return self.log_scale + np.log(np.matmul(self.P, xc).sum(axis=1))

    def log_min_entry(self) -> np.ndarray:
        mins = self.P.reshape(self.replicas, -1).min(axis=1)
        with np.errstate(divide="ignore"):
            return self.log_scale + np.log(mins)

    def log_max_entry(self) -> np.ndarray:
        return self.log_scale + np.log(self.P.reshape(self.replicas, -1).max(axis=1))

    def log_coeff(self, x, y) -> np.ndarray:
        xc, yc = point_coords(x), point_coords(y)
        vals = np.einsum("i,rij,j->r", yc, self.P, xc)
        with np.errstate(divide="ignore"):
            return self.log_scale + np.log(vals)

    def log_kappa(self, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
        """Batched power iteration on the normalized products.

        Paths that fail to settle (possible for non-primitive products)
        fall back to a dense eigensolver individually.
        """
        R, d = self.replicas, self.spec.d
        x = np.full((R, d), 1.0 / d)
        lam = np.ones(R)
        settled = np.zeros(R, dtype=bool)
        for _ in range(max_iter):
            y = np.einsum("rij,rj->ri", self.P, x)
            new = y.sum(axis=1)
            y /= new[:, None]
            settled = (np.abs(y - x).sum(axis=1) <= tol) \
                & (np.abs(new - lam) <= tol * np.maximum(1.0, new))
            x, lam = y, new
            if settled.all():
                break
        if not settled.all():
            for i in np.flatnonzero(~settled):
                lam[i] = np.max(np.abs(np.linalg.eigvals(self.P[i])))
        return self.log_scale + np.log(lam)


# ---------------------------------------------------------------------
# Lyapunov exponent
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovResult:
    """Lyapunov estimate plus the norm/v spread convergence diagnostic.

    ``spread`` is the mean over replicas of (log|A_n| - log v(A_n)) / n;
    cocycles from any two starts differ pathwise by at most that gap, so
    a small spread certifies start-independence of the estimate.
    """

    estimate: EstimateWithError
    spread: float
    n: int


def estimate_lyapunov(spec: MeasureSpec, n: int, replicas: int,
                      start=None, seed: int = 0) -> LyapunovResult:
    """Mean of sigma(A_n, x)/n over replicas."""
    if n < 1 or replicas < 1:
        raise ValueError("n and replicas must be positive")
    x = point_coords(start) if start is not None else barycenter(spec.d).coords
    batch = BatchedProducts(spec, seed, replicas)
    batch.run(n)
    est = _mean_with_error(batch.sigma(x) / n, "lyapunov")
    spread = float(np.mean(batch.log_norm() - batch.log_v()) / n)
    return LyapunovResult(estimate=est, spread=spread, n=n)


# ---------------------------------------------------------------------
# Coupling decay
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingCurve:
    """Decay of the start-point sensitivity of cocycle increments.

    values[i] is the p-th moment, over replicas, of the exact sup over
    start pairs of the step-n_grid[i] increment discrepancy.  The sup is
    exact because the increment is the log of a ratio of two linear
    functionals of the start, so its extrema over the simplex sit at
    vertices.  ``a_hat`` is the fitted geometric rate with its R^2;
    ``max_violation`` is the worst pathwise excess over the contraction
    bound (4 + 2 log L(Y_n)) * prod c(blocks), None when not checked.
    """

    p: float
    n_grid: tuple[int, ...]
    values: tuple[float, ...]
    a_hat: float | None
    r_squared: float | None
    max_violation: float | None


def coupling_decay(spec: MeasureSpec, p: float, n_grid, replicas: int,
                   seed: int = 0, pathwise_check: bool = True,
                   block_len: int = 1) -> CouplingCurve:
    """Estimate the increment-coupling moments over a grid of steps."""
    grid = sorted(int(n) for n in n_grid)
    if grid[0] < 1:
        raise ValueError("grid steps must be >= 1")
    n_max = grid[-1]
    batch = BatchedProducts(spec, seed, replicas)
    d = spec.d
    values = {}
    max_violation = None
    cert = np.ones(replicas)
    blk = np.broadcast_to(np.eye(d), (replicas, d, d)).copy()
    blk_len = 0
    prev_log_cs = batch.log_scale[:, None] + np.log(batch.column_sums())
    for n in range(1, n_max + 1):
        cert_before = cert.copy()
        mats = batch.step()
        log_cs = batch.log_scale[:, None] + np.log(np.maximum(
            batch.column_sums(), 5e-324))
        ratios = log_cs - prev_log_cs
        spread = ratios.max(axis=1) - ratios.min(axis=1)
        prev_log_cs = log_cs
        if n in grid:
            values[n] = float(np.mean(spread ** p))
        if pathwise_check:
            cs = mats.sum(axis=1)
            log_l = np.log(cs.max(axis=1)) - np.log(cs.min(axis=1))
            bound = (4.0 + 2.0 * log_l) * cert_before
            excess = float(np.max(spread - bound))
            max_violation = excess if max_violation is None else max(max_violation, excess)
            blk = np.matmul(mats, blk)
            blk_len += 1
            if blk_len == block_len:
                cert *= _batch_contraction(blk)
                blk = np.broadcast_to(np.eye(d), (replicas, d, d)).copy()
                blk_len = 0
    vals = tuple(values[n] for n in grid)
    a_hat, r2 = _fit_rate(grid, vals)
    return CouplingCurve(p=float(p), n_grid=tuple(grid), values=vals,
                         a_hat=a_hat, r_squared=r2,
                         max_violation=max_violation if pathwise_check else None)


def _fit_rate(grid, values):
    ns = np.asarray(grid, dtype=float)
    vals = np.asarray(values, dtype=float)
    keep = vals > 0
    if keep.sum() < 2:
        return None, None
    x, y = ns[keep], np.log(vals[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(slope)), r2


def fit_geometric_envelope(ns, values) -> tuple[float, float]:
    """Geometric majorant amp * rate**n of nonnegative values on ns.

    The rate comes from a log-linear fit over positive values (clipped
    below 1), and the amplitude is raised until every value is covered.
    """
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(values, dtype=float)
    keep = vals > 0
    if keep.sum() == 0:
        return 0.0, 0.5
    if keep.sum() == 1:
        rate = 0.5
    else:
        slope, _ = np.polyfit(ns[keep], np.log(vals[keep]), 1)
        rate = float(np.clip(np.exp(slope), 1e-6, 1.0 - 1e-9))
    amp = float(np.max(vals / rate ** ns))
    return amp, rate


def envelope_tail(amp: float, rate: float, n: int) -> float:
    """Sum of the envelope beyond level n."""
    if amp == 0.0:
        return 0.0
    return amp * rate ** (n + 1) / (1.0 - rate)


# ---------------------------------------------------------------------
# Asymptotic variance, route 1: direct scaling
# ---------------------------------------------------------------------


def estimate_variance_direct(spec: MeasureSpec, n: int, replicas: int,
                             start=None, seed: int = 0,
                             functionals=("sigma", "norm", "v", "kappa"),
                             ) -> dict[str, EstimateWithError]:
    """Sample variance of the centered functionals of A_n, divided by n.

    All four identifications (cocycle from a fixed start, log norm,
    log v, log spectral radius) converge to the same limit; they are
    reported together so their agreement can be checked.
    """
    x = point_coords(start) if start is not None else barycenter(spec.d).coords
    batch = BatchedProducts(spec, seed, replicas)
    batch.run(n)
    out = {}
    pulls = {
        "sigma": lambda: batch.sigma(x),
        "norm": batch.log_norm,
        "v": batch.log_v,
        "kappa": batch.log_kappa,
    }
    for name in functionals:
        out[name] = _variance_with_error(pulls[name](), 1.0 / n, f"direct-{name}")
    return out


# ---------------------------------------------------------------------
# Asymptotic variance, route 2: autocovariance series
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesVariance:
    """Truncated stationary autocovariance series for the variance.

    The per-replica statistic is (X_1 - lam)^2 + 2 sum_k (X_1 - lam)(X_k - lam)
    over a path of centered increments started from an invariant-measure
    sample; the truncation tail is bounded by the coupling envelope.
    """

    estimate: EstimateWithError
    tail_bound: float
    lag_max: int


def estimate_variance_series(spec: MeasureSpec, n_lag_max: int, replicas: int,
                             lambda_hat: float, seed: int = 0,
                             w0_tol: float = 1e-8,
                             envelope: tuple[float, float] | None = None,
                             ) -> SeriesVariance:
    """Monte Carlo for the stationary-increment autocovariance series."""
    w0, _, _ = backward_invariant_batch(spec, seed, w0_tol, replicas)
    stream = rngmod.derived_stream(seed, 0x5E)
    x = w0.copy()
    acc = np.zeros(replicas)
    first = None
    abs_first = None
    for k in range(1, n_lag_max + 1):
        mats = sample_batch(spec, stream, replicas)
        img = np.einsum("rij,rj->ri", mats, x)
        norms = img.sum(axis=1)
        inc = np.log(norms) - lambda_hat
        x = img / norms[:, None]
        if k == 1:
            first = inc
            abs_first = float(np.mean(np.abs(inc)))
            acc += inc * inc
        else:
            acc += 2.0 * first * inc
    est = _mean_with_error(acc, "series")
    if envelope is None:
        tail = float("nan")
    else:
        tail = 2.0 * abs_first * envelope_tail(*envelope, n_lag_max - 1)
    return SeriesVariance(estimate=est, tail_bound=tail, lag_max=n_lag_max)


# ---------------------------------------------------------------------
# Asymptotic variance, route 3: martingale differences
# ---------------------------------------------------------------------


@dataclass
class PsiEstimate:
    """Truncated corrector sum psi_hat(x) = sum_{level<=N} (mean increment - lam).

    ``evaluate`` runs ``inner_size`` fresh paths from each query point
    (paths shared across a batch of points) and returns the estimate with
    its inner Monte Carlo variance.  Level contributions are dominated by
    the fitted geometric envelope, whose tail beyond N is ``tail_bound``.
    """

    spec: MeasureSpec
    truncation: int
    inner_size: int
    lambda_hat: float
    envelope: tuple[float, float]
    tail_bound: float
    level_contributions: tuple[float, ...]

    def evaluate(self, points, rng: np.random.Generator):
        """psi_hat at each row of ``points``; returns (values, mc_variance)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        b = pts.shape[0]
        m = self.inner_size
        x = np.broadcast_to(pts, (m, b, pts.shape[1])).copy()
        total = np.zeros((m, b))
        for _ in range(self.truncation):
            mats = sample_batch(self.spec, rng, m)
            img = np.einsum("mij,mbj->mbi", mats, x)
            norms = img.sum(axis=2)
            total += np.log(norms)
            x = img / norms[:, :, None]
        values = total.mean(axis=0) - self.truncation * self.lambda_hat
        mc_var = total.var(axis=0, ddof=1) / m
        return values, mc_var


def estimate_psi(spec: MeasureSpec, truncation: int, inner_size: int,
                 lambda_hat: float, seed: int = 0,
                 fit_points: int = 8) -> PsiEstimate:
    """Build the corrector evaluator and fit its level envelope.

    The envelope is fitted on the observed per-level deviations of the
    mean increment from lambda_hat, maximized over a few probe points so
    it dominates the contributions uniformly.
    """
    stream = rngmod.derived_stream(seed, 0x51)
    d = spec.d
    probes = [barycenter(d).coords]
    for _ in range(fit_points - 1):
        probes.append(stream.dirichlet(np.ones(d)))
    pts = np.stack(probes)
    m = inner_size
    x = np.broadcast_to(pts, (m, pts.shape[0], d)).copy()
    contributions = []
    for _ in range(truncation):
        mats = sample_batch(spec, stream, m)
        img = np.einsum("mij,mbj->mbi", mats, x)
        norms = img.sum(axis=2)
        inc = np.log(norms)
        contributions.append(float(np.max(np.abs(inc.mean(axis=0) - lambda_hat))))
        x = img / norms[:, :, None]
    levels = np.arange(1, truncation + 1)
    amp, rate = fit_geometric_envelope(levels, contributions)
    return PsiEstimate(spec=spec, truncation=truncation, inner_size=inner_size,
                       lambda_hat=lambda_hat, envelope=(amp, rate),
                       tail_bound=envelope_tail(amp, rate, truncation),
                       level_contributions=tuple(contributions))


@dataclass(frozen=True)
class MartingaleVariance:
    """Mean squared martingale difference with its diagnostics.

    The raw mean of D_k^2 is inflated by twice the inner Monte Carlo
    variance of the corrector evaluations (independent noise enters the
    consecutive difference); that measured term is subtracted from the
    value and reported.  The raw lag-1 autocovariance is deflated by the
    same noise term and corrected before the whiteness check.
    ``mean_diff`` should sit within a few of its standard errors of zero
    when the differences really are a martingale.
    """

    estimate: EstimateWithError
    lag1_autocorr: float
    lag1_se: float
    mc_noise_var: float
    raw_value: float
    mean_diff: float
    mean_diff_se: float


def variance_via_martingale(spec: MeasureSpec, psi: PsiEstimate, n: int,
                            replicas: int, lambda_hat: float, seed: int = 0,
                            w0_tol: float = 1e-8) -> MartingaleVariance:
    """Variance via the corrected increments D_k along stationary paths."""
    w0, _, _ = backward_invariant_batch(spec, seed, w0_tol, replicas)
    stream = rngmod.derived_stream(seed, 0x3A)
    x = w0.copy()
    psi_prev, var_prev = psi.evaluate(x, stream)
    sum_d2 = np.zeros(replicas)
    sum_d = np.zeros(replicas)
    lag1 = np.zeros(replicas)
    prev_d = None
    noise_acc = float(np.mean(var_prev))
    evals = 1
    for _ in range(n):
        mats = sample_batch(spec, stream, replicas)
        img = np.einsum("rij,rj->ri", mats, x)
        norms = img.sum(axis=1)
        inc = np.log(norms)
        x = img / norms[:, None]
        psi_cur, var_cur = psi.evaluate(x, stream)
        d = inc - lambda_hat + psi_cur - psi_prev
        sum_d2 += d * d
        sum_d += d
        if prev_d is not None:
            lag1 += d * prev_d
        prev_d = d
        psi_prev = psi_cur
        noise_acc += float(np.mean(var_cur))
        evals += 1
    noise_var = noise_acc / evals
    per_replica = sum_d2 / n - 2.0 * noise_var
    est = _mean_with_error(per_replica, "martingale")
    total = replicas * n
    mean_d = float(sum_d.sum() / total)
    var_d = max(float(sum_d2.sum() / total) - mean_d ** 2, 0.0)
    raw_cov = float(lag1.sum() / (replicas * (n - 1))) - mean_d ** 2
    cov = raw_cov + noise_var
    s2 = max(est.value, 1e-300)
    lag1_corr = cov / s2
    lag1_se = 1.0 / np.sqrt(replicas * (n - 1))
    return MartingaleVariance(estimate=est, lag1_autocorr=lag1_corr,
                              lag1_se=float(lag1_se), mc_noise_var=noise_var,
                              raw_value=float(np.mean(sum_d2 / n)),
                              mean_diff=mean_d,
                              mean_diff_se=float(np.sqrt(var_d / total)))


# ---------------------------------------------------------------------
# Aperiodicity evidence
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class AperiodicityReport:
    """Commensurability verdict for log spectral radii of support words.

    The verdict is heuristic, never a proof: a ratio counts as rationally
    explained when a continued-fraction convergent with denominator at
    most ``max_denominator`` matches it within ``ratio_tol``.
    """

    words: tuple[tuple[int, ...], ...]
    log_radii: tuple[float, ...]
    incommensurate_pairs: tuple[tuple[int, int], ...]
    verdict: str  # "aperiodic evidence" | "possibly arithmetic"
    ratio_tol: float
    max_denominator: int


def _convergents(x: float, max_denominator: int):
    a = x
    h_prev, h = 1, int(np.floor(a))
    k_prev, k = 0, 1
    yield h, k
    for _ in range(64):
        frac = a - np.floor(a)
        if frac < 1e-15:
            return
        a = 1.0 / frac
        ai = int(np.floor(a))
        h, h_prev = ai * h + h_prev, h
        k, k_prev = ai * k + k_prev, k
        if k > max_denominator:
            return
        yield h, k


def _commensurate(ratio: float, tol: float, max_denominator: int) -> bool:
    r = abs(ratio)
    for p, q in _convergents(r, max_denominator):
        if abs(r - p / q) <= tol:
            return True
    return False


def aperiodicity_report(spec: MeasureSpec, max_word_len: int,
                        ratio_tol: float = 1e-9,
                        max_denominator: int = 1000) -> AperiodicityReport:
    """Enumerate support words, compare their log spectral radii pairwise."""
    if spec.kind != "atomic":
        raise ValueError("aperiodicity enumeration needs an atomic spec")
    atoms = spec.atom_array()
    k = atoms.shape[0]
    words: list[tuple[int, ...]] = []
    radii: list[float] = []
    frontier: list[tuple[tuple[int, ...], np.ndarray, float]] = [((), np.eye(spec.d), 0.0)]
    for _ in range(max_word_len):
        nxt = []
        for word, mat, ls in frontier:
            for i in range(k):
                prod = atoms[i] @ mat
                peak = prod.max()
                w = word + (i,)
                nxt.append((w, prod / peak, ls + float(np.log(peak))))
        frontier = nxt
        for word, mat, ls in frontier:
            if np.all(mat > 0):
                kap = spectral_radius(AllowableMatrix(mat))
                words.append(word)
                radii.append(ls + float(np.log(kap)))
    bad_pairs = []
    for i in range(len(radii)):
        for j in range(i + 1, len(radii)):
            if abs(radii[j]) < 1e-9:
                continue
            if not _commensurate(radii[i] / radii[j], ratio_tol, max_denominator):
                bad_pairs.append((i, j))
    verdict = "aperiodic evidence" if bad_pairs else "possibly arithmetic"
    return AperiodicityReport(words=tuple(words), log_radii=tuple(radii),
                              incommensurate_pairs=tuple(bad_pairs),
                              verdict=verdict, ratio_tol=ratio_tol,
                              max_denominator=max_denominator)


# ---------------------------------------------------------------------
# Invariant-measure regularity
# ---------------------------------------------------------------------


def invariant_regularity(spec: MeasureSpec, p: float, samples: int,
                         tol: float, seed: int = 0,
                         check_moments: bool = True) -> EstimateWithError:
    """Monte Carlo p-th moment of sup_y |log <y, W>| under the invariant law.

    The inner sup is exact: <y, w> is linear in y, extremized at the
    vertices, and |log| of a value in (0, 1] peaks at the smallest, so
    the integrand is |log min_i w_i|^p.  The transpose measure must also
    be strictly contracting, with a stable order-p moment, for the
    integral to be finite.
    """
    for view, name in ((spec, "measure"), (spec.transposed(), "transpose view")):
        if detect_contraction(view, 4, 256, seed) is None:
            raise ValueError(f"the {name} shows no strictly positive products; "
                             "regularity moment may be infinite")
    if check_moments:
        sanity = moment_sanity(spec.transposed(), p, max(2048, samples), seed)
        if not sanity.stable:
            raise ValueError(f"order-{p} moment of log N under the transpose "
                             "view failed the stability check")
    pts, _, _ = backward_invariant_batch(spec, seed, tol, samples)
    vals = np.abs(np.log(np.maximum(pts.min(axis=1), 5e-324))) ** p
    return _mean_with_error(vals, f"regularity-p{p:g}")


# ---------------------------------------------------------------------
# Moment sanity
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSanity:
    """Empirical p-th moment of log N(Y) with a doubling-stability flag."""

    moment: EstimateWithError
    half_moment: float
    stable: bool


def moment_sanity(spec: MeasureSpec, p: float, samples: int,
                  seed: int = 0) -> MomentSanity:
    """Check that the p-th moment of log N(Y_1) looks finite and stable."""
    stream = rngmod.derived_stream(seed, 0x30)
    draws = sample_batch(spec, stream, samples)
    cs = draws.sum(axis=1)
    op = cs.max(axis=1)
    v = cs.min(axis=1)
    log_n = np.log(np.maximum(op, 1.0 / v))
    vals = log_n ** p
    full = _mean_with_error(vals, f"moment-p{p:g}")
    half = _mean_with_error(vals[: samples // 2], "half")
    band = 3.0 * float(np.hypot(full.std_error, half.std_error))
    stable = abs(full.value - half.value) <= max(band, 1e-12)
    return MomentSanity(moment=full, half_moment=half.value, stable=stable)
