"""Histogram-based differential entropy estimation and the entropy-based
sensitivity indices with their derivative-based upper bounds.

The estimators grid each axis with equal-width cells spanning the sample
min/max and plug in cell frequencies:

* marginal:     H(Y)   ~ -sum (k_j/N) ln(k_j/N) + ln(dy)
* conditional:  H(Y|X) ~ -sum (k_ij/N) ln(k_ij/k_i) + ln(dy)

where i indexes the (possibly multi-dimensional) conditioning cell and j the
output cell. Counting is sparse (only occupied cells are materialized), so
grids far larger than memory-dense arrays are fine; accumulation merges
additively over sample chunks, which keeps results bitwise independent of the
chunking.

Bin counts drive a bias trade-off: coarse conditioning inflates the estimate
(within-cell variation leaks into the conditional law), fine grids starve
cells and deflate it. Defaults suit moderate problems; studies that target a
specific sampling regime should pass an explicit ``HistogramSpec``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .deriv import DerivMeasures
from .distributions import Distribution
from .errors import ConfigurationError, NumericalError, SparseGridError
from .model import Model, clean_outputs, evaluate_batch, sample_inputs

__all__ = ["HistogramSpec", "EntropyReport", "EntropyBounds", "KLResult",
           "entropy_histogram", "conditional_entropy", "estimate_entropy_indices",
           "entropy_upper_bounds", "kl_total_index", "first_order_entropy_index"]

log = logging.getLogger(__name__)

MAX_CONDITIONING_DIMS = 4
_SINGLETON_ERROR_SHARE = 0.5
_SPARSE_WARN_MEAN_COUNT = 10.0


@dataclass(frozen=True)
class HistogramSpec:
    bins_output: int = 100
    bins_per_conditioning_dim: int = 20

    def __post_init__(self):
        if self.bins_output < 2 or self.bins_per_conditioning_dim < 2:
            raise ConfigurationError("histogram needs at least 2 bins per dimension")


def _axis_codes(values: np.ndarray, bins: int) -> tuple[np.ndarray, float]:
    """Equal-width cell index per sample and the cell width; grid spans the
    sample min/max with no padding. Returns (None, 0) on a degenerate range."""
    lo = values.min()
    hi = values.max()
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise NumericalError("histogram input contains non-finite values")
    if hi <= lo:
        return None, 0.0
    width = (hi - lo) / bins
    codes = np.minimum((values - lo) * (bins / (hi - lo)), bins - 1).astype(np.int64)
    return codes, float(width)


def _sparse_counts(codes: np.ndarray, chunk_size: int | None = None):
    """Occupied-cell codes and counts; chunked accumulation merges additively."""
    if chunk_size is None or codes.size <= chunk_size:
        return np.unique(codes, return_counts=True)
    parts = [np.unique(codes[i:i + chunk_size], return_counts=True)
             for i in range(0, codes.size, chunk_size)]
    allcodes = np.concatenate([p[0] for p in parts])
    allcounts = np.concatenate([p[1] for p in parts])
    u, inv = np.unique(allcodes, return_inverse=True)
    merged = np.zeros(u.size, dtype=np.int64)
    np.add.at(merged, inv, allcounts)
    return u, merged


def entropy_histogram(samples: np.ndarray, spec: HistogramSpec = HistogramSpec(),
                      chunk_size: int | None = None) -> float:
    """Differential entropy (nats) of a 1-D sample. A degenerate range (all
    samples equal) is reported as -inf."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 1:
        raise ConfigurationError("entropy_histogram needs at least one sample")
    codes, width = _axis_codes(samples, spec.bins_output)
    if codes is None:
        return -math.inf
    _, counts = _sparse_counts(codes, chunk_size)
    p = counts / samples.size
    return float(-(p * np.log(p)).sum() + math.log(width))


def conditional_entropy(y: np.ndarray, x_cond: np.ndarray,
                        spec: HistogramSpec = HistogramSpec(),
                        chunk_size: int | None = None) -> float:
    """Expected conditional entropy H(Y|X) over a dense conditioning grid.

    ``x_cond`` is (n,) or (n, k) with k <= 4; beyond that the grid cannot be
    populated at sane sample sizes and the operation refuses (fix variables
    first to reduce the dimension). Escalates to an error when more than half
    of the occupied conditioning cells hold a single sample.
    """
    y = np.asarray(y, dtype=float).ravel()
    x_cond = np.asarray(x_cond, dtype=float)
    if x_cond.ndim == 1:
        x_cond = x_cond[:, None]
    n, k = x_cond.shape
    if n != y.size:
        raise ConfigurationError("y and x_cond disagree on sample count")
    if k < 1:
        raise ConfigurationError("need at least one conditioning variable")
    if k > MAX_CONDITIONING_DIMS:
        raise SparseGridError(
            f"refusing a {k}-dimensional conditioning grid (max {MAX_CONDITIONING_DIMS}); "
            "fix variables to reduce the model first")

    bins_c = spec.bins_per_conditioning_dim
    if bins_c ** k * spec.bins_output >= 2 ** 62:
        raise ConfigurationError(
            f"conditioning grid {bins_c}^{k} x {spec.bins_output} overflows cell codes")
    ycodes, width = _axis_codes(y, spec.bins_output)
    if ycodes is None:
        return -math.inf
    joint = np.zeros(n, dtype=np.int64)
    for j in range(k):
        col_codes, _ = _axis_codes(x_cond[:, j], bins_c)
        if col_codes is None:
            continue  # constant conditioning column carries no information
        joint = joint * bins_c + col_codes
    joint = joint * spec.bins_output + ycodes

    codes, counts = _sparse_counts(joint, chunk_size)
    cond_cell = codes // spec.bins_output
    # cells arrive sorted, so conditioning-cell blocks are contiguous
    starts = np.flatnonzero(np.r_[True, np.diff(cond_cell) != 0])
    k_i = np.add.reduceat(counts, starts)

    occupied = k_i.size
    singleton_share = float((k_i == 1).mean())
    if singleton_share > _SINGLETON_ERROR_SHARE:
        raise SparseGridError(
            f"{singleton_share:.0%} of {occupied} occupied conditioning cells hold a "
            "single sample; use fewer bins or more samples")
    mean_count = n / occupied
    if mean_count < _SPARSE_WARN_MEAN_COUNT:
        log.warning("sparse conditioning grid: %.1f samples per occupied cell "
                    "(%d cells)", mean_count, occupied)

    k_i_full = np.repeat(k_i, np.diff(np.r_[starts, counts.size]))
    h = -(counts / n * np.log(counts / k_i_full)).sum() + math.log(width)
    return float(h)


@dataclass(frozen=True)
class EntropyReport:
    h_y: float
    h_y_std: float
    h_total: np.ndarray
    h_total_std: np.ndarray
    eta: np.ndarray
    eta_std: np.ndarray
    kappa: np.ndarray
    kappa_std: np.ndarray
    kappa_clipped: np.ndarray            # True where exp(H_Ti - H_Y) > 1 was clipped
    n_samples: int
    repetitions: int
    spec: HistogramSpec = field(default_factory=HistogramSpec)

    @property
    def dim(self) -> int:
        return self.h_total.size


def estimate_entropy_indices(model: Model, n: int,
                             spec: HistogramSpec = HistogramSpec(),
                             repetitions: int = 1,
                             rng: np.random.Generator | None = None) -> EntropyReport:
    """Total-effect entropy indices for every input of the model.

    Per repetition: draw n inputs, evaluate, then for each variable i compute
    the conditional entropy of the output given all other input columns.
    Reports means and stds over repetitions for H(Y), H_Ti, eta_Ti and
    kappa_Ti; kappa values that exceed 1 from estimator noise are clipped
    to 1 and flagged.
    """
    if rng is None:
        raise ConfigurationError("an explicit rng stream is required")
    if repetitions < 1:
        raise ConfigurationError("repetitions must be >= 1")
    d = model.dim
    h_y = np.empty(repetitions)
    h_t = np.empty((repetitions, d))
    for r in range(repetitions):
        x = sample_inputs(model, n, rng)
        y = evaluate_batch(model, x)
        good = np.isfinite(y)
        if not good.all():
            y = clean_outputs(y, model.name)
            x = x[good]
        h_y[r] = entropy_histogram(y, spec)
        for i in range(d):
            others = [j for j in range(d) if j != i]
            try:
                h_t[r, i] = conditional_entropy(y, x[:, others], spec)
            except SparseGridError as exc:
                raise SparseGridError(f"variable {i + 1} of {model.name}: {exc}") from exc
        del x, y

    # degenerate outputs carry -inf entropies; the NaNs they produce here are
    # deliberate and surface as "undefined" to callers
    with np.errstate(invalid="ignore"):
        eta = h_t / h_y[:, None]
        kappa_raw = np.exp(h_t - h_y[:, None])
        clipped = kappa_raw > 1.0
        if clipped.any():
            log.warning("%s: clipped %d kappa values above 1",
                        model.name, int(clipped.sum()))
        kappa = np.minimum(kappa_raw, 1.0)
        return EntropyReport(
            h_y=float(h_y.mean()), h_y_std=float(h_y.std(ddof=0)),
            h_total=h_t.mean(axis=0), h_total_std=h_t.std(axis=0, ddof=0),
            eta=eta.mean(axis=0), eta_std=eta.std(axis=0, ddof=0),
            kappa=kappa.mean(axis=0), kappa_std=kappa.std(axis=0, ddof=0),
            kappa_clipped=clipped.any(axis=0),
            n_samples=n, repetitions=repetitions, spec=spec)


@dataclass(frozen=True)
class EntropyBounds:
    h_bound: np.ndarray         # H(X_i) + l_i
    kappa_bound: np.ndarray     # e^{H(X_i) + l_i} / e^{H(Y)}
    nu_kappa_bound: np.ndarray  # e^{H(X_i)} sqrt(nu_i) / e^{H(Y)}
    h_y: float


def entropy_upper_bounds(measures: DerivMeasures, inputs: tuple[Distribution, ...],
                         h_y: float) -> EntropyBounds:
    """Derivative-based upper bounds for the entropy indices.

    The squared-DGSM bound is reported as its square root so it is directly
    comparable to kappa. A variable with l = -inf gets zero bounds: it is
    certified negligible.
    """
    if measures.dim != len(inputs):
        raise ConfigurationError("derivative measures and input list disagree on dimension")
    h_x = np.array([dist.entropy() for dist in inputs])
    if not np.isfinite(h_x).all():
        raise ConfigurationError("input entropy must be finite for every variable")
    h_bound = h_x + measures.l
    with np.errstate(over="raise"):
        kappa_bound = np.exp(np.where(np.isneginf(h_bound), -np.inf, h_bound - h_y))
        nu_kappa_bound = np.exp(h_x - h_y) * np.sqrt(measures.nu)
    return EntropyBounds(h_bound=h_bound, kappa_bound=kappa_bound,
                         nu_kappa_bound=nu_kappa_bound, h_y=h_y)


@dataclass(frozen=True)
class KLResult:
    value: float
    floored_mass: float   # output probability mass sitting on floored cells
    floor_warning: bool


def kl_total_index(model: Model, i: int, n: int,
                   spec: HistogramSpec = HistogramSpec(),
                   rng: np.random.Generator | None = None) -> KLResult:
    """KL divergence between the output density with x_i frozen at its mean
    and the unconditional output density, on a shared equal-width grid.

    Grid cells where the unconditional density is empty but the conditional
    one is not are floored at half a sample; a result with more than 5% of
    conditional mass on floored cells carries a warning flag.
    """
    if rng is None:
        raise ConfigurationError("an explicit rng stream is required")
    if not 0 <= i < model.dim:
        raise ConfigurationError(f"variable index {i} out of range")
    mean_i = model.inputs[i].mean()
    if not np.isfinite(mean_i):
        raise ConfigurationError(f"mean of input {i + 1} is not finite")

    x0 = sample_inputs(model, n, rng)
    y0 = clean_outputs(evaluate_batch(model, x0), "kl baseline")
    x1 = sample_inputs(model, n, rng)
    x1[:, i] = mean_i
    y1 = clean_outputs(evaluate_batch(model, x1), "kl conditional")
    del x0, x1

    lo = min(y0.min(), y1.min())
    hi = max(y0.max(), y1.max())
    if hi <= lo:
        return KLResult(0.0, 0.0, False)
    bins = spec.bins_output
    c0, _ = np.histogram(y0, bins=bins, range=(lo, hi))
    c1, _ = np.histogram(y1, bins=bins, range=(lo, hi))
    p0 = c0 / y0.size
    p1 = c1 / y1.size
    mask = p1 > 0
    floored = mask & (p0 == 0)
    floored_mass = float(p1[floored].sum())
    p0_safe = np.maximum(p0, 0.5 / y0.size)
    value = float((p1[mask] * np.log(p1[mask] / p0_safe[mask])).sum())
    warn = floored_mass > 0.05
    if warn:
        log.warning("kl_total_index(%s, %d): %.1f%% of conditional mass on floored cells",
                    model.name, i + 1, 100 * floored_mass)
    return KLResult(value=value, floored_mass=floored_mass, floor_warning=warn)


def first_order_entropy_index(model: Model, i: int, n: int,
                              spec: HistogramSpec = HistogramSpec(),
                              rng: np.random.Generator | None = None) -> float:
    """First-order index I(X_i; Y) / H(Y) from a 2-D histogram.

    Both axes of the joint histogram use the output bin count. The mutual
    information is bin-width free (the cell widths cancel between the
    marginal and conditional terms); the normalizer is the binned output
    entropy, which keeps the index near [0, 1] regardless of the output scale
    and is zero only for a constant output, reported as NaN (undefined).
    """
    if rng is None:
        raise ConfigurationError("an explicit rng stream is required")
    if not 0 <= i < model.dim:
        raise ConfigurationError(f"variable index {i} out of range")
    x = sample_inputs(model, n, rng)
    y = evaluate_batch(model, x)
    good = np.isfinite(y)
    if not good.all():
        y = clean_outputs(y, model.name)
        x = x[good]
    h_y_hist = entropy_histogram(y, spec)
    if not np.isfinite(h_y_hist):
        return float("nan")
    width = (y.max() - y.min()) / spec.bins_output
    h_y_binned = h_y_hist - math.log(width)
    if h_y_binned < 1e-12:
        return float("nan")
    square = HistogramSpec(bins_output=spec.bins_output,
                           bins_per_conditioning_dim=spec.bins_output)
    mutual = h_y_hist - conditional_entropy(y, x[:, i], square)
    return float(mutual / h_y_binned)
