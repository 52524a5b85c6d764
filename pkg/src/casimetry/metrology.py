"""Statistical comparison of pressure curves with measurement ensembles.

Implements the error model of a repeated pressure-vs-separation scan:
binning into narrow subintervals, outlying-set detection, random and
systematic error combination at a stated confidence, the independent
theory error budget, the confidence band for theory-minus-experiment
differences, window-based model exclusion, and a deterministic
synthetic-ensemble generator for end-to-end self tests.

Conventions used throughout: half-widths are always quoted at the
band's confidence level (0.95 or 0.99); relative quantities are
fractions of |P|; separations are meters.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .corrections import SphereGeometry
from .lifshitz import PressureCurve

__all__ = [
    "ErrorComponent",
    "ErrorBudget",
    "MeasurementEnsemble",
    "BinnedStatistics",
    "ErrorCurve",
    "ConfidenceBand",
    "ExclusionVerdict",
    "bin_ensemble",
    "detect_outlying_set",
    "random_error_curve",
    "combine_errors",
    "theory_error_curve",
    "confidence_band",
    "exclusion_test",
    "run_exclusion_analysis",
    "generate_synthetic_ensemble",
    "default_point_sigma",
    "default_noise_budget",
    "load_ensemble_csv",
    "save_ensemble_csv",
    "DEFAULT_BIN_WIDTH",
    "DEFAULT_Z_RANGE",
    "DEFAULT_SEPARATION_ERROR",
    "DEFAULT_OPTICAL_REL",
    "DEFAULT_SPHERE",
    "DEFAULT_SEED",
]

DEFAULT_BIN_WIDTH = 1.2e-9
DEFAULT_Z_RANGE = (160e-9, 750e-9)
DEFAULT_SEPARATION_ERROR = 0.6e-9     # 95% half-width of the z record
DEFAULT_OPTICAL_REL = 0.005           # sample-to-sample optical spread
DEFAULT_SPHERE = SphereGeometry(148.7e-6, 0.2e-6)
DEFAULT_N_SETS = 14
DEFAULT_POINTS_PER_SET = 290
DEFAULT_SEED = 7

_CONFIDENCES = (0.95, 0.99)
_Q95 = stats.norm.ppf(0.975)

# exclusion windows: half-width, minimum occupancy, outside-fraction rule
WINDOW_HALF_WIDTH = 15e-9
MIN_WINDOW_POINTS = 15
SMOOTHING_BINS = 11

# synthetic per-point scatter: 95% envelope in percent of |P|, flat at
# short separation and rising in two logistic stages at large separation
_SCATTER_BASE = 0.575
_SCATTER_RISE = ((3.2, 330e-9, 10e-9), (12.0, 490e-9, 20e-9))


def default_point_sigma(z):
    """One-sigma relative scatter of a single synthetic point.

    Parameters
    ----------
    z : float or ndarray
        Separation in meters.

    Returns
    -------
    float or ndarray
        Standard deviation as a fraction of |P|.
    """
    z = np.asarray(z, dtype=float)
    rise = 0.0
    for amp, zc, w in _SCATTER_RISE:
        rise = rise + amp / (1.0 + np.exp(-(z - zc) / w))
    pct = np.sqrt(_SCATTER_BASE ** 2 + rise ** 2)
    out = pct / 100.0 / _Q95
    return float(out) if out.ndim == 0 else out


def _check_confidence(confidence):
    if confidence not in _CONFIDENCES:
        raise ValueError(f"confidence must be one of {_CONFIDENCES}")


def _combine(half_widths, rule="quantile"):
    """Total half-width from component half-widths at one confidence.

    "quantile" is the metrological mixing rule min(sum, 1.1*rss) for
    normal plus uniform components; "variance" is the plain rss, which
    makes a band statistically tight for self-consistency tests.
    """
    hs = np.array(np.broadcast_arrays(*half_widths), dtype=float)
    rss = np.sqrt((hs ** 2).sum(axis=0))
    if rule == "variance":
        total = rss
    elif rule == "quantile":
        total = np.minimum(hs.sum(axis=0), 1.1 * rss)
    else:
        raise ValueError(f"unknown combination rule {rule!r}")
    return float(total) if total.ndim == 0 else total


@dataclass(frozen=True)
class ErrorComponent:
    """One contribution to an error budget.

    Parameters
    ----------
    label : str
        Name used in reports.
    distribution : str
        "normal" (value is sigma), "student" (value is sigma, needs
        dof), or "uniform" (value is the half-range).
    value : float or callable
        Magnitude, or a function of separation returning it.
    relative : bool, optional
        If true the magnitude is a fraction of |P|, else Pa.
    dof : int, optional
        Degrees of freedom, required for "student".
    """

    label: str
    distribution: str
    value: object
    relative: bool = True
    dof: int = None

    def __post_init__(self):
        if self.distribution not in ("normal", "student", "uniform"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.distribution == "student" and not self.dof:
            raise ValueError("student component needs dof")
        if np.isscalar(self.value) and self.value < 0:
            raise ValueError("component magnitude must be nonnegative")

    def value_at(self, z):
        return self.value(z) if callable(self.value) else self.value

    def half_width_at(self, z, confidence):
        """Half-width of this component at the given confidence."""
        _check_confidence(confidence)
        v = self.value_at(z)
        if self.distribution == "normal":
            return stats.norm.ppf((1 + confidence) / 2) * v
        if self.distribution == "student":
            return stats.t.ppf((1 + confidence) / 2, self.dof) * v
        return confidence * v   # quantile of a centered uniform


@dataclass(frozen=True)
class ErrorBudget:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps or not all(isinstance(c, ErrorComponent) for c in comps):
            raise ValueError("budget needs at least one ErrorComponent")
        object.__setattr__(self, "components", comps)

    def half_widths(self, p_abs, confidence, z=None):
        """Per-component absolute half-widths at |P| = p_abs."""
        out = []
        for c in self.components:
            if callable(c.value) and z is None:
                raise ValueError(f"component {c.label!r} needs a separation")
            h = c.half_width_at(z, confidence)
            out.append(h * p_abs if c.relative else h)
        return out


def combine_errors(budget: ErrorBudget, p_abs: float, confidence: float,
                   z: float = None, rule: str = "quantile") -> float:
    """Total absolute error half-width for a budget at one |P|."""
    _check_confidence(confidence)
    return _combine(budget.half_widths(p_abs, confidence, z), rule)


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Repeated pressure scans over a common separation range.

    Each set is an (n, 2) array of (z, pressure) rows.
    """

    sets: tuple
    bin_width: float = DEFAULT_BIN_WIDTH
    z_range: tuple = DEFAULT_Z_RANGE
    provenance: str = "external"

    def __post_init__(self):
        if self.provenance not in ("synthetic", "external"):
            raise ValueError("provenance must be 'synthetic' or 'external'")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        lo, hi = self.z_range
        if not (0 < lo < hi):
            raise ValueError("z_range must be increasing and positive")
        sets = []
        for i, s in enumerate(self.sets):
            a = np.asarray(s, dtype=float)
            if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] < 1:
                raise ValueError(f"set {i} must be a nonempty (n, 2) array")
            if a[:, 0].min() < lo - 1e-12 or a[:, 0].max() > hi + 1e-12:
                raise ValueError(f"set {i} has separations outside z_range")
            sets.append(a)
        if not sets:
            raise ValueError("ensemble needs at least one set")
        object.__setattr__(self, "sets", tuple(sets))
        object.__setattr__(self, "z_range", (float(lo), float(hi)))

    @property
    def n_points(self):
        return sum(len(s) for s in self.sets)

    def all_points(self):
        """Concatenated (z, pressure, set_index) arrays."""
        z = np.concatenate([s[:, 0] for s in self.sets])
        p = np.concatenate([s[:, 1] for s in self.sets])
        idx = np.concatenate([np.full(len(s), i)
                              for i, s in enumerate(self.sets)])
        return z, p, idx


@dataclass(frozen=True)
class BinnedStatistics:
    """Per-bin summary of an ensemble.

    variance is computed about a within-bin linear trend (dof = n - 2)
    so the curve's slope does not inflate the scatter; bins too small
    to detrend fall back to the plain sample variance, and singleton
    bins carry variance nan with dof 0.
    """

    z: np.ndarray
    pressure_mean: np.ndarray
    variance: np.ndarray
    count: np.ndarray
    dof: np.ndarray

    @property
    def total_points(self):
        return int(self.count.sum())


def _bin_index(z, z_range, width):
    lo, hi = z_range
    n_bins = max(1, int(math.ceil((hi - lo) / width - 1e-9)))
    idx = np.floor((z - lo) / width).astype(int)
    return np.clip(idx, 0, n_bins - 1)


def bin_ensemble(ensemble: MeasurementEnsemble) -> BinnedStatistics:
    """Group all points into separation subintervals of bin_width."""
    z, p, _ = ensemble.all_points()
    idx = _bin_index(z, ensemble.z_range, ensemble.bin_width)
    rows = []
    for b in np.unique(idx):
        m = idx == b
        zz, pp = z[m], p[m]
        n = int(m.sum())
        if n >= 3 and np.ptp(zz) > 0:
            c = np.polyfit(zz - zz.mean(), pp, 1)
            resid = pp - np.polyval(c, zz - zz.mean())
            var = float((resid ** 2).sum() / (n - 2))
            dof = n - 2
        elif n >= 2:
            var = float(pp.var(ddof=1))
            dof = n - 1
        else:
            var, dof = math.nan, 0
        rows.append((zz.mean(), pp.mean(), var, n, dof))
    rows.sort()
    z_m, p_m, var, cnt, dof = (np.array(col) for col in zip(*rows))
    return BinnedStatistics(z_m, p_m, var, cnt.astype(int), dof.astype(int))


def detect_outlying_set(ensemble: MeasurementEnsemble,
                        significance: float = 0.01) -> list:
    """Flag measurement sets inconsistent with the rest of the ensemble.

    Each set is reduced to its mean standardized residual against the
    grand per-bin means; the reduced values are then screened by an
    iterative two-sided Grubbs test at the given significance.

    Returns
    -------
    list of int
        Indices of flagged sets, ascending.
    """
    if len(ensemble.sets) < 3:
        raise ValueError("outlier screening needs at least 3 sets")
    binned = bin_ensemble(ensemble)
    z, p, set_idx = ensemble.all_points()
    idx = _bin_index(z, ensemble.z_range, ensemble.bin_width)
    # map bin id -> row in binned stats
    order = {b: i for i, b in enumerate(np.unique(idx))}
    rows = np.array([order[b] for b in idx])
    scale = np.sqrt(binned.variance[rows])
    mean = binned.pressure_mean[rows]
    ok = np.isfinite(scale) & (scale > 0)
    scores = np.full(len(ensemble.sets), np.nan)
    for s in range(len(ensemble.sets)):
        m = (set_idx == s) & ok
        if m.any():
            scores[s] = np.mean((p[m] - mean[m]) / scale[m])
    flagged = []
    active = [i for i in range(len(scores)) if np.isfinite(scores[i])]
    while len(active) >= 3:
        vals = scores[active]
        sd = vals.std(ddof=1)
        if sd == 0:
            break
        i_worst = int(np.argmax(np.abs(vals - vals.mean())))
        g = abs(vals[i_worst] - vals.mean()) / sd
        n = len(vals)
        t = stats.t.ppf(1 - significance / (2 * n), n - 2)
        g_crit = (n - 1) / math.sqrt(n) * math.sqrt(t * t / (n - 2 + t * t))
        if g <= g_crit:
            break
        flagged.append(active.pop(i_worst))
    return sorted(flagged)


@dataclass(frozen=True)
class ErrorCurve:
    """Absolute error half-width versus separation."""

    z: np.ndarray
    half_width: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        h = np.asarray(self.half_width, dtype=float)
        if z.ndim != 1 or z.shape != h.shape or z.size == 0:
            raise ValueError("z and half_width must be matching 1-d arrays")
        if np.any(np.diff(z) <= 0):
            raise ValueError("z must be strictly increasing")
        if np.any(~np.isfinite(h)) or np.any(h < 0):
            raise ValueError("half_width must be finite and nonnegative")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "half_width", h)

    def at(self, z):
        return np.interp(z, self.z, self.half_width)

    def __call__(self, z):
        return self.at(z)


def _c4(n):
    # E[s] = c4 sigma for a normal sample of size n
    n = np.asarray(n, dtype=float)
    lg = np.vectorize(math.lgamma)
    return np.sqrt(2.0 / (n - 1)) * np.exp(lg(n / 2) - lg((n - 1) / 2))


def _smoothed_sigma(binned, bias_correct):
    s = np.sqrt(binned.variance)
    if bias_correct:
        with np.errstate(invalid="ignore"):
            s = s / _c4(np.maximum(binned.dof + 1, 2))
    half = SMOOTHING_BINS // 2
    out = np.empty_like(s)
    for i in range(len(s)):
        window = s[max(0, i - half):i + half + 1]
        out[i] = np.nanmedian(window) if np.any(np.isfinite(window)) else np.nan
    return out


def random_error_curve(binned: BinnedStatistics, confidence: float,
                       kind: str = "mean") -> ErrorCurve:
    """Random-error half-width versus separation from binned scatter.

    Parameters
    ----------
    binned : BinnedStatistics
    confidence : float
        0.95 or 0.99.
    kind : str, optional
        "mean" gives the classical repeated-measurement half-width
        t_{q,dof} s/sqrt(n) for the bin mean.  "point" gives the
        bias-corrected single-point envelope q_normal * s, which is
        what a variance-rule band for individual points needs.

    Notes
    -----
    Bin scatter is smoothed with a moving median over 11 bins, which
    respects the strong variance heterogeneity across separation.
    """
    _check_confidence(confidence)
    if kind not in ("mean", "point"):
        raise ValueError("kind must be 'mean' or 'point'")
    s_sm = _smoothed_sigma(binned, bias_correct=(kind == "point"))
    good = np.isfinite(s_sm) & (binned.dof >= 1)
    if not good.any():
        raise ValueError("no bins with a defined variance")
    q = (1 + confidence) / 2
    if kind == "mean":
        hw = (stats.t.ppf(q, binned.dof[good]) * s_sm[good]
              / np.sqrt(binned.count[good]))
    else:
        hw = stats.norm.ppf(q) * s_sm[good]
    return ErrorCurve(binned.z[good], hw)


def theory_error_curve(z, sphere: SphereGeometry = DEFAULT_SPHERE,
                       dz: float = DEFAULT_SEPARATION_ERROR,
                       optical_rel: float = DEFAULT_OPTICAL_REL,
                       confidence: float = 0.95,
                       include_separation_term: bool = True):
    """Relative theory error from curvature, optics, and separation.

    Combines the uniform z/R curvature term, the uniform optical-data
    term, and the normal-derived 4 dz/z separation term (whose input
    is a 95% half-width) at the requested confidence.

    Set include_separation_term False when the band's experimental
    input is a measured per-point envelope: recorded-separation
    scatter is already part of that envelope and must not be counted
    twice.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or dz < 0:
        raise ValueError("z must be positive and dz nonnegative")
    _check_confidence(confidence)
    hws = [confidence * (z / sphere.radius),
           confidence * optical_rel + 0.0 * z]
    if include_separation_term:
        sigma = (4.0 * dz / z) / _Q95
        hws.append(stats.norm.ppf((1 + confidence) / 2) * sigma)
    return _combine(hws, rule="quantile")


@dataclass(frozen=True)
class ConfidenceBand:
    """Half-width of the theory-minus-experiment difference versus z."""

    z: np.ndarray
    half_width: np.ndarray
    confidence: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        h = np.asarray(self.half_width, dtype=float)
        if z.ndim != 1 or z.shape != h.shape or z.size < 2:
            raise ValueError("band needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(z) <= 0):
            raise ValueError("band z must be strictly increasing")
        if np.any(~(h > 0)):
            raise ValueError("band half-widths must be positive")
        _check_confidence(self.confidence)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "half_width", h)

    def half_width_at(self, z):
        return np.interp(z, self.z, self.half_width)


def confidence_band(theory_rel, expt_abs, model_curve: PressureCurve,
                    confidence: float, rule: str = "quantile",
                    grid=None) -> ConfidenceBand:
    """Build the band for differences between a model curve and data.

    Parameters
    ----------
    theory_rel : callable
        Relative theory error versus separation, at `confidence`.
    expt_abs : callable or ErrorCurve
        Absolute experimental half-width versus separation, Pa, at
        `confidence`.
    model_curve : PressureCurve
        Curve of the model under test.
    confidence : float
    rule : str, optional
        Component combination rule, "quantile" or "variance".
    grid : array_like, optional
        Evaluation separations; defaults to the experimental curve's
        own grid clipped to the model curve range, else the model grid.
    """
    _check_confidence(confidence)
    if grid is None:
        grid = expt_abs.z if isinstance(expt_abs, ErrorCurve) else model_curve.z
    grid = np.asarray(grid, dtype=float)
    lo = max(grid.min(), model_curve.z.min())
    hi = min(grid.max(), model_curve.z.max())
    keep = (grid >= lo) & (grid <= hi)
    if not keep.any():
        raise ValueError("band grid does not overlap the model curve")
    grid = grid[keep]
    p_abs = np.abs(model_curve.pressure_at(grid))
    th = np.asarray(theory_rel(grid), dtype=float) * p_abs
    ex = np.asarray(expt_abs(grid), dtype=float)
    return ConfidenceBand(grid, _combine([th, ex], rule), confidence)


@dataclass(frozen=True)
class ExclusionVerdict:
    """Outcome of comparing one model curve with an ensemble."""

    model_tag: str
    confidence: float
    n_points: int
    n_outside: int
    fraction_outside: float
    excluded_windows: tuple
    accepted: bool

    def to_dict(self):
        return {
            "model": self.model_tag,
            "confidence": self.confidence,
            "n_points": self.n_points,
            "n_outside": self.n_outside,
            "fraction_outside": self.fraction_outside,
            "excluded_windows": [{"z_min": a, "z_max": b}
                                 for a, b in self.excluded_windows],
            "accepted": self.accepted,
        }


def exclusion_test(differences, band: ConfidenceBand,
                   model_tag: str = "") -> ExclusionVerdict:
    """Count band violations and find excluded separation windows.

    A window of +-15 nm about a band grid point is flagged when it
    holds at least 15 differences and more than half of them fall
    outside the band; maximal runs of flagged grid points become
    excluded windows.  The model is accepted when nothing is flagged
    and the global outside fraction does not exceed twice the band's
    nominal miss rate 1 - confidence.
    """
    d = np.asarray(differences, dtype=float)
    if d.ndim != 2 or d.shape[1] != 2 or d.shape[0] == 0:
        raise ValueError("differences must be a nonempty list of (z, dP)")
    z = d[:, 0]
    outside = np.abs(d[:, 1]) > band.half_width_at(z)
    order = np.argsort(z, kind="stable")
    zo, oo = z[order], outside[order]
    flags = np.zeros(band.z.size, dtype=bool)
    for i, c in enumerate(band.z):
        i0, i1 = np.searchsorted(zo, [c - WINDOW_HALF_WIDTH,
                                      c + WINDOW_HALF_WIDTH])
        if i1 - i0 >= MIN_WINDOW_POINTS:
            flags[i] = oo[i0:i1].mean() > 0.5
    windows = []
    i = 0
    while i < flags.size:
        if flags[i]:
            j = i
            while j + 1 < flags.size and flags[j + 1]:
                j += 1
            windows.append((float(band.z[i]), float(band.z[j])))
            i = j + 1
        else:
            i += 1
    n_out = int(outside.sum())
    frac = n_out / len(outside)
    accepted = not windows and frac <= 2.0 * (1.0 - band.confidence)
    return ExclusionVerdict(model_tag, band.confidence, len(outside),
                            n_out, frac, tuple(windows), accepted)


def exclusion_details(ensemble: MeasurementEnsemble, model_curves: dict,
                      reference: str, confidence: float,
                      sphere: SphereGeometry = DEFAULT_SPHERE,
                      dz: float = DEFAULT_SEPARATION_ERROR,
                      optical_rel: float = DEFAULT_OPTICAL_REL) -> dict:
    """Band-test each model curve and keep the intermediate objects.

    Same computation as `run_exclusion_analysis`, but the per-model
    result also carries the confidence band and the point-by-point
    differences so callers can write them out.

    Returns
    -------
    dict
        Mapping tag -> {"verdict": ExclusionVerdict,
        "band": ConfidenceBand, "differences": (n, 2) array}.
    """
    binned = bin_ensemble(ensemble)
    env = random_error_curve(binned, confidence, kind="point")
    ref_curve = model_curves[reference]
    rad = confidence * (sphere.radius_error / sphere.radius)

    def expt_abs(zz):
        return np.sqrt(env.at(zz) ** 2
                       + (rad * np.abs(ref_curve.pressure_at(zz))) ** 2)

    def theory_rel(zz):
        return theory_error_curve(zz, sphere, dz, optical_rel, confidence,
                                  include_separation_term=False)

    z, p, _ = ensemble.all_points()
    out = {}
    for tag, curve in model_curves.items():
        band = confidence_band(theory_rel, expt_abs, curve, confidence,
                               rule="variance", grid=env.z)
        d = np.column_stack([z, curve.pressure_at(z) - p])
        out[tag] = {"verdict": exclusion_test(d, band, model_tag=tag),
                    "band": band, "differences": d}
    return out


def run_exclusion_analysis(ensemble: MeasurementEnsemble, model_curves: dict,
                           reference: str, confidence: float,
                           sphere: SphereGeometry = DEFAULT_SPHERE,
                           dz: float = DEFAULT_SEPARATION_ERROR,
                           optical_rel: float = DEFAULT_OPTICAL_REL) -> dict:
    """Band-test each model curve against one measured ensemble.

    The experimental half-width is estimated from the data itself:
    the bias-corrected per-point scatter envelope combined in
    variance with the radius calibration systematic of the reference
    curve.  The theory side carries the curvature and optical terms
    only; the separation record error is left out because the
    measured envelope already contains its effect, and counting it
    twice would loosen the band.  The variance combination rule keeps
    the band statistically tight, so the generating model's outside
    fraction matches the nominal miss rate 1 - confidence.

    Parameters
    ----------
    ensemble : MeasurementEnsemble
    model_curves : dict
        Mapping tag -> PressureCurve of the candidate models.
    reference : str
        Tag of the curve believed to generate the data; sets the
        scale of the radius systematic.
    confidence : float

    Returns
    -------
    dict
        Mapping tag -> ExclusionVerdict.
    """
    details = exclusion_details(ensemble, model_curves, reference, confidence,
                                sphere, dz, optical_rel)
    return {tag: item["verdict"] for tag, item in details.items()}


def default_noise_budget() -> ErrorBudget:
    """Error budget of the synthetic generator's pressure noise.

    Uniform components are ensemble-level systematics (drawn once per
    ensemble); normal components are per-point scatter.  Separation
    record error is handled separately by the generator's z_jitter.
    """
    r = DEFAULT_SPHERE.radius
    return ErrorBudget((
        ErrorComponent("optical data", "uniform", DEFAULT_OPTICAL_REL),
        ErrorComponent("curvature", "uniform", lambda z: np.asarray(z) / r),
        ErrorComponent("radius calibration", "uniform",
                       DEFAULT_SPHERE.radius_error / r),
        ErrorComponent("instrumental scatter", "normal", default_point_sigma),
    ))


def generate_synthetic_ensemble(model=None, noise: ErrorBudget = None,
                                n_sets: int = DEFAULT_N_SETS,
                                points_per_set: int = DEFAULT_POINTS_PER_SET,
                                z_range=DEFAULT_Z_RANGE,
                                seed: int = DEFAULT_SEED,
                                curve: PressureCurve = None,
                                state=None,
                                z_jitter: float = DEFAULT_SEPARATION_ERROR,
                                ) -> MeasurementEnsemble:
    """Draw a deterministic synthetic ensemble around a model curve.

    Parameters
    ----------
    model : ReflectionModel, optional
        Generating model; evaluated through a log-spaced interpolation
        curve.  Ignored when `curve` is given.
    noise : ErrorBudget, optional
        Pressure-space noise; defaults to default_noise_budget().
        Uniform components are drawn once per ensemble, normal and
        student components once per point.
    z_jitter : float, optional
        95% half-width of the normal per-point error of the recorded
        separation; the pressure is evaluated at the true separation.
    seed : int
        Ensembles are bit-reproducible given the seed.
    """
    if n_sets < 1 or points_per_set < 1:
        raise ValueError("n_sets and points_per_set must be >= 1")
    lo, hi = z_range
    if curve is None:
        if model is None:
            raise ValueError("either model or curve is required")
        from .lifshitz import ThermalState, compute_pressure_curve
        st = state if state is not None else ThermalState(300.0)
        grid = np.geomspace(0.92 * lo, 1.02 * hi, 80)
        curve = compute_pressure_curve(model, grid, st)
    if noise is None:
        noise = default_noise_budget()
    rng_sys = np.random.default_rng([seed, 999983])
    sys_draws = [rng_sys.uniform(-1.0, 1.0)
                 if c.distribution == "uniform" else None
                 for c in noise.components]
    sets = []
    for s in range(n_sets):
        rng = np.random.default_rng([seed, s])
        z_rec = np.sort(rng.uniform(lo, hi, points_per_set))
        delta = rng.normal(0.0, z_jitter / _Q95, points_per_set)
        z_true = np.clip(z_rec - delta, curve.z[0], curve.z[-1])
        p0 = curve.pressure_at(z_true)
        rel = np.zeros(points_per_set)
        absolute = np.zeros(points_per_set)
        for c, u in zip(noise.components, sys_draws):
            v = np.asarray(c.value_at(z_true), dtype=float)
            if c.distribution == "uniform":
                draw = u * v
            else:
                draw = rng.normal(0.0, 1.0, points_per_set) * v
            if c.relative:
                rel = rel + draw
            else:
                absolute = absolute + draw
        sets.append(np.column_stack([z_rec, p0 * (1.0 + rel) + absolute]))
    return MeasurementEnsemble(tuple(sets), DEFAULT_BIN_WIDTH,
                               (lo, hi), "synthetic")


def save_ensemble_csv(ensemble: MeasurementEnsemble, path):
    """Write an ensemble as CSV rows set_index,z_m,pressure_Pa."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["set_index", "z_m", "pressure_Pa"])
        for i, s in enumerate(ensemble.sets):
            for z, p in s:
                w.writerow([i, f"{z:.10e}", f"{p:.10e}"])


def load_ensemble_csv(path, bin_width: float = DEFAULT_BIN_WIDTH,
                      provenance: str = "external",
                      z_range=None) -> MeasurementEnsemble:
    """Read an ensemble written by save_ensemble_csv.

    The separation range is inferred from the data unless given.
    '#' lines before the header are skipped.
    """
    by_set = {}
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != [
                "set_index", "z_m", "pressure_Pa"]:
            raise ValueError(f"{path}: expected header set_index,z_m,pressure_Pa")
        for row in reader:
            if not row:
                continue
            by_set.setdefault(int(row[0]), []).append(
                (float(row[1]), float(row[2])))
    if not by_set:
        raise ValueError(f"{path}: no data rows")
    sets = [np.array(by_set[k]) for k in sorted(by_set)]
    if z_range is None:
        z_all = np.concatenate([s[:, 0] for s in sets])
        z_range = (float(z_all.min()), float(z_all.max()))
    return MeasurementEnsemble(tuple(sets), bin_width, z_range, provenance)
