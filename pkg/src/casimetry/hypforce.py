"""Yukawa-type pressures for layered bodies and constraint curves.

A hypothetical correction to Newtonian gravity of strength alpha_g
and range lam adds a plate-plate pressure proportional to the product
of two stack density factors.  This module evaluates that pressure in
closed form for arbitrary layer counts, cross-checks it with a
brute-force depth integration, and inverts a confidence band into the
strongest constraint alpha_max(lam) with the separation of best
sensitivity.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import G_NEWTON

__all__ = [
    "YukawaParams",
    "Layer",
    "LayerStack",
    "ConstraintCurve",
    "yukawa_point_potential",
    "yukawa_plate_pressure",
    "yukawa_pressure_oracle",
    "density_factor",
    "constraint_curve",
    "legacy_rms_constraint",
    "coated_sphere_stack",
    "coated_plate_stack",
    "load_layer_stack",
    "save_constraint_csv",
    "load_constraint_csv",
    "DENSITY_AU",
    "DENSITY_TI",
    "DENSITY_PT",
    "DENSITY_SI",
    "DENSITY_SAPPHIRE",
]

DENSITY_AU = 19.28e3
DENSITY_TI = 4.51e3
DENSITY_PT = 21.47e3
DENSITY_SI = 2.33e3
DENSITY_SAPPHIRE = 4.1e3

# plate-parallel reduction assumes z, lam much smaller than the body
# extent; warn beyond this fraction of the smallest lateral dimension
PLATE_EXTENT = 3.5e-6
RANGE_VALIDITY_FRACTION = 0.2


@dataclass(frozen=True)
class YukawaParams:
    """Strength and range of the Yukawa correction."""

    alpha_g: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("interaction range must be positive")


@dataclass(frozen=True)
class Layer:
    density: float
    thickness: float

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError("layer density must be positive")
        if not self.thickness > 0:
            raise ValueError("layer thickness must be positive")


@dataclass(frozen=True)
class LayerStack:
    """Plane-layered body, ordered from the facing surface inward.

    Every layer has finite thickness except the last, which is the
    semi-infinite substrate.
    """

    layers: tuple
    label: str = ""

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("stack needs at least one layer")
        for lay in layers[:-1]:
            if math.isinf(lay.thickness):
                raise ValueError("only the terminal layer may be infinite")
        if not math.isinf(layers[-1].thickness):
            raise ValueError("terminal layer must be semi-infinite")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def homogeneous(cls, density: float, label: str = "") -> "LayerStack":
        return cls((Layer(density, math.inf),), label)


def coated_sphere_stack() -> LayerStack:
    """Gold-coated sapphire sphere: Au over a Ti adhesion layer."""
    return LayerStack((Layer(DENSITY_AU, 200e-9),
                       Layer(DENSITY_TI, 10e-9),
                       Layer(DENSITY_SAPPHIRE, math.inf)), "sphere")


def coated_plate_stack() -> LayerStack:
    """Gold-coated silicon plate: Au over a Pt adhesion layer."""
    return LayerStack((Layer(DENSITY_AU, 150e-9),
                       Layer(DENSITY_PT, 10e-9),
                       Layer(DENSITY_SI, math.inf)), "plate")


def yukawa_point_potential(m1: float, m2: float, r: float,
                           params: YukawaParams) -> float:
    """Two-point interaction energy with the Yukawa correction.

    V(r) = -(G m1 m2 / r) (1 + alpha_g exp(-r/lam)).
    """
    if not r > 0:
        raise ValueError("separation must be positive")
    return (-G_NEWTON * m1 * m2 / r
            * (1.0 + params.alpha_g * math.exp(-r / params.lam)))


def density_factor(stack: LayerStack, lam: float) -> float:
    """Effective density of a stack seen by a Yukawa force of range lam.

    phi = rho_1 - sum_k (rho_k - rho_{k+1}) exp(-depth_k/lam), where
    depth_k is the total thickness above the k-th interface.  For a
    homogeneous body this is the surface density; infinitely long
    ranges see the substrate.  Positive for any all-positive stack.
    """
    phi = stack.layers[0].density
    depth = 0.0
    for above, below in zip(stack.layers[:-1], stack.layers[1:]):
        depth += above.thickness
        phi -= (above.density - below.density) * math.exp(-depth / lam)
    return phi


def _check_range_validity(lam):
    if lam > RANGE_VALIDITY_FRACTION * PLATE_EXTENT:
        warnings.warn(
            f"interaction range {lam:.3g} m exceeds "
            f"{RANGE_VALIDITY_FRACTION:g} of the plate extent "
            f"{PLATE_EXTENT:.3g} m; the plane-parallel reduction "
            "degrades there", stacklevel=3)


def yukawa_plate_pressure(stack_a: LayerStack, stack_b: LayerStack,
                          z, params: YukawaParams):
    """Yukawa pressure between two layered plates at face separation z.

    P(z) = -2 pi G alpha_g lam^2 exp(-z/lam) phi_a phi_b with the
    stack density factors phi.  Attractive for positive alpha_g.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("separation must be positive")
    _check_range_validity(params.lam)
    lam = params.lam
    out = (-2.0 * math.pi * G_NEWTON * params.alpha_g * lam * lam
           * np.exp(-z / lam)
           * density_factor(stack_a, lam) * density_factor(stack_b, lam))
    return float(out) if out.ndim == 0 else out


def _depth_integral(stack: LayerStack, lam: float) -> float:
    # integral of rho(xi) exp(-xi/lam) over depth, truncated where the
    # weight falls to 1e-16 of its surface value
    nodes, weights = np.polynomial.legendre.leggauss(24)
    xi_max = lam * math.log(1e16)
    total = 0.0
    depth = 0.0
    for layer in stack.layers:
        top = depth
        bottom = min(depth + layer.thickness, xi_max)
        if top >= xi_max:
            break
        n_panels = max(1, int(math.ceil((bottom - top) / (lam / 3.0))))
        edges = np.linspace(top, bottom, n_panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            total += (layer.density * 0.5 * (b - a)
                      * np.dot(weights, np.exp(-x / lam)))
        depth = bottom
    return total


def yukawa_pressure_oracle(stack_a: LayerStack, stack_b: LayerStack,
                           z: float, params: YukawaParams) -> float:
    """Brute-force check of the plate pressure by depth integration.

    Integrates the piecewise-constant density profiles of both stacks
    against the exponential kernel numerically, with no knowledge of
    the closed-form density factors.
    """
    if not z > 0:
        raise ValueError("separation must be positive")
    lam = params.lam
    ia = _depth_integral(stack_a, lam)
    ib = _depth_integral(stack_b, lam)
    return (-2.0 * math.pi * G_NEWTON * params.alpha_g
            * math.exp(-z / lam) * ia * ib)


@dataclass(frozen=True)
class ConstraintCurve:
    """Strongest allowed strength versus interaction range.

    entries hold (lam, alpha_max, z_best) rows with lam increasing.
    """

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(l), float(a), float(z))
                        for l, a, z in self.entries)
        if not entries:
            raise ValueError("constraint curve needs at least one entry")
        lams = np.array([e[0] for e in entries])
        if np.any(np.diff(lams) <= 0):
            raise ValueError("interaction ranges must be increasing")
        if any(not (a > 0) for _, a, _ in entries):
            raise ValueError("alpha_max must be positive")
        object.__setattr__(self, "entries", entries)

    @property
    def lambdas(self):
        return np.array([e[0] for e in self.entries])

    @property
    def alpha_max(self):
        return np.array([e[1] for e in self.entries])

    @property
    def z_best(self):
        return np.array([e[2] for e in self.entries])

    def alpha_at(self, lam: float) -> float:
        """Log-log interpolated bound at one range."""
        return float(np.exp(np.interp(np.log(lam), np.log(self.lambdas),
                                      np.log(self.alpha_max))))


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _refine_minimum(objective, lo, hi, rel_tol=1e-4):
    # golden-section on log z; objective smooth and unimodal in the bracket
    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(math.exp(c)), objective(math.exp(d))
    while (b - a) > rel_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(math.exp(d))
    z = math.exp(0.5 * (a + b))
    return z, objective(z)


def _strongest_constraint(half_width_at, z_lo, z_hi, stack_a, stack_b,
                          lam, coarse_points):
    params = YukawaParams(1.0, lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid = np.geomspace(z_lo, z_hi, coarse_points)
        p1 = np.abs(yukawa_plate_pressure(stack_a, stack_b, grid, params))
        if not np.all(p1 > 0):
            raise ValueError("degenerate stack: zero reference pressure")
        vals = np.asarray(half_width_at(grid), dtype=float) / p1
        i = int(np.argmin(vals))

        def objective(z):
            return (float(half_width_at(z))
                    / abs(yukawa_plate_pressure(stack_a, stack_b, z, params)))

        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if lo == hi:
            return float(grid[i]), float(vals[i])
        return _refine_minimum(objective, lo, hi)


def constraint_curve(band, stack_a: LayerStack, stack_b: LayerStack,
                     lambdas, coarse_points: int = 60) -> ConstraintCurve:
    """Invert a confidence band into bounds on the Yukawa strength.

    For each range lam, any allowed strength must keep the Yukawa
    pressure within the band everywhere, so the bound is the minimum
    over separation of half_width(z)/|P(z; alpha_g=1, lam)|.  The
    minimum is located on a coarse log grid and sharpened by
    golden-section refinement; z_best records the minimizer.

    Parameters
    ----------
    band : ConfidenceBand
        Its z grid defines the search range.
    stack_a, stack_b : LayerStack
    lambdas : array_like
        Interaction ranges, m.
    """
    lams = np.sort(np.asarray(lambdas, dtype=float))
    if lams.size == 0 or np.any(lams <= 0):
        raise ValueError("interaction ranges must be positive")
    z_lo, z_hi = float(band.z[0]), float(band.z[-1])
    entries = []
    for lam in lams:
        _check_range_validity(lam)
        z_best, alpha = _strongest_constraint(
            band.half_width_at, z_lo, z_hi, stack_a, stack_b,
            lam, coarse_points)
        entries.append((float(lam), alpha, z_best))
    return ConstraintCurve(tuple(entries))


def legacy_rms_constraint(sigma: float, stack_a: LayerStack,
                          stack_b: LayerStack, z_grid, lambdas,
                          coarse_points: int = 60) -> ConstraintCurve:
    """Constraint from a single flat error figure instead of a band.

    The historical recipe: the Yukawa pressure may not exceed a
    constant half-width sigma anywhere on the sampled separations.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size < 2 or np.any(z_grid <= 0):
        raise ValueError("z_grid needs at least two positive separations")
    z_lo, z_hi = float(z_grid.min()), float(z_grid.max())
    lams = np.sort(np.asarray(lambdas, dtype=float))
    if lams.size == 0 or np.any(lams <= 0):
        raise ValueError("interaction ranges must be positive")
    entries = []
    for lam in lams:
        _check_range_validity(lam)
        z_best, alpha = _strongest_constraint(
            lambda z: sigma * np.ones_like(np.asarray(z, dtype=float)),
            z_lo, z_hi, stack_a, stack_b, lam, coarse_points)
        entries.append((float(lam), alpha, z_best))
    return ConstraintCurve(tuple(entries))


def load_layer_stack(path, label: str = "") -> LayerStack:
    """Read a stack file: one "density_kg_m3 thickness_nm" per line.

    The terminal line uses "inf" for the substrate; '#' starts a
    comment.
    """
    layers = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'density thickness_nm'")
            try:
                density = float(parts[0])
                thickness = (math.inf if parts[1].lower() == "inf"
                             else float(parts[1]) * 1e-9)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            layers.append(Layer(density, thickness))
    if not layers:
        raise ValueError(f"{path}: no layers found")
    return LayerStack(tuple(layers), label or str(path))


def save_constraint_csv(curve: ConstraintCurve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda_m", "alpha_max", "z_best_m"])
        for lam, alpha, z in curve.entries:
            w.writerow([f"{lam:.10e}", f"{alpha:.10e}", f"{z:.10e}"])


def load_constraint_csv(path) -> ConstraintCurve:
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != [
                "lambda_m", "alpha_max", "z_best_m"]:
            raise ValueError(
                f"{path}: expected header lambda_m,alpha_max,z_best_m")
        for row in reader:
            if row:
                entries.append((float(row[0]), float(row[1]), float(row[2])))
    if not entries:
        raise ValueError(f"{path}: no data rows")
    return ConstraintCurve(tuple(entries))
