"""Sphere-plate geometry conversion and surface-roughness averaging.

The dynamic measurement observable is the gradient of the sphere-plate
force.  For a sphere of radius R much larger than the separation this
gradient equals 2 pi R times the pressure between parallel plates, so
dividing by -2 pi R recovers the plate-plate pressure.  Stochastic
surface roughness is folded in by geometric averaging: the pressure is
evaluated at every combination of local heights of the two facing
surfaces and weighted by their height distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SphereGeometry",
    "RoughnessProfile",
    "pft_pressure",
    "roughness_corrected_pressure",
    "load_roughness_profile",
]


@dataclass(frozen=True)
class SphereGeometry:
    """Sphere radius and its absolute uncertainty, both in meters."""

    radius: float
    radius_error: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")
        if self.radius_error < 0:
            raise ValueError("radius_error must be nonnegative")


@dataclass(frozen=True)
class RoughnessProfile:
    """Discrete height distribution of one surface.

    Heights are measured from the mean plane, in meters, so the weighted
    mean must vanish; weights are occupation probabilities.

    Parameters
    ----------
    heights : array_like
        Height of each histogram bin relative to the mean plane.
    weights : array_like
        Probability of each bin; nonnegative, summing to one.
    """

    heights: np.ndarray
    weights: np.ndarray
    max_height: float = field(init=False)

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.heights, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if h.ndim != 1 or h.shape != w.shape or h.size == 0:
            raise ValueError("heights and weights must be matching 1-d arrays")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"weights sum to {total:.8f}, expected 1")
        span = float(np.max(np.abs(h)))
        mean = float(w @ h)
        if abs(mean) > max(1e-13, 1e-9 * span):
            raise ValueError("heights must average to zero over the weights")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "max_height", span)

    @classmethod
    def flat(cls) -> "RoughnessProfile":
        """Perfectly smooth surface."""
        return cls(np.zeros(1), np.ones(1))

    @classmethod
    def two_point(cls, h: float) -> "RoughnessProfile":
        """Symmetric two-level surface at heights +-h."""
        return cls(np.array([-h, h]), np.array([0.5, 0.5]))

    @classmethod
    def from_histogram(cls, heights: Sequence[float],
                       weights: Sequence[float]) -> "RoughnessProfile":
        """Build a profile from raw histogram rows.

        Weights are normalized and heights are shifted to zero weighted
        mean, which is what raw AFM histograms need.
        """
        h = np.asarray(heights, dtype=float)
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("histogram weights must be nonnegative with positive sum")
        w = w / w.sum()
        return cls(h - w @ h, w)

    @classmethod
    def gaussian(cls, sigma: float, n_points: int = 9,
                 clip: float = 3.0) -> "RoughnessProfile":
        """Discretized zero-mean normal height distribution.

        Parameters
        ----------
        sigma : float
            Rms roughness in meters.
        n_points : int, optional
            Number of histogram levels.
        clip : float, optional
            Half-range of the grid in units of sigma.
        """
        if sigma < 0 or n_points < 1:
            raise ValueError("sigma must be >= 0 and n_points >= 1")
        if sigma == 0:
            return cls.flat()
        h = np.linspace(-clip * sigma, clip * sigma, n_points)
        w = np.exp(-0.5 * (h / sigma) ** 2)
        return cls.from_histogram(h, w)


def pft_pressure(force_gradient: float, sphere: SphereGeometry) -> float:
    """Equivalent plate-plate pressure for a sphere-plate force gradient.

    Parameters
    ----------
    force_gradient : float
        d F / d z of the sphere-plate force, N/m.
    sphere : SphereGeometry
        Sphere radius (R >> z assumed).

    Returns
    -------
    float
        P = -force_gradient / (2 pi R), in Pa.
    """
    return -force_gradient / (2.0 * math.pi * sphere.radius)


def roughness_corrected_pressure(pressure_fn: Callable[[float], float],
                                 profile_a: RoughnessProfile,
                                 profile_b: RoughnessProfile,
                                 z: float) -> float:
    """Geometric average of the pressure over both height distributions.

    Parameters
    ----------
    pressure_fn : callable
        Smooth-plate pressure as a function of separation, Pa.
    profile_a, profile_b : RoughnessProfile
        Height distributions of the two facing surfaces.
    z : float
        Mean-plane separation in meters.

    Returns
    -------
    float
        Sum over height pairs of w_i v_j pressure_fn(z + h_i + g_j).

    Raises
    ------
    ValueError
        If any height pair closes the gap completely.
    """
    sep = z + np.add.outer(profile_a.heights, profile_b.heights)
    if np.any(sep <= 0):
        i, j = np.unravel_index(int(np.argmin(sep)), sep.shape)
        raise ValueError(
            "surfaces touch: heights "
            f"({profile_a.heights[i]:.3e}, {profile_b.heights[j]:.3e}) m "
            f"close the {z:.3e} m gap")
    w = np.outer(profile_a.weights, profile_b.weights)
    values = np.array([pressure_fn(float(s)) for s in sep.ravel()])
    return float(w.ravel() @ values)


def load_roughness_profile(path) -> RoughnessProfile:
    """Read a height histogram from a text file.

    Rows are "height_nm weight"; '#' starts a comment.  Weights are
    normalized and heights recentered to the mean plane.
    """
    heights = []
    weights = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'height_nm weight'")
        heights.append(float(parts[0]) * 1e-9)
        weights.append(float(parts[1]))
    if not heights:
        raise ValueError(f"{path}: no histogram rows found")
    return RoughnessProfile.from_histogram(heights, weights)
