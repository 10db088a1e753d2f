"""Point estimators standing in for the trained heatmap network.

The simulator never renders images; an estimator consumes the true 3-D
peg/hole points and the true camera, and returns pixel estimates the way
the network would: exact projections corrupted by a configurable noise
model. A point whose (noisy) projection leaves the region of interest is
reported as undetected, mirroring a heatmap argmax that can only land
inside the network's crop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .geometry import CameraModel, PixelPoint, project


@dataclass(frozen=True)
class EstimatePair:
    peg: PixelPoint
    hole: PixelPoint
    peg_detected: bool = True
    hole_detected: bool = True


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian pixel noise with outlier and miss probabilities.

    Outliers are uniform over the ROI rectangle (x0, y0, width, height).
    """

    gaussian_sigma: float = 0.0
    outlier_prob: float = 0.0
    miss_prob: float = 0.0
    roi: tuple[float, float, float, float] = (0.0, 0.0, 224.0, 224.0)

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be non-negative")
        for p in (self.outlier_prob, self.miss_prob):
            if not (0 <= p <= 1):
                raise ValueError("probabilities must be in [0, 1]")
        if self.roi[2] <= 0 or self.roi[3] <= 0:
            raise ValueError("ROI must have positive extent")

    def contains(self, p: PixelPoint) -> bool:
        x0, y0, w, h = self.roi
        return x0 <= p.x <= x0 + w and y0 <= p.y <= y0 + h

    def clamp(self, p: PixelPoint) -> PixelPoint:
        x0, y0, w, h = self.roi
        return PixelPoint(min(max(p.x, x0), x0 + w), min(max(p.y, y0), y0 + h))


#: Noise presets named after the observation domains they imitate. "synth"
#: approximates the nearly-clean synthetic-trained detector; "metal_on_plastic"
#: approximates a detector running far outside its training domain, which
#: mostly produces outliers.
ESTIMATOR_PRESETS: dict[str, NoiseModel] = {
    "exact": NoiseModel(),
    "synth": NoiseModel(gaussian_sigma=1.5, outlier_prob=0.005),
    "metal_on_plastic": NoiseModel(gaussian_sigma=1.5, outlier_prob=0.40),
}


class PointEstimator(Protocol):
    """Behavioral contract of the per-trial point estimator."""

    def estimate(self, true_peg, true_hole, camera: CameraModel) -> EstimatePair:
        ...


class OracleEstimator:
    """Projects the true points through the true camera and applies a noise
    model. One instance per trial; deterministic given its rng."""

    def __init__(self, noise: NoiseModel, rng: np.random.Generator):
        self.noise = noise
        self.rng = rng

    def _one(self, point_3d, camera: CameraModel) -> tuple[PixelPoint, bool]:
        exact = project(camera, point_3d)  # raises BehindCameraError
        if self.rng.uniform() < self.noise.miss_prob:
            return exact, False
        if self.rng.uniform() < self.noise.outlier_prob:
            x0, y0, w, h = self.noise.roi
            return PixelPoint(self.rng.uniform(x0, x0 + w), self.rng.uniform(y0, y0 + h)), True
        dx, dy = self.rng.normal(0.0, self.noise.gaussian_sigma, size=2)
        # an argmax can only land inside the network's crop, so estimates of
        # points drifting out of view pile up at the ROI edge
        return self.noise.clamp(PixelPoint(exact.x + dx, exact.y + dy)), True

    def estimate(self, true_peg, true_hole, camera: CameraModel) -> EstimatePair:
        peg, peg_ok = self._one(true_peg, camera)
        hole, hole_ok = self._one(true_hole, camera)
        return EstimatePair(peg=peg, hole=hole, peg_detected=peg_ok, hole_detected=hole_ok)


def oracle_estimate(true_peg, true_hole, true_camera: CameraModel, noise: NoiseModel,
                    rng: np.random.Generator) -> EstimatePair:
    """Single-shot form of :class:`OracleEstimator`."""
    return OracleEstimator(noise, rng).estimate(true_peg, true_hole, true_camera)


def accuracy_curve(estimates: list[EstimatePair], truths: list[EstimatePair],
                   thresholds: list[float]) -> list[float]:
    """Fraction of samples where both points are detected and within each
    pixel threshold of the truth. Thresholds must be sorted ascending."""
    if len(estimates) != len(truths):
        raise ValueError(f"length mismatch: {len(estimates)} estimates vs {len(truths)} truths")
    if not estimates:
        raise ValueError("need at least one sample")
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    errors = []
    for est, truth in zip(estimates, truths):
        if est.peg_detected and est.hole_detected:
            errors.append(max(est.peg.distance_to(truth.peg), est.hole.distance_to(truth.hole)))
        else:
            errors.append(math.inf)
    errors = np.array(errors)
    return [float(np.mean(errors <= t)) for t in thresholds]


def accuracy_csv(thresholds: list[float], rates: list[float]) -> str:
    lines = ["threshold_px,success_rate"]
    lines += [f"{t!r},{r!r}" for t, r in zip(thresholds, rates)]
    return "\n".join(lines) + "\n"
