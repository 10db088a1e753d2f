"""Synthetic training-sample pipeline over a directory of images.

There is no renderer here: input images stand in for renders, and the
peg/hole annotations come from sampling the virtual scene geometry (camera
pose around the hole, peg start pose) and projecting the true points.
Each output sample composites a render stand-in with a natural-image
overlay whose alpha channel is another image converted to grayscale, then
applies the crop/flip/blur/resize augmentation. Images are written as PNG
with one JSON annotation record {"peg": [x, y], "hole": [x, y]} per image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .geometry import DEFAULT_INTRINSICS, CameraIntrinsics, CameraModel, project
from .heatmap import AugmentParams, augment_with_points, composite_overlay
from .scene import (
    CameraSamplingRanges,
    HoleScenario,
    default_start_ranges,
    sample_camera_pose,
    sample_peg_start,
    scenario_by_name,
)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def load_image(path) -> np.ndarray:
    with PILImage.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(path, image: np.ndarray) -> None:
    PILImage.fromarray(image).save(path, format="PNG")


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
    if not files:
        raise FileNotFoundError(f"no images found in {directory}")
    return files


def _resize_to(image: np.ndarray, width: int, height: int) -> np.ndarray:
    if image.shape[0] == height and image.shape[1] == width:
        return image
    pil = PILImage.fromarray(image).resize((width, height), PILImage.BILINEAR)
    return np.asarray(pil)


@dataclass
class DatagenSummary:
    written: int
    output_dir: str
    annotations_file: str


def generate_dataset(input_dir, output_dir, count: int, seed: int,
                     scenario: HoleScenario | None = None,
                     camera_ranges: CameraSamplingRanges = CameraSamplingRanges(),
                     augment_params: AugmentParams = AugmentParams(),
                     intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS) -> DatagenSummary:
    """Write ``count`` augmented composites plus annotations.json."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if scenario is None:
        scenario = scenario_by_name("plastic")
    rng = np.random.default_rng(seed)
    files = list_images(input_dir)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start_ranges = default_start_ranges(scenario)

    records = []
    for i in range(count):
        pose = sample_camera_pose(camera_ranges, scenario.hole_center(), rng)
        camera = CameraModel(intrinsics, pose)
        tip = sample_peg_start(scenario, start_ranges, rng)
        peg_px = project(camera, tip.translation)
        hole_px = project(camera, scenario.hole_center())

        picks = rng.integers(0, len(files), size=3)
        render = _resize_to(load_image(files[picks[0]]), intrinsics.width, intrinsics.height)
        overlay = _resize_to(load_image(files[picks[1]]), intrinsics.width, intrinsics.height)
        alpha = _resize_to(load_image(files[picks[2]]), intrinsics.width, intrinsics.height)
        composite = composite_overlay(render, overlay, alpha)

        image, (peg_out, hole_out) = augment_with_points(
            composite, [peg_px, hole_px], augment_params, rng)
        name = f"sample_{i:05d}.png"
        save_image(out / name, image)
        records.append({"file": name,
                        "peg": [peg_out.x, peg_out.y],
                        "hole": [hole_out.x, hole_out.y]})

    annotations = out / "annotations.json"
    with open(annotations, "w", encoding="utf-8") as f:
        json.dump(records, f, indent=2, sort_keys=True)
        f.write("\n")
    return DatagenSummary(written=count, output_dir=str(out), annotations_file=str(annotations))
