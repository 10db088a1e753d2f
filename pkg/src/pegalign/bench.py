"""Monte-Carlo benchmark harness, statistics and report rendering.

Trials are seeded independently (trial seed = master seed XOR trial index)
so methods compared in one report see identical worlds and reports are
reproducible bit-for-bit. Success rates are compared with a one-sided
Fisher exact test against the best entry; entries not significantly lower
at p = 5% share the "significant" flag, mirroring the bolding convention
of the evaluation table.
"""

from __future__ import annotations

import configparser
import datetime as _dt
import io
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb

import numpy as np

from . import __version__
from .baselines import (
    RandomSearchParams,
    SpiralParams,
    optimal_align,
    random_search,
    spiral_search,
)
from .estimator import ESTIMATOR_PRESETS, NoiseModel, OracleEstimator
from .scene import HoleScenario, scenario_by_name
from .servo import EstimationStarvedError, default_servo_config, run_servo
from .world import (
    DEFAULT_CALIB_BOUNDS,
    DEFAULT_GRASP_BOUNDS,
    MotionModel,
    PerturbBounds,
    TrialResult,
    attempt_insertion,
    make_world,
)

METHODS = ("random", "spiral", "servo", "servo_then_spiral", "optimal")

_METHOD_STREAM = 0x5EED  # secondary seed word for method-local randomness


class ConfigError(ValueError):
    """Invalid benchmark configuration (unknown key, bad value, ...)."""


@dataclass(frozen=True)
class ServoSettings:
    alpha_tau: float = 0.9
    alpha_gamma: float = 0.9
    alpha_phi: float = 0.9
    phi_t: float | None = None  # None: hole diameter / 20
    loop_dt: float = 1.0 / 30.0
    max_duration: float = 10.0
    boundary_factor: float = 3.0  # x uncertainty radius, drift from the start position


@dataclass(frozen=True)
class SpiralSettings:
    pitch_factor: float = 1.5  # x clearance, used when pitch is None
    pitch: float | None = None
    speed: float = 0.01

    def resolve(self, scenario: HoleScenario) -> SpiralParams:
        pitch = self.pitch if self.pitch is not None else self.pitch_factor * scenario.clearance
        return SpiralParams(pitch=pitch, speed=self.speed)


@dataclass(frozen=True)
class WorldSettings:
    calib: PerturbBounds = DEFAULT_CALIB_BOUNDS
    grasp: PerturbBounds = DEFAULT_GRASP_BOUNDS
    cameras: int = 2


@dataclass(frozen=True)
class BenchConfig:
    scenario: HoleScenario
    methods: tuple[str, ...] = ("servo",)
    trials: int = 100
    seed: int = 0
    estimator_name: str = "synth"
    noise: NoiseModel = ESTIMATOR_PRESETS["synth"]
    servo: ServoSettings = ServoSettings()
    spiral: SpiralSettings = SpiralSettings()
    random_search: RandomSearchParams = RandomSearchParams()
    motion: MotionModel = MotionModel()
    world: WorldSettings = WorldSettings()

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r} (known: {', '.join(METHODS)})")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @staticmethod
    def default(scenario: str = "plastic") -> "BenchConfig":
        return BenchConfig(scenario=scenario_by_name(scenario))


def resolve_estimator(name_or_model: str | NoiseModel) -> tuple[str, NoiseModel]:
    if isinstance(name_or_model, NoiseModel):
        return "custom", name_or_model
    try:
        return name_or_model, ESTIMATOR_PRESETS[name_or_model]
    except KeyError:
        known = ", ".join(sorted(ESTIMATOR_PRESETS))
        raise ConfigError(f"unknown estimator preset {name_or_model!r} (known: {known})") from None


# ---------------------------------------------------------------------------
# per-trial execution


@dataclass(frozen=True)
class TrialRow:
    index: int
    seed: int
    success: bool
    elapsed_s: float
    insertion_depth_m: float
    outcome_detail: str


def _servo_trial(world, config: BenchConfig, rng: np.random.Generator,
                 method: str) -> TrialResult:
    sc = world.scenario
    estimator = OracleEstimator(config.noise, rng)
    servo_cfg = default_servo_config(
        world,
        phi_t=config.servo.phi_t,
        alpha_tau=config.servo.alpha_tau,
        alpha_gamma=config.servo.alpha_gamma,
        alpha_phi=config.servo.alpha_phi,
        loop_dt=config.servo.loop_dt,
        max_duration=config.servo.max_duration,
    )
    boundary = config.servo.boundary_factor * sc.uncertainty_radius
    t0 = world.clock
    try:
        outcome = run_servo(world, world.believed_cameras, estimator, servo_cfg,
                            boundary, config.motion)
    except EstimationStarvedError:
        return TrialResult(method, False, world.clock - t0, 0.0, "estimation_starved")
    if outcome.status != "converged":
        return TrialResult(method, False, world.clock - t0, 0.0, outcome.status)
    depth, _ = attempt_insertion(world, sc.required_depth, config.motion)
    if depth >= sc.required_depth:
        return TrialResult(method, True, world.clock - t0, depth, "converged")
    if method != "servo_then_spiral":
        return TrialResult(method, False, world.clock - t0, depth, "misaligned")
    # servo converged but missed: finish with a spiral over the residual
    # uncertainty region of radius 2 phi_t
    shrunk = replace(sc, uncertainty_radius=2.0 * servo_cfg.phi_t)
    chase = spiral_search(world, shrunk, config.spiral.resolve(sc), config.motion)
    return TrialResult(method, chase.success, world.clock - t0, chase.insertion_depth,
                       f"servo+{chase.outcome_detail}")


def run_trial(method: str, config: BenchConfig, trial_seed: int) -> TrialResult:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    world = make_world(config.scenario, trial_seed,
                       calib_bounds=config.world.calib,
                       grasp_bounds=config.world.grasp,
                       n_cameras=config.world.cameras)
    rng = np.random.default_rng([trial_seed, _METHOD_STREAM])
    if method == "random":
        return random_search(world, config.scenario, config.random_search, rng, config.motion)
    if method == "spiral":
        return spiral_search(world, config.scenario, config.spiral.resolve(config.scenario),
                             config.motion)
    if method == "optimal":
        return optimal_align(world, config.scenario, config.motion)
    return _servo_trial(world, config, rng, method)


# ---------------------------------------------------------------------------
# aggregation and statistics


@dataclass
class MethodResult:
    method: str
    trials: int
    successes: int
    success_rate: float
    mean_success_time_s: float | None
    significant: bool
    rows: list[TrialRow] = field(default_factory=list)


@dataclass
class BenchReport:
    scenario: str
    trials: int
    seed: int
    entries: list[MethodResult]


def _fisher_tail(s1: int, n1: int, s2: int, n2: int) -> Fraction:
    """Exact one-sided Fisher p-value that rate s1/n1 is lower than s2/n2:
    the hypergeometric left tail P(X <= s1) with the table margins fixed,
    as an exact rational."""
    for s, n in ((s1, n1), (s2, n2)):
        if n <= 0 or not (0 <= s <= n):
            raise ValueError("need 0 <= successes <= trials and trials > 0")
    total, successes = n1 + n2, s1 + s2
    acc = 0
    for j in range(max(0, successes - n2), min(successes, s1) + 1):
        acc += comb(successes, j) * comb(total - successes, n1 - j)
    return Fraction(acc, comb(total, n1))


def fisher_pvalue_less(s1: int, n1: int, s2: int, n2: int) -> float:
    """Float form of the exact one-sided Fisher p-value."""
    return float(_fisher_tail(s1, n1, s2, n2))


def significance_flags(counts: list[tuple[int, int]], p_threshold: str | float = "0.05") -> list[bool]:
    """Flag the best success rate and every entry whose one-sided Fisher
    exact test against it is not significant at ``p_threshold``.

    The tail probability and the threshold are compared as exact rationals,
    so boundary tables (p exactly 5%) flag consistently.
    """
    if not counts:
        raise ValueError("counts must be non-empty")
    rates = []
    for s, n in counts:
        if n <= 0 or not (0 <= s <= n):
            raise ValueError("need 0 <= successes <= trials and trials > 0")
        rates.append(Fraction(s, n))
    threshold = Fraction(str(p_threshold))
    best = max(range(len(rates)), key=rates.__getitem__)
    flags = []
    for i, (s, n) in enumerate(counts):
        if i == best:
            flags.append(True)
        else:
            flags.append(_fisher_tail(s, n, *counts[best]) >= threshold)
    return flags


def run_bench(config: BenchConfig) -> BenchReport:
    """Run every configured method over the same seeded trials and
    aggregate success rates, mean successful times and significance."""
    entries: list[MethodResult] = []
    for method in config.methods:
        rows: list[TrialRow] = []
        for i in range(config.trials):
            trial_seed = config.seed ^ i
            r = run_trial(method, config, trial_seed)
            rows.append(TrialRow(index=i, seed=trial_seed, success=r.success,
                                 elapsed_s=r.elapsed, insertion_depth_m=r.insertion_depth,
                                 outcome_detail=r.outcome_detail))
        successes = sum(1 for r in rows if r.success)
        times = [r.elapsed_s for r in rows if r.success]
        entries.append(MethodResult(
            method=method,
            trials=config.trials,
            successes=successes,
            success_rate=successes / config.trials,
            mean_success_time_s=(sum(times) / len(times)) if times else None,
            significant=False,
            rows=rows,
        ))
    flags = significance_flags([(e.successes, e.trials) for e in entries])
    for e, f in zip(entries, flags):
        e.significant = f
    return BenchReport(scenario=config.scenario.name, trials=config.trials,
                       seed=config.seed, entries=entries)


# ---------------------------------------------------------------------------
# single-trial demo and estimator-accuracy harness


@dataclass
class DemoResult:
    scenario: str
    seed: int
    status: str
    success: bool
    elapsed_s: float
    iterations: int
    final_planar_error_m: float
    insertion_depth_m: float
    trace_csv: str


def run_demo(config: BenchConfig, seed: int | None = None) -> DemoResult:
    """One fully-traced servo trial followed by the insertion attempt."""
    from .servo import ServoOutcome, trace_csv
    from .world import contact_query

    trial_seed = config.seed if seed is None else seed
    world = make_world(config.scenario, trial_seed,
                       calib_bounds=config.world.calib,
                       grasp_bounds=config.world.grasp,
                       n_cameras=config.world.cameras)
    rng = np.random.default_rng([trial_seed, _METHOD_STREAM])
    estimator = OracleEstimator(config.noise, rng)
    servo_cfg = default_servo_config(
        world,
        phi_t=config.servo.phi_t,
        alpha_tau=config.servo.alpha_tau,
        alpha_gamma=config.servo.alpha_gamma,
        alpha_phi=config.servo.alpha_phi,
        loop_dt=config.servo.loop_dt,
        max_duration=config.servo.max_duration,
    )
    boundary = config.servo.boundary_factor * config.scenario.uncertainty_radius
    t0 = world.clock
    try:
        outcome = run_servo(world, world.believed_cameras, estimator, servo_cfg,
                            boundary, config.motion)
    except EstimationStarvedError:
        outcome = ServoOutcome(status="estimation_starved",
                               final_planar_error=contact_query(world).planar_error,
                               elapsed=world.clock - t0, iterations=0, trace=[])
    depth = 0.0
    if outcome.status == "converged":
        depth, _ = attempt_insertion(world, config.scenario.required_depth, config.motion)
    return DemoResult(
        scenario=config.scenario.name,
        seed=trial_seed,
        status=outcome.status,
        success=depth >= config.scenario.required_depth,
        elapsed_s=world.clock - t0,
        iterations=outcome.iterations,
        final_planar_error_m=outcome.final_planar_error,
        insertion_depth_m=depth,
        trace_csv=trace_csv(outcome),
    )


def run_accuracy(noise: NoiseModel, samples: int, thresholds: list[float],
                 seed: int) -> list[float]:
    """Detection success rates of the noisy estimator versus the exact
    projections, over freshly sampled scenes."""
    from .estimator import EstimatePair, accuracy_curve
    from .geometry import DEFAULT_INTRINSICS, CameraModel, project
    from .scene import CameraSamplingRanges, default_start_ranges, sample_camera_pose, sample_peg_start

    if samples < 1:
        raise ValueError("samples must be >= 1")
    scenario = scenario_by_name("plastic")
    rng = np.random.default_rng(seed)
    camera = CameraModel(DEFAULT_INTRINSICS,
                         sample_camera_pose(CameraSamplingRanges(), scenario.hole_center(), rng))
    estimator = OracleEstimator(noise, rng)
    ranges = default_start_ranges(scenario)
    estimates, truths = [], []
    for _ in range(samples):
        tip = sample_peg_start(scenario, ranges, rng).translation
        hole = scenario.hole_center()
        truths.append(EstimatePair(peg=project(camera, tip), hole=project(camera, hole)))
        estimates.append(estimator.estimate(tip, hole, camera))
    return accuracy_curve(estimates, truths, thresholds)


# ---------------------------------------------------------------------------
# report serialization


def report_to_dict(report: BenchReport) -> dict:
    return {
        "scenario": report.scenario,
        "trials": report.trials,
        "seed": report.seed,
        "entries": [
            {
                "method": e.method,
                "trials": e.trials,
                "successes": e.successes,
                "success_rate": e.success_rate,
                "mean_success_time_s": e.mean_success_time_s,
                "significant": e.significant,
                "rows": [
                    {
                        "index": r.index,
                        "seed": r.seed,
                        "success": r.success,
                        "elapsed_s": r.elapsed_s,
                        "insertion_depth_m": r.insertion_depth_m,
                        "outcome_detail": r.outcome_detail,
                    }
                    for r in e.rows
                ],
            }
            for e in report.entries
        ],
    }


def report_from_dict(d: dict) -> BenchReport:
    entries = [
        MethodResult(
            method=e["method"],
            trials=e["trials"],
            successes=e["successes"],
            success_rate=e["success_rate"],
            mean_success_time_s=e["mean_success_time_s"],
            significant=e["significant"],
            rows=[TrialRow(**r) for r in e["rows"]],
        )
        for e in d["entries"]
    ]
    return BenchReport(scenario=d["scenario"], trials=d["trials"], seed=d["seed"],
                       entries=entries)


def report_json(report: BenchReport) -> str:
    """Full JSON document; the "report" section is deterministic for equal
    seeds, timestamps live in "meta" only."""
    envelope = {
        "meta": {
            "generator": "pegalign",
            "version": __version__,
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        },
        "report": report_to_dict(report),
    }
    return json.dumps(envelope, indent=2, sort_keys=True) + "\n"


def render_csv(reports: BenchReport | list[BenchReport]) -> str:
    if isinstance(reports, BenchReport):
        reports = [reports]
    lines = ["scenario,method,trials,successes,success_rate,mean_success_time_s,significant"]
    for report in reports:
        for e in report.entries:
            mean = "" if e.mean_success_time_s is None else repr(float(e.mean_success_time_s))
            lines.append(
                f"{report.scenario},{e.method},{e.trials},{e.successes},"
                f"{float(e.success_rate)!r},{mean},{str(e.significant).lower()}"
            )
    return "\n".join(lines) + "\n"


def render_markdown(reports: list[BenchReport]) -> str:
    """Success-rate/mean-time table, one row per scenario, one column per
    method; significant entries in bold."""
    methods: list[str] = []
    for rep in reports:
        for e in rep.entries:
            if e.method not in methods:
                methods.append(e.method)
    lines = ["| scenario | " + " | ".join(methods) + " |",
             "| --- |" + " --- |" * len(methods)]
    for rep in reports:
        by_method = {e.method: e for e in rep.entries}
        cells = []
        for m in methods:
            e = by_method.get(m)
            if e is None:
                cells.append("-")
                continue
            pct = f"{100.0 * e.success_rate:.0f}%"
            time = "-" if e.mean_success_time_s is None else f"{e.mean_success_time_s:.1f} s"
            cell = f"{pct} ({time})"
            cells.append(f"**{cell}**" if e.significant else cell)
        lines.append(f"| {rep.scenario} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def export_report(report: BenchReport, path, fmt: str = "json") -> None:
    if fmt == "json":
        content = report_json(report)
    elif fmt == "csv":
        content = render_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r} (use json or csv)")
    with open(path, "w", encoding="utf-8") as f:
        f.write(content)


def import_report(path) -> BenchReport:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    return report_from_dict(doc["report"] if "report" in doc else doc)


# ---------------------------------------------------------------------------
# config files (INI sections mirroring the module structure)

_SCHEMA: dict[str, set[str]] = {
    "bench": {"scenario", "method", "trials", "seed", "estimator"},
    "scenario": {"name", "hole_diameter_mm", "peg_diameter_mm", "uncertainty_radius_mm",
                 "required_depth_mm", "surface_extent_mm"},
    "estimator": {"gaussian_sigma_px", "outlier_prob", "miss_prob"},
    "servo": {"alpha_tau", "alpha_gamma", "alpha_phi", "phi_t_mm", "loop_hz",
              "max_duration_s", "boundary_factor"},
    "spiral": {"pitch_factor", "pitch_mm", "speed_mm_s"},
    "random": {"time_limit_s", "descent_depth_mm", "travel_speed_mm_s", "probe_time_s"},
    "motion": {"max_speed_mm_s", "dt_s"},
    "world": {"calib_rot_deg", "calib_trans_mm", "grasp_rot_deg", "grasp_trans_mm", "cameras"},
}


def _get(parser, section, key, cast, current):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc
    return current


def parse_config_text(text: str, base: BenchConfig | None = None) -> BenchConfig:
    """Parse the INI benchmark configuration; unknown sections or keys are
    errors. Values in the file override ``base`` (library defaults if None)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    cfg = base if base is not None else BenchConfig.default()

    scenario = cfg.scenario
    if parser.has_option("bench", "scenario"):
        scenario = scenario_by_name(parser.get("bench", "scenario"))
    if parser.has_section("scenario"):
        name = _get(parser, "scenario", "name", str, "custom")
        hole_mm = _get(parser, "scenario", "hole_diameter_mm", float, None)
        peg_mm = _get(parser, "scenario", "peg_diameter_mm", float, None)
        if hole_mm is None or peg_mm is None:
            raise ConfigError("[scenario] needs hole_diameter_mm and peg_diameter_mm")
        uncertainty_mm = _get(parser, "scenario", "uncertainty_radius_mm", float, 1.5 * peg_mm)
        depth_mm = _get(parser, "scenario", "required_depth_mm", float, 10.0)
        extent_mm = _get(parser, "scenario", "surface_extent_mm", float, 50.0)
        scenario = HoleScenario(name=name, hole_diameter=hole_mm / 1000.0,
                                peg_diameter=peg_mm / 1000.0,
                                uncertainty_radius=uncertainty_mm / 1000.0,
                                required_depth=depth_mm / 1000.0,
                                surface_extent=extent_mm / 1000.0)

    methods = cfg.methods
    if parser.has_option("bench", "method"):
        methods = tuple(m.strip() for m in parser.get("bench", "method").split(",") if m.strip())

    estimator_name, noise = cfg.estimator_name, cfg.noise
    if parser.has_option("bench", "estimator"):
        estimator_name, noise = resolve_estimator(parser.get("bench", "estimator"))
    if parser.has_section("estimator"):
        noise = NoiseModel(
            gaussian_sigma=_get(parser, "estimator", "gaussian_sigma_px", float, noise.gaussian_sigma),
            outlier_prob=_get(parser, "estimator", "outlier_prob", float, noise.outlier_prob),
            miss_prob=_get(parser, "estimator", "miss_prob", float, noise.miss_prob),
            roi=noise.roi,
        )
        estimator_name = "custom"

    phi_t_mm = _get(parser, "servo", "phi_t_mm", float, None) if parser.has_section("servo") else None
    loop_hz = _get(parser, "servo", "loop_hz", float, 1.0 / cfg.servo.loop_dt) \
        if parser.has_section("servo") else 1.0 / cfg.servo.loop_dt
    servo = ServoSettings(
        alpha_tau=_get(parser, "servo", "alpha_tau", float, cfg.servo.alpha_tau),
        alpha_gamma=_get(parser, "servo", "alpha_gamma", float, cfg.servo.alpha_gamma),
        alpha_phi=_get(parser, "servo", "alpha_phi", float, cfg.servo.alpha_phi),
        phi_t=(phi_t_mm / 1000.0) if phi_t_mm is not None else cfg.servo.phi_t,
        loop_dt=1.0 / loop_hz,
        max_duration=_get(parser, "servo", "max_duration_s", float, cfg.servo.max_duration),
        boundary_factor=_get(parser, "servo", "boundary_factor", float, cfg.servo.boundary_factor),
    ) if parser.has_section("servo") else cfg.servo

    if parser.has_section("spiral"):
        pitch_mm = _get(parser, "spiral", "pitch_mm", float, None)
        spiral = SpiralSettings(
            pitch_factor=_get(parser, "spiral", "pitch_factor", float, cfg.spiral.pitch_factor),
            pitch=(pitch_mm / 1000.0) if pitch_mm is not None else cfg.spiral.pitch,
            speed=_get(parser, "spiral", "speed_mm_s", float, cfg.spiral.speed * 1000.0) / 1000.0,
        )
    else:
        spiral = cfg.spiral

    if parser.has_section("random"):
        random_p = RandomSearchParams(
            time_limit=_get(parser, "random", "time_limit_s", float, cfg.random_search.time_limit),
            descent_depth=_get(parser, "random", "descent_depth_mm", float,
                               cfg.random_search.descent_depth * 1000.0) / 1000.0,
            travel_speed=_get(parser, "random", "travel_speed_mm_s", float,
                              cfg.random_search.travel_speed * 1000.0) / 1000.0,
            probe_time=_get(parser, "random", "probe_time_s", float, cfg.random_search.probe_time),
        )
    else:
        random_p = cfg.random_search

    if parser.has_section("motion"):
        motion = MotionModel(
            max_speed=_get(parser, "motion", "max_speed_mm_s", float,
                           cfg.motion.max_speed * 1000.0) / 1000.0,
            dt=_get(parser, "motion", "dt_s", float, cfg.motion.dt),
        )
    else:
        motion = cfg.motion

    if parser.has_section("world"):
        world = WorldSettings(
            calib=PerturbBounds(
                max_rot_deg=_get(parser, "world", "calib_rot_deg", float, cfg.world.calib.max_rot_deg),
                max_trans=_get(parser, "world", "calib_trans_mm", float,
                               cfg.world.calib.max_trans * 1000.0) / 1000.0,
            ),
            grasp=PerturbBounds(
                max_rot_deg=_get(parser, "world", "grasp_rot_deg", float, cfg.world.grasp.max_rot_deg),
                max_trans=_get(parser, "world", "grasp_trans_mm", float,
                               cfg.world.grasp.max_trans * 1000.0) / 1000.0,
            ),
            cameras=_get(parser, "world", "cameras", int, cfg.world.cameras),
        )
    else:
        world = cfg.world

    return BenchConfig(
        scenario=scenario,
        methods=methods,
        trials=_get(parser, "bench", "trials", int, cfg.trials),
        seed=_get(parser, "bench", "seed", int, cfg.seed),
        estimator_name=estimator_name,
        noise=noise,
        servo=servo,
        spiral=spiral,
        random_search=random_p,
        motion=motion,
        world=world,
    )
