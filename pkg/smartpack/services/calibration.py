"""Anchor calibration: normalised least squares, downhill simplex, grid oracle.

Each bundled problem fits a handful of parameters against its own anchors,
in dependency order, with every upstream parameter frozen at its latest value.
Hinge anchors (``kind`` upper/lower in the anchor inputs) only contribute when
the model is on the wrong side of the observed value.
"""

import concurrent.futures
import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError
from scipy.optimize import minimize

from smartpack.core.exceptions import AppError, CalibrationError, InvalidInputError, UnsupportedError
from smartpack.schemas.calibration import Anchor, AnchorResidual, AnchorSet, FitResult
from smartpack.schemas.params import ModelParams, SpoilageParams
from smartpack.schemas.scenario import EnvCondition
from smartpack.schemas.state import ReleaseState, SpoilageState
from smartpack.services import release, rf_link, sensor, spoilage, thermal

if TYPE_CHECKING:
    from smartpack.repositories.anchor_repo import AnchorRepo
    from smartpack.repositories.params_repo import ParamsRepo

logger = logging.getLogger(__name__)

PENALTY = 1.0e12
SIMPLEX_XATOL = 1.0e-8
SIMPLEX_MAXITER = 2000
SIMPLEX_STEP = 0.05
GRID_MAX_DIM = 4
GRID_MIN_RESOLUTION = 16
EDGE_BISECTIONS = 40

# 3-methyl butanol tracks butanone at the ratio of their reported headspace levels
METHYLBUTANOL_RATIO = 45.0 / 660.0

MARKER_DT_H = 10.0 / 3600.0
REDUCED_LOOP_DT_H = 0.25
FOOD_OVERRIDE_KEYS = ("tvbn_cap", "tvbn_initial", "growth_rate_rt", "q10")

Bounds = Sequence[Tuple[float, float]]
Predictor = Callable[[Dict[str, Any], ModelParams], float]


# ── Parameter paths ──────────────────────────────────────────────────────────

def _child(node: Any, part: str) -> Any:
    if isinstance(node, list):
        for item in node:
            if item.get("name") == part:
                return item
        raise CalibrationError(f"no table entry named {part!r}")
    return node[part]


def get_path(params: ModelParams, path: str) -> float:
    """Value at a dotted path; list segments select the entry with that ``name``."""
    node: Any = params.model_dump()
    for part in path.split("."):
        node = _child(node, part)
    return float(node)


def set_paths(params: ModelParams, values: Dict[str, float]) -> ModelParams:
    data = params.model_dump()
    for path, value in values.items():
        parts = path.split(".")
        node: Any = data
        for part in parts[:-1]:
            node = _child(node, part)
        node[parts[-1]] = float(value)
    return ModelParams.model_validate(data)


@dataclass(frozen=True)
class ParamSpec:
    """One fitted parameter.

    ``prefer`` ("upper" or "lower") settles parameters that hinge anchors leave
    free: after the simplex the value moves to that edge of the zero-residual set.
    """

    path: str
    lower: float
    upper: float
    log: bool = False
    prefer: Optional[str] = None

    def to_unit(self, value: float) -> float:
        if self.log:
            lo, hi = math.log10(self.lower), math.log10(self.upper)
            return (math.log10(value) - lo) / (hi - lo)
        return (value - self.lower) / (self.upper - self.lower)

    def from_unit(self, u: float) -> float:
        if self.log:
            lo, hi = math.log10(self.lower), math.log10(self.upper)
            return float(10.0 ** (lo + u * (hi - lo)))
        return self.lower + u * (self.upper - self.lower)


@dataclass(frozen=True)
class CalibrationProblem:
    model_id: str
    specs: Tuple[ParamSpec, ...]
    predict: Predictor

    @property
    def dimension(self) -> int:
        return len(self.specs)

    @property
    def param_names(self) -> List[str]:
        return [s.path for s in self.specs]

    @property
    def bounds(self) -> List[Tuple[float, float]]:
        return [(s.lower, s.upper) for s in self.specs]

    def with_bounds(self, bounds: Bounds) -> "CalibrationProblem":
        if len(bounds) != self.dimension:
            raise InvalidInputError(f"{self.model_id}: expected {self.dimension} bounds, got {len(bounds)}")
        specs = tuple(replace(s, lower=float(lo), upper=float(hi)) for s, (lo, hi) in zip(self.specs, bounds))
        for s in specs:
            if not s.lower < s.upper:
                raise InvalidInputError(f"{self.model_id}: empty bound for {s.path}")
        return replace(self, specs=specs)

    def current(self, params: ModelParams) -> List[float]:
        return [get_path(params, s.path) for s in self.specs]

    def apply(self, params: ModelParams, vector: Sequence[float]) -> ModelParams:
        return set_paths(params, dict(zip(self.param_names, vector)))


# ── Predictors ───────────────────────────────────────────────────────────────

def _food_for(inputs: Dict[str, Any], params: ModelParams) -> SpoilageParams:
    overrides = {k: float(inputs[k]) for k in FOOD_OVERRIDE_KEYS if k in inputs}
    return params.spoilage.model_copy(update=overrides) if overrides else params.spoilage


def _predict_sensor_resistance(x: Dict[str, Any], p: ModelParams) -> float:
    return sensor.sensor_resistance(x.get("nh3", 0.0), x.get("ch4", 0.0), x.get("co2", 0.0), p.sensor)


def _predict_sensor_response(x: Dict[str, Any], p: ModelParams) -> float:
    return sensor.response_percent(x["gas"], x["conc"], p.sensor)


def _predict_gain(x: Dict[str, Any], p: ModelParams) -> float:
    return rf_link.gain_db(p.rf, x["r_load"], EnvCondition())


def _predict_voltage(x: Dict[str, Any], p: ModelParams) -> float:
    r = sensor.sensor_resistance(x["nh3"], 0.0, 0.0, p.sensor)
    return rf_link.harvested_voltage(p.rf, r, EnvCondition(position=x["position"]))


def _predict_steady_temp(x: Dict[str, Any], p: ModelParams) -> float:
    return thermal.steady_state_temp(x["v"], p.thermal)


def _predict_release(x: Dict[str, Any], p: ModelParams) -> float:
    return release.released_fraction_at(x["t_h"], getattr(p.release, x["compound"].lower()))


def _predict_headspace(x: Dict[str, Any], p: ModelParams) -> float:
    return release.headspace_profile(x["t_h"], getattr(p.release, x["compound"].lower()))


def _predict_nh3(x: Dict[str, Any], p: ModelParams) -> float:
    return spoilage.nh3_from_tvbn(x["tvbn"], p.spoilage)


def _predict_tvbn(x: Dict[str, Any], p: ModelParams) -> float:
    return spoilage.tvbn_at(x["t_h"], x["temp_c"], _food_for(x, p))


def _predict_marker(x: Dict[str, Any], p: ModelParams) -> float:
    food = _food_for(x, p)
    state = SpoilageState.initial(food)
    for _ in range(int(round(x["t_h"] / MARKER_DT_H))):
        state = spoilage.step_spoilage(state, x["temp_c"], 0.0, MARKER_DT_H, food)
    return float(getattr(state, x.get("marker", "butanone")))


def _predict_inhibited_tvbn(x: Dict[str, Any], p: ModelParams) -> float:
    """Spoilage and release coupled through an ideal latching comparator at the trigger."""
    food = _food_for(x, p)
    threshold = float(x.get("trigger_ppm", 40.0))
    state = SpoilageState.initial(food)
    rel = ReleaseState.initial(p.release)
    inhibitor, latched = 0.0, False
    for _ in range(int(round(x["t_h"] / REDUCED_LOOP_DT_H))):
        state = spoilage.step_spoilage(state, x["temp_c"], inhibitor, REDUCED_LOOP_DT_H, food)
        latched = latched or state.nh3 >= threshold
        rel = release.step_release(rel, latched, REDUCED_LOOP_DT_H, p.release)
        inhibitor = rel.ca.headspace_ppm + rel.eg.headspace_ppm
    return state.tvbn


def _problem(model_id: str, predict: Predictor, *specs: ParamSpec) -> CalibrationProblem:
    return CalibrationProblem(model_id=model_id, specs=tuple(specs), predict=predict)


# Dependency order: sensor -> rf_link -> thermal -> release -> spoilage with inhibition
BUNDLED_PROBLEMS: List[CalibrationProblem] = [
    _problem(
        "sensor_resistance",
        _predict_sensor_resistance,
        ParamSpec("sensor.r_baseline", 500.0, 1500.0),
        ParamSpec("sensor.r_saturated", 1000.0, 3000.0),
    ),
    _problem(
        "sensor_response",
        _predict_sensor_response,
        ParamSpec("sensor.transient_nh3", 1.0e-4, 5.0e-3),
        ParamSpec("sensor.sens_ch4", 1.0e-6, 1.0e-3),
        ParamSpec("sensor.sens_co2", 1.0e-7, 1.0e-4),
    ),
    _problem(
        "rf_gain",
        _predict_gain,
        ParamSpec("rf.gain_unloaded", -2.0, 2.0),
        ParamSpec("rf.gain_fullscale", -15.0, -1.0),
    ),
    _problem("rf_voltage", _predict_voltage, ParamSpec("rf.v_peak", 1.0, 12.0)),
    _problem(
        "thermal",
        _predict_steady_temp,
        ParamSpec("thermal.power_coefficient", 0.5, 4.0),
        ParamSpec("thermal.power_exponent", 0.5, 3.0),
    ),
    _problem("release_ca", _predict_release, ParamSpec("release.ca.rate_constant", 0.005, 0.5)),
    _problem("release_eg", _predict_release, ParamSpec("release.eg.rate_constant", 0.05, 2.0)),
    _problem(
        "headspace_ca",
        _predict_headspace,
        ParamSpec("release.ca.headspace_yield", 100.0, 20000.0),
        ParamSpec("release.ca.headspace_loss", 0.01, 2.0),
    ),
    _problem(
        "headspace_eg",
        _predict_headspace,
        ParamSpec("release.eg.headspace_yield", 10.0, 2000.0),
        ParamSpec("release.eg.headspace_loss", 0.005, 1.0),
    ),
    _problem(
        "spoilage_rt",
        _predict_tvbn,
        ParamSpec("spoilage.tvbn_initial", 0.5, 3.0),
        ParamSpec("spoilage.growth_rate_rt", 0.05, 2.0),
        ParamSpec("spoilage.tvbn_cap", 20.5, 40.0),
    ),
    _problem("nh3_map", _predict_nh3, ParamSpec("spoilage.nh3_per_tvbn", 0.5, 10.0)),
    _problem("spoilage_cold", _predict_tvbn, ParamSpec("spoilage.q10", 1.0, 10.0)),
    _problem(
        "inhibition",
        _predict_inhibited_tvbn,
        ParamSpec("spoilage.inhibition_halfdose", 1.0e-6, 1.0, log=True, prefer="upper"),
    ),
    _problem("markers", _predict_marker, ParamSpec("spoilage.marker_yield_butanone", 1.0, 2000.0)),
]

PROBLEMS: Dict[str, CalibrationProblem] = {p.model_id: p for p in BUNDLED_PROBLEMS}


def get_problem(model_id: str) -> CalibrationProblem:
    try:
        return PROBLEMS[model_id]
    except KeyError as exc:
        raise CalibrationError(f"unknown model_id {model_id!r}", detail=", ".join(PROBLEMS)) from exc


# ── Objective ────────────────────────────────────────────────────────────────

def anchor_residual(anchor: Anchor, predicted: float) -> float:
    """Signed normalised residual; a satisfied hinge contributes 0."""
    r = (predicted - anchor.observed) / anchor.tolerance
    if anchor.kind == "upper":
        return max(r, 0.0)
    if anchor.kind == "lower":
        return min(r, 0.0)
    return r


def _out_of_bounds(problem: CalibrationProblem, vector: Sequence[float]) -> float:
    excess = 0.0
    for s, v in zip(problem.specs, vector):
        span = s.upper - s.lower
        if v < s.lower:
            excess += (s.lower - v) / span
        elif v > s.upper:
            excess += (v - s.upper) / span
    return excess


def evaluate(
    problem: CalibrationProblem, vector: Sequence[float], anchors: AnchorSet, params: ModelParams
) -> List[AnchorResidual]:
    candidate = problem.apply(params, vector)
    rows = []
    for a in anchors:
        predicted = problem.predict(a.inputs, candidate)
        rows.append(
            AnchorResidual(
                model_id=a.model_id,
                provenance=a.provenance,
                observed=a.observed,
                predicted=predicted,
                tolerance=a.tolerance,
                residual=anchor_residual(a, predicted),
            )
        )
    return rows


def objective(
    vector: Sequence[float],
    anchors: AnchorSet,
    problem: Union[str, CalibrationProblem],
    params: Optional[ModelParams] = None,
) -> float:
    """Sum of squared normalised residuals; a large finite penalty outside bounds."""
    problem = get_problem(problem) if isinstance(problem, str) else problem
    params = params or ModelParams()
    anchors = anchors.for_model(problem.model_id)
    excess = _out_of_bounds(problem, vector)
    if excess > 0:
        return PENALTY * (1.0 + excess)
    try:
        candidate = problem.apply(params, vector)
        terms = [anchor_residual(a, problem.predict(a.inputs, candidate)) ** 2 for a in anchors]
    except (PydanticValidationError, AppError, OverflowError, ZeroDivisionError):
        return PENALTY
    total = math.fsum(terms)
    return total if math.isfinite(total) else PENALTY


# ── Fit and grid oracle ──────────────────────────────────────────────────────

def _prepare(
    problem: Union[str, CalibrationProblem], anchors: AnchorSet, bounds: Optional[Bounds]
) -> Tuple[CalibrationProblem, AnchorSet]:
    problem = get_problem(problem) if isinstance(problem, str) else problem
    if bounds is not None:
        problem = problem.with_bounds(bounds)
    own = anchors.for_model(problem.model_id)
    if len(own) == 0:
        raise CalibrationError(f"no anchors for {problem.model_id}")
    return problem, own


def _at_bounds(problem: CalibrationProblem, vector: Sequence[float]) -> List[str]:
    flagged = []
    for s, v in zip(problem.specs, vector):
        eps = 1e-6 * (s.upper - s.lower)
        if v <= s.lower + eps or v >= s.upper - eps:
            flagged.append(s.path)
    return flagged


def _feasible_edge(
    problem: CalibrationProblem, vector: Sequence[float], anchors: AnchorSet, params: ModelParams
) -> List[float]:
    """Bisect each ``prefer``-flagged parameter out to the far edge of the zero-residual set."""
    vector = list(vector)
    for i, s in enumerate(problem.specs):
        if s.prefer is None:
            continue

        def score(u: float) -> float:
            trial = list(vector)
            trial[i] = s.from_unit(u)
            return objective(trial, anchors, problem, params)

        far = 1.0 if s.prefer == "upper" else 0.0
        inside = s.to_unit(vector[i])
        if score(inside) > 0.0:
            inside = 1.0 - far
            if score(inside) > 0.0:
                continue
        if score(far) == 0.0:
            vector[i] = s.from_unit(far)
            continue
        outside = far
        for _ in range(EDGE_BISECTIONS):
            mid = 0.5 * (inside + outside)
            if score(mid) == 0.0:
                inside = mid
            else:
                outside = mid
        vector[i] = s.from_unit(inside)
    return vector


def fit(
    model_id: Union[str, CalibrationProblem],
    anchors: AnchorSet,
    init: Optional[Sequence[float]] = None,
    bounds: Optional[Bounds] = None,
    params: Optional[ModelParams] = None,
) -> FitResult:
    """Downhill-simplex fit in the unit box; stops at simplex size 1e-8 or 2000 iterations."""
    problem, own = _prepare(model_id, anchors, bounds)
    params = params or ModelParams()
    x0 = list(init) if init is not None else problem.current(params)
    if len(x0) != problem.dimension:
        raise InvalidInputError(f"{problem.model_id}: init has {len(x0)} values, expected {problem.dimension}")
    if _out_of_bounds(problem, x0) > 0:
        raise InvalidInputError(f"{problem.model_id}: init outside bounds", detail=str(x0))

    u0 = np.array([s.to_unit(v) for s, v in zip(problem.specs, x0)])
    simplex = [u0]
    for i in range(problem.dimension):
        vertex = u0.copy()
        vertex[i] += SIMPLEX_STEP if vertex[i] + SIMPLEX_STEP <= 1.0 else -SIMPLEX_STEP
        simplex.append(vertex)

    def from_unit(u: np.ndarray) -> List[float]:
        return [s.from_unit(float(ui)) for s, ui in zip(problem.specs, u)]

    def unit_objective(u: np.ndarray) -> float:
        if np.any(u < 0.0) or np.any(u > 1.0):
            return PENALTY * (1.0 + float(np.sum(np.clip(-u, 0, None) + np.clip(u - 1.0, 0, None))))
        return objective(from_unit(u), own, problem, params)

    result = minimize(
        unit_objective,
        u0,
        method="Nelder-Mead",
        options={
            "xatol": SIMPLEX_XATOL,
            "fatol": np.inf,
            "maxiter": SIMPLEX_MAXITER,
            "initial_simplex": np.array(simplex),
        },
    )
    vector = _feasible_edge(problem, from_unit(np.clip(result.x, 0.0, 1.0)), own, params)
    rows = evaluate(problem, vector, own, params)
    fitted = FitResult(
        model_id=problem.model_id,
        param_names=problem.param_names,
        vector=vector,
        residual=math.fsum(r.residual**2 for r in rows),
        iterations=int(result.nit),
        converged=bool(result.success),
        per_anchor=rows,
        at_bounds=_at_bounds(problem, vector),
    )
    if not fitted.converged:
        logger.warning("fit did not converge", extra={"model_id": problem.model_id})
    if fitted.at_bounds:
        logger.warning("parameters at bounds: %s", ", ".join(fitted.at_bounds), extra={"model_id": problem.model_id})
    logger.info(
        "fit residual %.3g after %d iterations",
        fitted.residual,
        fitted.iterations,
        extra={"model_id": problem.model_id},
    )
    return fitted


def _grid_chunk(
    problem: CalibrationProblem, points: List[Tuple[float, ...]], anchors: AnchorSet, params: ModelParams
) -> Tuple[float, Tuple[float, ...]]:
    best = (math.inf, points[0])
    for point in points:
        value = objective(point, anchors, problem, params)
        if value < best[0]:
            best = (value, point)
    return best


def grid_oracle(
    model_id: Union[str, CalibrationProblem],
    anchors: AnchorSet,
    bounds: Optional[Bounds] = None,
    resolution: int = GRID_MIN_RESOLUTION,
    params: Optional[ModelParams] = None,
    workers: int = 1,
) -> FitResult:
    """Exhaustive evaluation on a regular grid (log-spaced for log parameters)."""
    problem, own = _prepare(model_id, anchors, bounds)
    if problem.dimension > GRID_MAX_DIM:
        raise UnsupportedError(f"grid oracle supports at most {GRID_MAX_DIM} parameters, got {problem.dimension}")
    if resolution < GRID_MIN_RESOLUTION:
        raise InvalidInputError(f"resolution must be >= {GRID_MIN_RESOLUTION}", detail=f"got {resolution}")
    params = params or ModelParams()

    axes = [[s.from_unit(u) for u in np.linspace(0.0, 1.0, resolution)] for s in problem.specs]
    points = list(itertools.product(*axes))

    if workers > 1:
        chunks = [points[i::workers] for i in range(workers)]
        candidates = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_grid_chunk, problem, c, own, params) for c in chunks if c]
            for future in concurrent.futures.as_completed(futures):
                candidates.append(future.result())
        # lowest value, then lexicographic point, so the answer does not depend on completion order
        best_value, best_point = min(candidates)
    else:
        best_value, best_point = _grid_chunk(problem, points, own, params)

    vector = list(best_point)
    rows = evaluate(problem, vector, own, params)
    return FitResult(
        model_id=problem.model_id,
        param_names=problem.param_names,
        vector=vector,
        residual=math.fsum(r.residual**2 for r in rows),
        iterations=len(points),
        converged=True,
        per_anchor=rows,
        at_bounds=_at_bounds(problem, vector),
    )


# ── Service ──────────────────────────────────────────────────────────────────

def _inside(problem: CalibrationProblem, vector: Sequence[float]) -> List[float]:
    clipped = []
    for s, v in zip(problem.specs, vector):
        margin = 1e-4 * (s.upper - s.lower)
        clipped.append(min(max(v, s.lower + margin), s.upper - margin))
    return clipped


def enable_level(anchors: AnchorSet, params: ModelParams) -> float:
    """Harvester enable voltage: the lowest modelled harvest over the rf_voltage operating points."""
    points = anchors.for_model("rf_voltage")
    if len(points) == 0:
        raise CalibrationError("no rf_voltage anchors to place the enable level")
    return min(_predict_voltage(a.inputs, params) for a in points)


def calibrate_all(
    anchors: AnchorSet, params: Optional[ModelParams] = None, model_ids: Optional[Sequence[str]] = None
) -> Tuple[ModelParams, List[FitResult]]:
    """Fit every bundled problem that has anchors, in dependency order."""
    params = params or ModelParams()
    tables = anchors.tables()
    if tables:
        params = params.model_copy(update={"rf": rf_link.apply_tables(params.rf, tables)})

    wanted = set(model_ids) if model_ids is not None else None
    results: List[FitResult] = []
    for problem in BUNDLED_PROBLEMS:
        if wanted is not None and problem.model_id not in wanted:
            continue
        if len(anchors.for_model(problem.model_id)) == 0:
            logger.info("no anchors; keeping current values", extra={"model_id": problem.model_id})
            continue
        result = fit(problem, anchors, init=_inside(problem, problem.current(params)), params=params)
        params = problem.apply(params, result.vector)
        if problem.model_id == "rf_voltage":
            params = set_paths(params, {"rf.harvest_enable_v": enable_level(anchors, params)})
        if problem.model_id == "markers":
            params = set_paths(
                params,
                {"spoilage.marker_yield_methylbutanol": params.spoilage.marker_yield_butanone * METHYLBUTANOL_RATIO},
            )
        results.append(result)
    if not results:
        raise CalibrationError("anchor set matched no bundled calibration problem")
    return params, results


class CalibrationService:
    """Loads anchors, runs calibrate_all and persists parameters and residuals."""

    def __init__(self, anchor_repo: "AnchorRepo", params_repo: "ParamsRepo") -> None:
        self._anchors = anchor_repo
        self._params = params_repo

    def run(self, anchors_path: Any, out_dir: Any) -> Tuple[ModelParams, List[FitResult]]:
        anchors = self._anchors.load(anchors_path)
        base = self._params.load_or_default()
        params, results = calibrate_all(anchors, base)
        self._params.save(params, out_dir)
        self._params.save_residuals(results, out_dir)
        flagged = [r.model_id for r in results if r.at_bounds or not r.converged]
        if flagged:
            logger.warning("calibration finished with flagged problems: %s", ", ".join(flagged))
        logger.info("calibrated %d problems", len(results))
        return params, results
