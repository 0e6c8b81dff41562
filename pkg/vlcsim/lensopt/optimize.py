"""Nelder-Mead search over the lens coefficients, with restarts."""
from typing import Dict, List, Optional, Tuple

import attr
import numpy as np
import pandas as pd
from loguru import logger
from scipy.optimize import minimize
from tqdm import tqdm

from vlcsim.constants import (
    ALPHA_BOUND,
    DEFAULT_SEED,
    PENALTY,
    RAYS_PER_LED,
    SIMPLEX_DIAMETER_TOL,
)
from vlcsim.errors import InfeasibleLensError
from vlcsim.lensopt.objective import LensParams, objective
from vlcsim.utils.perf import perftimer

# simplex step, per unit of simplex scale, for a coefficient that is exactly zero
ZERO_STEP_PER_SCALE = 0.05


@attr.s(frozen=True, slots=True)
class OptimizerOptions:
    max_evals: int = attr.ib(default=600, converter=int)
    # initial simplex edge as a fraction of each coefficient
    simplex_scale: float = attr.ib(default=0.1, converter=float)
    restarts: int = attr.ib(default=2, converter=int)
    # relative half-width of the per-coefficient scan before the simplex; 0 skips it
    scan_span: float = attr.ib(default=0.3, converter=float)
    # grid points on each side of the start value
    scan_steps: int = attr.ib(default=30, converter=int)
    ray_budget: int = attr.ib(default=RAYS_PER_LED // 10, converter=int)
    seed: int = attr.ib(default=DEFAULT_SEED, converter=int)
    bound: float = attr.ib(default=ALPHA_BOUND, converter=float)
    xatol: float = attr.ib(default=SIMPLEX_DIAMETER_TOL, converter=float)
    n_workers: Optional[int] = attr.ib(default=1)

    @max_evals.validator
    def _check_evals(self, attribute, value):
        if value < 1:
            raise ValueError(f"max_evals must be >= 1, got {value}")

    @scan_span.validator
    def _check_span(self, attribute, value):
        if not 0.0 <= value < 1.0:
            raise ValueError(f"scan_span must be in [0, 1), got {value}")

    @scan_steps.validator
    def _check_steps(self, attribute, value):
        if value < 1:
            raise ValueError(f"scan_steps must be >= 1, got {value}")


@attr.s(frozen=True, slots=True)
class TracePoint:
    evaluation: int = attr.ib()
    params: LensParams = attr.ib()
    kappa: float = attr.ib()
    best_kappa: float = attr.ib()


@attr.s(frozen=True, slots=True)
class OptResult:
    best_params: LensParams = attr.ib()
    best_kappa: float = attr.ib()
    evaluation_count: int = attr.ib()
    trace: Tuple[TracePoint, ...] = attr.ib(converter=tuple)
    rounds: int = attr.ib(default=1)

    def trace_frame(self) -> pd.DataFrame:
        rows = []
        for point in self.trace:
            row = {"iteration": point.evaluation}
            row.update(attr.asdict(point.params))
            row["kappa"] = point.kappa
            row["best_kappa"] = point.best_kappa
            rows.append(row)
        return pd.DataFrame(rows)


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    """memoizing objective wrapper that records every distinct evaluation."""

    def __init__(self, scene, options: OptimizerOptions, progress: bool):
        self.scene = scene
        self.options = options
        self.cache: Dict[Tuple[float, ...], float] = {}
        self.trace: List[TracePoint] = []
        self.best: Optional[Tuple[float, LensParams]] = None
        self.pbar = tqdm(total=options.max_evals, desc="lens evals", disable=not progress)

    def __call__(self, x: np.ndarray) -> float:
        key = tuple(float(v) for v in x)
        if key in self.cache:
            return self.cache[key]
        if len(self.cache) >= self.options.max_evals:
            raise _BudgetExhausted()

        try:
            params = LensParams.from_array(x)
        except InfeasibleLensError:
            kappa = PENALTY
        else:
            kappa = objective(
                params,
                self.scene,
                self.options.ray_budget,
                self.options.seed,
                n_workers=self.options.n_workers,
                bound=self.options.bound,
            )

        self.cache[key] = kappa
        if self.best is None or kappa < self.best[0]:
            self.best = (kappa, LensParams.from_array(x))
            logger.debug(f"eval {len(self.cache)}: new best kappa {kappa:.6g}")

        self.trace.append(
            TracePoint(len(self.cache), LensParams.from_array(x), kappa, self.best[0])
        )
        self.pbar.update(1)
        return kappa

    @property
    def remaining(self) -> int:
        return self.options.max_evals - len(self.cache)


def initial_simplex(center: np.ndarray, scale: float) -> np.ndarray:
    """center plus one vertex per coordinate, stepped by `scale` of that coordinate."""
    steps = np.where(center != 0.0, scale * np.abs(center), ZERO_STEP_PER_SCALE * scale)
    simplex = np.tile(center, (len(center) + 1, 1))
    simplex[1:] += np.diag(steps)
    return simplex


def coordinate_scan(
    evaluator: _Evaluator, start: np.ndarray, span: float, steps: int
) -> None:
    """walk each coefficient over a relative grid around `start`, the rest held
    at the incumbent.

    Away from focus the condition number is flat and noisy; the grid finds the
    narrow well-conditioned valley that the simplex then refines.
    """
    offsets = np.linspace(-span, span, 2 * steps + 1)
    for i, value in enumerate(start):
        unit = abs(value) if value != 0.0 else ZERO_STEP_PER_SCALE
        base = evaluator.best[1].as_array()
        for offset in offsets:
            x = base.copy()
            x[i] = value + offset * unit
            evaluator(x)
        logger.debug(f"coefficient {i} scanned, best kappa {evaluator.best[0]:.6g}")


@perftimer
def optimize(
    scene_template,
    initial: LensParams,
    options: OptimizerOptions = OptimizerOptions(),
    progress: bool = False,
) -> OptResult:
    """minimize the channel condition number over the four coefficients.

    A coordinate scan of +/-`scan_span` around the initial point comes first.
    Each round then runs Nelder-Mead until the simplex shrinks below `xatol` or
    the evaluation budget runs out; later rounds restart from the incumbent
    with half the previous simplex scale.
    """
    initial.apply(scene_template)
    if not initial.within(options.bound):
        raise InfeasibleLensError(f"initial point {initial} outside +/-{options.bound}")

    evaluator = _Evaluator(scene_template, options, progress)
    start_kappa = evaluator(initial.as_array())
    logger.info(f"starting kappa {start_kappa:.6g}")

    if options.scan_span > 0.0:
        try:
            coordinate_scan(
                evaluator, initial.as_array(), options.scan_span, options.scan_steps
            )
        except _BudgetExhausted:
            logger.info("evaluation budget exhausted during the coordinate scan")
        logger.info(f"after the coordinate scan: kappa {evaluator.best[0]:.6g}")

    scale = options.simplex_scale
    rounds = 0
    for _ in range(options.restarts + 1):
        if evaluator.remaining <= 0:
            break

        incumbent = evaluator.best[0]
        rounds += 1
        try:
            minimize(
                evaluator,
                evaluator.best[1].as_array(),
                method="Nelder-Mead",
                options={
                    "initial_simplex": initial_simplex(evaluator.best[1].as_array(), scale),
                    # the evaluator enforces the real budget; cache hits are free
                    "maxfev": 10 * options.max_evals,
                    "maxiter": 10 * options.max_evals,
                    "xatol": options.xatol,
                    # stop on simplex size alone
                    "fatol": np.inf,
                },
            )
        except _BudgetExhausted:
            logger.info("evaluation budget exhausted")
            break

        if evaluator.best[0] >= incumbent and rounds > 1:
            break
        scale /= 2.0

    evaluator.pbar.close()
    best_kappa, best_params = evaluator.best
    logger.info(
        f"best kappa {best_kappa:.6g} after {len(evaluator.cache)} evaluations, "
        f"{rounds} round(s)"
    )

    return OptResult(
        best_params=best_params,
        best_kappa=best_kappa,
        evaluation_count=len(evaluator.cache),
        trace=evaluator.trace,
        rounds=rounds,
    )
