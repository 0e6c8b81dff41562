"""JSON simulation config: schema, validation and round-trip serialization.

A config file is a nested JSON object. Every section is optional; missing
keys take the defaults below, which reproduce the reference 4x4 link. Unknown
keys are rejected with their full key path, e.g. `scene.leds.size`.
"""
import json
from typing import Any, Callable, Dict, Optional, Tuple

import attr
from loguru import logger

from vlcsim.constants import (
    ALPHA_BOUND,
    DEFAULT_SEED,
    LED_GAP,
    LED_GRID_N,
    LED_PLANE_Z,
    LED_SIZE,
    LAMBERTIAN_EXPONENT,
    LENS_INDEX,
    PD_GAP,
    PD_GRID_N,
    PD_PLANE_Z,
    PD_SIZE,
    PUBLISHED_SIC_TAIL_CAPACITY,
    RAYS_PER_BATCH,
    RAYS_PER_LED,
    SUBSET_SIZE,
)
from vlcsim.errors import ConfigError
from vlcsim.lensopt.optimize import OptimizerOptions
from vlcsim.optics.lens import LensElement
from vlcsim.optics.surfaces import Orientation
from vlcsim.scene.arrays import LedArraySpec, PdArraySpec
from vlcsim.scene.scene import Scene, Target, default_lenses, lens_to_dict
from vlcsim.sigproc.plan import Accounting, ProcessingMode
from vlcsim.sweeps.sweep import Metric, Motion, SweepSpec

########## SCHEMA ##########


@attr.s(frozen=True, slots=True)
class Field:
    default: Any = attr.ib()
    kind: str = attr.ib()  # int | float | bool | str | vec3
    check: Optional[Tuple[Callable[[Any], bool], str]] = attr.ib(default=None)
    choices: Optional[Tuple[str, ...]] = attr.ib(default=None)
    nullable: bool = attr.ib(default=False)
    required: bool = attr.ib(default=False)


@attr.s(frozen=True, slots=True)
class ListOf:
    item: Dict[str, Any] = attr.ib()
    default: Any = attr.ib(factory=list)
    # list of plain values instead of objects
    scalar: Optional[Field] = attr.ib(default=None)


def _gt(bound):
    return (lambda v: v > bound, f"must be > {bound}")


def _ge(bound):
    return (lambda v: v >= bound, f"must be >= {bound}")


def _fraction():
    return (lambda v: 0 <= v < 1, "must be in [0, 1)")


def _enum_values(enum_cls) -> Tuple[str, ...]:
    return tuple(e.value for e in enum_cls)


LED_SCHEMA = {
    "grid_n": Field(LED_GRID_N, "int", _ge(1)),
    "element_size": Field(LED_SIZE, "float", _gt(0)),
    "gap": Field(LED_GAP, "float", _ge(0)),
    "plane_z": Field(LED_PLANE_Z, "float"),
    "lambertian_exponent": Field(LAMBERTIAN_EXPONENT, "float", _ge(1)),
    "total_power_per_led": Field(1.0, "float", _gt(0)),
}

PD_SCHEMA = {
    "grid_n": Field(PD_GRID_N, "int", _ge(1)),
    "element_size": Field(PD_SIZE, "float", _gt(0)),
    "gap": Field(PD_GAP, "float", _ge(0)),
    "plane_z": Field(PD_PLANE_Z, "float"),
}

LENS_SCHEMA = {
    "front_vertex_z": Field(None, "float", required=True),
    "center_thickness": Field(None, "float", _gt(0), required=True),
    "aperture_diameter": Field(None, "float", _gt(0), required=True),
    "alpha_front": Field(None, "float", required=True),
    "alpha_back": Field(None, "float", required=True),
    "beta_front": Field(0.0, "float"),
    "beta_back": Field(0.0, "float"),
    "refractive_index": Field(LENS_INDEX, "float", _gt(1)),
    "orientation": Field(
        Orientation.TOWARD_DETECTOR.value, "str", choices=_enum_values(Orientation)
    ),
}

SWEEP_SCHEMA = {
    "name": Field("", "str"),
    "target": Field(None, "str", choices=_enum_values(Target), required=True),
    "motion": Field(None, "str", choices=_enum_values(Motion), required=True),
    "start": Field(None, "float", required=True),
    "stop": Field(None, "float", required=True),
    "step": Field(None, "float", _gt(0), required=True),
    "metric": Field(Metric.CONDITION_NUMBER.value, "str", choices=_enum_values(Metric)),
    "pivot_offset": Field((0.0, 0.0, 0.0), "vec3"),
}

SCHEMA = {
    "scene": {
        "leds": LED_SCHEMA,
        "pds": PD_SCHEMA,
        "lenses": ListOf(LENS_SCHEMA, default=[lens_to_dict(lens) for lens in default_lenses()]),
        "ambient_index": Field(1.0, "float", _ge(1)),
        "receiver_moves_lenses": Field(True, "bool"),
    },
    "trace": {
        "ray_budget": Field(RAYS_PER_LED, "int", _ge(1)),
        "seed": Field(DEFAULT_SEED, "int", _ge(0)),
        "batch_size": Field(RAYS_PER_BATCH, "int", _ge(1)),
        "spot_hits_per_led": Field(5000, "int", _ge(0)),
        "workers": Field(None, "int", _ge(0), nullable=True),
    },
    "noise": {
        # null means: calibrate on the aligned channel
        "variance": Field(None, "float", _gt(0), nullable=True),
        "accounting": Field(
            Accounting.SELF_INCLUSIVE.value, "str", choices=_enum_values(Accounting)
        ),
        "subset_size": Field(SUBSET_SIZE, "int", _ge(1)),
        "calibration": {
            "mode": Field(
                ProcessingMode.COMBINE_AND_SIC.value,
                "str",
                choices=_enum_values(ProcessingMode),
            ),
            "channel": Field("last", "str", choices=("mean", "last")),
            "target_capacity": Field(PUBLISHED_SIC_TAIL_CAPACITY, "float", _gt(0)),
        },
    },
    "processing": {
        "modes": ListOf(
            {},
            default=list(_enum_values(ProcessingMode)),
            scalar=Field(None, "str", choices=_enum_values(ProcessingMode)),
        ),
    },
    "symbols": {
        "n_symbols": Field(100_000, "int", _ge(1)),
        "mode": Field(
            ProcessingMode.COMBINE_AND_SIC.value, "str", choices=_enum_values(ProcessingMode)
        ),
        "force_correct": Field(False, "bool"),
    },
    "sweeps": ListOf(SWEEP_SCHEMA),
    "optimizer": {
        "max_evals": Field(600, "int", _ge(1)),
        "simplex_scale": Field(0.1, "float", _gt(0)),
        "restarts": Field(2, "int", _ge(0)),
        "scan_span": Field(0.3, "float", _fraction()),
        "scan_steps": Field(30, "int", _ge(1)),
        "ray_budget": Field(RAYS_PER_LED // 10, "int", _ge(1)),
        "bound": Field(ALPHA_BOUND, "float", _gt(0)),
    },
    "output_dir": Field("out", "str"),
}


def _coerce(field: Field, value: Any, path: str) -> Any:
    if value is None:
        if field.nullable:
            return None
        raise ConfigError("must not be null", path)

    kind = field.kind
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", path)
    elif kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        value = float(value)
    elif kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        if field.choices and value not in field.choices:
            raise ConfigError(f"{value!r} is not one of {list(field.choices)}", path)
    elif kind == "vec3":
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            raise ConfigError(f"expected three numbers, got {value!r}", path)
        value = [float(v) for v in value]

    if field.check is not None:
        predicate, message = field.check
        if not predicate(value):
            raise ConfigError(f"{message}, got {value!r}", path)

    return value


def _join(prefix: str, key) -> str:
    if isinstance(key, int):
        return f"{prefix}[{key}]"
    return f"{prefix}.{key}" if prefix else str(key)


def _resolve(schema, data, path: str = ""):
    """validate `data` against `schema` and fill in every default."""
    if isinstance(schema, Field):
        return _coerce(schema, data, path)

    if isinstance(schema, ListOf):
        if not isinstance(data, list):
            raise ConfigError(f"expected a list, got {type(data).__name__}", path)
        if schema.scalar is not None:
            return [_coerce(schema.scalar, v, _join(path, i)) for i, v in enumerate(data)]
        return [_resolve(schema.item, v, _join(path, i)) for i, v in enumerate(data)]

    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", path)

    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError("unknown key", _join(path, unknown[0]))

    resolved = {}
    for key, sub in schema.items():
        key_path = _join(path, key)
        if key in data:
            resolved[key] = _resolve(sub, data[key], key_path)
        elif isinstance(sub, Field):
            if sub.required:
                raise ConfigError("missing required key", key_path)
            resolved[key] = list(sub.default) if sub.kind == "vec3" else sub.default
        elif isinstance(sub, ListOf):
            resolved[key] = json.loads(json.dumps(sub.default))
        else:
            resolved[key] = _resolve(sub, {}, key_path)

    return resolved


########## CONFIG OBJECTS ##########


@attr.s(frozen=True, slots=True)
class TraceOptions:
    ray_budget: int = attr.ib(default=RAYS_PER_LED)
    seed: int = attr.ib(default=DEFAULT_SEED)
    batch_size: int = attr.ib(default=RAYS_PER_BATCH)
    spot_hits_per_led: int = attr.ib(default=5000)
    workers: Optional[int] = attr.ib(default=None)


@attr.s(frozen=True, slots=True)
class CalibrationOptions:
    mode: ProcessingMode = attr.ib(default=ProcessingMode.COMBINE_AND_SIC, converter=ProcessingMode)
    channel: str = attr.ib(default="last")
    target_capacity: float = attr.ib(default=PUBLISHED_SIC_TAIL_CAPACITY)


@attr.s(frozen=True, slots=True)
class NoiseOptions:
    variance: Optional[float] = attr.ib(default=None)
    accounting: Accounting = attr.ib(default=Accounting.SELF_INCLUSIVE, converter=Accounting)
    subset_size: int = attr.ib(default=SUBSET_SIZE)
    calibration: CalibrationOptions = attr.ib(factory=CalibrationOptions)


@attr.s(frozen=True, slots=True)
class SymbolOptions:
    n_symbols: int = attr.ib(default=100_000)
    mode: ProcessingMode = attr.ib(default=ProcessingMode.COMBINE_AND_SIC, converter=ProcessingMode)
    force_correct: bool = attr.ib(default=False)


@attr.s(frozen=True, slots=True)
class SweepEntry:
    target: Target = attr.ib(converter=Target)
    motion: Motion = attr.ib(converter=Motion)
    start: float = attr.ib()
    stop: float = attr.ib()
    step: float = attr.ib()
    metric: Metric = attr.ib(default=Metric.CONDITION_NUMBER, converter=Metric)
    pivot_offset: Tuple[float, float, float] = attr.ib(
        default=(0.0, 0.0, 0.0), converter=lambda v: tuple(float(x) for x in v)
    )
    name: str = attr.ib(default="")

    def to_spec(self, config: "SimConfig", noise_variance: Optional[float] = None) -> SweepSpec:
        """runtime sweep spec; ray budget, seed and noise come from the rest of the config."""
        return SweepSpec(
            target=self.target,
            motion=self.motion,
            start=self.start,
            stop=self.stop,
            step=self.step,
            metric=self.metric,
            n_rays_per_led=config.trace.ray_budget,
            seed=config.trace.seed,
            noise_variance=noise_variance,
            modes=config.modes,
            accounting=config.noise.accounting,
            subset_size=config.noise.subset_size,
            pivot_offset=self.pivot_offset,
            name=self.name,
        )


@attr.s(frozen=True, slots=True)
class SimConfig:
    scene: Scene = attr.ib()
    trace: TraceOptions = attr.ib(factory=TraceOptions)
    noise: NoiseOptions = attr.ib(factory=NoiseOptions)
    modes: Tuple[ProcessingMode, ...] = attr.ib(default=tuple(ProcessingMode))
    symbols: SymbolOptions = attr.ib(factory=SymbolOptions)
    sweeps: Tuple[SweepEntry, ...] = attr.ib(default=())
    optimizer: OptimizerOptions = attr.ib(factory=OptimizerOptions)
    output_dir: str = attr.ib(default="out")

    def override(
        self,
        seed: Optional[int] = None,
        ray_budget: Optional[int] = None,
        output_dir: Optional[str] = None,
    ) -> "SimConfig":
        """apply command-line overrides; None leaves a value unchanged."""
        trace = self.trace
        if seed is not None:
            if seed < 0:
                raise ConfigError(f"must be >= 0, got {seed}", "trace.seed")
            trace = attr.evolve(trace, seed=seed)
        if ray_budget is not None:
            if ray_budget < 1:
                raise ConfigError(f"must be >= 1, got {ray_budget}", "trace.ray_budget")
            trace = attr.evolve(trace, ray_budget=ray_budget)

        return attr.evolve(
            self,
            trace=trace,
            optimizer=attr.evolve(self.optimizer, seed=trace.seed),
            output_dir=self.output_dir if output_dir is None else output_dir,
        )


def _build_lens(raw: Dict[str, Any], path: str) -> LensElement:
    try:
        return LensElement.build(
            front_vertex_z=raw["front_vertex_z"],
            center_thickness=raw["center_thickness"],
            alpha_front=raw["alpha_front"],
            alpha_back=raw["alpha_back"],
            aperture_diameter=raw["aperture_diameter"],
            refractive_index=raw["refractive_index"],
            orientation=Orientation(raw["orientation"]),
            beta_front=raw["beta_front"],
            beta_back=raw["beta_back"],
        ).validate()
    except ValueError as e:
        raise ConfigError(str(e), path) from e


def _build_scene(raw: Dict[str, Any]) -> Scene:
    lenses = [
        _build_lens(lens, f"scene.lenses[{i}]") for i, lens in enumerate(raw["lenses"])
    ]
    try:
        return Scene(
            leds=LedArraySpec(**raw["leds"]),
            pds=PdArraySpec(**raw["pds"]),
            lenses=lenses,
            ambient_index=raw["ambient_index"],
            receiver_moves_lenses=raw["receiver_moves_lenses"],
        )
    except ValueError as e:
        raise ConfigError(str(e), "scene") from e


def config_from_dict(data: Any) -> SimConfig:
    raw = _resolve(SCHEMA, data)

    scene = _build_scene(raw["scene"])
    trace = TraceOptions(**raw["trace"])
    noise = raw["noise"]

    sweeps = []
    for i, entry in enumerate(raw["sweeps"]):
        if entry["start"] > entry["stop"]:
            raise ConfigError("start must not exceed stop", f"sweeps[{i}].start")
        sweeps.append(SweepEntry(**entry))

    config = SimConfig(
        scene=scene,
        trace=trace,
        noise=NoiseOptions(
            variance=noise["variance"],
            accounting=noise["accounting"],
            subset_size=noise["subset_size"],
            calibration=CalibrationOptions(**noise["calibration"]),
        ),
        modes=tuple(ProcessingMode(m) for m in raw["processing"]["modes"]),
        symbols=SymbolOptions(**raw["symbols"]),
        sweeps=tuple(sweeps),
        optimizer=OptimizerOptions(seed=trace.seed, **raw["optimizer"]),
        output_dir=raw["output_dir"],
    )

    leds = scene.leds
    logger.info(
        f"scene {scene.digest()}: {leds.grid_n}x{leds.grid_n} LEDs at z={leds.plane_z:g} mm, "
        f"Cn={leds.lambertian_exponent:g} (half-power angle {leds.half_power_angle_deg:.1f} deg), "
        f"{scene.pds.grid_n}x{scene.pds.grid_n} PDs, {len(scene.lenses)} lens(es)"
    )
    return config


def parse_config(path: str) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except UnicodeDecodeError as e:
        raise ConfigError(f"config file {path} is not UTF-8: {e.reason}") from None

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from None

    logger.debug(f"loaded config from {path}")
    return config_from_dict(data)


def serialize_config(config: SimConfig) -> Dict[str, Any]:
    """plain JSON form of `config` with every default written out."""
    scene = config.scene
    return {
        "scene": {
            "leds": attr.asdict(scene.leds),
            "pds": attr.asdict(scene.pds),
            "lenses": [lens_to_dict(lens) for lens in scene.lenses],
            "ambient_index": scene.ambient_index,
            "receiver_moves_lenses": scene.receiver_moves_lenses,
        },
        "trace": attr.asdict(config.trace),
        "noise": {
            "variance": config.noise.variance,
            "accounting": config.noise.accounting.value,
            "subset_size": config.noise.subset_size,
            "calibration": {
                "mode": config.noise.calibration.mode.value,
                "channel": config.noise.calibration.channel,
                "target_capacity": config.noise.calibration.target_capacity,
            },
        },
        "processing": {"modes": [m.value for m in config.modes]},
        "symbols": {
            "n_symbols": config.symbols.n_symbols,
            "mode": config.symbols.mode.value,
            "force_correct": config.symbols.force_correct,
        },
        "sweeps": [
            {
                "name": s.name,
                "target": s.target.value,
                "motion": s.motion.value,
                "start": s.start,
                "stop": s.stop,
                "step": s.step,
                "metric": s.metric.value,
                "pivot_offset": list(s.pivot_offset),
            }
            for s in config.sweeps
        ],
        "optimizer": {
            "max_evals": config.optimizer.max_evals,
            "simplex_scale": config.optimizer.simplex_scale,
            "restarts": config.optimizer.restarts,
            "scan_span": config.optimizer.scan_span,
            "scan_steps": config.optimizer.scan_steps,
            "ray_budget": config.optimizer.ray_budget,
            "bound": config.optimizer.bound,
        },
        "output_dir": config.output_dir,
    }
