"""Configuration: user-level settings and per-run experiment documents."""

import json
import os
import types
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, get_type_hints

from measure_flow_lab.core.errors import ConfigError

OUTPUT_ENV_VAR = "MEASURE_FLOW_LAB_OUT"

SCENARIOS = ("measure_flow", "extended", "time_linear", "diagnostic", "convergence")
PRESETS = ("brownian", "constant_drift", "rotation", "oscillating", "randomized", "degenerate")
INIT_KINDS = ("point", "gaussian", "ball")
DIAGNOSTIC_CHECKS = (
    "krylov",
    "density_integrability",
    "joint_integrability",
    "contraction",
    "mollify_convergence",
    "lp_convolution",
    "coefficients",
)


@dataclass
class Settings:
    """User-level defaults stored in ~/.measure-flow-lab/settings.json."""

    # Output settings
    output_directory: str = ""

    # Execution
    threads: int = 1
    block_size: int = 4096
    bootstrap_resamples: int = 200

    # Exact-solver caps
    assignment_cap: int = 512
    quantile_cap: int = 100_000
    transport_cap: int = 512
    convolution_atom_cap: int = 1_000_000
    mollified_atom_cap: int = 1_000_000

    @classmethod
    def get_config_path(cls) -> Path:
        """Get the path to the settings file."""
        config_dir = Path.home() / ".measure-flow-lab"
        config_dir.mkdir(exist_ok=True)
        return config_dir / "settings.json"

    @classmethod
    def load(cls) -> "Settings":
        """Load settings from disk, falling back to defaults."""
        config_path = cls.get_config_path()
        if config_path.exists():
            try:
                with open(config_path, encoding="utf-8") as f:
                    data = json.load(f)
                return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})
            except (json.JSONDecodeError, OSError, TypeError, AttributeError):
                pass
        return cls()

    def save(self) -> None:
        """Save settings to disk."""
        config_path = self.get_config_path()
        with open(config_path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2)

    def get_output_dir(self) -> Path:
        """Output directory: environment variable, then settings, then ./runs."""
        from_env = os.environ.get(OUTPUT_ENV_VAR)
        if from_env:
            return Path(from_env)
        if self.output_directory:
            return Path(self.output_directory)
        return Path.cwd() / "runs"


# Experiment documents


@dataclass
class ModelSpec:
    """Named coefficient preset with its parameters."""

    preset: str = "brownian"
    dim: int = 1
    noise_dim: int | None = None
    drift: list[float] = field(default_factory=list)
    scale: float = 1.0
    epsilon: float = 0.5
    angle: float = 0.0
    bound: float | None = None
    ellipticity: float | None = None


@dataclass
class GridSpec:
    horizon: float = 1.0
    n_steps: int = 100


@dataclass
class InitSpec:
    """X_0 law: point mass, Gaussian or uniform on a ball; empty location means the origin."""

    kind: str = "point"
    location: list[float] = field(default_factory=list)
    scale: float = 1.0
    radius: float = 1.0


@dataclass
class EnsembleSpec:
    n_paths: int = 10_000
    seed: int = 0
    init: InitSpec = field(default_factory=InitSpec)


@dataclass
class MollifierSpec:
    index: int | None = None
    nodes_per_axis: int = 3


@dataclass
class ExtendedSpec:
    """The xi process of the extended formula; the measure flow comes from the main model."""

    functional: str = "bilinear:g=dot"
    time_rate: float = 0.0
    xi_model: ModelSpec = field(default_factory=ModelSpec)
    xi_ensemble: EnsembleSpec = field(default_factory=lambda: EnsembleSpec(n_paths=1000, seed=1))


@dataclass
class DiagnosticSpec:
    checks: list[str] = field(default_factory=lambda: ["krylov"])
    p_exp: float = 2.0
    k: float = 2.0
    alpha: int = 1
    q_offset: float = 0.0
    enforce_hypothesis: bool = True
    n_list: list[int] = field(default_factory=lambda: [2, 4, 8, 16, 32])
    n_random: int = 20
    max_atoms: int = 16
    grid_points: int = 64
    lp_exponent: float = 2.0


@dataclass
class ConvergenceSpec:
    steps: list[float] = field(default_factory=list)
    n_paths: list[int] = field(default_factory=list)
    replicates: int = 32


@dataclass
class BootstrapSpec:
    """Resample count; None falls back to Settings.bootstrap_resamples."""

    resamples: int | None = None


@dataclass
class ToleranceSpec:
    se_multiplier: float = 3.0
    atol: float = 1e-12


@dataclass
class OutputSpec:
    directory: str = ""
    prefix: str = ""
    plot_data: bool = True


@dataclass
class ExperimentConfig:
    """One run: scenario, process, ensemble, functional and outputs."""

    scenario: str = "measure_flow"
    functional: str = "second_moment"
    model: ModelSpec = field(default_factory=ModelSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    mollifier: MollifierSpec = field(default_factory=MollifierSpec)
    extended: ExtendedSpec = field(default_factory=ExtendedSpec)
    diagnostic: DiagnosticSpec = field(default_factory=DiagnosticSpec)
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)
    bootstrap: BootstrapSpec = field(default_factory=BootstrapSpec)
    tolerance: ToleranceSpec = field(default_factory=ToleranceSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    # declared last: the name shadows dataclasses.field in the class body
    field: str = "square_norm"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        """Canonical serialization: sorted keys, two-space indent."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _describe(tp: Any) -> str:
    return getattr(tp, "__name__", str(tp))


def _coerce(value: Any, tp: Any, location: str, problems: list[str]) -> Any:
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        options = typing.get_args(tp)
        if value is None and type(None) in options:
            return None
        inner = [option for option in options if option is not type(None)]
        return _coerce(value, inner[0], location, problems)
    if origin is list:
        (item_type,) = typing.get_args(tp)
        if not isinstance(value, list):
            problems.append(f"{location}: expected a list, got {type(value).__name__}")
            return None
        return [_coerce(item, item_type, f"{location}[{i}]", problems) for i, item in enumerate(value)]
    if is_dataclass(tp):
        return _build(tp, value, location, problems)
    if tp is bool:
        if not isinstance(value, bool):
            problems.append(f"{location}: expected a boolean, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{location}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{location}: expected a number, got {value!r}")
            return value
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            problems.append(f"{location}: expected a string, got {value!r}")
        return value
    problems.append(f"{location}: unsupported type {_describe(tp)}")
    return value


def _build(cls: type, data: Any, location: str, problems: list[str]) -> Any:
    if not isinstance(data, dict):
        problems.append(f"{location or '<root>'}: expected an object, got {type(data).__name__}")
        return cls()
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    prefix = f"{location}." if location else ""
    for key in data:
        if key not in known:
            problems.append(f"{prefix}{key}: unknown key")
    values = {}
    for name in known:
        if name in data:
            values[name] = _coerce(data[name], hints[name], f"{prefix}{name}", problems)
    try:
        return cls(**values)
    except TypeError as exc:
        problems.append(f"{location or '<root>'}: {exc}")
        return cls()


def _validate(config: ExperimentConfig) -> list[str]:
    problems = []

    def require(condition: bool, location: str, message: str) -> None:
        if not condition:
            problems.append(f"{location}: {message}")

    require(config.scenario in SCENARIOS, "scenario", f"must be one of {', '.join(SCENARIOS)}")
    for prefix, model in (("model", config.model), ("extended.xi_model", config.extended.xi_model)):
        require(model.preset in PRESETS, f"{prefix}.preset", f"must be one of {', '.join(PRESETS)}")
        require(model.dim >= 1, f"{prefix}.dim", "must be >= 1")
        if model.noise_dim is not None:
            require(model.noise_dim >= model.dim, f"{prefix}.noise_dim", "must be >= dim")
        if model.drift:
            require(len(model.drift) == model.dim, f"{prefix}.drift", "needs one entry per dimension")
        require(model.scale > 0, f"{prefix}.scale", "must be > 0")
        require(0 <= model.epsilon < 1, f"{prefix}.epsilon", "must lie in [0, 1)")
        if model.bound is not None:
            require(model.bound > 0, f"{prefix}.bound", "bound K must be > 0")
        if model.ellipticity is not None:
            require(model.ellipticity > 0, f"{prefix}.ellipticity", "ellipticity delta must be > 0")
        if model.preset == "rotation":
            require(model.dim == 2, f"{prefix}.dim", "rotation preset is two-dimensional")
    require(config.grid.horizon > 0, "grid.horizon", "must be > 0")
    require(config.grid.n_steps >= 1, "grid.n_steps", "must be >= 1")
    for prefix, ensemble, model in (
        ("ensemble", config.ensemble, config.model),
        ("extended.xi_ensemble", config.extended.xi_ensemble, config.extended.xi_model),
    ):
        require(ensemble.n_paths >= 1, f"{prefix}.n_paths", "must be >= 1")
        require(ensemble.init.kind in INIT_KINDS, f"{prefix}.init.kind", f"must be one of {', '.join(INIT_KINDS)}")
        if ensemble.init.location:
            require(
                len(ensemble.init.location) == model.dim,
                f"{prefix}.init.location",
                "needs one entry per dimension",
            )
        require(ensemble.init.scale > 0, f"{prefix}.init.scale", "must be > 0")
        require(ensemble.init.radius > 0, f"{prefix}.init.radius", "must be > 0")
    if config.mollifier.index is not None:
        require(config.mollifier.index >= 1, "mollifier.index", "must be >= 1")
    require(config.mollifier.nodes_per_axis >= 1, "mollifier.nodes_per_axis", "must be >= 1")
    for check in config.diagnostic.checks:
        require(check in DIAGNOSTIC_CHECKS, "diagnostic.checks", f"unknown check {check!r}")
    require(config.diagnostic.alpha >= 0, "diagnostic.alpha", "must be >= 0")
    require(config.diagnostic.n_random >= 1, "diagnostic.n_random", "must be >= 1")
    require(config.diagnostic.max_atoms >= 1, "diagnostic.max_atoms", "must be >= 1")
    n_list = config.diagnostic.n_list
    require(
        bool(n_list) and all(b > a for a, b in zip(n_list, n_list[1:])) and n_list[0] >= 1,
        "diagnostic.n_list",
        "must be a nonempty increasing list of positive integers",
    )
    if config.scenario == "convergence":
        steps, sizes = config.convergence.steps, config.convergence.n_paths
        require(
            bool(steps) and all(b < a for a, b in zip(steps, steps[1:])) and all(s > 0 for s in steps),
            "convergence.steps",
            "must be a nonempty strictly decreasing list of positive steps",
        )
        require(
            bool(sizes) and all(b > a for a, b in zip(sizes, sizes[1:])) and all(n >= 1 for n in sizes),
            "convergence.n_paths",
            "must be a nonempty strictly increasing list of positive sizes",
        )
        require(config.convergence.replicates >= 1, "convergence.replicates", "must be >= 1")
    if config.scenario == "extended":
        require(
            config.extended.xi_ensemble.seed != config.ensemble.seed,
            "extended.xi_ensemble.seed",
            "must differ from ensemble.seed (independent copy)",
        )
        require(config.extended.xi_model.dim == config.model.dim, "extended.xi_model.dim", "must equal model.dim")
    if config.bootstrap.resamples is not None:
        require(config.bootstrap.resamples >= 2, "bootstrap.resamples", "must be >= 2")
    require(config.tolerance.se_multiplier > 0, "tolerance.se_multiplier", "must be > 0")
    require(config.tolerance.atol >= 0, "tolerance.atol", "must be >= 0")
    return problems


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment document.

    Raises:
        ConfigError: Listing every unknown key, type mismatch and constraint violation
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: invalid JSON: {exc}"]) from exc
    problems: list[str] = []
    config = _build(ExperimentConfig, data, "", problems)
    if not problems:
        problems = _validate(config)
    if problems:
        raise ConfigError(problems)
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
