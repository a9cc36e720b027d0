"""Run configuration: JSON schema, validation, and builders.

A run is described by one JSON document (see README for the schema).
External vocabulary follows the CLI contract (keys nu_mode, nu_proposal_sd,
nu_rate and the Delta/tau/nu column names); internally those map onto the
descriptive df/loading names used by the sampler. CLI flags override file
values before any dataclass is constructed, so derived defaults (burn-in =
25% of iterations) always see the final numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .forward import (
    LinearForwardModel,
    cauchy_laplace_operator,
    deconvolution_operator,
    read_operator_csv,
    repeat_rows,
)
from .model import PriorSpec, default_priors, smoothness_precision
from .sampler import SamplerConfig
from .skewt import SkewTParams, sample_skew_t, to_latent

__all__ = [
    "ProblemSpec",
    "SyntheticSpec",
    "PriorConfig",
    "RunConfig",
    "NOISE_MODELS",
    "load_config",
    "config_from_dict",
    "resolved_dict",
    "parse_nu_mode",
    "format_nu_mode",
    "build_operator",
    "build_priors",
    "sampler_for_model",
    "true_u_vector",
    "synthesize_data",
    "truth_parameter_values",
]

NOISE_MODELS = ("normal", "student_t", "skew_normal", "skew_t")

# Symmetric-limit degrees of freedom: at 1e6 the Student-t is below every
# test's Monte Carlo noise floor away from the normal.
NORMAL_LIMIT_DF = 1e6

_PROBLEM_KINDS = ("deconvolution", "cauchy_laplace", "external")
_PRESETS = ("bump", "boxcar", "ramp")


@dataclass(frozen=True)
class ProblemSpec:
    """Which forward operator to build, plus optional row repetition.

    n_obs > operator rows repeats rows cyclically, modeling repeated
    observations of the same design.
    """

    kind: str
    grid: int = 16
    kernel_sd: float = 1.0
    operator_path: str | None = None
    n_obs: int | None = None

    def __post_init__(self):
        if self.kind not in _PROBLEM_KINDS:
            raise ConfigError(f"problem.kind must be one of {_PROBLEM_KINDS}")
        if self.kind == "deconvolution":
            if self.grid < 3:
                raise ConfigError("deconvolution needs grid >= 3")
            if not self.kernel_sd > 0.0:
                raise ConfigError("deconvolution needs kernel_sd > 0")
        if self.kind == "cauchy_laplace" and self.grid < 4:
            raise ConfigError("cauchy_laplace needs grid >= 4")
        if self.kind == "external" and not self.operator_path:
            raise ConfigError("external problem requires operator_path")
        if self.n_obs is not None and self.n_obs < 1:
            raise ConfigError("problem.n_obs must be >= 1")


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground truth and noise law for synthetic data; deterministic per seed."""

    true_u: tuple | str
    noise: SkewTParams
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.true_u, str):
            if self.true_u not in _PRESETS:
                raise ConfigError(f"true_u preset must be one of {_PRESETS}")
        else:
            values = tuple(float(v) for v in self.true_u)
            if not values or not all(map(math.isfinite, values)):
                raise ConfigError("true_u vector must be nonempty and finite")
            object.__setattr__(self, "true_u", values)


@dataclass(frozen=True)
class PriorConfig:
    """Scalar prior knobs; the d-dependent PriorSpec is built per operator.

    When smoothness_kappa is set the u prior precision becomes
    kappa * (second difference)' (second difference) + gamma * I instead of
    u_precision_scale * I.
    """

    u_precision_scale: float = 1e-2
    smoothness_kappa: float | None = None
    smoothness_gamma: float | None = None
    loading_sd: float = 10.0
    tau_shape: float = 0.01
    tau_rate: float = 0.01
    df_rate: float = 0.5

    def __post_init__(self):
        for name in ("u_precision_scale", "loading_sd", "tau_shape", "tau_rate", "df_rate"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ConfigError(f"priors.{name} must be finite and > 0")
        if (self.smoothness_kappa is None) != (self.smoothness_gamma is None):
            raise ConfigError("smoothness_kappa and smoothness_gamma come together")


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    noise_model: str = "skew_t"
    data_path: str | None = None
    truth_path: str | None = None
    synthetic: SyntheticSpec | None = None
    priors: PriorConfig = field(default_factory=PriorConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    nu_values: tuple = (3.0, 5.0, 10.0, 30.0)
    output_dir: str = "output"

    def __post_init__(self):
        if self.noise_model not in NOISE_MODELS:
            raise ConfigError(f"noise_model must be one of {NOISE_MODELS}")
        if (self.data_path is None) == (self.synthetic is None):
            raise ConfigError(
                "exactly one data source is required: data_path or synthetic"
            )
        for value in self.nu_values:
            if not value > 2.0:
                raise ConfigError(
                    f"nu value {value} lies outside the prior support (2, inf)"
                )


def parse_nu_mode(text: str) -> tuple[str, float | None]:
    """Parse 'sampled' or 'fixed:VALUE' into (mode, value)."""
    if text == "sampled":
        return "sampled", None
    if text.startswith("fixed:"):
        try:
            value = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"cannot parse nu mode {text!r}") from exc
        if not value > 2.0:
            raise ConfigError(
                f"fixed nu {value} lies outside the prior support (2, inf)"
            )
        return "fixed", value
    raise ConfigError("nu mode must be 'sampled' or 'fixed:VALUE'")


def format_nu_mode(mode: str, value: float | None) -> str:
    return "sampled" if mode == "sampled" else f"fixed:{value!r}"


def _require(raw: dict, key: str, kind, where: str):
    if key not in raw:
        raise ConfigError(f"{where} is missing required key {key!r}")
    return _coerce(raw[key], kind, f"{where}.{key}")


def _coerce(value, kind, where: str):
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: cannot interpret {value!r}") from exc


def _known_keys(raw: dict, keys, where: str) -> None:
    extra = set(raw) - set(keys)
    if extra:
        raise ConfigError(f"{where} has unknown keys {sorted(extra)}")


def config_from_dict(raw: dict, base_dir: Path | None = None) -> RunConfig:
    """Build a validated RunConfig, applying every documented default.

    Relative paths are resolved against base_dir (the config file's
    directory) when given.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _known_keys(
        raw,
        (
            "problem",
            "noise_model",
            "data_path",
            "truth_path",
            "synthetic",
            "priors",
            "sampler",
            "nu_mode",
            "nu_values",
            "output_dir",
        ),
        "config",
    )

    problem_raw = raw.get("problem")
    if not isinstance(problem_raw, dict):
        raise ConfigError("config requires a 'problem' object")
    _known_keys(
        problem_raw, ("kind", "grid", "kernel_sd", "operator_path", "n_obs"), "problem"
    )
    problem = ProblemSpec(
        kind=_require(problem_raw, "kind", str, "problem"),
        grid=_coerce(problem_raw.get("grid", 16), int, "problem.grid"),
        kernel_sd=_coerce(problem_raw.get("kernel_sd", 1.0), float, "problem.kernel_sd"),
        operator_path=_resolve_path(problem_raw.get("operator_path"), base_dir),
        n_obs=(
            _coerce(problem_raw["n_obs"], int, "problem.n_obs")
            if problem_raw.get("n_obs") is not None
            else None
        ),
    )

    synthetic = None
    synthetic_raw = raw.get("synthetic")
    if synthetic_raw is not None:
        if not isinstance(synthetic_raw, dict):
            raise ConfigError("synthetic must be an object")
        _known_keys(synthetic_raw, ("true_u", "noise", "seed"), "synthetic")
        noise_raw = synthetic_raw.get("noise")
        if not isinstance(noise_raw, dict):
            raise ConfigError("synthetic.noise must be an object")
        _known_keys(noise_raw, ("scale", "skew", "df"), "synthetic.noise")
        try:
            noise = SkewTParams(
                scale=_require(noise_raw, "scale", float, "synthetic.noise"),
                skew=_coerce(noise_raw.get("skew", 0.0), float, "synthetic.noise.skew"),
                df=_coerce(noise_raw.get("df", 4.0), float, "synthetic.noise.df"),
            )
        except ValueError as exc:
            raise ConfigError(f"synthetic.noise: {exc}") from exc
        true_u = synthetic_raw.get("true_u", "bump")
        synthetic = SyntheticSpec(
            true_u=true_u if isinstance(true_u, str) else tuple(true_u),
            noise=noise,
            seed=_coerce(synthetic_raw.get("seed", 0), int, "synthetic.seed"),
        )

    priors_raw = raw.get("priors", {})
    if not isinstance(priors_raw, dict):
        raise ConfigError("priors must be an object")
    _known_keys(
        priors_raw,
        (
            "u_precision_scale",
            "smoothness_kappa",
            "smoothness_gamma",
            "loading_sd",
            "tau_shape",
            "tau_rate",
            "nu_rate",
        ),
        "priors",
    )
    priors = PriorConfig(
        u_precision_scale=_coerce(
            priors_raw.get("u_precision_scale", 1e-2), float, "priors.u_precision_scale"
        ),
        smoothness_kappa=(
            _coerce(priors_raw["smoothness_kappa"], float, "priors.smoothness_kappa")
            if priors_raw.get("smoothness_kappa") is not None
            else None
        ),
        smoothness_gamma=(
            _coerce(priors_raw["smoothness_gamma"], float, "priors.smoothness_gamma")
            if priors_raw.get("smoothness_gamma") is not None
            else None
        ),
        loading_sd=_coerce(priors_raw.get("loading_sd", 10.0), float, "priors.loading_sd"),
        tau_shape=_coerce(priors_raw.get("tau_shape", 0.01), float, "priors.tau_shape"),
        tau_rate=_coerce(priors_raw.get("tau_rate", 0.01), float, "priors.tau_rate"),
        df_rate=_coerce(priors_raw.get("nu_rate", 0.5), float, "priors.nu_rate"),
    )

    sampler_raw = raw.get("sampler", {})
    if not isinstance(sampler_raw, dict):
        raise ConfigError("sampler must be an object")
    _known_keys(
        sampler_raw,
        ("iterations", "burn_in", "thin", "chains", "seed", "nu_proposal_sd"),
        "sampler",
    )
    iterations = _coerce(sampler_raw.get("iterations", 20000), int, "sampler.iterations")
    burn_in = _coerce(
        sampler_raw.get("burn_in", iterations // 4), int, "sampler.burn_in"
    )
    df_mode, df_fixed = parse_nu_mode(_coerce(raw.get("nu_mode", "sampled"), str, "nu_mode"))
    try:
        sampler = SamplerConfig(
            iterations=iterations,
            burn_in=burn_in,
            thin=_coerce(sampler_raw.get("thin", 1), int, "sampler.thin"),
            chains=_coerce(sampler_raw.get("chains", 4), int, "sampler.chains"),
            seed=_coerce(sampler_raw.get("seed", 0), int, "sampler.seed"),
            df_proposal_sd=_coerce(
                sampler_raw.get("nu_proposal_sd", 0.5), float, "sampler.nu_proposal_sd"
            ),
            df_mode=df_mode,
            df_fixed=df_fixed,
        )
    except ValueError as exc:
        raise ConfigError(f"sampler: {exc}") from exc

    nu_values = raw.get("nu_values", (3.0, 5.0, 10.0, 30.0))
    try:
        nu_values = tuple(float(v) for v in nu_values)
    except (TypeError, ValueError) as exc:
        raise ConfigError("nu_values must be a list of numbers") from exc

    config = RunConfig(
        problem=problem,
        noise_model=_coerce(raw.get("noise_model", "skew_t"), str, "noise_model"),
        data_path=_resolve_path(raw.get("data_path"), base_dir),
        truth_path=_resolve_path(raw.get("truth_path"), base_dir),
        synthetic=synthetic,
        priors=priors,
        sampler=sampler,
        nu_values=nu_values,
        output_dir=_coerce(raw.get("output_dir", "output"), str, "output_dir"),
    )
    _check_referenced_files(config)
    return config


def _resolve_path(path, base_dir: Path | None) -> str | None:
    if path is None:
        return None
    p = Path(str(path))
    if base_dir is not None and not p.is_absolute():
        p = Path(base_dir) / p
    return str(p)


def _check_referenced_files(config: RunConfig) -> None:
    for label, path in (
        ("data_path", config.data_path),
        ("truth_path", config.truth_path),
        ("problem.operator_path", config.problem.operator_path),
    ):
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"{label} does not exist: {path}")


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config file, apply CLI overrides, and validate.

    overrides maps top-level dotted keys ('seed', 'iterations', 'chains',
    'nu_mode', 'output_dir') onto the raw document before parsing, so
    derived defaults see the final values.
    """
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    raw = dict(raw)
    overrides = overrides or {}
    sampler_raw = dict(raw.get("sampler", {})) if isinstance(raw.get("sampler", {}), dict) else {}
    for key in ("seed", "iterations", "chains"):
        if overrides.get(key) is not None:
            sampler_raw[key] = overrides[key]
            # a CLI iteration count invalidates a file burn-in that no
            # longer fits; drop it so the 25% default re-derives
            if key == "iterations" and "burn_in" not in overrides:
                sampler_raw.pop("burn_in", None)
    if sampler_raw:
        raw["sampler"] = sampler_raw
    if overrides.get("nu_mode") is not None:
        raw["nu_mode"] = overrides["nu_mode"]
    if overrides.get("output_dir") is not None:
        raw["output_dir"] = overrides["output_dir"]
    if overrides.get("nu_values") is not None:
        raw["nu_values"] = overrides["nu_values"]
    return config_from_dict(raw, base_dir=p.parent)


def resolved_dict(config: RunConfig) -> dict:
    """Fully resolved, JSON-serializable view with every default applied.

    Written next to run outputs; feeding it back through config_from_dict
    reproduces the run bit-exactly.
    """
    synthetic = None
    if config.synthetic is not None:
        synthetic = {
            "true_u": (
                config.synthetic.true_u
                if isinstance(config.synthetic.true_u, str)
                else list(config.synthetic.true_u)
            ),
            "noise": {
                "scale": config.synthetic.noise.scale,
                "skew": config.synthetic.noise.skew,
                "df": config.synthetic.noise.df,
            },
            "seed": config.synthetic.seed,
        }
    return {
        "problem": {
            "kind": config.problem.kind,
            "grid": config.problem.grid,
            "kernel_sd": config.problem.kernel_sd,
            "operator_path": config.problem.operator_path,
            "n_obs": config.problem.n_obs,
        },
        "noise_model": config.noise_model,
        "data_path": config.data_path,
        "truth_path": config.truth_path,
        "synthetic": synthetic,
        "priors": {
            "u_precision_scale": config.priors.u_precision_scale,
            "smoothness_kappa": config.priors.smoothness_kappa,
            "smoothness_gamma": config.priors.smoothness_gamma,
            "loading_sd": config.priors.loading_sd,
            "tau_shape": config.priors.tau_shape,
            "tau_rate": config.priors.tau_rate,
            "nu_rate": config.priors.df_rate,
        },
        "sampler": {
            "iterations": config.sampler.iterations,
            "burn_in": config.sampler.burn_in,
            "thin": config.sampler.thin,
            "chains": config.sampler.chains,
            "seed": config.sampler.seed,
            "nu_proposal_sd": config.sampler.df_proposal_sd,
        },
        "nu_mode": format_nu_mode(config.sampler.df_mode, config.sampler.df_fixed),
        "nu_values": list(config.nu_values),
        "output_dir": config.output_dir,
    }


def build_operator(problem: ProblemSpec) -> LinearForwardModel:
    """Materialize the configured forward operator, repeating rows on demand."""
    if problem.kind == "deconvolution":
        model = deconvolution_operator(problem.grid, problem.kernel_sd)
    elif problem.kind == "cauchy_laplace":
        model = cauchy_laplace_operator(problem.grid)
    else:
        model = read_operator_csv(problem.operator_path)
    if problem.n_obs is not None and problem.n_obs != model.n_obs:
        model = repeat_rows(model, problem.n_obs)
    return model


def build_priors(config: RunConfig, dim: int) -> PriorSpec:
    """PriorSpec for a d-dimensional unknown from the scalar knobs."""
    pc = config.priors
    kwargs = dict(
        loading_sd=pc.loading_sd,
        tau_shape=pc.tau_shape,
        tau_rate=pc.tau_rate,
        df_rate=pc.df_rate,
    )
    if pc.smoothness_kappa is not None:
        return PriorSpec(
            u_mean=np.zeros(dim),
            u_precision=smoothness_precision(dim, pc.smoothness_kappa, pc.smoothness_gamma),
            **kwargs,
        )
    return default_priors(dim, u_precision_scale=pc.u_precision_scale, **kwargs)


def sampler_for_model(config: RunConfig, model: str) -> SamplerConfig:
    """Apply the noise-model constraints to the configured sampler.

    normal: loading pinned at 0 and df at the symmetric limit;
    student_t: loading pinned at 0, df per nu_mode; skew_normal: df pinned
    at the symmetric limit, loading free; skew_t: everything per config.
    """
    base = config.sampler
    if model == "normal":
        return replace(base, df_mode="fixed", df_fixed=NORMAL_LIMIT_DF, loading_fixed=0.0)
    if model == "student_t":
        return replace(base, loading_fixed=0.0)
    if model == "skew_normal":
        return replace(base, df_mode="fixed", df_fixed=NORMAL_LIMIT_DF)
    if model == "skew_t":
        return base
    raise ConfigError(f"unknown noise model {model!r}")


def true_u_vector(true_u, dim: int) -> np.ndarray:
    """Materialize the ground-truth solution (preset name or explicit vector)."""
    if isinstance(true_u, str):
        grid = np.arange(dim, dtype=float)
        if true_u == "bump":
            center = 0.5 * (dim - 1)
            width = max(0.1 * dim, 1.0)
            return np.exp(-0.5 * ((grid - center) / width) ** 2)
        if true_u == "boxcar":
            out = np.zeros(dim)
            out[dim // 3 : (2 * dim) // 3] = 1.0
            return out
        if true_u == "ramp":
            return np.linspace(0.0, 1.0, dim)
        raise ConfigError(f"unknown true_u preset {true_u!r}")
    values = np.asarray(true_u, dtype=float)
    if values.shape != (dim,):
        raise ConfigError(
            f"true_u has length {values.shape[0]} but the operator needs {dim}"
        )
    return values


def synthesize_data(
    config: RunConfig, operator: LinearForwardModel
) -> tuple[np.ndarray, np.ndarray]:
    """Draw y = A u + eps with seeded skew-t noise; returns (y, true_u)."""
    if config.synthetic is None:
        raise ConfigError("synthesize_data requires a synthetic block")
    u = true_u_vector(config.synthetic.true_u, operator.dim)
    eps = sample_skew_t(operator.n_obs, config.synthetic.noise, config.synthetic.seed)
    return operator.matrix @ u + eps, u


def truth_parameter_values(config: RunConfig, true_u: np.ndarray) -> dict:
    """Name->value map for the ground-truth file written by generate."""
    latent = to_latent(config.synthetic.noise)
    values = {f"u_{i + 1}": float(v) for i, v in enumerate(true_u)}
    values["Delta"] = latent.loading
    values["tau"] = latent.tau
    values["nu"] = config.synthetic.noise.df
    return values
