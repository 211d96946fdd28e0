"""Typed design spaces: parameters, priors, scenarios, and feature encoding.

A design space is an ordered list of typed parameters (real, integer,
ordinal, categorical). The parameter order is canonical: configurations,
feature vectors, CSV columns and enumeration order all follow it. Scenarios
bundle a space with objectives, budgets, surrogate hyperparameters and an
evaluator, and are read from / written to a JSON setup file.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

REAL = "real"
INTEGER = "integer"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"
PARAMETER_KINDS = (REAL, INTEGER, ORDINAL, CATEGORICAL)

# named Beta prior shapes -> (alpha, beta)
BETA_SHAPES = {
    "uniform": (1.0, 1.0),
    "gaussian": (3.0, 3.0),
    "decay": (0.5, 1.5),
    "exponential": (1.5, 0.5),
}

ENUMERATION_CAP = 10_000_000


class ValidationError(ValueError):
    """A scenario or design-space definition violates its invariants."""


class DomainError(ValueError):
    """A value lies outside its parameter's domain."""


class EnumerationError(ValueError):
    """The space cannot be exhaustively enumerated (reals or too large)."""


def canonical_str(value: Any) -> str:
    """Canonical wire/CSV form: booleans lowercase, ints bare, floats via
    shortest round-trip repr, strings unchanged."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Prior:
    """Belief about where a parameter's good values lie.

    Numeric parameters (real/integer/ordinal) carry a Beta(alpha, beta)
    density over the unit interval, rescaled onto the domain at sampling
    time. Categorical parameters carry an explicit probability per level.
    """

    shape: str  # "uniform" | "gaussian" | "decay" | "exponential" | "beta" | "categorical"
    alpha: float = 1.0
    beta: float = 1.0
    probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.shape == "categorical":
            if self.probs is None:
                raise ValidationError("categorical prior requires probabilities")
            if any(p < 0 for p in self.probs):
                raise ValidationError("categorical prior probabilities must be >= 0")
            total = math.fsum(self.probs)
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"probabilities sum to {total:g}, expected 1")
        else:
            if not (self.alpha > 0 and self.beta > 0):
                raise ValidationError("Beta prior requires alpha > 0 and beta > 0")
            if self.probs is not None:
                raise ValidationError("probability table only valid for categorical priors")

    @staticmethod
    def uniform() -> "Prior":
        return Prior("uniform", *BETA_SHAPES["uniform"])


UNIFORM_PRIOR = Prior.uniform()


@dataclass(frozen=True)
class Parameter:
    """One typed dimension of the design space.

    Domain representation by kind:
      real / integer -> [lower, upper] bounds (inclusive);
      ordinal        -> ``values``: strictly increasing numeric tuple;
      categorical    -> ``values``: distinct level strings in declaration order.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    values: tuple = ()
    prior: Prior = UNIFORM_PRIOR

    def __post_init__(self):
        if self.kind not in PARAMETER_KINDS:
            raise ValidationError(f"{self.name}: unknown parameter kind {self.kind!r}")
        if self.kind in (REAL, INTEGER):
            if self.lower is None or self.upper is None:
                raise ValidationError(f"{self.name}: {self.kind} parameter needs [lower, upper]")
            if self.lower > self.upper:
                raise ValidationError(f"{self.name}: lower bound exceeds upper bound")
        elif self.kind == ORDINAL:
            if not self.values:
                raise ValidationError(f"{self.name}: ordinal value list is empty")
            vals = list(self.values)
            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
                raise ValidationError(f"{self.name}: ordinal values must be numeric")
            if any(not (a < b) for a, b in zip(vals, vals[1:])):
                raise ValidationError(f"{self.name}: ordinal values must be strictly increasing")
        else:  # categorical
            if not self.values:
                raise ValidationError(f"{self.name}: categorical level list is empty")
            if len(set(self.values)) != len(self.values):
                raise ValidationError(f"{self.name}: categorical levels must be distinct")
            for lv in self.values:
                if not isinstance(lv, str):
                    raise ValidationError(f"{self.name}: categorical levels must be strings")
                if any(ch in lv for ch in ",\n\r\""):
                    raise ValidationError(
                        f"{self.name}: level {lv!r} contains a character reserved by the CSV protocol"
                    )
        if self.kind == CATEGORICAL:
            if self.prior.shape != "categorical" and self.prior != UNIFORM_PRIOR:
                raise ValidationError(f"{self.name}: categorical parameters take probability priors")
            if self.prior.shape == "categorical" and len(self.prior.probs) != len(self.values):
                raise ValidationError(
                    f"{self.name}: prior lists {len(self.prior.probs)} probabilities "
                    f"for {len(self.values)} levels"
                )
        elif self.prior.shape == "categorical":
            raise ValidationError(f"{self.name}: probability priors only attach to categorical parameters")

    # -- domain helpers -----------------------------------------------------

    @property
    def is_unordered(self) -> bool:
        return self.kind == CATEGORICAL

    def domain_size(self) -> int | None:
        """Number of attainable values; None when uncountable (real)."""
        if self.kind == REAL:
            return None
        if self.kind == INTEGER:
            return int(self.upper) - int(self.lower) + 1
        return len(self.values)

    def domain_values(self) -> tuple:
        """Attainable values in canonical (ascending / declared) order."""
        if self.kind == REAL:
            raise EnumerationError(f"{self.name}: real parameters cannot be enumerated")
        if self.kind == INTEGER:
            return tuple(range(int(self.lower), int(self.upper) + 1))
        return self.values

    def contains(self, value: Any) -> bool:
        if self.kind == REAL:
            return isinstance(value, (int, float)) and not isinstance(value, bool) \
                and self.lower <= value <= self.upper
        if self.kind == INTEGER:
            return isinstance(value, int) and not isinstance(value, bool) \
                and self.lower <= value <= self.upper
        if self.kind == ORDINAL:
            return any(value == v for v in self.values)
        return value in self.values

    def encode_value(self, value: Any) -> float:
        """Numeric feature for the forests: the value itself, or the level
        index for categorical parameters."""
        if not self.contains(value):
            raise DomainError(f"{self.name}: value {value!r} outside domain")
        if self.kind == CATEGORICAL:
            return float(self.values.index(value))
        return float(value)


@dataclass(frozen=True)
class Configuration:
    """One point of the design space: a value per parameter in canonical order."""

    values: tuple

    def as_dict(self, space: "DesignSpace") -> dict[str, Any]:
        return dict(zip(space.names, self.values))


@dataclass(frozen=True)
class DesignSpace:
    parameters: tuple[Parameter, ...]

    def __post_init__(self):
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValidationError("parameter names must be unique")
        if not self.parameters:
            raise ValidationError("design space has no parameters")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def unordered_mask(self) -> tuple[bool, ...]:
        return tuple(p.is_unordered for p in self.parameters)

    def cardinality(self) -> int | None:
        """Exact number of configurations, or None when any real parameter
        makes the space uncountable."""
        total = 1
        for p in self.parameters:
            size = p.domain_size()
            if size is None:
                return None
            total *= size
        return total

    def validate(self, config: Configuration) -> None:
        if len(config.values) != len(self.parameters):
            raise DomainError("configuration length does not match parameter count")
        for p, v in zip(self.parameters, config.values):
            if not p.contains(v):
                raise DomainError(f"{p.name}: value {v!r} outside domain")


def encode(space: DesignSpace, config: Configuration) -> list[float]:
    """Numeric feature vector for a configuration, one entry per parameter.

    Real/integer/ordinal values map to themselves; categorical values map to
    their level index (positions flagged by ``space.unordered_mask`` so tree
    splits use equality tests instead of thresholds).
    """
    if len(config.values) != len(space.parameters):
        raise DomainError("configuration length does not match parameter count")
    return [p.encode_value(v) for p, v in zip(space.parameters, config.values)]


def encode_matrix(space: DesignSpace, configs: Sequence[Configuration]):
    import numpy as np

    return np.asarray([encode(space, c) for c in configs], dtype=float)


def enumerate_space(space: DesignSpace, cap: int = ENUMERATION_CAP) -> Iterator[Configuration]:
    """Yield every configuration exactly once, lexicographically in canonical
    parameter order. Requires a finite space no larger than ``cap``."""
    card = space.cardinality()
    if card is None:
        raise EnumerationError("space with real parameters cannot be enumerated")
    if card > cap:
        raise EnumerationError(f"cardinality {card} exceeds enumeration cap {cap}")
    domains = [p.domain_values() for p in space.parameters]
    for combo in itertools.product(*domains):
        yield Configuration(combo)


# ---------------------------------------------------------------------------
# Scenario: the JSON setup file
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeasibleOutput:
    name: str
    true_value: str = "true"


@dataclass(frozen=True)
class Scenario:
    application_name: str
    objectives: tuple[str, ...]
    space: DesignSpace
    evaluator: "EvaluatorSpec"
    feasibility: FeasibleOutput | None = None
    doe_samples: int = 1000
    optimization_iterations: int = 50
    evaluations_per_iteration: int = 100
    pareto_prediction_samples: int = 100_000
    regressor_hp: "ForestHyperparams" = None
    classifier_hp: "ForestHyperparams" = None
    seed: int = 0
    output_dir: str = "dse_output"
    use_feasibility_filter: bool = True
    feasibility_threshold: float = 0.5

    def __post_init__(self):
        if self.regressor_hp is None or self.classifier_hp is None:
            from .forest import ForestHyperparams

            if self.regressor_hp is None:
                object.__setattr__(self, "regressor_hp", ForestHyperparams())
            if self.classifier_hp is None:
                object.__setattr__(self, "classifier_hp", ForestHyperparams())
        if len(self.objectives) < 1:
            raise ValidationError("at least one optimization objective is required")
        if len(set(self.objectives)) != len(self.objectives):
            raise ValidationError("objective names must be distinct")
        if set(self.objectives) & set(self.space.names):
            raise ValidationError("objective names must differ from parameter names")
        if self.doe_samples < 1:
            raise ValidationError("design_of_experiment.number_of_samples must be >= 1")
        if self.optimization_iterations < 0:
            raise ValidationError("optimization_iterations must be >= 0")
        if self.evaluations_per_iteration < 1:
            raise ValidationError("evaluations_per_optimization_iteration must be >= 1")
        if self.pareto_prediction_samples < 1:
            raise ValidationError("pareto_prediction_samples must be >= 1")
        if not (0.0 < self.feasibility_threshold < 1.0):
            raise ValidationError("feasibility_threshold must lie in (0, 1)")


_TOP_LEVEL_KEYS = {
    "application_name", "optimization_objectives", "feasible_output",
    "input_parameters", "design_of_experiment", "optimization_iterations",
    "evaluations_per_optimization_iteration", "pareto_prediction_samples",
    "seed", "output_dir", "evaluator", "surrogate",
    "use_feasibility_filter", "feasibility_threshold",
}
_PARAM_KEYS = {"parameter_type", "values", "prior"}


def _parse_prior(raw: Any, kind: str, n_levels: int, where: str) -> Prior:
    if raw is None:
        return UNIFORM_PRIOR
    if isinstance(raw, str):
        if raw not in BETA_SHAPES:
            raise ValidationError(f"{where}: unknown prior shape {raw!r}")
        if kind == CATEGORICAL:
            # "uniform" reads naturally as equal level probabilities
            if raw == "uniform":
                return UNIFORM_PRIOR
            raise ValidationError(f"{where}: categorical parameters take probability priors")
        a, b = BETA_SHAPES[raw]
        return Prior(raw, a, b)
    if isinstance(raw, list):
        if kind == CATEGORICAL:
            probs = tuple(float(p) for p in raw)
            total = math.fsum(probs)
            if any(p < 0 for p in probs):
                raise ValidationError(f"{where}: prior probabilities must be >= 0")
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"{where}: probabilities sum to {total:g}")
            if len(probs) != n_levels:
                raise ValidationError(f"{where}: prior lists {len(probs)} probabilities for {n_levels} levels")
            return Prior("categorical", probs=probs)
        if len(raw) != 2:
            raise ValidationError(f"{where}: Beta prior must be a two-element [alpha, beta] list")
        a, b = float(raw[0]), float(raw[1])
        if not (a > 0 and b > 0):
            raise ValidationError(f"{where}: Beta prior requires alpha > 0 and beta > 0")
        return Prior("beta", a, b)
    raise ValidationError(f"{where}: unrecognized prior {raw!r}")


def _parse_parameter(name: str, raw: Any) -> Parameter:
    where = f"input_parameters.{name}"
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: expected an object")
    unknown = set(raw) - _PARAM_KEYS
    if unknown:
        raise ValidationError(f"{where}: unknown key {sorted(unknown)[0]!r}")
    kind = raw.get("parameter_type")
    if kind not in PARAMETER_KINDS:
        raise ValidationError(f"{where}: unknown parameter kind {kind!r}")
    values = raw.get("values")
    if not isinstance(values, list) or not values:
        raise ValidationError(f"{where}: 'values' must be a non-empty list")

    if kind in (REAL, INTEGER):
        if len(values) != 2:
            raise ValidationError(f"{where}: {kind} takes a [lower, upper] pair")
        lo, hi = values
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
            raise ValidationError(f"{where}: bounds must be numbers")
        if kind == INTEGER and not all(isinstance(v, int) for v in values):
            raise ValidationError(f"{where}: integer bounds must be integers")
        prior = _parse_prior(raw.get("prior"), kind, 0, where)
        return Parameter(name, kind, lower=float(lo) if kind == REAL else int(lo),
                         upper=float(hi) if kind == REAL else int(hi), prior=prior)
    if kind == ORDINAL:
        # ordinal lists may arrive unsorted; canonical order is ascending
        try:
            vals = tuple(sorted(values))
        except TypeError:
            raise ValidationError(f"{where}: ordinal values must be mutually comparable numbers")
        prior = _parse_prior(raw.get("prior"), kind, 0, where)
        return Parameter(name, kind, values=vals, prior=prior)
    # categorical: canonicalize levels to strings, keep declaration order
    levels = tuple(canonical_str(v) for v in values)
    prior = _parse_prior(raw.get("prior"), kind, len(levels), where)
    return Parameter(name, kind, values=levels, prior=prior)


def parse_scenario(json_text: str) -> Scenario:
    """Parse and validate a scenario JSON document.

    Optional fields take the documented defaults; every parameter without a
    prior gets the uniform one. Malformed JSON is reported with its line and
    column; structural violations name the offending field.
    """
    from .evaluators import EvaluatorSpec, parse_evaluator
    from .forest import ForestHyperparams, parse_hyperparams

    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"scenario JSON parse error at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise ValidationError("scenario document must be a JSON object")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown scenario field {sorted(unknown)[0]!r}")
    for req in ("application_name", "optimization_objectives", "input_parameters", "evaluator"):
        if req not in doc:
            raise ValidationError(f"missing required scenario field {req!r}")

    objectives = doc["optimization_objectives"]
    if not isinstance(objectives, list) or not all(isinstance(o, str) for o in objectives):
        raise ValidationError("optimization_objectives must be a list of strings")

    raw_params = doc["input_parameters"]
    if not isinstance(raw_params, dict) or not raw_params:
        raise ValidationError("input_parameters must be a non-empty object")
    params = tuple(_parse_parameter(name, raw) for name, raw in raw_params.items())
    space = DesignSpace(params)

    feasibility = None
    if doc.get("feasible_output") is not None:
        fo = doc["feasible_output"]
        if not isinstance(fo, dict) or "name" not in fo:
            raise ValidationError("feasible_output must be an object with a 'name'")
        feasibility = FeasibleOutput(str(fo["name"]), str(fo.get("true_value", "true")))
        if feasibility.name in set(objectives) | set(space.names):
            raise ValidationError("feasible_output.name clashes with another column name")

    doe = doc.get("design_of_experiment", {})
    if not isinstance(doe, dict):
        raise ValidationError("design_of_experiment must be an object")
    n_samples = int(doe.get("number_of_samples", 1000))

    surrogate = doc.get("surrogate", {})
    if not isinstance(surrogate, dict):
        raise ValidationError("surrogate must be an object")
    regressor_hp = parse_hyperparams(surrogate.get("regressor", {}), classifier=False)
    classifier_hp = parse_hyperparams(surrogate.get("classifier", {}), classifier=True)

    evaluator = parse_evaluator(doc["evaluator"], tuple(objectives), feasibility)

    return Scenario(
        application_name=str(doc["application_name"]),
        objectives=tuple(objectives),
        space=space,
        evaluator=evaluator,
        feasibility=feasibility,
        doe_samples=n_samples,
        optimization_iterations=int(doc.get("optimization_iterations", 50)),
        evaluations_per_iteration=int(doc.get("evaluations_per_optimization_iteration", 100)),
        pareto_prediction_samples=int(doc.get("pareto_prediction_samples", 100_000)),
        regressor_hp=regressor_hp,
        classifier_hp=classifier_hp,
        seed=int(doc.get("seed", 0)),
        output_dir=str(doc.get("output_dir", "dse_output")),
        use_feasibility_filter=bool(doc.get("use_feasibility_filter", True)),
        feasibility_threshold=float(doc.get("feasibility_threshold", 0.5)),
    )


def _prior_to_json(prior: Prior) -> Any:
    if prior.shape == "categorical":
        return list(prior.probs)
    if prior.shape in BETA_SHAPES:
        return prior.shape
    return [prior.alpha, prior.beta]


def _parameter_to_json(p: Parameter) -> dict:
    if p.kind in (REAL, INTEGER):
        values = [p.lower, p.upper]
    else:
        values = list(p.values)
    return {"parameter_type": p.kind, "values": values, "prior": _prior_to_json(p.prior)}


def serialize_scenario(scenario: Scenario) -> str:
    """Inverse of :func:`parse_scenario`: emits a JSON document that parses
    back to an equal Scenario."""
    from .evaluators import evaluator_to_json
    from .forest import hyperparams_to_json

    doc: dict[str, Any] = {
        "application_name": scenario.application_name,
        "optimization_objectives": list(scenario.objectives),
        "input_parameters": {p.name: _parameter_to_json(p) for p in scenario.space.parameters},
        "design_of_experiment": {"number_of_samples": scenario.doe_samples},
        "optimization_iterations": scenario.optimization_iterations,
        "evaluations_per_optimization_iteration": scenario.evaluations_per_iteration,
        "pareto_prediction_samples": scenario.pareto_prediction_samples,
        "seed": scenario.seed,
        "output_dir": scenario.output_dir,
        "evaluator": evaluator_to_json(scenario.evaluator),
        "surrogate": {
            "regressor": hyperparams_to_json(scenario.regressor_hp, classifier=False),
            "classifier": hyperparams_to_json(scenario.classifier_hp, classifier=True),
        },
        "use_feasibility_filter": scenario.use_feasibility_filter,
        "feasibility_threshold": scenario.feasibility_threshold,
    }
    if scenario.feasibility is not None:
        doc["feasible_output"] = {
            "name": scenario.feasibility.name,
            "true_value": scenario.feasibility.true_value,
        }
    return json.dumps(doc, indent=2)
