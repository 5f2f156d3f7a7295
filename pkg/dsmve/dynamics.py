"""Coefficients of delay McKean-Vlasov models.

The opinion dynamics model and the verification models (zero drift,
linear, present-state cubic control) are all built from the same small
library of drift terms, which is also what config files use to define
custom models.
"""

import dataclasses
from dataclasses import dataclass
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from dsmve.errors import DomainError, UsageError
from dsmve.measure import mean, pairwise_integral
from dsmve.models.measure import EmpiricalMeasure
from dsmve.models.model_spec import Diffusion, Drift, InitialPath, ModelSpec, OpinionParams
from dsmve.serialize_util import ConfigBlock, config_field

log = logging.getLogger("dsmve.dynamics")

KERNEL_SWITCH = 0.5


def opinion_kernel(r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """sin(r - 0.5) for r < 0.5 and cos(r + 0.5) for r >= 0.5

    NB: jumps at r = 0.5 (sin(0) = 0 vs cos(1))
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise DomainError("opinion kernel is defined for non-negative distances")
    values = np.where(r < KERNEL_SWITCH, np.sin(r - KERNEL_SWITCH), np.cos(r + KERNEL_SWITCH))
    return float(values) if values.ndim == 0 else values


def _opinion_pair(diffs: np.ndarray) -> np.ndarray:
    "Phi(|x - y|)(x - y) for one dimensional differences"
    return opinion_kernel(np.abs(diffs)) * diffs


PAIR_KERNELS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {"opinion": _opinion_pair}


def _signed_power(x: np.ndarray, power: float) -> np.ndarray:
    if float(power).is_integer():
        return x ** int(power)
    return np.sign(x) * np.abs(x) ** power


@dataclass(frozen=True)
class DriftTerm:
    """one library drift term

    interaction: coef * int Phi(|x - y|)(x - y) mu(dy)
    linear: coef * x
    delay_power: coef * x_del^power
    delay_mean: coef * E[x_del]
    state_mean: coef * E[x]
    state_power: coef * x^power (outside the delay-slot class)
    constant: coef
    """

    kind: str
    coef: float = 1.0
    power: float = 1.0
    kernel: str = "opinion"

    KINDS = ("interaction", "linear", "delay_power", "delay_mean", "state_mean", "state_power", "constant")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown drift term {self.kind!r} expected one of {list(self.KINDS)}")
        if self.kind in ("delay_power", "state_power") and self.power < 1:
            raise DomainError(f"{self.kind} power must be >= 1 got {self.power!r}")
        if self.kind == "interaction" and self.kernel not in PAIR_KERNELS:
            raise DomainError(f"unknown interaction kernel {self.kernel!r}")

    @property
    def in_assumption_class(self) -> bool:
        return not (self.kind == "state_power" and self.power > 1)

    def __call__(
        self, t: float, x: np.ndarray, x_del: np.ndarray, mu: EmpiricalMeasure, mu_del: EmpiricalMeasure
    ) -> np.ndarray:
        if self.kind == "interaction":
            return self.coef * pairwise_integral(PAIR_KERNELS[self.kernel], x, mu)
        elif self.kind == "linear":
            return self.coef * x
        elif self.kind == "delay_power":
            return self.coef * _signed_power(x_del, self.power)
        elif self.kind == "delay_mean":
            return np.broadcast_to(self.coef * mean(mu_del), x.shape)
        elif self.kind == "state_mean":
            return np.broadcast_to(self.coef * mean(mu), x.shape)
        elif self.kind == "state_power":
            return self.coef * _signed_power(x, self.power)
        elif self.kind == "constant":
            return np.full(x.shape, self.coef)
        raise NotImplementedError(self.kind)

    def to_dict(self: "DriftTerm") -> Dict:
        d: Dict[str, Any] = dict(kind=self.kind, coef=self.coef)
        if self.kind in ("delay_power", "state_power"):
            d["power"] = self.power
        if self.kind == "interaction":
            d["kernel"] = self.kernel
        return d


def sum_of_terms(terms: Sequence[DriftTerm]) -> Drift:
    "drift summing terms left to right"
    terms = tuple(terms)

    def drift(t, x, x_del, mu, mu_del):
        total = np.zeros(np.shape(x))
        for term in terms:
            total = total + term(t, x, x_del, mu, mu_del)
        return total

    return drift


def constant_diffusion(beta: Union[float, Sequence[Sequence[float]]], dim: int = 1) -> Diffusion:
    matrix = np.asarray(beta, dtype=np.float64)
    if matrix.ndim == 0:
        matrix = float(matrix) * np.eye(dim)
    if matrix.shape != (dim, dim):
        raise DomainError(f"diffusion matrix must be {dim}x{dim} got shape {matrix.shape}")
    matrix.setflags(write=False)

    def diffusion(t, mu, mu_del):
        return matrix

    return diffusion


def mean_cosine_diffusion(base: float, scale: float, dim: int = 1) -> Diffusion:
    "(base + scale * cos(E[x_del]_0)) * I, a bounded Lipschitz measure dependent diffusion"

    def diffusion(t, mu, mu_del):
        return (base + scale * np.cos(mean(mu_del)[0])) * np.eye(dim)

    return diffusion


def growth_exponent(terms: Sequence[DriftTerm]) -> float:
    "l of the (1 + |x|^l + |y|^l)|x - y| modulus implied by the delay terms"
    powers = [term.power - 1 for term in terms if term.kind == "delay_power"]
    return max([1.0] + powers)


def opinion_drift(
    t: float,
    x: Union[float, np.ndarray],
    x_del: Union[float, np.ndarray],
    mu: EmpiricalMeasure,
    mu_del: EmpiricalMeasure,
    params: OpinionParams = OpinionParams(),
) -> Union[float, np.ndarray]:
    """a1 int Phi(|x - y|)(x - y) mu(dy) + a2 x + a3 x_del^3 + a4 E[x_del]

    x and x_del may be scalars or equal length arrays of particle states.
    """
    if mu.dim != 1 or mu_del.dim != 1:
        raise UsageError(f"the opinion model is one dimensional got dims {mu.dim} and {mu_del.dim}")
    scalar = np.ndim(x) == 0
    rows = np.atleast_1d(np.asarray(x, dtype=np.float64))[:, None]
    del_rows = np.broadcast_to(np.atleast_1d(np.asarray(x_del, dtype=np.float64))[:, None], rows.shape)
    values = sum_of_terms(opinion_terms(params))(t, rows, del_rows, mu, mu_del)[:, 0]
    return float(values[0]) if scalar else values


def opinion_diffusion(params: OpinionParams = OpinionParams()) -> float:
    "the constant a5; independent of the measures"
    return params.a5


def opinion_initial_path(theta: float, delay: float = OpinionParams.delay) -> float:
    "xi(theta) = |theta| on [-delay, 0]; 1-Lipschitz so the Hölder exponent is 1"
    if not (-delay <= theta <= 0):
        raise DomainError(f"theta={theta!r} outside [-{delay}, 0]")
    return abs(theta)


def opinion_terms(params: OpinionParams) -> List[DriftTerm]:
    return [
        DriftTerm("interaction", coef=params.a1, kernel="opinion"),
        DriftTerm("linear", coef=params.a2),
        DriftTerm("delay_power", coef=params.a3, power=3),
        DriftTerm("delay_mean", coef=params.a4),
    ]


def make_opinion_model(params: OpinionParams = OpinionParams()) -> ModelSpec:
    terms = opinion_terms(params)
    return ModelSpec(
        model_id="opinion",
        dim=1,
        delay=params.delay,
        drift=sum_of_terms(terms),
        diffusion=constant_diffusion(opinion_diffusion(params)),
        constant_diffusion=True,
        initial_path=InitialPath(kind="abs", holder_exponent=1.0),
        growth_exponent=growth_exponent(terms),
        params=params.to_dict(),
    )


def make_zero_drift_model(beta: float = 1.0, delay: float = 0.125, initial_value: float = 0.0) -> ModelSpec:
    """alpha = 0, constant beta: Z(t_k) = xi(0) + beta B^H(t_k) exactly"""

    def drift(t, x, x_del, mu, mu_del):
        return np.zeros(np.shape(x))

    return ModelSpec(
        model_id="zero",
        dim=1,
        delay=delay,
        drift=drift,
        diffusion=constant_diffusion(beta),
        constant_diffusion=True,
        initial_path=InitialPath(kind="constant", value=(float(initial_value),)),
        params=dict(beta=beta, initial_value=initial_value),
    )


def make_linear_model(
    a: float, b: float, beta: float = 1.0, delay: float = 0.125, initial_value: float = 1.0
) -> ModelSpec:
    "alpha = a x + b; the ensemble mean solves m' = a m + b"
    terms = [DriftTerm("linear", coef=a), DriftTerm("constant", coef=b)]
    return ModelSpec(
        model_id="linear",
        dim=1,
        delay=delay,
        drift=sum_of_terms(terms),
        diffusion=constant_diffusion(beta),
        constant_diffusion=True,
        initial_path=InitialPath(kind="constant", value=(float(initial_value),)),
        params=dict(a=a, b=b, beta=beta, initial_value=initial_value),
    )


def make_present_cubic_model(
    coef: float = -1.0, beta: float = 1.0, delay: float = 0.125, initial_value: float = 5.0
) -> ModelSpec:
    """alpha = coef x^3 in the present state. Outside the delay-slot class:
    the explicit scheme diverges at coarse steps. Negative control only.
    """
    terms = [DriftTerm("state_power", coef=coef, power=3)]
    return ModelSpec(
        model_id="present_cubic",
        dim=1,
        delay=delay,
        drift=sum_of_terms(terms),
        diffusion=constant_diffusion(beta),
        constant_diffusion=True,
        initial_path=InitialPath(kind="constant", value=(float(initial_value),)),
        growth_exponent=2.0,
        in_assumption_class=False,
        params=dict(coef=coef, beta=beta, initial_value=initial_value),
    )


def make_custom_model(
    terms: Sequence[DriftTerm],
    diffusion: Diffusion,
    constant_diffusion: bool,
    delay: float,
    initial_path: InitialPath,
    dim: int = 1,
    params: Optional[Dict[str, Any]] = None,
) -> ModelSpec:
    if dim != 1 and any(term.kind == "interaction" for term in terms):
        raise UsageError("interaction kernels are one dimensional")
    in_class = all(term.in_assumption_class for term in terms)
    if not in_class:
        log.warning("custom model has a superlinear present-state drift term; it is outside the delay-slot class")
    return ModelSpec(
        model_id="custom",
        dim=dim,
        delay=delay,
        drift=sum_of_terms(terms),
        diffusion=diffusion,
        constant_diffusion=constant_diffusion,
        initial_path=initial_path,
        growth_exponent=growth_exponent(terms),
        in_assumption_class=in_class,
        params=params if params is not None else dict(terms=[term.to_dict() for term in terms]),
    )


def holder_constant(model: ModelSpec, thetas: Sequence[float]) -> float:
    """sup over pairs of grid points of |xi(t) - xi(s)| / |t - s|^theta for
    the model's declared Hölder exponent theta
    """
    thetas = np.asarray(sorted(thetas), dtype=np.float64)
    values = model.initial_path.evaluate(thetas, model.dim)
    i, j = np.triu_indices(len(thetas), k=1)
    gaps = np.abs(thetas[j] - thetas[i]) ** model.holder_exponent
    diffs = np.linalg.norm(values[j] - values[i], axis=1)
    return float(np.max(diffs / gaps)) if len(i) else 0.0


MODEL_IDS = ("opinion", "zero", "linear", "present_cubic", "custom")

# allowed keys besides "kind" for each custom drift term
TERM_KEYS = {
    "interaction": ("coef", "kernel"),
    "linear": ("coef",),
    "delay_power": ("coef", "power"),
    "delay_mean": ("coef",),
    "state_mean": ("coef",),
    "state_power": ("coef", "power"),
    "constant": ("value",),
}


def _initial_path_from_config(block: ConfigBlock, default: InitialPath) -> InitialPath:
    kind = block.string("id", default.kind, choices=InitialPath.KINDS)
    value = tuple(block.numbers("value", default.value, scalar_ok=True))
    scale = block.number("scale", default.scale, check=lambda v: v >= 0, expect="a non-negative scale")
    holder = block.number("holder_exponent", default.holder_exponent)
    block.finish()
    with config_field(block.path):
        return InitialPath(kind=kind, value=value, scale=scale, holder_exponent=holder)


def _term_from_config(block: ConfigBlock) -> DriftTerm:
    kind = block.string("kind", choices=list(TERM_KEYS))
    kwargs: Dict[str, Any] = {}
    for key in TERM_KEYS[kind]:
        if key == "kernel":
            kwargs[key] = block.string(key, "opinion", choices=list(PAIR_KERNELS))
        elif key == "value":
            kwargs["coef"] = block.number(key)
        elif key == "power":
            kwargs[key] = block.number(key)
        else:
            kwargs[key] = block.number(key, 1.0)
    block.finish()
    with config_field(block.path):
        return DriftTerm(kind, **kwargs)


def _diffusion_from_config(block: ConfigBlock, dim: int) -> Tuple[Diffusion, bool, Dict]:
    kind = block.string("kind", "constant", choices=("constant", "mean_cosine"))
    if kind == "constant":
        value = block.number("value", 1.0)
        block.finish()
        with config_field(block.field("value")):
            return constant_diffusion(value, dim), True, dict(kind=kind, value=value)
    base = block.number("base")
    scale = block.number("scale")
    block.finish()
    return mean_cosine_diffusion(base, scale, dim), False, dict(kind=kind, base=base, scale=scale)


def model_from_config(block: ConfigBlock) -> ModelSpec:
    """builds a ModelSpec from a config model block e.g.

    {"id": "opinion", "params": {"a3": -1}, "delay": 0.125}
    {"id": "custom", "terms": [{"kind": "linear", "coef": -1}],
     "diffusion": {"kind": "constant", "value": 0.5},
     "initial_path": {"id": "constant", "value": 1}}
    """
    model_id = block.string("id", choices=MODEL_IDS)
    delay = block.number("delay", OpinionParams.delay, check=lambda v: v > 0, expect="a positive delay")

    if model_id == "custom":
        dim = block.integer("dim", 1, check=lambda v: v >= 1, expect="a positive dimension")
        terms = [_term_from_config(term) for term in block.blocks("terms")]
        diffusion, is_constant, diffusion_params = _diffusion_from_config(block.block("diffusion", {}), dim)
        initial_path = _initial_path_from_config(block.block("initial_path", {}), InitialPath(kind="constant"))
        block.finish()
        with config_field(block.path):
            return make_custom_model(
                terms,
                diffusion,
                is_constant,
                delay,
                initial_path,
                dim=dim,
                params=dict(terms=[term.to_dict() for term in terms], diffusion=diffusion_params),
            )

    params = block.block("params", {})
    if model_id == "opinion":
        defaults = OpinionParams().to_dict()
        values = {key: params.number(key, default) for key, default in defaults.items() if key != "delay"}
        params.finish()
        with config_field(params.path):
            model = make_opinion_model(OpinionParams(delay=delay, **values))
    elif model_id == "zero":
        beta = params.number("beta", 1.0)
        initial_value = params.number("initial_value", 0.0)
        params.finish()
        model = make_zero_drift_model(beta=beta, delay=delay, initial_value=initial_value)
    elif model_id == "linear":
        a = params.number("a", -1.0)
        b = params.number("b", 0.0)
        beta = params.number("beta", 1.0)
        initial_value = params.number("initial_value", 1.0)
        params.finish()
        model = make_linear_model(a, b, beta=beta, delay=delay, initial_value=initial_value)
    else:
        coef = params.number("coef", -1.0)
        beta = params.number("beta", 1.0)
        initial_value = params.number("initial_value", 5.0)
        params.finish()
        model = make_present_cubic_model(coef=coef, beta=beta, delay=delay, initial_value=initial_value)

    if "initial_path" in block:
        model = dataclasses.replace(
            model, initial_path=_initial_path_from_config(block.block("initial_path"), model.initial_path)
        )
    block.finish()
    return model
