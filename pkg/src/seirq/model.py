"""Compartment states, parameter records and the three vector fields.

The vector fields come in two layers. The ``*_field(t, y, p)`` functions are
numba-compiled and operate on flat float arrays; they are what the integrator
calls. The ``*_rhs(state, params)`` functions wrap them for the dataclass
records and validate their input.

Densities are fractions of a population normalised to one. Rates are per day.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import ClassVar

import numba
import numpy as np

from .errors import DomainError, InvalidStateError, UnsupportedParameterError

# F/Sigma recruitment is switched off below this non-quarantined mass.
SIGMA_MIN = 1e-12


class ModelKind(str, Enum):
    SEIR = "seir"
    BASIC = "basic"
    EXTENDED = "extended"


# ---------------------------------------------------------------------------
# states


class _State:
    """Mixin for the compartment-density records."""

    KIND: ClassVar[ModelKind]

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_array(cls, y):
        y = np.asarray(y, dtype=float)
        names = cls.field_names()
        if y.shape != (len(names),):
            raise InvalidStateError(
                f"{cls.__name__} needs {len(names)} components, got shape {y.shape}"
            )
        return cls(*(float(v) for v in y))

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.field_names()], dtype=float)

    def total(self) -> float:
        return math.fsum(self.to_array())

    def is_valid(self, tol: float = 1e-9) -> bool:
        """Whether every density is in [0, 1] and the densities sum to one."""
        y = self.to_array()
        if not np.all(np.isfinite(y)):
            return False
        if np.any(y < -tol) or np.any(y > 1 + tol):
            return False
        return abs(self.total() - 1.0) <= tol


@dataclass(frozen=True)
class SeirState(_State):
    s: float = 1.0
    e: float = 0.0
    i: float = 0.0
    r: float = 0.0

    KIND: ClassVar[ModelKind] = ModelKind.SEIR


@dataclass(frozen=True)
class BasicState(_State):
    s: float = 1.0
    s_q: float = 0.0
    e: float = 0.0
    e_q: float = 0.0
    i_a: float = 0.0
    i_aq: float = 0.0
    i_sq: float = 0.0
    r: float = 0.0
    r_q: float = 0.0

    KIND: ClassVar[ModelKind] = ModelKind.BASIC


@dataclass(frozen=True)
class ExtendedState(_State):
    s_s: float = 0.5
    s_sq: float = 0.0
    e_s: float = 0.0
    e_sq: float = 0.0
    l_s: float = 0.0
    l_sq: float = 0.0
    i_sq: float = 0.0
    r_s: float = 0.0
    s_a: float = 0.5
    s_aq: float = 0.0
    e_a: float = 0.0
    e_aq: float = 0.0
    l_a: float = 0.0
    l_aq: float = 0.0
    i_a: float = 0.0
    i_aq: float = 0.0
    r_a: float = 0.0
    r_aq: float = 0.0

    KIND: ClassVar[ModelKind] = ModelKind.EXTENDED


# ---------------------------------------------------------------------------
# parameters


def _check_positive(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be positive and finite, got {v!r}")


def _check_nonnegative(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not (math.isfinite(v) and v >= 0):
            raise DomainError(f"{name} must be non-negative and finite, got {v!r}")


def _check_unit(obj, *names):
    for name in names:
        v = getattr(obj, name)
        if not (math.isfinite(v) and 0 <= v <= 1):
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


class _Params:
    def to_array(self) -> np.ndarray:
        return np.array([float(v) for v in asdict(self).values()], dtype=float)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SeirParams(_Params):
    beta: float = 0.5
    omega: float = 0.25
    delta: float = 1 / 5.5

    def __post_init__(self):
        _check_positive(self, "beta", "omega", "delta")


@dataclass(frozen=True)
class BasicParams(_Params):
    beta: float = 0.5
    omega: float = 0.25
    delta: float = 1 / 5.5
    psi: float = 0.0
    chi: float = 0.0
    rho: float = 0.5
    k: float = 0.5

    def __post_init__(self):
        _check_positive(self, "beta", "omega", "delta")
        _check_nonnegative(self, "psi", "chi")
        _check_unit(self, "rho", "k")


@dataclass(frozen=True)
class ExtendedParams(_Params):
    beta_s: float = 0.5
    beta_a: float = 0.5
    omega_s: float = 0.25
    omega_a: float = 0.25
    lambda_s: float = 0.5
    lambda_a: float = 0.5
    gamma_s: float = 1 / 3.5
    gamma_a: float = 1 / 3.5
    psi_s: float = 0.0
    psi_a: float = 0.0
    rho: float = 0.5
    feedback_enabled: bool = True

    def __post_init__(self):
        _check_positive(
            self, "beta_s", "beta_a", "omega_s", "omega_a",
            "lambda_s", "lambda_a", "gamma_s", "gamma_a",
        )
        _check_nonnegative(self, "psi_s", "psi_a")
        _check_unit(self, "rho")
        if not isinstance(self.feedback_enabled, bool):
            raise DomainError("feedback_enabled must be a boolean")


# ---------------------------------------------------------------------------
# compiled vector fields


@numba.njit(cache=True)
def seir_field(t, y, p):
    s, e, i = y[0], y[1], y[2]
    beta, omega, delta = p[0], p[1], p[2]
    infection = beta * s * i
    out = np.empty(4)
    out[0] = -infection
    out[1] = infection - omega * e
    out[2] = omega * e - delta * i
    out[3] = delta * i
    return out


@numba.njit(cache=True)
def basic_field(t, y, p):
    s, s_q, e, e_q, i_a, i_aq, i_sq, r = y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]
    beta, omega, delta, psi, chi, rho, k = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
    leak = 1.0 - rho
    quarantined_infectious = i_aq + i_sq
    # free susceptibles meet free and quarantined infectious
    inf_free = beta * s * i_a + beta * leak * s * quarantined_infectious
    # quarantined susceptibles; quarantined-to-quarantined carries (1-rho)^2
    inf_q = beta * leak * s_q * i_a + beta * leak * leak * s_q * quarantined_infectious
    qrate = chi * i_sq
    out = np.empty(9)
    out[0] = -inf_free - qrate * s
    out[1] = -inf_q + qrate * s
    out[2] = inf_free - omega * e - qrate * e
    out[3] = inf_q - omega * e_q + qrate * e
    out[4] = k * omega * e - qrate * i_a - delta * i_a - psi * i_a
    out[5] = k * omega * e_q + qrate * i_a - delta * i_aq - psi * i_aq
    out[6] = (1.0 - k) * omega * (e + e_q) + psi * (i_a + i_aq) - delta * i_sq
    out[7] = delta * (i_a + i_sq) - qrate * r
    out[8] = delta * i_aq + qrate * r
    return out


@numba.njit(cache=True)
def _feedback(y, p):
    l_sq, l_aq, i_aq = y[5], y[13], y[15]
    lambda_s, psi_s, psi_a, enabled = p[4], p[8], p[9], p[11]
    if enabled == 0.0:
        f = 0.0
    else:
        f = lambda_s * l_sq + psi_s * l_sq + psi_a * (l_aq + i_aq)
    sigma = y[0] + y[8] + y[2] + y[10] + y[4] + y[12] + y[14] + y[16]
    return f, sigma


@numba.njit(cache=True)
def extended_field(t, y, p):
    s_s, s_sq, e_s, e_sq, l_s, l_sq, i_sq = y[0], y[1], y[2], y[3], y[4], y[5], y[6]
    s_a, s_aq, e_a, e_aq, l_a, l_aq, i_a, i_aq, r_a = (
        y[8], y[9], y[10], y[11], y[12], y[13], y[14], y[15], y[16]
    )
    beta_s, beta_a, omega_s, omega_a = p[0], p[1], p[2], p[3]
    lambda_s, lambda_a, gamma_s, gamma_a = p[4], p[5], p[6], p[7]
    psi_s, psi_a, rho = p[8], p[9], p[10]
    leak = 1.0 - rho

    f, sigma = _feedback(y, p)
    if sigma < SIGMA_MIN:
        recruit = 0.0
    else:
        recruit = f / sigma

    free_force = beta_s * l_s + beta_a * (l_a + i_a)
    q_force = beta_s * (l_sq + i_sq) + beta_a * (l_aq + i_aq)
    # no transmission between quarantined individuals
    inf_s = s_s * free_force + leak * s_s * q_force
    inf_sq = leak * s_sq * free_force
    inf_a = s_a * free_force + leak * s_a * q_force
    inf_aq = leak * s_aq * free_force

    out = np.empty(18)
    out[0] = -inf_s - s_s * recruit
    out[1] = -inf_sq + s_s * recruit
    out[2] = inf_s - omega_s * e_s - e_s * recruit
    out[3] = inf_sq - omega_s * e_sq + e_s * recruit
    out[4] = omega_s * e_s - (lambda_s + psi_s) * l_s - l_s * recruit
    out[5] = omega_s * e_sq - (lambda_s + psi_s) * l_sq + l_s * recruit
    out[6] = ((lambda_s + psi_s) * (l_s + l_sq) - gamma_s * i_sq
              + psi_a * (l_a + l_aq) + psi_a * (i_a + i_aq))
    out[7] = gamma_s * i_sq
    out[8] = -inf_a - s_a * recruit
    out[9] = -inf_aq + s_a * recruit
    out[10] = inf_a - omega_a * e_a - e_a * recruit
    out[11] = inf_aq - omega_a * e_aq + e_a * recruit
    out[12] = omega_a * e_a - lambda_a * l_a - psi_a * l_a - l_a * recruit
    out[13] = omega_a * e_aq - lambda_a * l_aq - psi_a * l_aq + l_a * recruit
    out[14] = lambda_a * l_a - psi_a * i_a - gamma_a * i_a - i_a * recruit
    out[15] = lambda_a * l_aq - psi_a * i_aq - gamma_a * i_aq + i_a * recruit
    out[16] = gamma_a * i_a - r_a * recruit
    out[17] = gamma_a * i_aq + r_a * recruit
    return out


# ---------------------------------------------------------------------------
# registry and dataclass wrappers


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    state_cls: type
    params_cls: type
    field: object


MODELS = {
    ModelKind.SEIR: ModelSpec(ModelKind.SEIR, SeirState, SeirParams, seir_field),
    ModelKind.BASIC: ModelSpec(ModelKind.BASIC, BasicState, BasicParams, basic_field),
    ModelKind.EXTENDED: ModelSpec(
        ModelKind.EXTENDED, ExtendedState, ExtendedParams, extended_field
    ),
}


def model_spec(kind) -> ModelSpec:
    return MODELS[ModelKind(kind)]


def _finite_array(state) -> np.ndarray:
    y = state.to_array()
    if not np.all(np.isfinite(y)):
        bad = [n for n, v in zip(state.field_names(), y) if not math.isfinite(v)]
        raise InvalidStateError(f"non-finite compartments: {', '.join(bad)}")
    return y


def _rhs(state, params, expected_state, expected_params):
    if not isinstance(state, expected_state):
        raise InvalidStateError(f"expected {expected_state.__name__}, got {type(state).__name__}")
    if not isinstance(params, expected_params):
        raise InvalidStateError(
            f"expected {expected_params.__name__}, got {type(params).__name__}"
        )
    y = _finite_array(state)
    spec = MODELS[expected_state.KIND]
    return expected_state.from_array(spec.field(0.0, y, params.to_array()))


def seir_rhs(state: SeirState, params: SeirParams) -> SeirState:
    """Time derivative of the classical SEIR model, returned as a ``SeirState``."""
    return _rhs(state, params, SeirState, SeirParams)


def basic_rhs(state: BasicState, params: BasicParams) -> BasicState:
    """Time derivative of the nine-compartment quarantine/testing model."""
    return _rhs(state, params, BasicState, BasicParams)


def extended_rhs(state: ExtendedState, params: ExtendedParams) -> ExtendedState:
    """Time derivative of the eighteen-compartment model with latent stages.

    When the non-quarantined mass falls below ``SIGMA_MIN`` every
    feedback-recruitment term is dropped.
    """
    return _rhs(state, params, ExtendedState, ExtendedParams)


def feedback_terms(state: ExtendedState, params: ExtendedParams) -> tuple[float, float]:
    """Return ``(F, Sigma)``: the quarantine recruitment rate and the
    non-quarantined (recruitable) mass. ``F`` is zero when feedback is disabled."""
    y = state.to_array()
    f, sigma = _feedback(y, params.to_array())
    return float(f), float(sigma)


# ---------------------------------------------------------------------------
# observables
#
# Every observable is a 0/1 weighted sum of compartments, so its time
# derivative is the same weighted sum of the state derivative.

_OBSERVABLES = {
    ModelKind.SEIR: {
        "reported_active": ("i",),
        "total_infected": ("i",),
        "total_quarantined": (),
        "active_infectious": ("i",),
    },
    ModelKind.BASIC: {
        "reported_active": ("i_sq",),
        "total_infected": ("i_a", "i_aq", "i_sq"),
        "total_quarantined": ("s_q", "e_q", "i_aq", "i_sq", "r_q"),
        "active_infectious": ("i_a", "i_aq", "i_sq"),
    },
    ModelKind.EXTENDED: {
        "reported_active": ("i_sq",),
        "total_infected": ("l_s", "l_sq", "l_a", "l_aq", "i_a", "i_aq", "i_sq"),
        "total_quarantined": (
            "s_sq", "e_sq", "l_sq", "s_aq", "e_aq", "l_aq", "i_aq", "r_aq", "i_sq",
        ),
        "sigma_q": ("s_sq", "e_sq", "l_sq", "s_aq", "e_aq", "l_aq", "i_aq", "r_aq"),
        "active_infectious": ("i_a", "i_aq", "i_sq"),
    },
}


def observable_names(kind) -> list[str]:
    kind = ModelKind(kind)
    return list(_OBSERVABLES[kind]) + list(MODELS[kind].state_cls.field_names())


def observable_weights(kind, name: str) -> np.ndarray:
    """0/1 weight vector selecting the compartments summed by ``name``.

    Compartment names are valid observables on their own.
    """
    kind = ModelKind(kind)
    names = MODELS[kind].state_cls.field_names()
    if name in _OBSERVABLES[kind]:
        members = _OBSERVABLES[kind][name]
    elif name in names:
        members = (name,)
    else:
        raise UnsupportedParameterError(
            f"unknown observable {name!r} for model {kind.value}; "
            f"choose from {observable_names(kind)}"
        )
    return np.array([1.0 if n in members else 0.0 for n in names])


def _aggregate(state, name):
    y = state.to_array()
    w = observable_weights(state.KIND, name)
    return math.fsum(y[w > 0])


def reported_active(state) -> float:
    return _aggregate(state, "reported_active")


def total_infected(state) -> float:
    return _aggregate(state, "total_infected")


def total_quarantined(state) -> float:
    return _aggregate(state, "total_quarantined")


def conserved_quarantine(state: ExtendedState) -> float:
    """Quarantined mass held constant by the feedback loop (excludes ``i_sq``)."""
    return _aggregate(state, "sigma_q")


# ---------------------------------------------------------------------------
# parameter relations


def r0_to_beta(r0: float, delta: float) -> float:
    """Transmission rate matching a basic reproduction number: ``delta * r0``."""
    if not (math.isfinite(r0) and r0 > 0):
        raise DomainError(f"r0 must be positive, got {r0!r}")
    if not (math.isfinite(delta) and delta > 0):
        raise DomainError(f"delta must be positive, got {delta!r}")
    return delta * r0


def split_infectious_period(delta: float, lam: float) -> float:
    """Recovery rate ``gamma`` with ``1/delta = 1/lam + 1/gamma``.

    The infectious period ``1/delta`` is split into a latent part ``1/lam`` and
    a post-onset part ``1/gamma``; this needs ``lam > delta``.
    """
    if not (math.isfinite(delta) and delta > 0):
        raise DomainError(f"delta must be positive, got {delta!r}")
    if not (math.isfinite(lam) and lam > delta):
        raise DomainError(
            f"latent rate {lam!r} must exceed delta={delta!r} for a positive gamma"
        )
    return 1.0 / (1.0 / delta - 1.0 / lam)
