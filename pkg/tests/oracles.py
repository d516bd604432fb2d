"""Independent oracles for the test suite.

The vector fields below are transcribed term by term from the model equations
in plain Python, without sharing code with the compiled fields in
``seirq.model``. The reference integrator is scipy's DOP853.
"""

import numpy as np
from scipy.integrate import solve_ivp

from seirq.integrator import Trajectory


def seir(y, beta, omega, delta):
    s, e, i, r = y
    return [-beta * s * i, beta * s * i - omega * e, omega * e - delta * i, delta * i]


def basic(y, beta, omega, delta, psi, chi, rho, k):
    S, SQ, E, EQ, Ia, IaQ, IsQ, R, RQ = y
    return [
        -beta * S * Ia - beta * (1 - rho) * S * (IaQ + IsQ) - chi * IsQ * S,
        -beta * (1 - rho) * SQ * Ia - beta * (1 - rho) ** 2 * SQ * (IaQ + IsQ) + chi * IsQ * S,
        beta * S * Ia + beta * (1 - rho) * S * (IaQ + IsQ) - omega * E - chi * IsQ * E,
        beta * (1 - rho) * SQ * Ia + beta * (1 - rho) ** 2 * SQ * (IaQ + IsQ) - omega * EQ
        + chi * IsQ * E,
        k * omega * E - chi * IsQ * Ia - delta * Ia - psi * Ia,
        k * omega * EQ + chi * IsQ * Ia - delta * IaQ - psi * IaQ,
        (1 - k) * omega * (E + EQ) + psi * (Ia + IaQ) - delta * IsQ,
        delta * (Ia + IsQ) - chi * IsQ * R,
        delta * IaQ + chi * IsQ * R,
    ]


def extended(y, beta_s, beta_a, omega_s, omega_a, lambda_s, lambda_a, gamma_s, gamma_a,
             psi_s, psi_a, rho, feedback_enabled=True):
    (Ss, SsQ, Es, EsQ, Ls, LsQ, IsQ, Rs,
     Sa, SaQ, Ea, EaQ, La, LaQ, Ia, IaQ, Ra, RaQ) = y
    F = lambda_s * LsQ + psi_s * LsQ + psi_a * (LaQ + IaQ) if feedback_enabled else 0.0
    Sigma = Ss + Sa + Es + Ea + Ls + La + Ia + Ra
    g = F / Sigma if Sigma >= 1e-12 else 0.0
    free = beta_s * Ls + beta_a * (La + Ia)
    quar = beta_s * (LsQ + IsQ) + beta_a * (LaQ + IaQ)
    return [
        -Ss * free - Ss * (1 - rho) * quar - Ss * g,
        -SsQ * ((1 - rho) * beta_s * Ls + (1 - rho) * beta_a * (La + Ia)) + Ss * g,
        Ss * free + (1 - rho) * Ss * quar - omega_s * Es - Es * g,
        (1 - rho) * SsQ * free - omega_s * EsQ + Es * g,
        omega_s * Es - (lambda_s + psi_s) * Ls - Ls * g,
        omega_s * EsQ - (lambda_s + psi_s) * LsQ + Ls * g,
        (lambda_s + psi_s) * Ls + (lambda_s + psi_s) * LsQ - gamma_s * IsQ
        + psi_a * (La + LaQ) + psi_a * (Ia + IaQ),
        gamma_s * IsQ,
        -Sa * free - (1 - rho) * Sa * quar - Sa * g,
        -(1 - rho) * SaQ * free + Sa * g,
        Sa * free + (1 - rho) * Sa * quar - omega_a * Ea - Ea * g,
        (1 - rho) * SaQ * free - omega_a * EaQ + Ea * g,
        omega_a * Ea - lambda_a * La - psi_a * La - La * g,
        omega_a * EaQ - lambda_a * LaQ - psi_a * LaQ + La * g,
        lambda_a * La - psi_a * Ia - gamma_a * Ia - Ia * g,
        lambda_a * LaQ - psi_a * IaQ - gamma_a * IaQ + Ia * g,
        gamma_a * Ia - Ra * g,
        gamma_a * IaQ + Ra * g,
    ]


FIELDS = {"seir": seir, "basic": basic, "extended": extended}


def reference_solution(kind, y0, params, t_eval, rtol=1e-12, atol=1e-14):
    """Dense reference solution of a model with scipy's DOP853."""
    field = FIELDS[kind]
    args = tuple(params.as_dict().values())
    sol = solve_ivp(lambda t, y: field(y, *args), (0.0, float(t_eval[-1])), np.asarray(y0),
                    method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return sol.y.T


def synthetic_trajectory(times, values, slopes=None):
    """Basic-model trajectory whose ``reported_active`` (I_sQ) follows ``values``.

    Susceptibles absorb the remainder so every sample sums to one.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    slopes = np.gradient(values, times) if slopes is None else np.asarray(slopes, float)
    states = np.zeros((len(times), 9))
    states[:, 6] = values
    states[:, 0] = 1.0 - values
    derivs = np.zeros_like(states)
    derivs[:, 6] = slopes
    derivs[:, 0] = -slopes
    return Trajectory(times, states, derivs, "basic")
