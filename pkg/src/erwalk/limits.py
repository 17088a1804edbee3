"""Closed-form limit constants for the center of mass of the walk.

All constants are functions of (d, p) through a = (2dp - 1)/(2d - 1):

* diffusive (a < 1/2): Gaussian fluctuations of G_n/sqrt(n) with
  per-coordinate variance 2/(3(1-2a)(2-a)d), a matching quadratic strong
  law, and an iterated-logarithm upper bound.
* critical (a = 1/2): same statements with normalizer sqrt(n log n) and
  per-coordinate variance 4/(9d); the iterated-logarithm constant is exact.
* superdiffusive (a > 1/2): G_n/n^a converges to a random vector G with
  E[G G^T] = 1/(d (a+1)^2 (2a-1)^2 Gamma(2a-1)) I_d.

Queries for a constant that does not exist in the detected regime raise
RegimeError with a per-field message; nothing is silently zero.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import gammaln

from .core import ModelParams, PLike, Regime

# Gamma(2a-1) blows up as a -> 1/2+; refuse evaluation this close.
NEAR_CRITICAL_POLE = 1e-6


class RegimeError(LookupError):
    """A limit constant was requested outside the regime where it exists."""


def variance_ratio(a: float) -> float:
    """Asymptotic variance of the center of mass over that of the walk.

    Equals 2/(3(2-a)) in the diffusive regime; ranges over (2/9, 4/9] for
    a in [-1, 1/2), always below 1, so the center of mass fluctuates less
    than the walk itself.
    """
    if a >= 0.5:
        raise RegimeError("variance ratio defined for diffusive a < 1/2 only")
    if a < -1.0:
        raise ValueError(f"memory strength a must be >= -1, got {a}")
    return 2.0 / (3.0 * (2.0 - a))


def limit_matrix_V(a: float, d: int) -> np.ndarray:
    """Almost-sure limit of the scaled quadratic variation, diffusive regime.

    (1/(d(a+1)^2)) [[1/(1-2a), 1/(2-a)], [1/(2-a), 1/3]] x I_d, symmetric
    positive definite.
    """
    if a >= 0.5:
        raise RegimeError("quadratic-variation limit needs diffusive a < 1/2")
    c = 1.0 / (d * (a + 1.0) ** 2)
    core = np.array([[1.0 / (1.0 - 2.0 * a), 1.0 / (2.0 - a)],
                     [1.0 / (2.0 - a), 1.0 / 3.0]])
    return np.kron(c * core, np.eye(d))


def limit_matrix_W(d: int) -> np.ndarray:
    """Critical-regime limit: (4/(9d)) [[1, 0], [0, 0]] x I_d, rank d."""
    core = np.array([[4.0 / (9.0 * d), 0.0], [0.0, 0.0]])
    return np.kron(core, np.eye(d))


def clt_contrast_vector(d: int) -> np.ndarray:
    """Contrast (1, -1) x I_d columns extracting G_n/sqrt(n) from (M, N).

    v^T V v equals the central-limit covariance 2/(3(1-2a)(2-a)d) I_d,
    which ties the quadratic-variation limit to the CLT constant.
    """
    return np.vstack([np.eye(d), -np.eye(d)])


class LimitConstants:
    """Every closed-form constant legal for the regime of (d, p).

    Access out-of-regime fields raises RegimeError.  lil_bound is an upper
    bound in the diffusive regime (lil_bound_is_exact False) and the exact
    limsup constant in the critical regime.
    """

    def __init__(self, params: ModelParams):
        if params.a <= -1.0:
            raise ValueError(
                "memory strength a = -1 (d=1, p=0): gain sequence undefined, "
                "no limit constants")
        self.params = params
        self.d = params.d
        self.a = params.a
        self.regime = params.regime
        d, a = self.d, self.a
        self._errors: dict = {}
        self._values: dict = {}
        if self.regime is Regime.DIFFUSIVE:
            c = 2.0 / (3.0 * (1.0 - 2.0 * a) * (2.0 - a) * d)
            self._values["clt_var"] = c
            self._values["qsl_matrix_coeff"] = c
            self._values["qsl_trace"] = d * c
            self._values["lil_bound"] = (
                (np.sqrt(3.0) + np.sqrt(1.0 - 2.0 * a)) ** 2
                / (3.0 * (a + 1.0) ** 2 * (1.0 - 2.0 * a) * d))
            self._values["lil_bound_is_exact"] = False
            self._values["ratio"] = variance_ratio(a)
            self._values["V"] = limit_matrix_V(a, d)
            self._errors["W"] = "no critical normalizer limit in the diffusive regime"
            self._errors["super_cov_coeff"] = (
                "no superdiffusive covariance in this regime")
        elif self.regime is Regime.CRITICAL:
            c = 4.0 / (9.0 * d)
            self._values["clt_var"] = c
            self._values["qsl_matrix_coeff"] = c
            self._values["qsl_trace"] = 4.0 / 9.0
            self._values["lil_bound"] = c
            self._values["lil_bound_is_exact"] = True
            self._values["W"] = limit_matrix_W(d)
            self._errors["V"] = "quadratic-variation limit diverges at a = 1/2"
            self._errors["ratio"] = "variance ratio defined for diffusive a only"
            self._errors["super_cov_coeff"] = (
                "no superdiffusive covariance in this regime")
        else:
            for f in ("clt_var", "qsl_matrix_coeff", "qsl_trace"):
                self._errors[f] = "no CLT constant in this regime"
            self._errors["lil_bound"] = "no LIL constant in this regime"
            self._errors["lil_bound_is_exact"] = self._errors["lil_bound"]
            self._errors["ratio"] = "variance ratio defined for diffusive a only"
            self._errors["V"] = "no quadratic-variation limit in this regime"
            self._errors["W"] = "no critical normalizer limit in this regime"
            if a - 0.5 < NEAR_CRITICAL_POLE:
                self._errors["super_cov_coeff"] = (
                    "near-critical pole: a within 1e-6 of 1/2, "
                    "Gamma(2a-1) diverges")
            else:
                self._values["super_cov_coeff"] = float(np.exp(
                    -np.log(d) - 2.0 * np.log(a + 1.0)
                    - 2.0 * np.log(2.0 * a - 1.0) - gammaln(2.0 * a - 1.0)))

    def _get(self, name: str):
        if name in self._values:
            return self._values[name]
        raise RegimeError(self._errors.get(name, f"{name} not available"))

    @property
    def clt_var(self) -> float:
        return self._get("clt_var")

    @property
    def qsl_matrix_coeff(self) -> float:
        return self._get("qsl_matrix_coeff")

    @property
    def qsl_trace(self) -> float:
        return self._get("qsl_trace")

    @property
    def lil_bound(self) -> float:
        return self._get("lil_bound")

    @property
    def lil_bound_is_exact(self) -> bool:
        return self._get("lil_bound_is_exact")

    @property
    def ratio(self) -> float:
        return self._get("ratio")

    @property
    def super_cov_coeff(self) -> float:
        return self._get("super_cov_coeff")

    @property
    def V(self) -> np.ndarray:
        return self._get("V")

    @property
    def W(self) -> np.ndarray:
        return self._get("W")

    def get(self, name: str, default=None):
        """Value if legal in this regime, else the default."""
        try:
            return self._get(name)
        except RegimeError:
            return default

    def to_dict(self) -> dict:
        """JSON-friendly dump: values, nulls for absent fields, error map."""
        out = {
            "d": self.d, "p": self.params.p, "a": self.a,
            "regime": self.regime.value,
        }
        for name in ("clt_var", "qsl_matrix_coeff", "qsl_trace", "lil_bound",
                     "lil_bound_is_exact", "ratio", "super_cov_coeff"):
            out[name] = self._values.get(name)
        for name in ("V", "W"):
            m = self._values.get(name)
            out[name] = None if m is None else np.asarray(m).tolist()
        out["errors"] = dict(self._errors)
        return out


def limit_constants(d: int, p: PLike) -> LimitConstants:
    """All closed-form constants for (d, p); see LimitConstants."""
    return LimitConstants(ModelParams.create(d, p))
