"""Elephant random walk model and single-path simulation.

The walk lives on the d-dimensional integer lattice.  Its first step is
uniform over the 2d signed axis directions.  Every later step picks a past
step uniformly at random and repeats it with probability p, otherwise it
takes one of the other 2d - 1 directions uniformly.  Only the per-direction
step counts matter for the law of the next step, so the sampler draws from
the marginal distribution

    P(next = v) = (counts[v] * p + (n - counts[v]) * (1 - p)/(2d - 1)) / n

which is distributionally identical to the draw-an-index procedure but needs
O(d) state instead of the full history.

Directions are encoded 0..2d-1: index v < d is +e_{v+1}, index v >= d is
-e_{v-d+1}.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .rng import init_state

# Total width of the window around the critical p inside which floating-point
# input is classified critical (exact rational input never needs it).
CRITICAL_BAND = 1e-12

PLike = Union[float, int, Fraction]


class Regime(enum.Enum):
    DIFFUSIVE = "diffusive"
    CRITICAL = "critical"
    SUPERDIFFUSIVE = "superdiffusive"


def _validate_dp(d: int, p: PLike) -> None:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
        raise ValueError(f"dimension d must be a positive integer, got {d!r}")
    if not 0 <= p <= 1:
        raise ValueError(f"memory parameter p must lie in [0, 1], got {p!r}")


def fundamental_a(d: int, p: PLike) -> float:
    """Memory strength a = (2dp - 1)/(2d - 1) driving the conditional drift.

    The conditional mean of the next step is (a/n) S_n.  Ranges over
    [-1/(2d-1), 1]; a < 1/2, = 1/2, > 1/2 separate the three regimes.
    """
    _validate_dp(d, p)
    return (2.0 * d * float(p) - 1.0) / (2.0 * d - 1.0)


def critical_p(d: int) -> float:
    """Memory parameter (2d+1)/(4d) at which a = 1/2."""
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
        raise ValueError(f"dimension d must be a positive integer, got {d!r}")
    return (2.0 * d + 1.0) / (4.0 * d)


def classify_regime(d: int, p: PLike) -> Regime:
    """Diffusive / critical / superdiffusive by comparing p to (2d+1)/(4d).

    Exact rational comparison when p arrives as int or Fraction; floats use
    a CRITICAL_BAND-wide window around the critical value, since exact
    criticality is a measure-zero set that float input cannot hit for d = 3.
    """
    _validate_dp(d, p)
    pc = Fraction(2 * d + 1, 4 * d)
    if isinstance(p, (int, Fraction)) and not isinstance(p, bool):
        pe = Fraction(p)
        if pe == pc:
            return Regime.CRITICAL
        return Regime.DIFFUSIVE if pe < pc else Regime.SUPERDIFFUSIVE
    pf = float(p)
    pcf = float(pc)
    if abs(pf - pcf) < CRITICAL_BAND / 2:
        return Regime.CRITICAL
    return Regime.DIFFUSIVE if pf < pcf else Regime.SUPERDIFFUSIVE


@dataclass(frozen=True)
class ModelParams:
    """Dimension, memory parameter, derived memory strength, and regime."""

    d: int
    p: float
    a: float
    regime: Regime

    @classmethod
    def create(cls, d: int, p: PLike) -> "ModelParams":
        """Build params from (d, p), deriving a and classifying the regime.

        Pass p as a Fraction (or int) to get exact regime classification;
        the stored p is always the float value.
        """
        a = fundamental_a(d, p)
        regime = classify_regime(d, p)
        return cls(d=int(d), p=float(p), a=a, regime=regime)


def direction_vector(v: int, d: int) -> np.ndarray:
    """Unit lattice vector for direction index v (0..2d-1)."""
    if not 0 <= v < 2 * d:
        raise ValueError(f"direction index {v} out of range for d={d}")
    x = np.zeros(d, dtype=np.int64)
    if v < d:
        x[v] = 1
    else:
        x[v - d] = -1
    return x


def increment_probabilities(counts: Sequence, n: int, d: int, p: PLike):
    """Next-step distribution over the 2d directions, generic arithmetic.

    Works with floats or Fractions (exact rational route used by the
    oracle tests).  counts holds per-direction totals summing to n.
    """
    twod = 2 * d
    if n == 0:
        if isinstance(p, Fraction):
            return [Fraction(1, twod)] * twod
        return [1.0 / twod] * twod
    q = (1 - p) / (twod - 1)
    return [(counts[v] * p + (n - counts[v]) * q) / n for v in range(twod)]


class WalkState:
    """Mutable state of one path: position, counts, and martingale tracking.

    Wraps the packed arrays consumed by the compiled step kernel; see
    _kernels for the layout.  Martingale bookkeeping (gain sequence, the two
    coupled martingales, compensated diagnostic sums) advances with every
    step; the quadratic-variation blocks are tracked only when detailed=True
    (O(d^2) extra work per step).
    """

    def __init__(self, d: int, seed: int, detailed: bool = False):
        self.n = 0
        self.d = int(d)
        self.detailed = bool(detailed)
        self._counts = np.zeros(2 * d, dtype=np.int64)
        self._S = np.zeros(d, dtype=np.int64)
        self._fv = np.zeros(8 * d, dtype=np.float64)
        self._fs = np.zeros(_kernels.FS_LEN, dtype=np.float64)
        self._fs[0] = 1.0  # gain value a_1 applied by the first step
        qd = d if detailed else 0
        self._qv = np.zeros((3, qd, qd), dtype=np.float64)
        self._rng = init_state(np.uint64(int(seed) % (1 << 64)))

    @property
    def counts(self) -> np.ndarray:
        return self._counts.copy()

    @property
    def S(self) -> np.ndarray:
        return self._S.copy()

    @property
    def Gsum(self) -> np.ndarray:
        return self._fv[: self.d].copy()

    @property
    def G(self) -> np.ndarray:
        if self.n == 0:
            raise ValueError("center of mass undefined at n = 0")
        # multiply by the reciprocal, matching the kernels bit for bit
        return self._fv[: self.d] * (1.0 / self.n)

    @property
    def M(self) -> np.ndarray:
        """Martingale a_n S_n, anchored to the exact integer position."""
        return self._fv[7 * self.d : 8 * self.d].copy()

    @property
    def M_innovation_sum(self) -> np.ndarray:
        """Second representation of M: accumulated sum of a_k eps_k."""
        return self._fv[2 * self.d : 3 * self.d].copy()

    @property
    def N(self) -> np.ndarray:
        return self._fv[4 * self.d : 5 * self.d].copy()

    @property
    def eps(self) -> np.ndarray:
        return self._fv[6 * self.d : 7 * self.d].copy()

    @property
    def a_n(self) -> float:
        return float(self._fs[0])

    @property
    def b_n(self) -> float:
        return float(self._fs[1])

    @property
    def Sigma(self) -> np.ndarray:
        """Running sum of step outer products: diagonal of axis totals."""
        ax = self._counts[: self.d] + self._counts[self.d :]
        return np.diag(ax.astype(np.float64))

    @property
    def rng_state(self) -> np.ndarray:
        return self._rng.copy()

    @property
    def track(self):
        """Snapshot of the martingale bookkeeping as a MartingaleTrack."""
        from . import martingale  # lazy: martingale imports this module
        fs = self._fs
        qv = self._qv.copy() if self.detailed else None
        return martingale.MartingaleTrack(
            d=self.d, a_n=float(fs[0]), b_n=float(fs[1]),
            eps=self.eps, M=self.M, M_sum=self.M_innovation_sum, N=self.N,
            tau=float(fs[3]), sum_a2=float(fs[5]), sum_a2_b=float(fs[7]),
            sum_a2_b2=float(fs[3]), sum_a4=float(fs[9]), qv=qv,
        )


def _require_tracking(params: ModelParams) -> None:
    # d=1 with p=0 gives a = -1: the gain recurrence divides by 1 + a.
    if params.a <= -1.0:
        raise ValueError(
            "memory strength a = -1 (d=1, p=0): gain sequence undefined, "
            "martingale tracking unavailable")


def increment_distribution(state: WalkState, params: ModelParams) -> np.ndarray:
    """Probability vector over the 2d signed directions for the next step."""
    return np.array(
        increment_probabilities(state._counts, state.n, params.d, params.p),
        dtype=np.float64)


def conditional_mean_increment(state: WalkState, params: ModelParams) -> np.ndarray:
    """Expected next step given the past: (a/n) S_n.  Requires n >= 1."""
    if state.n == 0:
        raise ValueError("conditional mean undefined at n = 0")
    return (params.a / state.n) * state._S


def step(state: WalkState, params: ModelParams) -> WalkState:
    """Advance the walk one step in place (also returns the state).

    Samples from increment_distribution with the state's own generator and
    updates position, counts, center-of-mass sum, and all martingale
    quantities.  Deterministic given the generator state.
    """
    if params.d != state.d:
        raise ValueError(f"params d={params.d} does not match state d={state.d}")
    _require_tracking(params)
    state.n = int(_kernels.advance(
        state.n, state.d, params.p, params.a,
        state._counts, state._S, state._fv, state._fs, state._qv,
        state.detailed, state._rng))
    return state


@dataclass
class TrajectoryRecord:
    """Snapshots of one path at a fixed stride plus the terminal state.

    Arrays are row-aligned: row i holds step rec_n[i].  qv is present only
    for detailed runs (blocks of the predictable quadratic variation).
    """

    params: ModelParams
    n_steps: int
    seed: int
    record_every: int
    n: np.ndarray
    S: np.ndarray
    G: np.ndarray
    M: np.ndarray
    N: np.ndarray
    a_n: np.ndarray
    b_n: np.ndarray
    residual: np.ndarray
    qv: Optional[np.ndarray]
    terminal: WalkState = field(repr=False, default=None)

    @property
    def full_resolution(self) -> bool:
        return self.record_every == 1


def run_path(params: ModelParams, n_steps: int, seed: int,
             record_every: int = 1, detailed: bool = False) -> TrajectoryRecord:
    """Simulate one path, recording snapshots every record_every steps.

    The terminal step is always recorded (as the last row) even when the
    stride does not divide n_steps.  Identical (params, n_steps, seed,
    record_every, detailed) give identical output, bit for bit.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    _require_tracking(params)
    d = params.d
    n_rows = n_steps // record_every + (1 if n_steps % record_every else 0)
    rec_n = np.empty(n_rows, dtype=np.int64)
    rec_S = np.empty((n_rows, d), dtype=np.int64)
    rec_G = np.empty((n_rows, d), dtype=np.float64)
    rec_M = np.empty((n_rows, d), dtype=np.float64)
    rec_N = np.empty((n_rows, d), dtype=np.float64)
    rec_a = np.empty(n_rows, dtype=np.float64)
    rec_b = np.empty(n_rows, dtype=np.float64)
    rec_res = np.empty(n_rows, dtype=np.float64)
    qd = d if detailed else 0
    rec_qv = np.empty((n_rows, 3, qd, qd), dtype=np.float64)

    state = WalkState(d, seed, detailed=detailed)
    rows = _kernels.run_path_kernel(
        d, params.p, params.a, n_steps, record_every, detailed,
        state._counts, state._S, state._fv, state._fs, state._qv, state._rng,
        rec_n, rec_S, rec_G, rec_M, rec_N, rec_a, rec_b, rec_res, rec_qv)
    state.n = n_steps
    assert rows == n_rows
    return TrajectoryRecord(
        params=params, n_steps=n_steps, seed=int(seed),
        record_every=int(record_every),
        n=rec_n, S=rec_S, G=rec_G, M=rec_M, N=rec_N,
        a_n=rec_a, b_n=rec_b, residual=rec_res,
        qv=rec_qv if detailed else None, terminal=state)
