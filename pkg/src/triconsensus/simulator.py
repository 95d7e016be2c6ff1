"""Simulations that check the closed-form metrics empirically.

* :func:`run_consensus` iterates x(t+1) = (I - hL) x(t).
* :func:`estimate_first_order_coherence` runs the Euler-Maruyama scheme for
  dx = -L x dt + sigma dW and averages the squared deviation from the mean.
* :func:`delay_stability_probe` integrates x'(t) = -L x(t - tau) and decides
  whether the disagreement dies out or blows up.

Random numbers come from numpy's PCG64 generator seeded with ``cfg.seed``;
per-step noise is drawn as one row of node-ordered normals.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DivergenceError, InconclusiveError
from .graph import Graph, laplacian
from .metrics import best_constant_h
from .spectra import numeric_spectrum, spectral_extremes

__all__ = [
    "SimConfig",
    "SimTrace",
    "DelayResult",
    "run_consensus",
    "fit_rate",
    "estimate_first_order_coherence",
    "coherence_burn_in",
    "delay_stability_probe",
    "default_delay_dt",
    "write_trace",
]

BEST = "best"
_NOISE_CHUNK = 8192


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    steps: int = 200
    h: float | str = BEST
    noise_sigma: float = 0.0
    dt: float | None = None
    tau: float = 0.0
    tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if isinstance(self.h, str):
            if self.h != BEST:
                raise ValueError(f"h must be a number or {BEST!r}")
        elif self.h <= 0:
            raise ValueError("h must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


@dataclass
class SimTrace:
    disagreement: np.ndarray
    final_state: np.ndarray
    converged: bool
    measured_rate: float
    h: float
    time: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "h": self.h,
            "steps": int(self.disagreement.size - 1),
            "initial_disagreement": float(self.disagreement[0]),
            "final_disagreement": float(self.disagreement[-1]),
            "converged": bool(self.converged),
            "measured_rate": self.measured_rate,
            **self.meta,
        }


def _disagreement(x: np.ndarray) -> float:
    return float(np.linalg.norm(x - x.mean()))


def fit_rate(disagreement: np.ndarray, floor: float = 1e-11) -> float:
    """Per-step contraction factor from a log-linear fit over the tail of the trace.

    Points below ``floor`` times the initial disagreement are dropped (round-off
    regime); the fit uses the second half of what remains.
    """
    d = np.asarray(disagreement, dtype=float)
    if d.size < 2 or d[0] == 0:
        return 0.0
    usable = np.flatnonzero(d > floor * d[0])
    # usable is a prefix for a contracting run; cut at the first gap
    stop = usable.size
    for i, idx in enumerate(usable):
        if idx != i:
            stop = i
            break
    usable = usable[:stop]
    if usable.size < 2:
        return float(d[1] / d[0]) if d.size > 1 else 0.0
    tail = usable[usable.size // 2 :]
    if tail.size < 2:
        tail = usable[-2:]
    slope = np.polyfit(tail.astype(float), np.log(d[tail]), 1)[0]
    return float(math.exp(slope))


def _resolve_h(g: Graph, cfg: SimConfig) -> tuple[float, float, float]:
    lam2, lam_max = spectral_extremes(numeric_spectrum(g))
    h = best_constant_h(lam2, lam_max) if cfg.h == BEST else float(cfg.h)
    return h, lam2, lam_max


def run_consensus(g: Graph, cfg: SimConfig, x0=None) -> SimTrace:
    """Synchronous iteration x <- x - h L x (plus sigma * N(0, I) noise if configured).

    ``x0=None`` draws initial values uniformly on [0, 1) from the seeded stream.
    A noiseless run that grows for 3 consecutive steps raises DivergenceError.
    """
    rng = cfg.rng()
    x = rng.random(g.n) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"x0 must have {g.n} entries, got shape {x.shape}")
    h, _, lam_max = _resolve_h(g, cfg)
    L = laplacian(g)
    noisy = cfg.noise_sigma > 0

    d = np.empty(cfg.steps + 1)
    d[0] = _disagreement(x)
    floor = 1e-12 * max(d[0], 1e-300)
    growth = 0
    for t in range(1, cfg.steps + 1):
        x = x - h * (L @ x)
        if noisy:
            x = x + cfg.noise_sigma * rng.standard_normal(g.n)
        d[t] = _disagreement(x)
        if not noisy:
            if d[t - 1] > floor and d[t] > d[t - 1] * (1.0 + 1e-9):
                growth += 1
                if growth >= 3:
                    raise DivergenceError(
                        f"disagreement grew 3 steps in a row with h={h:.6g}; "
                        f"convergence needs h < 2/lambda_max = {2.0 / lam_max:.6g}"
                    )
            else:
                growth = 0
    converged = bool(d[-1] <= cfg.tol * max(d[0], 1e-300)) if d[0] > 0 else True
    return SimTrace(
        disagreement=d,
        final_state=x,
        converged=converged,
        measured_rate=fit_rate(d) if not noisy else float("nan"),
        h=h,
        time=np.arange(cfg.steps + 1, dtype=float),
    )


def coherence_burn_in(lambda_2: float, dt: float) -> int:
    return math.ceil(10.0 / (lambda_2 * dt))


def estimate_first_order_coherence(g: Graph, cfg: SimConfig) -> float:
    """Time- and node-averaged squared deviation from the mean under white noise.

    With unit noise intensity the estimator's expectation is (1/2N) sum_{lambda>0} 1/lambda.
    ``cfg.steps`` counts the averaging window; a burn-in of ceil(10/(lambda_2 dt))
    steps is run first. ``cfg.dt`` must satisfy dt <= 0.1/lambda_max.
    """
    lam2, lam_max = spectral_extremes(numeric_spectrum(g))
    dt = cfg.dt if cfg.dt is not None else 0.1 / lam_max
    if dt > 0.1 / lam_max * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} violates the stability bound dt <= 0.1/lambda_max = {0.1 / lam_max:g}")
    L = laplacian(g)
    W = np.eye(g.n) - dt * L
    rng = cfg.rng()
    scale = cfg.noise_sigma * math.sqrt(dt)
    burn = coherence_burn_in(lam2, dt)
    total = burn + cfg.steps

    x = np.zeros(g.n)
    acc = 0.0
    done = 0
    while done < total:
        chunk = min(_NOISE_CHUNK, total - done)
        noise = scale * rng.standard_normal((chunk, g.n))
        states = np.empty((chunk, g.n))
        for i in range(chunk):
            x = W @ x + noise[i]
            states[i] = x
        lo = max(0, burn - done)
        if lo < chunk:
            dev = states[lo:] - states[lo:].mean(axis=1, keepdims=True)
            acc += float(np.sum(dev * dev))
        done += chunk
    return acc / (cfg.steps * g.n)


@dataclass(frozen=True)
class DelayResult:
    verdict: str
    tau: float
    threshold: float
    dt: float
    horizon: float
    ratio: float
    disagreement: np.ndarray
    time: np.ndarray

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "tau": self.tau,
            "threshold": self.threshold,
            "dt": self.dt,
            "horizon": self.horizon,
            "final_over_initial": self.ratio,
        }


def default_delay_dt(tau: float, lambda_max: float) -> float:
    bound = 0.05 / lambda_max
    if tau > 0:
        bound = min(bound, tau / 20.0)
    return bound


def delay_stability_probe(g: Graph, tau: float, cfg: SimConfig, horizon: float | None = None) -> DelayResult:
    """Integrate x'(t) = -L x(t - tau) with Heun's method and classify the outcome.

    The history on [-tau, 0] is the constant initial state; delayed values are
    linearly interpolated between grid points. ``horizon`` defaults to
    50 / lambda_2 time units. Stable: final disagreement < 1e-3 of initial;
    unstable: > 10x initial; anything in between raises InconclusiveError.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    lam2, lam_max = spectral_extremes(numeric_spectrum(g))
    bound = default_delay_dt(tau, lam_max)
    dt = cfg.dt if cfg.dt is not None else bound
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds min(0.05/lambda_max, tau/20) = {bound:g}")
    min_horizon = 50.0 / lam2
    if horizon is None:
        horizon = min_horizon
    elif horizon < min_horizon * (1 - 1e-12):
        raise ValueError(f"horizon {horizon:g} is shorter than 50/lambda_2 = {min_horizon:g}")
    steps = math.ceil(horizon / dt)

    L = laplacian(g)
    rng = cfg.rng()
    x = rng.standard_normal(g.n)
    x0 = x.copy()
    d0 = _disagreement(x)
    if d0 == 0:
        raise ValueError("initial state has no disagreement")

    # x(t_k - tau) = (1 - frac) X[k - lag] + frac X[k - lag - 1]
    lag = math.floor(tau / dt + 1e-12)
    frac = tau / dt - lag
    if frac < 1e-12:
        frac = 0.0
    depth = lag + 2
    hist = np.empty((depth, g.n))
    hist[:] = x0

    def past(k: int) -> np.ndarray:
        # state at grid index k - lag (and one earlier), constant x0 before t=0
        def at(j: int) -> np.ndarray:
            return x0 if j < 0 else hist[j % depth]

        a = at(k - lag)
        return a if frac == 0.0 else (1.0 - frac) * a + frac * at(k - lag - 1)

    d = np.empty(steps + 1)
    d[0] = d0
    hist[0] = x
    blowup = 1e6 * d0
    last = 0
    for k in range(steps):
        if lag == 0 and frac == 0.0:
            k1 = -(L @ x)
            k2 = -(L @ (x + dt * k1))
        else:
            k1 = -(L @ past(k))
            k2 = -(L @ past(k + 1)) if lag >= 1 else -(L @ (x + dt * k1))
        x = x + 0.5 * dt * (k1 + k2)
        hist[(k + 1) % depth] = x
        d[k + 1] = _disagreement(x)
        last = k + 1
        if d[k + 1] > blowup:
            break
    d = d[: last + 1]
    t = dt * np.arange(d.size)
    ratio = float(d[-1] / d0)
    if ratio < 1e-3:
        verdict = "stable"
    elif ratio > 10.0:
        verdict = "unstable"
    else:
        raise InconclusiveError(
            f"disagreement ratio {ratio:.3g} after {t[-1]:g} time units is neither < 1e-3 nor > 10; "
            "try a longer horizon"
        )
    return DelayResult(verdict, tau, math.pi / (2.0 * lam_max), dt, float(t[-1]), ratio, d, t)


def write_trace(path: str | Path, disagreement: np.ndarray, time: np.ndarray, meta: dict) -> Path:
    """CSV ``step,time,disagreement`` plus a ``<path>.json`` metadata file."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "time", "disagreement"])
        for i, (ti, di) in enumerate(zip(time, disagreement)):
            w.writerow([i, f"{ti:.15g}", f"{di:.15g}"])
    meta_path = path.with_name(path.name + ".json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return meta_path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
