"""Consensus performance metrics for q-triangular r-regular rings.

Every metric comes in two flavours:

* ``paper`` mode evaluates the published closed forms as printed. They read
  both spectral extremes off the base-ring index k=1 and so use the pair
  (f_-(lambda_1), f_+(lambda_1)), which is not the true spectral maximum.
* ``spectral`` mode applies the underlying definitions (best-constant weight,
  T = 1/ln(1/gamma), (1/2N) sum 1/lambda, pi/(2 lambda_max)) to the full
  assembled spectrum.

The two modes disagree by construction; both are reported.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .errors import DivergenceError
from .graph import FamilySpec
from .spectra import Spectrum, dirichlet_ratio, full_spectrum, merge_gap, ring_eigenvalues, spectral_extremes

__all__ = [
    "MetricsReport",
    "MODES",
    "T_CAP",
    "best_constant_h",
    "gamma_from_h",
    "convergence_time",
    "convergence_time_paper",
    "coherence_paper",
    "coherence_spectral",
    "max_delay_paper",
    "max_delay_spectral",
    "metrics_report",
    "spectral_report",
]

MODES = ("paper", "spectral")
T_CAP = 1e12
REPORT_FIELDS = ("n", "r", "q", "mode", "h", "gamma", "T", "H1", "H2", "Tmax")


@dataclass(frozen=True)
class MetricsReport:
    mode: str
    h: float
    gamma: float
    T: float
    H1: float
    H2: float
    Tmax: float
    n: int | None = None
    r: int | None = None
    q: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in REPORT_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list[str]:
        return ["" if v is None else (f"{v:.15g}" if isinstance(v, float) else str(v)) for v in self.to_dict().values()]


def best_constant_h(lambda_2: float, lambda_max: float) -> float:
    """Uniform edge weight balancing |1 - h lambda_2| = |1 - h lambda_max|."""
    if lambda_2 <= 0:
        raise ValueError(f"lambda_2 must be positive (connected graph), got {lambda_2}")
    if lambda_max < lambda_2:
        raise ValueError("lambda_max must be >= lambda_2")
    return 2.0 / (lambda_2 + lambda_max)


def gamma_from_h(h: float, lambda_2: float, lambda_max: float) -> float:
    """Per-step contraction max(|1 - h lambda_2|, |1 - h lambda_max|)."""
    return max(abs(1.0 - h * lambda_2), abs(1.0 - h * lambda_max))


def convergence_time(gamma: float) -> float:
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    if gamma == 0:
        return 0.0
    if gamma >= 1:
        raise DivergenceError(f"gamma = {gamma:.17g} >= 1: the iteration does not contract")
    T = 1.0 / -math.log(gamma)
    if T > T_CAP:
        raise DivergenceError(f"convergence time {T:.3e} exceeds cap {T_CAP:.0e} (gamma = {gamma:.17g})")
    return T


def _first_index_terms(spec: FamilySpec, k: int = 1) -> tuple[float, float]:
    """(a, c) with a = (q+1) r + 3 - l_k and c = sqrt((1 - (q+1) r + l_k)^2 + 4 q (r + l_k - 1))."""
    n, r, q = spec.n, spec.r, spec.q
    l = dirichlet_ratio(k, n, r)
    qr = (q + 1) * r
    a = qr + 3.0 - l
    c = math.sqrt((1.0 - qr + l) ** 2 + 4.0 * q * (r + l - 1.0))
    return a, c


def _require_triangulated(spec: FamilySpec) -> None:
    if spec.q < 1:
        raise ValueError("paper-mode closed forms need q >= 1")


def convergence_time_paper(spec: FamilySpec) -> float:
    """T = 1 / ln(a / c) at base index k = 1."""
    _require_triangulated(spec)
    a, c = _first_index_terms(spec, 1)
    return convergence_time(c / a)


def coherence_paper(spec: FamilySpec) -> tuple[float, float]:
    """First- and second-order coherence summed over k = 1..n-1 with the printed +c branch."""
    _require_triangulated(spec)
    n = spec.n
    h1 = []
    h2 = []
    for k in range(1, n):
        a, c = _first_index_terms(spec, k)
        d = a + c
        h1.append(2.0 / d)
        h2.append(2.0 / d**2)
    return math.fsum(h1) / (2 * n), math.fsum(h2) / (2 * n)


def max_delay_paper(spec: FamilySpec) -> float:
    """pi / (a - c) at k = 1, i.e. pi / (2 f_-(lambda_1)); sign kept as printed."""
    _require_triangulated(spec)
    a, c = _first_index_terms(spec, 1)
    return math.pi / (a - c)


def coherence_spectral(s: Spectrum) -> tuple[float, float]:
    """(1/2N) sum 1/lambda and (1/2N) sum 1/lambda^2 over all nonzero eigenvalues."""
    spectral_extremes(s)
    atol = merge_gap(s.max_value())
    pos = [e for e in s.entries if e.value > atol]
    N = s.total
    h1 = math.fsum(e.multiplicity / e.value for e in pos) / (2 * N)
    h2 = math.fsum(e.multiplicity / e.value**2 for e in pos) / (2 * N)
    return h1, h2


def max_delay_spectral(s: Spectrum) -> float:
    _, lam_max = spectral_extremes(s)
    return math.pi / (2.0 * lam_max)


def spectral_report(s: Spectrum, spec: FamilySpec | None = None) -> MetricsReport:
    """Definitions applied to any connected spectrum."""
    lam2, lam_max = spectral_extremes(s)
    h = best_constant_h(lam2, lam_max)
    gamma = gamma_from_h(h, lam2, lam_max)
    H1, H2 = coherence_spectral(s)
    return MetricsReport(
        mode="spectral",
        h=h,
        gamma=gamma,
        T=convergence_time(gamma),
        H1=H1,
        H2=H2,
        Tmax=max_delay_spectral(s),
        n=spec.n if spec else None,
        r=spec.r if spec else None,
        q=spec.q if spec else None,
    )


def metrics_report(spec: FamilySpec, mode: str) -> MetricsReport:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "spectral":
        return spectral_report(full_spectrum(spec), spec)
    if spec.q == 0:
        # no closed forms for the bare ring; use its exact spectrum, tagged paper
        base = spectral_report(ring_eigenvalues(spec.n, spec.r), spec)
        return MetricsReport(**{**asdict(base), "mode": "paper"})
    a, c = _first_index_terms(spec, 1)
    f_plus, f_minus = 0.5 * (a + c), 0.5 * (a - c)
    h = best_constant_h(f_minus, f_plus)
    H1, H2 = coherence_paper(spec)
    return MetricsReport(
        mode="paper",
        h=h,
        gamma=gamma_from_h(h, f_minus, f_plus),
        T=convergence_time_paper(spec),
        H1=H1,
        H2=H2,
        Tmax=max_delay_paper(spec),
        n=spec.n,
        r=spec.r,
        q=spec.q,
    )
