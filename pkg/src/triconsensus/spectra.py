"""Laplacian spectra of rings and q-triangulated rings.

Two independent routes: closed forms (circulant spectrum of the ring, then the
quadratic branch map plus the kernel eigenvalue 2 for the triangulation) and a
dense symmetric eigensolver applied to the constructed graph.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, TextIO

import numpy as np

from .errors import EigensolverError
from .graph import FamilySpec, Graph, build_ring, is_bipartite, laplacian

__all__ = [
    "SpectrumEntry",
    "Spectrum",
    "BranchPair",
    "LABELS",
    "ring_eigenvalue",
    "ring_eigenvalues",
    "branch_map",
    "full_spectrum",
    "numeric_spectrum",
    "spectral_extremes",
    "max_deviation",
    "merge_gap",
    "write_spectrum_csv",
]

LABELS = ("base", "branch_plus", "branch_minus", "added_two", "bipartite_top", "numeric")


class SpectrumEntry(NamedTuple):
    value: float
    multiplicity: int
    label: str


def merge_gap(lam_max: float) -> float:
    """Absolute gap under which two eigenvalues count as the same one."""
    return 1e-8 * max(1.0, abs(lam_max))


@dataclass(frozen=True)
class Spectrum:
    """Multiset of Laplacian eigenvalues, each entry tagged with the rule that produced it."""

    entries: tuple[SpectrumEntry, ...]
    total: int

    def __post_init__(self) -> None:
        entries = tuple(SpectrumEntry(float(v), int(k), str(lab)) for v, k, lab in self.entries)
        for e in entries:
            if e.multiplicity < 1:
                raise ValueError(f"non-positive multiplicity in {e}")
            if e.label not in LABELS:
                raise ValueError(f"unknown label {e.label!r}")
        if any(a.value > b.value for a, b in zip(entries, entries[1:])):
            raise ValueError("spectrum entries must be sorted ascending")
        if sum(e.multiplicity for e in entries) != self.total:
            raise ValueError("multiplicities do not add up to the node count")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_values(cls, values, label: str, gap: float | None = None) -> "Spectrum":
        vals = np.sort(np.asarray(values, dtype=float))
        if gap is None:
            gap = merge_gap(vals[-1] if vals.size else 0.0)
        return cls(tuple(_merge(vals, label, gap)), int(vals.size))

    @classmethod
    def combine(cls, parts: list[tuple[float, int, str]], gap: float | None = None) -> "Spectrum":
        """Build from (value, multiplicity, label) triples, merging near-equal values per label."""
        parts = [p for p in parts if p[1] > 0]
        if gap is None:
            gap = merge_gap(max((p[0] for p in parts), default=0.0))
        merged = []
        for label in LABELS:
            own = sorted((v, k) for v, k, lab in parts if lab == label)
            merged.extend(_merge_weighted(own, label, gap))
        merged.sort(key=lambda e: (e.value, LABELS.index(e.label)))
        return cls(tuple(merged), sum(p[1] for p in parts))

    def values(self) -> np.ndarray:
        """Every eigenvalue repeated by multiplicity, ascending."""
        if not self.entries:
            return np.zeros(0)
        return np.repeat([e.value for e in self.entries], [e.multiplicity for e in self.entries])

    def multiplicity_of(self, value: float, atol: float | None = None, label: str | None = None) -> int:
        if atol is None:
            atol = merge_gap(self.max_value())
        return sum(
            e.multiplicity
            for e in self.entries
            if abs(e.value - value) <= atol and (label is None or e.label == label)
        )

    def max_value(self) -> float:
        return max((e.value for e in self.entries), default=0.0)

    def trace(self) -> float:
        return math.fsum(e.value * e.multiplicity for e in self.entries)

    def scaled(self, c: float) -> "Spectrum":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return Spectrum(tuple(SpectrumEntry(e.value * c, e.multiplicity, e.label) for e in self.entries), self.total)


def _merge(sorted_vals: np.ndarray, label: str, gap: float) -> list[SpectrumEntry]:
    return _merge_weighted([(float(v), 1) for v in sorted_vals], label, gap)


def _merge_weighted(items: list[tuple[float, int]], label: str, gap: float) -> list[SpectrumEntry]:
    out: list[SpectrumEntry] = []
    prev = None
    for v, k in items:
        if out and prev is not None and v - prev <= gap:
            head = out[-1]
            out[-1] = SpectrumEntry(head.value, head.multiplicity + k, label)
        else:
            out.append(SpectrumEntry(v, k, label))
        prev = v
    return out


@dataclass(frozen=True)
class BranchPair:
    f_plus: float
    f_minus: float
    mu: float


def ring_eigenvalue(k: int, n: int, r: int, method: str = "sum") -> float:
    """k-th Laplacian eigenvalue of the r-regular ring on n nodes.

    ``method="sum"`` evaluates r - 2 sum_{j<=r/2} cos(2 pi k j / n);
    ``method="dirichlet"`` uses the collapsed kernel r + 1 - sin((r+1) pi k/n) / sin(pi k/n).
    """
    k %= n
    if k == 0:
        return 0.0
    if method == "sum":
        return r - 2.0 * math.fsum(math.cos(2.0 * math.pi * k * j / n) for j in range(1, r // 2 + 1))
    if method == "dirichlet":
        return r + 1.0 - dirichlet_ratio(k, n, r)
    raise ValueError(f"unknown method {method!r}")


def dirichlet_ratio(k: int, n: int, r: int) -> float:
    """l_k = sin((r+1) pi k / n) / sin(pi k / n), for k not a multiple of n."""
    return math.sin((r + 1) * math.pi * k / n) / math.sin(math.pi * k / n)


def ring_eigenvalues(n: int, r: int) -> Spectrum:
    spec = FamilySpec(n, r, 0)
    vals = [ring_eigenvalue(k, spec.n, spec.r) for k in range(spec.n)]
    return Spectrum.from_values(vals, "base")


def branch_map(lam: float, q: int, r: int) -> BranchPair:
    """The two eigenvalues of the triangulated graph generated by base eigenvalue ``lam``."""
    mu = (q * r + lam - 2.0) ** 2 + 4.0 * q * (2.0 * r - lam)
    s = math.sqrt(max(mu, 0.0))
    a = q * r + lam + 2.0
    return BranchPair(0.5 * (a + s), 0.5 * (a - s), mu)


def full_spectrum(spec: FamilySpec) -> Spectrum:
    """Closed-form spectrum of L(R_q(ring(n, r))), all n(1 + q r/2) eigenvalues."""
    if spec.q < 0:
        raise ValueError("q must be >= 0")
    base = ring_eigenvalues(spec.n, spec.r)
    if spec.q == 0:
        return base
    n, r, q, m = spec.n, spec.r, spec.q, spec.base_edges
    bip = is_bipartite(build_ring(n, r)).is_bipartite
    gap = merge_gap(2 * r)
    parts: list[tuple[float, int, str]] = []
    skipped_top = False
    for e in base.entries:
        k = e.multiplicity
        if bip and not skipped_top and abs(e.value - 2 * r) <= gap:
            # the 2r eigenvector is killed by B^T: no branch pair, one r(q+2) instead
            k -= 1
            skipped_top = True
            parts.append((float(r * (q + 2)), 1, "bipartite_top"))
        if k:
            bp = branch_map(e.value, q, r)
            parts.append((bp.f_minus, k, "branch_minus"))
            parts.append((bp.f_plus, k, "branch_plus"))
    if bip and not skipped_top:
        raise AssertionError("bipartite base ring without eigenvalue 2r")
    kernel = m * q - n + (1 if bip else 0)
    if kernel < 0:
        raise AssertionError(f"negative kernel multiplicity {kernel}")
    parts.append((2.0, kernel, "added_two"))
    return Spectrum.combine(parts)


def numeric_spectrum(g: Graph, tol: float = 1e-10) -> Spectrum:
    """Eigenvalues of laplacian(g) from LAPACK's symmetric solver, residual-checked."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    L = laplacian(g)
    try:
        w, V = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    norm = max(abs(w[0]), abs(w[-1]), 1e-300)
    res = np.linalg.norm(L @ V - V * w, axis=0)
    worst = float(res.max()) if res.size else 0.0
    if worst > tol * norm:
        raise EigensolverError(f"residual {worst:.3e} exceeds {tol:g} * ||L|| = {tol * norm:.3e}")
    w = np.where(np.abs(w) <= tol * norm, 0.0, w)
    if (w < 0).any():
        raise EigensolverError(f"negative eigenvalue {w.min():.3e} below the noise floor")
    return Spectrum.from_values(w, "numeric")


def spectral_extremes(s: Spectrum) -> tuple[float, float]:
    """(smallest positive eigenvalue, largest eigenvalue) of a connected spectrum."""
    atol = merge_gap(s.max_value())
    zeros = s.multiplicity_of(0.0, atol=atol)
    if zeros != 1:
        raise ValueError(f"eigenvalue 0 has multiplicity {zeros}; graph is not connected")
    positive = [e.value for e in s.entries if e.value > atol]
    if not positive:
        raise ValueError("spectrum has no positive eigenvalue")
    return min(positive), s.max_value()


def max_deviation(a: Spectrum, b: Spectrum) -> float:
    """Largest gap between two spectra compared as sorted multisets (inf on size mismatch)."""
    va, vb = a.values(), b.values()
    if va.size != vb.size:
        return math.inf
    if va.size == 0:
        return 0.0
    return float(np.max(np.abs(va - vb)))


def write_spectrum_csv(s: Spectrum, dest: str | Path | TextIO) -> None:
    """CSV ``value,multiplicity,label`` with values at 15 significant digits."""
    def _emit(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "multiplicity", "label"])
        for e in s.entries:
            w.writerow([f"{e.value:.15g}", e.multiplicity, e.label])

    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            _emit(fh)
    else:
        _emit(dest)
