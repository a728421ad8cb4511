"""Weighted blending of latent style vectors.

Two schemes: a plain convex combination (``linear_blend``) and spherical
linear interpolation (``sli_blend``), which walks the great-circle arc so
unit inputs stay on the unit hypersphere. Multi-style spherical blending is
a pairwise fold over the styles sorted by descending weight; the fold is
not associative, so the sort is what makes results reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllZeroWeights, AntipodalVectors, DimensionMismatch, InputError
from .tensorcore import LatentVector, angle_between

LINEAR = "linear"
SLI = "sli"

#: Below this angle (radians) sin(omega) is numerically unusable and the
#: straight-line interpolation is the correct limit.
DEFAULT_EPS_OMEGA = 1e-7


@dataclass(frozen=True)
class StyleEntry:
    """One reference style: its latent vector, blend weight, and input slot."""

    vector: LatentVector
    weight: float
    source_index: int


@dataclass(frozen=True)
class WeightedStyleSet:
    """Ordered reference styles with non-negative weights, all sharing d_z."""

    entries: tuple[StyleEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise InputError("WeightedStyleSet needs at least one style")
        d = entries[0].vector.d_z
        for e in entries:
            if e.vector.d_z != d:
                raise DimensionMismatch(
                    f"style {e.source_index} has d_z={e.vector.d_z}, expected {d}"
                )
            if not math.isfinite(e.weight) or e.weight < 0:
                raise InputError(f"style {e.source_index} has invalid weight {e.weight}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, vectors: Sequence[LatentVector], weights: Sequence[float]) -> "WeightedStyleSet":
        if len(vectors) != len(weights):
            raise InputError(f"{len(vectors)} vectors but {len(weights)} weights")
        return cls(
            tuple(
                StyleEntry(vector=v, weight=float(w), source_index=i)
                for i, (v, w) in enumerate(zip(vectors, weights))
            )
        )

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(e.weight for e in self.entries)

    @property
    def d_z(self) -> int:
        return self.entries[0].vector.d_z


@dataclass(frozen=True)
class BlendResult:
    """Blended vector plus the bookkeeping needed to reproduce it.

    ``order_used`` lists source indices in the order they entered the blend;
    ``omega_trace`` records the angle of every pairwise spherical step and
    is empty for the linear method.
    """

    vector: LatentVector
    method: str
    order_used: tuple[int, ...]
    omega_trace: tuple[float, ...]


def normalize_weights(s: WeightedStyleSet) -> WeightedStyleSet:
    """Rescale weights to sum to 1; vectors and order are untouched."""
    total = math.fsum(e.weight for e in s.entries)
    if total == 0.0:
        raise AllZeroWeights("cannot normalize: all weights are zero")
    return WeightedStyleSet(
        tuple(
            StyleEntry(vector=e.vector, weight=e.weight / total, source_index=e.source_index)
            for e in s.entries
        )
    )


def linear_blend(s: WeightedStyleSet) -> BlendResult:
    """Convex combination sum(w_i * z_i) in input order.

    Weights are normalized internally, so callers may pass raw weights.
    Note the result of distinct unit inputs falls inside the sphere (the
    chord undershoots the arc).
    """
    s = normalize_weights(s)
    out = np.zeros(s.d_z)
    for e in s.entries:
        out += e.weight * e.vector.data
    return BlendResult(
        vector=LatentVector(out),
        method=LINEAR,
        order_used=tuple(e.source_index for e in s.entries),
        omega_trace=(),
    )


def slerp_pair(
    z1: LatentVector,
    z2: LatentVector,
    t: float,
    eps_omega: float = DEFAULT_EPS_OMEGA,
) -> tuple[LatentVector, float]:
    """Spherical interpolation between two vectors at parameter t in [0, 1].

    The angle omega comes from the normalized directions; the sine
    coefficients are applied to the raw vectors, so magnitudes interpolate
    sinusoidally alongside direction. Returns ``(vector, omega)``.

    Below ``eps_omega`` the vectors are treated as parallel and the
    straight-line interpolation is returned; within ``eps_omega`` of pi the
    geodesic is ambiguous and ``AntipodalVectors`` is raised rather than
    silently picking a direction.
    """
    if not 0.0 <= t <= 1.0:
        raise InputError(f"interpolation parameter t={t} outside [0, 1]")
    if z1.d_z != z2.d_z:
        raise DimensionMismatch(f"slerp: dimensions differ ({z1.d_z} vs {z2.d_z})")
    omega = angle_between(z1, z2)  # raises ZeroVector on zero-norm input
    if math.pi - omega < eps_omega:
        raise AntipodalVectors(
            f"vectors are antipodal within eps_omega={eps_omega} (omega={omega})"
        )
    if t == 0.0:
        return z1, omega
    if t == 1.0:
        return z2, omega
    if omega < eps_omega:
        return LatentVector((1.0 - t) * z1.data + t * z2.data), omega
    sin_omega = math.sin(omega)
    c1 = math.sin((1.0 - t) * omega) / sin_omega
    c2 = math.sin(t * omega) / sin_omega
    return LatentVector(c1 * z1.data + c2 * z2.data), omega


def sli_blend(s: WeightedStyleSet, eps_omega: float = DEFAULT_EPS_OMEGA) -> BlendResult:
    """Multi-style spherical blend.

    Styles are folded pairwise in descending-weight order (ties broken by
    ascending source index, so repeated calls and permuted inputs give
    bit-identical results). Step i+1 interpolates the cumulative blend
    toward style i+1 with t = w_{i+1} / sum(w_1..w_{i+1}); for two styles
    this reduces exactly to ``slerp_pair`` with t = w2 / (w1 + w2).
    """
    s = normalize_weights(s)
    ordered = sorted(s.entries, key=lambda e: (-e.weight, e.source_index))
    vector, trace = _sli_fold(ordered, eps_omega)
    return BlendResult(
        vector=vector,
        method=SLI,
        order_used=tuple(e.source_index for e in ordered),
        omega_trace=trace,
    )


def _sli_fold(
    ordered: Sequence[StyleEntry], eps_omega: float
) -> tuple[LatentVector, tuple[float, ...]]:
    """Pairwise fold in the given order. The order matters: the fold is not
    associative, which is why sli_blend canonicalizes it first."""
    cumulative = ordered[0].vector
    running_weight = ordered[0].weight
    trace: list[float] = []
    for entry in ordered[1:]:
        running_weight += entry.weight
        t = entry.weight / running_weight
        try:
            cumulative, omega = slerp_pair(cumulative, entry.vector, t, eps_omega)
        except AntipodalVectors as exc:
            raise AntipodalVectors(f"incorporating style {entry.source_index}: {exc}") from exc
        trace.append(omega)
    return cumulative, tuple(trace)


def chord_and_arc(z1: LatentVector, z2: LatentVector) -> tuple[float, float]:
    """(straight-line, great-circle) distance between the two directions.

    For angular separation omega these are 2*sin(omega/2) and omega; the
    chord strictly undershoots the arc for omega > 0, which is exactly the
    separation a linear blend loses.
    """
    omega = angle_between(z1, z2)
    return 2.0 * math.sin(omega / 2.0), omega
