"""Level-1 Hecke eigenforms in the weights where the cusp space is one-dimensional."""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import qseries as qs

# weight -> (power of E4, power of E6) multiplying Delta
SUPPORTED_WEIGHTS = {12: (0, 0), 16: (1, 0), 18: (0, 1), 20: (2, 0), 22: (1, 1), 26: (2, 1)}

CACHE_MAGIC = b"DLQF"
_HEADER = struct.Struct("<4sIQI")


class UnsupportedWeight(ValueError):
    pass


@dataclass(frozen=True)
class HeckeEigenform:
    """Exact coefficients a(1..N) and normalised eigenvalues lambda(n) = a(n) n^{-(k-1)/2}.

    ``a`` and ``lam`` are indexed by n, with index 0 unused.
    """

    k: int
    N: int
    a: tuple[int, ...]
    lam: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_coefficients(cls, k: int, coeffs) -> "HeckeEigenform":
        a = tuple(int(x) for x in coeffs)
        if a[0] != 0:
            raise ValueError("cusp form must have zero constant term")
        N = len(a) - 1
        n = np.arange(1, N + 1, dtype=float)
        lam = np.zeros(N + 1)
        lam[1:] = np.array([float(x) for x in a[1:]]) / n ** ((k - 1) / 2.0)
        lam.setflags(write=False)
        return cls(k, N, a, lam)

    @property
    def lambda_(self) -> np.ndarray:
        return self.lam

    def coefficient(self, n: int) -> int:
        if not 1 <= n <= self.N:
            raise IndexError(f"coefficient {n} outside 1..{self.N}")
        return self.a[n]

    def require(self, n: int) -> None:
        if n > self.N:
            raise ValueError(f"eigenform of weight {self.k} known to {self.N}; need coefficients up to {n}")


def cusp_form_series(k: int, N: int) -> qs.Series:
    """Coefficients of the normalised weight-k cusp form to degree N inclusive."""
    if k not in SUPPORTED_WEIGHTS:
        raise UnsupportedWeight(f"weight {k} is not one of {sorted(SUPPORTED_WEIGHTS)}")
    n = N + 1
    f = qs.delta_series(n)
    a4, a6 = SUPPORTED_WEIGHTS[k]
    if a4:
        f = qs.mul_trunc(f, qs.pow_trunc(qs.eisenstein(4, n), a4, n), n)
    if a6:
        f = qs.mul_trunc(f, qs.eisenstein(6, n), n)
    return f


def eigenform(k: int, N: int) -> HeckeEigenform:
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > 10**6:
        raise ValueError("N above 10^6 is not supported")
    return HeckeEigenform.from_coefficients(k, cusp_form_series(k, N))


def sym_square_L1(k: int, trace_oracle: Callable[[int], float]) -> float:
    """L(1, sym^2 f) = 2 pi^2 / ((k - 1) Delta_k(1, 1)) for the unique form of weight k."""
    if k not in SUPPORTED_WEIGHTS:
        raise UnsupportedWeight(f"weight {k} is not one of {sorted(SUPPORTED_WEIGHTS)}")
    delta = float(trace_oracle(k))
    if not delta > 0:
        raise ValueError(f"non-positive trace {delta!r}; the geometric series is not converged")
    return 2.0 * math.pi**2 / ((k - 1) * delta)


def save_cache(form: HeckeEigenform, path: str | Path) -> None:
    """Header (magic, k, N, record width) then little-endian signed a(1..N)."""
    width = max(1, (max(abs(x) for x in form.a).bit_length() + 8) // 8)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, form.k, form.N, width))
        fh.write(b"".join(x.to_bytes(width, "little", signed=True) for x in form.a[1:]))


def load_cache(path: str | Path) -> HeckeEigenform:
    data = Path(path).read_bytes()
    magic, k, N, width = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise ValueError(f"{path}: not a coefficient cache")
    body = data[_HEADER.size :]
    if len(body) != N * width:
        raise ValueError(f"{path}: truncated cache ({len(body)} bytes, expected {N * width})")
    coeffs = [0] + [int.from_bytes(body[i * width : (i + 1) * width], "little", signed=True)
                    for i in range(N)]
    return HeckeEigenform.from_coefficients(k, coeffs)


def write_csv(form: HeckeEigenform, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "a_n", "lambda_n"])
        for n in range(1, form.N + 1):
            w.writerow([n, form.a[n], format(form.lam[n], ".17g")])
