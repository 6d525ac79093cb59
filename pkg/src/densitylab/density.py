"""One- and two-level densities: synthetic zero sets, explicit-formula prime sums,
and harmonic family averages assembled from Petersson traces.

Zero indexing
-------------
A ZeroSet lists the nonnegative ordinates.  Under the ``paired`` convention
every listed ordinate g gives the two indices +j, -j with values +g, -g,
even when g = 0.  Then D_2 = D_1(phi)^2 - 2 D_1(phi^2) holds exactly.
Under the ``single`` convention a zero at the central point occupies one
index only (it is its own reflection), which is how the explicit formula
counts it; the identity then picks up + n_0 phi(0)^2, n_0 the number of
central zeros.

Family averages use R = K^2 and the weights w_k = 2 h((k - 1)/K) over even k.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bessel import DEFAULT_WEIGHT, WeightFunction
from .eigenforms import HeckeEigenform
from .parallel import ordered_map
from .petersson import traces_over_weights
from .primes import primes_up_to
from .quadrature import integrate
from .rmt import KernelDensity, orthogonal_two_level_main_term, pair
from .testfunctions import TestFunction, square

CONVENTIONS = ("paired", "single")


@dataclass(frozen=True)
class ZeroSet:
    ordinates: tuple[float, ...]
    conductor_log: float
    convention: str = "paired"

    def __post_init__(self):
        ords = tuple(float(g) for g in self.ordinates)
        if any(g < 0 for g in ords):
            raise ValueError("ordinates must be nonnegative")
        if any(b < a for a, b in zip(ords, ords[1:])):
            raise ValueError("ordinates must be sorted")
        if not self.conductor_log > 0:
            raise ValueError("conductor_log must be positive")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "ordinates", ords)

    @property
    def central_count(self) -> int:
        return sum(1 for g in self.ordinates if g == 0.0)

    def signed_points(self) -> tuple[np.ndarray, np.ndarray]:
        """(index labels, scaled ordinates) over every index j != 0."""
        scale = self.conductor_log / (2.0 * math.pi)
        labels, values = [], []
        for j, g in enumerate(self.ordinates, start=1):
            labels.append(j)
            values.append(scale * g)
            if g != 0.0 or self.convention == "paired":
                labels.append(-j)
                values.append(-scale * g)
        return np.array(labels, dtype=np.int64), np.array(values)


def density_from_zeros(z: ZeroSet, n: int, tf: TestFunction) -> float:
    """D_1 or D_2 summed directly over indices, with j != +-l enforced for n = 2."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    labels, x = z.signed_points()
    if len(x) == 0:
        return 0.0
    phi = np.asarray(tf.phi(x), dtype=float)
    if n == 1:
        return math.fsum(phi.tolist())
    allowed = np.abs(labels[:, None]) != np.abs(labels[None, :])
    return math.fsum((np.outer(phi, phi)[allowed]).tolist())


def inclusion_exclusion(z: ZeroSet, tf: TestFunction, tf_sq: TestFunction | None = None) -> float:
    """D_1(phi)^2 - 2 D_1(phi^2), plus n_0 phi(0)^2 under the single convention."""
    tf_sq = tf_sq or square(tf)
    d1 = density_from_zeros(z, 1, tf)
    val = d1 * d1 - 2.0 * density_from_zeros(z, 1, tf_sq)
    if z.convention == "single":
        val += z.central_count * tf.phi0**2
    return val


# ---------------------------------------------------------------------------
# explicit formula for one form


def _prime_cutoff(radius: float, R: float, scale: float = 1.0) -> int:
    """Largest integer x with scale * log x / log R < radius."""
    return int(math.floor(R ** (radius / scale) * (1 + 1e-12)))


def prime_weights(tf: TestFunction, R: float, power: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Primes and the weights phi_hat(j log p / log R) 2 log p / (p^{j/2} log R), j = power.

    j = 1 gives the coefficients of lambda(p) in P(f; phi), j = 2 those of lambda(p^2).
    Only primes where phi_hat is nonzero are returned.
    """
    if not R > 1:
        raise ValueError("R must exceed 1")
    P = _prime_cutoff(tf.support_radius, R, power)
    ps = primes_up_to(P)
    if len(ps) == 0:
        return ps, np.zeros(0)
    logp = np.log(ps.astype(float))
    lr = math.log(R)
    w = tf.phi_hat(power * logp / lr) * 2.0 * logp / (ps.astype(float) ** (power / 2.0) * lr)
    keep = w != 0.0
    return ps[keep], w[keep]


def prime_sum_P(f: HeckeEigenform, tf: TestFunction, R: float) -> float:
    """P(f; phi) = sum_p lambda(p) / sqrt(p) phi_hat(log p / log R) 2 log p / log R."""
    ps, w = prime_weights(tf, R, 1)
    if len(ps):
        f.require(int(ps[-1]))
    return math.fsum((f.lam[ps] * w).tolist())


def prime_sum_P2(f: HeckeEigenform, tf: TestFunction, R: float, *, via_hecke: bool = False) -> float:
    """sum_p lambda(p^2) phi_hat(2 log p / log R) 2 log p / (p log R)."""
    ps, w = prime_weights(tf, R, 2)
    if not len(ps):
        return 0.0
    if via_hecke:
        f.require(int(ps[-1]))
        lam2 = f.lam[ps] ** 2 - 1.0
    else:
        f.require(int(ps[-1]) ** 2)
        lam2 = f.lam[ps * ps]
    return math.fsum((lam2 * w).tolist())


@dataclass(frozen=True)
class OneLevelExplicit:
    value: float
    main: float
    prime_p: float
    prime_p2: float
    dropped: tuple[str, ...] = ("O(log log 3N / log R) remainder of the explicit formula",)


def one_level_explicit(f: HeckeEigenform, tf: TestFunction, R: float, *, via_hecke: bool = False) -> OneLevelExplicit:
    """phi_hat(0) log(k^2)/log R + phi(0)/2 - P(f; phi) - (lambda(p^2) prime sum)."""
    main = tf.phi_hat0 * math.log(f.k**2) / math.log(R) + 0.5 * tf.phi0
    p1 = prime_sum_P(f, tf, R)
    p2 = prime_sum_P2(f, tf, R, via_hecke=via_hecke)
    return OneLevelExplicit(main - p1 - p2, main, p1, p2)


# ---------------------------------------------------------------------------
# family averages


@dataclass
class DensityReport:
    K: float
    sigma: float
    main_term: float
    prime_term: float
    prime_term_diag: float
    prime_term_offdiag: float
    rmt_target: float
    normalization: float
    value: float
    truncation_audit: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def normalized(self) -> float:
        return self.value / self.normalization

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "extra"}
        out["normalized_value"] = self.normalized
        out.update(self.extra)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


@dataclass
class _TraceTable:
    """Per-weight traces Delta_k(m, n) for the (m, n) pairs a family average needs."""

    ks: list[int]
    weights: np.ndarray
    data: dict[tuple[int, int], np.ndarray]
    bounds: dict[tuple[int, int], float]

    def vec(self, m: int, n: int) -> np.ndarray:
        return self.data[(min(m, n), max(m, n))]

    def B(self, m: int, n: int) -> float:
        return math.fsum((self.weights * self.vec(m, n)).tolist())

    def audit(self) -> dict:
        worst = max(self.bounds.values(), default=0.0)
        return {"series": "Petersson Kloosterman-Bessel", "pairs": len(self.data),
                "weights": [int(k) for k in self.ks], "max_weighted_tail_bound": worst}


def _trace_table(pairs: Sequence[tuple[int, int]], K: float, weight: WeightFunction,
                 tol: float, threads: int | None) -> _TraceTable:
    ks = [k for k in weight.k_range(K) if k >= 4]
    w = np.array([2.0 * weight((k - 1) / K) for k in ks])
    uniq = sorted({(min(m, n), max(m, n)) for m, n in pairs})
    results = list(ordered_map(lambda mn: traces_over_weights(mn[0], mn[1], ks, tol), uniq, threads))
    data = {mn: np.array([t.value for t in tv]) for mn, tv in zip(uniq, results)}
    bounds = {mn: float(np.dot(w, [t.tail_bound for t in tv])) for mn, tv in zip(uniq, results)}
    return _TraceTable(ks, w, data, bounds)


def _weighted(table: _TraceTable, per_k: np.ndarray) -> float:
    return math.fsum((table.weights * per_k).tolist())


def _log_ratio(ks: Sequence[int], K: float) -> np.ndarray:
    # log(k^2) / log R with R = K^2
    return np.log(np.asarray(ks, dtype=float)) / math.log(K)


def _bilinear(table: _TraceTable, ps: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per-k sum_p w_p Delta_k(p, 1)."""
    if not len(ps):
        return np.zeros(len(table.ks))
    terms = [wi * table.vec(int(p), 1) for p, wi in zip(ps, w)]
    return np.array([math.fsum(col) for col in zip(*terms)])


def family_average_one_level(tf: TestFunction, K: float, weight: WeightFunction = DEFAULT_WEIGHT, *,
                             tol: float = 1e-12, threads: int | None = None) -> DensityReport:
    """Harmonic family average of D_1 at R = K^2, from Petersson traces only.

    main  = sum_k w_k Delta_k(1,1) (phi_hat(0) log k^2/log R + phi(0)/2)
    prime = sum_p B(p,1) phi_hat(log p/log R) 2 log p/(sqrt p log R)
          + sum_p B(p^2,1) phi_hat(2 log p/log R) 2 log p/(p log R)
    """
    R = K * K
    p1, w1 = prime_weights(tf, R, 1)
    p2, w2 = prime_weights(tf, R, 2)
    pairs = [(1, 1)] + [(int(p), 1) for p in p1] + [(int(p) ** 2, 1) for p in p2]
    table = _trace_table(pairs, K, weight, tol, threads)
    L = _log_ratio(table.ks, K)
    d11 = table.vec(1, 1)
    main = _weighted(table, d11 * (tf.phi_hat0 * L + 0.5 * tf.phi0))
    prime_p = math.fsum(wi * table.B(int(p), 1) for p, wi in zip(p1, w1))
    prime_p2 = math.fsum(wi * table.B(int(p) ** 2, 1) for p, wi in zip(p2, w2))
    B_K = _weighted(table, d11)
    norm = weight.h_hat_0 * K
    target = pair(KernelDensity("O", 1), tf).value
    audit = [table.audit(), {"primes_p": int(len(p1)), "primes_p2": int(len(p2)),
                             "dropped": "O(log log K / log K) remainder of the explicit formula"}]
    return DensityReport(
        K=K, sigma=tf.support_radius, main_term=main, prime_term=prime_p + prime_p2,
        prime_term_diag=0.0, prime_term_offdiag=prime_p, rmt_target=target, normalization=norm,
        value=main - prime_p - prime_p2, truncation_audit=audit,
        extra={"level": 1, "R": R, "B_K": B_K, "B_K_normalized": B_K / norm,
               "prime_term_square": prime_p2, "main_term_normalized": main / norm})


def family_average_two_level(tf: TestFunction, K: float, weight: WeightFunction = DEFAULT_WEIGHT, *,
                             tol: float = 1e-12, threads: int | None = None) -> DensityReport:
    """Harmonic family average of D_2 via the explicit expansion in P(f; phi), P(f; phi^2).

    Per weight k, with L = log k / log K, A = phi_hat(0) L + phi(0)/2 and
    averages taken against Delta_k:
      D_2 ~ Delta(1,1) [phi_hat(0)^2 L^2 - 3/4 phi(0)^2 + phi_hat(0) phi(0) L - 2 (phi^2)^(0) L]
            + <P(phi)^2> + 2 <P(phi^2)> - (2 phi_hat(0) L + phi(0)) <P(phi)>.
    The lambda(p^2) sums are dropped, as in the expansion.  <P(phi)^2> is split
    into its diagonal p = q and off-diagonal parts.
    """
    R = K * K
    tf2 = square(tf)
    pa, wa = prime_weights(tf, R, 1)
    pb, wb = prime_weights(tf2, R, 1)
    pairs = [(1, 1)] + [(int(p), 1) for p in pb] + [(int(p), 1) for p in pa]
    pairs += [(int(p), int(q)) for i, p in enumerate(pa) for q in pa[i:]]
    table = _trace_table(pairs, K, weight, tol, threads)
    L = _log_ratio(table.ks, K)
    d11 = table.vec(1, 1)
    h0, p0, sq0 = tf.phi_hat0, tf.phi0, tf2.phi_hat0

    P_phi = _bilinear(table, pa, wa)
    P_sq = _bilinear(table, pb, wb)
    diag = np.zeros(len(table.ks))
    off = np.zeros(len(table.ks))
    if len(pa):
        diag = np.array([math.fsum(col) for col in zip(*[wa[i] ** 2 * table.vec(int(p), int(p))
                                                          for i, p in enumerate(pa)])])
        offs = [2.0 * wa[i] * wa[j] * table.vec(int(pa[i]), int(pa[j]))
                for i in range(len(pa)) for j in range(i + 1, len(pa))]
        if offs:
            off = np.array([math.fsum(col) for col in zip(*offs)])

    main_k = d11 * (h0 * h0 * L * L - 0.75 * p0 * p0 + h0 * p0 * L - 2.0 * sq0 * L)
    lin_k = 2.0 * P_sq - (2.0 * h0 * L + p0) * P_phi
    main = _weighted(table, main_k)
    diag_B = _weighted(table, diag)
    off_B = _weighted(table, off)
    lin = _weighted(table, lin_k)
    value = math.fsum([main, diag_B, off_B, lin])

    # the same trace data pushed through D_1(phi)^2 - 2 D_1(phi^2)
    A = h0 * L + 0.5 * p0
    Bsq = sq0 * L + 0.5 * tf2.phi0
    d1_sq = _weighted(table, d11 * A * A - 2.0 * A * P_phi + diag + off)
    d1_phi2 = _weighted(table, d11 * Bsq - P_sq)
    identity = d1_sq - 2.0 * d1_phi2

    norm = weight.h_hat_0 * K
    diag_sum, diag_int = diagonal_sum_check(tf, R)
    target = orthogonal_two_level_main_term(tf)
    audit = [table.audit(), {"primes_phi": int(len(pa)), "primes_phi_sq": int(len(pb)),
                             "dropped": "lambda(p^2) sums and O(log log k / log K) remainders"}]
    return DensityReport(
        K=K, sigma=tf.support_radius, main_term=main, prime_term=diag_B + off_B + lin,
        prime_term_diag=diag_B, prime_term_offdiag=off_B, rmt_target=target, normalization=norm,
        value=value, truncation_audit=audit,
        extra={"level": 2, "R": R, "linear_prime_terms": lin, "inclusion_exclusion_value": identity,
               "diagonal_riemann_sum": diag_sum, "diagonal_integral": diag_int,
               "main_term_normalized": main / norm})


def diagonal_sum_check(tf: TestFunction, R: float) -> tuple[float, float]:
    """(sum_p phi_hat(log p/log R)^2 (2 log p/log R)^2 / p, int_0^inf phi_hat(u)^2 4u du)."""
    ps, w = prime_weights(tf, R, 1)
    s = math.fsum((w * w).tolist())  # w_p^2 = phi_hat^2 (2 log p / log R)^2 / p
    bps = [b for b in tf.breakpoints() if b > 0]
    integral = integrate(lambda u: tf.phi_hat(u) ** 2 * 4.0 * u, 0.0, tf.support_radius,
                         tol=1e-13, breakpoints=bps).value
    return s, float(integral)
