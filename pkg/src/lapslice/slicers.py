"""Rational band-pass "slicers" over the Laplacian spectrum [0, 2] and their
eigendecomposition-free application.

A rational slicer with width control s, center a and order m has response

    g(lam) = (1/s^{2m}) / ( ((lam - a) / (2 + eps_hat))^{2m} + 1/s^{2m} )

which equals 1 at lam = a, 1/2 at |lam - a| = (2 + eps_hat)/s, and decays
like |lam - a|^{-2m} beyond. eps_hat must exceed 2/(s^{2m} - 1), the
threshold that keeps the eigenvalues of

    T = ((L - aI)/(2 + eps_hat))^{2m} + I/s^{2m}

inside (0, 1) so that T^{-1} has a convergent Neumann series.

Applying the filter to node signals is done without eigendecomposition.
The default method expands the exact rational response in Chebyshev
polynomials of L and evaluates the expansion with the three-term matvec
recurrence; the truncated Neumann product (`method="neumann"`) is retained
for reference but converges far too slowly near band centers to be usable
(T is ill-conditioned by a factor s^{2m}), so the pipeline never uses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import ConfigError, DataError
from .graph import SparseSymmetricMatrix

__all__ = [
    "SlicerParams",
    "SlicerBank",
    "RandomSignals",
    "slicer_response",
    "min_eps_hat",
    "apply_slicer",
    "exact_slicer",
    "sample_random_signals",
    "jl_min_samples",
    "chebyshev_degree",
    "DEFAULT_BANK_SIZE",
    "DEFAULT_S",
    "DEFAULT_M",
    "DEFAULT_EPS_HAT",
    "DEFAULT_P",
    "DEFAULT_ETA",
]

DEFAULT_BANK_SIZE = 20
DEFAULT_S = 40.0
DEFAULT_M = 4
DEFAULT_EPS_HAT = 0.01
DEFAULT_P = 4
DEFAULT_ETA = 64

# Chebyshev degree doubles per effort level; level 4 puts the worst-case
# absolute response error near 1e-11 for the default bank.
_CHEB_BASE_DEGREE = 80


def min_eps_hat(s: float, m: int) -> float:
    """Exclusive lower bound on eps_hat for Neumann convergence.

    Equals 2 s^{2m} / (s^{2m} - 1) - 2, computed in the algebraically
    equivalent form 2 / (s^{2m} - 1) to avoid cancellation.
    """
    if s < 2:
        raise ConfigError("s must be >= 2")
    if m < 1:
        raise ConfigError("m must be >= 1")
    return 2.0 / (s ** (2 * m) - 1.0)


@dataclass(frozen=True)
class SlicerParams:
    """Parameters of one spectrum slicer.

    kind    : "rational" (default) or "quadratic"
    s       : width control, >= 2; half-power half-width is (2 + eps_hat)/s
    a       : band center in [0, 2]
    m       : approximation order (rational kind)
    eps_hat : must exceed min_eps_hat(s, m) (rational kind)
    p       : effort level for matvec application (higher = more accurate)
    """

    a: float
    s: float = DEFAULT_S
    m: int = DEFAULT_M
    eps_hat: float = DEFAULT_EPS_HAT
    p: int = DEFAULT_P
    kind: str = "rational"

    def __post_init__(self):
        problems = []
        if self.kind not in ("rational", "quadratic"):
            problems.append(f"unknown slicer kind {self.kind!r}")
        if not 0.0 <= self.a <= 2.0:
            problems.append(f"center a must be in [0, 2], got {self.a}")
        if self.s < 2:
            problems.append(f"s must be >= 2, got {self.s}")
        if self.m < 1:
            problems.append(f"m must be >= 1, got {self.m}")
        if self.p < 1:
            problems.append(f"p must be >= 1, got {self.p}")
        if self.kind == "rational" and not problems:
            bound = min_eps_hat(self.s, self.m)
            if not self.eps_hat > bound:
                problems.append(
                    f"eps_hat must exceed {bound!r} for s={self.s}, m={self.m}"
                )
        if problems:
            raise ConfigError(problems)

    @property
    def half_power_offset(self) -> float:
        """|lam - a| at which the rational response crosses 1/2."""
        return (2.0 + self.eps_hat) / self.s


@dataclass(frozen=True)
class SlicerBank:
    """Ordered slicers with strictly increasing centers."""

    slicers: tuple[SlicerParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "slicers", tuple(self.slicers))
        centers = [sl.a for sl in self.slicers]
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ConfigError("slicer centers must be strictly increasing")

    def __len__(self) -> int:
        return len(self.slicers)

    def __iter__(self):
        return iter(self.slicers)

    def __getitem__(self, i) -> SlicerParams:
        return self.slicers[i]

    @classmethod
    def default(
        cls,
        count: int = DEFAULT_BANK_SIZE,
        s: float = DEFAULT_S,
        m: int = DEFAULT_M,
        eps_hat: float = DEFAULT_EPS_HAT,
        p: int = DEFAULT_P,
        kind: str = "rational",
    ) -> "SlicerBank":
        """Evenly tiled bank: centers (k + 1/2) * 2/count, so at the default
        s=40 the half-power widths (~0.1) tile [0, 2] into `count` slices."""
        if count < 1:
            raise ConfigError("bank size must be >= 1")
        width = 2.0 / count
        return cls(
            tuple(
                SlicerParams(
                    a=(k + 0.5) * width, s=s, m=m, eps_hat=eps_hat, p=p, kind=kind
                )
                for k in range(count)
            )
        )


def slicer_response(params: SlicerParams, lam) -> np.ndarray | float:
    """Scalar response of a slicer, vectorized over lam."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    if params.kind == "rational":
        x = (lam_arr - params.a) / (2.0 + params.eps_hat)
        sinv = params.s ** (-2.0 * params.m)
        with np.errstate(over="ignore"):
            t = x ** (2 * params.m)
        out = sinv / (t + sinv)
    else:
        # Clamped quadratic bump; the raw form 1 - ((lam - a) s / 2)^2 goes
        # negative, which is meaningless as a filter gain.
        out = np.maximum(0.0, 1.0 - ((lam_arr - params.a) * params.s / 2.0) ** 2)
    return float(out) if np.isscalar(lam) else out


def exact_slicer(es, params: SlicerParams, m: np.ndarray) -> np.ndarray:
    """Oracle application of the exact slicer response through a dense
    eigendecomposition (see `eigen.exact_filter`)."""
    from .eigen import exact_filter

    return exact_filter(es, slicer_response(params, es.values), m)


def chebyshev_degree(p: int) -> int:
    """Expansion degree used by the default application method at level p."""
    if p < 1:
        raise ConfigError("p must be >= 1")
    return _CHEB_BASE_DEGREE * (2**p)


def _chebyshev_coefficients(params: SlicerParams, degree: int) -> np.ndarray:
    # Interpolate the response at Chebyshev nodes of [0, 2]; DCT-II gives the
    # expansion coefficients in the shifted basis T_k(lam - 1).
    count = degree + 1
    theta = (np.arange(count) + 0.5) * np.pi / count
    lam = 1.0 + np.cos(theta)
    vals = slicer_response(params, lam)
    coef = scipy.fft.dct(vals, type=2) / count
    coef[0] *= 0.5
    return coef


def _apply_chebyshev(
    lap: SparseSymmetricMatrix, params: SlicerParams, m: np.ndarray, p: int
) -> np.ndarray:
    coef = _chebyshev_coefficients(params, chebyshev_degree(p))
    # Three-term recurrence in the shifted operator L - I (spectrum in [-1, 1]).
    t_prev = m
    out = coef[0] * t_prev
    t_cur = lap.matmat(m) - m
    out += coef[1] * t_cur
    for k in range(2, coef.shape[0]):
        t_next = 2.0 * (lap.matmat(t_cur) - t_cur) - t_prev
        out += coef[k] * t_next
        t_prev, t_cur = t_cur, t_next
    return out


def _apply_neumann(
    lap: SparseSymmetricMatrix, params: SlicerParams, m: np.ndarray, p: int
) -> np.ndarray:
    # Literal truncated Neumann series for T^{-1} via the telescoping product
    # prod_j (I + (I - T)^{2^j}), evaluated with matvecs only: 2^p - 1
    # applications of (I - T). Converges in theory (Lemma-style eps_hat bound
    # checked at construction) but the rate near band centers is 1 - s^{-2m},
    # so at practical p the realized response collapses toward zero; kept for
    # reference and characterization tests only.
    scale = 1.0 / (2.0 + params.eps_hat)
    sinv = params.s ** (-2.0 * params.m)

    def t_apply(z: np.ndarray) -> np.ndarray:
        w = z
        for _ in range(2 * params.m):
            w = scale * (lap.matmat(w) - params.a * w)
        return w + sinv * z

    acc = m
    for j in range(p):
        block = acc
        for _ in range(2**j):
            block = block - t_apply(block)
        acc = acc + block
    return sinv * acc


def apply_slicer(
    lap: SparseSymmetricMatrix,
    params: SlicerParams,
    m: np.ndarray,
    p: int | None = None,
    method: str = "chebyshev",
) -> np.ndarray:
    """Apply the slicer filter to the columns of m using sparse matvecs only.

    Never materializes a dense N x N operator. `p` overrides the effort level
    in `params`; with the default method the response error decreases
    geometrically in p.
    """
    m_arr = np.asarray(m, dtype=np.float64)
    squeeze = m_arr.ndim == 1
    if squeeze:
        m_arr = m_arr[:, None]
    if m_arr.shape[0] != lap.dimension:
        raise DataError(
            f"signal rows {m_arr.shape[0]} != matrix dimension {lap.dimension}"
        )
    level = params.p if p is None else p
    if level < 1:
        raise ConfigError("p must be >= 1")
    if method == "chebyshev":
        out = _apply_chebyshev(lap, params, m_arr, level)
    elif method == "neumann":
        if params.kind != "rational":
            raise ConfigError("neumann method applies to rational slicers only")
        out = _apply_neumann(lap, params, m_arr, level)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return out[:, 0] if squeeze else out


@dataclass(frozen=True)
class RandomSignals:
    """Gaussian random node signals: entries i.i.d. N(0, 1/eta)."""

    matrix: np.ndarray
    eta: int
    seed: int = field(compare=False, default=0)

    @property
    def num_nodes(self) -> int:
        return int(self.matrix.shape[0])


def sample_random_signals(n: int, eta: int, seed: int = 0) -> RandomSignals:
    """Draw an n x eta matrix of i.i.d. N(0, 1/eta) entries, deterministic
    given the seed."""
    if n < 1:
        raise DataError("n must be >= 1")
    if eta < 1:
        raise DataError("eta must be >= 1")
    rng = np.random.default_rng(seed)
    mat = rng.normal(0.0, 1.0 / math.sqrt(eta), size=(n, eta))
    mat.flags.writeable = False
    return RandomSignals(matrix=mat, eta=eta, seed=seed)


def jl_min_samples(n_nodes, eps: float, beta: float) -> int:
    """Smallest random-signal count guaranteeing the (1 +- eps) pairwise
    distance sandwich with probability >= 1 - N^{-beta}.

    ceil of (4 + 2 beta) / (eps^2/2 - eps^3/3) * ln(N).
    """
    if not 0.0 < eps < 1.0:
        raise ConfigError("eps must be in (0, 1)")
    if beta <= 0.0:
        raise ConfigError("beta must be > 0")
    if n_nodes <= 1:
        raise ConfigError("n_nodes must be > 1")
    eta0 = (4.0 + 2.0 * beta) / (eps**2 / 2.0 - eps**3 / 3.0) * math.log(n_nodes)
    return math.ceil(eta0)
