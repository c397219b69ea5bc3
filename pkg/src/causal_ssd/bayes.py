"""Marginal likelihoods and Bayes factors for Gaussian variable subsets.

The central quantity is the Bayes factor comparing post-intervention
independence of a variable pair (H0, edge u <- v) against dependence
(H1, u -> v).  Under the objective fractional prior with unit training
sample the factor has the closed form

    BF01(n) = g(n) * (1 - r^2)^((n-1)/2),
    g(n)    = n * Gamma(n/2) / (sqrt(pi) * Gamma((n+1)/2)),

with r^2 the uncentered squared sample correlation.  The subjective-prior
formula and its fractional reduction are provided as well; all marginal
likelihoods are computed on the log scale (gamma ratios overflow for
n of a few hundred otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from causal_ssd.numerics import WishartParams, log_gamma


@dataclass(frozen=True)
class FbfConfig:
    """Fractional-prior configuration: degrees parameter and training size.

    ``a_omega=None`` resolves to T - 1 at evaluation time, the smallest
    choice keeping the fractional prior proper with a single training
    observation.
    """

    a_omega: float | None = None
    n0: int = 1

    def __post_init__(self) -> None:
        if self.n0 < 1:
            raise ValueError(f"n0 must be a positive integer, got {self.n0!r}")

    def resolve_a_omega(self, t: int) -> float:
        a = float(t - 1) if self.a_omega is None else float(self.a_omega)
        if a + self.n0 <= t - 1:
            raise ValueError(
                f"fractional prior improper: a_omega + n0 = {a + self.n0} <= T - 1 = {t - 1}"
            )
        return a


@dataclass(frozen=True)
class PairedSample:
    """Two equal-length interventional data columns with nondegenerate scale."""

    x_u: np.ndarray
    x_v: np.ndarray

    def __post_init__(self) -> None:
        xu = np.asarray(self.x_u, dtype=float)
        xv = np.asarray(self.x_v, dtype=float)
        if xu.ndim != 1 or xv.ndim != 1 or xu.shape != xv.shape:
            raise ValueError("x_u and x_v must be one-dimensional and equally long")
        if xu.size < 2:
            raise ValueError(
                "need n >= 2: the uncentered correlation of a single pair is always 1"
            )
        if not (np.all(np.isfinite(xu)) and np.all(np.isfinite(xv))):
            raise ValueError("sample values must be finite")
        if not (np.dot(xu, xu) > 0.0 and np.dot(xv, xv) > 0.0):
            raise ValueError("degenerate sample: a column has zero sum of squares")
        xu.setflags(write=False)
        xv.setflags(write=False)
        object.__setattr__(self, "x_u", xu)
        object.__setattr__(self, "x_v", xv)

    @property
    def n(self) -> int:
        return self.x_u.size

    def scatter(self) -> np.ndarray:
        """2x2 cross-product matrix of (x_u, x_v)."""
        xu, xv = self.x_u, self.x_v
        return np.array(
            [[xu @ xu, xu @ xv], [xu @ xv, xv @ xv]], dtype=float
        )


def log_g_of_n(n: int) -> float:
    """log of the closed-form Bayes-factor ceiling g(n)."""
    n = int(n)
    if n < 2:
        raise ValueError(f"g(n) requires n >= 2, got {n}")
    return math.log(n) + log_gamma(n / 2.0) - log_gamma((n + 1) / 2.0) - 0.5 * math.log(math.pi)


def g_of_n(n: int) -> float:
    """The factor g(n) = n Gamma(n/2) / (sqrt(pi) Gamma((n+1)/2)).

    Strictly increasing in n, asymptotically sqrt(2 n / pi); it is the
    supremum of the Bayes factor at sample size n, attained at r^2 = 0.
    """
    return math.exp(log_g_of_n(n))


def uncentered_correlation_sq(s: PairedSample) -> float:
    """Squared sample correlation without mean subtraction (zero-mean model)."""
    xu, xv = s.x_u, s.x_v
    return float((xu @ xv) ** 2 / ((xu @ xu) * (xv @ xv)))


def bf01(s: PairedSample) -> float:
    """Closed-form objective Bayes factor of independence vs dependence.

    Lies in (0, g(n)], equal to g(n) exactly when the columns are orthogonal;
    proportional columns give 0 (total evidence for dependence).
    """
    r2 = uncentered_correlation_sq(s)
    if r2 >= 1.0:
        return 0.0
    return math.exp(log_g_of_n(s.n) + 0.5 * (s.n - 1) * math.log1p(-r2))


def _log_marginal_from_scatter(
    s_aa: np.ndarray, n: float, u_aa: np.ndarray, a: float, t: int
) -> float:
    """Log marginal data distribution of a variable subset, from its scatter.

    ``s_aa`` and ``u_aa`` are the scatter and prior-rate blocks of the subset
    A; ``a`` the prior degrees of freedom of the T-dimensional Wishart.  With
    alpha = a - (T - |A|), the value is

      sum_j [ lG((alpha+n+1-j)/2) - lG((alpha+1-j)/2) ]
      + (alpha/2) log|U_AA| - ((alpha+n)/2) log|U_AA + S_AA|
      - (n |A| / 2) log pi.

    The pi term is the normalizing constant of the Gaussian integrals; it is
    kept so the value matches the actual integral (it cancels in every
    Bayes-factor ratio).
    """
    u_aa = np.atleast_2d(np.asarray(u_aa, dtype=float))
    s_aa = np.atleast_2d(np.asarray(s_aa, dtype=float))
    size = u_aa.shape[0]
    alpha = a - (t - size)
    if alpha - size + 1 <= 0:
        raise ValueError(f"improper prior for subset of size {size}: need a > T - 1")
    total = 0.0
    for j in range(1, size + 1):
        total += log_gamma((alpha + n + 1 - j) / 2.0) - log_gamma((alpha + 1 - j) / 2.0)
    sign_u, logdet_u = np.linalg.slogdet(u_aa)
    sign_post, logdet_post = np.linalg.slogdet(u_aa + s_aa)
    if sign_u <= 0 or sign_post <= 0:
        raise ValueError("singular prior-rate or posterior-rate block")
    total += 0.5 * alpha * logdet_u - 0.5 * (alpha + n) * logdet_post
    total -= 0.5 * n * size * math.log(math.pi)
    return total


def marginal_likelihood_subset(
    data: np.ndarray, subset: tuple[int, ...], prior: WishartParams
) -> float:
    """Log marginal likelihood of the data restricted to the given columns.

    ``data`` is an n x T matrix (n = 0 gives log 1 = 0); ``subset`` holds
    column indices.  The prior is the T-dimensional Wishart on the precision
    matrix, rate parameterization.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    t = prior.dim
    if data.shape[1] != t:
        raise ValueError(f"data has {data.shape[1]} columns but prior dimension is {t}")
    cols = tuple(int(c) for c in subset)
    if not cols or len(set(cols)) != len(cols) or not all(0 <= c < t for c in cols):
        raise ValueError(f"subset must be distinct column indices in range, got {subset!r}")
    n = data.shape[0]
    sub = data[:, cols]
    s_aa = sub.T @ sub
    u_aa = prior.rate[np.ix_(cols, cols)]
    return _log_marginal_from_scatter(s_aa, n, u_aa, prior.df, t)


def bf01_subjective(data: np.ndarray, u: int, v: int, prior: WishartParams) -> float:
    """Subjective-prior Bayes factor m(X_u) m(X_v) / m(X_{u,v})."""
    log_bf = (
        marginal_likelihood_subset(data, (u,), prior)
        + marginal_likelihood_subset(data, (v,), prior)
        - marginal_likelihood_subset(data, (u, v), prior)
    )
    return math.exp(log_bf)


def fbf_objective_bf(s: PairedSample, cfg: FbfConfig, t: int) -> float:
    """Fractional Bayes factor for the pair, under a T-variable component.

    Specializes the subjective formula with a -> a_omega + n0, n -> n - n0,
    U -> (n0/n) S and S -> ((n-n0)/n) S.  With the defaults a_omega = T - 1
    and n0 = 1 this reduces exactly to :func:`bf01`.
    """
    t = int(t)
    if t < 1:
        raise ValueError(f"component dimension must be positive, got {t}")
    n = s.n
    n0 = cfg.n0
    if n <= n0:
        raise ValueError(f"need n > n0, got n = {n}, n0 = {n0}")
    a_omega = cfg.resolve_a_omega(t)
    scatter = s.scatter()
    a_sub = a_omega + n0
    n_sub = n - n0
    u_sub = (n0 / n) * scatter
    s_sub = ((n - n0) / n) * scatter
    log_bf = (
        _log_marginal_from_scatter(s_sub[:1, :1], n_sub, u_sub[:1, :1], a_sub, t)
        + _log_marginal_from_scatter(s_sub[1:, 1:], n_sub, u_sub[1:, 1:], a_sub, t)
        - _log_marginal_from_scatter(s_sub, n_sub, u_sub, a_sub, t)
    )
    return math.exp(log_bf)
