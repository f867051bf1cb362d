"""Expected future probabilities for a (target, candidate) pair.

Conditioning a kriging model on one hypothetical observation ``Y+`` at a
candidate point turns the future probability of any threshold event at a
target point into a bivariate-normal CDF of standardized quantities.  This
module computes the coefficient bundle linking the two points and the three
expectations used by the sampling criteria:

``q = E[P_{n+1}(x, a) 1{Y+ <= b}] = Phi_rho(b_bar, a_tilde)``
``r = E[P_{n+1}(x, a) 1{Y+ >= b}] = Phi_{-rho}(-b_bar, a_tilde)``
``h = E[P_{n+1}(x, Y+) 1{Y+ <= b}] = Phi_nu(b_bar, eta)``

with ``b_bar = (b - m_n(x+)) / s_n(x+)``, ``a_tilde = (a - m_n(x)) / s_n(x)``,
``rho = c_n(x, x+) / (s_n(x) s_n(x+))``,
``eta = (m_n(x+) - m_n(x)) / w`` and ``nu = (c_n(x, x+) - s_n^2(x+)) / (s_n(x+) w)``
where ``w^2 = s_n^2(x) + s_n^2(x+) - 2 c_n(x, x+)``.

All functions accept a single target point or an array of targets; outputs
broadcast accordingly.  Near-zero predictive scales are flagged and the
formulas take their exact deterministic limits through +-inf sentinels, so
integration grids may contain observed points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussians import bvn_cdf, norm_cdf
from .gp import GPPosterior

__all__ = ["PairGeometry", "PairLink", "pair_geometry", "link_coefficients",
           "q_prob", "r_prob", "h_prob", "standardize"]

# A predictive standard deviation below this fraction of the process scale
# means the value is numerically determined by the data.
DEGENERATE_SD_FRACTION = 1e-9
# Relative threshold on w^2 = Var(Y(x) - Y+) below which the pair is treated
# as coincident (rho = 1 limit).
COINCIDENT_FRACTION = 1e-12


def standardize(y, mean, sd, degenerate, strict: bool = False):
    """(y - mean) / sd with +-inf sentinels where the scale is degenerate.

    With ``strict=False`` the sentinel encodes P(Y <= y): ``+inf`` iff
    ``y >= mean``.  With ``strict=True`` it encodes P(Y < y): ``+inf`` iff
    ``y > mean`` — the convention needed for half-open cell bounds, so a
    deterministic value sits inside the cell whose lower bound it equals.
    """
    y, mean, sd, degenerate = np.broadcast_arrays(
        np.asarray(y, dtype=float), np.asarray(mean, dtype=float),
        np.asarray(sd, dtype=float), np.asarray(degenerate))
    safe_sd = np.where(degenerate, 1.0, sd)
    with np.errstate(invalid="ignore"):
        out = (y - mean) / safe_sd
    above = (y > mean) if strict else (y >= mean)
    out = np.where(degenerate, np.where(above, np.inf, -np.inf), out)
    return out if out.ndim else float(out)


@dataclass
class PairGeometry:
    """Threshold-free coefficients between target point(s) x and one candidate."""

    mean_x: np.ndarray
    sd_x: np.ndarray
    mean_plus: float
    sd_plus: float
    cov: np.ndarray
    rho: np.ndarray
    eta: np.ndarray
    nu: np.ndarray
    target_deterministic: np.ndarray
    candidate_deterministic: bool
    coincident: np.ndarray

    def tilde(self, a, strict: bool = False):
        """Standardize a threshold on the target side."""
        return standardize(a, self.mean_x, self.sd_x, self.target_deterministic, strict)

    def bar(self, b, strict: bool = False):
        """Standardize a threshold on the candidate side."""
        return standardize(b, self.mean_plus, self.sd_plus,
                           self.candidate_deterministic, strict)

    def link(self, a, b) -> "PairLink":
        """Bind thresholds ``a`` (target) and ``b`` (candidate)."""
        return PairLink(b_bar=self.bar(b), a_tilde=self.tilde(a),
                        rho=self.rho, eta=self.eta, nu=self.nu,
                        target_deterministic=self.target_deterministic,
                        candidate_deterministic=self.candidate_deterministic,
                        coincident=self.coincident)


@dataclass
class PairLink:
    """Standardized thresholds plus correlations for one (target, candidate) pair."""

    b_bar: float | np.ndarray
    a_tilde: float | np.ndarray
    rho: float | np.ndarray
    eta: float | np.ndarray
    nu: float | np.ndarray
    target_deterministic: bool | np.ndarray
    candidate_deterministic: bool
    coincident: bool | np.ndarray


def pair_geometry(post: GPPosterior, x, x_plus) -> PairGeometry:
    """Compute the coefficient bundle from predictive moments.

    ``x`` may be one point or an (L, d) array of targets; ``x_plus`` is a
    single candidate point.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    x_plus = np.atleast_1d(np.asarray(x_plus, dtype=float))

    bx = post.batch(X)
    bp = post.batch(x_plus[None, :])
    cov = post.cross_cov(bx, bp)[:, 0]
    geom = geometry_from_moments(bx.mean, bx.sd, float(bp.mean[0]), float(bp.sd[0]),
                                 cov, post.kernel.variance)
    if single:
        geom = PairGeometry(
            mean_x=float(geom.mean_x[0]), sd_x=float(geom.sd_x[0]),
            mean_plus=geom.mean_plus, sd_plus=geom.sd_plus,
            cov=float(geom.cov[0]), rho=float(geom.rho[0]), eta=float(geom.eta[0]),
            nu=float(geom.nu[0]), target_deterministic=bool(geom.target_deterministic[0]),
            candidate_deterministic=geom.candidate_deterministic,
            coincident=bool(geom.coincident[0]))
    return geom


def geometry_from_moments(mean_x, sd_x, mean_plus: float, sd_plus: float,
                          cov, variance: float) -> PairGeometry:
    """Build a :class:`PairGeometry` from raw predictive moments."""
    mean_x = np.atleast_1d(np.asarray(mean_x, dtype=float))
    sd_x = np.atleast_1d(np.asarray(sd_x, dtype=float))
    cov = np.atleast_1d(np.asarray(cov, dtype=float))

    scale = np.sqrt(variance)
    target_det = sd_x < DEGENERATE_SD_FRACTION * scale
    candidate_det = bool(sd_plus < DEGENERATE_SD_FRACTION * scale)
    # A point determined by the data has (numerically) zero covariance with
    # everything; zero it to keep the limits exact.
    cov = np.where(target_det, 0.0, cov)
    if candidate_det:
        cov = np.zeros_like(cov)

    denom = np.where(target_det | candidate_det, 1.0, sd_x * sd_plus)
    rho = np.clip(np.where(target_det | candidate_det, 0.0, cov / denom), -1.0, 1.0)

    w2 = np.maximum(sd_x * sd_x + sd_plus * sd_plus - 2.0 * cov, 0.0)
    coincident = w2 <= COINCIDENT_FRACTION * (sd_x * sd_x + sd_plus * sd_plus)
    w = np.sqrt(np.where(coincident, 1.0, w2))
    if candidate_det:
        # Y+ is known to be mean_plus; eta degenerates to the standardized
        # position of that value at the target, nu is immaterial.
        eta = np.atleast_1d(standardize(mean_plus, mean_x, sd_x, target_det))
        nu = np.zeros_like(eta)
        coincident = np.zeros_like(target_det, dtype=bool)
    else:
        eta = np.where(coincident, 0.0, (mean_plus - mean_x) / w)
        nu = np.clip(np.where(coincident, 0.0, (cov - sd_plus * sd_plus) / (sd_plus * w)),
                     -1.0, 1.0)
    return PairGeometry(mean_x, sd_x, float(mean_plus), float(sd_plus), cov,
                        rho, eta, nu, target_det, candidate_det, coincident)


def link_coefficients(post: GPPosterior, x, x_plus, a, b) -> PairLink:
    """Coefficient bundle for thresholds ``a`` at the target and ``b`` at the
    candidate.  Degeneracies are flagged, never raised."""
    return pair_geometry(post, x, x_plus).link(a, b)


def q_prob(link: PairLink):
    """Expected future probability of Y(x) <= a restricted to Y+ <= b."""
    return bvn_cdf(link.b_bar, link.a_tilde, link.rho)


def r_prob(link: PairLink):
    """Expected future probability of Y(x) <= a restricted to Y+ >= b."""
    return bvn_cdf(-np.asarray(link.b_bar, dtype=float), link.a_tilde,
                   -np.asarray(link.rho, dtype=float))


def h_prob(link: PairLink):
    """Expected future probability of Y(x) <= Y+ restricted to Y+ <= b.

    Exact limits: a deterministic candidate reduces to an indicator times the
    current probability of beating its value; a coincident pair (the target
    *is* the candidate) reduces to ``Phi(b_bar)``.
    """
    b_bar = np.asarray(link.b_bar, dtype=float)
    if link.candidate_deterministic:
        # Y+ is known; eta already equals (m+ - m_x) / s_x in this limit.
        out = norm_cdf(b_bar) * norm_cdf(link.eta)
        return out if np.ndim(link.eta) else float(out)
    out = np.where(link.coincident, norm_cdf(b_bar),
                   bvn_cdf(b_bar, link.eta, link.nu))
    return out if out.ndim else float(out)
