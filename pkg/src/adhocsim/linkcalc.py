"""Link-throughput analysis for rate-and-relay selection under imperfect CSI.

Evaluates, by adaptive quadrature against Rayleigh / relay-selection SNR
densities:

* fixed-rate throughput   lambda_i = (1/D_i) int P_s,i(g) f(g) dg
* ideal-CSI adaptive      lambda_ideal = int max_i{P_s,i(g)/D_i} f_L(g) dg
* imperfect-CSI adaptive  with either the optimal metric (success averaged
  over the conditional SNR density given the estimate) or the simple metric
  that treats the estimate as the true SNR,

plus an independent Monte-Carlo oracle over the bivariate Rayleigh-power
model.

Estimate conventions (one law, two coordinates): ``conditional_snr_pdf``
and ``optimal_metric`` take the raw outdated-sample SNR (marginal mean
avg_snr; conditional centered at rho * gamma_hat). The averaged
throughputs integrate over the predicted SNR -- mean-SNR times the squared
MMSE-predicted gain, marginal mean avg_snr*(1 - nmse) -- whose conditional
is centered directly on the estimate; the two differ only by the rescaling
predicted = rho * raw.
"""

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from . import phy80211b as phy

__all__ = [
    "CsiQuality",
    "ThroughputResult",
    "MonteCarloResult",
    "QuadratureError",
    "DegenerateCsiError",
    "conditional_snr_pdf",
    "fixed_rate_throughput",
    "ideal_adaptive_throughput",
    "optimal_metric",
    "suboptimal_metric",
    "avg_imperfect_throughput",
    "optimal_rate_thresholds",
    "monte_carlo_oracle",
    "selection_snr_pdf",
    "write_curves_csv",
    "CURVE_COLUMNS",
]


# ---- types -----------------------------------------------------------------


@dataclass(frozen=True)
class CsiQuality:
    """Estimate quality: correlation rho and NMSE sigma^2 = 1 - rho."""

    rho: float
    nmse: float

    def __post_init__(self):
        if not (0.0 <= self.nmse <= 1.0):
            raise ValueError(f"nmse out of [0, 1]: {self.nmse}")
        if abs(self.rho + self.nmse - 1.0) > 1e-12:
            raise ValueError("rho + nmse must equal 1")

    @classmethod
    def from_nmse(cls, nmse):
        return cls(1.0 - nmse, nmse)

    @classmethod
    def from_rho(cls, rho):
        return cls(rho, 1.0 - rho)


@dataclass(frozen=True)
class ThroughputResult:
    packets_per_second: float
    method: str  # FIXED | IDEAL | OPTIMAL | SUBOPTIMAL
    quadrature_error: float
    rate: str = ""


@dataclass(frozen=True)
class MonteCarloResult:
    packets_per_second: float
    stderr: float
    trials: int
    method: str

    @property
    def ci95(self):
        h = 1.96 * self.stderr
        return (self.packets_per_second - h, self.packets_per_second + h)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to meet tolerance; carries partial value."""

    def __init__(self, message, partial, err_estimate):
        super().__init__(message)
        self.partial = partial
        self.err_estimate = err_estimate


class DegenerateCsiError(ValueError):
    """rho = 1: the conditional density is a point mass at the estimate."""


# ---- adaptive quadrature core ------------------------------------------------

_GL15 = np.polynomial.legendre.leggauss(15)
_GL31 = np.polynomial.legendre.leggauss(31)


def _panel_eval(f, lo, hi):
    """Embedded 15/31-node Gauss-Legendre estimates per panel (batched)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x15 = mid[:, None] + half[:, None] * _GL15[0]
    x31 = mid[:, None] + half[:, None] * _GL31[0]
    y = f(np.concatenate([x15.ravel(), x31.ravel()]))
    y15 = y[: x15.size].reshape(x15.shape)
    y31 = y[x15.size :].reshape(x31.shape)
    i15 = (y15 @ _GL15[1]) * half
    i31 = (y31 @ _GL31[1]) * half
    return i31, np.abs(i31 - i15)


def adaptive_quadrature(f, edges, rel_tol=1e-6, abs_tol=0.0, max_rounds=40):
    """Integrate vectorized ``f`` over panels given by ``edges``.

    Panels whose embedded error estimate exceeds their share of the budget
    are bisected, all pending evaluations batched per round. Returns
    (value, error_estimate); raises QuadratureError if the budget is never
    met.
    """
    edges = np.asarray(sorted(set(float(e) for e in edges)))
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    val, err = _panel_eval(f, lo, hi)
    for _ in range(max_rounds):
        total = float(val.sum())
        tol = max(rel_tol * abs(total), abs_tol)
        if err.sum() <= tol:
            return total, float(err.sum())
        budget = tol / max(len(lo), 1)
        split = err > 0.5 * budget
        if not split.any():
            split = err == err.max()
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[~split], lo[split], mid])
        new_hi = np.concatenate([hi[~split], mid, hi[split]])
        new_val, new_err = _panel_eval(f, np.concatenate([lo[split], mid]), np.concatenate([mid, hi[split]]))
        val = np.concatenate([val[~split], new_val])
        err = np.concatenate([err[~split], new_err])
        lo, hi = new_lo, new_hi
    raise QuadratureError(
        f"quadrature did not converge: err={err.sum():.3e} vs tol={tol:.3e}",
        partial=float(val.sum()),
        err_estimate=float(err.sum()),
    )


# ---- SNR densities -----------------------------------------------------------


def selection_snr_pdf(g, mean, L):
    """Density of the max of L iid exponential SNRs with the given mean."""
    g = np.asarray(g, dtype=np.float64)
    e = np.exp(-g / mean)
    return (L / mean) * e * (1.0 - e) ** (L - 1)


def _noncentral_pdf(g, center, scale):
    """Conditional SNR density: noncentral-chi-square-shaped, unit mass.

    f(g) = i0e(2 sqrt(g*center)/scale) * exp(-(sqrt(g)-sqrt(center))^2/scale)
           / scale
    evaluated in exponentially-scaled form, stable for any center/scale.
    """
    g = np.asarray(g, dtype=np.float64)
    rt = np.sqrt(np.maximum(g, 0.0))
    rc = math.sqrt(max(center, 0.0))
    z = 2.0 * rt * rc / scale
    return kernels.i0e(z) * np.exp(-((rt - rc) ** 2) / scale) / scale


def conditional_snr_pdf(gamma, gamma_hat, q, avg_snr):
    """Density of the true SNR given a raw outdated-sample SNR estimate.

    Standard bivariate Rayleigh-power form: center rho*gamma_hat, spread
    avg_snr*(1-rho). rho = 1 is degenerate (point mass at gamma_hat).
    """
    if q.rho >= 1.0:
        raise DegenerateCsiError("rho = 1: density degenerates to a point mass")
    return _noncentral_pdf(gamma, q.rho * gamma_hat, avg_snr * q.nmse)


# ---- throughput operations ---------------------------------------------------


@lru_cache(maxsize=8)
def _envelope_crossings(nbits):
    """SNRs where the argmax of P_s,i(g)/D_i switches between rates."""
    g = np.geomspace(1e-3, 1e4, 4000)
    idx = np.argmax(phy.rate_metric_curves(g, nbits), axis=0)
    crossings = []
    for k in np.flatnonzero(np.diff(idx)):
        lo, hi = g[k], g[k + 1]
        i, j = idx[k], idx[k + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            v = phy.rate_metric_curves(np.array([mid]), nbits)
            if v[i, 0] >= v[j, 0]:
                lo = mid
            else:
                hi = mid
        crossings.append(0.5 * (lo + hi))
    return tuple(crossings)


def _envelope(g, nbits):
    return phy.rate_metric_curves(g, nbits).max(axis=0)


def _gamma_max(avg_snr, L):
    return avg_snr * (30.0 + 10.0 * math.log(L + 1.0))


def _base_edges(avg_snr, gmax, nbits, with_crossings):
    edges = {0.0, avg_snr / 4.0, avg_snr, 3.0 * avg_snr, gmax}
    if with_crossings:
        edges.update(c for c in _envelope_crossings(nbits) if c < gmax)
    return [e for e in sorted(edges) if e <= gmax]


def fixed_rate_throughput(rate, avg_snr, nbits=phy.DATA_EXCHANGE_BITS):
    """Rayleigh-averaged throughput of one fixed rate, packets/second."""
    if avg_snr <= 0:
        raise ValueError("avg_snr must be positive")
    d = phy.frame_duration(rate)
    gmax = _gamma_max(avg_snr, 1)

    def f(g):
        pb = phy.bit_error_prob(rate, g)
        return kernels.packet_success(pb, float(nbits)) * np.exp(-g / avg_snr) / avg_snr

    val, err = adaptive_quadrature(f, _base_edges(avg_snr, gmax, nbits, False))
    tail = math.exp(-gmax / avg_snr)
    return ThroughputResult((val) / d, "FIXED", (err + tail) / d, rate.id)


def ideal_adaptive_throughput(avg_snr, L, nbits=phy.DATA_EXCHANGE_BITS):
    """Throughput of joint rate + best-of-L relay selection with perfect CSI."""
    if avg_snr <= 0 or L < 1:
        raise ValueError("avg_snr must be positive and L >= 1")
    gmax = _gamma_max(avg_snr, L)

    def f(g):
        return _envelope(g, nbits) * selection_snr_pdf(g, avg_snr, L)

    val, err = adaptive_quadrature(f, _base_edges(avg_snr, gmax, nbits, True))
    tail = L * math.exp(-gmax / avg_snr) / phy.DURATIONS.min()
    return ThroughputResult(val, "IDEAL", err + tail)


def suboptimal_metric(gamma_hat, nbits=phy.DATA_EXCHANGE_BITS):
    """Best (rate, P_s/D) treating the SNR estimate as the true SNR."""
    if gamma_hat < 0:
        raise ValueError("gamma_hat must be >= 0")
    rate, val = phy.best_rate(gamma_hat, nbits)
    return rate, val


_U_SPAN = 10.0  # Gaussian cutoff in sqrt-SNR units; exp(-100) tail


@lru_cache(maxsize=1)
def _unit_rule():
    """Composite Gauss-Legendre rule on [0, 1]: 16 panels x 16 nodes."""
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, 1.0, 17)
    nodes = (0.5 * (edges[1:] + edges[:-1])[:, None] + 0.5 * np.diff(edges)[:, None] * x).ravel()
    weights = (0.5 * np.diff(edges)[:, None] * w).ravel()
    return nodes, weights


def _conditional_success(gamma_hat, scale, nbits):
    """P(success) of each rate averaged over the conditional SNR density.

    gamma_hat may be an array. Works in sqrt-SNR coordinates, where the
    density is a unit-width bump around sqrt(gamma_hat); the reference rule
    is affinely mapped onto [max(0, sqrt(gh) - span*s), sqrt(gh) + span*s]
    per element, so the g = 0 boundary is handled exactly.
    Returns (values[4, n], norm_defect[n]).
    """
    gh = np.atleast_1d(np.asarray(gamma_hat, dtype=np.float64))
    xr, wr = _unit_rule()
    s = math.sqrt(scale)
    rc = np.sqrt(gh)[:, None]
    lo = np.maximum(rc - _U_SPAN * s, 0.0)
    hi = rc + _U_SPAN * s
    rt = lo + (hi - lo) * xr
    g = rt * rt
    z = 2.0 * rt * rc / scale
    dens = kernels.i0e(z.ravel()).reshape(z.shape) * np.exp(-((rt - rc) ** 2) / scale) / scale
    w = dens * 2.0 * rt * (hi - lo) * wr  # d(gamma) = 2 sqrt(gamma) d sqrt(gamma)
    norm = w.sum(axis=1)
    flat = g.ravel()
    vals = np.empty((len(phy.RATES), gh.size))
    for i, rate in enumerate(phy.RATES):
        ps = kernels.packet_success(phy.bit_error_prob(rate, flat), float(nbits))
        vals[i] = (ps.reshape(g.shape) * w).sum(axis=1)
    return vals, np.abs(1.0 - norm)


def optimal_metric(gamma_hat, q, avg_snr, nbits=phy.DATA_EXCHANGE_BITS):
    """Best (rate, value) maximizing conditional expected success per second.

    ``gamma_hat`` is the raw outdated-sample SNR (marginal mean avg_snr),
    matching ``conditional_snr_pdf``: the conditional center is
    rho*gamma_hat, so at rho = 0 the value is estimate-independent and at
    rho -> 1 it collapses onto the simple metric. The predicted-SNR view
    used by the averaged throughput is the same function at center
    rho*gamma_hat.
    """
    if gamma_hat < 0:
        raise ValueError("gamma_hat must be >= 0")
    if q.nmse <= 0.0:
        return suboptimal_metric(gamma_hat, nbits)
    vals, _ = _conditional_success(q.rho * gamma_hat, avg_snr * q.nmse, nbits)
    per_rate = vals[:, 0] / phy.DURATIONS
    i = int(np.argmax(per_rate))
    return phy.RATES[i], float(per_rate[i])


def _optimal_metric_curve(gamma_hats, q, avg_snr, nbits):
    """(metric value, argmax rate index) for an array of predicted SNRs."""
    vals, defect = _conditional_success(gamma_hats, avg_snr * q.nmse, nbits)
    per_rate = vals / phy.DURATIONS[:, None]
    idx = np.argmax(per_rate, axis=0)
    return per_rate.max(axis=0), idx, defect


def optimal_rate_thresholds(avg_snr, q, nbits=phy.DATA_EXCHANGE_BITS, gh_max=None):
    """Predicted-SNR boundaries where the optimal rate decision switches.

    Returns (boundaries, rates): rates[k] applies on
    (boundaries[k-1], boundaries[k]) with implicit 0 and +inf at the ends.
    """
    if q.nmse <= 0.0:
        bounds = list(_envelope_crossings(nbits))
        g = np.array([0.0] + bounds) + np.concatenate([np.diff([0.0] + bounds) / 2, [1.0]])
        idx = np.argmax(phy.rate_metric_curves(g, nbits), axis=0)
        return np.asarray(bounds), [phy.RATES[i] for i in idx]
    if gh_max is None:
        gh_max = _gamma_max(avg_snr * q.rho + avg_snr * 0.05, 4)
    grid = np.concatenate([[0.0], np.geomspace(1e-4 * avg_snr, gh_max, 240)])
    _, idx, _ = _optimal_metric_curve(grid, q, avg_snr, nbits)
    bounds = []
    rates = [phy.RATES[idx[0]]]
    for k in np.flatnonzero(np.diff(idx)):
        lo, hi = grid[k], grid[k + 1]
        i, j = idx[k], idx[k + 1]
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            _, im, _ = _optimal_metric_curve(np.array([mid]), q, avg_snr, nbits)
            if im[0] == i:
                lo = mid
            else:
                hi = mid
        bounds.append(0.5 * (lo + hi))
        rates.append(phy.RATES[idx[k + 1]])
    return np.asarray(bounds), rates


def avg_imperfect_throughput(
    avg_snr, L, q, metric="SUBOPTIMAL", nbits=phy.DATA_EXCHANGE_BITS
):
    """Average throughput of rate-and-relay selection with imperfect CSI.

    Integrates the chosen metric against the selection density of the best
    predicted SNR among L candidates (mean avg_snr*(1-nmse) per candidate).
    """
    if metric not in ("OPTIMAL", "SUBOPTIMAL"):
        raise ValueError(f"unknown metric {metric!r}")
    if avg_snr <= 0 or L < 1:
        raise ValueError("avg_snr must be positive and L >= 1")
    if q.nmse <= 0.0:
        r = ideal_adaptive_throughput(avg_snr, L, nbits)
        return ThroughputResult(r.packets_per_second, metric, r.quadrature_error)
    if q.nmse >= 1.0:
        # estimate identically zero
        if metric == "SUBOPTIMAL":
            rate, val = suboptimal_metric(0.0, nbits)
            return ThroughputResult(val, metric, 0.0, rate.id)
        rate, val = optimal_metric(0.0, q, avg_snr, nbits)
        return ThroughputResult(val, metric, 0.0, rate.id)

    mean = avg_snr * q.rho
    gh_max = _gamma_max(mean, L)
    edges = {0.0, mean / 4.0, mean, 3.0 * mean, gh_max}

    if metric == "SUBOPTIMAL":
        edges.update(c for c in _envelope_crossings(nbits) if c < gh_max)

        def f(gh):
            return _envelope(gh, nbits) * selection_snr_pdf(gh, mean, L)

        inner_err = 0.0
    else:
        bounds, _ = optimal_rate_thresholds(avg_snr, q, nbits, gh_max)
        edges.update(b for b in bounds if b < gh_max)
        defect_cap = [0.0]

        def f(gh):
            vals, idx, defect = _optimal_metric_curve(gh, q, avg_snr, nbits)
            defect_cap[0] = max(defect_cap[0], float(defect.max(initial=0.0)))
            return vals * selection_snr_pdf(gh, mean, L)

        inner_err = None  # filled after integration

    val, err = adaptive_quadrature(f, sorted(edges))
    tail = L * math.exp(-gh_max / mean) / phy.DURATIONS.min()
    if inner_err is None:
        inner_err = defect_cap[0] / phy.DURATIONS.min()
    return ThroughputResult(val, metric, err + tail + inner_err)


# ---- Monte-Carlo oracle --------------------------------------------------------


def monte_carlo_oracle(
    avg_snr,
    L,
    q,
    metric="SUBOPTIMAL",
    nbits=phy.DATA_EXCHANGE_BITS,
    trials=100_000,
    seed=0,
):
    """Sampling estimate of the quadrature results, for verification.

    Draws L iid (true gain, predicted gain) pairs per trial from the Gaussian
    fading model, selects the candidate with the best predicted SNR, then
    scores the chosen metric: the simple metric scores its own value at the
    estimate (the quantity the suboptimal average integrates); the optimal
    metric applies the precomputed rate-decision thresholds and scores the
    realized success at the true SNR, an unbiased estimate of the optimal
    average by the tower property.
    """
    if trials < 10_000:
        raise ValueError("trials must be >= 10000")
    rng = np.random.default_rng(seed)
    rho, s2 = q.rho, q.nmse
    scores = np.empty(trials)
    if metric == "OPTIMAL" and s2 > 0.0:
        bounds, rates = optimal_rate_thresholds(avg_snr, q, nbits)
    elif metric == "SUBOPTIMAL" or s2 == 0.0:
        bounds, rates = None, None
    else:
        raise ValueError(f"unknown metric {metric!r}")

    chunk = 200_000 // max(L, 1) + 1
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        hhat = math.sqrt(rho / 2.0) * (
            rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
        )
        err = math.sqrt(s2 / 2.0) * (
            rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))
        )
        h = hhat + err
        ghat = avg_snr * np.abs(hhat) ** 2
        g = avg_snr * np.abs(h) ** 2
        pick = np.argmax(ghat, axis=1)
        rows = np.arange(n)
        ghat_s = ghat[rows, pick]
        g_s = g[rows, pick]
        if s2 == 0.0:
            scores[done : done + n] = phy.rate_metric_curves(g_s, nbits).max(axis=0)
        elif metric == "SUBOPTIMAL":
            scores[done : done + n] = phy.rate_metric_curves(ghat_s, nbits).max(axis=0)
        else:
            which = np.digitize(ghat_s, bounds)
            sc = np.zeros(n)
            for k, rate in enumerate(rates):
                m = which == k
                if m.any():
                    ps = kernels.packet_success(
                        phy.bit_error_prob(rate, g_s[m]), float(nbits)
                    )
                    sc[m] = ps / phy.frame_duration(rate)
            scores[done : done + n] = sc
        done += n
    mean = float(scores.mean())
    stderr = float(scores.std(ddof=1) / math.sqrt(trials))
    return MonteCarloResult(mean, stderr, trials, metric)


# ---- CSV emission ---------------------------------------------------------------

CURVE_COLUMNS = ["avg_snr_db", "L", "nmse", "method", "rate", "throughput_pps", "quad_err"]


def write_curves_csv(path, rows, metadata=None):
    """Write curve rows (dicts keyed by CURVE_COLUMNS) with a '#' header."""
    with open(path, "w", newline="") as fh:
        for key, val in (metadata or {}).items():
            fh.write(f"# {key}: {val}\n")
        w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)
