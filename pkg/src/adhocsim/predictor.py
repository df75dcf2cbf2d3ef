"""Linear MMSE prediction of the complex fading gain from noisy pilots.

A CTS frame carries 50 pilot symbols at 100 kHz; the sender predicts the
reciprocal channel ``horizon_s`` ahead of the last pilot with a Wiener
filter designed from the Jakes autocorrelation:

    w = (R + I/snr)^-1 r,   R_jk = J0(2 pi f_d (j-k)/f_p),
                            r_k  = J0(2 pi f_d (tau + k/f_p))

and the analytic prediction NMSE is 1 - r^T w. The outdated-sample scheme
(no prediction, single noiseless measurement aged tau) has NMSE
1 - J0^2(2 pi f_d tau) for comparison.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "PredictorConfig",
    "PilotBlock",
    "design_predictor",
    "predict_gain",
    "analytic_mse",
    "outdated_mse",
    "coefficient_cache",
]

PILOTS_PER_CTS = 50


@dataclass(frozen=True)
class PredictorConfig:
    pilot_rate_hz: float = 1e5
    pilot_snr_db: float = 30.0
    order: int = PILOTS_PER_CTS
    horizon_s: float = 0.0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.horizon_s < 0:
            raise ValueError("horizon must be >= 0")
        if self.pilot_rate_hz <= 0:
            raise ValueError("pilot rate must be positive")

    @property
    def pilot_snr(self):
        return 10.0 ** (self.pilot_snr_db / 10.0)


@dataclass(frozen=True)
class PilotBlock:
    """Noisy pilot observations y_k = h(t_k) + n_k, uniformly spaced."""

    observations: np.ndarray  # complex, time-ascending
    timestamps: np.ndarray

    def __post_init__(self):
        if len(self.observations) != len(self.timestamps):
            raise ValueError("observations and timestamps must align")


def _design(fd, cfg):
    if fd < 0:
        raise ValueError("fd must be >= 0")
    if cfg.pilot_rate_hz <= 2.0 * fd:
        raise ValueError("pilot rate must exceed twice the Doppler frequency")
    p = cfg.order
    k = np.arange(p)
    lags = (k[:, None] - k[None, :]) / cfg.pilot_rate_hz
    r_mat = kernels.j0(2.0 * math.pi * fd * np.abs(lags).ravel()).reshape(p, p)
    r_mat = r_mat + np.eye(p) / cfg.pilot_snr
    r_vec = kernels.j0(2.0 * math.pi * fd * (cfg.horizon_s + k / cfg.pilot_rate_hz))
    try:
        w = np.linalg.solve(r_mat, r_vec)
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(r_mat, r_vec, rcond=None)[0]
    return w, r_vec


def design_predictor(fd, cfg):
    """Wiener coefficients; w[k] weighs the k-th pilot back from the last."""
    return _design(fd, cfg)[0]


def analytic_mse(fd, cfg):
    """Predicted-gain NMSE sigma^2 = 1 - r^T (R + I/snr)^-1 r, in [0, 1]."""
    w, r_vec = _design(fd, cfg)
    return float(np.clip(1.0 - r_vec @ w, 0.0, 1.0))


def outdated_mse(fd, tau):
    """NMSE of an MMSE-scaled single outdated sample: 1 - J0^2(2 pi fd tau)."""
    if fd < 0 or tau < 0:
        raise ValueError("fd and tau must be >= 0")
    rho = float(kernels.j0(np.array([2.0 * math.pi * fd * tau]))[0])
    return 1.0 - rho * rho


def predict_gain(block, coeffs, avg_snr=1.0):
    """Apply the filter: hhat = sum_k w[k] y[last-k]; returns (hhat, snr_hat).

    snr_hat = avg_snr * |hhat|^2, the predicted-SNR quantity the selection
    metric consumes.
    """
    y = np.asarray(block.observations, dtype=np.complex128)
    p = len(coeffs)
    if len(y) < p:
        raise ValueError("pilot block shorter than filter order")
    hhat = complex(np.dot(np.conj(coeffs), y[::-1][:p]))
    return hhat, avg_snr * abs(hhat) ** 2


class coefficient_cache:
    """Memoizes Wiener designs; Doppler quantized to 0.1 Hz for reuse."""

    def __init__(self, maxsize=4096):
        self._store = {}
        self._maxsize = maxsize

    def get(self, fd, cfg):
        key = (round(fd, 1), round(cfg.horizon_s * 1e7), cfg.order, cfg.pilot_snr_db, cfg.pilot_rate_hz)
        w = self._store.get(key)
        if w is None:
            w = design_predictor(round(fd, 1), cfg)
            if len(self._store) >= self._maxsize:
                self._store.clear()
            self._store[key] = w
        return w
