"""Gaussian random rough surfaces by spectral synthesis."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def sample_gaussian_surface(h_rms: float, corr_length_T: float, grid_n: int, grid_step: float,
                            rng_seed: int | None = None) -> np.ndarray:
    """Periodic ``grid_n x grid_n`` height field with Gaussian statistics.

    Heights are normally distributed with standard deviation ``h_rms`` and
    autocorrelation ``exp(-tau^2 / T^2)``. White noise is shaped in the Fourier
    domain by the square root of the discrete power spectrum, which is the
    transform of the target autocorrelation sampled on the periodic grid.
    ``h_rms``, ``corr_length_T`` and ``grid_step`` share one length unit.
    """
    if grid_n < 64:
        raise ParameterError("grid_n must be >= 64")
    if not corr_length_T > 0:
        raise ParameterError("corr_length_T must be positive")
    if not 0 < grid_step <= corr_length_T / 4:
        raise ParameterError("grid_step must be in (0, T/4]")
    if h_rms == 0:
        return np.zeros((grid_n, grid_n))

    lag = np.fft.fftfreq(grid_n) * grid_n * grid_step  # signed periodic lags
    X, Y = np.meshgrid(lag, lag, indexing="ij")
    acf = np.exp(-(X**2 + Y**2) / corr_length_T**2)
    psd = np.clip(np.fft.fft2(acf).real, 0.0, None)

    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal((grid_n, grid_n))
    field = np.fft.ifft2(np.fft.fft2(noise) * np.sqrt(psd)).real
    # unit-variance white noise filtered this way has variance acf(0) = 1
    return h_rms * field
