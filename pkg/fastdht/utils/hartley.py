#!/usr/bin/env python3

"""
Fast DHT - Hartley Reference Transforms

Ground-truth definitions: the cas kernel, dense Hartley matrices, the naive
O(N^2) transform and its inverse, and the bridge to and from the DFT. Every
fast path in the package is checked against these functions.
"""

import logging
import math
from typing import Any

import numpy as np

from models import (
    ComplexSpectrum,
    DenseMatrix,
    NotRealSignalError,
    Signal,
    Spectrum,
    as_complex_spectrum,
    as_signal,
    as_spectrum,
)

logger = logging.getLogger(__name__)

# Conjugate symmetry tolerance for dft_to_dht, relative to max(1, max|F|)
SYMMETRY_TOLERANCE = 1e-9


def cas(x: float) -> float:
    """cos(x) + sin(x)"""
    return math.cos(x) + math.sin(x)


def cas_prime(x: float) -> float:
    """cos(x) - sin(x)"""
    return math.cos(x) - math.sin(x)


def hartley_matrix(n: int) -> DenseMatrix:
    """
    N x N Hartley matrix with entry (k, i) = cas(2*pi*k*i/N).

    The product k*i is reduced mod N before scaling so that symmetric
    positions evaluate the same angle bit for bit.
    """
    if n < 1:
        raise ValueError(f"Blocklength must be >= 1, got {n}")

    index = np.arange(n)
    angles = 2.0 * np.pi * (np.outer(index, index) % n) / n
    matrix = np.cos(angles) + np.sin(angles)
    matrix.setflags(write=False)
    return matrix


def naive_dht(v: Any) -> Spectrum:
    """Dense O(N^2) transform, the correctness oracle"""
    signal = as_signal(v)
    return as_spectrum(hartley_matrix(signal.size) @ signal)


def inverse_dht(spectrum: Any) -> Signal:
    values = as_spectrum(spectrum)
    return as_signal(naive_dht(values) / values.size)


def mirror_index(n: int) -> np.ndarray:
    """Index (N - k) mod N for k = 0..N-1"""
    return (-np.arange(n)) % n


def dht_to_dft(spectrum: Any) -> ComplexSpectrum:
    """F_k = ((H_k + H_{N-k}) - j (H_k - H_{N-k})) / 2"""
    h = as_spectrum(spectrum)
    mirrored = h[mirror_index(h.size)]
    return as_complex_spectrum(0.5 * (h + mirrored) - 0.5j * (h - mirrored))


def dft_to_dht(spectrum: Any) -> Spectrum:
    """H_k = Re F_k - Im F_k; the input must be the DFT of a real signal"""
    f = as_complex_spectrum(spectrum)
    asymmetry = float(np.max(np.abs(f - np.conj(f[mirror_index(f.size)]))))
    scale = max(1.0, float(np.max(np.abs(f))))
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        logger.debug(f"Rejecting spectrum with conjugate asymmetry {asymmetry:.3e}")
        raise NotRealSignalError(
            f"Spectrum is not conjugate-symmetric (max deviation {asymmetry:.3e}); "
            f"the source signal was not real"
        )
    return as_spectrum(f.real - f.imag)


def direct_dft(v: Any) -> ComplexSpectrum:
    """Explicit summation of v_i * exp(-j*2*pi*k*i/N), independent of the Hartley path"""
    signal = as_signal(v)
    n = signal.size
    result = np.zeros(n, dtype=np.complex128)
    for k in range(n):
        total = 0.0 + 0.0j
        for i in range(n):
            angle = -2.0 * math.pi * ((k * i) % n) / n
            total += signal[i] * complex(math.cos(angle), math.sin(angle))
        result[k] = total
    return as_complex_spectrum(result)
