"""Frequency-domain dependence: Fourier coefficients, smoothed periodogram
matrices, band coherence and coherence-derived distances.

Frequencies are handled internally in cycles per sample on the Fourier grid
``k / T``; bands are given in Hz and converted with the sampling rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericalGuardError
from .sim import TimeSeriesPanel

KERNELS = ("rectangular", "parzen")
TRANSFORMS = ("one_minus", "sqrt_one_minus_sq")

DEFAULT_BANDS = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 12.0),
    "beta": (12.0, 30.0),
    "gamma": (30.0, 50.0),
}


def default_bandwidth(T: int) -> float:
    """``4 / sqrt(T)`` cycles/sample, capped at 1/4 so very short series stay valid."""
    return min(4.0 / np.sqrt(T), 0.25)


def _full_coefficients(x: np.ndarray, demean: bool = False) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if demean:
        x = x - x.mean(axis=1, keepdims=True)
    T = x.shape[1]
    # time index runs 1..T, hence the extra phase factor on the FFT (which sums from 0)
    phase = np.exp(-2j * np.pi * np.arange(T) / T)
    return np.fft.fft(x, axis=1) * phase / np.sqrt(T)


def fourier_coefficients(panel: TimeSeriesPanel | np.ndarray, demean: bool = False) -> np.ndarray:
    """Normalised Fourier coefficients on the one-sided grid.

    ``d_i(w_k) = T^{-1/2} sum_{t=1..T} x_i(t) exp(-2 pi i t w_k)`` for
    ``w_k = k/T``, ``k = 0..floor(T/2)``.  Returns a complex ``(P, K)`` array.
    """
    x = panel.values if isinstance(panel, TimeSeriesPanel) else panel
    d = _full_coefficients(x, demean=demean)
    return d[:, : d.shape[1] // 2 + 1]


def kernel_weights(kernel: str, bandwidth: float, T: int) -> np.ndarray:
    """Normalised kernel weights for integer frequency offsets ``-m..m``.

    Offsets are included when ``|offset / T| <= bandwidth``.  Raises
    ``NumericalGuardError`` when fewer than three offsets get positive
    weight, since the smoothed matrix would then be (nearly) rank one.
    """
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if not (0.0 < bandwidth < 0.5):
        raise ConfigError(f"bandwidth must lie in (0, 0.5) cycles/sample, got {float(bandwidth):g}")
    m = int(np.floor(bandwidth * T + 1e-9))
    offsets = np.arange(-m, m + 1)
    if kernel == "rectangular":
        w = np.ones(offsets.size)
    else:
        u = np.abs(offsets) / (bandwidth * T)
        w = np.where(u <= 0.5, 1 - 6 * u**2 + 6 * u**3, 2 * np.clip(1 - u, 0, None) ** 3)
    n_support = int(np.count_nonzero(w > 0))
    if n_support < 3 or 2 * m + 1 > T:
        raise NumericalGuardError(
            f"bandwidth {bandwidth:.4g} gives {n_support} frequencies in the {kernel} kernel support "
            f"(T={T}); at least 3 are needed for a non-degenerate coherence estimate"
        )
    return w / w.sum()


@dataclass
class SpectralMatrix:
    """Smoothed cross-spectral matrices on the one-sided Fourier grid."""

    freqs: np.ndarray          # (K,) cycles/sample
    values: np.ndarray         # (K, P, P) complex Hermitian
    bandwidth: float
    kernel: str
    SR: float = 1.0
    labels: list[str] = field(default_factory=list)

    @property
    def P(self) -> int:
        return self.values.shape[1]

    @property
    def freqs_hz(self) -> np.ndarray:
        return self.freqs * self.SR

    def coherence(self) -> np.ndarray:
        """Pointwise coherence ``|f_ij|^2 / (f_ii f_jj)`` at every grid frequency, (K, P, P)."""
        diag = np.einsum("kii->ki", self.values).real
        if np.any(diag <= 0):
            raise NumericalGuardError("a channel has zero smoothed power; coherence is undefined")
        return np.abs(self.values) ** 2 / (diag[:, :, None] * diag[:, None, :])


def smoothed_cross_spectrum(panel: TimeSeriesPanel, kernel: str = "rectangular",
                            bandwidth: float | None = None, demean: bool = False) -> SpectralMatrix:
    """Kernel-smoothed periodogram matrix.

    ``f(w_k) = sum_j K_h(w_j - w_k) d(w_j) d(w_j)^*`` with normalised weights
    over Fourier frequencies ``w_j`` within the kernel support.  The grid is
    treated as periodic, so windows near 0 and 1/2 wrap onto negative
    frequencies.  The upper triangle is computed and mirrored, which makes the
    result exactly Hermitian.
    """
    T = panel.T
    h = default_bandwidth(T) if bandwidth is None else float(bandwidth)
    w = kernel_weights(kernel, h, T)
    m = (w.size - 1) // 2
    circ = np.zeros(T)
    circ[np.arange(-m, m + 1) % T] = w
    W = np.fft.fft(circ)

    d = _full_coefficients(panel.values, demean=demean)
    P = d.shape[0]
    iu, ju = np.triu_indices(P)
    I = d[iu] * np.conj(d[ju])                      # (npairs, T) raw cross-periodogram
    # sum_m w[m] I[k+m] == sum_m w[m] I[k-m] because w is symmetric
    smoothed = np.fft.ifft(np.fft.fft(I, axis=1) * W, axis=1)
    K = T // 2 + 1
    smoothed = smoothed[:, :K]

    values = np.empty((K, P, P), dtype=complex)
    values[:, iu, ju] = smoothed.T
    values[:, ju, iu] = np.conj(smoothed.T)
    idx = np.arange(P)
    values[:, idx, idx] = np.clip(values[:, idx, idx].real, 0.0, None)
    return SpectralMatrix(freqs=np.arange(K) / T, values=values, bandwidth=h, kernel=kernel,
                          SR=panel.SR, labels=list(panel.channel_labels))


@dataclass
class CoherenceMatrix:
    values: np.ndarray
    band: tuple[float, float]
    SR: float
    labels: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not self.labels:
            self.labels = [f"ch{i + 1}" for i in range(self.values.shape[0])]


@dataclass
class DistanceMatrix:
    """Symmetric nonnegative dissimilarities with zero diagonal."""

    values: np.ndarray
    labels: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        D = np.asarray(self.values, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise DataError(f"distance matrix must be square, got shape {D.shape}")
        if not np.all(np.isfinite(D)):
            raise DataError("distance matrix contains non-finite entries")
        if np.any(D < 0):
            raise DataError("distance matrix has negative entries")
        if not np.array_equal(D, D.T):
            raise DataError("distance matrix is not symmetric")
        if np.any(np.diag(D) != 0):
            raise DataError("distance matrix diagonal must be zero")
        self.values = D
        if not self.labels:
            self.labels = [f"v{i}" for i in range(D.shape[0])]

    @property
    def P(self) -> int:
        return self.values.shape[0]


def band_indices(freqs_hz: np.ndarray, band_hz: tuple[float, float]) -> np.ndarray:
    low, high = map(float, band_hz)
    if not (0 <= low < high):
        raise ConfigError(f"invalid band {band_hz!r}")
    idx = np.flatnonzero((freqs_hz >= low) & (freqs_hz <= high))
    if idx.size == 0:
        spacing = freqs_hz[1] - freqs_hz[0] if freqs_hz.size > 1 else float("nan")
        raise DataError(f"band {low:g}-{high:g} Hz contains no Fourier frequency (grid spacing {spacing:.4g} Hz)")
    return idx


def band_coherence(spec: SpectralMatrix, band_hz: tuple[float, float], SR: float | None = None) -> CoherenceMatrix:
    """Coherence averaged over the grid frequencies inside ``[low, high]`` Hz."""
    SR = spec.SR if SR is None else float(SR)
    if band_hz[1] > SR / 2 + 1e-12:
        raise ConfigError(f"band {band_hz!r} exceeds the Nyquist frequency {SR / 2:g} Hz")
    idx = band_indices(spec.freqs * SR, band_hz)
    sub = SpectralMatrix(spec.freqs[idx], spec.values[idx], spec.bandwidth, spec.kernel, SR, spec.labels)
    C = sub.coherence().mean(axis=0)
    C = np.clip((C + C.T) / 2, 0.0, 1.0)
    np.fill_diagonal(C, 1.0)
    meta = {"kernel": spec.kernel, "bandwidth": spec.bandwidth, "n_freqs": int(idx.size)}
    return CoherenceMatrix(C, band=(float(band_hz[0]), float(band_hz[1])), SR=SR, labels=list(spec.labels), meta=meta)


def coherence_to_distance(C: CoherenceMatrix, transform: str = "one_minus") -> DistanceMatrix:
    """Map coherence to a dissimilarity with a decreasing transform.

    ``one_minus``: ``1 - C``; ``sqrt_one_minus_sq``: ``sqrt(1 - C^2)``.
    """
    x = np.clip(np.asarray(C.values, dtype=float), 0.0, 1.0)
    if transform == "one_minus":
        D = 1.0 - x
    elif transform == "sqrt_one_minus_sq":
        D = np.sqrt(1.0 - x**2)
    else:
        raise ConfigError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0.0)
    meta = dict(C.meta, band=list(C.band), SR=C.SR, transform=transform)
    return DistanceMatrix(D, labels=list(C.labels), meta=meta)


def coherence_panel(panel: TimeSeriesPanel, bands: dict[str, tuple[float, float]] | None = None,
                    kernel: str = "rectangular", bandwidth: float | None = None,
                    demean: bool = False) -> dict[str, CoherenceMatrix]:
    """Band coherence for several bands from one smoothed spectrum."""
    spec = smoothed_cross_spectrum(panel, kernel=kernel, bandwidth=bandwidth, demean=demean)
    bands = DEFAULT_BANDS if bands is None else bands
    return {name: band_coherence(spec, b) for name, b in bands.items()}
