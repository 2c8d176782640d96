"""Synthetic multivariate time series with a planted dependence topology.

Latent sources are AR(2) oscillators whose characteristic roots are placed at
``M * exp(+-i 2 pi psi)``, so the spectrum of each source peaks near ``psi``
cycles per sample.  Observed channels are linear mixtures of the latent
sources plus independent Gaussian noise::

    Y(t) = A Z(t) + noise_sd * eps(t)

Two channels that load on a common latent column are coherent at that
latent's frequency; the incidence pattern of ``A`` therefore plants a graph
(cycles, cliques) in the coherence network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, DataError

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence([seed, stream, index])"

# stream tags for deriving independent sub-seeds
_LATENT_STREAM = 0
_NOISE_STREAM = 1

DEFAULT_BURN_IN = 1024


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, index])))


def ar2_coefficients(M: float, psi: float) -> tuple[float, float]:
    """AR(2) coefficients whose characteristic roots are ``M exp(+-2 pi i psi)``.

    Parameters
    ----------
    M : float
        Root magnitude, must exceed 1 for a causal process.  Values close to 1
        concentrate the spectrum around ``psi``.
    psi : float
        Root phase in cycles per sample, in the open interval (0, 0.5).

    Returns
    -------
    (phi1, phi2) : tuple of float
        ``phi1 = 2 cos(2 pi psi) / M`` and ``phi2 = -1 / M**2``.
    """
    if not np.isfinite(M) or M <= 1.0:
        raise ConfigError(f"root magnitude M must be > 1 for causality, got {M!r}")
    if not (0.0 < psi < 0.5):
        raise ConfigError(f"phase psi must lie in (0, 0.5) cycles/sample, got {psi!r}")
    return 2.0 * np.cos(2.0 * np.pi * psi) / M, -1.0 / M**2


@dataclass(frozen=True)
class Ar2Spec:
    """One latent AR(2) oscillator."""

    M: float
    psi: float
    sigma: float = 1.0

    def __post_init__(self):
        ar2_coefficients(self.M, self.psi)
        if not self.sigma > 0:
            raise ConfigError(f"innovation sd must be > 0, got {self.sigma!r}")

    @classmethod
    def from_peak(cls, peak_hz: float, SR: float, M: float = 1.05, sigma: float = 1.0) -> "Ar2Spec":
        return cls(M=M, psi=peak_hz / SR, sigma=sigma)

    @property
    def coefficients(self) -> tuple[float, float]:
        return ar2_coefficients(self.M, self.psi)

    def stationary_variance(self) -> float:
        """Lag-0 autocovariance from the Yule-Walker equations."""
        phi1, phi2 = self.coefficients
        return self.sigma**2 * (1 - phi2) / ((1 + phi2) * ((1 - phi2) ** 2 - phi1**2))

    def spectral_density(self, freqs) -> np.ndarray:
        """Spectrum ``sigma^2 / |1 - phi1 e^{-i w} - phi2 e^{-2 i w}|^2`` at cycles/sample ``freqs``.

        Normalised so that it is the expectation of ``|d(w)|^2`` for the
        ``1/sqrt(T)`` Fourier coefficients (white noise of variance ``s^2`` has
        flat spectrum ``s^2``).
        """
        z = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float))
        phi1, phi2 = self.coefficients
        return self.sigma**2 / np.abs(1 - phi1 * z - phi2 * z**2) ** 2

    def to_dict(self) -> dict:
        phi1, phi2 = self.coefficients
        return {"M": self.M, "psi": self.psi, "sigma": self.sigma, "phi1": phi1, "phi2": phi2}

    @classmethod
    def from_dict(cls, d: dict) -> "Ar2Spec":
        return cls(M=float(d["M"]), psi=float(d["psi"]), sigma=float(d.get("sigma", 1.0)))


def simulate_ar2(spec: Ar2Spec, T: int, burn_in: int = DEFAULT_BURN_IN, seed: int = 0,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Simulate ``T`` samples of an AR(2) process started from a zero state.

    The first ``burn_in`` samples are generated and discarded.  Output is a
    pure function of ``(spec, T, burn_in, seed)``; pass ``rng`` to draw from
    an existing generator instead.
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if burn_in < 0:
        raise ConfigError(f"burn_in must be >= 0, got {burn_in}")
    if rng is None:
        rng = _rng(seed, _LATENT_STREAM, 0)
    w = spec.sigma * rng.standard_normal(burn_in + T)
    phi1, phi2 = spec.coefficients
    z = lfilter([1.0], [1.0, -phi1, -phi2], w)
    return z[burn_in:]


@dataclass
class TimeSeriesPanel:
    """P channels by T samples of a real multivariate signal."""

    values: np.ndarray
    SR: float = 1.0
    channel_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        P, T = self.values.shape
        if not self.channel_labels:
            self.channel_labels = [f"ch{i + 1}" for i in range(P)]
        self.channel_labels = [str(s) for s in self.channel_labels]
        if len(self.channel_labels) != P:
            raise DataError(f"{len(self.channel_labels)} labels for {P} channels")
        if T < 2:
            raise DataError(f"panel needs at least 2 samples, got {T}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("panel contains non-finite values")
        if not self.SR > 0:
            raise DataError(f"sampling rate must be > 0, got {self.SR!r}")

    @property
    def P(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]


@dataclass
class MixingModel:
    """Latent-source mixing model ``Y = A Z + noise_sd * eps``.

    ``ground_truth_edges`` holds 0-based channel pairs ``(i, j)``, ``i < j``,
    that load on at least one common latent column.  When not supplied it is
    derived from the nonzero pattern of ``A``.
    """

    A: np.ndarray
    latent_specs: Sequence[Ar2Spec]
    noise_sd: float | np.ndarray = 1.0
    ground_truth_edges: set[tuple[int, int]] | None = None
    name: str = "custom"

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.latent_specs = list(self.latent_specs)
        P, L = self.A.shape
        if L != len(self.latent_specs):
            raise ConfigError(f"mixing matrix has {L} columns but {len(self.latent_specs)} latent specs")
        nsd = np.asarray(self.noise_sd, dtype=float)
        if nsd.ndim not in (0, 1) or (nsd.ndim == 1 and nsd.shape[0] != P):
            raise ConfigError(f"noise_sd must be a scalar or length-{P} vector")
        if np.any(nsd < 0) or not np.all(np.isfinite(nsd)):
            raise ConfigError("noise_sd must be finite and >= 0")
        if self.ground_truth_edges is None:
            self.ground_truth_edges = shared_latent_edges(self.A)
        self.ground_truth_edges = {(int(min(i, j)), int(max(i, j))) for i, j in self.ground_truth_edges}
        for i, j in self.ground_truth_edges:
            if not (0 <= i < j < P):
                raise ConfigError(f"ground-truth edge {(i, j)} outside 0..{P - 1}")

    @property
    def P(self) -> int:
        return self.A.shape[0]

    @property
    def L(self) -> int:
        return self.A.shape[1]

    def spectral_matrix(self, freqs) -> np.ndarray:
        """Model cross-spectrum ``A diag(f_Z) A^T + diag(noise_sd^2)``, shape (K, P, P)."""
        freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        fz = np.stack([s.spectral_density(freqs) for s in self.latent_specs], axis=1)  # K x L
        f = np.einsum("il,kl,jl->kij", self.A, fz, self.A)
        nsd = np.broadcast_to(np.asarray(self.noise_sd, dtype=float), (self.P,))
        f = f + np.diag(nsd**2)[None, :, :]
        return f

    def coherence(self, freqs) -> np.ndarray:
        """Model coherence at each frequency, shape (K, P, P)."""
        f = self.spectral_matrix(freqs)
        d = np.einsum("kii->ki", f)
        return f**2 / (d[:, :, None] * d[:, None, :])

    def to_dict(self) -> dict:
        nsd = np.asarray(self.noise_sd, dtype=float)
        return {
            "name": self.name,
            "A": self.A.tolist(),
            "shape": list(self.A.shape),
            "latent_specs": [s.to_dict() for s in self.latent_specs],
            "noise_sd": nsd.tolist(),
            "ground_truth_edges": sorted([list(e) for e in self.ground_truth_edges]),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixingModel":
        edges = d.get("ground_truth_edges")
        return cls(
            A=np.asarray(d["A"], dtype=float),
            latent_specs=[Ar2Spec.from_dict(s) for s in d["latent_specs"]],
            noise_sd=np.asarray(d.get("noise_sd", 1.0), dtype=float),
            ground_truth_edges=None if edges is None else {tuple(e) for e in edges},
            name=d.get("name", "custom"),
        )


def shared_latent_edges(A) -> set[tuple[int, int]]:
    """Channel pairs with a common nonzero latent loading."""
    nz = np.asarray(A) != 0
    share = (nz.astype(int) @ nz.T.astype(int)) > 0
    P = share.shape[0]
    return {(i, j) for i in range(P) for j in range(i + 1, P) if share[i, j]}


def simulate_mixture(model: MixingModel, T: int, SR: float = 1.0, seed: int = 0,
                     burn_in: int = DEFAULT_BURN_IN, labels: Sequence[str] | None = None) -> TimeSeriesPanel:
    """Draw one panel from ``model``.

    Latent ``l`` uses sub-seed ``(seed, latent stream, l)`` and channel noise
    ``i`` uses ``(seed, noise stream, i)``, so every source is reproducible
    on its own and can be generated in any order.
    """
    if T < 2:
        raise ConfigError(f"T must be >= 2, got {T}")
    Z = np.empty((model.L, T))
    for l, spec in enumerate(model.latent_specs):
        Z[l] = simulate_ar2(spec, T, burn_in=burn_in, rng=_rng(seed, _LATENT_STREAM, l))
    Y = model.A @ Z
    nsd = np.broadcast_to(np.asarray(model.noise_sd, dtype=float), (model.P,))
    if np.any(nsd > 0):
        eps = np.stack([_rng(seed, _NOISE_STREAM, i).standard_normal(T) for i in range(model.P)])
        Y = Y + nsd[:, None] * eps
    if labels is None:
        labels = [f"Y{i + 1}" for i in range(model.P)]
    return TimeSeriesPanel(Y, SR=SR, channel_labels=list(labels))


# Mixing matrices of the two-cycle ("1") and cycle-plus-clique ("2") presets.
_EXAMPLE1_A = 0.5 * np.array([
    [1, 1, 0, 0, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0, 0],
    [0, 0, 1, 1, 0, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 1, 1, 0],
    [0, 0, 0, 0, 0, 0, 1, 1],
    [0, 0, 0, 0, 1, 0, 0, 1],
], dtype=float)

_EXAMPLE2_A = 0.5 * np.array([
    [1, 1, 0, 0, 0],
    [0, 1, 1, 0, 0],
    [0, 0, 1, 1, 0],
    [1, 0, 0, 1, 0],
    [0, 0, 0, 1, 1],
    [0, 0, 0, 0, 2],
    [0, 0, 0, 0, 2],
    [0, 0, 0, 0, 2],
    [0, 0, 0, 0, 2],
], dtype=float)

# rows list the 1-based latent indices loaded by each of the six channels
_EXAMPLE3_CYCLIC = [(6, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]
_EXAMPLE3_RANDOM = [(6, 3, 4), (6, 2), (1,), (1, 2, 3), (4, 5), (5,)]

# latent defaults: a broad oscillator (M=1.414, peak 154/1000) for the
# 9-channel examples, a sharper alpha-band oscillator for the 6-channel ones
EXAMPLE12_LATENT = Ar2Spec(M=1.414, psi=0.154)
EXAMPLE3_LATENT = Ar2Spec(M=1.05, psi=0.1)

PRESET_IDS = ("1", "2", "3-cyclic", "3-random")


def _incidence(rows, L=6) -> np.ndarray:
    A = np.zeros((len(rows), L))
    for i, cols in enumerate(rows):
        for l in cols:
            A[i, l - 1] = 1.0
    return A


def preset_model(id: str, c: float = 1.0, latent: Ar2Spec | None = None) -> MixingModel:
    """The mixing model behind one of the built-in examples.

    ``id`` is one of ``"1"`` (two 4-cycles), ``"2"`` (a 4-cycle and a
    4-clique), ``"3-cyclic"`` (6-cycle) or ``"3-random"``.  ``c`` scales the
    channel noise.
    """
    id = str(id)
    if c < 0:
        raise ConfigError(f"noise scale c must be >= 0, got {c}")
    if id == "1":
        A, spec = _EXAMPLE1_A.copy(), latent or EXAMPLE12_LATENT
    elif id == "2":
        A, spec = _EXAMPLE2_A.copy(), latent or EXAMPLE12_LATENT
    elif id == "3-cyclic":
        A, spec = _incidence(_EXAMPLE3_CYCLIC), latent or EXAMPLE3_LATENT
    elif id == "3-random":
        A, spec = _incidence(_EXAMPLE3_RANDOM), latent or EXAMPLE3_LATENT
    else:
        raise ConfigError(f"unknown preset {id!r}; expected one of {', '.join(PRESET_IDS)}")
    return MixingModel(A=A, latent_specs=[spec] * A.shape[1], noise_sd=float(c), name=f"example-{id}")


def preset_example(id: str, c: float = 1.0, seed: int = 0, T: int = 4096, SR: float = 100.0,
                   latent: Ar2Spec | None = None) -> tuple[TimeSeriesPanel, MixingModel]:
    """Simulate a built-in example; returns the panel and the exact model used."""
    model = preset_model(id, c=c, latent=latent)
    return simulate_mixture(model, T=T, SR=SR, seed=seed), model
