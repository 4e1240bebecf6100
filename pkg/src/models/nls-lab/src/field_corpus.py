"""
Random test fields built from Gaussian mixtures
Mixtures are analytic, so dilated and amplified copies are sampled exactly
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from lab_core import CartesianGrid, FieldVector, Grid, RadialGrid


@dataclass(frozen=True)
class GaussianMixture:
    """u_j(x) = exp(i theta_j + i k_j.x) sum_g c_g exp(-|x - x_g|^2 / (2 sigma_g^2))

    The envelope is a sum of positive bumps, so |u_j| never vanishes and |u_j|^p
    stays smooth for quadrature.
    """

    N: int
    weights: List[np.ndarray]
    centers: List[np.ndarray]
    widths: List[np.ndarray]
    phases: np.ndarray
    wavevectors: np.ndarray

    @property
    def m(self) -> int:
        return len(self.weights)

    def sample(
        self, grid: Grid, dilation: float = 1.0, amplitude: float = 1.0
    ) -> FieldVector:
        """Sample amplitude * u(dilation * x) on the grid"""
        if isinstance(grid, RadialGrid):
            coords = [grid.r]
        else:
            coords = grid.coordinates()
        comps = []
        for j in range(self.m):
            envelope = np.zeros(grid.shape)
            for c, x0, s in zip(self.weights[j], self.centers[j], self.widths[j]):
                dist2 = sum(
                    (dilation * x - x0[i]) ** 2 for i, x in enumerate(coords)
                )
                envelope += c * np.exp(-dist2 / (2.0 * s**2))
            phase = self.phases[j] + sum(
                self.wavevectors[j][i] * dilation * x for i, x in enumerate(coords)
            )
            comps.append(amplitude * envelope * np.exp(1j * phase))
        return FieldVector(grid, np.stack(comps))


def random_mixture(
    rng: np.random.Generator,
    N: int,
    m: int,
    bumps: int = 3,
    width_range=(0.7, 1.5),
    center_spread: float = 2.0,
    max_wavenumber: float = 1.0,
    radial: bool = False,
) -> GaussianMixture:
    """Draw one mixture; radial mixtures are centered and carry no phase gradient"""
    dims = 1 if radial else N
    weights, centers, widths = [], [], []
    for _ in range(m):
        weights.append(rng.uniform(0.2, 1.0, size=bumps))
        if radial:
            centers.append(np.zeros((bumps, 1)))
        else:
            centers.append(rng.uniform(-center_spread, center_spread, size=(bumps, N)))
        widths.append(rng.uniform(*width_range, size=bumps))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=m)
    if radial:
        wavevectors = np.zeros((m, dims))
    else:
        wavevectors = rng.uniform(-max_wavenumber, max_wavenumber, size=(m, N))
    return GaussianMixture(N, weights, centers, widths, phases, wavevectors)


def random_corpus(
    grid: Grid,
    count: int,
    seed: int,
    m_choices=(1, 2, 3),
    m: Optional[int] = None,
    **mixture_options,
) -> List[GaussianMixture]:
    """Deterministic list of mixtures for a seed"""
    rng = np.random.default_rng(seed)
    radial = isinstance(grid, RadialGrid)
    corpus = []
    for _ in range(count):
        mm = m if m is not None else int(rng.choice(m_choices))
        corpus.append(
            random_mixture(rng, grid.N, mm, radial=radial, **mixture_options)
        )
    return corpus


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0, m: int = 1):
    """Centered Gaussian amplitude * exp(-|x|^2 / (2 width^2)) in every component"""
    r2 = grid.r**2 if isinstance(grid, RadialGrid) else grid.r2
    profile = amplitude * np.exp(-r2 / (2.0 * width**2))
    return FieldVector(grid, np.stack([profile.astype(complex)] * m))


def plane_wave(grid: CartesianGrid, amplitude: complex, mode) -> FieldVector:
    """c exp(i k.x) with k = 2 pi mode / (2 L) a resolved box wavevector"""
    coords = grid.coordinates()
    k = [np.pi * mi / grid.L for mi in mode]
    phase = sum(ki * x for ki, x in zip(k, coords))
    return FieldVector(grid, (amplitude * np.exp(1j * phase))[np.newaxis])
