"""
Problem parameters, spatial grids and field storage
Periodic Cartesian boxes carry the dynamics, radial balls carry the stationary solves
"""

from dataclasses import dataclass, field
from typing import Any, Mapping, Tuple, Union

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma

from errors import (
    ExponentOutOfRange,
    NonPositiveCoupling,
    NonSymmetricCoupling,
    ParameterError,
    PoisonedState,
    UnsupportedDimension,
)

MIN_DIMENSION = 2
MAX_DIMENSION = 4


def critical_exponents(N: int) -> Tuple[float, float]:
    """Return (p_*, p^*) = (1 + 2/N, N/(N-2)); p^* is infinite for N = 2"""
    p_lower = 1.0 + 2.0 / N
    p_upper = np.inf if N == 2 else N / (N - 2.0)
    return p_lower, p_upper


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N"""
    return 2.0 * np.pi ** (N / 2.0) / gamma(N / 2.0)


@dataclass(frozen=True)
class SystemParams:
    """Dimension, exponent, component count and symmetric positive coupling matrix"""

    N: int
    p: float
    m: int
    A: np.ndarray

    @property
    def p_lower(self) -> float:
        return critical_exponents(self.N)[0]

    @property
    def p_upper(self) -> float:
        return critical_exponents(self.N)[1]

    def as_dict(self) -> dict:
        return {"N": self.N, "p": self.p, "m": self.m, "A": self.A.tolist()}

    def with_coupling(self, A) -> "SystemParams":
        return validate_params({"N": self.N, "p": self.p, "m": self.m, "A": A})


def validate_params(raw: Mapping[str, Any]) -> SystemParams:
    """Validate a candidate parameter set (keys N, p, m, A)"""
    missing = [key for key in ("N", "p", "A") if key not in raw]
    if missing:
        raise ParameterError(
            f"parameter set is missing {', '.join(missing)}", {"missing": missing}
        )
    N = int(raw["N"])
    p = float(raw["p"])
    A = np.atleast_2d(np.asarray(raw["A"], dtype=float))
    m = int(raw.get("m", A.shape[0]))

    if N < MIN_DIMENSION or N > MAX_DIMENSION:
        raise UnsupportedDimension(
            f"dimension N={N} outside [{MIN_DIMENSION}, {MAX_DIMENSION}]",
            {"N": N},
        )
    if m < 1 or A.shape != (m, m):
        raise NonSymmetricCoupling(
            f"coupling matrix shape {A.shape} does not match m={m}",
            {"shape": list(A.shape), "m": m},
        )
    if not np.allclose(A, A.T, rtol=1e-12, atol=0.0):
        raise NonSymmetricCoupling(
            "coupling matrix must satisfy a_jk = a_kj", {"A": A.tolist()}
        )
    if np.any(A <= 0.0):
        raise NonPositiveCoupling(
            "all couplings a_jk must be positive", {"A": A.tolist()}
        )

    p_lower, p_upper = critical_exponents(N)
    if not (p_lower < p < p_upper):
        raise ExponentOutOfRange(
            f"p={p} must lie strictly between p_*={p_lower} and p^*={p_upper}",
            {"p": p, "p_lower": p_lower, "p_upper": p_upper, "N": N},
        )

    A = 0.5 * (A + A.T)
    A.setflags(write=False)
    return SystemParams(N=N, p=p, m=m, A=A)


@dataclass(frozen=True)
class CartesianGrid:
    """Periodic box [-L, L)^N with n points per axis"""

    N: int
    n: int = 256
    L: float = 16.0
    h: float = field(init=False)
    axis: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)
    ksq: np.ndarray = field(init=False, repr=False)
    r2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 2 or self.L <= 0:
            raise ValueError("CartesianGrid needs n >= 2 and L > 0")
        h = 2.0 * self.L / self.n
        axis = -self.L + h * np.arange(self.n)
        k = 2.0 * np.pi * sfft.fftfreq(self.n, d=h)
        mesh_k = np.meshgrid(*([k] * self.N), indexing="ij")
        mesh_x = np.meshgrid(*([axis] * self.N), indexing="ij")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "ksq", sum(kk**2 for kk in mesh_k))
        object.__setattr__(self, "r2", sum(xx**2 for xx in mesh_x))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.N

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** self.N

    def coordinates(self):
        return np.meshgrid(*([self.axis] * self.N), indexing="ij")

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """Quadrature over the trailing N axes; every node weighs h^N"""
        axes = tuple(range(-self.N, 0))
        return np.sum(f, axis=axes) * self.cell_volume

    def spec(self) -> dict:
        return {"kind": "cartesian", "N": self.N, "n": self.n, "L": self.L}


@dataclass(frozen=True)
class RadialGrid:
    """Nodes r_i = i h on [0, R]; Dirichlet at R, regularity at the origin

    Weights are dual-cell volumes omega_N (r_{i+1/2}^N - r_{i-1/2}^N) / N, halved
    at both ends, so the ball volume is reproduced exactly.
    """

    N: int
    n_r: int = 4096
    R: float = 16.0
    h: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    flux: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_r < 3 or self.R <= 0:
            raise ValueError("RadialGrid needs n_r >= 3 and R > 0")
        h = self.R / (self.n_r - 1)
        r = h * np.arange(self.n_r)
        r[-1] = self.R
        omega = sphere_area(self.N)
        faces = np.concatenate(([0.0], r[:-1] + 0.5 * h, [self.R]))
        w = omega * (faces[1:] ** self.N - faces[:-1] ** self.N) / self.N
        # flux[i] couples nodes i and i+1 through the face r_{i+1/2}
        flux = omega * (r[:-1] + 0.5 * h) ** (self.N - 1) / h
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "flux", flux)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_r,)

    @property
    def volume(self) -> float:
        return sphere_area(self.N) * self.R**self.N / self.N

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(f, self.w, axes=([-1], [0]))

    def stiffness_banded(self) -> np.ndarray:
        """Upper banded storage of the stiffness matrix on the free nodes 0..n_r-2"""
        free = self.n_r - 1
        diag = np.zeros(free)
        diag += self.flux[:free]
        diag[1:] += self.flux[: free - 1]
        off = np.zeros(free)
        off[1:] = -self.flux[: free - 1]
        return np.vstack([off, diag])

    def spec(self) -> dict:
        return {"kind": "radial", "N": self.N, "n_r": self.n_r, "R": self.R}


Grid = Union[CartesianGrid, RadialGrid]


def grid_from_spec(spec: Mapping[str, Any]) -> Grid:
    if spec["kind"] == "cartesian":
        return CartesianGrid(N=int(spec["N"]), n=int(spec["n"]), L=float(spec["L"]))
    if spec["kind"] == "radial":
        return RadialGrid(N=int(spec["N"]), n_r=int(spec["n_r"]), R=float(spec["R"]))
    raise ValueError(f"unknown grid kind {spec['kind']!r}")


@dataclass
class FieldVector:
    """m complex fields sharing one grid; components has shape (m, *grid.shape)"""

    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=complex)
        if comps.ndim == len(self.grid.shape):
            comps = comps[np.newaxis]
        if comps.shape[1:] != self.grid.shape:
            raise ValueError(
                f"components shape {comps.shape[1:]} does not match "
                f"grid {self.grid.shape}"
            )
        self.components = comps

    @property
    def m(self) -> int:
        return self.components.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.components)))

    def check_finite(self) -> "FieldVector":
        if not self.is_finite():
            raise PoisonedState("field contains NaN or Inf samples")
        return self

    def with_components(self, components: np.ndarray) -> "FieldVector":
        return FieldVector(self.grid, components)

    def scaled(self, t: float) -> "FieldVector":
        return FieldVector(self.grid, t * self.components)

    def copy(self) -> "FieldVector":
        return FieldVector(self.grid, self.components.copy())

    @classmethod
    def zeros(cls, grid: Grid, m: int) -> "FieldVector":
        return cls(grid, np.zeros((m,) + grid.shape, dtype=complex))


def _radial_laplacian(grid: RadialGrid, comps: np.ndarray) -> np.ndarray:
    free = grid.n_r - 1
    psi = comps[..., :free]
    out = np.zeros_like(comps)
    diff = np.zeros_like(psi)
    diff[..., :-1] = psi[..., 1:] - psi[..., :-1]
    diff[..., -1] = -psi[..., -1]  # Dirichlet node holds zero
    flux = grid.flux[:free] * diff
    out[..., :free] = flux
    out[..., 1:free] -= flux[..., :-1]
    out[..., :free] /= grid.w[:free]
    return out


def laplacian(u: FieldVector, workers: int = 1) -> FieldVector:
    """Componentwise Laplacian: spectral on boxes, finite-volume on radial grids"""
    u.check_finite()
    grid = u.grid
    if isinstance(grid, CartesianGrid):
        axes = tuple(range(1, grid.N + 1))
        spectrum = sfft.fftn(u.components, axes=axes, workers=workers)
        out = sfft.ifftn(-grid.ksq * spectrum, axes=axes, workers=workers)
        return u.with_components(out)
    return u.with_components(_radial_laplacian(grid, u.components))


def gradient_norms(u: FieldVector, workers: int = 1) -> np.ndarray:
    """Per-component ||grad u_j||^2"""
    grid = u.grid
    if isinstance(grid, CartesianGrid):
        axes = tuple(range(1, grid.N + 1))
        spectrum = sfft.fftn(u.components, axes=axes, workers=workers)
        weight = grid.cell_volume / grid.n**grid.N
        return np.sum(grid.ksq * np.abs(spectrum) ** 2, axis=axes) * weight
    free = grid.n_r - 1
    psi = u.components[:, :free]
    diff = np.empty_like(psi)
    diff[:, :-1] = psi[:, 1:] - psi[:, :-1]
    diff[:, -1] = -psi[:, -1]
    return np.sum(grid.flux[:free] * np.abs(diff) ** 2, axis=1)


def masses(u: FieldVector) -> np.ndarray:
    """Per-component ||u_j||^2"""
    return np.real(u.grid.integrate(np.abs(u.components) ** 2))


def inner_products(u: FieldVector, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Per-component L2 norms squared and gradient norms squared"""
    u.check_finite()
    return masses(u), gradient_norms(u, workers=workers)


def inner(u: FieldVector, v: FieldVector) -> complex:
    """Grid inner product summed over components"""
    return complex(np.sum(u.grid.integrate(np.conj(u.components) * v.components)))


def sample_radial_profile(grid: Grid, profile, m: int = 1) -> FieldVector:
    """Evaluate callables f(r) (one per component) on the grid"""
    r = np.sqrt(grid.r2) if isinstance(grid, CartesianGrid) else grid.r
    fns = profile if isinstance(profile, (list, tuple)) else [profile] * m
    return FieldVector(grid, np.stack([np.asarray(f(r), dtype=complex) for f in fns]))


def coupling_potential(comps: np.ndarray, params: SystemParams) -> np.ndarray:
    """V_j = sum_k a_jk |u_k|^p |u_j|^{p-2}, taken as 0 where u_j = 0

    The nonlinear term of the system is V_j u_j, which vanishes at u_j = 0 for every
    p > 1 even when |u_j|^{p-2} does not exist.
    """
    modulus = np.abs(comps)
    with np.errstate(divide="ignore", invalid="ignore"):
        inverse = np.where(modulus > 0.0, modulus ** (params.p - 2.0), 0.0)
    return np.tensordot(params.A, modulus**params.p, axes=1) * inverse
