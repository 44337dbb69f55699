"""Discrete mode sets for rotation-invariant boson fields.

A mode set is a radial quadrature rule approximating the measure space
(R^nu, dk): shell midpoints r_i, cell weights w_i (angular factor included),
dispersion values omega_i, and one coupling column per interaction channel.
The infrared cutoff sigma is mandatory and strictly positive, so omega = 0 is
never represented on a grid.

Convention: the discrete mode e_i stands for the normalized indicator of
cell i.  A smeared function f therefore enters annihilators with coefficient
f(r_i) * sqrt(w_i), which makes discrete sums converge to the corresponding
integrals under grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "CouplingFamily",
    "ModeSet",
    "L2Criteria",
    "surface_area",
    "build_radial_grid",
    "eval_coupling",
    "l2_criteria",
]


def surface_area(nu: int) -> float:
    """Surface measure of the unit sphere in R^nu: 2*pi^(nu/2)/Gamma(nu/2)."""
    if nu < 1:
        raise ValueError(f"spatial dimension must be >= 1, got {nu}")
    return 2.0 * math.pi ** (nu / 2.0) / math.gamma(nu / 2.0)


def _readonly(a) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CouplingFamily:
    """Radial coupling profile rho(r) = rho0 * r^p * envelope(r).

    The coupling column on a grid is lambda_i = rho(r_i) / sqrt(omega_i);
    p is the infrared exponent of rho and uv the ultraviolet cutoff used by
    the envelope.  profile selects the envelope: "hard-cutoff" is the
    indicator of r <= uv, "gaussian" is exp(-r^2 / (2 uv^2)).
    """

    rho0: float
    p: float
    uv: float
    profile: str = "hard-cutoff"

    def __post_init__(self):
        if self.rho0 < 0:
            raise ValueError(f"rho0 must be >= 0, got {self.rho0}")
        if self.uv <= 0:
            raise ValueError(f"uv cutoff must be > 0, got {self.uv}")
        if self.profile not in ("hard-cutoff", "gaussian"):
            raise ValueError(f"unknown profile {self.profile!r}")

    def envelope(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.profile == "gaussian":
            return np.exp(-(r * r) / (2.0 * self.uv * self.uv))
        return (r <= self.uv).astype(float)

    def rho(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.rho0 * r**self.p * self.envelope(r)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Quadrature discretization of (R^nu, dk) restricted to radial data.

    points are strictly increasing shell radii, weights the cell measures
    (angular factor included), omega the dispersion values.  couplings holds
    one real column per channel; families keeps the generating
    CouplingFamily of each column when known (None otherwise), which is what
    the analytic infrared classification reads.  mass > 0 marks a massive
    dispersion omega = sqrt(r^2 + m^2).
    """

    nu: int
    points: np.ndarray
    weights: np.ndarray
    omega: np.ndarray
    couplings: tuple = ()
    families: tuple = ()
    mass: float = 0.0
    sigma: float = field(default=0.0)
    Lambda: float = field(default=0.0)
    rule: str = field(default="midpoint")

    def __post_init__(self):
        pts = _readonly(self.points)
        wts = _readonly(self.weights)
        om = _readonly(self.omega)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "couplings", tuple(_readonly(c) for c in self.couplings))
        fams = tuple(self.families) if self.families else (None,) * len(self.couplings)
        object.__setattr__(self, "families", fams)
        if not (len(pts) == len(wts) == len(om)):
            raise ValueError("points, weights, omega must have equal length")
        if len(pts) == 0:
            raise ValueError("mode set must contain at least one mode")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(wts <= 0):
            raise ValueError("all weights must be positive")
        if np.any(om <= 0):
            raise ValueError("all omega must be positive (keep the IR cutoff > 0)")
        for c in self.couplings:
            if len(c) != len(pts):
                raise ValueError("coupling column length does not match grid")
        if len(fams) != len(self.couplings):
            raise ValueError("families must align with coupling columns")

    @property
    def n_modes(self) -> int:
        return len(self.points)

    @property
    def n_channels(self) -> int:
        return len(self.couplings)

    def channel(self, j: int = 0) -> np.ndarray:
        return self.couplings[j]

    def with_coupling(self, column, family: CouplingFamily | None = None) -> "ModeSet":
        """Return a new ModeSet with one more coupling channel."""
        return replace(
            self,
            couplings=self.couplings + (_readonly(column),),
            families=self.families + (family,),
        )

    def restrict(self, i: int) -> "ModeSet":
        """Single-mode slice, used by separable solvers."""
        sl = slice(i, i + 1)
        return replace(
            self,
            points=self.points[sl],
            weights=self.weights[sl],
            omega=self.omega[sl],
            couplings=tuple(c[sl] for c in self.couplings),
            families=self.families,
        )

    def head(self, k: int) -> "ModeSet":
        """First k modes, used to run exactness suites on small subspaces."""
        if not 1 <= k <= self.n_modes:
            raise ValueError(f"k must lie in [1, {self.n_modes}], got {k}")
        sl = slice(0, k)
        return replace(
            self,
            points=self.points[sl],
            weights=self.weights[sl],
            omega=self.omega[sl],
            couplings=tuple(c[sl] for c in self.couplings),
            families=self.families,
        )


def build_radial_grid(
    nu: int,
    sigma: float,
    Lambda: float,
    n_shells: int,
    rule: str = "midpoint",
    mass: float = 0.0,
) -> ModeSet:
    """Build a radial quadrature grid on [sigma, Lambda].

    rule "midpoint" places r_i = sigma + (i - 1/2) * dr with uniform dr;
    rule "log-midpoint" places shells geometrically (constant ratio
    r_{i+1}/r_i), which is what resolves logarithmically divergent infrared
    sweeps.  Weights are w_i = surface(nu) * r_i^(nu-1) * dr_i.  The
    dispersion is omega = r for mass 0 and omega = sqrt(r^2 + mass^2)
    otherwise.
    """
    if sigma <= 0:
        raise ValueError(f"infrared cutoff sigma must be > 0, got {sigma}")
    if Lambda <= sigma:
        raise ValueError(f"need Lambda > sigma, got Lambda={Lambda}, sigma={sigma}")
    if n_shells < 1:
        raise ValueError(f"n_shells must be >= 1, got {n_shells}")
    if mass < 0:
        raise ValueError(f"mass must be >= 0, got {mass}")
    s = surface_area(nu)
    if rule == "midpoint":
        dr = (Lambda - sigma) / n_shells
        r = sigma + (np.arange(1, n_shells + 1) - 0.5) * dr
        widths = np.full(n_shells, dr)
    elif rule == "log-midpoint":
        edges = sigma * (Lambda / sigma) ** (np.arange(n_shells + 1) / n_shells)
        r = np.sqrt(edges[:-1] * edges[1:])
        widths = np.diff(edges)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    w = s * r ** (nu - 1) * widths
    omega = r if mass == 0.0 else np.sqrt(r * r + mass * mass)
    return ModeSet(
        nu=nu, points=r, weights=w, omega=omega, mass=mass,
        sigma=sigma, Lambda=Lambda, rule=rule,
    )


def eval_coupling(
    family: CouplingFamily,
    grid: ModeSet,
    dispersion_law: str | tuple | None = None,
) -> np.ndarray:
    """Evaluate the coupling column lambda_i = rho(r_i) / sqrt(omega_i).

    By default omega comes from the grid.  dispersion_law may override it:
    "massless" uses omega = r, ("massive", m) uses omega = sqrt(r^2 + m^2).
    """
    r = grid.points
    if dispersion_law is None:
        omega = grid.omega
    elif dispersion_law == "massless":
        omega = r
    elif isinstance(dispersion_law, tuple) and dispersion_law[0] == "massive":
        m = float(dispersion_law[1])
        omega = np.sqrt(r * r + m * m)
    else:
        raise ValueError(f"unknown dispersion law {dispersion_law!r}")
    return family.rho(r) / np.sqrt(omega)


@dataclass(frozen=True)
class L2Criteria:
    """Discrete square norms of a coupling column and its IR classification.

    norm_lam, norm_lam_over_sqrtw, norm_lam_over_w are the sums
    sum_i w_i * (lambda_i / omega_i^s)^2 for s = 0, 1/2, 1.  ir_class is
    decided analytically from the generating family exponent (singular iff
    2p <= 3 - nu for a massless dispersion), never from the finite sums;
    it is "unknown" when the column was attached without a family.
    """

    norm_lam: float
    norm_lam_over_sqrtw: float
    norm_lam_over_w: float
    ir_class: str


def ir_class_of(family: CouplingFamily | None, nu: int, mass: float = 0.0) -> str:
    if family is None:
        return "unknown"
    if mass > 0:
        return "regular"
    return "singular" if 2.0 * family.p <= 3.0 - nu else "regular"


def l2_criteria(grid: ModeSet, channel: int = 0) -> L2Criteria:
    lam = grid.channel(channel)
    w = grid.weights
    om = grid.omega
    return L2Criteria(
        norm_lam=float(np.sum(w * lam * lam)),
        norm_lam_over_sqrtw=float(np.sum(w * lam * lam / om)),
        norm_lam_over_w=float(np.sum(w * lam * lam / (om * om))),
        ir_class=ir_class_of(grid.families[channel], grid.nu, grid.mass),
    )
