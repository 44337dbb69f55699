"""Ground-state eigensolver and shifted-resolvent solver.

Two numerical primitives feed every identity check: the lowest eigenpair of
a hermitian operator (Lanczos with full reorthogonalization, restarted from
the best Ritz vector when the iteration cap splits across cycles) and the
application of (H - E + s)^-1 for shifts s > 0 (preconditioned conjugate
gradients on the positive definite shifted operator).  Both are
deterministic for a fixed seed; H is never factorized, only applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fock import FockBasis, LinOp, StateVector
from .model import GroundState, GsbModel

__all__ = [
    "SolverConfig",
    "NonConverged",
    "NonPositiveShift",
    "ground_state",
    "solve_model",
    "resolvent_apply",
    "batched_resolvent",
]

# Krylov block memory budget per restart cycle, in bytes.
_CYCLE_BYTES = 600_000_000

NEAR_DEGENERATE_FACTOR = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, iteration caps and the seed for deterministic starts."""

    eig_tol: float = 1e-11
    max_lanczos: int = 2000
    cg_tol: float = 1e-11
    cg_max: int = 20000
    seed: int = 7

    def __post_init__(self):
        for name in ("eig_tol", "cg_tol"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("max_lanczos", "cg_max"):
            v = getattr(self, name)
            if v < 1:
                raise ValueError(f"{name} must be >= 1, got {v}")


class NonConverged(RuntimeError):
    """Solver ran out of iterations; carries the best residual reached."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class NonPositiveShift(ValueError):
    """The shifted system H - E + s needs s > 0 to be positive definite."""


def _start_vector(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _lanczos_cycle(H: LinOp, v0: np.ndarray, steps: int, eig_tol: float):
    """One full-reorthogonalization Lanczos sweep from v0.

    Returns (ritz_values, ground_vector, est_residual, steps_taken).
    Reorthogonalizes against the whole block twice per step (classical
    Gram-Schmidt, which is enough in float64) and checks the cheap residual
    estimate |beta_k s_k| every few steps.
    """
    dim = H.dim
    steps = max(1, min(steps, dim))
    V = np.empty((steps, dim), dtype=complex)
    alphas = np.empty(steps)
    betas = np.empty(max(steps - 1, 0))
    V[0] = v0 / np.linalg.norm(v0)
    k_used = 0
    for k in range(steps):
        w = H.apply(V[k])
        a = float(np.real(np.vdot(V[k], w)))
        alphas[k] = a
        w = w - a * V[k]
        if k > 0:
            w = w - betas[k - 1] * V[k - 1]
        # full reorthogonalization, twice
        block = V[: k + 1]
        w = w - block.T @ (block.conj() @ w)
        w = w - block.T @ (block.conj() @ w)
        k_used = k + 1
        b = float(np.linalg.norm(w))
        converged_estimate = False
        if k + 1 < steps:
            if b < 1e-14 * max(1.0, abs(a)):
                break
            betas[k] = b
            V[k + 1] = w / b
            if (k + 1) % 8 == 0:
                vals, vecs = eigh_tridiagonal(alphas[: k + 1], betas[:k])
                if b * abs(vecs[-1, 0]) <= 0.1 * eig_tol * max(1.0, abs(vals[0])):
                    converged_estimate = True
        if converged_estimate:
            break
    vals, vecs = eigh_tridiagonal(alphas[:k_used], betas[: k_used - 1])
    ground = V[:k_used].T @ vecs[:, 0]
    ground = ground / np.linalg.norm(ground)
    return vals, ground, k_used


def _lanczos_ground(H: LinOp, cfg: SolverConfig):
    """Restarted Lanczos; returns (E, vector, residual, gap, iterations, width)."""
    dim = H.dim
    if dim == 1:
        v = np.ones(1, dtype=complex)
        e = float(np.real(np.vdot(v, H.apply(v))))
        return e, v, 0.0, float("nan"), 1, 0.0
    per_cycle = max(20, min(cfg.max_lanczos, _CYCLE_BYTES // (16 * dim)))
    v0 = _start_vector(dim, cfg.seed)
    budget = cfg.max_lanczos
    best = None
    gap = float("nan")
    width = 0.0
    total_steps = 0
    cycle = 0
    while budget > 0:
        requested = min(per_cycle, budget)
        vals, ground, used = _lanczos_cycle(H, v0, requested, cfg.eig_tol)
        budget -= used
        total_steps += used
        cycle += 1
        hv = H.apply(ground)
        energy = float(np.real(np.vdot(ground, hv)))
        residual = float(np.linalg.norm(hv - energy * ground))
        if len(vals) > 1:
            gap = float(vals[1] - vals[0])
            width = float(vals[-1] - vals[0])
        if best is None or residual < best[2]:
            best = (energy, ground, residual, gap, width)
        if residual <= cfg.eig_tol * max(1.0, abs(energy)):
            return energy, ground, residual, gap, total_steps, width
        v0 = ground
        if used < requested:
            # breakdown before convergence: the Krylov space went invariant,
            # so stir in a fresh direction to escape it
            noise = _start_vector(dim, cfg.seed + cycle)
            v0 = ground + 0.1 * noise
            v0 = v0 / np.linalg.norm(v0)
    if best is not None and best[2] <= cfg.eig_tol * max(1.0, abs(best[0])):
        e, g, r, gp, w = best
        return e, g, r, gp, total_steps, w
    raise NonConverged(
        f"Lanczos did not reach eig_tol={cfg.eig_tol} within {cfg.max_lanczos} steps",
        best[2] if best is not None else float("inf"),
    )


def ground_state(H: LinOp, cfg: SolverConfig, d_matter: int = 1,
                 basis: FockBasis | None = None) -> GroundState:
    """Lowest eigenpair of a hermitian operator.

    Returns a normalized GroundState with the explicit residual
    ||H v - E v|| <= eig_tol * max(1, |E|), a gap estimate from the second
    Ritz value, and a near-degeneracy flag when the gap is tiny relative to
    the spectral width.  Deterministic for a fixed cfg.seed.
    """
    if not H.hermitian:
        raise ValueError("ground_state requires a hermitian operator")
    energy, vec, residual, gap, iters, width = _lanczos_ground(H, cfg)
    near = bool(np.isfinite(gap) and gap <= NEAR_DEGENERATE_FACTOR * max(width, abs(energy), 1e-300))
    sv = StateVector(vec, d_matter, basis)
    return GroundState(
        energy=energy, vector=sv, residual=residual, gap=gap,
        near_degenerate=near, iterations=iters,
    )


def solve_model(model: GsbModel, cfg: SolverConfig) -> GroundState:
    """Ground state of an assembled model, with the composite layout attached."""
    return ground_state(model.H, cfg, d_matter=model.d_matter, basis=model.basis)


def resolvent_apply(H: LinOp, E: float, s: float, v: np.ndarray,
                    cfg: SolverConfig, x0: np.ndarray | None = None):
    """Apply (H - E + s)^-1 by preconditioned conjugate gradients.

    E must be the ground energy (so H - E >= 0) and s > 0, making the system
    positive definite.  Stops at ||(H - E + s) u - v|| <= cg_tol ||v||; pass
    x0 to warm-start when sweeping shifts.  Returns (u, iterations, relres).
    """
    if s <= 0:
        raise NonPositiveShift(f"shift must be > 0, got {s}")
    v = np.asarray(v, dtype=complex)
    bnorm = float(np.linalg.norm(v))
    if bnorm == 0.0:
        return np.zeros_like(v), 0, 0.0
    shift = s - E
    diag = H.diagonal()
    inv_pre = None
    if diag is not None:
        pre = np.real(diag) + shift
        # diagonal entries of a hermitian operator are >= E, so pre >= s > 0
        inv_pre = 1.0 / np.maximum(pre, 0.5 * s)

    def apply_shifted(x):
        return H.apply(x) + shift * x

    x = np.zeros_like(v) if x0 is None else np.asarray(x0, dtype=complex).copy()
    r = v - apply_shifted(x) if x0 is not None else v.copy()
    z = r * inv_pre if inv_pre is not None else r
    p = z.copy()
    rz = np.real(np.vdot(r, z))
    tol_abs = cfg.cg_tol * bnorm
    rnorm = float(np.linalg.norm(r))
    it = 0
    while rnorm > tol_abs:
        if it >= cfg.cg_max:
            raise NonConverged(
                f"CG did not reach cg_tol={cfg.cg_tol} within {cfg.cg_max} iterations",
                rnorm / bnorm,
            )
        hp = apply_shifted(p)
        denom = np.real(np.vdot(p, hp))
        if denom <= 0:
            raise NonConverged("CG lost positive definiteness", rnorm / bnorm)
        a = rz / denom
        x = x + a * p
        r = r - a * hp
        rnorm = float(np.linalg.norm(r))
        z = r * inv_pre if inv_pre is not None else r
        rz_new = np.real(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    return x, it, rnorm / bnorm


def batched_resolvent(H: LinOp, E: float, shifts, vectors, cfg: SolverConfig,
                      parallel: bool = False):
    """Element-wise resolvent solves; order of results matches the inputs.

    Kept sequential regardless of the parallel flag so results are
    bit-reproducible; each solve is independent and failures propagate with
    their batch index attached.
    """
    shifts = list(shifts)
    vectors = list(vectors)
    if len(shifts) != len(vectors):
        raise ValueError("shifts and vectors must have equal length")
    out = []
    for idx, (s, v) in enumerate(zip(shifts, vectors)):
        try:
            u, _, _ = resolvent_apply(H, E, s, v, cfg)
        except NonConverged as exc:
            raise NonConverged(f"batch element {idx}: {exc}", exc.best_residual) from exc
        except NonPositiveShift as exc:
            raise NonPositiveShift(f"batch element {idx}: {exc}") from exc
        out.append(u)
    return out
