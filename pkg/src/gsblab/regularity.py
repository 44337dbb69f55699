"""Identity checks and infrared sweeps on solved ground states.

Every check compares two independently computed values (or a vector against
its resolvent reconstruction) and emits a RegularityReport carrying both
sides, the discrepancy, the truncation weight w_top of the state, and the
tolerance that was applied.

Tolerance ladder: identities that are exact on the truncated space (the
finite-mode decompositions, interior commutation relations) are held to
1e-12 * scale; identities mediated by resolvent solves inherit truncation
and solver error and are held to max(1e-7, 10 sqrt(w_top) + 100 cg_tol).

A finite truncation always has a ground state, so the absence-type results
are verified through their computable content: the proof inequality at
fixed cutoff, and the divergence of the number expectation as the infrared
cutoff is swept to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from itertools import combinations_with_replacement

import numpy as np

from . import fock, model as model_mod, spectral
from .fock import FockBasis, LinOp, StateVector
from .model import GroundState, GsbModel, t_operator
from .modes import CouplingFamily, ModeSet, build_radial_grid, eval_coupling, ir_class_of, l2_criteria
from .spectral import SolverConfig, resolvent_apply

__all__ = [
    "RegularityReport",
    "IrSweepRow",
    "SweepVerdict",
    "SweepTemplate",
    "exact_tol",
    "resolvent_tol",
    "pullthrough_check",
    "moment_identity",
    "absence_lower_bound",
    "higher_moment_identity",
    "number_decomposition",
    "factorial_moment_decomposition",
    "ccr_and_bound_suite",
    "ir_sweep",
]

EXACT_TOL = 1e-12
RESOLVENT_TOL_FLOOR = 1e-7
ABSENCE_TOL = 1e-9
GROUND_RESIDUAL_CAP = 1e-10


def exact_tol() -> float:
    return EXACT_TOL


def resolvent_tol(w_top: float, cg_tol: float) -> float:
    return max(RESOLVENT_TOL_FLOOR, 10.0 * math.sqrt(max(w_top, 0.0)) + 100.0 * cg_tol)


@dataclass
class RegularityReport:
    """Outcome of one identity check.

    lhs and rhs are the two computed values (scalars, or norms for vector
    identities); passed is decided by rel_err <= tol_used or
    abs_err <= tol_used * scale with scale = max(|lhs|, |rhs|, 1).
    """

    check_name: str
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    w_top: float
    tol_used: float
    passed: bool
    metadata: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        # numpy scalars sneak in through accumulations; pin plain types so
        # the JSON and CSV writers stay format-stable.
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.abs_err = float(self.abs_err)
        self.rel_err = float(self.rel_err)
        self.w_top = float(self.w_top)
        self.tol_used = float(self.tol_used)
        self.passed = bool(self.passed)

    def to_row(self) -> list:
        return [self.check_name, self.lhs, self.rhs, self.rel_err, self.w_top, self.passed]

    def to_json(self) -> dict:
        return {
            "check_name": self.check_name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "w_top": self.w_top,
            "tol_used": self.tol_used,
            "pass": self.passed,
            "metadata": self.metadata,
        }


def _scalar_report(name, lhs, rhs, w_top, tol, metadata=None,
                   deviation=False) -> RegularityReport:
    # deviation=True: lhs is itself an error measure against a zero target,
    # so rel_err is the deviation and the tolerance is absolute.
    lhs, rhs = float(lhs), float(rhs)
    abs_err = abs(lhs - rhs)
    if deviation:
        rel_err = abs_err
        passed = abs_err <= tol
    else:
        scale = max(abs(lhs), abs(rhs), 1.0)
        rel_err = abs_err / max(abs(lhs), abs(rhs), 1e-300)
        passed = rel_err <= tol or abs_err <= tol * scale
    return RegularityReport(
        check_name=name, lhs=lhs, rhs=rhs, abs_err=abs_err, rel_err=rel_err,
        w_top=w_top, tol_used=tol, passed=passed, metadata=metadata or {},
    )


def _require_solved(gs: GroundState) -> None:
    if gs.residual > GROUND_RESIDUAL_CAP:
        raise ValueError(
            f"ground-state residual {gs.residual:.3e} exceeds {GROUND_RESIDUAL_CAP:.0e}; "
            "tighten the eigensolver before running identity checks"
        )


def _mode_solves(m: GsbModel, gs: GroundState, cfg: SolverConfig, mask=None):
    """Per-mode resolvent vectors u_i = (H - E + omega_i)^-1 T(k_i) phi_g.

    mask, when given, marks the modes actually needed; skipped modes get a
    zero vector so indices stay aligned.
    """
    phi = gs.vector.array
    out, stats = [], []
    for i in range(m.grid.n_modes):
        if mask is not None and not mask[i]:
            out.append(np.zeros_like(phi))
            continue
        rhs = t_operator(m, i).apply(phi)
        u, iters, relres = resolvent_apply(m.H, gs.energy, float(m.grid.omega[i]), rhs, cfg)
        out.append(u)
        stats.append({"mode": i, "cg_iterations": iters, "cg_relres": relres})
    return out, stats


# ---------------------------------------------------------------------------
# Pull-through and moments


def pullthrough_check(m: GsbModel, gs: GroundState, f, cfg: SolverConfig) -> RegularityReport:
    """Resolvent reconstruction of the annihilated ground state.

    Compares (1 (x) a(f)) phi_g against
    -alpha sum_i conj(f_i) w_i (H - E + omega_i)^-1 T(k_i) phi_g.
    Each mode contributes one sqrt(w_i) from the smearing convention and one
    from the discrete commutator [1 (x) a_i, H_I] = sqrt(w_i) T(k_i).
    The report's lhs is the norm of the difference, rhs the norm of the
    reconstruction; per-mode solver residuals ride along in the metadata.
    """
    _require_solved(gs)
    f = np.asarray(f, dtype=complex)
    phi = gs.vector.array
    a_f = fock.fock_embed(fock.smeared_annihilator(f, m.grid, m.basis), m.d_matter)
    lhs_vec = a_f.apply(phi)
    rhs_vec = np.zeros_like(phi)
    stats = []
    if m.alpha != 0.0:
        for i in range(m.grid.n_modes):
            coeff = np.conj(f[i]) * m.grid.weights[i]
            if coeff == 0.0:
                continue
            rhs = t_operator(m, i).apply(phi)
            u, iters, relres = resolvent_apply(m.H, gs.energy, float(m.grid.omega[i]), rhs, cfg)
            rhs_vec -= m.alpha * coeff * u
            stats.append({"mode": i, "cg_iterations": iters, "cg_relres": relres})
    diff = float(np.linalg.norm(lhs_vec - rhs_vec))
    rhs_norm = float(np.linalg.norm(rhs_vec))
    lhs_norm = float(np.linalg.norm(lhs_vec))
    rel_err = diff / max(rhs_norm, lhs_norm, 1e-300)
    w_top = gs.w_top
    tol = resolvent_tol(w_top, cfg.cg_tol)
    return RegularityReport(
        check_name="pullthrough", lhs=diff, rhs=rhs_norm, abs_err=diff,
        rel_err=rel_err, w_top=w_top, tol_used=tol,
        passed=rel_err <= tol or diff <= tol * max(rhs_norm, 1.0),
        metadata={"mode_solves": stats, "lhs_norm": lhs_norm,
                  "alpha": m.alpha, "n_max": m.n_max},
    )


def moment_identity(m: GsbModel, gs: GroundState, G, cfg: SolverConfig) -> RegularityReport:
    """<phi_g, (1 (x) dGamma(G)) phi_g> against its resolvent form.

    The right-hand side is alpha^2 sum_i G_i w_i ||(H - E + omega_i)^-1
    T(k_i) phi_g||^2; G must be entrywise nonnegative.
    """
    _require_solved(gs)
    G = np.asarray(G, dtype=float)
    if np.any(G < 0):
        raise ValueError("G must be entrywise >= 0")
    phi = gs.vector.array
    dg = fock.fock_embed(fock.dgamma(G, m.basis), m.d_matter)
    lhs = float(np.real(np.vdot(phi, dg.apply(phi))))
    rhs = 0.0
    stats = []
    if m.alpha != 0.0 and np.any(G > 0):
        solves, stats = _mode_solves(m, gs, cfg, mask=G > 0)
        rhs = m.alpha**2 * float(
            sum(
                G[i] * m.grid.weights[i] * np.linalg.norm(solves[i]) ** 2
                for i in range(m.grid.n_modes)
            )
        )
    tol = resolvent_tol(gs.w_top, cfg.cg_tol)
    return _scalar_report(
        "moment_identity", lhs, rhs, gs.w_top, tol,
        metadata={"mode_solves": stats, "alpha": m.alpha, "n_max": m.n_max},
    )


def absence_lower_bound(m: GsbModel, gs: GroundState, G, cfg: SolverConfig) -> RegularityReport:
    """Projection lower bound under the number-type moment.

    Checks <phi_g, (1 (x) dGamma(G)) phi_g> >=
    alpha^2 sum_i G_i w_i |<phi_g, T(k_i) phi_g>|^2 / omega_i^2 - tol.
    The bound follows by projecting each resolvent vector onto phi_g; it is
    an equality when every T(k_i) acts as a scalar on the ground state
    (scalar matter), which is the divergence engine of the no-ground-state
    results once the right side is summed against a singular coupling.
    """
    _require_solved(gs)
    G = np.asarray(G, dtype=float)
    if np.any(G < 0):
        raise ValueError("G must be entrywise >= 0")
    phi = gs.vector.array
    dg = fock.fock_embed(fock.dgamma(G, m.basis), m.d_matter)
    lhs = float(np.real(np.vdot(phi, dg.apply(phi))))
    rhs = 0.0
    t_expect = []
    for i in range(m.grid.n_modes):
        t_phi = complex(np.vdot(phi, t_operator(m, i).apply(phi)))
        t_expect.append(t_phi)
        rhs += G[i] * m.grid.weights[i] * abs(t_phi) ** 2 / float(m.grid.omega[i]) ** 2
    rhs *= m.alpha**2
    scale = max(abs(lhs), abs(rhs), 1.0)
    violation = max(rhs - lhs, 0.0)
    tol = ABSENCE_TOL
    return RegularityReport(
        check_name="absence_lower_bound", lhs=lhs, rhs=rhs,
        abs_err=violation, rel_err=violation / scale, w_top=gs.w_top,
        tol_used=tol, passed=violation <= tol * scale,
        metadata={
            "margin": lhs - rhs,
            "equality_gap": abs(lhs - rhs) / scale,
            "t_expectations_real": [t.real for t in t_expect],
            "alpha": m.alpha, "n_max": m.n_max,
        },
    )


# ---------------------------------------------------------------------------
# Higher factorial moments

HIGHER_MODE_CAPS = {1: 64, 2: 8, 3: 4}


def _falling_factorial_expectation(gs: GroundState, basis: FockBasis, n: int) -> float:
    """<phi, prod_{j=1..n} (N - j + 1)_+ phi>, diagonal in the occupation basis."""
    totals = basis.totals.astype(float)
    ff = np.ones_like(totals)
    for j in range(1, n + 1):
        ff *= np.maximum(totals - j + 1, 0.0)
    V = gs.vector.array.reshape(gs.vector.d_matter, len(basis))
    return float(np.sum(ff[None, :] * np.abs(V) ** 2))


def higher_moment_identity(m: GsbModel, gs: GroundState, n: int,
                           cfg: SolverConfig) -> RegularityReport:
    """Factorial moment of order n against the permutation-resolvent sum.

    The right-hand side runs over mode multisets S of size n: the chain sum
    v(S) obeys v(S) = (H - E + sum_{j in S} omega_j)^-1 sum_{j in S} T(k_j)
    v(S minus one copy of j), v({}) = phi_g, which aggregates all n!
    permutation chains of a tuple; a multiset with multiplicities (m_1, ...)
    stands for n! / prod m_l! ordered tuples.  Resolvent solves are memoized
    per multiset, one solve each, and the hit rate against the naive
    per-chain count is reported.
    """
    _require_solved(gs)
    if not 1 <= n <= 3:
        raise ValueError(f"order n must be 1, 2 or 3, got {n}")
    M = m.grid.n_modes
    if M > HIGHER_MODE_CAPS[n]:
        raise ValueError(
            f"cost guard: order {n} allows at most {HIGHER_MODE_CAPS[n]} modes, got {M}"
        )
    lhs = _falling_factorial_expectation(gs, m.basis, n)

    phi = gs.vector.array
    omega = m.grid.omega
    weights = m.grid.weights
    t_ops = [t_operator(m, i) for i in range(M)]
    memo: dict = {(): phi}
    solves = 0

    def chain_sum(ms: tuple) -> np.ndarray:
        nonlocal solves
        if ms in memo:
            return memo[ms]
        rhs_vec = np.zeros_like(phi)
        for j in sorted(set(ms)):
            mult = ms.count(j)
            sub = list(ms)
            sub.remove(j)
            rhs_vec += mult * t_ops[j].apply(chain_sum(tuple(sub)))
        shift = float(sum(omega[j] for j in ms))
        u, _, _ = resolvent_apply(m.H, gs.energy, shift, rhs_vec, cfg)
        solves += 1
        memo[ms] = u
        return u

    rhs = 0.0
    if m.alpha != 0.0:
        for ms in combinations_with_replacement(range(M), n):
            counts: dict = {}
            for j in ms:
                counts[j] = counts.get(j, 0) + 1
            tuples = math.factorial(n)
            for c in counts.values():
                tuples //= math.factorial(c)
            wprod = float(np.prod([weights[j] for j in ms]))
            rhs += tuples * wprod * float(np.linalg.norm(chain_sum(ms)) ** 2)
        rhs *= m.alpha ** (2 * n)

    naive = (M**n) * math.factorial(n) * n
    hit_rate = 1.0 - solves / naive if naive > 0 else 0.0
    tol = resolvent_tol(gs.w_top, cfg.cg_tol)
    return _scalar_report(
        f"higher_moment_n{n}", lhs, rhs, gs.w_top, tol,
        metadata={
            "order": n, "resolvent_solves": solves,
            "naive_solves": naive, "memo_hit_rate": hit_rate,
            "alpha": m.alpha, "n_max": m.n_max,
        },
    )


# ---------------------------------------------------------------------------
# Exact finite-mode decompositions


def number_decomposition(psi: StateVector, K, basis: FockBasis,
                         grid: ModeSet) -> RegularityReport:
    """sum_m ||a(conj(K_m) e_m) psi||^2 == <psi, dGamma(|K|^2) psi>.

    e_m is the normalized cell function of mode m.  Exact on the truncated
    space because annihilators lower the grade without touching the cutoff.
    """
    K = np.asarray(K, dtype=complex)
    d = psi.d_matter
    lhs = 0.0
    for mo in range(basis.n_modes):
        f = np.zeros(basis.n_modes, dtype=complex)
        f[mo] = np.conj(K[mo]) / math.sqrt(grid.weights[mo])
        a_op = fock.fock_embed(fock.smeared_annihilator(f, grid, basis), d)
        lhs += float(np.linalg.norm(a_op.apply(psi.array)) ** 2)
    dg = fock.fock_embed(fock.dgamma(np.abs(K) ** 2, basis), d)
    rhs = float(np.real(np.vdot(psi.array, dg.apply(psi.array))))
    return _scalar_report("number_decomposition", lhs, rhs, psi.w_top(), EXACT_TOL)


def factorial_moment_decomposition(psi: StateVector, n: int,
                                   basis: FockBasis) -> RegularityReport:
    """sum over n-tuples ||a_{i_1} ... a_{i_n} psi||^2 == n-th falling factorial moment."""
    if n < 1 or n > basis.n_max:
        raise ValueError(f"order must lie in [1, n_max={basis.n_max}], got {n}")
    d = psi.d_matter
    a_ops = [fock.fock_embed(fock.annihilator(i, basis), d) for i in range(basis.n_modes)]

    def branch_sum(vec: np.ndarray, depth: int) -> float:
        if depth == n:
            return float(np.linalg.norm(vec) ** 2)
        return sum(branch_sum(a.apply(vec), depth + 1) for a in a_ops)

    lhs = branch_sum(psi.array, 0)
    totals = basis.totals.astype(float)
    ff = np.ones_like(totals)
    for j in range(1, n + 1):
        ff *= np.maximum(totals - j + 1, 0.0)
    V = psi.array.reshape(d, len(basis))
    rhs = float(np.sum(ff[None, :] * np.abs(V) ** 2))
    return _scalar_report("factorial_moment_decomposition", lhs, rhs, psi.w_top(), EXACT_TOL)


# ---------------------------------------------------------------------------
# Commutation relations and relative bounds


def _random_states(basis: FockBasis, rng, count: int, interior: bool = False):
    states = []
    for _ in range(count):
        v = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        if interior:
            v[~basis.interior_mask] = 0.0
        n = np.linalg.norm(v)
        states.append(v / n)
    return states


def ccr_and_bound_suite(basis: FockBasis, grid: ModeSet, seed: int = 7,
                        n_draws: int = 200) -> list:
    """Canonical commutation relations and the standard relative bounds.

    Emits one report per named check: interior CCR ([a_i, a_j*] = delta_ij
    below the top grade, [a, a] and [a*, a*] everywhere), the Leibniz
    commutators of dGamma against smeared operators on interior states, the
    adjoint pairing of creator and annihilator, and the quadratic bounds
    ||a(f) psi||^2 <= ||f/sqrt(omega)||^2 <psi, dGamma(omega) psi> and its
    creator counterpart on seeded random draws.
    """
    rng = np.random.default_rng(seed)
    M = basis.n_modes
    reports = []
    a_ops = [fock.annihilator(i, basis) for i in range(M)]
    c_ops = [fock.creator(i, basis) for i in range(M)]
    interior_cols = np.where(basis.interior_mask)[0]

    # [a_i, a_j*] - delta_ij on interior columns
    worst = 0.0
    for i in range(M):
        for j in range(M):
            comm = (a_ops[i] @ c_ops[j]) - (c_ops[j] @ a_ops[i])
            dm = comm.to_sparse().toarray()
            if i == j:
                dm = dm - np.eye(len(basis))
            worst = max(worst, float(np.abs(dm[:, interior_cols]).max()))
    reports.append(_scalar_report("ccr_interior", worst, 0.0, 0.0, 1e-13, deviation=True))

    # [a_i, a_j] and [a_i*, a_j*] on all columns
    worst = 0.0
    for i in range(M):
        for j in range(M):
            c1 = (a_ops[i] @ a_ops[j]) - (a_ops[j] @ a_ops[i])
            c2 = (c_ops[i] @ c_ops[j]) - (c_ops[j] @ c_ops[i])
            worst = max(worst, float(np.abs(c1.to_sparse().toarray()).max()),
                        float(np.abs(c2.to_sparse().toarray()).max()))
    reports.append(_scalar_report("ccr_aa_and_creation", worst, 0.0, 0.0, 1e-13, deviation=True))

    # adjoint pairing: creator equals the conjugate transpose of the annihilator
    worst = 0.0
    for i in range(M):
        dm = (c_ops[i].to_sparse() - a_ops[i].to_sparse().conj().T).toarray()
        worst = max(worst, float(np.abs(dm).max()))
    reports.append(_scalar_report("creator_adjoint_pairing", worst, 0.0, 0.0, 1e-13, deviation=True))

    # Leibniz commutators of dGamma on interior columns
    g = rng.uniform(0.25, 2.0, size=M)
    f = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    dg = fock.dgamma(g, basis)
    af = fock.smeared_annihilator(f, grid, basis)
    agf = fock.smeared_annihilator(g * f, grid, basis)
    comm_a = ((dg @ af) - (af @ dg) + agf).to_sparse().toarray()
    worst_a = float(np.abs(comm_a[:, interior_cols]).max())
    cf = af.adjoint()
    cgf = agf.adjoint()
    comm_c = ((dg @ cf) - (cf @ dg) - cgf).to_sparse().toarray()
    worst_c = float(np.abs(comm_c[:, interior_cols]).max())
    reports.append(
        _scalar_report("dgamma_leibniz_commutators", max(worst_a, worst_c), 0.0, 0.0, 1e-13,
                       deviation=True)
    )

    # relative bounds on random draws
    omega = grid.omega
    dgw = fock.dgamma(omega, basis)
    worst_a_viol = 0.0
    worst_c_viol = 0.0
    top_weight = 0.0
    for _ in range(n_draws):
        psi = _random_states(basis, rng, 1)[0]
        f = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        f_over = float(np.sum(np.abs(f) ** 2 * grid.weights / omega))
        f_norm = float(np.sum(np.abs(f) ** 2 * grid.weights))
        energy_half = float(np.real(np.vdot(psi, dgw.apply(psi))))
        a_op = fock.smeared_annihilator(f, grid, basis)
        lhs_a = float(np.linalg.norm(a_op.apply(psi)) ** 2)
        lhs_c = float(np.linalg.norm(a_op.adjoint_apply(psi)) ** 2)
        worst_a_viol = max(worst_a_viol, lhs_a - f_over * energy_half)
        worst_c_viol = max(worst_c_viol, lhs_c - (f_over * energy_half + f_norm))
        top_weight = max(top_weight, StateVector(psi, 1, basis).w_top())
    slack = 1e-10
    rep_a = RegularityReport(
        check_name="relative_bound_annihilator", lhs=worst_a_viol, rhs=0.0,
        abs_err=max(worst_a_viol, 0.0), rel_err=max(worst_a_viol, 0.0),
        w_top=top_weight, tol_used=slack, passed=worst_a_viol <= slack,
        metadata={"draws": n_draws},
    )
    rep_c = RegularityReport(
        check_name="relative_bound_creator", lhs=worst_c_viol, rhs=0.0,
        abs_err=max(worst_c_viol, 0.0), rel_err=max(worst_c_viol, 0.0),
        w_top=top_weight, tol_used=slack, passed=worst_c_viol <= slack,
        metadata={"draws": n_draws},
    )
    reports.extend([rep_a, rep_c])
    return reports


# ---------------------------------------------------------------------------
# Infrared sweep


@dataclass(frozen=True)
class SweepTemplate:
    """Model shape an infrared sweep holds fixed while sigma varies."""

    nu: int
    Lambda: float
    A: np.ndarray
    B: tuple
    n_max: int
    mass: float = 0.0
    dispersion_channelwise: bool = False

    @staticmethod
    def van_hove(nu: int, Lambda: float, n_max: int, mass: float = 0.0) -> "SweepTemplate":
        A, B = model_mod.preset_van_hove()
        return SweepTemplate(nu=nu, Lambda=Lambda, A=A, B=tuple(B), n_max=n_max, mass=mass)


@dataclass
class IrSweepRow:
    sigma: float
    n_shells: int
    E: float
    expectation_N: float
    absence_bound: float
    lam_over_w_norm: float
    max_w_top: float

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma, "n_shells": self.n_shells, "E": self.E,
            "expectation_N": self.expectation_N, "absence_bound": self.absence_bound,
            "lam_over_w_norm": self.lam_over_w_norm, "max_w_top": self.max_w_top,
        }


@dataclass
class SweepVerdict:
    """Divergence call for a sweep plus the fit diagnostics behind it.

    kind is "converging" when the number expectation is Cauchy along the
    sigma ladder (shrinking increments, final increment below ctol), else
    "diverging" when it grows like a + b log(1/sigma) with a solid linear
    fit, or grows super-logarithmically (increments not shrinking); kind
    "inconclusive" is reserved for data matching neither pattern.
    """

    kind: str
    slope_b: float
    intercept_a: float
    r_squared: float
    final_increment: float
    final_increment_rel: float
    divergence_kind: str = ""
    analytic_ir_class: str = "unknown"

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "slope_b": self.slope_b, "intercept_a": self.intercept_a,
            "r_squared": self.r_squared, "final_increment": self.final_increment,
            "final_increment_rel": self.final_increment_rel,
            "divergence_kind": self.divergence_kind,
            "analytic_ir_class": self.analytic_ir_class,
        }


def _fit_log(sigmas, values):
    x = np.log(1.0 / np.asarray(sigmas))
    y = np.asarray(values)
    b, a = np.polyfit(x, y, 1)
    pred = a + b * x
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(b), float(a), r2


def _solve_sigma_separable(grid: ModeSet, template: SweepTemplate, alpha: float,
                           cfg: SolverConfig):
    """Mode-by-mode solve for scalar-matter single-channel models.

    Such a Hamiltonian is a commuting sum of single-mode problems, so the
    ground state is the tensor product of per-mode ground states: energies
    and number expectations add.  Each mode is still solved numerically.
    """
    a0 = float(np.asarray(template.A).reshape(()))
    E = a0
    N = 0.0
    absence = 0.0
    max_w_top = 0.0
    ones = np.ones(1)
    for i in range(grid.n_modes):
        sub = grid.restrict(i)
        mi = model_mod.assemble(np.zeros((1, 1)), [np.asarray(template.B[0])], sub,
                                alpha, template.n_max)
        gs = spectral.solve_model(mi, cfg)
        E += gs.energy
        phi = gs.vector.array
        dg = fock.fock_embed(fock.dgamma(ones, mi.basis), 1)
        N += float(np.real(np.vdot(phi, dg.apply(phi))))
        t_phi = complex(np.vdot(phi, t_operator(mi, 0).apply(phi)))
        absence += float(sub.weights[0]) * abs(t_phi) ** 2 / float(sub.omega[0]) ** 2
        max_w_top = max(max_w_top, gs.w_top)
    absence *= alpha**2
    return E, N, absence, max_w_top


def _solve_sigma_full(grid: ModeSet, template: SweepTemplate, alpha: float,
                      cfg: SolverConfig):
    m = model_mod.assemble(np.asarray(template.A), [np.asarray(b) for b in template.B],
                           grid, alpha, template.n_max)
    gs = spectral.solve_model(m, cfg)
    ones = np.ones(grid.n_modes)
    rep_abs = absence_lower_bound(m, gs, ones, cfg)
    return gs.energy, rep_abs.lhs, rep_abs.rhs, gs.w_top


def ir_sweep(family: CouplingFamily, template: SweepTemplate, sigmas,
             shells_per_decade: int, alpha: float, cfg: SolverConfig,
             ctol: float = 1e-3):
    """Solve the model on a ladder of infrared cutoffs and classify the trend.

    Grids are log-midpoint with shells_per_decade shells per decade of
    [sigma, Lambda].  Each row records the ground energy, the number
    expectation (the moment-identity left side), the projection lower bound
    with G = 1, and the discrete ||lambda/omega||^2.  The verdict must agree
    with the analytic infrared class of the coupling family; scalar-matter
    single-channel models are solved mode by mode (the exact tensor-product
    factorization), everything else as one composite eigenproblem.
    """
    sigmas = [float(s) for s in sigmas]
    if len(sigmas) < 2:
        raise ValueError("need at least two sigma values")
    if any(s2 >= s1 for s1, s2 in zip(sigmas, sigmas[1:])):
        raise ValueError("sigmas must be strictly decreasing")
    if shells_per_decade < 1:
        raise ValueError("shells_per_decade must be >= 1")
    separable = model_mod.is_separable(np.asarray(template.A),
                                       [np.asarray(b) for b in template.B])
    rows = []
    for sigma in sigmas:
        decades = math.log10(template.Lambda / sigma)
        n_shells = max(1, math.ceil(shells_per_decade * decades))
        grid = build_radial_grid(template.nu, sigma, template.Lambda, n_shells,
                                 rule="log-midpoint", mass=template.mass)
        lam = eval_coupling(family, grid)
        grid = grid.with_coupling(lam, family)
        if separable:
            E, N, absence, w_top = _solve_sigma_separable(grid, template, alpha, cfg)
        else:
            E, N, absence, w_top = _solve_sigma_full(grid, template, alpha, cfg)
        crit = l2_criteria(grid, 0)
        rows.append(IrSweepRow(
            sigma=sigma, n_shells=n_shells, E=E, expectation_N=N,
            absence_bound=absence, lam_over_w_norm=crit.norm_lam_over_w,
            max_w_top=w_top,
        ))

    values = [r.expectation_N for r in rows]
    increments = [abs(v2 - v1) for v1, v2 in zip(values, values[1:])]
    slope_b, intercept_a, r2 = _fit_log(sigmas, values)
    final_inc = increments[-1]
    final_rel = final_inc / max(abs(values[-1]), 1e-300)
    shrinking = all(i2 < i1 for i1, i2 in zip(increments, increments[1:]))
    growing_values = all(v2 > v1 for v1, v2 in zip(values, values[1:]))
    non_shrinking = all(i2 >= 0.9 * i1 for i1, i2 in zip(increments, increments[1:]))
    if shrinking and final_rel <= ctol:
        kind, div_kind = "converging", ""
    elif slope_b > 0 and r2 >= 0.99:
        kind, div_kind = "diverging", "logarithmic"
    elif growing_values and non_shrinking:
        kind, div_kind = "diverging", "super-logarithmic"
    else:
        kind, div_kind = "inconclusive", ""
    verdict = SweepVerdict(
        kind=kind, slope_b=slope_b, intercept_a=intercept_a, r_squared=r2,
        final_increment=final_inc, final_increment_rel=final_rel,
        divergence_kind=div_kind,
        analytic_ir_class=ir_class_of(family, template.nu, template.mass),
    )
    return rows, verdict
