"""Configuration-driven entry point.

One JSON config describes a model, a solver and a list of checks; `run`
builds and solves the model, executes the checks, and writes
resolved_config.json, report.json, report.csv (and sweep.csv when an
infrared sweep ran) into the output directory.  Exit codes: 0 all checks
passed, 1 a check failed, 2 config/schema violation, 3 solver failure.

Reports are written with deterministic formatting, so identical configs and
seeds produce byte-identical report.csv files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import List, Literal, Optional, Union

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import fock, model as model_mod, modes, regularity, spectral

__all__ = ["main", "RunConfig", "load_config", "execute_run"]


# ---------------------------------------------------------------------------
# Configuration schema


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    nu: int = Field(ge=1, le=3)
    sigma: float = Field(gt=0)
    Lambda: float = Field(gt=0)
    n_shells: int = Field(ge=1)
    rule: Literal["midpoint", "log-midpoint"] = "midpoint"

    @model_validator(mode="after")
    def _ordered(self):
        if self.Lambda <= self.sigma:
            raise ValueError("Lambda must exceed sigma")
        return self


class CouplingConfig(_Strict):
    rho0: float = Field(ge=0)
    p: float = 0.0
    uv: float = Field(gt=0)
    profile: Literal["hard-cutoff", "gaussian"] = "hard-cutoff"

    def family(self) -> modes.CouplingFamily:
        return modes.CouplingFamily(rho0=self.rho0, p=self.p, uv=self.uv, profile=self.profile)


class DispersionConfig(_Strict):
    law: Literal["massless", "massive"] = "massless"
    mass: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _mass_consistent(self):
        if self.law == "massive" and self.mass <= 0:
            raise ValueError("massive dispersion requires mass > 0")
        if self.law == "massless" and self.mass != 0:
            raise ValueError("massless dispersion requires mass = 0")
        return self


class ModelConfig(_Strict):
    preset: Literal["van_hove", "spin_boson_2level", "gsb_custom"]
    delta: float = Field(default=1.0, ge=0)
    A: Optional[List[List[float]]] = None
    B: Optional[List[List[List[float]]]] = None

    @model_validator(mode="after")
    def _custom_needs_matrices(self):
        if self.preset == "gsb_custom" and (self.A is None or self.B is None):
            raise ValueError("gsb_custom requires explicit A and B matrices")
        return self

    def matter(self):
        if self.preset == "van_hove":
            return model_mod.preset_van_hove()
        if self.preset == "spin_boson_2level":
            return model_mod.preset_spin_boson(self.delta)
        return np.asarray(self.A, dtype=float), [np.asarray(b, dtype=float) for b in self.B]


class SolverSection(_Strict):
    eig_tol: float = Field(default=1e-11, gt=0, lt=1)
    max_lanczos: int = Field(default=2000, ge=1)
    cg_tol: float = Field(default=1e-11, gt=0, lt=1)
    cg_max: int = Field(default=20000, ge=1)
    seed: int = 7

    def to_solver(self, seed_override: Optional[int] = None) -> spectral.SolverConfig:
        return spectral.SolverConfig(
            eig_tol=self.eig_tol, max_lanczos=self.max_lanczos,
            cg_tol=self.cg_tol, cg_max=self.cg_max,
            seed=self.seed if seed_override is None else seed_override,
        )


ColumnSpec = Union[Literal["ones", "omega", "omega_sq", "coupling"], List[float]]


class PullthroughCheck(_Strict):
    kind: Literal["pullthrough"]
    f: ColumnSpec = "coupling"


class MomentCheck(_Strict):
    kind: Literal["moment"]
    G: ColumnSpec = "ones"


class AbsenceCheck(_Strict):
    kind: Literal["absence"]
    G: ColumnSpec = "ones"


class HigherCheck(_Strict):
    kind: Literal["higher"]
    n: int = Field(ge=1, le=3)


class AppendixCheck(_Strict):
    kind: Literal["appendix"]
    draws: int = Field(default=50, ge=1)
    order: int = Field(default=2, ge=1)


class CcrCheck(_Strict):
    kind: Literal["ccr"]
    draws: int = Field(default=200, ge=1)
    n_modes: Optional[int] = Field(default=None, ge=1)
    n_max: Optional[int] = Field(default=None, ge=1)


class IrSweepCheck(_Strict):
    kind: Literal["ir_sweep"]
    sigmas: List[float] = Field(min_length=2)
    shells_per_decade: int = Field(default=16, ge=1)
    ctol: float = Field(default=1e-3, gt=0)
    n_max: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _decreasing(self):
        if any(b >= a for a, b in zip(self.sigmas, self.sigmas[1:])):
            raise ValueError("sigmas must be strictly decreasing")
        if self.sigmas[0] <= 0 or self.sigmas[-1] <= 0:
            raise ValueError("sigmas must be positive")
        return self


CheckConfig = Union[
    PullthroughCheck, MomentCheck, AbsenceCheck, HigherCheck,
    AppendixCheck, CcrCheck, IrSweepCheck,
]


class RunConfig(_Strict):
    model: ModelConfig
    grid: GridConfig
    coupling: List[CouplingConfig] = Field(min_length=1)
    dispersion: DispersionConfig = DispersionConfig()
    alpha: float
    n_max: int = Field(ge=0)
    solver: SolverSection = SolverSection()
    checks: List[CheckConfig] = Field(default_factory=list)
    output: Optional[str] = None
    seed: Optional[int] = None
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _channels_match(self):
        d = {"van_hove": 1, "spin_boson_2level": 1}.get(self.model.preset)
        expected = d if d is not None else (len(self.model.B) if self.model.B else None)
        if expected is not None and len(self.coupling) != expected:
            raise ValueError(
                f"model has {expected} coupling channel(s) but {len(self.coupling)} were given"
            )
        return self


class ConfigError(Exception):
    """Invalid configuration; mapped to exit code 2."""


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"]) or "<root>"
            lines.append(f"  {loc}: {err['msg']}")
        raise ConfigError("config schema violation:\n" + "\n".join(lines)) from exc


# ---------------------------------------------------------------------------
# Building and running


def build_grid(cfg: RunConfig) -> modes.ModeSet:
    g = cfg.grid
    grid = modes.build_radial_grid(
        g.nu, g.sigma, g.Lambda, g.n_shells, rule=g.rule, mass=cfg.dispersion.mass
    )
    for c in cfg.coupling:
        fam = c.family()
        grid = grid.with_coupling(modes.eval_coupling(fam, grid), fam)
    return grid


def build_model(cfg: RunConfig, grid: modes.ModeSet) -> model_mod.GsbModel:
    A, B = cfg.model.matter()
    return model_mod.assemble(A, B, grid, cfg.alpha, cfg.n_max)


def _column(selector, grid: modes.ModeSet) -> np.ndarray:
    if isinstance(selector, list):
        col = np.asarray(selector, dtype=float)
        if len(col) != grid.n_modes:
            raise ConfigError(
                f"explicit column has {len(col)} entries for {grid.n_modes} modes"
            )
        return col
    if selector == "ones":
        return np.ones(grid.n_modes)
    if selector == "omega":
        return np.asarray(grid.omega)
    if selector == "omega_sq":
        return np.asarray(grid.omega) ** 2
    if selector == "coupling":
        return np.asarray(grid.channel(0))
    raise ConfigError(f"unknown column selector {selector!r}")


def execute_run(cfg: RunConfig, out_dir, selected_kinds=None, threads=None):
    """Run the configured checks; returns (reports, sweep_payloads).

    selected_kinds filters config.checks by kind; None runs everything.
    """
    grid = build_grid(cfg)
    solver = cfg.solver.to_solver(cfg.seed)
    checks = cfg.checks
    if selected_kinds is not None:
        checks = [c for c in checks if c.kind in selected_kinds]
        if not checks:
            raise ConfigError(
                f"no checks of kind {sorted(selected_kinds)} in the config"
            )

    gsb = None
    gs = None

    def ensure_solved():
        nonlocal gsb, gs
        if gsb is None:
            gsb = build_model(cfg, grid)
        if gs is None:
            gs = spectral.solve_model(gsb, solver)
        return gsb, gs

    reports = []
    sweeps = []
    for chk in checks:
        if chk.kind == "pullthrough":
            m, g = ensure_solved()
            reports.append(regularity.pullthrough_check(m, g, _column(chk.f, grid), solver))
        elif chk.kind == "moment":
            m, g = ensure_solved()
            reports.append(regularity.moment_identity(m, g, _column(chk.G, grid), solver))
        elif chk.kind == "absence":
            m, g = ensure_solved()
            reports.append(regularity.absence_lower_bound(m, g, _column(chk.G, grid), solver))
        elif chk.kind == "higher":
            m, g = ensure_solved()
            reports.append(regularity.higher_moment_identity(m, g, chk.n, solver))
        elif chk.kind == "appendix":
            m, _ = (build_model(cfg, grid), None) if gsb is None else (gsb, None)
            gsb = m
            rng = np.random.default_rng(solver.seed)
            worst_num = None
            worst_fac = None
            for _ in range(chk.draws):
                v = rng.standard_normal(m.dim) + 1j * rng.standard_normal(m.dim)
                psi = m.state(v / np.linalg.norm(v))
                K = rng.standard_normal(grid.n_modes) + 1j * rng.standard_normal(grid.n_modes)
                rep_n = regularity.number_decomposition(psi, K, m.basis, grid)
                order = min(chk.order, m.n_max) if m.n_max >= 1 else 1
                rep_f = regularity.factorial_moment_decomposition(psi, order, m.basis)
                if worst_num is None or rep_n.rel_err > worst_num.rel_err:
                    worst_num = rep_n
                if worst_fac is None or rep_f.rel_err > worst_fac.rel_err:
                    worst_fac = rep_f
            worst_num.metadata["draws"] = chk.draws
            worst_fac.metadata["draws"] = chk.draws
            reports.extend([worst_num, worst_fac])
        elif chk.kind == "ccr":
            k = chk.n_modes or min(grid.n_modes, 3)
            n_max_small = chk.n_max or min(cfg.n_max, 4)
            small_grid = grid.head(k)
            small_basis = fock.enumerate_basis(k, max(n_max_small, 1))
            reports.extend(
                regularity.ccr_and_bound_suite(small_basis, small_grid,
                                               seed=solver.seed, n_draws=chk.draws)
            )
        elif chk.kind == "ir_sweep":
            A, B = cfg.model.matter()
            template = regularity.SweepTemplate(
                nu=cfg.grid.nu, Lambda=cfg.grid.Lambda, A=A, B=tuple(B),
                n_max=chk.n_max if chk.n_max is not None else cfg.n_max,
                mass=cfg.dispersion.mass,
            )
            family = cfg.coupling[0].family()
            rows, verdict = regularity.ir_sweep(
                family, template, chk.sigmas, chk.shells_per_decade, cfg.alpha,
                solver, ctol=chk.ctol,
            )
            expected = {"singular": "diverging", "regular": "converging"}.get(
                verdict.analytic_ir_class
            )
            agreed = expected is None or verdict.kind == expected
            last = rows[-1]
            reports.append(regularity.RegularityReport(
                check_name="ir_sweep_verdict",
                lhs=last.expectation_N, rhs=last.absence_bound,
                abs_err=abs(last.expectation_N - last.absence_bound),
                rel_err=abs(last.expectation_N - last.absence_bound)
                / max(abs(last.expectation_N), abs(last.absence_bound), 1e-300),
                w_top=last.max_w_top, tol_used=chk.ctol, passed=bool(agreed),
                metadata={"verdict": verdict.to_json(),
                          "rows": [r.to_json() for r in rows]},
            ))
            sweeps.append((rows, verdict))
        else:  # pragma: no cover - schema forbids unknown kinds
            raise ConfigError(f"unknown check kind {chk.kind!r}")
    return reports, sweeps


# ---------------------------------------------------------------------------
# Artifact writers (deterministic formatting)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check_name", "lhs", "rhs", "rel_err", "w_top", "pass"])
        for r in reports:
            w.writerow([_fmt(v) for v in r.to_row()])


def write_sweep_csv(sweeps, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "n_shells", "E", "expectation_N", "absence_bound",
                    "lam_over_w_norm", "max_w_top", "verdict"])
        for rows, verdict in sweeps:
            for r in rows:
                w.writerow([_fmt(v) for v in
                            [r.sigma, r.n_shells, r.E, r.expectation_N, r.absence_bound,
                             r.lam_over_w_norm, r.max_w_top, verdict.kind]])


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_report_json(reports, sweeps, meta, path) -> None:
    payload = {
        "metadata": meta,
        "reports": [r.to_json() for r in reports],
        "sweeps": [
            {"verdict": v.to_json(), "rows": [r.to_json() for r in rows]}
            for rows, v in sweeps
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _resolved_config(cfg: RunConfig, threads: Optional[int]) -> dict:
    resolved = cfg.model_dump(mode="json")
    resolved["threads"] = threads or cfg.threads or os.cpu_count() or 1
    if resolved["seed"] is not None:
        resolved["solver"]["seed"] = resolved["seed"]
    return resolved


# ---------------------------------------------------------------------------
# Command-line interface


def _common_run(config, out, threads, seed, dry_run, selected=None, require_sweep=False):
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    out_dir = Path(out or cfg.output or "gsblab_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = _resolved_config(cfg, threads)
    with open(out_dir / "resolved_config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if dry_run:
        click.echo(f"dry run: resolved config written to {out_dir}")
        sys.exit(0)
    try:
        reports, sweeps = execute_run(cfg, out_dir, selected_kinds=selected,
                                      threads=resolved["threads"])
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except spectral.NonConverged as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(3)
    if require_sweep and not sweeps:
        click.echo("error: config contains no ir_sweep check", err=True)
        sys.exit(2)
    meta = {"threads": resolved["threads"], "seed": resolved["solver"]["seed"],
            "config": resolved}
    write_report_csv(reports, out_dir / "report.csv")
    write_report_json(reports, sweeps, meta, out_dir / "report.json")
    if sweeps:
        write_sweep_csv(sweeps, out_dir / "sweep.csv")
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        click.echo(f"[{status}] {r.check_name}: lhs={r.lhs:.12g} rhs={r.rhs:.12g} "
                   f"rel_err={r.rel_err:.3g} w_top={r.w_top:.3g}")
    if all(r.passed for r in reports):
        click.echo(f"all {len(reports)} checks passed")
        sys.exit(0)
    failed = sum(1 for r in reports if not r.passed)
    click.echo(f"{failed} of {len(reports)} checks failed", err=True)
    sys.exit(1)


@click.group()
def main():
    """Ground-state regularity laboratory for generalized spin-boson models."""


@main.command()
@click.option("--config", required=True, type=click.Path(), help="JSON run configuration.")
@click.option("--out", default=None, type=click.Path(), help="Output directory.")
@click.option("--threads", default=None, type=int, help="Worker count recorded in metadata.")
@click.option("--seed", default=None, type=int, help="Override the solver seed.")
@click.option("--dry-run", is_flag=True, help="Validate and write the resolved config only.")
def run(config, out, threads, seed, dry_run):
    """Build the model, solve, run every configured check."""
    _common_run(config, out, threads, seed, dry_run)


@main.command()
@click.option("--config", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@click.option("--threads", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--dry-run", is_flag=True)
def sweep(config, out, threads, seed, dry_run):
    """Run only the infrared sweep checks from the config."""
    _common_run(config, out, threads, seed, dry_run,
                selected={"ir_sweep"}, require_sweep=True)


@main.command()
@click.argument("name", type=click.Choice(
    ["pullthrough", "moment", "absence", "higher", "appendix", "ccr", "ir_sweep"]))
@click.option("--config", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
@click.option("--threads", default=None, type=int)
@click.option("--seed", default=None, type=int)
def check(name, config, out, threads, seed):
    """Run only the named check from the config."""
    _common_run(config, out, threads, seed, False, selected={name})


@main.command()
@click.argument("what", type=click.Choice(["basis", "operator", "grid"]))
@click.option("--config", required=True, type=click.Path())
@click.option("--out", default=None, type=click.Path())
def dump(what, config, out):
    """Dump the basis, the Hamiltonian (MatrixMarket), or the grid."""
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    out_dir = Path(out or cfg.output or "gsblab_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = build_grid(cfg)
    if what == "grid":
        path = out_dir / "grid.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "r", "w", "omega"]
                       + [f"lambda_{j + 1}" for j in range(grid.n_channels)])
            for i in range(grid.n_modes):
                row = [i, grid.points[i], grid.weights[i], grid.omega[i]]
                row += [grid.channel(j)[i] for j in range(grid.n_channels)]
                w.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                            for v in row])
        click.echo(f"wrote {path}")
    elif what == "basis":
        basis = fock.enumerate_basis(grid.n_modes, cfg.n_max)
        path = out_dir / "basis.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index"] + [f"n_{i + 1}" for i in range(grid.n_modes)] + ["total"])
            for t, occ in enumerate(basis.states):
                w.writerow([t, *occ, sum(occ)])
        click.echo(f"wrote {path} ({len(basis)} states)")
    else:
        gsb = build_model(cfg, grid)
        path = out_dir / "hamiltonian.mtx"
        fock.write_matrix_market(gsb.H, path)
        click.echo(f"wrote {path}")
    sys.exit(0)


if __name__ == "__main__":
    main()
