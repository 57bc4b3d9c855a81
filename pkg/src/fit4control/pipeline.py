"""Config-to-report runners behind every subcommand/endpoint.

Each runner takes a validated request model and returns a JSON-ready report
dict plus named CSV series. Reports embed the full tolerance/bound envelope
and the config echo, and contain no wall-clock data, so identical
(config, seed, version) triples serialize to identical bytes.
"""

from __future__ import annotations

import numpy as np

from . import __version__
from .certification import CertificationParams, fit_for_control_check
from .coupling import coupling_matrix
from .domain import (
    ComputationalDomain,
    ControlSet,
    Potential,
    make_control_set,
    make_domain,
)
from .errors import ConfigError
from .galerkin import (
    ControlSchedule,
    DensityMatrix,
    TruncatedSystem,
    fidelity,
    propagate_density,
    propagate_state,
    sample_trajectory,
    schedule_propagator,
    search_transfer,
)
from .ordering import snake
from .perturbation import blowup_experiment, genericity_scan, homotopy_scan, subwindow_domain
from .service.models import (
    BlowupRequest,
    CertifyRequest,
    HomotopyRequest,
    PotentialConfig,
    ScanRequest,
    SearchRequest,
    SimulateRequest,
    SnakeRequest,
    StateConfig,
    SystemConfig,
)
from .spectral import default_simplicity_tol, discretize, eigensolve

Series = dict[str, dict]  # name -> {"header": [...], "rows": [[...], ...]}


def build_domain(cfg) -> ComputationalDomain:
    truncation = None
    if cfg.truncation_half_width is not None or cfg.truncation_center is not None:
        center = cfg.truncation_center or [0.0] * len(cfg.sides)
        if cfg.truncation_half_width is None:
            raise ConfigError("truncation_half_width required", field="domain.truncation_half_width")
        truncation = (center, cfg.truncation_half_width)
    return make_domain(cfg.kind, cfg.sides, cfg.grid_points_per_side, truncation)


def build_potential(domain: ComputationalDomain, cfg: PotentialConfig, name: str) -> Potential:
    from .domain import sample_potential

    if cfg.form is not None:
        return sample_potential(domain, cfg.form, cfg.label)
    values = np.asarray(cfg.values, dtype=float)
    if values.size != domain.total_points:
        raise ConfigError(
            f"{values.size} values for a {domain.total_points}-point grid", field=f"{name}.values"
        )
    return Potential(values.reshape(domain.grid_shape), cfg.label or name)


def build_control_set(cfg) -> ControlSet:
    return make_control_set(cfg.intervals, cfg.anchor, cfg.delta)


def build_params(cfg) -> CertificationParams:
    return CertificationParams(
        levels=cfg.levels,
        gap_prefix_max=cfg.gap_prefix_max,
        coeff_bound=cfg.coeff_bound,
        relation_tolerance=cfg.relation_tolerance,
        zero_threshold=cfg.zero_threshold,
        simplicity_tolerance=cfg.simplicity_tolerance,
        tail_length=cfg.tail_length,
    )


def _provenance(request, seed: int | None = None, extra: dict | None = None) -> dict:
    p = {
        "package": "fit4control",
        "version": __version__,
        "config": request.model_dump(mode="json"),
    }
    if seed is not None:
        p["seed"] = seed
    if extra:
        p.update(extra)
    return p


def _truncation_diagnostic(domain: ComputationalDomain, potential: Potential, spec) -> dict:
    """Adequacy check for finite stand-ins of unbounded domains: low modes
    only localize away from the walls when the potential on the outer 10%
    collar dominates the levels in play."""
    from .coupling import _collar_mask

    collar = _collar_mask(domain)
    collar_min = float(np.min(potential.flat[collar]))
    lam_max = float(np.max(spec.eigenvalues))
    return {
        "collar_min_potential": collar_min,
        "lambda_max": lam_max,
        "adequate": collar_min > lam_max,
    }


def run_certify(request: CertifyRequest) -> tuple[dict, Series]:
    domain = build_domain(request.domain)
    v = build_potential(domain, request.v, "v")
    w = build_potential(domain, request.w, "w")
    control = build_control_set(request.control_set)
    params = build_params(request.params)

    anchor = control.anchor
    effective_potential = Potential(v.values + anchor * w.values, f"{v.label}+{anchor}*{w.label}")
    spec = eigensolve(discretize(domain, effective_potential), params.solve_count + 1)
    check = fit_for_control_check(spec, w, params)

    if check.passed:
        verdict = "fit-for-control (desk)" if anchor == 0.0 else "effective (desk)"
    else:
        verdict = "fails: " + ", ".join(check.failure_reasons)
    envelope = params.to_dict()
    envelope["simplicity_tolerance_effective"] = (
        default_simplicity_tol(spec)
        if params.simplicity_tolerance is None
        else params.simplicity_tolerance
    )
    report = {
        "command": "certify",
        "verdict": verdict,
        "anchor": anchor,
        "v_label": v.label,
        "w_label": w.label,
        "domain": request.domain.model_dump(mode="json"),
        "control_set": request.control_set.model_dump(mode="json"),
        "eigenvalues": [float(x) for x in spec.eigenvalues],
        "fit_check": check.to_dict(),
        "envelope": envelope,
        "provenance": _provenance(request),
    }
    if domain.kind == "truncated-confining":
        report["truncation_diagnostic"] = _truncation_diagnostic(domain, effective_potential, spec)
    series: Series = {}
    if check.connectivity is not None:
        series["connectivity"] = {
            "header": ["n", "verdict"],
            "rows": check.connectivity.to_rows(),
        }
    return report, series


def run_scan(request: ScanRequest) -> tuple[dict, Series]:
    domain = build_domain(request.domain)
    w = build_potential(domain, request.w, "w")
    params = build_params(request.params)
    scan = genericity_scan(
        domain,
        w,
        sample_count=request.samples,
        seed=request.seed,
        amplitude=request.amplitude,
        knots=request.knots,
        params=params,
        threads=request.threads,
    )
    report = {
        "command": "scan",
        "pass_fraction": scan.pass_fraction,
        "samples": [
            {
                "index": s.index,
                "seed": s.seed,
                "passed": s.passed,
                "failure_reasons": list(s.failure_reasons),
                "first_resonant_prefix": s.first_resonant_prefix,
            }
            for s in scan.samples
        ],
        "failure_counts": scan.failure_counts(),
        "ensemble": {"amplitude": request.amplitude, "knots": request.knots},
        "envelope": params.to_dict(),
        "provenance": _provenance(request, seed=request.seed),
    }
    series = {
        "samples": {
            "header": ["index", "seed", "passed", "failure_reasons"],
            "rows": [
                [s.index, s.seed, int(s.passed), "|".join(s.failure_reasons)]
                for s in scan.samples
            ],
        }
    }
    return report, series


def run_snake(request: SnakeRequest) -> tuple[dict, Series]:
    table = snake(request.dimension, request.count)
    rows = [[j + 1, *map(int, table.table[j])] for j in range(len(table))]
    report = {
        "command": "snake",
        "dimension": request.dimension,
        "count": request.count,
        "milestones": [list(m) for m in table.schedule],
        "table": [r[1:] for r in rows],
        "provenance": _provenance(request),
    }
    series = {
        "table": {
            "header": ["j", *[f"x{i + 1}" for i in range(request.dimension)]],
            "rows": rows,
        }
    }
    return report, series


def run_homotopy(request: HomotopyRequest) -> tuple[dict, Series]:
    domain = build_domain(request.domain)
    v_base = build_potential(domain, request.v_base, "v_base")
    v_target = build_potential(domain, request.v_target, "v_target")
    w = build_potential(domain, request.w, "w")
    result = homotopy_scan(
        domain,
        v_base,
        v_target,
        w,
        mu_samples=request.samples,
        levels=request.levels,
        tracked_pairs=request.tracked_pairs,
        simplicity_tolerance=request.simplicity_tolerance,
        zero_threshold=request.zero_threshold,
    )
    report = {
        "command": "homotopy",
        "levels": request.levels,
        "tracked_pairs": [list(p) for p in result.tracked_pairs],
        "flagged_mus": list(result.flagged_mus),
        "samples": [
            {
                "mu": s.mu,
                "eigenvalues": list(s.eigenvalues),
                "min_gap": s.min_gap,
                "tracked_entries": list(s.tracked_entries),
                "simplicity_flag": s.simplicity_flag,
                "coupling_flag": s.coupling_flag,
            }
            for s in result.samples
        ],
        "zero_threshold": result.zero_threshold,
        "provenance": _provenance(request),
    }
    header = ["mu", "min_gap"]
    header += [f"entry_{a}_{b}" for a, b in result.tracked_pairs]
    header += ["simplicity_flag", "coupling_flag"]
    series = {
        "path": {
            "header": header,
            "rows": [
                [s.mu, s.min_gap, *s.tracked_entries, int(s.simplicity_flag), int(s.coupling_flag)]
                for s in result.samples
            ],
        }
    }
    return report, series


def run_blowup(request: BlowupRequest) -> tuple[dict, Series]:
    domain = build_domain(request.domain)
    sub, _ = subwindow_domain(domain, request.window)
    v_window = build_potential(sub, request.v_window, "v_window")
    v_bar = build_potential(domain, request.v_bar, "v_bar")
    result = blowup_experiment(
        domain,
        request.window,
        v_window,
        v_bar,
        request.confinement_levels,
        request.level_count,
    )
    report = {
        "command": "blowup",
        "window": [list(w) for w in result.window],
        "reference_eigenvalues": list(result.reference_eigenvalues),
        "rows": [
            {
                "confinement": r.confinement,
                "eigenvalue_errors": list(r.eigenvalue_errors),
                "eigenfunction_errors": list(r.eigenfunction_errors),
                "exterior_mass": list(r.exterior_mass),
            }
            for r in result.rows
        ],
        "provenance": _provenance(request),
    }
    j_range = range(1, request.level_count + 1)
    header = ["confinement"]
    header += [f"lambda_err_{j}" for j in j_range]
    header += [f"phi_err_{j}" for j in j_range]
    header += [f"exterior_mass_{j}" for j in j_range]
    series = {
        "convergence": {
            "header": header,
            "rows": [
                [r.confinement, *r.eigenvalue_errors, *r.eigenfunction_errors, *r.exterior_mass]
                for r in result.rows
            ],
        }
    }
    return report, series


def build_system(cfg: SystemConfig) -> TruncatedSystem:
    control = build_control_set(cfg.control_set) if cfg.control_set else None
    if cfg.eigenvalues is not None:
        b = np.asarray(cfg.coupling, dtype=float)
        b = np.triu(b) + np.triu(b, 1).T  # tolerate asymmetric input rounding
        return TruncatedSystem(np.asarray(cfg.eigenvalues, dtype=float), b, control)
    domain = build_domain(cfg.domain)
    v = build_potential(domain, cfg.v, "system.v")
    w = build_potential(domain, cfg.w, "system.w")
    spec = eigensolve(discretize(domain, v), cfg.levels + 1)
    mat = coupling_matrix(spec, w, n=cfg.levels)
    return TruncatedSystem.from_spectrum(spec, mat, control)


def build_state(cfg: StateConfig, levels: int, name: str) -> np.ndarray:
    if cfg.basis is not None:
        if cfg.basis > levels:
            raise ConfigError(f"basis index {cfg.basis} exceeds {levels} levels", field=name)
        psi = np.zeros(levels, dtype=complex)
        psi[cfg.basis - 1] = 1.0
        return psi
    comps = np.array([complex(re, im) for re, im in cfg.components])
    if comps.size != levels:
        raise ConfigError(f"{comps.size} components for a {levels}-level system", field=name)
    norm = np.linalg.norm(comps)
    if norm == 0:
        raise ConfigError("state must be nonzero", field=name)
    return comps / norm


def _state_pairs(psi: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in psi]


def run_simulate(request: SimulateRequest) -> tuple[dict, Series]:
    system = build_system(request.system)
    schedule = ControlSchedule(tuple((s.value, s.duration) for s in request.schedule))
    series: Series = {}
    report: dict = {
        "command": "simulate",
        "levels": system.levels,
        "schedule": [[u, t] for u, t in schedule.segments],
        "total_duration": schedule.total_duration,
        "provenance": _provenance(request),
    }
    if request.initial_state is not None:
        psi0 = build_state(request.initial_state, system.levels, "initial_state")
        psi = propagate_state(system, psi0, schedule)
        report["final_state"] = _state_pairs(psi)
        report["norm_error"] = abs(float(np.linalg.norm(psi)) - 1.0)
        u_total = schedule_propagator(system, schedule)
        report["unitarity_error"] = float(
            np.max(np.abs(u_total.conj().T @ u_total - np.eye(system.levels)))
        )
        if request.target_state is not None:
            target = build_state(request.target_state, system.levels, "target_state")
            res = fidelity(psi, target)
            report["fidelity"] = {"overlap": res.overlap, "distance": res.distance}
        if request.sample_times is not None:
            states = sample_trajectory(system, psi0, schedule, request.sample_times)
            header = ["t"]
            for i in range(system.levels):
                header += [f"re_{i + 1}", f"im_{i + 1}"]
            rows = []
            for t, row in zip(request.sample_times, states):
                flat = [t]
                for z in row:
                    flat += [float(z.real), float(z.imag)]
                rows.append(flat)
            series["trajectory"] = {"header": header, "rows": rows}
    else:
        weights = [wgt for wgt, _ in request.initial_mixture]
        states = [
            build_state(s, system.levels, f"initial_mixture[{i}]")
            for i, (_, s) in enumerate(request.initial_mixture)
        ]
        rho0 = DensityMatrix.mixture(weights, states)
        rho = propagate_density(system, rho0, schedule)
        spectrum0 = np.sort(np.linalg.eigvalsh(rho0.matrix))
        spectrum1 = np.sort(np.linalg.eigvalsh(rho.matrix))
        res = fidelity(rho0, rho)
        report["density"] = {
            "initial_spectrum": [float(x) for x in spectrum0],
            "final_spectrum": [float(x) for x in spectrum1],
            "spectrum_drift": float(np.max(np.abs(spectrum0 - spectrum1))),
            "distance_from_initial": res.distance,
            "final_matrix_re": [[float(v) for v in row] for row in rho.matrix.real],
            "final_matrix_im": [[float(v) for v in row] for row in rho.matrix.imag],
        }
    return report, series


def run_search(request: SearchRequest) -> tuple[dict, Series]:
    system = build_system(request.system)
    psi0 = build_state(request.initial_state, system.levels, "initial_state")
    target = build_state(request.target_state, system.levels, "target_state")
    result = search_transfer(
        system,
        psi0,
        target,
        budget=request.budget,
        seed=request.seed,
        max_segments=request.max_segments,
        duration_range=(request.duration_min, request.duration_max),
        threads=request.threads,
    )
    report = {
        "command": "search",
        "levels": system.levels,
        "budget": request.budget,
        "best_overlap": result.overlap,
        "best_schedule": [[u, t] for u, t in result.schedule.segments],
        "evaluated": result.evaluated,
        "improvements": [[i, f] for i, f in result.improvements],
        "provenance": _provenance(request, seed=request.seed),
    }
    series = {
        "improvements": {
            "header": ["candidate", "overlap"],
            "rows": [[i, f] for i, f in result.improvements],
        },
        "schedule": {
            "header": ["value", "duration"],
            "rows": [[u, t] for u, t in result.schedule.segments],
        },
    }
    return report, series


RUNNERS = {
    "certify": (CertifyRequest, run_certify),
    "scan": (ScanRequest, run_scan),
    "snake": (SnakeRequest, run_snake),
    "homotopy": (HomotopyRequest, run_homotopy),
    "blowup": (BlowupRequest, run_blowup),
    "simulate": (SimulateRequest, run_simulate),
    "search": (SearchRequest, run_search),
}
