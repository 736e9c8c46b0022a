"""Waveform design drivers and the two benchmark waveforms.

Three designs share the same ADMM skeleton: the bound-oriented and
integrated-beampattern solvers maximize a quadratic form of the waveform
under the power and per-element constraints, while the fair (max-min)
solver additionally carries one auxiliary vector per constraint angle and
a scalar level variable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .admm import AdmmConfig, AdmmTrace, dual_update, papr_project, _x_update_eig
from .estimation import AngularGrid
from .pcrb import pcrb_upper_bound
from .priors import DistributionMoments, PointMass, TargetDistribution, compute_moments
from .ula import ArrayConfig, Feasibility, steering_matrix, waveform_feasibility

__all__ = [
    "SolveResult",
    "solve_pcrb",
    "solve_psbp_integrated",
    "solve_psbp_fair",
    "baseline_omni",
    "baseline_crb",
]

# Loose feasibility used while tracking the best iterate; the returned
# waveform is polished to the tight tolerances afterwards.
_TRACK_SLACK = 1e-6
_FINAL_SLACK = 1e-9


@dataclass(frozen=True)
class SolveResult:
    """Designed waveform with its iteration history and native metric.

    ``metric_value`` is the solver's own figure of merit recomputed from
    the returned waveform: the bound surrogate at unit amplitude for the
    bound-oriented solver, the minimum density-scaled beampattern for the
    fair solver, and the density-weighted beampattern sum for the
    integrated solver.
    """

    waveform: np.ndarray
    trace: AdmmTrace
    metric_value: float
    feasibility: Feasibility
    iterations: int
    converged: bool


def _initial_waveform(cfg: ArrayConfig, rng: np.random.Generator) -> np.ndarray:
    scale = np.sqrt(cfg.power / (cfg.m_t * cfg.l_samples))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(cfg.m_t, cfg.l_samples))
    return scale * np.exp(1j * phases)


def _polish(x: np.ndarray, power: float, bound: float, max_rounds: int = 200) -> np.ndarray:
    """Alternate the element cap and the exact power rescale to feasibility."""
    for _ in range(max_rounds):
        x = papr_project(x, bound)
        x = x * np.sqrt(power / float(np.sum(np.abs(x) ** 2)))
        if float(np.max(np.abs(x) ** 2)) <= bound * (1.0 + _FINAL_SLACK):
            return x
    warnings.warn("feasibility polish did not converge; returning best effort")
    return x


def _auto_rho(xi: np.ndarray, admm: AdmmConfig) -> float:
    if admm.rho is not None:
        return admm.rho
    if not admm.rho_auto:
        raise ValueError("rho is unset and rho_auto is disabled")
    return admm.safety * np.sqrt(3.0) * float(np.linalg.norm(xi + xi.conj().T))


def _maximize_quadratic(
    xi: np.ndarray,
    cfg: ArrayConfig,
    admm: AdmmConfig,
    seed: int,
) -> tuple[np.ndarray, AdmmTrace, bool]:
    """ADMM loop for ``min -Tr{X^H Xi X}`` under power and element caps."""
    rng = np.random.default_rng(seed)
    bound = cfg.elem_bound
    rho = _auto_rho(xi, admm)

    x = _initial_waveform(cfg, rng)
    u = x.copy()
    d = np.zeros_like(x)
    sym = xi + xi.conj().T
    pmat = rho * np.eye(cfg.m_t) - sym
    sig, g = np.linalg.eigh(pmat)

    objective, al_values, residuals, mu_iters = [], [], [], []
    best_obj = np.inf
    best_x = None
    converged = False
    gamma = admm.dual_step
    for _ in range(admm.max_iters):
        # Element-cap block first, then the waveform: the augmented
        # Lagrangian descends only when the quadratic block sees the
        # freshly projected auxiliary.
        u_prev = u
        u = papr_project(x - d, bound)
        q = rho * (u + d)
        x, _, iters = _x_update_eig(g, sig, q, cfg.power, admm.mu_tol)
        d = dual_update(d, gamma * u, gamma * x)
        obj = -float(np.vdot(x, xi @ x).real)
        res = float(np.sum(np.abs(u - x) ** 2))
        dual_res = float(np.sum(np.abs(u - u_prev) ** 2))
        al = obj + 0.5 * rho * float(np.sum(np.abs(u - x + d) ** 2))

        objective.append(obj)
        al_values.append(al)
        residuals.append(res)
        mu_iters.append(iters)
        if float(np.max(np.abs(x) ** 2)) <= bound * (1.0 + _TRACK_SLACK) and obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        # A slack element cap keeps the split residual at zero from the
        # first step, so stationarity of the auxiliary must be required
        # as well before stopping.
        if len(residuals) > 1 and res <= admm.primal_tol and dual_res <= admm.primal_tol:
            converged = True
            break

    final = best_x if best_x is not None else x
    final = _polish(final, cfg.power, bound)
    trace = AdmmTrace(
        objective=np.array(objective),
        augmented_lagrangian=np.array(al_values),
        residual=np.array(residuals),
        mu_iterations=np.array(mu_iters, dtype=int),
    )
    return final, trace, converged


def solve_pcrb(
    mom: DistributionMoments,
    cfg: ArrayConfig,
    admm: AdmmConfig,
    seed: int,
) -> SolveResult:
    """Minimize the angle-bound surrogate over feasible waveforms.

    Maximizes ``Tr{X^H xi0 X}`` under the total power and per-element
    constraints; the reported metric is the resulting bound surrogate at
    unit amplitude.
    """
    x, trace, converged = _maximize_quadratic(mom.xi0, cfg, admm, seed)
    metric = pcrb_upper_bound(x, mom, 1.0, cfg.noise_power)
    return SolveResult(
        waveform=x,
        trace=trace,
        metric_value=metric,
        feasibility=waveform_feasibility(x, cfg),
        iterations=len(trace),
        converged=converged,
    )


def _psbp_points(dist: TargetDistribution, grid: AngularGrid, pdf_floor: float):
    """Constraint angles and density values over the possible target region."""
    if isinstance(dist, PointMass):
        raise ValueError("beampattern grids need a density; got a point mass")
    f = np.asarray(dist.pdf(grid.points), dtype=float)
    peak = float(f.max())
    if peak <= 0:
        raise ValueError("prior density is zero at every grid point")
    mask = f >= pdf_floor * peak
    return grid.points[mask], f[mask]


def solve_psbp_integrated(
    dist: TargetDistribution,
    cfg: ArrayConfig,
    grid: AngularGrid,
    admm: AdmmConfig,
    seed: int,
    *,
    pdf_floor: float = 1e-6,
    bare_sum: bool = False,
) -> SolveResult:
    """Maximize the density-weighted beampattern sum over the grid.

    By default the sum is scaled by the grid cell width so it approximates
    the density-weighted integral and is stable under grid refinement;
    ``bare_sum`` reproduces the unscaled sum instead. A point-mass prior
    yields the rank-one weighting at its angle.
    """
    if isinstance(dist, PointMass):
        pts = np.array([dist.theta0])
        w = np.array([1.0])
    else:
        pts, f = _psbp_points(dist, grid, pdf_floor)
        w = f if bare_sum else f * grid.cell
    a = steering_matrix(pts, cfg.m_t, cfg.spacing)
    xi = np.einsum("ip,p,kp->ik", a, w, a.conj())
    x, trace, converged = _maximize_quadratic(xi, cfg, admm, seed)
    metric = float(w @ np.sum(np.abs(x.conj().T @ a) ** 2, axis=0))
    return SolveResult(
        waveform=x,
        trace=trace,
        metric_value=metric,
        feasibility=waveform_feasibility(x, cfg),
        iterations=len(trace),
        converged=converged,
    )


def _inflate_columns(h: np.ndarray, fvals: np.ndarray, eta: float) -> np.ndarray:
    """Per-angle auxiliary update: keep columns already above the level,
    radially inflate the rest to squared norm ``f * eta``."""
    hn = np.linalg.norm(h, axis=0)
    out = h.copy()
    need = fvals * eta > hn**2
    if np.any(need):
        safe = np.maximum(hn[need], 1e-300)
        out[:, need] = h[:, need] * (np.sqrt(fvals[need] * eta) / safe)
    return out


def _eta_update(hnorms: np.ndarray, fvals: np.ndarray, rho3: float) -> float:
    """Level update of the max-min solver by bisecting its optimality condition.

    The objective ``-eta + (rho3/2) * sum_p [inflation cost]`` is convex in
    ``eta`` with a monotonically increasing derivative; each constraint
    angle joins the active set continuously, so the set is re-evaluated
    inside every derivative evaluation and the bisection lands on the
    joint fixed point of the level and its active set.
    """
    sum_f = float(fvals.sum())
    if 0.5 * rho3 * sum_f <= 1.0:
        raise RuntimeError(
            "rho3 too small for a bounded level update; increase rho3 "
            f"above {2.0 / sum_f:.3e}"
        )

    def derivative(eta: float) -> float:
        active = fvals * eta > hnorms**2
        if not np.any(active):
            return -1.0
        terms = fvals[active] - np.sqrt(fvals[active]) * hnorms[active] / np.sqrt(eta)
        return -1.0 + 0.5 * rho3 * float(terms.sum())

    sqrt_hi = 0.5 * rho3 * float(np.sqrt(fvals) @ hnorms) / (0.5 * rho3 * sum_f - 1.0)
    hi = max(sqrt_hi**2, float((hnorms**2 / fvals).max()), 1e-30)
    if derivative(hi) < 0:  # everything active and still descending: cap is the root
        return hi
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if derivative(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


def solve_psbp_fair(
    dist: TargetDistribution,
    cfg: ArrayConfig,
    grid: AngularGrid,
    admm: AdmmConfig,
    seed: int,
    *,
    pdf_floor: float = 1e-6,
) -> SolveResult:
    """Maximize the minimum density-scaled beampattern over the grid.

    Splits the element cap onto one auxiliary matrix and the per-angle
    beampattern onto one auxiliary vector per constraint angle; the level
    variable and those vectors are updated jointly from their first-order
    conditions.
    """
    pts, f = _psbp_points(dist, grid, pdf_floor)
    rng = np.random.default_rng(seed)
    bound = cfg.elem_bound

    if admm.rho_fair is not None:
        rho2, rho3 = admm.rho_fair
    elif admm.rho_auto:
        # Well above the level-update bound 2/sum(f) but small enough that
        # the beampattern split stays soft; the element-cap penalty rides
        # a factor above it.
        rho3 = admm.safety * 40.0 / float(f.sum())
        rho2 = 2.0 * rho3
    else:
        raise ValueError("rho_fair is unset and rho_auto is disabled")

    a = steering_matrix(pts, cfg.m_t, cfg.spacing)
    r = a @ a.conj().T
    r = 0.5 * (r + r.conj().T)
    pmat = rho2 * np.eye(cfg.m_t) + rho3 * r
    sig, gvec = np.linalg.eigh(pmat)

    x = _initial_waveform(cfg, rng)
    t = x.copy()
    d2 = np.zeros_like(x)
    w = x.conj().T @ a
    gmat = w.copy()
    b = np.zeros_like(w)

    objective, al_values, residuals, mu_iters = [], [], [], []
    best_obj = -np.inf
    best_x = None
    converged = False
    gamma = admm.dual_step
    for _ in range(admm.max_iters):
        t_prev, g_prev = t, gmat
        t = papr_project(x - d2, bound)
        h = w - b
        eta = _eta_update(np.linalg.norm(h, axis=0), f, rho3)
        gmat = _inflate_columns(h, f, eta)
        q = rho2 * (t + d2) + rho3 * (a @ (gmat + b).conj().T)
        x, _, iters = _x_update_eig(gvec, sig, q, cfg.power, admm.mu_tol)
        w = x.conj().T @ a
        d2 = dual_update(d2, gamma * t, gamma * x)
        b = dual_update(b, gamma * gmat, gamma * w)

        obj = float(np.min(np.sum(np.abs(w) ** 2, axis=0) / f))
        res = float(np.sum(np.abs(t - x) ** 2) + np.sum(np.abs(gmat - w) ** 2))
        dual_res = float(np.sum(np.abs(t - t_prev) ** 2)) + float(
            np.sum(np.abs(gmat - g_prev) ** 2)
        )
        al = (
            -eta
            + 0.5 * rho2 * float(np.sum(np.abs(t - x + d2) ** 2))
            + 0.5 * rho3 * float(np.sum(np.abs(gmat - w + b) ** 2))
        )
        objective.append(obj)
        al_values.append(al)
        residuals.append(res)
        mu_iters.append(iters)
        if float(np.max(np.abs(x) ** 2)) <= bound * (1.0 + _TRACK_SLACK) and obj > best_obj:
            best_obj = obj
            best_x = x.copy()
        if len(residuals) > 1 and res <= admm.primal_tol and dual_res <= admm.primal_tol:
            converged = True
            break

    final = best_x if best_x is not None else x
    final = _polish(final, cfg.power, bound)
    metric = float(np.min(np.sum(np.abs(final.conj().T @ a) ** 2, axis=0) / f))
    trace = AdmmTrace(
        objective=np.array(objective),
        augmented_lagrangian=np.array(al_values),
        residual=np.array(residuals),
        mu_iterations=np.array(mu_iters, dtype=int),
    )
    return SolveResult(
        waveform=final,
        trace=trace,
        metric_value=metric,
        feasibility=waveform_feasibility(final, cfg),
        iterations=len(trace),
        converged=converged,
    )


def baseline_omni(cfg: ArrayConfig, seed: int | None = None) -> np.ndarray:
    """Constant-modulus waveform with an exactly flat transmit beampattern.

    Rows are scaled discrete-Fourier rows, so ``X X^H = (P/M_t) I`` and
    the PAPR equals 1. The waveform is fully deterministic; ``seed`` is
    accepted for interface uniformity with the solvers.
    """
    if cfg.l_samples < cfg.m_t:
        raise ValueError("an orthogonal-row waveform needs l_samples >= m_t")
    m = np.arange(cfg.m_t)[:, None]
    l = np.arange(cfg.l_samples)[None, :]
    scale = np.sqrt(cfg.power / (cfg.m_t * cfg.l_samples))
    return scale * np.exp(-2j * np.pi * m * l / cfg.l_samples)


def baseline_crb(
    theta0: float,
    cfg: ArrayConfig,
    admm: AdmmConfig,
    seed: int,
) -> SolveResult:
    """Bound-oriented design for one deterministic angle (no prior term)."""
    mom = compute_moments(PointMass(theta0), cfg)
    return solve_pcrb(mom, cfg, admm, seed)
