"""Concave maximization of the dual objective over the certified region.

The certified region {G(s) positive definite, domain slacks positive} is open
and convex, and the dual objective is concave on it, so the main solve is an
interior-point ascent: maximize

    Pi_d(s) + mu * log det G(s) + mu * sum log(slack_k(s))

by damped Newton steps for a geometrically shrinking barrier weight mu, then
polish with barrier-free Newton when the maximizer is strictly interior.
Feasibility phase one finds a strictly positive-definite start by a doubling
scan along the domain-feasible direction followed by projected subgradient
ascent on the smallest eigenvalue.

Degenerate instances (symmetric inputs, boundary maximizers) go through the
quadratic perturbation scheme: at round k the operator gains delta_k * I and
the input gains delta_k * x_k for an anchor point x_k, the perturbed dual is
solved exactly, the anchor moves to the recovered primal point (snapped to
signs for sign-integer problems), and delta_k shrinks geometrically.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import dual, model, triality
from .dual import Membership, SolveReport
from .errors import (
    CanonDualError,
    EmptyInterior,
    MaxIterations,
    NotCritical,
    RangeViolation,
    SingularG,
)
from .model import CanonicalTerm, Problem, TermKind
from .runtime import parallel_map

_ARMIJO = 1e-4
_MU_FLOOR = 1e-12
_FEAS_MARGIN = 1e-7


@dataclass
class SolverConfig:
    barrier_weight: float = 1.0
    barrier_shrink: float = 0.2
    max_outer: int = 40
    max_inner: int = 60
    grad_tol: float = 1e-9
    step_tol: float = 1e-9
    perturb_delta0: float = 0.1
    perturb_shrink: float = 0.5
    max_perturb_rounds: int = 30
    seed: int = 0

    def __post_init__(self):
        for name in ("barrier_weight", "max_outer", "max_inner", "grad_tol", "step_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("barrier_shrink", "perturb_shrink"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.perturb_delta0 < 0 or self.max_perturb_rounds < 0:
            raise ValueError("perturbation parameters must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver config fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text) -> "SolverConfig":
        return cls.from_dict(json.loads(text) if isinstance(text, (str, bytes)) else dict(text))


class _DualSurface:
    """Cached per-problem data for barrier and Newton evaluations."""

    def __init__(self, p: Problem):
        self.p = p
        self.dG = dual.grad_G_matrices(p)
        self.d = p.dual_dim
        self.f_scale = 1.0 + float(np.linalg.norm(p.f))

    def gap(self, s) -> dual.GapMatrix:
        return dual.assemble_G(self.p, s)

    def strictly_feasible(self, s, margin: float = 0.0):
        """GapMatrix if s is strictly inside the certified region, else None."""
        slacks = dual.domain_slacks(self.p, s)
        if any(slack <= margin for _, slack, _ in slacks):
            return None
        gm = self.gap(s)
        if gm.min_eig <= margin:
            return None
        return gm

    def value(self, s, mu: float, gm: Optional[dual.GapMatrix] = None):
        gm = gm if gm is not None else self.strictly_feasible(s)
        if gm is None:
            return None, None
        x = gm.apply_pinv(self.p.f)
        val = -0.5 * float(self.p.f @ x) - dual.conjugate_total(self.p, s)
        if mu > 0.0:
            val += mu * float(np.sum(np.log(gm.decomp.eigvals)))
            for _, slack, _ in dual.domain_slacks(self.p, s):
                val += mu * math.log(slack)
        return val, gm

    def derivatives(self, s, mu: float, gm: dual.GapMatrix):
        """Gradient and Hessian of the barrier objective at a feasible point."""
        p = self.p
        varsig, sigma = dual.split_dual(p, s)
        x = gm.apply_pinv(p.f)
        w, v = gm.decomp
        Ginv = (v / w) @ v.T

        A = np.empty((p.n, self.d))
        for k, M in enumerate(self.dG):
            A[:, k] = M @ x
        W = Ginv @ A
        g = np.empty(self.d)
        for k in range(self.d):
            g[k] = 0.5 * float(x @ A[:, k])
        H = -(A.T @ W)
        for k, (varsig_s, idx) in enumerate(zip(varsig, p.dual_terms)):
            t = p.terms[idx]
            g[k] -= model.conj_grad(t, float(varsig_s))
            H[k, k] -= model.conj_hess(t, float(varsig_s))
        if sigma is not None:
            q = len(p.dual_terms)
            g[q:] -= 1.0

        if mu > 0.0:
            B = [Ginv @ M for M in self.dG]
            for k, Bk in enumerate(B):
                g[k] += mu * float(np.trace(Bk))
            for k in range(self.d):
                for l in range(k, self.d):
                    corr = mu * float(np.sum(B[k] * B[l].T))
                    H[k, l] -= corr
                    if l != k:
                        H[l, k] -= corr
            for k, slack, dslack in dual.domain_slacks(p, s):
                g[k] += mu * dslack / slack
                H[k, k] -= mu * (dslack / slack) ** 2
        return g, 0.5 * (H + H.T)


def _newton_ascend(surface: _DualSurface, s: np.ndarray, mu: float, cfg: SolverConfig,
                   max_iter: int, tol: float) -> tuple:
    """Damped Newton ascent of the barrier objective; returns (s, iterations)."""
    val, gm = surface.value(s, mu)
    if gm is None:
        raise EmptyInterior("ascent started at an infeasible point")
    for it in range(max_iter):
        g, H = surface.derivatives(s, mu, gm)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return s, it
        step = _solve_newton(H, g)
        decr = float(g @ step)
        if decr <= 0.0:
            step = g / max(1.0, gnorm)
            decr = float(g @ step)
        t = 1.0
        moved = False
        for _ in range(60):
            trial = s + t * step
            tval, tgm = surface.value(trial, mu)
            if tval is not None and tval >= val + _ARMIJO * t * decr and math.isfinite(tval):
                s, val, gm = trial, tval, tgm
                moved = True
                break
            t *= 0.5
        if not moved:
            return s, it + 1
        if t * float(np.linalg.norm(step)) <= cfg.step_tol * (1.0 + float(np.linalg.norm(s))):
            return s, it + 1
    return s, max_iter


def _solve_newton(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Ascent direction from (-H) d = g with a ridge fallback."""
    scale = float(np.max(np.abs(H))) + 1.0
    A = -H
    for ridge in (0.0, 1e-12 * scale, 1e-8 * scale, 1e-4 * scale):
        try:
            d = np.linalg.solve(A + ridge * np.eye(len(g)), g)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(d)):
            return d
    return g.copy()


def _interior_converged(surface: _DualSurface, s: np.ndarray, gtol: float) -> bool:
    gm = surface.strictly_feasible(s, margin=_FEAS_MARGIN * surface.f_scale)
    if gm is None:
        return False
    try:
        return float(np.linalg.norm(dual.grad_dual(surface.p, s, gm=gm))) <= gtol
    except SingularG:
        return False


def _polish_interior(surface: _DualSurface, s: np.ndarray, cfg: SolverConfig, tol: float) -> tuple:
    """Newton on the bare dual gradient with norm-descent acceptance.

    Value-based line searches stall once the remaining improvement falls
    below the rounding of the objective itself; descending on the gradient
    norm instead converges to stationarity at machine precision.  Steps are
    confined to the strictly feasible region; a boundary-bound iterate is
    returned as-is for the caller to report.
    """
    p = surface.p
    gm = surface.strictly_feasible(s)
    if gm is None:
        return s, 0
    try:
        g = dual.grad_dual(p, s, gm=gm)
    except SingularG:
        return s, 0
    for it in range(cfg.max_inner):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return s, it
        try:
            H = dual.hess_dual(p, s, gm=gm)
        except SingularG:
            return s, it
        step = _solve_newton(H, g)  # solves (-H) d = g, the root step H d = -g
        if not np.all(np.isfinite(step)):
            step = g / max(1.0, gnorm)
        t = 1.0
        moved = False
        for _ in range(50):
            trial = s + t * step
            tgm = surface.strictly_feasible(trial)
            if tgm is not None:
                try:
                    gt = dual.grad_dual(p, trial, gm=tgm)
                except SingularG:
                    gt = None
                if gt is not None and float(np.linalg.norm(gt)) <= (1.0 - _ARMIJO * t) * gnorm:
                    s, g, gm = trial, gt, tgm
                    moved = True
                    break
            t *= 0.5
        if not moved:
            return s, it + 1
    return s, cfg.max_inner


def _phase1(surface: _DualSurface, cfg: SolverConfig) -> np.ndarray:
    """Strictly feasible start, or EmptyInterior after the search budget."""
    p = surface.p
    margin = _FEAS_MARGIN * surface.f_scale
    base = np.zeros(surface.d)
    direction = np.zeros(surface.d)
    for k, idx in enumerate(p.dual_terms):
        t = p.terms[idx]
        sign = 1.0 if t.alpha > 0 else -1.0
        if t.kind is TermKind.QUARTIC:
            base[k] = t.alpha * t.beta + sign * (1.0 + abs(t.alpha * t.beta))
        elif t.kind is TermKind.EXPONENTIAL:
            base[k] = t.alpha * math.e
        else:
            base[k] = t.alpha
        direction[k] = sign
    if p.is_sign_integer:
        q = len(p.dual_terms)
        gm0 = surface.gap(np.concatenate([base[:q], np.zeros(p.n)]) if surface.d > q else base)
        lift = 0.5 * (max(0.0, -gm0.min_eig) + 1.0)
        base[q:] = lift
        direction[q:] = 1.0

    if surface.strictly_feasible(base, margin) is not None:
        return base
    t = 1.0
    for _ in range(24):
        trial = base + t * direction
        if surface.strictly_feasible(trial, margin) is not None:
            return trial
        t *= 2.0

    # Projected subgradient ascent on the smallest eigenvalue of G.
    s = base.copy()
    step = 1.0 + float(np.max(np.abs(base)))
    best = -math.inf
    for it in range(250):
        s = _project_domain(p, s, margin)
        gm = surface.gap(s)
        if gm.min_eig > margin and surface.strictly_feasible(s, 0.0) is not None:
            return s
        best = max(best, gm.min_eig)
        vmin = gm.decomp.eigvecs[:, 0]
        sub = np.array([float(vmin @ (M @ vmin)) for M in surface.dG])
        norm = float(np.linalg.norm(sub))
        if norm == 0.0:
            break
        s = s + step * sub / norm
        if it % 25 == 24:
            step *= 0.5
    exc = EmptyInterior(
        f"no strictly positive-definite dual point found (best min eigenvalue {best:.3e})"
    )
    exc.best_min_eig = best
    raise exc


def _project_domain(p: Problem, s: np.ndarray, margin: float) -> np.ndarray:
    s = s.copy()
    varsig, sigma = dual.split_dual(p, s)
    for k, idx in enumerate(p.dual_terms):
        t = p.terms[idx]
        if t.kind is TermKind.QUARTIC:
            bound = t.alpha * t.beta
            sign = 1.0 if t.alpha > 0 else -1.0
            if sign * (s[k] - bound) < margin:
                s[k] = bound + sign * margin
        elif t.kind is TermKind.EXPONENTIAL:
            sign = 1.0 if t.alpha > 0 else -1.0
            if sign * s[k] < margin:
                s[k] = sign * margin
    if sigma is not None:
        q = len(p.dual_terms)
        s[q:] = np.maximum(s[q:], margin)
    return s


def solve_dual(p: Problem, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Maximize the dual objective over the certified region.

    Interior convergence yields a stationary dual point paired with the
    recovered primal point and a matched-value check; a maximizer pinned to
    the region boundary is reported with ``boundary_flag`` set and the
    pseudoinverse recovery residual recorded.  Raises EmptyInterior when
    phase one finds no strictly positive-definite operator, MaxIterations
    when ascent stalls strictly inside without reaching the gradient
    tolerance.
    """
    cfg = cfg or SolverConfig()
    surface = _DualSurface(p)
    s = _phase1(surface, cfg)
    gtol = cfg.grad_tol * surface.f_scale

    iterations = 0
    mu = cfg.barrier_weight
    for _ in range(cfg.max_outer):
        s, its = _newton_ascend(surface, s, mu, cfg, cfg.max_inner, tol=max(gtol, 0.1 * mu))
        iterations += its
        mu *= cfg.barrier_shrink
        if mu < _MU_FLOOR or (mu < 1e-4 and _interior_converged(surface, s, gtol)):
            break

    # Barrier-free polish while the iterate stays strictly interior.
    s, its = _polish_interior(surface, s, cfg, tol=min(gtol, 1e-12 * surface.f_scale))
    iterations += its

    gm = surface.gap(s)
    membership = dual.in_S_plus(p, s)
    slacks = dual.domain_slacks(p, s)
    slack_tol = 1e-6 * surface.f_scale
    at_domain_edge = any(slack <= slack_tol for _, slack, _ in slacks)
    try:
        grad_norm = float(np.linalg.norm(dual.grad_dual(p, s, gm=gm)))
    except SingularG:
        grad_norm = float("nan")

    interior_ok = (
        membership is Membership.INTERIOR
        and not at_domain_edge
        and math.isfinite(grad_norm)
        and grad_norm <= gtol
    )
    if not interior_ok and membership is Membership.INTERIOR and not at_domain_edge:
        raise MaxIterations(
            f"interior ascent stalled with gradient norm {grad_norm:.3e} > {gtol:.3e}"
        )

    return _build_report(
        p,
        s,
        gm,
        status="interior" if interior_ok else "boundary",
        iterations=iterations,
        grad_norm=grad_norm,
    )


def _build_report(p: Problem, s: np.ndarray, gm: dual.GapMatrix, status: str,
                  iterations: int, grad_norm: float, perturb_rounds: int = 0,
                  x_override: Optional[np.ndarray] = None,
                  messages: Sequence[str] = ()) -> SolveReport:
    messages = list(messages)
    if x_override is not None:
        x = np.asarray(x_override, dtype=float)
    else:
        try:
            x = dual.recover_x(p, s, gm=gm)
        except RangeViolation as exc:
            x = gm.apply_pinv(p.f)
            messages.append(f"input outside range of G at the reported dual point: {exc}")
    rec_residual = float(np.linalg.norm(gm.G @ x - p.f))
    primal = model.eval_primal(p, x)
    membership = dual.in_S_plus(p, s)
    if membership is Membership.OUTSIDE:
        # The evaluation formula is only a certified lower bound on the
        # positive semidefinite side; report no bound elsewhere.
        dual_value = float("nan")
        messages.append("dual point outside the certified region; no dual bound reported")
    else:
        try:
            dual_value = dual.eval_dual(p, s, gm=gm)
        except (RangeViolation, CanonDualError):
            dual_value = float("nan")
    residual = abs(primal - dual_value) if math.isfinite(dual_value) else float("nan")

    try:
        label = triality.classify(p, x, s).label.value
    except (NotCritical, CanonDualError):
        label = (
            triality.TrialityLabel.BOUNDARY_DEGENERATE.value
            if status != "interior"
            else triality.TrialityLabel.UNCLASSIFIED.value
        )
    return SolveReport(
        x_bar=x,
        sigma_bar=np.asarray(s, dtype=float),
        primal_value=primal,
        dual_value=dual_value,
        duality_residual=residual,
        triality_class=label,
        iterations=iterations,
        boundary_flag=(status != "interior") or gm.is_singular(),
        status=status,
        grad_norm=grad_norm,
        recovery_residual=rec_residual,
        perturb_rounds=perturb_rounds,
        messages=tuple(messages),
    )


# Quadratic perturbation -------------------------------------------------


def _perturbed_problem(p: Problem, delta: float, anchor: np.ndarray) -> Problem:
    ridge = CanonicalTerm(kind=TermKind.PLAIN_QUADRATIC, factor=np.eye(p.n), alpha=delta)
    return Problem(n=p.n, terms=tuple(p.terms) + (ridge,), f=p.f + delta * anchor,
                   variables=p.variables)


def _snap_signs(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, 1.0, -1.0)


def _draw_anchor(p: Problem, rng: np.random.Generator) -> np.ndarray:
    if p.is_sign_integer:
        return rng.choice([-1.0, 1.0], size=p.n)
    v = rng.standard_normal(p.n)
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0 else np.ones(p.n) / math.sqrt(p.n)


def perturbed_solve(p: Problem, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Solve through the shrinking-perturbation rounds.

    Tries the unperturbed dual first and returns immediately on interior
    certification (zero rounds).  Each round solves the dual of the problem
    perturbed by the current anchor; the anchor follows the recovered primal
    point, re-randomized (seeded) if a round stalls without certification.
    The returned report is evaluated against the original problem and keeps
    the ``perturbation`` status, since boundary instances carry no interior
    certificate.
    """
    cfg = cfg or SolverConfig()
    base_report = None
    try:
        base_report = solve_dual(p, cfg)
        if base_report.status == "interior":
            return base_report
    except (EmptyInterior, MaxIterations):
        base_report = None
    if cfg.perturb_delta0 == 0.0:
        if base_report is not None:
            return base_report
        raise MaxIterations("zero perturbation requested and the plain dual solve failed")

    rng = np.random.default_rng(cfg.seed)
    anchor = _draw_anchor(p, rng)
    delta = cfg.perturb_delta0
    best = None  # (primal value, x, report, rounds)
    rounds = 0
    idle_redraws = 0
    for rounds in range(1, cfg.max_perturb_rounds + 1):
        pk = _perturbed_problem(p, delta, anchor)
        try:
            rep = solve_dual(pk, cfg)
        except (EmptyInterior, MaxIterations):
            anchor = _draw_anchor(p, rng)
            delta = max(delta * cfg.perturb_shrink, 1e-14)
            continue
        x_new = _snap_signs(rep.x_bar) if p.is_sign_integer else rep.x_bar
        value = model.eval_primal(p, x_new)
        improved = best is None or value < best[0] - 1e-12
        if improved:
            best = (value, x_new.copy(), rep, rounds)
        stalled = float(np.linalg.norm(x_new - anchor)) <= cfg.step_tol * (1.0 + float(np.linalg.norm(anchor)))
        if stalled and rep.status == "interior":
            return _perturbation_report(p, x_new, rep, rounds)
        if stalled:
            idle_redraws = 0 if improved else idle_redraws + 1
            if idle_redraws >= 5:
                break
            anchor = _draw_anchor(p, rng)
        else:
            anchor = x_new
        delta *= cfg.perturb_shrink
    if best is not None:
        value, x_new, rep, _ = best
        report = _perturbation_report(p, x_new, rep, rounds)
        report.messages = report.messages + ("perturbation rounds exhausted before the anchor settled",)
        return report
    raise MaxIterations("perturbation rounds exhausted without a single successful dual solve")


def _perturbation_report(p: Problem, x: np.ndarray, rep: SolveReport, rounds: int) -> SolveReport:
    gm = dual.assemble_G(p, rep.sigma_bar)
    report = _build_report(
        p,
        rep.sigma_bar,
        gm,
        status="perturbation",
        iterations=rep.iterations,
        grad_norm=rep.grad_norm,
        perturb_rounds=rounds,
        x_override=x,
    )
    return report


# Existence and sweep harnesses ------------------------------------------


@dataclass
class ExistenceResult:
    status: str  # interior_nonempty | likely_empty
    witness: Optional[np.ndarray]
    min_eig: float

    @property
    def nonempty(self) -> bool:
        return self.status == "interior_nonempty"


def existence_check(p: Problem, cfg: Optional[SolverConfig] = None) -> ExistenceResult:
    """Search for a strictly positive-definite dual witness.

    A returned witness is verified by its smallest eigenvalue; failure is
    only the heuristic 'likely empty', never a proof of emptiness.
    """
    cfg = cfg or SolverConfig()
    surface = _DualSurface(p)
    try:
        s = _phase1(surface, cfg)
    except EmptyInterior as exc:
        return ExistenceResult(status="likely_empty", witness=None,
                               min_eig=getattr(exc, "best_min_eig", float("nan")))
    gm = surface.gap(s)
    return ExistenceResult(status="interior_nonempty", witness=s, min_eig=gm.min_eig)


def dual_critical_points(p: Problem, cfg: Optional[SolverConfig] = None,
                         n_starts: int = 12, include_certified: bool = True) -> list:
    """Multistart damped Newton on the dual gradient across the dual domain.

    Returns deduplicated stationary points as (sigma, dual value, membership)
    sorted by descending value then lexicographic sigma.  This searches the
    whole nonsingular dual domain, not only the certified region, so it sees
    the local pairs on the negative-definite side as well.
    """
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(cfg.seed)
    surface = _DualSurface(p)
    found = []
    if include_certified:
        try:
            rep = solve_dual(p, cfg)
            if rep.status == "interior":
                found.append(np.asarray(rep.sigma_bar))
        except (EmptyInterior, MaxIterations):
            pass
    gtol = max(cfg.grad_tol, 1e-11) * surface.f_scale
    starts = _ladder_starts(p) + [_random_dual_start(p, rng) for _ in range(n_starts)]
    for s in starts:
        s = _newton_root(p, s, gtol, max_iter=60)
        if s is not None:
            found.append(s)
    merged = []
    for s in found:
        try:
            val = dual.eval_dual(p, s)
        except (RangeViolation, CanonDualError):
            continue
        merged.append((s, val, dual.in_S_plus(p, s)))
    merged.sort(key=lambda item: (-item[1], tuple(item[0])))
    out = []
    for s, val, member in merged:
        if all(np.linalg.norm(s - prev[0]) > 1e-7 * (1.0 + np.linalg.norm(s)) for prev in out):
            out.append((s, val, member))
    return out


def _ladder_starts(p: Problem) -> list:
    """Deterministic start points marching away from each domain boundary.

    Guarantees basin coverage for low-dimensional duals where pure random
    starts can miss a stationary point between the boundary and zero.
    """
    starts = []
    for u in (0.05, 0.2, 0.5, 1.0, 2.0, 4.0):
        s = np.empty(p.dual_dim)
        for k, idx in enumerate(p.dual_terms):
            t = p.terms[idx]
            sign = 1.0 if t.alpha > 0 else -1.0
            if t.kind is TermKind.QUARTIC:
                bound = t.alpha * t.beta
                s[k] = bound + sign * (1.0 + abs(bound)) * u
            elif t.kind is TermKind.EXPONENTIAL:
                s[k] = sign * abs(t.alpha) * u
            else:
                s[k] = t.alpha * (u - 1.0)
        if p.is_sign_integer:
            s[len(p.dual_terms):] = u
        starts.append(s)
    return starts


def _random_dual_start(p: Problem, rng: np.random.Generator) -> np.ndarray:
    s = np.empty(p.dual_dim)
    for k, idx in enumerate(p.dual_terms):
        t = p.terms[idx]
        if t.kind is TermKind.QUARTIC:
            bound = t.alpha * t.beta
            sign = 1.0 if t.alpha > 0 else -1.0
            s[k] = bound + sign * (1.0 + abs(bound)) * rng.uniform(0.02, 3.0)
        elif t.kind is TermKind.EXPONENTIAL:
            sign = 1.0 if t.alpha > 0 else -1.0
            s[k] = sign * abs(t.alpha) * rng.uniform(0.05, 4.0)
        else:
            s[k] = t.alpha * rng.normal(0.0, 2.0)
    if p.is_sign_integer:
        q = len(p.dual_terms)
        s[q:] = rng.uniform(0.05, 3.0, size=p.n)
    return s


def _newton_root(p: Problem, s: np.ndarray, gtol: float, max_iter: int = 60):
    """Damped Newton for grad = 0 over the nonsingular dual domain."""
    def residual(point):
        try:
            return dual.grad_dual(p, point)
        except (SingularG, RangeViolation, CanonDualError):
            return None

    def in_domain(point):
        return all(slack > 0.0 for _, slack, _ in dual.domain_slacks(p, point))

    if not in_domain(s):
        return None
    g = residual(s)
    if g is None:
        return None
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= gtol:
            return s
        try:
            H = dual.hess_dual(p, s)
        except (SingularG, CanonDualError):
            return None
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = -g
        if not np.all(np.isfinite(step)):
            step = -g
        t = 1.0
        moved = False
        for _ in range(40):
            trial = s + t * step
            if in_domain(trial):
                gt = residual(trial)
                if gt is not None and float(np.linalg.norm(gt)) < (1.0 - _ARMIJO * t) * gnorm:
                    s, g = trial, gt
                    moved = True
                    break
            t *= 0.5
        if not moved:
            return s if float(np.linalg.norm(g)) <= gtol else None
    return s if float(np.linalg.norm(g)) <= gtol else None


@dataclass
class FcRow:
    magnitude: float
    clusters: list
    n_clusters: int
    boundary: bool
    unique: bool
    outcome: str = ""  # status of the certified-region solve at this magnitude

    def to_dict(self) -> dict:
        return {
            "magnitude": float(self.magnitude),
            "clusters": [[float(v) for v in c] for c in self.clusters],
            "n_clusters": int(self.n_clusters),
            "boundary": bool(self.boundary),
            "unique": bool(self.unique),
            "outcome": self.outcome,
        }


@dataclass
class FcSweepResult:
    rows: list
    threshold: Optional[float]

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "threshold": None if self.threshold is None else float(self.threshold),
        }


def fc_sweep(p_template: Problem, direction, grid: Sequence[float],
             cfg: Optional[SolverConfig] = None, n_starts: int = 12,
             cluster_radius: float = 1e-5, threads: int = 1) -> FcSweepResult:
    """Uniqueness-versus-input-magnitude sweep.

    For each magnitude the input is magnitude * direction and the dual
    stationary points are collected by multistart; a magnitude is flagged
    unique when exactly one cluster survives and no boundary degeneracy was
    hit.  The reported threshold is the smallest grid magnitude from which
    every larger grid entry is unique.
    """
    cfg = cfg or SolverConfig()
    direction = np.asarray(direction, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    direction = direction / norm
    grid = [float(m) for m in grid]

    def run_one(m: float) -> FcRow:
        pm = Problem(n=p_template.n, terms=p_template.terms, f=m * direction,
                     variables=p_template.variables)
        points = dual_critical_points(pm, cfg, n_starts=n_starts)
        try:
            rep = solve_dual(pm, cfg)
            outcome = rep.status
        except EmptyInterior:
            outcome = "empty_interior"
        except MaxIterations:
            outcome = "stalled"
        boundary = outcome != "interior"
        clusters = []
        for s, _, _ in points:
            if all(np.linalg.norm(s - c) > cluster_radius for c in clusters):
                clusters.append(s)
        unique = (len(clusters) == 1) and not boundary
        return FcRow(magnitude=m, clusters=[list(map(float, c)) for c in clusters],
                     n_clusters=len(clusters), boundary=boundary, unique=unique,
                     outcome=outcome)

    rows = parallel_map(run_one, grid, threads)
    threshold = None
    for row in reversed(rows):
        if row.unique:
            threshold = row.magnitude
        else:
            break
    return FcSweepResult(rows=rows, threshold=threshold)


def solve_cubic_dual(alpha: float, lam: float, f_norm: float) -> np.ndarray:
    """Real roots, descending, of (sigma/alpha + lam) sigma^2 = 0.5 f_norm^2.

    The radially symmetric quartic-well dual stationarity condition; at most
    three real roots ordered sigma_1 >= 0 >= sigma_2 >= sigma_3 when all
    three exist.  Roots are polished by Newton steps on the cubic.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if f_norm < 0:
        raise ValueError("f_norm must be nonnegative")
    rhs = 0.5 * f_norm * f_norm
    coeffs = np.array([1.0 / alpha, lam, 0.0, -rhs])
    roots = np.roots(coeffs)
    real = []
    for r in roots:
        if abs(r.imag) <= 1e-8 * max(1.0, abs(r.real)):
            real.append(float(r.real))
    polished = []
    for r in real:
        for _ in range(3):
            val = r * r * (r / alpha + lam) - rhs
            der = 3.0 * r * r / alpha + 2.0 * lam * r
            if abs(der) < 1e-12 * (1.0 + abs(r)):
                break
            r = r - val / der
        polished.append(r)
    return np.array(sorted(polished, reverse=True))
