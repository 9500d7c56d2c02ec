"""Classification of matched critical pairs.

The sign of G at the dual point decides the branch: a positive semidefinite
G certifies a global minimizer, a negative definite G splits into the
double-max case (primal Hessian negative definite, the point is a local
maximizer of both objectives) and the double-min case (primal Hessian
positive definite, a local minimizer of both, asserted in strong form only
when the primal dimension equals the dual coordinate count).  Everything
in between is reported honestly as boundary-degenerate or unclassified;
second-order evidence comes from the analytic primal Hessian cross-checked
against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import dual, linalg, model
from .errors import NotCritical, SingularG
from .model import Problem, TermKind

DEFAULT_CRIT_TOL = 1e-6


class TrialityLabel(str, Enum):
    GLOBAL_MIN = "global_min"
    LOCAL_MAX = "local_max"
    LOCAL_MIN = "local_min"
    BOUNDARY_DEGENERATE = "boundary_degenerate"
    UNCLASSIFIED = "unclassified"


@dataclass
class TrialityClass:
    label: TrialityLabel
    dims_equal: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "dims_equal": self.dims_equal,
            "evidence": {k: v for k, v in self.evidence.items()},
        }


def hessian_primal(p: Problem, x) -> np.ndarray:
    """Analytic Hessian of the primal objective.

    sum_s [ Phi'_s(xi_s) Q_s + Phi''_s(xi_s) (Q_s x)(Q_s x)' ], with alpha
    folded into the plain quadratic contribution.  Needs xi > 0 on xlogx
    terms (raises DomainViolation otherwise).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    H = np.zeros((p.n, p.n))
    for t in p.terms:
        if t.kind is TermKind.PLAIN_QUADRATIC:
            H += t.alpha * t.Q
            continue
        xi = t.xi(x)
        qx = t.factor.T @ (t.factor @ x)
        H += t.phi_grad(xi) * t.Q + t.phi_hess(xi) * np.outer(qx, qx)
    return H


def hessian_dual_fd(p: Problem, s, h: Optional[float] = None) -> np.ndarray:
    """Central-difference Hessian of the dual objective at an interior point."""
    s = np.asarray(s, dtype=float).reshape(-1)
    d = len(s)
    H = np.empty((d, d))
    for j in range(d):
        hj = (h if h is not None else 1e-6 * (1.0 + abs(s[j])))
        sp = s.copy()
        sm = s.copy()
        sp[j] += hj
        sm[j] -= hj
        H[:, j] = (dual.grad_dual(p, sp) - dual.grad_dual(p, sm)) / (2.0 * hj)
    return 0.5 * (H + H.T)


def _dual_stationarity(p: Problem, x, s, ctol: float) -> float:
    """Residual of dual-side stationarity, usable on the boundary.

    Interior: norm of the dual gradient.  Singular G: fall back to the
    canonical balance equations, measure recovery G x = f plus the per-term
    matching xi_s(x) = dPhi*(varsigma_s) and the per-variable x_i^2 = 1.
    """
    try:
        return float(np.linalg.norm(dual.grad_dual(p, s)))
    except SingularG:
        pass
    varsig, sigma = dual.split_dual(p, s)
    res = dual.recovery_residual(p, s, x)
    x = np.asarray(x, dtype=float).reshape(-1)
    for varsig_s, idx in zip(varsig, p.dual_terms):
        t = p.terms[idx]
        res = max(res, abs(t.xi(x) - model.conj_grad(t, float(varsig_s))))
    if sigma is not None:
        res = max(res, float(np.max(np.abs(x * x - 1.0))))
    return res


def classify(p: Problem, x_bar, sigma_bar, tol: float = DEFAULT_CRIT_TOL) -> TrialityClass:
    """Label a critical pair; raises NotCritical on stationarity failure."""
    x_bar = np.asarray(x_bar, dtype=float).reshape(-1)
    sigma_bar = np.asarray(sigma_bar, dtype=float).reshape(-1)
    ctol = tol * (1.0 + float(np.linalg.norm(p.f)))

    if p.is_sign_integer:
        primal_res = 0.0 if np.all(np.abs(np.abs(x_bar) - 1.0) <= ctol) else np.inf
    else:
        primal_res = float(np.linalg.norm(model.grad_primal(p, x_bar)))
    dual_res = _dual_stationarity(p, x_bar, sigma_bar, ctol)
    if primal_res > ctol or dual_res > ctol:
        raise NotCritical(
            f"stationarity residuals (primal {primal_res:.3e}, dual {dual_res:.3e}) "
            f"exceed tolerance {ctol:.3e}"
        )

    gm = dual.assemble_G(p, sigma_bar)
    gtol = gm.tol
    eigs = gm.decomp.eigvals
    dims_equal = p.n == p.dual_dim
    evidence = {
        "G_eigvals": [float(v) for v in eigs],
        "primal_residual": primal_res,
        "dual_residual": dual_res,
    }

    if eigs[0] >= -gtol:
        label = TrialityLabel.GLOBAL_MIN
        return TrialityClass(label, dims_equal, evidence)

    if eigs[-1] < -gtol:
        # Strictly negative definite G: consult primal curvature.
        if p.is_sign_integer:
            evidence["note"] = "negative definite G on a sign-integer problem"
            return TrialityClass(TrialityLabel.UNCLASSIFIED, dims_equal, evidence)
        Hp = hessian_primal(p, x_bar)
        hw = linalg.eigh(Hp).eigvals
        htol = 1e-8 * (1.0 + float(np.linalg.norm(Hp, "fro")))
        evidence["primal_hessian_eigvals"] = [float(v) for v in hw]
        if hw[-1] < -htol:
            evidence["dual_hessian_eigvals"] = _dual_hess_eigs(p, sigma_bar)
            return TrialityClass(TrialityLabel.LOCAL_MAX, dims_equal, evidence)
        if hw[0] > htol:
            if dims_equal:
                return TrialityClass(TrialityLabel.LOCAL_MIN, dims_equal, evidence)
            evidence["note"] = (
                "local-min pairing holds only weakly when the primal and dual "
                "dimensions differ"
            )
            return TrialityClass(TrialityLabel.UNCLASSIFIED, dims_equal, evidence)
        if np.min(np.abs(hw)) <= htol:
            return TrialityClass(TrialityLabel.BOUNDARY_DEGENERATE, dims_equal, evidence)
        evidence["note"] = "indefinite primal Hessian at a negative definite G"
        return TrialityClass(TrialityLabel.UNCLASSIFIED, dims_equal, evidence)

    if abs(eigs[-1]) <= gtol:
        # Negative semidefinite with a kernel: degenerate boundary case.
        return TrialityClass(TrialityLabel.BOUNDARY_DEGENERATE, dims_equal, evidence)

    evidence["note"] = "indefinite G, outside both certified regions"
    return TrialityClass(TrialityLabel.UNCLASSIFIED, dims_equal, evidence)


def _dual_hess_eigs(p: Problem, s) -> list:
    try:
        Hd = hessian_dual_fd(p, s)
    except SingularG:
        return []
    return [float(v) for v in linalg.eigh(Hd).eigvals]
