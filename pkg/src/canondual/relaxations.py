"""Convex reformulations: block-PSD epigraph form and level-1 linearization.

The epigraph form replaces the dual maximization by the equivalent
minimization of g + conjugate(s) under the block constraint

    [[G(s), f], [f', 2g]]  psd,

whose Schur complement encodes g >= 0.5 f'[G(s)]^+ f together with G psd and
f in range(G).  The level-1 linearization replaces every product x_k x_l of
a box-constrained quadratic program by a fresh unknown and adds all pairwise
products of the bound factors, giving a small LP whose value bounds the true
minimum from below.  The LP is solved by a dense two-phase simplex with
Bland's rule; termination is guaranteed and speed is explicitly not a goal.

Both constructions export to deterministic text files (sparse block format
for the PSD form, a plain row format for the LP) that re-parse to the exact
internal representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import dual, linalg, solver
from .errors import (
    DimensionMismatch,
    Infeasible,
    MaxIterations,
    TooLarge,
    Unbounded,
    UnsupportedTerm,
)
from .model import Problem, TermKind

LP_MAX_VARS = 66
RLT_MAX_ROWS = 5000
_FMT = ".17g"


# Block-PSD form ----------------------------------------------------------


@dataclass(eq=False)
class SdpProblem:
    """Epigraph reformulation of a problem's dual; block size is n + 1."""

    problem: Problem

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def block_size(self) -> int:
        return self.problem.n + 1


def build_sdp(p: Problem) -> SdpProblem:
    return SdpProblem(problem=p)


@dataclass
class SdpSolution:
    value: float  # optimum of g + conjugate(s), equals minus the dual optimum
    sigma: np.ndarray
    g_star: float


def solve_sdp_via_dual(sdp: SdpProblem, cfg: Optional[solver.SolverConfig] = None) -> SdpSolution:
    """Optimum of the epigraph form computed through the equivalent dual solve.

    At the maximizer, g* = 0.5 f'G^+ f, and the epigraph objective value
    g* + conjugate(s*) is exactly minus the dual optimum.
    """
    report = solver.solve_dual(sdp.problem, cfg or solver.SolverConfig())
    if math.isfinite(report.dual_value):
        g_star = -report.dual_value - dual.conjugate_total(sdp.problem, report.sigma_bar)
    else:
        g_star = float("nan")
    return SdpSolution(value=-report.dual_value, sigma=np.asarray(report.sigma_bar),
                       g_star=g_star)


def schur_block(G: np.ndarray, f: np.ndarray, g: float) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    n = G.shape[0]
    B = np.zeros((n + 1, n + 1))
    B[:n, :n] = G
    B[:n, n] = f
    B[n, :n] = f
    B[n, n] = 2.0 * g
    return B


def schur_psd_check(G, f, g: float, tol: float = 1e-8) -> bool:
    """Complement-side test of block positive semidefiniteness.

    True iff G is psd within tol, f lies in range(G) within tol, and
    2g >= f'G^+ f - tol, all scaled by 1 + the block Frobenius norm so the
    verdict matches a direct eigenvalue test of the assembled block.
    """
    G = linalg.check_symmetric(G, name="G")
    f = np.asarray(f, dtype=float).reshape(-1)
    scale = 1.0 + float(np.linalg.norm(schur_block(G, f, g), "fro"))
    decomp = linalg.eigh(G)
    if decomp.eigvals[0] < -tol * scale:
        return False
    x = linalg.pinv_from_decomp(decomp) @ f
    if float(np.linalg.norm(G @ x - f)) > tol * scale:
        return False
    return 2.0 * g >= float(f @ x) - tol * scale


# Sparse block export ------------------------------------------------------


@dataclass
class SdpaData:
    """Entries of the sparse block file: minimize c'y subject to
    sum_k y_k F_k - F_0 being block-diagonal psd."""

    m: int
    block_sizes: list
    c: list
    entries: dict  # (matno, block, i, j) -> value, 1-based, i <= j


def sdpa_data(sdp: SdpProblem) -> SdpaData:
    """Explicit block data for the epigraph form.

    Quadratic conjugates (the quartic kind) are representable through a 2x2
    epigraph block; transcendental conjugates are rejected.  Variables are
    ordered: term dual coordinates, sign multipliers, quartic epigraph
    auxiliaries, then g.
    """
    p = sdp.problem
    quartic_idx = []
    for idx in p.dual_terms:
        t = p.terms[idx]
        if t.kind is not TermKind.QUARTIC:
            raise UnsupportedTerm(
                f"{t.kind.value} conjugate is not representable in the block format"
            )
        if t.alpha <= 0:
            raise UnsupportedTerm("epigraph encoding requires positive alpha")
        quartic_idx.append(idx)
    q = len(quartic_idx)
    nsig = p.n if p.is_sign_integer else 0
    m = q + nsig + q + 1  # varsigma, sigma, epigraph t, g
    g_var = m  # 1-based variable numbers follow

    n1 = sdp.block_size
    block_sizes = [n1] + [2] * q
    ndiag = q + nsig
    if ndiag:
        block_sizes.append(-ndiag)

    c = [0.0] * q + [1.0] * nsig + [1.0] * q + [1.0]
    entries: dict = {}

    def put(mat, blk, i, j, val):
        if val != 0.0:
            entries[(mat, blk, i, j)] = float(val)

    A0 = p.plain_block
    for i in range(p.n):
        for j in range(i, p.n):
            put(0, 1, i + 1, j + 1, -A0[i, j])
        put(0, 1, i + 1, n1, -p.f[i])
    for k, idx in enumerate(quartic_idx):
        Q = p.terms[idx].Q
        for i in range(p.n):
            for j in range(i, p.n):
                put(k + 1, 1, i + 1, j + 1, Q[i, j])
    for i in range(nsig):
        put(q + i + 1, 1, i + 1, i + 1, 2.0)
    put(g_var, 1, n1, n1, 2.0)

    for k, idx in enumerate(quartic_idx):
        t = p.terms[idx]
        blk = 2 + k
        coef = 1.0 / math.sqrt(2.0 * t.alpha)
        put(k + 1, blk, 1, 1, t.beta)
        put(k + 1, blk, 1, 2, coef)
        put(q + nsig + k + 1, blk, 1, 1, 1.0)
        put(0, blk, 2, 2, -1.0)

    if ndiag:
        blk = 2 + q
        for k, idx in enumerate(quartic_idx):
            t = p.terms[idx]
            put(k + 1, blk, k + 1, k + 1, 1.0)
            put(0, blk, k + 1, k + 1, t.alpha * t.beta)
        for i in range(nsig):
            put(q + i + 1, blk, q + i + 1, q + i + 1, 1.0)

    return SdpaData(m=m, block_sizes=block_sizes, c=c, entries=entries)


def export_sdp(sdp: SdpProblem, path) -> SdpaData:
    """Write the sparse block file; byte-deterministic for a given problem."""
    data = sdpa_data(sdp)
    lines = [
        f"{data.m}",
        f"{len(data.block_sizes)}",
        " ".join(str(int(s)) for s in data.block_sizes),
        " ".join(format(v, _FMT) for v in data.c),
    ]
    for (mat, blk, i, j), val in sorted(data.entries.items()):
        lines.append(f"{mat} {blk} {i} {j} {format(val, _FMT)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return data


def parse_sdpa(path) -> SdpaData:
    with open(path) as fh:
        raw = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith(('"', "*"))]
    m = int(raw[0])
    nblocks = int(raw[1])
    sizes = [int(tok) for tok in raw[2].replace(",", " ").split()]
    if len(sizes) != nblocks:
        raise DimensionMismatch("block size list does not match the block count")
    c = [float(tok) for tok in raw[3].replace(",", " ").split()]
    entries = {}
    for ln in raw[4:]:
        mat, blk, i, j, val = ln.split()
        entries[(int(mat), int(blk), int(i), int(j))] = float(val)
    return SdpaData(m=m, block_sizes=sizes, c=c, entries=entries)


# Level-1 linearization ----------------------------------------------------


def pair_index(n: int) -> list:
    return [(k, l) for k in range(n) for l in range(k, n)]


@dataclass(eq=False)
class RltProblem:
    """Linear view of the level-1 relaxation.

    Unknowns are x (n of them) and one product surrogate per ordered pair
    k <= l; every row reads a_x'x + a_xi'xi >= rhs, and the box rows are kept
    as explicit variable bounds.
    """

    n: int
    obj_x: np.ndarray
    obj_xi: np.ndarray
    rows_x: np.ndarray  # (m, n)
    rows_xi: np.ndarray  # (m, npairs)
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def pairs(self) -> list:
        return pair_index(self.n)

    @property
    def n_vars(self) -> int:
        return self.n + len(self.pairs)

    def equals(self, other: "RltProblem") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.obj_x, other.obj_x)
            and np.array_equal(self.obj_xi, other.obj_xi)
            and np.array_equal(self.rows_x, other.rows_x)
            and np.array_equal(self.rows_xi, other.rows_xi)
            and np.array_equal(self.rhs, other.rhs)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )


def build_rlt(Q, f, lower, upper, extra_rows: Sequence = ()) -> RltProblem:
    """Level-1 relaxation of min 0.5 x'Qx - f'x over a finite box.

    All pairwise products of the bound factors (x - lower >= 0 and
    upper - x >= 0) are expanded and linearized through the product
    surrogates.  Optional extra linear rows a'x >= rhs are kept verbatim and
    additionally multiplied against every bound factor, subject to the row
    cap.
    """
    Q = linalg.check_symmetric(Q, name="Q")
    n = Q.shape[0]
    f = np.asarray(f, dtype=float).reshape(-1)
    lo = np.asarray(lower, dtype=float).reshape(-1)
    up = np.asarray(upper, dtype=float).reshape(-1)
    if f.shape != (n,) or lo.shape != (n,) or up.shape != (n,):
        raise DimensionMismatch("f, lower, upper must all have length n")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))) or np.any(up < lo):
        raise DimensionMismatch("box must be finite with upper >= lower")

    pairs = pair_index(n)
    pos = {pair: idx for idx, pair in enumerate(pairs)}
    obj_x = -f
    obj_xi = np.zeros(len(pairs))
    for (k, l), idx in pos.items():
        obj_xi[idx] = 0.5 * Q[k, k] if k == l else Q[k, l]

    rows_x, rows_xi, rhs = [], [], []

    def add_row(ax, axi, b):
        if len(rhs) >= RLT_MAX_ROWS:
            raise TooLarge(f"relaxation exceeds the {RLT_MAX_ROWS}-row cap")
        rows_x.append(ax)
        rows_xi.append(axi)
        rhs.append(b)

    for (k, l), idx in pos.items():
        # (x_k - lo_k)(x_l - lo_l) >= 0
        ax = np.zeros(n)
        axi = np.zeros(len(pairs))
        axi[idx] = 1.0
        ax[k] -= lo[l]
        ax[l] -= lo[k]
        add_row(ax, axi, -lo[k] * lo[l])
        # (up_k - x_k)(up_l - x_l) >= 0
        ax = np.zeros(n)
        axi = np.zeros(len(pairs))
        axi[idx] = 1.0
        ax[k] -= up[l]
        ax[l] -= up[k]
        add_row(ax, axi, -up[k] * up[l])
        # (x_k - lo_k)(up_l - x_l) >= 0
        ax = np.zeros(n)
        axi = np.zeros(len(pairs))
        axi[idx] = -1.0
        ax[k] += up[l]
        ax[l] += lo[k]
        add_row(ax, axi, lo[k] * up[l])
        if k != l:
            # (up_k - x_k)(x_l - lo_l) >= 0
            ax = np.zeros(n)
            axi = np.zeros(len(pairs))
            axi[idx] = -1.0
            ax[k] += lo[l]
            ax[l] += up[k]
            add_row(ax, axi, up[k] * lo[l])

    for a, b in extra_rows:
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.shape != (n,):
            raise DimensionMismatch("extra row length must equal n")
        add_row(a.copy(), np.zeros(len(pairs)), float(b))
        for k in range(n):
            # (a'x - b)(x_k - lo_k) >= 0
            ax = -b * np.eye(n)[k] - lo[k] * a
            axi = np.zeros(len(pairs))
            for j in range(n):
                axi[pos[(min(j, k), max(j, k))]] += a[j]
            add_row(ax, axi, -b * lo[k])
            # (a'x - b)(up_k - x_k) >= 0
            ax = b * np.eye(n)[k] + up[k] * a
            axi = np.zeros(len(pairs))
            for j in range(n):
                axi[pos[(min(j, k), max(j, k))]] -= a[j]
            add_row(ax, axi, b * up[k])

    return RltProblem(
        n=n,
        obj_x=obj_x,
        obj_xi=obj_xi,
        rows_x=np.array(rows_x) if rows_x else np.zeros((0, n)),
        rows_xi=np.array(rows_xi) if rows_xi else np.zeros((0, len(pairs))),
        rhs=np.array(rhs),
        lower=lo,
        upper=up,
    )


@dataclass
class RltSolution:
    x: np.ndarray
    xi: np.ndarray  # aligned with pair_index(n)
    value: float

    def xi_matrix(self, n: int) -> np.ndarray:
        M = np.zeros((n, n))
        for (k, l), v in zip(pair_index(n), self.xi):
            M[k, l] = v
            M[l, k] = v
        return M


def solve_lp_small(lp: RltProblem) -> RltSolution:
    """Optimal basic solution of the relaxation by dense simplex.

    Product surrogates are shifted by their corner-product lower bounds so
    every unknown is nonnegative; corner upper bounds enter as rows.  Raises
    Unbounded or Infeasible accordingly (an all-product box relaxation is
    always feasible and bounded, so these fire only on degenerate inputs or
    extra rows).
    """
    if lp.n_vars > LP_MAX_VARS:
        raise TooLarge(f"{lp.n_vars} unknowns exceed the {LP_MAX_VARS}-variable guard")
    pairs = lp.pairs
    xi_lo = np.empty(len(pairs))
    xi_up = np.empty(len(pairs))
    for idx, (k, l) in enumerate(pairs):
        corners = [
            lp.lower[k] * lp.lower[l],
            lp.lower[k] * lp.upper[l],
            lp.upper[k] * lp.lower[l],
            lp.upper[k] * lp.upper[l],
        ]
        xi_lo[idx] = min(corners)
        xi_up[idx] = max(corners)

    offset = np.concatenate([lp.lower, xi_lo])
    span = np.concatenate([lp.upper - lp.lower, xi_up - xi_lo])
    c = np.concatenate([lp.obj_x, lp.obj_xi])

    A_ge = np.hstack([lp.rows_x, lp.rows_xi])
    b_ge = lp.rhs - A_ge @ offset
    rows = [-A_ge]
    rhs = [-b_ge]
    eye = np.eye(lp.n_vars)
    rows.append(eye)
    rhs.append(span)
    A_ub = np.vstack(rows)
    b_ub = np.concatenate(rhs)

    z, _ = _simplex_min(c, A_ub, b_ub)
    full = z + offset
    value = float(c @ full)
    return RltSolution(x=full[: lp.n], xi=full[lp.n:], value=value)


def _simplex_min(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> tuple:
    """Two-phase dense simplex with Bland's rule for min c'z, Az <= b, z >= 0."""
    m, nv = A.shape
    A = A.copy()
    b = b.copy()
    T = np.hstack([A, np.eye(m), b[:, None]])
    flip = b < 0
    T[flip] *= -1.0
    n_art = int(np.sum(flip))
    art_cols = []
    if n_art:
        art_block = np.zeros((m, n_art))
        for k, r in enumerate(np.nonzero(flip)[0]):
            art_block[r, k] = 1.0
            art_cols.append(nv + m + k)
        T = np.hstack([T[:, :-1], art_block, T[:, -1:]])
    ncols = T.shape[1] - 1
    basis = np.empty(m, dtype=int)
    art_iter = iter(art_cols)
    for r in range(m):
        basis[r] = next(art_iter) if flip[r] else nv + r

    scale = 1.0 + float(np.max(np.abs(T)))
    tol = 1e-10 * scale

    def pivot(T, basis, allowed, cost):
        reduced = cost.copy()
        for r, bv in enumerate(basis):
            if cost[bv] != 0.0:
                reduced -= cost[bv] * T[r, :-1]
        # full tableau Bland loop
        for _ in range(200000):
            enter = -1
            for j in allowed:
                if reduced[j] < -tol:
                    enter = j
                    break
            if enter < 0:
                obj = 0.0
                for r, bv in enumerate(basis):
                    obj += cost[bv] * T[r, -1]
                return obj
            ratios = []
            for r in range(m):
                if T[r, enter] > tol:
                    ratios.append((T[r, -1] / T[r, enter], basis[r], r))
            if not ratios:
                raise Unbounded("objective decreases without bound")
            ratios.sort(key=lambda item: (item[0], item[1]))
            _, _, leave = ratios[0]
            piv = T[leave, enter]
            T[leave] /= piv
            for r in range(m):
                if r != leave and T[r, enter] != 0.0:
                    T[r] -= T[r, enter] * T[leave]
            delta = reduced[enter]
            reduced -= delta * T[leave, :-1]
            reduced[enter] = 0.0
            basis[leave] = enter
        raise MaxIterations("simplex pivot budget exhausted")

    if n_art:
        cost1 = np.zeros(ncols)
        for jc in art_cols:
            cost1[jc] = 1.0
        allowed = list(range(ncols))
        phase1 = pivot(T, basis, allowed, cost1)
        if phase1 > 1e-7 * scale:
            raise Infeasible(f"no feasible point (phase-one value {phase1:.3e})")
        for r in range(m):
            if basis[r] in art_cols:
                for j in range(nv + m):
                    if abs(T[r, j]) > tol:
                        piv = T[r, j]
                        T[r] /= piv
                        for rr in range(m):
                            if rr != r and T[rr, j] != 0.0:
                                T[rr] -= T[rr, j] * T[r]
                        basis[r] = j
                        break

    cost2 = np.zeros(ncols)
    cost2[:nv] = c
    allowed = list(range(nv + m))
    obj = pivot(T, basis, allowed, cost2)
    z = np.zeros(nv)
    for r, bv in enumerate(basis):
        if bv < nv:
            z[bv] = T[r, -1]
    return z, obj


# LP text format ------------------------------------------------------------


def _var_names(n: int) -> list:
    names = [f"x_{i + 1}" for i in range(n)]
    names += [f"xi_{k + 1}_{l + 1}" for k, l in pair_index(n)]
    return names


def _terms_line(ax: np.ndarray, axi: np.ndarray, names: list) -> str:
    coeffs = np.concatenate([ax, axi])
    parts = [f"{format(v, _FMT)} {name}" for v, name in zip(coeffs, names) if v != 0.0]
    return " + ".join(parts) if parts else "0"


def export_rlt_lp(lp: RltProblem, path) -> None:
    """Write the relaxation rows as plain text; byte-deterministic."""
    names = _var_names(lp.n)
    lines = [f"vars {lp.n}"]
    lines.append("minimize: " + _terms_line(lp.obj_x, lp.obj_xi, names))
    lines.append("subject:")
    for r in range(len(lp.rhs)):
        lines.append(
            f"r{r + 1}: "
            + _terms_line(lp.rows_x[r], lp.rows_xi[r], names)
            + f" >= {format(float(lp.rhs[r]), _FMT)}"
        )
    lines.append("bounds:")
    for i in range(lp.n):
        lines.append(
            f"{format(float(lp.lower[i]), _FMT)} <= x_{i + 1} <= {format(float(lp.upper[i]), _FMT)}"
        )
    lines.append("end")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_rlt_lp(path) -> RltProblem:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("vars "):
        raise DimensionMismatch("missing vars header")
    n = int(lines[0].split()[1])
    pairs = pair_index(n)
    index = {name: k for k, name in enumerate(_var_names(n))}

    def parse_terms(text: str) -> tuple:
        ax = np.zeros(n)
        axi = np.zeros(len(pairs))
        text = text.strip()
        if text == "0":
            return ax, axi
        for part in text.split(" + "):
            coef, name = part.split()
            k = index[name]
            if k < n:
                ax[k] += float(coef)
            else:
                axi[k - n] += float(coef)
        return ax, axi

    obj_x = obj_xi = None
    rows_x, rows_xi, rhs = [], [], []
    lower = np.zeros(n)
    upper = np.zeros(n)
    mode = None
    for ln in lines[1:]:
        if ln.startswith("minimize: "):
            obj_x, obj_xi = parse_terms(ln[len("minimize: "):])
        elif ln == "subject:":
            mode = "rows"
        elif ln == "bounds:":
            mode = "bounds"
        elif ln == "end":
            break
        elif mode == "rows":
            _, body = ln.split(": ", 1)
            expr, b = body.rsplit(" >= ", 1)
            ax, axi = parse_terms(expr)
            rows_x.append(ax)
            rows_xi.append(axi)
            rhs.append(float(b))
        elif mode == "bounds":
            lo_s, rest = ln.split(" <= ", 1)
            name, hi_s = rest.split(" <= ")
            i = int(name.split("_")[1]) - 1
            lower[i] = float(lo_s)
            upper[i] = float(hi_s)
    if obj_x is None:
        raise DimensionMismatch("missing objective line")
    return RltProblem(
        n=n,
        obj_x=obj_x,
        obj_xi=obj_xi,
        rows_x=np.array(rows_x) if rows_x else np.zeros((0, n)),
        rows_xi=np.array(rows_xi) if rows_xi else np.zeros((0, len(pairs))),
        rhs=np.array(rhs),
        lower=lower,
        upper=upper,
    )
