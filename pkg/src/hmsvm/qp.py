"""Dense convex QP/LP engine.

``solve_qp`` runs a first-order operator-splitting iteration (a quadratic
proximal step from a cached factorization, alternated with projection onto
the constraint box) over problems of the form

    min  0.5 x'Px + q'x   s.t.  lb <= Ax <= ub,  var_lb <= x <= var_ub.

Variable bounds are stacked as identity rows internally, the problem is
equilibrated (Ruiz row/column scaling plus cost normalization), and the
step size is rebalanced when the primal/dual residual ratio drifts.
Termination is decided on residuals of the original, unscaled problem.
A terminal KKT polish on the detected active set sharpens solutions to
near machine precision.

``min_slack_feasibility`` answers the question "is {a_i.x >= d_i} feasible
over the variable box?" exactly, through the always-feasible phase-1 LP
min sum(s) s.t. a_i.x + s_i >= d_i, s >= 0, solved with HiGHS.  Infeasible
verdicts feed conflict extraction, where a wrong answer would poison cuts,
hence the exact LP route rather than the first-order iteration.

Solver state is per call: concurrent solves on independent problems are safe.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog, nnls

from .core import INF, EngineError

_SIGMA = 1e-6          # proximal regularization
_ALPHA = 1.6           # over-relaxation
_CHECK_EVERY = 25      # residual / termination cadence
_EQ_RHO_BOOST = 1e3    # step-size boost on equality rows
_RHO_MIN, _RHO_MAX = 1e-6, 1e6
_EPS_PINF = 1e-9       # primal infeasibility certificate threshold
_RUIZ_ROUNDS = 10


class QpStatus(str, Enum):
    SOLVED = "Solved"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class QpProblem:
    """Data for min 0.5 x'Px + q'x, lb <= Ax <= ub, var_lb <= x <= var_ub."""

    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    var_lb: np.ndarray
    var_ub: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        q = np.asarray(self.q, dtype=float).ravel()
        k = q.shape[0]
        A = np.asarray(self.A, dtype=float).reshape(-1, k)
        lb = _widen(np.asarray(self.lb, dtype=float).ravel())
        ub = _widen(np.asarray(self.ub, dtype=float).ravel())
        vlb = _widen(np.asarray(self.var_lb, dtype=float).ravel())
        vub = _widen(np.asarray(self.var_ub, dtype=float).ravel())
        if P.shape != (k, k):
            raise ValueError(f"P must be {k}x{k}, got {P.shape}")
        if np.abs(P - P.T).max(initial=0.0) > 1e-12:
            raise ValueError("P must be symmetric within 1e-12")
        if lb.shape != ub.shape or lb.shape[0] != A.shape[0]:
            raise ValueError("row bounds must match the constraint matrix")
        if vlb.shape[0] != k or vub.shape[0] != k:
            raise ValueError("variable bounds must have one entry per variable")
        if np.any(np.isnan(A)) or np.any(np.isnan(P)) or np.any(np.isnan(q)):
            raise ValueError("problem data must not contain NaN")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(q)):
            raise ValueError("A and q must be finite")
        if np.any(lb > ub) or np.any(vlb > vub):
            raise ValueError("lower bounds must not exceed upper bounds")
        for name, val in (("P", P), ("q", q), ("A", A), ("lb", lb), ("ub", ub),
                          ("var_lb", vlb), ("var_ub", vub)):
            object.__setattr__(self, name, val)

    @property
    def k(self) -> int:
        return self.q.shape[0]


@dataclass
class QpSolution:
    x: np.ndarray
    objective: float
    status: QpStatus
    primal_residual: float
    dual_residual: float
    iterations: int
    # multipliers on [rows; variable bounds] of the original problem
    y: np.ndarray


def _widen(bounds: np.ndarray) -> np.ndarray:
    """Map sentinel magnitudes >= INF onto true infinities."""
    out = bounds.copy()
    out[out >= INF] = np.inf
    out[out <= -INF] = -np.inf
    return out


class BoxQpSolver:
    """Operator-splitting solver with a reusable factorization.

    The cost and constraint matrices are fixed at construction; bounds may
    be overridden per ``solve`` call, so branch-and-bound nodes that differ
    only in variable fixings share the same scaling and cached factor.
    """

    def __init__(self, P, q, A, lb, ub, var_lb, var_ub):
        prob = QpProblem(P, q, A, lb, ub, var_lb, var_ub)
        self.prob = prob
        k, p = prob.k, prob.A.shape[0]
        self.k, self.p = k, p

        # convexity gate: the proximal step needs P + sigma I to factor
        try:
            np.linalg.cholesky(prob.P + _SIGMA * np.eye(k))
        except np.linalg.LinAlgError as exc:
            raise EngineError("cost matrix is not positive semidefinite") from exc

        A_full = np.vstack([prob.A, np.eye(k)]) if p else np.eye(k)
        self._A_full = A_full
        d, e, c = _equilibrate(prob.P, prob.q, A_full)
        self._d, self._e, self._c = d, e, c
        self._Ps = c * (d[:, None] * prob.P * d[None, :])
        self._qs = c * (d * prob.q)
        self._Abar = e[:, None] * A_full * d[None, :]
        self._AbarT = np.ascontiguousarray(self._Abar.T)

        self._rho_bar = 0.1
        self._factors: dict[tuple, tuple] = {}

    # -- internals ---------------------------------------------------------

    def _bounds(self, row_lb, row_ub, var_lb, var_ub):
        prob = self.prob
        rl = prob.lb if row_lb is None else _widen(np.asarray(row_lb, float))
        ru = prob.ub if row_ub is None else _widen(np.asarray(row_ub, float))
        vl = prob.var_lb if var_lb is None else _widen(np.asarray(var_lb, float))
        vu = prob.var_ub if var_ub is None else _widen(np.asarray(var_ub, float))
        if np.any(rl > ru) or np.any(vl > vu):
            raise ValueError("lower bounds must not exceed upper bounds")
        lo = np.concatenate([rl, vl])
        uo = np.concatenate([ru, vu])
        return self._e * lo, self._e * uo, lo, uo

    def _factor(self, eq_mask):
        # equality rows (bounds pinned together) get a stiffer step
        key = (self._rho_bar, eq_mask.tobytes())
        cached = self._factors.get(key)
        if cached is not None:
            return cached
        rho = self._rho_bar * np.where(eq_mask, _EQ_RHO_BOOST, 1.0)
        K = self._Ps + _SIGMA * np.eye(self.k) + (self._AbarT * rho) @ self._Abar
        chol = cho_factor(K, check_finite=False)
        entry = (chol, rho, 1.0 / rho)
        if len(self._factors) > 16:
            self._factors.clear()
        self._factors[key] = entry
        return entry

    def _unscale(self, xs, zs, ys):
        """Map scaled iterates back to original-problem quantities."""
        x = self._d * xs
        z = zs / self._e
        y = self._e * ys / self._c
        return x, z, y

    def _residuals(self, x, z, y):
        """Residuals and scales of the original, unscaled problem."""
        prob = self.prob
        ax = np.concatenate([prob.A @ x, x]) if self.p else x.copy()
        px = prob.P @ x
        aty = (prob.A.T @ y[: self.p] if self.p else 0.0) + y[self.p:]
        rp = np.abs(ax - z).max(initial=0.0)
        rd = np.abs(px + prob.q + aty).max(initial=0.0)
        sp = max(np.abs(ax).max(initial=0.0), np.abs(z).max(initial=0.0))
        sd = max(
            np.abs(px).max(initial=0.0),
            np.abs(aty).max(initial=0.0),
            np.abs(prob.q).max(initial=0.0),
        )
        return rp, rd, sp, sd

    def _infeasibility_certificate(self, dy_unscaled, lo, uo) -> bool:
        """Primal infeasibility test on the (unscaled) dual increment."""
        v = dy_unscaled
        nv = np.abs(v).max(initial=0.0)
        if nv < 1e-14:
            return False
        v = v / nv
        pos, neg = v > 1e-12, v < -1e-12
        if np.any(pos & np.isinf(uo)) or np.any(neg & np.isinf(lo)):
            return False
        support = float(uo[pos] @ v[pos]) + float(lo[neg] @ v[neg])
        if support >= -_EPS_PINF:
            return False
        atv = (self.prob.A.T @ v[: self.p] if self.p else 0.0) + v[self.p:]
        return np.abs(atv).max(initial=0.0) < _EPS_PINF

    def _polish(self, x, y, lo, uo, rp, rounds: int = 100):
        """Refine the iterate by a bounded active-set correction.

        Working-set search seeded from the signed multipliers: each round
        equality-solves the working set; a runaway solution (the reduced
        problem is unbounded along a null direction of P) triggers a ratio
        test toward it, admitting the first blocking row; a sane solution
        admits its most violated row; drops of wrong-sign rows happen one
        at a time and only at feasible points, the textbook discipline
        that keeps the walk from cycling.
        """
        finite_lo, finite_up = np.isfinite(lo), np.isfinite(uo)
        act_eq = finite_lo & finite_up & (lo == uo)
        ysig = 1e-9 * max(1.0, np.abs(y).max(initial=0.0))
        work_lo = (y < -ysig) & finite_lo & ~act_eq
        work_up = (y > ysig) & finite_up & ~act_eq
        # cap the seed at one row per variable: anything larger is massively
        # degenerate and the recovered multiplier signs stop meaning anything
        seeded = np.flatnonzero(work_lo | work_up)
        if seeded.size > self.k:
            weak = seeded[np.argsort(np.abs(y[seeded]))[: seeded.size - self.k]]
            work_lo[weak] = False
            work_up[weak] = False
        scale = max(1.0, np.abs(x).max(initial=0.0))
        ptol = 1e-9 * scale
        x_ref = x
        recently_dropped: list[int] = []
        for _ in range(rounds):
            active = np.flatnonzero(work_lo | work_up | act_eq)
            na = active.size
            G = self._A_full[active]
            g = np.where(work_lo | act_eq, lo, uo)[active]
            delta = 1e-9
            KKT = np.block([
                [self.prob.P + delta * np.eye(self.k), G.T],
                [G, -delta * np.eye(na)],
            ])
            rhs = np.concatenate([-self.prob.q, g])
            try:
                sol = np.linalg.solve(KKT, rhs)
                # one refinement round against the unregularized system
                top = self.prob.P @ sol[: self.k] + G.T @ sol[self.k:] + self.prob.q
                bot = G @ sol[: self.k] - g
                sol -= np.linalg.solve(KKT, np.concatenate([top, bot]))
            except np.linalg.LinAlgError:
                return None
            x_pol = sol[: self.k]
            nu = sol[self.k:]

            if np.abs(x_pol).max(initial=0.0) > 1e6 * scale:
                # unbounded reduced problem: walk toward the runaway point
                # and pin the first row that blocks the way
                blocker = self._ratio_blocker(x_ref, x_pol, lo, uo,
                                              work_lo | work_up | act_eq)
                if blocker is None:
                    return None
                row, side = blocker
                if side == "lo":
                    work_lo[row] = True
                else:
                    work_up[row] = True
                continue

            vals = np.concatenate([self.prob.A @ x_pol, x_pol]) \
                if self.p else x_pol.copy()
            # violations measured relative to each row's bound magnitude:
            # the regularized solve cannot do better than that anyway
            viol_lo = np.where(
                finite_lo,
                (lo - vals) / (1.0 + np.abs(np.where(finite_lo, lo, 0.0))),
                -np.inf,
            )
            viol_up = np.where(
                finite_up,
                (vals - uo) / (1.0 + np.abs(np.where(finite_up, uo, 0.0))),
                -np.inf,
            )
            viol_lo[active] = -np.inf
            viol_up[active] = -np.inf
            feasible = max(viol_lo.max(initial=-np.inf),
                           viol_up.max(initial=-np.inf)) <= ptol
            if feasible:
                # keeping a constraint active must not be profitable
                ytol = 1e-9 * max(1.0, np.abs(nu).max(initial=0.0))
                bad = np.where(
                    (work_lo[active] & (nu > ytol))
                    | (work_up[active] & (nu < -ytol)),
                    np.abs(nu), 0.0,
                )
                if not np.any(bad > 0):
                    y_pol = np.zeros(self.p + self.k)
                    y_pol[active] = nu
                    return x_pol, y_pol
                # under degeneracy the equality-solve's multiplier split is
                # arbitrary; look for a sign-feasible split before dropping
                repaired = self._nnls_multipliers(
                    x_pol, active, work_lo[active], act_eq[active]
                )
                if repaired is not None:
                    return x_pol, repaired
                drop = active[int(np.argmax(bad))]
                work_lo[drop] = False
                work_up[drop] = False
                recently_dropped = [int(drop)] + recently_dropped[:1]
                continue
            # admit the worst violated row, skipping rows dropped within the
            # last two rounds (degenerate faces otherwise cycle drop/add)
            viol = np.maximum(viol_lo, viol_up)
            viol[recently_dropped] = -np.inf
            worst = int(np.argmax(viol))
            if viol[worst] <= ptol:
                return None
            if viol_lo[worst] >= viol_up[worst]:
                work_lo[worst] = True
            else:
                work_up[worst] = True
        return None

    def _nnls_multipliers(self, x_pol, active, lo_mask, eq_mask):
        """Sign-feasible multipliers on the active set via nonnegative LS.

        Solves G'y = -(Px + q) with y restricted to the dual cone (y <= 0 on
        lower-active rows, >= 0 on upper-active, free on equalities).  A
        small residual certifies the point as a true KKT point even when
        the regularized equality solve handed back noisy signs.
        """
        G = self._A_full[active]
        rhs = -(self.prob.P @ x_pol + self.prob.q)
        cols = []
        signs = []
        for j in range(active.size):
            if eq_mask[j]:
                cols.append(G[j])
                signs.append((j, 1.0))
                cols.append(-G[j])
                signs.append((j, -1.0))
            elif lo_mask[j]:
                cols.append(-G[j])
                signs.append((j, -1.0))
            else:
                cols.append(G[j])
                signs.append((j, 1.0))
        if not cols:
            return None
        try:
            mu, resid = nnls(np.array(cols).T, rhs)
        except Exception:
            return None
        if resid > 1e-6 * max(1.0, float(np.linalg.norm(rhs))):
            return None
        y_pol = np.zeros(self.p + self.k)
        for (j, s), m in zip(signs, mu):
            y_pol[active[j]] += s * m
        return y_pol

    def _ratio_blocker(self, x_from, x_to, lo, uo, in_working):
        """First constraint hit when walking from ``x_from`` to ``x_to``."""
        step = x_to - x_from
        vals = np.concatenate([self.prob.A @ x_from, x_from]) \
            if self.p else x_from.copy()
        move = np.concatenate([self.prob.A @ step, step]) \
            if self.p else step.copy()
        best = None
        best_alpha = np.inf
        for i in np.flatnonzero(~in_working):
            if move[i] > 1e-12 and np.isfinite(uo[i]):
                alpha = (uo[i] - vals[i]) / move[i]
                side = "up"
            elif move[i] < -1e-12 and np.isfinite(lo[i]):
                alpha = (lo[i] - vals[i]) / move[i]
                side = "lo"
            else:
                continue
            if alpha < best_alpha:
                best_alpha = alpha
                best = (int(i), side)
        return best

    def _attempt_polish(self, x, y, lo, uo, rp, rounds: int = 100):
        """Polish and report the polished point's true residuals."""
        polished = self._polish(x, y, lo, uo, rp, rounds=rounds)
        if polished is None:
            return None
        x_pol, y_pol = polished
        rp_pol = self._primal_violation(x_pol, lo, uo)
        rd_pol = np.abs(
            self.prob.P @ x_pol + self.prob.q
            + (self.prob.A.T @ y_pol[: self.p] if self.p else 0.0)
            + y_pol[self.p:]
        ).max(initial=0.0)
        return x_pol, y_pol, rp_pol, rd_pol

    # -- public ------------------------------------------------------------

    def solve(
        self,
        *,
        row_lb=None,
        row_ub=None,
        var_lb=None,
        var_ub=None,
        warm_start=None,
        warm_start_duals=None,
        iter_cap: int = 20000,
        time_cap: float | None = None,
        eps_abs: float = 1e-8,
        eps_rel: float = 1e-8,
        polish: bool = True,
    ) -> QpSolution:
        k = self.k
        l, u, lo, uo = self._bounds(row_lb, row_ub, var_lb, var_ub)
        if warm_start is not None:
            x0 = np.asarray(warm_start, dtype=float).ravel()
            if x0.shape[0] != k:
                raise ValueError(f"warm start must have length {k}")
            xs = x0 / self._d
        else:
            xs = np.zeros(k)
        zs = np.clip(self._Abar @ xs, l, u)
        if warm_start_duals is not None:
            y0 = np.asarray(warm_start_duals, dtype=float).ravel()
            if y0.shape[0] != self.p + k:
                raise ValueError("dual warm start must cover rows and bounds")
            ys = self._c * y0 / self._e
        else:
            ys = np.zeros(self.p + k)

        eq_mask = (l == u) & np.isfinite(l)
        chol, rho, rho_inv = self._factor(eq_mask)
        started = time.perf_counter()
        status = QpStatus.MAX_ITER
        best = (math.inf, xs.copy(), ys.copy(), zs.copy())
        it = 0
        last_rho_update = 0
        prepolished = None
        next_polish = 250
        while it < iter_cap:
            it += 1
            rhs = _SIGMA * xs - self._qs + self._AbarT @ (rho * zs - ys)
            xt = cho_solve(chol, rhs, check_finite=False)
            axt = self._Abar @ xt
            xs = _ALPHA * xt + (1.0 - _ALPHA) * xs
            zr = _ALPHA * axt + (1.0 - _ALPHA) * zs
            z_new = np.clip(zr + ys * rho_inv, l, u)
            dys = rho * (zr - z_new)
            ys = ys + dys
            zs = z_new

            if it % _CHECK_EVERY != 0 and it != iter_cap:
                continue
            x, z, y = self._unscale(xs, zs, ys)
            rp, rd, sp, sd = self._residuals(x, z, y)
            eps_p = eps_abs + eps_rel * sp
            eps_d = eps_abs + eps_rel * sd
            score = max(rp / max(eps_p, 1e-300), rd / max(eps_d, 1e-300))
            if score < best[0]:
                best = (score, xs.copy(), ys.copy(), zs.copy())
            if rp <= eps_p and rd <= eps_d:
                status = QpStatus.SOLVED
                break
            _, _, dy = self._unscale(np.zeros(k), np.zeros(self.p + k), dys)
            if self._infeasibility_certificate(dy, lo, uo):
                status = QpStatus.INFEASIBLE
                break
            # an accepted polish is a far cheaper road to the tolerances
            # than the asymptotic tail, so probe on a geometric schedule
            # with a tight round budget (failures must stay cheap)
            if polish and it >= next_polish:
                next_polish = 3 * next_polish
                attempt = self._attempt_polish(x, y, lo, uo, rp, rounds=35)
                if attempt is not None and attempt[2] <= eps_p and attempt[3] <= eps_d:
                    prepolished = attempt
                    status = QpStatus.SOLVED
                    break
            # rebalance the step size when the residuals, each taken relative
            # to its own scale, drift more than an order of magnitude apart
            ratio = (rp / max(sp, 1e-300)) / max(rd / max(sd, 1e-300), 1e-300)
            if ratio > 10.0 or ratio < 0.1:
                if it - last_rho_update >= 100:
                    new_rho = float(np.clip(self._rho_bar * math.sqrt(ratio),
                                            _RHO_MIN, _RHO_MAX))
                    if not 0.67 < new_rho / self._rho_bar < 1.5:
                        self._rho_bar = new_rho
                        chol, rho, rho_inv = self._factor(eq_mask)
                        last_rho_update = it
            if time_cap is not None and time.perf_counter() - started > time_cap:
                break

        if status is QpStatus.MAX_ITER:
            _, xs, ys, zs = best
        x, z, y = self._unscale(xs, zs, ys)

        if status is QpStatus.INFEASIBLE:
            return QpSolution(x, math.inf, status, math.inf, math.inf, it, y)

        if prepolished is not None:
            x, y, rp, rd = prepolished
        else:
            rp, rd, sp, sd = self._residuals(x, z, y)
            eps_p = eps_abs + eps_rel * sp
            eps_d = eps_abs + eps_rel * sd
            if polish:
                attempt = self._attempt_polish(x, y, lo, uo, rp, rounds=300)
                if attempt is not None:
                    x_pol, y_pol, rp_pol, rd_pol = attempt
                    if max(rp_pol, rd_pol) <= max(rp, rd, eps_abs):
                        x, y, rp, rd = x_pol, y_pol, rp_pol, rd_pol
            # an unconverged iterate whose polish meets the tolerances is solved
            if status is QpStatus.MAX_ITER and rp <= eps_p and rd <= eps_d:
                status = QpStatus.SOLVED

        obj = 0.5 * float(x @ (self.prob.P @ x)) + float(self.prob.q @ x)
        return QpSolution(x, obj, status, rp, rd, it, y)

    def _primal_violation(self, x, lo, uo):
        vals = np.concatenate([self.prob.A @ x, x]) if self.p else x
        viol = np.maximum(lo - vals, 0.0) + np.maximum(vals - uo, 0.0)
        viol[~np.isfinite(viol)] = 0.0
        return viol.max(initial=0.0)

    def dual_bound(
        self, y, *, row_lb=None, row_ub=None, var_lb=None, var_ub=None
    ) -> float:
        """Certified lower bound on the optimum from any multiplier vector.

        Clips the row multipliers to dual-feasible signs (and to zero where
        the matching bound is infinite), then evaluates the Lagrangian dual
        exactly: with a diagonal cost matrix the inner minimization over the
        variable box separates per coordinate.  Valid no matter how rough
        ``y`` is, which makes unconverged solves safe to bound with.  Only
        available for diagonal P; returns -inf otherwise.
        """
        P, q = self.prob.P, self.prob.q
        diag = np.diag(P)
        if np.abs(P - np.diag(diag)).max(initial=0.0) > 1e-12:
            return -math.inf
        _, _, lo, uo = self._bounds(row_lb, row_ub, var_lb, var_ub)
        rl, ru = lo[: self.p], uo[: self.p]
        vlb, vub = lo[self.p:], uo[self.p:]
        yr = np.asarray(y[: self.p], dtype=float)
        pos = np.maximum(yr, 0.0)
        neg = np.maximum(-yr, 0.0)
        pos[~np.isfinite(ru)] = 0.0
        neg[~np.isfinite(rl)] = 0.0
        const = float(pos @ np.where(np.isfinite(ru), ru, 0.0)) \
            - float(neg @ np.where(np.isfinite(rl), rl, 0.0))
        c = q + (self.prob.A.T @ (pos - neg) if self.p else 0.0)
        total = -const
        for j in range(self.k):
            pj, cj = diag[j], c[j]
            if pj > 1e-12:
                xj = np.clip(-cj / pj, vlb[j], vub[j])
                total += 0.5 * pj * xj * xj + cj * xj
            elif cj > 0:
                if not np.isfinite(vlb[j]):
                    return -math.inf
                total += cj * vlb[j]
            elif cj < 0:
                if not np.isfinite(vub[j]):
                    return -math.inf
                total += cj * vub[j]
        return total


def _equilibrate(P, q, A_full):
    """Ruiz row/column scaling of [[P, A'],[A, 0]] plus cost normalization."""
    k = P.shape[0]
    d = np.ones(k)
    e = np.ones(A_full.shape[0])
    for _ in range(_RUIZ_ROUNDS):
        Ps = d[:, None] * P * d[None, :]
        As = e[:, None] * A_full * d[None, :]
        col = np.maximum(
            np.abs(Ps).max(axis=0, initial=0.0),
            np.abs(As).max(axis=0, initial=0.0),
        )
        row = np.abs(As).max(axis=1, initial=0.0)
        col = np.where(col < 1e-10, 1.0, col)
        row = np.where(row < 1e-10, 1.0, row)
        d /= np.sqrt(col)
        e /= np.sqrt(row)
    Ps = d[:, None] * P * d[None, :]
    p_cols = np.abs(Ps).max(axis=0, initial=0.0)
    cost = float(p_cols.mean()) if k else 0.0
    c = 1.0 / max(1.0, cost, np.abs(q * d).max(initial=0.0))
    return d, e, c


def solve_qp(
    prob: QpProblem,
    warm_start: np.ndarray | None = None,
    iter_cap: int = 20000,
    time_cap: float | None = None,
    *,
    eps_abs: float = 1e-8,
    eps_rel: float = 1e-8,
    polish: bool = True,
) -> QpSolution:
    """Solve one boxed QP; see the module docstring for the method."""
    solver = BoxQpSolver(prob.P, prob.q, prob.A, prob.lb, prob.ub,
                         prob.var_lb, prob.var_ub)
    return solver.solve(
        warm_start=warm_start,
        iter_cap=iter_cap,
        time_cap=time_cap,
        eps_abs=eps_abs,
        eps_rel=eps_rel,
        polish=polish,
    )


def min_slack_feasibility(
    rows, var_lb, var_ub
) -> tuple[float, np.ndarray]:
    """Minimum total slack of the system {a_i.x >= d_i} over a variable box.

    Solves min sum(s) s.t. a_i.x + s_i >= d_i, s >= 0, var_lb <= x <= var_ub
    (always feasible).  The system is feasible iff the returned total is at
    most the caller's feasibility tolerance; the witness is the minimizing x.
    """
    var_lb = _widen(np.asarray(var_lb, dtype=float).ravel())
    var_ub = _widen(np.asarray(var_ub, dtype=float).ravel())
    k = var_lb.shape[0]
    if var_ub.shape[0] != k:
        raise ValueError("variable bound vectors must have equal length")
    if np.any(var_lb > var_ub):
        raise ValueError("lower bounds must not exceed upper bounds")
    rows = list(rows)
    if not rows:
        return 0.0, np.clip(np.zeros(k), var_lb, var_ub)
    A = np.array([np.asarray(a, dtype=float).ravel() for a, _ in rows])
    d = np.array([float(di) for _, di in rows])
    if A.shape[1] != k:
        raise ValueError("row coefficients must match the variable count")
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(d)):
        raise ValueError("row data must be finite")
    p = len(rows)

    c = np.concatenate([np.zeros(k), np.ones(p)])
    A_ub = np.hstack([-A, -np.eye(p)])
    b_ub = -d
    bounds = [
        (None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
        for lo, hi in zip(var_lb, var_ub)
    ] + [(0.0, None)] * p
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise EngineError(f"slack minimization failed: {res.message}")
    return max(0.0, float(res.fun)), np.asarray(res.x[:k], dtype=float)
