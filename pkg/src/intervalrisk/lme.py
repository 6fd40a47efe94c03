"""Crossed random-intercepts linear mixed model, fitted by maximum likelihood.

The marginal covariance is sigma^2 * V0 with

    V0 = I_N + lam_e Ze Ze' + lam_h Zh Zh'

where Ze, Zh are expert and hop indicator matrices and lam_* are
variance ratios (random-intercept variance over residual variance).
Profiling beta and sigma^2 out of the Gaussian likelihood leaves

    -2LL(lam) = N ln(2 pi sigma2_hat) + ln det V0 + N,
    beta_hat  = (X'V0^-1 X)^-1 X'V0^-1 y,
    sigma2to  = r'V0^-1 r / N,

a 2-parameter problem solved in log-ratio space with explicit boundary
candidates at lam = 0 (ML, not REML, so nested fixed-effects fits stay
comparable by likelihood ratio).  Every solve uses the low-rank
mixed-model-equations reduction M = I_(E+H) + Z'Z, making one deviance
evaluation O((E+H)^3 + p^2 N) instead of O(N^3); an explicit dense-V0
evaluation gives identical values and is kept to the test suite as an
independent oracle.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize, minimize_scalar

from .design import DesignMatrix
from .inference import t_two_sided_p

__all__ = [
    "SingularDesign",
    "NonConvergence",
    "NotConverged",
    "VarianceComponents",
    "FittedModel",
    "profiled_deviance",
    "fit_fixed",
    "fit_ml",
    "loglik_at_optimum",
]

#: Reciprocal-condition floor below which X'V0^-1 X is treated as singular.
_RCOND_FLOOR = 1e-12

#: Search box for the log variance ratios; candidates at exactly 0 are
#: evaluated separately, so the box only needs to cover useful interior.
_LOG_RATIO_BOUNDS = (-25.0, 25.0)

_DEVIANCE_TOL = 1e-8
_MAX_ITERATIONS = 500
_BIG = 1e30  # objective value signalling an unusable parameter point


class SingularDesign(ValueError):
    """X'V0^-1 X is numerically singular (or N <= p)."""


class NonConvergence(RuntimeError):
    """Optimizer failed to meet tolerance within the iteration cap."""


class NotConverged(RuntimeError):
    """Requested an at-optimum quantity from a non-converged fit."""


@dataclass(frozen=True)
class VarianceComponents:
    """Random-effect and residual scale, as standard deviations."""

    sd_expert: float
    sd_hop: float
    sd_residual: float


@dataclass(frozen=True)
class FittedModel:
    """A maximum-likelihood fit of one fixed-effects design.

    beta/se/t/p are aligned with terms.  se uses the residual-df scale
    estimate r'V0^-1 r / (N - p) so that with both variance ratios at
    zero the whole inference row reduces exactly to ordinary least
    squares; sd_residual in vc is the ML profile estimate sqrt(rss/N)
    that the likelihood itself is built on.
    """

    terms: tuple
    beta: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    df_residual: int
    vc: VarianceComponents
    minus2ll: float
    aic: float
    bic: float
    n: int
    k_params: int
    converged: bool
    random_effect_modes: dict      # {"expert": {label: mode}, "hop": {...}}
    lambda_expert: float
    lambda_hop: float
    data_signature: str

    def term_row(self, key: str) -> dict:
        """Inference row for one term, addressed by TermSpec.key."""
        for j, term in enumerate(self.terms):
            if term.key == key:
                return {
                    "term": term,
                    "beta": float(self.beta[j]),
                    "se": float(self.se[j]),
                    "t": float(self.t[j]),
                    "p": float(self.p[j]),
                }
        raise KeyError(key)


# ---- Sufficient statistics and the per-ratio solve ----

class _Blocks:
    """Per-design precomputation for the mixed-model-equations solve."""

    def __init__(self, design: DesignMatrix):
        X = np.asarray(design.X, dtype=float)
        y = np.asarray(design.y, dtype=float)
        n, p = X.shape

        expert_labels, e_codes = np.unique(design.expert_index, return_inverse=True)
        hop_labels, h_codes = np.unique(design.hop_index, return_inverse=True)
        n_experts, n_hops = len(expert_labels), len(hop_labels)

        self.n, self.p = n, p
        self.expert_labels = [str(v) for v in expert_labels]
        self.hop_labels = [str(v) for v in hop_labels]
        self.n_experts, self.n_hops = n_experts, n_hops

        self.XtX = X.T @ X
        self.Xty = X.T @ y
        self.yty = float(y @ y)

        self.counts_e = np.bincount(e_codes, minlength=n_experts).astype(float)
        self.counts_h = np.bincount(h_codes, minlength=n_hops).astype(float)
        # Cross-count matrix: rows experts, cols hops.
        cross = np.bincount(e_codes * n_hops + h_codes,
                            minlength=n_experts * n_hops)
        self.cross = cross.reshape(n_experts, n_hops).astype(float)

        self.ZeX = np.zeros((n_experts, p))
        np.add.at(self.ZeX, e_codes, X)
        self.ZhX = np.zeros((n_hops, p))
        np.add.at(self.ZhX, h_codes, X)
        self.Zey = np.bincount(e_codes, weights=y, minlength=n_experts)
        self.Zhy = np.bincount(h_codes, weights=y, minlength=n_hops)

    def solve(self, lam_e: float, lam_h: float, strict: bool):
        """All profiled quantities at one variance-ratio pair.

        Returns None when the point is numerically unusable and strict
        is False (optimizer probing); raises SingularDesign otherwise.
        """
        n, p = self.n, self.p
        E, H = self.n_experts, self.n_hops
        se_, sh_ = np.sqrt(lam_e), np.sqrt(lam_h)

        # M = I + Z'Z for Z = [sqrt(lam_e) Ze, sqrt(lam_h) Zh].
        M = np.empty((E + H, E + H))
        M[:E, :E] = np.diag(1.0 + lam_e * self.counts_e)
        M[E:, E:] = np.diag(1.0 + lam_h * self.counts_h)
        M[:E, E:] = (se_ * sh_) * self.cross
        M[E:, :E] = M[:E, E:].T

        Zx = np.vstack([se_ * self.ZeX, sh_ * self.ZhX])
        Zy = np.concatenate([se_ * self.Zey, sh_ * self.Zhy])

        try:
            cho_M = cho_factor(M, lower=True, check_finite=False)
        except (LinAlgError, ValueError):
            if strict:
                raise SingularDesign("V0 factorization failed")
            return None
        MinvZx = cho_solve(cho_M, Zx, check_finite=False)
        MinvZy = cho_solve(cho_M, Zy, check_finite=False)

        A = self.XtX - Zx.T @ MinvZx          # X' V0^-1 X
        b = self.Xty - MinvZx.T @ Zy          # X' V0^-1 y
        q = self.yty - float(Zy @ MinvZy)     # y' V0^-1 y

        if strict:
            rcond = _reciprocal_condition(A)
            if not np.isfinite(rcond) or rcond < _RCOND_FLOOR:
                raise SingularDesign(
                    f"X'V0^-1X numerically singular (rcond {rcond:.2e})"
                )
        try:
            cho_A = cho_factor(A, lower=True, check_finite=False)
        except (LinAlgError, ValueError):
            if strict:
                raise SingularDesign("X'V0^-1X factorization failed")
            return None

        beta = cho_solve(cho_A, b, check_finite=False)
        rss = max(q - float(beta @ b), 1e-250)  # r' V0^-1 r
        sigma2 = rss / n
        log_det_v0 = 2.0 * float(np.sum(np.log(np.diag(cho_M[0]))))
        minus2ll = n * np.log(2.0 * np.pi * sigma2) + log_det_v0 + n
        if not np.isfinite(minus2ll):
            if strict:
                raise SingularDesign("deviance not finite")
            return None

        return {
            "minus2ll": float(minus2ll),
            "beta": beta,
            "sigma2": float(sigma2),
            "rss": float(rss),
            "cho_A": cho_A,
            "cho_M": cho_M,
            "Zx": Zx,
            "Zy": Zy,
            "lam_e": lam_e,
            "lam_h": lam_h,
        }

    def modes(self, solution) -> dict:
        """Conditional modes of the random intercepts at the solution."""
        E = self.n_experts
        resid_proj = solution["Zy"] - solution["Zx"] @ solution["beta"]
        u = cho_solve(solution["cho_M"], resid_proj, check_finite=False)
        scale = np.concatenate([
            np.full(E, np.sqrt(solution["lam_e"])),
            np.full(self.n_hops, np.sqrt(solution["lam_h"])),
        ])
        u = scale * u
        return {
            "expert": {lab: float(v) for lab, v in zip(self.expert_labels, u[:E])},
            "hop": {lab: float(v) for lab, v in zip(self.hop_labels, u[E:])},
        }


def _reciprocal_condition(A: np.ndarray) -> float:
    try:
        singular_values = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError:
        return 0.0
    if singular_values[0] <= 0:
        return 0.0
    return float(singular_values[-1] / singular_values[0])


def _signature(design: DesignMatrix) -> str:
    digest = hashlib.sha1()
    digest.update(np.asarray(design.y, dtype=float).tobytes())
    digest.update("\x1f".join(str(v) for v in design.expert_index).encode())
    digest.update(b"|")
    digest.update("\x1f".join(str(v) for v in design.hop_index).encode())
    digest.update(f"|{design.kind}|{design.outcome_kind}".encode())
    return digest.hexdigest()


# ---- Public operations ----

def profiled_deviance(design: DesignMatrix, lam_expert: float, lam_hop: float):
    """(-2 log likelihood, beta_hat, sigma2_hat) at fixed variance ratios.

    sigma2_hat is the profile ML estimate r'V0^-1 r / N.  Raises
    SingularDesign if X'V0^-1X is numerically singular at this point.
    """
    if lam_expert < 0 or lam_hop < 0:
        raise ValueError("variance ratios must be >= 0")
    blocks = _Blocks(design)
    _check_dimensions(blocks)
    sol = blocks.solve(float(lam_expert), float(lam_hop), strict=True)
    return sol["minus2ll"], sol["beta"].copy(), sol["sigma2"]


def _check_dimensions(blocks: _Blocks) -> None:
    if blocks.n <= blocks.p:
        raise SingularDesign(
            f"need more rows than fixed-effect columns (N={blocks.n}, "
            f"p={blocks.p})"
        )


def fit_fixed(design: DesignMatrix, lam_expert: float,
              lam_hop: float) -> FittedModel:
    """Fit with both variance ratios pinned rather than estimated.

    With both ratios zero this is exactly ordinary least squares (the
    random intercepts drop out of the covariance).  Useful for refits
    at known ratios and for testing against closed-form references.
    """
    if lam_expert < 0 or lam_hop < 0:
        raise ValueError("variance ratios must be >= 0")
    blocks = _Blocks(design)
    _check_dimensions(blocks)
    solution = blocks.solve(float(lam_expert), float(lam_hop), strict=True)
    return _build_model(design, blocks, solution, converged=True)


def fit_ml(design: DesignMatrix) -> FittedModel:
    """Maximum-likelihood fit over (lam_expert, lam_hop) in [0, inf)^2.

    The interior search runs Nelder-Mead on the log ratios from the best
    point of a coarse grid; each axis boundary gets its own 1-D search,
    and the double boundary (ordinary least squares) is always
    evaluated.  The candidate with the smallest deviance wins, with
    ties (within 1e-9) resolved toward fewer nonzero components so true
    zeros are reported as exact zeros.
    """
    blocks = _Blocks(design)
    _check_dimensions(blocks)
    # Fail fast on a singular design rather than mid-search.
    blocks.solve(0.0, 0.0, strict=True)

    free_e = blocks.n_experts >= 2
    free_h = blocks.n_hops >= 2
    if not free_e:
        warnings.warn("fewer than 2 distinct experts: expert variance fixed at 0",
                      stacklevel=2)
    if not free_h:
        warnings.warn("fewer than 2 distinct hops: hop variance fixed at 0",
                      stacklevel=2)

    def deviance_at(lam_e: float, lam_h: float) -> float:
        sol = blocks.solve(lam_e, lam_h, strict=False)
        return _BIG if sol is None else sol["minus2ll"]

    lo, hi = _LOG_RATIO_BOUNDS
    # (lam_e, lam_h, minus2ll, converged) candidates, boundaries first.
    candidates = [(0.0, 0.0, deviance_at(0.0, 0.0), True)]

    if free_h:
        res = minimize_scalar(
            lambda t: deviance_at(0.0, np.exp(t)),
            bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-10, "maxiter": _MAX_ITERATIONS},
        )
        candidates.append((0.0, float(np.exp(res.x)), float(res.fun),
                           bool(res.success)))
    if free_e:
        res = minimize_scalar(
            lambda t: deviance_at(np.exp(t), 0.0),
            bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-10, "maxiter": _MAX_ITERATIONS},
        )
        candidates.append((float(np.exp(res.x)), 0.0, float(res.fun),
                           bool(res.success)))
    if free_e and free_h:
        grid = np.array([-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0])
        best_start, best_val = None, np.inf
        for ge in grid:
            for gh in grid:
                val = deviance_at(np.exp(ge), np.exp(gh))
                if val < best_val:
                    best_start, best_val = (ge, gh), val
        res = minimize(
            lambda v: deviance_at(np.exp(v[0]), np.exp(v[1])),
            x0=np.array(best_start), method="Nelder-Mead",
            options={
                "fatol": _DEVIANCE_TOL, "xatol": 1e-8,
                "maxiter": _MAX_ITERATIONS, "maxfev": 4 * _MAX_ITERATIONS,
            },
        )
        candidates.append((float(np.exp(res.x[0])), float(np.exp(res.x[1])),
                           float(res.fun), bool(res.success)))

    # Smallest deviance wins; among candidates within 1e-9 of the
    # minimum the earliest (most-boundary) one is kept, so true zeros
    # are reported as exact zeros.
    floor = min(c[2] for c in candidates)
    best = next(c for c in candidates if c[2] <= floor + 1e-9)
    lam_e, lam_h, _, converged = best

    solution = blocks.solve(lam_e, lam_h, strict=True)
    return _build_model(design, blocks, solution, converged)


def _build_model(design: DesignMatrix, blocks: _Blocks, solution: dict,
                 converged: bool) -> FittedModel:
    n, p = blocks.n, blocks.p
    df_residual = n - p
    beta = solution["beta"]
    a_inv = cho_solve(solution["cho_A"], np.eye(p), check_finite=False)
    sigma2_df = solution["rss"] / df_residual
    se = np.sqrt(sigma2_df * np.diag(a_inv))
    t = beta / se
    p_values = np.array([t_two_sided_p(tj, df_residual) for tj in t])

    sigma2 = solution["sigma2"]
    vc = VarianceComponents(
        sd_expert=float(np.sqrt(sigma2 * solution["lam_e"])),
        sd_hop=float(np.sqrt(sigma2 * solution["lam_h"])),
        sd_residual=float(np.sqrt(sigma2)),
    )
    k_params = p + 3
    minus2ll = solution["minus2ll"]
    return FittedModel(
        terms=tuple(design.terms),
        beta=beta.copy(),
        se=se,
        t=t,
        p=p_values,
        df_residual=df_residual,
        vc=vc,
        minus2ll=minus2ll,
        aic=minus2ll + 2.0 * k_params,
        bic=minus2ll + k_params * np.log(n),
        n=n,
        k_params=k_params,
        converged=converged,
        random_effect_modes=blocks.modes(solution),
        lambda_expert=float(solution["lam_e"]),
        lambda_hop=float(solution["lam_h"]),
        data_signature=_signature(design),
    )


def loglik_at_optimum(model: FittedModel) -> float:
    """Maximized log-likelihood of a converged fit."""
    if not model.converged:
        raise NotConverged("fit did not converge; likelihood is not at optimum")
    return -0.5 * model.minus2ll
