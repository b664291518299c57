"""Maximum-likelihood plumbing shared by the smoothing and ARMA models.

The objective is the two-variance Gaussian negative log-likelihood with
the variances concentrated out (class-wise mean squared residuals); the
optimizer is a Nelder-Mead simplex on an unconstrained reparameterisation
of the model parameters.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyClassWarning

VARIANCE_FLOOR = 1e-12

LOG_2PI = math.log(2.0 * math.pi)


class Transform(enum.Enum):
    """Bijections from the real line onto each parameter's natural range."""

    UNIT = "unit"  # logistic onto (0, 1)
    SIGNED_UNIT = "signed_unit"  # tanh onto (-1, 1)
    IDENTITY = "identity"


def to_natural(u: np.ndarray, transforms: list[Transform]) -> np.ndarray:
    out = np.empty_like(u, dtype=np.float64)
    for i, tr in enumerate(transforms):
        if tr is Transform.UNIT:
            out[i] = 1.0 / (1.0 + math.exp(-u[i]))
        elif tr is Transform.SIGNED_UNIT:
            out[i] = math.tanh(u[i])
        else:
            out[i] = u[i]
    return out


def to_unconstrained(x: np.ndarray, transforms: list[Transform]) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    for i, tr in enumerate(transforms):
        v = float(x[i])
        if tr is Transform.UNIT:
            v = min(max(v, 1e-12), 1.0 - 1e-12)
            out[i] = math.log(v / (1.0 - v))
        elif tr is Transform.SIGNED_UNIT:
            v = min(max(v, -1.0 + 1e-12), 1.0 - 1e-12)
            out[i] = math.atanh(v)
        else:
            out[i] = v
    return out


def gaussian_nll(residuals: np.ndarray) -> tuple[float, float]:
    """Single-variance Gaussian NLL with the variance concentrated out."""
    e = np.asarray(residuals, dtype=np.float64)
    n = e.size
    if n == 0:
        raise ValueError("no residuals")
    s2 = max(float(np.mean(e * e)), VARIANCE_FLOOR)
    return 0.5 * n * (LOG_2PI + math.log(s2) + 1.0), s2


def two_class_nll(
    residuals: np.ndarray,
    special_mask: np.ndarray,
    skip_first: int = 0,
) -> tuple[float, float, float]:
    """Concentrated two-variance NLL over normal/special residual classes.

    ``skip_first`` residuals (the first year of the estimation sample) are
    excluded.  Returns (nll, sigma_normal^2, sigma_special^2).  With no
    special residuals the likelihood degrades to a single variance and a
    warning is issued.
    """
    e = np.asarray(residuals, dtype=np.float64)[skip_first:]
    m = np.asarray(special_mask, dtype=bool)[skip_first:]
    if e.size == 0:
        raise ValueError("no residuals after first-year exclusion")
    e_s = e[m]
    e_n = e[~m]
    if e_s.size == 0:
        warnings.warn(
            "no special-day residuals; using a single error variance",
            EmptyClassWarning,
            stacklevel=2,
        )
        nll, s2 = gaussian_nll(e_n)
        return nll, s2, s2
    if e_n.size == 0:
        warnings.warn(
            "no normal-day residuals; using a single error variance",
            EmptyClassWarning,
            stacklevel=2,
        )
        nll, s2 = gaussian_nll(e_s)
        return nll, s2, s2
    s2n = max(float(np.mean(e_n * e_n)), VARIANCE_FLOOR)
    s2s = max(float(np.mean(e_s * e_s)), VARIANCE_FLOOR)
    nll = 0.5 * e_n.size * (LOG_2PI + math.log(s2n) + 1.0) + 0.5 * e_s.size * (
        LOG_2PI + math.log(s2s) + 1.0
    )
    return nll, s2n, s2s


def two_class_nll_at(
    residuals: np.ndarray,
    special_mask: np.ndarray,
    sigma_n2: float,
    sigma_s2: float,
    skip_first: int = 0,
) -> float:
    """Two-variance NLL evaluated at given (not concentrated) variances."""
    e = np.asarray(residuals, dtype=np.float64)[skip_first:]
    m = np.asarray(special_mask, dtype=bool)[skip_first:]
    e_s, e_n = e[m], e[~m]
    nll = 0.5 * e_n.size * (LOG_2PI + math.log(sigma_n2)) + 0.5 * float(
        np.sum(e_n * e_n)
    ) / sigma_n2
    nll += 0.5 * e_s.size * (LOG_2PI + math.log(sigma_s2)) + 0.5 * float(
        np.sum(e_s * e_s)
    ) / sigma_s2
    return nll


@dataclass
class MinimizeOptions:
    max_evals: int = 5000  # per restart
    restarts: int = 3
    xtol: float = 1e-6  # simplex diameter
    ftol: float = 1e-9  # objective spread
    step: float = 0.25  # initial simplex step, unconstrained scale
    seed: int = 0


@dataclass
class FitResult:
    params: np.ndarray  # natural scale
    nll: float
    evaluations: int
    converged: bool
    sigma_n2: float | None = None
    sigma_s2: float | None = None
    notes: dict = field(default_factory=dict)


def _nelder_mead(fn, u0, step, max_evals, xtol, ftol):
    """One simplex descent on the unconstrained scale.

    Returns (best_u, best_f, evals, converged).
    """
    n = u0.size
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5

    verts = [u0.copy()]
    for i in range(n):
        v = u0.copy()
        v[i] += step
        verts.append(v)
    fvals = [fn(v) for v in verts]
    evals = n + 1

    while evals < max_evals:
        order = np.argsort(fvals)
        verts = [verts[i] for i in order]
        fvals = [fvals[i] for i in order]

        diameter = max(float(np.max(np.abs(v - verts[0]))) for v in verts[1:])
        spread = fvals[-1] - fvals[0]
        if diameter < xtol or spread < ftol:
            return verts[0], fvals[0], evals, True

        centroid = np.mean(verts[:-1], axis=0)
        xr = centroid + alpha * (centroid - verts[-1])
        fr = fn(xr)
        evals += 1

        if fvals[0] <= fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[0]:
            xe = centroid + gamma * (centroid - verts[-1])
            fe = fn(xe)
            evals += 1
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
            continue
        xc = centroid + rho * (verts[-1] - centroid)
        fc = fn(xc)
        evals += 1
        if fc < fvals[-1]:
            verts[-1], fvals[-1] = xc, fc
            continue
        for i in range(1, n + 1):
            verts[i] = verts[0] + sigma * (verts[i] - verts[0])
            fvals[i] = fn(verts[i])
        evals += n

    order = np.argsort(fvals)
    return verts[order[0]], fvals[order[0]], evals, False


def minimize(
    objective,
    start: np.ndarray,
    transforms: list[Transform],
    options: MinimizeOptions | None = None,
) -> FitResult:
    """Minimize ``objective`` (natural-scale params -> scalar NLL).

    Non-finite objective values are treated as a large sentinel so the
    simplex backs away from them.  Restarts perturb the natural-scale
    start by up to +/-20 percent, deterministically from ``options.seed``.
    """
    opts = options or MinimizeOptions()
    start = np.asarray(start, dtype=np.float64)
    rng = np.random.default_rng(opts.seed)

    def fn(u):
        x = to_natural(u, transforms)
        val = objective(x)
        if not math.isfinite(val):
            return 1e30
        return float(val)

    best_u = None
    best_f = math.inf
    total_evals = 0
    converged = False
    for r in range(max(1, opts.restarts)):
        if r == 0:
            x0 = start
        else:
            scale = 1.0 + 0.2 * rng.uniform(-1.0, 1.0, size=start.size)
            x0 = start * scale
            for i, tr in enumerate(transforms):
                if tr is Transform.UNIT:
                    x0[i] = min(max(x0[i], 1e-6), 1.0 - 1e-6)
                elif tr is Transform.SIGNED_UNIT:
                    x0[i] = min(max(x0[i], -1.0 + 1e-6), 1.0 - 1e-6)
        u0 = to_unconstrained(x0, transforms)
        u, f, ev, ok = _nelder_mead(
            fn, u0, opts.step, opts.max_evals, opts.xtol, opts.ftol
        )
        total_evals += ev
        converged = converged or ok
        if f < best_f:
            best_u, best_f = u, f

    f_start = fn(to_unconstrained(start, transforms))
    total_evals += 1
    if f_start < best_f:
        best_u, best_f = to_unconstrained(start, transforms), f_start

    return FitResult(
        params=to_natural(best_u, transforms),
        nll=best_f,
        evaluations=total_evals,
        converged=converged,
    )
