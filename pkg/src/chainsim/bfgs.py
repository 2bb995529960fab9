"""Bound-constrained quasi-Newton minimizer with numerical gradients.

Small and self-contained: BFGS inverse-Hessian updates, backtracking
line search with an Armijo sufficient-decrease test, central-difference
gradients, and projection of every iterate onto box bounds. Built for
smooth objectives with a handful of parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ARMIJO_C1 = 1e-4
FD_STEP = 1e-6
MIN_STEP = 1e-14
CURVATURE_EPS = 1e-12


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float      # max-abs projected gradient at x
    iterations: int       # accepted steps
    converged: bool
    n_evals: int          # objective evaluations, gradient stencils included


def central_diff_grad(fun, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient with per-coordinate step step*max(1,|x_i|).

    Evaluates the objective a step outside any bounds the caller may be
    enforcing; the objective must tolerate that.
    """
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


def minimize_bounded(fun, x0, bounds, tol: float = 1e-8,
                     max_iter: int = 500, fd_step: float = FD_STEP) -> MinimizeResult:
    """Minimize fun over a box via projected BFGS.

    bounds is a (lo, hi) pair of arrays. Convergence is declared when
    the projected gradient's max-abs entry drops below tol; at interior
    points that is the plain gradient. Accepted iterates never increase
    the objective (Armijo test), and iterates stay inside the box.
    """
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    n = x.size
    evals = 0

    def f(z):
        nonlocal evals
        evals += 1
        return fun(z)

    def grad(z):
        return central_diff_grad(f, z, fd_step)

    fx = f(x)
    g = grad(x)
    H = np.eye(n)
    iterations = 0
    converged = False

    def projected_gnorm(z, gz):
        return float(np.max(np.abs(z - np.clip(z - gz, lo, hi))))

    while iterations < max_iter:
        if projected_gnorm(x, g) < tol:
            converged = True
            break

        d = -H @ g
        steepest = False
        if float(g @ d) >= 0.0:  # stale curvature, fall back to steepest descent
            H = np.eye(n)
            d = -g
            steepest = True

        def line_search(direction):
            s = 1.0
            while s >= MIN_STEP:
                xn = np.clip(x + s * direction, lo, hi)
                dx = xn - x
                if np.any(dx):
                    fn = f(xn)
                    if fn <= fx + ARMIJO_C1 * float(g @ dx):
                        return xn, fn
                s *= 0.5
            return None

        hit = line_search(d)
        if hit is None and not steepest:
            H = np.eye(n)
            hit = line_search(-g)
        if hit is None:
            break  # no decrease available at machine-size steps
        xn, fn = hit
        gn = grad(xn)
        sk = xn - x
        yk = gn - g
        sy = float(sk @ yk)
        if sy > CURVATURE_EPS * float(np.linalg.norm(sk) * np.linalg.norm(yk)):
            rho = 1.0 / sy
            Hy = H @ yk
            yHy = float(yk @ Hy)
            # standard inverse-Hessian update, written to avoid forming
            # the rank-one factors twice
            H -= rho * (np.outer(sk, Hy) + np.outer(Hy, sk))
            H += rho * (1.0 + rho * yHy) * np.outer(sk, sk)
        x, fx, g = xn, fn, gn
        iterations += 1
    else:
        converged = projected_gnorm(x, g) < tol

    return MinimizeResult(x=x, fun=fx, grad_norm=projected_gnorm(x, g),
                          iterations=iterations, converged=converged,
                          n_evals=evals)
