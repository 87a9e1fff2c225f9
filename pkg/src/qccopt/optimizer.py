"""Quasi-Newton amplitude minimisation with analytic gradients."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .errors import NonFiniteObjectiveError

log = logging.getLogger(__name__)


@dataclass
class OptimizeResult:
    t_opt: np.ndarray
    e_opt: float
    evals: int
    converged: bool
    message: str = ""
    trace: list = field(default_factory=list)  # best-so-far energy after each evaluation
    grad_norm: float = math.nan


def default_max_evals(m):
    return 10 * m + 200


def wrap_amplitudes(t):
    """Map amplitudes into ``(-pi, pi]`` (each factor is 2*pi periodic up to sign)."""
    t = np.asarray(t, dtype=float)
    w = np.mod(t + np.pi, 2 * np.pi) - np.pi
    w[w == -np.pi] = np.pi
    return w


class _Tracker:
    def __init__(self, objective, progress):
        self.objective = objective
        self.progress = progress
        self.evals = 0
        self.best_e = math.inf
        self.best_t = None
        self.best_g = None
        self.trace = []

    @property
    def best_gnorm(self):
        return float(np.max(np.abs(self.best_g))) if self.best_g.size else 0.0

    def evaluate(self, t):
        """Evaluate without touching the best point (used by the polish stage)."""
        e, g = self.objective(t)
        e = float(e)
        g = np.asarray(g, dtype=float)
        self.evals += 1
        if not (math.isfinite(e) and np.all(np.isfinite(g))):
            raise NonFiniteObjectiveError(f"objective not finite at evaluation {self.evals}",
                                          point=np.array(t, dtype=float))
        self.trace.append(self.best_e)
        return e, g

    def __call__(self, t):
        e, g = self.objective(t)
        e = float(e)
        g = np.asarray(g, dtype=float)
        self.evals += 1
        if not (math.isfinite(e) and np.all(np.isfinite(g))):
            raise NonFiniteObjectiveError(f"objective not finite at evaluation {self.evals}",
                                          point=np.array(t, dtype=float))
        if e < self.best_e:
            self.best_e, self.best_t, self.best_g = e, np.array(t, dtype=float), g
        self.trace.append(self.best_e)
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if self.progress is not None:
            self.progress(self.evals, e, gnorm)
        return e, g


def minimize(objective, t0, grad_tol=1e-8, step_tol=1e-12, max_evals=None, progress=None,
             wrap=True):
    """Minimise ``objective(t) -> (energy, gradient)`` from *t0* with L-BFGS.

    Converged when the gradient infinity-norm drops below *grad_tol* or a step
    is shorter than *step_tol* (infinity-norm).  The best point seen is
    returned; with ``wrap`` its amplitudes are mapped into ``(-pi, pi]``.
    """
    t0 = np.asarray(t0, dtype=float).copy()
    if max_evals is None:
        max_evals = default_max_evals(len(t0))
    track = _Tracker(objective, progress)
    e0, g0 = track(t0)
    if len(t0) == 0 or np.max(np.abs(g0)) < grad_tol:
        return _finish(track, True, "gradient below tolerance at the start", wrap)

    state = {"prev": t0.copy(), "small_step": False}

    def callback(intermediate_result):
        x = intermediate_result.x
        if np.max(np.abs(x - state["prev"])) < step_tol:
            state["small_step"] = True
            raise StopIteration
        state["prev"] = x.copy()

    def fun(t):
        if track.evals >= max_evals:
            raise _Budget
        return track(t)

    try:
        res = _scipy_minimize(fun, t0, jac=True, method="L-BFGS-B", callback=callback,
                              options={"gtol": grad_tol, "ftol": 0.0, "maxfun": max_evals,
                                       "maxiter": 10 * max_evals, "maxcor": 20})
        message = str(res.message)
    except _Budget:
        message = "evaluation budget exhausted"
    if track.best_gnorm >= grad_tol and _polish(track, grad_tol, max_evals):
        message = "converged after Newton polish"
    converged = track.best_gnorm < grad_tol or state["small_step"]
    if state["small_step"] and track.best_gnorm >= grad_tol:
        message = "step below tolerance"
    return _finish(track, converged, message, wrap)


def _polish(track, grad_tol, max_evals, rounds=3, h_step=1e-5):
    """Newton steps on the gradient once the line search stalls.

    Near the minimum the remaining energy decrease can be below float
    roundoff, which defeats an energy-based line search while the gradient is
    still well resolved.  Steps here are accepted on gradient reduction, with
    the energy allowed to rise only at roundoff level.
    """
    m = len(track.best_t)
    for _ in range(rounds):
        if track.best_gnorm < grad_tol or track.evals + 2 * m + 1 > max_evals:
            break
        t, g = track.best_t, track.best_g
        hess = np.empty((m, m))
        for j in range(m):
            d = np.zeros(m)
            d[j] = h_step
            hess[:, j] = (track.evaluate(t + d)[1] - track.evaluate(t - d)[1]) / (2 * h_step)
        hess = 0.5 * (hess + hess.T)
        try:
            step = -np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or g @ step >= 0:
            break
        e_new, g_new = track.evaluate(t + step)
        noise = 64 * np.finfo(float).eps * max(1.0, abs(track.best_e))
        if e_new > track.best_e + noise or np.max(np.abs(g_new)) >= track.best_gnorm:
            break
        track.best_e, track.best_t, track.best_g = min(e_new, track.best_e), t + step, g_new
        track.trace[-1] = track.best_e
    return track.best_gnorm < grad_tol


class _Budget(Exception):
    pass


def _finish(track, converged, message, wrap):
    t = wrap_amplitudes(track.best_t) if wrap else track.best_t
    gnorm = float(np.max(np.abs(track.best_g))) if track.best_g.size else 0.0
    log.debug("minimize: %s after %d evaluations, E=%.12g", message, track.evals, track.best_e)
    return OptimizeResult(t, track.best_e, track.evals, bool(converged), message,
                          track.trace, gnorm)
