"""The nested-sampling loop.

Start from ``n_live`` prior draws; repeatedly evict the lowest-likelihood
live point, credit it with ``L_i * (X_{i-1} - X_i)`` where the enclosed prior
volume shrinks deterministically as ``X_i = (n/(n+1))^i``, and replace it
by a draw from the prior above its likelihood.  Stop once the live points
could add less than a fraction ``precision`` to the evidence.

Evidence sums are accumulated relative to a reference log-likelihood (the
best initial live point) so that adding a constant to every log-likelihood
leaves normalised weights and the stopping decision unchanged.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .diagnostics import (
    InsertionRecord,
    TestReport,
    insertion_test,
    kish_ess,
    logsumexp,
    summary_stats,
)
from .errors import SamplerStallError
from .model import DeadPoint, EvalCounter, LivePoint, ModelSpec, evaluate
from .sampler import SliceChainStats, WhiteningTransform, build_whitening, generate_replacement

__all__ = [
    "RunConfig",
    "EngineState",
    "RunResult",
    "initialize",
    "step",
    "remaining_evidence",
    "should_stop",
    "finalize",
    "run",
    "resolve_seed",
]

PLATEAU_WARNING = "likelihood plateau detected: plateaus may spoil evidence estimates"
TRUNCATION_WARNING = "iteration cap reached before the stopping criterion; results are truncated"


def resolve_seed(seed: Optional[int]) -> int:
    """Return ``seed`` or, if None, a fresh 63-bit seed from OS entropy."""
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().entropy % (2 ** 63))


@dataclass(frozen=True)
class RunConfig:
    n_live: int = 500
    n_repeat: Optional[int] = None   # None: 5 per dimension
    precision: float = 1e-3
    seed: Optional[int] = None
    model_seed: Optional[int] = None
    feedback: bool = False
    derived: bool = True
    whiten_every: Optional[int] = None  # None: n_live // 2
    max_expand: int = 10
    trapezoid: bool = False
    max_iterations: Optional[int] = None  # None: 100000 * n_live
    batch_size: Optional[int] = None

    def __post_init__(self):
        if self.n_live < 2:
            raise ValueError(f"n_live must be >= 2, got {self.n_live}")
        if self.n_repeat is not None and self.n_repeat < 1:
            raise ValueError(f"n_repeat must be >= 1, got {self.n_repeat}")
        if not self.precision > 0:
            raise ValueError(f"precision must be positive, got {self.precision}")

    def repeats(self, dim: int) -> int:
        return self.n_repeat if self.n_repeat is not None else 5 * dim

    def iteration_cap(self) -> int:
        return self.max_iterations if self.max_iterations is not None else 100_000 * self.n_live


@dataclass
class EngineState:
    """Mutable state of a run between steps."""

    n_live: int
    live: list
    live_logl: np.ndarray
    live_cubes: np.ndarray
    live_seq: np.ndarray
    log_l_ref: float
    counter: EvalCounter
    iteration: int = 0
    log_z_rel: float = -math.inf
    log_zw_sq_rel: float = -math.inf
    dead: list = field(default_factory=list)
    dead_log_dx: list = field(default_factory=list)
    insertion_indexes: list = field(default_factory=list)
    plateau_flags: int = 0
    next_seq: int = 0
    whitening: Optional[WhiteningTransform] = None
    whitened_at: int = 0
    sampler_stats: SliceChainStats = field(default_factory=SliceChainStats)
    derived_rng: Optional[np.random.Generator] = None

    @property
    def log_t(self) -> float:
        return math.log(self.n_live / (self.n_live + 1.0))

    @property
    def log_x(self) -> float:
        return self.iteration * self.log_t

    @property
    def log_z(self) -> float:
        return self.log_l_ref + self.log_z_rel

    @property
    def n_eval(self) -> int:
        return self.counter.n


def _make_point(model, cube, counter, derived_rng, birth=-math.inf):
    ev = evaluate(model, cube, counter, derived_rng)
    return LivePoint.make(cube, ev.params, ev.log_like, birth, ev.derived)


def initialize(model: ModelSpec, n_live: int, rng: np.random.Generator,
               derived_rng: Optional[np.random.Generator] = None,
               counter: Optional[EvalCounter] = None) -> EngineState:
    """Draw ``n_live`` points uniformly on the cube and evaluate them."""
    if n_live < 2:
        raise ValueError(f"n_live must be >= 2, got {n_live}")
    counter = EvalCounter() if counter is None else counter
    cubes = rng.random((n_live, model.dim))
    live = [_make_point(model, u, counter, derived_rng) for u in cubes]
    logl = np.array([p.log_like for p in live])
    finite = logl[np.isfinite(logl)]
    ref = float(finite.max()) if finite.size else 0.0
    return EngineState(
        n_live=n_live,
        live=live,
        live_logl=logl,
        live_cubes=np.array([p.cube for p in live]),
        live_seq=np.arange(n_live),
        log_l_ref=ref,
        counter=counter,
        next_seq=n_live,
        derived_rng=derived_rng,
    )


def _log_dx(state: EngineState, trapezoid: bool) -> float:
    # volume credited to the point evicted at the current iteration
    n = state.n_live
    if trapezoid:
        t = n / (n + 1.0)
        return state.log_x + math.log((1.0 - t * t) / 2.0)
    return state.log_x - math.log(n + 1.0)


def _log_remaining_volume(state: EngineState, trapezoid: bool) -> float:
    if not trapezoid:
        return state.log_x
    t = state.n_live / (state.n_live + 1.0)
    return math.log(((1.0 - t) + (1.0 + t) * math.exp(state.log_x)) / 2.0)


def _evict_index(state: EngineState) -> int:
    idx = int(np.argmin(state.live_logl))
    lmin = state.live_logl[idx]
    tied = np.flatnonzero(state.live_logl == lmin)
    if tied.size > 1:
        state.plateau_flags += 1
        idx = int(tied[np.argmin(state.live_seq[tied])])
    return idx


def step(state: EngineState, model: ModelSpec, config: RunConfig, rng: np.random.Generator,
         sampler: Optional[Callable] = None) -> EngineState:
    """Evict the worst live point and replace it.  Mutates and returns ``state``."""
    sampler = generate_replacement if sampler is None else sampler
    idx = _evict_index(state)
    evicted = state.live[idx]
    l_star = evicted.log_like

    log_dx = _log_dx(state, config.trapezoid)
    state.dead.append(DeadPoint.from_live(evicted, l_star + log_dx))
    state.dead_log_dx.append(log_dx)
    w_rel = (l_star - state.log_l_ref) + log_dx
    state.log_z_rel = float(np.logaddexp(state.log_z_rel, w_rel))
    state.log_zw_sq_rel = float(np.logaddexp(state.log_zw_sq_rel, 2.0 * w_rel))

    every = config.whiten_every or max(1, state.n_live // 2)
    if state.whitening is None or state.iteration - state.whitened_at >= every:
        state.whitening = build_whitening(state.live_cubes)
        state.whitened_at = state.iteration

    survivors = state.live[:idx] + state.live[idx + 1:]
    try:
        new, stats = sampler(model, survivors, l_star, config.repeats(model.dim), rng,
                             whitening=state.whitening, max_expand=config.max_expand,
                             counter=state.counter)
    except SamplerStallError as exc:
        raise SamplerStallError(
            f"{exc} (iteration {state.iteration}, log X = {state.log_x:.4f})") from exc
    state.sampler_stats += stats
    if state.derived_rng is not None and model.derived is not None:
        d = model.derived(new.params, state.derived_rng)
        new = LivePoint.make(new.cube, new.params, new.log_like, l_star, d)

    below = int(np.count_nonzero(state.live_logl < new.log_like))
    if l_star < new.log_like:
        below -= 1
    state.insertion_indexes.append(below)

    state.live[idx] = new
    state.live_logl[idx] = new.log_like
    state.live_cubes[idx] = new.cube
    state.live_seq[idx] = state.next_seq
    state.next_seq += 1
    state.iteration += 1
    return state


def _remaining_rel(state: EngineState) -> float:
    rel = state.live_logl - state.log_l_ref
    return logsumexp(rel) - math.log(state.n_live) + state.log_x


def remaining_evidence(state: EngineState) -> float:
    """log of (mean live likelihood) * (current volume)."""
    return state.log_l_ref + _remaining_rel(state)


def should_stop(state: EngineState, epsilon: float) -> bool:
    """True once the live points could add less than ``epsilon`` to Z."""
    if state.log_z_rel == -math.inf:
        return False
    return _remaining_rel(state) - state.log_z_rel < math.log(epsilon)


@dataclass(frozen=True)
class RunResult:
    model_name: str
    param_names: tuple
    derived_names: tuple
    n_live: int
    n_repeat: int
    precision: float
    seed: int
    model_seed: int
    log_z: float
    log_z_err: float
    ess: float
    n_eval: int
    ks_p: float
    insertion: TestReport
    insertion_indexes: np.ndarray
    dead: tuple
    log_weights: np.ndarray
    posterior_samples: dict
    prior_samples: dict
    stats: dict
    warnings: tuple
    n_iter: int
    truncated: bool
    n_plateau: int

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def log_like(self) -> np.ndarray:
        return np.array([p.log_like for p in self.dead])

    @property
    def birth_log_like(self) -> np.ndarray:
        return np.array([p.birth_log_like for p in self.dead])

    @property
    def params(self) -> np.ndarray:
        return np.array([p.params for p in self.dead])

    @property
    def cubes(self) -> np.ndarray:
        return np.array([p.cube for p in self.dead])

    @property
    def derived(self) -> np.ndarray:
        return np.array([p.derived for p in self.dead]).reshape(len(self.dead), -1)

    def summary(self) -> str:
        return (f"log(Z) = {self.log_z:.6f} +/- {self.log_z_err:.6f}\n"
                f"ess = {self.ess:.1f}, neval = {self.n_eval}, "
                f"insertion p-value = {self.ks_p:.6g}")


def _systematic_resample(weights, n, rng):
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    pos = (rng.random() + np.arange(n)) / n
    return np.searchsorted(cdf, pos, side="right")


def _sample_columns(model, params, derived, logl):
    out = {}
    params = np.asarray(params, dtype=float).reshape(len(logl), -1)
    for k, name in enumerate(model.param_names):
        out[name] = params[:, k].copy()
    if derived is not None and model.n_derived:
        derived = np.asarray(derived, dtype=float).reshape(len(logl), -1)
        for k, name in enumerate(model.derived_names):
            out[name] = derived[:, k].copy()
    out["log_likelihood"] = np.asarray(logl, dtype=float)
    return out


def finalize(state: EngineState, model: ModelSpec, config: RunConfig, *,
             seed: int = 0, model_seed: int = 0, truncated: bool = False) -> RunResult:
    """Credit the remaining live points, then compute weights and statistics."""
    n = state.n_live
    order = np.lexsort((state.live_seq, state.live_logl))
    log_share = _log_remaining_volume(state, config.trapezoid) - math.log(n)
    dead = list(state.dead)
    log_dx = list(state.dead_log_dx)
    for i in order:
        p = state.live[i]
        dead.append(DeadPoint.from_live(p, p.log_like + log_share))
        log_dx.append(log_share)

    logl = np.array([p.log_like for p in dead])
    delta = logl - state.log_l_ref
    omega = delta + np.array(log_dx)
    log_z_rel = logsumexp(omega)
    log_p = omega - log_z_rel
    p = np.exp(log_p)
    log_z = state.log_l_ref + log_z_rel

    st = summary_stats(delta, p, log_z_rel)
    stats = {"d_kl": st["d_kl"], "log_l_p": st["log_l_p"] + state.log_l_ref, "d_g": st["d_g"]}
    # D_KL at rounding level (constant likelihood) counts as zero
    d_kl = st["d_kl"] if st["d_kl"] > 1e-12 else 0.0
    log_z_err = math.sqrt(d_kl / n)
    ess = kish_ess(p)

    post_rng = np.random.default_rng([seed, 2])
    pick = _systematic_resample(p, max(1, int(round(ess))), post_rng)
    with_derived = config.derived and model.n_derived
    posterior = _sample_columns(
        model,
        [dead[i].params for i in pick],
        [dead[i].derived for i in pick] if with_derived else None,
        logl[pick],
    )

    prior_rng = np.random.default_rng([seed, 1])
    prior_pts = [_make_point(model, u, state.counter, state.derived_rng)
                 for u in prior_rng.random((n, model.dim))]
    prior = _sample_columns(
        model,
        [q.params for q in prior_pts],
        [q.derived for q in prior_pts] if with_derived else None,
        [q.log_like for q in prior_pts],
    )

    warnings = []
    if state.plateau_flags:
        warnings.append(f"{PLATEAU_WARNING} ({state.plateau_flags} tied evictions)")
    if truncated:
        warnings.append(TRUNCATION_WARNING)

    idx = np.array(state.insertion_indexes, dtype=np.int64)
    if idx.size:
        report = insertion_test(InsertionRecord(idx, n, config.batch_size))
    else:
        report = TestReport(1.0, 0.0, 1.0, (config.batch_size or n) / n, 0, 0)

    return RunResult(
        model_name=model.name,
        param_names=tuple(model.param_names),
        derived_names=tuple(model.derived_names) if with_derived else (),
        n_live=n,
        n_repeat=config.repeats(model.dim),
        precision=config.precision,
        seed=seed,
        model_seed=model_seed,
        log_z=log_z,
        log_z_err=log_z_err,
        ess=ess,
        n_eval=state.counter.n,
        ks_p=report.p_value,
        insertion=report,
        insertion_indexes=idx,
        dead=tuple(dead),
        log_weights=log_p,
        posterior_samples=posterior,
        prior_samples=prior,
        stats=stats,
        warnings=tuple(warnings),
        n_iter=state.iteration,
        truncated=truncated,
        n_plateau=state.plateau_flags,
    )


def _progress(state: EngineState, out) -> None:
    ratio = math.exp(min(0.0, _remaining_rel(state) - state.log_z_rel)) \
        if state.log_z_rel > -math.inf else float("nan")
    print(f"it={state.iteration:8d}  log Z={state.log_z:12.5f}  log X={state.log_x:9.3f}  "
          f"dZ/Z={ratio:9.3e}  neval={state.n_eval}", file=out)


def run(model: ModelSpec, config: RunConfig = RunConfig(), *,
        sampler: Optional[Callable] = None, progress=None) -> RunResult:
    """Run nested sampling to convergence.

    ``sampler`` replaces :func:`generate_replacement` (same signature); it
    exists for testing the diagnostics against deliberately broken samplers.
    Progress lines go to ``progress`` (default stderr) when
    ``config.feedback`` is set.
    """
    seed = resolve_seed(config.seed)
    model_seed = resolve_seed(config.model_seed)
    rng = np.random.default_rng(seed)
    derived_rng = np.random.default_rng(model_seed) if config.derived else None
    out = sys.stderr if progress is None else progress

    state = initialize(model, config.n_live, rng, derived_rng)
    cap = config.iteration_cap()
    truncated = False
    every = config.n_live
    while not should_stop(state, config.precision):
        if state.iteration >= cap:
            truncated = True
            break
        step(state, model, config, rng, sampler)
        if config.feedback and state.iteration % every == 0:
            _progress(state, out)
    result = finalize(state, model, config, seed=seed, model_seed=model_seed, truncated=truncated)
    if config.feedback:
        for w in result.warnings:
            print(f"warning: {w}", file=out)
    return result
