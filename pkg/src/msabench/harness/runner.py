"""Experiment orchestration: datasets, learners, evaluation and seeding."""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import baselines, checkpoint, dataset, mssm
from ..errors import ConditioningError, NumericalBlowupError
from ..metrics import ErrorTrace, alignment_error, eval_grid, mssm_projector_F
from ..numerics import solve_spd
from ..oracle import minor_subspace
from .config import fingerprint


@dataclass
class RunResult:
    run: int
    fingerprint: str
    traces: list  # ErrorTrace per algorithm, in config order
    checkpoints: dict = field(default_factory=dict)  # algorithm -> checkpoint text
    sigmas: dict = field(default_factory=dict)  # algorithm -> sigma used
    duration: float = 0.0
    dataset: object = None


def derive_seed(global_seed, *keys):
    """Stable 63-bit seed from the global seed and an integer path."""
    state = np.random.SeedSequence([int(global_seed), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def choose_sigma(policy, X, margin):
    """Resolve a sigma policy (``auto``, ``twice-top`` or a number) on a warm-up prefix of ``X``."""
    if policy not in ("auto", "twice-top"):
        return float(policy)
    n, T = X.shape
    warm = X[:, : min(10 * n, T)]
    if policy == "twice-top":
        return mssm.twice_top_sigma(warm)
    return mssm.auto_sigma(warm, margin)


def _make_online(cfg, alg, seed, sigma):
    if alg == "mssm":
        return mssm.init(
            cfg.n, cfg.m, sigma, cfg.param(alg, "eta0"), cfg.param(alg, "t_half"), cfg.param(alg, "tau"),
            seed=seed, dynamics_mode=cfg.param(alg, "dynamics"),
        )
    return baselines.init(alg, cfg.n, cfg.m, cfg.param(alg, "eta0"), cfg.param(alg, "t_half"), seed=seed)


def _run_online(cfg, alg, state, data, C, V, trace):
    grid = eval_grid(cfg.epochs * data.T, cfg.eval_per_decade)
    gi = 0
    if alg == "mssm":
        advance = mssm.step

        def rows():
            return mssm_projector_F(state.W, state.M, C, state.sigma)
    else:
        advance = baselines.STEPS[alg]

        def rows():
            return state.W

    t = 0
    try:
        for t, x in dataset.stream(data, cfg.epochs):
            advance(state, x)
            if t == grid[gi]:
                trace.record(t, alignment_error(rows(), V))
                gi += 1
    except (NumericalBlowupError, ConditioningError):
        trace.diverged_at = t


def _run_offline(cfg, data, sigma, seed, V, trace):
    params = mssm.OfflineParams(sigma, cfg.offline_eta, cfg.offline_tau, cfg.offline_max_iters, cfg.offline_rel_tol)
    grid = set(eval_grid(cfg.offline_max_iters, cfg.eval_per_decade))
    S = sigma * np.eye(data.n) - dataset.empirical_covariance(data.X)

    def record(it, W, M):
        if it in grid:
            trace.record(it, alignment_error(solve_spd(M, W) @ S, V))

    try:
        result = mssm.fit_offline(data.X, cfg.m, params, seed=seed, callback=record)
    except (NumericalBlowupError, ConditioningError) as exc:
        trace.diverged_at = getattr(exc, "t", None) or (trace.points[-1][0] + 1 if trace.points else 1)
        return None
    if trace.points and trace.points[-1][0] != result.iterations:
        trace.record(result.iterations, alignment_error(solve_spd(result.M, result.W) @ S, V))
    return result


def run_single(cfg, r):
    """Execute run ``r`` of ``cfg`` and return its :class:`RunResult`."""
    start = time.perf_counter()
    data_seed = derive_seed(cfg.seed, r if cfg.data_seed == "per-run" else 0, 0)
    data = dataset.generate(cfg.spectrum_spec(), cfg.T, data_seed)
    C = dataset.empirical_covariance(data.X)
    V = minor_subspace(C, cfg.m)

    result = RunResult(run=r, fingerprint=fingerprint(cfg), traces=[], dataset=data)
    for k, alg in enumerate(cfg.algorithms, start=1):
        init_seed = derive_seed(cfg.seed, r if cfg.init_seed == "per-run" else 0, k)
        trace = ErrorTrace(alg, r)
        if alg in ("mssm", "mssm-offline"):
            policy = cfg.param(alg, "sigma") if alg == "mssm" else cfg.offline_sigma
            sigma = choose_sigma(policy, data.X, cfg.sigma_margin)
            result.sigmas[alg] = sigma
        if alg == "mssm-offline":
            fit = _run_offline(cfg, data, sigma, init_seed, V, trace)
            if fit is not None:
                st = mssm.MssmState(fit.W, fit.M, sigma, fit.iterations, cfg.offline_eta, np.inf, cfg.offline_tau)
                result.checkpoints[alg] = checkpoint.dumps(st)
        else:
            state = _make_online(cfg, alg, init_seed, result.sigmas.get(alg))
            _run_online(cfg, alg, state, data, C, V, trace)
            result.checkpoints[alg] = checkpoint.dumps(state)
        result.traces.append(trace)
    result.duration = time.perf_counter() - start
    return result


def _run_single_packed(args):
    return run_single(*args)


def run_experiment(cfg, workers=None):
    """All runs of ``cfg``, ordered by run index regardless of execution order."""
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, r) for r in range(cfg.runs)]
    if workers > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.runs)) as pool:
            results = list(pool.map(_run_single_packed, jobs))
    else:
        results = [run_single(*job) for job in jobs]
    return sorted(results, key=lambda res: res.run)


def all_traces(results):
    """Traces sorted by (algorithm, run)."""
    return sorted((tr for res in results for tr in res.traces), key=lambda tr: (tr.algorithm, tr.run))
