"""
Random model generation and Monte-Carlo experiment campaigns.

Four settings are supported:

* ``deterministic``  Y = A X
* ``low_noise``      Y = A X + sigma E, sigma = 0.3 by default
* ``confounded``     X = A Z, Y = B Z
* ``sparse_noisy``   Y = A X + sigma E with 80% zeros in A, sigma = 1

Structure matrices are ``U D V^T`` with independent Haar U, V and Gaussian
diagonal D; covariances are ``U D^2 U^T``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import numpy as np

from .errors import TraceMethodError
from .estimators import PairedDataset
from .matrix_core import haar_orthogonal
from .rng import generator, substream
from .trace_method import DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_ROTATIONS, epsilon_decide, infer

log = logging.getLogger(__name__)

SETTINGS = ("deterministic", "low_noise", "confounded", "sparse_noisy")

SETTING_DEFAULTS = {
    "deterministic": dict(sigma=0.0, sparsity=0.0, confounded=False),
    "low_noise": dict(sigma=0.3, sparsity=0.0, confounded=False),
    "confounded": dict(sigma=0.0, sparsity=0.0, confounded=True),
    "sparse_noisy": dict(sigma=1.0, sparsity=0.8, confounded=False),
}

CSV_COLUMNS = ("n", "k", "sigma", "setting", "direction", "rejection_rate", "mean_delta", "trials")


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one simulation campaign at a single dimension.

    ``k`` defaults to ``n // 2``. ``use_sparse`` selects the screening
    estimator; ``None`` means "when sparsity > 0 and sigma >= 1".
    """

    n: int
    k: Optional[int] = None
    sigma: float = 0.0
    sparsity: float = 0.0
    confounded: bool = False
    seed: int = 0
    trials: int = 100
    alpha: float = DEFAULT_ALPHA
    rotations: int = DEFAULT_ROTATIONS
    epsilon: float = DEFAULT_EPSILON
    noise: str = "rotated"
    diag_mean: float = 0.0
    diag_std: float = 1.0
    use_sparse: Optional[bool] = None
    setting: str = "custom"

    def __post_init__(self):
        if self.k is None:
            object.__setattr__(self, "k", self.n // 2)
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError("sparsity must lie in [0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.noise not in ("rotated", "diagonal"):
            raise ValueError(f"unknown noise structure {self.noise!r}")

    @classmethod
    def for_setting(cls, setting: str, n: int, **overrides) -> "SimulationConfig":
        if setting not in SETTING_DEFAULTS:
            raise ValueError(f"unknown setting {setting!r}; choose from {SETTINGS}")
        params = dict(SETTING_DEFAULTS[setting])
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(n=n, setting=setting, **params)

    @property
    def sparse_pipeline(self) -> bool:
        if self.use_sparse is not None:
            return self.use_sparse
        return self.sparsity > 0 and self.sigma >= 1


@dataclass(frozen=True)
class GroundTruthModel:
    a: np.ndarray
    sigma_x: np.ndarray
    sigma_e: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    # factor L with L L^T = sigma_x; sampling uses it directly
    x_factor: Optional[np.ndarray] = field(default=None, repr=False)
    e_factor: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def confounded(self) -> bool:
        return self.b is not None


def gen_rotated_diag(
    dim: int,
    rng: np.random.Generator,
    kind: str = "structure",
    diag_mean: float = 0.0,
    diag_std: float = 1.0,
    return_factor: bool = False,
):
    """Random matrix with Gaussian spectrum and Haar eigenvectors.

    ``kind="structure"`` returns ``U D V^T``; ``kind="covariance"`` returns
    ``U D^2 U^T`` (and, with ``return_factor``, also ``U D`` as a square
    root).
    """
    d = diag_mean + diag_std * rng.standard_normal(dim)
    U = haar_orthogonal(dim, rng)
    if kind == "structure":
        V = haar_orthogonal(dim, rng)
        return (U * d) @ V.T
    if kind == "covariance":
        L = U * d
        C = L @ L.T
        C = 0.5 * (C + C.T)
        return (C, L) if return_factor else C
    raise ValueError(f"unknown kind {kind!r}")


def sparsify(a: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Zero a uniformly random ``round(fraction * size)`` subset of entries."""
    a = a.copy()
    nz = int(round(fraction * a.size))
    if nz:
        idx = rng.choice(a.size, size=nz, replace=False)
        a.flat[idx] = 0.0
    return a


def gen_model(config: SimulationConfig, rng: np.random.Generator) -> GroundTruthModel:
    n = config.n
    kw = dict(diag_mean=config.diag_mean, diag_std=config.diag_std)
    sigma_x, x_factor = gen_rotated_diag(n, rng, "covariance", return_factor=True, **kw)
    a = gen_rotated_diag(n, rng, "structure", **kw)
    if config.sparsity > 0:
        a = sparsify(a, config.sparsity, rng)
    b = None
    if config.confounded:
        b = gen_rotated_diag(n, rng, "structure", **kw)
    sigma_e = e_factor = None
    if config.sigma > 0 and not config.confounded:
        if config.noise == "diagonal":
            d = config.diag_mean + config.diag_std * rng.standard_normal(n)
            e_factor = np.diag(d)
            sigma_e = np.diag(d**2)
        else:
            sigma_e, e_factor = gen_rotated_diag(n, rng, "covariance", return_factor=True, **kw)
        # noise power equals signal power at sigma = 1
        scale = math.sqrt(np.trace(a @ sigma_x @ a.T) / np.trace(sigma_e))
        sigma_e = sigma_e * scale**2 * config.sigma**2
        e_factor = e_factor * scale * config.sigma
    return GroundTruthModel(a=a, sigma_x=sigma_x, sigma_e=sigma_e, b=b, x_factor=x_factor, e_factor=e_factor)


def gen_dataset(model: GroundTruthModel, k: int, rng: np.random.Generator) -> PairedDataset:
    """Draw k i.i.d. Gaussian samples from the model.

    In the confounded case the latent Z has covariance ``model.sigma_x`` and
    ``X = A Z``, ``Y = B Z``; otherwise ``Y = A X + E``.
    """
    L = model.x_factor
    if L is None:
        L = np.linalg.cholesky(model.sigma_x + 1e-15 * np.eye(model.sigma_x.shape[0]))
    src = rng.standard_normal((k, L.shape[1])) @ L.T
    if model.confounded:
        return PairedDataset(src @ model.a.T, src @ model.b.T)
    y = src @ model.a.T
    if model.sigma_e is not None:
        F = model.e_factor
        if F is None:
            F = np.linalg.cholesky(model.sigma_e)
        y = y + rng.standard_normal((k, F.shape[1])) @ F.T
    return PairedDataset(src, y)


@dataclass
class TrialOutcome:
    trial: int
    p_xy: float = float("nan")
    p_yx: float = float("nan")
    delta_xy: float = float("nan")
    delta_yx: float = float("nan")
    verdict: str = ""
    epsilon_choice: str = ""
    error: Optional[str] = None


def run_trial(config: SimulationConfig, trial: int) -> TrialOutcome:
    """One model + dataset + inference, seeded by ``(seed, trial)``."""
    model_rng = generator(config.seed, trial, 0)
    data_rng = generator(config.seed, trial, 1)
    out = TrialOutcome(trial=trial)
    try:
        model = gen_model(config, model_rng)
        data = gen_dataset(model, config.k, data_rng)
        res = infer(
            data,
            alpha=config.alpha,
            rotations=config.rotations,
            seed=substream(config.seed, trial, 2),
            sparse=config.sparse_pipeline,
        )
    except (TraceMethodError, np.linalg.LinAlgError) as exc:
        log.warning("trial %d failed: %s", trial, exc)
        out.error = f"{type(exc).__name__}: {exc}"
        return out
    out.p_xy = res.test.p_xy
    out.p_yx = res.test.p_yx
    out.delta_xy = res.deltas.delta_xy
    out.delta_yx = res.deltas.delta_yx
    out.verdict = res.test.verdict.value
    out.epsilon_choice = epsilon_decide(res.deltas, config.epsilon).chosen
    return out


@dataclass
class ExperimentResult:
    config: SimulationConfig
    outcomes: List[TrialOutcome]

    @property
    def completed(self) -> List[TrialOutcome]:
        return [o for o in self.outcomes if o.error is None]

    @property
    def failures(self) -> int:
        return len(self.outcomes) - len(self.completed)

    def rejection_rate(self, direction: str) -> float:
        ok = self.completed
        if not ok:
            return float("nan")
        attr = "p_xy" if direction == "X->Y" else "p_yx"
        return sum(getattr(o, attr) < self.config.alpha for o in ok) / len(ok)

    def mean_delta(self, direction: str) -> float:
        ok = self.completed
        if not ok:
            return float("nan")
        attr = "delta_xy" if direction == "X->Y" else "delta_yx"
        return float(np.mean([getattr(o, attr) for o in ok]))

    def verdict_rate(self, verdict: str) -> float:
        ok = self.completed
        return sum(o.verdict == verdict for o in ok) / len(ok) if ok else float("nan")

    def table(self) -> List[dict]:
        c = self.config
        return [
            dict(
                n=c.n,
                k=c.k,
                sigma=c.sigma,
                setting=c.setting,
                direction=d,
                rejection_rate=self.rejection_rate(d),
                mean_delta=self.mean_delta(d),
                trials=len(self.completed),
            )
            for d in ("X->Y", "Y->X")
        ]


def run_experiment(config: SimulationConfig, threads: int = 1) -> ExperimentResult:
    """Run ``config.trials`` independent trials; results are in trial order."""
    trials = range(config.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda t: run_trial(config, t), trials))
    else:
        outcomes = [run_trial(config, t) for t in trials]
    return ExperimentResult(config=config, outcomes=outcomes)


def run_campaign(setting: str, dims, threads: int = 1, **overrides) -> List[ExperimentResult]:
    """Run one experiment per dimension in ``dims``; k defaults to n // 2."""
    return [
        run_experiment(SimulationConfig.for_setting(setting, n, **overrides), threads=threads)
        for n in dims
    ]


def tables_to_csv(results: List[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        for row in res.table():
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def tables_to_json(results: List[ExperimentResult], extra: Optional[dict] = None) -> str:
    doc = dict(extra or {})
    doc["rows"] = [row for res in results for row in res.table()]
    doc["failures"] = [
        dict(n=res.config.n, trial=o.trial, error=o.error)
        for res in results
        for o in res.outcomes
        if o.error is not None
    ]
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def trials_to_csv(results: List[ExperimentResult]) -> str:
    """Per-trial raw dump."""
    fields = ["n", "k", "setting", "trial", "p_xy", "p_yx", "delta_xy", "delta_yx", "verdict", "epsilon_choice", "error"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for res in results:
        for o in res.outcomes:
            row = asdict(o)
            row.update(n=res.config.n, k=res.config.k, setting=res.config.setting)
            writer.writerow({k: (repr(v) if isinstance(v, float) else ("" if v is None else v)) for k, v in row.items()})
    return buf.getvalue()
