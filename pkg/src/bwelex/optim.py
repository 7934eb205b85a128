"""FOBOS training of the bilinear weight matrix.

Each epoch takes one full-batch forward-backward step: a gradient step on
the negative log-likelihood followed by the proximal operator of the
chosen regularizer, W <- prox_p(W - eta * grad, eta * lam). Trace-norm
regularization shrinks singular values and drives W toward low rank;
Frobenius regularization shrinks the matrix as a whole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingStore
from .evaluation import numerical_rank, precision_at_k
from .fileio import atomic_write
from .lexicon import SeedLexicon
from .model import BilinearModel

REGULARIZERS = ("frobenius", "trace")
SCHEDULES = ("constant", "inverse_sqrt")
INITS = ("zeros", "scaled_gaussian")


class DivergenceError(RuntimeError):
    """Training produced a non-finite gradient or objective."""


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    ``lam`` is the regularization constant; the step at epoch t is ``eta0``
    (constant schedule) or ``eta0 / sqrt(t)`` (inverse_sqrt, t starting at
    1). ``frobenius_squared`` switches the p=2 penalty from ||W||_F to the
    squared norm, whose prox is a plain rescale W / (1 + tau).
    """

    regularizer: str = "trace"
    lam: float = 0.0
    eta0: float = 0.01
    schedule: str = "inverse_sqrt"
    epochs: int = 100
    init: str = "zeros"
    init_scale: float = 0.01
    rng_seed: int = 0
    early_stop_patience: int | None = None
    frobenius_squared: bool = False
    batch: str = "full"

    def __post_init__(self):
        if self.regularizer not in REGULARIZERS:
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.batch != "full":
            raise ValueError("only full-batch steps are supported")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be a positive integer")
        if self.init == "scaled_gaussian" and self.init_scale <= 0:
            raise ValueError("init_scale must be positive")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be a positive integer")

    def step_size(self, epoch: int) -> float:
        """Step for 1-based epoch number *epoch* under the schedule."""
        if self.schedule == "constant":
            return self.eta0
        return self.eta0 / math.sqrt(epoch)


@dataclass
class TrainReport:
    """Per-epoch traces and the identity of the returned snapshot.

    ``best_epoch`` is a 0-based index into the traces. Without a dev
    partition ``dev_p1_trace`` stays empty and the last epoch is "best".
    """

    objective_trace: list[float] = field(default_factory=list)
    dev_p1_trace: list[float] = field(default_factory=list)
    rank_trace: list[int] = field(default_factory=list)
    final_rank: int = 0
    best_epoch: int = 0

    @property
    def best_dev_p1(self) -> float | None:
        if not self.dev_p1_trace:
            return None
        return self.dev_p1_trace[self.best_epoch]

    @property
    def epochs_run(self) -> int:
        return len(self.objective_trace)


def prox_frobenius(W: np.ndarray, tau: float) -> np.ndarray:
    """Block soft-threshold: shrink ||W||_F by tau, or to zero entirely."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    norm = float(np.linalg.norm(W))
    if norm <= tau:
        return np.zeros_like(W)
    return W * (1.0 - tau / norm)


def prox_frobenius_squared(W: np.ndarray, tau: float) -> np.ndarray:
    """Prox of the squared Frobenius penalty: uniform rescale by 1/(1+tau)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return W / (1.0 + tau)


def prox_trace(W: np.ndarray, tau: float) -> np.ndarray:
    """Soft-threshold the singular values of W by tau.

    Computes a full SVD and rebuilds W from max(sigma - tau, 0); singular
    directions are untouched, so the output rank never exceeds the input
    rank. SVD convergence failures propagate.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    shrunk = np.maximum(s - tau, 0.0)
    return (U * shrunk) @ Vt


def _prox(W: np.ndarray, tau: float, cfg: TrainConfig) -> np.ndarray:
    if tau == 0.0:
        # identity for every penalty; keeps lam=0 steps bit-exact
        return W
    if cfg.regularizer == "trace":
        return prox_trace(W, tau)
    if cfg.frobenius_squared:
        return prox_frobenius_squared(W, tau)
    return prox_frobenius(W, tau)


def penalty_norm(W: np.ndarray, cfg: TrainConfig) -> float:
    """The regularizer's norm of W (before multiplying by lam).

    The squared Frobenius variant reports half the squared norm: that is
    the function whose proximal operator is the W / (1 + tau) rescale, so
    the objective tracked during training is the one actually minimized.
    """
    if cfg.regularizer == "trace":
        return float(np.linalg.svd(W, compute_uv=False).sum())
    norm = float(np.linalg.norm(W))
    return 0.5 * norm * norm if cfg.frobenius_squared else norm


def objective_value(model: BilinearModel, pairs, cfg: TrainConfig) -> float:
    """Full objective L(W) = nll(pairs) + lam * ||W||_p."""
    return model.nll(pairs) + cfg.lam * penalty_norm(model.W, cfg)


def fobos_step(model: BilinearModel, pairs, eta: float,
               cfg: TrainConfig) -> np.ndarray:
    """One forward-backward step; returns the updated weight matrix.

    Gradient step first, prox second, exactly in that order. A non-finite
    gradient aborts with DivergenceError rather than silently corrupting W.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    grad = model.nll_gradient(pairs)
    if not np.isfinite(grad).all():
        raise DivergenceError(
            "gradient contains non-finite entries; reduce the step size"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        half = model.W - eta * grad
    if not np.isfinite(half).all():
        raise DivergenceError("gradient step overflowed; reduce the step size")
    return _prox(half, eta * cfg.lam, cfg)


def _initial_weights(cfg: TrainConfig, n_s: int, n_t: int) -> np.ndarray:
    if cfg.init == "zeros":
        return np.zeros((n_s, n_t))
    rng = np.random.default_rng(cfg.rng_seed)
    return cfg.init_scale * rng.standard_normal((n_s, n_t))


def _check_coverage(pairs, src: EmbeddingStore, tgt: EmbeddingStore) -> None:
    for e, f in pairs:
        if e not in src:
            raise ValueError(f"source token {e!r} has no embedding")
        if f not in tgt:
            raise ValueError(f"target token {f!r} has no embedding")


def train(src: EmbeddingStore, tgt: EmbeddingStore, lex: SeedLexicon,
          cfg: TrainConfig, candidate_tokens=None, log=None):
    """Run FOBOS on the lexicon's train split; returns (model, report).

    Tracks the objective (and dev P@1 when a dev split exists) per epoch
    and returns the weight snapshot from the best dev epoch; with no dev
    split the final weights are returned. ``log`` is an optional file-like
    sink for one progress line per epoch.
    """
    train_pairs = lex.train_pairs
    dev_pairs = lex.dev_pairs
    if not train_pairs:
        raise ValueError("train partition is empty")
    _check_coverage(train_pairs, src, tgt)
    _check_coverage(dev_pairs, src, tgt)
    if cfg.early_stop_patience is not None and not dev_pairs:
        raise ValueError("early stopping requires a non-empty dev partition")

    W = _initial_weights(cfg, src.dimension, tgt.dimension)
    model = BilinearModel(W, src, tgt, candidate_tokens=candidate_tokens)
    report = TrainReport()
    best_p1 = -1.0
    best_W = model.W

    for epoch in range(1, cfg.epochs + 1):
        eta = cfg.step_size(epoch)
        model = model.with_weights(fobos_step(model, train_pairs, eta, cfg))
        objective = objective_value(model, train_pairs, cfg)
        if not math.isfinite(objective):
            raise DivergenceError(
                f"objective became non-finite at epoch {epoch}"
            )
        report.objective_trace.append(objective)
        report.rank_trace.append(numerical_rank(model.W))

        if dev_pairs:
            result = precision_at_k(model, dev_pairs, [1])
            p1 = result.precision_at_k[1]
            report.dev_p1_trace.append(p1)
            if p1 > best_p1:
                best_p1 = p1
                best_W = model.W
                report.best_epoch = epoch - 1
        else:
            best_W = model.W
            report.best_epoch = epoch - 1

        if log is not None:
            p1_text = f"{report.dev_p1_trace[-1]:.4f}" if dev_pairs else "-"
            print(
                f"epoch {epoch}: objective={objective:.6f} "
                f"dev_p1={p1_text} rank={report.rank_trace[-1]}",
                file=log,
            )

        if (
            cfg.early_stop_patience is not None
            and epoch - 1 - report.best_epoch >= cfg.early_stop_patience
        ):
            break

    final = model.with_weights(best_W)
    report.final_rank = numerical_rank(final.W)
    return final, report


@dataclass
class GridCell:
    """Outcome of one configuration in a model-selection grid."""

    config: TrainConfig
    report: TrainReport | None = None
    error: str | None = None

    @property
    def dev_p1(self) -> float | None:
        if self.report is None:
            return None
        return self.report.best_dev_p1


def select_model(grid, src: EmbeddingStore, tgt: EmbeddingStore,
                 lex: SeedLexicon, candidate_tokens=None, log=None):
    """Train every config in *grid*, pick the best by dev P@1.

    Ties break toward lower final rank, then earlier grid position. Each
    failing cell records its error instead of aborting the sweep; only a
    grid with no surviving cell raises. Returns (model, report, cells)
    for the winner.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("grid is empty")
    if not lex.dev_pairs:
        raise ValueError("model selection requires a non-empty dev partition")

    cells = []
    models = {}
    for i, cfg in enumerate(grid):
        try:
            model, report = train(
                src, tgt, lex, cfg, candidate_tokens=candidate_tokens, log=log
            )
        except (DivergenceError, ValueError, np.linalg.LinAlgError) as exc:
            cells.append(GridCell(config=cfg, error=str(exc)))
            if log is not None:
                print(f"grid cell {i} failed: {exc}", file=log)
            continue
        cells.append(GridCell(config=cfg, report=report))
        models[i] = (model, report)

    if not models:
        raise DivergenceError("every grid cell failed to train")

    def sort_key(i):
        report = models[i][1]
        return (-report.best_dev_p1, report.final_rank, i)

    winner = min(models, key=sort_key)
    best_model, best_report = models[winner]
    return best_model, best_report, cells


def write_train_log(report: TrainReport, path) -> None:
    """Tab-delimited per-epoch trace plus a trailing summary comment."""
    with atomic_write(path) as handle:
        handle.write("epoch\tobjective\tdev_p1\trank\n")
        for i, objective in enumerate(report.objective_trace):
            p1 = f"{report.dev_p1_trace[i]:.6f}" if report.dev_p1_trace else "-"
            handle.write(
                f"{i}\t{objective:.10g}\t{p1}\t{report.rank_trace[i]}\n"
            )
        best = report.best_dev_p1
        best_text = f"{best:.6f}" if best is not None else "-"
        handle.write(
            f"# best_epoch={report.best_epoch} best_dev_p1={best_text} "
            f"final_rank={report.final_rank}\n"
        )


def write_grid_table(cells, path) -> None:
    """One tab-delimited row per grid cell: hyperparameters and outcome."""
    with atomic_write(path) as handle:
        handle.write(
            "index\tregularizer\tlambda\teta0\tschedule\tepochs\t"
            "dev_p1\tfinal_rank\tstatus\n"
        )
        for i, cell in enumerate(cells):
            cfg = cell.config
            if cell.error is not None:
                p1, rank, status = "-", "-", f"error: {cell.error}"
            else:
                p1 = f"{cell.report.best_dev_p1:.6f}"
                rank = str(cell.report.final_rank)
                status = "ok"
            handle.write(
                f"{i}\t{cfg.regularizer}\t{cfg.lam:g}\t{cfg.eta0:g}\t"
                f"{cfg.schedule}\t{cfg.epochs}\t{p1}\t{rank}\t{status}\n"
            )
