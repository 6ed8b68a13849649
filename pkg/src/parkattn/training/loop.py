"""Experiment drivers: nested cross-validation and leave-one-dataset-out.

For every (outer fold, seed) job the driver

1. fits the feature-normalization reference on the HC rows of the training
   speakers only,
2. trains on the inner-train speakers and records validation F1,
3. retrains from the same initialization on the full outer-train set and
   records test F1 (final-epoch model, no early stopping),

with loss averaged over logical batches of independently forwarded
utterances and AdamW stepped under a per-step cosine schedule.  Runs that
diverge (non-finite loss) are recorded as failures without aborting the
sweep.  Everything is deterministic given the config: parameter, shuffle and
split seeds all derive from (seed, fold) via SeedSequence.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..data.manifest import UtteranceRecord
from ..data.sfm1 import read_sfm1
from ..data.splits import make_cross_lingual_splits, make_nested_splits
from ..features.normalize import fit_reference, normalize
from ..features.schema import InformedFeatureSchema, default_schema
from ..model import ModelParams, forward, init_params, save_checkpoint
from ..tensor import Matrix, Tape, cross_entropy
from .metrics import f1_score
from .optim import AdamState, adamw_step, cosine_lr

log = logging.getLogger("parkattn.train")


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 4e-4
    epochs: int = 5
    batch_size: int = 8
    weight_decay: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seeds: tuple[int, ...] = (11, 22, 33, 44, 55)
    outer_folds: int = 5
    inner_folds: int = 4
    split_seed: int = 0
    scale: str = "contracted"  # cross-attention logit scaling mode
    normalize_ssl: bool = False  # HC-referenced scaling of SSL dims as well
    lr_schedule: str = "step"  # cosine stepped per "step" or per "epoch"
    f1_average: str = "macro"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        self.seeds = tuple(int(s) for s in self.seeds)


@dataclass
class JobResult:
    fold: str  # outer fold index or held-out dataset id
    seed: int
    val_f1: Optional[float]
    test_f1: float
    epoch_losses: list[float]
    checkpoint: str = ""


@dataclass
class PredictionRow:
    utterance_id: str
    fold: str
    seed: int
    true_label: int
    predicted_label: int
    logit_hc: float
    logit_pd: float


@dataclass
class RunResult:
    task: str
    variant: str
    config: dict
    jobs: list[JobResult] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    predictions: list[PredictionRow] = field(default_factory=list)

    def _agg(self, values) -> dict:
        arr = np.array(values, dtype=np.float64)
        return {"mean": float(arr.mean()), "std": float(arr.std())} if arr.size else {}

    @property
    def test_f1_mean(self) -> float:
        return float(np.mean([j.test_f1 for j in self.jobs]))

    def summary(self) -> dict:
        out = {
            "task": self.task,
            "variant": self.variant,
            "n_jobs": len(self.jobs),
            "n_failures": len(self.failures),
            "test_f1": self._agg([j.test_f1 for j in self.jobs]),
        }
        vals = [j.val_f1 for j in self.jobs if j.val_f1 is not None]
        if vals:
            out["val_f1"] = self._agg(vals)
        return out

    def to_json(self) -> str:
        payload = {
            "task": self.task,
            "variant": self.variant,
            "config": self.config,
            "summary": self.summary(),
            "jobs": [asdict(j) for j in self.jobs],
            "failures": self.failures,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    def predictions_csv(self) -> str:
        lines = ["utterance_id,fold,seed,true_label,predicted_label,logit_hc,logit_pd"]
        for p in self.predictions:
            lines.append(
                f"{p.utterance_id},{p.fold},{p.seed},{p.true_label},"
                f"{p.predicted_label},{p.logit_hc!r},{p.logit_pd!r}"
            )
        return "\n".join(lines) + "\n"


@dataclass(eq=False)
class _Row:
    record: UtteranceRecord
    x_ssl: np.ndarray
    x_inf: np.ndarray
    x_inf_norm: Optional[np.ndarray] = None
    x_ssl_norm: Optional[np.ndarray] = None


def _load_rows(records: list[UtteranceRecord]) -> list[_Row]:
    rows = []
    for rec in records:
        x_ssl, _ = read_sfm1(rec.ssl_path)
        x_inf, _ = read_sfm1(rec.inf_path)
        rows.append(
            _Row(record=rec, x_ssl=np.asarray(x_ssl, dtype=np.float64),
                 x_inf=np.asarray(x_inf, dtype=np.float64).reshape(-1))
        )
    return rows


def _subseed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _normalize_rows(
    train: list[_Row],
    others: list[list[_Row]],
    schema: InformedFeatureSchema,
    cfg: TrainConfig,
    fold_tag: str,
):
    """Fit the HC reference on the training rows and apply it everywhere."""
    ref = fit_reference(
        [r.x_inf for r in train],
        [r.record.label for r in train],
        schema,
        utterance_ids=[r.record.utterance_id for r in train],
        fitted_on=fold_tag,
    )
    ssl_ref = None
    if cfg.normalize_ssl:
        hc = np.array(
            [r.x_ssl.mean(axis=0) for r in train if r.record.label == 0]
        )
        med = np.median(hc, axis=0)
        std = hc.std(axis=0)
        std[std < 1e-8] = 1e-8
        ssl_ref = (med, std)
    for group in [train, *others]:
        for r in group:
            r.x_inf_norm = normalize(r.x_inf, ref, schema)
            if ssl_ref is not None:
                r.x_ssl_norm = (r.x_ssl - ssl_ref[0]) / ssl_ref[1]
            else:
                r.x_ssl_norm = r.x_ssl
    return ref


def _fit(
    rows: list[_Row],
    variant: str,
    cfg: TrainConfig,
    param_seed: int,
    shuffle_seed: int,
    fold_tag: str,
) -> tuple[ModelParams, list[float]]:
    if not rows:
        raise TrainingError(f"{fold_tag}: no training rows")
    d = rows[0].x_ssl.shape[1]
    f = rows[0].x_inf.shape[0]
    params = init_params(variant, d=d, f=f, seed=param_seed)
    state = AdamState.for_params(params)
    rng = np.random.default_rng(np.random.PCG64(shuffle_seed))
    steps_per_epoch = int(np.ceil(len(rows) / cfg.batch_size))
    total = (
        cfg.epochs * steps_per_epoch if cfg.lr_schedule == "step" else cfg.epochs
    )
    order = np.arange(len(rows))
    step = 0
    epoch_losses: list[float] = []
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [rows[i] for i in order[start : start + cfg.batch_size]]
            sched_step = step if cfg.lr_schedule == "step" else epoch
            lr = cosine_lr(sched_step, total, cfg.learning_rate)
            grads: dict[str, np.ndarray] = {}
            batch_loss = 0.0
            for row in batch:
                tape = Tape()
                pred = forward(
                    params,
                    x_ssl=Matrix(row.x_ssl_norm),
                    x_inf=Matrix(row.x_inf_norm),
                    tape=tape,
                    scale=cfg.scale,
                )
                loss = cross_entropy(pred.logits_matrix, row.record.label, tape)
                batch_loss += loss.item()
                tape.backward(loss, seed=1.0 / len(batch))
                for name, mat in params.named():
                    if mat.grad is None:
                        continue
                    if name in grads:
                        grads[name] += mat.grad
                    else:
                        grads[name] = mat.grad.copy()
            batch_loss /= len(batch)
            if not np.isfinite(batch_loss):
                raise TrainingError(f"{fold_tag}: non-finite loss at step {step}")
            adamw_step(
                params,
                grads,
                state,
                lr,
                beta1=cfg.adam_beta1,
                beta2=cfg.adam_beta2,
                eps=cfg.adam_eps,
                weight_decay=cfg.weight_decay,
            )
            epoch_loss += batch_loss
            step += 1
        epoch_loss /= steps_per_epoch
        epoch_losses.append(epoch_loss)
        log.info("epoch fold=%s epoch=%d loss=%.6f lr=%.3e", fold_tag, epoch, epoch_loss, lr)
    return params, epoch_losses


def _evaluate(params: ModelParams, rows: list[_Row], cfg: TrainConfig):
    pairs = []
    preds = []
    for row in rows:
        pred = forward(
            params,
            x_ssl=Matrix(row.x_ssl_norm),
            x_inf=Matrix(row.x_inf_norm),
            scale=cfg.scale,
        )
        pairs.append((pred.predicted_label, row.record.label))
        preds.append((row.record.utterance_id, row.record.label, pred))
    return f1_score(pairs, cfg.f1_average), preds


def _run_job(
    train_rows,
    val_rows,
    test_rows,
    variant,
    cfg,
    schema,
    seed,
    fold_idx,
    fold_tag,
    out_dir,
    result,
):
    param_seed = _subseed(seed, fold_idx)
    shuffle_seed = _subseed(seed, fold_idx, 1)
    val_f1 = None
    if val_rows:
        val_ids = {r.record.utterance_id for r in val_rows}
        inner = [r for r in train_rows if r.record.utterance_id not in val_ids]
        inner_params, _ = _fit(inner, variant, cfg, param_seed, shuffle_seed, fold_tag)
        val_f1, _ = _evaluate(inner_params, val_rows, cfg)
    params, losses = _fit(train_rows, variant, cfg, param_seed, shuffle_seed, fold_tag)
    test_f1, preds = _evaluate(params, test_rows, cfg)
    ckpt = ""
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt_path = out_dir / f"model_{fold_tag}_seed{seed}.ckpt"
        save_checkpoint(params, ckpt_path, schema_hash=schema.hash())
        ckpt = ckpt_path.name
    result.jobs.append(
        JobResult(
            fold=fold_tag,
            seed=seed,
            val_f1=val_f1,
            test_f1=test_f1,
            epoch_losses=losses,
            checkpoint=ckpt,
        )
    )
    for utt_id, true, pred in preds:
        result.predictions.append(
            PredictionRow(
                utterance_id=utt_id,
                fold=fold_tag,
                seed=seed,
                true_label=true,
                predicted_label=pred.predicted_label,
                logit_hc=float(pred.logits[0]),
                logit_pd=float(pred.logits[1]),
            )
        )


def _task_folds(task_records, task, cfg, schema, only_fold: Optional[int] = None):
    """Per-fold (index, tag, train, validation, test) rows, normalized."""
    plan = make_nested_splits(
        task_records, task, outer_k=cfg.outer_folds, seed=cfg.split_seed,
        inner_k=cfg.inner_folds,
    )
    rows = _load_rows(task_records)
    by_speaker: dict[str, list[_Row]] = {}
    for row in rows:
        by_speaker.setdefault(row.record.speaker_id, []).append(row)

    folds = []
    for fold_idx, fold in enumerate(plan.folds):
        if only_fold is not None and fold_idx != only_fold:
            continue
        # one shallow copy of each row per fold: folds share the feature
        # arrays but never each other's fold-fitted normalized views, while
        # the validation rows stay identical objects to the train rows
        fold_rows = {
            spk: [copy.copy(r) for r in rs] for spk, rs in by_speaker.items()
        }

        def gather(speakers):
            return [r for s in speakers for r in fold_rows[s]]

        train_rows = gather(fold.train_speakers)
        test_rows = gather(fold.test_speakers)
        val_rows = gather(fold.validation_speakers)
        _normalize_rows(train_rows, [test_rows], schema, cfg, f"fold{fold_idx}")
        folds.append((fold_idx, f"fold{fold_idx}", train_rows, val_rows, test_rows))
    return folds


def _xling_folds(task_records, cfg, schema, targets, datasets, only_held: Optional[str] = None):
    folds = []
    for held in targets:
        if only_held is not None and held != only_held:
            continue
        train_recs, test_recs = make_cross_lingual_splits(task_records, held)
        train_rows = _load_rows(train_recs)
        test_rows = _load_rows(test_recs)
        _normalize_rows(train_rows, [test_rows], schema, cfg, f"holdout-{held}")
        folds.append((datasets.index(held), f"holdout-{held}", train_rows, [], test_rows))
    return folds


def _task_worker(task_records, task, variant, cfg, schema, out_dir, fold_idx, seed):
    """One (fold, seed) job in a subprocess; results merge order is fixed
    by the parent, so parallel runs stay byte-identical to serial ones."""
    (fold_idx, tag, train_rows, val_rows, test_rows) = _task_folds(
        task_records, task, cfg, schema, only_fold=fold_idx
    )[0]
    scratch = RunResult(task=task, variant=variant, config={})
    try:
        _run_job(
            train_rows, val_rows, test_rows, variant, cfg, schema,
            seed, fold_idx, tag, out_dir, scratch,
        )
    except TrainingError as exc:
        return None, [], {"fold": tag, "seed": seed, "error": str(exc)}
    return scratch.jobs[0], scratch.predictions, None


def _xling_worker(task_records, task, variant, cfg, schema, out_dir, targets, datasets, held, seed):
    (ds_idx, tag, train_rows, _, test_rows) = _xling_folds(
        task_records, cfg, schema, targets, datasets, only_held=held
    )[0]
    scratch = RunResult(task=task, variant=variant, config={})
    try:
        _run_job(
            train_rows, [], test_rows, variant, cfg, schema,
            seed, ds_idx, tag, out_dir, scratch,
        )
    except TrainingError as exc:
        return None, [], {"fold": tag, "seed": seed, "error": str(exc)}
    return scratch.jobs[0], scratch.predictions, None


def _merge_parallel(result: RunResult, futures) -> None:
    for future in futures:
        job, predictions, failure = future.result()
        if failure is not None:
            result.failures.append(failure)
        else:
            result.jobs.append(job)
            result.predictions.extend(predictions)


def train_task(
    records: list[UtteranceRecord],
    task: str,
    variant: str,
    config: Optional[TrainConfig] = None,
    schema: Optional[InformedFeatureSchema] = None,
    out_dir=None,
    jobs: int = 1,
) -> RunResult:
    """Nested-CV protocol: outer folds x seeds, speaker-independent.

    `jobs` > 1 fans the independent (fold, seed) jobs over worker processes;
    results are merged in the serial order, so outputs are identical.
    """
    cfg = config or TrainConfig()
    schema = schema or default_schema()
    task_records = [r for r in records if r.task == task]
    if not task_records:
        raise TrainingError(f"no records for task {task!r}")
    result = RunResult(task=task, variant=variant, config=_config_snapshot(cfg, schema))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        # validate the split up front so bad inputs fail before forking
        make_nested_splits(
            task_records, task, outer_k=cfg.outer_folds, seed=cfg.split_seed,
            inner_k=cfg.inner_folds,
        )
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    _task_worker, task_records, task, variant, cfg, schema,
                    out_dir, fold_idx, seed,
                )
                for fold_idx in range(cfg.outer_folds)
                for seed in cfg.seeds
            ]
            _merge_parallel(result, futures)
    else:
        for fold_idx, tag, train_rows, val_rows, test_rows in _task_folds(
            task_records, task, cfg, schema
        ):
            for seed in cfg.seeds:
                try:
                    _run_job(
                        train_rows, val_rows, test_rows, variant, cfg, schema,
                        seed, fold_idx, tag, out_dir, result,
                    )
                except TrainingError as exc:
                    result.failures.append({"fold": tag, "seed": seed, "error": str(exc)})
    if not result.jobs:
        raise TrainingError("every (fold, seed) job failed")
    return result


def train_cross_lingual(
    records: list[UtteranceRecord],
    task: str,
    variant: str,
    config: Optional[TrainConfig] = None,
    schema: Optional[InformedFeatureSchema] = None,
    hold_out: Optional[str] = None,
    out_dir=None,
    jobs: int = 1,
) -> RunResult:
    """Leave-one-dataset-out with the monolingual configuration (no inner CV)."""
    cfg = config or TrainConfig()
    schema = schema or default_schema()
    task_records = [r for r in records if r.task == task]
    if not task_records:
        raise TrainingError(f"no records for task {task!r}")
    datasets = sorted({r.dataset_id for r in task_records})
    targets = [hold_out] if hold_out is not None else datasets
    result = RunResult(task=task, variant=variant, config=_config_snapshot(cfg, schema))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        for held in targets:
            make_cross_lingual_splits(task_records, held)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    _xling_worker, task_records, task, variant, cfg, schema,
                    out_dir, targets, datasets, held, seed,
                )
                for held in targets
                for seed in cfg.seeds
            ]
            _merge_parallel(result, futures)
    else:
        for ds_idx, tag, train_rows, _, test_rows in _xling_folds(
            task_records, cfg, schema, targets, datasets
        ):
            for seed in cfg.seeds:
                try:
                    _run_job(
                        train_rows, [], test_rows, variant, cfg, schema,
                        seed, ds_idx, tag, out_dir, result,
                    )
                except TrainingError as exc:
                    result.failures.append({"fold": tag, "seed": seed, "error": str(exc)})
    if not result.jobs:
        raise TrainingError("every (hold-out, seed) job failed")
    return result


def _config_snapshot(cfg: TrainConfig, schema: InformedFeatureSchema) -> dict:
    snap = asdict(cfg)
    snap["seeds"] = list(cfg.seeds)
    snap["schema_hash"] = schema.hash()
    snap["schema_size"] = schema.size
    return snap
