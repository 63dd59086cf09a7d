"""Nested cross-validation driver.

Outer stratified k-fold: each fold in turn is the untouched test set. On the
outer-training part only: RFECV mask per candidate, standalone candidate
scores, greedy base selection over OOF meta-features, MLP topology grid
search, final stack fit. The stack then scores the outer test fold.
"""

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import learners
from ..dataset import derive_seed, load_csv, load_schema, split_by_fold, stratified_kfold
from ..errors import PhishstackError
from ..feature_selection import FeatureMask, rfecv
from ..meta_mlp import MlpConfig, mlp_grid_scores, select_best
from ..metrics import MetricsReport, evaluate, mean_report
from ..stacking import fit_stack, greedy_select, oof_probabilities, predict_stack
from .persistence import save_model

log = logging.getLogger(__name__)


class ExperimentError(PhishstackError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class FoldResult:
    fold: int
    n_train: int = 0
    n_test: int = 0
    test_rows: list = field(default_factory=list)
    candidate_reports: dict = field(default_factory=dict)   # kind -> MetricsReport
    stacked_report: MetricsReport = None
    masks: dict = field(default_factory=dict)               # kind -> FeatureMask
    rfecv_traces: dict = field(default_factory=dict)        # kind -> trace text
    selected: list = field(default_factory=list)
    greedy_history: list = field(default_factory=list)
    inner_standalone: dict = field(default_factory=dict)
    mlp_scores: dict = field(default_factory=dict)          # topology label -> mean CV accuracy
    mlp_choice: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)          # stage -> rows consumed
    leakage_violations: int = 0
    timings: dict = field(default_factory=dict)
    model_path: str = ""
    error: str = ""

    def to_dict(self):
        d = {
            "fold": self.fold, "n_train": self.n_train, "n_test": self.n_test,
            "test_rows": [int(i) for i in self.test_rows],
            "candidate_reports": {k: r.as_dict() for k, r in self.candidate_reports.items()},
            "stacked_report": self.stacked_report.as_dict() if self.stacked_report else None,
            "masks": {k: m.to_text() for k, m in self.masks.items()},
            "rfecv_traces": dict(self.rfecv_traces),
            "selected": list(self.selected),
            "greedy_history": list(self.greedy_history),
            "inner_standalone": dict(self.inner_standalone),
            "mlp_scores": dict(self.mlp_scores),
            "mlp_choice": list(self.mlp_choice),
            "provenance": dict(self.provenance),
            "leakage_violations": self.leakage_violations,
            "timings": dict(self.timings),
            "model_path": self.model_path,
            "error": self.error,
        }
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["candidate_reports"] = {k: MetricsReport.from_dict(v) for k, v in d["candidate_reports"].items()}
        d["stacked_report"] = MetricsReport.from_dict(d["stacked_report"]) if d["stacked_report"] else None
        d["masks"] = {k: FeatureMask.from_text(v) for k, v in d["masks"].items()}
        return cls(**d)


@dataclass
class ExperimentResult:
    config: dict
    config_hash: str
    dataset: str
    n_rows: int
    n_features: int
    schema_hash: str
    folds: list
    candidate_summary: dict      # kind -> mean MetricsReport
    stacked_summary: MetricsReport
    modal_mlp: list
    timings: dict = field(default_factory=dict)

    @property
    def candidate_kinds(self):
        return list(self.candidate_summary)

    def to_dict(self):
        return {
            "config": self.config, "config_hash": self.config_hash, "dataset": self.dataset,
            "n_rows": self.n_rows, "n_features": self.n_features, "schema_hash": self.schema_hash,
            "folds": [f.to_dict() for f in self.folds],
            "candidate_summary": {k: r.as_dict() for k, r in self.candidate_summary.items()},
            "stacked_summary": self.stacked_summary.as_dict() if self.stacked_summary else None,
            "modal_mlp": list(self.modal_mlp), "timings": dict(self.timings),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["folds"] = [FoldResult.from_dict(f) for f in d["folds"]]
        d["candidate_summary"] = {k: MetricsReport.from_dict(v) for k, v in d["candidate_summary"].items()}
        d["stacked_summary"] = MetricsReport.from_dict(d["stacked_summary"]) if d["stacked_summary"] else None
        return cls(**d)


def _specs(cfg):
    return [learners.LearnerSpec(kind, {}, derive_seed(cfg.seed, "learner", kind)) for kind in cfg.candidates]


def _accuracy(y, p):
    return float(np.mean((p > 0.5) == (y == 1)))


def run_fold(ds, plan, fold, cfg, model_dir=None):
    """Run the whole construction on one outer split and score its test fold."""
    res = FoldResult(fold=fold)
    t_start = time.perf_counter()
    train, test = split_by_fold(ds, plan, fold)
    test_ids = set(test.row_ids.tolist())
    res.n_train, res.n_test = train.n, test.n
    res.test_rows = test.row_ids.tolist()
    fold_seed = derive_seed(cfg.seed, "fold", fold)
    specs = _specs(cfg)

    def consumed(stage, rows):
        leaked = len(test_ids.intersection(rows.tolist()))
        res.provenance[stage] = {"rows": int(rows.size), "test_rows_seen": leaked}
        res.leakage_violations += leaked

    t = time.perf_counter()
    candidates = []
    for spec in specs:
        if cfg.skip_rfecv:
            mask = FeatureMask.full(spec.kind, ds.d)
        else:
            consumed(f"rfecv/{spec.kind}", train.row_ids)
            mask, trace = rfecv(train, spec, cfg.inner_k, fold_seed)
            res.rfecv_traces[spec.kind] = trace.to_text()
        res.masks[spec.kind] = mask
        candidates.append((spec, mask))
    res.timings["rfecv"] = time.perf_counter() - t

    # standalone scores on all features with default settings
    t = time.perf_counter()
    consumed("standalone", train.row_ids)
    for spec in specs:
        model = learners.fit(spec, train.features, train.labels, salt=fold)
        res.candidate_reports[spec.kind] = evaluate(test.labels, learners.predict_proba(model, test.features))
    res.timings["standalone"] = time.perf_counter() - t

    t = time.perf_counter()
    default_meta = MlpConfig(hidden_layers=cfg.mlp_candidates[0], max_epochs=cfg.mlp_max_epochs,
                             batch_size=cfg.mlp_batch_size, learning_rate=cfg.mlp_learning_rate,
                             seed=fold_seed, early_stop_patience=cfg.mlp_patience)
    consumed("stacking", train.row_ids)
    if cfg.fixed_bases:
        by_kind = {spec.kind: (spec, mask) for spec, mask in candidates}
        missing = [k for k in cfg.fixed_bases if k not in by_kind]
        if missing:
            raise PhishstackError(f"fixed bases {missing} are not among the candidates")
        selected = [by_kind[k] for k in cfg.fixed_bases]
        oof = oof_probabilities(train, selected, cfg.inner_k, fold_seed)
        for (spec, _), col in zip(selected, oof.matrix.T):
            res.inner_standalone[spec.kind] = _accuracy(train.labels, col)
    else:
        greedy = greedy_select(train, candidates, cfg.inner_k, fold_seed, default_meta)
        selected = list(greedy.selected)
        oof = greedy.meta.columns(greedy.indices)
        res.greedy_history = list(greedy.score_history)
        res.inner_standalone = {spec.kind: acc for (spec, _), acc in zip(candidates, greedy.standalone_accuracy)}
    res.selected = [spec.kind for spec, _ in selected]
    res.timings["selection"] = time.perf_counter() - t

    t = time.perf_counter()
    configs = cfg.mlp_configs(fold_seed)
    if len(configs) > 1:
        scores = mlp_grid_scores(configs, oof.matrix, train.labels, cfg.inner_k, fold_seed)
        best = configs[select_best(scores, [c.n_parameters(oof.matrix.shape[1]) for c in configs])]
        res.mlp_scores = {c.label(): s for c, s in zip(configs, scores)}
    else:
        best = configs[0]
    res.mlp_choice = list(best.hidden_layers)
    res.timings["mlp_grid"] = time.perf_counter() - t

    t = time.perf_counter()
    model = fit_stack(train, selected, cfg.inner_k, fold_seed, best, oof=oof)
    p = predict_stack(model, test.features)
    res.stacked_report = evaluate(test.labels, p)
    res.timings["fit_stack"] = time.perf_counter() - t
    if model_dir is not None:
        path = Path(model_dir) / f"fold_{fold:02d}.psm"
        save_model(model, path)
        res.model_path = str(path)
    res.timings["total"] = time.perf_counter() - t_start
    return res


def run_experiment(cfg, dataset=None):
    """Nested CV over ``cfg``; ``dataset`` overrides loading from ``cfg.dataset_path``."""
    cfg.validate(check_paths=dataset is None)
    t0 = time.perf_counter()
    ds = dataset if dataset is not None else load_csv(cfg.dataset_path, load_schema(cfg.schema_path))
    plan = stratified_kfold(ds, cfg.outer_k, derive_seed(cfg.seed, "outer"))
    model_dir = None
    if cfg.output_dir and cfg.save_models:
        model_dir = Path(cfg.output_dir) / "models"
        model_dir.mkdir(parents=True, exist_ok=True)

    folds = []
    for f in range(cfg.outer_k):
        log.info("outer fold %d/%d", f + 1, cfg.outer_k)
        try:
            folds.append(run_fold(ds, plan, f, cfg, model_dir))
        except (PhishstackError, ValueError, FloatingPointError, ArithmeticError) as exc:
            log.error("fold %d failed: %s", f, exc)
            folds.append(FoldResult(fold=f, error=f"{type(exc).__name__}: {exc}"))

    ok = [fr for fr in folds if not fr.error]
    summary = {}
    for kind in cfg.candidates:
        reports = [fr.candidate_reports[kind] for fr in ok]
        if reports:
            summary[kind] = mean_report(reports)
    stacked = mean_report([fr.stacked_report for fr in ok]) if ok else None
    modal = Counter(tuple(fr.mlp_choice) for fr in ok).most_common(1)
    schema_hash = ds.schema.schema_hash().hex() if ds.schema is not None and ds.schema.is_resolved else ""
    result = ExperimentResult(
        config=cfg.to_dict(), config_hash=cfg.config_hash(), dataset=ds.provenance,
        n_rows=ds.n, n_features=ds.d, schema_hash=schema_hash, folds=folds,
        candidate_summary=summary, stacked_summary=stacked,
        modal_mlp=list(modal[0][0]) if modal else [],
        timings={"total": time.perf_counter() - t0},
    )
    failed = [fr for fr in folds if fr.error]
    if failed:
        msg = "; ".join(f"fold {fr.fold}: {fr.error}" for fr in failed)
        raise ExperimentError(f"{len(failed)} outer fold(s) failed: {msg}", result)
    return result
