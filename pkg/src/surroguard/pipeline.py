"""End-to-end pipeline stages behind the command-line interface.

The pipeline turns a declarative TOML config into a run directory of
plain-text artifacts: design + oracle targets, a tuned surrogate,
sensitivity profiles, bootstrap OOD labels, a trained detector with its
PR curves, a hybrid-routing evaluation, and a consolidated report.

Reproducibility rules:

* every stage is a pure function of the config file and earlier
  artifacts — re-running a stage rewrites byte-identical numeric files;
* wall-clock measurements (stage seconds, per-query timings) live either
  in the manifest's ``seconds`` fields or in artifacts flagged volatile,
  so digest comparisons across runs ignore them;
* a run directory is owned by one process at a time (lockfile).

Configs are strict: unknown sections or keys, or values of the wrong
type, abort with a ConfigError before any stage runs.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import tomli

from . import __version__, baseline as baseline_mod
from .clsmetrics import aupr, classification_report, pr_curve
from .data import Dataset, NormalizationStats, load_csv, save_csv
from .design import DesignSpace, lhs_sample
from .detector import detector_cv_tune
from .fnn import (FnnArchitecture, FnnModel, TrainConfig, fnn_train,
                  grid_search_cv)
from .gbdt import DetectorModel, GbdtConfig, gbdt_train
from .gp import GpFitConfig, GpModel, gp_fit, gp_predict
from .hybrid import RouterConfig, evaluate_hybrid
from .labeling import ConfidenceInterval, bootstrap_ci, label_ood
from .oracles import OracleSpec, make_oracle, oracle_eval
from .oversample import OversampleConfig, oversample
from .sensitivity import PerturbationSpec, profile_batch, profile_matrix

STAGES = ("doe", "train", "profile", "label", "detector", "hybrid", "report")

PROFILE_COLUMNS = ("sa", "sv", "ja", "jv", "pred", "target", "abs_error")


class ConfigError(ValueError):
    """Bad pipeline config: unknown key, wrong type, or invalid value."""


class PipelineError(RuntimeError):
    """Stage-level failure (missing prerequisite, locked run dir, ...)."""


# ---------------------------------------------------------------------------
# config schema

_REQUIRED = object()


@dataclass(frozen=True)
class _Key:
    type: object  # int | float | str | bool | (list, elem_type)
    default: object = _REQUIRED


_SCHEMA = {
    "run": {
        "out_dir": _Key(str, "run"),
        "seed": _Key(int, 0),
    },
    "space": {
        "dim": _Key(int),
        "lower": _Key(float, 0.0),
        "upper": _Key(float, 1.0),
    },
    "oracle": {
        "kind": _Key(str),
        "seed": _Key(int, 7),
        "cost_seconds": _Key(float, 10678.0),
    },
    "doe": {
        "n_train": _Key(int),
        "n_test": _Key(int),
        "val_fraction": _Key(float, 0.25),
        "train_seed": _Key(int, 11),
        "test_seed": _Key(int, 12),
        "split_seed": _Key(int, 13),
        "train_lower_frac": _Key(float, 0.0),
        "train_upper_frac": _Key(float, 1.0),
    },
    "surrogate": {
        "kind": _Key(str),
    },
    "fnn": {
        "hidden": _Key((list, int), [32, 64, 128]),
        "learning_rates": _Key((list, float), [1e-3, 1e-2, 3e-2]),
        "weight_decays": _Key((list, float), [1e-4, 1e-3, 1e-2]),
        "epochs": _Key((list, int), [50, 100]),
        "batch_size": _Key(int, 32),
        "cv_folds": _Key(int, 5),
        "seed": _Key(int, 21),
    },
    "gp": {
        "restarts": _Key(int, 10),
        "max_iter": _Key(int, 120),
        "subsample": _Key(int, 0),  # 0 = use every training point
        "seed": _Key(int, 23),
    },
    "profile": {
        "delta": _Key(float, 0.05),
        "n_perturb": _Key(int, 64),
        "seed": _Key(int, 31),
    },
    "label": {
        "level": _Key(float, 0.99),
        "n_boot": _Key(int, 2000),
        "seed": _Key(int, 41),
    },
    "detector": {
        "methods": _Key((list, str), ["smote", "borderline_smote"]),
        "k_neighbors": _Key((list, int), [5]),
        "ratios": _Key((list, float), [0.5, 1.0]),
        "learning_rates": _Key((list, float), [0.1, 0.5]),
        "n_estimators": _Key((list, int), [100, 250]),
        "max_depth": _Key(int, 3),
        "min_samples_leaf": _Key(int, 5),
        "cv_folds": _Key(int, 5),
        "seed": _Key(int, 51),
    },
    "baseline": {
        "neighbor_grid": _Key((list, int), [4, 8, 12, 16, 20]),
        "percentile": _Key(float, 95.0),
        "seed": _Key(int, 61),
    },
    "hybrid": {
        "risk_threshold": _Key(float, 0.5),
    },
}


def _coerce(section: str, key: str, spec: _Key, value):
    t = spec.type
    if isinstance(t, tuple):  # homogeneous list
        elem = t[1]
        if not isinstance(value, list):
            raise ConfigError(f"[{section}] {key} must be an array")
        out = []
        for v in value:
            out.append(_coerce(section, key, _Key(elem), v))
        return out
    if t is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number")
        return float(value)
    if t is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return value
    if t is str:
        if not isinstance(value, str):
            raise ConfigError(f"[{section}] {key} must be a string")
        return value
    if t is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"[{section}] {key} must be a boolean")
        return value
    raise AssertionError(f"unhandled schema type {t!r}")


@dataclass
class PipelineConfig:
    """Validated config; one attribute (namespace) per TOML section."""

    run: SimpleNamespace
    space: SimpleNamespace
    oracle: SimpleNamespace
    doe: SimpleNamespace
    surrogate: SimpleNamespace
    fnn: SimpleNamespace
    gp: SimpleNamespace
    profile: SimpleNamespace
    label: SimpleNamespace
    detector: SimpleNamespace
    baseline: SimpleNamespace
    hybrid: SimpleNamespace
    config_sha256: str = ""
    out_dir: Path = field(default_factory=lambda: Path("run"))

    def design_space(self) -> DesignSpace:
        return DesignSpace.cube(self.space.dim, self.space.lower, self.space.upper)

    def oracle_spec(self) -> OracleSpec:
        return OracleSpec(self.oracle.kind, self.oracle.seed,
                          self.oracle.cost_seconds)

    def perturbation_spec(self) -> PerturbationSpec:
        return PerturbationSpec(self.profile.delta, self.profile.n_perturb,
                                self.profile.seed)


def _validate(cfg: PipelineConfig):
    if cfg.surrogate.kind not in ("fnn", "gp"):
        raise ConfigError("[surrogate] kind must be 'fnn' or 'gp'")
    if not cfg.space.lower < cfg.space.upper:
        raise ConfigError("[space] lower must be < upper")
    if cfg.space.dim < 1:
        raise ConfigError("[space] dim must be >= 1")
    d = cfg.doe
    if d.n_train < 20 or d.n_test < 1:
        raise ConfigError("[doe] needs n_train >= 20 and n_test >= 1")
    if not 0.0 < d.val_fraction < 1.0:
        raise ConfigError("[doe] val_fraction must lie in (0, 1)")
    if not 0.0 <= d.train_lower_frac < d.train_upper_frac <= 1.0:
        raise ConfigError("[doe] train box fractions must satisfy "
                          "0 <= lower < upper <= 1")
    if not 0.0 < cfg.label.level < 1.0:
        raise ConfigError("[label] level must lie in (0, 1)")
    if not 0.0 <= cfg.hybrid.risk_threshold <= 1.0:
        raise ConfigError("[hybrid] risk_threshold must lie in [0, 1]")
    if len(cfg.fnn.hidden) != 3:
        raise ConfigError("[fnn] hidden must list exactly 3 layer widths")
    try:
        cfg.oracle_spec()
    except ValueError as exc:
        raise ConfigError(f"[oracle] {exc}") from None


def load_config(path, out_override=None) -> PipelineConfig:
    """Parse + validate a TOML pipeline config.

    ``out_override`` (the CLI's --out) replaces [run] out_dir without
    affecting the recorded config digest, which hashes the file bytes.
    """
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        doc = tomli.loads(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}") from None

    unknown_sections = sorted(set(doc) - set(_SCHEMA))
    if unknown_sections:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown_sections)}")

    sections = {}
    for name, keys in _SCHEMA.items():
        given = doc.get(name, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{name}] must be a table")
        unknown = sorted(set(given) - set(keys))
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
        values = {}
        for key, spec in keys.items():
            if key in given:
                values[key] = _coerce(name, key, spec, given[key])
            elif spec.default is _REQUIRED:
                raise ConfigError(f"missing required key [{name}] {key}")
            else:
                values[key] = spec.default
        sections[name] = SimpleNamespace(**values)

    cfg = PipelineConfig(
        **sections,
        config_sha256=hashlib.sha256(raw_bytes).hexdigest(),
    )
    cfg.out_dir = Path(out_override) if out_override else Path(cfg.run.out_dir)
    _validate(cfg)
    return cfg


# ---------------------------------------------------------------------------
# run directory plumbing: lockfile, manifest, formatting

class _RunLock:
    """Exclusive ownership of a run directory for one command."""

    def __init__(self, out_dir: Path):
        self.path = Path(out_dir) / ".lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise PipelineError(
                f"run directory is locked by another process ({self.path}); "
                f"delete the lockfile if that process is gone") from None
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header, rows) -> None:
    """CSV with exact float round-trip (repr formatting)."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path):
    """Inverse of write_table: (header, list of string-cell rows)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise PipelineError(f"{path}: empty table")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    return header, rows


def _table_column(path, name: str) -> np.ndarray:
    header, rows = read_table(path)
    if name not in header:
        raise PipelineError(f"{path}: missing column {name!r}")
    j = header.index(name)
    return np.asarray([float(r[j]) for r in rows])


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def _load_manifest(out_dir: Path) -> dict:
    p = Path(out_dir) / "manifest.json"
    if p.exists():
        return read_json(p)
    return {"version": __version__, "config_sha256": "", "stages": {}}


def _record_stage(out_dir: Path, cfg: PipelineConfig, stage: str,
                  files: dict, seconds: float) -> None:
    """files: relative name -> volatile flag."""
    manifest = _load_manifest(out_dir)
    manifest["version"] = __version__
    manifest["config_sha256"] = cfg.config_sha256
    manifest["stages"][stage] = {
        "seconds": round(seconds, 3),
        "artifacts": {
            name: {"sha256": _sha256(Path(out_dir) / name), "volatile": vol}
            for name, vol in sorted(files.items())
        },
    }
    write_json(Path(out_dir) / "manifest.json", manifest)


def manifest_digests(out_dir) -> dict:
    """Non-volatile artifact digests, for determinism comparisons."""
    manifest = _load_manifest(Path(out_dir))
    out = {}
    for stage in manifest["stages"].values():
        for name, entry in stage["artifacts"].items():
            if not entry["volatile"]:
                out[name] = entry["sha256"]
    return out


def _require(out_dir: Path, stage: str, names, produced_by: str):
    missing = [n for n in names if not (Path(out_dir) / n).exists()]
    if missing:
        raise PipelineError(
            f"stage '{stage}' needs {', '.join(missing)}; "
            f"run `surroguard {produced_by}` on this directory first")


# ---------------------------------------------------------------------------
# surrogate persistence shared by stages

def _save_surrogate(path, model) -> None:
    if isinstance(model, FnnModel):
        payload = model.to_dict()
        payload["kind"] = "fnn"
    elif isinstance(model, GpModel):
        payload = model.to_dict()
        payload["kind"] = "gp"
    else:
        raise TypeError(f"unknown surrogate type {type(model).__name__}")
    write_json(path, payload)


def load_surrogate(path):
    payload = read_json(path)
    kind = payload.get("kind")
    if kind == "fnn":
        return FnnModel.from_dict(payload)
    if kind == "gp":
        return GpModel.from_dict(payload)
    raise PipelineError(f"{path}: unknown surrogate kind {kind!r}")


# ---------------------------------------------------------------------------
# stages

def cmd_doe(cfg: PipelineConfig) -> dict:
    """Sample the design, evaluate the oracle, split train/val/test."""
    out = cfg.out_dir
    with _RunLock(out):
        t0 = time.perf_counter()
        space = cfg.design_space()
        oracle = make_oracle(cfg.oracle_spec(), space)

        train_box = space.sub_box(cfg.doe.train_lower_frac,
                                  cfg.doe.train_upper_frac)
        X_pool = lhs_sample(train_box, cfg.doe.n_train, cfg.doe.train_seed)
        y_pool = oracle_eval(oracle, X_pool)
        X_test = lhs_sample(space, cfg.doe.n_test, cfg.doe.test_seed)
        y_test = oracle_eval(oracle, X_test)

        n_val = max(1, int(round(cfg.doe.val_fraction * cfg.doe.n_train)))
        if n_val >= cfg.doe.n_train:
            raise ConfigError("[doe] val_fraction leaves no training data")
        perm = np.random.default_rng(cfg.doe.split_seed).permutation(cfg.doe.n_train)
        val_idx = np.sort(perm[:n_val])
        fit_idx = np.sort(perm[n_val:])

        save_csv(out / "train.csv", Dataset(X_pool[fit_idx], y_pool[fit_idx], space))
        save_csv(out / "val.csv", Dataset(X_pool[val_idx], y_pool[val_idx], space))
        save_csv(out / "test.csv", Dataset(X_test, y_test, space))
        files = {"train.csv": False, "val.csv": False, "test.csv": False}
        _record_stage(out, cfg, "doe", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


def _train_fnn(cfg: PipelineConfig, train_n: Dataset, out: Path) -> FnnModel:
    arch = FnnArchitecture(train_n.dim, tuple(cfg.fnn.hidden))
    config_grid = [
        TrainConfig(lr, wd, batch_size=cfg.fnn.batch_size, epochs=ep,
                    seed=cfg.fnn.seed)
        for lr in cfg.fnn.learning_rates
        for wd in cfg.fnn.weight_decays
        for ep in cfg.fnn.epochs
    ]
    result = grid_search_cv(train_n, [arch], config_grid,
                            k=cfg.fnn.cv_folds, seed=cfg.run.seed)
    header = ("cell", "fold", "hidden_widths", "learning_rate", "weight_decay",
              "batch_size", "epochs", "val_nrmse", "status")
    write_table(out / "cv_table.csv", header,
                [[row[h] for h in header] for row in result.table])
    final = fnn_train(train_n, result.best_arch, result.best_config)
    write_json(out / "train_summary.json", {
        "kind": "fnn",
        "cv_best_nrmse": result.best_score,
        "learning_rate": result.best_config.learning_rate,
        "weight_decay": result.best_config.weight_decay,
        "batch_size": result.best_config.batch_size,
        "epochs": result.best_config.epochs,
        "hidden": list(result.best_arch.hidden_widths),
        "best_epoch": final.best_epoch,
        "holdout_mse": final.best_val_mse,
    })
    return final.model


def _train_gp(cfg: PipelineConfig, train_n: Dataset, out: Path) -> GpModel:
    data = train_n
    if 0 < cfg.gp.subsample < len(train_n):
        keep = np.sort(np.random.default_rng(cfg.gp.seed).choice(
            len(train_n), cfg.gp.subsample, replace=False))
        data = train_n.subset(keep)
    model = gp_fit(data, GpFitConfig(restarts=cfg.gp.restarts,
                                     seed=cfg.gp.seed,
                                     max_iter=cfg.gp.max_iter))
    write_json(out / "train_summary.json", {
        "kind": "gp",
        "n_points": len(data),
        "lengthscale": model.kernel.lengthscale,
        "signal_variance": model.kernel.signal_variance,
        "noise_variance": model.kernel.noise_variance,
        "log_marginal_likelihood": model.provenance.get("lml"),
    })
    return model


def cmd_train(cfg: PipelineConfig) -> dict:
    """Fit (and for the FNN, grid-search) the surrogate on train.csv."""
    out = cfg.out_dir
    _require(out, "train", ["train.csv"], "doe")
    with _RunLock(out):
        t0 = time.perf_counter()
        train = load_csv(out / "train.csv")
        stats = NormalizationStats.fit(train)
        write_json(out / "norm_stats.json", stats.to_dict())
        train_n = Dataset(stats.apply(train.X), train.y)

        if cfg.surrogate.kind == "fnn":
            model = _train_fnn(cfg, train_n, out)
            files = {"surrogate.json": False, "norm_stats.json": False,
                     "train_summary.json": False, "cv_table.csv": False}
        else:
            model = _train_gp(cfg, train_n, out)
            files = {"surrogate.json": False, "norm_stats.json": False,
                     "train_summary.json": False}
        _save_surrogate(out / "surrogate.json", model)
        _record_stage(out, cfg, "train", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


def _profile_split(model, stats, dataset: Dataset, spec: PerturbationSpec):
    """Profiles + predictions + absolute errors for one dataset split."""
    Xn = stats.apply(dataset.X)
    profiles = profile_batch(model, Xn, spec)
    feats = profile_matrix(profiles)
    pred = np.atleast_1d(model.predict_values(Xn))
    err = np.abs(pred - dataset.y)
    rows = [
        [feats[i, 0], feats[i, 1], feats[i, 2], feats[i, 3],
         pred[i], dataset.y[i], err[i]]
        for i in range(len(dataset))
    ]
    return rows


def cmd_profile(cfg: PipelineConfig) -> dict:
    """Sensitivity profiles + surrogate errors for val and test splits."""
    out = cfg.out_dir
    _require(out, "profile", ["surrogate.json", "norm_stats.json",
                              "val.csv", "test.csv"], "train")
    with _RunLock(out):
        t0 = time.perf_counter()
        model = load_surrogate(out / "surrogate.json")
        stats = NormalizationStats.from_dict(read_json(out / "norm_stats.json"))
        spec = cfg.perturbation_spec()
        for split in ("val", "test"):
            dataset = load_csv(out / f"{split}.csv")
            rows = _profile_split(model, stats, dataset, spec)
            write_table(out / f"profiles_{split}.csv", PROFILE_COLUMNS, rows)
        files = {"profiles_val.csv": False, "profiles_test.csv": False}
        _record_stage(out, cfg, "profile", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


def cmd_label(cfg: PipelineConfig) -> dict:
    """Bootstrap error margin from validation errors; label val + test."""
    out = cfg.out_dir
    _require(out, "label", ["profiles_val.csv", "profiles_test.csv"], "profile")
    with _RunLock(out):
        t0 = time.perf_counter()
        val_err = _table_column(out / "profiles_val.csv", "abs_error")
        ci = bootstrap_ci(val_err, level=cfg.label.level,
                          n_boot=cfg.label.n_boot, seed=cfg.label.seed)
        labels = label_ood(val_err, ci)
        write_json(out / "ci.json", {
            "lower": ci.lower, "upper": ci.upper, "level": ci.level,
            "n_boot": ci.n_boot, "method": ci.method,
            "n_validation": int(val_err.size),
            "n_ood_validation": labels.n_ood,
            "ood_ratio_validation": labels.ratio,
        })
        for split in ("val", "test"):
            header, rows = read_table(out / f"profiles_{split}.csv")
            err = _table_column(out / f"profiles_{split}.csv", "abs_error")
            flags = label_ood(err, ci).is_ood
            out_rows = [row + [int(flags[i])] for i, row in enumerate(rows)]
            write_table(out / f"labeled_{split}.csv",
                        list(header) + ["is_ood"], out_rows)
        files = {"ci.json": False, "labeled_val.csv": False,
                 "labeled_test.csv": False}
        _record_stage(out, cfg, "label", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


def _labeled_features(path):
    header, rows = read_table(path)
    feats = np.asarray([[float(r[header.index(c)]) for c in ("sa", "sv", "ja", "jv")]
                        for r in rows])
    labels = np.asarray([r[header.index("is_ood")] == "1" for r in rows])
    return feats, labels


def cmd_detector(cfg: PipelineConfig) -> dict:
    """Tune + train the boosted detector; calibrate the neighbor baseline."""
    out = cfg.out_dir
    _require(out, "detector", ["labeled_val.csv", "labeled_test.csv",
                               "train.csv", "norm_stats.json"], "label")
    with _RunLock(out):
        t0 = time.perf_counter()
        feats, labels = _labeled_features(out / "labeled_val.csv")
        os_grid = tuple(
            OversampleConfig(method=m, k_neighbors=k, ratio=r,
                             seed=cfg.detector.seed)
            for m in cfg.detector.methods
            for k in cfg.detector.k_neighbors
            for r in cfg.detector.ratios
        )
        gb_grid = tuple(
            GbdtConfig(learning_rate=lr, n_estimators=n,
                       max_depth=cfg.detector.max_depth,
                       min_samples_leaf=cfg.detector.min_samples_leaf,
                       seed=cfg.detector.seed)
            for lr in cfg.detector.learning_rates
            for n in cfg.detector.n_estimators
        )
        tune = detector_cv_tune(feats, labels, os_grid, gb_grid,
                                k=cfg.detector.cv_folds, seed=cfg.detector.seed)
        header = ("cell", "fold", "method", "k_neighbors", "ratio",
                  "learning_rate", "n_estimators", "val_aupr", "status")
        write_table(out / "detector_cv.csv", header,
                    [[row[h] for h in header] for row in tune.table])

        X_aug, y_aug, n_synth = oversample(feats, labels, tune.best_oversample)
        model = gbdt_train(X_aug, y_aug, tune.best_gbdt,
                           feature_names=("sa", "sv", "ja", "jv"))
        model.provenance.update({
            "oversample_method": tune.best_oversample.method,
            "oversample_k": tune.best_oversample.k_neighbors,
            "oversample_ratio": tune.best_oversample.ratio,
            "n_synthetic": n_synth,
            "cv_val_aupr": tune.best_score,
        })
        write_json(out / "detector.json", model.to_dict())

        files = {"detector.json": False, "detector_cv.csv": False}
        for split in ("val", "test"):
            f, lab = _labeled_features(out / f"labeled_{split}.csv")
            scores = model.predict_proba(f)
            if lab.any() and not lab.all():
                curve = pr_curve(scores, lab)
                write_table(out / f"pr_{split}.csv",
                            ("threshold", "precision", "recall"),
                            list(zip(curve.thresholds, curve.precision,
                                     curve.recall)))
                files[f"pr_{split}.csv"] = False
                area = aupr(curve)
            else:
                area = float("nan")
            report = classification_report(scores, lab).to_dict()
            report["aupr"] = area
            write_json(out / f"detector_report_{split}.json", report)
            files[f"detector_report_{split}.json"] = False

        _baseline_stage(cfg, out, files)
        _record_stage(out, cfg, "detector", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


def _baseline_stage(cfg: PipelineConfig, out: Path, files: dict) -> None:
    """Neighbor-sigma reference detector, tuned and scored like the GBDT."""
    stats = NormalizationStats.from_dict(read_json(out / "norm_stats.json"))
    train = load_csv(out / "train.csv")
    ref_X = stats.apply(train.X)
    ref_y = train.y

    val = load_csv(out / "val.csv")
    val_pred = _table_column(out / "labeled_val.csv", "pred")
    best_n, table = baseline_mod.baseline_tune_neighbors(
        stats.apply(val.X), val_pred, val.y,
        grid=tuple(cfg.baseline.neighbor_grid), seed=cfg.baseline.seed)
    sigma_val = baseline_mod.neighbor_sigma(stats.apply(val.X), val_pred,
                                            ref_X, ref_y, best_n)
    sigma_t = baseline_mod.calibrate_sigma_t(sigma_val, cfg.baseline.percentile)

    test = load_csv(out / "test.csv")
    test_pred = _table_column(out / "labeled_test.csv", "pred")
    _, test_labels = _labeled_features(out / "labeled_test.csv")
    sigma_test = baseline_mod.neighbor_sigma(stats.apply(test.X), test_pred,
                                             ref_X, ref_y, best_n)
    report = classification_report(sigma_test, test_labels,
                                   threshold=sigma_t).to_dict()
    write_json(out / "baseline.json", {
        "n_neighbors": best_n,
        "sigma_t": sigma_t,
        "percentile": cfg.baseline.percentile,
        "tuning": list(table),
        "test_report": report,
    })
    files["baseline.json"] = False


def cmd_hybrid(cfg: PipelineConfig) -> dict:
    """Route the test set through the detector-guarded surrogate."""
    out = cfg.out_dir
    _require(out, "hybrid", ["surrogate.json", "norm_stats.json",
                             "detector.json", "test.csv",
                             "labeled_test.csv"], "detector")
    with _RunLock(out):
        t0 = time.perf_counter()
        model = load_surrogate(out / "surrogate.json")
        stats = NormalizationStats.from_dict(read_json(out / "norm_stats.json"))
        detector = DetectorModel.from_dict(read_json(out / "detector.json"))
        test = load_csv(out / "test.csv")
        _, ood_labels = _labeled_features(out / "labeled_test.csv")
        space = cfg.design_space()
        oracle = make_oracle(cfg.oracle_spec(), space)
        router = RouterConfig(detector=detector,
                              perturbation=cfg.perturbation_spec(),
                              risk_threshold=cfg.hybrid.risk_threshold)
        rep = evaluate_hybrid(test, model, oracle, router, stats,
                              ood_labels=ood_labels)

        payload = rep.to_dict()
        payload["risk_threshold"] = cfg.hybrid.risk_threshold
        write_json(out / "hybrid_report.json", payload)
        err_s = np.abs(rep.y_surrogate - test.y)
        err_h = np.abs(rep.y_hybrid - test.y)
        write_table(out / "hybrid_trace.csv",
                    ("id", "risk", "route", "abs_err_surrogate", "abs_err_hybrid"),
                    [[i, rep.risk[i], "hf" if rep.routed_hf[i] else "surrogate",
                      err_s[i], err_h[i]] for i in range(len(test))])
        write_json(out / "timings.json", {
            "t_oracle": rep.timing.t_oracle,
            "t_surrogate": rep.timing.t_surrogate,
            "t_detector": rep.timing.t_detector,
            "p": rep.timing.p,
            "speedup_pure": rep.speedup_pure,
            "speedup_hybrid": rep.speedup_hybrid,
        })
        files = {"hybrid_report.json": False, "hybrid_trace.csv": False,
                 "timings.json": True}
        _record_stage(out, cfg, "hybrid", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


# ---------------------------------------------------------------------------
# report helpers

def pca_2d(features: np.ndarray):
    """Top-2 PCA of standardized features via covariance eigendecomposition.

    Returns ``(coords, loadings, explained_variance_ratio)``.  Component
    signs are normalized (largest-magnitude loading positive) so output is
    stable. Constant columns are left centered-only.
    """
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 2:
        raise ValueError("PCA needs a (n >= 2, d) feature matrix")
    mean = F.mean(axis=0)
    std = F.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    Z = (F - mean) / std
    cov = (Z.T @ Z) / Z.shape[0]
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval)[::-1]
    eigval = np.maximum(eigval[order], 0.0)
    eigvec = eigvec[:, order]
    k = min(2, F.shape[1])
    loadings = eigvec[:, :k]
    for j in range(k):
        lead = np.argmax(np.abs(loadings[:, j]))
        if loadings[lead, j] < 0:
            loadings[:, j] = -loadings[:, j]
    coords = Z @ loadings
    total = float(eigval.sum())
    evr = (eigval[:k] / total) if total > 0 else np.zeros(k)
    return coords, loadings, evr


def _box_stats(values: np.ndarray) -> dict:
    q1, med, q3 = (float(v) for v in np.percentile(values, [25, 50, 75]))
    return {"min": float(values.min()), "q1": q1, "median": med, "q3": q3,
            "max": float(values.max()), "n": int(values.size)}


def cmd_report(cfg: PipelineConfig) -> dict:
    """Consolidate run artifacts into report.json + PCA coordinates CSV."""
    out = cfg.out_dir
    _require(out, "report", ["labeled_val.csv", "labeled_test.csv", "ci.json",
                             "detector_report_test.json", "baseline.json",
                             "hybrid_report.json"], "hybrid")
    with _RunLock(out):
        t0 = time.perf_counter()
        report = {
            "surrogate_kind": cfg.surrogate.kind,
            "oracle_kind": cfg.oracle.kind,
            "config_sha256": cfg.config_sha256,
            "margin": read_json(out / "ci.json"),
            "detector": {
                "val": read_json(out / "detector_report_val.json"),
                "test": read_json(out / "detector_report_test.json"),
            },
            "baseline": read_json(out / "baseline.json"),
            "hybrid": read_json(out / "hybrid_report.json"),
        }

        # 2-component projection of every profile, for external plotting
        rows_out = []
        stacks = []
        for split in ("val", "test"):
            f, lab = _labeled_features(out / f"labeled_{split}.csv")
            stacks.append((split, f, lab))
        all_feats = np.vstack([f for _, f, _ in stacks])
        coords, loadings, evr = pca_2d(all_feats)
        i = 0
        for split, f, lab in stacks:
            for j in range(f.shape[0]):
                rows_out.append([split, j, coords[i, 0], coords[i, 1],
                                 int(lab[j])])
                i += 1
        write_table(out / "pca_profiles.csv",
                    ("split", "id", "pc1", "pc2", "is_ood"), rows_out)
        report["pca"] = {
            "explained_variance_ratio": [float(v) for v in evr],
            "loadings": {
                feat: [float(loadings[r, c]) for c in range(loadings.shape[1])]
                for r, feat in enumerate(("sa", "sv", "ja", "jv"))
            },
        }

        # predictive-uncertainty split (GP surrogate only): spread of the
        # posterior std for ID vs OOD test points
        if cfg.surrogate.kind == "gp":
            model = load_surrogate(out / "surrogate.json")
            stats = NormalizationStats.from_dict(read_json(out / "norm_stats.json"))
            test = load_csv(out / "test.csv")
            _, test_labels = _labeled_features(out / "labeled_test.csv")
            res = gp_predict(model, stats.apply(test.X))
            report["gp_sigma"] = {
                "id": _box_stats(res.std[~test_labels]),
                "ood": _box_stats(res.std[test_labels]),
            }

        write_json(out / "report.json", report)
        files = {"report.json": False, "pca_profiles.csv": False}
        _record_stage(out, cfg, "report", files, time.perf_counter() - t0)
    return {name: out / name for name in files}


COMMANDS = {
    "doe": cmd_doe,
    "train": cmd_train,
    "profile": cmd_profile,
    "label": cmd_label,
    "detector": cmd_detector,
    "hybrid": cmd_hybrid,
    "report": cmd_report,
}


def run_all(cfg: PipelineConfig) -> None:
    for name in STAGES:
        COMMANDS[name](cfg)
