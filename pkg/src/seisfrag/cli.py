"""Command-line pipeline: generate, identify, labels, learn, fragility, report.

Every stochastic step draws from a stream named by (seed, purpose, index), so
any command rerun with the same configuration is bit-identical. Commands are
idempotent given their completed checkpoints.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import preprocess as prep
from .ensemble import reference_ensemble, write_ensemble_csv
from .features import FEATURE_NAMES, extract
from .fragility import curve, fit_logistic, hybrid_probability, labeled_only_diagnostic
from .ground_motion import (
    highpass_correct,
    read_signal_binary,
    read_signal_csv,
    synthesize,
    write_signal_binary,
)
from .identification import IdentificationConfig, TargetRecord, identify, write_params_csv
from .kde import kristan_bandwidth, sample_theta, save_model_csv as save_kde_csv
from .learning import Kernel, Pool, active_learn, simple_classifier_prbp, train_svm
from .oscillator import PRESETS, solve_linear, solve_nonlinear
from .rng import stream

LEARN_SCHEDULE = (10, 20, 50, 100, 200, 500, 1000)
FRAGILITY_SCHEDULE = (20, 50, 100, 200, 500, 1000)
PRODUCTION_MIN_POOL = 500


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    pool_size: int = 5000
    preset: str = "5"  # 2.5 | 5 | 10 Hz structure
    kernel: str = "linear"  # linear | rbf
    gamma: float = 0.0  # rbf width; 0 means 1/dim
    cost: float = 10.0
    feature_set: str = "r4"  # r4 | r13
    budget: int = 1000
    n_runs: int = 20
    n_bins: int = 20
    batch_size: int = 500
    out_dir: str = "runs/demo"

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {sorted(PRESETS)}, got {self.preset!r}")
        if self.kernel not in ("linear", "rbf"):
            raise ValueError(f"kernel must be linear or rbf, got {self.kernel!r}")
        if self.feature_set not in ("r4", "r13"):
            raise ValueError(f"feature_set must be r4 or r13, got {self.feature_set!r}")
        if self.pool_size < 1 or self.budget < 2 or self.n_runs < 1:
            raise ValueError("pool_size, budget and n_runs must be positive")
        if self.pool_size < PRODUCTION_MIN_POOL:
            warnings.warn(
                f"pool_size {self.pool_size} is below the production floor "
                f"{PRODUCTION_MIN_POOL}; fine for smoke tests only",
                stacklevel=2,
            )

    @property
    def structure(self):
        return PRESETS[self.preset]

    def make_kernel(self) -> Kernel:
        if self.kernel == "linear":
            return Kernel("linear")
        dim = 4 if self.feature_set == "r4" else 13
        return Kernel("rbf", gamma=self.gamma if self.gamma > 0 else 1.0 / dim)

    @property
    def tag(self) -> str:
        return f"{self.kernel}_{self.feature_set}"


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Flat key=value file; every key can be overridden by a flag."""
    values: dict = {}
    if path:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    values.update({k: v for k, v in overrides.items() if v is not None})
    kwargs = {}
    for f in fields(RunConfig):
        if f.name in values:
            kwargs[f.name] = _convert(f.type, values.pop(f.name))
    if values:
        raise ValueError(f"unknown config keys: {sorted(values)}")
    return RunConfig(**kwargs)


def _convert(type_name, raw):
    if isinstance(raw, (int, float)):
        return raw
    if type_name in ("int", int):
        return int(raw)
    if type_name in ("float", float):
        return float(raw)
    return str(raw)


def save_config(cfg: RunConfig, path: Path) -> None:
    lines = [f"{f.name}={getattr(cfg, f.name)}" for f in fields(RunConfig)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# generate: ensemble -> KDE -> signals -> features
# ---------------------------------------------------------------------------


def _signal_path(out: Path, index: int) -> Path:
    return out / "signals" / f"sig_{index:05d}.bin"


def _features_path(cfg: RunConfig, out: Path) -> Path:
    return out / f"features_{cfg.preset}.csv"


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def cmd_generate(cfg: RunConfig) -> Path:
    """Sample parameters, synthesize the pool, extract features.

    Work proceeds in batches; a finished batch leaves a part file, so an
    interrupted run resumes where it stopped and reproduces identical output.
    """
    out = Path(cfg.out_dir)
    (out / "signals").mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.txt")
    ensemble = reference_ensemble()
    write_ensemble_csv(out / "ensemble.csv", ensemble)
    kde_model = kristan_bandwidth(ensemble)
    save_kde_csv(out / "kde_model.csv", kde_model)
    structure = cfg.structure

    n_batches = (cfg.pool_size + cfg.batch_size - 1) // cfg.batch_size
    part_paths = []
    for b in range(n_batches):
        part = out / f"features_{cfg.preset}_part{b:04d}.csv"
        part_paths.append(part)
        if part.exists():
            continue
        lo = b * cfg.batch_size
        hi = min(lo + cfg.batch_size, cfg.pool_size)
        rows = []
        for i in range(lo, hi):
            params = sample_theta(kde_model, stream(cfg.seed, "theta", i))
            sig_path = _signal_path(out, i)
            if sig_path.exists():
                sig = read_signal_binary(sig_path)
            else:
                raw = synthesize(params, dt=0.01, rng=stream(cfg.seed, "signal", i))
                sig = highpass_correct(raw)
                write_signal_binary(sig_path, sig)
            lin_disp = float(np.max(np.abs(solve_linear(sig, structure).samples)))
            vec = extract(sig, params.as_vector(), lin_disp).as_array()
            rows.append((i, vec))
        text = "".join(
            f"{i}," + ",".join(f"{v:.17g}" for v in vec) + "\n" for i, vec in rows
        )
        _atomic_write_text(part, text)

    header = "id," + ",".join(FEATURE_NAMES) + "\n"
    body = "".join(p.read_text(encoding="utf-8") for p in part_paths)
    _atomic_write_text(_features_path(cfg, out), header + body)
    return _features_path(cfg, out)


def read_features_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """(ids, feature matrix) from a features CSV."""
    ids, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["id"] + list(FEATURE_NAMES):
            raise ValueError(f"{path}: unexpected feature columns")
        for row in reader:
            ids.append(int(row[0]))
            rows.append([float(v) for v in row[1:]])
    return np.asarray(ids), np.asarray(rows)


# ---------------------------------------------------------------------------
# labels: the expensive Monte Carlo reference over the kept pool
# ---------------------------------------------------------------------------


def _labels_path(cfg: RunConfig, out: Path) -> Path:
    return out / f"labels_{cfg.preset}.csv"


def cmd_labels(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    ids, raw = read_features_csv(_features_path(cfg, out))
    structure = cfg.structure
    kept = prep.filter_pool(raw[:, 12], structure.yield_y)
    lines = ["id,pga,pgv,pgd,energy,lin_disp,max_nonlinear,label\n"]
    for i in kept:
        sig = read_signal_binary(_signal_path(out, int(ids[i])))
        z = float(np.max(np.abs(solve_nonlinear(sig, structure).samples)))
        label = 1 if z > structure.threshold else -1
        pga, pgv, pgd, energy, lin_disp = raw[i, 8:13]
        lines.append(
            f"{ids[i]},{pga:.17g},{pgv:.17g},{pgd:.17g},{energy:.17g},"
            f"{lin_disp:.17g},{z:.17g},{label}\n"
        )
    path = _labels_path(cfg, out)
    _atomic_write_text(path, "".join(lines))
    return path


def read_labels_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(kept ids, Z values, labels) from a labels CSV."""
    ids, zs, labels = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ids.append(int(row[0]))
            zs.append(float(row[6]))
            labels.append(int(row[7]))
    return np.asarray(ids), np.asarray(zs), np.asarray(labels)


# ---------------------------------------------------------------------------
# learn: replicated active-learning runs against the labeled reference
# ---------------------------------------------------------------------------


def _build_pool(cfg: RunConfig, out: Path):
    ids, raw = read_features_csv(_features_path(cfg, out))
    kept_ids, _, labels = read_labels_csv(_labels_path(cfg, out))
    id_to_row = {int(v): k for k, v in enumerate(ids)}
    kept_rows = np.array([id_to_row[int(v)] for v in kept_ids])
    raw_kept = raw[kept_rows]
    structure = cfg.structure
    model = prep.fit(raw_kept, (structure.yield_y, 6 * structure.yield_y))
    transformed = prep.apply(model, raw_kept, view=cfg.feature_set if cfg.feature_set == "r4" else "r13")
    pool = Pool(
        features=transformed,
        raw_pga=raw_kept[:, 8],
        raw_lin_disp=raw_kept[:, 12],
        label_oracle=lambda i: int(labels[i]),
    )
    return pool, labels, kept_ids, raw_kept, model


def _learn_dir(cfg: RunConfig, out: Path) -> Path:
    return out / f"learn_{cfg.preset}_{cfg.tag}"


def _write_model_csv(path: Path, state, kept_ids, kernel: Kernel, cost: float) -> None:
    lines = [
        f"# kernel={kernel.kind}\n",
        f"# gamma={kernel.gamma if kernel.gamma else ''}\n",
        f"# cost={cost:.17g}\n",
        f"# bias={state.model.bias:.17g}\n",
        "order,pool_index,signal_id,label,coefficient\n",
    ]
    for pos, (idx, lab) in enumerate(zip(state.labeled_indices, state.labels)):
        coef = state.model.coefficients[pos]
        lines.append(f"{pos},{idx},{int(kept_ids[idx])},{lab},{coef:.17g}\n")
    _atomic_write_text(path, "".join(lines))


def read_model_csv(path) -> tuple[list[int], list[int]]:
    """(labeled pool indices in query order, labels) from a model CSV."""
    indices, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("order,"):
                continue
            parts = line.strip().split(",")
            indices.append(int(parts[1]))
            labels.append(int(parts[3]))
    return indices, labels


def cmd_learn(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    pool_template, labels, kept_ids, raw_kept, prep_model = _build_pool(cfg, out)
    kernel = cfg.make_kernel()
    learn_dir = _learn_dir(cfg, out)
    learn_dir.mkdir(parents=True, exist_ok=True)
    schedule = tuple(n for n in LEARN_SCHEDULE if n <= cfg.budget)

    prep.save_model_csv(out / f"preprocess_{cfg.preset}.csv", prep_model)
    transformed_lines = [
        "id," + ",".join(f"x_{j}" for j in range(pool_template.features.shape[1])) + "\n"
    ]
    for kid, row in zip(kept_ids, pool_template.features):
        transformed_lines.append(
            f"{int(kid)}," + ",".join(f"{v:.17g}" for v in row) + "\n"
        )
    _atomic_write_text(
        out / f"transformed_{cfg.preset}_{cfg.feature_set}.csv", "".join(transformed_lines)
    )

    per_run_prbp = {n: [] for n in schedule}
    for run in range(cfg.n_runs):
        pool = Pool(
            features=pool_template.features,
            raw_pga=pool_template.raw_pga,
            raw_lin_disp=pool_template.raw_lin_disp,
            label_oracle=lambda i: int(labels[i]),
        )
        state = active_learn(
            pool,
            kernel,
            budget=min(cfg.budget, len(pool)),
            rng=stream(cfg.seed, "learn", run),
            cost=cfg.cost,
            eval_at=schedule,
            eval_labels=labels,
        )
        dim = pool.features.shape[1]
        lines = ["n,queried_id,label,prbp" + "".join(f",w_{j}" for j in range(dim)) + "\n"]
        for k, entry in enumerate(state.history):
            w = state.weight_trace[k] if state.weight_trace else [float("nan")] * dim
            prbp_txt = f"{entry.prbp:.17g}" if entry.prbp is not None else ""
            lines.append(
                f"{entry.n_labeled},{int(kept_ids[entry.queried])},{entry.label},{prbp_txt}"
                + "".join(f",{v:.17g}" for v in w)
                + "\n"
            )
            if entry.prbp is not None:
                per_run_prbp[entry.n_labeled].append(entry.prbp)
        _atomic_write_text(learn_dir / f"history_run{run:02d}.csv", "".join(lines))
        _write_model_csv(learn_dir / f"model_run{run:02d}.csv", state, kept_ids, kernel, cfg.cost)

    summary = ["n,prbp_mean,prbp_min,prbp_max\n"]
    for n in schedule:
        vals = per_run_prbp[n]
        if vals:
            summary.append(f"{n},{np.mean(vals):.17g},{np.min(vals):.17g},{np.max(vals):.17g}\n")
    _atomic_write_text(learn_dir / "summary.csv", "".join(summary))
    baselines = [
        "classifier,prbp\n",
        f"pga,{simple_classifier_prbp(raw_kept[:, 8], labels):.17g}\n",
        f"lin_disp,{simple_classifier_prbp(raw_kept[:, 12], labels):.17g}\n",
    ]
    _atomic_write_text(learn_dir / "baselines.csv", "".join(baselines))
    return learn_dir


# ---------------------------------------------------------------------------
# fragility: curves and diagnostics from the stored labeled sequences
# ---------------------------------------------------------------------------


def _fragility_dir(cfg: RunConfig, out: Path) -> Path:
    return out / f"fragility_{cfg.preset}_{cfg.tag}"


def _curves_for_probs(labels, probs, projections: dict, n_bins: int) -> dict:
    return {
        name: curve(labels, probs, values, n_bins, name) for name, values in projections.items()
    }


def cmd_fragility(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    pool, labels, kept_ids, raw_kept, _ = _build_pool(cfg, out)
    kernel = cfg.make_kernel()
    learn_dir = _learn_dir(cfg, out)
    frag_dir = _fragility_dir(cfg, out)
    frag_dir.mkdir(parents=True, exist_ok=True)
    schedule = tuple(n for n in FRAGILITY_SCHEDULE if n <= cfg.budget)
    linear_kernel = Kernel("linear")

    report: list[str] = [
        f"pool.kept={len(pool)}",
        f"pool.positive_rate={np.mean(labels == 1):.6g}",
    ]
    curve_lines = ["run,n,projection,center,count,p_ref,p_est\n"]
    for run in range(cfg.n_runs):
        model_path = learn_dir / f"model_run{run:02d}.csv"
        indices, seq_labels = read_model_csv(model_path)
        for n in schedule:
            sub_idx = indices[:n]
            sub_lab = seq_labels[:n]
            if len(set(sub_lab)) < 2:
                continue
            model = train_svm(pool.features[sub_idx], sub_lab, kernel, cfg.cost, refs=np.array(sub_idx))
            scores = model.score(pool.features)
            cal = fit_logistic(scores[sub_idx], sub_lab)
            probs = cal.probability(scores)
            projections = {"score": scores, "pga": pool.raw_pga, "lin_disp": pool.raw_lin_disp}
            curves = _curves_for_probs(labels, probs, projections, cfg.n_bins)

            if kernel.kind == "rbf":
                lin_model = train_svm(pool.features[sub_idx], sub_lab, linear_kernel, cfg.cost)
                lin_scores = lin_model.score(pool.features)
                lin_cal = fit_logistic(lin_scores[sub_idx], sub_lab)
                hybrid = hybrid_probability(lin_cal.probability(lin_scores), probs)
                curves["hybrid"] = curve(labels, hybrid, scores, cfg.n_bins, "hybrid")

            for name, cv in curves.items():
                report.append(f"run{run:02d}.n{n}.{name}.delta_l2={cv.delta_l2:.6g}")
                report.append(f"run{run:02d}.n{n}.{name}.entropy={cv.entropy:.6g}")
                report.append(
                    f"run{run:02d}.n{n}.{name}.uncertain_fraction={cv.uncertain_fraction:.6g}"
                )
                for b in cv.bins:
                    curve_lines.append(
                        f"{run},{n},{name},{b.center:.17g},{b.count},{b.p_ref:.17g},{b.p_est:.17g}\n"
                    )

        # labeled-set-only anti-pattern, reported with a warning banner
        final_idx, final_lab = indices[: cfg.budget], seq_labels[: cfg.budget]
        diag = labeled_only_diagnostic(pool.raw_pga[final_idx], final_lab, cfg.n_bins)
        mean_bin_p = float(np.mean([b.p_ref for b in diag.bins]))
        report.append(f"run{run:02d}.labeled_only.mean_bin_probability={mean_bin_p:.6g}")
        report.append(
            f"run{run:02d}.labeled_only.warning=labeled-set-only curve is biased by "
            "active sampling; do not use as a fragility estimate"
        )

    # binning sensitivity at the final budget, averaged over runs
    for k_bins in (10, 20, 40):
        deltas = []
        for run in range(cfg.n_runs):
            indices, seq_labels = read_model_csv(learn_dir / f"model_run{run:02d}.csv")
            model = train_svm(
                pool.features[indices], seq_labels, kernel, cfg.cost, refs=np.array(indices)
            )
            scores = model.score(pool.features)
            cal = fit_logistic(scores[indices], seq_labels)
            cv = curve(labels, cal.probability(scores), scores, k_bins, "score")
            deltas.append(cv.delta_l2)
        report.append(f"sensitivity.k{k_bins}.score.delta_l2_mean={np.mean(deltas):.6g}")

    _atomic_write_text(frag_dir / "curves.csv", "".join(curve_lines))
    _atomic_write_text(frag_dir / "report.txt", "\n".join(report) + "\n")
    return frag_dir


# ---------------------------------------------------------------------------
# identify: user-supplied records -> parameter CSV
# ---------------------------------------------------------------------------


def cmd_identify(cfg: RunConfig, record_paths: list[str]) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for path in record_paths:
        sig = read_signal_csv(path) if str(path).endswith(".csv") else read_signal_binary(path)
        record = TargetRecord.from_signal(sig)
        fit = identify(record, IdentificationConfig(seed=cfg.seed))
        results.append(fit.params)
    dest = out / "identified_params.csv"
    write_params_csv(dest, results)
    return dest


# ---------------------------------------------------------------------------
# report: aggregate learn + fragility artifacts
# ---------------------------------------------------------------------------


def cmd_report(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    learn_dir = _learn_dir(cfg, out)
    frag_dir = _fragility_dir(cfg, out)
    lines = [f"config.{f.name}={getattr(cfg, f.name)}" for f in fields(RunConfig)]
    for name, path in (
        ("learn.summary", learn_dir / "summary.csv"),
        ("learn.baselines", learn_dir / "baselines.csv"),
    ):
        if path.exists():
            for row in path.read_text(encoding="utf-8").strip().splitlines()[1:]:
                lines.append(f"{name}.{row}")
    frag_report = frag_dir / "report.txt"
    if frag_report.exists():
        lines.extend(frag_report.read_text(encoding="utf-8").strip().splitlines())
    dest = out / "report.txt"
    _atomic_write_text(dest, "\n".join(lines) + "\n")
    return dest


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    for f in fields(RunConfig):
        parser.add_argument(f"--{f.name}", dest=f.name, default=None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seisfrag",
        description="Seismic fragility curves by active learning on SVM classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "labels", "learn", "fragility", "report"):
        p = sub.add_parser(name)
        _add_config_flags(p)
    p_id = sub.add_parser("identify")
    _add_config_flags(p_id)
    p_id.add_argument("records", nargs="+", help="signal files (CSV or binary)")

    args = parser.parse_args(argv)
    overrides = {
        f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name) is not None
    }
    cfg = load_config(args.config, overrides)

    if args.command == "generate":
        print(cmd_generate(cfg))
    elif args.command == "labels":
        print(cmd_labels(cfg))
    elif args.command == "learn":
        print(cmd_learn(cfg))
    elif args.command == "fragility":
        print(cmd_fragility(cfg))
    elif args.command == "identify":
        print(cmd_identify(cfg, args.records))
    elif args.command == "report":
        print(cmd_report(cfg))
    return 0


if __name__ == "__main__":
    sys.exit(main())
