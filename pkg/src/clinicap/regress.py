"""Regression models, metrics and the model-comparison harness.

All tree learners are exact CART-style variance-reduction regressors built
here so that fitting is bit-deterministic: split ties break to the lowest
feature index, then the lowest threshold; forests derive one RNG per tree
from the master seed up front, so results do not depend on worker count.
Gradient boosting is plain stage-wise squared-loss boosting (mean init, each
round fits a tree to residuals, prediction = init + lr * sum of stages);
second-order / regularized variants are out of scope.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ClinicapError, SchemaMismatchError, SchemaVersionError
from .features import FeatureSchema, TrainingMatrix

MODEL_FORMAT_VERSION = 1


class ModelKind(str, Enum):
    LINEAR = "linear"
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"
    GBT = "gbt"


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ClinicapError("max_depth must be >= 1")
        if self.min_samples_split < 1 or self.min_samples_leaf < 1:
            raise ClinicapError("min_samples_* must be >= 1")


@dataclass
class Tree:
    """Flat node arrays; feature == -1 marks a leaf."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    n_samples: list[int] = field(default_factory=list)
    gain: list[float] = field(default_factory=list)   # absolute SSE reduction of the split

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.n_samples.append(0)
        self.gain.append(0.0)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        value = np.asarray(self.value)
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.flatnonzero(active)
            f = feat[rows]
            go_left = X[rows, f] <= threshold[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
        return value[node]

    def to_payload(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
            "n_samples": self.n_samples,
            "gain": self.gain,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Tree":
        return cls(**payload)


def _best_split(X, y, idx, features, min_samples_leaf):
    """Exact best (feature, threshold, reduction) over the candidate features.

    Features are scanned in ascending index order and only strictly better
    reductions are accepted, so ties resolve to the lowest feature index; the
    position argmax picks the lowest threshold within a feature.
    """
    n = idx.size
    sub_y = y[idx]
    total1 = sub_y.sum()
    total2 = float(sub_y @ sub_y)
    sse_parent = total2 - total1 * total1 / n
    msl = min_samples_leaf
    if n < 2 * msl:
        return None

    best = None
    pos = np.arange(msl - 1, n - msl)
    for f in features:
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        if sv[0] == sv[-1]:
            continue
        sy = sub_y[order]
        c1 = np.cumsum(sy)
        c2 = np.cumsum(sy * sy)
        valid = sv[pos] < sv[pos + 1]
        if not valid.any():
            continue
        nl = pos + 1.0
        nr = n - nl
        sse_l = c2[pos] - c1[pos] * c1[pos] / nl
        sse_r = (total2 - c2[pos]) - (total1 - c1[pos]) ** 2 / nr
        red = np.where(valid, sse_parent - sse_l - sse_r, -np.inf)
        j = int(np.argmax(red))
        if red[j] > 0 and (best is None or red[j] > best[2]):
            thr = float((sv[pos[j]] + sv[pos[j] + 1]) / 2.0)
            best = (int(f), thr, float(red[j]))
    return best


def _grow_tree(X, y, params: TreeParams, max_features: int | None,
               rng: np.random.Generator | None) -> Tree:
    tree = Tree()
    n_feats = X.shape[1]

    def build(idx: np.ndarray, depth: int) -> int:
        node = tree.add_node()
        sub_y = y[idx]
        tree.value[node] = float(sub_y.mean())
        tree.n_samples[node] = int(idx.size)
        if (params.max_depth is not None and depth >= params.max_depth) \
                or idx.size < params.min_samples_split:
            return node
        if max_features is not None and max_features < n_feats:
            feats = np.sort(rng.choice(n_feats, size=max_features, replace=False))
        else:
            feats = np.arange(n_feats)
        split = _best_split(X, y, idx, feats, params.min_samples_leaf)
        if split is None:
            return node
        f, thr, red = split
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.gain[node] = red
        mask = X[idx, f] <= thr
        tree.left[node] = build(idx[mask], depth + 1)
        tree.right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(X.shape[0], dtype=np.int64), 0)
    return tree


@dataclass
class RegressionModel:
    """A fitted model plus the metadata needed to validate and reproduce it."""

    kind: ModelKind
    schema: FeatureSchema
    params: dict
    seed: int | None = None
    trained_range: tuple[str, str] | None = None
    trees: list[Tree] = field(default_factory=list)
    init_value: float = 0.0
    learning_rate: float = 1.0
    coefficients: list[float] = field(default_factory=list)
    intercept: float = 0.0
    feature_stds: list[float] = field(default_factory=list)

    # -- prediction ---------------------------------------------------------

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.schema.names):
            raise SchemaMismatchError(
                f"model expects {len(self.schema.names)} features, got {X.shape[1]}")
        if self.kind == ModelKind.LINEAR:
            return X @ np.asarray(self.coefficients) + self.intercept
        if self.kind == ModelKind.DECISION_TREE:
            return self.trees[0].predict(X)
        if self.kind == ModelKind.RANDOM_FOREST:
            acc = np.zeros(X.shape[0])
            for t in self.trees:
                acc += t.predict(X)
            return acc / len(self.trees)
        preds = np.full(X.shape[0], self.init_value)
        for t in self.trees:
            preds += self.learning_rate * t.predict(X)
        return preds

    def predict_matrix(self, matrix: TrainingMatrix) -> np.ndarray:
        if matrix.schema_hash != self.schema.hash:
            raise SchemaMismatchError("matrix schema does not match model schema")
        return self.predict(matrix.X)

    # -- importance ---------------------------------------------------------

    def feature_importance(self) -> dict[str, float]:
        """Impurity-decrease importance (|coef|*std for linear), summing to 1."""
        k = len(self.schema.names)
        raw = np.zeros(k)
        if self.kind == ModelKind.LINEAR:
            raw = np.abs(np.asarray(self.coefficients)) * np.asarray(self.feature_stds)
        else:
            for t in self.trees:
                for f, g in zip(t.feature, t.gain):
                    if f >= 0:
                        raw[f] += g
        total = raw.sum()
        if total <= 0:
            weights = np.full(k, 1.0 / k)   # no informative splits: uniform
        else:
            weights = raw / total
        return dict(zip(self.schema.names, weights.tolist()))

    # -- serialization ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind.value,
            "params": self.params,
            "seed": self.seed,
            "trained_range": self.trained_range,
            "schema": {
                "names": list(self.schema.names),
                "kinds": list(self.schema.kinds),
                "units": list(self.schema.units),
                "window": self.schema.window,
                "hash": self.schema.hash,
            },
            "trees": [t.to_payload() for t in self.trees],
            "init_value": self.init_value,
            "learning_rate": self.learning_rate,
            "coefficients": self.coefficients,
            "intercept": self.intercept,
            "feature_stds": self.feature_stds,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RegressionModel":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        version = doc.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise SchemaVersionError(
                f"model format_version {version}, reader supports {MODEL_FORMAT_VERSION}")
        schema = FeatureSchema(
            names=tuple(doc["schema"]["names"]),
            kinds=tuple(doc["schema"]["kinds"]),
            units=tuple(doc["schema"]["units"]),
            window=doc["schema"]["window"],
        )
        if schema.hash != doc["schema"]["hash"]:
            raise SchemaMismatchError("stored schema hash does not match its content")
        model = cls(
            kind=ModelKind(doc["kind"]),
            schema=schema,
            params=doc["params"],
            seed=doc["seed"],
            trained_range=tuple(doc["trained_range"]) if doc["trained_range"] else None,
            trees=[Tree.from_payload(p) for p in doc["trees"]],
            init_value=doc["init_value"],
            learning_rate=doc["learning_rate"],
            coefficients=doc["coefficients"],
            intercept=doc["intercept"],
            feature_stds=doc["feature_stds"],
        )
        return model


def _check_matrix(matrix: TrainingMatrix, min_rows: int = 2) -> None:
    if len(matrix) < min_rows:
        raise ClinicapError(f"need at least {min_rows} rows, got {len(matrix)}")


def _range_meta(matrix: TrainingMatrix) -> tuple[str, str]:
    dates = [d for _, d in matrix.keys]
    return (min(dates).isoformat(), max(dates).isoformat())


def fit_tree(matrix: TrainingMatrix, params: TreeParams = TreeParams()) -> RegressionModel:
    """Deterministic CART regression tree; leaf value = mean of leaf targets."""
    _check_matrix(matrix, min_rows=1)
    tree = _grow_tree(matrix.X, matrix.y, params, None, None)
    return RegressionModel(
        kind=ModelKind.DECISION_TREE,
        schema=matrix.schema,
        params={"max_depth": params.max_depth,
                "min_samples_split": params.min_samples_split,
                "min_samples_leaf": params.min_samples_leaf},
        trained_range=_range_meta(matrix),
        trees=[tree],
    )


def fit_forest(matrix: TrainingMatrix, params: TreeParams = TreeParams(),
               n_trees: int = 30, seed: int = 0, max_features: int | str = "third",
               bootstrap: bool = True, n_jobs: int = 1) -> RegressionModel:
    """Bootstrap forest with per-split random feature subsets.

    Every tree gets its own generator spawned from the master seed before any
    fitting starts, so predictions are identical for any n_jobs.
    """
    _check_matrix(matrix)
    if n_trees < 1:
        raise ClinicapError("n_trees must be >= 1")
    n_feats = matrix.X.shape[1]
    if max_features == "third":
        mf = max(1, n_feats // 3)
    elif max_features in (None, "all"):
        mf = None
    else:
        mf = int(max_features)
        if not 1 <= mf <= n_feats:
            raise ClinicapError(f"max_features must be in 1..{n_feats}")
    seeds = np.random.SeedSequence(seed).spawn(n_trees)

    def build(i: int) -> Tree:
        rng = np.random.default_rng(seeds[i])
        if bootstrap:
            idx = rng.integers(0, len(matrix), size=len(matrix))
            Xb, yb = matrix.X[idx], matrix.y[idx]
        else:
            Xb, yb = matrix.X, matrix.y
        return _grow_tree(Xb, yb, params, mf, rng)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(n_trees)))
    else:
        trees = [build(i) for i in range(n_trees)]

    return RegressionModel(
        kind=ModelKind.RANDOM_FOREST,
        schema=matrix.schema,
        params={"max_depth": params.max_depth,
                "min_samples_split": params.min_samples_split,
                "min_samples_leaf": params.min_samples_leaf,
                "n_trees": n_trees,
                "max_features": max_features if isinstance(max_features, str) else mf,
                "bootstrap": bootstrap},
        seed=seed,
        trained_range=_range_meta(matrix),
        trees=trees,
    )


def fit_gbt(matrix: TrainingMatrix, params: TreeParams = TreeParams(max_depth=3),
            n_rounds: int = 100, learning_rate: float = 0.1,
            seed: int = 0) -> RegressionModel:
    """Stage-wise squared-loss boosting from a mean-of-targets init.

    n_rounds = 0 yields the init-only model that always predicts the mean.
    """
    _check_matrix(matrix)
    if n_rounds < 0:
        raise ClinicapError("n_rounds must be >= 0")
    if not 0 < learning_rate <= 1:
        raise ClinicapError("learning_rate must be in (0, 1]")
    init = float(matrix.y.mean())
    residual = matrix.y - init
    trees: list[Tree] = []
    for _ in range(n_rounds):
        tree = _grow_tree(matrix.X, residual, params, None, None)
        residual = residual - learning_rate * tree.predict(matrix.X)
        trees.append(tree)
    return RegressionModel(
        kind=ModelKind.GBT,
        schema=matrix.schema,
        params={"max_depth": params.max_depth,
                "min_samples_split": params.min_samples_split,
                "min_samples_leaf": params.min_samples_leaf,
                "n_rounds": n_rounds,
                "learning_rate": learning_rate},
        seed=seed,
        trained_range=_range_meta(matrix),
        trees=trees,
        init_value=init,
        learning_rate=learning_rate,
    )


def fit_linear(matrix: TrainingMatrix) -> RegressionModel:
    """Ordinary least squares with intercept, via numpy lstsq."""
    _check_matrix(matrix)
    X1 = np.hstack([matrix.X, np.ones((len(matrix), 1))])
    coef, *_ = np.linalg.lstsq(X1, matrix.y, rcond=None)
    return RegressionModel(
        kind=ModelKind.LINEAR,
        schema=matrix.schema,
        params={},
        trained_range=_range_meta(matrix),
        coefficients=coef[:-1].tolist(),
        intercept=float(coef[-1]),
        feature_stds=matrix.X.std(axis=0).tolist(),
    )


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    rmse: float
    mape: float
    r2: float


def metrics_from_arrays(y: np.ndarray, y_hat: np.ndarray) -> Metrics:
    """RMSE, MAPE with max(y, 1) denominators (nothing excluded), and R^2."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ClinicapError("prediction/target length mismatch")
    err = y - y_hat
    rmse = float(np.sqrt(np.mean(err ** 2)))
    mape = float(100.0 * np.mean(np.abs(err) / np.maximum(y, 1.0)))
    ss_res = float(np.sum(err ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return Metrics(rmse=rmse, mape=mape, r2=r2)


def evaluate(model: RegressionModel, matrix: TrainingMatrix) -> Metrics:
    return metrics_from_arrays(matrix.y, model.predict_matrix(matrix))


# ---------------------------------------------------------------------------
# Comparison harness
# ---------------------------------------------------------------------------

@dataclass
class ComparisonTable:
    rows: list[tuple[str, Metrics]]              # sorted by RMSE ascending
    split: dict

    def to_csv(self, path: str | Path | None = None) -> str:
        lines = ["Model,RMSE,MAPE,R2"]
        for name, m in self.rows:
            lines.append(f"{name},{m.rmse:.4f},{m.mape:.4f},{m.r2:.4f}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def as_dicts(self) -> list[dict]:
        return [{"model": name, "rmse": m.rmse, "mape": m.mape, "r2": m.r2}
                for name, m in self.rows]

    def metrics_for(self, name: str) -> Metrics:
        for n, m in self.rows:
            if n == name:
                return m
        raise KeyError(name)


def chronological_split(matrix: TrainingMatrix, split_fraction: float
                        ) -> tuple[TrainingMatrix, TrainingMatrix]:
    """Split on a date boundary with roughly split_fraction of rows training.

    Earlier dates always train; no date ever spans both sides.
    """
    if not 0 < split_fraction < 1:
        raise ClinicapError("split_fraction must be in (0, 1)")
    order = sorted(range(len(matrix)), key=lambda i: (matrix.keys[i][1], matrix.keys[i][0]))
    dates = [matrix.keys[i][1] for i in order]
    target = int(split_fraction * len(order))
    cut = None
    for i in range(len(order) - 1):
        if dates[i] != dates[i + 1]:
            if i + 1 <= target:
                cut = i + 1
            else:
                break
    if cut is None:
        raise ClinicapError("not enough distinct dates for a chronological split")

    def subset(sel):
        return TrainingMatrix(schema=matrix.schema, X=matrix.X[sel],
                              y=matrix.y[sel], keys=[matrix.keys[i] for i in sel])

    return subset(order[:cut]), subset(order[cut:])


def default_model_specs(seed: int) -> list[tuple[str, object]]:
    return [
        ("Linear", lambda m: fit_linear(m)),
        ("DecisionTree", lambda m: fit_tree(m, TreeParams(max_depth=12, min_samples_leaf=3))),
        ("RandomForest", lambda m: fit_forest(
            m, TreeParams(max_depth=14, min_samples_leaf=3), n_trees=30, seed=seed,
            max_features=None)),
        ("GBT", lambda m: fit_gbt(
            m, TreeParams(max_depth=6, min_samples_leaf=3), n_rounds=120,
            learning_rate=0.1, seed=seed)),
    ]


def compare_models(matrix: TrainingMatrix, split_fraction: float = 0.75,
                   seed: int = 0, model_specs=None) -> ComparisonTable:
    """Fit every registered model on one chronological split and rank by RMSE."""
    train, val = chronological_split(matrix, split_fraction)
    if model_specs is None:
        model_specs = default_model_specs(seed)
    rows = []
    for name, fit in model_specs:
        model = fit(train)
        rows.append((name, metrics_from_arrays(val.y, model.predict(val.X))))
    rows.sort(key=lambda r: (r[1].rmse, r[0]))
    return ComparisonTable(rows=rows, split={
        "fraction": split_fraction,
        "train_rows": len(train),
        "val_rows": len(val),
        "train_last_date": max(d for _, d in train.keys).isoformat(),
        "val_first_date": min(d for _, d in val.keys).isoformat(),
        "seed": seed,
    })
