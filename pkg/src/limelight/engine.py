"""Locality-weighted linear surrogate explanations.

One explanation run: take the instance's unique tokens as binary
presence features, sample perturbations by deleting tokens, ask the
black box for probabilities on the reconstructed texts, weight each
perturbation by a proximity kernel on its mask, and fit a sparse
weighted ridge model per class. The fitted coefficients are the
per-token attributions.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .text import preprocess

HIGHEST_WEIGHT = "highest_weight"
FORWARD_SELECTION = "forward_selection"
SELECTION_METHODS = (HIGHEST_WEIGHT, FORWARD_SELECTION)


@dataclass(frozen=True)
class KernelConfig:
    """Proximity kernel: exp(-d^2 / sigma^2) over cosine mask distance."""

    sigma: float = 25.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise DataError(f"kernel sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class SurrogateConfig:
    num_samples: int = 1000
    ridge_lambda: float = 1.0
    top_k: int = 10
    feature_selection: str = HIGHEST_WEIGHT
    seed: int = 42

    def __post_init__(self):
        if self.num_samples < 2:
            raise DataError(f"num_samples must be >= 2, got {self.num_samples}")
        if self.ridge_lambda < 0:
            raise DataError(f"ridge lambda must be >= 0, got {self.ridge_lambda}")
        if self.top_k < 1:
            raise DataError(f"top_k must be >= 1, got {self.top_k}")
        if self.feature_selection not in SELECTION_METHODS:
            raise DataError(
                f"feature_selection must be one of {SELECTION_METHODS}, "
                f"got {self.feature_selection!r}"
            )


@dataclass(frozen=True)
class Instance:
    """An input text over its unique tokens, in first-occurrence order."""

    original_text: str
    features: tuple[str, ...]
    tokens: tuple[str, ...]  # full token sequence, for reconstruction

    @property
    def d(self) -> int:
        return len(self.features)

    def template(self) -> np.ndarray:
        return np.ones(self.d)


@dataclass(frozen=True)
class Perturbation:
    mask: tuple[int, ...]
    reconstructed_text: str
    distance: float
    weight: float


@dataclass(frozen=True)
class SurrogateFit:
    class_index: int
    feature_indices: tuple[int, ...]  # into Instance.features, ascending
    weights: tuple[float, ...]
    intercept: float
    local_score: float

    def ranked(self, instance: Instance) -> list[tuple[str, float]]:
        """(token, weight) pairs, largest |weight| first."""
        pairs = [
            (instance.features[i], w)
            for i, w in zip(self.feature_indices, self.weights)
        ]
        pairs.sort(key=lambda p: (-abs(p[1]), p[0]))
        return pairs


def build_instance(text: str, tokenizer=preprocess) -> Instance:
    tokens = tuple(tokenizer(text))
    if not tokens:
        raise DataError(f"nothing to explain: no tokens survive preprocessing of {text!r}")
    features = tuple(dict.fromkeys(tokens))
    return Instance(original_text=text, features=features, tokens=tokens)


def reconstruct_text(instance: Instance, mask) -> str:
    """Original token sequence minus every occurrence of masked-out features."""
    if len(mask) != instance.d:
        raise DataError(f"mask length {len(mask)} != feature count {instance.d}")
    keep = {f for f, bit in zip(instance.features, mask) if bit}
    return " ".join(t for t in instance.tokens if t in keep)


def cosine_distance(a, b) -> float:
    """1 - cosine similarity on binary vectors; 1.0 if either is all zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"vector lengths differ: {a.shape} vs {b.shape}")
    na2 = float(a @ a)
    nb2 = float(b @ b)
    if na2 == 0.0 or nb2 == 0.0:
        return 1.0
    return 1.0 - float(a @ b) / math.sqrt(na2 * nb2)


def proximity_weight(distance: float, sigma: float) -> float:
    return math.exp(-(distance * distance) / (sigma * sigma))


def _masks_for(instance: Instance, config: SurrogateConfig) -> np.ndarray:
    """All-ones first; exhaustive enumeration when 2^d fits in the budget,
    otherwise uniform removal-count sampling."""
    d = instance.d
    if d <= 30 and 2 ** d <= config.num_samples:
        masks = np.ones((2 ** d, d), dtype=np.int64)
        row = 1
        for value in range(2 ** d - 2, -1, -1):  # every mask except all-ones
            for j in range(d):
                masks[row, j] = (value >> (d - 1 - j)) & 1
            row += 1
        return masks
    rng = np.random.default_rng(config.seed)
    masks = np.ones((config.num_samples, d), dtype=np.int64)
    for row in range(1, config.num_samples):
        k = int(rng.integers(1, d + 1))
        positions = rng.choice(d, size=k, replace=False)
        masks[row, positions] = 0
    return masks


def sample_perturbations(instance: Instance, surrogate: SurrogateConfig,
                         kernel: KernelConfig) -> list[Perturbation]:
    """Deterministic perturbation set; the first entry is the original."""
    template = instance.template()
    out = []
    for mask in _masks_for(instance, surrogate):
        distance = cosine_distance(template, mask)
        out.append(Perturbation(
            mask=tuple(int(v) for v in mask),
            reconstructed_text=reconstruct_text(instance, mask),
            distance=distance,
            weight=proximity_weight(distance, kernel.sigma),
        ))
    return out


class RankDeficiencyError(DataError):
    """The unpenalized normal equations are singular."""


def fit_surrogate(Z, y, sample_weights, ridge_lambda: float):
    """Closed-form weighted ridge with an unpenalized intercept.

    Minimizes sum_i w_i (y_i - b0 - z_i . beta)^2 + lambda * ||beta||^2
    via the augmented normal equations (lambda added to the non-intercept
    diagonal). Returns (beta, b0).
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(sample_weights, dtype=float)
    n, d = Z.shape
    if len(y) != n or len(w) != n:
        raise DataError(f"misaligned rows: Z has {n}, y has {len(y)}, w has {len(w)}")
    if (w < 0).any():
        raise DataError("sample weights must be >= 0")
    if int((w > 0).sum()) < 2:
        raise DataError("need at least 2 strictly positive sample weights")
    if ridge_lambda < 0:
        raise DataError(f"ridge lambda must be >= 0, got {ridge_lambda}")

    X = np.column_stack([np.ones(n), Z])
    A = (X * w[:, None]).T @ X
    if d:
        idx = np.arange(1, d + 1)
        A[idx, idx] += ridge_lambda
    rhs = X.T @ (w * y)
    try:
        beta_full = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError(
            "normal equations are rank deficient; the perturbation set does "
            "not identify all features at lambda=0 -- use a ridge lambda > 0"
        ) from None
    if not np.isfinite(beta_full).all():
        raise RankDeficiencyError(
            "surrogate solve produced non-finite coefficients; "
            "use a ridge lambda > 0"
        )
    return beta_full[1:], float(beta_full[0])


def weighted_r2(Z, y, sample_weights, beta, intercept: float) -> float:
    """Weighted coefficient of determination of the fit (<= 1)."""
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(sample_weights, dtype=float)
    predictions = Z @ np.asarray(beta, dtype=float) + intercept
    residual = float(w @ (y - predictions) ** 2)
    mean = float(w @ y) / float(w.sum())
    total = float(w @ (y - mean) ** 2)
    if total == 0.0:
        return 1.0 if residual < 1e-12 else 0.0
    return 1.0 - residual / total


def select_features(Z, y, sample_weights, ridge_lambda: float, top_k: int,
                    method: str = HIGHEST_WEIGHT) -> tuple[int, ...]:
    """Pick at most top_k feature columns; K >= d keeps everything."""
    d = Z.shape[1]
    if top_k >= d:
        return tuple(range(d))
    if method == HIGHEST_WEIGHT:
        beta, _ = fit_surrogate(Z, y, sample_weights, ridge_lambda)
        order = sorted(range(d), key=lambda j: (-abs(beta[j]), j))
        return tuple(sorted(order[:top_k]))
    if method == FORWARD_SELECTION:
        selected: list[int] = []
        for _ in range(top_k):
            best_j, best_sse = None, None
            for j in range(d):
                if j in selected:
                    continue
                cols = sorted(selected + [j])
                beta, b0 = fit_surrogate(Z[:, cols], y, sample_weights, ridge_lambda)
                pred = Z[:, cols] @ beta + b0
                sse = float(np.asarray(sample_weights) @ (np.asarray(y) - pred) ** 2)
                if best_sse is None or sse < best_sse - 1e-15:
                    best_j, best_sse = j, sse
            selected.append(best_j)
        return tuple(sorted(selected))
    raise DataError(f"unknown feature selection method: {method!r}")


def _fit_class(Z, y, w, surrogate: SurrogateConfig, class_index: int) -> SurrogateFit:
    cols = select_features(Z, y, w, surrogate.ridge_lambda, surrogate.top_k,
                           surrogate.feature_selection)
    Zr = Z[:, list(cols)]
    beta, intercept = fit_surrogate(Zr, y, w, surrogate.ridge_lambda)
    score = weighted_r2(Zr, y, w, beta, intercept)
    return SurrogateFit(
        class_index=class_index,
        feature_indices=cols,
        weights=tuple(float(b) for b in beta),
        intercept=intercept,
        local_score=score,
    )


@dataclass
class Explanation:
    """Per-class attributions plus the black box's own prediction row."""

    instance: Instance
    prediction: tuple[float, ...]
    class_names: tuple[str, ...]
    fits: tuple[SurrogateFit, ...]
    kernel: KernelConfig = field(default_factory=KernelConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)

    def to_dict(self) -> dict:
        return {
            "text": self.instance.original_text,
            "prediction": {
                name: p for name, p in zip(self.class_names, self.prediction)
            },
            "classes": [
                {
                    "class": self.class_names[fit.class_index],
                    "intercept": fit.intercept,
                    "local_score": fit.local_score,
                    "features": [
                        {"token": token, "weight": weight}
                        for token, weight in fit.ranked(self.instance)
                    ],
                }
                for fit in self.fits
            ],
            "config": {
                "sigma": self.kernel.sigma,
                "num_samples": self.surrogate.num_samples,
                "ridge_lambda": self.surrogate.ridge_lambda,
                "top_k": self.surrogate.top_k,
                "feature_selection": self.surrogate.feature_selection,
                "seed": self.surrogate.seed,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "Explanation":
        """Rebuild from serialized form.

        The token sequence is not serialized, so the instance falls back
        to whitespace tokens of the text; attribution data round-trips
        exactly.
        """
        text = obj["text"]
        tokens = tuple(text.split())
        features = tuple(dict.fromkeys(tokens)) or ("",)
        class_names = tuple(obj["prediction"].keys())
        prediction = tuple(float(v) for v in obj["prediction"].values())
        fits = []
        feature_index = {f: i for i, f in enumerate(features)}
        for entry in obj["classes"]:
            class_index = class_names.index(entry["class"])
            idx, weights = [], []
            for feat in entry["features"]:
                idx.append(feature_index.setdefault(feat["token"], len(feature_index)))
                weights.append(float(feat["weight"]))
            fits.append(SurrogateFit(
                class_index=class_index,
                feature_indices=tuple(idx),
                weights=tuple(weights),
                intercept=float(entry["intercept"]),
                local_score=float(entry["local_score"]),
            ))
        all_features = tuple(sorted(feature_index, key=feature_index.get))
        cfg = obj.get("config", {})
        return cls(
            instance=Instance(original_text=text, features=all_features, tokens=tokens),
            prediction=prediction,
            class_names=class_names,
            fits=tuple(fits),
            kernel=KernelConfig(sigma=cfg.get("sigma", 25.0)),
            surrogate=SurrogateConfig(
                num_samples=cfg.get("num_samples", 1000),
                ridge_lambda=cfg.get("ridge_lambda", 1.0),
                top_k=cfg.get("top_k", 10),
                feature_selection=cfg.get("feature_selection", HIGHEST_WEIGHT),
                seed=cfg.get("seed", 42),
            ),
        )


def _perturbation_arrays(perturbations: list[Perturbation]):
    Z = np.array([p.mask for p in perturbations], dtype=float)
    w = np.array([p.weight for p in perturbations])
    return Z, w


def explain(handle, text: str, class_index: int,
            kernel: KernelConfig | None = None,
            surrogate: SurrogateConfig | None = None,
            tokenizer=preprocess) -> SurrogateFit:
    """Fit the local surrogate for one class of the black box."""
    kernel = kernel or KernelConfig()
    surrogate = surrogate or SurrogateConfig()
    if not 0 <= class_index < handle.n_classes:
        raise DataError(
            f"class index {class_index} out of range for {handle.n_classes} classes"
        )
    instance = build_instance(text, tokenizer)
    perturbations = sample_perturbations(instance, surrogate, kernel)
    probas = handle.predict_proba_batch([p.reconstructed_text for p in perturbations])
    Z, w = _perturbation_arrays(perturbations)
    return _fit_class(Z, probas[:, class_index], w, surrogate, class_index)


def explain_all_classes(handle, text: str,
                        kernel: KernelConfig | None = None,
                        surrogate: SurrogateConfig | None = None,
                        tokenizer=preprocess) -> Explanation:
    """One surrogate per class, all from the same perturbation sample.

    A single black-box pass serves every class; the original raw text
    rides along as one extra row so the reported prediction is f on the
    instance itself, not on its token reconstruction.
    """
    kernel = kernel or KernelConfig()
    surrogate = surrogate or SurrogateConfig()
    instance = build_instance(text, tokenizer)
    perturbations = sample_perturbations(instance, surrogate, kernel)
    texts = [p.reconstructed_text for p in perturbations] + [text]
    probas = handle.predict_proba_batch(texts)
    prediction = probas[-1]
    probas = probas[:-1]
    Z, w = _perturbation_arrays(perturbations)
    fits = tuple(
        _fit_class(Z, probas[:, c], w, surrogate, c)
        for c in range(handle.n_classes)
    )
    return Explanation(
        instance=instance,
        prediction=tuple(float(p) for p in prediction),
        class_names=handle.class_names,
        fits=fits,
        kernel=kernel,
        surrogate=surrogate,
    )


def derive_seed(global_seed: int, instance_id: int) -> int:
    """Stable per-instance seed so batch runs do not depend on scheduling."""
    key = f"{global_seed}:{instance_id}".encode()
    return zlib.crc32(key)
