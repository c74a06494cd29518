"""Variant-mixing training on a toy linear softmax classifier.

Each SGD iteration draws a preprocessing variant (decoder, resize) and feeds
the minibatch through it. Fixed strategies always use one variant; mix
strategies re-sample the decoder, the resize, or both.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SysNoiseError
from .jpeg.decoder import DEFAULT_DECODER, PRESETS, canonical_decoder_name, decode
from .report import AccuracyTable
from .resize import DEFAULT_RESIZE, STANDARD_RESIZE_VARIANTS, parse_resize_variant, resize_variant
from .resize import resize as resize_image
from .transforms import RngStream, as_rgb

DEFAULT_DECODERS = tuple(PRESETS)
DEFAULT_RESIZES = STANDARD_RESIZE_VARIANTS
MIX_MODES = ("mix-decoder", "mix-resize", "mix-both")
_SAMPLE_TAG = 0x5A
_SHUFFLE_TAG = 0x5B


@dataclass(frozen=True)
class VariantId:
    decoder: str = DEFAULT_DECODER
    resize: str = DEFAULT_RESIZE

    def __post_init__(self):
        object.__setattr__(self, "decoder", canonical_decoder_name(self.decoder))
        parse_resize_variant(self.resize)

    @property
    def label(self):
        return f"{self.decoder}/{self.resize}"

    @classmethod
    def parse(cls, text):
        """``<resize>`` or ``<decoder>/<resize>``."""
        if "/" in text:
            dec, res = text.split("/", 1)
            return cls(dec, res)
        return cls(DEFAULT_DECODER, text)


@dataclass(frozen=True)
class Strategy:
    mode: str
    variant: VariantId = VariantId()
    decoders: tuple = DEFAULT_DECODERS
    resizes: tuple = DEFAULT_RESIZES

    def __post_init__(self):
        if self.mode not in ("fixed",) + MIX_MODES:
            raise ConfigError(f"unknown strategy mode {self.mode!r}")
        object.__setattr__(self, "decoders", tuple(canonical_decoder_name(d) for d in self.decoders))
        object.__setattr__(self, "resizes", tuple(self.resizes))
        for r in self.resizes:
            parse_resize_variant(r)
        if self.mode in ("mix-decoder", "mix-both") and not self.decoders:
            raise ConfigError("mix strategy needs a non-empty decoder set")
        if self.mode in ("mix-resize", "mix-both") and not self.resizes:
            raise ConfigError("mix strategy needs a non-empty resize set")

    @property
    def name(self):
        return f"fixed:{self.variant.label}" if self.mode == "fixed" else self.mode

    @classmethod
    def parse(cls, text, decoders=DEFAULT_DECODERS, resizes=DEFAULT_RESIZES):
        """``fixed:<variant>`` or one of the mix mode names."""
        if text.startswith("fixed:"):
            try:
                return cls("fixed", VariantId.parse(text[len("fixed:"):]))
            except SysNoiseError as exc:
                raise ConfigError(f"bad strategy {text!r}: {exc}") from None
        if text in MIX_MODES:
            return cls(text, decoders=decoders, resizes=resizes)
        raise ConfigError(f"bad strategy {text!r}; expected fixed:<variant> or one of {MIX_MODES}")


def sample_variant(strategy, iteration, seed):
    """Variant used at ``iteration``; a pure function of (seed, iteration)."""
    if strategy.mode == "fixed":
        return strategy.variant
    rng = RngStream(seed, iteration, tag=_SAMPLE_TAG)
    decoder, resize = DEFAULT_DECODER, DEFAULT_RESIZE
    if strategy.mode in ("mix-decoder", "mix-both"):
        decoder = strategy.decoders[rng.integers(0, len(strategy.decoders))]
    if strategy.mode in ("mix-resize", "mix-both"):
        resize = strategy.resizes[rng.integers(0, len(strategy.resizes))]
    return VariantId(decoder, resize)


# ---------------------------------------------------------------------------
# model


@dataclass
class ToyModel:
    weights: np.ndarray  # (classes, features)
    bias: np.ndarray  # (classes,)

    @classmethod
    def zeros(cls, n_classes, n_features):
        return cls(np.zeros((n_classes, n_features)), np.zeros(n_classes))

    @property
    def n_classes(self):
        return self.weights.shape[0]

    @property
    def n_features(self):
        return self.weights.shape[1]

    def copy(self):
        return ToyModel(self.weights.copy(), self.bias.copy())


def _as_batch(model, features):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ConfigError(f"feature dimension {x.shape[-1]} does not match model ({model.n_features})")
    return x


def softmax(scores):
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model, features):
    """Class probabilities, shape (n, classes)."""
    x = _as_batch(model, features)
    return softmax(x @ model.weights.T + model.bias)


def predict(model, features):
    return np.argmax(forward(model, features), axis=1)


def loss_and_grad(model, features, labels):
    """Mean cross-entropy and its gradients (dW, db)."""
    x = _as_batch(model, features)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if len(y) == 0 or len(y) != len(x):
        raise ConfigError("batch must be non-empty with one label per row")
    if y.min() < 0 or y.max() >= model.n_classes:
        raise ConfigError(f"label out of range [0, {model.n_classes})")
    scores = x @ model.weights.T + model.bias
    z = scores - scores.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    n = len(y)
    loss = float(np.mean(logsum - z[np.arange(n), y]))
    delta = np.exp(z - logsum[:, None])
    delta[np.arange(n), y] -= 1.0
    delta /= n
    return loss, delta.T @ x, delta.sum(axis=0)


# ---------------------------------------------------------------------------
# data


def image_features(img, resize_name, side):
    """Flattened ``side x side`` RGB thumbnail scaled to [-0.5, 0.5]."""
    small = resize_image(as_rgb(img), resize_variant(resize_name, side, side))
    return (small.astype(np.float64) / 255.0 - 0.5).ravel()


class FeatureBank:
    """Per-variant feature matrices for one JPEG corpus, computed lazily and cached."""

    def __init__(self, jpegs, labels, side=16):
        self.jpegs = list(jpegs)
        self.labels = np.asarray(labels, dtype=np.int64)
        if len(self.jpegs) != len(self.labels):
            raise ConfigError("corpus images and labels differ in length")
        self.side = side
        self._decoded = {}
        self._features = {}

    def __len__(self):
        return len(self.jpegs)

    @property
    def n_features(self):
        return 3 * self.side * self.side

    def _images(self, decoder):
        if decoder not in self._decoded:
            self._decoded[decoder] = [decode(d, decoder) for d in self.jpegs]
        return self._decoded[decoder]

    def features(self, variant):
        if variant not in self._features:
            imgs = self._images(variant.decoder)
            self._features[variant] = np.stack([image_features(im, variant.resize, self.side) for im in imgs])
        return self._features[variant]

    def dataset(self, variant):
        return self.features(variant), self.labels


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    strategy: Strategy
    lr: float = 0.05
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    side: int = 16
    per_epoch_sampling: bool = False

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")


@dataclass
class TrainResult:
    model: ToyModel
    loss_history: list = field(default_factory=list)
    variant_counts: dict = field(default_factory=dict)


def _epoch_order(n, seed, epoch):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([_SHUFFLE_TAG, seed, epoch])))
    return rng.permutation(n)


def train(bank, cfg: TrainConfig):
    """Minibatch SGD from zero weights; returns a :class:`TrainResult`."""
    labels = bank.labels
    n_classes = int(labels.max()) + 1
    if len(np.unique(labels)) < 2:
        raise ConfigError("training corpus needs at least two classes")
    model = ToyModel.zeros(n_classes, bank.n_features)
    result = TrainResult(model)
    n = len(bank)
    iteration = 0
    for epoch in range(cfg.epochs):
        order = _epoch_order(n, cfg.seed, epoch)
        losses = []
        for start in range(0, n, cfg.batch_size):
            step = epoch if cfg.per_epoch_sampling else iteration
            variant = sample_variant(cfg.strategy, step, cfg.seed)
            result.variant_counts[variant.label] = result.variant_counts.get(variant.label, 0) + 1
            idx = order[start:start + cfg.batch_size]
            x = bank.features(variant)[idx]
            loss, gw, gb = loss_and_grad(model, x, labels[idx])
            model.weights -= cfg.lr * gw
            model.bias -= cfg.lr * gb
            losses.append(loss)
            iteration += 1
        result.loss_history.append(float(np.mean(losses)))
    return result


def accuracy(model, features, labels):
    return float(np.mean(predict(model, features) == np.asarray(labels)))


def evaluate_matrix(models, datasets):
    """Accuracy (percent) of each model on each evaluation dataset.

    ``models`` maps row label -> ToyModel; ``datasets`` maps column label ->
    (features, labels). All columns must share one label vector.
    """
    columns = list(datasets)
    if not columns:
        raise ConfigError("no evaluation variants")
    ref = np.asarray(datasets[columns[0]][1])
    for c in columns[1:]:
        if not np.array_equal(np.asarray(datasets[c][1]), ref):
            raise ConfigError(f"labels of evaluation variant {c!r} are not aligned with {columns[0]!r}")
    values = [[100.0 * accuracy(m, datasets[c][0], ref) for c in columns] for m in models.values()]
    return AccuracyTable(list(models), columns, values)


# ---------------------------------------------------------------------------
# checkpoints

_CKPT_MAGIC = b"SNTM"
_CKPT_VERSION = 1


def model_bytes(model):
    """Little-endian: magic, u32 version, u32 classes, u32 features, f64 weights, f64 bias."""
    c, f = model.weights.shape
    head = _CKPT_MAGIC + struct.pack("<III", _CKPT_VERSION, c, f)
    return head + model.weights.astype("<f8").tobytes() + model.bias.astype("<f8").tobytes()


def model_from_bytes(data):
    if data[:4] != _CKPT_MAGIC or len(data) < 16:
        raise ConfigError("not a toy-model checkpoint")
    version, c, f = struct.unpack("<III", data[4:16])
    if version != _CKPT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {version}")
    if len(data) != 16 + 8 * (c * f + c):
        raise ConfigError("checkpoint size does not match its header")
    w = np.frombuffer(data, dtype="<f8", count=c * f, offset=16).reshape(c, f)
    b = np.frombuffer(data, dtype="<f8", count=c, offset=16 + 8 * c * f)
    return ToyModel(w.astype(np.float64), b.astype(np.float64))


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(model_bytes(model))


def load_model(path):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


# ---------------------------------------------------------------------------
# experiments


def eval_variants_for(axis, decoders=DEFAULT_DECODERS, resizes=DEFAULT_RESIZES):
    """Evaluation variants along one axis ('decoder', 'resize' or 'both')."""
    if axis == "decoder":
        return [VariantId(d, DEFAULT_RESIZE) for d in decoders]
    if axis == "resize":
        return [VariantId(DEFAULT_DECODER, r) for r in resizes]
    if axis == "both":
        return [VariantId(d, r) for d in decoders for r in resizes]
    raise ConfigError(f"unknown axis {axis!r}")


def run_experiment(train_bank, test_bank, strategies, eval_variants, seed, **train_kw):
    """Train one model per strategy and evaluate each on every variant.

    Returns (AccuracyTable, {strategy name: TrainResult}).
    """
    results = {}
    for s in strategies:
        results[s.name] = train(train_bank, TrainConfig(strategy=s, seed=seed, side=train_bank.side, **train_kw))
    datasets = {v.label: test_bank.dataset(v) for v in eval_variants}
    table = evaluate_matrix({k: r.model for k, r in results.items()}, datasets)
    return table, results


def history_json(results):
    return json.dumps({k: r.loss_history for k, r in results.items()}, indent=2) + "\n"
