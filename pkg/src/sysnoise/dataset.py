"""Dataset-variant generator: decode + transform a corpus into ``.npy`` tensors plus a manifest."""

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigError, MetaFormatError, SysNoiseError
from .fileio import tensor_file_bytes, to_channel_first
from .jpeg.decoder import canonical_decoder_name, decode
from .resize import parse_resize_variant, resize_variant
from .transforms import TRANSFORM_KINDS, apply_transform


@dataclass(frozen=True)
class MetaEntry:
    path: str
    label: int


def load_meta(path):
    """Parse ``relative-path<whitespace>label`` lines; blank lines are skipped."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.rsplit(None, 1)
            if len(parts) != 2:
                raise MetaFormatError(lineno, f"expected 'path label', got {line!r}")
            rel, label = parts
            try:
                label = int(label)
            except ValueError:
                raise MetaFormatError(lineno, f"label {label!r} is not an integer") from None
            if label < 0:
                raise MetaFormatError(lineno, f"negative label {label}")
            entries.append(MetaEntry(rel, label))
    return entries


@dataclass
class GenConfig:
    root_dir: str
    meta_file: str
    save_dir: str
    decoder_type: str = "preset-pil"
    resize_type: str = "pil-bilinear"
    transform_type: str = "val"
    seed: int = 0

    def __post_init__(self):
        self.decoder_type = canonical_decoder_name(self.decoder_type)
        parse_resize_variant(self.resize_type)
        if self.transform_type not in TRANSFORM_KINDS:
            raise ConfigError(f"unknown transform type {self.transform_type!r}")

    @property
    def variant_id(self):
        return f"{self.decoder_type}-{self.resize_type}/{self.transform_type}"

    @property
    def variant_dir(self):
        return Path(self.save_dir) / f"{self.decoder_type}-{self.resize_type}" / self.transform_type


@dataclass
class Manifest:
    variant: str
    decoder_type: str
    resize_type: str
    transform_type: str
    seed: int
    generator_version: str
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def tensor_filename(index):
    return f"{index:06d}.npy"


def resolve_entry(root_dir, rel):
    root = Path(root_dir).resolve()
    if not rel:
        raise ConfigError("empty image path in meta file")
    path = (root / rel).resolve()
    if root != path and root not in path.parents:
        raise ConfigError(f"meta path {rel!r} escapes root_dir")
    return path


def process_image(data, decoder_type, resize_type, transform_type, seed, index):
    """Decode and transform one JPEG; returns the channel-first uint8 tensor."""
    img = decode(data, decoder_type)
    spec = resize_variant(resize_type, 1, 1)
    out = apply_transform(img, transform_type, spec, seed=seed, index=index)
    return to_channel_first(out)


def _work(args):
    index, src, cfg = args
    try:
        data = Path(src).read_bytes()
        tensor = process_image(data, cfg.decoder_type, cfg.resize_type, cfg.transform_type, cfg.seed, index)
        return index, tensor_file_bytes(tensor), None
    except (SysNoiseError, OSError) as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def generate(cfg, jobs=1):
    """Write one tensor file per meta entry and a ``manifest.json``; returns the Manifest.

    Failed images are listed in ``manifest.failures``; generation continues.
    Output bytes do not depend on ``jobs``.
    """
    entries = load_meta(cfg.meta_file)
    out_dir = cfg.variant_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(i, str(resolve_entry(cfg.root_dir, e.path)), cfg) for i, e in enumerate(entries)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_work, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_work(t) for t in tasks]

    manifest = Manifest(
        variant=cfg.variant_id,
        decoder_type=cfg.decoder_type,
        resize_type=cfg.resize_type,
        transform_type=cfg.transform_type,
        seed=cfg.seed,
        generator_version=__version__,
    )
    for (index, blob, error), entry in zip(results, entries):
        if error is not None:
            manifest.failures.append({"index": index, "source": entry.path, "error": error})
            continue
        name = tensor_filename(index)
        (out_dir / name).write_bytes(blob)
        manifest.records.append({
            "index": index,
            "source": entry.path,
            "label": entry.label,
            "output": name,
            "sha256": sha256_bytes(blob),
        })
    (out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def verify_manifest(variant_dir):
    """Recompute checksums; returns the list of output names whose bytes changed."""
    variant_dir = Path(variant_dir)
    manifest = Manifest.from_json((variant_dir / "manifest.json").read_text(encoding="utf-8"))
    bad = []
    for rec in manifest.records:
        path = variant_dir / rec["output"]
        if not path.exists() or sha256_bytes(path.read_bytes()) != rec["sha256"]:
            bad.append(rec["output"])
    return bad


def resolved_jobs(jobs):
    return (os.cpu_count() or 1) if jobs == 0 else jobs
