import logging
import pathlib
import struct

from abc import ABC

import numpy as np

from .audio import NormStats, Spectrogram
from .errors import CacheFormatError, ShapeError

__all__ = (
    "FEATURE_MAGIC",
    "encode_features",
    "decode_features",
    "read_features",
    "write_features",
    "save_norm_stats",
    "load_norm_stats",
    "FeatureCache",
    "NoFeatureCache",
    "LocalFeatureCache",
    "DiskFeatureCache",
)

log = logging.getLogger(__name__)

FEATURE_MAGIC = b"SPG1"
_HEADER = struct.Struct("<4sIII")


def encode_features(splits):
    """
    SPG1 layout: magic, (count, T, F) as little-endian u32, then each split
    as row-major little-endian float32
    """
    if not splits:
        raise ValueError("cannot encode an empty split list")

    n_frames, n_bins = splits[0].shape
    for spec in splits:
        if spec.shape != (n_frames, n_bins):
            raise ShapeError((n_frames, n_bins), spec.shape, what="split shape")

    body = np.stack([spec.values for spec in splits]).astype("<f4")
    return _HEADER.pack(FEATURE_MAGIC, len(splits), n_frames, n_bins) + body.tobytes()


def decode_features(data, frame_hop_seconds=0.01, source="<bytes>"):
    if len(data) < _HEADER.size:
        raise CacheFormatError(source, "truncated header")

    magic, count, n_frames, n_bins = _HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise CacheFormatError(source, f"bad magic {magic!r}")

    expected = count * n_frames * n_bins * 4
    if len(data) - _HEADER.size != expected:
        raise CacheFormatError(
            source, f"expected {expected} payload bytes, got {len(data) - _HEADER.size}"
        )

    body = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    body = body.reshape(count, n_frames, n_bins).astype(np.float64)
    return [Spectrogram(values, frame_hop_seconds) for values in body]


def write_features(path, splits):
    pathlib.Path(path).write_bytes(encode_features(splits))


def read_features(path, frame_hop_seconds=0.01):
    return decode_features(
        pathlib.Path(path).read_bytes(), frame_hop_seconds, source=str(path)
    )


def save_norm_stats(path, stats):
    with open(path, "wb") as f:
        np.savez(f, mean=stats.mean, std=stats.std)


def load_norm_stats(path):
    try:
        with np.load(path) as data:
            return NormStats(data["mean"], data["std"])

    except (OSError, KeyError, ValueError) as e:
        raise CacheFormatError(path, f"not a normalizer file ({e})")


class FeatureCache(ABC):
    """
    Responsible for storing the split spectrograms of each utterance
    """

    def store(self, utterance_id, splits):
        pass

    def get(self, utterance_id):
        pass

    def remove(self, utterance_id):
        pass

    def __contains__(self, utterance_id):
        return False

    def iter_ids(self):
        return iter(())


class NoFeatureCache(FeatureCache):
    pass


class LocalFeatureCache(FeatureCache):
    def __init__(self):
        self.features = {}

    def store(self, utterance_id, splits):
        self.features[utterance_id] = list(splits)

    def get(self, utterance_id):
        return self.features.get(utterance_id)

    def remove(self, utterance_id):
        try:
            del self.features[utterance_id]
        except KeyError:
            pass

    def __contains__(self, utterance_id):
        return utterance_id in self.features

    def iter_ids(self):
        yield from self.features.keys()


class DiskFeatureCache(FeatureCache):
    """
    One SPG1 file per utterance under root, named after the utterance id
    """

    SUFFIX = ".spg"

    def __init__(self, root, frame_hop_seconds=0.01):
        self.root = pathlib.Path(root)
        self.frame_hop_seconds = frame_hop_seconds

    def path_for(self, utterance_id):
        return self.root / f"{pathlib.PurePath(utterance_id).stem}{self.SUFFIX}"

    def store(self, utterance_id, splits):
        self.root.mkdir(parents=True, exist_ok=True)
        write_features(self.path_for(utterance_id), splits)

    def get(self, utterance_id):
        path = self.path_for(utterance_id)
        if not path.is_file():
            return None

        return read_features(path, self.frame_hop_seconds)

    def remove(self, utterance_id):
        try:
            self.path_for(utterance_id).unlink()
        except FileNotFoundError:
            pass

    def __contains__(self, utterance_id):
        return self.path_for(utterance_id).is_file()

    def iter_ids(self):
        if not self.root.is_dir():
            return

        for path in sorted(self.root.glob(f"*{self.SUFFIX}")):
            yield path.stem
