import logging
import pathlib
import struct

import numpy as np

from ..errors import CheckpointError
from .optim import AdamState


__all__ = ("CHECKPOINT_MAGIC", "encode_checkpoint", "decode_checkpoint", "save_checkpoint", "load_checkpoint")

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"CKPT"
_U32 = struct.Struct("<I")


def _pack_array(name, array):
    encoded = name.encode("utf-8")
    array = np.asarray(array, dtype="<f8")
    parts = [_U32.pack(len(encoded)), encoded, _U32.pack(array.ndim)]
    parts.extend(_U32.pack(extent) for extent in array.shape)
    parts.append(array.tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, data, source):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, n):
        if self.offset + n > len(self.data):
            raise CheckpointError(self.source, "truncated file")

        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u32(self):
        return _U32.unpack(self.take(4))[0]

    def array(self):
        name = self.take(self.u32()).decode("utf-8")
        shape = tuple(self.u32() for _ in range(self.u32()))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        values = np.frombuffer(self.take(8 * count), dtype="<f8")
        return name, values.reshape(shape).astype(np.float64)


def encode_checkpoint(params, state=None):
    """
    magic, u32 count, parameter records, then the Adam state: u32 step count,
    u32 record count and m.<name> / v.<name> records in the same layout
    """
    parts = [CHECKPOINT_MAGIC, _U32.pack(len(params))]
    for name, value in params.items():
        parts.append(_pack_array(name, getattr(value, "data", value)))

    state = state or AdamState()
    moments = [(f"m.{k}", v) for k, v in state.m.items()]
    moments += [(f"v.{k}", v) for k, v in state.v.items()]
    parts.append(_U32.pack(state.step_count))
    parts.append(_U32.pack(len(moments)))
    parts.extend(_pack_array(name, value) for name, value in moments)
    return b"".join(parts)


def decode_checkpoint(data, source="<bytes>"):
    reader = _Reader(data, source)
    if reader.take(4) != CHECKPOINT_MAGIC:
        raise CheckpointError(source, "bad magic")

    params = dict(reader.array() for _ in range(reader.u32()))
    state = AdamState(step_count=reader.u32())
    for _ in range(reader.u32()):
        name, value = reader.array()
        kind, _, param = name.partition(".")
        if kind == "m":
            state.m[param] = value

        elif kind == "v":
            state.v[param] = value

        else:
            raise CheckpointError(source, f"unexpected optimizer record {name!r}")

    if reader.offset != len(data):
        raise CheckpointError(source, "trailing bytes")

    return params, state


def save_checkpoint(path, params, state=None):
    pathlib.Path(path).write_bytes(encode_checkpoint(params, state))
    log.debug("wrote checkpoint %s", path)


def load_checkpoint(path):
    try:
        data = pathlib.Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(path, str(e))

    return decode_checkpoint(data, source=str(path))
