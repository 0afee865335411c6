"""Versioned binary checkpoints.

Layout: 8-byte magic, u32 format version, then fixed-order sections, each
framed as 4-byte tag + u32 payload length + u32 CRC32 + payload. Numeric
payloads are little-endian float32; loading therefore returns the
float32-rounded values, and the trainer applies the same rounding to its
live state at every checkpoint boundary so a resumed run is bit-identical
to an uninterrupted one. save -> load -> save reproduces the file byte
for byte.
"""

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .encoder import EncoderParams, EncoderShape
from .errors import DataFormatError
from .memory_bank import MemoryBank

MAGIC = b"SUPERAND"
FORMAT_VERSION = 1
_SECTIONS = (b"CFG ", b"ENC ", b"BANK", b"OPT ", b"CUR ", b"RNG ")


@dataclass
class Checkpoint:
    config: TrainConfig
    params: EncoderParams
    bank: MemoryBank
    momentum: EncoderParams
    next_round: int
    epoch_cursor: int
    rng_states: dict


def round_f32(arr: np.ndarray) -> np.ndarray:
    """Round float64 values through the float32 storage precision."""
    return arr.astype(np.float32).astype(np.float64)


def _pack_arrays(arrays) -> bytes:
    parts = [struct.pack("<I", len(arrays))]
    for arr in arrays:
        a = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<B", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(a.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes, context: str):
        self.buf = buf
        self.pos = 0
        self.context = context

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataFormatError(f"{self.context}: truncated at byte {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]

    def done(self) -> bool:
        return self.pos == len(self.buf)


def _unpack_arrays(reader: _Reader):
    count = reader.u32()
    arrays = []
    for _ in range(count):
        ndim = reader.u8()
        dims = tuple(reader.u32() for _ in range(ndim))
        n_values = int(np.prod(dims)) if dims else 1
        raw = reader.take(4 * n_values)
        arrays.append(np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64))
    return arrays


def _encode_params_section(params: EncoderParams) -> bytes:
    s = params.shape
    head = struct.pack("<IIII", s.height, s.width, s.hidden, s.dim)
    return head + _pack_arrays([arr for _, arr in params.arrays()])


def _decode_params_section(payload: bytes, context: str) -> EncoderParams:
    reader = _Reader(payload, context)
    shape = EncoderShape(*(reader.u32() for _ in range(4)))
    arrays = _unpack_arrays(reader)
    if len(arrays) != len(EncoderParams.FIELDS):
        raise DataFormatError(f"{context}: expected {len(EncoderParams.FIELDS)} arrays")
    return EncoderParams(shape, *arrays)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    sections = {
        b"CFG ": ckpt.config.to_text().encode("utf-8"),
        b"ENC ": _encode_params_section(ckpt.params),
        b"BANK": _pack_arrays([ckpt.bank.rows]),
        b"OPT ": _encode_params_section(ckpt.momentum),
        b"CUR ": struct.pack("<II", ckpt.next_round, ckpt.epoch_cursor),
        b"RNG ": json.dumps(ckpt.rng_states, sort_keys=True, separators=(",", ":")).encode("utf-8"),
    }
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    for tag in _SECTIONS:
        payload = sections[tag]
        parts.append(tag)
        parts.append(struct.pack("<II", len(payload), zlib.crc32(payload)))
        parts.append(payload)
    blob = b"".join(parts)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise DataFormatError(f"cannot write checkpoint to {path}: {exc}") from exc


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read checkpoint from {path}: {exc}") from exc
    reader = _Reader(blob, str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise DataFormatError(f"{path}: bad magic, not a checkpoint file")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")
    payloads = {}
    for tag in _SECTIONS:
        got = reader.take(4)
        if got != tag:
            raise DataFormatError(f"{path}: expected section {tag!r}, found {got!r}")
        length = reader.u32()
        crc = reader.u32()
        payload = reader.take(length)
        if zlib.crc32(payload) != crc:
            raise DataFormatError(f"{path}: checksum mismatch in section {tag!r}")
        payloads[tag] = payload
    if not reader.done():
        raise DataFormatError(f"{path}: {len(blob) - reader.pos} trailing bytes")

    config = TrainConfig.from_text(payloads[b"CFG "].decode("utf-8"))
    params = _decode_params_section(payloads[b"ENC "], f"{path} ENC")
    bank_rows = _unpack_arrays(_Reader(payloads[b"BANK"], f"{path} BANK"))
    if len(bank_rows) != 1:
        raise DataFormatError(f"{path}: BANK section must hold exactly one matrix")
    momentum = _decode_params_section(payloads[b"OPT "], f"{path} OPT")
    next_round, epoch_cursor = struct.unpack("<II", payloads[b"CUR "])
    try:
        rng_states = json.loads(payloads[b"RNG "].decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: corrupt RNG section: {exc}") from exc
    return Checkpoint(
        config=config,
        params=params,
        bank=MemoryBank(bank_rows[0], validate=False),
        momentum=momentum,
        next_round=next_round,
        epoch_cursor=epoch_cursor,
        rng_states=rng_states,
    )
