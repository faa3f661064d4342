"""Bit-exact model persistence.

Container layout (all integers little-endian unsigned 32-bit):

    magic ``S2S1`` | meta_len | metadata (UTF-8 key=value lines)
    then for every parameter tensor, in canonical parameter order:
    rank (=2) | rows | cols | row-major payload, little-endian IEEE-754
    (float64 or float32 per the model precision)

The metadata block carries the format version, model configuration,
training progress, the vocabulary content hashes *and* the vocabulary
token lists themselves, so a checkpoint alone is enough to translate.
Loading verifies magic, version, shapes and exact end-of-file; parameters
round-trip bit for bit.
"""

from __future__ import annotations

import struct
import sys
from array import array
from dataclasses import dataclass

from .corpus import Vocabulary
from .errors import FormatError
from .model import ModelConfig, Seq2SeqModel, build_model, named_parameters
from .numerics import Matrix2D
from .training import TrainProgress

MAGIC = b"S2S1"
FORMAT_VERSION = 1

_BOOL_KEYS = ("peepholes", "reverse_source", "append_source_eos")


@dataclass
class Checkpoint:
    format_version: int
    config: ModelConfig
    progress: TrainProgress
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    src_vocab_hash: str
    tgt_vocab_hash: str
    params: list[tuple[str, Matrix2D]]

    def build_model(self) -> Seq2SeqModel:
        model = build_model(self.config, self.src_vocab, self.tgt_vocab)
        expected = named_parameters(model)
        if [n for n, _ in expected] != [n for n, _ in self.params]:
            raise FormatError("checkpoint parameter list does not match config")
        for (_, dst), (name, src) in zip(expected, self.params):
            if dst.shape() != src.shape():
                raise FormatError(f"tensor {name}: shape {src.shape()} "
                                  f"does not match config {dst.shape()}")
            dst.data[:] = src.data
        return model


def _meta_lines(model: Seq2SeqModel, progress: TrainProgress) -> str:
    cfg = model.config
    for vocab in (model.src_vocab, model.tgt_vocab):
        for tok in vocab.tokens:
            if any(ch.isspace() for ch in tok):
                raise FormatError(f"vocabulary token {tok!r} contains whitespace")
    lines = [
        f"format_version={FORMAT_VERSION}",
        f"num_layers={cfg.num_layers}",
        f"hidden_size={cfg.hidden_size}",
        f"embed_size={cfg.embed_size}",
        f"peepholes={int(cfg.peepholes)}",
        f"reverse_source={int(cfg.reverse_source)}",
        f"append_source_eos={int(cfg.append_source_eos)}",
        f"precision={cfg.precision}",
        f"epoch={progress.epoch!r}",
        f"step={progress.step}",
        f"lr={progress.lr!r}",
        f"src_vocab_hash={model.src_vocab.content_hash()}",
        f"tgt_vocab_hash={model.tgt_vocab.content_hash()}",
        "src_vocab_tokens=" + " ".join(model.src_vocab.tokens),
        "tgt_vocab_tokens=" + " ".join(model.tgt_vocab.tokens),
    ]
    return "\n".join(lines) + "\n"


def _le_bytes(mat: Matrix2D) -> bytes:
    data = mat.data
    if sys.byteorder == "big":
        data = array(data.typecode, data)
        data.byteswap()
    return data.tobytes()


def save_checkpoint(model: Seq2SeqModel, progress: TrainProgress, path) -> None:
    meta = _meta_lines(model, progress).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(meta)))
        fh.write(meta)
        for _, mat in named_parameters(model):
            fh.write(struct.pack("<III", 2, mat.rows, mat.cols))
            fh.write(_le_bytes(mat))


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise FormatError(f"truncated checkpoint: short read in {what}")
    return data


def _parse_meta(blob: bytes) -> dict[str, str]:
    meta = {}
    for line in blob.decode("utf-8").splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        meta[key] = value
    return meta


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise FormatError(f"{path}: bad magic bytes")
        (meta_len,) = struct.unpack("<I", _read_exact(fh, 4, "header"))
        meta = _parse_meta(_read_exact(fh, meta_len, "metadata"))
        try:
            version = int(meta["format_version"])
            if version != FORMAT_VERSION:
                raise FormatError(f"{path}: unsupported format version {version}")
            config = ModelConfig(
                num_layers=int(meta["num_layers"]),
                hidden_size=int(meta["hidden_size"]),
                embed_size=int(meta["embed_size"]),
                peepholes=bool(int(meta["peepholes"])),
                reverse_source=bool(int(meta["reverse_source"])),
                append_source_eos=bool(int(meta["append_source_eos"])),
                precision=meta["precision"],
            )
            progress = TrainProgress(epoch=float(meta["epoch"]),
                                     step=int(meta["step"]),
                                     lr=float(meta["lr"]))
            src_vocab = Vocabulary(meta["src_vocab_tokens"].split(" "))
            tgt_vocab = Vocabulary(meta["tgt_vocab_tokens"].split(" "))
        except KeyError as exc:
            raise FormatError(f"{path}: missing metadata key {exc}") from None
        if src_vocab.content_hash() != meta["src_vocab_hash"]:
            raise FormatError(f"{path}: source vocabulary hash mismatch")
        if tgt_vocab.content_hash() != meta["tgt_vocab_hash"]:
            raise FormatError(f"{path}: target vocabulary hash mismatch")

        reference = build_model(config, src_vocab, tgt_vocab)
        itemsize = 8 if config.precision == "double" else 4
        typecode = "d" if config.precision == "double" else "f"
        params = []
        for name, expected in named_parameters(reference):
            rank, rows, cols = struct.unpack(
                "<III", _read_exact(fh, 12, f"{name} header"))
            if rank != 2:
                raise FormatError(f"{path}: tensor {name} has rank {rank}")
            if (rows, cols) != expected.shape():
                raise FormatError(
                    f"{path}: tensor {name} is {rows}x{cols}, "
                    f"config implies {expected.rows}x{expected.cols}")
            payload = _read_exact(fh, rows * cols * itemsize, name)
            buf = array(typecode)
            buf.frombytes(payload)
            if sys.byteorder == "big":
                buf.byteswap()
            params.append((name, Matrix2D(rows, cols, buf, config.precision)))
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after last tensor")
    return Checkpoint(version, config, progress, src_vocab, tgt_vocab,
                      meta["src_vocab_hash"], meta["tgt_vocab_hash"], params)


def load_model(path) -> Seq2SeqModel:
    return load_checkpoint(path).build_model()
