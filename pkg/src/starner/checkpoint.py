"""Single-file JSON checkpoints that round-trip bit-exactly.

A checkpoint holds the format version, the full configuration, the three
vocabularies, and every parameter array as base64-encoded little-endian
64-bit floats keyed by parameter name.  Keys are sorted and the encoding is
canonical, so save -> load -> save reproduces identical bytes.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .config import Config
from .encoder import Vocabulary
from .model import NestedNerModel

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """A checkpoint file is missing, malformed, or incompatible."""


def _encode_array(array: np.ndarray) -> dict:
    data = np.ascontiguousarray(array, dtype="<f8")
    return {
        "shape": list(array.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_array(payload: dict, name: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload["data"], validate=True)
        array = np.frombuffer(raw, dtype="<f8").reshape(payload["shape"])
    except (KeyError, ValueError, TypeError) as err:
        raise CheckpointError(f"parameter {name!r} is malformed: {err}") from err
    return array.astype(np.float64)


def checkpoint_dict(model: NestedNerModel) -> dict:
    return {
        "version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "vocab": {
            "word": model.word_vocab.to_dict(),
            "char": model.char_vocab.to_dict(),
            "pos": model.pos_vocab.to_dict(),
        },
        "parameters": {
            name: _encode_array(value)
            for name, value in model.store.state_dict().items()
        },
    }


def save_checkpoint(path: str, model: NestedNerModel) -> None:
    payload = json.dumps(checkpoint_dict(model), sort_keys=True,
                         separators=(",", ":"))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(payload)
        handle.write("\n")


def load_checkpoint(path: str) -> NestedNerModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint: {err}") from err
    except json.JSONDecodeError as err:
        raise CheckpointError(f"checkpoint is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise CheckpointError("checkpoint must be a JSON object")
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version!r} "
            f"(expected {FORMAT_VERSION})"
        )
    for fieldname in ("config", "vocab", "parameters"):
        if fieldname not in data:
            raise CheckpointError(f"checkpoint is missing field {fieldname!r}")
    try:
        config = Config.from_dict(data["config"])
    except ValueError as err:
        raise CheckpointError(f"checkpoint config is invalid: {err}") from err
    try:
        vocabs = {
            kind: Vocabulary.from_dict(data["vocab"][kind])
            for kind in ("word", "char", "pos")
        }
    except KeyError as err:
        raise CheckpointError(f"checkpoint is missing vocabulary {err}") from err
    model = NestedNerModel(
        config,
        word_vocab=vocabs["word"],
        char_vocab=vocabs["char"],
        pos_vocab=vocabs["pos"],
    )
    state = {
        name: _decode_array(payload, name)
        for name, payload in data["parameters"].items()
    }
    try:
        model.store.load_state_dict(state)
    except ValueError as err:
        raise CheckpointError(str(err)) from err
    return model
