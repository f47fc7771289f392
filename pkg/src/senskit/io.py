"""CStack v1 files and PGM image export.

A stack ``<name>`` is a JSON sidecar ``<name>.json``::

    {"version": 1, "dims": [...], "channels": Q, "domain": "kspace" | "image"}

plus ``<name>.craw`` holding channel-major, row-major, interleaved
little-endian float32 ``(re, im)`` pairs.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import StackFormatError
from .grid import ComplexImageStack

CSTACK_VERSION = 1
_RAW_DTYPE = np.dtype("<c8")


def stack_paths(path: str | os.PathLike) -> tuple[Path, Path]:
    """Sidecar and raw paths for a stack name (a trailing ``.json``/``.craw`` is dropped)."""
    p = Path(path)
    if p.suffix in (".json", ".craw"):
        p = p.with_suffix("")
    return p.with_name(p.name + ".json"), p.with_name(p.name + ".craw")


def save_stack(stack: ComplexImageStack, path: str | os.PathLike) -> None:
    sidecar, raw = stack_paths(path)
    meta = {
        "version": CSTACK_VERSION,
        "dims": list(stack.dims),
        "channels": stack.channels,
        "domain": stack.domain,
    }
    try:
        sidecar.parent.mkdir(parents=True, exist_ok=True)
        sidecar.write_text(json.dumps(meta, indent=1) + "\n")
        raw.write_bytes(np.ascontiguousarray(stack.data, dtype=_RAW_DTYPE).tobytes())
    except OSError as exc:
        raise StackFormatError(f"cannot write stack {path}: {exc}") from exc


def load_stack(path: str | os.PathLike) -> ComplexImageStack:
    sidecar, raw = stack_paths(path)
    for p in (sidecar, raw):
        if not p.is_file():
            raise StackFormatError(f"missing stack file {p}")
    try:
        meta = json.loads(sidecar.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StackFormatError(f"unreadable sidecar {sidecar}: {exc}") from exc

    if meta.get("version") != CSTACK_VERSION:
        raise StackFormatError(f"unsupported CStack version {meta.get('version')!r}")
    try:
        dims = [int(d) for d in meta["dims"]]
        channels = int(meta["channels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StackFormatError(f"malformed sidecar {sidecar}: {exc}") from exc
    domain = meta.get("domain", "kspace")
    if domain not in ("kspace", "image"):
        raise StackFormatError(f"unknown domain {domain!r}")

    expected = channels * int(np.prod(dims)) * _RAW_DTYPE.itemsize
    payload = raw.read_bytes()
    if len(payload) != expected:
        raise StackFormatError(f"{raw} holds {len(payload)} bytes, sidecar implies {expected}")
    data = np.frombuffer(payload, dtype=_RAW_DTYPE).reshape([channels] + dims)
    return ComplexImageStack(data, domain)


def write_pgm(path: str | os.PathLike, image: np.ndarray) -> None:
    """Binary 16-bit PGM (P5) of a non-negative 2-D image, scaled so its max maps to 65535."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM export needs a 2-D image")
    peak = img.max() if img.size else 0.0
    scaled = np.zeros(img.shape) if peak <= 0 else np.clip(img / peak, 0.0, 1.0) * 65535.0
    pixels = np.rint(scaled).astype(">u2")
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a 16-bit P5 file written by :func:`write_pgm`."""
    blob = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while blob[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not blob[pos:pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos].decode("ascii"))
    pos += 1
    magic, cols, rows, maxval = tokens
    if magic != "P5" or int(maxval) != 65535:
        raise StackFormatError(f"{path} is not a 16-bit P5 image")
    return np.frombuffer(blob[pos:], dtype=">u2").reshape(int(rows), int(cols))
