"""Artifact formats: provenance-headed CSV, single-object JSON, and BLT1 binary traces.

BLT1 layout (little-endian): ``b"BLT1"``, ``u32`` metadata length, that many
bytes of UTF-8 JSON, then three arrays ``t``, ``re``, ``im`` each written as a
``u64`` count followed by that many ``f64`` values.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .types import PolylineCurve

MAGIC = b"BLT1"


def provenance(config: dict | None = None) -> dict:
    import numba
    import scipy

    from . import __version__

    return {
        "config": dict(config or {}),
        "versions": {"bridgelab": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "numba": numba.__version__},
    }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, float) and not np.isfinite(v):
        return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def write_json(path, payload: dict, config: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    obj = {**provenance(config), "result": payload}
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(path, header, rows, config: dict | None = None) -> Path:
    """RFC-4180 table preceded by ``# key=value`` provenance lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    prov = _jsonable(provenance(config))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in sorted(prov["config"].items()):
            fh.write(f"# {k}={json.dumps(v)}\n")
        for k, v in sorted(prov["versions"].items()):
            fh.write(f"# version.{k}={v}\n")
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    meta, lines = {}, []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\r\n").partition("=")
                meta[k] = v
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def write_trace(path, curve: PolylineCurve, config: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = json.dumps(_jsonable({**provenance(config), "dt": curve.dt, "seed": curve.seed}),
                      sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(meta)))
        fh.write(meta)
        for arr in (curve.times, curve.re, curve.im):
            a = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(struct.pack("<Q", a.size))
            fh.write(a.tobytes())
    return path


def read_trace(path) -> tuple[PolylineCurve, dict]:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise ValueError(f"{path}: not a BLT1 trace")
    (mlen,) = struct.unpack_from("<I", buf, 4)
    off = 8 + mlen
    meta = json.loads(buf[8:off].decode("utf-8"))
    arrs = []
    for _ in range(3):
        (n,) = struct.unpack_from("<Q", buf, off)
        off += 8
        arrs.append(np.frombuffer(buf, dtype="<f8", count=n, offset=off).copy())
        off += 8 * n
    t, re, im = arrs
    curve = PolylineCurve(points=re + 1j * im, dt=float(meta.get("dt", 1.0)),
                          seed=int(meta.get("seed", 0)), times=t)
    return curve, meta


def write_trace_csv(path, curve: PolylineCurve, config: dict | None = None) -> Path:
    rows = zip(curve.times.tolist(), curve.re.tolist(), curve.im.tolist())
    return write_csv(path, ["t", "re", "im"], rows, config)


def read_trace_csv(path) -> PolylineCurve:
    meta, header, rows = read_csv(path)
    a = np.array(rows, dtype=np.float64)
    dt = json.loads(meta.get("dt", "1.0"))
    seed = json.loads(meta.get("seed", "0"))
    return PolylineCurve(points=a[:, 1] + 1j * a[:, 2], dt=float(dt), seed=int(seed), times=a[:, 0])


def load_curve(path) -> PolylineCurve:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_trace(path)[0]
    return read_trace_csv(path)
