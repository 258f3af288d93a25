"""On-disk formats: signal files, affine-map JSON and spectrum CSV.

Signal file = JSON header ``<stem>.json`` plus a data file holding the grid
values in row-major (C) order, either ``<stem>.bin`` (little-endian float64
pairs re, im; 16 bytes per node, no header) or ``<stem>.csv`` (header line
``re,im`` then one ``%.17g,%.17g`` line per node). See README for the schema.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from pwkit.affine import InjectiveDecomposition
from pwkit.errors import DomainError
from pwkit.maps import AffineMap
from pwkit.pwcore import BandSupport, CatalogSpec, PWSignal, SpectralDensity

SIGNAL_FORMAT = "pwkit-signal"
SIGNAL_VERSION = 1
ENCODINGS = {"binary": (".bin", "complex128-le"), "csv": (".csv", "csv-re-im")}


def dumps(obj) -> str:
    """Canonical JSON used for every artifact (sorted keys, stable floats)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_signal(stem, signal: PWSignal, encoding: str = "binary", per_unit=None) -> tuple:
    """Write ``signal`` as ``<stem>.json`` plus its data file; returns both paths."""
    if encoding not in ENCODINGS:
        raise DomainError(f"unknown encoding {encoding!r}")
    stem = Path(stem)
    suffix, tag = ENCODINGS[encoding]
    density = signal.spectral_rep(per_unit) if per_unit else signal.spectral_rep()
    data_path = stem.with_suffix(suffix)
    values = np.ascontiguousarray(density.values).ravel(order="C")
    if encoding == "binary":
        data_path.write_bytes(values.astype("<c16").tobytes())
    else:
        lines = ["re,im"] + [f"{v.real:.17g},{v.imag:.17g}" for v in values]
        data_path.write_text("\n".join(lines) + "\n")
    cat = signal.catalog
    header = {
        "format": SIGNAL_FORMAT,
        "version": SIGNAL_VERSION,
        "dim": signal.dim,
        "rep": "catalog" if cat is not None else "spectral",
        "catalog": None if cat is None else {"kind": cat.kind, "j": cat.j, "shift": list(cat.shift)},
        "support": {
            "box": [list(p) for p in density.support.box],
            "radius_bound": density.support.radius_bound,
            "ball_radius": density.support.ball_radius,
        },
        "grid": {"counts": list(density.counts), "order": "C"},
        "data": {"file": data_path.name, "encoding": tag, "nodes": int(values.size)},
    }
    header_path = stem.with_suffix(".json")
    header_path.write_text(dumps(header))
    return header_path, data_path


def read_signal(header_path) -> PWSignal:
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    if header.get("format") != SIGNAL_FORMAT:
        raise DomainError(f"{header_path} is not a {SIGNAL_FORMAT} header")
    if header.get("version") != SIGNAL_VERSION:
        raise DomainError(f"unsupported signal file version {header.get('version')}")
    counts = tuple(header["grid"]["counts"])
    data = header["data"]
    data_path = header_path.parent / data["file"]
    if data["encoding"] == "complex128-le":
        values = np.frombuffer(data_path.read_bytes(), dtype="<c16")
    elif data["encoding"] == "csv-re-im":
        raw = np.loadtxt(data_path, delimiter=",", skiprows=1, ndmin=2)
        values = raw[:, 0] + 1j * raw[:, 1]
    else:
        raise DomainError(f"unknown data encoding {data['encoding']!r}")
    if values.size != int(np.prod(counts)):
        raise DomainError("data file size does not match the grid counts")
    sup = header["support"]
    support = BandSupport(tuple(tuple(p) for p in sup["box"]), radius_bound=sup.get("radius_bound"))
    density = SpectralDensity(support, values.reshape(counts))
    cat = header.get("catalog")
    spec = None
    if cat is not None:
        spec = CatalogSpec(cat["kind"], header["dim"], cat.get("j"), tuple(cat.get("shift", ())))
    return PWSignal(header["dim"], spec, density)


def write_affine(path, amap: AffineMap):
    Path(path).write_text(dumps({"format": "pwkit-affine", "version": 1, **amap.to_dict()}))


def read_affine(path) -> AffineMap:
    return AffineMap.from_dict(json.loads(Path(path).read_text()))


def write_decomposition(path, dec: InjectiveDecomposition):
    Path(path).write_text(dumps({"format": "pwkit-decomposition", "version": 1, **dec.to_dict()}))


def format_csv(header, rows, comments=()) -> str:
    """CSV text with ``# key=value`` comment lines first; floats as ``%.17g``."""
    out = [f"# {c}" for c in comments]
    out.append(",".join(header))
    for row in rows:
        out.append(",".join(_cell(v) for v in row))
    return "\n".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def spectrum_csv(spectrum, comments=()) -> str:
    n = spectrum.dim
    header = [f"u_{s + 1}" for s in range(n)] + ["power"]
    return format_csv(header, spectrum.to_csv_rows().tolist(), comments)
