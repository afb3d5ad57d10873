"""Basis files and JSON reports.

A basis file stores every kernel twice: as ``float.hex`` strings, which are
what gets read back (bit-exact), and as decimals for people and plotting
tools.  Writes go to a temporary file in the target directory followed by
``os.replace``, so readers never see a partial file.
"""
import json
import os
import tempfile
from importlib import resources

import numpy as np

from .basis import MultiScaleBasis, Provenance
from .errors import FormatError
from .scales import ScaleSet
from .solve import SolveConfig

FORMAT = "disco-basis"
VERSION = "1"
SUPPORTED_VERSIONS = {"1"}


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text_atomic(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    write_text_atomic(path, dumps(obj))


def basis_to_dict(basis):
    ss = basis.scale_set
    slots = []
    for s, (funcs, prov) in enumerate(zip(basis.functions, basis.provenance)):
        flat = funcs.reshape(funcs.shape[0], -1)
        slots.append({
            "index": s,
            "scale": str(ss.scales[s]),
            "size": int(funcs.shape[-1]),
            "integer_ratio": bool(ss.integer_ratio[s]),
            "provenance": prov.value,
            "hex": [[float(v).hex() for v in row] for row in flat],
            "values": [[float(v) for v in row] for row in flat],
        })
    return {
        "format": FORMAT,
        "version": VERSION,
        "label": basis.label,
        "num_functions": basis.num_functions,
        "scale_set": ss.to_dict(),
        "slots": slots,
        "objectives": {str(k): [float(x).hex() for x in np.ravel(v)] for k, v in basis.objectives.items()},
        "config": basis.config.to_dict() if basis.config is not None else None,
    }


def _require(data, key, kind):
    if key not in data:
        raise FormatError(f"basis file is missing {key!r}")
    if not isinstance(data[key], kind):
        raise FormatError(f"basis file field {key!r} has the wrong type")
    return data[key]


def basis_from_dict(data):
    if not isinstance(data, dict) or data.get("format") != FORMAT:
        raise FormatError("not a basis file")
    if data.get("version") not in SUPPORTED_VERSIONS:
        raise FormatError(f"unsupported basis file version {data.get('version')!r}")
    try:
        ss = ScaleSet.from_dict(_require(data, "scale_set", dict))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad scale set: {exc}") from None
    J = _require(data, "num_functions", int)
    slots = _require(data, "slots", list)
    if J != ss.smallest_size ** 2:
        raise FormatError(f"num_functions {J} != smallest size squared ({ss.smallest_size ** 2})")
    if len(slots) != len(ss):
        raise FormatError(f"{len(slots)} slots for {len(ss)} scales")
    functions, provenance = [], []
    for s, slot in enumerate(slots):
        size = _require(slot, "size", int)
        if size != ss.kernel_sizes[s]:
            raise FormatError(f"slot {s} size {size} != expected {ss.kernel_sizes[s]}")
        rows = _require(slot, "hex", list)
        if len(rows) != J or any(not isinstance(r, list) or len(r) != size * size for r in rows):
            raise FormatError(f"slot {s} array lengths do not match {J} functions of {size}x{size}")
        try:
            arr = np.array([[float.fromhex(v) for v in row] for row in rows], dtype=np.float64)
            provenance.append(Provenance(_require(slot, "provenance", str)))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"slot {s}: {exc}") from None
        functions.append(arr.reshape(J, size, size))
    cfg = data.get("config")
    try:
        cfg = SolveConfig.from_dict(cfg) if cfg is not None else None
        objectives = {int(k): np.array([float.fromhex(x) for x in v])
                      for k, v in data.get("objectives", {}).items()}
        return MultiScaleBasis(functions, ss, provenance, config=cfg, objectives=objectives,
                               label=data.get("label", "disco"))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"invalid basis file: {exc}") from None


def save_basis(path, basis):
    write_json(path, basis_to_dict(basis))


def load_basis(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return basis_from_dict(data)


def load_schema(name):
    """JSON schema shipped with the package, e.g. ``"basis"`` or ``"equivariance"``."""
    text = resources.files("disco.schemas").joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
