"""JSON/CSV serialization with bit-stable float printing.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.  Files are UTF-8 with LF line endings.
"""
import csv
import io as _io
import json
import math
import os

import numpy as np

from .channels import (ancilla_discard_channel, block_dephasing_channel, block_measure_prepare_channel,
                       classical_channel, cq_channel, depolarizing_channel, identity_channel,
                       kraus_channel, measurement_channel, random_unitary_channel, unitary_channel)
from .errors import DimensionError, ValidationError


def fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    if s == "-0":
        s = "0"
    return s


# --------------------------------------------------------------------------
# Operators.
# --------------------------------------------------------------------------

def operator_to_doc(a):
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("only matrices serialize as operators", module="cli")
    re = a.real.ravel().tolist()
    im = (a.imag if np.iscomplexobj(a) else np.zeros_like(a, dtype=float)).ravel().tolist()
    if a.shape[0] == a.shape[1]:
        return {"dim": a.shape[0], "re": re, "im": im}
    return {"rows": a.shape[0], "cols": a.shape[1], "re": re, "im": im}


def operator_from_doc(doc, name="operator"):
    if isinstance(doc, list):
        a = np.asarray(doc, dtype=complex)
        if a.ndim != 2:
            raise DimensionError(f"{name}: nested list must be a matrix", module="cli")
        return a
    if "dim" in doc:
        rows = cols = int(doc["dim"])
    else:
        rows, cols = int(doc["rows"]), int(doc["cols"])
    re = np.asarray(doc["re"], dtype=float).ravel()
    im = np.asarray(doc.get("im", np.zeros(re.size)), dtype=float).ravel()
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionError(f"{name}: expected {rows * cols} entries in re and im, got {re.size} and {im.size}",
                             module="cli")
    return (re + 1j * im).reshape(rows, cols)


def operators_from_doc(docs, name):
    return [operator_from_doc(d, f"{name}[{i}]") for i, d in enumerate(docs)]


# --------------------------------------------------------------------------
# Channels.
# --------------------------------------------------------------------------

def channel_from_doc(doc):
    kind = doc.get("kind")
    if kind == "kraus":
        return kraus_channel(np.stack(operators_from_doc(doc["ops"], "ops")))
    if kind == "cq":
        return cq_channel(operators_from_doc(doc["states"], "states"))
    if kind == "measurement":
        return measurement_channel(operators_from_doc(doc["povm"], "povm"))
    if kind == "random_unitary":
        return random_unitary_channel(operators_from_doc(doc["unitaries"], "unitaries"), doc.get("weights"))
    if kind == "block_dephasing":
        return block_dephasing_channel(operators_from_doc(doc["projectors"], "projectors"))
    if kind == "block_measure_prepare":
        return block_measure_prepare_channel(operators_from_doc(doc["projectors"], "projectors"))
    if kind == "ancilla_discard":
        return ancilla_discard_channel(int(doc["dim1"]), int(doc["dim0"]))
    if kind == "unitary":
        return unitary_channel(operator_from_doc(doc["unitary"], "unitary"))
    if kind == "identity":
        return identity_channel(int(doc["dim"]))
    if kind == "depolarizing":
        return depolarizing_channel(int(doc["dim"]))
    if kind == "classical":
        return classical_channel(np.asarray(doc["transition"], dtype=float))
    raise ValidationError(f"unknown channel kind {kind!r}", module="channels")


# --------------------------------------------------------------------------
# Emitters.
# --------------------------------------------------------------------------

def _to_plain(obj):
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and np.iscomplexobj(obj):
            return operator_to_doc(obj)
        if np.iscomplexobj(obj):
            if np.all(obj.imag == 0):
                obj = obj.real
            else:
                return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _dump(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(k, ensure_ascii=False) + ": ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(fmt_float(v) if isinstance(v, float) else str(v) for v in obj) + "]")
        else:
            out.append("[\n")
            for i, v in enumerate(obj):
                out.append(pad)
                _dump(v, indent, level + 1, out)
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(doc, indent=2):
    out = []
    _dump(_to_plain(doc), indent, 0, out)
    return "".join(out) + "\n"


def emit_json(doc, path):
    _write_text(path, dumps_json(doc))


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return fmt_float(v) if math.isfinite(v) else ""
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def dumps_csv(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        if len(row) != len(header):
            raise ValidationError(f"CSV row has {len(row)} cells, header has {len(header)}", module="cli")
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def emit_csv(table, path):
    """``table`` is ``(header, rows)``; an empty ``rows`` writes only the header."""
    header, rows = table
    _write_text(path, dumps_csv(header, rows))


def _write_text(path, text):
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_csv(path):
    """``(header, rows)`` with numeric cells parsed as floats."""
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = []
        for row in r:
            parsed = []
            for cell in row:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(parsed)
    return header, rows
