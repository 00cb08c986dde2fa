"""Tensor file formats and fit-result serialization.

Binary format (bitwise round trip): magic ``MLSM1``, format byte, value-kind
byte, three little-endian uint32 dims, then float64 payload in C order over
(d1, d2, d3).  Text format: a header line ``MLSM1 triples n n T`` followed by
``i,j,t,value`` lines with 1-based indices; unlisted entries are zero.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .tensor import Tensor3

MAGIC = b"MLSM1"
_FORMAT_BINARY = 1
_KIND_FLOAT64 = 0


def write_tensor(path: str | Path, X: Tensor3, fmt: str = "binary") -> None:
    path = Path(path)
    if fmt == "binary":
        d1, d2, d3 = X.dims
        header = MAGIC + struct.pack("<BBIII", _FORMAT_BINARY, _KIND_FLOAT64, d1, d2, d3)
        payload = np.ascontiguousarray(X.values, dtype="<f8").tobytes()
        path.write_bytes(header + payload)
    elif fmt == "triples":
        d1, d2, d3 = X.dims
        lines = [f"MLSM1 triples {d1} {d2} {d3}"]
        for i in range(d1):
            for j in range(d2):
                for t in range(d3):
                    v = X.values[i, j, t]
                    if v != 0.0:
                        lines.append(f"{i + 1},{j + 1},{t + 1},{float(v)!r}")
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown tensor format {fmt!r}")


def read_tensor(path: str | Path, fmt: str | None = None) -> Tensor3:
    path = Path(path)
    if fmt is None:
        head = path.open("rb").read(len(MAGIC) + 8)
        fmt = "triples" if head.startswith(MAGIC + b" triples") else "binary"
    if fmt == "binary":
        raw = path.read_bytes()
        if len(raw) < len(MAGIC) + 14 or raw[: len(MAGIC)] != MAGIC:
            raise ParseError(f"{path}: bad or missing magic header")
        fmt_b, kind, d1, d2, d3 = struct.unpack_from("<BBIII", raw, len(MAGIC))
        if fmt_b != _FORMAT_BINARY or kind != _KIND_FLOAT64:
            raise ParseError(f"{path}: unsupported format/kind bytes ({fmt_b}, {kind})")
        expected = len(MAGIC) + 14 + 8 * d1 * d2 * d3
        if len(raw) != expected:
            raise ParseError(f"{path}: payload length {len(raw)} != expected {expected}")
        vals = np.frombuffer(raw[len(MAGIC) + 14:], dtype="<f8").reshape(d1, d2, d3)
        return Tensor3(vals)
    if fmt == "triples":
        lines = path.read_text().splitlines()
        if not lines or not lines[0].startswith("MLSM1 triples"):
            raise ParseError(f"{path}: missing triples header", line=1)
        parts = lines[0].split()
        if len(parts) != 5:
            raise ParseError(f"{path}: malformed header {lines[0]!r}", line=1)
        try:
            d1, d2, d3 = (int(p) for p in parts[2:])
        except ValueError:
            raise ParseError(f"{path}: non-integer dims in header", line=1)
        vals = np.zeros((d1, d2, d3))
        for ln, line in enumerate(lines[1:], start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 4:
                raise ParseError(f"{path}: expected 'i,j,t,value'", line=ln)
            try:
                i, j, t = (int(x) for x in fields[:3])
                v = float(fields[3])
            except ValueError:
                raise ParseError(f"{path}: malformed entry {line!r}", line=ln)
            if not (1 <= i <= d1 and 1 <= j <= d2 and 1 <= t <= d3):
                raise ParseError(f"{path}: index ({i},{j},{t}) out of range", line=ln)
            vals[i - 1, j - 1, t - 1] = v
        return Tensor3(vals)
    raise ValueError(f"unknown tensor format {fmt!r}")


def write_matrix_csv(path: str | Path, M: np.ndarray, header: str = "") -> None:
    np.savetxt(path, np.atleast_2d(M), delimiter=",", fmt="%.17g",
               header=header, comments="")


def save_fit(fit, outdir: str | Path) -> None:
    """Serialize a FitResult as CSV matrices plus a JSON diagnostics file."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(outdir / "theta.csv", fit.Theta_hat)
    write_matrix_csv(outdir / "phi.csv", fit.Phi_hat)
    from .tensor import unfold

    write_matrix_csv(outdir / "core_mode1.csv", unfold(fit.core, 1))
    write_matrix_csv(outdir / "v1c.csv", fit.V1c)
    write_matrix_csv(outdir / "v2c.csv", fit.V2c)
    diag = {
        "S1_hat": list(fit.S1_hat),
        "S2_hat": list(fit.S2_hat),
        "n": fit.n,
        "T": fit.T,
        "k1": fit.k1,
        "k2": fit.k2,
        "family": fit.family.to_dict(),
        "config": fit.config.to_dict(),
        "diagnostics": {k: v for k, v in fit.diagnostics.items() if not k.startswith("_")},
    }
    (outdir / "fit.json").write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n")
