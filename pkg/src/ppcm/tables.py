"""CSV tables with fixed headers, content digests and run manifests."""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .errors import SchemaError

SCHEMAS = {
    "fi_surface": ("g", "epsilon", "f_p", "log10_f_p"),
    "delay_scan": ("delay_fs", "n", "g_eff", "p_hat", "p_exact"),
    "scaling": ("n", "delta_g", "f_extracted_per_event", "f_extracted_per_rep", "s_slope", "delta_p"),
    "theory_curve": ("n", "f_p", "f_p_over_n2", "envelope"),
    "oracle_check": ("n", "g", "theta_i", "theta_f", "epsilon", "kappa", "p_closed", "p_oracle", "abs_err", "pass"),
    "fisher_chain": ("n", "g", "theta_i", "theta_f", "epsilon", "kappa", "f_closed", "f_oracle", "rel_err", "pass"),
    "qfi_report": ("theta_i", "n", "kappa", "qfi_oracle", "generator_variance", "as_printed",
                   "rel_err_generator", "subleading_ratio"),
    "calibrate": ("epsilon", "p_hat", "n_total", "residual"),
    "calibrate_input": ("epsilon", "p_hat", "n_total"),
    "calibrate_summary": ("g_hat", "std_err", "method"),
    "estimate": ("g_hat", "std_err", "method"),
    "records": ("n_d", "n_r"),
    "model": ("quantity", "value"),
    "powerlaw": ("field", "exponent", "prefactor", "r_squared"),
}


def format_cell(v) -> str:
    """Shortest round-trip text for a cell."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return format_cell(v.item())
    return str(v)


def render(rows: Iterable[Mapping], schema: str) -> str:
    cols = SCHEMAS[schema]
    lines = [",".join(cols)]
    for k, row in enumerate(rows):
        keys = tuple(row.keys())
        if set(keys) != set(cols):
            missing = [c for c in cols if c not in row]
            extra = [c for c in keys if c not in cols]
            raise SchemaError(f"row {k} does not match schema {schema!r}: missing {missing}, unexpected {extra}")
        lines.append(",".join(format_cell(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_file(path) -> str:
    return digest_bytes(Path(path).read_bytes())


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_table(rows: Iterable[Mapping], schema: str, destination) -> str:
    """Write ``rows`` as CSV under ``schema``; return the SHA-256 of the file."""
    if schema not in SCHEMAS:
        raise SchemaError(f"unknown schema {schema!r}")
    data = render(rows, schema).encode("utf-8")
    atomic_write(destination, data)
    return digest_bytes(data)


def read_table(path, schema: str) -> list[dict]:
    """Read a CSV written under ``schema`` back into rows of floats."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise SchemaError(f"{path}: empty file")
    header = tuple(h.strip() for h in text[0].split(","))
    want = SCHEMAS[schema]
    if not set(want) <= set(header):
        raise SchemaError(f"{path}: header {header} lacks columns {[c for c in want if c not in header]}")
    rows = []
    for line in text[1:]:
        if not line.strip():
            continue
        cells = dict(zip(header, line.split(",")))
        row = {}
        for c in want:
            try:
                row[c] = float(cells[c])
            except ValueError:
                row[c] = cells[c]
        rows.append(row)
    return rows


def write_manifest(out_dir, command: dict, config: dict, seed: int | None, files: Mapping[str, str],
                   inputs: Mapping[str, str] | None = None) -> Path:
    """Record what was run and the digest of every emitted file."""
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "master_seed": seed,
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": dict(inputs or {}),
        "files": dict(sorted(files.items())),
    }
    path = Path(out_dir) / "manifest.json"
    atomic_write(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return path
