"""Data files, run manifests, JSON summaries and chain files.

File formats
------------
data file
    A JSON object of scalars and integer/real arrays.
manifest (``<model>.toml``)
    Every resolved setting of a run, one table per CLI group, so that
    ``--from-toml`` repeats the run exactly.
summary (``<model>.json``)
    ``posterior_attrs``, ``sample_stats``, ``posterior`` and ``prior``
    groups.  Non-finite numbers are written as the strings ``"-inf"``,
    ``"inf"`` and ``"nan"`` so that the file stays strict JSON.
chains (``<chain_dir>/<model>_dead-birth.txt``, ``<model>_equal_weights.txt``)
    Whitespace-separated rows in 17-significant-digit scientific notation.
    Dead points: params, derived values, log-likelihood, birth contour, in
    eviction order.  Equal weights: params and log-likelihood.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import DataError, ManifestError

__all__ = [
    "load_data",
    "RunManifest",
    "write_manifest",
    "read_manifest",
    "summary_document",
    "write_summary",
    "write_chains",
    "read_chain",
    "feedback",
    "chain_paths",
]

CHAIN_DIR_ENV = "NS_CHAIN_DIR"
FIXED_CLOCK_ENV = "NS_FIXED_CLOCK"


# ---------------------------------------------------------------------------
# data files

def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool))


_CHECKS = {
    "int": _is_int,
    "real": _is_real,
    "int[]": lambda v: isinstance(v, list) and all(_is_int(x) for x in v),
    "real[]": lambda v: isinstance(v, list) and all(_is_real(x) for x in v),
}


def load_data(path, schema: Optional[dict] = None) -> dict:
    """Read a JSON key-value data file.

    ``schema`` maps keys to ``"int"``, ``"real"``, ``"int[]"`` or ``"real[]"``;
    a trailing ``?`` marks the key optional.  Arrays come back as numpy
    arrays, scalars unchanged.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from None
    if not text.strip():
        raise DataError(f"{path}: empty data file")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno <= len(text.splitlines()) else ""
        raise DataError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}: {line.strip()!r}") from None
    if not isinstance(raw, dict):
        raise DataError(f"{path}: top level must be an object of named entries")

    for key, kind in (schema or {}).items():
        optional = kind.endswith("?")
        kind = kind.rstrip("?")
        if key not in raw:
            if optional:
                continue
            raise DataError(f"{path}: missing required entry {key!r}")
        if not _CHECKS[kind](raw[key]):
            raise DataError(f"{path}: entry {key!r} should be {kind}, got {raw[key]!r}")

    out = {}
    for key, value in raw.items():
        if isinstance(value, list):
            kind = (schema or {}).get(key, "").rstrip("?")
            out[key] = np.asarray(value, dtype=np.int64 if kind == "int[]" else None)
        else:
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# manifest

@dataclass(frozen=True)
class RunManifest:
    """Fully resolved settings of one run."""

    model: str
    nlive: int
    num_repeats: int
    precision: float
    seed: int
    model_seed: int
    feedback: bool = True
    write: bool = True
    derived: bool = True
    data_file: Optional[str] = None
    json_file: str = "model.json"
    chain_dir: str = "chains"
    from_toml: Optional[str] = None
    overridden: tuple = ()

    @property
    def toml_file(self) -> str:
        return str(Path(self.json_file).with_suffix(".toml"))


# (table, toml key) -> manifest field
_LAYOUT = {
    ("", "model"): "model",
    ("sampler", "nlive"): "nlive",
    ("sampler", "num_repeats"): "num_repeats",
    ("sampler", "precision"): "precision",
    ("sampler", "seed"): "seed",
    ("sampler", "feedback"): "feedback",
    ("sampler", "write"): "write",
    ("sampler", "derived"): "derived",
    ("data", "file"): "data_file",
    ("random", "seed"): "model_seed",
    ("output", "json_file"): "json_file",
    ("output", "chain_dir"): "chain_dir",
    ("meta", "from_toml"): "from_toml",
    ("meta", "overridden"): "overridden",
}
_TABLES = ("sampler", "data", "random", "output", "meta")


def _atomic_write(path, data: bytes) -> None:
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


def manifest_to_toml(m: RunManifest) -> str:
    doc = {"model": m.model}
    for t in _TABLES:
        doc[t] = {}
    for (table, key), attr in _LAYOUT.items():
        if not table:
            continue
        value = getattr(m, attr)
        if value is None or value == ():
            continue
        doc[table][key] = list(value) if isinstance(value, tuple) else value
    if not doc["meta"]:
        del doc["meta"]
    return tomli_w.dumps(doc)


def write_manifest(manifest: RunManifest, path) -> None:
    _atomic_write(path, manifest_to_toml(manifest).encode())


def read_manifest(path) -> RunManifest:
    """Parse a manifest; unknown tables or keys are an error."""
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError(f"{path}: {exc}") from None
    values, unknown = {}, []
    for k, v in doc.items():
        if isinstance(v, dict):
            if k not in _TABLES:
                unknown.append(k)
                continue
            for kk, vv in v.items():
                attr = _LAYOUT.get((k, kk))
                if attr is None:
                    unknown.append(f"{k}.{kk}")
                else:
                    values[attr] = vv
        else:
            attr = _LAYOUT.get(("", k))
            if attr is None:
                unknown.append(k)
            else:
                values[attr] = v
    if unknown:
        raise ManifestError(f"{path}: unknown manifest keys: {', '.join(sorted(unknown))}")
    missing = [name for name in ("model", "nlive", "num_repeats", "precision", "seed", "model_seed")
               if name not in values]
    if missing:
        raise ManifestError(f"{path}: missing manifest keys: {', '.join(missing)}")
    if "overridden" in values:
        values["overridden"] = tuple(values["overridden"])
    try:
        return RunManifest(**values)
    except TypeError as exc:
        raise ManifestError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# JSON summary

def _clean(v):
    """Convert to strict-JSON-safe builtins."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in (v.tolist() if isinstance(v, np.ndarray) else v)]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _created_at() -> str:
    fixed = os.environ.get(FIXED_CLOCK_ENV)
    return fixed if fixed else time.asctime()


def summary_document(result, manifest: RunManifest, created_at: Optional[str] = None) -> dict:
    build = (f"slicenest {__version__}; Python {sys.version.split()[0]}; "
             f"numpy {np.__version__}")
    attrs = {
        "name": f"{manifest.model}_model",
        "created_at": created_at or _created_at(),
        "inference_library": "slicenest",
        "inference_library_version": __version__,
        "creation_library": "slicenest",
        "creation_library_version": __version__,
        "creation_library_language": "Python",
        "slicenest": {
            "model name": manifest.model,
            "data file": manifest.data_file or "",
            "toml file": manifest.toml_file,
            "build info": build,
            "seed": manifest.model_seed,
        },
        "sampler": {
            "nlive": manifest.nlive,
            "num_repeats": manifest.num_repeats,
            "precision_criterion": manifest.precision,
            "seed": manifest.seed,
        },
    }
    stats = {
        "test": {
            "metadata": "Kolmogorov-Smirnov test that insertion indexes of new live points are uniform",
            "p-value": result.ks_p,
            "batch size / n_live": result.insertion.batch_ratio,
            "batch minimum p-value (Sidak corrected)": result.insertion.per_batch_min_p,
        },
        "ess": {
            "metadata": "Kish effective sample size of the weighted dead points",
            "n": int(round(result.ess)),
        },
        "evidence": {
            "metadata": "Natural log of the evidence and its standard error",
            "log evidence": result.log_z,
            "error log evidence": result.log_z_err,
        },
        "neval": {
            "metadata": "Number of log-likelihood evaluations",
            "neval": result.n_eval,
        },
        "information": {
            "metadata": "KL divergence, posterior mean log-likelihood, model dimensionality",
            "D_KL": result.stats["d_kl"],
            "logL_P": result.stats["log_l_p"],
            "d_G": result.stats["d_g"],
        },
        "warnings": list(result.warnings),
    }
    return _clean({
        "posterior_attrs": attrs,
        "sample_stats": stats,
        "posterior": result.posterior_samples,
        "prior": result.prior_samples,
    })


def write_summary(result, manifest: RunManifest, path, created_at: Optional[str] = None) -> None:
    if not manifest.write:
        return
    doc = summary_document(result, manifest, created_at)
    text = json.dumps(doc, indent=4, allow_nan=False) + "\n"
    _atomic_write(path, text.encode())


# ---------------------------------------------------------------------------
# chain files

def chain_paths(chain_dir, model_name) -> dict:
    d = Path(chain_dir)
    return {"dead": d / f"{model_name}_dead-birth.txt",
            "equal_weights": d / f"{model_name}_equal_weights.txt"}


def _rows(matrix) -> bytes:
    return "".join(" ".join(format(float(v), ".16e") for v in row) + "\n"
                   for row in matrix).encode()


def write_chains(result, chain_dir, model_name) -> dict:
    """Write the dead-point and equal-weight files; returns their paths."""
    paths = chain_paths(chain_dir, model_name)
    n = len(result.dead)
    cols = [result.params.reshape(n, -1)]
    if result.derived_names:
        cols.append(result.derived)
    cols += [result.log_like[:, None], result.birth_log_like[:, None]]
    _atomic_write(paths["dead"], _rows(np.hstack(cols)))

    post = result.posterior_samples
    eq = np.column_stack([post[name] for name in result.param_names] + [post["log_likelihood"]])
    _atomic_write(paths["equal_weights"], _rows(eq))
    return paths


def read_chain(path) -> np.ndarray:
    rows = [[float(tok) for tok in line.split()] for line in Path(path).read_text().splitlines()
            if line.strip()]
    return np.array(rows, dtype=float)


# ---------------------------------------------------------------------------
# screen output

def feedback(channel, result, manifest: Optional[RunManifest] = None, enabled: bool = True,
             paths: Optional[dict] = None) -> None:
    """End-of-run block: evidence, insertion-test p-value, ESS, evaluations
    and where the output went."""
    if not enabled:
        return
    from .diagnostics import format_stats

    bar = "_" * 52
    lines = [f" {bar}", f"| ndead  = {len(result.dead):>12d}",
             f"| log(Z) = {result.log_z:>18.5f} +/- {result.log_z_err:>10.5f}", f"|{bar}", "",
             f"| Finished slicenest {__version__} ({result.model_name})"]
    if paths:
        for label, p in paths.items():
            lines.append(f"| {label} at {p}")
    lines += [
        "|",
        f"| Evidence log(Z) = {result.log_z:.6g} +/- {result.log_z_err:.6g}",
        f"| Insertion-index test p-value = {result.ks_p:.6g}",
        f"| Effective number of samples = {int(round(result.ess))}",
        f"| Likelihood evaluations = {result.n_eval}",
        "|",
    ]
    lines += ["| " + s for s in format_stats(result.log_z, result.stats).splitlines()]
    for w in result.warnings:
        lines.append(f"| WARNING: {w}")
    print("\n".join(lines), file=channel)
