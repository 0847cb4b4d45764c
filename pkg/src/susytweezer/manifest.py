"""Reproducibility manifests.

Every CLI run writes a manifest capturing the full configuration echo,
derived units and grids, the schedule digest, solver constants in effect,
code version, and the execution environment (thread count, FFT backend).
Output files reference the manifest by a content hash computed over the
reproducibility-relevant fields (wall time and timestamps excluded, so a
re-run from the same manifest reproduces the hash along with the
numbers).
"""
from __future__ import annotations

import hashlib
import json
import os
import time

from . import __version__
from . import _fft
from . import extraction, effective, susy, tdse

VOLATILE_FIELDS = ("wall_time_s", "created_unix")


def solver_constants() -> dict:
    """Design constants in effect, echoed for the audit trail."""
    return {
        "leak_threshold": tdse.LEAK_THRESHOLD,
        "attribution_tol": extraction.ATTRIBUTION_TOL,
        "residual_accept": extraction.RESIDUAL_ACCEPT,
        "localization_leak": extraction.LOCALIZATION_LEAK,
        "adiabaticity_pass_ratio": extraction.PASS_RATIO,
        "adiabaticity_warn_ratio": extraction.WARN_RATIO,
        "far_coupling_bound": effective.FAR_COUPLING_BOUND,
        "loewdin_condition_max": effective.LOEWDIN_COND_MAX,
        "susy_quotient_floor": susy.QUOTIENT_FLOOR,
        "susy_core_floor": susy.CORE_FLOOR,
    }


def build_manifest(command: str, config_echo: dict, derived: dict) -> dict:
    m = {
        "schema_version": 1,
        "command": command,
        "code_version": __version__,
        "config": config_echo,
        "derived": derived,
        "constants": solver_constants(),
        "threads": int(os.environ.get("SUSYTWEEZER_THREADS", "1")),
        "fft_backend_3d": _fft.backend_name(3),
        "created_unix": time.time(),
    }
    m["content_hash"] = manifest_hash(m)
    return m


def manifest_hash(manifest: dict) -> str:
    stable = {k: v for k, v in manifest.items()
              if k not in VOLATILE_FIELDS and k != "content_hash"}
    payload = json.dumps(stable, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def finalize(manifest: dict, t_start: float) -> dict:
    manifest["wall_time_s"] = time.time() - t_start
    return manifest
