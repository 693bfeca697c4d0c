"""Lambda sweeps producing the energy / alpha / beta curves."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import make_lambda_model
from .oracle import grid_ground_energy
from .transforms import heavy_center_transform
from .variational import MinimizeOptions, Variant, quiet_line_search, run_variants

FORMAT_VERSION = "nomo-lab v1"
COLUMNS = (
    "lambda", "exact", "tf", "tc", "ctc", "rel_unc",
    "tf_alpha", "tf_beta", "tc_alpha", "tc_beta", "exact_alpha", "exact_beta",
    "tf_tcm", "converged",
)
GRID_COLUMN = "grid"
ALL_VARIANTS = ("exact", "tf", "tc", "ctc", "rel-unc")


@dataclass(frozen=True)
class SweepSpec:
    lambda_min: float = 0.0
    lambda_max: float = 5.0
    steps: int = 101
    variants: tuple = ALL_VARIANTS
    grid_check: bool = False

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be smaller than lambda_max")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        for v in self.variants:
            Variant(v)

    def lambdas(self) -> np.ndarray:
        return np.linspace(self.lambda_min, self.lambda_max, self.steps)

    @property
    def columns(self) -> tuple:
        return COLUMNS + ((GRID_COLUMN,) if self.grid_check else ())


def sweep_row(lam: float, spec: SweepSpec, options: MinimizeOptions | None = None) -> dict:
    model = make_lambda_model(lam)
    transform = heavy_center_transform(model)
    results = run_variants(model, transform, spec.variants, options=options)
    row = {c: None for c in spec.columns}
    row["lambda"] = float(lam)
    converged = True
    for variant, res in results.items():
        key = variant.value.replace("-", "_")
        row[key] = res.energy
        converged &= bool(res.converged)
        if variant in (Variant.TF, Variant.TC, Variant.EXACT) and res.marginal is not None:
            row[f"{key}_alpha"] = res.marginal.alpha
            row[f"{key}_beta"] = res.marginal.beta
        if variant is Variant.TF:
            row["tf_tcm"] = res.tcm_expectation
    row["converged"] = converged
    if spec.grid_check:
        row[GRID_COLUMN] = grid_ground_energy(model, transform)
    return row


def _workers() -> int | None:
    raw = os.environ.get("NOMO_LAB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"NOMO_LAB_THREADS must be an integer, got {raw!r}") from None
    return None if n <= 0 else n


def run_sweep(spec: SweepSpec, options: MinimizeOptions | None = None) -> list[dict]:
    """One row per lambda, in lambda order regardless of completion order."""
    lams = spec.lambdas()
    # catch_warnings is process-global; setting the filter before the workers
    # start keeps it in every filter list they save and restore
    with quiet_line_search():
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            return list(pool.map(lambda lam: sweep_row(lam, spec, options), lams))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return format(float(value), ".17g")


def rows_to_csv(rows: list[dict], columns=COLUMNS) -> str:
    buf = io.StringIO()
    buf.write(f"# {FORMAT_VERSION}, columns: {','.join(columns)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def rows_to_json(rows: list[dict], columns=COLUMNS) -> str:
    return json.dumps([{c: row.get(c) for c in columns} for row in rows], indent=2) + "\n"


def read_csv(text: str) -> list[dict]:
    """Parse sweep CSV back into rows (floats, bools and None)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        row = {}
        for key, val in rec.items():
            if val == "":
                row[key] = None
            elif key == "converged":
                row[key] = val == "true"
            else:
                row[key] = float(val)
        out.append(row)
    return out


def ordering_violations(rows: list[dict], slack: float = 1e-12) -> list[str]:
    """Describe every row where exact <= tf <= ctc <= tc fails."""
    chain = ("exact", "tf", "ctc", "tc")
    bad = []
    for row in rows:
        present = [(k, row[k]) for k in chain if row.get(k) is not None]
        for (k1, v1), (k2, v2) in zip(present, present[1:]):
            if not (math.isfinite(v1) and math.isfinite(v2)) or v1 > v2 + slack:
                bad.append(f"lambda={row['lambda']:.6g}: {k1}={v1:.12g} > {k2}={v2:.12g}")
    return bad
