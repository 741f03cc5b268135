"""Monte Carlo recovery study and the wage-price case study.

Seeding: trial ``k`` of cell ``c`` gets ``SeedSequence(master, spawn_key=(c, k))``,
whose children 0/1/2 drive model generation, simulation and the robustness
replicates respectively.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import json
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ._validation import as_seed_sequence, check_count, child_seed
from .exceptions import IngestionError, TSRobustError
from .model import TimeSeriesData, signature_of
from .robustness import SurrogateConfig, compute_robustness
from .scoring import accuracy_score, normality_diagnostic, normalized_error, obs_equivalent
from .sptime import FitConfig
from .synth import ModelGenConfig, random_model, simulate

logger = logging.getLogger(__name__)

HIST_EDGES = np.arange(0, 105, 5)


@dataclass(frozen=True)
class Cell:
    n: int
    p: int
    r: float
    T: int

    def __post_init__(self):
        check_count(self.n, "n", minimum=1)
        check_count(self.p, "p", minimum=1)
        check_count(self.T, "T", minimum=1)
        if not 0 < self.r <= 1:
            raise ValueError(f"r must lie in (0, 1], got {self.r}")


@dataclass
class ExperimentConfig:
    cells: List[Cell]
    models_per_cell: int = 10
    replicates: int = 100
    alpha: float = 0.95
    seed: Optional[int] = None
    out_dir: Optional[str] = None
    burn_in: Optional[int] = None
    n_jobs: int = 1

    def __post_init__(self):
        self.cells = [c if isinstance(c, Cell) else Cell(**c) if isinstance(c, dict) else Cell(*c) for c in self.cells]
        if not self.cells:
            raise ValueError("experiment grid is empty")
        check_count(self.models_per_cell, "models_per_cell", minimum=1)
        check_count(self.replicates, "replicates", minimum=2)
        FitConfig(p=1, alpha=self.alpha)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "grid" in doc:
            g = doc.pop("grid")
            doc["cells"] = [Cell(n, p, r, T) for n in g["n"] for p in g["p"] for r in g["r"] for T in g["T"]]
        return cls(**doc)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TrialRecord:
    n: int
    p: int
    r: float
    T: int
    trial: int
    correct: bool = False
    identical: bool = False
    raw_correct: bool = False
    robustness: float = 0.0
    zeta: float = math.nan
    n_structures: int = 0
    raw_models: int = 0
    error: Optional[str] = None
    phi: List[float] = field(default_factory=list)


def _rate(flags):
    flags = list(flags)
    return 100.0 * sum(flags) / len(flags) if flags else math.nan


@dataclass
class ExperimentSummary:
    records: List[TrialRecord]
    seed: object = None

    def cells(self):
        seen = []
        for rec in self.records:
            key = (rec.n, rec.p, rec.r, rec.T)
            if key not in seen:
                seen.append(key)
        return seen

    def cell_records(self, cell):
        cell = tuple(asdict(cell).values()) if isinstance(cell, Cell) else tuple(cell)
        return [r for r in self.records if (r.n, r.p, r.r, r.T) == cell]

    def recovery_rate(self, cell=None):
        recs = self.records if cell is None else self.cell_records(cell)
        return _rate(r.correct for r in recs)

    def raw_recovery_rate(self, cell=None):
        recs = self.records if cell is None else self.cell_records(cell)
        return _rate(r.raw_correct for r in recs)

    def conditional_rate(self, lo=-math.inf, hi=math.inf, lo_inclusive=True):
        """Recovery rate over trials whose most-robust R lies in the given band."""
        sel = [r for r in self.records if (r.robustness >= lo if lo_inclusive else r.robustness > lo) and r.robustness <= hi]
        return _rate(r.correct for r in sel), len(sel)

    def pooled_phi(self):
        return np.array([v for r in self.records for v in r.phi])

    def table(self):
        rows = []
        for cell in self.cells():
            rows.append({
                "n": cell[0], "p": cell[1], "r": cell[2], "T": cell[3],
                "trials": len(self.cell_records(cell)),
                "recovery": self.recovery_rate(cell),
                "raw_recovery": self.raw_recovery_rate(cell),
            })
        return rows


def run_trial(cell, trial, alpha, replicates, seed, burn_in=None):
    """Generate a model, simulate it, run the robustness analysis and score the result."""
    rec = TrialRecord(cell.n, cell.p, cell.r, cell.T, trial)
    s_model, s_sim, s_rob = (child_seed(seed, i) for i in range(3))
    try:
        truth = random_model(ModelGenConfig(cell.n, cell.p, cell.r), seed=s_model)
        data = simulate(truth, cell.T, burn_in=burn_in, seed=s_sim)
        report = compute_robustness(data, FitConfig(p=cell.p, alpha=alpha), N=replicates, seed=s_rob)
    except (TSRobustError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    true_sig = signature_of(truth)
    rec.raw_models = len(report.original.models)
    rec.raw_correct = any(obs_equivalent(s, true_sig) for s in report.original.signatures)
    rec.n_structures = len(report.structures)
    best = report.best
    if best is None:
        rec.error = "all replicates failed"
        return rec
    rec.robustness = best.robustness
    rec.correct = obs_equivalent(best.signature, true_sig)
    rec.identical = best.signature == true_sig
    fitted = best.mean_model(labels=truth.labels)
    rec.zeta = accuracy_score(truth, fitted)
    if rec.identical and best.count >= 2:
        rec.phi = [v for _, v in normalized_error(truth, fitted, best.coeff_std)]
    return rec


def _trial_job(args):
    return run_trial(*args)


def run_experiment(cfg):
    """Run every trial of every cell; failures are recorded, never raised."""
    seed = cfg.seed if cfg.seed is not None else int(np.random.SeedSequence().entropy)
    master = as_seed_sequence(seed)
    jobs = []
    for c, cell in enumerate(cfg.cells):
        cell_seed = child_seed(master, c)
        for k in range(cfg.models_per_cell):
            jobs.append((cell, k, cfg.alpha, cfg.replicates, child_seed(cell_seed, k), cfg.burn_in))
    if cfg.n_jobs == 1:
        records = [_trial_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs if cfg.n_jobs > 0 else None) as pool:
            records = list(pool.map(_trial_job, jobs))
    summary = ExperimentSummary(records, seed=seed)
    if cfg.out_dir:
        write_summary(summary, cfg.out_dir)
        emit_plots(summary, cfg.out_dir)
    return summary


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_summary(summary, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = summary.table()
    _write_rows(out / "table.csv", list(table[0].keys()), [list(r.values()) for r in table])
    cols = [f for f in TrialRecord.__dataclass_fields__ if f != "phi"]
    _write_rows(out / "trials.csv", cols, [[getattr(r, c) for c in cols] for r in summary.records])
    return out / "table.csv", out / "trials.csv"


def _quartiles(values):
    values = np.asarray([v for v in values if np.isfinite(v)])
    if values.size == 0:
        return [0, math.nan, math.nan, math.nan, math.nan, math.nan]
    q = np.percentile(values, [0, 25, 50, 75, 100])
    return [values.size] + q.tolist()


def robustness_histogram(values):
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=HIST_EDGES)
    return counts


def emit_plots(summary, out_dir):
    """Write the CSV series behind the robustness/accuracy figures. Returns ``{name: path}``."""
    if not summary.records:
        raise ValueError("summary has no trials")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    recs = summary.records
    for name, group in (("correct", [r for r in recs if r.correct]), ("incorrect", [r for r in recs if not r.correct])):
        counts = robustness_histogram([r.robustness for r in group])
        path = out / f"robustness_hist_{name}.csv"
        _write_rows(path, ["bin_lo", "bin_hi", "count"], [[int(a), int(b), int(c)] for a, b, c in zip(HIST_EDGES[:-1], HIST_EDGES[1:], counts)])
        paths[f"hist_{name}"] = path
    qhead = ["count", "min", "q1", "median", "q3", "max"]
    path = out / "zeta_by_cell.csv"
    _write_rows(path, ["n", "p", "r", "T"] + qhead, [list(c) + _quartiles(r.zeta for r in summary.cell_records(c)) for c in summary.cells()])
    paths["zeta_by_cell"] = path
    path = out / "zeta_by_correctness.csv"
    _write_rows(path, ["group"] + qhead, [
        ["correct"] + _quartiles(r.zeta for r in recs if r.correct),
        ["incorrect"] + _quartiles(r.zeta for r in recs if not r.correct),
    ])
    paths["zeta_by_correctness"] = path
    path = out / "robustness_zeta.csv"
    _write_rows(path, ["robustness", "zeta", "correct"], [[r.robustness, r.zeta, int(r.correct)] for r in recs])
    paths["scatter"] = path
    phi = summary.pooled_phi()
    path = out / "phi_probplot.csv"
    if phi.size >= 20:
        diag = normality_diagnostic(phi)
        _write_rows(path, ["empirical", "theoretical"], diag.pairs.tolist())
    else:
        _write_rows(path, ["empirical", "theoretical"], [])
    paths["phi_probplot"] = path
    return paths


# --- case study -------------------------------------------------------------

CASE_COLUMNS = ("UNRATE", "GDPC1", "GDPPOT", "HCOMPBS", "IDPBS", "OPHPBS")
CASE_LABELS = ("w", "p", "e", "u", "z", "pi_m")


def _log_checked(series, name, frame):
    bad = ~(series > 0)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise IngestionError(f"non-positive value inside log for {name} at row {row} ({frame.index[row]})")
    return np.log(series)


def load_case_study(raw_csv, ma_window=12):
    """Transform raw quarterly series into the six-variable wage-price dataset.

    ``e = log(1 - UNRATE/100)``, ``u = log(GDPC1/GDPPOT)``; ``w``, ``p``, ``z``
    are first differences of the logs of HCOMPBS, IDPBS and OPHPBS, and
    ``pi_m`` is the trailing ``ma_window``-period mean of ``p`` (current
    period included). Rows lost to differencing and the moving average are
    dropped. ``raw_csv`` may be a path or a DataFrame.
    """
    frame = raw_csv.copy() if isinstance(raw_csv, pd.DataFrame) else pd.read_csv(raw_csv)
    missing = [c for c in CASE_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f"missing columns: {', '.join(missing)}")
    for c in CASE_COLUMNS:
        vals = pd.to_numeric(frame[c], errors="coerce")
        if vals.isna().any():
            row = int(np.flatnonzero(vals.isna().to_numpy())[0])
            raise IngestionError(f"missing or non-numeric value in column {c} at row {row}")
        frame[c] = vals
    out = pd.DataFrame(index=frame.index)
    out["w"] = _log_checked(frame["HCOMPBS"], "HCOMPBS", frame).diff()
    out["p"] = _log_checked(frame["IDPBS"], "IDPBS", frame).diff()
    out["e"] = _log_checked(1.0 - frame["UNRATE"] / 100.0, "1 - UNRATE/100", frame)
    out["u"] = _log_checked(frame["GDPC1"] / frame["GDPPOT"], "GDPC1/GDPPOT", frame)
    out["z"] = _log_checked(frame["OPHPBS"], "OPHPBS", frame).diff()
    out["pi_m"] = out["p"].rolling(ma_window).mean()
    out = out.iloc[ma_window:]
    if len(out) < 3:
        raise IngestionError(f"only {len(out)} usable rows after differencing and the {ma_window}-period average")
    return TimeSeriesData(out[list(CASE_LABELS)].to_numpy(), CASE_LABELS)


@dataclass
class CaseStudyRun:
    alpha: float
    report: object
    trusted: bool

    @property
    def max_robustness(self):
        return self.report.max_robustness


@dataclass
class CaseStudyReport:
    low: CaseStudyRun
    high: CaseStudyRun
    p: int
    trust_threshold: float


def run_case_study(data, alpha_low=0.5, alpha_high=0.999, N=100, seed=None, p=1, trust_threshold=55.0, n_jobs=1):
    """Robustness analysis of the case-study data at a low and a high confidence level."""
    N = check_count(N, "N", minimum=2)
    data = TimeSeriesData.coerce(data)
    seed = seed if seed is not None else int(np.random.SeedSequence().entropy)
    runs = []
    for idx, alpha in enumerate((alpha_low, alpha_high)):
        report = compute_robustness(data, FitConfig(p=p, alpha=alpha), N=N, seed=child_seed(seed, idx), n_jobs=n_jobs)
        report.seed = seed
        runs.append(CaseStudyRun(alpha, report, report.max_robustness >= trust_threshold))
        if report.max_robustness < trust_threshold:
            logger.warning("alpha=%s: most robust structure has R=%.1f < %.1f", alpha, report.max_robustness, trust_threshold)
    return CaseStudyReport(low=runs[0], high=runs[1], p=p, trust_threshold=trust_threshold)
