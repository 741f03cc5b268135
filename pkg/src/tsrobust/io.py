"""Text formats: JSON documents for models/reports and CSV for time series.

Floats are written with ``repr`` precision (17 significant digits), so a
model survives a dump/load round trip bit for bit.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .model import CausalModel, StructureSignature, TimeSeriesData


def model_to_dict(model):
    return {
        "n": model.n,
        "p": model.p,
        "labels": list(model.labels),
        "a0": model.a0.tolist(),
        "lags": [a.tolist() for a in model.lags],
        "d0": model.d0.tolist(),
    }


def model_from_dict(doc):
    model = CausalModel(
        a0=np.array(doc["a0"], dtype=np.float64),
        lags=tuple(np.array(a, dtype=np.float64) for a in doc["lags"]),
        d0=np.array(doc["d0"], dtype=np.float64),
        labels=doc.get("labels"),
    )
    if "n" in doc and doc["n"] != model.n:
        raise ValueError(f"declared n={doc['n']} but a0 is {model.n}x{model.n}")
    if "p" in doc and doc["p"] != model.p:
        raise ValueError(f"declared p={doc['p']} but {model.p} lag matrices given")
    return model


def dumps_model(model):
    return json.dumps(model_to_dict(model), indent=2)


def loads_model(text):
    return model_from_dict(json.loads(text))


def save_model(model, path):
    Path(path).write_text(dumps_model(model) + "\n")


def load_model(path):
    """Load one model from a model document, a fit result or a robustness report.

    A fit result yields its first minimal model; a report yields the mean
    model of its most robust structure.
    """
    doc = json.loads(Path(path).read_text())
    if "most_robust" in doc:
        doc = doc["most_robust"]["model"]
    elif "models" in doc:
        doc = doc["models"][0]
    elif "a0" not in doc:
        raise ValueError(f"{path}: not a model, fit result or robustness report")
    return model_from_dict(doc)


def signature_to_dict(sig):
    return {
        "n": sig.n,
        "p": sig.p,
        "contemporaneous": sorted([list(e) for e in sig.contemporaneous_edges]),
        "temporal": sorted([list(e) for e in sig.temporal_edges]),
    }


def signature_from_dict(doc):
    return StructureSignature(
        doc["n"],
        doc["p"],
        frozenset(tuple(e) for e in doc["contemporaneous"]),
        frozenset(tuple(e) for e in doc["temporal"]),
    )


def autocov_to_dict(acs):
    return {
        "n": acs.n,
        "max_lag": acs.max_lag,
        "sample_size": acs.sample_size,
        "blocks": [b.tolist() for b in acs.blocks],
    }


def _nan_to_none(a):
    a = np.asarray(a, dtype=object)
    a[a != a] = None
    return a.tolist()


def write_csv(data, path):
    data = TimeSeriesData.coerce(data)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.labels)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])


def read_csv(path):
    """Read a CSV with a header of labels and one row per time step."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        values = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from exc
    return TimeSeriesData(values.reshape(len(body), len(header)), header)


def fit_result_to_dict(result):
    return {
        "sparsity": result.sparsity,
        "models": [model_to_dict(m) for m in result.models],
        "signatures": [signature_to_dict(s) for s in result.signatures],
        "orderings": [list(o) for o in result.orderings],
        "permutation_log": [{"ordering": list(k), "edges": v} for k, v in result.permutation_log.items()],
    }


def report_to_dict(report):
    """Robustness report as a JSON-ready document (undefined std values become null)."""
    labels = list(report.labels) if report.labels else None
    doc = {
        "N": report.N,
        "failures": report.failures,
        "seed": str(report.seed) if not isinstance(report.seed, int) else report.seed,
        "labels": labels,
        "structures": [
            {
                "signature": signature_to_dict(e.signature),
                "description": e.signature.describe(labels),
                "K": e.count,
                "R": e.robustness,
            }
            for e in report.structures
        ],
    }
    best = report.best
    if best is not None:
        doc["most_robust"] = {
            "signature": signature_to_dict(best.signature),
            "R": best.robustness,
            "model": model_to_dict(best.mean_model(labels=report.labels)),
            "coeff_mean": best.coeff_mean.tolist(),
            "coeff_std": _nan_to_none(best.coeff_std),
        }
    if report.original is not None:
        doc["original_fit"] = {
            "sparsity": report.original.sparsity,
            "signatures": [signature_to_dict(s) for s in report.original.signatures],
        }
    return doc


def write_replicate_csv(report, path):
    """One row per replicate: index and the signatures its fit produced."""
    labels = report.labels
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replicate", "structures"])
        for i, sigs in enumerate(report.replicate_signatures):
            text = sigs if isinstance(sigs, str) else " | ".join(s.describe(labels) for s in sigs)
            w.writerow([i, text])


def load_std_stack(path):
    """Standard-deviation stack from a robustness report or a bare nested array."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = doc["most_robust"]["coeff_std"] if "most_robust" in doc else doc["coeff_std"]
    return np.array([[[np.nan if v is None else v for v in row] for row in mat] for mat in doc], dtype=np.float64)
