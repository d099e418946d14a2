"""
Instance statistics for SATR.

Computes:
- vertex / edge / crossing-pair counts
- lambda and a histogram of crossing-graph components (K2/P3/K3 by kind,
  larger components by size)
- vertex degree summary (min, max, mean)
Returns JSON-serializable dicts; `stats_frame` stacks several instances into
one pandas table, `scaling_slope` fits runtimes on a log-log scale.
"""
from typing import Any, Dict, Mapping, Sequence

import numpy as np
import pandas as pd

from src.atcore import ATGraph, build_crossing_graph


def component_histogram(a: ATGraph) -> Dict[str, int]:
    c = build_crossing_graph(a)
    g = c.to_networkx()
    rows = []
    for comp in c.components():
        if len(comp) < 2:
            continue
        if len(comp) == 2:
            rows.append("K2")
        elif len(comp) == 3:
            rows.append("K3" if g.subgraph(comp).number_of_edges() == 3 else "P3")
        else:
            rows.append(f"size{len(comp)}")
    if not rows:
        return {}
    counts = pd.Series(rows, dtype="object").value_counts()
    return {str(k): int(v) for k, v in counts.sort_index().items()}


def instance_stats(a: ATGraph) -> Dict[str, Any]:
    c = build_crossing_graph(a)
    sizes = [len(comp) for comp in c.components()]
    degrees = pd.Series([a.graph.degree(v) for v in a.graph.vertices], dtype="float64")
    report = {
        "n_vertices": int(len(a.graph.vertices)),
        "n_edges": int(len(a.graph.edges)),
        "n_crossings": int(len(a.crossings)),
        "lambda": int(max(sizes, default=0)),
        "components": component_histogram(a),
    }
    if degrees.empty:
        report.update({"degree_min": None, "degree_max": None, "degree_mean": None})
    else:
        report.update({
            "degree_min": int(degrees.min()),
            "degree_max": int(degrees.max()),
            "degree_mean": float(round(degrees.mean(), 3)),
        })
    return report


def stats_frame(instances: Mapping[str, ATGraph]) -> pd.DataFrame:
    """One row per instance; component kinds become count columns."""
    rows = []
    for name, a in instances.items():
        s = instance_stats(a)
        row = {k: v for k, v in s.items() if k != "components"}
        row.update({f"n_{kind}": n for kind, n in s["components"].items()})
        row["instance"] = name
        rows.append(row)
    df = pd.DataFrame(rows)
    if df.empty:
        return df
    counts = [c for c in df.columns if c.startswith("n_") and c not in ("n_vertices", "n_edges", "n_crossings")]
    df[counts] = df[counts].fillna(0).astype(int)
    return df.set_index("instance")


def scaling_slope(sizes: Sequence[float], seconds: Sequence[float]) -> float:
    """Exponent k of the least-squares fit seconds ~ sizes**k."""
    if len(sizes) != len(seconds) or len(sizes) < 2:
        raise ValueError("need at least two (size, time) points")
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.maximum(np.asarray(seconds, dtype=float), 1e-9))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
