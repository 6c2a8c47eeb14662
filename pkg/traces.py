#!/usr/bin/env python3
"""
Convergence trace tables.
Turns ConvergenceTrace records into DataFrames, fits the empirical decay
rate of the residuals and writes trace_*.csv files.
"""

import math
import os

import numpy as np
import pandas as pd


def trace_table(trace):
    """
    Tabulate a convergence trace.

    Args:
        trace: ConvergenceTrace

    Returns:
        DataFrame: columns T, residual, bound, quadrature_error, ratio
    """
    table = pd.DataFrame(trace.rows(), columns=["T", "residual", "bound", "quadrature_error"])
    # residual ratio against the previous schedule entry
    table["ratio"] = table["residual"] / table["residual"].shift(1)
    table.insert(0, "kind", trace.kind)
    return table


def decay_rate(trace, exponent=0.5, floor=1e-13):
    """
    Empirical decay rate of the residuals.

    Fits log(residual) against |T|^(2 eps) by least squares; for the
    Gaussian kernel the slope is -gap^2 / 2.

    Args:
        trace: ConvergenceTrace
        exponent: kernel exponent eps
        floor: residuals at or below this are left out of the fit

    Returns:
        dict: {"slope": float or None, "gap": float or None, "points": int}
    """
    table = trace_table(trace)
    usable = table[table["residual"] > floor]
    if len(usable) < 2:
        return {"slope": None, "gap": None, "points": len(usable)}

    x = usable["T"].abs() ** (2 * exponent)
    y = np.log(usable["residual"])
    slope, _ = np.polyfit(x, y, 1)
    gap = math.sqrt(-2.0 * slope) if slope < 0 else None
    return {"slope": float(slope), "gap": gap, "points": len(usable)}


def summarize_traces(traces, exponent=0.5):
    """
    One row per trace: final residual, extrapolation and fitted rate.

    Returns:
        DataFrame
    """
    rows = []
    for trace in traces:
        rate = decay_rate(trace, exponent)
        rows.append({
            "kind": trace.kind,
            "final_T": trace.schedule[-1],
            "final_residual": trace.final_residual,
            "extrapolated": trace.extrapolated,
            "fitted_gap": trace.fitted_gap,
            "empirical_gap": rate["gap"],
            "monotone": trace.monotone,
            "cross_check": trace.cross_check,
        })
    return pd.DataFrame(rows)


def trace_filename(name):
    """trace_<name>.csv with characters unsafe in file names replaced."""
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
    return f"trace_{safe}.csv"


def write_trace_csv(trace, output_dir, name=None):
    """
    Write one trace as CSV.

    Returns:
        str: path of the written file
    """
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, trace_filename(name or trace.kind))
    trace_table(trace).to_csv(path, index=False, float_format="%.12e")
    return path


def load_trace_csv(path):
    return pd.read_csv(path)


def main():
    from asymptotics import AsymptoticsSetup, ergodic_trace
    from fock_core import ModeGrid, build_fock_space
    from spacetime_net import Wedge, build_two_d_net, sample_wedge_elements

    print("📉 Ergodic convergence trace")
    print("-" * 40)
    space = build_fock_space(ModeGrid(1.0, 3), per_mode_cap=2, energy_cap=4.0)
    net = build_two_d_net(space, space)
    F = sample_wedge_elements(net, Wedge.RIGHT, 1, np.random.default_rng(0))[0]
    trace = ergodic_trace(net, F.operator, +1, AsymptoticsSetup())

    print(trace_table(trace).to_string(index=False))
    rate = decay_rate(trace)
    if rate["gap"] is not None:
        print(f"\nEmpirical gap: {rate['gap']:.3f} (fitted from last two: {trace.fitted_gap})")
    else:
        print("\nResiduals at rounding level, no rate to fit")


if __name__ == "__main__":
    main()
