#!/usr/bin/env python3
"""
Plot convergence traces as semilog residual-vs-|T| charts.
Saves PNGs next to the report for dashboard display.
"""

import os

import matplotlib
matplotlib.use('Agg')  # Use non-interactive backend for server
import matplotlib.pyplot as plt

from traces import trace_table

RESIDUAL_COLOR = '#00ff88'
BOUND_COLOR = '#00aaff'
FLOOR_COLOR = '#ff4444'


def _style_axes(ax):
    ax.set_facecolor('#111111')
    for spine in ax.spines.values():
        spine.set_color('#333333')
    ax.tick_params(colors='#888888')
    ax.xaxis.label.set_color('#888888')
    ax.yaxis.label.set_color('#888888')
    ax.title.set_color('#00ff88')
    ax.grid(True, color='#222222', linestyle='-', which='both')


def plot_trace(trace, output_path, tolerance=None):
    """
    Plot residuals and a-priori bounds of one trace.

    Args:
        trace: ConvergenceTrace
        output_path: PNG path
        tolerance: optional horizontal line marking the acceptance threshold

    Returns:
        str: Path to the saved chart
    """
    table = trace_table(trace)
    T = table["T"].abs()
    # log axes need strictly positive values
    floor = 1e-17

    fig, ax = plt.subplots(figsize=(8, 5), facecolor='#0a0a0a')
    _style_axes(ax)
    ax.semilogy(T, table["residual"].clip(lower=floor), 'o-', color=RESIDUAL_COLOR,
                linewidth=1.5, label='residual')
    ax.semilogy(T, table["bound"].clip(lower=floor), 's--', color=BOUND_COLOR,
                linewidth=1.0, label='bound')
    if tolerance is not None:
        ax.axhline(tolerance, color=FLOOR_COLOR, linewidth=1.0, linestyle=':', label='tolerance')
    ax.set_xscale('log', base=2)
    ax.set_xlabel('|T|')
    ax.set_ylabel('residual')
    ax.set_title(f'Convergence: {trace.kind}')
    legend = ax.legend(facecolor='#111111', edgecolor='#333333')
    for text in legend.get_texts():
        text.set_color('#888888')

    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    fig.savefig(output_path, dpi=150, bbox_inches='tight', facecolor='#0a0a0a', edgecolor='none')
    plt.close(fig)

    print(f"Chart saved to: {output_path}")
    return output_path


def plot_regulator_trace(rows, output_path, title):
    """
    Plot ||regularized - spectral|| against eps for a warp regulator trace.

    Args:
        rows: sequence of (eps, distance)
        output_path: PNG path
        title: chart title

    Returns:
        str: Path to the saved chart
    """
    eps = [r[0] for r in rows]
    distance = [max(r[1], 1e-17) for r in rows]

    fig, ax = plt.subplots(figsize=(8, 5), facecolor='#0a0a0a')
    _style_axes(ax)
    ax.loglog(eps, distance, 'o-', color=RESIDUAL_COLOR, linewidth=1.5)
    ax.invert_xaxis()
    ax.set_xlabel('regulator eps')
    ax.set_ylabel('distance to spectral form')
    ax.set_title(title)

    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    fig.savefig(output_path, dpi=150, bbox_inches='tight', facecolor='#0a0a0a', edgecolor='none')
    plt.close(fig)

    print(f"Chart saved to: {output_path}")
    return output_path


def main():
    """Plot the ergodic trace of one sampled element."""
    import numpy as np

    from asymptotics import AsymptoticsSetup, ergodic_trace
    from fock_core import ModeGrid, build_fock_space
    from spacetime_net import Wedge, build_two_d_net, sample_wedge_elements

    space = build_fock_space(ModeGrid(1.0, 3), per_mode_cap=2, energy_cap=4.0)
    net = build_two_d_net(space, space)
    F = sample_wedge_elements(net, Wedge.RIGHT, 1, np.random.default_rng(0))[0]
    path = plot_trace(ergodic_trace(net, F.operator, +1, AsymptoticsSetup()), "out/ergodic_plus.png", 1e-3)
    if path:
        print(f"✅ Chart successfully generated: {path}")
    else:
        print("❌ Failed to generate chart")


if __name__ == "__main__":
    main()
