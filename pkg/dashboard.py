#!/usr/bin/env python3
"""
Generate HTML Dashboard for experiment reports.
Creates a dark-mode styled index.html summarizing every report.json found
under an output directory, with the convergence plots embedded.
"""

import glob
import html
import math
import os
from datetime import datetime, timezone

from harness import load_report


def find_reports(output_root="out"):
    """
    Collect report.json files directly in output_root or one level below.

    Returns:
        list: (directory, report dict) sorted by family
    """
    paths = glob.glob(os.path.join(output_root, "report.json"))
    paths += glob.glob(os.path.join(output_root, "*", "report.json"))
    reports = [(os.path.dirname(p), load_report(p)) for p in sorted(set(paths))]
    return sorted(reports, key=lambda item: item[1]["family"])


def calculate_verdict(reports):
    """Overall verdict across all reports."""
    if not reports:
        return "⚪ NO REPORTS", "verdict-neutral", "Run an experiment family first"
    failed = [r["family"] for _, r in reports if not r["passed"]]
    if failed:
        return ("❌ HARD CHECKS FAILED", "verdict-extreme",
                f"Failing families: {', '.join(failed)}")
    return "✅ ALL HARD CHECKS PASS", "verdict-moderate", f"{len(reports)} families, diagnostics below"


def _format_value(value):
    if isinstance(value, float):
        return f"{value:.3e}"
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return f"{value['re']:.4f}{value['im']:+.4f}i"
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return html.escape(str(value))


def _report_card(directory, report, output_root):
    hard = [c for c in report["checks"] if c["hard"]]
    failures = [c for c in hard if not c["passed"]]
    status_class = "negative" if failures else "positive"
    status = f"{len(failures)} FAILED" if failures else "PASS"

    rows = ""
    # failures first, then the tightest margins
    ordered = sorted(report["checks"], key=lambda c: (c["passed"], -_margin(c)))
    for check in ordered[:12]:
        marker = "ok" if check["passed"] else "negative"
        symbol = "≥" if check["comparison"] == "ge" else "≤"
        rows += f"""
                <div class="metric">
                    <span class="label">{html.escape(check['name'])}</span>
                    <span class="{marker}">{check['value']:.2e} {symbol} {check['bound']:.0e}</span>
                </div>"""

    diagnostics = ""
    for name, value in sorted(report["diagnostics"].items())[:10]:
        diagnostics += f"""
                    <div class="metric">
                        <span class="label">{html.escape(name)}</span>
                        <span class="neutral">{_format_value(value)}</span>
                    </div>"""

    charts = ""
    for chart in sorted(glob.glob(os.path.join(directory, "*.png")))[:4]:
        relative = os.path.relpath(chart, output_root)
        charts += f'<img src="{html.escape(relative)}" alt="{html.escape(os.path.basename(chart))}">'

    total = report["timings"].get("total")
    runtime = f"{total:.1f}s" if isinstance(total, (int, float)) else "n/a"
    return f"""
            <div class="card">
                <h3>🧪 {html.escape(report['family'].upper())}</h3>
                <div class="tech-signal {status_class}">{status}</div>
                <div class="metric">
                    <span class="label">Hard checks</span>
                    <span>{len(hard)}</span>
                </div>
                <div class="metric">
                    <span class="label">Runtime</span>
                    <span>{runtime}</span>
                </div>
                <div class="metric">
                    <span class="label">Config</span>
                    <span class="neutral">{report['config_hash'][:12]}</span>
                </div>{rows}
                <div class="region-card">
                    <h4>Diagnostics</h4>{diagnostics or '<div class="neutral">none</div>'}
                </div>
                <div class="chart-section">{charts}</div>
            </div>"""


def _margin(check):
    """log10 distance of a check from its bound; small means tight."""
    value, bound = abs(check["value"]), abs(check["bound"])
    if value == 0 or bound == 0:
        return -99.0
    ratio = value / bound if check["comparison"] == "le" else bound / value
    return math.log10(ratio)


def generate_html(output_root="out", output_path=None):
    """
    Render index.html for the reports under output_root.

    Returns:
        str: path of the written file
    """
    output_path = output_path or os.path.join(output_root, "index.html")
    reports = find_reports(output_root)
    verdict, verdict_class, description = calculate_verdict(reports)
    cards = "".join(_report_card(d, r, os.path.dirname(output_path) or ".") for d, r in reports)
    timestamp = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M UTC")

    page = f"""<!DOCTYPE html>
<html lang="en">
<head>
    <meta charset="UTF-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <title>wedgewave</title>
    <style>
        * {{
            margin: 0;
            padding: 0;
            box-sizing: border-box;
        }}
        body {{
            font-family: 'Courier New', monospace;
            background: #0a0a0a;
            color: #00ff88;
            min-height: 100vh;
            padding: 20px;
        }}
        .container {{
            max-width: 1600px;
            margin: 0 auto;
        }}
        header {{
            text-align: center;
            padding: 40px 0;
            border-bottom: 2px solid #00ff88;
            margin-bottom: 30px;
        }}
        h1 {{
            font-size: 3em;
            text-shadow: 0 0 20px #00ff88;
            letter-spacing: 5px;
        }}
        .subtitle {{
            color: #888;
            margin-top: 10px;
            font-size: 0.9em;
        }}
        .timestamp {{
            color: #666;
            font-size: 0.8em;
            margin-top: 15px;
        }}
        .grid {{
            display: grid;
            grid-template-columns: repeat(auto-fit, minmax(420px, 1fr));
            gap: 20px;
            margin-bottom: 30px;
        }}
        .card {{
            background: #111;
            border: 1px solid #333;
            border-radius: 10px;
            padding: 25px;
        }}
        .card h3 {{
            font-size: 1.2em;
            margin-bottom: 20px;
            padding-bottom: 10px;
            border-bottom: 1px solid #333;
        }}
        .metric {{
            display: flex;
            justify-content: space-between;
            gap: 10px;
            padding: 8px 0;
            border-bottom: 1px solid #222;
            font-size: 0.85em;
        }}
        .label {{
            color: #888;
            overflow-wrap: anywhere;
        }}
        .tech-signal {{
            font-size: 1.5em;
            font-weight: bold;
            text-align: center;
            padding: 10px;
            margin-bottom: 15px;
        }}
        .positive, .ok {{
            color: #00ff88;
        }}
        .negative {{
            color: #ff4444;
        }}
        .neutral {{
            color: #888;
        }}
        .region-card {{
            background: #1a1a1a;
            border-radius: 8px;
            padding: 15px;
            margin: 15px 0;
        }}
        .region-card h4 {{
            margin-bottom: 10px;
        }}
        .chart-section img {{
            width: 100%;
            height: auto;
            border-radius: 8px;
            margin-top: 10px;
        }}
        .verdict-banner {{
            background: linear-gradient(135deg, #111 0%, #1a1a1a 100%);
            border: 2px solid #00ff88;
            border-radius: 15px;
            padding: 40px;
            text-align: center;
            margin-bottom: 30px;
        }}
        .verdict-banner h2 {{
            font-size: 2.5em;
            margin-bottom: 15px;
        }}
        .verdict-banner .description {{
            font-size: 1.2em;
            color: #888;
        }}
        .verdict-extreme {{
            border-color: #ff0000;
            box-shadow: 0 0 30px rgba(255, 0, 0, 0.3);
        }}
        .verdict-extreme h2 {{
            color: #ff0000;
        }}
        .verdict-moderate {{
            box-shadow: 0 0 30px rgba(0, 255, 136, 0.3);
        }}
        .verdict-neutral {{
            border-color: #666;
        }}
        .verdict-neutral h2 {{
            color: #888;
        }}
        footer {{
            text-align: center;
            padding: 30px;
            color: #444;
            font-size: 0.8em;
        }}
    </style>
</head>
<body>
    <div class="container">
        <header>
            <h1>〰 WEDGEWAVE</h1>
            <div class="subtitle">Wedge-Local Scattering and Deformation Lab</div>
            <div class="timestamp">Last Updated: {timestamp}</div>
        </header>
        <div class="verdict-banner {verdict_class}">
            <h2>{verdict}</h2>
            <div class="description">{html.escape(description)}</div>
        </div>
        <div class="grid">{cards}
        </div>
        <footer>
            Hard checks decide the exit status; diagnostics are reported only.
        </footer>
    </div>
</body>
</html>
"""
    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(output_path, "w") as f:
        f.write(page)
    return output_path


def main():
    path = generate_html()
    print(f"✅ Dashboard generated: {path}")


if __name__ == "__main__":
    main()
