"""Report rendering: JSON document, aligned text table and SVG interval plot."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from xml.sax.saxutils import escape

import jsonschema

from .decompose import ExploreResult, UncertaintyDecomposition

SCHEMA_NAME = "report.schema.json"


def load_schema(name: str = SCHEMA_NAME) -> dict:
    return json.loads(resources.files("causalbands").joinpath("data", name).read_text())


def _f(x):
    return None if x is None else float(x)


def action_entry(dec: UncertaintyDecomposition) -> dict:
    inner = dec.inner
    return {
        "name": dec.query.describe(),
        "action": int(dec.query.action),
        "U_hi": dec.U_hi,
        "U_lo": dec.U_lo,
        "L_hi": dec.L_hi,
        "L_lo": dec.L_lo,
        "inner": None if inner is None else [inner[0], inner[1]],
        "outer": [list(p) for p in dec.outer],
        "inner_width": dec.inner_width,
        "outer_width": dec.outer_width,
        "method": dec.method,
        "candidates": dec.candidate_count,
        "skipped": dec.skipped,
    }


def build_report(result: ExploreResult, query: dict, config_echo: dict, seed: int) -> dict:
    m = result.move
    return {
        "query": query,
        "actions": [action_entry(d) for d in result.decompositions],
        "gamma": _f(result.gamma),
        "gamma_halfwidth": _f(result.gamma_halfwidth),
        "decision": {"kind": m.kind, "rationale": m.rationale, "conclusion": m.conclusion, "action": m.action},
        "net": {"candidates": result.candidates, "rejected": result.rejected, "lattice_size": result.lattice_size},
        "config_echo": config_echo,
        "seed": int(seed),
    }


def dumps(doc: dict) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def validate(doc: dict, schema: str = SCHEMA_NAME) -> None:
    jsonschema.validate(doc, load_schema(schema))


def render_text(doc: dict) -> str:
    head = ["action", "L_lo", "L_hi", "U_lo", "U_hi", "inner", "method", "cand", "skip"]
    rows = []
    for a in doc["actions"]:
        inner = "empty" if a["inner"] is None else f"[{a['inner'][0]:.4f}, {a['inner'][1]:.4f}]"
        rows.append(
            [a["name"], *(f"{a[k]:.4f}" for k in ("L_lo", "L_hi", "U_lo", "U_hi")), inner, a["method"],
             str(a["candidates"]), str(a["skipped"])]
        )
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    line = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    out = [line(head), line(["-" * w for w in widths])] + [line(r) for r in rows]
    if doc.get("gamma") is not None:
        out.append(f"gamma = {doc['gamma']:.4f} (+/- {doc.get('gamma_halfwidth') or 0.0:.4f})")
    d = doc["decision"]
    out.append(f"decision: {d['kind']}" + (f" ({d['conclusion']})" if d.get("conclusion") else "") + f" - {d['rationale']}")
    return "\n".join(out) + "\n"


# -- SVG -------------------------------------------------------------------------

WIDTH = 800
ROW = 60
MARGIN = 160


def render_svg(doc: dict) -> str:
    actions = doc["actions"]
    height = ROW * max(1, len(actions))
    ate = doc.get("query", {}).get("mode") == "ate"
    lo, hi = (-1.0, 1.0) if ate else (0.0, 1.0)
    span = WIDTH - MARGIN - 20

    def x(v):
        return MARGIN + (min(max(v, lo), hi) - lo) / (hi - lo) * span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">',
        "<defs>",
        '<pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">',
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#3b6ea5" stroke-width="2"/>',
        "</pattern>",
        "</defs>",
    ]
    for k, a in enumerate(actions):
        top = k * ROW
        mid = top + 24
        parts.append(f'<g class="action" id="action-{k}">')
        parts.append(f'<text x="4" y="{mid + 4}" font-size="11" font-family="monospace">{escape(a["name"])}</text>')
        parts.append(f'<line x1="{MARGIN}" y1="{mid + 14}" x2="{MARGIN + span}" y2="{mid + 14}" stroke="#999"/>')
        for (p, q) in a["outer"]:
            parts.append(
                f'<rect class="outer" x="{x(p):.2f}" y="{mid - 8}" width="{max(x(q) - x(p), 0.5):.2f}" height="16" '
                'fill="url(#hatch)" stroke="#3b6ea5"/>'
            )
        if a["inner"] is not None:
            p, q = a["inner"]
            parts.append(
                f'<rect class="inner" x="{x(p):.2f}" y="{mid - 8}" width="{max(x(q) - x(p), 0.5):.2f}" height="16" '
                'fill="#3b6ea5"/>'
            )
        for key, label in (("L_lo", "L̲"), ("L_hi", "L̅"), ("U_lo", "U̲"), ("U_hi", "U̅")):
            px = x(a[key])
            parts.append(f'<line class="tick" x1="{px:.2f}" y1="{mid + 10}" x2="{px:.2f}" y2="{mid + 18}" stroke="#000"/>')
            parts.append(
                f'<text x="{px:.2f}" y="{mid + 30}" font-size="9" text-anchor="middle">{label} {a[key]:.3f}</text>'
            )
        g = doc.get("gamma")
        if g is not None:
            parts.append(
                f'<line class="gamma" x1="{x(g):.2f}" y1="{top + 6}" x2="{x(g):.2f}" y2="{mid + 12}" '
                'stroke="#c0392b" stroke-width="2"/>'
            )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_outputs(doc: dict, out: str | Path | None = None, fmt: str = "json", plot: str | Path | None = None) -> str:
    text = dumps(doc) if fmt == "json" else render_text(doc)
    if out is not None:
        Path(out).write_text(text)
    if plot is not None:
        Path(plot).write_text(render_svg(doc))
    return text
