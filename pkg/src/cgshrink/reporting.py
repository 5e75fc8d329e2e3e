"""Writers for CSV tables, JSON reports, run manifests and the risk chart.

Floats are written with ``repr`` so that the text is locale independent and
round-trips exactly; together with deterministic seeding this makes every
output reproducible byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence
from xml.sax.saxutils import escape

__all__ = ["RunManifest", "csv_text", "fmt", "sha256_file", "risk_chart_svg", "write_text"]


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """RFC 4180 CSV (CRLF line ends, minimal quoting) as a string."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to regenerate a command's outputs.

    ``outputs`` maps file names (relative to the manifest's directory) to
    their SHA-256 digests.
    """

    command: str
    config: dict[str, Any]
    master_seed: int | None
    version: str
    outputs: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "version": self.version,
            "outputs": self.outputs,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        missing = {"command", "config", "version"} - set(data)
        if missing:
            raise ValueError(f"manifest is missing {sorted(missing)}")
        return cls(data["command"], data["config"], data.get("master_seed"), data["version"], data.get("outputs", {}))

    def write(self, path: Path) -> Path:
        return write_text(path, self.to_json())


# chart geometry, in SVG user units
_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 20, 30, 50


def _num(x: float) -> str:
    return f"{x:.2f}"


def risk_chart_svg(ps: Sequence[int], risks: Sequence[float], y_max: float = 3.0) -> str:
    """Line chart of the risk at the origin against ``p``.

    Reference lines: the asymptote 0.5, the constant 2 (James-Stein at the
    origin) and ``r = p`` (maximum likelihood), clipped to the plot area.
    """
    p_lo, p_hi = float(ps[0]), float(max(ps[-1], ps[0] + 1))
    plot_w, plot_h = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(p: float) -> float:
        return _LEFT + (p - p_lo) / (p_hi - p_lo) * plot_w

    def sy(r: float) -> float:
        return _TOP + (1.0 - r / y_max) * plot_h

    def hline(y: float, style: str, label: str) -> list[str]:
        return [
            f'<line x1="{_num(sx(p_lo))}" y1="{_num(sy(y))}" x2="{_num(sx(p_hi))}" y2="{_num(sy(y))}" {style}/>',
            f'<text x="{_num(sx(p_hi) - 4)}" y="{_num(sy(y) - 4)}" text-anchor="end">{escape(label)}</text>',
        ]

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" '
        'font-family="sans-serif" font-size="12">',
        f'<defs><clipPath id="plot"><rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}"/></clipPath></defs>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
        f'<text x="{_W // 2}" y="18" text-anchor="middle">Risk of the shrinkage estimator at the origin</text>',
        f'<text x="{_W // 2}" y="{_H - 10}" text-anchor="middle">p</text>',
        f'<text x="16" y="{_H // 2}" text-anchor="middle" transform="rotate(-90 16 {_H // 2})">risk</text>',
    ]
    for k in range(int(y_max / 0.5) + 1):
        r = 0.5 * k
        out.append(f'<text x="{_LEFT - 6}" y="{_num(sy(r) + 4)}" text-anchor="end">{r:.1f}</text>')
    step = max(1, round((p_hi - p_lo) / 8))
    for p in range(int(p_lo), int(p_hi) + 1, step):
        out.append(f'<text x="{_num(sx(p))}" y="{_H - _BOTTOM + 16}" text-anchor="middle">{p}</text>')
    out.append('<g clip-path="url(#plot)">')
    out += hline(0.5, 'stroke="gray" stroke-dasharray="6 4"', "0.5")
    out += hline(2.0, 'stroke="blue" stroke-dasharray="2 3"', "James-Stein (2)")
    out.append(
        f'<line x1="{_num(sx(p_lo))}" y1="{_num(sy(p_lo))}" x2="{_num(sx(p_hi))}" y2="{_num(sy(p_hi))}" stroke="red"/>'
    )
    out.append("</g>")
    out.append(f'<text x="{_num(sx(p_lo) + 8)}" y="{_TOP + 14}" fill="red">MLE (r = p)</text>')
    points = " ".join(f"{_num(sx(p))},{_num(sy(r))}" for p, r in zip(ps, risks))
    if len(ps) > 1:
        out.append(f'<polyline points="{points}" fill="none" stroke="black" stroke-width="2"/>')
    for p, r in zip(ps, risks):
        out.append(f'<circle cx="{_num(sx(p))}" cy="{_num(sy(r))}" r="2.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
