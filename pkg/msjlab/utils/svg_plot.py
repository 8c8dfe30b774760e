"""
Minimal self-contained SVG line charts

Supports log or linear axes, per-series markers and dash styles, a legend
and a <desc> element carrying provenance text. Output is deterministic for
identical inputs.
"""
import math
from dataclasses import dataclass, field
from html import escape
from typing import List, Optional, Sequence, Tuple

COLORS = ['#0d6efd', '#dc3545', '#198754', '#fd7e14', '#6f42c1', '#20c997', '#6c757d']
GRID = '#e9ecef'
TEXT = '#212529'
MUTED = '#6c757d'
FONT = "system-ui, -apple-system, 'Segoe UI', sans-serif"

MARGIN = {'top': 50, 'right': 30, 'bottom': 60, 'left': 80}


@dataclass
class Series:
    name: str
    xs: Sequence[float]
    ys: Sequence[float]
    color: Optional[str] = None
    marker: str = 'circle'          # circle, square or none
    dashed: bool = False


@dataclass
class LineChart:
    title: str
    x_label: str = ''
    y_label: str = ''
    log_x: bool = False
    log_y: bool = False
    width: int = 720
    height: int = 440
    series: List[Series] = field(default_factory=list)

    def add(self, series: Series) -> 'LineChart':
        if series.color is None:
            series.color = COLORS[len(self.series) % len(COLORS)]
        self.series.append(series)
        return self

    def render(self, desc: str = '') -> str:
        """Render the chart to an SVG document string"""
        points = [self._visible(s) for s in self.series]
        xs = [x for pts in points for x, _ in pts]
        ys = [y for pts in points for _, y in pts]
        x_axis = _Axis(xs, self.log_x)
        y_axis = _Axis(ys, self.log_y)

        plot_w = self.width - MARGIN['left'] - MARGIN['right']
        plot_h = self.height - MARGIN['top'] - MARGIN['bottom']
        left, top = MARGIN['left'], MARGIN['top']
        bottom = top + plot_h

        def to_x(v: float) -> float:
            return left + x_axis.fraction(v) * plot_w

        def to_y(v: float) -> float:
            return bottom - y_axis.fraction(v) * plot_h

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {self.width} {self.height}" '
            f'width="{self.width}" height="{self.height}" style="font-family: {FONT}; background: #ffffff">\n',
            f'<title>{escape(self.title)}</title>\n',
        ]
        if desc:
            parts.append(f'<desc>{escape(desc)}</desc>\n')
        parts.append(
            f'<text x="{self.width / 2:.1f}" y="28" text-anchor="middle" font-size="15" '
            f'font-weight="600" fill="{TEXT}">{escape(self.title)}</text>\n'
        )

        for t in x_axis.ticks():
            x = to_x(t)
            parts.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{bottom}" stroke="{GRID}" stroke-width="1"/>\n')
            parts.append(
                f'<text x="{x:.2f}" y="{bottom + 18}" text-anchor="middle" font-size="10" '
                f'fill="{MUTED}">{_fmt_tick(t, self.log_x)}</text>\n'
            )
        for t in y_axis.ticks():
            y = to_y(t)
            parts.append(
                f'<line x1="{left}" y1="{y:.2f}" x2="{left + plot_w}" y2="{y:.2f}" stroke="{GRID}" stroke-width="1"/>\n'
            )
            parts.append(
                f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="10" '
                f'fill="{MUTED}">{_fmt_tick(t, self.log_y)}</text>\n'
            )

        for s, pts in zip(self.series, points):
            if not pts:
                continue
            coords = ' '.join(f'{to_x(x):.2f},{to_y(y):.2f}' for x, y in pts)
            dash = ' stroke-dasharray="6,3"' if s.dashed else ''
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{s.color}" stroke-width="2"{dash}/>\n')
            for x, y in pts:
                parts.append(_marker(s.marker, to_x(x), to_y(y), s.color))

        # Legend
        for i, s in enumerate(self.series):
            ly = top + 14 + i * 18
            lx = left + plot_w - 190
            dash = ' stroke-dasharray="6,3"' if s.dashed else ''
            parts.append(
                f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{s.color}" stroke-width="2"{dash}/>\n'
            )
            parts.append(_marker(s.marker, lx + 12, ly, s.color))
            parts.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="11" fill="{TEXT}">{escape(s.name)}</text>\n')

        parts.append(
            f'<text x="{left + plot_w / 2:.1f}" y="{self.height - 14}" text-anchor="middle" '
            f'font-size="12" fill="{MUTED}">{escape(self.x_label)}</text>\n'
        )
        label_x, label_y = 18, top + plot_h / 2
        parts.append(
            f'<text x="{label_x}" y="{label_y:.1f}" text-anchor="middle" font-size="12" fill="{MUTED}" '
            f'transform="rotate(-90 {label_x} {label_y:.1f})">{escape(self.y_label)}</text>\n'
        )
        parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="{MUTED}" stroke-width="1"/>\n')
        parts.append(
            f'<line x1="{left}" y1="{bottom}" x2="{left + plot_w}" y2="{bottom}" stroke="{MUTED}" stroke-width="1"/>\n'
        )
        parts.append('</svg>\n')
        return ''.join(parts)

    def _visible(self, s: Series) -> List[Tuple[float, float]]:
        """Points that can be drawn: finite, and positive on log axes"""
        pts = []
        for x, y in zip(s.xs, s.ys):
            if x is None or y is None or not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (self.log_x and x <= 0) or (self.log_y and y <= 0):
                continue
            pts.append((float(x), float(y)))
        return pts


class _Axis:
    def __init__(self, values: List[float], log: bool):
        self.log = log
        if not values:
            values = [1.0, 10.0] if log else [0.0, 1.0]
        if log:
            self.lo = math.floor(math.log10(min(values)))
            self.hi = math.ceil(math.log10(max(values)))
        else:
            lo, hi = min(values), max(values)
            if hi <= lo:
                lo, hi = lo - 0.5, hi + 0.5
            step = _nice_step(hi - lo)
            self.step = step
            self.lo = math.floor(lo / step) * step
            self.hi = math.ceil(hi / step) * step
        if self.hi <= self.lo:
            self.hi = self.lo + 1

    def fraction(self, v: float) -> float:
        value = math.log10(v) if self.log else v
        return (value - self.lo) / (self.hi - self.lo)

    def ticks(self) -> List[float]:
        if self.log:
            stride = max(1, math.ceil((self.hi - self.lo) / 10))
            return [10.0 ** e for e in range(int(self.lo), int(self.hi) + 1, stride)]
        count = int(round((self.hi - self.lo) / self.step))
        return [round(self.lo + i * self.step, 12) for i in range(count + 1)]


def _nice_step(span: float, max_ticks: int = 6) -> float:
    raw = span / max(max_ticks - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    return mag * min([1, 2, 2.5, 5, 10], key=lambda m: abs(m * mag - raw))


def _fmt_tick(v: float, log: bool) -> str:
    if log:
        return f'1e{int(round(math.log10(v)))}'
    if v == 0:
        return '0'
    if abs(v) >= 1000 or abs(v) < 1e-3:
        return f'{v:.3g}'
    return f'{v:.4g}'


def _marker(kind: str, x: float, y: float, color: str) -> str:
    if kind == 'square':
        return f'<rect x="{x - 3.5:.2f}" y="{y - 3.5:.2f}" width="7" height="7" fill="{color}"/>\n'
    if kind == 'circle':
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="{color}" stroke="white" stroke-width="1"/>\n'
    return ''
