"""Minimal dependency-free SVG emitter for the CLI figures."""

from __future__ import annotations


class SvgCanvas:
    """Fixed-viewport canvas mapping data coordinates to pixels."""

    def __init__(self, xlim, ylim, width=640, height=480, pad=40):
        self.xlim = xlim
        self.ylim = ylim
        self.width = width
        self.height = height
        self.pad = pad
        self.elems = []

    def _map(self, x, y):
        (x0, x1), (y0, y1) = self.xlim, self.ylim
        px = self.pad + (x - x0) / (x1 - x0) * (self.width - 2 * self.pad)
        py = self.height - self.pad - (y - y0) / (y1 - y0) * (
            self.height - 2 * self.pad
        )
        return px, py

    def dot(self, x, y, r=1.6, color="black", opacity=1.0):
        px, py = self._map(x, y)
        self.elems.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" fill="{color}" '
            f'fill-opacity="{opacity}"/>'
        )

    def circle(self, x, y, r_px=6, color="red"):
        px, py = self._map(x, y)
        self.elems.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r_px}" fill="none" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )

    def polyline(self, pts, color="red", width=1.5, close=False):
        mapped = " ".join(f"{px:.2f},{py:.2f}" for px, py in
                          (self._map(x, y) for x, y in pts))
        tag = "polygon" if close else "polyline"
        self.elems.append(
            f'<{tag} points="{mapped}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def text(self, x, y, s, size=12, color="black"):
        px, py = self._map(x, y)
        self.elems.append(
            f'<text x="{px:.2f}" y="{py:.2f}" font-size="{size}" '
            f'fill="{color}">{s}</text>'
        )

    def axes(self, label_x="", label_y=""):
        (x0, x1), (y0, y1) = self.xlim, self.ylim
        p = self.pad
        w, h = self.width, self.height
        self.elems.append(
            f'<rect x="{p}" y="{p}" width="{w - 2 * p}" height="{h - 2 * p}" '
            f'fill="none" stroke="#888" stroke-width="1"/>'
        )
        for frac in (0.0, 0.5, 1.0):
            xv = x0 + frac * (x1 - x0)
            yv = y0 + frac * (y1 - y0)
            px, _ = self._map(xv, y0)
            _, py = self._map(x0, yv)
            self.elems.append(
                f'<text x="{px:.1f}" y="{h - p + 16}" font-size="10" '
                f'text-anchor="middle">{xv:.3g}</text>'
            )
            self.elems.append(
                f'<text x="{p - 6}" y="{py:.1f}" font-size="10" '
                f'text-anchor="end">{yv:.3g}</text>'
            )
        if label_x:
            self.elems.append(
                f'<text x="{w / 2:.0f}" y="{h - 6}" font-size="12" '
                f'text-anchor="middle">{label_x}</text>'
            )
        if label_y:
            self.elems.append(
                f'<text x="14" y="{h / 2:.0f}" font-size="12" '
                f'text-anchor="middle" transform="rotate(-90 14 {h / 2:.0f})">'
                f"{label_y}</text>"
            )

    def to_string(self):
        body = "\n".join(self.elems)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
        )

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_string())
