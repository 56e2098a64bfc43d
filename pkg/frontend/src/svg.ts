/** Minimal deterministic SVG builder: fixed number formatting, no
 * timestamps, so identical inputs always render identical bytes. */

export type Scale = (v: number) => number

export function fmt(n: number): string {
  if (!isFinite(n)) return '0'
  const s = n.toFixed(2)
  return s === '-0.00' ? '0.00' : s
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1
  return (v) => r0 + ((v - d0) / span) * (r1 - r0)
}

export function logScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log10(d0)
  const span = Math.log10(d1) - l0 || 1
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0)
}

/** Round-number ticks covering [lo, hi]; count is approximate. */
export function linearTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo]
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / count)))
  const mult = [1, 2, 5, 10].find((m) => (hi - lo) / (step * m) <= count) || 10
  const s = step * mult
  const ticks: number[] = []
  for (let v = Math.ceil(lo / s) * s; v <= hi + s * 1e-9; v += s) ticks.push(v)
  return ticks
}

/** Decade ticks for a log axis. */
export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = []
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
    ticks.push(Math.pow(10, e))
  }
  return ticks.length ? ticks : [lo]
}

export function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-2)) {
    const e = Math.floor(Math.log10(Math.abs(v)))
    const m = v / Math.pow(10, e)
    return `${Number(m.toPrecision(3))}e${e}`
  }
  return String(Number(v.toPrecision(6)))
}

export type Frame = {
  width: number
  height: number
  margin: { top: number; right: number; bottom: number; left: number }
}

export const DEFAULT_FRAME: Frame = {
  width: 560,
  height: 400,
  margin: { top: 24, right: 16, bottom: 44, left: 60 },
}

export function innerBox(f: Frame) {
  return {
    x0: f.margin.left,
    x1: f.width - f.margin.right,
    y0: f.height - f.margin.bottom,
    y1: f.margin.top,
  }
}

export class SvgDoc {
  private parts: string[] = []

  constructor(private frame: Frame) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" ` +
        `height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}" ` +
        `font-family="sans-serif" font-size="11">`,
    )
    this.parts.push(
      `<rect width="${frame.width}" height="${frame.height}" fill="white"/>`,
    )
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1) {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    )
  }

  path(points: Array<[number, number]>, stroke: string, width = 1.5) {
    if (!points.length) return
    const d = points
      .map(([x, y], i) => `${i ? 'L' : 'M'}${fmt(x)} ${fmt(y)}`)
      .join(' ')
    this.parts.push(
      `<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    )
  }

  rect(x: number, y: number, w: number, h: number, fill: string) {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `fill="${fill}"/>`,
    )
  }

  /** An x-shaped marker, the trained-model symbol on Pareto plots. */
  cross(x: number, y: number, r: number, stroke: string) {
    this.line(x - r, y - r, x + r, y + r, stroke, 1.5)
    this.line(x - r, y + r, x + r, y - r, stroke, 1.5)
  }

  text(x: number, y: number, s: string, anchor = 'middle', extra = '') {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}"${extra}>` +
        `${escapeXml(s)}</text>`,
    )
  }

  axes(
    xs: Scale,
    ys: Scale,
    xTicks: number[],
    yTicks: number[],
    xLabel: string,
    yLabel: string,
  ) {
    const box = innerBox(this.frame)
    this.line(box.x0, box.y0, box.x1, box.y0, 'black')
    this.line(box.x0, box.y0, box.x0, box.y1, 'black')
    for (const t of xTicks) {
      const x = xs(t)
      this.line(x, box.y0, x, box.y0 + 4, 'black')
      this.text(x, box.y0 + 16, tickLabel(t))
    }
    for (const t of yTicks) {
      const y = ys(t)
      this.line(box.x0 - 4, y, box.x0, y, 'black')
      this.text(box.x0 - 7, y + 3, tickLabel(t), 'end')
    }
    this.text((box.x0 + box.x1) / 2, this.frame.height - 8, xLabel)
    const yc = (box.y0 + box.y1) / 2
    this.text(14, yc, yLabel, 'middle', ` transform="rotate(-90 14 ${fmt(yc)})"`)
  }

  title(s: string) {
    this.text(this.frame.width / 2, 15, s, 'middle', ' font-size="13"')
  }

  render(): string {
    return this.parts.join('\n') + '\n</svg>\n'
  }
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}

export const SCHEME_COLORS: Record<string, string> = {
  backprop: '#444444',
  greedy: '#1f77b4',
  overlapping: '#2ca02c',
  chunked: '#ff7f0e',
  last_k: '#9467bd',
}

export function schemeColor(scheme: string): string {
  const base = scheme.split(':')[0]
  return SCHEME_COLORS[base] || '#d62728'
}
