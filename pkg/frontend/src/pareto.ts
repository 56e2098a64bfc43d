import { parseRows } from './csv'
import {
  DEFAULT_FRAME,
  SvgDoc,
  innerBox,
  logScale,
  logTicks,
  schemeColor,
} from './svg'

export type FrontierPoint = {
  scheme: string
  cost: number
  time: number
  batch: number
}

export function parseFrontier(text: string): FrontierPoint[] {
  const rows = parseRows(text, ['scheme', 'cost_flops', 'time_flops'])
  return rows.map((r) => ({
    scheme: r.scheme,
    cost: Number(r.cost_flops),
    time: Number(r.time_flops),
    batch: Number(r.batch || 0),
  }))
}

/** Log-log cost-vs-time chart: one x marker per trained model, a line
 * along each scheme's points sorted by time. Empty input renders bare
 * axes rather than failing. */
export function renderPareto(text: string): string {
  const points = parseFrontier(text)
  const doc = new SvgDoc(DEFAULT_FRAME)
  const box = innerBox(DEFAULT_FRAME)
  let lo = 1
  let hi = 10
  if (points.length) {
    const vals = points.flatMap((p) => [p.cost, p.time]).filter((v) => v > 0)
    lo = Math.min(...vals)
    hi = Math.max(...vals)
    if (lo === hi) {
      lo /= 2
      hi *= 2
    }
  }
  const xs = logScale(lo, hi, box.x0, box.x1)
  const ys = logScale(lo, hi, box.y0, box.y1)
  doc.axes(xs, ys, logTicks(lo, hi), logTicks(lo, hi), 'time (flops)', 'cost (flops)')
  doc.title('Pareto frontier: compute cost vs training time')

  const bySCheme = new Map<string, FrontierPoint[]>()
  for (const p of points) {
    const arr = bySCheme.get(p.scheme) || []
    arr.push(p)
    bySCheme.set(p.scheme, arr)
  }
  const schemes = [...bySCheme.keys()].sort()
  for (const scheme of schemes) {
    const pts = bySCheme
      .get(scheme)!
      .slice()
      .sort((a, b) => a.time - b.time || a.cost - b.cost)
    const color = schemeColor(scheme)
    if (pts.length > 1) {
      doc.path(pts.map((p) => [xs(p.time), ys(p.cost)]), color, 1)
    }
    for (const p of pts) doc.cross(xs(p.time), ys(p.cost), 4, color)
  }
  schemes.forEach((scheme, i) => {
    const y = box.y1 + 14 + i * 14
    doc.cross(box.x1 - 90, y - 3, 4, schemeColor(scheme))
    doc.text(box.x1 - 80, y, scheme, 'start')
  })
  return doc.render()
}
