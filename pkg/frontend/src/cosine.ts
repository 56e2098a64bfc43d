import { parseRows } from './csv'
import {
  DEFAULT_FRAME,
  SvgDoc,
  innerBox,
  linearScale,
  linearTicks,
} from './svg'

export type CosinePoint = { layer: number; cosine: number }

/** Rows whose cosine is not numeric (undefined-gradient sentinel) are
 * dropped from the curve but still counted for the layer axis. */
export function parseCosine(text: string): {
  points: CosinePoint[]
  layers: number
} {
  const rows = parseRows(text, ['layer', 'cosine'])
  const points: CosinePoint[] = []
  let layers = 0
  for (const r of rows) {
    const layer = Number(r.layer)
    layers = Math.max(layers, layer + 1)
    const cosine = Number(r.cosine)
    if (isFinite(cosine)) points.push({ layer, cosine })
  }
  return { points: points.sort((a, b) => a.layer - b.layer), layers }
}

export function renderCosine(text: string): string {
  const { points, layers } = parseCosine(text)
  const doc = new SvgDoc(DEFAULT_FRAME)
  const box = innerBox(DEFAULT_FRAME)
  const xMax = Math.max(layers - 1, 1)
  const xs = linearScale(0, xMax, box.x0, box.x1)
  const ys = linearScale(-1, 1, box.y0, box.y1)
  const xTicks = []
  for (let i = 0; i <= xMax; i++) xTicks.push(i)
  doc.axes(xs, ys, xTicks, linearTicks(-1, 1, 4), 'layer', 'cosine similarity')
  doc.title('Gradient angle: local vs backprop')
  doc.line(box.x0, ys(0), box.x1, ys(0), '#cccccc')
  doc.path(points.map((p) => [xs(p.layer), ys(p.cosine)]), '#1f77b4')
  for (const p of points) doc.cross(xs(p.layer), ys(p.cosine), 3, '#1f77b4')
  return doc.render()
}
