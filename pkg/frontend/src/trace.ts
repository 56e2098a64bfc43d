import { parseRows } from './csv'
import { DEFAULT_FRAME, Frame, SvgDoc, innerBox, linearScale, linearTicks } from './svg'

export type Span = {
  time: number
  duration: number
  stage: number
  kind: string
  item: number
}

const KIND_COLORS: Record<string, string> = {
  fwd: '#1f77b4',
  bwd: '#ff7f0e',
  aux: '#2ca02c',
  send: '#9467bd',
  recv: '#8c564b',
}

export function parseTrace(text: string): Span[] {
  const rows = parseRows(text, ['time', 'duration', 'stage', 'kind'])
  return rows
    .map((r) => ({
      time: Number(r.time),
      duration: Number(r.duration),
      stage: Number(r.stage),
      kind: r.kind,
      item: Number(r.item || 0),
    }))
    .sort((a, b) => a.time - b.time || a.stage - b.stage)
}

/** Gantt swim-lanes, one per pipeline stage, colored by event kind. */
export function renderTrace(text: string): string {
  const spans = parseTrace(text)
  const stages = spans.length ? Math.max(...spans.map((s) => s.stage)) + 1 : 1
  const frame: Frame = {
    ...DEFAULT_FRAME,
    height: Math.max(180, 90 + stages * 34),
  }
  const doc = new SvgDoc(frame)
  const box = innerBox(frame)
  const tMax = spans.length
    ? Math.max(...spans.map((s) => s.time + s.duration))
    : 1
  const xs = linearScale(0, tMax, box.x0, box.x1)
  const laneH = (box.y0 - box.y1) / stages
  doc.axes(xs, (v) => v, linearTicks(0, tMax), [], 'cycles', '')
  doc.title('Pipeline execution trace')
  for (let s = 0; s < stages; s++) {
    const y = box.y1 + s * laneH
    doc.text(box.x0 - 7, y + laneH / 2 + 3, `stage ${s}`, 'end')
    if (s > 0) doc.line(box.x0, y, box.x1, y, '#dddddd')
  }
  for (const span of spans) {
    const y = box.y1 + span.stage * laneH + laneH * 0.15
    doc.rect(
      xs(span.time),
      y,
      Math.max(xs(span.time + span.duration) - xs(span.time), 0.5),
      laneH * 0.7,
      KIND_COLORS[span.kind] || '#7f7f7f',
    )
  }
  const kinds = [...new Set(spans.map((s) => s.kind))].sort()
  kinds.forEach((kind, i) => {
    const x = box.x0 + 10 + i * 70
    doc.rect(x, 4, 10, 10, KIND_COLORS[kind] || '#7f7f7f')
    doc.text(x + 14, 13, kind, 'start')
  })
  return doc.render()
}
