import { parseMatrix } from './csv'
import { Frame, SvgDoc } from './svg'

/** Grayscale fill for a min-max normalized weight in [0, 1]. */
export function gray(v: number): string {
  const clamped = Math.min(Math.max(v, 0), 1)
  const level = Math.round(clamped * 255)
  const hex = level.toString(16).padStart(2, '0')
  return `#${hex}${hex}${hex}`
}

/** One horizontal strip per filter row, stacked into a grid; the dense
 * analog of a conv first-layer filter mosaic. */
export function renderFilters(text: string): string {
  const rows = parseMatrix(text)
  const cell = 10
  const gap = 4
  const width = Math.max(rows.length ? rows[0].length * cell + 40 : 240, 240)
  const height = Math.max(rows.length * (cell + gap) + 50, 120)
  const frame: Frame = {
    width,
    height,
    margin: { top: 30, right: 10, bottom: 10, left: 30 },
  }
  const doc = new SvgDoc(frame)
  doc.title('First-layer filters (row-normalized)')
  rows.forEach((row, i) => {
    const y = frame.margin.top + i * (cell + gap)
    doc.text(frame.margin.left - 5, y + cell - 2, String(i), 'end')
    row.forEach((v, j) => {
      doc.rect(frame.margin.left + j * cell, y, cell, cell, gray(v))
    })
  })
  return doc.render()
}
