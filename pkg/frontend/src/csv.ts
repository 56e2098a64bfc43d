import Papa from 'papaparse'

/** Parse a headered CSV into records; throws on missing columns. */
export function parseRows(
  text: string,
  required: string[],
): Array<Record<string, string>> {
  const trimmed = text.trim()
  if (!trimmed) return []
  const out = Papa.parse<Record<string, string>>(trimmed, {
    header: true,
    skipEmptyLines: true,
  })
  if (out.errors.length) {
    throw new Error(`csv parse error: ${out.errors[0].message}`)
  }
  const fields = out.meta.fields || []
  for (const col of required) {
    if (!fields.includes(col)) {
      throw new Error(`csv missing required column '${col}'`)
    }
  }
  return out.data
}

/** Parse a headerless CSV of floats into a row-major matrix. */
export function parseMatrix(text: string): number[][] {
  const trimmed = text.trim()
  if (!trimmed) return []
  const out = Papa.parse<string[]>(trimmed, { skipEmptyLines: true })
  if (out.errors.length) {
    throw new Error(`csv parse error: ${out.errors[0].message}`)
  }
  return out.data.map((row) =>
    row.map((v) => {
      const n = Number(v)
      if (!isFinite(n)) throw new Error(`non-numeric cell '${v}'`)
      return n
    }),
  )
}
