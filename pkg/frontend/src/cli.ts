import * as fs from 'fs'
import { renderCosine } from './cosine'
import { renderFilters } from './filters'
import { renderPareto } from './pareto'
import { renderTrace } from './trace'

const RENDERERS: Record<string, (text: string) => string> = {
  pareto: renderPareto,
  trace: renderTrace,
  cosine: renderCosine,
  filters: renderFilters,
}

export function main(argv: string[]): number {
  const [kind, input, output] = argv
  const render = kind ? RENDERERS[kind] : undefined
  if (!render || !input || !output) {
    process.stderr.write(
      `usage: render <${Object.keys(RENDERERS).join('|')}> <input.csv> <output.svg>\n`,
    )
    return 1
  }
  let text: string
  try {
    text = fs.readFileSync(input, 'utf8')
  } catch (e) {
    process.stderr.write(`error: cannot read ${input}: ${e}\n`)
    return 2
  }
  try {
    fs.writeFileSync(output, render(text))
  } catch (e) {
    process.stderr.write(`error: ${e}\n`)
    return 2
  }
  return 0
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)))
}
