import { escapeHtml, fmtCount, fmtMicros } from '../format.js'
import type { DocHit, FilterClause, QueryResponse } from '../types.js'
import {
  emptyStateHtml,
  errorHtml,
  loadingHtml,
  setViewClass,
  wireErrorActions,
  type ViewResult,
} from './common.js'

export interface FlowsHandlers {
  onPage(offset: number): void
  onRetry(): void
  onClearFilters(): void
}

// Preferred column order when present; anything else is appended as found.
const FLOW_COLUMNS = [
  'first_ts', 'orig_ip', 'orig_port', 'resp_ip', 'resp_port', 'proto',
  'duration', 'orig_bytes', 'resp_bytes', 'orig_pkts', 'resp_pkts', 'day',
]

const TS_FIELDS = new Set(['first_ts', 'last_ts'])

function columnsFor(docs: DocHit[]): string[] {
  const seen = new Set<string>()
  for (const d of docs) for (const f of Object.keys(d.fields)) seen.add(f)
  const ordered = FLOW_COLUMNS.filter((c) => seen.has(c))
  const extra = [...seen].filter((c) => !FLOW_COLUMNS.includes(c)).sort()
  return [...ordered, ...extra]
}

function cell(doc: DocHit, col: string): string {
  const v = doc.fields[col]
  if (v === undefined) return ''
  if (TS_FIELDS.has(col) && typeof v === 'number') return fmtMicros(v)
  return String(v)
}

function filterLabel(f: FilterClause): string {
  if ('term' in f) return `${f.term.field} = ${f.term.value}`
  if ('range' in f) {
    const lo = f.range.lo === undefined ? '' : `${f.range.lo} <= `
    const hi = f.range.hi === undefined ? '' : ` <= ${f.range.hi}`
    return `${lo}${f.range.field}${hi}`
  }
  return `${f.exists.field} exists`
}

/** Paged table over the raw query hits; filters are shown, never inferred. */
export function renderFlowsView(
  root: HTMLElement,
  filters: FilterClause[],
  offset: number,
  limit: number,
  result: ViewResult<QueryResponse>,
  handlers: FlowsHandlers,
): void {
  setViewClass(root, 'flows-view')
  if (result.kind === 'loading') {
    root.innerHTML = loadingHtml()
    return
  }
  const chips = filters
    .map((f) => `<span class="filter-chip">${escapeHtml(filterLabel(f))}</span>`)
    .join('')
  const filterBar = `
    <div class="filter-bar">
      ${chips || '<span class="filter-chip none">no filters</span>'}
      ${filters.length ? '<button type="button" class="clear-filters">Clear</button>' : ''}
    </div>`
  if (result.kind === 'error') {
    root.innerHTML = filterBar + errorHtml(result.error)
    wireErrorActions(root, handlers.onRetry, () => {})
    root.querySelector('.clear-filters')?.addEventListener('click', handlers.onClearFilters)
    return
  }
  const { docs, count } = result.data
  if (count === 0 && offset === 0) {
    root.innerHTML = filterBar + emptyStateHtml('No documents match the current filters.')
    root.querySelector('.clear-filters')?.addEventListener('click', handlers.onClearFilters)
    return
  }
  const cols = columnsFor(docs)
  const head = cols.map((c) => `<th>${escapeHtml(c)}</th>`).join('')
  const body = docs
    .map(
      (d) =>
        `<tr>${cols.map((c) => `<td>${escapeHtml(cell(d, c))}</td>`).join('')}</tr>`,
    )
    .join('')
  // count is this page's size; a full page means more may follow
  const from = offset + 1
  const to = offset + docs.length
  root.innerHTML = `
    ${filterBar}
    <div class="flows-meta">
      <span class="flow-count">${fmtCount(count)} documents on this page</span>
      <span>rows ${fmtCount(from)}-${fmtCount(to)}</span>
      <button type="button" class="page-prev" ${offset === 0 ? 'disabled' : ''}>Prev</button>
      <button type="button" class="page-next" ${docs.length < limit ? 'disabled' : ''}>Next</button>
    </div>
    <table class="flow-table"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`
  root.querySelector('.clear-filters')?.addEventListener('click', handlers.onClearFilters)
  root
    .querySelector('.page-prev')
    ?.addEventListener('click', () => handlers.onPage(Math.max(0, offset - limit)))
  root
    .querySelector('.page-next')
    ?.addEventListener('click', () => handlers.onPage(offset + limit))
}
