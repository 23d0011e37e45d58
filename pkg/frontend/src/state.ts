import type { FilterClause } from './types.js'

export type ViewName = 'summary' | 'flows' | 'report' | 'histogram'

export const VIEW_NAMES: readonly ViewName[] = ['summary', 'flows', 'report', 'histogram']

// Per-pair and per-sender floors for the scan report; both strict (>).
export const DEFAULT_PAIR_MIN = 10
export const DEFAULT_TOTAL_MIN = 500

export interface DashboardState {
  caseId: string | null
  day: string | null
  filters: FilterClause[]
  pairMin: number
  totalMin: number
  view: ViewName
}

export function defaultState(): DashboardState {
  return {
    caseId: null,
    day: null,
    filters: [],
    pairMin: DEFAULT_PAIR_MIN,
    totalMin: DEFAULT_TOTAL_MIN,
    view: 'summary',
  }
}

export class SavedViewError extends Error {}

const SAVED_VIEW_KIND = 'flowcase-view'
const SAVED_VIEW_VERSION = 1

/** Serialize the whole analytic context so a view can be re-opened elsewhere. */
export function exportView(state: DashboardState): string {
  return JSON.stringify(
    { kind: SAVED_VIEW_KIND, version: SAVED_VIEW_VERSION, state },
    null,
    2,
  )
}

function isFilterClause(raw: unknown): raw is FilterClause {
  if (typeof raw !== 'object' || raw === null) return false
  const keys = Object.keys(raw)
  if (keys.length !== 1) return false
  const kind = keys[0]
  if (kind !== 'term' && kind !== 'range' && kind !== 'exists') return false
  const body = (raw as Record<string, unknown>)[kind]
  return typeof body === 'object' && body !== null &&
    typeof (body as { field?: unknown }).field === 'string'
}

export function importView(text: string): DashboardState {
  let raw: unknown
  try {
    raw = JSON.parse(text)
  } catch {
    throw new SavedViewError('saved view is not valid JSON')
  }
  if (typeof raw !== 'object' || raw === null) {
    throw new SavedViewError('saved view must be a JSON object')
  }
  const doc = raw as Record<string, unknown>
  if (doc.kind !== SAVED_VIEW_KIND) {
    throw new SavedViewError(`not a saved view document (kind=${String(doc.kind)})`)
  }
  if (doc.version !== SAVED_VIEW_VERSION) {
    throw new SavedViewError(`unsupported saved view version ${String(doc.version)}`)
  }
  const s = doc.state as Record<string, unknown> | undefined
  if (typeof s !== 'object' || s === null) {
    throw new SavedViewError('saved view is missing its state object')
  }
  const view = s.view
  if (typeof view !== 'string' || !VIEW_NAMES.includes(view as ViewName)) {
    throw new SavedViewError(`unknown view ${String(view)}`)
  }
  const pairMin = s.pairMin
  const totalMin = s.totalMin
  if (typeof pairMin !== 'number' || typeof totalMin !== 'number') {
    throw new SavedViewError('thresholds must be numbers')
  }
  const filters = Array.isArray(s.filters) ? s.filters : []
  if (!filters.every(isFilterClause)) {
    throw new SavedViewError('filters must be term/range/exists clauses')
  }
  return {
    caseId: typeof s.caseId === 'string' ? s.caseId : null,
    day: typeof s.day === 'string' ? s.day : null,
    filters,
    pairMin,
    totalMin,
    view: view as ViewName,
  }
}
