import { describe, expect, it } from 'vitest'
import {
  DEFAULT_PAIR_MIN,
  DEFAULT_TOTAL_MIN,
  defaultState,
  exportView,
  importView,
  SavedViewError,
} from '../src/state.js'

describe('defaults', () => {
  it('thresholds start at the documented floors', () => {
    const s = defaultState()
    expect(s.pairMin).toBe(10)
    expect(s.totalMin).toBe(500)
    expect(DEFAULT_PAIR_MIN).toBe(10)
    expect(DEFAULT_TOTAL_MIN).toBe(500)
  })

  it('fresh state opens on the summary with no filters', () => {
    const s = defaultState()
    expect(s.view).toBe('summary')
    expect(s.filters).toEqual([])
    expect(s.caseId).toBeNull()
    expect(s.day).toBeNull()
  })
})

describe('saved view round trip', () => {
  it('export then import reproduces the state exactly', () => {
    const original = {
      caseId: 'replica',
      day: '2021-06-15',
      filters: [
        { term: { field: 'orig_ip', value: '10.9.0.1' } },
        { range: { field: 'resp_port', lo: 1, hi: 1024 } },
        { exists: { field: 'service' } },
      ],
      pairMin: 4,
      totalMin: 99,
      view: 'flows' as const,
    }
    expect(importView(exportView(original))).toEqual(original)
  })

  it('exports are plain JSON documents with a kind tag', () => {
    const doc = JSON.parse(exportView(defaultState())) as Record<string, unknown>
    expect(doc.kind).toBe('flowcase-view')
    expect(doc.version).toBe(1)
  })
})

describe('saved view validation', () => {
  it.each([
    ['not json at all', 'nope{'],
    ['a bare array', '[1, 2]'],
    ['wrong kind', JSON.stringify({ kind: 'other', version: 1, state: defaultState() })],
    ['wrong version', JSON.stringify({ kind: 'flowcase-view', version: 2, state: defaultState() })],
    ['missing state', JSON.stringify({ kind: 'flowcase-view', version: 1 })],
    [
      'unknown view name',
      JSON.stringify({ kind: 'flowcase-view', version: 1, state: { ...defaultState(), view: 'pie' } }),
    ],
    [
      'string thresholds',
      JSON.stringify({
        kind: 'flowcase-view',
        version: 1,
        state: { ...defaultState(), pairMin: '10' },
      }),
    ],
    [
      'malformed filter clause',
      JSON.stringify({
        kind: 'flowcase-view',
        version: 1,
        state: { ...defaultState(), filters: [{ glob: { field: 'x' } }] },
      }),
    ],
    [
      'filter clause without a field',
      JSON.stringify({
        kind: 'flowcase-view',
        version: 1,
        state: { ...defaultState(), filters: [{ term: { value: 3 } }] },
      }),
    ],
  ])('rejects %s', (_label, text) => {
    expect(() => importView(text)).toThrow(SavedViewError)
  })
})
