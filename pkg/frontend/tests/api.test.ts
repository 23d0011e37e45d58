import { describe, expect, it } from 'vitest'
import { ApiError, FlowcaseClient } from '../src/api.js'
import tooManyBuckets from './fixtures/error-too-many-buckets.json'
import notFound from './fixtures/error-not-found.json'
import twoScanners from './fixtures/portscan-two-scanners.json'
import { jsonResponse, StubFetch } from './helpers.js'

describe('portscan request building', () => {
  it('thresholds pass into the query string verbatim', async () => {
    const stub = new StubFetch(() => jsonResponse(twoScanners))
    const client = new FlowcaseClient('', stub.fn)
    await client.portscan('replica', { day: '2021-06-15', pairMin: 17, totalMin: 902 })

    const url = new URL(stub.lastUrl(), 'http://x')
    expect(url.pathname).toBe('/cases/replica/detect/portscan')
    expect(url.searchParams.get('day')).toBe('2021-06-15')
    expect(url.searchParams.get('pair_min')).toBe('17')
    expect(url.searchParams.get('total_min')).toBe('902')
    expect(url.searchParams.has('max_buckets')).toBe(false)
  })

  it('max_buckets appears only when the caller raises it', async () => {
    const stub = new StubFetch(() => jsonResponse(twoScanners))
    const client = new FlowcaseClient('', stub.fn)
    await client.portscan('replica', {
      day: '2021-06-15',
      pairMin: 10,
      totalMin: 500,
      maxBuckets: 20000,
    })
    const url = new URL(stub.lastUrl(), 'http://x')
    expect(url.searchParams.get('max_buckets')).toBe('20000')
  })

  it('case ids are URL-encoded in paths', async () => {
    const stub = new StubFetch(() => jsonResponse(twoScanners))
    const client = new FlowcaseClient('', stub.fn)
    await client.histogram('week 1/afternoon', { day: '2021-06-15' })
    expect(stub.lastUrl()).toContain('/cases/week%201%2Fafternoon/detect/histogram')
  })
})

describe('error envelope handling', () => {
  it('maps the recorded too_many_buckets envelope onto ApiError', async () => {
    const stub = new StubFetch(() => jsonResponse(tooManyBuckets, 422))
    const client = new FlowcaseClient('', stub.fn)
    const err = await client
      .portscan('replica', { day: '2021-06-15', pairMin: 10, totalMin: 500 })
      .then(() => null)
      .catch((e: unknown) => e)
    expect(err).toBeInstanceOf(ApiError)
    const api = err as ApiError
    expect(api.status).toBe(422)
    expect(api.code).toBe('too_many_buckets')
    expect(api.detail).toEqual({ required: 201, limit: 2 })
    expect(api.message).toContain('retry with max_buckets')
  })

  it('maps the recorded not_found envelope', async () => {
    const stub = new StubFetch(() => jsonResponse(notFound, 404))
    const client = new FlowcaseClient('', stub.fn)
    await expect(client.caseStatus('no-such-case')).rejects.toMatchObject({
      code: 'not_found',
      status: 404,
    })
  })

  it('non-envelope failures become generic http errors', async () => {
    const stub = new StubFetch(() => new Response('<html>proxy died</html>', { status: 502 }))
    const client = new FlowcaseClient('', stub.fn)
    await expect(client.health()).rejects.toMatchObject({ code: 'http_error', status: 502 })
  })

  it('network failures become code unreachable', async () => {
    const client = new FlowcaseClient('', () => Promise.reject(new TypeError('fetch failed')))
    await expect(client.health()).rejects.toMatchObject({ code: 'unreachable', status: 0 })
  })
})

describe('query bodies', () => {
  it('filters are sent exactly as given', async () => {
    const stub = new StubFetch(() => jsonResponse({ docs: [], count: 0 }))
    const client = new FlowcaseClient('', stub.fn)
    const filter = [
      { term: { field: 'orig_ip', value: '10.9.0.1' } },
      { range: { field: 'resp_port', lo: 1024, hi: 2048 } },
    ]
    await client.query('replica', { filter, limit: 25, offset: 50 })
    expect(stub.bodies()[0]).toEqual({ filter, limit: 25, offset: 50 })
  })
})
