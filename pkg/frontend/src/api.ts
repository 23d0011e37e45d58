import type {
  CaseList,
  CaseStatus,
  ErrorEnvelope,
  FileList,
  FilterClause,
  HistogramResponse,
  ImportConfigBody,
  ImportHistory,
  ImportRecord,
  PortscanResponse,
  QueryBody,
  QueryResponse,
  WatchConfig,
} from './types.js'

/** A failed API call, carrying the server's machine-readable error envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message)
    this.name = 'ApiError'
  }
}

function isEnvelope(body: unknown): body is ErrorEnvelope {
  return (
    typeof body === 'object' &&
    body !== null &&
    typeof (body as ErrorEnvelope).error === 'object' &&
    typeof (body as ErrorEnvelope).error?.code === 'string'
  )
}

export interface PortscanParams {
  day: string
  pairMin: number
  totalMin: number
  maxBuckets?: number
}

export interface HistogramParams {
  day: string
  maxBuckets?: number
}

export interface StartImportBody {
  inputs: string[]
  config?: ImportConfigBody
  config_id?: string
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

/**
 * Typed client for the case-service HTTP API. Thresholds and limits pass
 * through to the query string verbatim; nothing is recomputed client-side.
 */
export class FlowcaseClient {
  constructor(
    private readonly base = '',
    private readonly fetchFn: FetchLike = (...a) => fetch(...a),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, raw?: BodyInit): Promise<T> {
    const init: RequestInit = { method }
    if (raw !== undefined) {
      init.body = raw
      init.headers = { 'content-type': 'application/octet-stream' }
    } else if (body !== undefined) {
      init.body = JSON.stringify(body)
      init.headers = { 'content-type': 'application/json' }
    }
    let res: Response
    try {
      res = await this.fetchFn(this.base + path, init)
    } catch (e) {
      throw new ApiError(0, 'unreachable', `cannot reach API: ${String(e)}`)
    }
    const text = await res.text()
    let parsed: unknown = null
    if (text) {
      try {
        parsed = JSON.parse(text)
      } catch {
        parsed = null
      }
    }
    if (!res.ok) {
      if (isEnvelope(parsed)) {
        const e = parsed.error
        throw new ApiError(res.status, e.code, e.message, e.detail ?? {})
      }
      throw new ApiError(res.status, 'http_error', `HTTP ${res.status}: ${text.slice(0, 200)}`)
    }
    return parsed as T
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/health')
  }

  listCases(): Promise<CaseList> {
    return this.request('GET', '/cases')
  }

  createCase(caseId: string): Promise<CaseStatus> {
    return this.request('POST', '/cases', { case_id: caseId })
  }

  deleteCase(caseId: string): Promise<{ deleted: string }> {
    return this.request('DELETE', `/cases/${encodeURIComponent(caseId)}`)
  }

  caseStatus(caseId: string): Promise<CaseStatus> {
    return this.request('GET', `/cases/${encodeURIComponent(caseId)}/status`)
  }

  listFiles(caseId: string): Promise<FileList> {
    return this.request('GET', `/cases/${encodeURIComponent(caseId)}/files`)
  }

  uploadFile(caseId: string, name: string, data: BodyInit): Promise<{ path: string; size: number }> {
    const q = new URLSearchParams({ name })
    return this.request('POST', `/cases/${encodeURIComponent(caseId)}/files?${q}`, undefined, data)
  }

  startImport(caseId: string, body: StartImportBody): Promise<{ import_id: string }> {
    return this.request('POST', `/cases/${encodeURIComponent(caseId)}/imports`, body)
  }

  runImport(caseId: string, body: StartImportBody): Promise<ImportRecord> {
    return this.request('POST', `/cases/${encodeURIComponent(caseId)}/imports?wait=true`, body)
  }

  listImports(caseId: string): Promise<ImportHistory> {
    return this.request('GET', `/cases/${encodeURIComponent(caseId)}/imports`)
  }

  putWatch(caseId: string, watch: WatchConfig): Promise<{ watch: WatchConfig; changed: boolean }> {
    const path = `/cases/${encodeURIComponent(caseId)}/watches/${encodeURIComponent(watch.watch_id)}`
    return this.request('PUT', path, watch)
  }

  query(caseId: string, body: QueryBody): Promise<QueryResponse> {
    return this.request('POST', `/cases/${encodeURIComponent(caseId)}/query`, body)
  }

  aggregate(caseId: string, spec: unknown, filter?: FilterClause[], maxBuckets?: number): Promise<unknown> {
    const body: Record<string, unknown> = { spec }
    if (filter) body.filter = filter
    if (maxBuckets !== undefined) body.max_buckets = maxBuckets
    return this.request('POST', `/cases/${encodeURIComponent(caseId)}/aggregate`, body)
  }

  portscan(caseId: string, p: PortscanParams): Promise<PortscanResponse> {
    const q = new URLSearchParams({
      day: p.day,
      pair_min: String(p.pairMin),
      total_min: String(p.totalMin),
    })
    if (p.maxBuckets !== undefined) q.set('max_buckets', String(p.maxBuckets))
    return this.request('GET', `/cases/${encodeURIComponent(caseId)}/detect/portscan?${q}`)
  }

  histogram(caseId: string, p: HistogramParams): Promise<HistogramResponse> {
    const q = new URLSearchParams({ day: p.day })
    if (p.maxBuckets !== undefined) q.set('max_buckets', String(p.maxBuckets))
    return this.request('GET', `/cases/${encodeURIComponent(caseId)}/detect/histogram?${q}`)
  }
}
