// Wire shapes as the API serves them. Field names must match the JSON
// byte-for-byte; the dashboard never reshapes or re-derives these numbers.

export interface WatchConfig {
  watch_id: string
  directory: string
  poll_interval: number
  config_id: string
  enabled: boolean
}

export interface CaseStatus {
  case_id: string
  state: string
  created_us: number
  docs: number
  days: string[]
  disk_bytes: number
  running_imports: number
  watches: WatchConfig[]
  history_count: number
}

export interface CaseList {
  cases: CaseStatus[]
}

export interface FileEntry {
  path: string
  size: number
}

export interface FileList {
  files: FileEntry[]
}

export interface RepairOutcomeDict {
  input: string
  repaired: boolean
  records_kept: number
  records_dropped: number
  fixes: Record<string, number>
}

export interface ImportRecord {
  import_id: string
  status: string
  started: number
  finished: number
  config_id: string
  inputs: string[]
  docs_indexed: number
  packets_undecodable: number
  repair_outcomes: RepairOutcomeDict[]
  error: string | null
}

export interface ImportHistory {
  imports: ImportRecord[]
}

// Import preprocessing recipe; every field optional, server fills defaults.
export interface ImportConfigBody {
  config_id?: string
  source_kind?: 'pcap' | 'csv' | 'json' | 'auto'
  repair_enabled?: boolean
  target_day_override?: string | null
  saved_name?: string | null
}

export type SourceKind = NonNullable<ImportConfigBody['source_kind']>

export type FilterClause =
  | { term: { field: string; value: string | number } }
  | { range: { field: string; lo?: number; hi?: number } }
  | { exists: { field: string } }

export interface QueryBody {
  filter?: FilterClause[]
  limit?: number
  offset?: number
}

export interface DocHit {
  doc_id: string
  day: string
  source_kind: string
  fields: Record<string, string | number>
}

export interface QueryResponse {
  docs: DocHit[]
  count: number
}

// Nested bucket shape shared by POST aggregate and the portscan report.
export interface MetricValue {
  value: number
}

export interface ReceiverBucket {
  key: string
  value: MetricValue
}

export interface SenderBucket {
  key: string
  total_count: MetricValue
  receivers: { buckets: ReceiverBucket[] }
}

export interface PortscanResponse {
  day: string
  buckets: SenderBucket[]
}

export interface HistogramBin {
  lo: number
  hi: number | null
  sender_count: number
}

export interface HistogramResponse {
  day: string
  bins: HistogramBin[]
}

export interface ErrorEnvelope {
  error: {
    code: string
    message: string
    detail: Record<string, unknown>
  }
}
