import { ApiError, type FlowcaseClient } from '../api.js'
import { escapeHtml, fmtBytes, fmtCount } from '../format.js'
import type { FileEntry, ImportRecord, SourceKind } from '../types.js'

const PCAP_MAGICS = ['d4c3b2a1', 'a1b2c3d4', 'a1b23c4d', '4d3cb2a1']

/**
 * Best-effort kind pre-selection for the config step. The server re-detects
 * authoritatively on import; this only saves the analyst a dropdown click.
 */
export function detectFormat(name: string, head: Uint8Array | null): SourceKind {
  const lower = name.toLowerCase()
  if (lower.endsWith('.pcap') || lower.endsWith('.cap')) return 'pcap'
  if (lower.endsWith('.csv')) return 'csv'
  if (lower.endsWith('.json') || lower.endsWith('.jsonl') || lower.endsWith('.ndjson')) return 'json'
  if (head && head.length >= 4) {
    const magic = [...head.slice(0, 4)].map((b) => b.toString(16).padStart(2, '0')).join('')
    if (PCAP_MAGICS.includes(magic)) return 'pcap'
  }
  return 'auto'
}

export type WizardStep = 'files' | 'config' | 'run' | 'history'

export interface WizardDeps {
  client: FlowcaseClient
  detect?: typeof detectFormat
  pollMs?: number
}

interface WizardConfig {
  source_kind: SourceKind
  repair_enabled: boolean
  target_day_override: string
  config_id: string
}

/**
 * Step-by-step import: choose or upload files, confirm the detected kind
 * and config, run, then watch the history until the import settles.
 */
export class ImportWizard {
  step: WizardStep = 'files'
  files: FileEntry[] = []
  selected = new Set<string>()
  config: WizardConfig = {
    source_kind: 'auto',
    repair_enabled: true,
    target_day_override: '',
    config_id: 'default',
  }
  history: ImportRecord[] = []
  runningId: string | null = null
  error: ApiError | null = null

  private readonly client: FlowcaseClient
  private readonly detect: typeof detectFormat
  private readonly pollMs: number
  private timer: ReturnType<typeof setInterval> | null = null

  constructor(
    private readonly root: HTMLElement,
    private readonly caseId: string,
    deps: WizardDeps,
    private readonly onClose: () => void,
  ) {
    this.client = deps.client
    this.detect = deps.detect ?? detectFormat
    this.pollMs = deps.pollMs ?? 1500
  }

  async open(): Promise<void> {
    await this.refreshFiles()
    this.render()
  }

  close(): void {
    this.stopPolling()
    this.root.innerHTML = ''
    this.onClose()
  }

  async refreshFiles(): Promise<void> {
    try {
      this.files = (await this.client.listFiles(this.caseId)).files
      this.error = null
    } catch (e) {
      this.error = e instanceof ApiError ? e : new ApiError(0, 'unknown', String(e))
    }
  }

  /** Upload raw bytes into the case, select the file, pre-set its kind. */
  async uploadAndSelect(name: string, data: ArrayBuffer): Promise<void> {
    try {
      await this.client.uploadFile(this.caseId, name, data)
      await this.refreshFiles()
      this.selected.add(name)
      this.config.source_kind = this.detect(name, new Uint8Array(data.slice(0, 4)))
      this.error = null
    } catch (e) {
      this.error = e instanceof ApiError ? e : new ApiError(0, 'unknown', String(e))
    }
    this.render()
  }

  async run(): Promise<void> {
    const config: Record<string, unknown> = {
      config_id: this.config.config_id || 'default',
      source_kind: this.config.source_kind,
      repair_enabled: this.config.repair_enabled,
    }
    if (this.config.target_day_override) {
      config.target_day_override = this.config.target_day_override
    }
    try {
      const res = await this.client.startImport(this.caseId, {
        inputs: [...this.selected],
        config,
      })
      this.runningId = res.import_id
      this.error = null
      this.step = 'history'
      await this.refreshHistory()
      this.startPolling()
    } catch (e) {
      this.error = e instanceof ApiError ? e : new ApiError(0, 'unknown', String(e))
    }
    this.render()
  }

  async refreshHistory(): Promise<void> {
    try {
      this.history = (await this.client.listImports(this.caseId)).imports
      this.error = null
    } catch (e) {
      this.error = e instanceof ApiError ? e : new ApiError(0, 'unknown', String(e))
    }
    const mine = this.history.find((r) => r.import_id === this.runningId)
    if (mine && mine.status !== 'running') this.stopPolling()
  }

  private startPolling(): void {
    this.stopPolling()
    this.timer = setInterval(() => {
      void this.refreshHistory().then(() => this.render())
    }, this.pollMs)
  }

  private stopPolling(): void {
    if (this.timer !== null) clearInterval(this.timer)
    this.timer = null
  }

  private filesHtml(): string {
    const rows = this.files
      .map(
        (f) => `
        <label class="wiz-file">
          <input type="checkbox" class="wiz-file-pick" value="${escapeHtml(f.path)}"
            ${this.selected.has(f.path) ? 'checked' : ''}>
          <code>${escapeHtml(f.path)}</code>
          <span class="wiz-size">${fmtBytes(f.size)}</span>
        </label>`,
      )
      .join('')
    return `
      <div class="wiz-files">${rows || '<p class="empty-state">No files in this case yet. Upload one below.</p>'}</div>
      <label class="wiz-upload">Upload: <input type="file" class="wiz-upload-input"></label>
      <div class="wiz-nav">
        <button type="button" class="wiz-cancel">Cancel</button>
        <button type="button" class="wiz-next" ${this.selected.size === 0 ? 'disabled' : ''}>Next</button>
      </div>`
  }

  private configHtml(): string {
    const kinds: SourceKind[] = ['auto', 'pcap', 'csv', 'json']
    const options = kinds
      .map(
        (k) =>
          `<option value="${k}" ${k === this.config.source_kind ? 'selected' : ''}>${k}</option>`,
      )
      .join('')
    return `
      <div class="wiz-config">
        <label>Source kind
          <select class="wiz-kind">${options}</select>
        </label>
        <label><input type="checkbox" class="wiz-repair" ${this.config.repair_enabled ? 'checked' : ''}>
          repair damaged captures before decoding</label>
        <label>Day override for undated rows
          <input type="text" class="wiz-day" placeholder="YYYY-MM-DD"
            value="${escapeHtml(this.config.target_day_override)}"></label>
        <label>Config id
          <input type="text" class="wiz-config-id" value="${escapeHtml(this.config.config_id)}"></label>
      </div>
      <div class="wiz-nav">
        <button type="button" class="wiz-back">Back</button>
        <button type="button" class="wiz-next">Next</button>
      </div>`
  }

  private runHtml(): string {
    const inputs = [...this.selected].map((p) => `<li><code>${escapeHtml(p)}</code></li>`).join('')
    return `
      <div class="wiz-run">
        <p>Import ${this.selected.size} file(s) as <strong>${this.config.source_kind}</strong>,
          repair ${this.config.repair_enabled ? 'on' : 'off'}${
            this.config.target_day_override
              ? `, undated rows filed under ${escapeHtml(this.config.target_day_override)}`
              : ''
          }:</p>
        <ul>${inputs}</ul>
      </div>
      <div class="wiz-nav">
        <button type="button" class="wiz-back">Back</button>
        <button type="button" class="wiz-run-btn">Run import</button>
      </div>`
  }

  private historyHtml(): string {
    const rows = this.history
      .map((r) => {
        const failed = r.status === 'failed'
        return `
        <li class="wiz-record ${escapeHtml(r.status)}" data-import="${escapeHtml(r.import_id)}">
          <code>${escapeHtml(r.import_id)}</code>
          <span class="wiz-status">${escapeHtml(r.status)}</span>
          <span>${fmtCount(r.docs_indexed)} docs</span>
          ${failed && r.error ? `<span class="wiz-error">${escapeHtml(r.error)}</span>` : ''}
        </li>`
      })
      .join('')
    return `
      <ul class="wiz-history">${rows || '<li class="empty-state">no imports yet</li>'}</ul>
      <div class="wiz-nav">
        <button type="button" class="wiz-refresh">Refresh</button>
        <button type="button" class="wiz-done">Done</button>
      </div>`
  }

  render(): void {
    const bodies: Record<WizardStep, () => string> = {
      files: () => this.filesHtml(),
      config: () => this.configHtml(),
      run: () => this.runHtml(),
      history: () => this.historyHtml(),
    }
    const err = this.error
      ? `<p class="wiz-problem" role="alert">error[${escapeHtml(this.error.code)}]: ${escapeHtml(this.error.message)}</p>`
      : ''
    this.root.innerHTML = `
      <div class="wizard" data-step="${this.step}">
        <h3>Import into ${escapeHtml(this.caseId)}: ${this.step}</h3>
        ${err}
        ${bodies[this.step]()}
      </div>`
    this.wire()
  }

  private wire(): void {
    const q = <T extends HTMLElement>(sel: string) => this.root.querySelector<T>(sel)
    q('.wiz-cancel')?.addEventListener('click', () => this.close())
    q('.wiz-done')?.addEventListener('click', () => this.close())
    q('.wiz-back')?.addEventListener('click', () => {
      this.step = this.step === 'run' ? 'config' : 'files'
      this.render()
    })
    q('.wiz-next')?.addEventListener('click', () => {
      this.step = this.step === 'files' ? 'config' : 'run'
      this.render()
    })
    q('.wiz-run-btn')?.addEventListener('click', () => void this.run())
    q('.wiz-refresh')?.addEventListener('click', () =>
      void this.refreshHistory().then(() => this.render()),
    )
    for (const box of this.root.querySelectorAll<HTMLInputElement>('.wiz-file-pick')) {
      box.addEventListener('change', () => {
        if (box.checked) this.selected.add(box.value)
        else this.selected.delete(box.value)
        this.render()
      })
    }
    const upload = q<HTMLInputElement>('.wiz-upload-input')
    upload?.addEventListener('change', () => {
      const file = upload.files?.[0]
      if (!file) return
      void file.arrayBuffer().then((buf) => this.uploadAndSelect(file.name, buf))
    })
    const kind = q<HTMLSelectElement>('.wiz-kind')
    if (kind) kind.value = this.config.source_kind
    kind?.addEventListener('change', () => {
      this.config.source_kind = kind.value as SourceKind
    })
    const repair = q<HTMLInputElement>('.wiz-repair')
    repair?.addEventListener('change', () => {
      this.config.repair_enabled = repair.checked
    })
    const day = q<HTMLInputElement>('.wiz-day')
    day?.addEventListener('change', () => {
      this.config.target_day_override = day.value.trim()
    })
    const configId = q<HTMLInputElement>('.wiz-config-id')
    configId?.addEventListener('change', () => {
      this.config.config_id = configId.value.trim()
    })
  }
}
