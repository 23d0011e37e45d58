import { ApiError, type FlowcaseClient } from './api.js'
import { escapeHtml } from './format.js'
import { RequestGate } from './gate.js'
import {
  defaultState,
  exportView,
  importView,
  SavedViewError,
  VIEW_NAMES,
  type DashboardState,
  type ViewName,
} from './state.js'
import type {
  CaseStatus,
  HistogramResponse,
  PortscanResponse,
  QueryResponse,
} from './types.js'
import type { ViewResult } from './views/common.js'
import { renderFlowsView } from './views/flows.js'
import { renderHistogramView } from './views/histogram.js'
import { renderReportView } from './views/report.js'
import { renderSummaryView } from './views/summary.js'
import { ImportWizard, type WizardDeps } from './views/wizard.js'

const FLOW_PAGE = 50

interface DashboardDeps {
  wizard?: Partial<WizardDeps>
}

function asApiError(e: unknown): ApiError {
  return e instanceof ApiError ? e : new ApiError(0, 'unknown', String(e))
}

/**
 * Single-analyst console over the case API. It owns one DashboardState,
 * fans each view out to its renderer, and never computes a number itself:
 * all figures on screen come from one response body each.
 */
export class Dashboard {
  state: DashboardState = defaultState()

  private readonly gate = new RequestGate()
  private cases: CaseStatus[] = []
  private days: string[] = []
  private flowOffset = 0

  private summaryResult: ViewResult<CaseStatus> = { kind: 'loading' }
  private reportResult: ViewResult<PortscanResponse> = { kind: 'loading' }
  private histResult: ViewResult<HistogramResponse> = { kind: 'loading' }
  private flowsResult: ViewResult<QueryResponse> = { kind: 'loading' }

  private wizard: ImportWizard | null = null

  constructor(
    private readonly root: HTMLElement,
    private readonly client: FlowcaseClient,
    private readonly deps: DashboardDeps = {},
  ) {}

  async init(): Promise<void> {
    try {
      this.cases = (await this.client.listCases()).cases
    } catch {
      this.cases = []
    }
    this.renderShell()
    const first = this.cases[0]
    if (first) await this.selectCase(first.case_id)
  }

  async selectCase(caseId: string): Promise<void> {
    this.state.caseId = caseId
    this.state.day = null
    this.state.filters = []
    this.flowOffset = 0
    await this.loadStatus()
    this.renderShell()
    await this.refreshView()
  }

  private async loadStatus(): Promise<void> {
    if (!this.state.caseId) return
    const fresh = this.gate.begin('status')
    try {
      const status = await this.client.caseStatus(this.state.caseId)
      if (!fresh()) return
      this.summaryResult = { kind: 'ok', data: status }
      this.days = status.days
      if (this.state.day === null && status.days.length > 0) {
        this.state.day = status.days[status.days.length - 1] ?? null
      }
    } catch (e) {
      if (!fresh()) return
      this.summaryResult = { kind: 'error', error: asApiError(e) }
      this.days = []
    }
  }

  setView(view: ViewName): void {
    this.state.view = view
    this.renderShell()
    void this.refreshView()
  }

  async setDay(day: string): Promise<void> {
    this.state.day = day
    this.renderShell()
    await this.refreshView()
  }

  async refreshView(): Promise<void> {
    switch (this.state.view) {
      case 'summary':
        await this.fetchSummary()
        break
      case 'report':
        await this.fetchReport()
        break
      case 'histogram':
        await this.fetchHistogram()
        break
      case 'flows':
        await this.fetchFlows()
        break
    }
  }

  async fetchSummary(): Promise<void> {
    if (!this.state.caseId) return
    const fresh = this.gate.begin('summary')
    this.summaryResult = { kind: 'loading' }
    this.renderMain()
    try {
      const data = await this.client.caseStatus(this.state.caseId)
      if (!fresh()) return
      this.summaryResult = { kind: 'ok', data }
      this.days = data.days
    } catch (e) {
      if (!fresh()) return
      this.summaryResult = { kind: 'error', error: asApiError(e) }
    }
    this.renderMain()
  }

  /** Thresholds travel verbatim from state into the request query string. */
  async fetchReport(maxBuckets?: number): Promise<void> {
    const { caseId, day, pairMin, totalMin } = this.state
    if (!caseId || !day) return
    const fresh = this.gate.begin('report')
    this.reportResult = { kind: 'loading' }
    this.renderMain()
    try {
      const data = await this.client.portscan(caseId, { day, pairMin, totalMin, maxBuckets })
      if (!fresh()) return
      this.reportResult = { kind: 'ok', data }
    } catch (e) {
      if (!fresh()) return
      this.reportResult = { kind: 'error', error: asApiError(e) }
    }
    this.renderMain()
  }

  async fetchHistogram(maxBuckets?: number): Promise<void> {
    const { caseId, day } = this.state
    if (!caseId || !day) return
    const fresh = this.gate.begin('histogram')
    this.histResult = { kind: 'loading' }
    this.renderMain()
    try {
      const data = await this.client.histogram(caseId, { day, maxBuckets })
      if (!fresh()) return
      this.histResult = { kind: 'ok', data }
    } catch (e) {
      if (!fresh()) return
      this.histResult = { kind: 'error', error: asApiError(e) }
    }
    this.renderMain()
  }

  async fetchFlows(): Promise<void> {
    if (!this.state.caseId) return
    const fresh = this.gate.begin('flows')
    this.flowsResult = { kind: 'loading' }
    this.renderMain()
    try {
      const data = await this.client.query(this.state.caseId, {
        filter: this.state.filters,
        limit: FLOW_PAGE,
        offset: this.flowOffset,
      })
      if (!fresh()) return
      this.flowsResult = { kind: 'ok', data }
    } catch (e) {
      if (!fresh()) return
      this.flowsResult = { kind: 'error', error: asApiError(e) }
    }
    this.renderMain()
  }

  /** Receiver drill-down: one flow query pinned to the pair and day. */
  selectPair(sender: string, receiver: string): void {
    this.state.filters = [
      { term: { field: 'orig_ip', value: sender } },
      { term: { field: 'resp_ip', value: receiver } },
      ...(this.state.day ? [{ term: { field: 'day', value: this.state.day } }] : []),
    ]
    this.flowOffset = 0
    this.state.view = 'flows'
    this.renderShell()
    void this.fetchFlows()
  }

  openWizard(): void {
    if (!this.state.caseId) return
    const mount = this.root.querySelector<HTMLElement>('.wizard-mount')
    if (!mount) return
    this.wizard = new ImportWizard(
      mount,
      this.state.caseId,
      { client: this.client, ...this.deps.wizard },
      () => {
        this.wizard = null
        void this.loadStatus().then(() => {
          this.renderShell()
          void this.refreshView()
        })
      },
    )
    void this.wizard.open()
  }

  applySavedView(text: string): void {
    const imported = importView(text)
    this.state = imported
    this.flowOffset = 0
    this.renderShell()
    void this.loadStatus().then(() => {
      this.renderShell()
      void this.refreshView()
    })
  }

  // -- rendering ---------------------------------------------------------------

  renderShell(): void {
    const caseOptions = this.cases
      .map(
        (c) =>
          `<option value="${escapeHtml(c.case_id)}" ${c.case_id === this.state.caseId ? 'selected' : ''}>${escapeHtml(c.case_id)}</option>`,
      )
      .join('')
    const dayOptions = this.days
      .map(
        (d) =>
          `<option value="${escapeHtml(d)}" ${d === this.state.day ? 'selected' : ''}>${escapeHtml(d)}</option>`,
      )
      .join('')
    const tabs = VIEW_NAMES.map(
      (v) =>
        `<button type="button" class="view-tab${v === this.state.view ? ' active' : ''}" data-view="${v}">${v}</button>`,
    ).join('')
    this.root.innerHTML = `
      <header class="topbar">
        <span class="brand">flowcase</span>
        <label>case
          <select class="case-select">
            <option value="" ${this.state.caseId ? '' : 'selected'} disabled>pick a case</option>
            ${caseOptions}
          </select>
        </label>
        <label>day <select class="day-select">${dayOptions}</select></label>
        <nav class="view-tabs">${tabs}</nav>
        <label>pair &gt;
          <input type="number" id="pair-min" min="0" value="${this.state.pairMin}">
        </label>
        <label>total &gt;
          <input type="number" id="total-min" min="0" value="${this.state.totalMin}">
        </label>
        <button type="button" class="view-export">Export view</button>
        <button type="button" class="view-import">Import view</button>
      </header>
      <div class="saved-view-panel hidden">
        <textarea id="saved-view-io" rows="8" spellcheck="false"></textarea>
        <div>
          <button type="button" class="saved-view-apply">Apply</button>
          <span class="saved-view-problem" role="alert"></span>
        </div>
      </div>
      <div class="wizard-mount"></div>
      <main class="view-mount">${this.state.caseId ? '' : '<div class="empty-state">Create or pick a case to begin.</div>'}</main>`
    this.wireShell()
    if (this.state.caseId) this.renderMain()
  }

  renderMain(): void {
    const mount = this.root.querySelector<HTMLElement>('.view-mount')
    if (!mount) return
    const day = this.state.day ?? ''
    switch (this.state.view) {
      case 'summary':
        renderSummaryView(mount, this.state.day, this.summaryResult, {
          onPickDay: (d) => void this.setDay(d),
          onRetry: () => void this.fetchSummary(),
          onOpenWizard: () => this.openWizard(),
        })
        break
      case 'report':
        renderReportView(mount, day, this.reportResult, {
          onSelectPair: (s, r) => this.selectPair(s, r),
          onRetry: () => void this.fetchReport(),
          onRaiseLimit: (required) => void this.fetchReport(required),
        })
        break
      case 'histogram':
        renderHistogramView(mount, this.days, this.histResult, {
          onToggleDay: (d) => void this.setDay(d),
          onRetry: () => void this.fetchHistogram(),
          onRaiseLimit: (required) => void this.fetchHistogram(required),
        })
        break
      case 'flows':
        renderFlowsView(mount, this.state.filters, this.flowOffset, FLOW_PAGE, this.flowsResult, {
          onPage: (offset) => {
            this.flowOffset = offset
            void this.fetchFlows()
          },
          onRetry: () => void this.fetchFlows(),
          onClearFilters: () => {
            this.state.filters = []
            this.flowOffset = 0
            void this.fetchFlows()
          },
        })
        break
    }
  }

  private wireShell(): void {
    const q = <T extends HTMLElement>(sel: string) => this.root.querySelector<T>(sel)
    const caseSelect = q<HTMLSelectElement>('.case-select')
    caseSelect?.addEventListener('change', () => void this.selectCase(caseSelect.value))
    const daySelect = q<HTMLSelectElement>('.day-select')
    daySelect?.addEventListener('change', () => void this.setDay(daySelect.value))
    for (const tab of this.root.querySelectorAll<HTMLButtonElement>('.view-tab')) {
      tab.addEventListener('click', () => this.setView(tab.dataset.view as ViewName))
    }
    const pairInput = q<HTMLInputElement>('#pair-min')
    pairInput?.addEventListener('change', () => {
      this.state.pairMin = Number(pairInput.value)
      if (this.state.view === 'report') void this.fetchReport()
    })
    const totalInput = q<HTMLInputElement>('#total-min')
    totalInput?.addEventListener('change', () => {
      this.state.totalMin = Number(totalInput.value)
      if (this.state.view === 'report') void this.fetchReport()
    })
    const panel = q<HTMLElement>('.saved-view-panel')
    const io = q<HTMLTextAreaElement>('#saved-view-io')
    q('.view-export')?.addEventListener('click', () => {
      if (io) io.value = exportView(this.state)
      panel?.classList.remove('hidden')
    })
    q('.view-import')?.addEventListener('click', () => {
      if (io) io.value = ''
      panel?.classList.remove('hidden')
    })
    q('.saved-view-apply')?.addEventListener('click', () => {
      const problem = q<HTMLElement>('.saved-view-problem')
      try {
        this.applySavedView(io?.value ?? '')
      } catch (e) {
        if (problem && e instanceof SavedViewError) problem.textContent = e.message
        else throw e
      }
    })
  }
}
