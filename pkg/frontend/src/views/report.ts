import { escapeHtml, fmtCount } from '../format.js'
import type { PortscanResponse } from '../types.js'
import {
  emptyStateHtml,
  errorHtml,
  loadingHtml,
  setViewClass,
  wireErrorActions,
  type ViewResult,
} from './common.js'

export interface ReportHandlers {
  onSelectPair(sender: string, receiver: string): void
  onRetry(): void
  onRaiseLimit(required: number): void
}

function senderHtml(
  bucket: PortscanResponse['buckets'][number],
  maxTotal: number,
): string {
  const total = bucket.total_count.value
  // width is presentation only; the number shown is the server's
  const pct = maxTotal > 0 ? Math.max(1, Math.round((total / maxTotal) * 100)) : 0
  const receivers = bucket.receivers.buckets
    .map(
      (r) => `
        <button type="button" class="receiver-row" data-receiver="${escapeHtml(r.key)}">
          <span class="receiver-ip">${escapeHtml(r.key)}</span>
          <span class="receiver-ports">${fmtCount(r.value.value)} ports</span>
        </button>`,
    )
    .join('')
  return `
    <div class="sender" data-sender="${escapeHtml(bucket.key)}">
      <button type="button" class="sender-row" aria-expanded="false">
        <span class="sender-ip">${escapeHtml(bucket.key)}</span>
        <span class="bar-track"><span class="bar" style="width: ${pct}%"></span></span>
        <span class="sender-total">${fmtCount(total)}</span>
      </button>
      <div class="receivers hidden">${receivers}</div>
    </div>`
}

/**
 * Scan report as a ranked bar list. Senders arrive sorted by the server;
 * clicking one reveals its per-receiver port counts, and clicking a
 * receiver hands the pair to the caller for a flow drill-down.
 */
export function renderReportView(
  root: HTMLElement,
  day: string,
  result: ViewResult<PortscanResponse>,
  handlers: ReportHandlers,
): void {
  setViewClass(root, 'report-view')
  if (result.kind === 'loading') {
    root.innerHTML = loadingHtml()
    return
  }
  if (result.kind === 'error') {
    root.innerHTML = errorHtml(result.error)
    wireErrorActions(root, handlers.onRetry, handlers.onRaiseLimit)
    return
  }
  const buckets = result.data.buckets
  if (buckets.length === 0) {
    root.innerHTML = emptyStateHtml(`No senders exceeded the scan thresholds on ${day}.`)
    return
  }
  const maxTotal = Math.max(...buckets.map((b) => b.total_count.value))
  root.innerHTML = `
    <div class="report-head">
      <span>${buckets.length === 1 ? '1 sender' : `${buckets.length} senders`} flagged on ${escapeHtml(day)}</span>
      <span class="report-cols">sender / unique destination ports</span>
    </div>
    <div class="sender-list">${buckets.map((b) => senderHtml(b, maxTotal)).join('')}</div>`

  for (const senderEl of root.querySelectorAll<HTMLElement>('.sender')) {
    const sender = senderEl.dataset.sender ?? ''
    const row = senderEl.querySelector<HTMLButtonElement>('.sender-row')
    const receivers = senderEl.querySelector<HTMLElement>('.receivers')
    row?.addEventListener('click', () => {
      const nowHidden = receivers?.classList.toggle('hidden') ?? true
      row.setAttribute('aria-expanded', String(!nowHidden))
    })
    for (const recvBtn of senderEl.querySelectorAll<HTMLButtonElement>('.receiver-row')) {
      recvBtn.addEventListener('click', () => {
        handlers.onSelectPair(sender, recvBtn.dataset.receiver ?? '')
      })
    }
  }
}
