import { ApiError } from '../api.js'
import { escapeHtml, fmtCount } from '../format.js'

export type ViewResult<T> =
  | { kind: 'loading' }
  | { kind: 'ok'; data: T }
  | { kind: 'error'; error: ApiError }

/** Swap the host's view marker class without disturbing its other classes. */
export function setViewClass(root: HTMLElement, name: string): void {
  for (const cls of [...root.classList]) {
    if (cls.endsWith('-view')) root.classList.remove(cls)
  }
  root.classList.add(name)
}

export function bucketLimitFrom(error: ApiError): number | null {
  if (error.code !== 'too_many_buckets') return null
  const required = error.detail['required']
  return typeof required === 'number' ? required : null
}

/**
 * Inline failure panel. A too_many_buckets error gets its dedicated banner
 * with a one-click re-run at the size the server asked for; anything else
 * shows the envelope verbatim plus a retry.
 */
export function errorHtml(error: ApiError): string {
  const required = bucketLimitFrom(error)
  if (required !== null) {
    return `
      <div class="banner bucket-banner" role="alert">
        <p>${escapeHtml(error.message)}</p>
        <button type="button" class="raise-limit" data-required="${required}">
          Raise limit to ${fmtCount(required)} and re-run
        </button>
      </div>`
  }
  return `
    <div class="error-box" role="alert">
      <p><code>error[${escapeHtml(error.code)}]</code> ${escapeHtml(error.message)}</p>
      <button type="button" class="retry">Retry</button>
    </div>`
}

export function wireErrorActions(
  root: HTMLElement,
  onRetry: () => void,
  onRaiseLimit: (required: number) => void,
): void {
  root.querySelector<HTMLButtonElement>('button.retry')?.addEventListener('click', onRetry)
  const raise = root.querySelector<HTMLButtonElement>('button.raise-limit')
  raise?.addEventListener('click', () => {
    onRaiseLimit(Number(raise.dataset.required))
  })
}

export function loadingHtml(): string {
  return '<div class="loading">Loading...</div>'
}

export function emptyStateHtml(text: string): string {
  return `<div class="empty-state">${escapeHtml(text)}</div>`
}
