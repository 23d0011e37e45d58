// Display formatting only: values shown are the API's, never recomputed.

export function fmtCount(n: number): string {
  return n.toLocaleString('en-US')
}

export function fmtBytes(n: number): string {
  if (n < 1024) return `${n} B`
  const units = ['KiB', 'MiB', 'GiB', 'TiB']
  let v = n
  let u = -1
  while (v >= 1024 && u < units.length - 1) {
    v /= 1024
    u += 1
  }
  return `${v.toFixed(1)} ${units[u]}`
}

/** Epoch microseconds to a readable UTC instant. */
export function fmtMicros(us: number): string {
  return new Date(us / 1000).toISOString().replace('T', ' ').replace('.000Z', 'Z')
}

export function fmtBinLabel(lo: number, hi: number | null): string {
  return hi === null ? `${fmtCount(lo)}+` : `[${fmtCount(lo)}, ${fmtCount(hi)})`
}

export function escapeHtml(s: string): string {
  return s
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
}
