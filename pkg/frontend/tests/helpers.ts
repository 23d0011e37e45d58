// Shared plumbing for the contract tests: a recording fetch stub so every
// assertion runs against the recorded wire bytes, never a live server.

export interface RecordedCall {
  url: string
  init?: RequestInit
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  })
}

type Handler = (url: string, init?: RequestInit) => Response | Promise<Response>

export class StubFetch {
  calls: RecordedCall[] = []

  constructor(private readonly handler: Handler) {}

  fn = (url: string, init?: RequestInit): Promise<Response> => {
    this.calls.push({ url, init })
    return Promise.resolve(this.handler(url, init))
  }

  urls(): string[] {
    return this.calls.map((c) => c.url)
  }

  lastUrl(): string {
    const last = this.calls[this.calls.length - 1]
    if (!last) throw new Error('no calls recorded')
    return last.url
  }

  bodies(): unknown[] {
    return this.calls.map((c) => (c.init?.body ? JSON.parse(String(c.init.body)) : null))
  }
}

/** Let queued microtasks (awaited fetches, renders) settle. */
export async function settle(rounds = 4): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await new Promise((r) => setTimeout(r, 0))
  }
}

export function mount(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>'
  const el = document.getElementById('app')
  if (!el) throw new Error('mount failed')
  return el
}

/** All numeric literals occurring anywhere in a JSON document. */
export function numbersIn(doc: unknown): Set<number> {
  const out = new Set<number>()
  const walk = (v: unknown): void => {
    if (typeof v === 'number') out.add(v)
    else if (Array.isArray(v)) v.forEach(walk)
    else if (typeof v === 'object' && v !== null) Object.values(v).forEach(walk)
  }
  walk(doc)
  return out
}

/** Parse every digit-group the element displays, comma grouping removed. */
export function renderedNumbers(root: HTMLElement, selector: string): number[] {
  return [...root.querySelectorAll(selector)].map((el) =>
    Number((el.textContent ?? '').replace(/[^0-9]/g, '')),
  )
}
