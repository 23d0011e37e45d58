import { beforeEach, describe, expect, it, vi } from 'vitest'
import { FlowcaseClient } from '../src/api.js'
import { detectFormat, ImportWizard, type WizardDeps } from '../src/views/wizard.js'
import type { SourceKind } from '../src/types.js'
import filesList from './fixtures/files-list.json'
import importsHistory from './fixtures/imports-history.json'
import { jsonResponse, mount, settle, StubFetch } from './helpers.js'

const PCAP_MAGIC = new Uint8Array([0xd4, 0xc3, 0xb2, 0xa1])

type Route = (url: URL, init?: RequestInit) => unknown

/** Client whose wire responses are routed by method + path. */
function routedClient(routes: Record<string, Route>): { client: FlowcaseClient; stub: StubFetch } {
  const stub = new StubFetch((rawUrl, init) => {
    const url = new URL(rawUrl, 'http://test')
    const key = `${init?.method ?? 'GET'} ${url.pathname}`
    const route = routes[key]
    if (!route) return jsonResponse({ error: { code: 'not_found', message: key } }, 404)
    const body = route(url, init)
    return body instanceof Response ? body : jsonResponse(body)
  })
  return { client: new FlowcaseClient('', stub.fn), stub }
}

function wizard(
  root: HTMLElement,
  client: FlowcaseClient,
  extra: Partial<WizardDeps> = {},
  onClose: () => void = () => {},
): ImportWizard {
  return new ImportWizard(root, 'replica', { client, ...extra }, onClose)
}

let root: HTMLElement

beforeEach(() => {
  root = mount()
})

describe('format detection', () => {
  it.each<[string, Uint8Array | null, SourceKind]>([
    ['scan.pcap', null, 'pcap'],
    ['old-capture.CAP', null, 'pcap'],
    ['flows.csv', null, 'csv'],
    ['export.jsonl', null, 'json'],
    ['dump.ndjson', null, 'json'],
    ['evidence.bin', PCAP_MAGIC, 'pcap'],
    ['evidence.bin', new Uint8Array([0xa1, 0xb2, 0x3c, 0x4d]), 'pcap'],
    ['evidence.bin', new Uint8Array([0x01, 0x02, 0x03, 0x04]), 'auto'],
    ['notes.txt', new Uint8Array([0x68, 0x69]), 'auto'],
    ['headless', null, 'auto'],
  ])('%s with head %o is %s', (name, head, expected) => {
    expect(detectFormat(name, head)).toBe(expected)
  })
})

describe('file step', () => {
  it('an empty case shows the empty state and blocks Next', async () => {
    const { client } = routedClient({
      'GET /cases/replica/files': () => ({ files: [] }),
    })
    const w = wizard(root, client)
    await w.open()
    expect(root.querySelector('.empty-state')?.textContent).toContain('No files in this case yet')
    expect(root.querySelector<HTMLButtonElement>('.wiz-next')?.disabled).toBe(true)
  })

  it('existing files list with sizes and toggle into the selection', async () => {
    const { client } = routedClient({
      'GET /cases/replica/files': () => filesList,
    })
    const w = wizard(root, client)
    await w.open()
    const box = root.querySelector<HTMLInputElement>('.wiz-file-pick')
    expect(box?.value).toBe('caps/day1.pcap')
    expect(root.querySelector('.wiz-size')?.textContent).toBe('1.6 MiB')

    box!.checked = true
    box!.dispatchEvent(new Event('change'))
    expect(w.selected.has('caps/day1.pcap')).toBe(true)
    expect(root.querySelector<HTMLButtonElement>('.wiz-next')?.disabled).toBe(false)
  })

  it('cancel closes the wizard and empties its mount', async () => {
    const onClose = vi.fn()
    const { client } = routedClient({
      'GET /cases/replica/files': () => ({ files: [] }),
    })
    const w = wizard(root, client, {}, onClose)
    await w.open()
    root.querySelector<HTMLButtonElement>('.wiz-cancel')?.click()
    expect(onClose).toHaveBeenCalledOnce()
    expect(root.innerHTML).toBe('')
  })
})

describe('upload', () => {
  it('uploading a capture stores it, selects it, and pre-sets the kind', async () => {
    let uploaded: string | null = null
    const { client, stub } = routedClient({
      'GET /cases/replica/files': () =>
        uploaded ? { files: [{ path: uploaded, size: 8 }] } : { files: [] },
      'POST /cases/replica/files': (url) => {
        uploaded = url.searchParams.get('name')
        return { path: uploaded, size: 8 }
      },
    })
    const w = wizard(root, client)
    await w.open()
    const bytes = new Uint8Array([...PCAP_MAGIC, 0x02, 0x00, 0x04, 0x00])
    await w.uploadAndSelect('evidence.bin', bytes.buffer)

    const upload = stub.calls.find((c) => c.init?.method === 'POST')
    expect(upload?.url).toContain('/files?name=evidence.bin')
    expect(w.selected.has('evidence.bin')).toBe(true)
    // no .pcap extension, so only the magic bytes can have said pcap
    expect(w.config.source_kind).toBe('pcap')
    expect(root.querySelector<HTMLInputElement>('.wiz-file-pick')?.checked).toBe(true)
  })

  it('detection is injectable and receives the first four bytes', async () => {
    const detect = vi.fn().mockReturnValue('csv' as SourceKind)
    const { client } = routedClient({
      'GET /cases/replica/files': () => ({ files: [{ path: 'evidence.pcap', size: 8 }] }),
      'POST /cases/replica/files': () => ({ path: 'evidence.pcap', size: 8 }),
    })
    const w = wizard(root, client, { detect })
    await w.open()
    const bytes = new Uint8Array([...PCAP_MAGIC, 0x02, 0x00, 0x04, 0x00])
    await w.uploadAndSelect('evidence.pcap', bytes.buffer)

    expect(detect).toHaveBeenCalledOnce()
    expect(detect.mock.calls[0]?.[0]).toBe('evidence.pcap')
    expect([...(detect.mock.calls[0]?.[1] as Uint8Array)]).toEqual([...PCAP_MAGIC])
    expect(w.config.source_kind).toBe('csv')

    w.step = 'config'
    w.render()
    expect(root.querySelector<HTMLSelectElement>('.wiz-kind')?.value).toBe('csv')
  })
})

describe('run and history', () => {
  function runReadyWizard() {
    const ctx = routedClient({
      'GET /cases/replica/files': () => filesList,
      'POST /cases/replica/imports': () => ({ import_id: 'imp-000002' }),
      'GET /cases/replica/imports': () => importsHistory,
    })
    return { ...ctx, w: wizard(root, ctx.client) }
  }

  async function walkToRun(w: ImportWizard): Promise<void> {
    await w.open()
    const box = root.querySelector<HTMLInputElement>('.wiz-file-pick')
    box!.checked = true
    box!.dispatchEvent(new Event('change'))
    root.querySelector<HTMLButtonElement>('.wiz-next')?.click()
    root.querySelector<HTMLButtonElement>('.wiz-next')?.click()
    expect(w.step).toBe('run')
  }

  it('run posts the edited config and lands on history', async () => {
    const { w, stub } = runReadyWizard()
    await w.open()
    const box = root.querySelector<HTMLInputElement>('.wiz-file-pick')
    box!.checked = true
    box!.dispatchEvent(new Event('change'))
    root.querySelector<HTMLButtonElement>('.wiz-next')?.click()

    const day = root.querySelector<HTMLInputElement>('.wiz-day')
    day!.value = '2021-06-15'
    day!.dispatchEvent(new Event('change'))
    root.querySelector<HTMLButtonElement>('.wiz-next')?.click()
    root.querySelector<HTMLButtonElement>('.wiz-run-btn')?.click()
    await settle()

    const started = stub.calls.find(
      (c) => c.init?.method === 'POST' && c.url.endsWith('/imports'),
    )
    expect(started).toBeDefined()
    expect(JSON.parse(String(started?.init?.body))).toEqual({
      inputs: ['caps/day1.pcap'],
      config: {
        config_id: 'default',
        source_kind: 'auto',
        repair_enabled: true,
        target_day_override: '2021-06-15',
      },
    })
    expect(w.step).toBe('history')
  })

  it('history lists the recorded imports, failures with their error', async () => {
    const { w } = runReadyWizard()
    await walkToRun(w)
    root.querySelector<HTMLButtonElement>('.wiz-run-btn')?.click()
    await settle()

    const records = [...root.querySelectorAll<HTMLElement>('.wiz-record')]
    expect(records).toHaveLength(2)
    expect(records[0]?.classList.contains('succeeded')).toBe(true)
    expect(records[0]?.textContent).toContain('21,511 docs')
    expect(records[0]?.querySelector('.wiz-error')).toBeNull()

    expect(records[1]?.classList.contains('failed')).toBe(true)
    expect(records[1]?.querySelector('.wiz-status')?.textContent).toBe('failed')
    expect(records[1]?.querySelector('.wiz-error')?.textContent).toContain(
      'cannot determine format of notes.txt',
    )
  })

  it('polling refreshes history until the import settles, then stops', async () => {
    const running = { ...importsHistory.imports[0], import_id: 'imp-000009', status: 'running' }
    const settled = { ...running, status: 'succeeded' }
    let polls = 0
    const { client } = routedClient({
      'GET /cases/replica/files': () => filesList,
      'POST /cases/replica/imports': () => ({ import_id: 'imp-000009' }),
      'GET /cases/replica/imports': () => ({
        imports: [++polls >= 3 ? settled : running],
      }),
    })
    const w = wizard(root, client, { pollMs: 20 })
    await walkToRun(w)
    root.querySelector<HTMLButtonElement>('.wiz-run-btn')?.click()
    await settle()
    expect(root.querySelector('.wiz-status')?.textContent).toBe('running')

    await new Promise((r) => setTimeout(r, 150))
    expect(root.querySelector('.wiz-status')?.textContent).toBe('succeeded')
    const after = polls
    await new Promise((r) => setTimeout(r, 60))
    expect(polls).toBe(after)
  })

  it('a rejected run surfaces the envelope and stays on the run step', async () => {
    const { client } = routedClient({
      'GET /cases/replica/files': () => filesList,
      'POST /cases/replica/imports': () =>
        jsonResponse({ error: { code: 'bad_input', message: 'inputs must not be empty' } }, 400),
    })
    const w = wizard(root, client)
    await walkToRun(w)
    root.querySelector<HTMLButtonElement>('.wiz-run-btn')?.click()
    await settle()

    expect(w.step).toBe('run')
    expect(root.querySelector('.wiz-problem')?.textContent).toContain('error[bad_input]')
    expect(root.querySelector('.wiz-problem')?.textContent).toContain('inputs must not be empty')
  })
})
