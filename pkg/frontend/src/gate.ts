/**
 * Discards stale fetches: each begin() for a key invalidates every earlier
 * ticket, so only the most recently issued request may apply its response.
 */
export class RequestGate {
  private seq = new Map<string, number>()

  begin(key: string): () => boolean {
    const n = (this.seq.get(key) ?? 0) + 1
    this.seq.set(key, n)
    return () => this.seq.get(key) === n
  }
}
