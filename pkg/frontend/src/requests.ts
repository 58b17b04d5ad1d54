/* Debounced, latest-wins frame fetching. At most one request is in flight;
 * scheduling a new one aborts the old, and stale responses are dropped by a
 * sequence check, so rapid drags only ever render the newest frame.
 */

export interface FrameResult {
  blob: Blob;
  weights: number[];
  labels: string[];
  simplex: number;
  mode: string;
}

type FetchLike = (url: string, init: { signal: AbortSignal }) => Promise<Response>;

export function buildFrameUrl(
  base: string,
  coords: number[],
  frame: number,
  mode: string,
  filter = false
): string {
  const w = coords.map((v) => String(v)).join(",");
  const f = filter ? "&filter=1" : "";
  return `${base}/frame?w=${encodeURIComponent(w)}&t=${frame}&mode=${mode}${f}`;
}

export class FrameRequester {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private controller: AbortController | null = null;
  private sequence = 0;

  constructor(
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
    private debounceMs = 40
  ) {
    if (debounceMs > 50) throw new Error("debounce must stay within 50 ms");
  }

  schedule(
    url: string,
    onResult: (r: FrameResult) => void,
    onError: (message: string) => void
  ): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(url, onResult, onError);
    }, this.debounceMs);
  }

  private async fire(
    url: string,
    onResult: (r: FrameResult) => void,
    onError: (message: string) => void
  ): Promise<void> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const mySeq = ++this.sequence;
    try {
      const resp = await this.fetchFn(url, { signal: controller.signal });
      if (mySeq !== this.sequence) return; // a newer request took over
      if (!resp.ok) {
        let message = `service error ${resp.status}`;
        try {
          const body = await resp.json();
          if (body && body.error) message = body.error;
        } catch {
          /* non-JSON error body */
        }
        onError(message);
        return;
      }
      const blob = await resp.blob();
      if (mySeq !== this.sequence) return;
      onResult({
        blob,
        weights: JSON.parse(resp.headers.get("X-Flof-Weights") ?? "[]"),
        labels: JSON.parse(resp.headers.get("X-Flof-Weight-Labels") ?? "[]"),
        simplex: Number(resp.headers.get("X-Flof-Simplex") ?? "-1"),
        mode: resp.headers.get("X-Flof-Mode") ?? "",
      });
    } catch (err) {
      if (controller.signal.aborted) return;
      onError(err instanceof Error ? err.message : String(err));
    }
  }
}
