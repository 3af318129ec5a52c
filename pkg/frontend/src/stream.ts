import type { EventRecord } from "./types.js";

/**
 * Subscribe to the server's line-delimited JSON event stream
 * (`GET /events?since=N`). Reconnects with a short backoff and resumes
 * from the last seen sequence number, so no record is delivered twice.
 */
export function streamEvents(
  baseUrl: string,
  since: number,
  onRecord: (record: EventRecord) => void,
  options: { signal?: AbortSignal; fetchImpl?: typeof fetch; retryMs?: number } = {},
): Promise<void> {
  const fetchImpl = options.fetchImpl ?? fetch;
  const retryMs = options.retryMs ?? 1000;
  let next = since;

  async function readOnce(): Promise<void> {
    const response = await fetchImpl(`${baseUrl}/events?since=${next}`, {
      signal: options.signal,
    });
    if (!response.ok || response.body === null) {
      throw new Error(`event stream unavailable (${response.status})`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line.length > 0) {
          const record = JSON.parse(line) as EventRecord;
          if (record.seq >= next) {
            next = record.seq + 1;
            onRecord(record);
          }
        }
        newline = buffer.indexOf("\n");
      }
    }
  }

  async function loop(): Promise<void> {
    for (;;) {
      if (options.signal?.aborted) {
        return;
      }
      try {
        await readOnce();
      } catch (error) {
        if (options.signal?.aborted) {
          return;
        }
      }
      await new Promise((resolve) => setTimeout(resolve, retryMs));
    }
  }

  return loop();
}

/** Parse one chunked buffer of ndjson into records (exposed for tests). */
export function parseNdjson(text: string): EventRecord[] {
  return text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as EventRecord);
}
