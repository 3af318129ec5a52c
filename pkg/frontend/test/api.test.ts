import { describe, expect, it, vi } from "vitest";

import { ApiError, HttpApiClient } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function clientWith(responder: (url: string, init?: RequestInit) => Response) {
  const fetchImpl = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) =>
    responder(String(input), init),
  );
  return { client: new HttpApiClient("http://cms.test", fetchImpl as typeof fetch), fetchImpl };
}

describe("HttpApiClient", () => {
  it("GET /state returns the snapshot", async () => {
    const { client, fetchImpl } = clientWith(() =>
      jsonResponse(200, { phase: "uninitialized", devices: [] }),
    );
    const state = await client.getState();
    expect(state.phase).toBe("uninitialized");
    expect(fetchImpl).toHaveBeenCalledWith("http://cms.test/state", undefined);
  });

  it("POST /calibration carries the pairs verbatim", async () => {
    const { client, fetchImpl } = clientWith(() =>
      jsonResponse(200, { status: "prompt", count: 2, options: ["continue", "abort"] }),
    );
    const result = await client.submitCalibration([
      [1, 0.0044],
      [2, 0.0103],
    ]);
    expect(result).toEqual({ status: "prompt", count: 2, options: ["continue", "abort"] });
    const [url, init] = fetchImpl.mock.calls[0]!;
    expect(url).toBe("http://cms.test/calibration");
    expect(JSON.parse(String(init?.body))).toEqual({ pairs: [[1, 0.0044], [2, 0.0103]] });
  });

  it("POST /refresh/{id} URL-encodes the device id", async () => {
    const { client, fetchImpl } = clientWith(() => jsonResponse(200, { status: "ok" }));
    await client.refresh("LG13");
    expect(String(fetchImpl.mock.calls[0]![0])).toBe("http://cms.test/refresh/LG13");
  });

  it("blocked shutdown (HTTP 409) is a result, not an exception", async () => {
    const { client } = clientWith(() =>
      jsonResponse(409, { status: "blocked", devices: ["LG13"] }),
    );
    const verdict = await client.shutdown();
    expect(verdict).toEqual({ status: "blocked", devices: ["LG13"] });
  });

  it("service errors surface as ApiError with status and name", async () => {
    const { client } = clientWith(() =>
      jsonResponse(409, { error: "NoActiveAlarm", message: "device LG13 has no active alarm" }),
    );
    await expect(client.refresh("LG13")).rejects.toSatisfy((error: unknown) => {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).status).toBe(409);
      expect((error as ApiError).error).toBe("NoActiveAlarm");
      return true;
    });
  });

  it("rename posts the new name", async () => {
    const { client, fetchImpl } = clientWith(() => jsonResponse(200, { status: "ok" }));
    await client.rename("LG13", "Luggage-2");
    const [url, init] = fetchImpl.mock.calls[0]!;
    expect(url).toBe("http://cms.test/rename/LG13");
    expect(JSON.parse(String(init?.body))).toEqual({ name: "Luggage-2" });
  });
});
