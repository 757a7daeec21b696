import { describe, expect, it, vi } from "vitest";
import { ApiClient, ApiError } from "../src/api/client";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const SCENARIO = {
  unit_id: "L00",
  unit_kind: "lga" as const,
  from: "2021-06-01",
  to: "2021-06-07",
  calibrate: true,
  edits: [],
};

describe("ApiClient", () => {
  it("surfaces engine errors with status and kind", async () => {
    const client = new ApiClient(async () =>
      jsonResponse({ error: "UnknownUnitError", message: "no unit" }, 404),
    );
    await expect(client.units("lga")).rejects.toMatchObject({
      status: 404,
      kind: "UnknownUnitError",
    } satisfies Partial<ApiError>);
  });

  it("aborts the previous in-flight what-if when a new one starts", async () => {
    const signals: AbortSignal[] = [];
    const client = new ApiClient(async (_input, init) => {
      signals.push(init!.signal!);
      // hang until aborted, else resolve late
      return new Promise<Response>((resolve, reject) => {
        init!.signal!.addEventListener("abort", () => reject(new Error("aborted")));
        setTimeout(() => resolve(jsonResponse({ snapshot_checksum: "x", effects: [] })), 50);
      });
    });
    const first = client.whatif(SCENARIO, "forest").catch((e: Error) => e.message);
    const second = client.whatif(SCENARIO, "forest");
    expect(signals).toHaveLength(2);
    expect(signals[0].aborted).toBe(true);
    expect(signals[1].aborted).toBe(false);
    expect(await first).toBe("aborted");
    await second;
  });

  it("fires the stale-snapshot callback when the checksum changes", async () => {
    let call = 0;
    const client = new ApiClient(async () =>
      jsonResponse({ snapshot_checksum: call++ === 0 ? "aaa" : "bbb", sequences: [] }),
    );
    const stale = vi.fn();
    client.onStaleSnapshot = stale;
    await client.sequences();
    expect(stale).not.toHaveBeenCalled();
    await client.sequences();
    expect(stale).toHaveBeenCalledWith("bbb");
    expect(client.lastChecksum).toBe("bbb");
  });
});
