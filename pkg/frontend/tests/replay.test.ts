/**
 * End-to-end replay against a recorded server session.
 *
 * The fixture holds every request/response exchange from a scripted
 * session against the real backend (scripts/record_fixture.py). The
 * test drives SessionClient through the same user actions and asserts
 * that the client emits byte-for-byte the same request stream and keeps
 * a byte-exact mirror of the server's source at every step. getScene
 * entries are NOT driven by the test: the client must emit them on its
 * own when ghost meshes appear or clear, or the stream check fails.
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { SessionClient, type Transport } from "../src/client";
import { ByteIndex } from "../src/bytes";
import { deriveDecorations } from "../src/decorations";
import type { TransformParams } from "../src/protocol";

interface LogEntry {
  request: Record<string, unknown>;
  response: Record<string, unknown>;
}

const FIXTURE = join(
  dirname(fileURLToPath(import.meta.url)), "fixtures", "session_log.json",
);

function loadLog(): LogEntry[] {
  return JSON.parse(readFileSync(FIXTURE, "utf8")) as LogEntry[];
}

/**
 * Transport that answers from the log and fails loudly if the client
 * sends anything but the next recorded request (ignoring the id, which
 * the client allocates).
 */
class ReplayTransport implements Transport {
  index = 0;
  mismatches: string[] = [];
  private handler: ((text: string) => void) | null = null;

  constructor(private readonly log: LogEntry[]) {}

  send(text: string): void {
    const sent = JSON.parse(text) as Record<string, unknown>;
    const entry = this.log[this.index];
    if (!entry) {
      this.mismatches.push(`request past end of log: ${String(sent.method)}`);
      return;
    }
    const { id, ...body } = sent;
    try {
      expect(body).toEqual(entry.request);
    } catch {
      this.mismatches.push(
        `entry ${this.index}: sent ${JSON.stringify(body)} != ` +
        `recorded ${JSON.stringify(entry.request)}`,
      );
    }
    this.index += 1;
    const resp = JSON.stringify({ ...entry.response, id });
    queueMicrotask(() => this.handler?.(resp));
  }

  onMessage(handler: (text: string) => void): void {
    this.handler = handler;
  }
}

/** Re-issue the user-level call a logged request corresponds to. */
async function drive(client: SessionClient, req: Record<string, unknown>): Promise<unknown> {
  switch (req.method) {
    case "open":
      return client.open(req.source as string);
    case "setSource":
      return client.setSource(req.text as string);
    case "getSource":
      return client.getSource();
    case "pick":
      return client.pick(req.origin as number[], req.dir as number[]);
    case "menu":
      return client.menu(req.leaf_id as string);
    case "select":
      return client.select(req.node_id as string);
    case "forwardSearch":
      return client.forwardSearch(req.span as [number, number]);
    case "variableSearch":
      return client.variableSearch(req.span as [number, number]);
    case "applyTransform":
      return client.applyTransform(
        req.node_id as string,
        req.kind as "translate" | "rotate" | "scale",
        req.params as TransformParams,
      );
    case "beginDrag":
      return client.beginDrag(req.node_id as string, req.kind as "translate");
    case "updateDrag": {
      const { method: _m, revision: _r, ...params } = req;
      return client.updateDrag(params as TransformParams);
    }
    case "endDrag":
      return client.endDrag();
    default:
      throw new Error(`replay driver does not know method ${String(req.method)}`);
  }
}

describe("recorded session replay", () => {
  it("reproduces the exact request stream and mirrors every source byte", async () => {
    const log = loadLog();
    const transport = new ReplayTransport(log);
    const client = new SessionClient(transport);

    const syncCauses: string[] = [];
    client.on("source", (_text, cause) => {
      if (cause === "sync") syncCauses.push(cause);
    });
    const errors: string[] = [];
    client.on("error", (e) => errors.push(e.code));

    const ghostCounts: number[] = [];
    let highlightChecks = 0;

    for (const entry of log) {
      const method = entry.request.method as string;
      if (method === "getScene") {
        // the client must have emitted this itself after the previous
        // select; driving it here would double it up
        continue;
      }
      const resp = (await drive(client, entry.request)) as Record<string, unknown>;

      if (method === "getSource") {
        // byte-exact mirror: the authoritative source equals our buffer
        expect(resp.source).toBe(client.source);
      }
      if (method === "select") {
        ghostCounts.push(client.scene?.ghosts.length ?? -1);
        if (client.highlight && client.highlight.target_spans.length > 0) {
          // decorations derive cleanly from live payloads
          const index = new ByteIndex(client.source);
          const model = deriveDecorations(client.highlight, index);
          for (const mark of model.marks) {
            expect(mark.fromChar).toBeLessThan(mark.toChar);
            expect(mark.toChar).toBeLessThanOrEqual(client.source.length);
          }
          highlightChecks += 1;
        }
      }
      if (method === "applyTransform") {
        expect(resp.action).toBe("modified_existing");
      }
      if (method === "updateDrag") {
        expect(resp.action).toBe("inserted_new");
      }
    }

    // every recorded exchange happened, in order, and nothing else
    expect(transport.mismatches).toEqual([]);
    expect(transport.index).toBe(log.length);

    // the mirror never needed a resync and no call errored
    expect(syncCauses).toEqual([]);
    expect(errors).toEqual([]);

    // scene ghosts tracked the highlight: the difference select installs
    // two ghost meshes, the next leaf select clears them again
    expect(ghostCounts).toEqual([0, 2, 0]);
    expect(highlightChecks).toBeGreaterThan(0);
  });

  it("keeps the buffer when a setSource fails to compile", async () => {
    const log = loadLog();
    const transport = new ReplayTransport(log);
    const client = new SessionClient(transport);

    let sourceBeforeBroken = "";
    for (const entry of log) {
      const method = entry.request.method as string;
      if (method === "getScene") continue;
      if (method === "setSource") {
        const diags = (entry.response.diagnostics ?? []) as { severity: string }[];
        if (diags.some((d) => d.severity === "error")) {
          sourceBeforeBroken = client.source;
          await drive(client, entry.request);
          // transactional: the broken text was rejected wholesale
          expect(client.source).toBe(sourceBeforeBroken);
          expect(client.diagnostics.some((d) => d.severity === "error")).toBe(true);
          continue;
        }
      }
      await drive(client, entry.request);
    }

    expect(sourceBeforeBroken).not.toBe(""); // the scenario really ran
    // the final clean setSource was adopted
    const lastSet = [...log].reverse().find((e) => e.request.method === "setSource");
    expect(client.source).toBe(lastSet?.request.text);
    expect(transport.mismatches).toEqual([]);
    expect(transport.index).toBe(log.length);
  });
});
