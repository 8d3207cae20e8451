/** Verification view: highlight sequence, UNKNOWN alerts, stream status. */

import { describe, expect, it } from "vitest";

import { ApiClient, FetchLike } from "../src/api.js";
import { edgeKey } from "../src/fsmGraph.js";
import { renderStatusBadge, renderStepLog, VerificationView } from "../src/verification.js";
import { VerificationStepDoc } from "../src/types.js";

function streamResponse(lines: string[]): Response {
  const encoder = new TextEncoder();
  const body = new ReadableStream<Uint8Array>({
    start(controller) {
      for (const line of lines) controller.enqueue(encoder.encode(line));
      controller.close();
    },
  });
  return new Response(body, {
    status: 200,
    headers: { "Content-Type": "application/x-ndjson" },
  });
}

function stepDoc(partial: Partial<VerificationStepDoc> & { window_id: number }): VerificationStepDoc {
  return {
    predicted: "idle",
    distance: 1.0,
    transition_valid: null,
    event_kind: null,
    ...partial,
  };
}

function streamFetch(steps: VerificationStepDoc[], chunkSplit = false): FetchLike {
  const text = steps.map((s) => JSON.stringify(s) + "\n").join("");
  // optionally split mid-line to exercise the chunk reassembly path
  const lines = chunkSplit ? [text.slice(0, 17), text.slice(17, 40), text.slice(40)] : [text];
  return async () => streamResponse(lines);
}

describe("verification view", () => {
  it("replays the ground-truth state sequence as node highlights", async () => {
    // noiseless synthetic replay: predictions equal the true annotations
    const truth = ["off", "off", "idle", "detecting", "detecting", "idle", "off"];
    const steps = truth.map((state, i) =>
      stepDoc({
        window_id: i,
        predicted: state,
        event_kind: i > 0 && truth[i] !== truth[i - 1] ? "interact" : null,
        transition_valid: i > 0 && truth[i] !== truth[i - 1] ? true : null,
      }),
    );
    const view = new VerificationView(new ApiClient("", streamFetch(steps, true)), "fake");
    await view.run("replay-1");
    expect(view.highlightSequence).toEqual(truth);
    expect(view.status).toBe("closed");
    expect(view.alertCount()).toBe(0);
    expect(view.activeState).toBe("off"); // last step stays highlighted
  });

  it("renders UNKNOWN steps with the alert style and no active node", async () => {
    const steps = [
      stepDoc({ window_id: 0, predicted: "idle" }),
      stepDoc({ window_id: 1, predicted: "UNKNOWN", distance: 99.0 }),
      stepDoc({ window_id: 2, predicted: "idle" }),
    ];
    const view = new VerificationView(new ApiClient("", streamFetch(steps)), "fake");
    await view.run(null);
    expect(view.alertCount()).toBe(1);
    expect(view.log[1].alert).toBe(true);
    const html = renderStepLog(view.log);
    expect(html).toMatch(/class="step alert"[^>]*data-window="1"/);
    // during the UNKNOWN step no node was active
    expect(view.highlightSequence).toEqual(["idle", "UNKNOWN", "idle"]);
  });

  it("flags transitions the FSM does not contain", async () => {
    const steps = [
      stepDoc({ window_id: 0, predicted: "off" }),
      stepDoc({
        window_id: 1,
        predicted: "detecting",
        event_kind: "mystery",
        transition_valid: false,
      }),
    ];
    const view = new VerificationView(new ApiClient("", streamFetch(steps)), "fake");
    await view.run(null);
    expect(view.invalidEdges.has(edgeKey("off", "mystery", "detecting"))).toBe(true);
    expect(renderStepLog(view.log)).toMatch(/transition not in FSM/);
  });

  it("shows a status indicator across the stream lifecycle", async () => {
    const view = new VerificationView(new ApiClient("", streamFetch([]))
      , "fake");
    expect(view.status).toBe("idle");
    const statuses: string[] = [];
    const tracking = new VerificationView(
      new ApiClient("", streamFetch([stepDoc({ window_id: 0 })])),
      "fake",
      () => statuses.push(tracking.status),
    );
    await tracking.run(null);
    expect(statuses[0]).toBe("streaming");
    expect(statuses[statuses.length - 1]).toBe("closed");
    expect(renderStatusBadge("closed")).toMatch(/stream closed/);
  });

  it("marks the view errored when the stream request fails", async () => {
    const failing: FetchLike = async () =>
      new Response(JSON.stringify({ code: "MissingArtifact", stage: "core", detail: "x" }), {
        status: 404,
      });
    const view = new VerificationView(new ApiClient("", failing), "fake");
    await expect(view.run(null)).rejects.toThrow(/MissingArtifact/);
    expect(view.status).toBe("error");
    expect(renderStatusBadge(view.status)).toMatch(/stream error/);
  });
});
