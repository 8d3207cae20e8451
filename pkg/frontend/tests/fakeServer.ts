/** In-memory stand-in for the statescope API, mirroring the documented
 * contract: collage validates full coverage (422 IncompleteCollage),
 * annotations rewrite windows, and fsm/correlation are projections of the
 * current annotations and fixed cluster labels.
 */

import { FetchLike } from "../src/api.js";
import {
  CollageGroups,
  FsmDoc,
  SessionDoc,
  SessionEventDoc,
  SessionWindowDoc,
} from "../src/types.js";

export interface FakeWindow {
  window_id: number;
  annotation: string | null;
  cluster: number;
  x: number;
  y: number;
}

export class FakeServer {
  windows: FakeWindow[];
  events: SessionEventDoc[];
  origins = new Map<string, string>();
  collageCalls: CollageGroups[] = [];
  annotationCalls: { name: string; window_ids: number[] }[] = [];

  constructor(windows: FakeWindow[], events: SessionEventDoc[] = []) {
    this.windows = windows.map((w) => ({ ...w }));
    this.events = events;
    for (const w of windows) {
      if (w.annotation) this.origins.set(w.annotation, "human");
    }
  }

  stateNames(): string[] {
    return [...new Set(this.windows.map((w) => w.annotation).filter((a): a is string => !!a))].sort();
  }

  sessionDoc(): SessionDoc {
    const windows: SessionWindowDoc[] = this.windows.map((w) => ({
      window_id: w.window_id,
      t_start_ms: w.window_id * 100,
      t_end_ms: (w.window_id + 1) * 100,
      annotation: w.annotation,
    }));
    return {
      session_id: "fake",
      windows,
      events: this.events,
      labels: this.stateNames().map((name) => ({
        name,
        origin: this.origins.get(name) ?? "human",
      })),
    };
  }

  fsmDoc(): FsmDoc {
    const byId = new Map(this.windows.map((w) => [w.window_id, w.annotation]));
    const seen = new Set<string>();
    const transitions = [];
    for (const e of this.events) {
      const from = byId.get(e.from_window);
      const to = byId.get(e.to_window);
      if (!from || !to) continue;
      const key = `${from}|${e.kind}|${to}`;
      if (!seen.has(key)) {
        seen.add(key);
        transitions.push({ from, event: e.kind, to });
      }
    }
    return {
      schema: 1,
      states: this.stateNames().map((name) => ({
        name,
        origin: (this.origins.get(name) ?? "human") as FsmDoc["states"][0]["origin"],
      })),
      transitions,
      initial: this.windows[0]?.annotation ?? null,
    };
  }

  correlationDoc() {
    const rows = this.stateNames();
    const cols = [...new Set(this.windows.map((w) => w.cluster))].sort((a, b) => a - b);
    const cells = rows.map((row) => {
      const mine = this.windows.filter((w) => w.annotation === row);
      return cols.map((col) => mine.filter((w) => w.cluster === col).length / mine.length);
    });
    return { rows, cols, cells };
  }

  embeddingDoc() {
    return {
      points: this.windows.map((w) => ({
        window_id: w.window_id,
        x: w.x,
        y: w.y,
        cluster: w.cluster,
        annotation: w.annotation,
      })),
    };
  }

  private applyCollage(groups: CollageGroups): Response {
    this.collageCalls.push(groups);
    const states = new Set(this.stateNames());
    const mapped = new Set(Object.values(groups).flat());
    const missing = [...states].filter((s) => !mapped.has(s));
    if (missing.length) {
      return json(422, {
        code: "IncompleteCollage",
        stage: "collage",
        detail: `collage does not cover states: ${JSON.stringify(missing.sort())}`,
      });
    }
    for (const name of mapped) {
      if (!states.has(name)) {
        return json(422, { code: "UnknownLabel", stage: "collage", detail: name });
      }
    }
    const rename = new Map<string, string>();
    for (const [groupName, members] of Object.entries(groups)) {
      for (const member of members) rename.set(member, groupName);
      if (members.length > 1 || members[0] !== groupName) {
        this.origins.set(groupName, "collaged");
      }
    }
    for (const w of this.windows) {
      if (w.annotation && rename.has(w.annotation)) {
        w.annotation = rename.get(w.annotation)!;
      }
    }
    return json(200, { fsm: this.fsmDoc(), correlation: this.correlationDoc() });
  }

  fetch: FetchLike = async (input, init) => {
    const url = input.toString();
    const body = init?.body ? JSON.parse(init.body as string) : null;
    if (url.endsWith("/sessions/fake") && !init?.method) {
      return json(200, this.sessionDoc());
    }
    if (url.endsWith("/fsm")) {
      return json(200, this.fsmDoc());
    }
    if (url.endsWith("/embedding")) {
      return json(200, this.embeddingDoc());
    }
    if (url.endsWith("/correlation")) {
      return json(200, this.correlationDoc());
    }
    if (url.endsWith("/collage")) {
      return this.applyCollage(body.groups as CollageGroups);
    }
    if (url.endsWith("/annotations")) {
      const ids = new Set<number>(body.window_ids);
      if (!body.name) {
        return json(422, { code: "Error", stage: "annotations", detail: "empty name" });
      }
      this.annotationCalls.push({ name: body.name, window_ids: body.window_ids });
      for (const w of this.windows) {
        if (ids.has(w.window_id)) w.annotation = body.name;
      }
      if (!this.origins.has(body.name)) {
        this.origins.set(body.name, body.origin ?? "human");
      }
      return json(200, { annotated: ids.size, label: body.name });
    }
    return json(404, { code: "SessionNotFound", stage: "core", detail: url });
  };
}

function json(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** A 3-state exploration: off -> idle -> active -> answering, 2 windows each. */
export function exploredServer(): FakeServer {
  const spec: [string, number][] = [
    ["off", 0], ["off", 0],
    ["idle", 1], ["idle", 1],
    ["active", 2], ["active", 2],
    ["answering", 2], ["answering", 2],
  ];
  const windows = spec.map(([annotation, cluster], i) => ({
    window_id: i,
    annotation,
    cluster,
    x: cluster * 10 + (i % 2),
    y: cluster * 5 + (i % 2),
  }));
  const events: SessionEventDoc[] = [
    { event_id: 0, kind: "power_on", t_ms: 200, from_window: 1, to_window: 2 },
    { event_id: 1, kind: "say_keyword", t_ms: 400, from_window: 3, to_window: 4 },
    { event_id: 2, kind: "ask", t_ms: 600, from_window: 5, to_window: 6 },
  ];
  return new FakeServer(windows, events);
}
