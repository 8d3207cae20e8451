/** Annotate-as-you-explore: label the windows of the current interaction. */

import { Workspace } from "./state.js";

export interface AnnotateResult {
  ok: boolean;
  reason?: string;
  createdState?: boolean;
}

export class AnnotateController {
  constructor(private readonly ws: Workspace) {}

  /** Windows since the last interaction event (the "current" segment). */
  currentWindowIds(): number[] {
    const session = this.ws.session;
    if (!session || session.windows.length === 0) {
      return [];
    }
    const lastBoundary = session.events.length
      ? session.events[session.events.length - 1].to_window
      : session.windows[0].window_id;
    return session.windows
      .filter((w) => w.window_id >= lastBoundary)
      .map((w) => w.window_id);
  }

  async annotateInteraction(name: string, windowIds?: number[]): Promise<AnnotateResult> {
    const trimmed = name.trim();
    if (!trimmed) {
      return { ok: false, reason: "state name must not be empty" }; // blocked client-side
    }
    const targets = windowIds ?? this.currentWindowIds();
    if (targets.length === 0) {
      return { ok: false, reason: "no windows to annotate" };
    }
    const existed = this.ws.stateNames().includes(trimmed);
    await this.ws.api.postAnnotation(this.ws.sessionId, trimmed, targets);
    await this.ws.refresh();
    return { ok: true, createdState: !existed };
  }
}
