/** Collage-by-drag: merge annotated states guided by the cluster evidence.
 *
 * Dropping one FSM node onto another posts a full partition of the current
 * state set (the two states joined under the target's name, everything
 * else a singleton). Undo replays the saved pre-merge annotation
 * assignment through the annotations API, so even undo is a server-side
 * mutation and survives reload.
 */

import { RequestFailed } from "./api.js";
import { Workspace } from "./state.js";
import { CollageGroups } from "./types.js";

export interface CollageGesture {
  dragged: string;
  targetGroup: string;
}

export interface CollageResult {
  ok: boolean;
  toast?: string;
}

interface AnnotationSnapshot {
  byLabel: Map<string, number[]>;
  origins: Map<string, string>;
}

export function partitionForGesture(states: string[], gesture: CollageGesture): CollageGroups {
  if (!states.includes(gesture.dragged) || !states.includes(gesture.targetGroup)) {
    throw new Error(`gesture references unknown state: ${JSON.stringify(gesture)}`);
  }
  if (gesture.dragged === gesture.targetGroup) {
    throw new Error("cannot merge a state with itself");
  }
  const groups: CollageGroups = {};
  for (const state of states) {
    if (state === gesture.dragged) {
      continue;
    }
    groups[state] = state === gesture.targetGroup ? [state, gesture.dragged] : [state];
  }
  return groups;
}

export class CollageController {
  private undoStack: AnnotationSnapshot[] = [];
  lastToast: string | null = null;

  constructor(private readonly ws: Workspace) {}

  private snapshot(): AnnotationSnapshot {
    const byLabel = new Map<string, number[]>();
    const origins = new Map<string, string>();
    for (const w of this.ws.session?.windows ?? []) {
      if (w.annotation !== null) {
        const ids = byLabel.get(w.annotation) ?? [];
        ids.push(w.window_id);
        byLabel.set(w.annotation, ids);
      }
    }
    for (const label of this.ws.session?.labels ?? []) {
      origins.set(label.name, label.origin);
    }
    return { byLabel, origins };
  }

  async drag(gesture: CollageGesture): Promise<CollageResult> {
    const states = this.ws.stateNames();
    let groups: CollageGroups;
    try {
      groups = partitionForGesture(states, gesture);
    } catch (err) {
      this.lastToast = String(err instanceof Error ? err.message : err);
      return { ok: false, toast: this.lastToast };
    }
    return this.apply(groups);
  }

  async apply(groups: CollageGroups): Promise<CollageResult> {
    const before = this.snapshot();
    try {
      await this.ws.api.postCollage(this.ws.sessionId, groups);
    } catch (err) {
      if (err instanceof RequestFailed) {
        this.lastToast = `${err.error.code}: ${err.error.detail}`;
        return { ok: false, toast: this.lastToast };
      }
      throw err;
    }
    this.undoStack.push(before);
    await this.ws.refresh();
    return { ok: true };
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  async undo(): Promise<CollageResult> {
    const snapshot = this.undoStack.pop();
    if (!snapshot) {
      return { ok: false, toast: "nothing to undo" };
    }
    for (const [label, windowIds] of snapshot.byLabel) {
      const origin = snapshot.origins.get(label) ?? "human";
      await this.ws.api.postAnnotation(this.ws.sessionId, label, windowIds, origin);
    }
    await this.ws.refresh();
    return { ok: true };
  }
}
