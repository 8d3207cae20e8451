/** Workspace state: server artifacts plus the linked selection.
 *
 * Everything here is a cache of server responses; refresh() reloads it all,
 * so a page reload reproduces the identical view. Selecting a state links
 * the scatter (marker outline), the heatmap (row border), and the FSM
 * (node border) together.
 */

import { ApiClient } from "./api.js";
import {
  CorrelationDoc,
  EmbeddingDoc,
  FsmDoc,
  SessionDoc,
} from "./types.js";

export class Workspace {
  session: SessionDoc | null = null;
  embedding: EmbeddingDoc | null = null;
  correlation: CorrelationDoc | null = null;
  fsm: FsmDoc | null = null;
  selectedState: string | null = null;

  constructor(
    readonly api: ApiClient,
    readonly sessionId: string,
  ) {}

  async refresh(): Promise<void> {
    this.session = await this.api.getSession(this.sessionId);
    this.fsm = await this.api.getFsm(this.sessionId);
    [this.embedding, this.correlation] = await Promise.all([
      this.api.getEmbedding(this.sessionId).catch(() => null),
      this.api.getCorrelation(this.sessionId).catch(() => null),
    ]);
  }

  selectState(state: string | null): void {
    this.selectedState = state;
  }

  /** Window ids carrying the selected state's annotation (scatter highlight). */
  selectedWindowIds(): Set<number> {
    if (!this.selectedState || !this.session) {
      return new Set();
    }
    return new Set(
      this.session.windows
        .filter((w) => w.annotation === this.selectedState)
        .map((w) => w.window_id),
    );
  }

  stateNames(): string[] {
    return this.fsm ? this.fsm.states.map((s) => s.name).sort() : [];
  }
}
