/** Live step-wise verification: follow the stream, light up the FSM.
 *
 * Each step moves the active node to the predicted state; an UNKNOWN
 * prediction renders the alert style instead, and an event whose edge is
 * missing from the FSM flags that edge invalid. The status indicator
 * tracks the stream lifecycle.
 */

import { ApiClient } from "./api.js";
import { edgeKey } from "./fsmGraph.js";
import { UNKNOWN_STATE, VerificationStepDoc } from "./types.js";

export type StreamStatus = "idle" | "streaming" | "closed" | "error";

export interface StepEntry {
  step: VerificationStepDoc;
  alert: boolean; // UNKNOWN prediction
  invalidTransition: boolean;
}

export class VerificationView {
  status: StreamStatus = "idle";
  activeState: string | null = null;
  highlightSequence: string[] = [];
  log: StepEntry[] = [];
  invalidEdges = new Set<string>();
  private previousPrediction: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly onChange: () => void = () => {},
  ) {}

  handleStep(step: VerificationStepDoc): void {
    const alert = step.predicted === UNKNOWN_STATE;
    const invalid = step.transition_valid === false;
    if (invalid && step.event_kind && this.previousPrediction !== null) {
      this.invalidEdges.add(edgeKey(this.previousPrediction, step.event_kind, step.predicted));
    }
    this.activeState = alert ? null : step.predicted;
    this.highlightSequence.push(step.predicted);
    this.log.push({ step, alert, invalidTransition: invalid });
    this.previousPrediction = step.predicted;
    this.onChange();
  }

  handleClose(): void {
    this.status = "closed";
    this.onChange();
  }

  async run(replay: string | null): Promise<void> {
    this.status = "streaming";
    this.activeState = null;
    this.highlightSequence = [];
    this.log = [];
    this.invalidEdges = new Set();
    this.previousPrediction = null;
    this.onChange();
    try {
      await this.api.streamVerification(
        this.sessionId,
        replay,
        (step) => this.handleStep(step),
        () => this.handleClose(),
      );
    } catch (err) {
      this.status = "error";
      this.onChange();
      throw err;
    }
  }

  alertCount(): number {
    return this.log.filter((entry) => entry.alert).length;
  }
}

export function renderStatusBadge(status: StreamStatus): string {
  const label = { idle: "idle", streaming: "live", closed: "stream closed", error: "stream error" }[
    status
  ];
  return `<span class="status status-${status}">${label}</span>`;
}

export function renderStepLog(entries: StepEntry[]): string {
  const items = entries
    .map((e) => {
      const cls = e.alert ? "step alert" : e.invalidTransition ? "step invalid" : "step";
      const event = e.step.event_kind ? ` after ${e.step.event_kind}` : "";
      const validity = e.invalidTransition ? " (transition not in FSM)" : "";
      return `<li class="${cls}" data-window="${e.step.window_id}">` +
        `#${e.step.window_id}: ${e.step.predicted}${event}${validity}</li>`;
    })
    .join("\n");
  return `<ol class="steps">\n${items}\n</ol>`;
}
