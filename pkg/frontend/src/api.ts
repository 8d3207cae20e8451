/** Thin typed client for the statescope HTTP API.
 *
 * Every mutation the UI performs goes through this client; the fetch
 * implementation is injectable so tests can fake the server.
 */

import {
  ApiError,
  CollageGroups,
  CorrelationDoc,
  EmbeddingDoc,
  FsmDoc,
  SessionDoc,
  VerificationStepDoc,
} from "./types.js";

export class RequestFailed extends Error {
  constructor(public readonly status: number, public readonly error: ApiError) {
    super(`${error.code} @ ${error.stage}: ${error.detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      throw new RequestFailed(res.status, (await res.json()) as ApiError);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.request(`/sessions/${id}`);
  }

  getEmbedding(id: string): Promise<EmbeddingDoc> {
    return this.request(`/sessions/${id}/embedding`);
  }

  getCorrelation(id: string): Promise<CorrelationDoc> {
    return this.request(`/sessions/${id}/correlation`);
  }

  getFsm(id: string): Promise<FsmDoc> {
    return this.request(`/sessions/${id}/fsm`);
  }

  postAnnotation(
    id: string,
    name: string,
    windowIds: number[],
    origin = "human",
  ): Promise<unknown> {
    return this.post(`/sessions/${id}/annotations`, { name, window_ids: windowIds, origin });
  }

  postCollage(
    id: string,
    groups: CollageGroups,
  ): Promise<{ fsm: FsmDoc; correlation?: CorrelationDoc }> {
    return this.post(`/sessions/${id}/collage`, { groups });
  }

  runPipeline(id: string, config: Record<string, unknown> = {}): Promise<unknown> {
    return this.post(`/sessions/${id}/pipeline`, config);
  }

  trainClassifier(id: string, splitSeed = 0): Promise<unknown> {
    return this.post(`/sessions/${id}/classifier`, { split_seed: splitSeed });
  }

  /** Subscribe to the step-wise verification stream (JSON lines). */
  async streamVerification(
    id: string,
    replay: string | null,
    onStep: (step: VerificationStepDoc) => void,
    onClose: () => void,
  ): Promise<void> {
    const query = replay ? `?replay=${encodeURIComponent(replay)}` : "";
    const res = await this.fetchFn(`${this.base}/sessions/${id}/verify/stream${query}`);
    if (!res.ok) {
      throw new RequestFailed(res.status, (await res.json()) as ApiError);
    }
    if (!res.body) {
      onClose();
      return;
    }
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        break;
      }
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) {
          onStep(JSON.parse(line) as VerificationStepDoc);
        }
        newline = buffer.indexOf("\n");
      }
    }
    const tail = buffer.trim();
    if (tail) {
      onStep(JSON.parse(tail) as VerificationStepDoc);
    }
    onClose();
  }
}
