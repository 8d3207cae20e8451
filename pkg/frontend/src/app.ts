/** Browser wiring: render the workspace into the page and hook up events.
 *
 * All behaviour lives in the controllers; this file only touches the DOM.
 */

import { AnnotateController } from "./annotate.js";
import { ApiClient } from "./api.js";
import { CollageController } from "./collage.js";
import { buildFsmGraph, renderFsmSvg } from "./fsmGraph.js";
import { buildHeatmap, renderHeatmapSvg } from "./heatmap.js";
import { buildLegend, buildScatter, renderScatterSvg } from "./scatter.js";
import { Workspace } from "./state.js";
import { renderStatusBadge, renderStepLog, VerificationView } from "./verification.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function toast(message: string): void {
  const box = el("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 4000);
}

export async function startApp(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session") ?? "";
  const base = params.get("api") ?? "";
  if (!sessionId) {
    el("workspace").textContent = "add ?session=<id> to the URL";
    return;
  }
  const api = new ApiClient(base);
  const ws = new Workspace(api, sessionId);
  const annotate = new AnnotateController(ws);
  const collage = new CollageController(ws);
  const verification = new VerificationView(api, sessionId, render);

  let dragged: string | null = null;

  function render(): void {
    el("session-name").textContent = sessionId;
    if (ws.embedding) {
      const legend = buildLegend(ws.embedding.points);
      const views = buildScatter(ws.embedding, legend, ws.selectedWindowIds());
      el("scatter").innerHTML = renderScatterSvg(views);
      if (ws.correlation) {
        el("heatmap").innerHTML = renderHeatmapSvg(
          buildHeatmap(ws.correlation, ws.selectedState),
          legend,
        );
      }
    } else {
      el("scatter").textContent = "run the pipeline to get an embedding";
    }
    if (ws.fsm) {
      const graph = buildFsmGraph(ws.fsm, {
        active: verification.activeState,
        selected: ws.selectedState,
        invalidEdges: verification.invalidEdges,
      });
      el("fsm").innerHTML = renderFsmSvg(graph);
      wireFsmNodes();
    }
    el("verify-status").innerHTML = renderStatusBadge(verification.status);
    el("verify-log").innerHTML = renderStepLog(verification.log);
    (el("undo") as HTMLButtonElement).disabled = !collage.canUndo();
  }

  function wireFsmNodes(): void {
    el("fsm").querySelectorAll<SVGGElement>("g.fsm-node").forEach((node) => {
      const state = node.dataset.state!;
      node.addEventListener("click", () => {
        ws.selectState(ws.selectedState === state ? null : state);
        render();
      });
      node.addEventListener("dragstart", () => {
        dragged = state;
      });
      node.addEventListener("dragover", (ev) => ev.preventDefault());
      node.addEventListener("drop", async (ev) => {
        ev.preventDefault();
        if (dragged && dragged !== state) {
          const result = await collage.drag({ dragged, targetGroup: state });
          if (!result.ok && result.toast) toast(result.toast);
          render();
        }
        dragged = null;
      });
    });
  }

  el("annotate-form").addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const input = el("annotate-name") as HTMLInputElement;
    const result = await annotate.annotateInteraction(input.value);
    if (!result.ok) {
      toast(result.reason ?? "annotation rejected");
      return;
    }
    input.value = "";
    render();
  });

  el("undo").addEventListener("click", async () => {
    const result = await collage.undo();
    if (!result.ok && result.toast) toast(result.toast);
    render();
  });

  el("run-pipeline").addEventListener("click", async () => {
    el("run-pipeline").textContent = "running...";
    try {
      await api.runPipeline(sessionId);
      await ws.refresh();
    } finally {
      el("run-pipeline").textContent = "run pipeline";
    }
    render();
  });

  el("train").addEventListener("click", async () => {
    await api.trainClassifier(sessionId);
    toast("classifier trained");
  });

  el("verify").addEventListener("click", async () => {
    const replay = (el("replay-id") as HTMLInputElement).value.trim() || null;
    await verification.run(replay);
  });

  await ws.refresh();
  render();
}

startApp().catch((err) => {
  document.body.insertAdjacentText("beforeend", `failed to start: ${err}`);
});
