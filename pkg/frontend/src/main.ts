/**
 * Browser entry point. Query parameters:
 *   ?service=http://127.0.0.1:8080  (default: same origin)
 *   ?annotator=coder-a              (required to claim)
 *   ?iteration=1                    (progress panel)
 */

import { ServiceClient } from "./api.js";
import { DraftStore } from "./drafts.js";
import { AnnotateSession } from "./session.js";
import { LedgerRow, renderProgress, renderTask, wireKeyboard } from "./view.js";

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "";
  const annotator = params.get("annotator") ?? "anonymous";
  const iteration = Number(params.get("iteration") ?? "1");

  const client = new ServiceClient(base);
  const session = new AnnotateSession(client, annotator, new DraftStore(window.localStorage));

  const taskPane = document.getElementById("task-pane");
  const progressPane = document.getElementById("progress-pane");
  if (!taskPane || !progressPane) throw new Error("missing #task-pane / #progress-pane");

  session.onChange(() => renderTask(taskPane, session));
  renderTask(taskPane, session);
  wireKeyboard(document, session);

  const ledger: LedgerRow[] = [];
  const poll = async () => {
    try {
      renderProgress(progressPane, await client.progress(iteration), ledger);
    } catch {
      renderProgress(progressPane, null, ledger);
    }
  };
  void poll();
  window.setInterval(() => void poll(), 5000);
}

bootstrap();
