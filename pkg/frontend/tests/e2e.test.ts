/**
 * Scripted browser session against the real service: claim, label and
 * submit 5 fixture tasks through the rendered DOM, including one
 * new-opinion creation and one off-topic posting (which must disable and
 * clear the opinion picker). Afterwards the service state must reflect
 * all 5 submissions.
 */

import { beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { DraftStore, MemoryStorage } from "../src/drafts.js";
import { AnnotateSession } from "../src/session.js";
import { renderTask, wireKeyboard } from "../src/view.js";
import { SERVICE_URL, until } from "./helpers.js";

const ANNOTATOR = "e2e-coder";

function click(id: string): void {
  const node = document.getElementById(id);
  if (!node) throw new Error(`no element #${id}`);
  (node as HTMLElement).click();
}

function type(id: string, value: string): void {
  const input = document.getElementById(id) as HTMLInputElement | null;
  if (!input) throw new Error(`no element #${id}`);
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

describe("scripted annotation session in a browser DOM", () => {
  let client: ServiceClient;
  let session: AnnotateSession;
  let pane: HTMLElement;
  let baselineFinalized = 0;

  beforeAll(async () => {
    client = new ServiceClient(SERVICE_URL);
    baselineFinalized = (await client.progress(1)).counts.finalized;
    document.body.innerHTML = '<div id="task-pane"></div>';
    pane = document.getElementById("task-pane")!;
    session = new AnnotateSession(client, ANNOTATOR, new DraftStore(new MemoryStorage()));
    session.onChange(() => renderTask(pane, session));
    renderTask(pane, session);
    wireKeyboard(document, session);
  });

  async function submitAndAdvance(expectedCount: number): Promise<void> {
    const before = session.task!.task_id;
    click("submit-labels");
    await until(() => session.submittedCount === expectedCount, 10000,
      `submit #${expectedCount} never landed`);
    await until(() => session.task !== null && session.task.task_id !== before,
      10000, "auto-claim never advanced");
  }

  it("claims, labels and submits five tasks through the DOM", async () => {
    // --- task 1: click a topic checkbox, pick an opinion, submit
    click("claim-next");
    await until(() => session.task !== null, 10000, "first claim never landed");
    expect(document.getElementById("posting-text")?.textContent).toContain("fixture posting");

    click("topic-climate-change");
    await until(() => document.getElementById("opinion-o-unhoax") !== null);
    click("opinion-o-unhoax");
    expect(session.selectedOpinions.has("o-unhoax")).toBe(true);
    await submitAndAdvance(1);

    // --- task 2: keyboard-first labeling (digit toggles the first topic)
    pressKey("1");
    expect(session.selectedTopics.size).toBe(1);
    const secondTask = session.task!.task_id;
    pressKey("Enter");
    await until(() => session.submittedCount === 2);
    await until(() => session.task !== null && session.task.task_id !== secondTask);

    // --- task 3: create a brand-new opinion through the form
    click("topic-covid-19");
    await until(() => !(document.getElementById("new-opinion-statement") as HTMLInputElement).disabled);
    type("new-opinion-statement", "Covid-19 is a plague sent by God");
    click("new-opinion-conspiracy");
    click("add-new-opinion");
    expect(session.newOpinions.length).toBe(1);
    expect(document.getElementById("pending-new-opinions")?.textContent)
      .toContain("plague sent by God");
    await submitAndAdvance(3);
    const opinions = await client.opinions();
    expect(opinions.some((o) => o.statement === "Covid-19 is a plague sent by God")).toBe(true);

    // --- task 4: off-topic disables and clears the opinion picker
    click("topic-climate-change");
    await until(() => document.getElementById("opinion-o-unhoax") !== null);
    click("opinion-o-unhoax");
    click("mark-off-topic");
    await until(() => session.selectedTopics.size === 0);
    expect(session.selectedOpinions.size).toBe(0);
    const search = document.getElementById("opinion-search") as HTMLInputElement;
    expect(search.disabled).toBe(true);
    expect(document.getElementById("opinion-picker")?.getAttribute("data-disabled")).toBe("true");
    expect(document.querySelectorAll("#opinion-options input").length).toBe(0);
    await submitAndAdvance(4);

    // --- task 5: searchable picker narrows options
    click("topic-vaccination");
    await until(() => document.getElementById("opinion-o-safe") !== null);
    type("opinion-search", "microchip");
    await until(() => document.getElementById("opinion-o-safe") === null);
    expect(document.getElementById("opinion-o-chip")).not.toBeNull();
    click("opinion-o-chip");
    click("submit-labels");
    await until(() => session.submittedCount === 5);

    // --- the service reflects all five submissions
    const progress = await client.progress(1);
    expect(progress.counts.finalized).toBe(baselineFinalized + 5);
    expect(document.getElementById("status-line")?.textContent).toContain("submitted 5 task(s)");
  }, 60000);
});
