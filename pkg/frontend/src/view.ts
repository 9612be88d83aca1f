/**
 * Framework-free DOM rendering of the task view and the progress view.
 *
 * The task view shows posting text and context metadata only (the payload
 * carries nothing else), a numbered topic checklist, a searchable opinion
 * picker restricted to the checked topics, and the new-opinion form. When
 * no topic is checked (off-topic), the picker is disabled and empty.
 */

import { Progress } from "./schema.js";
import { AnnotateSession } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

export function renderTask(container: HTMLElement, session: AnnotateSession): void {
  container.textContent = "";
  const task = session.task;

  if (session.status === "offline") {
    container.append(el("div", { class: "banner offline", id: "offline-banner" },
      "service unreachable - working offline, drafts are safe"));
    return;
  }
  if (task === null) {
    container.append(el("div", { class: "banner", id: "queue-empty" },
      session.status === "queue-empty" ? "no open tasks - all done" : "claim a task to begin"));
    const claim = el("button", { id: "claim-next" }, "claim next task");
    claim.addEventListener("click", () => void session.claimNext());
    container.append(claim);
    return;
  }

  const posting = task.posting;
  const header = el("div", { class: "posting" });
  header.append(
    el("div", { class: "posting-text", id: "posting-text" }, posting.text),
    el("div", { class: "posting-meta" },
      `${posting.platform} | ${posting.place ?? "unknown place"} | ${posting.timestamp_iso8601}`),
    el("div", { class: "task-context" },
      task.candidate_topic
        ? `sampled for topic: ${task.candidate_topic}`
        : "sampled without topic context"),
  );
  container.append(header);

  // numbered topic checklist; number keys toggle, 0 = off-topic
  const topicList = el("fieldset", { id: "topic-list" });
  topicList.append(el("legend", {}, "topics (keys 1-9 toggle, 0 = off-topic)"));
  session.getVocabulary().topics.forEach((topic, index) => {
    const label = el("label", { class: "topic-option" });
    const box = el("input", {
      type: "checkbox",
      id: `topic-${topic.id}`,
      value: topic.id,
    }) as HTMLInputElement;
    box.checked = session.selectedTopics.has(topic.id);
    box.addEventListener("change", () => session.toggleTopic(topic.id));
    label.append(box, el("span", {}, ` ${index + 1}. ${topic.name}`));
    topicList.append(label);
  });
  const offTopic = el("button", { id: "mark-off-topic", type: "button" }, "off-topic (0)");
  offTopic.addEventListener("click", () => session.markOffTopic());
  topicList.append(offTopic);
  container.append(topicList);

  // searchable opinion picker, disabled and cleared while off-topic
  const picker = el("fieldset", { id: "opinion-picker" });
  picker.append(el("legend", {}, "opinions of the checked topics"));
  const search = el("input", {
    type: "search",
    id: "opinion-search",
    placeholder: "filter opinions",
  }) as HTMLInputElement;
  const enabled = session.opinionPickerEnabled();
  search.disabled = !enabled;
  if (!enabled) picker.setAttribute("data-disabled", "true");
  picker.append(search);
  const optionBox = el("div", { id: "opinion-options" });
  const renderOptions = (filter: string) => {
    optionBox.textContent = "";
    for (const opinion of session.availableOpinions(filter)) {
      const label = el("label", { class: "opinion-option" });
      const box = el("input", {
        type: "checkbox",
        id: `opinion-${opinion.id}`,
        value: opinion.id,
      }) as HTMLInputElement;
      box.checked = session.selectedOpinions.has(opinion.id);
      box.addEventListener("change", () => session.toggleOpinion(opinion.id));
      label.append(box, el("span", {}, ` ${opinion.statement}`));
      optionBox.append(label);
    }
  };
  renderOptions("");
  search.addEventListener("input", () => renderOptions(search.value));
  picker.append(optionBox);
  container.append(picker);

  // new-opinion form, scoped to the checked topics
  const form = el("fieldset", { id: "new-opinion-form" });
  form.append(el("legend", {}, "construct a new opinion"));
  const statement = el("input", {
    type: "text",
    id: "new-opinion-statement",
    placeholder: "opinion statement",
  }) as HTMLInputElement;
  statement.disabled = !enabled;
  const conspiracy = el("input", {
    type: "checkbox",
    id: "new-opinion-conspiracy",
  }) as HTMLInputElement;
  const add = el("button", { id: "add-new-opinion", type: "button" }, "add opinion");
  add.addEventListener("click", () => {
    if (statement.value.trim() && session.selectedTopics.size > 0) {
      session.addNewOpinion(statement.value.trim(), [...session.selectedTopics],
        conspiracy.checked);
      statement.value = "";
      conspiracy.checked = false;
    }
  });
  const pending = el("ul", { id: "pending-new-opinions" });
  for (const proposal of session.newOpinions) {
    pending.append(el("li", {}, `${proposal.statement} (${proposal.topic_ids.join(", ")})`));
  }
  form.append(statement, el("label", {}, " conspiracy "), conspiracy, add, pending);
  container.append(form);

  const submit = el("button", { id: "submit-labels" }, "submit and claim next");
  submit.addEventListener("click", () => void session.submit().catch(() => undefined));
  container.append(submit);

  const lastEvent = session.events[session.events.length - 1];
  container.append(el("div", { id: "status-line" },
    `submitted ${session.submittedCount} task(s)` +
    (lastEvent && lastEvent.kind === "lease-expired"
      ? " - lease expired, draft preserved and task re-claimed"
      : "") +
    (lastEvent && lastEvent.kind === "validation-failed"
      ? ` - fix before submitting: ${lastEvent.detail}`
      : "")));
}

/** Global keyboard shortcuts: digits toggle topics, Enter submits. */
export function wireKeyboard(target: EventTarget, session: AnnotateSession): void {
  target.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    const focus = (event as KeyboardEvent).target as HTMLElement | null;
    if (focus && (focus.tagName === "INPUT" || focus.tagName === "TEXTAREA")) return;
    if (key === "Enter") {
      void session.submit().catch(() => undefined);
      return;
    }
    if (session.handleKey(key)) event.preventDefault();
  });
}

export interface LedgerRow {
  iteration: number;
  test_report: { macro_accuracy: number; macro_f1: number };
  cv_report: { macro_accuracy: number; macro_f1: number } | null;
  gain: number | null;
  converged: boolean;
}

export function renderProgress(
  container: HTMLElement,
  progress: Progress | null,
  ledger: LedgerRow[] = [],
): void {
  container.textContent = "";
  if (progress === null) {
    container.append(el("div", { class: "banner offline", id: "offline-banner" },
      "service unreachable"));
    return;
  }
  const counts = progress.counts;
  container.append(el("div", { id: "progress-counts" },
    `iteration ${progress.iteration}: ${counts.finalized}/${progress.total} finalized ` +
    `(${counts.open} open, ${counts.claimed} claimed, ${counts.submitted} submitted)`));

  if (ledger.length === 0) return;
  const table = el("table", { id: "ledger-table" });
  const head = el("tr", {});
  for (const column of ["iteration", "test acc", "test F1", "cv acc", "cv F1", "gain", "converged"]) {
    head.append(el("th", {}, column));
  }
  table.append(head);
  for (const row of ledger) {
    const tr = el("tr", {});
    const cells = [
      String(row.iteration),
      row.test_report.macro_accuracy.toFixed(4),
      row.test_report.macro_f1.toFixed(4),
      row.cv_report ? row.cv_report.macro_accuracy.toFixed(4) : "-",
      row.cv_report ? row.cv_report.macro_f1.toFixed(4) : "-",
      row.gain === null ? "-" : row.gain.toFixed(4),
      row.converged ? "yes" : "no",
    ];
    for (const cell of cells) tr.append(el("td", {}, cell));
    table.append(tr);
  }
  container.append(table);
}
