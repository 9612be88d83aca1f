/**
 * The annotate-flow state machine: claim, edit, submit, auto-claim next.
 *
 * Editing rules mirror the service invariants so a submission that leaves
 * this session always validates: the opinion picker only ever offers
 * active opinions of the checked topics, unchecking a topic drops any
 * opinion that no longer qualifies, and clearing every topic (an explicit
 * off-topic label) clears the opinion selection entirely.
 *
 * A stale lease at submit time keeps the draft locally, warns, and
 * attempts a re-claim; the draft is restored if the same task comes back.
 */

import { ApiError, OfflineError, ServiceClient } from "./api.js";
import { Draft, DraftStore } from "./drafts.js";
import {
  NewOpinion,
  Opinion,
  Submission,
  Task,
  Vocabulary,
  validateSubmission,
} from "./schema.js";

export type SessionStatus = "idle" | "editing" | "queue-empty" | "offline";

export interface SessionEvent {
  kind: "claimed" | "submitted" | "lease-expired" | "validation-failed" | "offline";
  detail: string;
}

export class ValidationFailed extends Error {
  constructor(readonly problems: string[]) {
    super(problems.join("; "));
  }
}

export class AnnotateSession {
  status: SessionStatus = "idle";
  task: Task | null = null;
  selectedTopics = new Set<string>();
  selectedOpinions = new Set<string>();
  newOpinions: NewOpinion[] = [];
  submittedCount = 0;
  readonly events: SessionEvent[] = [];

  private vocabulary: Vocabulary = { topics: [], opinions: [] };
  private readonly listeners: (() => void)[] = [];

  constructor(
    private readonly client: ServiceClient,
    readonly annotatorId: string,
    private readonly drafts: DraftStore,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private changed(): void {
    for (const listener of this.listeners) listener();
  }

  private emit(kind: SessionEvent["kind"], detail: string): void {
    this.events.push({ kind, detail });
  }

  getVocabulary(): Vocabulary {
    return this.vocabulary;
  }

  async refreshVocabulary(): Promise<void> {
    this.vocabulary = {
      topics: await this.client.topics(),
      opinions: await this.client.opinions(),
    };
    this.changed();
  }

  /** Topic ids in display order; digit keys toggle by this index. */
  topicOrder(): string[] {
    return this.vocabulary.topics.map((t) => t.id);
  }

  /** Active opinions under the checked topics: the picker's option set. */
  availableOpinions(filter = ""): Opinion[] {
    if (this.selectedTopics.size === 0) return [];
    const needle = filter.toLowerCase();
    return this.vocabulary.opinions.filter(
      (o) =>
        o.status === "active" &&
        o.topic_ids.some((t) => this.selectedTopics.has(t)) &&
        (needle === "" || o.statement.toLowerCase().includes(needle)),
    );
  }

  opinionPickerEnabled(): boolean {
    return this.selectedTopics.size > 0;
  }

  async claimNext(): Promise<Task | null> {
    let task: Task | null;
    try {
      await this.refreshVocabulary();
      task = await this.client.claimNext(this.annotatorId);
    } catch (err) {
      if (err instanceof OfflineError) {
        this.status = "offline";
        this.emit("offline", String(err));
        this.changed();
        return null;
      }
      throw err;
    }
    this.task = task;
    this.selectedTopics.clear();
    this.selectedOpinions.clear();
    this.newOpinions = [];
    if (task === null) {
      this.status = "queue-empty";
      this.changed();
      return null;
    }
    const draft = this.drafts.load(task.task_id);
    if (draft !== null) {
      this.selectedTopics = new Set(draft.topics);
      this.selectedOpinions = new Set(draft.opinions);
      this.newOpinions = draft.newOpinions.map((n) => ({ ...n }));
    }
    this.status = "editing";
    this.emit("claimed", task.task_id);
    this.changed();
    return task;
  }

  private saveDraft(): void {
    if (this.task === null) return;
    const draft: Draft = {
      topics: [...this.selectedTopics].sort(),
      opinions: [...this.selectedOpinions].sort(),
      newOpinions: this.newOpinions.map((n) => ({
        statement: n.statement,
        topic_ids: [...n.topic_ids],
        conspiracy: n.conspiracy,
      })),
    };
    this.drafts.save(this.task.task_id, draft);
  }

  toggleTopic(topicId: string): void {
    if (this.selectedTopics.has(topicId)) {
      this.selectedTopics.delete(topicId);
    } else {
      this.selectedTopics.add(topicId);
    }
    // drop opinions that no longer sit under any checked topic
    const opinionById = new Map(this.vocabulary.opinions.map((o) => [o.id, o]));
    for (const oid of [...this.selectedOpinions]) {
      const opinion = opinionById.get(oid);
      if (!opinion || !opinion.topic_ids.some((t) => this.selectedTopics.has(t))) {
        this.selectedOpinions.delete(oid);
      }
    }
    this.newOpinions = this.newOpinions.filter((n) =>
      n.topic_ids.every((t) => this.selectedTopics.has(t)),
    );
    this.saveDraft();
    this.changed();
  }

  /** Explicit off-topic: clear everything, including opinions. */
  markOffTopic(): void {
    this.selectedTopics.clear();
    this.selectedOpinions.clear();
    this.newOpinions = [];
    this.saveDraft();
    this.changed();
  }

  toggleOpinion(opinionId: string): void {
    if (this.selectedOpinions.has(opinionId)) {
      this.selectedOpinions.delete(opinionId);
    } else {
      if (!this.availableOpinions().some((o) => o.id === opinionId)) {
        return; // picker never offers it; ignore defensively
      }
      this.selectedOpinions.add(opinionId);
    }
    this.saveDraft();
    this.changed();
  }

  addNewOpinion(statement: string, topicIds: string[], conspiracy = false): void {
    this.newOpinions.push({ statement, topic_ids: [...topicIds], conspiracy });
    this.saveDraft();
    this.changed();
  }

  /** Digit keys 1..9 toggle the nth topic; "0" marks off-topic. */
  handleKey(key: string): boolean {
    if (key === "0") {
      this.markOffTopic();
      return true;
    }
    if (/^[1-9]$/.test(key)) {
      const order = this.topicOrder();
      const index = Number(key) - 1;
      if (index < order.length) {
        this.toggleTopic(order[index]);
        return true;
      }
    }
    return false;
  }

  buildSubmission(): Submission {
    return {
      annotator_id: this.annotatorId,
      topics: [...this.selectedTopics].sort(),
      opinions: [...this.selectedOpinions].sort(),
      new_opinions: this.newOpinions.map((n) => ({ ...n, topic_ids: [...n.topic_ids] })),
    };
  }

  async submit(): Promise<boolean> {
    if (this.task === null) return false;
    const submission = this.buildSubmission();
    const problems = validateSubmission(submission, this.vocabulary);
    if (problems.length > 0) {
      this.emit("validation-failed", problems.join("; "));
      this.changed();
      throw new ValidationFailed(problems);
    }
    const taskId = this.task.task_id;
    this.saveDraft();
    try {
      await this.client.submitLabels(taskId, submission);
    } catch (err) {
      if (err instanceof ApiError && err.code === "stale-lease") {
        // work preserved in the draft store; warn and try to claim again
        this.emit("lease-expired", `lease lost on ${taskId}; draft kept, re-claiming`);
        await this.claimNext();
        return false;
      }
      if (err instanceof OfflineError) {
        this.status = "offline";
        this.emit("offline", String(err));
        this.changed();
        return false;
      }
      throw err;
    }
    this.drafts.discard(taskId);
    this.submittedCount += 1;
    this.emit("submitted", taskId);
    await this.claimNext(); // auto-advance to the next task
    return true;
  }
}
