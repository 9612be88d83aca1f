/**
 * Per-task draft persistence, so lease churn never loses an annotator's
 * work in progress. Backed by localStorage in the browser and by any
 * Storage-shaped object in tests.
 */

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface Draft {
  topics: string[];
  opinions: string[];
  newOpinions: { statement: string; topic_ids: string[]; conspiracy: boolean }[];
}

const PREFIX = "opinionmap-draft:";

export class DraftStore {
  constructor(private readonly storage: StorageLike) {}

  save(taskId: string, draft: Draft): void {
    this.storage.setItem(PREFIX + taskId, JSON.stringify(draft));
  }

  load(taskId: string): Draft | null {
    const raw = this.storage.getItem(PREFIX + taskId);
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as Draft;
    } catch {
      return null;
    }
  }

  discard(taskId: string): void {
    this.storage.removeItem(PREFIX + taskId);
  }
}

export class MemoryStorage implements StorageLike {
  private readonly map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}
