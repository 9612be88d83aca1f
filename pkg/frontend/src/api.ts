/**
 * Typed client for the /v1 annotation protocol. This is the only place the
 * UI talks to the network, and it exposes no prediction or scoring calls:
 * the network-layer test walks every request made through this client.
 */

import {
  ErrorSchema,
  Opinion,
  OpinionSchema,
  Progress,
  ProgressSchema,
  Submission,
  Task,
  TaskSchema,
  Topic,
  TopicSchema,
} from "./schema.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export class OfflineError extends Error {}

export interface SubmitResult {
  accepted: boolean;
  task_state: string;
  triples_written: number;
  opinions_created: string[];
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new OfflineError(`service unreachable: ${err}`);
    }
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const parsed = ErrorSchema.safeParse(body);
      if (parsed.success) {
        throw new ApiError(parsed.data.error.code, parsed.data.error.message, response.status);
      }
      throw new ApiError("http-error", `status ${response.status}`, response.status);
    }
    return body;
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async topics(): Promise<Topic[]> {
    const body = (await this.request("/v1/topics")) as { topics: unknown[] };
    return body.topics.map((t) => TopicSchema.parse(t));
  }

  async opinions(): Promise<Opinion[]> {
    const body = (await this.request("/v1/opinions")) as { opinions: unknown[] };
    return body.opinions.map((o) => OpinionSchema.parse(o));
  }

  async claimNext(annotatorId: string): Promise<Task | null> {
    const body = (await this.request(
      `/v1/tasks/next?annotator=${encodeURIComponent(annotatorId)}`,
    )) as { task: unknown };
    return body.task === null ? null : TaskSchema.parse(body.task);
  }

  async submitLabels(taskId: string, submission: Submission): Promise<SubmitResult> {
    return (await this.post(
      `/v1/tasks/${encodeURIComponent(taskId)}/labels`,
      submission,
    )) as SubmitResult;
  }

  async createOpinion(statement: string, topicIds: string[], conspiracy = false): Promise<Opinion> {
    const body = (await this.post("/v1/opinions", {
      statement,
      topic_ids: topicIds,
      conspiracy,
    })) as { opinion: unknown };
    return OpinionSchema.parse(body.opinion);
  }

  async mergeOpinion(keepId: string, absorbId: string): Promise<Opinion> {
    const body = (await this.post(`/v1/opinions/${encodeURIComponent(keepId)}/merge`, {
      absorb_id: absorbId,
    })) as { opinion: unknown };
    return OpinionSchema.parse(body.opinion);
  }

  async progress(iteration: number): Promise<Progress> {
    return ProgressSchema.parse(await this.request(`/v1/iterations/${iteration}/progress`));
  }
}
