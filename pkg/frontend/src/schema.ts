/**
 * Wire-protocol schemas and the local submission validator.
 *
 * The task schema is strict: a payload carrying any unexpected key (for
 * example a model score) fails parsing, so the annotator-blindness rule is
 * enforced structurally on the client as well as on the server.
 */

import { z } from "zod";

export const TopicSchema = z.object({
  id: z.string(),
  name: z.string(),
});

export const OpinionSchema = z.object({
  id: z.string(),
  statement: z.string(),
  topic_ids: z.array(z.string()),
  conspiracy: z.boolean(),
  status: z.string(),
});

export const PostingSchema = z
  .object({
    id: z.string(),
    text: z.string(),
    platform: z.string(),
    place: z.string().nullable(),
    timestamp_iso8601: z.string(),
  })
  .strict();

export const TaskSchema = z
  .object({
    task_id: z.string(),
    iteration: z.number().int(),
    candidate_topic: z.string().nullable(),
    posting: PostingSchema,
    lease_expires_at: z.number().nullable(),
  })
  .strict();

export const NewOpinionSchema = z.object({
  statement: z.string().min(1),
  topic_ids: z.array(z.string()).min(1),
  conspiracy: z.boolean(),
});

export const SubmissionSchema = z.object({
  annotator_id: z.string().min(1),
  topics: z.array(z.string()),
  opinions: z.array(z.string()),
  new_opinions: z.array(NewOpinionSchema),
});

export const ProgressSchema = z.object({
  iteration: z.number().int(),
  counts: z.object({
    open: z.number().int(),
    claimed: z.number().int(),
    submitted: z.number().int(),
    finalized: z.number().int(),
  }),
  total: z.number().int(),
});

export const ErrorSchema = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
});

export type Topic = z.infer<typeof TopicSchema>;
export type Opinion = z.infer<typeof OpinionSchema>;
export type Task = z.infer<typeof TaskSchema>;
export type NewOpinion = z.infer<typeof NewOpinionSchema>;
export type Submission = z.infer<typeof SubmissionSchema>;
export type Progress = z.infer<typeof ProgressSchema>;

export interface Vocabulary {
  topics: Topic[];
  opinions: Opinion[];
}

/**
 * Validate a submission against the service's labeling rules. Returns a
 * list of problems; empty means the service is guaranteed to accept it
 * (given a valid claim). Mirrors, in order: unknown topics, the off-topic
 * exclusion rule, opinion-under-selected-topic, and new-opinion scoping.
 */
export function validateSubmission(
  submission: Submission,
  vocabulary: Vocabulary,
): string[] {
  const problems: string[] = [];
  const parsed = SubmissionSchema.safeParse(submission);
  if (!parsed.success) {
    return parsed.error.issues.map((i) => `${i.path.join(".")}: ${i.message}`);
  }
  const topicIds = new Set(vocabulary.topics.map((t) => t.id));
  const opinionById = new Map(vocabulary.opinions.map((o) => [o.id, o]));
  const selected = new Set(submission.topics);

  for (const tid of submission.topics) {
    if (!topicIds.has(tid)) problems.push(`unknown topic ${tid}`);
  }
  if (selected.size === 0 && (submission.opinions.length || submission.new_opinions.length)) {
    problems.push("off-topic submissions cannot carry opinions");
  }
  for (const oid of submission.opinions) {
    const opinion = opinionById.get(oid);
    if (!opinion || opinion.status !== "active") {
      problems.push(`unknown or inactive opinion ${oid}`);
      continue;
    }
    if (!opinion.topic_ids.some((t) => selected.has(t))) {
      problems.push(`opinion ${oid} does not belong to any selected topic`);
    }
  }
  for (const proposal of submission.new_opinions) {
    if (!proposal.topic_ids.every((t) => selected.has(t))) {
      problems.push(`new opinion "${proposal.statement}" must attach to selected topics`);
    }
  }
  return problems;
}
