/**
 * Schema parity with the real service: every payload the local validator
 * accepts must be accepted by the service. 200 generated submissions mix
 * plain topic labels, opinion picks, off-topic, and new-opinion proposals,
 * plus deliberately broken ones to confirm the validator catches what the
 * service would reject.
 */

import { beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { Submission, Vocabulary, validateSubmission } from "../src/schema.js";
import { SERVICE_URL, makeRng, pick, sample } from "./helpers.js";

const client = new ServiceClient(SERVICE_URL);
let vocabulary: Vocabulary;

beforeAll(async () => {
  vocabulary = { topics: await client.topics(), opinions: await client.opinions() };
});

function generate(rng: () => number, index: number): Submission {
  const topicIds = vocabulary.topics.map((t) => t.id);
  const active = vocabulary.opinions.filter((o) => o.status === "active");
  const roll = rng();
  const submission: Submission = {
    annotator_id: "parity-coder",
    topics: [],
    opinions: [],
    new_opinions: [],
  };
  if (roll < 0.15) {
    return submission; // explicit off-topic
  }
  submission.topics = sample(rng, topicIds, 3);
  if (submission.topics.length === 0) submission.topics = [pick(rng, topicIds)];
  const selected = new Set(submission.topics);
  const eligible = active.filter((o) => o.topic_ids.some((t) => selected.has(t)));
  if (rng() < 0.7 && eligible.length > 0) {
    submission.opinions = sample(rng, eligible.map((o) => o.id), 2);
  }
  if (rng() < 0.25) {
    submission.new_opinions = [{
      statement: `generated statement ${index} ${Math.floor(rng() * 1e9)}`,
      topic_ids: [pick(rng, submission.topics)],
      conspiracy: rng() < 0.3,
    }];
  }
  // a slice of deliberately broken payloads the validator must flag
  if (rng() < 0.15) {
    const breakRoll = rng();
    if (breakRoll < 0.33) {
      submission.topics = ["no-such-topic"];
    } else if (breakRoll < 0.66) {
      const foreign = active.find((o) => !o.topic_ids.some((t) => selected.has(t)));
      if (foreign) submission.opinions = [...submission.opinions, foreign.id];
    } else {
      submission.topics = [];
      submission.opinions = [pick(rng, active.map((o) => o.id))];
    }
  }
  return submission;
}

describe("schema parity with the live service", () => {
  it("every locally-valid submission among 200 generated is accepted", async () => {
    const rng = makeRng(20250809);
    let validCount = 0;
    let invalidCount = 0;
    for (let i = 0; i < 200; i++) {
      const submission = generate(rng, i);
      const problems = validateSubmission(submission, vocabulary);
      if (problems.length > 0) {
        invalidCount++;
        continue; // never sent: the UI blocks these before the wire
      }
      const task = await client.claimNext("parity-coder");
      expect(task, "fixture queue ran out of tasks").not.toBeNull();
      const result = await client.submitLabels(task!.task_id, submission);
      expect(result.accepted).toBe(true);
      expect(["submitted", "finalized"]).toContain(result.task_state);
      validCount++;
      if (submission.new_opinions.length > 0) {
        // creations become visible vocabulary for later submissions
        vocabulary = { topics: vocabulary.topics, opinions: await client.opinions() };
      }
    }
    expect(validCount + invalidCount).toBe(200);
    expect(validCount).toBeGreaterThan(100);
    expect(invalidCount).toBeGreaterThan(10);
  }, 120000);

  it("validator problems mirror service rejections for broken payloads", async () => {
    const active = vocabulary.opinions.filter((o) => o.status === "active");
    const wrongTopic = active.find((o) => !o.topic_ids.includes("bushfires"));
    const cases: Submission[] = [
      { annotator_id: "parity-coder", topics: ["no-such-topic"], opinions: [],
        new_opinions: [] },
      { annotator_id: "parity-coder", topics: [], opinions: [active[0].id],
        new_opinions: [] },
      { annotator_id: "parity-coder", topics: ["bushfires"],
        opinions: [wrongTopic!.id], new_opinions: [] },
      { annotator_id: "parity-coder", topics: ["bushfires"], opinions: [],
        new_opinions: [{ statement: "x", topic_ids: ["covid-19"], conspiracy: false }] },
    ];
    for (const submission of cases) {
      expect(validateSubmission(submission, vocabulary).length).toBeGreaterThan(0);
      const task = await client.claimNext("parity-coder");
      expect(task).not.toBeNull();
      await expect(client.submitLabels(task!.task_id, submission)).rejects.toThrow();
    }
  });
});
