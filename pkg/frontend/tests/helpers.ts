export const SERVICE_URL = "http://127.0.0.1:8787";

/** Deterministic PRNG so generated suites are reproducible. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

export function pick<T>(rng: () => number, items: readonly T[]): T {
  return items[Math.floor(rng() * items.length)];
}

export function sample<T>(rng: () => number, items: readonly T[], max: number): T[] {
  const shuffled = [...items].sort(() => rng() - 0.5);
  return shuffled.slice(0, Math.floor(rng() * (max + 1)));
}

export async function until(
  condition: () => boolean,
  timeoutMs = 10000,
  message = "condition never became true",
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!condition()) {
    if (Date.now() > deadline) throw new Error(message);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}
