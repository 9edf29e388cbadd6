import { describe, expect, test } from "vitest";

import { JobsParseError, parseJobs, serializeJob } from "../src/jobs.js";
import { ByteContextModel } from "../src/model.js";
import { scoreJobs } from "../src/score.js";

const model = new ByteContextModel();

function job(sampleId: string, target: string, full: string, single: string, frame = 1) {
  return { sampleId, target, contextFull: full, contextSingle: single, singleFrame: frame };
}

describe("scoreJobs", () => {
  test("degenerate job: target verbatim in full context only scores positive", () => {
    const target = "the striped cat leaps across seven crates and lands on the eighth";
    const { records, skipped } = scoreJobs(
      [job("degenerate", target, `log: ${target}. end.`, "log: a dog sleeps near a door. end.", 8)],
      model,
    );
    expect(skipped).toEqual([]);
    const [full, single] = records;
    expect(full.context).toBe("full");
    expect(single.context).toBe("single:8");
    expect(full.mean_nll).toBeLessThan(single.mean_nll);
    expect(single.mean_nll - full.mean_nll).toBeGreaterThan(0);
  });

  test("identical empty contexts give identical NLLs (TPL ~ 0)", () => {
    const { records } = scoreJobs([job("empty", "some caption text", "", "")], model);
    const [full, single] = records;
    expect(Math.abs(single.mean_nll - full.mean_nll)).toBeLessThanOrEqual(1e-6);
  });

  test("zero-token target is skipped with a report and the rest still score", () => {
    const { records, skipped } = scoreJobs(
      [job("empty-target", "", "ctx", "ctx"), job("ok", "text", "ctx", "ctx")],
      model,
    );
    expect(skipped).toEqual([{ sample_id: "empty-target", reason: "target has zero tokens" }]);
    expect(records.map((r) => r.sample_id)).toEqual(["ok", "ok"]);
  });

  test("records come out in job order, full before single, scorer stamped", () => {
    const { records } = scoreJobs(
      [job("a", "one", "c", "c", 2), job("b", "two", "c", "c", 5)],
      model,
    );
    expect(records.map((r) => [r.sample_id, r.context])).toEqual([
      ["a", "full"],
      ["a", "single:2"],
      ["b", "full"],
      ["b", "single:5"],
    ]);
    for (const record of records) {
      expect(record.scorer_id).toBe(model.scorerId);
      expect(record.mean_nll).toBeGreaterThanOrEqual(0);
      expect(record.token_count).toBeGreaterThan(0);
    }
  });
});

describe("jobs wire format", () => {
  test("round trip with explicit single_frame", () => {
    const original = job("s1", "t", "cf", "cs", 4);
    const [parsed] = parseJobs(serializeJob(original) + "\n");
    expect(parsed).toEqual(original);
  });

  test("single_frame defaults to 1", () => {
    const [parsed] = parseJobs('{"sample_id":"x","target":"t","context_full":"a","context_single":"b"}');
    expect(parsed.singleFrame).toBe(1);
  });

  test("unknown keys are ignored", () => {
    const [parsed] = parseJobs(
      '{"sample_id":"x","target":"t","context_full":"a","context_single":"b","note":"hi"}',
    );
    expect(parsed.sampleId).toBe("x");
  });

  test("missing fields, duplicates, and bad frames are rejected with line numbers", () => {
    expect(() => parseJobs('{"sample_id":"x","target":"t","context_full":"a"}')).toThrow(JobsParseError);
    expect(() => parseJobs('{"sample_id":"x","target":"t","context_full":"a"}')).toThrow(/context_single/);
    const dup = '{"sample_id":"x","target":"t","context_full":"a","context_single":"b"}';
    expect(() => parseJobs(`${dup}\n${dup}`)).toThrow(/line 2: duplicate/);
    expect(() =>
      parseJobs('{"sample_id":"x","target":"t","context_full":"a","context_single":"b","single_frame":0}'),
    ).toThrow(/single_frame/);
    expect(() => parseJobs("{broken")).toThrow(/line 1: invalid JSON/);
  });
});
