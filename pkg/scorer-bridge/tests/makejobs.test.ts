import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, test } from "vitest";

import { makeJobs, mulberry32, parseTracks, TracksParseError } from "../src/makeJobs.js";
import { ByteContextModel } from "../src/model.js";
import { scoreJobs } from "../src/score.js";

const FIXTURE = join(__dirname, "..", "fixtures", "tracks_sample.jsonl");

function fixtureTracks() {
  return parseTracks(readFileSync(FIXTURE, "utf-8"));
}

describe("makeJobs on a real tracks file", () => {
  test("one job per clip, target equals the full narration", () => {
    const jobs = makeJobs(fixtureTracks());
    expect(jobs.length).toBeGreaterThan(0);
    for (const job of jobs) {
      expect(job.target).toBe(job.contextFull);
      const lines = job.contextFull.split("\n");
      expect(lines[0]).toMatch(/^frame 1: /);
      expect(job.contextSingle).toBe(lines[job.singleFrame - 1]);
    }
  });

  test("last keyframe policy picks the final position", () => {
    for (const job of makeJobs(fixtureTracks(), "last")) {
      expect(job.singleFrame).toBe(job.contextFull.split("\n").length);
    }
  });

  test("random keyframe policy is seed-stable and in range", () => {
    const a = makeJobs(fixtureTracks(), "random", 7);
    const b = makeJobs(fixtureTracks(), "random", 7);
    expect(a).toEqual(b);
    for (const job of a) {
      const frames = job.contextFull.split("\n").length;
      expect(job.singleFrame).toBeGreaterThanOrEqual(1);
      expect(job.singleFrame).toBeLessThanOrEqual(frames);
    }
  });

  test("derivation is deterministic", () => {
    expect(makeJobs(fixtureTracks())).toEqual(makeJobs(fixtureTracks()));
  });

  test("derived jobs score with full context strictly ahead", () => {
    const { records, skipped } = scoreJobs(makeJobs(fixtureTracks()), new ByteContextModel());
    expect(skipped).toEqual([]);
    for (let i = 0; i < records.length; i += 2) {
      expect(records[i].context).toBe("full");
      expect(records[i].mean_nll).toBeLessThan(records[i + 1].mean_nll);
    }
  });

  test("narration lists subjects in ascending id order", () => {
    const jobs = makeJobs(fixtureTracks());
    const multi = jobs.find((j) => j.contextFull.split("\n")[0].includes(";"));
    expect(multi).toBeDefined();
  });
});

describe("tracks parsing", () => {
  test("bad lines carry line numbers", () => {
    expect(() => parseTracks("{broken")).toThrow(TracksParseError);
    expect(() => parseTracks('{"video_id":"v"}')).toThrow(/line 1: missing track fields/);
  });
});

describe("mulberry32", () => {
  test("streams are deterministic and in [0, 1)", () => {
    const a = mulberry32(42);
    const b = mulberry32(42);
    for (let i = 0; i < 100; i++) {
      const value = a();
      expect(value).toBe(b());
      expect(value).toBeGreaterThanOrEqual(0);
      expect(value).toBeLessThan(1);
    }
  });
});
