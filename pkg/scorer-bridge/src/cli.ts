/**
 * CLI: `score` turns a jobs file into an nll file; `make-jobs` derives a
 * jobs file from a tracks file. Output files are written atomically
 * (temp + rename): a failed run leaves nothing behind. Skipped jobs are
 * reported as JSON lines on stderr; they do not fail the run.
 */

import { mkdirSync, readFileSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { parseJobs, serializeJob, serializeRecord } from "./jobs.js";
import { makeJobs, parseTracks, type KeyframePolicy } from "./makeJobs.js";
import { loadModel } from "./model.js";
import { scoreJobs } from "./score.js";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got '${argv.slice(i).join(" ")}'`);
    }
    flags[key.slice(2)] = argv[i + 1];
  }
  return flags;
}

function require(flags: Flags, name: string): string {
  const value = flags[name];
  if (value === undefined) {
    throw new Error(`missing required flag --${name}`);
  }
  return value;
}

function writeAtomic(path: string, lines: string[]): void {
  mkdirSync(dirname(path) || ".", { recursive: true });
  const tmp = `${path}.tmp${process.pid}`;
  try {
    writeFileSync(tmp, lines.map((l) => l + "\n").join(""), "utf-8");
    renameSync(tmp, path);
  } catch (err) {
    rmSync(tmp, { force: true });
    throw err;
  }
}

function runScore(flags: Flags): void {
  const jobsPath = require(flags, "jobs");
  const outPath = require(flags, "out");
  const model = loadModel(
    flags.model ?? "ppm",
    Number(flags.order ?? "3"),
    Number(flags.alpha ?? "1"),
  );
  const jobs = parseJobs(readFileSync(jobsPath, "utf-8"));
  const { records, skipped } = scoreJobs(jobs, model);
  for (const report of skipped) {
    process.stderr.write(JSON.stringify(report) + "\n");
  }
  writeAtomic(outPath, records.map(serializeRecord));
  process.stderr.write(
    `scored ${jobs.length - skipped.length}/${jobs.length} jobs with ${model.scorerId} -> ${outPath}\n`,
  );
}

function runMakeJobs(flags: Flags): void {
  const tracksPath = require(flags, "tracks");
  const outPath = require(flags, "out");
  const keyframe = (flags.keyframe ?? "last") as KeyframePolicy;
  if (keyframe !== "last" && keyframe !== "random") {
    throw new Error(`--keyframe must be last or random, got '${keyframe}'`);
  }
  const tracks = parseTracks(readFileSync(tracksPath, "utf-8"));
  const jobs = makeJobs(tracks, keyframe, Number(flags.seed ?? "0"));
  writeAtomic(outPath, jobs.map(serializeJob));
  process.stderr.write(`derived ${jobs.length} jobs from ${tracksPath} -> ${outPath}\n`);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "score") {
      runScore(parseFlags(rest));
    } else if (command === "make-jobs") {
      runMakeJobs(parseFlags(rest));
    } else {
      throw new Error(`usage: cli <score|make-jobs> --flag value ... (got '${command ?? ""}')`);
    }
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exitCode = main(process.argv.slice(2));
}
