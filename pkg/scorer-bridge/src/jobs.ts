/**
 * Wire formats: scoring jobs in, mean-NLL records out.
 *
 * jobs (one JSON object per line):
 *   {"sample_id": str, "target": str, "context_full": str,
 *    "context_single": str, "single_frame"?: int >= 1}
 *
 * nll (one JSON object per line, consumed by the toolkit's tpl stage):
 *   {"sample_id": str, "context": "full" | "single:<p>",
 *    "mean_nll": float, "token_count": int, "scorer_id": str}
 */

export interface ScoringJob {
  sampleId: string;
  target: string;
  contextFull: string;
  contextSingle: string;
  /** 1-based keyframe position backing the single context. */
  singleFrame: number;
}

export interface NllRecord {
  sample_id: string;
  context: string;
  mean_nll: number;
  token_count: number;
  scorer_id: string;
}

export class JobsParseError extends Error {
  readonly lineNo: number;

  constructor(lineNo: number, message: string) {
    super(`jobs line ${lineNo}: ${message}`);
    this.lineNo = lineNo;
  }
}

export function parseJobs(text: string): ScoringJob[] {
  const jobs: ScoringJob[] = [];
  const seen = new Set<string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    let data: unknown;
    try {
      data = JSON.parse(line);
    } catch (err) {
      throw new JobsParseError(i + 1, `invalid JSON: ${(err as Error).message}`);
    }
    if (typeof data !== "object" || data === null || Array.isArray(data)) {
      throw new JobsParseError(i + 1, "line is not a JSON object");
    }
    const record = data as Record<string, unknown>;
    for (const key of ["sample_id", "target", "context_full", "context_single"]) {
      if (typeof record[key] !== "string") {
        throw new JobsParseError(i + 1, `missing or non-string field '${key}'`);
      }
    }
    const sampleId = record.sample_id as string;
    if (sampleId === "") {
      throw new JobsParseError(i + 1, "sample_id must be non-empty");
    }
    if (seen.has(sampleId)) {
      throw new JobsParseError(i + 1, `duplicate sample_id '${sampleId}'`);
    }
    seen.add(sampleId);
    let singleFrame = 1;
    if (record.single_frame !== undefined) {
      if (!Number.isInteger(record.single_frame) || (record.single_frame as number) < 1) {
        throw new JobsParseError(i + 1, "single_frame must be an integer >= 1");
      }
      singleFrame = record.single_frame as number;
    }
    jobs.push({
      sampleId,
      target: record.target as string,
      contextFull: record.context_full as string,
      contextSingle: record.context_single as string,
      singleFrame,
    });
  }
  return jobs;
}

export function serializeJob(job: ScoringJob): string {
  return JSON.stringify({
    sample_id: job.sampleId,
    target: job.target,
    context_full: job.contextFull,
    context_single: job.contextSingle,
    single_frame: job.singleFrame,
  });
}

export function serializeRecord(record: NllRecord): string {
  return JSON.stringify(record);
}
