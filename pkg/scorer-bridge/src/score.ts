/** Batch scoring: two NLL records per job, in job order. */

import type { CausalLanguageModel } from "./model.js";
import type { NllRecord, ScoringJob } from "./jobs.js";

export interface SkipReport {
  sample_id: string;
  reason: string;
}

export interface ScoreResult {
  records: NllRecord[];
  skipped: SkipReport[];
}

export function scoreJobs(jobs: ScoringJob[], model: CausalLanguageModel): ScoreResult {
  const records: NllRecord[] = [];
  const skipped: SkipReport[] = [];
  for (const job of jobs) {
    if (new TextEncoder().encode(job.target).length === 0) {
      skipped.push({ sample_id: job.sampleId, reason: "target has zero tokens" });
      continue;
    }
    const full = model.meanNll(job.contextFull, job.target);
    const single = model.meanNll(job.contextSingle, job.target);
    records.push({
      sample_id: job.sampleId,
      context: "full",
      mean_nll: full.meanNll,
      token_count: full.tokenCount,
      scorer_id: model.scorerId,
    });
    records.push({
      sample_id: job.sampleId,
      context: `single:${job.singleFrame}`,
      mean_nll: single.meanNll,
      token_count: single.tokenCount,
      scorer_id: model.scorerId,
    });
  }
  return { records, skipped };
}
