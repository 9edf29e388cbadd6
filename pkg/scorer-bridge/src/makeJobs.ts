/**
 * Derive scoring jobs from the toolkit's tracks file.
 *
 * Per (video_id, clip_id) group, every frame with at least one entry gets
 * one narration line ("frame P: category caption action at [x1,y1,x2,y2];
 * ..."), subjects ascending. The full context is all lines in frame
 * order, the single context is the keyframe's line ("last" = final
 * position, "random" = seeded draw), and the target is the whole clip
 * narration — the text a caption model would be asked to produce. The
 * derivation is deterministic, so jobs regenerate bit-identically.
 */

import type { ScoringJob } from "./jobs.js";

interface TrackEntry {
  frame_index: number;
  bbox: number[];
  score: number;
  caption: string;
  action: string;
}

interface TrackLine {
  video_id: string;
  clip_id: string;
  subject_id: number;
  category: string;
  entries: TrackEntry[];
}

export class TracksParseError extends Error {
  readonly lineNo: number;

  constructor(lineNo: number, message: string) {
    super(`tracks line ${lineNo}: ${message}`);
    this.lineNo = lineNo;
  }
}

export type KeyframePolicy = "last" | "random";

/** Deterministic 32-bit PRNG (mulberry32) for the random keyframe policy. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function parseTracks(text: string): TrackLine[] {
  const tracks: TrackLine[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    let data: Record<string, unknown>;
    try {
      data = JSON.parse(line);
    } catch (err) {
      throw new TracksParseError(i + 1, `invalid JSON: ${(err as Error).message}`);
    }
    if (
      typeof data.video_id !== "string" ||
      typeof data.clip_id !== "string" ||
      typeof data.subject_id !== "number" ||
      typeof data.category !== "string" ||
      !Array.isArray(data.entries)
    ) {
      throw new TracksParseError(i + 1, "missing track fields");
    }
    tracks.push(data as unknown as TrackLine);
  }
  return tracks;
}

function narrationLine(position: number, tracks: TrackLine[], frameIndex: number): string {
  const parts: string[] = [];
  for (const track of [...tracks].sort((a, b) => a.subject_id - b.subject_id)) {
    const entry = track.entries.find((e) => e.frame_index === frameIndex);
    if (entry === undefined) continue;
    const words = [track.category, entry.caption, entry.action].filter((w) => w !== "");
    const box = entry.bbox.map((v) => Math.round(v)).join(",");
    parts.push(`${words.join(" ")} at [${box}]`);
  }
  return `frame ${position}: ${parts.join("; ")}`;
}

export function makeJobs(
  tracks: TrackLine[],
  keyframe: KeyframePolicy = "last",
  seed = 0,
): ScoringJob[] {
  const groups = new Map<string, TrackLine[]>();
  for (const track of tracks) {
    const key = `${track.video_id}${track.clip_id}`;
    const group = groups.get(key);
    if (group === undefined) {
      groups.set(key, [track]);
    } else {
      group.push(track);
    }
  }
  const jobs: ScoringJob[] = [];
  for (const [key, group] of groups) {
    const [videoId, clipId] = key.split("");
    const frameIndices = [...new Set(group.flatMap((t) => t.entries.map((e) => e.frame_index)))].sort(
      (a, b) => a - b,
    );
    if (frameIndices.length === 0) continue;
    const lines = frameIndices.map((fi, rank) => narrationLine(rank + 1, group, fi));
    let singlePosition: number;
    if (keyframe === "last") {
      singlePosition = frameIndices.length;
    } else {
      const rng = mulberry32(seed ^ hashString(key));
      singlePosition = 1 + Math.floor(rng() * frameIndices.length);
    }
    jobs.push({
      sampleId: `${videoId}/${clipId}`,
      target: lines.join("\n"),
      contextFull: lines.join("\n"),
      contextSingle: lines[singlePosition - 1],
      singleFrame: singlePosition,
    });
  }
  return jobs;
}

function hashString(value: string): number {
  let hash = 2166136261 >>> 0;
  for (let i = 0; i < value.length; i++) {
    hash ^= value.charCodeAt(i);
    hash = Math.imul(hash, 16777619) >>> 0;
  }
  return hash;
}
