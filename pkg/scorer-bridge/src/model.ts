/**
 * Local causal language models for caption scoring.
 *
 * The built-in model is an online byte-level n-gram mixture: hierarchical
 * Dirichlet smoothing over orders 0..N on top of a uniform byte prior,
 * with counts updated after every consumed byte (compression-style
 * adaptation). Context bytes condition the counts without being scored;
 * target bytes are scored, then consumed. The result is a proper causal
 * distribution: every conditional sums to one over the byte alphabet, and
 * per-byte NLL is strictly positive, so mean NLL is finite and >= 0.
 *
 * No downloads, no GPU, bit-for-bit deterministic — the point is a real
 * conditional-likelihood wire path, not state-of-the-art perplexity.
 */

export interface NllMeasurement {
  /** Mean negative log-likelihood per target token, natural log. */
  meanNll: number;
  /** Number of scored target tokens (bytes for the built-in model). */
  tokenCount: number;
}

export interface CausalLanguageModel {
  readonly scorerId: string;
  meanNll(context: string, target: string): NllMeasurement;
}

interface CountTable {
  total: number;
  byByte: Map<number, number>;
}

const BYTE_ALPHABET = 256;
const encoder = new TextEncoder();

export class ByteContextModel implements CausalLanguageModel {
  readonly order: number;
  readonly alpha: number;
  readonly scorerId: string;

  constructor(order = 3, alpha = 1.0) {
    if (!Number.isInteger(order) || order < 0 || order > 8) {
      throw new Error(`order must be an integer in [0, 8], got ${order}`);
    }
    if (!(alpha > 0)) {
      throw new Error(`alpha must be positive, got ${alpha}`);
    }
    this.order = order;
    this.alpha = alpha;
    this.scorerId = `ppm-bytes-o${order}-a${alpha}-v1`;
  }

  meanNll(context: string, target: string): NllMeasurement {
    return this.meanNllBytes(encoder.encode(context), encoder.encode(target));
  }

  /** Byte-level core; the string API UTF-8-encodes and delegates here. */
  meanNllBytes(contextBytes: Uint8Array, targetBytes: Uint8Array): NllMeasurement {
    if (targetBytes.length === 0) {
      throw new Error("target has zero tokens");
    }
    const tables: Array<Map<string, CountTable>> = [];
    for (let k = 0; k <= this.order; k++) {
      tables.push(new Map());
    }
    const history: number[] = [];

    const consume = (byte: number) => {
      for (let k = 0; k <= this.order; k++) {
        if (history.length < k) continue;
        const key = keyFor(history, k);
        let table = tables[k].get(key);
        if (table === undefined) {
          table = { total: 0, byByte: new Map() };
          tables[k].set(key, table);
        }
        table.total += 1;
        table.byByte.set(byte, (table.byByte.get(byte) ?? 0) + 1);
      }
      history.push(byte);
      if (history.length > this.order) history.shift();
    };

    const probability = (byte: number): number => {
      let p = 1 / BYTE_ALPHABET;
      for (let k = 0; k <= this.order; k++) {
        if (history.length < k) break;
        const table = tables[k].get(keyFor(history, k));
        const total = table?.total ?? 0;
        const count = table?.byByte.get(byte) ?? 0;
        p = (count + this.alpha * p) / (total + this.alpha);
      }
      return p;
    };

    for (const byte of contextBytes) {
      consume(byte);
    }
    let nll = 0;
    for (const byte of targetBytes) {
      nll -= Math.log(probability(byte));
      consume(byte);
    }
    return { meanNll: nll / targetBytes.length, tokenCount: targetBytes.length };
  }
}

function keyFor(history: number[], k: number): string {
  if (k === 0) return "";
  let key = "";
  for (let i = history.length - k; i < history.length; i++) {
    key += String.fromCharCode(history[i]);
  }
  return key;
}

export function loadModel(name: string, order: number, alpha: number): CausalLanguageModel {
  if (name === "ppm") {
    return new ByteContextModel(order, alpha);
  }
  throw new Error(`unknown model '${name}' (available: ppm)`);
}
